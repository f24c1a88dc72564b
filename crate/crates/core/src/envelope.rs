//! Upper envelopes of piecewise-linear graphs over an x-interval.
//!
//! Every piece lies on one of a shared table of lines `y = m x + c`, so values
//! are always recomputed from the line rather than interpolated.

#[derive(Clone, Copy, Debug)]
pub(crate) struct XLine {
    pub m: f64,
    pub c: f64,
}

impl XLine {
    #[inline]
    pub fn at(&self, x: f64) -> f64 {
        self.m * x + self.c
    }
}

/// Piece `i` covers `[xs[i], xs[i+1]]` on line `ids[i]`; `xs.len() == ids.len() + 1`.
#[derive(Clone, Debug)]
pub(crate) struct Pl {
    pub xs: Vec<f64>,
    pub ids: Vec<usize>,
}

impl Pl {
    pub fn single(x0: f64, x1: f64, id: usize) -> Self {
        Self { xs: vec![x0, x1], ids: vec![id] }
    }

    fn with_capacity(n: usize) -> Self {
        Self { xs: Vec::with_capacity(n + 1), ids: Vec::with_capacity(n) }
    }

    /// Appends a piece starting at `x`; zero-length pieces are overwritten.
    fn push(&mut self, x: f64, id: usize) {
        if let Some(&last_x) = self.xs.last() {
            if x <= last_x {
                // Replace a zero-length piece, then re-merge with its predecessor.
                self.ids.pop();
                self.xs.pop();
                if self.ids.last() == Some(&id) {
                    return;
                }
                self.xs.push(last_x.min(x));
                self.ids.push(id);
                return;
            }
        }
        if self.ids.last() == Some(&id) {
            return;
        }
        self.xs.push(x);
        self.ids.push(id);
    }

    fn finish(&mut self, x_end: f64) {
        self.xs.push(x_end);
    }

    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, usize)> + '_ {
        self.ids.iter().enumerate().map(move |(i, &id)| (self.xs[i], self.xs[i + 1], id))
    }
}

/// Pointwise maximum of two graphs on the same interval.
pub(crate) fn max_merge(f: &Pl, g: &Pl, lines: &[XLine]) -> Pl {
    let x_end = *f.xs.last().expect("nonempty");
    let mut out = Pl::with_capacity(f.ids.len() + g.ids.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut x = f.xs[0];
    while i < f.ids.len() && j < g.ids.len() {
        let end = f.xs[i + 1].min(g.xs[j + 1]);
        let (lf, lg) = (f.ids[i], g.ids[j]);
        if end > x {
            if lf == lg {
                out.push(x, lf);
            } else {
                let (a, b) = (lines[lf], lines[lg]);
                let d0 = a.at(x) - b.at(x);
                let d1 = a.at(end) - b.at(end);
                let pick = |d: f64, other: f64| if d > 0.0 || (d == 0.0 && other >= 0.0) { lf } else { lg };
                if (d0 >= 0.0 && d1 >= 0.0) || (d0 <= 0.0 && d1 <= 0.0) {
                    out.push(x, pick(d0, d1));
                } else {
                    let xc = ((b.c - a.c) / (a.m - b.m)).clamp(x, end);
                    out.push(x, if d0 > 0.0 { lf } else { lg });
                    out.push(xc, if d1 > 0.0 { lf } else { lg });
                }
            }
            x = end;
        }
        if f.xs[i + 1] <= end {
            i += 1;
        }
        if g.xs[j + 1] <= end {
            j += 1;
        }
    }
    out.finish(x_end);
    out
}

/// Upper envelope of many graphs by divide and conquer.
pub(crate) fn upper_envelope(graphs: &[Pl], lines: &[XLine]) -> Option<Pl> {
    match graphs.len() {
        0 => None,
        1 => Some(graphs[0].clone()),
        n => {
            let (l, r) = graphs.split_at(n / 2);
            let a = upper_envelope(l, lines)?;
            let b = upper_envelope(r, lines)?;
            Some(max_merge(&a, &b, lines))
        }
    }
}

/// `∫_a^b` of the graph restricted to `[a, b]`.
pub(crate) fn integrate(pl: &Pl, lines: &[XLine], a: f64, b: f64) -> f64 {
    pl.pieces()
        .map(|(x0, x1, id)| {
            let (lo, hi) = (x0.max(a), x1.min(b));
            if hi > lo {
                let l = lines[id];
                0.5 * (l.at(lo) + l.at(hi)) * (hi - lo)
            } else {
                0.0
            }
        })
        .sum()
}
