//! Cap JSON: `{"omega": ω, "thetas": [...], "heights": {"<angle>": h, ...}}`.
//!
//! Heights are keyed by the angles of `Θ⋄` written as decimal radians. Numbers
//! are written in shortest round-trip form, so a save followed by a load
//! reproduces every height bit for bit.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Deserialize;
use serde_json::{Map, Number, Value};

use crate::error::IoError;
use crate::hallway::{AngleSet, HeightFn};

/// Keys within this distance of a `Θ⋄` angle are matched to it.
pub const KEY_TOL: f64 = 1e-12;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CapFile {
    omega: f64,
    thetas: Vec<f64>,
    heights: BTreeMap<String, f64>,
}

fn number(x: f64, field: &str) -> Result<Value, IoError> {
    Number::from_f64(x).map(Value::Number).ok_or_else(|| IoError::Field { field: field.into(), msg: format!("non-finite value {x}") })
}

/// Cap JSON value for `(Θ, h)`.
pub fn cap_to_value(theta: &AngleSet, h: &HeightFn) -> Result<Value, IoError> {
    let diamond = theta.diamond();
    if h.values.len() != diamond.len() {
        return Err(IoError::Field {
            field: "heights".into(),
            msg: format!("{} values for {} angles", h.values.len(), diamond.len()),
        });
    }
    let mut heights = Map::new();
    for (t, &x) in diamond.iter().zip(&h.values) {
        heights.insert(format!("{t}"), number(x, "heights")?);
    }
    let mut root = Map::new();
    root.insert("omega".into(), number(theta.omega, "omega")?);
    let thetas = theta.thetas.iter().map(|&t| number(t, "thetas")).collect::<Result<Vec<_>, _>>()?;
    root.insert("thetas".into(), Value::Array(thetas));
    root.insert("heights".into(), Value::Object(heights));
    Ok(Value::Object(root))
}

pub fn cap_to_string(theta: &AngleSet, h: &HeightFn) -> Result<String, IoError> {
    Ok(serde_json::to_string(&cap_to_value(theta, h)?).expect("finite JSON values serialize"))
}

/// Parses cap JSON; every height of `Θ⋄` must be present exactly once.
pub fn cap_from_str(s: &str) -> Result<(AngleSet, HeightFn), IoError> {
    let file: CapFile =
        serde_json::from_str(s).map_err(|e| IoError::Parse { line: e.line(), column: e.column(), msg: e.to_string() })?;
    let theta = AngleSet::new(file.omega, file.thetas).map_err(|e| IoError::Field { field: "thetas".into(), msg: e.to_string() })?;
    let diamond = theta.diamond();
    let mut values = vec![None; diamond.len()];
    for (key, x) in &file.heights {
        let field = format!("heights.{key}");
        let t: f64 = key.trim().parse().map_err(|_| IoError::Field { field: field.clone(), msg: "key is not a decimal angle".into() })?;
        if !x.is_finite() {
            return Err(IoError::Field { field, msg: format!("non-finite value {x}") });
        }
        let i = diamond
            .iter()
            .position(|&d| (d - t).abs() <= KEY_TOL)
            .ok_or_else(|| IoError::Field { field: field.clone(), msg: "angle is not in the angle set".into() })?;
        if values[i].replace(*x).is_some() {
            return Err(IoError::Field { field, msg: "duplicate angle".into() });
        }
    }
    let values = values
        .into_iter()
        .zip(&diamond)
        .map(|(v, t)| v.ok_or_else(|| IoError::Field { field: format!("heights.{t}"), msg: "missing height".into() }))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((theta, HeightFn { values }))
}

pub fn save_cap(path: impl AsRef<Path>, theta: &AngleSet, h: &HeightFn) -> Result<(), IoError> {
    let mut s = cap_to_string(theta, h)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

pub fn load_cap(path: impl AsRef<Path>) -> Result<(AngleSet, HeightFn), IoError> {
    cap_from_str(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_heights(theta: &AngleSet, seed: u64) -> HeightFn {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        HeightFn { values: (0..theta.len_diamond()).map(|_| rng.gen_range(0.5..1.5) / 3.0).collect() }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        for (n, w) in [(64, std::f64::consts::FRAC_PI_2), (16, 1.2)] {
            let th = AngleSet::uniform(n, w).unwrap();
            let h = random_heights(&th, n as u64);
            let (th2, h2) = cap_from_str(&cap_to_string(&th, &h).unwrap()).unwrap();
            assert_eq!(th2, th);
            assert!(h.values.iter().zip(&h2.values).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }

    #[test]
    fn file_round_trip() {
        let th = AngleSet::right_angle(8).unwrap();
        let h = random_heights(&th, 3);
        let path = std::env::temp_dir().join(format!("sofa-io-{}.json", std::process::id()));
        save_cap(&path, &th, &h).unwrap();
        let (_, h2) = load_cap(&path).unwrap();
        fs::remove_file(&path).unwrap();
        assert_eq!(h, h2);
    }

    #[test]
    fn missing_omega_is_a_parse_error() {
        let err = cap_from_str("{\"thetas\": [0.5],\n \"heights\": {}}").unwrap_err();
        assert!(matches!(err, IoError::Parse { line: 2, .. }), "{err}");
        assert!(err.to_string().contains("omega"));
    }

    #[test]
    fn non_finite_heights_are_parse_errors() {
        let th = AngleSet::right_angle(2).unwrap();
        let good = cap_to_string(&th, &HeightFn::constant(&th, 1.0)).unwrap();
        for bad in ["1e999", "\"NaN\"", "null"] {
            let s = good.replacen(":1.0", &format!(":{bad}"), 1);
            assert!(matches!(cap_from_str(&s), Err(IoError::Parse { .. })), "{s}");
        }
        assert!(cap_to_string(&th, &HeightFn { values: vec![f64::NAN; th.len_diamond()] }).is_err());
    }

    #[test]
    fn key_errors() {
        let th = AngleSet::right_angle(2).unwrap();
        let good = cap_to_string(&th, &HeightFn::constant(&th, 1.0)).unwrap();
        let missing = good.replacen("\"0.7853981633974483\":1.0,", "", 1);
        assert!(matches!(cap_from_str(&missing), Err(IoError::Field { .. })), "{missing}");
        let stray = good.replacen("\"0.7853981633974483\"", "\"0.7\"", 1);
        assert!(matches!(cap_from_str(&stray), Err(IoError::Field { .. })));
        assert!(matches!(cap_from_str("{\"omega\": 1.5,"), Err(IoError::Parse { .. })));
    }
}
