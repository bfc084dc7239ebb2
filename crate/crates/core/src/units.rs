//! Unit conversion at the configuration boundary.
//!
//! Config and scenario files may give speeds in km/h and angles in degrees
//! by suffixing the key (`target_speed_kmh`, `heading_deg`). Everything is
//! rewritten to SI before typed deserialization.

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};
use thiserror::Error;

pub const KMH_PER_MPS: f64 = 3.6;

#[derive(Debug, Error)]
pub enum UnitsError {
    #[error("key `{base}` given both in SI and as `{suffixed}`")]
    Duplicate { base: String, suffixed: String },
    #[error("`{0}` must be a number")]
    NotANumber(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub fn kmh_to_mps(v: f64) -> f64 {
    v / KMH_PER_MPS
}

pub fn mps_to_kmh(v: f64) -> f64 {
    v * KMH_PER_MPS
}

/// Recursively rewrites `*_kmh` and `*_deg` keys into SI values.
pub fn normalize(value: Value) -> Result<Value, UnitsError> {
    match value {
        Value::Object(map) => {
            let mut out = Map::with_capacity(map.len());
            for (key, v) in map {
                let v = normalize(v)?;
                let converted = if let Some(base) = key.strip_suffix("_kmh") {
                    Some((base.to_string(), convert(&key, v.clone(), kmh_to_mps)?))
                } else if let Some(base) = key.strip_suffix("_deg") {
                    Some((base.to_string(), convert(&key, v.clone(), f64::to_radians)?))
                } else {
                    None
                };
                match converted {
                    Some((base, si)) => {
                        if out.contains_key(&base) {
                            return Err(UnitsError::Duplicate {
                                base,
                                suffixed: key,
                            });
                        }
                        out.insert(base, si);
                    }
                    None => {
                        if out.contains_key(&key) {
                            return Err(UnitsError::Duplicate {
                                base: key.clone(),
                                suffixed: key,
                            });
                        }
                        out.insert(key, v);
                    }
                }
            }
            Ok(Value::Object(out))
        }
        Value::Array(items) => Ok(Value::Array(
            items.into_iter().map(normalize).collect::<Result<_, _>>()?,
        )),
        other => Ok(other),
    }
}

fn convert(key: &str, v: Value, f: fn(f64) -> f64) -> Result<Value, UnitsError> {
    match v {
        Value::Number(n) => {
            let x = n
                .as_f64()
                .ok_or_else(|| UnitsError::NotANumber(key.to_string()))?;
            Ok(Value::from(f(x)))
        }
        Value::Array(items) => Ok(Value::Array(
            items
                .into_iter()
                .map(|i| convert(key, i, f))
                .collect::<Result<_, _>>()?,
        )),
        _ => Err(UnitsError::NotANumber(key.to_string())),
    }
}

/// Parses JSON text with unit normalization into `T`.
pub fn from_json_str<T: DeserializeOwned>(text: &str) -> Result<T, UnitsError> {
    let raw: Value = serde_json::from_str(text)?;
    Ok(serde_json::from_value(normalize(raw)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn converts_suffixed_keys() {
        let v = normalize(
            json!({"target_speed_kmh": 4.5, "nested": {"sweep_deg": [180.0, 90.0]}, "x": 1}),
        )
        .unwrap();
        assert!((v["target_speed"].as_f64().unwrap() - 1.25).abs() < 1e-12);
        let sweep = v["nested"]["sweep"].as_array().unwrap();
        assert!((sweep[0].as_f64().unwrap() - std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(v["x"], json!(1));
    }

    #[test]
    fn rejects_duplicates() {
        assert!(matches!(
            normalize(json!({"speed": 1.0, "speed_kmh": 3.6})),
            Err(UnitsError::Duplicate { .. })
        ));
    }
}
