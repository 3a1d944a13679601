//! Point configurations as JSON.
//!
//! A configuration is a JSON array. Elements are numbers (points of the unit
//! interval), arrays of 2 or 3 numbers (points of the cube), `{"index": k}`
//! for discrete atoms, or `{"mark": m, "trial": k}` for lifted points, where
//! `m` is itself a number or a coordinate array. All elements must share one
//! carrier. An empty array is the empty configuration on the interval.

use std::path::Path;

use serde_json::{json, Value};

use crate::carrier::{Carrier, CarrierPoint, PointConfig};
use crate::error::{invalid, Result};

fn point_from_json(v: &Value) -> Result<(CarrierPoint, Carrier)> {
    match v {
        Value::Number(x) => {
            let x = x.as_f64().expect("JSON numbers are finite");
            Ok((CarrierPoint::Real(x), Carrier::Interval))
        }
        Value::Array(xs) => {
            let coords = xs
                .iter()
                .map(|x| x.as_f64().ok_or_else(|| crate::Error::InvalidInput(format!("non-numeric coordinate {x}"))))
                .collect::<Result<Vec<f64>>>()?;
            let p = CarrierPoint::from_coords(&coords)?;
            Ok((p, Carrier::unit(coords.len())?))
        }
        Value::Object(map) => {
            if let Some(k) = map.get("index") {
                if map.len() != 1 {
                    return invalid(format!("unexpected keys in discrete point {v}"));
                }
                let k = k.as_u64().filter(|&k| k >= 1 && k <= u32::MAX as u64);
                return match k {
                    Some(k) => Ok((CarrierPoint::Index(k as u32), Carrier::Discrete)),
                    None => invalid(format!("discrete index must be a positive integer in {v}")),
                };
            }
            let (Some(mark), Some(trial)) = (map.get("mark"), map.get("trial")) else {
                return invalid(format!("expected {{\"mark\", \"trial\"}} or {{\"index\"}}, found {v}"));
            };
            if map.len() != 2 {
                return invalid(format!("unexpected keys in lifted point {v}"));
            }
            let Some(trial) = trial.as_u64().filter(|&t| t <= u32::MAX as u64) else {
                return invalid(format!("trial must be a positive integer in {v}"));
            };
            let (m, mc) = point_from_json(mark)?;
            Ok((CarrierPoint::lifted(m, trial as u32)?, Carrier::lifted(mc)?))
        }
        other => invalid(format!("cannot read a point from {other}")),
    }
}

/// Reads a configuration from a parsed JSON array.
pub fn config_from_json(v: &Value) -> Result<PointConfig> {
    let Value::Array(items) = v else {
        return invalid("a configuration must be a JSON array");
    };
    let mut carrier = None;
    let mut points = Vec::with_capacity(items.len());
    for item in items {
        let (p, c) = point_from_json(item)?;
        match &carrier {
            None => carrier = Some(c),
            Some(prev) if *prev != c => return invalid(format!("mixed carriers {prev:?} and {c:?}")),
            _ => {}
        }
        points.push(p);
    }
    PointConfig::new(carrier.unwrap_or(Carrier::Interval), points)
}

fn point_to_json(p: &CarrierPoint) -> Value {
    match p {
        CarrierPoint::Index(k) => json!({ "index": k }),
        CarrierPoint::Real(x) => json!(x),
        CarrierPoint::Vector { .. } => json!(p.coords()),
        CarrierPoint::Lifted { mark, trial } => json!({ "mark": point_to_json(mark), "trial": trial }),
    }
}

pub fn config_to_json(xi: &PointConfig) -> Value {
    Value::Array(xi.points().iter().map(point_to_json).collect())
}

/// Reads one configuration from a file.
pub fn read_config(path: impl AsRef<Path>) -> Result<PointConfig> {
    config_from_json(&serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Reads a sample: a JSON array of configurations.
pub fn read_sample(path: impl AsRef<Path>) -> Result<Vec<PointConfig>> {
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let Value::Array(items) = v else {
        return invalid("a sample must be a JSON array of configurations");
    };
    items.iter().map(config_from_json).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for text in ["[0.2, 0.8]", "[[0.1, 0.2], [0.3, 0.4]]", "[{\"index\": 3}]", "[{\"mark\": 0.5, \"trial\": 2}]", "[]"] {
            let v: Value = serde_json::from_str(text).unwrap();
            let xi = config_from_json(&v).unwrap();
            assert_eq!(config_to_json(&xi), v, "{text}");
        }
        let xi = config_from_json(&json!([[0.1, 0.2, 0.3]])).unwrap();
        assert_eq!(xi.carrier(), &Carrier::Cube { dim: 3 });
    }

    #[test]
    fn rejects_malformed() {
        for text in ["{}", "[0.2, [0.1, 0.2]]", "[1.5]", "[{\"index\": 0}]", "[{\"mark\": 0.5}]", "[\"a\"]", "[[0.1, 0.2, 0.3, 0.4]]"] {
            let v: Value = serde_json::from_str(text).unwrap();
            assert!(config_from_json(&v).is_err(), "{text}");
        }
    }
}
