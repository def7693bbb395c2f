use std::collections::BTreeMap;

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::learner::{LearnerId, LearnerSpec};
use crate::seed;

pub const DEFAULT_SPACE_VERSION: &str = "v1";
const DEFAULT_SPACES: &str = include_str!("../../data/search_space.v1.json");

/// A parameter assignment keyed by dotted path into the learner's
/// parameter object, e.g. `growth.max_depth`.
pub type ParamPoint = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Domain {
    Float {
        low: f64,
        high: f64,
        #[serde(default)]
        log: bool,
    },
    Int {
        low: i64,
        high: i64,
        #[serde(default)]
        log: bool,
    },
    Choice {
        choices: Vec<Value>,
    },
    Fixed {
        value: Value,
    },
}

impl Domain {
    pub fn validate(&self, name: &str) -> Result<()> {
        let bad = |why: &str| Err(Error::InvalidParam(format!("domain `{name}`: {why}")));
        match *self {
            Domain::Float { low, high, log } => {
                if !(low.is_finite() && high.is_finite() && low <= high) {
                    return bad("need finite low <= high");
                }
                if log && low <= 0.0 {
                    return bad("log scale needs low > 0");
                }
            }
            Domain::Int { low, high, log } => {
                if low > high {
                    return bad("need low <= high");
                }
                if log && low < 1 {
                    return bad("log scale needs low >= 1");
                }
            }
            Domain::Choice { ref choices } => {
                if choices.is_empty() {
                    return bad("no choices");
                }
            }
            Domain::Fixed { .. } => {}
        }
        Ok(())
    }

    /// Continuous coordinate in [0, 1] for numeric domains.
    pub(crate) fn to_unit(&self, v: &Value) -> Option<f64> {
        let x = v.as_f64()?;
        let (lo, hi, log) = self.unit_range()?;
        let t = |z: f64| if log { z.ln() } else { z };
        let span = t(hi) - t(lo);
        Some(if span > 0.0 {
            ((t(x) - t(lo)) / span).clamp(0.0, 1.0)
        } else {
            0.5
        })
    }

    pub(crate) fn from_unit(&self, u: f64) -> Value {
        let u = u.clamp(0.0, 1.0);
        match *self {
            Domain::Float { low, high, log } => {
                let x = if log {
                    (low.ln() + u * (high.ln() - low.ln())).exp()
                } else {
                    low + u * (high - low)
                };
                Value::from(x.clamp(low, high))
            }
            Domain::Int { low, high, .. } => {
                let (lo, hi, log) = self.unit_range().expect("numeric");
                let x = if log {
                    (lo.ln() + u * (hi.ln() - lo.ln())).exp()
                } else {
                    lo + u * (hi - lo)
                };
                Value::from((x.round() as i64).clamp(low, high))
            }
            Domain::Choice { ref choices } => {
                let i = ((u * choices.len() as f64) as usize).min(choices.len() - 1);
                choices[i].clone()
            }
            Domain::Fixed { ref value } => value.clone(),
        }
    }

    /// Integers map through [low−½, high+½] so each value gets equal mass.
    fn unit_range(&self) -> Option<(f64, f64, bool)> {
        match *self {
            Domain::Float { low, high, log } => Some((low, high, log)),
            Domain::Int { low, high, log } => Some((low as f64 - 0.5, high as f64 + 0.5, log)),
            _ => None,
        }
    }

    pub fn contains(&self, v: &Value) -> bool {
        match self {
            Domain::Float { low, high, .. } => v.as_f64().is_some_and(|x| x >= *low && x <= *high),
            Domain::Int { low, high, .. } => v.as_i64().is_some_and(|x| x >= *low && x <= *high),
            Domain::Choice { choices } => choices.contains(v),
            Domain::Fixed { value } => value == v,
        }
    }

    pub(crate) fn sample(&self, rng: &mut seed::Rng) -> Value {
        match self {
            Domain::Choice { choices } => choices[rng.gen_range(0..choices.len())].clone(),
            Domain::Fixed { value } => value.clone(),
            _ => self.from_unit(rng.gen::<f64>()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HyperparamSpace {
    pub params: BTreeMap<String, Domain>,
}

impl HyperparamSpace {
    pub fn validate(&self) -> Result<()> {
        self.params.iter().try_for_each(|(k, d)| d.validate(k))
    }

    pub fn sample(&self, rng: &mut seed::Rng) -> ParamPoint {
        self.params
            .iter()
            .map(|(k, d)| (k.clone(), d.sample(rng)))
            .collect()
    }

    pub fn contains(&self, point: &ParamPoint) -> bool {
        point.len() == self.params.len()
            && self
                .params
                .iter()
                .all(|(k, d)| point.get(k).is_some_and(|v| d.contains(v)))
    }

    /// Every key of this space pinned to its current value in `spec`.
    pub fn pinned_to(&self, spec: &LearnerSpec) -> Result<HyperparamSpace> {
        let v = serde_json::to_value(spec)?;
        let params = self
            .params
            .keys()
            .map(|k| {
                Ok((
                    k.clone(),
                    Domain::Fixed {
                        value: lookup(&v["params"], k)?.clone(),
                    },
                ))
            })
            .collect::<Result<_>>()?;
        Ok(HyperparamSpace { params })
    }
}

fn lookup<'a>(root: &'a Value, path: &str) -> Result<&'a Value> {
    path.split('.')
        .try_fold(root, |v, key| v.get(key))
        .ok_or_else(|| Error::InvalidParam(format!("unknown parameter `{path}`")))
}

/// The learner spec with every parameter of `point` substituted.
pub fn apply_point(spec: &LearnerSpec, point: &ParamPoint) -> Result<LearnerSpec> {
    let mut v = serde_json::to_value(spec)?;
    for (path, value) in point {
        let mut cur = v
            .get_mut("params")
            .ok_or_else(|| Error::InvalidParam("learner has no parameters".into()))?;
        let keys: Vec<&str> = path.split('.').collect();
        for key in &keys[..keys.len() - 1] {
            cur = cur
                .get_mut(*key)
                .ok_or_else(|| Error::InvalidParam(format!("unknown parameter `{path}`")))?;
        }
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| Error::InvalidParam(format!("unknown parameter `{path}`")))?;
        let last = keys[keys.len() - 1];
        if !obj.contains_key(last) {
            return Err(Error::InvalidParam(format!("unknown parameter `{path}`")));
        }
        obj.insert(last.to_string(), value.clone());
    }
    let out: LearnerSpec = serde_json::from_value(v)
        .map_err(|e| Error::InvalidParam(format!("parameter point does not fit learner: {e}")))?;
    out.validate()?;
    Ok(out)
}

/// The bundled default space of each learner.
pub fn default_spaces() -> BTreeMap<LearnerId, HyperparamSpace> {
    serde_json::from_str(DEFAULT_SPACES).expect("bundled search space is valid JSON")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boost::BoostParams;
    use crate::tree::GrowthPolicy;

    #[test]
    fn defaults_valid_and_contain_table_values() {
        let spaces = default_spaces();
        assert_eq!(spaces.len(), 4);
        for (id, space) in &spaces {
            space.validate().unwrap();
            let pinned = space.pinned_to(&id.default_spec()).unwrap();
            for (k, d) in &pinned.params {
                let Domain::Fixed { value } = d else { panic!() };
                assert!(space.params[k].contains(value), "{id} {k} = {value}");
            }
            let mut rng = seed::stream(1, "t");
            for _ in 0..50 {
                let p = space.sample(&mut rng);
                assert!(space.contains(&p));
                apply_point(&id.default_spec(), &p).unwrap();
            }
        }
    }

    #[test]
    fn apply_sets_nested_fields() {
        let mut point = ParamPoint::new();
        point.insert("growth.max_depth".into(), Value::from(5));
        point.insert("learning_rate".into(), Value::from(0.1));
        let LearnerSpec::Boost(p) =
            apply_point(&LearnerSpec::Boost(BoostParams::xgb()), &point).unwrap()
        else {
            panic!()
        };
        assert_eq!(p.growth, GrowthPolicy::DepthWise { max_depth: 5 });
        assert_eq!(p.learning_rate, 0.1);
        point.insert("nope".into(), Value::from(1));
        assert!(apply_point(&LearnerSpec::Boost(BoostParams::xgb()), &point).is_err());
    }

    #[test]
    fn unit_round_trip() {
        let d = Domain::Int {
            low: 3,
            high: 10,
            log: true,
        };
        for x in 3..=10 {
            let u = d.to_unit(&Value::from(x)).unwrap();
            assert_eq!(d.from_unit(u), Value::from(x));
        }
        let f = Domain::Float {
            low: 0.01,
            high: 1.0,
            log: true,
        };
        let u = f.to_unit(&Value::from(0.1)).unwrap();
        assert!((u - 0.5).abs() < 1e-12);
    }
}
