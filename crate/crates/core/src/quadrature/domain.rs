//! Integration regions: products of intervals with possibly infinite ends, and planar cones.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Upper bound on the ambient dimension; quadrature cost grows as `order^n`.
pub const MAX_DIM: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// `∏ᵢ [loᵢ, hiᵢ]`, endpoints may be ±∞.
    Box { axes: Vec<(f64, f64)> },
    /// `{(t, x) : |x| < c·t}`, or `|x| < c·|t|` when two-sided.
    Cone { c: f64, two_sided: bool },
}

impl Domain {
    pub fn new_box(axes: Vec<(f64, f64)>) -> Result<Self> {
        let d = Domain::Box { axes };
        d.validate()?;
        Ok(d)
    }

    pub fn cone(c: f64, two_sided: bool) -> Result<Self> {
        let d = Domain::Cone { c, two_sided };
        d.validate()?;
        Ok(d)
    }

    /// `ℝⁿ`.
    pub fn real_line(n: usize) -> Self {
        Domain::Box {
            axes: vec![(f64::NEG_INFINITY, f64::INFINITY); n],
        }
    }

    /// `[lo, hi]ⁿ`.
    pub fn cube(n: usize, lo: f64, hi: f64) -> Self {
        Domain::Box {
            axes: vec![(lo, hi); n],
        }
    }

    /// `ℝ × [0,1]ⁿ`.
    pub fn strip(n: usize) -> Self {
        let mut axes = vec![(f64::NEG_INFINITY, f64::INFINITY)];
        axes.extend(std::iter::repeat_n((0.0, 1.0), n));
        Domain::Box { axes }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Domain::Box { axes } => {
                if axes.is_empty() || axes.len() > MAX_DIM {
                    return Err(Error::invalid(format!(
                        "box dimension must be in 1..={MAX_DIM}, got {}",
                        axes.len()
                    )));
                }
                for (i, &(lo, hi)) in axes.iter().enumerate() {
                    if lo.is_nan() || hi.is_nan() || lo >= hi {
                        return Err(Error::invalid(format!(
                            "axis {i}: need lo < hi, got [{lo}, {hi}]"
                        )));
                    }
                    if lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                        return Err(Error::invalid(format!("axis {i}: empty interval")));
                    }
                }
                Ok(())
            }
            Domain::Cone { c, .. } => {
                if !(c.is_finite() && *c > 0.0) {
                    return Err(Error::invalid(format!("cone opening c must be > 0, got {c}")));
                }
                Ok(())
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Box { axes } => axes.len(),
            Domain::Cone { .. } => 2,
        }
    }

    /// Bounded box.
    pub fn is_finite(&self) -> bool {
        match self {
            Domain::Box { axes } => axes.iter().all(|(lo, hi)| lo.is_finite() && hi.is_finite()),
            Domain::Cone { .. } => false,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Domain::Box { axes } => {
                x.len() == axes.len()
                    && axes.iter().zip(x).all(|(&(lo, hi), &v)| lo <= v && v <= hi)
            }
            Domain::Cone { c, two_sided } => {
                let t = if *two_sided { x[0].abs() } else { x[0] };
                x.len() == 2 && x[1].abs() < c * t
            }
        }
    }
}

fn endpoint_to_json(v: f64) -> serde_json::Value {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        v.into()
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Endpoint {
    Num(f64),
    Str(String),
}

impl Endpoint {
    fn value(self) -> std::result::Result<f64, String> {
        match self {
            Endpoint::Num(v) => Ok(v),
            Endpoint::Str(s) => match s.as_str() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                _ => Err(format!("bad endpoint `{s}`, expected a number, \"inf\" or \"-inf\"")),
            },
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConeRepr {
    c: f64,
    #[serde(default)]
    two_sided: bool,
}

#[derive(Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
enum DomainRepr {
    Box(Vec<(Endpoint, Endpoint)>),
    Cone(ConeRepr),
}

impl Serialize for Domain {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v = match self {
            Domain::Box { axes } => {
                let axes: Vec<_> = axes
                    .iter()
                    .map(|&(lo, hi)| serde_json::json!([endpoint_to_json(lo), endpoint_to_json(hi)]))
                    .collect();
                serde_json::json!({ "box": axes })
            }
            Domain::Cone { c, two_sided } => {
                serde_json::json!({ "cone": { "c": c, "two_sided": two_sided } })
            }
        };
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Domain {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let dom = match DomainRepr::deserialize(d)? {
            DomainRepr::Box(axes) => {
                let axes = axes
                    .into_iter()
                    .map(|(lo, hi)| Ok((lo.value()?, hi.value()?)))
                    .collect::<std::result::Result<Vec<_>, String>>()
                    .map_err(D::Error::custom)?;
                Domain::Box { axes }
            }
            DomainRepr::Cone(ConeRepr { c, two_sided }) => Domain::Cone { c, two_sided },
        };
        dom.validate().map_err(D::Error::custom)?;
        Ok(dom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_forms() {
        let d: Domain = serde_json::from_str(r#"{"box":[["-inf","inf"],[0,1]]}"#).unwrap();
        assert_eq!(d, Domain::strip(1));
        let back = serde_json::to_string(&d).unwrap();
        assert_eq!(back, r#"{"box":[["-inf","inf"],[0.0,1.0]]}"#);
        let c: Domain = serde_json::from_str(r#"{"cone":{"c":1.0,"two_sided":true}}"#).unwrap();
        assert_eq!(c, Domain::Cone { c: 1.0, two_sided: true });
        assert_eq!(serde_json::from_str::<Domain>(&serde_json::to_string(&c).unwrap()).unwrap(), c);
    }

    #[test]
    fn invalid_domains() {
        assert!(Domain::new_box(vec![(1.0, 1.0)]).is_err());
        assert!(Domain::new_box(vec![]).is_err());
        assert!(Domain::new_box(vec![(0.0, 1.0); 5]).is_err());
        assert!(Domain::cone(0.0, false).is_err());
        assert!(serde_json::from_str::<Domain>(r#"{"box":[["x",1]]}"#).is_err());
        assert!(serde_json::from_str::<Domain>(r#"{"cone":{"c":1,"sides":2}}"#).is_err());
        assert!(serde_json::from_str::<Domain>(r#"{"box":[[2,1]]}"#).is_err());
    }

    #[test]
    fn membership() {
        let c = Domain::cone(1.0, false).unwrap();
        assert!(c.contains(&[2.0, 1.0]));
        assert!(!c.contains(&[-2.0, 1.0]));
        let c2 = Domain::cone(1.0, true).unwrap();
        assert!(c2.contains(&[-2.0, 1.0]));
        assert!(Domain::strip(2).contains(&[-100.0, 0.5, 1.0]));
    }
}
