//! Finitely represented systems: exact subshifts and finite nets.

pub mod net;
pub mod symbolic;

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

pub use net::{circle_distance, DistanceSpec, MetricReport, NetSystem};
pub use symbolic::{symbolic_distance, SymbolicPoint, SymbolicSystem};

#[derive(Clone, Debug)]
pub enum System {
    Symbolic(SymbolicSystem),
    Net(NetSystem),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SystemPoint {
    Net(usize),
    Symbolic(SymbolicPoint),
}

impl fmt::Display for SystemPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SystemPoint::Net(i) => write!(f, "#{i}"),
            SystemPoint::Symbolic(p) => write!(f, "{p}"),
        }
    }
}

impl SystemPoint {
    pub fn as_net(&self) -> Option<usize> {
        match self {
            SystemPoint::Net(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_symbolic(&self) -> Option<&SymbolicPoint> {
        match self {
            SystemPoint::Symbolic(p) => Some(p),
            _ => None,
        }
    }
}

impl From<usize> for SystemPoint {
    fn from(i: usize) -> Self {
        SystemPoint::Net(i)
    }
}

impl From<SymbolicPoint> for SystemPoint {
    fn from(p: SymbolicPoint) -> Self {
        SystemPoint::Symbolic(p)
    }
}

impl System {
    pub fn kind(&self) -> &'static str {
        match self {
            System::Symbolic(_) => "symbolic",
            System::Net(_) => "net",
        }
    }

    pub fn as_net(&self) -> Option<&NetSystem> {
        match self {
            System::Net(n) => Some(n),
            _ => None,
        }
    }

    pub fn as_symbolic(&self) -> Option<&SymbolicSystem> {
        match self {
            System::Symbolic(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_invertible(&self) -> bool {
        match self {
            System::Symbolic(_) => true,
            System::Net(n) => n.is_invertible(),
        }
    }

    /// Checks that `p` is a point of this system.
    pub fn check_point(&self, p: &SystemPoint) -> Result<()> {
        match (self, p) {
            (System::Net(n), SystemPoint::Net(i)) if *i < n.len() => Ok(()),
            (System::Net(n), SystemPoint::Net(i)) => {
                Err(Error::ForeignPoint(format!("index {i} outside a net of {} points", n.len())))
            }
            (System::Symbolic(s), SystemPoint::Symbolic(q)) => {
                if q.alphabet_size() != s.alphabet_size() {
                    return Err(Error::AlphabetMismatch(q.alphabet_size(), s.alphabet_size()));
                }
                if !s.is_admissible(q) {
                    return Err(Error::ForeignPoint(format!("{q} is not admissible")));
                }
                Ok(())
            }
            _ => Err(Error::ForeignPoint(format!("{p} has the wrong kind for a {} system", self.kind()))),
        }
    }

    /// Exact `k`-fold iterate.
    pub fn apply(&self, p: &SystemPoint, k: i64) -> Result<SystemPoint> {
        match (self, p) {
            (System::Net(n), SystemPoint::Net(i)) if *i < n.len() => Ok(SystemPoint::Net(n.apply(*i, k)?)),
            (System::Symbolic(_), SystemPoint::Symbolic(q)) => Ok(SystemPoint::Symbolic(q.shift(k))),
            _ => {
                self.check_point(p)?;
                unreachable!()
            }
        }
    }

    pub fn image(&self, p: &SystemPoint) -> Result<SystemPoint> {
        self.apply(p, 1)
    }

    pub fn distance(&self, a: &SystemPoint, b: &SystemPoint) -> Result<Rational> {
        match (self, a, b) {
            (System::Net(n), SystemPoint::Net(i), SystemPoint::Net(j)) if *i < n.len() && *j < n.len() => {
                Ok(n.distance(*i, *j))
            }
            (System::Symbolic(_), SystemPoint::Symbolic(x), SystemPoint::Symbolic(y)) => x.distance(y),
            _ => {
                self.check_point(a)?;
                self.check_point(b)?;
                unreachable!()
            }
        }
    }

    /// `d(f^i a, f^j b)` without materializing the iterates (symbolic case).
    pub fn distance_shifted(&self, a: &SystemPoint, i: i64, b: &SystemPoint, j: i64) -> Result<Rational> {
        match (a, b) {
            (SystemPoint::Symbolic(x), SystemPoint::Symbolic(y)) => {
                if x.alphabet_size() != y.alphabet_size() {
                    return Err(Error::AlphabetMismatch(x.alphabet_size(), y.alphabet_size()));
                }
                Ok(match SymbolicPoint::first_disagreement_shifted(x, i, y, j) {
                    None => rational::int(0),
                    Some(r) => rational::pow2_neg(r as u32),
                })
            }
            _ => self.distance(&self.apply(a, i)?, &self.apply(b, j)?),
        }
    }

    pub fn spec(&self) -> SystemSpec {
        match self {
            System::Symbolic(s) => SystemSpec::Symbolic {
                alphabet_size: s.alphabet_size(),
                transitions: s
                    .transitions()
                    .iter()
                    .map(|r| r.iter().map(|&b| b as u8).collect())
                    .collect(),
            },
            System::Net(n) => SystemSpec::Net {
                map: n.map().to_vec(),
                invertible: n.is_invertible(),
                resolution: n.resolution().clone(),
                distance: n.spec().clone(),
                labels: n.labels().to_vec(),
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.spec()).expect("system spec serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: SystemSpec = serde_json::from_str(s).map_err(|e| Error::Schema(e.to_string()))?;
        spec.build()
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// SHA-256 of the canonical compact JSON form.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_string(&self.spec()).expect("system spec serializes");
        hex::encode(Sha256::digest(canon.as_bytes()))
    }

    /// Mesh at which claims about this system are stamped; symbolic systems
    /// have no mesh and report zero.
    pub fn resolution(&self) -> Rational {
        match self {
            System::Net(n) => n.resolution().clone(),
            System::Symbolic(_) => rational::int(0),
        }
    }
}

impl From<NetSystem> for System {
    fn from(n: NetSystem) -> Self {
        System::Net(n)
    }
}

impl From<SymbolicSystem> for System {
    fn from(s: SymbolicSystem) -> Self {
        System::Symbolic(s)
    }
}

/// JSON document describing a system.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    Symbolic {
        alphabet_size: u8,
        transitions: Vec<Vec<u8>>,
    },
    Net {
        map: Vec<usize>,
        invertible: bool,
        #[serde(with = "rational::serde_rat")]
        resolution: Rational,
        distance: DistanceSpec,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        labels: Vec<String>,
    },
}

impl SystemSpec {
    pub fn build(self) -> Result<System> {
        match self {
            SystemSpec::Symbolic { alphabet_size, transitions } => {
                if transitions.len() != alphabet_size as usize {
                    return Err(Error::InvalidSystem(format!(
                        "transition matrix has {} rows for alphabet {alphabet_size}",
                        transitions.len()
                    )));
                }
                let t = transitions
                    .into_iter()
                    .map(|r| {
                        r.into_iter()
                            .map(|b| match b {
                                0 => Ok(false),
                                1 => Ok(true),
                                _ => Err(Error::InvalidSystem(format!("transition entry {b} is not 0/1"))),
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(System::Symbolic(SymbolicSystem::new(t)?))
            }
            SystemSpec::Net { map, invertible, resolution, distance, labels } => {
                Ok(System::Net(NetSystem::new(distance, map, invertible, resolution, labels)?))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn full_shift_shift_moves_origin() {
        let sys = System::Symbolic(SymbolicSystem::full_shift(2).unwrap());
        let p: SystemPoint = SymbolicPoint::periodic(2, &[0, 1]).unwrap().into();
        let q = sys.apply(&p, 1).unwrap();
        assert_eq!(q.as_symbolic().unwrap().coord(0), 1);
        let z: SystemPoint = SymbolicPoint::constant(2, 0).unwrap().into();
        assert_eq!(sys.apply(&z, 17).unwrap(), z);
    }

    #[test]
    fn json_roundtrip_is_stable() {
        let angles = (0..6).map(|i| rat(i, 6)).collect();
        let n = NetSystem::new(DistanceSpec::Circle { angles }, vec![1, 2, 3, 4, 5, 0], true, rat(1, 6), vec![])
            .unwrap();
        let sys = System::Net(n);
        let back = System::from_json(&sys.to_json()).unwrap();
        assert_eq!(back.hash(), sys.hash());
        assert_eq!(back.to_json(), sys.to_json());
    }

    #[test]
    fn unknown_keys_rejected() {
        let doc = r#"{"kind":"symbolic","alphabet_size":2,"transitions":[[1,1],[1,1]],"extra":1}"#;
        assert!(matches!(System::from_json(doc), Err(Error::Schema(_))));
    }

    #[test]
    fn wrong_kind_point_rejected() {
        let sys = System::Symbolic(SymbolicSystem::golden_mean());
        assert!(sys.apply(&SystemPoint::Net(0), 1).is_err());
    }
}
