//! Finite ε-nets carrying an exact rational metric and a sampled self-map.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// How the distance table was specified; kept so a system serializes back to
/// the document it was read from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistanceSpec {
    /// Points on the circle `R/Z` at the given angles; arc-length distance.
    Circle {
        #[serde(with = "rational::serde_rat_vec")]
        angles: Vec<Rational>,
    },
    /// Explicit table of rationals.
    Table {
        #[serde(with = "table_serde")]
        entries: Vec<Vec<Rational>>,
    },
    /// Integer numerators over one common denominator.
    Scaled { denominator: u64, numerators: Vec<Vec<u64>> },
}

mod table_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &[Vec<Rational>], s: S) -> std::result::Result<S::Ok, S::Error> {
        t.iter()
            .map(|r| r.iter().map(rational::fmt).collect::<Vec<_>>())
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Vec<Rational>>, D::Error> {
        Vec::<Vec<String>>::deserialize(d)?
            .iter()
            .map(|r| r.iter().map(|x| rational::parse(x).map_err(serde::de::Error::custom)).collect())
            .collect()
    }
}

impl DistanceSpec {
    /// Integer form of a rational table over its least common denominator.
    pub fn scaled_from(entries: Vec<Vec<Rational>>) -> Result<DistanceSpec> {
        let n = entries.len();
        if entries.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidSystem("distance table is not square".into()));
        }
        let (denominator, flat, _) = scale_rationals(n, entries.into_iter().flatten().collect())?;
        let numerators = flat.chunks(n.max(1)).map(|c| c.to_vec()).collect();
        Ok(DistanceSpec::Scaled { denominator, numerators })
    }
}

/// Arc-length distance on `R/Z`.
pub fn circle_distance(a: &Rational, b: &Rational) -> Rational {
    let one = Rational::from_integer(1.into());
    let mut d = (a - b) % &one;
    if d < Rational::zero() {
        d += &one;
    }
    let other = &one - &d;
    d.min(other)
}

#[derive(Clone, Debug)]
pub struct NetSystem {
    spec: DistanceSpec,
    denominator: u64,
    numerators: Vec<u64>,
    map: Vec<usize>,
    inverse: Option<Vec<usize>>,
    resolution: Rational,
    labels: Vec<String>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq, Eq)]
pub struct MetricReport {
    pub points: usize,
    pub asymmetric: Vec<(usize, usize)>,
    pub nonzero_diagonal: Vec<usize>,
    pub indiscernible: Vec<(usize, usize)>,
    pub triangle: Vec<(usize, usize, usize)>,
}

impl MetricReport {
    pub fn passes(&self) -> bool {
        self.asymmetric.is_empty()
            && self.nonzero_diagonal.is_empty()
            && self.indiscernible.is_empty()
            && self.triangle.is_empty()
    }
}

const MAX_LISTED: usize = 16;

impl NetSystem {
    /// Builds a net system. The metric is checked exhaustively; a claimed
    /// inverse requires the map to be a bijection.
    pub fn new(
        spec: DistanceSpec,
        map: Vec<usize>,
        invertible: bool,
        resolution: Rational,
        labels: Vec<String>,
    ) -> Result<Self> {
        let sys = Self::new_unchecked(spec, map, invertible, resolution, labels)?;
        let report = sys.validate_metric();
        if !report.passes() {
            return Err(Error::InvalidSystem(format!("metric check failed: {report:?}")));
        }
        Ok(sys)
    }

    /// Same as [`NetSystem::new`] without the O(n³) metric check.
    pub fn new_unchecked(
        spec: DistanceSpec,
        map: Vec<usize>,
        invertible: bool,
        resolution: Rational,
        labels: Vec<String>,
    ) -> Result<Self> {
        let (denominator, numerators, n) = scale(&spec)?;
        if map.len() != n {
            return Err(Error::InvalidSystem(format!(
                "map has {} entries for {} points",
                map.len(),
                n
            )));
        }
        if n == 0 {
            return Err(Error::InvalidSystem("empty point set".into()));
        }
        if let Some(&bad) = map.iter().find(|&&m| m >= n) {
            return Err(Error::InvalidSystem(format!("map target {bad} out of range")));
        }
        if resolution <= Rational::zero() {
            return Err(Error::InvalidSystem("resolution must be positive".into()));
        }
        let inverse = if invertible {
            let mut inv = vec![usize::MAX; n];
            for (i, &m) in map.iter().enumerate() {
                if inv[m] != usize::MAX {
                    return Err(Error::InvalidSystem(format!(
                        "map claimed invertible but {} and {} share image {}",
                        inv[m], i, m
                    )));
                }
                inv[m] = i;
            }
            Some(inv)
        } else {
            None
        };
        let labels = if labels.is_empty() { (0..n).map(|i| i.to_string()).collect() } else { labels };
        if labels.len() != n {
            return Err(Error::InvalidSystem("label count differs from point count".into()));
        }
        Ok(NetSystem { spec, denominator, numerators, map, inverse, resolution, labels })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn spec(&self) -> &DistanceSpec {
        &self.spec
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn resolution(&self) -> &Rational {
        &self.resolution
    }

    pub fn is_invertible(&self) -> bool {
        self.inverse.is_some()
    }

    pub fn denominator(&self) -> u64 {
        self.denominator
    }

    #[inline]
    pub fn image(&self, i: usize) -> usize {
        self.map[i]
    }

    /// Distance numerator over [`NetSystem::denominator`].
    #[inline]
    pub fn dist_num(&self, i: usize, j: usize) -> u64 {
        self.numerators[i * self.map.len() + j]
    }

    pub fn distance(&self, i: usize, j: usize) -> Rational {
        Rational::new(BigInt::from(self.dist_num(i, j)), BigInt::from(self.denominator))
    }

    /// Largest numerator `m` with `m / denominator <= x`; comparisons against
    /// a rational tolerance reduce to integer comparisons with this value.
    pub fn threshold(&self, x: &Rational) -> Option<u64> {
        if *x < Rational::zero() {
            return None;
        }
        let scaled = (x * BigInt::from(self.denominator)).floor().to_integer();
        Some(scaled.to_u64().unwrap_or(u64::MAX))
    }

    pub fn diameter(&self) -> Rational {
        let m = self.numerators.iter().copied().max().unwrap_or(0);
        Rational::new(BigInt::from(m), BigInt::from(self.denominator))
    }

    /// Exact `k`-fold iterate; negative `k` needs an invertible map.
    pub fn apply(&self, i: usize, k: i64) -> Result<usize> {
        if k < 0 {
            let inv = self.inverse.as_ref().ok_or(Error::NotInvertible(k))?;
            // a bijection of a finite set is periodic at every point
            let mut len = 1u64;
            let mut q = inv[i];
            while q != i {
                q = inv[q];
                len += 1;
            }
            let mut p = i;
            for _ in 0..k.unsigned_abs() % len {
                p = inv[p];
            }
            return Ok(p);
        }
        let mut p = i;
        let mut steps = k as u64;
        // the orbit enters a cycle within n steps; fold long iterates onto it
        let n = self.len() as u64;
        if steps > 2 * n {
            for _ in 0..n {
                p = self.map[p];
            }
            steps -= n;
            let mut len = 1u64;
            let mut q = self.map[p];
            while q != p {
                q = self.map[q];
                len += 1;
            }
            steps %= len;
        }
        for _ in 0..steps {
            p = self.map[p];
        }
        Ok(p)
    }

    pub fn inverse_image(&self, i: usize) -> Option<usize> {
        self.inverse.as_ref().map(|inv| inv[i])
    }

    /// Exhaustive metric audit: symmetry, zero diagonal, separation of
    /// distinct points, triangle inequality.
    pub fn validate_metric(&self) -> MetricReport {
        let n = self.len();
        let d = |i: usize, j: usize| self.dist_num(i, j);
        let mut report = MetricReport { points: n, ..Default::default() };
        for i in 0..n {
            if d(i, i) != 0 {
                report.nonzero_diagonal.push(i);
            }
            for j in i + 1..n {
                if d(i, j) != d(j, i) && report.asymmetric.len() < MAX_LISTED {
                    report.asymmetric.push((i, j));
                }
                if d(i, j) == 0 && report.indiscernible.len() < MAX_LISTED {
                    report.indiscernible.push((i, j));
                }
            }
        }
        let mut tri: Vec<(usize, usize, usize)> = (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let mut found = Vec::new();
                'outer: for j in 0..n {
                    let dij = d(i, j) as u128;
                    for k in 0..n {
                        if (d(i, k) as u128) > dij + d(j, k) as u128 {
                            found.push((i, j, k));
                            if found.len() >= MAX_LISTED {
                                break 'outer;
                            }
                        }
                    }
                }
                found
            })
            .collect();
        tri.truncate(MAX_LISTED);
        report.triangle = tri;
        report
    }
}

fn scale(spec: &DistanceSpec) -> Result<(u64, Vec<u64>, usize)> {
    match spec {
        DistanceSpec::Scaled { denominator, numerators } => {
            let n = numerators.len();
            if *denominator == 0 {
                return Err(Error::InvalidSystem("zero denominator".into()));
            }
            if numerators.iter().any(|r| r.len() != n) {
                return Err(Error::InvalidSystem("distance table is not square".into()));
            }
            Ok((*denominator, numerators.iter().flatten().copied().collect(), n))
        }
        DistanceSpec::Table { entries } => {
            let n = entries.len();
            if entries.iter().any(|r| r.len() != n) {
                return Err(Error::InvalidSystem("distance table is not square".into()));
            }
            scale_rationals(n, entries.iter().flatten().cloned().collect())
        }
        DistanceSpec::Circle { angles } => {
            let n = angles.len();
            let mut all = Vec::with_capacity(n * n);
            for a in angles {
                for b in angles {
                    all.push(circle_distance(a, b));
                }
            }
            scale_rationals(n, all)
        }
    }
}

fn scale_rationals(n: usize, all: Vec<Rational>) -> Result<(u64, Vec<u64>, usize)> {
    let mut den = BigInt::from(1);
    for x in &all {
        if *x < Rational::zero() {
            return Err(Error::InvalidSystem("negative distance".into()));
        }
        den = den.lcm(x.denom());
    }
    let denominator = den
        .to_u64()
        .ok_or_else(|| Error::InvalidSystem("common denominator exceeds 64 bits".into()))?;
    let nums = all
        .iter()
        .map(|x| {
            (x.numer() * (&den / x.denom()))
                .to_u64()
                .ok_or_else(|| Error::InvalidSystem("distance numerator exceeds 64 bits".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((denominator, nums, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn circle(n: i64) -> NetSystem {
        let angles = (0..n).map(|i| rat(i, n)).collect();
        NetSystem::new(DistanceSpec::Circle { angles }, (0..n as usize).collect(), true, rat(1, n), vec![])
            .unwrap()
    }

    #[test]
    fn circle_360_is_a_metric() {
        let c = circle(360);
        assert!(c.validate_metric().passes());
        assert_eq!(c.distance(0, 359), rat(1, 360));
        assert_eq!(c.distance(0, 180), rat(1, 2));
    }

    #[test]
    fn asymmetric_entry_is_reported() {
        let t = vec![
            vec![rat(0, 1), rat(1, 2), rat(1, 2)],
            vec![rat(1, 2), rat(0, 1), rat(1, 2)],
            vec![rat(1, 3), rat(1, 2), rat(0, 1)],
        ];
        let spec = DistanceSpec::Table { entries: t };
        let s = NetSystem::new_unchecked(spec.clone(), vec![0, 1, 2], false, rat(1, 2), vec![]).unwrap();
        let r = s.validate_metric();
        assert_eq!(r.asymmetric, vec![(0, 2)]);
        assert!(NetSystem::new(spec, vec![0, 1, 2], false, rat(1, 2), vec![]).is_err());
    }

    #[test]
    fn identity_iterates() {
        let c = circle(12);
        assert_eq!(c.apply(5, 5).unwrap(), 5);
        assert_eq!(c.apply(5, -3).unwrap(), 5);
    }

    #[test]
    fn negative_iterate_needs_inverse() {
        let angles = (0..4).map(|i| rat(i, 4)).collect();
        let s = NetSystem::new(DistanceSpec::Circle { angles }, vec![0, 0, 1, 2], false, rat(1, 4), vec![])
            .unwrap();
        assert!(matches!(s.apply(1, -1), Err(Error::NotInvertible(-1))));
        assert_eq!(s.apply(3, 100).unwrap(), 0);
    }

    #[test]
    fn claimed_bijection_is_checked() {
        let angles = (0..3).map(|i| rat(i, 3)).collect();
        assert!(NetSystem::new(DistanceSpec::Circle { angles }, vec![0, 0, 1], true, rat(1, 3), vec![]).is_err());
    }

    #[test]
    fn thresholds_are_exact() {
        let c = circle(360);
        assert_eq!(c.threshold(&rat(1, 100)), Some(3));
        assert_eq!(c.threshold(&rat(1, 120)), Some(3));
        assert_eq!(c.threshold(&rat(-1, 2)), None);
    }
}
