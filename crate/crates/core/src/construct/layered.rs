//! Layered spaces: a base system with isolated layers accumulating on it.

use num_integer::Integer;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, rat, Rational};
use crate::space::{circle_distance, DistanceSpec, NetSystem};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layer {
    pub label: String,
    #[serde(with = "rational::serde_rat")]
    pub height: Rational,
    /// Net indices of the layer's points.
    pub points: Vec<usize>,
}

/// A net system together with its decomposition into a base and layers at
/// strictly decreasing heights.
#[derive(Clone, Debug)]
pub struct LayeredSpace {
    pub system: NetSystem,
    pub base: Vec<usize>,
    pub layers: Vec<Layer>,
}

impl LayeredSpace {
    /// Checks the decomposition: heights strictly decreasing and positive,
    /// parts disjoint and covering, every part invariant.
    pub fn check(&self) -> Result<()> {
        let n = self.system.len();
        let mut owner = vec![usize::MAX; n];
        let parts = std::iter::once(&self.base).chain(self.layers.iter().map(|l| &l.points));
        for (k, part) in parts.enumerate() {
            for &p in part {
                if p >= n || owner[p] != usize::MAX {
                    return Err(Error::InvalidSystem(format!("point {p} is out of range or in two parts")));
                }
                owner[p] = k;
            }
        }
        if owner.contains(&usize::MAX) {
            return Err(Error::InvalidSystem("parts do not cover the space".into()));
        }
        for p in 0..n {
            if owner[self.system.image(p)] != owner[p] {
                return Err(Error::InvalidSystem(format!("part of point {p} is not invariant")));
            }
        }
        for w in self.layers.windows(2) {
            if w[0].height <= w[1].height {
                return Err(Error::InvalidSystem("layer heights must strictly decrease".into()));
            }
        }
        if self.layers.last().is_some_and(|l| l.height <= rational::int(0)) {
            return Err(Error::InvalidSystem("layer heights must be positive".into()));
        }
        Ok(())
    }

    /// Smallest distance from a point of layer `k` to a point outside it.
    pub fn isolation_gap(&self, k: usize) -> Rational {
        let inside = &self.layers[k].points;
        let mut mask = vec![false; self.system.len()];
        for &p in inside {
            mask[p] = true;
        }
        let m = inside
            .iter()
            .flat_map(|&a| (0..self.system.len()).filter(|&b| !mask[b]).map(move |b| (a, b)))
            .map(|(a, b)| self.system.dist_num(a, b))
            .min()
            .unwrap_or(u64::MAX);
        Rational::new(m.into(), self.system.denominator().into())
    }
}

/// The circle `{0} × S^1` sampled at `base_size` points with the identity
/// map, plus the periodic layers `K_n = {1/n} × {0, 1/n, …, (n-1)/n}` for
/// `n <= n_max`, each rotated by `i/n -> (i+1)/n`. Distances are the maximum
/// of the height difference and the arc distance.
pub fn dense_shadowable_example(n_max: usize, base_size: usize) -> Result<LayeredSpace> {
    if n_max < 2 || base_size == 0 {
        return Err(Error::InvalidArgument("need at least two layers and a nonempty base".into()));
    }
    let mut heights = Vec::new();
    let mut angles = Vec::new();
    let mut map = Vec::new();
    let mut labels = Vec::new();
    let mut layers = Vec::new();
    for n in 1..=n_max {
        let start = angles.len();
        for i in 0..n {
            heights.push(rat(1, n as i64));
            angles.push(rat(i as i64, n as i64));
            map.push(start + (i + 1) % n);
            labels.push(format!("K{n}:{i}"));
        }
        layers.push(Layer { label: format!("K{n}"), height: rat(1, n as i64), points: (start..start + n).collect() });
    }
    let base_start = angles.len();
    for i in 0..base_size {
        heights.push(rat(0, 1));
        angles.push(rat(i as i64, base_size as i64));
        map.push(base_start + i);
        labels.push(format!("B:{i}"));
    }
    let total = angles.len();
    let mut den: u64 = base_size as u64;
    for n in 1..=n_max as u64 {
        den = den.lcm(&n);
    }
    let numerators: Vec<Vec<u64>> = (0..total)
        .map(|a| {
            (0..total)
                .map(|b| {
                    let dh = (&heights[a] - &heights[b]).abs();
                    let dc = circle_distance(&angles[a], &angles[b]);
                    let d = dh.max(dc) * Rational::from_integer(den.into());
                    num_traits::ToPrimitive::to_u64(&d.to_integer()).expect("distance fits")
                })
                .collect()
        })
        .collect();
    let system = NetSystem::new_unchecked(
        DistanceSpec::Scaled { denominator: den, numerators },
        map,
        true,
        rat(1, base_size as i64),
        labels,
    )?;
    let space = LayeredSpace { system, base: (base_start..total).collect(), layers };
    space.check()?;
    Ok(space)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layers_are_cycles_rotating_forward() {
        let s = dense_shadowable_example(6, 60).unwrap();
        assert_eq!(s.system.denominator(), 60);
        for l in &s.layers {
            let n = l.points.len();
            for (i, &p) in l.points.iter().enumerate() {
                assert_eq!(s.system.image(p), l.points[(i + 1) % n]);
            }
        }
        for &b in &s.base {
            assert_eq!(s.system.image(b), b);
        }
    }

    #[test]
    fn small_instance_is_a_metric() {
        let s = dense_shadowable_example(5, 20).unwrap();
        assert!(s.system.validate_metric().passes());
        // K_5 is 1/20 from K_4 in height, 1/5 from the base
        assert_eq!(s.isolation_gap(4), rat(1, 20));
    }
}
