//! Approximating an invariant measure on a subshift by the empirical measure
//! of a point coded by a semi-horseshoe, with the `d*` error split into the
//! four terms of the triangle inequality.

use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::chain::{build_chain_graph, ChainGraph};
use crate::error::{Error, Result};
use crate::horseshoe::{build_certificate, find_loop_family_on_graph, HorseshoeCertificate, LoopFamily};
use crate::measure::{
    dstar, empirical_measure, period_of, periodic_orbit_measure, EmpiricalMeasure, TestFunctionFamily,
};
use crate::orbit::PseudoOrbit;
use crate::rational::{self, int, rat, Rational};
use crate::shadow::{delta_ladder, is_positively_shadowable_at};
use crate::space::{System, SystemPoint};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    #[serde(with = "rational::serde_rat")]
    pub weight: Rational,
    /// Generic point: the periodic point itself.
    pub point: SystemPoint,
    pub period: usize,
}

/// Writes `μ` as `Σ α_i μ_i` over periodic-orbit measures, one component per
/// orbit in order of first appearance. Fails unless the weights are constant
/// along each orbit.
pub fn periodic_decomposition(system: &System, mu: &EmpiricalMeasure) -> Result<Vec<Component>> {
    let mut comps: Vec<Component> = Vec::new();
    let mut seen: Vec<SystemPoint> = Vec::new();
    for a in mu.atoms() {
        if seen.contains(&a.point) {
            continue;
        }
        let q = period_of(system, &a.point)
            .map_err(|_| Error::InvalidArgument(format!("atom {} is not periodic", a.point)))?;
        let orbit: Vec<SystemPoint> = (0..q).map(|i| system.apply(&a.point, i as i64)).collect::<Result<_>>()?;
        let mut weight = Rational::zero();
        for p in &orbit {
            let w = mu
                .atoms()
                .iter()
                .find(|b| &b.point == p)
                .map(|b| b.weight.clone())
                .ok_or_else(|| Error::InvalidArgument(format!("orbit of {} is only partly charged", a.point)))?;
            if w != a.weight {
                return Err(Error::InvalidArgument(format!("weights vary along the orbit of {}", a.point)));
            }
            weight += w;
        }
        seen.extend(orbit);
        comps.push(Component { weight, point: a.point.clone(), period: q });
    }
    Ok(comps)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub name: String,
    #[serde(with = "rational::serde_rat")]
    pub value: Rational,
    #[serde(with = "rational::serde_rat")]
    pub bound: Rational,
}

impl Term {
    pub fn holds(&self) -> bool {
        self.value <= self.bound
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproxReport {
    pub system_hash: String,
    pub mu: EmpiricalMeasure,
    #[serde(with = "rational::serde_rat")]
    pub epsilon: Rational,
    #[serde(with = "rational::serde_rat")]
    pub delta: Rational,
    pub components: Vec<Component>,
    /// Generic block length per unit of weight numerator.
    pub block_unit: usize,
    /// Step count of the two long loops.
    pub loop_length: usize,
    pub certificate: HorseshoeCertificate,
    /// Word whose coded point generates `ν`.
    pub word: Vec<u8>,
    pub nu: EmpiricalMeasure,
    pub terms: Vec<Term>,
    /// `d*(ν, μ)`, evaluated directly.
    #[serde(with = "rational::serde_rat")]
    pub dstar: Rational,
    #[serde(with = "rational::serde_rat")]
    pub bound: Rational,
    #[serde(with = "rational::serde_rat")]
    pub tail_bound: Rational,
}

impl ApproxReport {
    pub fn holds(&self) -> bool {
        self.dstar <= self.bound && self.terms.iter().all(Term::holds)
    }

    pub fn entropy_lower_bound(&self) -> f64 {
        self.certificate.entropy_lower_bound
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Schema(e.to_string()))
    }

    /// Re-derives `ν` from the certificate and re-evaluates the stamped
    /// bound and the certificate itself.
    pub fn recheck(&self, system: &System) -> Result<bool> {
        if self.system_hash != system.hash() {
            return Ok(false);
        }
        let Some(cw) = self.certificate.coded.iter().find(|c| c.word == self.word) else {
            return Ok(false);
        };
        let len = self.word.len() * self.certificate.n();
        let nu = empirical_measure(system, &cw.witness.shadow_point, len)?;
        if nu != self.nu {
            return Ok(false);
        }
        let fam = TestFunctionFamily::standard(system)?;
        let d = dstar(system, &self.nu, &self.mu, &fam)?.value;
        Ok(d == self.dstar && d <= self.bound && self.certificate.recheck(system)?.passes())
    }
}

/// Largest `δ` on the dyadic/net ladder with `2δ < ε` at which `x` passes
/// the positive shadowing test up to `horizon`.
pub fn shadowing_delta(system: &System, x: &SystemPoint, epsilon: &Rational, horizon: usize) -> Result<Rational> {
    for d in delta_ladder(system, 16) {
        if &d * int(2) >= *epsilon {
            continue;
        }
        if is_positively_shadowable_at(system, x, epsilon, &d, horizon)?.is_shadowable() {
            return Ok(d);
        }
    }
    Err(Error::Inapplicable(format!("stage shadowing: {x} fails at every δ on the ladder")))
}

fn chain(system: &System, g: &ChainGraph, a: &SystemPoint, b: &SystemPoint, max_len: usize) -> Result<PseudoOrbit> {
    let min = if a == b { 0 } else { 1 };
    let path = g
        .shortest_path(g.node_of(a)?, g.node_of(b)?, min, max_len)
        .ok_or_else(|| Error::Inapplicable(format!("stage connect: no δ-chain from {a} to {b}")))?;
    g.path_to_orbit(system, &path, Some(a), Some(b))
}

/// Builds the loops `X Z_0 P_1 Z_{1,2} ⋯ P_k Z_k` and `Y Z_0 P_1 ⋯ P_k Z_k`
/// at the base point, codes words over them, and measures how far the
/// empirical measure of a coded point is from `μ`.
///
/// `μ` must be a convex combination of periodic-orbit measures in one chain
/// class. Generic blocks have length `a_i · block_unit` for weights
/// `a_i / D`, so their averages reproduce `μ` exactly.
pub fn approximate_by_positive_entropy_ergodic(
    system: &System,
    mu: &EmpiricalMeasure,
    epsilon: &Rational,
) -> Result<ApproxReport> {
    let comps = periodic_decomposition(system, mu)?;
    let x = comps[0].point.clone();
    let delta = shadowing_delta(system, &x, epsilon, 6)?;
    let g = build_chain_graph(system, &delta)?;
    let class = g
        .chain_class(g.node_of(&x)?)
        .map_err(|_| Error::Inapplicable("stage class: base point is not chain recurrent".into()))?;
    for c in &comps {
        if !class.contains(&g.node_of(&c.point)?) {
            return Err(Error::Inapplicable(format!("stage class: {} lies in another chain class", c.point)));
        }
    }
    let max_len = g.len() + 1;
    let family = find_loop_family_on_graph(system, &g, &x, epsilon, 4 * max_len, 2)?
        .ok_or_else(|| Error::Inapplicable("stage loops: no pair of separated loops at the base point".into()))?;

    // connectors
    let mut connectors = vec![chain(system, &g, &x, &comps[0].point, max_len)?];
    for w in comps.windows(2) {
        connectors.push(chain(system, &g, &w[0].point, &w[1].point, max_len)?);
    }
    connectors.push(chain(system, &g, &comps[comps.len() - 1].point, &x, max_len)?);
    let overhead = family.n() + connectors.iter().map(PseudoOrbit::step_count).sum::<usize>();

    // block lengths: weights a_i / D, unit a multiple of every period
    let den = comps.iter().fold(num_bigint::BigInt::one(), |acc, c| acc.lcm(c.weight.denom()));
    let nums: Vec<usize> = comps
        .iter()
        .map(|c| {
            let a = (&c.weight * Rational::from_integer(den.clone())).to_integer();
            a.to_string().parse::<usize>().map_err(|_| Error::InvalidArgument("weights too fine".into()))
        })
        .collect::<Result<_>>()?;
    let period_lcm = comps.iter().fold(1usize, |acc, c| acc.lcm(&c.period));
    let total: usize = nums.iter().sum();
    // item-1 counting bound on the overhead share: 3·overhead / generic length <= ε
    let mut unit = period_lcm;
    while rat(3 * overhead as i64, (unit * total) as i64) > *epsilon {
        unit += period_lcm;
    }

    let tail = {
        let mut seg = connectors[0].clone();
        for (i, c) in comps.iter().enumerate() {
            let block = PseudoOrbit::orbit(system, &c.point, nums[i] * unit)?;
            seg = seg.concatenate(&block, system)?.concatenate(&connectors[i + 1], system)?;
        }
        seg
    };
    let loops: Vec<PseudoOrbit> = family
        .loops
        .iter()
        .map(|l| l.concatenate(&tail, system)?.close())
        .collect::<Result<_>>()?;
    let long = LoopFamily::new(system, x.clone(), &loops, delta.clone(), epsilon.clone())?;
    let depth = 2;
    let certificate = build_certificate(system, &long, depth)
        .map_err(|e| Error::Inapplicable(format!("stage certificate: {e}")))?;

    let word: Vec<u8> = (0..depth).map(|i| (i % 2) as u8).collect();
    let cw = certificate
        .coded
        .iter()
        .find(|c| c.word == word)
        .ok_or_else(|| Error::NotFound("coded word".into()))?;
    let len = word.len() * long.n();
    let z = cw.witness.shadow_point.clone();
    let nu = empirical_measure(system, &z, len)?;
    let xi = long.word_orbit(system, &word)?;
    let xi_measure = EmpiricalMeasure::uniform(&xi.points()[..len])?;
    let parts: Vec<(Rational, EmpiricalMeasure)> = comps
        .iter()
        .map(|c| Ok((c.weight.clone(), periodic_orbit_measure(system, &c.point)?)))
        .collect::<Result<_>>()?;
    let combo = EmpiricalMeasure::combine(&parts)?;

    let fam = TestFunctionFamily::standard(system)?;
    let d = |a: &EmpiricalMeasure, b: &EmpiricalMeasure| dstar(system, a, b, &fam).map(|r| r.value);
    let terms = vec![
        Term { name: "nu_vs_coded_empirical".into(), value: d(&nu, &empirical_measure(system, &z, len)?)?, bound: epsilon.clone() },
        Term { name: "coded_vs_pseudo_orbit".into(), value: d(&nu, &xi_measure)?, bound: epsilon.clone() },
        Term { name: "pseudo_orbit_vs_combination".into(), value: d(&xi_measure, &combo)?, bound: epsilon * int(2) },
        Term { name: "combination_vs_mu".into(), value: d(&combo, mu)?, bound: epsilon.clone() },
    ];
    let direct = d(&nu, mu)?;
    Ok(ApproxReport {
        system_hash: system.hash(),
        mu: mu.clone(),
        epsilon: epsilon.clone(),
        delta,
        components: comps,
        block_unit: unit,
        loop_length: long.n(),
        certificate,
        word,
        nu,
        terms,
        dstar: direct,
        bound: epsilon * int(5),
        tail_bound: fam.tail_bound(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{SymbolicPoint, SymbolicSystem};

    fn sigma2() -> System {
        System::Symbolic(SymbolicSystem::full_shift(2).unwrap())
    }

    fn per(w: &[u8]) -> SystemPoint {
        SystemPoint::Symbolic(SymbolicPoint::periodic(2, w).unwrap())
    }

    #[test]
    fn decomposition_groups_orbits() {
        let s = sigma2();
        let mu = EmpiricalMeasure::new([(per(&[0]), rat(1, 2)), (per(&[0, 1]), rat(1, 4)), (per(&[1, 0]), rat(1, 4))]).unwrap();
        let c = periodic_decomposition(&s, &mu).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[1].weight, rat(1, 2));
        assert_eq!(c[1].period, 2);
        let bad = EmpiricalMeasure::new([(per(&[0, 1]), rat(3, 4)), (per(&[1, 0]), rat(1, 4))]).unwrap();
        assert!(periodic_decomposition(&s, &bad).is_err());
    }

    #[test]
    fn fixed_point_measure() {
        let s = sigma2();
        let mu = EmpiricalMeasure::dirac(per(&[0]));
        let r = approximate_by_positive_entropy_ergodic(&s, &mu, &rat(1, 5)).unwrap();
        assert!(r.holds(), "{:?}", r.terms);
        assert!(r.entropy_lower_bound() > 0.0);
        assert!(r.recheck(&s).unwrap());
        let back = ApproxReport::from_json(&r.to_json().unwrap()).unwrap();
        assert!(back.recheck(&s).unwrap());
    }
}
