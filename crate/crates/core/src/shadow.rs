//! ε-shadowing: witnesses, exhaustive shadow search, and pointwise / global
//! shadowability tests at a stamped resolution.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{ChainGraph, Nodes};
use crate::error::{Error, Result};
use crate::orbit::PseudoOrbit;
use crate::rational::{self, Rational};
use crate::space::{NetSystem, SymbolicPoint, SymbolicSystem, System, SystemPoint};

/// Default cap on edge expansions per search.
pub const DEFAULT_BUDGET: usize = 50_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShadowWitness {
    pub shadow_point: SystemPoint,
    #[serde(with = "rational::serde_rat")]
    pub epsilon: Rational,
    /// Indices `lo..=hi` of the pseudo-orbit that were checked.
    pub orbit_window: (usize, usize),
}

impl ShadowWitness {
    /// Re-checks `d(f^i(z), x_i) <= ε` on the window.
    pub fn verify(&self, system: &System, po: &PseudoOrbit) -> Result<bool> {
        let (lo, hi) = self.orbit_window;
        if hi >= po.points().len() || lo > hi {
            return Ok(false);
        }
        for i in lo..=hi {
            let d = system.distance_shifted(&self.shadow_point, (i - lo) as i64, &po.points()[i], 0)?;
            if d > self.epsilon {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Witness iff `d(f^i(z), x_i) <= ε` for every index of `po`.
pub fn shadows(system: &System, z: &SystemPoint, po: &PseudoOrbit, epsilon: &Rational) -> Result<Option<ShadowWitness>> {
    system.check_point(z)?;
    let w = ShadowWitness {
        shadow_point: z.clone(),
        epsilon: epsilon.clone(),
        orbit_window: (0, po.step_count()),
    };
    Ok(if w.verify(system, po)? { Some(w) } else { None })
}

/// Radius `s` with `d(a, b) <= ε` iff `a, b` agree on `|j| <= s`; negative
/// when every pair is within ε.
pub fn shadow_radius(epsilon: &Rational) -> Result<i64> {
    Ok(rational::dyadic_exponent(epsilon)? as i64 - 1)
}

/// Some ε-shadow of `po`, or `None` when none exists. Net systems are searched
/// exhaustively; on subshifts the shadow is forced coordinatewise (it must
/// read `x_i[j]` at `i + j` for `|j| <= s`), so gluing the central words
/// either produces it or proves there is none.
pub fn find_shadow(system: &System, po: &PseudoOrbit, epsilon: &Rational) -> Result<Option<ShadowWitness>> {
    match system {
        System::Net(n) => {
            let x: Vec<usize> = po
                .points()
                .iter()
                .map(|p| p.as_net().ok_or_else(|| Error::ForeignPoint(p.to_string())))
                .collect::<Result<_>>()?;
            let thr = n.threshold(epsilon).ok_or_else(|| Error::InvalidArgument("epsilon must be nonnegative".into()))?;
            let found = (0..n.len()).into_par_iter().find_first(|&z| {
                let mut c = z;
                for (i, &xi) in x.iter().enumerate() {
                    if i > 0 {
                        c = n.image(c);
                    }
                    if n.dist_num(c, xi) > thr {
                        return false;
                    }
                }
                true
            });
            Ok(found.map(|z| ShadowWitness {
                shadow_point: SystemPoint::Net(z),
                epsilon: epsilon.clone(),
                orbit_window: (0, po.step_count()),
            }))
        }
        System::Symbolic(s) => {
            let pts: Vec<&SymbolicPoint> = po
                .points()
                .iter()
                .map(|p| p.as_symbolic().ok_or_else(|| Error::ForeignPoint(p.to_string())))
                .collect::<Result<_>>()?;
            let Some(u) = glue(s, &pts, shadow_radius(epsilon)?) else {
                return Ok(None);
            };
            let r = shadow_radius(epsilon)?.max(0);
            let z: SystemPoint = s.extend_word(&u, -r)?.into();
            let w = shadows(system, &z, po, epsilon)?;
            debug_assert!(w.is_some());
            Ok(w)
        }
    }
}

/// The forced word on `[-s, n + s]`, or `None` if the windows disagree or the
/// word is not admissible. For `s < 0` any point works and the central
/// symbol of `x_0` is returned.
pub fn glue(system: &SymbolicSystem, pts: &[&SymbolicPoint], s: i64) -> Option<Vec<u8>> {
    if s < 0 {
        return Some(vec![pts[0].coord(0)]);
    }
    let n = pts.len() as i64 - 1;
    let mut u: Vec<Option<u8>> = vec![None; (n + 2 * s + 1) as usize];
    for (i, p) in pts.iter().enumerate() {
        for j in -s..=s {
            let pos = (i as i64 + j + s) as usize;
            let c = p.coord(j);
            match u[pos] {
                Some(prev) if prev != c => return None,
                _ => u[pos] = Some(c),
            }
        }
    }
    let u: Vec<u8> = u.into_iter().map(|c| c.unwrap()).collect();
    if system.is_admissible_word(&u) {
        Some(u)
    } else {
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Shadowable,
    Counterexample,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Base {
    Point(SystemPoint),
    Set(Vec<SystemPoint>),
    /// Every point of the system.
    System,
    /// Pseudo-orbits staying inside the chain class of a point.
    Class(SystemPoint),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShadowabilityReport {
    pub base: Base,
    #[serde(with = "rational::serde_rat")]
    pub epsilon: Rational,
    #[serde(with = "rational::serde_rat")]
    pub delta: Rational,
    pub horizon: usize,
    pub two_sided: bool,
    /// Cylinder radius of the symbolic finitization, if any.
    pub radius: Option<usize>,
    pub verdict: Verdict,
    pub counterexample: Option<PseudoOrbit>,
    /// Edge expansions performed.
    pub expansions: usize,
}

impl ShadowabilityReport {
    pub fn is_shadowable(&self) -> bool {
        self.verdict == Verdict::Shadowable
    }

    /// Re-checks a counterexample: a δ-pseudo-orbit without any ε-shadow.
    pub fn recheck(&self, system: &System) -> Result<bool> {
        match &self.counterexample {
            None => Ok(self.is_shadowable()),
            Some(po) => {
                if po.delta() > &self.delta || po.check(system).is_err() {
                    return Ok(false);
                }
                Ok(find_shadow(system, po, &self.epsilon)?.is_none())
            }
        }
    }
}

/// Search settings.
#[derive(Clone, Copy, Debug)]
pub struct SearchConfig {
    pub budget: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { budget: DEFAULT_BUDGET }
    }
}

/// The δ-transition graph used for shadow searches: net points, or central
/// words of radius `max(t_δ, s)` so that both the step condition and the
/// ε-condition are decided inside the windows.
pub fn search_graph(system: &System, delta: &Rational, epsilon: &Rational) -> Result<ChainGraph> {
    match system {
        System::Net(n) => ChainGraph::net(n, delta),
        System::Symbolic(s) => {
            let t = rational::dyadic_exponent(delta)? as i64;
            let r = shadow_radius(epsilon)?;
            ChainGraph::symbolic(s, delta, t.max(r).max(0) as usize)
        }
    }
}

enum Checker<'a> {
    Net { sys: &'a NetSystem, thr: u64, words: usize },
    Sym { sys: &'a SymbolicSystem, s: i64, w: usize, g: &'a ChainGraph },
}

impl<'a> Checker<'a> {
    fn new(g: &'a ChainGraph, epsilon: &Rational) -> Result<Self> {
        Ok(match g.nodes() {
            Nodes::Net(n) => Checker::Net {
                sys: n,
                thr: n.threshold(epsilon).ok_or_else(|| Error::InvalidArgument("epsilon must be nonnegative".into()))?,
                words: n.len().div_ceil(64),
            },
            Nodes::Words { system, radius, .. } => {
                let s = shadow_radius(epsilon)?;
                if s > *radius as i64 {
                    return Err(Error::InvalidArgument("graph radius below the shadow radius".into()));
                }
                Checker::Sym { sys: system, s, w: *radius, g }
            }
        })
    }

    /// Current images `f^i(z)` of the candidate shadows, as a bitset.
    fn init(&self, node: usize) -> Vec<u64> {
        match self {
            Checker::Net { sys, thr, words } => {
                let mut b = vec![0u64; *words];
                for z in 0..sys.len() {
                    if sys.dist_num(z, node) <= *thr {
                        b[z / 64] |= 1 << (z % 64);
                    }
                }
                b
            }
            Checker::Sym { .. } => Vec::new(),
        }
    }

    fn step(&self, state: &[u64], from: usize, to: usize) -> Option<Vec<u64>> {
        match self {
            Checker::Net { sys, thr, words } => {
                let mut b = vec![0u64; *words];
                let mut any = false;
                for (k, &chunk) in state.iter().enumerate() {
                    let mut c = chunk;
                    while c != 0 {
                        let z = k * 64 + c.trailing_zeros() as usize;
                        c &= c - 1;
                        let fz = sys.image(z);
                        if sys.dist_num(fz, to) <= *thr {
                            b[fz / 64] |= 1 << (fz % 64);
                            any = true;
                        }
                    }
                }
                any.then_some(b)
            }
            Checker::Sym { sys, s, w, g } => {
                if *s < 0 {
                    return Some(Vec::new());
                }
                let a = g.word(from).unwrap();
                let b = g.word(to).unwrap();
                let w = *w as i64;
                for j in -*s..*s {
                    if b[(w + j) as usize] != a[(w + j + 1) as usize] {
                        return None;
                    }
                }
                if *s == 0 && !sys.allowed(a[w as usize], b[w as usize]) {
                    return None;
                }
                Some(Vec::new())
            }
        }
    }
}

struct Search<'a, F: Fn(usize, usize) -> bool> {
    g: &'a ChainGraph,
    checker: Checker<'a>,
    allowed: F,
    total: usize,
    budget: usize,
    expansions: usize,
    memo: HashSet<(u32, u32, Vec<u64>)>,
}

impl<'a, F: Fn(usize, usize) -> bool> Search<'a, F> {
    /// Lexicographically first path of `total` steps from `start` (all
    /// nodes admitted by `allowed(depth, node)`) that has no shadow, cut at
    /// its first failing step.
    fn run(&mut self, start: usize) -> Result<Option<Vec<usize>>> {
        let st = self.checker.init(start);
        self.dfs(start, st, 0)
    }

    fn dfs(&mut self, node: usize, state: Vec<u64>, depth: usize) -> Result<Option<Vec<usize>>> {
        if depth == self.total {
            return Ok(None);
        }
        let key = (node as u32, depth as u32, state);
        if self.memo.contains(&key) {
            return Ok(None);
        }
        let g = self.g;
        for &succ in g.successors(node) {
            let succ = succ as usize;
            if !(self.allowed)(depth + 1, succ) {
                continue;
            }
            self.expansions += 1;
            if self.expansions > self.budget {
                return Err(Error::BudgetExceeded(self.budget));
            }
            match self.checker.step(&key.2, node, succ) {
                None => return Ok(Some(vec![node, succ])),
                Some(next) => {
                    if let Some(mut tail) = self.dfs(succ, next, depth + 1)? {
                        tail.insert(0, node);
                        return Ok(Some(tail));
                    }
                }
            }
        }
        self.memo.insert(key);
        Ok(None)
    }
}

fn search<F: Fn(usize, usize) -> bool>(
    g: &ChainGraph,
    epsilon: &Rational,
    start: usize,
    total: usize,
    allowed: F,
    config: SearchConfig,
) -> Result<(Option<Vec<usize>>, usize)> {
    let mut s = Search {
        g,
        checker: Checker::new(g, epsilon)?,
        allowed,
        total,
        budget: config.budget,
        expansions: 0,
        memo: HashSet::new(),
    };
    let r = s.run(start)?;
    Ok((r, s.expansions))
}

fn build_report(
    system: &System,
    g: &ChainGraph,
    base: Base,
    epsilon: &Rational,
    horizon: usize,
    two_sided: bool,
    found: Option<(Vec<usize>, Option<(usize, SystemPoint)>)>,
    expansions: usize,
) -> Result<ShadowabilityReport> {
    let counterexample = match found {
        None => None,
        Some((path, pin)) => {
            let mut pts: Vec<SystemPoint> = path.iter().map(|&i| g.representative(i)).collect::<Result<_>>()?;
            if let Some((pos, p)) = pin {
                if pos < pts.len() {
                    pts[pos] = p;
                }
            }
            let po = PseudoOrbit::validate(system, pts, g.delta().clone())?;
            if find_shadow(system, &po, epsilon)?.is_some() {
                return Err(Error::InvalidSystem("counterexample admits a shadow".into()));
            }
            Some(po)
        }
    };
    Ok(ShadowabilityReport {
        base,
        epsilon: epsilon.clone(),
        delta: g.delta().clone(),
        horizon,
        two_sided,
        radius: g.radius(),
        verdict: if counterexample.is_some() { Verdict::Counterexample } else { Verdict::Shadowable },
        counterexample,
        expansions,
    })
}

/// Every δ-pseudo-orbit `x = x_0, …, x_horizon` is ε-shadowed, or the
/// lexicographically first one that is not.
pub fn is_positively_shadowable_at(
    system: &System,
    x: &SystemPoint,
    epsilon: &Rational,
    delta: &Rational,
    horizon: usize,
) -> Result<ShadowabilityReport> {
    let g = search_graph(system, delta, epsilon)?;
    positive_on_graph(system, &g, x, epsilon, horizon, SearchConfig::default())
}

pub fn positive_on_graph(
    system: &System,
    g: &ChainGraph,
    x: &SystemPoint,
    epsilon: &Rational,
    horizon: usize,
    config: SearchConfig,
) -> Result<ShadowabilityReport> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    system.check_point(x)?;
    let start = g.node_of(x)?;
    let (found, exp) = search(g, epsilon, start, horizon, |_, _| true, config)?;
    build_report(
        system,
        g,
        Base::Point(x.clone()),
        epsilon,
        horizon,
        false,
        found.map(|p| (p, Some((0, x.clone())))),
        exp,
    )
}

/// Shadowing over all start points: every δ-pseudo-orbit with `horizon`
/// steps (`2·horizon` steps for the two-sided window `[-horizon, horizon]`,
/// reported from its left end) is ε-shadowed.
pub fn has_shadowing_at_resolution(
    system: &System,
    delta: &Rational,
    epsilon: &Rational,
    horizon: usize,
    two_sided: bool,
) -> Result<ShadowabilityReport> {
    let g = search_graph(system, delta, epsilon)?;
    shadowing_on_graph(system, &g, epsilon, horizon, two_sided, None, Base::System, SearchConfig::default())
}

/// Runs the all-starts search on `g`, optionally restricted to a node mask.
#[allow(clippy::too_many_arguments)]
pub fn shadowing_on_graph(
    system: &System,
    g: &ChainGraph,
    epsilon: &Rational,
    horizon: usize,
    two_sided: bool,
    mask: Option<&[bool]>,
    base: Base,
    config: SearchConfig,
) -> Result<ShadowabilityReport> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    if two_sided && !system.is_invertible() {
        return Err(Error::NotInvertible(-(horizon as i64)));
    }
    let total = if two_sided { 2 * horizon } else { horizon };
    let ok = |v: usize| mask.is_none_or(|m| m[v]);
    let results: Vec<Result<(Option<Vec<usize>>, usize)>> = (0..g.len())
        .into_par_iter()
        .map(|start| {
            if !ok(start) {
                return Ok((None, 0));
            }
            search(g, epsilon, start, total, |_, v| ok(v), config)
        })
        .collect();
    let mut expansions = 0;
    let mut found = None;
    for r in results {
        let (f, e) = r?;
        expansions += e;
        if found.is_none() {
            found = f;
        }
    }
    build_report(system, g, base, epsilon, horizon, two_sided, found.map(|p| (p, None)), expansions)
}

/// Two-sided test through `x`: every δ-pseudo-orbit on `[-horizon, horizon]`
/// with `x` at time 0 (optionally confined to a node mask) has one ε-shadow
/// for the whole window.
pub fn two_sided_through(
    system: &System,
    g: &ChainGraph,
    x: &SystemPoint,
    epsilon: &Rational,
    horizon: usize,
    mask: Option<&[bool]>,
    config: SearchConfig,
) -> Result<ShadowabilityReport> {
    if !system.is_invertible() {
        return Err(Error::NotInvertible(-(horizon as i64)));
    }
    let target = g.node_of(x)?;
    let ok = |v: usize| mask.is_none_or(|m| m[v]);
    // back[k][v]: v reaches x in exactly k steps through admitted nodes
    let rev = g.reversed();
    let mut back = vec![vec![false; g.len()]; horizon + 1];
    back[0][target] = ok(target);
    for k in 1..=horizon {
        for v in 0..g.len() {
            if back[k - 1][v] {
                for &u in rev.successors(v) {
                    if ok(u as usize) {
                        back[k][u as usize] = true;
                    }
                }
            }
        }
    }
    let allowed = |depth: usize, v: usize| {
        if !ok(v) {
            false
        } else if depth < horizon {
            back[horizon - depth][v]
        } else if depth == horizon {
            v == target
        } else {
            true
        }
    };
    let mut expansions = 0;
    let mut found = None;
    for start in (0..g.len()).filter(|&v| back[horizon][v]) {
        let (f, e) = search(g, epsilon, start, 2 * horizon, allowed, config)?;
        expansions += e;
        if let Some(p) = f {
            found = Some(p);
            break;
        }
    }
    build_report(
        system,
        g,
        Base::Point(x.clone()),
        epsilon,
        horizon,
        true,
        found.map(|p| (p, Some((horizon, x.clone())))),
        expansions,
    )
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class: Vec<usize>,
    pub reports: Vec<ShadowabilityReport>,
    /// True when every point passed with the same constants.
    pub uniform: bool,
}

/// Positive test, with one pair `(ε, δ)`, at every point of the chain class of `x`.
pub fn chain_class_shadowability(
    system: &System,
    x: &SystemPoint,
    epsilon: &Rational,
    delta: &Rational,
    horizon: usize,
) -> Result<ClassReport> {
    let g = search_graph(system, delta, epsilon)?;
    let class = g.chain_class(g.node_of(x)?)?;
    let reports = class
        .par_iter()
        .map(|&v| {
            let p = if g.node_of(x)? == v { x.clone() } else { g.representative(v)? };
            positive_on_graph(system, &g, &p, epsilon, horizon, SearchConfig::default())
        })
        .collect::<Result<Vec<_>>>()?;
    let uniform = reports.iter().all(|r| r.is_shadowable());
    Ok(ClassReport { class, reports, uniform })
}

/// Two-sided window test for pseudo-orbits that stay inside the chain class
/// of `x`.
pub fn h_class_two_sided_shadowing(
    system: &System,
    x: &SystemPoint,
    epsilon: &Rational,
    delta: &Rational,
    horizon: usize,
) -> Result<ShadowabilityReport> {
    let g = search_graph(system, delta, epsilon)?;
    let class = g.chain_class(g.node_of(x)?)?;
    let mut mask = vec![false; g.len()];
    for &v in &class {
        mask[v] = true;
    }
    shadowing_on_graph(
        system,
        &g,
        epsilon,
        horizon,
        true,
        Some(&mask),
        Base::Class(x.clone()),
        SearchConfig::default(),
    )
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniformDelta {
    #[serde(with = "rational::serde_rat")]
    pub delta: Rational,
    /// Per-point largest passing δ on the ladder.
    #[serde(with = "rational::serde_rat_vec")]
    pub pointwise: Vec<Rational>,
    /// Refinement steps taken after the pointwise minimum.
    pub refinements: usize,
}

/// Candidate δ values, decreasing: net distance values at or above the mesh,
/// or `2^-k` on subshifts.
pub fn delta_ladder(system: &System, max_exponent: u32) -> Vec<Rational> {
    match system {
        System::Net(n) => {
            let mut nums: Vec<u64> = (0..n.len())
                .flat_map(|i| (0..n.len()).map(move |j| (i, j)))
                .map(|(i, j)| n.dist_num(i, j))
                .collect();
            nums.sort_unstable();
            nums.dedup();
            let mesh = n.resolution();
            nums.into_iter()
                .rev()
                .map(|d| Rational::new(d.into(), n.denominator().into()))
                .filter(|d| d >= mesh)
                .collect()
        }
        System::Symbolic(_) => (1..=max_exponent).map(rational::pow2_neg).collect(),
    }
}

/// One δ such that every δ-pseudo-orbit starting within δ of `K` is
/// ε-shadowed up to `horizon`: per-point maxima on the ladder, then their
/// minimum, lowered further until the whole δ-neighbourhood passes.
pub fn uniform_delta_for_set(
    system: &System,
    k: &[SystemPoint],
    epsilon: &Rational,
    horizon: usize,
) -> Result<UniformDelta> {
    let ladder = delta_ladder(system, 16);
    if ladder.is_empty() || k.is_empty() {
        return Err(Error::InvalidArgument("empty point set or δ ladder".into()));
    }
    let passes = |x: &SystemPoint, d: &Rational| -> Result<bool> {
        Ok(is_positively_shadowable_at(system, x, epsilon, d, horizon)?.is_shadowable())
    };
    let pointwise = k
        .par_iter()
        .map(|x| {
            // shadowability is monotone in δ, so binary search the ladder
            let (mut lo, mut hi) = (0usize, ladder.len());
            if !passes(x, &ladder[ladder.len() - 1])? {
                return Err(Error::NotFound(format!("{x} fails at every δ down to the mesh")));
            }
            while lo < hi {
                let mid = (lo + hi) / 2;
                if passes(x, &ladder[mid])? {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            Ok(ladder[lo].clone())
        })
        .collect::<Result<Vec<_>>>()?;
    let min = pointwise.iter().min().unwrap().clone();
    let mut pos = ladder.iter().position(|d| *d == min).unwrap();
    let mut refinements = 0;
    loop {
        let d = &ladder[pos];
        if neighbourhood_passes(system, k, epsilon, d, horizon)? {
            return Ok(UniformDelta { delta: d.clone(), pointwise, refinements });
        }
        pos += 1;
        refinements += 1;
        if pos >= ladder.len() {
            return Err(Error::NotFound("no δ on the ladder covers the neighbourhood".into()));
        }
    }
}

fn neighbourhood_passes(
    system: &System,
    k: &[SystemPoint],
    epsilon: &Rational,
    delta: &Rational,
    horizon: usize,
) -> Result<bool> {
    let g = search_graph(system, delta, epsilon)?;
    let mut mask = vec![false; g.len()];
    match g.nodes() {
        Nodes::Net(n) => {
            let thr = n.threshold(delta).unwrap();
            for x in k {
                let xi = x.as_net().ok_or_else(|| Error::ForeignPoint(x.to_string()))?;
                for (v, m) in mask.iter_mut().enumerate() {
                    if n.dist_num(v, xi) <= thr {
                        *m = true;
                    }
                }
            }
        }
        Nodes::Words { radius, words, .. } => {
            let t = rational::dyadic_exponent(delta)? as usize;
            for x in k {
                let q = x.as_symbolic().ok_or_else(|| Error::ForeignPoint(x.to_string()))?;
                let c = q.central_word(*radius as i64);
                for (v, w) in words.iter().enumerate() {
                    // within δ: agreement on |j| <= t - 1
                    if t == 0 || w[radius + 1 - t..radius + t] == c[radius + 1 - t..radius + t] {
                        mask[v] = true;
                    }
                }
            }
        }
    }
    let starts: Vec<usize> = (0..g.len()).filter(|&v| mask[v]).collect();
    let failures = starts
        .par_iter()
        .map(|&v| Ok(search(&g, epsilon, v, horizon, |_, _| true, SearchConfig::default())?.0.is_some()))
        .collect::<Result<Vec<bool>>>()?;
    Ok(!failures.into_iter().any(|f| f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use crate::space::DistanceSpec;

    #[test]
    fn orbit_shadows_itself() {
        let sys = System::Symbolic(SymbolicSystem::golden_mean());
        let x: SystemPoint = SymbolicPoint::periodic(2, &[0, 1, 0]).unwrap().into();
        let po = PseudoOrbit::orbit(&sys, &x, 7).unwrap();
        assert!(shadows(&sys, &x, &po, &rat(0, 1)).unwrap().is_some());
        let w = find_shadow(&sys, &po, &rat(1, 8)).unwrap().unwrap();
        assert!(w.verify(&sys, &po).unwrap());
    }

    #[test]
    fn full_shift_positive() {
        let sys = System::Symbolic(SymbolicSystem::full_shift(2).unwrap());
        let x: SystemPoint = SymbolicPoint::periodic(2, &[0, 1, 1]).unwrap().into();
        let r = is_positively_shadowable_at(&sys, &x, &rat(1, 4), &rat(1, 16), 10).unwrap();
        assert!(r.is_shadowable());
    }

    #[test]
    fn coarse_delta_fails_on_full_shift() {
        let sys = System::Symbolic(SymbolicSystem::full_shift(2).unwrap());
        let r = has_shadowing_at_resolution(&sys, &rat(1, 2), &rat(1, 4), 3, false).unwrap();
        assert_eq!(r.verdict, Verdict::Counterexample);
        assert!(r.recheck(&sys).unwrap());
    }

    #[test]
    fn one_point_system() {
        let n = NetSystem::new(
            DistanceSpec::Scaled { denominator: 1, numerators: vec![vec![0]] },
            vec![0],
            true,
            rat(1, 1),
            vec![],
        )
        .unwrap();
        let sys = System::Net(n);
        for d in [rat(0, 1), rat(5, 1)] {
            assert!(has_shadowing_at_resolution(&sys, &d, &rat(0, 1), 4, true).unwrap().is_shadowable());
        }
    }

    #[test]
    fn rotation_reverse_chain_is_caught() {
        // identity circle: chains can drift, orbits cannot
        let angles = (0..40).map(|i| rat(i, 40)).collect();
        let n = NetSystem::new(DistanceSpec::Circle { angles }, (0..40).collect(), true, rat(1, 40), vec![]).unwrap();
        let sys = System::Net(n);
        let r = has_shadowing_at_resolution(&sys, &rat(1, 40), &rat(1, 10), 10, false).unwrap();
        assert_eq!(r.verdict, Verdict::Counterexample);
        assert!(r.recheck(&sys).unwrap());
    }
}
