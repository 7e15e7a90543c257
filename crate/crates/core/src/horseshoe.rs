//! Semi-horseshoes from families of separated pseudo-orbit loops: loop
//! search, word-by-word shadow coding, and the two recipes producing loop
//! families from a non-minimal or a sensitive chain class.

use num_integer::Integer;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{build_chain_graph, ChainGraph};
use crate::entropy::{separated_set, SeparationMethod};
use crate::error::{Error, Result};
use crate::measure::{period_of, primitive_cycles};
use crate::orbit::{OrbitKind, PseudoOrbit};
use crate::rational::{self, int, Rational};
use crate::shadow::{find_shadow, ShadowWitness};
use crate::space::{SymbolicPoint, System, SystemPoint};

/// Cap on loop candidates examined by [`find_loop_family`].
const LOOP_CANDIDATES: usize = 256;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparationWitness {
    pub a: usize,
    pub b: usize,
    pub index: usize,
    #[serde(with = "rational::serde_rat")]
    pub distance: Rational,
}

/// `k` δ-pseudo-orbit loops at a common base point with a common step count
/// `n`, pairwise more than `4ε` apart at some index.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopFamily {
    pub base_point: SystemPoint,
    pub loops: Vec<PseudoOrbit>,
    #[serde(with = "rational::serde_rat")]
    pub delta: Rational,
    #[serde(with = "rational::serde_rat")]
    pub epsilon: Rational,
    pub separation_witnesses: Vec<SeparationWitness>,
}

/// Repeats each loop up to the least common multiple of the step counts.
pub fn equalize(loops: &[PseudoOrbit]) -> Result<Vec<PseudoOrbit>> {
    let n = loops.iter().fold(1usize, |acc, l| acc.lcm(&l.step_count()));
    loops.iter().map(|l| l.repeat(n / l.step_count())).collect()
}

fn first_separation(system: &System, a: &PseudoOrbit, b: &PseudoOrbit, bound: &Rational) -> Result<Option<(usize, Rational)>> {
    for (i, (p, q)) in a.points().iter().zip(b.points()).enumerate() {
        let d = system.distance(p, q)?;
        if &d > bound {
            return Ok(Some((i, d)));
        }
    }
    Ok(None)
}

impl LoopFamily {
    /// Equalizes the loops and records a separation witness for every pair;
    /// fails when some pair is never `4ε` apart.
    pub fn new(system: &System, base: SystemPoint, loops: &[PseudoOrbit], delta: Rational, epsilon: Rational) -> Result<Self> {
        Self::build(system, base, loops, delta, epsilon, None)
    }

    /// As [`LoopFamily::new`], recording the witness for the first pair at
    /// `preferred` when that index separates.
    fn build(
        system: &System,
        base: SystemPoint,
        loops: &[PseudoOrbit],
        delta: Rational,
        epsilon: Rational,
        preferred: Option<usize>,
    ) -> Result<Self> {
        if loops.is_empty() {
            return Err(Error::InvalidArgument("a loop family needs at least one loop".into()));
        }
        let loops = equalize(loops)?;
        let bound = &epsilon * int(4);
        let mut separation_witnesses = Vec::new();
        for a in 0..loops.len() {
            for b in a + 1..loops.len() {
                if let (0, 1, Some(i)) = (a, b, preferred) {
                    let d = system.distance(&loops[0].points()[i], &loops[1].points()[i])?;
                    if d > bound {
                        separation_witnesses.push(SeparationWitness { a, b, index: i, distance: d });
                        continue;
                    }
                }
                let (index, distance) = first_separation(system, &loops[a], &loops[b], &bound)?
                    .ok_or_else(|| Error::NotFound(format!("loops {a} and {b} are never 4ε apart")))?;
                separation_witnesses.push(SeparationWitness { a, b, index, distance });
            }
        }
        let fam = LoopFamily { base_point: base, loops, delta, epsilon, separation_witnesses };
        fam.check(system)?;
        Ok(fam)
    }

    pub fn k(&self) -> usize {
        self.loops.len()
    }

    pub fn n(&self) -> usize {
        self.loops[0].step_count()
    }

    /// Re-verifies every stated property of the family.
    pub fn check(&self, system: &System) -> Result<()> {
        let n = self.loops.first().ok_or_else(|| Error::InvalidArgument("empty family".into()))?.step_count();
        for l in &self.loops {
            if !l.is_loop() || l.first() != &self.base_point {
                return Err(Error::NotALoop);
            }
            if l.step_count() != n {
                return Err(Error::InvalidArgument("loops have different step counts".into()));
            }
            if l.delta() > &self.delta {
                return Err(Error::InvalidArgument("loop certified at a coarser delta".into()));
            }
            let mut relabeled = l.clone();
            relabeled = PseudoOrbit::from_parts(relabeled.into_points(), self.delta.clone(), OrbitKind::Loop);
            relabeled.check(system)?;
        }
        let bound = &self.epsilon * int(4);
        let k = self.loops.len();
        if self.separation_witnesses.len() != k * (k - 1) / 2 {
            return Err(Error::InvalidArgument("missing separation witnesses".into()));
        }
        for w in &self.separation_witnesses {
            if w.a >= k || w.b >= k || w.a == w.b || w.index > n {
                return Err(Error::InvalidArgument("malformed separation witness".into()));
            }
            let d = system.distance(&self.loops[w.a].points()[w.index], &self.loops[w.b].points()[w.index])?;
            if d != w.distance || d <= bound {
                return Err(Error::InvalidArgument(format!("witness for loops {} and {} fails", w.a, w.b)));
            }
        }
        let mut pairs: Vec<(usize, usize)> = self.separation_witnesses.iter().map(|w| (w.a.min(w.b), w.a.max(w.b))).collect();
        pairs.sort_unstable();
        pairs.dedup();
        if pairs.len() != k * (k - 1) / 2 {
            return Err(Error::InvalidArgument("duplicate separation witnesses".into()));
        }
        Ok(())
    }

    /// The pseudo-orbit `X_{w_0} X_{w_1} ⋯` for a nonempty word.
    pub fn word_orbit(&self, system: &System, word: &[u8]) -> Result<PseudoOrbit> {
        if word.is_empty() {
            return Err(Error::InvalidArgument("empty word".into()));
        }
        let mut pts = vec![self.base_point.clone()];
        for &s in word {
            let l = self.loops.get(s as usize).ok_or(Error::SymbolOutOfRange { symbol: s, alphabet: self.k() as u8 })?;
            pts.extend(l.points()[1..].iter().cloned());
        }
        let po = PseudoOrbit::from_parts(pts, self.delta.clone(), OrbitKind::Loop);
        po.check(system)?;
        Ok(po)
    }
}

/// Searches the δ-chain graph for `k` loops at `x`, pairwise `4ε`-separated
/// after equalizing their lengths to some `n <= n_max`.
///
/// Candidates are the shortest loop at `x` and, for each node `v` of its
/// class (farthest from `x` first), the shortest loop `x → v → x`. Loops are
/// taken greedily.
pub fn find_loop_family(
    system: &System,
    x: &SystemPoint,
    epsilon: &Rational,
    delta: &Rational,
    n_max: usize,
    k: usize,
) -> Result<Option<LoopFamily>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    system.check_point(x)?;
    let g = build_chain_graph(system, delta)?;
    find_loop_family_on_graph(system, &g, x, epsilon, n_max, k)
}

pub fn find_loop_family_on_graph(
    system: &System,
    g: &ChainGraph,
    x: &SystemPoint,
    epsilon: &Rational,
    n_max: usize,
    k: usize,
) -> Result<Option<LoopFamily>> {
    let start = g.node_of(x)?;
    let class = match g.chain_class(start) {
        Ok(c) => c,
        Err(Error::NotRecurrent(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let mut far: Vec<(Rational, usize)> = class
        .iter()
        .filter(|&&v| v != start)
        .map(|&v| Ok((system.distance(&g.representative(v)?, x)?, v)))
        .collect::<Result<_>>()?;
    far.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut paths: Vec<Vec<usize>> = Vec::new();
    if let Some(p) = g.shortest_path(start, start, 1, n_max) {
        paths.push(p);
    }
    for &(_, v) in far.iter().take(LOOP_CANDIDATES) {
        let (Some(there), Some(back)) = (g.shortest_path(start, v, 1, n_max), g.shortest_path(v, start, 1, n_max)) else {
            continue;
        };
        if there.len() + back.len() - 2 > n_max {
            continue;
        }
        let mut p = there;
        p.extend_from_slice(&back[1..]);
        paths.push(p);
    }
    let bound = epsilon * int(4);
    let mut chosen: Vec<PseudoOrbit> = Vec::new();
    for p in paths {
        if chosen.len() == k {
            break;
        }
        let cand = g.path_to_orbit(system, &p, Some(x), Some(x))?.close()?;
        let mut trial = chosen.clone();
        trial.push(cand);
        let n = trial.iter().fold(1usize, |acc, l| acc.lcm(&l.step_count()));
        if n > n_max {
            continue;
        }
        let eq = equalize(&trial)?;
        let last = eq.len() - 1;
        let mut ok = true;
        for a in 0..last {
            if first_separation(system, &eq[a], &eq[last], &bound)?.is_none() {
                ok = false;
                break;
            }
        }
        if ok {
            chosen = trial;
        }
    }
    if chosen.len() < k {
        return Ok(None);
    }
    LoopFamily::new(system, x.clone(), &chosen, g.delta().clone(), epsilon.clone()).map(Some)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodedWord {
    pub word: Vec<u8>,
    pub witness: ShadowWitness,
}

/// Shadow witnesses for every word of length `1..=factor_depth` over the
/// loop alphabet, stamped with the system they were computed on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorseshoeCertificate {
    pub system_hash: String,
    pub family: LoopFamily,
    pub factor_depth: usize,
    pub coded: Vec<CodedWord>,
    /// `log(k) / n`.
    pub entropy_lower_bound: f64,
    /// Loop lengths are equalized by least common multiple.
    pub equalization: String,
}

/// Every word over `0..k` of length `1..=max_len`, shorter words first and
/// lexicographic within a length.
pub fn words_up_to(k: usize, max_len: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<u8>> = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|w| {
                (0..k as u8).map(move |s| {
                    let mut v = w.clone();
                    v.push(s);
                    v
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

/// Codes every word of length `<= word_length_max` by an ε-shadow of its
/// loop concatenation. Aborts with the first word (in enumeration order)
/// that has no shadow.
pub fn build_certificate(system: &System, family: &LoopFamily, word_length_max: usize) -> Result<HorseshoeCertificate> {
    family.check(system)?;
    let words = words_up_to(family.k(), word_length_max);
    let found: Vec<Result<Option<ShadowWitness>>> = words
        .par_iter()
        .map(|w| find_shadow(system, &family.word_orbit(system, w)?, &family.epsilon))
        .collect();
    let mut coded = Vec::with_capacity(words.len());
    for (w, r) in words.into_iter().zip(found) {
        match r? {
            Some(witness) => coded.push(CodedWord { word: w, witness }),
            None => return Err(Error::Unshadowed { word: w.into_iter().map(usize::from).collect() }),
        }
    }
    Ok(HorseshoeCertificate {
        system_hash: system.hash(),
        entropy_lower_bound: (family.k() as f64).ln() / family.n() as f64,
        family: family.clone(),
        factor_depth: word_length_max,
        coded,
        equalization: "lcm".into(),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SemiconjugacyReport {
    pub checked: usize,
    pub failures: Vec<Vec<u8>>,
}

impl SemiconjugacyReport {
    pub fn passes(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificateCheck {
    pub hash_matches: bool,
    pub family_valid: bool,
    pub all_words_coded: bool,
    pub tracing_failures: Vec<Vec<u8>>,
    pub semiconjugacy: SemiconjugacyReport,
    /// Maximum `(n·L, 2ε)`-separated subset of the coded points of length
    /// `L = factor_depth`.
    pub separated_count: u128,
    pub separated_exact: bool,
    pub expected_count: u128,
    pub measured_entropy: f64,
}

impl CertificateCheck {
    pub fn passes(&self) -> bool {
        self.hash_matches
            && self.family_valid
            && self.all_words_coded
            && self.tracing_failures.is_empty()
            && self.semiconjugacy.passes()
            && self.separated_count == self.expected_count
    }
}

impl HorseshoeCertificate {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn k(&self) -> usize {
        self.family.k()
    }

    pub fn n(&self) -> usize {
        self.family.n()
    }

    /// The lemma's tracing clause for one coded word:
    /// `d(f^{sn+i}(z_w), x^{w_s}_i) <= ε` for `s < |w|`, `0 <= i <= n`.
    pub fn traces(&self, system: &System, cw: &CodedWord) -> Result<bool> {
        let n = self.n();
        let z = &cw.witness.shadow_point;
        for (s, &sym) in cw.word.iter().enumerate() {
            let l = self.family.loops.get(sym as usize).ok_or(Error::SymbolOutOfRange { symbol: sym, alphabet: self.k() as u8 })?;
            for (i, p) in l.points().iter().enumerate() {
                if system.distance_shifted(z, (s * n + i) as i64, p, 0)? > self.family.epsilon {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Re-verifies the certificate from its serialized contents alone.
    pub fn recheck(&self, system: &System) -> Result<CertificateCheck> {
        let hash_matches = self.system_hash == system.hash();
        let family_valid = self.family.check(system).is_ok();
        let expected_words = words_up_to(self.k(), self.factor_depth);
        let stored: Vec<&Vec<u8>> = self.coded.iter().map(|c| &c.word).collect();
        let all_words_coded = stored.len() == expected_words.len() && stored.iter().zip(&expected_words).all(|(a, b)| *a == b);
        let trace: Vec<Result<bool>> = self.coded.par_iter().map(|c| self.traces(system, c)).collect();
        let mut tracing_failures = Vec::new();
        for (c, t) in self.coded.iter().zip(trace) {
            if !t? {
                tracing_failures.push(c.word.clone());
            }
        }
        let semiconjugacy = verify_semiconjugacy(system, self)?;
        let top: Vec<SystemPoint> = self
            .coded
            .iter()
            .filter(|c| c.word.len() == self.factor_depth)
            .map(|c| c.witness.shadow_point.clone())
            .collect();
        let expected_count = if self.factor_depth == 0 { 0 } else { (self.k() as u128).pow(self.factor_depth as u32) };
        let (separated_count, separated_exact) = if top.is_empty() {
            (0, true)
        } else {
            let r = separated_set(system, Some(&top), self.n() * self.factor_depth, &(&self.family.epsilon * int(2)), true)?;
            (r.cardinality, r.method == SeparationMethod::Clique)
        };
        let measured_entropy = if separated_count > 0 && self.factor_depth > 0 {
            (separated_count as f64).ln() / (self.n() * self.factor_depth) as f64
        } else {
            0.0
        };
        Ok(CertificateCheck {
            hash_matches,
            family_valid,
            all_words_coded,
            tracing_failures,
            semiconjugacy,
            separated_count,
            separated_exact,
            expected_count,
            measured_entropy,
        })
    }
}

/// For each stored word `w = a·w'`, checks that `f^n` of the coded point of
/// `w` is ε-traced along the loops of `w'`.
pub fn verify_semiconjugacy(system: &System, cert: &HorseshoeCertificate) -> Result<SemiconjugacyReport> {
    let n = cert.n();
    let eps = &cert.family.epsilon;
    let results: Vec<Result<Option<Vec<u8>>>> = cert
        .coded
        .par_iter()
        .filter(|c| c.word.len() >= 2)
        .map(|c| {
            let z = system.apply(&c.witness.shadow_point, n as i64)?;
            for (s, &sym) in c.word[1..].iter().enumerate() {
                let l = cert.family.loops.get(sym as usize).ok_or(Error::SymbolOutOfRange { symbol: sym, alphabet: cert.k() as u8 })?;
                for (i, p) in l.points().iter().enumerate() {
                    if &system.distance_shifted(&z, (s * n + i) as i64, p, 0)? > eps {
                        return Ok(Some(c.word.clone()));
                    }
                }
            }
            Ok(None)
        })
        .collect();
    let mut report = SemiconjugacyReport { checked: results.len(), failures: Vec::new() };
    for r in results {
        if let Some(w) = r? {
            report.failures.push(w);
        }
    }
    Ok(report)
}

/// Checks that `k_set` is exactly one periodic orbit.
fn check_cycle_set(system: &System, k_set: &[SystemPoint]) -> Result<usize> {
    let first = k_set.first().ok_or_else(|| Error::InvalidArgument("empty cycle set".into()))?;
    let q = period_of(system, first)?;
    let mut orbit: Vec<SystemPoint> = (0..q).map(|i| system.apply(first, i as i64)).collect::<Result<_>>()?;
    let mut given = k_set.to_vec();
    let key = |p: &SystemPoint| p.to_string();
    orbit.sort_by_key(key);
    given.sort_by_key(key);
    given.dedup();
    if orbit != given {
        return Err(Error::InvalidArgument("K must be a single periodic orbit".into()));
    }
    Ok(q)
}

fn distance_to_set(system: &System, z: &SystemPoint, set: &[SystemPoint]) -> Result<Rational> {
    let mut best: Option<Rational> = None;
    for p in set {
        let d = system.distance(z, p)?;
        if best.as_ref().is_none_or(|b| &d < b) {
            best = Some(d);
        }
    }
    Ok(best.unwrap_or_else(Rational::zero))
}

/// Two loops at a point `z` of the class off the cycle set `K`: `C1`, the
/// shortest chain loop at `z`, and `C2 = A1 A3 ⋯ A3 A2`, which travels to
/// `K`, dwells on its orbit and returns, with `ε = d(z, K)/5`.
///
/// `z` defaults to the class point farthest from `K` on nets and to `x` on
/// subshifts.
pub fn nonminimal_recipe(
    system: &System,
    x: &SystemPoint,
    k_set: &[SystemPoint],
    delta: &Rational,
    z: Option<&SystemPoint>,
    max_len: usize,
) -> Result<LoopFamily> {
    let q = check_cycle_set(system, k_set)?;
    let g = build_chain_graph(system, delta)?;
    let class = g.chain_class(g.node_of(x)?).map_err(|_| Error::Inapplicable("x is not chain recurrent".into()))?;
    let k_nodes: Vec<usize> = k_set.iter().map(|p| g.node_of(p)).collect::<Result<_>>()?;
    if !k_nodes.iter().all(|n| class.contains(n)) {
        return Err(Error::Inapplicable("K is not inside the chain class of x".into()));
    }
    let z = match z {
        Some(z) => {
            if !class.contains(&g.node_of(z)?) {
                return Err(Error::Inapplicable("z is not in the chain class of x".into()));
            }
            z.clone()
        }
        None => match system {
            System::Net(_) => {
                let mut best: Option<(Rational, usize)> = None;
                for &v in &class {
                    let d = distance_to_set(system, &SystemPoint::Net(v), k_set)?;
                    if best.as_ref().is_none_or(|b| d > b.0) {
                        best = Some((d, v));
                    }
                }
                SystemPoint::Net(best.map(|b| b.1).unwrap_or(0))
            }
            System::Symbolic(_) => x.clone(),
        },
    };
    let dz = distance_to_set(system, &z, k_set)?;
    if dz.is_zero() {
        return Err(Error::Inapplicable("the chain class coincides with K at this resolution".into()));
    }
    let eps = &dz / int(5);
    if delta * int(4) >= eps {
        return Err(Error::InvalidArgument(format!(
            "need 4δ < ε = {}, got δ = {}",
            rational::fmt(&eps),
            rational::fmt(delta)
        )));
    }
    let zn = g.node_of(&z)?;
    let y = &k_set[0];
    let yn = g.node_of(y)?;
    let c1_path = g.shortest_path(zn, zn, 1, max_len).ok_or_else(|| Error::NotFound("no chain loop at z".into()))?;
    let c1 = g.path_to_orbit(system, &c1_path, Some(&z), Some(&z))?.close()?;
    let a1_path = g.shortest_path(zn, yn, 1, max_len).ok_or_else(|| Error::NotFound("no chain from z to K".into()))?;
    let a2_path = g.shortest_path(yn, zn, 1, max_len).ok_or_else(|| Error::NotFound("no chain from K to z".into()))?;
    let a1 = g.path_to_orbit(system, &a1_path, Some(&z), Some(y))?;
    let a2 = g.path_to_orbit(system, &a2_path, Some(y), Some(&z))?;
    let c1n = c1.step_count();
    // enough turns around K that some multiple of |C1| lands on K
    let turns = c1n.div_ceil(q).max(1);
    let a3 = PseudoOrbit::orbit(system, y, q * turns)?;
    let at_k = a1.step_count().div_ceil(c1n) * c1n;
    let c2 = a1.concatenate(&a3, system)?.concatenate(&a2, system)?.close()?;
    LoopFamily::build(system, z, &[c1, c2], delta.clone(), eps, Some(at_k))
}

/// Periodic points of period `<= max_period` agreeing with `x` on
/// `|j| <= radius`.
pub fn cylinder_periodic_points(system: &System, x: &SystemPoint, radius: usize, max_period: usize) -> Result<Vec<SystemPoint>> {
    let (System::Symbolic(sys), SystemPoint::Symbolic(xp)) = (system, x) else {
        return Err(Error::InvalidArgument("cylinders need a symbolic system".into()));
    };
    let r = radius as i64;
    let centre = xp.central_word(r);
    let mut out = Vec::new();
    for p in 1..=max_period {
        for w in primitive_cycles(sys, p) {
            let pt = SymbolicPoint::periodic(sys.alphabet_size(), &w)?;
            if pt.central_word(r) == centre {
                out.push(SystemPoint::Symbolic(pt));
            }
        }
    }
    Ok(out)
}

/// Two loops `x, f(y), …, f^{n_y-1}(y), x` and the same through `z`, for
/// `y, z ∈ U` whose orbits are more than `C` apart at some time `m` and
/// that return within δ of `x` after `m`.
#[allow(clippy::too_many_arguments)]
pub fn sensitive_recipe(
    system: &System,
    x: &SystemPoint,
    u: &[SystemPoint],
    c: &Rational,
    epsilon: &Rational,
    delta: &Rational,
    max_time: usize,
) -> Result<LoopFamily> {
    if epsilon * int(4) >= *c {
        return Err(Error::InvalidArgument("need ε < C/4".into()));
    }
    system.check_point(x)?;
    let fx = system.image(x)?;
    // loop through y, if its orbit returns near x after time m
    let loop_from = |y: &SystemPoint, m: usize| -> Result<Option<PseudoOrbit>> {
        if &system.distance_shifted(y, 1, &fx, 0)? > delta {
            return Ok(None);
        }
        for t in m + 1..=max_time {
            if &system.distance_shifted(y, t as i64, x, 0)? <= delta {
                let mut pts = vec![x.clone()];
                for i in 1..t {
                    pts.push(system.apply(y, i as i64)?);
                }
                pts.push(x.clone());
                return PseudoOrbit::validate_loop(system, pts, delta.clone()).map(Some);
            }
        }
        Ok(None)
    };
    let mut diverged = false;
    for a in 0..u.len() {
        for b in a + 1..u.len() {
            let m = (1..max_time).find_map(|t| match system.distance_shifted(&u[a], t as i64, &u[b], t as i64) {
                Ok(d) if &d > c => Some(Ok(t)),
                Ok(_) => None,
                Err(e) => Some(Err(e)),
            });
            let Some(m) = m.transpose()? else { continue };
            diverged = true;
            if let (Some(c1), Some(c2)) = (loop_from(&u[a], m)?, loop_from(&u[b], m)?) {
                return LoopFamily::new(system, x.clone(), &[c1, c2], delta.clone(), epsilon.clone());
            }
        }
    }
    if diverged {
        Err(Error::NotFound("no diverging pair returns within the time budget".into()))
    } else {
        Err(Error::Inapplicable("no pair in U separates beyond C within the horizon".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::fig1_circle;
    use crate::rational::rat;
    use crate::space::{DistanceSpec, NetSystem, SymbolicSystem};

    fn sigma2() -> System {
        System::Symbolic(SymbolicSystem::full_shift(2).unwrap())
    }

    fn sym(p: SymbolicPoint) -> SystemPoint {
        SystemPoint::Symbolic(p)
    }

    fn two_loop_family() -> LoopFamily {
        let s = sigma2();
        let x = sym(SymbolicPoint::constant(2, 0).unwrap());
        find_loop_family(&s, &x, &rat(1, 5), &rat(1, 8), 16, 2).unwrap().unwrap()
    }

    #[test]
    fn sigma2_two_loops() {
        let s = sigma2();
        let fam = two_loop_family();
        assert_eq!(fam.k(), 2);
        let w = &fam.separation_witnesses[0];
        assert_eq!(w.distance, rat(1, 1));
        fam.check(&s).unwrap();
        // the separating loop reads a 1 at coordinate 0 at the witness index
        let p = fam.loops[1].points()[w.index].as_symbolic().unwrap().clone();
        assert_eq!(p.coord(0), 1);
    }

    #[test]
    fn single_loop_is_trivial() {
        let s = sigma2();
        let x = sym(SymbolicPoint::constant(2, 0).unwrap());
        let fam = find_loop_family(&s, &x, &rat(1, 5), &rat(1, 8), 16, 1).unwrap().unwrap();
        assert!(fam.separation_witnesses.is_empty());
        let cert = build_certificate(&s, &fam, 3).unwrap();
        assert_eq!(cert.entropy_lower_bound, 0.0);
        assert_eq!(cert.coded.len(), 3);
    }

    #[test]
    fn fig1_has_no_family() {
        let s = System::Net(fig1_circle(360).unwrap());
        let r = find_loop_family(&s, &SystemPoint::Net(0), &rat(1, 20), &rat(1, 100), 64, 2).unwrap();
        assert!(r.is_none());
    }

    #[test]
    fn certificate_roundtrip() {
        let s = sigma2();
        let fam = two_loop_family();
        let cert = build_certificate(&s, &fam, 4).unwrap();
        assert_eq!(cert.coded.len(), 2 + 4 + 8 + 16);
        let back = HorseshoeCertificate::from_json(&cert.to_json().unwrap()).unwrap();
        assert_eq!(back.coded, cert.coded);
        assert_eq!(back.family, cert.family);
        let chk = back.recheck(&s).unwrap();
        assert!(chk.passes(), "{chk:?}");
        assert_eq!(chk.separated_count, 16);
        assert!((cert.entropy_lower_bound - 2f64.ln() / fam.n() as f64).abs() < 1e-15);
    }

    #[test]
    fn empty_coding() {
        let s = sigma2();
        let cert = build_certificate(&s, &two_loop_family(), 0).unwrap();
        assert!(cert.coded.is_empty());
        assert!(cert.entropy_lower_bound > 0.0);
    }

    #[test]
    fn corrupted_point_fails() {
        let s = sigma2();
        let mut cert = build_certificate(&s, &two_loop_family(), 3).unwrap();
        let i = cert.coded.iter().position(|c| c.word == vec![0, 1, 1]).unwrap();
        let j = cert.coded.iter().position(|c| c.word == vec![0, 0, 0]).unwrap();
        cert.coded[i].witness.shadow_point = cert.coded[j].witness.shadow_point.clone();
        let rep = verify_semiconjugacy(&s, &cert).unwrap();
        assert_eq!(rep.failures, vec![vec![0, 1, 1]]);
        assert!(!cert.recheck(&s).unwrap().passes());
    }

    /// Circle of 100 points with fixed points at 0 and 50; everything else
    /// moves one step counter-clockwise.
    fn figure_eight() -> System {
        let angles: Vec<Rational> = (0..100).map(|i| rat(i, 100)).collect();
        let map: Vec<usize> = (0..100).map(|i| if i == 0 || i == 50 { i } else { (i + 1) % 100 }).collect();
        System::Net(NetSystem::new(DistanceSpec::Circle { angles }, map, false, rat(1, 100), vec![]).unwrap())
    }

    #[test]
    fn nonminimal_figure_eight() {
        let s = figure_eight();
        let p = SystemPoint::Net(0);
        let fam = nonminimal_recipe(&s, &p, &[p.clone()], &rat(1, 100), None, 400).unwrap();
        assert_eq!(fam.base_point, SystemPoint::Net(50));
        assert_eq!(fam.epsilon, rat(1, 10));
        let w = &fam.separation_witnesses[0];
        let pts: Vec<_> = fam.loops.iter().map(|l| l.points()[w.index].clone()).collect();
        assert!(pts.contains(&SystemPoint::Net(50)) && pts.contains(&SystemPoint::Net(0)));
    }

    #[test]
    fn nonminimal_golden_mean() {
        let s = System::Symbolic(SymbolicSystem::golden_mean());
        let k = sym(SymbolicPoint::constant(2, 0).unwrap());
        let z = sym(SymbolicPoint::periodic(2, &[0, 1]).unwrap());
        let fam = nonminimal_recipe(&s, &k, &[k.clone()], &rat(1, 64), Some(&z), 200).unwrap();
        fam.check(&s).unwrap();
        assert_eq!(fam.epsilon, rat(1, 10));
    }

    #[test]
    fn nonminimal_fig1_inapplicable() {
        let s = System::Net(fig1_circle(360).unwrap());
        let x = SystemPoint::Net(0);
        let r = nonminimal_recipe(&s, &x, &[x.clone()], &rat(1, 1000), None, 100);
        assert!(matches!(r, Err(Error::Inapplicable(_))), "{r:?}");
    }

    #[test]
    fn sensitive_sigma2() {
        let s = sigma2();
        let x = sym(SymbolicPoint::periodic(2, &[0, 0, 1]).unwrap());
        let u = cylinder_periodic_points(&s, &x, 1, 6).unwrap();
        assert!(u.len() > 2);
        let fam = sensitive_recipe(&s, &x, &u, &rat(1, 2), &rat(1, 10), &rat(1, 2), 24).unwrap();
        assert_eq!(fam.k(), 2);
        let small = sensitive_recipe(&s, &x, &u, &rat(1, 2), &rat(1, 10), &rat(1, 2), 1);
        assert!(small.is_err());
    }

    #[test]
    fn sensitive_identity_inapplicable() {
        let angles: Vec<Rational> = (0..12).map(|i| rat(i, 12)).collect();
        let s = System::Net(NetSystem::new(DistanceSpec::Circle { angles }, (0..12).collect(), true, rat(1, 12), vec![]).unwrap());
        let u: Vec<SystemPoint> = (0..3).map(SystemPoint::Net).collect();
        let r = sensitive_recipe(&s, &SystemPoint::Net(1), &u, &rat(1, 3), &rat(1, 20), &rat(1, 12), 30);
        assert!(matches!(r, Err(Error::Inapplicable(_))));
    }

    #[test]
    fn word_enumeration() {
        let w = words_up_to(2, 3);
        assert_eq!(w.len(), 14);
        assert_eq!(w[0], vec![0]);
        assert_eq!(w[2], vec![0, 0]);
        assert_eq!(w[13], vec![1, 1, 1]);
    }
}
