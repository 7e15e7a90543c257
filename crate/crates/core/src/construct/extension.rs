//! Extension of a minimal subshift by layers of vertex shifts times a
//! non-periodic minimal factor, truncated at a finite level.

use std::collections::{HashMap, HashSet};

use num_traits::Signed;
use serde::{Deserialize, Serialize};

use super::layered::{Layer, LayeredSpace};
use super::substitution::SubstitutionSubshift;
use crate::error::{Error, Result};
use crate::rational::{self, int, pow2_neg, pow3_neg, rat, Rational};
use crate::shadow::is_positively_shadowable_at;
use crate::space::{DistanceSpec, NetSystem, SymbolicPoint, SymbolicSystem, System, SystemPoint};

/// Cells of level `n`: central words of radius `m`, `2^-m <= 1/n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CylinderPartition {
    pub level: usize,
    pub depth: usize,
    pub cells: Vec<Vec<u8>>,
    /// A quarter of the least distance between distinct cells.
    #[serde(with = "rational::serde_rat")]
    pub gap: Rational,
}

pub fn depth_for_level(n: usize) -> usize {
    let mut m = 0;
    while (1usize << m) < n {
        m += 1;
    }
    m
}

impl CylinderPartition {
    pub fn new(x: &SubstitutionSubshift, level: usize) -> Result<Self> {
        let depth = depth_for_level(level);
        let cells = x.factors(2 * depth + 1);
        // two cylinders are 2^-k apart, k the least |j| where their words differ
        let mut least = int(1);
        let mut any = false;
        for (i, a) in cells.iter().enumerate() {
            for b in &cells[i + 1..] {
                let k = (0..=depth)
                    .find(|&r| a[depth + r] != b[depth + r] || a[depth - r] != b[depth - r])
                    .expect("distinct cells differ");
                let d = pow2_neg(k as u32);
                if !any || d < least {
                    least = d;
                    any = true;
                }
            }
        }
        if !any {
            return Err(Error::InvalidSystem("a single cell: the subshift is a fixed point".into()));
        }
        Ok(CylinderPartition { level, depth, cells, gap: least * rat(1, 4) })
    }

    /// Vertex shift with `U_i -> U_j` iff `T(U_i) ∩ U_j` is nonempty, i.e. some
    /// factor of length `2m + 2` starts with `U_i` and ends with `U_j`.
    pub fn vertex_shift(&self, x: &SubstitutionSubshift) -> Result<SymbolicSystem> {
        let k = self.cells.len();
        if k > u8::MAX as usize {
            return Err(Error::InvalidSystem("too many cells".into()));
        }
        let idx: HashMap<&[u8], usize> = self.cells.iter().enumerate().map(|(i, c)| (c.as_slice(), i)).collect();
        let mut t = vec![vec![false; k]; k];
        let l = 2 * self.depth + 1;
        for w in x.factors(l + 1) {
            t[idx[&w[..l]]][idx[&w[1..]]] = true;
        }
        SymbolicSystem::new(t)
    }
}

/// `Σ_{|j|<=4} q_j 3^{-(ρ(j)+1)} / n` with `ρ(j) = 2j` for `j >= 0` and
/// `-2j - 1` otherwise.
pub fn embed(q: &SymbolicPoint, n: usize) -> Rational {
    let mut v = int(0);
    for j in -4i64..=4 {
        let rho = if j >= 0 { 2 * j } else { -2 * j - 1 };
        if q.coord(j) != 0 {
            v += pow3_neg(rho as u32 + 1) * Rational::from_integer((q.coord(j) as i64).into());
        }
    }
    v * rat(1, n as i64)
}

#[derive(Clone, Debug)]
pub struct ExtensionSpace {
    pub layered: LayeredSpace,
    pub subshift: SubstitutionSubshift,
    pub partitions: Vec<CylinderPartition>,
    pub vertex_shifts: Vec<SymbolicSystem>,
    /// Symbolic coordinate, factor coordinate and height of every net point.
    pub coords: Vec<(SymbolicPoint, SymbolicPoint, usize)>,
    pub base_word: Vec<u8>,
    pub factor_word: Vec<u8>,
}

/// Periodic points of a vertex shift coming from closed paths of length at
/// most `max_period`, glued through the central symbols of the cells.
fn periodic_sample(x: &SymbolicSystem, part: &CylinderPartition, max_period: usize) -> Result<Vec<SymbolicPoint>> {
    let k = x.alphabet_size();
    let mut out: HashSet<SymbolicPoint> = HashSet::new();
    let mut stack: Vec<Vec<u8>> = (0..k).map(|a| vec![a]).collect();
    while let Some(path) = stack.pop() {
        let last = *path.last().unwrap();
        if x.allowed(last, path[0]) {
            let word: Vec<u8> = path.iter().map(|&c| part.cells[c as usize][part.depth]).collect();
            let p = SymbolicPoint::periodic(2, &word)?;
            for s in 0..word.len() as i64 {
                out.insert(p.shift(s));
            }
        }
        if path.len() < max_period {
            for b in 0..k {
                if x.allowed(last, b) {
                    let mut q = path.clone();
                    q.push(b);
                    stack.push(q);
                }
            }
        }
    }
    let mut v: Vec<SymbolicPoint> = out.into_iter().collect();
    v.sort_by_key(|p| (p.period().len(), p.period().to_vec()));
    Ok(v)
}

/// Builds the truncated extension of the Fibonacci-type subshift `x` for
/// levels `1..=n_max`. The base is the orbit of the periodic approximant of
/// length `base_period`; each layer `n` is the product of sampled periodic
/// points of the level-`n` vertex shift with the orbit of the approximant of
/// length `factor_period`, at height `1/n`.
pub fn extension_builder(x: &SubstitutionSubshift, n_max: usize) -> Result<ExtensionSpace> {
    build(x, n_max, 13, 8, 5)
}

pub fn build(
    x: &SubstitutionSubshift,
    n_max: usize,
    base_period: usize,
    factor_period: usize,
    max_cycle: usize,
) -> Result<ExtensionSpace> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("need at least one level".into()));
    }
    if !x.minimality_screen(12) {
        return Err(Error::InvalidSystem("subshift fails the minimality screen".into()));
    }
    let base_word = x.word(0, base_period as i64 - 1);
    let factor_word = x.word(0, factor_period as i64 - 1);
    let base_pt = SymbolicPoint::periodic(2, &base_word)?;
    let factor_pt = SymbolicPoint::periodic(2, &factor_word)?;
    let mut coords: Vec<(SymbolicPoint, SymbolicPoint, usize)> = Vec::new();
    let mut labels = Vec::new();
    let mut layers = Vec::new();
    let mut partitions = Vec::new();
    let mut shifts = Vec::new();
    let zero = SymbolicPoint::constant(2, 0)?;
    for n in 1..=n_max {
        let part = CylinderPartition::new(x, n)?;
        let xn = part.vertex_shift(x)?;
        let sample = periodic_sample(&xn, &part, max_cycle)?;
        let start = coords.len();
        for (a_i, a) in sample.iter().enumerate() {
            for s in 0..factor_period as i64 {
                coords.push((a.clone(), factor_pt.shift(s), n));
                labels.push(format!("Z{n}:{a_i}:{s}"));
            }
        }
        layers.push(Layer { label: format!("Z{n}"), height: rat(1, n as i64), points: (start..coords.len()).collect() });
        partitions.push(part);
        shifts.push(xn);
    }
    let base_start = coords.len();
    for s in 0..base_period as i64 {
        coords.push((base_pt.shift(s), zero.clone(), 0));
        labels.push(format!("X:{s}"));
    }
    let index: HashMap<(SymbolicPoint, SymbolicPoint, usize), usize> =
        coords.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
    let map = coords
        .iter()
        .map(|(a, q, h)| {
            let img = if *h == 0 { (a.shift(1), q.clone(), 0) } else { (a.shift(1), q.shift(1), *h) };
            index.get(&img).copied().ok_or_else(|| Error::InvalidSystem("sample is not invariant".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    let emb: Vec<Rational> = coords.iter().map(|(_, q, h)| if *h == 0 { int(0) } else { embed(q, *h) }).collect();
    let height = |h: usize| if h == 0 { int(0) } else { rat(1, h as i64) };
    let entries: Vec<Vec<Rational>> = coords
        .iter()
        .enumerate()
        .map(|(i, (a, _, h))| {
            coords
                .iter()
                .enumerate()
                .map(|(j, (b, _, g))| {
                    let ds = a.distance(b).expect("same alphabet");
                    let dq = (&emb[i] - &emb[j]).abs();
                    let dh = (height(*h) - height(*g)).abs();
                    ds.max(dq).max(dh)
                })
                .collect()
        })
        .collect();
    let spec = DistanceSpec::scaled_from(entries)?;
    let mut system = NetSystem::new_unchecked(spec, map, true, int(1), labels.clone())?;
    // stamp the mesh as the least positive distance
    let mesh = (0..system.len())
        .flat_map(|i| (0..system.len()).map(move |j| (i, j)))
        .map(|(i, j)| system.dist_num(i, j))
        .filter(|&d| d > 0)
        .min()
        .unwrap_or(system.denominator());
    let mesh = Rational::new(mesh.into(), system.denominator().into());
    system = NetSystem::new_unchecked(system.spec().clone(), system.map().to_vec(), true, mesh, labels)?;
    let layered = LayeredSpace { system, base: (base_start..coords.len()).collect(), layers };
    layered.check()?;
    Ok(ExtensionSpace {
        layered,
        subshift: x.clone(),
        partitions,
        vertex_shifts: shifts,
        coords,
        base_word,
        factor_word,
    })
}

/// A δ-pseudo-orbit of the substitution subshift with no ε-shadow: points
/// `σ^{k_i}(x*)` whose forced shadow word is not a factor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubshiftCounterexample {
    #[serde(with = "rational::serde_rat")]
    pub delta: Rational,
    #[serde(with = "rational::serde_rat")]
    pub epsilon: Rational,
    /// Shifts `k_i` of the two-sided fixed point.
    pub positions: Vec<i64>,
    /// Central words of the points on the window `[-t, t]`.
    pub windows: Vec<String>,
    /// The word a shadow would have to read on `[-s, n + s]`.
    pub forced_word: String,
}

impl SubshiftCounterexample {
    /// Re-checks the counterexample against the subshift: every step is
    /// within delta, and the forced word is absent from a complete factor list.
    pub fn verify(&self, x: &SubstitutionSubshift) -> Result<bool> {
        let t = rational::dyadic_exponent(&self.delta)? as i64;
        let s = rational::dyadic_exponent(&self.epsilon)? as i64 - 1;
        for w in self.positions.windows(2) {
            // d(σ x_i, x_{i+1}) <= δ iff agreement on |j| <= t - 1
            if (1 - t..t).any(|j| x.coord(w[0] + 1 + j) != x.coord(w[1] + j)) {
                return Ok(false);
            }
        }
        let mut forced = Vec::new();
        for (i, &k) in self.positions.iter().enumerate() {
            for j in -s..=s {
                let pos = (i as i64 + j + s) as usize;
                let c = x.coord(k + j);
                if pos < forced.len() {
                    if forced[pos] != c {
                        return Ok(true);
                    }
                } else {
                    forced.push(c);
                }
            }
        }
        if crate::space::symbolic::encode_word(&forced) != self.forced_word {
            return Ok(false);
        }
        let len = forced.len();
        if !x.factors_stable(len) {
            return Err(Error::InvalidArgument("window too short to certify the factor list".into()));
        }
        Ok(!x.factors(len).contains(&forced))
    }
}

/// Shortest pseudo-orbit (iterative deepening over the δ-graph on factors of
/// length `2t + 1`) whose forced shadow word is not a factor.
pub fn subshift_counterexample(
    x: &SubstitutionSubshift,
    delta: &Rational,
    epsilon: &Rational,
    max_len: usize,
) -> Result<Option<SubshiftCounterexample>> {
    let t = rational::dyadic_exponent(delta)? as usize;
    let s = rational::dyadic_exponent(epsilon)? as i64 - 1;
    if s < 0 || s as usize >= t {
        return Err(Error::InvalidArgument("need 0 <= s < t".into()));
    }
    let s = s as usize;
    let r = t;
    let nodes = x.factors(2 * r + 1);
    let factor_sets: Vec<HashSet<Vec<u8>>> =
        (0..=max_len + 2 * s + 1).map(|l| x.factors(l).into_iter().collect()).collect();
    // a -> b iff b[r + j] = a[r + j + 1] for |j| <= t - 1
    let succ: Vec<Vec<usize>> = nodes
        .iter()
        .map(|a| {
            (0..nodes.len())
                .filter(|&b| (0..2 * t - 1).all(|k| nodes[b][r + 1 - t + k] == a[r + 2 - t + k]))
                .collect()
        })
        .collect();
    fn dfs(
        path: &mut Vec<usize>,
        word: &mut Vec<u8>,
        depth: usize,
        nodes: &[Vec<u8>],
        succ: &[Vec<usize>],
        sets: &[HashSet<Vec<u8>>],
        r: usize,
        s: usize,
    ) -> bool {
        if !sets[word.len()].contains(word.as_slice()) {
            return true;
        }
        if depth == 0 {
            return false;
        }
        let a = *path.last().unwrap();
        for &b in &succ[a] {
            path.push(b);
            word.push(nodes[b][r + s]);
            if dfs(path, word, depth - 1, nodes, succ, sets, r, s) {
                return true;
            }
            path.pop();
            word.pop();
        }
        false
    }
    for len in 1..=max_len {
        for start in 0..nodes.len() {
            let mut path = vec![start];
            let mut word = nodes[start][r - s..=r + s].to_vec();
            if dfs(&mut path, &mut word, len, &nodes, &succ, &factor_sets, r, s) {
                let positions = path
                    .iter()
                    .map(|&v| x.locate(&nodes[v], -(r as i64)).ok_or_else(|| Error::NotFound("factor position".into())))
                    .collect::<Result<Vec<_>>>()?;
                let ce = SubshiftCounterexample {
                    delta: delta.clone(),
                    epsilon: epsilon.clone(),
                    positions,
                    windows: path.iter().map(|&v| crate::space::symbolic::encode_word(&nodes[v])).collect(),
                    forced_word: crate::space::symbolic::encode_word(&word),
                };
                return Ok(Some(ce));
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: usize,
    pub depth: usize,
    pub vertices: usize,
    pub edges: usize,
    #[serde(with = "rational::serde_rat")]
    pub gap: Rational,
    pub sampled_points: usize,
}

/// Transfer of the subshift counterexample into layer `n`: the factor
/// coordinate moves by at most `3^{-(2t-1)}/(2n)` per step, and a shadow
/// within `ε_n` of it would agree with it on `|j| <= 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerTransfer {
    pub level: usize,
    #[serde(with = "rational::serde_rat")]
    pub delta: Rational,
    #[serde(with = "rational::serde_rat")]
    pub epsilon: Rational,
    /// `ε_n` is below the separation radius `3^{-3}/(2n)` of the embedding.
    pub separated: bool,
    /// `ε_n` is below the distance from the layer to every other layer and the base.
    pub isolated: bool,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtensionReport {
    pub levels: Vec<LevelReport>,
    pub bijective: bool,
    /// `f` restricted to the base is the shift.
    pub base_is_shift: bool,
    /// (a) every base point passes the positive test.
    #[serde(with = "rational::serde_rat")]
    pub base_epsilon: Rational,
    #[serde(with = "rational::serde_rat")]
    pub base_delta: Rational,
    pub base_horizon: usize,
    pub claim_a: bool,
    /// (b) the factor subshift has an explicit unshadowable pseudo-orbit.
    pub counterexample: Option<SubshiftCounterexample>,
    pub claim_b: bool,
    /// (c) every layer inherits it at its own scale.
    pub transfers: Vec<LayerTransfer>,
    pub claim_c: bool,
}

impl ExtensionReport {
    pub fn passes(&self) -> bool {
        self.bijective && self.base_is_shift && self.claim_a && self.claim_b && self.claim_c
    }
}

/// Checks the construction: (a) base points are positively shadowable at
/// `(ε, δ)`, (b) the factor subshift has a δ'-pseudo-orbit with no ε'-shadow,
/// (c) each layer carries the lifted counterexample at its own scale.
pub fn verify_extension_claims(
    space: &ExtensionSpace,
    base_epsilon: &Rational,
    base_delta: &Rational,
    horizon: usize,
    factor_delta: &Rational,
    factor_epsilon: &Rational,
) -> Result<ExtensionReport> {
    let sys = &space.layered.system;
    let n = sys.len();
    let mut seen = vec![false; n];
    for i in 0..n {
        seen[sys.image(i)] = true;
    }
    let bijective = seen.iter().all(|&b| b) && sys.is_invertible();
    let base_is_shift = space.layered.base.iter().all(|&i| {
        let (a, _, _) = &space.coords[i];
        let (b, _, _) = &space.coords[sys.image(i)];
        *b == a.shift(1)
    });
    let levels = space
        .partitions
        .iter()
        .zip(&space.vertex_shifts)
        .zip(&space.layered.layers)
        .map(|((p, x), l)| LevelReport {
            level: p.level,
            depth: p.depth,
            vertices: p.cells.len(),
            edges: x.transitions().iter().flatten().filter(|&&b| b).count(),
            gap: p.gap.clone(),
            sampled_points: l.points.len(),
        })
        .collect();
    let system = System::Net(sys.clone());
    let mut claim_a = true;
    for &b in &space.layered.base {
        let r = is_positively_shadowable_at(&system, &SystemPoint::Net(b), base_epsilon, base_delta, horizon)?;
        claim_a &= r.is_shadowable();
    }
    let counterexample = subshift_counterexample(&space.subshift, factor_delta, factor_epsilon, 40)?;
    let claim_b = match &counterexample {
        Some(c) => c.verify(&space.subshift)?,
        None => false,
    };
    let t = rational::dyadic_exponent(factor_delta)?;
    let s = rational::dyadic_exponent(factor_epsilon)? as i64 - 1;
    let transfers: Vec<LayerTransfer> = space
        .layered
        .layers
        .iter()
        .enumerate()
        .map(|(k, l)| {
            let level = k + 1;
            let nn = rat(1, level as i64);
            // agreement on |j| <= t - 1 covers ρ <= 2t - 2
            let delta = pow3_neg(2 * t - 1) * rat(1, 2) * &nn;
            let epsilon = rat(1, 60) * &nn;
            // a first difference at ρ = k forces distance >= 3^{-(k+1)}/(2n), so
            // anything closer than 3^{-(2s+1)}/(2n) agrees on ρ <= 2s, i.e. |j| <= s
            let sep = pow3_neg(2 * s as u32 + 1) * rat(1, 2) * &nn;
            let separated = s >= 1 && epsilon < sep;
            let others = space
                .layered
                .layers
                .iter()
                .filter(|o| o.label != l.label)
                .map(|o| (&o.height - &l.height).abs())
                .chain(std::iter::once(l.height.clone()))
                .min()
                .unwrap();
            let isolated = epsilon < others;
            LayerTransfer { level, delta, epsilon, separated, isolated, holds: separated && isolated && claim_b }
        })
        .collect();
    let claim_c = !transfers.is_empty() && transfers.iter().all(|t| t.holds);
    Ok(ExtensionReport {
        levels,
        bijective,
        base_is_shift,
        base_epsilon: base_epsilon.clone(),
        base_delta: base_delta.clone(),
        base_horizon: horizon,
        claim_a,
        counterexample,
        claim_b,
        transfers,
        claim_c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depths() {
        assert_eq!((1..=8).map(depth_for_level).collect::<Vec<_>>(), vec![0, 1, 2, 2, 3, 3, 3, 3]);
    }

    #[test]
    fn embedding_separates_central_words() {
        let a = SymbolicPoint::periodic(2, &[0, 1, 0, 0, 1, 0, 1, 0]).unwrap();
        let vals: Vec<Rational> = (0..8).map(|s| embed(&a.shift(s), 3)).collect();
        for i in 0..8 {
            assert!(vals[i] < rat(1, 6));
            for j in 0..i {
                assert_ne!(vals[i], vals[j]);
            }
        }
    }

    #[test]
    fn fibonacci_counterexample_exists() {
        let x = SubstitutionSubshift::fibonacci(20_000);
        let ce = subshift_counterexample(&x, &pow2_neg(6), &rat(1, 4), 40).unwrap().unwrap();
        assert!(ce.verify(&x).unwrap());
    }
}
