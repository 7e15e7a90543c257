//! `(n, ε)`-separated sets, entropy slopes and finite-horizon dynamical balls.

use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::space::{SymbolicPoint, System, SystemPoint};

/// Largest candidate count for exact clique search.
pub const CLIQUE_LIMIT: usize = 4096;
/// Cap on stored witnesses for window counts.
pub const WITNESS_LIMIT: usize = 4096;
const CLIQUE_BUDGET: u64 = 20_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeparationMethod {
    /// Symbolic: distinct words on the window seen by `ε` up to time `n`.
    WindowCount,
    Clique,
    Greedy,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeparatedSetResult {
    pub n: usize,
    #[serde(with = "rational::serde_rat")]
    pub epsilon: Rational,
    pub cardinality: u128,
    /// Pairwise separated points; may be truncated for window counts.
    pub witness: Vec<SystemPoint>,
    pub witness_complete: bool,
    pub exact: bool,
    pub method: SeparationMethod,
}

/// Whether some `0 <= i <= n` has `d(f^i a, f^i b) > ε`.
pub fn separated(system: &System, a: &SystemPoint, b: &SystemPoint, n: usize, eps: &Rational) -> Result<bool> {
    match (system, a, b) {
        (System::Net(net), SystemPoint::Net(x), SystemPoint::Net(y)) => {
            let thr = net.threshold(eps).unwrap_or(0);
            let (mut x, mut y) = (*x, *y);
            for _ in 0..=n {
                if net.dist_num(x, y) > thr {
                    return Ok(true);
                }
                x = net.image(x);
                y = net.image(y);
            }
            Ok(false)
        }
        _ => {
            for i in 0..=n as i64 {
                if &system.distance_shifted(a, i, b, i)? > eps {
                    return Ok(true);
                }
            }
            Ok(false)
        }
    }
}

/// Re-checks that `points` is pairwise `(n, ε)`-separated.
pub fn is_separated_set(system: &System, points: &[SystemPoint], n: usize, eps: &Rational) -> Result<bool> {
    let bad = (0..points.len()).into_par_iter().try_fold(
        || false,
        |acc, i| -> Result<bool> {
            if acc {
                return Ok(true);
            }
            for j in i + 1..points.len() {
                if !separated(system, &points[i], &points[j], n, eps)? {
                    return Ok(true);
                }
            }
            Ok(false)
        },
    );
    let bad = bad.try_reduce(|| false, |a, b| Ok(a || b))?;
    Ok(!bad)
}

/// Number of coordinates `m >= 0` with `2^-m > ε`: symbolic points closer
/// than that radius are exactly the ones that are not `ε`-apart.
fn separation_radius(eps: &Rational) -> usize {
    let mut q = 0;
    while &rational::pow2_neg(q as u32) > eps {
        q += 1;
    }
    q
}

/// A maximum-cardinality `(n, ε)`-separated subset.
///
/// With `candidates = None` the whole space is used: every net point, or on
/// a symbolic system all admissible words on the window that `ε` sees up to
/// time `n` (any two points with the same window word stay `ε`-close).
/// Explicit candidate sets go through clique search when `exact` and small
/// enough, and a greedy pass otherwise.
pub fn separated_set(
    system: &System,
    candidates: Option<&[SystemPoint]>,
    n: usize,
    eps: &Rational,
    exact: bool,
) -> Result<SeparatedSetResult> {
    if eps.is_zero() || *eps < Rational::zero() {
        return Err(Error::InvalidArgument("ε must be positive".into()));
    }
    let owned;
    let cands: &[SystemPoint] = match (candidates, system) {
        (Some(c), _) => {
            c.iter().try_for_each(|p| system.check_point(p))?;
            c
        }
        (None, System::Symbolic(_)) => return window_count(system, n, eps),
        (None, System::Net(net)) => {
            owned = (0..net.len()).map(SystemPoint::Net).collect::<Vec<_>>();
            &owned
        }
    };
    let mut res = SeparatedSetResult {
        n,
        epsilon: eps.clone(),
        cardinality: 0,
        witness: Vec::new(),
        witness_complete: true,
        exact: false,
        method: SeparationMethod::Greedy,
    };
    if cands.is_empty() {
        res.exact = true;
        return Ok(res);
    }
    if exact && cands.len() <= CLIQUE_LIMIT {
        let graph = separation_graph(system, cands, n, eps)?;
        if let Some(clique) = max_clique(&graph, CLIQUE_BUDGET) {
            res.witness = clique.into_iter().map(|i| cands[i].clone()).collect();
            res.cardinality = res.witness.len() as u128;
            res.exact = true;
            res.method = SeparationMethod::Clique;
            return Ok(res);
        }
    }
    for p in cands {
        let mut ok = true;
        for q in &res.witness {
            if !separated(system, p, q, n, eps)? {
                ok = false;
                break;
            }
        }
        if ok {
            res.witness.push(p.clone());
        }
    }
    res.cardinality = res.witness.len() as u128;
    Ok(res)
}

fn window_count(system: &System, n: usize, eps: &Rational) -> Result<SeparatedSetResult> {
    let sys = system.as_symbolic().expect("symbolic");
    let q = separation_radius(eps);
    let mut res = SeparatedSetResult {
        n,
        epsilon: eps.clone(),
        cardinality: 1,
        witness: Vec::new(),
        witness_complete: true,
        exact: true,
        method: SeparationMethod::WindowCount,
    };
    if q == 0 {
        // nothing is ε-apart: any single point is maximal
        let w = sys.admissible_words(1);
        let first = w.first().ok_or_else(|| Error::InvalidSystem("empty shift".into()))?;
        res.witness.push(SystemPoint::Symbolic(sys.extend_word(first, 0)?));
        return Ok(res);
    }
    let len = n + 2 * q - 1;
    let start = -(q as i64 - 1);
    res.cardinality = sys.count_words(len);
    if res.cardinality <= WITNESS_LIMIT as u128 {
        res.witness = sys
            .admissible_words(len)
            .par_iter()
            .map(|w| sys.extend_word(w, start).map(SystemPoint::Symbolic))
            .collect::<Result<_>>()?;
    } else {
        res.witness_complete = false;
    }
    Ok(res)
}

/// Adjacency bitsets: `i ~ j` iff the candidates are `(n, ε)`-separated.
pub fn separation_graph(system: &System, cands: &[SystemPoint], n: usize, eps: &Rational) -> Result<BitGraph> {
    let rows: Vec<Vec<usize>> = (0..cands.len())
        .into_par_iter()
        .map(|i| {
            let mut row = Vec::new();
            for j in 0..cands.len() {
                if i != j && separated(system, &cands[i], &cands[j], n, eps)? {
                    row.push(j);
                }
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let mut g = BitGraph::new(cands.len());
    for (i, row) in rows.iter().enumerate() {
        for &j in row {
            g.add_edge(i, j);
        }
    }
    Ok(g)
}

/// Undirected graph stored as adjacency bitsets.
#[derive(Clone, Debug)]
pub struct BitGraph {
    n: usize,
    words: usize,
    adj: Vec<u64>,
}

impl BitGraph {
    pub fn new(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        BitGraph { n, words, adj: vec![0; n * words] }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn add_edge(&mut self, i: usize, j: usize) {
        self.adj[i * self.words + j / 64] |= 1 << (j % 64);
        self.adj[j * self.words + i / 64] |= 1 << (i % 64);
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.adj[i * self.words..(i + 1) * self.words]
    }
}

fn bits(set: &[u64]) -> impl Iterator<Item = usize> + '_ {
    set.iter().enumerate().flat_map(|(w, &word)| {
        let mut x = word;
        std::iter::from_fn(move || {
            if x == 0 {
                return None;
            }
            let b = x.trailing_zeros() as usize;
            x &= x - 1;
            Some(w * 64 + b)
        })
    })
}

struct CliqueSearch<'a> {
    g: &'a BitGraph,
    best: Vec<usize>,
    current: Vec<usize>,
    nodes: u64,
    budget: u64,
}

impl CliqueSearch<'_> {
    /// Greedy colouring of `p`; returns vertices with non-decreasing colour
    /// numbers (1-based).
    fn colour(&self, p: &[u64]) -> Vec<(usize, usize)> {
        let mut uncoloured = p.to_vec();
        let mut out = Vec::new();
        let mut colour = 0;
        while uncoloured.iter().any(|&w| w != 0) {
            colour += 1;
            let mut q = uncoloured.clone();
            while let Some(v) = { let first = bits(&q).next(); first } {
                uncoloured[v / 64] &= !(1 << (v % 64));
                q[v / 64] &= !(1 << (v % 64));
                for (qw, rw) in q.iter_mut().zip(self.g.row(v)) {
                    *qw &= !rw;
                }
                out.push((v, colour));
            }
        }
        out
    }

    fn expand(&mut self, mut p: Vec<u64>) -> bool {
        self.nodes += 1;
        if self.nodes > self.budget {
            return false;
        }
        let order = self.colour(&p);
        for &(v, c) in order.iter().rev() {
            if self.current.len() + c <= self.best.len() {
                return true;
            }
            self.current.push(v);
            let next: Vec<u64> = p.iter().zip(self.g.row(v)).map(|(a, b)| a & b).collect();
            if next.iter().all(|&w| w == 0) {
                if self.current.len() > self.best.len() {
                    self.best = self.current.clone();
                }
            } else if !self.expand(next) {
                return false;
            }
            self.current.pop();
            p[v / 64] &= !(1 << (v % 64));
        }
        true
    }
}

/// Maximum clique by colour-bounded branch and bound. `None` when the node
/// budget runs out.
pub fn max_clique(g: &BitGraph, budget: u64) -> Option<Vec<usize>> {
    if g.n == 0 {
        return Some(Vec::new());
    }
    let mut all = vec![0u64; g.words];
    for v in 0..g.n {
        all[v / 64] |= 1 << (v % 64);
    }
    let mut s = CliqueSearch { g, best: vec![0], current: Vec::new(), nodes: 0, budget };
    if !s.expand(all) {
        return None;
    }
    s.best.sort_unstable();
    Some(s.best)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EntropyEstimate {
    #[serde(with = "rational::serde_rat")]
    pub epsilon: Rational,
    pub ns: Vec<usize>,
    pub counts: Vec<u128>,
    pub slope: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
    pub exact: bool,
}

/// Least-squares slope of `log S(n, ε)` against `n`.
pub fn entropy_estimate(system: &System, eps: &Rational, ns: &[usize]) -> Result<EntropyEstimate> {
    if ns.len() < 2 {
        return Err(Error::InvalidArgument("need at least two values of n".into()));
    }
    let results: Vec<SeparatedSetResult> =
        ns.iter().map(|&n| separated_set(system, None, n, eps, true)).collect::<Result<_>>()?;
    let counts: Vec<u128> = results.iter().map(|r| r.cardinality).collect();
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let (slope, intercept) = least_squares(&xs, &ys);
    let residuals = xs.iter().zip(&ys).map(|(x, y)| y - (slope * x + intercept)).collect();
    Ok(EntropyEstimate {
        epsilon: eps.clone(),
        ns: ns.to_vec(),
        counts,
        slope,
        intercept,
        residuals,
        exact: results.iter().all(|r| r.exact),
    })
}

pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    (slope, my - slope * mx)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DynamicalBall {
    Points { points: Vec<usize> },
    /// Points agreeing with the centre on coordinates `lo..=hi`; empty range
    /// means the whole space.
    Cylinder { lo: i64, hi: i64, word: String },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExpansivityReport {
    #[serde(with = "rational::serde_rat")]
    pub e: Rational,
    pub horizon: usize,
    pub two_sided: bool,
    pub ball: DynamicalBall,
    /// Number of points for nets; `None` for symbolic cylinders.
    pub cardinality: Option<usize>,
}

/// `{y : d(f^i x, f^i y) <= e}` for `0 <= i <= horizon`, and also for
/// negative `i` down to `-horizon` when the map is invertible.
pub fn expansivity_witness(system: &System, x: &SystemPoint, e: &Rational, horizon: usize) -> Result<ExpansivityReport> {
    system.check_point(x)?;
    let two_sided = system.is_invertible();
    let h = horizon as i64;
    let lo_time = if two_sided { -h } else { 0 };
    match (system, x) {
        (System::Net(net), SystemPoint::Net(c)) => {
            let thr = net.threshold(e).unwrap_or(0);
            let times: Vec<i64> = (lo_time..=h).collect();
            let centre: Vec<usize> = times.iter().map(|&t| net.apply(*c, t)).collect::<Result<_>>()?;
            let mut points = Vec::new();
            for y in 0..net.len() {
                let mut inside = true;
                for (&t, &cx) in times.iter().zip(&centre) {
                    if net.dist_num(cx, net.apply(y, t)?) > thr {
                        inside = false;
                        break;
                    }
                }
                if inside {
                    points.push(y);
                }
            }
            let n = points.len();
            Ok(ExpansivityReport {
                e: e.clone(),
                horizon,
                two_sided,
                ball: DynamicalBall::Points { points },
                cardinality: Some(n),
            })
        }
        (System::Symbolic(_), SystemPoint::Symbolic(p)) => {
            // d <= e  iff  agreement on |j| <= t_e - 1
            let t = if e.is_zero() { None } else { Some(rational::dyadic_exponent(e)? as i64) };
            let ball = match t {
                Some(0) => DynamicalBall::Cylinder { lo: 0, hi: -1, word: String::new() },
                Some(t) => {
                    let (lo, hi) = (lo_time - (t - 1), h + (t - 1));
                    DynamicalBall::Cylinder { lo, hi, word: crate::space::symbolic::encode_word(&p.word(lo, hi)) }
                }
                None => return Err(Error::InvalidArgument("radius must be positive".into())),
            };
            Ok(ExpansivityReport { e: e.clone(), horizon, two_sided, ball, cardinality: None })
        }
        _ => unreachable!(),
    }
}

/// Whether `y` lies in the ball described by `report` around `x`.
pub fn in_ball(report: &ExpansivityReport, x: &SymbolicPoint, y: &SymbolicPoint) -> bool {
    match &report.ball {
        DynamicalBall::Cylinder { lo, hi, .. } => (*lo..=*hi).all(|j| x.coord(j) == y.coord(j)),
        DynamicalBall::Points { .. } => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use crate::space::{DistanceSpec, NetSystem, SymbolicSystem};

    fn shift(k: u8) -> System {
        System::Symbolic(SymbolicSystem::full_shift(k).unwrap())
    }

    #[test]
    fn full_shift_counts() {
        for n in 0..=6 {
            let r = separated_set(&shift(2), None, n, &rat(3, 4), true).unwrap();
            assert_eq!(r.cardinality, 1 << (n + 1));
            assert!(r.exact);
        }
    }

    #[test]
    fn golden_mean_window() {
        let g = System::Symbolic(SymbolicSystem::golden_mean());
        let r = separated_set(&g, None, 5, &rat(3, 4), true).unwrap();
        assert_eq!(r.cardinality, 21);
        assert!(is_separated_set(&g, &r.witness, 5, &rat(3, 4)).unwrap());
    }

    #[test]
    fn coarse_epsilon_single_point() {
        let r = separated_set(&shift(2), None, 0, &rat(2, 1), true).unwrap();
        assert_eq!(r.cardinality, 1);
    }

    #[test]
    fn clique_agrees_with_window() {
        let s = shift(2);
        let w = separated_set(&s, None, 3, &rat(3, 4), true).unwrap();
        let mut cands = w.witness.clone();
        cands.extend(separated_set(&s, None, 1, &rat(3, 4), true).unwrap().witness);
        let c = separated_set(&s, Some(&cands), 3, &rat(3, 4), true).unwrap();
        assert_eq!(c.method, SeparationMethod::Clique);
        assert_eq!(c.cardinality, 16);
    }

    #[test]
    fn clique_on_cycle_graph() {
        let mut g = BitGraph::new(7);
        for i in 0..7 {
            g.add_edge(i, (i + 1) % 7);
        }
        g.add_edge(0, 2);
        assert_eq!(max_clique(&g, 1000).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn slopes() {
        let ns: Vec<usize> = (4..=10).collect();
        let e2 = entropy_estimate(&shift(2), &rat(3, 4), &ns).unwrap();
        assert!((e2.slope - 2f64.ln()).abs() < 1e-9);
        let e3 = entropy_estimate(&shift(3), &rat(3, 4), &ns).unwrap();
        assert!((e3.slope - 3f64.ln()).abs() < 1e-9);
        let one = System::Net(
            NetSystem::new(DistanceSpec::Table { entries: vec![vec![rat(0, 1)]] }, vec![0], true, rat(1, 1), vec![])
                .unwrap(),
        );
        assert_eq!(entropy_estimate(&one, &rat(1, 2), &[1, 2, 3]).unwrap().slope, 0.0);
    }

    #[test]
    fn identity_ball_is_metric_ball() {
        let angles: Vec<Rational> = (0..12).map(|i| rat(i, 12)).collect();
        let net = NetSystem::new(DistanceSpec::Circle { angles }, (0..12).collect(), true, rat(1, 12), vec![]).unwrap();
        let s = System::Net(net);
        for h in [0, 3, 9] {
            let r = expansivity_witness(&s, &SystemPoint::Net(0), &rat(1, 6), h).unwrap();
            assert_eq!(r.cardinality, Some(5));
        }
        let all = expansivity_witness(&s, &SystemPoint::Net(0), &rat(1, 1), 4).unwrap();
        assert_eq!(all.cardinality, Some(12));
    }

    #[test]
    fn shift_ball_is_cylinder() {
        let x = SymbolicPoint::periodic(2, &[0, 1, 1]).unwrap();
        let r = expansivity_witness(&shift(2), &SystemPoint::Symbolic(x.clone()), &rat(1, 4), 5).unwrap();
        match &r.ball {
            DynamicalBall::Cylinder { lo, hi, .. } => assert_eq!((*lo, *hi), (-6, 6)),
            _ => panic!(),
        }
        assert!(in_ball(&r, &x, &x));
        assert!(!in_ball(&r, &x, &x.shift(1)));
    }
}
