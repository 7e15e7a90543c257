//! δ-chain graphs, chain-recurrent sets and chain classes.

use std::collections::{HashMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbit::{OrbitKind, PseudoOrbit};
use crate::rational::{self, Rational};
use crate::space::{NetSystem, SymbolicSystem, System, SystemPoint};

/// Above this many nodes a symbolic finitization is refused.
pub const MAX_WORD_NODES: usize = 1 << 20;

#[derive(Clone, Debug)]
pub enum Nodes {
    /// Node `i` is net point `i`.
    Net(NetSystem),
    /// Node `i` is the cylinder of `words[i]`, a central word on `-radius..=radius`.
    Words { system: SymbolicSystem, radius: usize, words: Vec<Vec<u8>>, index: HashMap<Vec<u8>, usize> },
}

/// Directed graph with `a -> b` iff `d(f(a), b) <= delta`. On cylinder nodes
/// the condition only involves coordinates inside the windows, so an edge
/// holds for every pair of points in the two cylinders.
#[derive(Clone, Debug)]
pub struct ChainGraph {
    delta: Rational,
    nodes: Nodes,
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl ChainGraph {
    pub fn net(system: &NetSystem, delta: &Rational) -> Result<Self> {
        let thr = system
            .threshold(delta)
            .ok_or_else(|| Error::InvalidArgument("delta must be nonnegative".into()))?;
        let n = system.len();
        let rows: Vec<Vec<u32>> = (0..n)
            .into_par_iter()
            .map(|a| {
                let fa = system.image(a);
                (0..n).filter(|&b| system.dist_num(fa, b) <= thr).map(|b| b as u32).collect()
            })
            .collect();
        Ok(Self::from_rows(delta.clone(), Nodes::Net(system.clone()), rows))
    }

    /// Cylinder finitization at the given radius, which must be at least the
    /// dyadic exponent of delta so that edges are exact.
    pub fn symbolic(system: &SymbolicSystem, delta: &Rational, radius: usize) -> Result<Self> {
        let t = rational::dyadic_exponent(delta)? as usize;
        if radius < t {
            return Err(Error::InvalidArgument(format!("radius {radius} below the delta exponent {t}")));
        }
        let len = 2 * radius + 1;
        let count = system.count_words(len);
        if count > MAX_WORD_NODES as u128 {
            return Err(Error::BudgetExceeded(MAX_WORD_NODES));
        }
        let words = system.admissible_words(len);
        let index: HashMap<Vec<u8>, usize> = words.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
        let w = radius;
        // a -> b iff b[w + j] = a[w + j + 1] for |j| <= t - 1
        let rows: Vec<Vec<u32>> = if t == 0 {
            let all: Vec<u32> = (0..words.len() as u32).collect();
            vec![all; words.len()]
        } else {
            let mut groups: HashMap<&[u8], Vec<u32>> = HashMap::new();
            for (i, b) in words.iter().enumerate() {
                groups.entry(&b[w + 1 - t..w + t]).or_default().push(i as u32);
            }
            words.par_iter().map(|a| groups.get(&a[w + 2 - t..w + t + 1]).cloned().unwrap_or_default()).collect()
        };
        Ok(Self::from_rows(
            delta.clone(),
            Nodes::Words { system: system.clone(), radius, words, index },
            rows,
        ))
    }

    fn from_rows(delta: Rational, nodes: Nodes, rows: Vec<Vec<u32>>) -> Self {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for r in rows {
            targets.extend(r);
            offsets.push(targets.len());
        }
        ChainGraph { delta, nodes, offsets, targets }
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn delta(&self) -> &Rational {
        &self.delta
    }

    pub fn nodes(&self) -> &Nodes {
        &self.nodes
    }

    /// Cylinder radius for symbolic graphs.
    pub fn radius(&self) -> Option<usize> {
        match &self.nodes {
            Nodes::Words { radius, .. } => Some(*radius),
            Nodes::Net(_) => None,
        }
    }

    /// Successors in increasing order.
    #[inline]
    pub fn successors(&self, a: usize) -> &[u32] {
        &self.targets[self.offsets[a]..self.offsets[a + 1]]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.successors(a).binary_search(&(b as u32)).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn word(&self, i: usize) -> Option<&[u8]> {
        match &self.nodes {
            Nodes::Words { words, .. } => words.get(i).map(|w| w.as_slice()),
            Nodes::Net(_) => None,
        }
    }

    /// Node containing a point.
    pub fn node_of(&self, p: &SystemPoint) -> Result<usize> {
        match (&self.nodes, p) {
            (Nodes::Net(n), SystemPoint::Net(i)) if *i < n.len() => Ok(*i),
            (Nodes::Words { radius, index, .. }, SystemPoint::Symbolic(q)) => {
                let w = q.central_word(*radius as i64);
                index.get(&w).copied().ok_or_else(|| Error::ForeignPoint(format!("{q} is not admissible")))
            }
            _ => Err(Error::ForeignPoint(format!("{p} is not a node of this graph"))),
        }
    }

    /// A point of the system inside node `i` (the node itself for nets, a
    /// representative of the cylinder otherwise).
    pub fn representative(&self, i: usize) -> Result<SystemPoint> {
        match &self.nodes {
            Nodes::Net(_) => Ok(SystemPoint::Net(i)),
            Nodes::Words { system, words, .. } => Ok(system.cylinder_point(&words[i])?.into()),
        }
    }

    /// Shortest path `a -> … -> b` with at least `min_len` and at most
    /// `max_len` steps. Ties go to the lowest-index predecessor.
    pub fn shortest_path(&self, a: usize, b: usize, min_len: usize, max_len: usize) -> Option<Vec<usize>> {
        if min_len == 0 && a == b {
            return Some(vec![a]);
        }
        // BFS on (node, capped length) so that paths of length >= min_len are found
        let cap = min_len.max(1);
        let key = |v: usize, l: usize| v * (cap + 1) + l.min(cap);
        let mut parent: HashMap<usize, usize> = HashMap::new();
        let mut queue = VecDeque::new();
        let start = key(a, 0);
        parent.insert(start, usize::MAX);
        queue.push_back((a, 0usize));
        while let Some((v, l)) = queue.pop_front() {
            if l >= max_len {
                continue;
            }
            for &s in self.successors(v) {
                let s = s as usize;
                let k = key(s, l + 1);
                if parent.contains_key(&k) {
                    continue;
                }
                parent.insert(k, key(v, l));
                if s == b && l + 1 >= min_len {
                    let mut path = vec![s];
                    let mut cur = k;
                    while parent[&cur] != usize::MAX {
                        cur = parent[&cur];
                        path.push(cur / (cap + 1));
                    }
                    path.reverse();
                    return Some(path);
                }
                queue.push_back((s, l + 1));
            }
        }
        None
    }

    /// Turns a node path into a validated pseudo-orbit, using `first` and
    /// `last` as the endpoint points when given.
    pub fn path_to_orbit(
        &self,
        system: &System,
        path: &[usize],
        first: Option<&SystemPoint>,
        last: Option<&SystemPoint>,
    ) -> Result<PseudoOrbit> {
        let mut pts: Vec<SystemPoint> = path.iter().map(|&i| self.representative(i)).collect::<Result<_>>()?;
        if let Some(f) = first {
            pts[0] = f.clone();
        }
        if let Some(l) = last {
            *pts.last_mut().unwrap() = l.clone();
        }
        let closed = pts.len() > 1 && pts.first() == pts.last();
        let po = PseudoOrbit::from_parts(pts, self.delta.clone(), if closed { OrbitKind::Loop } else { OrbitKind::Segment });
        po.check(system)?;
        Ok(po)
    }

    /// Strongly connected components (iterative Tarjan), each sorted, listed
    /// in order of their smallest node.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut index = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut on_stack = vec![false; n];
        let mut stack = Vec::new();
        let mut comps = Vec::new();
        let mut counter = 0;
        let mut call: Vec<(usize, usize)> = Vec::new();
        for root in 0..n {
            if index[root] != usize::MAX {
                continue;
            }
            call.push((root, 0));
            index[root] = counter;
            low[root] = counter;
            counter += 1;
            stack.push(root);
            on_stack[root] = true;
            while let Some(&mut (v, ref mut pos)) = call.last_mut() {
                let succ = self.successors(v);
                if *pos < succ.len() {
                    let w = succ[*pos] as usize;
                    *pos += 1;
                    if index[w] == usize::MAX {
                        index[w] = counter;
                        low[w] = counter;
                        counter += 1;
                        stack.push(w);
                        on_stack[w] = true;
                        call.push((w, 0));
                    } else if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                } else {
                    call.pop();
                    if let Some(&(u, _)) = call.last() {
                        low[u] = low[u].min(low[v]);
                    }
                    if low[v] == index[v] {
                        let mut comp = Vec::new();
                        loop {
                            let w = stack.pop().unwrap();
                            on_stack[w] = false;
                            comp.push(w);
                            if w == v {
                                break;
                            }
                        }
                        comp.sort_unstable();
                        comps.push(comp);
                    }
                }
            }
        }
        comps.sort_by_key(|c| c[0]);
        comps
    }

    pub fn decompose(&self) -> ChainClassDecomposition {
        let classes: Vec<Vec<usize>> = self
            .components()
            .into_iter()
            .filter(|c| c.len() > 1 || self.has_edge(c[0], c[0]))
            .collect();
        let mut recurrent: Vec<usize> = classes.iter().flatten().copied().collect();
        recurrent.sort_unstable();
        ChainClassDecomposition { delta: self.delta.clone(), radius: self.radius(), recurrent, classes }
    }

    /// Nodes lying on a directed cycle.
    pub fn chain_recurrent_set(&self) -> Vec<usize> {
        self.decompose().recurrent
    }

    /// The class of a recurrent node.
    pub fn chain_class(&self, x: usize) -> Result<Vec<usize>> {
        self.decompose()
            .classes
            .into_iter()
            .find(|c| c.binary_search(&x).is_ok())
            .ok_or(Error::NotRecurrent(x))
    }

    /// Nodes reachable from `a` in exactly `k` steps, for `k = 0..=len`.
    pub fn exact_reach(&self, a: usize, len: usize) -> Vec<Vec<bool>> {
        let n = self.len();
        let mut layers = Vec::with_capacity(len + 1);
        let mut cur = vec![false; n];
        cur[a] = true;
        layers.push(cur.clone());
        for _ in 0..len {
            let mut next = vec![false; n];
            for v in (0..n).filter(|&v| cur[v]) {
                for &s in self.successors(v) {
                    next[s as usize] = true;
                }
            }
            layers.push(next.clone());
            cur = next;
        }
        layers
    }

    /// Reversed graph.
    pub fn reversed(&self) -> ChainGraph {
        let mut rows = vec![Vec::new(); self.len()];
        for a in 0..self.len() {
            for &b in self.successors(a) {
                rows[b as usize].push(a as u32);
            }
        }
        Self::from_rows(self.delta.clone(), self.nodes.clone(), rows)
    }
}

/// Builds the δ-chain graph of a system; symbolic systems are finitized at
/// the radius of delta.
pub fn build_chain_graph(system: &System, delta: &Rational) -> Result<ChainGraph> {
    match system {
        System::Net(n) => ChainGraph::net(n, delta),
        System::Symbolic(s) => {
            let t = rational::dyadic_exponent(delta)? as usize;
            ChainGraph::symbolic(s, delta, t)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainClassDecomposition {
    #[serde(with = "rational::serde_rat")]
    pub delta: Rational,
    /// Cylinder radius of a symbolic finitization.
    pub radius: Option<usize>,
    pub recurrent: Vec<usize>,
    pub classes: Vec<Vec<usize>>,
}

/// Shortest δ-chain from `a` to `b` with at most `max_len` steps.
pub fn connect(system: &NetSystem, a: usize, b: usize, delta: &Rational, max_len: usize) -> Result<Option<PseudoOrbit>> {
    let g = ChainGraph::net(system, delta)?;
    let sys = System::Net(system.clone());
    match g.shortest_path(a, b, 0, max_len) {
        Some(path) => Ok(Some(g.path_to_orbit(&sys, &path, None, None)?)),
        None => Ok(None),
    }
}

/// Point on a map cycle near `z`: a chain loop through `z` is followed by the
/// true orbit of its start, and the first cycle point of that orbit within
/// `radius` of `z` is returned.
pub fn nearest_minimal_point(system: &NetSystem, z: usize, delta: &Rational, radius: &Rational) -> Result<Option<usize>> {
    let g = ChainGraph::net(system, delta)?;
    let cls = g.chain_class(z)?;
    let thr = system
        .threshold(radius)
        .ok_or_else(|| Error::InvalidArgument("radius must be nonnegative".into()))?;
    let on_cycle = cycle_points(system);
    // the cycle set is invariant; search the class and then everything within radius
    let mut cands: Vec<usize> = cls.into_iter().filter(|&c| on_cycle[c]).collect();
    cands.extend((0..system.len()).filter(|&c| on_cycle[c]));
    Ok(cands
        .into_iter()
        .filter(|&c| system.dist_num(z, c) <= thr)
        .min_by_key(|&c| (system.dist_num(z, c), c)))
}

/// Marks the points lying on a cycle of the sampled map.
pub fn cycle_points(system: &NetSystem) -> Vec<bool> {
    let n = system.len();
    let mut on = vec![false; n];
    for start in 0..n {
        let p = system.apply(start, n as i64).expect("forward iterate");
        if on[p] {
            continue;
        }
        let mut q = p;
        loop {
            on[q] = true;
            q = system.image(q);
            if q == p {
                break;
            }
        }
    }
    on
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquicontinuityReport {
    #[serde(with = "rational::serde_rat")]
    pub epsilon: Rational,
    pub horizon: usize,
    /// `min` over balls of the largest image diameter within the horizon.
    #[serde(with = "rational::serde_rat")]
    pub min_expansion: Rational,
    pub sensitive: bool,
    /// Sensitivity constant certified at this resolution: every ball's image
    /// exceeds it at some time.
    #[serde(with = "rational::serde_rat_opt")]
    pub constant: Option<Rational>,
}

/// For every `ε`-ball around a point of `K` (intersected with `K`), the
/// largest image diameter over `n <= horizon`. The smallest of these is the
/// expansion; it must exceed `2ε` for a sensitivity verdict, reported with
/// constant `C = 2ε`.
pub fn is_equicontinuous_at_resolution(
    system: &System,
    k: &[SystemPoint],
    epsilon: &Rational,
    horizon: usize,
) -> Result<EquicontinuityReport> {
    let min_expansion = match system {
        System::Net(n) => net_min_expansion(n, k, epsilon, horizon)?,
        System::Symbolic(s) => symbolic_min_expansion(s, k, epsilon, horizon)?,
    };
    let two_eps = epsilon * rational::int(2);
    let sensitive = min_expansion > two_eps;
    Ok(EquicontinuityReport {
        epsilon: epsilon.clone(),
        horizon,
        constant: if sensitive { Some(two_eps) } else { None },
        min_expansion,
        sensitive,
    })
}

fn net_min_expansion(n: &NetSystem, k: &[SystemPoint], epsilon: &Rational, horizon: usize) -> Result<Rational> {
    let idx: Vec<usize> = k
        .iter()
        .map(|p| p.as_net().filter(|&i| i < n.len()).ok_or_else(|| Error::ForeignPoint(p.to_string())))
        .collect::<Result<_>>()?;
    let thr = n.threshold(epsilon).ok_or_else(|| Error::InvalidArgument("epsilon must be nonnegative".into()))?;
    let worst = idx
        .par_iter()
        .map(|&x| {
            let mut ball: Vec<usize> = idx.iter().copied().filter(|&y| n.dist_num(x, y) <= thr).collect();
            let mut best = 0u64;
            for step in 0..=horizon {
                if step > 0 {
                    for y in ball.iter_mut() {
                        *y = n.image(*y);
                    }
                }
                for (i, &a) in ball.iter().enumerate() {
                    for &b in &ball[i + 1..] {
                        best = best.max(n.dist_num(a, b));
                    }
                }
            }
            best
        })
        .min()
        .unwrap_or(0);
    Ok(Rational::new(worst.into(), n.denominator().into()))
}

fn symbolic_min_expansion(
    s: &SymbolicSystem,
    k: &[SystemPoint],
    epsilon: &Rational,
    horizon: usize,
) -> Result<Rational> {
    // the ε-ball is the cylinder of the central word of radius r = t_ε - 1;
    // its image under σ^n has diameter 2^-j for the least |j| where the
    // coordinate n + j is not forced by the window
    let t = rational::dyadic_exponent(epsilon)? as i64;
    let r = t - 1;
    let mut worst: Option<Rational> = None;
    for p in k {
        let q = p.as_symbolic().ok_or_else(|| Error::ForeignPoint(p.to_string()))?;
        let w = if r >= 0 { q.central_word(r) } else { Vec::new() };
        let mut best = rational::int(0);
        for step in 0..=horizon as i64 {
            let j = free_coordinate(s, &w, r, step);
            let d = rational::pow2_neg(j as u32);
            if d > best {
                best = d;
            }
        }
        worst = Some(match worst {
            None => best,
            Some(b) => b.min(best),
        });
    }
    Ok(worst.unwrap_or_else(|| rational::int(0)))
}

/// Least `|j|` such that coordinate `step + j` takes at least two values on
/// the cylinder of `w` (centered, radius `r`).
fn free_coordinate(s: &SymbolicSystem, w: &[u8], r: i64, step: i64) -> u64 {
    let mut j = 0i64;
    loop {
        for c in [step + j, step - j] {
            if options_at(s, w, r, c) > 1 {
                return j.unsigned_abs();
            }
        }
        j += 1;
    }
}

fn options_at(s: &SymbolicSystem, w: &[u8], r: i64, c: i64) -> usize {
    if r < 0 {
        return s.alphabet_size() as usize;
    }
    if c.abs() <= r {
        return 1;
    }
    let k = s.alphabet_size() as usize;
    // symbols reachable in exactly d steps from the boundary symbol
    let (start, d, forward) = if c > r {
        (w[w.len() - 1], (c - r) as usize, true)
    } else {
        (w[0], (-r - c) as usize, false)
    };
    let mut cur = vec![false; k];
    cur[start as usize] = true;
    for _ in 0..d {
        let mut next = vec![false; k];
        for a in 0..k {
            if cur[a] {
                for b in 0..k {
                    let ok = if forward { s.allowed(a as u8, b as u8) } else { s.allowed(b as u8, a as u8) };
                    if ok {
                        next[b] = true;
                    }
                }
            }
        }
        cur = next;
    }
    cur.iter().filter(|&&b| b).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use crate::space::DistanceSpec;

    fn circle(n: i64, map: Vec<usize>) -> NetSystem {
        let angles = (0..n).map(|i| rat(i, n)).collect();
        NetSystem::new(DistanceSpec::Circle { angles }, map, false, rat(1, n), vec![]).unwrap()
    }

    #[test]
    fn identity_has_self_loops() {
        let c = circle(12, (0..12).collect());
        let g = ChainGraph::net(&c, &rat(0, 1)).unwrap();
        assert!((0..12).all(|i| g.has_edge(i, i)));
        assert_eq!(g.chain_recurrent_set(), (0..12).collect::<Vec<_>>());
    }

    #[test]
    fn large_delta_is_complete() {
        let c = circle(12, (0..12).map(|i| (i + 1) % 12).collect());
        let g = ChainGraph::net(&c, &c.diameter()).unwrap();
        assert_eq!(g.edge_count(), 144);
    }

    #[test]
    fn distant_fixed_points_are_separate_classes() {
        let c = circle(12, vec![0, 0, 0, 0, 0, 0, 6, 6, 6, 6, 6, 6]);
        let g = ChainGraph::net(&c, &rat(1, 100)).unwrap();
        let d = g.decompose();
        assert_eq!(d.classes, vec![vec![0], vec![6]]);
        assert!(g.chain_class(3).is_err());
    }

    #[test]
    fn full_shift_is_one_class() {
        let s = SymbolicSystem::full_shift(2).unwrap();
        let g = ChainGraph::symbolic(&s, &rat(1, 4), 2).unwrap();
        assert_eq!(g.len(), 32);
        let d = g.decompose();
        assert_eq!(d.classes.len(), 1);
        assert_eq!(d.recurrent.len(), 32);
    }

    #[test]
    fn connect_one_step() {
        let c = circle(12, (0..12).map(|i| (i + 1) % 12).collect());
        let po = connect(&c, 3, 4, &rat(0, 1), 5).unwrap().unwrap();
        assert_eq!(po.step_count(), 1);
    }

    #[test]
    fn full_shift_is_sensitive() {
        let s = System::Symbolic(SymbolicSystem::full_shift(2).unwrap());
        let k: Vec<SystemPoint> = SymbolicSystem::full_shift(2)
            .unwrap()
            .admissible_words(5)
            .iter()
            .map(|w| SymbolicSystem::full_shift(2).unwrap().cylinder_point(w).unwrap().into())
            .collect();
        let r = is_equicontinuous_at_resolution(&s, &k, &rat(1, 4), 8).unwrap();
        assert!(r.sensitive);
        assert!(r.min_expansion >= rat(1, 2));
    }

    #[test]
    fn identity_is_equicontinuous() {
        let c = circle(24, (0..24).collect());
        let k: Vec<SystemPoint> = (0..24).map(SystemPoint::Net).collect();
        let r = is_equicontinuous_at_resolution(&System::Net(c), &k, &rat(1, 12), 8).unwrap();
        assert!(!r.sensitive);
    }
}
