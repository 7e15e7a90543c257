//! Eventually-periodic bi-infinite sequences and subshifts of finite type.

use std::collections::VecDeque;
use std::fmt;
use std::hash::{Hash, Hasher};

use num_integer::Integer;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::{pow2_neg, Rational};

/// A bi-infinite sequence that equals one periodic word on both tails, with a
/// finite window of arbitrary symbols substituted around the origin.
///
/// Coordinate `j` reads `preperiod[j - origin]` inside the window and
/// `period[(j - phase) mod p]` outside it. The representation is kept
/// canonical (primitive period, reduced phase, trimmed window), so structural
/// equality coincides with equality of the denoted sequences.
#[derive(Clone)]
pub struct SymbolicPoint {
    alphabet_size: u8,
    origin: i64,
    preperiod: Vec<u8>,
    period: Vec<u8>,
    phase: i64,
}

impl SymbolicPoint {
    pub fn new(
        alphabet_size: u8,
        origin: i64,
        preperiod: Vec<u8>,
        period: Vec<u8>,
        phase: i64,
    ) -> Result<Self> {
        if alphabet_size == 0 {
            return Err(Error::InvalidArgument("alphabet must be nonempty".into()));
        }
        if period.is_empty() {
            return Err(Error::InvalidArgument("period word must be nonempty".into()));
        }
        for &s in preperiod.iter().chain(period.iter()) {
            if s >= alphabet_size {
                return Err(Error::SymbolOutOfRange { symbol: s, alphabet: alphabet_size });
            }
        }
        let mut p = SymbolicPoint { alphabet_size, origin, preperiod, period, phase };
        p.normalize();
        Ok(p)
    }

    /// The periodic point `w^∞` with `w[0]` at coordinate 0.
    pub fn periodic(alphabet_size: u8, word: &[u8]) -> Result<Self> {
        Self::new(alphabet_size, 0, Vec::new(), word.to_vec(), 0)
    }

    /// The constant sequence `s^∞`.
    pub fn constant(alphabet_size: u8, symbol: u8) -> Result<Self> {
        Self::periodic(alphabet_size, &[symbol])
    }

    fn normalize(&mut self) {
        let p = self.period.len();
        let root = (1..=p)
            .find(|&d| p % d == 0 && (0..p).all(|i| self.period[i] == self.period[i % d]))
            .unwrap_or(p);
        self.period.truncate(root);
        let p = root as i64;
        self.phase = self.phase.rem_euclid(p);
        // rotate the period so that it starts at coordinate 0
        let rotated: Vec<u8> = (0..p).map(|j| self.background(j)).collect();
        self.period = rotated;
        self.phase = 0;
        while let Some(&s) = self.preperiod.first() {
            if s == self.background(self.origin) {
                self.preperiod.remove(0);
                self.origin += 1;
            } else {
                break;
            }
        }
        while let Some(&s) = self.preperiod.last() {
            let j = self.origin + self.preperiod.len() as i64 - 1;
            if s == self.background(j) {
                self.preperiod.pop();
            } else {
                break;
            }
        }
        if self.preperiod.is_empty() {
            self.origin = 0;
        }
    }

    #[inline]
    fn background(&self, j: i64) -> u8 {
        let p = self.period.len() as i64;
        self.period[(j - self.phase).rem_euclid(p) as usize]
    }

    /// Symbol at coordinate `j`.
    #[inline]
    pub fn coord(&self, j: i64) -> u8 {
        let k = j - self.origin;
        if k >= 0 && (k as usize) < self.preperiod.len() {
            self.preperiod[k as usize]
        } else {
            self.background(j)
        }
    }

    pub fn alphabet_size(&self) -> u8 {
        self.alphabet_size
    }

    pub fn period(&self) -> &[u8] {
        &self.period
    }

    pub fn preperiod(&self) -> &[u8] {
        &self.preperiod
    }

    pub fn origin(&self) -> i64 {
        self.origin
    }

    pub fn phase(&self) -> i64 {
        self.phase
    }

    /// True when the sequence is periodic (empty window after normalization).
    pub fn is_periodic(&self) -> bool {
        self.preperiod.is_empty()
    }

    /// Symbols on coordinates `lo..=hi`.
    pub fn word(&self, lo: i64, hi: i64) -> Vec<u8> {
        (lo..=hi).map(|j| self.coord(j)).collect()
    }

    /// Central word on `-radius..=radius`.
    pub fn central_word(&self, radius: i64) -> Vec<u8> {
        self.word(-radius, radius)
    }

    /// `σ^k`: the point whose coordinate `j` is `self.coord(j + k)`.
    pub fn shift(&self, k: i64) -> SymbolicPoint {
        let mut q = self.clone();
        q.origin -= k;
        q.phase -= k;
        q.normalize();
        q
    }

    /// Least `|j|` such that `σ^sa(a)` and `σ^sb(b)` differ at coordinate `j`,
    /// or `None` when the shifted sequences are equal.
    pub fn first_disagreement_shifted(a: &Self, sa: i64, b: &Self, sb: i64) -> Option<u64> {
        let lo = (a.origin - sa).min(b.origin - sb);
        let hi = (a.origin - sa + a.preperiod.len() as i64).max(b.origin - sb + b.preperiod.len() as i64);
        let span = a.period.len().lcm(&b.period.len()) as i64;
        let bound = lo.abs().max(hi.abs()) + span + 1;
        for r in 0..=bound {
            if a.coord(r + sa) != b.coord(r + sb) {
                return Some(r as u64);
            }
            if r > 0 && a.coord(-r + sa) != b.coord(-r + sb) {
                return Some(r as u64);
            }
        }
        None
    }

    pub fn first_disagreement(&self, other: &Self) -> Option<u64> {
        Self::first_disagreement_shifted(self, 0, other, 0)
    }

    /// Exact distance `2^-i`, `i` the least `|j|` with differing coordinates.
    pub fn distance(&self, other: &Self) -> Result<Rational> {
        if self.alphabet_size != other.alphabet_size {
            return Err(Error::AlphabetMismatch(self.alphabet_size, other.alphabet_size));
        }
        Ok(match self.first_disagreement(other) {
            None => Rational::from_integer(0.into()),
            Some(i) => pow2_neg(i as u32),
        })
    }

    /// Range of coordinates `[lo, hi)` covered by the window.
    pub fn window_range(&self) -> (i64, i64) {
        (self.origin, self.origin + self.preperiod.len() as i64)
    }
}

/// Exact symbolic metric between two eventually periodic sequences.
pub fn symbolic_distance(a: &SymbolicPoint, b: &SymbolicPoint) -> Result<Rational> {
    a.distance(b)
}

impl PartialEq for SymbolicPoint {
    fn eq(&self, other: &Self) -> bool {
        self.alphabet_size == other.alphabet_size
            && self.period == other.period
            && self.phase == other.phase
            && self.origin == other.origin
            && self.preperiod == other.preperiod
    }
}

impl Eq for SymbolicPoint {}

impl Hash for SymbolicPoint {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.alphabet_size.hash(state);
        self.period.hash(state);
        self.phase.hash(state);
        self.origin.hash(state);
        self.preperiod.hash(state);
    }
}

impl fmt::Debug for SymbolicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for SymbolicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({})^∞[{}@{}]({})^∞~{}",
            encode_word(&self.period),
            encode_word(&self.preperiod),
            self.origin,
            encode_word(&self.period),
            self.phase
        )
    }
}

const DIGITS: &[u8] = b"0123456789abcdefghijklmnopqrstuvwxyz";

pub fn encode_word(w: &[u8]) -> String {
    w.iter().map(|&s| DIGITS[s as usize] as char).collect()
}

pub fn decode_word(s: &str) -> Result<Vec<u8>> {
    s.bytes()
        .map(|c| {
            DIGITS
                .iter()
                .position(|&d| d == c.to_ascii_lowercase())
                .map(|p| p as u8)
                .ok_or_else(|| Error::Parse(format!("bad symbol {:?}", c as char)))
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PointRepr {
    alphabet_size: u8,
    origin: i64,
    preperiod: String,
    period: String,
    phase: i64,
}

impl Serialize for SymbolicPoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PointRepr {
            alphabet_size: self.alphabet_size,
            origin: self.origin,
            preperiod: encode_word(&self.preperiod),
            period: encode_word(&self.period),
            phase: self.phase,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymbolicPoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = PointRepr::deserialize(d)?;
        let pre = decode_word(&r.preperiod).map_err(serde::de::Error::custom)?;
        let per = decode_word(&r.period).map_err(serde::de::Error::custom)?;
        SymbolicPoint::new(r.alphabet_size, r.origin, pre, per, r.phase)
            .map_err(serde::de::Error::custom)
    }
}

/// A vertex shift given by a 0/1 transition matrix. The all-ones matrix is
/// the full shift.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolicSystem {
    alphabet_size: u8,
    transitions: Vec<Vec<bool>>,
}

impl SymbolicSystem {
    pub fn new(transitions: Vec<Vec<bool>>) -> Result<Self> {
        let k = transitions.len();
        if k == 0 || k > DIGITS.len() {
            return Err(Error::InvalidSystem(format!("alphabet size {k} unsupported")));
        }
        if transitions.iter().any(|row| row.len() != k) {
            return Err(Error::InvalidSystem("transition matrix is not square".into()));
        }
        for a in 0..k {
            if !transitions[a].iter().any(|&t| t) {
                return Err(Error::InvalidSystem(format!("symbol {a} has no successor")));
            }
            if !(0..k).any(|b| transitions[b][a]) {
                return Err(Error::InvalidSystem(format!("symbol {a} has no predecessor")));
            }
        }
        Ok(SymbolicSystem { alphabet_size: k as u8, transitions })
    }

    pub fn full_shift(k: u8) -> Result<Self> {
        Self::new(vec![vec![true; k as usize]; k as usize])
    }

    /// Sequences over {0,1} with no two consecutive 1s.
    pub fn golden_mean() -> Self {
        Self::new(vec![vec![true, true], vec![true, false]]).expect("valid matrix")
    }

    pub fn alphabet_size(&self) -> u8 {
        self.alphabet_size
    }

    pub fn transitions(&self) -> &[Vec<bool>] {
        &self.transitions
    }

    #[inline]
    pub fn allowed(&self, a: u8, b: u8) -> bool {
        self.transitions[a as usize][b as usize]
    }

    pub fn is_full_shift(&self) -> bool {
        self.transitions.iter().all(|r| r.iter().all(|&t| t))
    }

    pub fn is_admissible_word(&self, w: &[u8]) -> bool {
        w.iter().all(|&s| s < self.alphabet_size) && w.windows(2).all(|p| self.allowed(p[0], p[1]))
    }

    /// Checks every transition of the denoted sequence.
    pub fn is_admissible(&self, p: &SymbolicPoint) -> bool {
        if p.alphabet_size() != self.alphabet_size {
            return false;
        }
        let per = p.period();
        let cyclic_ok = (0..per.len()).all(|i| self.allowed(per[i], per[(i + 1) % per.len()]));
        if !cyclic_ok {
            return false;
        }
        let (lo, hi) = p.window_range();
        (lo - 1..hi).all(|j| self.allowed(p.coord(j), p.coord(j + 1)))
    }

    /// All admissible words of length `len`, in lexicographic order.
    pub fn admissible_words(&self, len: usize) -> Vec<Vec<u8>> {
        let mut out = Vec::new();
        if len == 0 {
            out.push(Vec::new());
            return out;
        }
        let mut stack: Vec<Vec<u8>> = (0..self.alphabet_size).rev().map(|s| vec![s]).collect();
        while let Some(w) = stack.pop() {
            if w.len() == len {
                out.push(w);
                continue;
            }
            let last = *w.last().expect("nonempty");
            for b in (0..self.alphabet_size).rev() {
                if self.allowed(last, b) {
                    let mut v = w.clone();
                    v.push(b);
                    stack.push(v);
                }
            }
        }
        out
    }

    /// Number of admissible words of length `len`, by dynamic programming.
    pub fn count_words(&self, len: usize) -> u128 {
        if len == 0 {
            return 1;
        }
        let k = self.alphabet_size as usize;
        let mut v = vec![1u128; k];
        for _ in 1..len {
            let mut next = vec![0u128; k];
            for a in 0..k {
                for b in 0..k {
                    if self.transitions[a][b] {
                        next[b] += v[a];
                    }
                }
            }
            v = next;
        }
        v.iter().sum()
    }

    fn shortest_path(&self, from: u8, to: u8, residue_mod: usize, residue: usize) -> Option<Vec<u8>> {
        // BFS on (symbol, length mod residue_mod); returns symbols from..=to
        let k = self.alphabet_size as usize;
        let m = residue_mod.max(1);
        let idx = |s: usize, r: usize| s * m + r;
        let mut prev: Vec<Option<usize>> = vec![None; k * m];
        let mut seen = vec![false; k * m];
        let start = idx(from as usize, 0);
        seen[start] = true;
        let mut q = VecDeque::from([start]);
        let goal = idx(to as usize, residue % m);
        while let Some(u) = q.pop_front() {
            if u == goal {
                let mut path = vec![(u / m) as u8];
                let mut cur = u;
                while let Some(p) = prev[cur] {
                    path.push((p / m) as u8);
                    cur = p;
                }
                path.reverse();
                return Some(path);
            }
            let (s, r) = (u / m, u % m);
            for b in 0..k {
                if self.transitions[s][b] {
                    let v = idx(b, (r + 1) % m);
                    if !seen[v] {
                        seen[v] = true;
                        prev[v] = Some(u);
                        q.push_back(v);
                    }
                }
            }
        }
        None
    }

    fn shortest_cycle(&self, s: u8) -> Option<Vec<u8>> {
        let k = self.alphabet_size as usize;
        (0..k as u8)
            .filter(|&b| self.allowed(s, b))
            .filter_map(|b| {
                if b == s {
                    return Some(vec![s]);
                }
                self.shortest_path(b, s, 1, 0).map(|mut p| {
                    p.pop();
                    let mut c = vec![s];
                    c.extend(p);
                    c
                })
            })
            .min_by_key(|c| c.len())
    }

    /// An admissible eventually-periodic point whose coordinates
    /// `start..start+len` spell `word`.
    pub fn extend_word(&self, word: &[u8], start: i64) -> Result<SymbolicPoint> {
        if word.is_empty() || !self.is_admissible_word(word) {
            return Err(Error::InvalidArgument(format!(
                "word {} is not admissible",
                encode_word(word)
            )));
        }
        for s in 0..self.alphabet_size {
            let Some(cycle) = self.shortest_cycle(s) else { continue };
            let p = cycle.len();
            let Some(left) = self.shortest_path(s, word[0], 1, 0) else { continue };
            let before = left.len() - 1 + word.len() - 1;
            let need = (p - before % p) % p;
            let Some(right) = self.shortest_path(*word.last().expect("nonempty"), s, p, need) else {
                continue;
            };
            let mut window = left[..left.len() - 1].to_vec();
            window.extend_from_slice(word);
            window.extend_from_slice(&right[1..]);
            let origin = start - (left.len() as i64 - 1);
            let point = SymbolicPoint::new(self.alphabet_size, origin, window, cycle, origin)?;
            debug_assert!(self.is_admissible(&point));
            return Ok(point);
        }
        Err(Error::InvalidSystem(format!(
            "word {} admits no eventually periodic extension",
            encode_word(word)
        )))
    }

    /// Representative of the cylinder with central word `word` (odd length).
    pub fn cylinder_point(&self, word: &[u8]) -> Result<SymbolicPoint> {
        let r = (word.len() as i64 - 1) / 2;
        self.extend_word(word, -r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn pt(pre: &str, origin: i64, per: &str) -> SymbolicPoint {
        SymbolicPoint::new(2, origin, decode_word(pre).unwrap(), decode_word(per).unwrap(), 0).unwrap()
    }

    #[test]
    fn identical_points_have_zero_distance() {
        let a = pt("101", -1, "0");
        assert_eq!(a.distance(&a).unwrap(), rat(0, 1));
    }

    #[test]
    fn first_disagreement_at_two() {
        let a = SymbolicPoint::constant(2, 0).unwrap();
        let b = pt("1", 2, "0");
        assert_eq!(a.distance(&b).unwrap(), rat(1, 4));
        let c = pt("1", -2, "0");
        assert_eq!(a.distance(&c).unwrap(), rat(1, 4));
    }

    #[test]
    fn zero_vs_alternating() {
        let a = SymbolicPoint::constant(2, 0).unwrap();
        let b = SymbolicPoint::new(2, 0, vec![], vec![1, 0], 0).unwrap();
        assert_eq!(b.coord(0), 1);
        assert_eq!(a.distance(&b).unwrap(), rat(1, 1));
    }

    #[test]
    fn canonical_forms_compare_equal() {
        let a = SymbolicPoint::new(2, 3, vec![0, 1, 0], vec![0, 1, 0, 1], 1).unwrap();
        let b = SymbolicPoint::new(2, 0, vec![], vec![1, 0], 0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.distance(&b).unwrap(), rat(0, 1));
    }

    #[test]
    fn shift_moves_coordinates() {
        let p = SymbolicPoint::periodic(2, &[0, 1]).unwrap();
        let q = p.shift(1);
        assert_eq!(q.coord(0), 1);
        assert_eq!(q.shift(-1), p);
        let z = SymbolicPoint::constant(2, 0).unwrap();
        assert_eq!(z.shift(17), z);
    }

    #[test]
    fn alphabet_mismatch() {
        let a = SymbolicPoint::constant(2, 0).unwrap();
        let b = SymbolicPoint::constant(3, 0).unwrap();
        assert!(matches!(a.distance(&b), Err(Error::AlphabetMismatch(2, 3))));
    }

    #[test]
    fn rejects_stranded_symbols() {
        assert!(SymbolicSystem::new(vec![vec![true, false], vec![true, false]]).is_err());
    }

    #[test]
    fn golden_mean_word_counts() {
        let g = SymbolicSystem::golden_mean();
        let counts: Vec<u128> = (1..=6).map(|l| g.count_words(l)).collect();
        assert_eq!(counts, vec![2, 3, 5, 8, 13, 21]);
        assert_eq!(g.admissible_words(6).len(), 21);
    }

    #[test]
    fn extensions_are_admissible() {
        let g = SymbolicSystem::golden_mean();
        for w in g.admissible_words(5) {
            let p = g.cylinder_point(&w).unwrap();
            assert!(g.is_admissible(&p));
            assert_eq!(p.central_word(2), w);
        }
        let periodic_only = SymbolicSystem::new(vec![vec![false, true], vec![true, false]]).unwrap();
        let p = periodic_only.cylinder_point(&[1, 0, 1]).unwrap();
        assert!(periodic_only.is_admissible(&p));
        assert_eq!(p.central_word(1), vec![1, 0, 1]);
    }

    #[test]
    fn serde_roundtrip() {
        let p = pt("1101", -2, "01");
        let s = serde_json::to_string(&p).unwrap();
        let q: SymbolicPoint = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
    }
}
