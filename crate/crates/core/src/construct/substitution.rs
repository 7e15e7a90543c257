//! Substitution subshifts, sampled through a long window of a two-sided
//! fixed point.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Substitution {
    pub images: Vec<Vec<u8>>,
}

impl Substitution {
    pub fn new(images: Vec<Vec<u8>>) -> Result<Self> {
        let k = images.len();
        if k == 0 || images.iter().any(|w| w.is_empty() || w.iter().any(|&s| s as usize >= k)) {
            return Err(Error::InvalidArgument("substitution images must be nonempty words over the alphabet".into()));
        }
        Ok(Substitution { images })
    }

    /// `0 -> 01, 1 -> 0`.
    pub fn fibonacci() -> Self {
        Substitution { images: vec![vec![0, 1], vec![0]] }
    }

    pub fn alphabet_size(&self) -> usize {
        self.images.len()
    }

    pub fn apply(&self, w: &[u8]) -> Vec<u8> {
        w.iter().flat_map(|&s| self.images[s as usize].iter().copied()).collect()
    }

    /// Some power of the incidence matrix is positive.
    pub fn is_primitive(&self) -> bool {
        let k = self.alphabet_size();
        let base: Vec<Vec<bool>> = (0..k)
            .map(|a| (0..k).map(|b| self.images[a].contains(&(b as u8))).collect())
            .collect();
        let mut m = base.clone();
        // primitive matrices have a positive power at most (k-1)^2 + 1
        for _ in 0..=(k - 1) * (k - 1) + 1 {
            if m.iter().all(|r| r.iter().all(|&b| b)) {
                return true;
            }
            m = (0..k)
                .map(|a| (0..k).map(|c| (0..k).any(|b| m[a][b] && base[b][c])).collect())
                .collect();
        }
        false
    }
}

/// The orbit closure of a two-sided fixed point `x*` of a substitution power,
/// represented by a central window of `x*`. `x*` is the limit of
/// `θ^k(b) . θ^k(a)` for the seed `b.a`.
#[derive(Clone, Debug)]
pub struct SubstitutionSubshift {
    pub substitution: Substitution,
    power: u32,
    left: Vec<u8>,
    right: Vec<u8>,
}

impl SubstitutionSubshift {
    /// Builds a window of at least `half_width` symbols on each side.
    pub fn new(substitution: Substitution, power: u32, seed: (u8, u8), half_width: usize) -> Result<Self> {
        let k = substitution.alphabet_size() as u8;
        if seed.0 >= k || seed.1 >= k || power == 0 {
            return Err(Error::InvalidArgument("bad seed or power".into()));
        }
        let pw = |w: &[u8]| {
            let mut w = w.to_vec();
            for _ in 0..power {
                w = substitution.apply(&w);
            }
            w
        };
        let (b, a) = seed;
        let (tb, ta) = (pw(&[b]), pw(&[a]));
        if *tb.last().unwrap() != b || ta[0] != a {
            return Err(Error::InvalidArgument("seed is not fixed by the substitution power".into()));
        }
        let mut left = vec![b];
        let mut right = vec![a];
        let mut guard = 0;
        while left.len() < half_width || right.len() < half_width {
            left = pw(&left);
            right = pw(&right);
            guard += 1;
            if guard > 64 {
                return Err(Error::InvalidArgument("substitution does not grow".into()));
            }
        }
        left.reverse();
        Ok(SubstitutionSubshift { substitution, power, left, right })
    }

    /// The Fibonacci subshift, from the fixed point of `θ²` with seed `0.0`.
    pub fn fibonacci(half_width: usize) -> Self {
        Self::new(Substitution::fibonacci(), 2, (0, 0), half_width).expect("valid seed")
    }

    pub fn power(&self) -> u32 {
        self.power
    }

    /// Coordinates `-half_width .. half_width` are available.
    pub fn half_width(&self) -> i64 {
        self.left.len().min(self.right.len()) as i64
    }

    /// `x*[j]`.
    pub fn coord(&self, j: i64) -> u8 {
        if j >= 0 {
            self.right[j as usize]
        } else {
            self.left[(-j - 1) as usize]
        }
    }

    /// `x*[lo..=hi]`.
    pub fn word(&self, lo: i64, hi: i64) -> Vec<u8> {
        (lo..=hi).map(|j| self.coord(j)).collect()
    }

    /// Factors of length `len` seen in the window, sorted.
    pub fn factors(&self, len: usize) -> Vec<Vec<u8>> {
        let h = self.half_width();
        let mut set: HashSet<Vec<u8>> = HashSet::new();
        let mut j = -h;
        while j + len as i64 <= h {
            set.insert(self.word(j, j + len as i64 - 1));
            j += 1;
        }
        let mut v: Vec<Vec<u8>> = set.into_iter().collect();
        v.sort();
        v
    }

    /// Checks that the window's central half already contains every factor of
    /// length `len` found in the whole window, so longer windows add nothing.
    pub fn factors_stable(&self, len: usize) -> bool {
        let h = self.half_width() / 2;
        let mut inner: HashSet<Vec<u8>> = HashSet::new();
        let mut j = -h;
        while j + len as i64 <= h {
            inner.insert(self.word(j, j + len as i64 - 1));
            j += 1;
        }
        self.factors(len).into_iter().all(|w| inner.contains(&w))
    }

    /// Some position `k` with `x*[k + lo ..= k + hi] = w`, nearest to 0.
    pub fn locate(&self, w: &[u8], lo: i64) -> Option<i64> {
        let h = self.half_width();
        let len = w.len() as i64;
        (0..h)
            .flat_map(|d| [d, -d])
            .find(|&k| k + lo >= -h && k + lo + len <= h && self.word(k + lo, k + lo + len - 1) == w)
    }

    /// Minimality screen: primitive substitution with strictly growing
    /// complexity on the tested lengths (which rules out periodic orbits).
    pub fn minimality_screen(&self, max_len: usize) -> bool {
        if !self.substitution.is_primitive() {
            return false;
        }
        let counts: Vec<usize> = (1..=max_len).map(|l| self.factors(l).len()).collect();
        counts.windows(2).all(|w| w[1] > w[0]) && (1..=max_len).all(|l| self.factors_stable(l))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fibonacci_complexity_is_n_plus_one() {
        let f = SubstitutionSubshift::fibonacci(4000);
        for l in 1..=25 {
            assert_eq!(f.factors(l).len(), l + 1, "length {l}");
        }
        assert!(f.minimality_screen(12));
    }

    #[test]
    fn right_half_is_the_fixed_point() {
        let f = SubstitutionSubshift::fibonacci(100);
        assert_eq!(f.word(0, 12), vec![0, 1, 0, 0, 1, 0, 1, 0, 0, 1, 0, 0, 1]);
        // left half ends in θ²ᵏ(0), whose last symbols are ...010
        assert_eq!(f.word(-3, -1), vec![0, 1, 0]);
    }

    #[test]
    fn non_primitive_fails_the_screen() {
        let s = Substitution::new(vec![vec![0, 0], vec![1, 0, 1]]).unwrap();
        assert!(!s.is_primitive());
        let sub = SubstitutionSubshift::new(s, 1, (0, 0), 64).unwrap();
        assert!(!sub.minimality_screen(6));
    }
}
