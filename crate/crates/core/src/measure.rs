//! Empirical measures, an explicit bounded-Lipschitz test family and the
//! weighted-sum metric `d*` on finitely supported measures.

use std::collections::HashMap;

use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, int, rat, Rational};
use crate::space::{SymbolicPoint, SymbolicSystem, System, SystemPoint};

pub const DEFAULT_DEPTH: usize = 24;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    pub point: SystemPoint,
    #[serde(with = "rational::serde_rat")]
    pub weight: Rational,
}

/// A finitely supported probability measure with exact weights.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Atom>", into = "Vec<Atom>")]
pub struct EmpiricalMeasure {
    atoms: Vec<Atom>,
}

impl TryFrom<Vec<Atom>> for EmpiricalMeasure {
    type Error = Error;

    fn try_from(atoms: Vec<Atom>) -> Result<Self> {
        EmpiricalMeasure::new(atoms.into_iter().map(|a| (a.point, a.weight)))
    }
}

impl From<EmpiricalMeasure> for Vec<Atom> {
    fn from(m: EmpiricalMeasure) -> Self {
        m.atoms
    }
}

impl EmpiricalMeasure {
    /// Merges repeated points; weights must be positive and sum to one.
    pub fn new(atoms: impl IntoIterator<Item = (SystemPoint, Rational)>) -> Result<Self> {
        let mut index: HashMap<SystemPoint, usize> = HashMap::new();
        let mut merged: Vec<Atom> = Vec::new();
        for (point, weight) in atoms {
            if !weight.is_positive() {
                return Err(Error::InvalidArgument(format!("non-positive weight {}", rational::fmt(&weight))));
            }
            match index.get(&point) {
                Some(&i) => merged[i].weight += weight,
                None => {
                    index.insert(point.clone(), merged.len());
                    merged.push(Atom { point, weight });
                }
            }
        }
        let total: Rational = merged.iter().map(|a| a.weight.clone()).sum();
        if !total.is_one() {
            return Err(Error::InvalidArgument(format!("weights sum to {}", rational::fmt(&total))));
        }
        Ok(EmpiricalMeasure { atoms: merged })
    }

    pub fn dirac(point: SystemPoint) -> Self {
        EmpiricalMeasure { atoms: vec![Atom { point, weight: Rational::one() }] }
    }

    /// `(1/m) Σ δ_{p_i}` counted with multiplicity.
    pub fn uniform(points: &[SystemPoint]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("uniform measure on an empty list".into()));
        }
        let w = rat(1, points.len() as i64);
        Self::new(points.iter().map(|p| (p.clone(), w.clone())))
    }

    /// `Σ α_i μ_i`; the coefficients must be non-negative and sum to one.
    pub fn combine(parts: &[(Rational, EmpiricalMeasure)]) -> Result<Self> {
        let mut atoms = Vec::new();
        for (alpha, mu) in parts {
            if alpha.is_negative() {
                return Err(Error::InvalidArgument("negative convex coefficient".into()));
            }
            if alpha.is_zero() {
                continue;
            }
            atoms.extend(mu.atoms.iter().map(|a| (a.point.clone(), alpha * &a.weight)));
        }
        Self::new(atoms)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn check(&self, system: &System) -> Result<()> {
        self.atoms.iter().try_for_each(|a| system.check_point(&a.point))
    }

    pub fn integrate(&self, mut f: impl FnMut(&SystemPoint) -> Result<Rational>) -> Result<Rational> {
        let mut acc = Rational::zero();
        for a in &self.atoms {
            acc += f(&a.point)? * &a.weight;
        }
        Ok(acc)
    }
}

/// `E_n(x) = (1/n) Σ_{j<n} δ_{f^j x}`.
pub fn empirical_measure(system: &System, x: &SystemPoint, n: usize) -> Result<EmpiricalMeasure> {
    if n == 0 {
        return Err(Error::InvalidArgument("empirical measure needs n >= 1".into()));
    }
    system.check_point(x)?;
    EmpiricalMeasure::uniform(&orbit_points(system, x, n)?)
}

/// The invariant measure on the periodic orbit of `p`.
pub fn periodic_orbit_measure(system: &System, p: &SystemPoint) -> Result<EmpiricalMeasure> {
    empirical_measure(system, p, period_of(system, p)?)
}

/// Least `q >= 1` with `f^q p = p`.
pub fn period_of(system: &System, p: &SystemPoint) -> Result<usize> {
    match (system, p) {
        (System::Symbolic(_), SystemPoint::Symbolic(q)) if q.is_periodic() => Ok(q.period().len()),
        (System::Net(net), SystemPoint::Net(i)) if *i < net.len() => {
            let mut j = net.image(*i);
            for q in 1..=net.len() {
                if j == *i {
                    return Ok(q);
                }
                j = net.image(j);
            }
            Err(Error::InvalidArgument(format!("{p} is not periodic")))
        }
        _ => {
            system.check_point(p)?;
            Err(Error::InvalidArgument(format!("{p} is not periodic")))
        }
    }
}

pub(crate) fn orbit_points(system: &System, x: &SystemPoint, n: usize) -> Result<Vec<SystemPoint>> {
    let mut pts = Vec::with_capacity(n);
    let mut cur = x.clone();
    for _ in 0..n {
        let next = system.image(&cur)?;
        pts.push(std::mem::replace(&mut cur, next));
    }
    Ok(pts)
}

/// `y ↦ scale · max(0, radius − d(y, anchor))` with `scale = 1/(1 + radius)`,
/// so sup-norm plus Lipschitz constant is exactly one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tent {
    pub anchor: SystemPoint,
    #[serde(with = "rational::serde_rat")]
    pub radius: Rational,
    #[serde(with = "rational::serde_rat")]
    pub scale: Rational,
}

impl Tent {
    pub fn new(anchor: SystemPoint, radius: Rational) -> Self {
        let scale = Rational::one() / (Rational::one() + &radius);
        Tent { anchor, radius, scale }
    }

    pub fn eval(&self, system: &System, y: &SystemPoint) -> Result<Rational> {
        let d = system.distance(y, &self.anchor)?;
        Ok(if d >= self.radius { Rational::zero() } else { (&self.radius - d) * &self.scale })
    }

    pub fn sup_norm(&self) -> Rational {
        &self.scale * &self.radius
    }

    pub fn lipschitz(&self) -> Rational {
        self.scale.clone()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormReport {
    pub pairs_checked: usize,
    /// Largest observed `sup|φ| + sup |φ(a)-φ(b)|/d(a,b)` over the family.
    #[serde(with = "rational::serde_rat")]
    pub max_bl: Rational,
}

impl NormReport {
    pub fn passes(&self) -> bool {
        self.max_bl <= Rational::one()
    }
}

/// The functions `φ_1, …, φ_J` defining `d*`. Anchor-major, radius-minor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestFunctionFamily {
    system_hash: String,
    depth: usize,
    tents: Vec<Tent>,
}

pub fn default_radii() -> Vec<Rational> {
    vec![int(1), rat(1, 2), rat(1, 4)]
}

impl TestFunctionFamily {
    pub fn standard(system: &System) -> Result<Self> {
        Self::with_depth(system, DEFAULT_DEPTH)
    }

    pub fn with_depth(system: &System, depth: usize) -> Result<Self> {
        let radii = default_radii();
        let need = depth.div_ceil(radii.len());
        let anchors = default_anchors(system, need)?;
        let tents: Vec<Tent> = anchors
            .into_iter()
            .flat_map(|a| radii.iter().map(move |r| Tent::new(a.clone(), r.clone())))
            .take(depth)
            .collect();
        Self::from_tents(system, tents)
    }

    pub fn from_tents(system: &System, tents: Vec<Tent>) -> Result<Self> {
        for t in &tents {
            system.check_point(&t.anchor)?;
            if !t.radius.is_positive() || !t.scale.is_positive() {
                return Err(Error::InvalidArgument("tent radius and scale must be positive".into()));
            }
        }
        Ok(TestFunctionFamily { system_hash: system.hash(), depth: tents.len(), tents })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn tents(&self) -> &[Tent] {
        &self.tents
    }

    pub fn system_hash(&self) -> &str {
        &self.system_hash
    }

    /// Bound on the part of the infinite weighted sum beyond depth `J`.
    pub fn tail_bound(&self) -> Rational {
        rational::pow2_neg(self.depth as u32) * int(2)
    }

    /// Weight `2^-j` of the `j`-th function (1-based).
    pub fn weight(j: usize) -> Rational {
        rational::pow2_neg(j as u32)
    }

    fn ensure(&self, system: &System) -> Result<()> {
        if self.system_hash != system.hash() {
            return Err(Error::InvalidArgument("test family was built for a different system".into()));
        }
        Ok(())
    }

    /// Integrals `∫φ_j dμ` for `j = 1..J`.
    pub fn integrals(&self, system: &System, mu: &EmpiricalMeasure) -> Result<Vec<Rational>> {
        self.tents.iter().map(|t| mu.integrate(|y| t.eval(system, y))).collect()
    }

    /// Re-checks `‖φ‖_∞ + ‖φ‖_L <= 1` exactly: over all net point pairs, or
    /// over the anchors and the supplied sample on symbolic systems.
    pub fn verify_norms(&self, system: &System, sample: &[SystemPoint]) -> Result<NormReport> {
        let points: Vec<SystemPoint> = match system {
            System::Net(net) => (0..net.len()).map(SystemPoint::Net).collect(),
            System::Symbolic(_) => {
                let mut pts: Vec<SystemPoint> = self.tents.iter().map(|t| t.anchor.clone()).collect();
                pts.extend(sample.iter().cloned());
                pts.sort_by_key(|p| p.to_string());
                pts.dedup();
                pts
            }
        };
        let rows: Vec<Result<(usize, Rational)>> = self
            .tents
            .par_iter()
            .map(|t| {
                let values: Vec<Rational> = points.iter().map(|p| t.eval(system, p)).collect::<Result<_>>()?;
                let sup = values.iter().map(|v| v.abs()).max().unwrap_or_else(Rational::zero);
                let mut lip = Rational::zero();
                let mut pairs = 0;
                for a in 0..points.len() {
                    for b in a + 1..points.len() {
                        pairs += 1;
                        let d = system.distance(&points[a], &points[b])?;
                        if d.is_zero() {
                            continue;
                        }
                        let q = (&values[a] - &values[b]).abs() / d;
                        if q > lip {
                            lip = q;
                        }
                    }
                }
                Ok((pairs, sup + lip))
            })
            .collect();
        let mut report = NormReport { pairs_checked: 0, max_bl: Rational::zero() };
        for r in rows {
            let (pairs, bl) = r?;
            report.pairs_checked += pairs;
            if bl > report.max_bl {
                report.max_bl = bl;
            }
        }
        Ok(report)
    }
}

/// Net points in index order, or periodic points of a symbolic system
/// ordered by period length and then lexicographically.
pub fn default_anchors(system: &System, count: usize) -> Result<Vec<SystemPoint>> {
    match system {
        System::Net(net) => Ok((0..net.len().min(count)).map(SystemPoint::Net).collect()),
        System::Symbolic(sys) => {
            let mut out = Vec::new();
            let mut p = 1;
            while out.len() < count {
                if p > 24 {
                    return Err(Error::InvalidSystem("too few periodic points for a test family".into()));
                }
                for w in primitive_cycles(sys, p) {
                    if out.len() == count {
                        break;
                    }
                    out.push(SystemPoint::Symbolic(SymbolicPoint::periodic(sys.alphabet_size(), &w)?));
                }
                p += 1;
            }
            Ok(out)
        }
    }
}

/// Words `w` of length `p`, in lexicographic order, such that `w^∞` is an
/// admissible point of least period `p`.
pub fn primitive_cycles(sys: &SymbolicSystem, p: usize) -> Vec<Vec<u8>> {
    sys.admissible_words(p)
        .into_iter()
        .filter(|w| sys.allowed(w[p - 1], w[0]))
        .filter(|w| (1..p).filter(|d| p.is_multiple_of(*d)).all(|d| (d..p).any(|i| w[i] != w[i - d])))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DStar {
    #[serde(with = "rational::serde_rat")]
    pub value: Rational,
    #[serde(with = "rational::serde_rat")]
    pub tail_bound: Rational,
    pub depth: usize,
}

impl DStar {
    /// Certified upper bound for the untruncated sum.
    pub fn upper(&self) -> Rational {
        &self.value + &self.tail_bound
    }
}

/// `Σ_{j<=J} 2^-j |∫φ_j dμ − ∫φ_j dν|`, exact.
pub fn dstar(system: &System, mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, family: &TestFunctionFamily) -> Result<DStar> {
    family.ensure(system)?;
    let a = family.integrals(system, mu)?;
    let b = family.integrals(system, nu)?;
    Ok(DStar { value: weighted_gap(&a, &b), tail_bound: family.tail_bound(), depth: family.depth })
}

pub(crate) fn weighted_gap(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(j, (x, y))| (x - y).abs() * TestFunctionFamily::weight(j + 1))
        .sum()
}

/// Uniformly random admissible point: a random central word of radius `r`
/// extended admissibly, or a random net index.
pub fn random_point(system: &System, rng: &mut impl Rng, radius: usize) -> Result<SystemPoint> {
    match system {
        System::Net(net) => Ok(SystemPoint::Net(rng.gen_range(0..net.len()))),
        System::Symbolic(sys) => {
            let w = random_walk(sys, rng, None, 2 * radius + 1)?;
            Ok(SystemPoint::Symbolic(sys.cylinder_point(&w)?))
        }
    }
}

fn random_walk(sys: &SymbolicSystem, rng: &mut impl Rng, start: Option<u8>, len: usize) -> Result<Vec<u8>> {
    let k = sys.alphabet_size();
    for _ in 0..64 {
        let mut w = vec![start.unwrap_or_else(|| rng.gen_range(0..k))];
        while w.len() < len {
            let last = *w.last().expect("nonempty");
            let next: Vec<u8> = (0..k).filter(|&b| sys.allowed(last, b)).collect();
            match next.choose(rng) {
                Some(&b) => w.push(b),
                None => break,
            }
        }
        if w.len() == len {
            return Ok(w);
        }
    }
    Err(Error::InvalidSystem("random walk keeps reaching dead ends".into()))
}

/// A random point agreeing with `y` on coordinates `|j| <= agree`
/// (symbolic), or a random point within `radius` of `y` (net).
pub fn random_perturbation(
    system: &System,
    y: &SystemPoint,
    agree: usize,
    radius: &Rational,
    rng: &mut impl Rng,
) -> Result<SystemPoint> {
    match (system, y) {
        (System::Net(net), SystemPoint::Net(i)) => {
            let close: Vec<usize> = (0..net.len()).filter(|&j| &net.distance(*i, j) <= radius).collect();
            Ok(SystemPoint::Net(*close.choose(rng).unwrap_or(i)))
        }
        (System::Symbolic(sys), SystemPoint::Symbolic(q)) => {
            let a = agree as i64;
            let mut w = q.word(-a, a);
            let extra = rng.gen_range(0..4);
            if extra > 0 {
                let tail = random_walk(sys, rng, w.last().copied(), extra + 1)?;
                w.extend_from_slice(&tail[1..]);
            }
            Ok(SystemPoint::Symbolic(sys.extend_word(&w, -a)?))
        }
        _ => {
            system.check_point(y)?;
            unreachable!()
        }
    }
}

/// Agreement radius that forces symbolic distance `<= eps` (strictly below
/// when `strict`).
fn agreement_for(eps: &Rational, strict: bool) -> Result<usize> {
    let t = rational::dyadic_exponent(eps)? as usize;
    // Agreement on |j| <= a gives distance <= 2^-(a+1).
    let a = t.saturating_sub(1);
    if strict && rational::pow2_neg(a as u32 + 1) >= *eps {
        return Ok(a + 1);
    }
    Ok(a)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Violation {
    pub item: u8,
    pub trial: usize,
    #[serde(with = "rational::serde_rat")]
    pub lhs: Rational,
    #[serde(with = "rational::serde_rat")]
    pub rhs: Rational,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ItemReport {
    pub item: u8,
    pub trials: usize,
    pub violations: Vec<Violation>,
    /// Largest observed `lhs / rhs` over trials with `rhs > 0`.
    pub max_ratio: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeasureApproxReport {
    pub seed: u64,
    pub items: Vec<ItemReport>,
}

impl MeasureApproxReport {
    pub fn violation_count(&self) -> usize {
        self.items.iter().map(|i| i.violations.len()).sum()
    }
}

fn trial_rng(seed: u64, item: u8, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((item as u64) << 32) | trial as u64);
    rng
}

fn random_subset(rng: &mut impl Rng, len: usize) -> Vec<usize> {
    loop {
        let s: Vec<usize> = (0..len).filter(|_| rng.gen_bool(0.5)).collect();
        if !s.is_empty() {
            return s;
        }
    }
}

fn random_epsilon(rng: &mut impl Rng) -> Rational {
    let den = rng.gen_range(2..=64);
    rat(rng.gen_range(1..den), den)
}

/// Item 1: the counting bound for averages over index sets `A`, `B`.
fn trial_item1(system: &System, family: &TestFunctionFamily, rng: &mut ChaCha8Rng) -> Result<(Rational, Rational)> {
    let x = { let r = rng.gen_range(1..6); random_point(system, rng, r)? };
    let len = rng.gen_range(2..24);
    let xs = orbit_points(system, &x, len)?;
    let a = random_subset(rng, len);
    let b = if rng.gen_bool(0.1) { a.clone() } else { random_subset(rng, len) };
    let pick = |s: &[usize]| s.iter().map(|&i| xs[i].clone()).collect::<Vec<_>>();
    let mu_a = EmpiricalMeasure::uniform(&pick(&a))?;
    let mu_b = EmpiricalMeasure::uniform(&pick(&b))?;
    let (na, nb) = (a.len() as i64, b.len() as i64);
    let inter = a.iter().filter(|i| b.contains(i)).count() as i64;
    let sym = na + nb - 2 * inter;
    let rhs = rat((na + nb) * sym, na * nb) + rat((na - nb).abs() * inter, na * nb);
    Ok((dstar(system, &mu_a, &mu_b, family)?.value, rhs))
}

/// Item 2: pointwise-close sequences have close averages (strict).
fn trial_item2(system: &System, family: &TestFunctionFamily, rng: &mut ChaCha8Rng) -> Result<(Rational, Rational)> {
    let eps = random_epsilon(rng);
    let agree = agreement_for(&eps, true)?;
    let below = &eps - rat(1, 1 << 20);
    let m = rng.gen_range(1..16);
    let mut xs = Vec::with_capacity(m);
    let mut ys = Vec::with_capacity(m);
    for _ in 0..m {
        let x = { let r = rng.gen_range(1..6); random_point(system, rng, r)? };
        let y = random_perturbation(system, &x, agree, &below, rng)?;
        xs.push(x);
        ys.push(y);
    }
    let d = dstar(system, &EmpiricalMeasure::uniform(&xs)?, &EmpiricalMeasure::uniform(&ys)?, family)?;
    Ok((d.value, eps))
}

fn random_measure(system: &System, rng: &mut ChaCha8Rng) -> Result<EmpiricalMeasure> {
    let x = { let r = rng.gen_range(1..6); random_point(system, rng, r)? };
    let len = rng.gen_range(1..12);
    EmpiricalMeasure::uniform(&orbit_points(system, &x, len)?)
}

/// Item 3: convex combinations of measures within ε of μ stay within ε.
fn trial_item3(system: &System, family: &TestFunctionFamily, rng: &mut ChaCha8Rng) -> Result<(Rational, Rational)> {
    let mu = random_measure(system, rng)?;
    let k = rng.gen_range(1..=5);
    let mut parts = Vec::with_capacity(k);
    let mut worst = Rational::zero();
    for _ in 0..k {
        let mi = random_measure(system, rng)?;
        let d = dstar(system, &mi, &mu, family)?.value;
        if d > worst {
            worst = d;
        }
        parts.push(mi);
    }
    let eps = worst + rat(rng.gen_range(1..=16), 128);
    let raw: Vec<i64> = (0..k).map(|_| rng.gen_range(0..=8)).collect();
    let raw = if raw.iter().all(|&r| r == 0) { vec![1; k] } else { raw };
    let total: i64 = raw.iter().sum();
    let combo: Vec<(Rational, EmpiricalMeasure)> =
        raw.iter().zip(parts).map(|(&r, m)| (rat(r, total), m)).collect();
    let mix = EmpiricalMeasure::combine(&combo)?;
    Ok((dstar(system, &mix, &mu, family)?.value, eps))
}

/// Random instances of the three elementary `d*` inequalities, evaluated
/// exactly. Item 1 is non-strict; items 2 and 3 are strict.
pub fn verify_measure_approx(system: &System, trials: usize, seed: u64) -> Result<MeasureApproxReport> {
    let family = TestFunctionFamily::standard(system)?;
    let mut items = Vec::new();
    for item in 1u8..=3 {
        let results: Vec<Result<(Rational, Rational)>> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(seed, item, t);
                match item {
                    1 => trial_item1(system, &family, &mut rng),
                    2 => trial_item2(system, &family, &mut rng),
                    _ => trial_item3(system, &family, &mut rng),
                }
            })
            .collect();
        let mut report = ItemReport { item, trials, violations: Vec::new(), max_ratio: 0.0 };
        for (trial, r) in results.into_iter().enumerate() {
            let (lhs, rhs) = r?;
            let ok = if item == 1 { lhs <= rhs } else { lhs < rhs };
            if rhs.is_positive() {
                report.max_ratio = report.max_ratio.max(rational::to_f64(&(&lhs / &rhs)));
            }
            if !ok {
                report.violations.push(Violation { item, trial, lhs, rhs });
            }
        }
        items.push(report);
    }
    Ok(MeasureApproxReport { seed, items })
}

/// The concatenation `X^1_1 P^1_1 … X^1_k P^1_k X^2_1 …` with generic blocks
/// `P^m_i` of length `n` and a companion sequence `ε`-close to it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockConstruction {
    pub n: usize,
    /// `generics[m][i]`: starting point of `P^{m+1}_{i+1}`.
    pub generics: Vec<Vec<SystemPoint>>,
    /// `connectors[m][i]`: the block `X^{m+1}_{i+1}`.
    pub connectors: Vec<Vec<Vec<SystemPoint>>>,
    pub y: Vec<SystemPoint>,
    pub x: Vec<SystemPoint>,
}

impl BlockConstruction {
    /// Random connectors of length `<= r`, generic points shifted along their
    /// periodic orbits, and an `eps`-close companion sequence.
    pub fn random(
        system: &System,
        generics: &[SystemPoint],
        n: usize,
        r: usize,
        eps: &Rational,
        rounds: usize,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let agree = agreement_for(eps, false)?;
        let mut gens = Vec::with_capacity(rounds);
        let mut conns = Vec::with_capacity(rounds);
        let mut y = Vec::new();
        for _ in 0..rounds {
            let mut gm = Vec::new();
            let mut cm = Vec::new();
            for p in generics {
                let q = period_of(system, p)?;
                let conn: Vec<SystemPoint> = (0..rng.gen_range(0..=r))
                    .map(|_| random_point(system, &mut rng, 3))
                    .collect::<Result<_>>()?;
                let start = system.apply(p, rng.gen_range(0..q) as i64)?;
                y.extend(conn.iter().cloned());
                y.extend(orbit_points(system, &start, n)?);
                gm.push(start);
                cm.push(conn);
            }
            gens.push(gm);
            conns.push(cm);
        }
        let x = y
            .iter()
            .map(|p| random_perturbation(system, p, agree, eps, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(BlockConstruction { n, generics: gens, connectors: conns, y, x })
    }

    /// Cumulative block boundaries `s_1 < s_2 < …`.
    pub fn boundaries(&self) -> Vec<usize> {
        let mut s = 0;
        self.connectors
            .iter()
            .map(|round| {
                s += round.iter().map(|c| c.len() + self.n).sum::<usize>();
                s
            })
            .collect()
    }

    /// Block form, connector lengths and pointwise closeness.
    pub fn check(&self, system: &System, r: usize, eps: &Rational) -> Result<()> {
        let mut expect = Vec::with_capacity(self.y.len());
        for (gm, cm) in self.generics.iter().zip(&self.connectors) {
            for (p, c) in gm.iter().zip(cm) {
                if c.len() > r {
                    return Err(Error::InvalidArgument(format!("connector of length {} exceeds R = {r}", c.len())));
                }
                expect.extend(c.iter().cloned());
                expect.extend(orbit_points(system, p, self.n)?);
            }
        }
        if expect != self.y || self.x.len() != self.y.len() {
            return Err(Error::InvalidArgument("sequence does not have the stated block form".into()));
        }
        for (j, (a, b)) in self.x.iter().zip(&self.y).enumerate() {
            if &system.distance(a, b)? > eps {
                return Err(Error::InvalidArgument(format!("companion sequence leaves the ε-tube at {j}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EmpiricalRow {
    pub m: usize,
    pub s_m: usize,
    #[serde(with = "rational::serde_rat")]
    pub value: Rational,
    #[serde(with = "rational::serde_rat")]
    pub bound: Rational,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EmpiricalLemmaReport {
    pub k: usize,
    pub n: usize,
    pub r: usize,
    #[serde(with = "rational::serde_rat")]
    pub epsilon: Rational,
    /// `d*(E_n(p^m_i), μ_i)` for every generic block.
    #[serde(with = "rational::serde_rat_vec")]
    pub generic_errors: Vec<Rational>,
    pub rows: Vec<EmpiricalRow>,
}

impl EmpiricalLemmaReport {
    pub fn holds(&self) -> bool {
        self.rows.iter().all(|r| r.holds)
    }
}

/// Smallest block length `n` with `3R/n <= ε` at which every generic point
/// is within `ε` of its measure.
pub fn lemma_block_length(
    system: &System,
    mus: &[EmpiricalMeasure],
    generics: &[SystemPoint],
    r: usize,
    eps: &Rational,
    family: &TestFunctionFamily,
) -> Result<usize> {
    let mut n = 1usize;
    while rat(3 * r as i64, n as i64) > *eps {
        n += 1;
    }
    for n in n..n + 4096 {
        let mut ok = true;
        for (mu, p) in mus.iter().zip(generics) {
            if dstar(system, &empirical_measure(system, p, n)?, mu, family)?.value > *eps {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(n);
        }
    }
    Err(Error::NotFound("no block length with generic error below ε".into()))
}

/// Evaluates `d*((1/k)Σμ_i, (1/s_m)Σ_{j<s_m} δ_{x_j}) <= 3ε` at every block
/// boundary of the construction.
pub fn verify_empirical_lemma(
    system: &System,
    mus: &[EmpiricalMeasure],
    r: usize,
    eps: &Rational,
    construction: &BlockConstruction,
) -> Result<EmpiricalLemmaReport> {
    let k = mus.len();
    if k == 0 || construction.generics.iter().any(|g| g.len() != k) {
        return Err(Error::InvalidArgument("one generic block per measure and round".into()));
    }
    construction.check(system, r, eps)?;
    if rat(3 * r as i64, construction.n as i64) > *eps {
        return Err(Error::InvalidArgument("block length too short for 3R/n <= ε".into()));
    }
    let family = TestFunctionFamily::standard(system)?;
    let mut generic_errors = Vec::new();
    for round in &construction.generics {
        for (p, mu) in round.iter().zip(mus) {
            let e = dstar(system, &empirical_measure(system, p, construction.n)?, mu, &family)?.value;
            if e > *eps {
                return Err(Error::InvalidArgument(format!(
                    "generic block at {p} is {} from its measure",
                    rational::fmt(&e)
                )));
            }
            generic_errors.push(e);
        }
    }
    let avg = EmpiricalMeasure::combine(&mus.iter().map(|m| (rat(1, k as i64), m.clone())).collect::<Vec<_>>())?;
    let target = family.integrals(system, &avg)?;
    let bound = eps * int(3);
    let rows = construction
        .boundaries()
        .into_par_iter()
        .enumerate()
        .map(|(i, s)| {
            let emp = EmpiricalMeasure::uniform(&construction.x[..s])?;
            let value = weighted_gap(&target, &family.integrals(system, &emp)?);
            Ok(EmpiricalRow { m: i + 1, s_m: s, holds: value <= bound, value, bound: bound.clone() })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EmpiricalLemmaReport { k, n: construction.n, r, epsilon: eps.clone(), generic_errors, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sigma2() -> System {
        System::Symbolic(SymbolicSystem::full_shift(2).unwrap())
    }

    fn per(w: &[u8]) -> SystemPoint {
        SystemPoint::Symbolic(SymbolicPoint::periodic(2, w).unwrap())
    }

    #[test]
    fn empirical_weights_merge() {
        let s = sigma2();
        let m = empirical_measure(&s, &per(&[0, 1]), 3).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.atoms()[0].weight, rat(2, 3));
        assert_eq!(m.atoms()[1].point, per(&[1, 0]));
        assert_eq!(m.atoms()[1].weight, rat(1, 3));
        let fixed = empirical_measure(&s, &per(&[0]), 7).unwrap();
        assert_eq!(fixed, EmpiricalMeasure::dirac(per(&[0])));
        assert!(empirical_measure(&s, &per(&[0]), 0).is_err());
    }

    #[test]
    fn period_two_halves() {
        let s = sigma2();
        let m = empirical_measure(&s, &per(&[0, 1]), 4).unwrap();
        assert!(m.atoms().iter().all(|a| a.weight == rat(1, 2)));
        assert_eq!(periodic_orbit_measure(&s, &per(&[0, 0, 1])).unwrap().len(), 3);
    }

    #[test]
    fn anchors_order() {
        let a = default_anchors(&sigma2(), 5).unwrap();
        assert_eq!(a, vec![per(&[0]), per(&[1]), per(&[0, 1]), per(&[1, 0]), per(&[0, 0, 1])]);
        let g = SymbolicSystem::golden_mean();
        assert_eq!(primitive_cycles(&g, 2), vec![vec![0, 1], vec![1, 0]]);
        assert_eq!(primitive_cycles(&g, 1), vec![vec![0]]);
    }

    #[test]
    fn norms_bounded() {
        let s = sigma2();
        let fam = TestFunctionFamily::standard(&s).unwrap();
        assert_eq!(fam.depth(), 24);
        assert_eq!(fam.tail_bound(), rational::pow2_neg(23));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sample: Vec<SystemPoint> = (0..30).map(|_| random_point(&s, &mut rng, 3).unwrap()).collect();
        let rep = fam.verify_norms(&s, &sample).unwrap();
        assert!(rep.passes(), "{}", rational::fmt(&rep.max_bl));
    }

    #[test]
    fn dirac_pair_bounded_by_distance() {
        let s = sigma2();
        let fam = TestFunctionFamily::standard(&s).unwrap();
        let a = per(&[0]);
        let b = SystemPoint::Symbolic(SymbolicPoint::new(2, 2, vec![1], vec![0], 0).unwrap());
        let d = dstar(&s, &EmpiricalMeasure::dirac(a.clone()), &EmpiricalMeasure::dirac(b.clone()), &fam).unwrap();
        assert!(d.value <= s.distance(&a, &b).unwrap());
        assert!(d.value.is_positive());
        let z = dstar(&s, &EmpiricalMeasure::dirac(a.clone()), &EmpiricalMeasure::dirac(a), &fam).unwrap();
        assert!(z.value.is_zero());
    }

    #[test]
    fn foreign_family_rejected() {
        let fam = TestFunctionFamily::standard(&sigma2()).unwrap();
        let s3 = System::Symbolic(SymbolicSystem::full_shift(3).unwrap());
        let m = EmpiricalMeasure::dirac(SystemPoint::Symbolic(SymbolicPoint::constant(3, 0).unwrap()));
        assert!(dstar(&s3, &m, &m, &fam).is_err());
    }

    #[test]
    fn measure_approx_small_run() {
        let rep = verify_measure_approx(&sigma2(), 40, 11).unwrap();
        assert_eq!(rep.violation_count(), 0);
        assert_eq!(rep.items.len(), 3);
    }

    #[test]
    fn single_measure_lemma_trivial() {
        let s = sigma2();
        let p = per(&[0, 1]);
        let mu = periodic_orbit_measure(&s, &p).unwrap();
        let eps = rat(1, 4);
        let c = BlockConstruction::random(&s, &[p.clone()], 2, 0, &rat(1, 1 << 30), 3, 1).unwrap();
        let rep = verify_empirical_lemma(&s, &[mu], 0, &eps, &c).unwrap();
        assert!(rep.holds());
        assert!(rep.rows.iter().all(|r| r.value < rat(1, 1 << 20)));
    }
}
