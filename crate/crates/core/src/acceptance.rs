//! The acceptance suite: ten end-to-end checks at fixed resolutions, each
//! against an oracle computed without the code path under test.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::approx::approximate_by_positive_entropy_ergodic;
use crate::chain::{connect, ChainGraph};
use crate::construct::{
    dense_shadowable_example, extension_builder, fig1_circle, fig1_points, verify_extension_claims,
    SubstitutionSubshift,
};
use crate::entropy::{entropy_estimate, is_separated_set, separated, separated_set};
use crate::error::{Error, Result};
use crate::horseshoe::{build_certificate, find_loop_family, verify_semiconjugacy};
use crate::measure::{
    lemma_block_length, periodic_orbit_measure, verify_empirical_lemma, verify_measure_approx, BlockConstruction,
    EmpiricalMeasure, TestFunctionFamily,
};
use crate::orbit::PseudoOrbit;
use crate::rational::{self, int, pow2_neg, rat, Rational};
use crate::shadow::{find_shadow, has_shadowing_at_resolution, is_positively_shadowable_at};
use crate::space::{DistanceSpec, NetSystem, SymbolicPoint, SymbolicSystem, System, SystemPoint};

pub const CRITERIA: [(u8, &str); 10] = [
    (1, "full-shift separated sets and entropy slope"),
    (2, "golden-mean shift shadowing"),
    (3, "circle map: positive but not two-sided shadowing"),
    (4, "dense shadowable layers over an unshadowable circle"),
    (5, "empirical measure inequalities"),
    (6, "two-loop horseshoe certificate"),
    (7, "positive-entropy approximation of a periodic mixture"),
    (8, "block concatenation empirical bound"),
    (9, "extension of the Fibonacci subshift"),
    (10, "chain recurrence against brute force"),
];

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    pub limit_seconds: Option<f64>,
}

impl Outcome {
    pub fn line(&self) -> String {
        let limit = self.limit_seconds.map(|l| format!(" (limit {l:.0}s)")).unwrap_or_default();
        format!(
            "[{}] criterion {:>2}: {} | {} | {:.2}s{}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds,
            limit
        )
    }
}

fn limit(id: u8) -> Option<f64> {
    match id {
        1 => Some(10.0),
        2 => Some(60.0),
        5 => Some(30.0),
        7 => Some(300.0),
        _ => None,
    }
}

/// Runs one criterion. Errors inside a check count as failures.
pub fn run(id: u8) -> Result<Outcome> {
    let name = CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .map(|c| c.1)
        .ok_or_else(|| Error::InvalidArgument(format!("no criterion {id}")))?;
    let t = Instant::now();
    let res = match id {
        1 => full_shift_entropy(),
        2 => sft_shadowing(),
        3 => circle_positive_not_two_sided(),
        4 => dense_layers(),
        5 => measure_inequalities(),
        6 => horseshoe_certificate(),
        7 => positive_entropy_approximation(),
        8 => block_concatenation(),
        9 => extension(),
        _ => chain_recurrence(),
    };
    let seconds = t.elapsed().as_secs_f64();
    let limit_seconds = limit(id);
    let (mut passed, mut detail) = match res {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    if let Some(l) = limit_seconds {
        if seconds >= l {
            passed = false;
            detail.push_str("; over time limit");
        }
    }
    Ok(Outcome { id, name, passed, detail, seconds, limit_seconds })
}

pub fn run_all() -> Vec<Outcome> {
    CRITERIA.iter().map(|c| run(c.0).expect("known criterion")).collect()
}

type Check = Result<(bool, String)>;

fn sym(p: SymbolicPoint) -> SystemPoint {
    SystemPoint::Symbolic(p)
}

fn full_shift_entropy() -> Check {
    let eps = rat(3, 4);
    let ns: Vec<usize> = (0..=10).collect();
    let mut ok = true;
    let mut notes = Vec::new();
    for k in [2u8, 3] {
        let s = System::Symbolic(SymbolicSystem::full_shift(k)?);
        for &n in &ns {
            let r = separated_set(&s, None, n, &eps, true)?;
            let oracle = cylinder_classes(k, n);
            if r.cardinality != oracle || !r.exact {
                ok = false;
                notes.push(format!("k={k} n={n}: {} vs {oracle}", r.cardinality));
            }
            if r.witness_complete && !is_separated_set(&s, &r.witness, n, &eps)? {
                ok = false;
                notes.push(format!("k={k} n={n}: witness not separated"));
            }
        }
        // small n: classes of the "not separated" relation over a wider window
        for n in 0..=3 {
            let b = brute_separated_classes(&s, k, n, &eps)?;
            if b != cylinder_classes(k, n) {
                ok = false;
                notes.push(format!("k={k} n={n}: brute force {b}"));
            }
        }
        let est = entropy_estimate(&s, &eps, &ns)?;
        let err = (est.slope - (k as f64).ln()).abs();
        if err > 1e-9 {
            ok = false;
        }
        notes.push(format!("slope(k={k}) err {err:.1e}"));
    }
    Ok((ok, notes.join(", ")))
}

/// Number of distinct words of length `n + 1` over `k` symbols, enumerated.
fn cylinder_classes(k: u8, n: usize) -> u128 {
    let mut seen = HashSet::new();
    let mut word = vec![0u8; n + 1];
    loop {
        seen.insert(word.clone());
        let mut i = 0;
        while i <= n && word[i] == k - 1 {
            word[i] = 0;
            i += 1;
        }
        if i > n {
            break;
        }
        word[i] += 1;
    }
    seen.len() as u128
}

/// Points with every word on `[-1, n+1]`, grouped greedily under "not
/// `(n, ε)`-separated" (an equivalence for this ultrametric).
fn brute_separated_classes(s: &System, k: u8, n: usize, eps: &Rational) -> Result<u128> {
    let sys = s.as_symbolic().expect("symbolic");
    let len = n + 3;
    let total = (k as usize).pow(len as u32);
    let mut reps: Vec<SystemPoint> = Vec::new();
    for code in 0..total {
        let mut c = code;
        let word: Vec<u8> = (0..len)
            .map(|_| {
                let d = (c % k as usize) as u8;
                c /= k as usize;
                d
            })
            .collect();
        let p = sym(sys.extend_word(&word, -1)?);
        let mut fresh = true;
        for r in &reps {
            if !separated(s, &p, r, n, eps)? {
                fresh = false;
                break;
            }
        }
        if fresh {
            reps.push(p);
        }
    }
    Ok(reps.len() as u128)
}

fn sft_shadowing() -> Check {
    let s = System::Symbolic(SymbolicSystem::golden_mean());
    let mut ok = true;
    let mut notes = Vec::new();
    for m in [2u32, 3] {
        let delta = pow2_neg(m + 2);
        let eps = pow2_neg(m);
        for two_sided in [false, true] {
            let r = has_shadowing_at_resolution(&s, &delta, &eps, 12, two_sided)?;
            let pass = r.is_shadowable() && r.counterexample.is_none();
            ok &= pass;
            notes.push(format!(
                "m={m} {}: {}",
                if two_sided { "two-sided" } else { "forward" },
                if pass { "no counterexample" } else { "counterexample" }
            ));
        }
    }
    Ok((ok, notes.join(", ")))
}

/// The two pseudo-orbit shapes: from the source `x` across the saddle `y` to
/// the sink `z`, with time zero inside `(x, y)` resp. `(y, z)`.
pub fn circle_shapes(net: &NetSystem, delta: &Rational, pad: usize) -> Result<Vec<(PseudoOrbit, usize)>> {
    let p = fig1_points(net.len());
    let s = System::Net(net.clone());
    let third = net.len() / 3;
    let mut out = Vec::new();
    for (via, zero_at) in [(third / 2, third / 2), (third / 4, third + third / 2)] {
        let stops = [p.x, via, p.y + third / 2, p.z];
        let mut pts = vec![SystemPoint::Net(p.x); pad];
        for w in stops.windows(2) {
            let leg = connect(net, w[0], w[1], delta, 4 * net.len())?
                .ok_or_else(|| Error::NotFound(format!("no δ-chain from {} to {}", w[0], w[1])))?;
            pts.pop();
            pts.extend(leg.into_points());
        }
        pts.extend(std::iter::repeat_n(SystemPoint::Net(p.z), pad));
        let zero = pts
            .iter()
            .position(|q| q.as_net() == Some(zero_at))
            .ok_or_else(|| Error::NotFound("time-zero point not on the chain".into()))?;
        out.push((PseudoOrbit::validate(&s, pts, delta.clone())?, zero));
    }
    Ok(out)
}

fn circle_positive_not_two_sided() -> Check {
    let net = fig1_circle(360)?;
    let p = fig1_points(360);
    let s = System::Net(net.clone());
    let eps = rat(1, 20);
    let delta = rat(1, 100);
    let w = (p.y + p.z) / 2;
    let pos = is_positively_shadowable_at(&s, &SystemPoint::Net(w), &eps, &delta, 10)?;
    let mut ok = pos.is_shadowable();
    let mut notes = vec![format!("point {w} positive test: {}", pos.is_shadowable())];
    for (i, (po, zero)) in circle_shapes(&net, &delta, 20)?.iter().enumerate() {
        let z = po.points()[*zero].as_net().expect("net");
        let arc_ok = if i == 0 { z > p.x && z < p.y } else { z > p.y && z < p.z };
        let unshadowed = find_shadow(&s, po, &eps)?.is_none();
        ok &= arc_ok && unshadowed;
        notes.push(format!("shape {} ({} points, time zero at {z}): unshadowed {unshadowed}", i + 1, po.points().len()));
    }
    Ok((ok, notes.join(", ")))
}

fn dense_layers() -> Check {
    let space = dense_shadowable_example(12, 200)?;
    let s = System::Net(space.system.clone());
    let mut layers_ok = true;
    for (k, layer) in space.layers.iter().enumerate() {
        let gap = space.isolation_gap(k);
        let eps = &gap / int(2);
        let delta = &gap / int(4);
        for &q in &layer.points {
            layers_ok &= is_positively_shadowable_at(&s, &SystemPoint::Net(q), &eps, &delta, 10)?.is_shadowable();
        }
    }
    // base points at angle i/200; five net steps backwards per iterate
    let steps = 24;
    let pts: Vec<SystemPoint> = (0..=steps)
        .map(|i| SystemPoint::Net(space.base[(200 - (5 * i) % 200) % 200]))
        .collect();
    let po = PseudoOrbit::validate(&s, pts, rat(1, 40))?;
    let min_step = po.step_errors(&s)?.into_iter().min().expect("steps");
    let unshadowed = find_shadow(&s, &po, &rat(1, 10))?.is_none();
    let ok = layers_ok && min_step >= rat(1, 50) && unshadowed;
    Ok((
        ok,
        format!(
            "layers 1..=12 positive below their gaps: {}, reverse chain min step {}, unshadowed at 1/10: {unshadowed}",
            layers_ok,
            rational::fmt(&min_step)
        ),
    ))
}

fn measure_inequalities() -> Check {
    let s = System::Symbolic(SymbolicSystem::full_shift(2)?);
    let r = verify_measure_approx(&s, 1000, 2024)?;
    let per_item: Vec<String> =
        r.items.iter().map(|i| format!("item {}: {}/{}", i.item, i.violations.len(), i.trials)).collect();
    Ok((r.violation_count() == 0 && r.items.len() == 3, format!("violations {}", per_item.join(", "))))
}

fn horseshoe_certificate() -> Check {
    let s = System::Symbolic(SymbolicSystem::full_shift(2)?);
    let x = sym(SymbolicPoint::constant(2, 0)?);
    let fam = find_loop_family(&s, &x, &rat(1, 5), &rat(1, 8), 16, 2)?
        .ok_or_else(|| Error::NotFound("no two-loop family".into()))?;
    let cert = build_certificate(&s, &fam, 8)?;
    let coded8 = cert.coded.iter().filter(|c| c.word.len() == 8).count();
    let semi = verify_semiconjugacy(&s, &cert)?;
    let chk = cert.recheck(&s)?;
    let n = cert.n();
    let expected_h = 2f64.ln() / n as f64;
    let ok = coded8 == 256
        && semi.failures.is_empty()
        && chk.passes()
        && chk.separated_count == 256
        && chk.separated_exact
        && (cert.entropy_lower_bound - expected_h).abs() <= 1e-15;
    Ok((
        ok,
        format!(
            "n={n}, words coded {coded8}/256, semiconjugacy failures {}, separated {}, h >= {:.6}",
            semi.failures.len(),
            chk.separated_count,
            cert.entropy_lower_bound
        ),
    ))
}

fn positive_entropy_approximation() -> Check {
    let s = System::Symbolic(SymbolicSystem::full_shift(2)?);
    let a = sym(SymbolicPoint::periodic(2, &[0])?);
    let b = sym(SymbolicPoint::periodic(2, &[0, 1])?);
    let mu = EmpiricalMeasure::combine(&[
        (rat(1, 2), periodic_orbit_measure(&s, &a)?),
        (rat(1, 2), periodic_orbit_measure(&s, &b)?),
    ])?;
    let eps = rat(1, 5);
    let r = approximate_by_positive_entropy_ergodic(&s, &mu, &eps)?;
    let cert_ok = r.certificate.recheck(&s)?.passes();
    let ok = r.holds() && r.dstar <= &eps * int(5) && r.entropy_lower_bound() > 0.0 && cert_ok && r.recheck(&s)?;
    Ok((
        ok,
        format!(
            "d*(ν, μ) = {:.3e} <= {}, entropy >= {:.2e}, certificate {}",
            rational::to_f64(&r.dstar),
            rational::fmt(&r.bound),
            r.entropy_lower_bound(),
            if cert_ok { "verified" } else { "rejected" }
        ),
    ))
}

fn block_concatenation() -> Check {
    let s = System::Symbolic(SymbolicSystem::full_shift(2)?);
    let gens = [sym(SymbolicPoint::periodic(2, &[0])?), sym(SymbolicPoint::periodic(2, &[0, 1])?)];
    let mus = gens.iter().map(|g| periodic_orbit_measure(&s, g)).collect::<Result<Vec<_>>>()?;
    let eps = rat(1, 5);
    let r = 4;
    let family = TestFunctionFamily::standard(&s)?;
    let n = lemma_block_length(&s, &mus, &gens, r, &eps, &family)?;
    let mut rows = 0;
    let mut violations = 0;
    let mut worst = Rational::from_integer(0.into());
    for seed in 0..20 {
        let c = BlockConstruction::random(&s, &gens, n, r, &eps, 5, seed)?;
        let rep = verify_empirical_lemma(&s, &mus, r, &eps, &c)?;
        rows += rep.rows.len();
        for row in &rep.rows {
            if !row.holds {
                violations += 1;
            }
            worst = worst.max(row.value.clone());
        }
    }
    Ok((
        violations == 0,
        format!("n={n}, {rows} boundaries, {violations} violations, worst {:.4} <= 3/5", rational::to_f64(&worst)),
    ))
}

/// Distinct factors of length `len` of the Fibonacci word, from a direct
/// string iteration of `0 -> 01, 1 -> 0`.
fn fibonacci_factor_count(len: usize) -> usize {
    let mut w = String::from("0");
    while w.len() < 4096 {
        w = w.chars().map(|c| if c == '0' { "01" } else { "0" }).collect();
    }
    let b = w.as_bytes();
    (0..=b.len() - len).map(|i| &b[i..i + len]).collect::<BTreeSet<_>>().len()
}

fn extension() -> Check {
    let x = SubstitutionSubshift::fibonacci(20_000);
    let space = extension_builder(&x, 4)?;
    let rep = verify_extension_claims(&space, &rat(1, 100), &rat(1, 1000), 8, &pow2_neg(6), &rat(1, 4))?;
    let mut counts_ok = true;
    let mut counts = Vec::new();
    for l in &rep.levels {
        let oracle = fibonacci_factor_count(2 * l.depth + 1);
        counts_ok &= l.vertices == oracle && l.vertices == 2 * l.depth + 2;
        counts.push(l.vertices.to_string());
    }
    Ok((
        rep.passes() && counts_ok,
        format!(
            "bijective {}, vertices per level [{}], claims a/b/c {}/{}/{}",
            rep.bijective,
            counts.join(","),
            rep.claim_a,
            rep.claim_b,
            rep.claim_c
        ),
    ))
}

/// Seeded random circle nets: distinct angles, arbitrary maps.
fn random_net(rng: &mut ChaCha8Rng, n: usize) -> Result<NetSystem> {
    let den = 4 * n as i64;
    let mut angles: Vec<i64> = (0..den).collect();
    for i in (1..angles.len()).rev() {
        angles.swap(i, rng.gen_range(0..=i));
    }
    angles.truncate(n);
    angles.sort_unstable();
    let map: Vec<usize> = if rng.gen_bool(0.5) {
        (0..n).map(|_| rng.gen_range(0..n)).collect()
    } else {
        let mut m: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            m.swap(i, rng.gen_range(0..=i));
        }
        m
    };
    NetSystem::new_unchecked(
        DistanceSpec::Circle { angles: angles.into_iter().map(|a| rat(a, den)).collect() },
        map,
        false,
        rat(1, den),
        Vec::new(),
    )
}

/// Points with a δ-chain back to themselves of length `1..=|points|`, by
/// breadth-first search on exact rational distances.
fn brute_chain_recurrent(net: &NetSystem, delta: &Rational) -> Vec<usize> {
    let n = net.len();
    let adj: Vec<Vec<usize>> =
        (0..n).map(|a| (0..n).filter(|&b| net.distance(net.image(a), b) <= *delta).collect()).collect();
    (0..n)
        .filter(|&x| {
            let mut depth = vec![usize::MAX; n];
            let mut queue = VecDeque::new();
            for &b in &adj[x] {
                if depth[b] == usize::MAX {
                    depth[b] = 1;
                    queue.push_back(b);
                }
            }
            while let Some(v) = queue.pop_front() {
                if v == x {
                    return true;
                }
                if depth[v] < n {
                    for &b in &adj[v] {
                        if depth[b] == usize::MAX {
                            depth[b] = depth[v] + 1;
                            queue.push_back(b);
                        }
                    }
                }
            }
            false
        })
        .collect()
}

fn chain_recurrence() -> Check {
    let mut systems: Vec<(String, NetSystem)> = Vec::new();
    for n in [12, 60, 198] {
        systems.push((format!("circle:{n}"), fig1_circle(n)?));
    }
    systems.push(("layers:5/40".into(), dense_shadowable_example(5, 40)?.system));
    systems.push(("layers:10/120".into(), dense_shadowable_example(10, 120)?.system));
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..15 {
        let n = rng.gen_range(2..=200);
        systems.push((format!("random:{i}"), random_net(&mut rng, n)?));
    }
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for (name, net) in &systems {
        let n = net.len();
        // five δ values drawn from the realized distances, plus zero
        let mut deltas = vec![Rational::from_integer(0.into())];
        while deltas.len() < 5 {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            let d = net.distance(a, b) / int(rng.gen_range(1..=4));
            if !deltas.contains(&d) {
                deltas.push(d);
            }
        }
        for delta in &deltas {
            let g = ChainGraph::net(net, delta)?;
            let mut got = g.chain_recurrent_set();
            got.sort_unstable();
            if got != brute_chain_recurrent(net, delta) {
                mismatches.push(format!("{name} at δ = {}", rational::fmt(delta)));
            }
            checked += 1;
        }
    }
    Ok((
        mismatches.is_empty(),
        format!("{} systems, {checked} (system, δ) pairs, mismatches [{}]", systems.len(), mismatches.join("; ")),
    ))
}
