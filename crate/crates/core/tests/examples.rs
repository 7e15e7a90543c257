use shadowtrace::chain::{connect, nearest_minimal_point, ChainGraph};
use shadowtrace::construct::{dense_shadowable_example, fig1_circle, fig1_points};
use shadowtrace::measure::{
    dstar, empirical_measure, lemma_block_length, periodic_orbit_measure, verify_empirical_lemma, BlockConstruction,
    EmpiricalMeasure, TestFunctionFamily,
};
use shadowtrace::rational::{int, pow2_neg, rat};
use shadowtrace::shadow::{
    chain_class_shadowability, find_shadow, has_shadowing_at_resolution, is_positively_shadowable_at,
    uniform_delta_for_set,
};
use shadowtrace::*;

fn sigma2() -> System {
    System::Symbolic(SymbolicSystem::full_shift(2).unwrap())
}

fn per(w: &[u8]) -> SystemPoint {
    SystemPoint::Symbolic(SymbolicPoint::periodic(2, w).unwrap())
}

#[test]
fn circle_connect_follows_the_flow() {
    let net = fig1_circle(360).unwrap();
    let p = fig1_points(360);
    let delta = rat(1, 100);
    let po = connect(&net, 30, 200, &delta, 1000).unwrap().unwrap();
    let idx: Vec<usize> = po.points().iter().map(|q| q.as_net().unwrap()).collect();
    assert!(idx.windows(2).all(|w| w[1] >= w[0]), "chain runs counter-clockwise");
    assert!(idx.iter().any(|&i| i < p.y) && idx.iter().any(|&i| i > p.y));
    assert!(connect(&net, p.z, p.x, &delta, 1000).unwrap().is_none());
}

#[test]
fn circle_chain_structure() {
    let net = fig1_circle(360).unwrap();
    let p = fig1_points(360);
    // below the mesh only the fixed points chain-return
    let g = ChainGraph::net(&net, &rat(1, 720)).unwrap();
    let mut rec = g.chain_recurrent_set();
    rec.sort_unstable();
    assert_eq!(rec, vec![p.x, p.y, p.z]);
    assert_eq!(g.chain_class(p.z).unwrap(), vec![p.z]);
    // at 1/100 each fixed point drags along the net points it can jump back to
    let g = ChainGraph::net(&net, &rat(1, 100)).unwrap();
    let classes = g.decompose().classes;
    assert_eq!(classes.len(), 3);
    for c in &classes {
        assert_eq!(c.iter().filter(|&&i| i == p.x || i == p.y || i == p.z).count(), 1);
        assert!(c.len() <= 11);
    }
    let s = System::Net(net);
    let r = chain_class_shadowability(&s, &SystemPoint::Net(p.z), &rat(1, 20), &rat(1, 720), 10).unwrap();
    assert_eq!(r.class, vec![p.z]);
    assert!(r.uniform);
}

#[test]
fn sink_basin_has_a_uniform_delta() {
    let s = System::Net(fig1_circle(360).unwrap());
    let z = fig1_points(360).z;
    let k: Vec<SystemPoint> = (z - 5..=z + 5).map(SystemPoint::Net).collect();
    let u = uniform_delta_for_set(&s, &k, &rat(1, 20), 10).unwrap();
    assert!(u.delta > rat(0, 1));
    assert!(u.pointwise.iter().all(|d| *d >= u.delta));
}

#[test]
fn two_layers_take_the_smaller_delta() {
    let space = dense_shadowable_example(6, 60).unwrap();
    let s = System::Net(space.system.clone());
    let eps = rat(1, 100);
    let one = |l: usize| {
        let k: Vec<SystemPoint> = space.layers[l].points.iter().map(|&i| SystemPoint::Net(i)).collect();
        uniform_delta_for_set(&s, &k, &eps, 6).unwrap().delta
    };
    let both: Vec<SystemPoint> =
        space.layers[3].points.iter().chain(&space.layers[4].points).map(|&i| SystemPoint::Net(i)).collect();
    let joint = uniform_delta_for_set(&s, &both, &eps, 6).unwrap().delta;
    assert_eq!(joint, one(3).min(one(4)));
}

#[test]
fn golden_mean_glues_every_short_pseudo_orbit() {
    let s = System::Symbolic(SymbolicSystem::golden_mean());
    for m in [2u32, 3] {
        let r = has_shadowing_at_resolution(&s, &pow2_neg(m + 1), &pow2_neg(m), 20, false).unwrap();
        assert!(r.is_shadowable(), "m = {m}");
    }
}

#[test]
fn full_shift_positive_at_every_tested_point() {
    let s = sigma2();
    for w in [&[0u8][..], &[0, 1], &[0, 0, 1], &[1, 1, 0, 1]] {
        let r = is_positively_shadowable_at(&s, &per(w), &pow2_neg(2), &pow2_neg(4), 10).unwrap();
        assert!(r.is_shadowable());
    }
}

#[test]
fn layered_space_metric_and_orientation() {
    let space = dense_shadowable_example(7, 42).unwrap();
    assert!(space.system.validate_metric().passes());
    for l in &space.layers {
        let n = l.points.len();
        for (i, &p) in l.points.iter().enumerate() {
            assert_eq!(space.system.image(p), l.points[(i + 1) % n]);
        }
    }
}

#[test]
fn base_circle_class_is_not_shadowable() {
    let space = dense_shadowable_example(6, 60).unwrap();
    let s = System::Net(space.system.clone());
    let b = SystemPoint::Net(space.base[0]);
    let r = chain_class_shadowability(&s, &b, &rat(1, 10), &rat(1, 30), 12).unwrap();
    assert!(!r.uniform);
    let failing = r.reports.iter().filter(|x| !x.is_shadowable()).count();
    assert_eq!(failing, r.reports.len());
    for rep in &r.reports {
        let po = rep.counterexample.as_ref().unwrap();
        assert!(find_shadow(&s, po, &rat(1, 10)).unwrap().is_none());
    }
}

#[test]
fn base_point_is_its_own_nearest_minimal_point() {
    // the sampled base circle is pointwise fixed, so every base point is minimal
    let space = dense_shadowable_example(12, 120).unwrap();
    let z = space.base[7];
    let m = nearest_minimal_point(&space.system, z, &rat(1, 10), &rat(1, 10)).unwrap().unwrap();
    assert_eq!(m, z);
    let k = space.layers.last().unwrap();
    let thr = space.system.threshold(&rat(1, 10)).unwrap();
    assert!(k.points.iter().any(|&q| space.system.dist_num(z, q) <= thr));
}

#[test]
fn empirical_weights_by_direct_count() {
    let s = sigma2();
    let x = per(&[0, 1]);
    let e = empirical_measure(&s, &x, 3).unwrap();
    let sx = s.image(&x).unwrap();
    let w = |p: &SystemPoint| e.atoms().iter().find(|a| &a.point == p).map(|a| a.weight.clone());
    assert_eq!(w(&x), Some(rat(2, 3)));
    assert_eq!(w(&sx), Some(rat(1, 3)));
}

#[test]
fn matched_close_atoms_are_close() {
    let s = sigma2();
    let fam = TestFunctionFamily::standard(&s).unwrap();
    let a = [per(&[0, 0, 0, 1]), per(&[1, 0, 1, 1, 0])];
    let b: Vec<SystemPoint> = a
        .iter()
        .map(|p| {
            let q = p.as_symbolic().unwrap();
            let mut w = q.word(-3, 3);
            w[0] ^= 1;
            SystemPoint::Symbolic(SymbolicPoint::new(2, -3, w, vec![0], 0).unwrap())
        })
        .collect();
    // b differs from a only on |j| >= 3
    let eps = rat(1, 4);
    for (p, q) in a.iter().zip(&b) {
        assert!(s.distance(p, q).unwrap() < eps);
    }
    let d = dstar(&s, &EmpiricalMeasure::uniform(&a).unwrap(), &EmpiricalMeasure::uniform(&b).unwrap(), &fam).unwrap();
    assert!(d.value < eps);
}

#[test]
fn convex_combination_stays_close() {
    let s = sigma2();
    let fam = TestFunctionFamily::standard(&s).unwrap();
    let mu = periodic_orbit_measure(&s, &per(&[0])).unwrap();
    let near = [per(&[0, 0, 0, 0, 0, 0, 1]), per(&[0, 0, 0, 0, 0, 1]), per(&[0, 0, 0, 0, 0, 0, 0, 1])];
    let ms: Vec<EmpiricalMeasure> = near.iter().map(|p| periodic_orbit_measure(&s, p).unwrap()).collect();
    let eps = ms.iter().map(|m| dstar(&s, m, &mu, &fam).unwrap().value).max().unwrap();
    for w in [[1, 1, 1], [1, 2, 3], [5, 0, 1]] {
        let total: i64 = w.iter().sum();
        let parts: Vec<(Rational, EmpiricalMeasure)> =
            w.iter().zip(&ms).filter(|(x, _)| **x > 0).map(|(x, m)| (rat(*x, total), m.clone())).collect();
        let c = EmpiricalMeasure::combine(&parts).unwrap();
        assert!(dstar(&s, &c, &mu, &fam).unwrap().value <= eps);
    }
}

#[test]
fn block_bound_scales_with_epsilon() {
    let s = sigma2();
    let gens = [per(&[0]), per(&[0, 1])];
    let mus: Vec<EmpiricalMeasure> = gens.iter().map(|g| periodic_orbit_measure(&s, g).unwrap()).collect();
    let fam = TestFunctionFamily::standard(&s).unwrap();
    for eps in [rat(1, 5), rat(1, 50)] {
        let n = lemma_block_length(&s, &mus, &gens, 4, &eps, &fam).unwrap();
        let c = BlockConstruction::random(&s, &gens, n, 4, &eps, 3, 9).unwrap();
        let rep = verify_empirical_lemma(&s, &mus, 4, &eps, &c).unwrap();
        assert!(rep.holds());
        assert!(rep.rows.iter().all(|r| r.value <= &eps * int(3)));
    }
}
