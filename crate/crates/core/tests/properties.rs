use std::collections::VecDeque;

use proptest::prelude::*;
use shadowtrace::chain::{connect, ChainGraph};
use shadowtrace::entropy::separated_set;
use shadowtrace::measure::{dstar, EmpiricalMeasure, TestFunctionFamily};
use shadowtrace::orbit::PseudoOrbit;
use shadowtrace::rational::{pow2_neg, rat};
use shadowtrace::*;

fn point(k: u8) -> impl Strategy<Value = SymbolicPoint> {
    (
        -4i64..4,
        prop::collection::vec(0..k, 0..6),
        prop::collection::vec(0..k, 1..4),
        0i64..4,
    )
        .prop_map(move |(o, pre, per, ph)| SymbolicPoint::new(k, o, pre, per, ph).unwrap())
}

fn circle_net() -> impl Strategy<Value = NetSystem> {
    (3usize..14).prop_flat_map(|n| {
        (prop::collection::vec(0..n, n), Just(n)).prop_map(|(map, n)| {
            let angles = (0..n).map(|i| rat(i as i64, n as i64)).collect();
            NetSystem::new(DistanceSpec::Circle { angles }, map, false, rat(1, n as i64), Vec::new()).unwrap()
        })
    })
}

/// Shortest δ-chain length from `a` to `b`, by plain breadth-first search.
fn bfs_len(net: &NetSystem, a: usize, b: usize, delta: &Rational) -> Option<usize> {
    let n = net.len();
    let mut dist = vec![usize::MAX; n];
    dist[a] = 0;
    let mut q = VecDeque::from([a]);
    while let Some(v) = q.pop_front() {
        for w in 0..n {
            if dist[w] == usize::MAX && net.distance(net.image(v), w) <= *delta {
                dist[w] = dist[v] + 1;
                q.push_back(w);
            }
        }
    }
    (dist[b] != usize::MAX).then_some(dist[b])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symbolic_metric_is_an_ultrametric(a in point(3), b in point(3), c in point(3)) {
        let ab = symbolic_distance(&a, &b).unwrap();
        let bc = symbolic_distance(&b, &c).unwrap();
        let ac = symbolic_distance(&a, &c).unwrap();
        prop_assert_eq!(&ab, &symbolic_distance(&b, &a).unwrap());
        prop_assert!(ac <= ab.clone().max(bc));
        prop_assert_eq!(ab == rat(0, 1), a == b);
    }

    #[test]
    fn shift_composes(a in point(2), i in -8i64..8, j in -8i64..8) {
        let s = System::Symbolic(SymbolicSystem::full_shift(2).unwrap());
        let p = SystemPoint::Symbolic(a);
        let lhs = s.apply(&s.apply(&p, i).unwrap(), j).unwrap();
        prop_assert_eq!(lhs, s.apply(&p, i + j).unwrap());
    }

    #[test]
    fn net_map_composes(net in circle_net(), x in 0usize..64, i in 0i64..10, j in 0i64..10) {
        let x = x % net.len();
        prop_assert_eq!(net.apply(net.apply(x, i).unwrap(), j).unwrap(), net.apply(x, i + j).unwrap());
    }

    #[test]
    fn separated_count_is_monotone(k in 2u8..4, n in 0usize..6, e in 1u32..4) {
        let s = System::Symbolic(SymbolicSystem::full_shift(k).unwrap());
        let c = |n: usize, eps: &Rational| separated_set(&s, None, n, eps, true).unwrap().cardinality;
        let eps = pow2_neg(e);
        prop_assert!(c(n, &eps) <= c(n + 1, &eps));
        prop_assert!(c(n, &eps) <= c(n, &pow2_neg(e + 1)));
    }

    #[test]
    fn net_separated_count_is_monotone(net in circle_net(), n in 0usize..4, d in 1i64..6) {
        let s = System::Net(net);
        let eps = rat(1, d + 1);
        let c = |n: usize, eps: &Rational| separated_set(&s, None, n, eps, true).unwrap().cardinality;
        prop_assert!(c(n, &eps) <= c(n + 1, &eps));
        prop_assert!(c(n, &rat(1, d)) <= c(n, &eps));
    }

    #[test]
    fn concatenation_is_associative(net in circle_net(), picks in prop::collection::vec(0usize..64, 4)) {
        let delta = rat(1, 2);
        let s = System::Net(net.clone());
        let ends: Vec<usize> = picks.iter().map(|p| p % net.len()).collect();
        let legs: Vec<PseudoOrbit> = ends
            .windows(2)
            .filter_map(|w| connect(&net, w[0], w[1], &delta, 64).unwrap())
            .collect();
        prop_assume!(legs.len() == 3);
        let left = legs[0].concatenate(&legs[1], &s).unwrap().concatenate(&legs[2], &s).unwrap();
        let right = legs[0].concatenate(&legs[1].concatenate(&legs[2], &s).unwrap(), &s).unwrap();
        prop_assert_eq!(left.points(), right.points());
        prop_assert_eq!(left.delta(), right.delta());
    }

    #[test]
    fn connect_is_shortest(net in circle_net(), a in 0usize..64, b in 0usize..64, d in 1i64..6) {
        let (a, b) = (a % net.len(), b % net.len());
        let delta = rat(1, net.len() as i64 * d);
        let got = connect(&net, a, b, &delta, 8).unwrap();
        let want = bfs_len(&net, a, b, &delta).filter(|&l| l <= 8);
        match (got, want) {
            (Some(po), Some(l)) => {
                prop_assert_eq!(po.step_count(), l);
                prop_assert_eq!(po.first().as_net(), Some(a));
                prop_assert_eq!(po.last().as_net(), Some(b));
                po.check(&System::Net(net.clone())).unwrap();
            }
            (None, None) => {}
            (g, w) => prop_assert!(false, "connect {:?} vs breadth-first {:?}", g.map(|p| p.step_count()), w),
        }
    }

    #[test]
    fn dstar_is_a_pseudometric(
        ws in prop::collection::vec(prop::collection::vec(0u8..2, 1..4), 3),
        cs in prop::collection::vec(prop::collection::vec(0u8..2, 1..4), 3),
    ) {
        let s = System::Symbolic(SymbolicSystem::full_shift(2).unwrap());
        let fam = TestFunctionFamily::standard(&s).unwrap();
        let ms: Vec<EmpiricalMeasure> = ws
            .iter()
            .zip(&cs)
            .map(|(w, c)| {
                let pts = [w, c].iter().map(|u| SystemPoint::Symbolic(SymbolicPoint::periodic(2, u).unwrap())).collect::<Vec<_>>();
                EmpiricalMeasure::uniform(&pts).unwrap()
            })
            .collect();
        let d = |i: usize, j: usize| dstar(&s, &ms[i], &ms[j], &fam).unwrap().value;
        prop_assert_eq!(d(0, 1), d(1, 0));
        prop_assert_eq!(d(0, 0), rat(0, 1));
        prop_assert!(d(0, 2) <= d(0, 1) + d(1, 2));
    }
}

#[test]
fn chain_graph_matches_edges() {
    let net = shadowtrace::construct::fig1_circle(36).unwrap();
    let delta = rat(1, 20);
    let g = ChainGraph::net(&net, &delta).unwrap();
    for a in 0..net.len() {
        for b in 0..net.len() {
            assert_eq!(g.has_edge(a, b), net.distance(net.image(a), b) <= delta);
        }
    }
}
