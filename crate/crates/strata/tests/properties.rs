//! Invariants of boundary graphs under relabelling.

use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;
use strata::level_graph::LevelGraphData;
use strata::{EmbeddedLevelGraph, GeneralisedStratum, Leg, LevelGraph};

fn all_graphs(sig: &[i32]) -> Vec<Arc<EmbeddedLevelGraph>> {
    let x = GeneralisedStratum::connected(sig).unwrap();
    let mut out = Vec::new();
    for l in 0..=x.lookup_list().len() {
        for ep in x.enhanced_profiles_of_length(l) {
            out.push(x.lookup_graph(&ep).unwrap());
        }
    }
    out
}

/// `g` with vertices permuted and edge legs renamed.
fn relabel(g: &EmbeddedLevelGraph, vperm: &[usize], leg_shift: Leg, swap_ends: bool) -> EmbeddedLevelGraph {
    let d = g.lg().to_data();
    let edge_legs: Vec<Leg> = d.edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    let rename = |l: Leg| if edge_legs.contains(&l) { l + leg_shift } else { l };
    let n = d.genera.len();
    let mut genera = vec![0; n];
    let mut legs = vec![vec![]; n];
    let mut levels = vec![0; n];
    for (v, &w) in vperm.iter().enumerate() {
        genera[w] = d.genera[v];
        levels[w] = d.levels[v];
        legs[w] = d.legs[v].iter().rev().map(|&l| rename(l)).collect();
    }
    let mut edges: Vec<(Leg, Leg)> = d.edges.iter().map(|&(a, b)| (rename(a), rename(b))).collect();
    if swap_ends {
        edges.reverse();
    }
    let orders: BTreeMap<Leg, i32> = d.orders.iter().map(|(&l, &k)| (rename(l), k)).collect();
    let lg = LevelGraph::from_data(LevelGraphData { genera, legs, edges, orders, levels }).unwrap();
    EmbeddedLevelGraph::new(g.stratum_data().clone(), lg, g.dmp().clone()).unwrap()
}

fn graph_and_relabelling() -> impl Strategy<Value = (Arc<EmbeddedLevelGraph>, Vec<usize>, Leg, bool)> {
    let graphs: Vec<_> = [&[2][..], &[1, 1], &[4], &[2, -2], &[1, 1, -2]]
        .iter()
        .flat_map(|s| all_graphs(s))
        .collect();
    proptest::sample::select(graphs).prop_flat_map(|g| {
        let n = g.lg().num_vertices();
        (Just(g), Just((0..n).collect::<Vec<_>>()).prop_shuffle(), 1..50u32, any::<bool>())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn relabelled_graphs_are_isomorphic((g, vperm, shift, swap) in graph_and_relabelling()) {
        let h = relabel(&g, &vperm, 100 * shift, swap);
        prop_assert!(g.is_isomorphic(&h));
        prop_assert!(h.is_isomorphic(&g));
        prop_assert_eq!(g.canonical_form(), h.canonical_form());
    }

    #[test]
    fn invariants_survive_relabelling((g, vperm, shift, swap) in graph_and_relabelling()) {
        let h = relabel(&g, &vperm, 100 * shift, swap);
        prop_assert_eq!(g.num_automorphisms(), h.num_automorphisms());
        prop_assert_eq!(g.level_genera(), h.level_genera());
        prop_assert_eq!(g.ell(), h.ell());
        let (mut a, mut b) = (g.prong_list(), h.prong_list());
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);
        prop_assert_eq!(g.isomorphisms(&h).len(), g.num_automorphisms());
    }
}

#[test]
fn listed_graphs_are_pairwise_distinct() {
    for sig in [&[2][..], &[1, 1], &[4], &[2, -2]] {
        let gs = all_graphs(sig);
        for (i, a) in gs.iter().enumerate() {
            for b in &gs[i + 1..] {
                assert!(!a.is_isomorphic(b), "{sig:?}: {} and {}", a.explain(), b.explain());
            }
        }
    }
}

#[test]
fn identity_is_always_an_automorphism() {
    for g in all_graphs(&[1, 1]) {
        assert!(g.num_automorphisms() >= 1);
        assert!(g.is_isomorphic(&g));
    }
}
