//! Acceptance criteria: one PASS/FAIL line per check. All comparisons are
//! exact (rational equality, integer counts, booleans); the only tolerance is
//! the wall-clock budget of the Euler characteristic of (4,).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use itertools::Itertools;
use num::BigRational;
use strata::bic_generation::bic_alt_noiso;
use strata::canonical::{isomorphisms, Labelled};
use strata::clutch_split::{clutch, doublesplit, split_bic};
use strata::degeneration_graph::EnhancedProfile;
use strata::evaluation_cache::{EvalCache, EvalContext};
use strata::level_graph::lg;
use strata::taut_ring::{Cnb, PsiMonomial, TautClass};
use strata::{EmbeddedLevelGraph, GeneralisedStratum, Leg, LevelGraph, PointRef, Signature};

/// Wall-clock budget for χ(4,) with a warm seeded cache.
const EULER_H4_BUDGET: Duration = Duration::from_secs(10);

type Outcome = Result<(), String>;

fn frac(p: i64, q: i64) -> BigRational {
    BigRational::new(p.into(), q.into())
}

fn stratum(sig: &[i32]) -> GeneralisedStratum {
    GeneralisedStratum::connected(sig).unwrap()
}

fn ep(p: &[usize], c: usize) -> EnhancedProfile {
    EnhancedProfile::new(p.to_vec(), c)
}

fn expect_eq<T: PartialEq + std::fmt::Debug>(what: &str, got: T, want: T) -> Outcome {
    if got == want {
        Ok(())
    } else {
        Err(format!("{what}: got {got:?}, expected {want:?}"))
    }
}

fn counts(sig: &[i32], want: &[usize]) -> Outcome {
    let c = stratum(sig).graph_counts();
    expect_eq(&format!("counts of {sig:?}"), c.clone(), want.to_vec())?;
    expect_eq(&format!("total of {sig:?}"), c.iter().sum::<usize>(), want.iter().sum())
}

fn criterion_1() -> Outcome {
    counts(&[2], &[1, 2, 1])?;
    counts(&[4], &[1, 8, 19, 16, 4])?;
    expect_eq("total of (4,)", stratum(&[4]).graph_counts().iter().sum::<usize>(), 48)?;
    counts(&[2, 2], &[1, 20, 86, 147, 110, 30])?;
    expect_eq("total of (2,2)", stratum(&[2, 2]).graph_counts().iter().sum::<usize>(), 394)?;
    counts(&[1, 1, 1, 1], &[1, 102, 1100, 4222, 7531, 6708, 2856, 456])?;
    expect_eq("total of (1,1,1,1)", stratum(&[1, 1, 1, 1]).graph_counts().iter().sum::<usize>(), 22976)
}

fn criterion_2() -> Outcome {
    expect_eq("bic_alt_noiso (1,1)", bic_alt_noiso(&Signature::new(vec![1, 1]).unwrap()).len(), 5)?;
    expect_eq("BICs of (0,0)", stratum(&[0, 0]).bics().len(), 1)?;
    let x = GeneralisedStratum::new(vec![vec![0, 0], vec![0]], vec![]).unwrap();
    expect_eq("BICs of [(0,0),(0,)]", x.bics().len(), 4)
}

fn criterion_3() -> Outcome {
    for (sig, d) in [(&[2][..], 3), (&[1, 1], 4), (&[2, 2], 6), (&[1, 1, 1, 1], 8)] {
        expect_eq(&format!("dim {sig:?}"), stratum(sig).dim(), d)?;
    }
    let x = stratum(&[4]);
    for (i, b) in x.bics().iter().enumerate() {
        let s = b.level(0).unwrap().dim() + b.level(1).unwrap().dim();
        expect_eq(&format!("level dims of BIC {i} of (4,)"), s, 4)?;
    }
    Ok(())
}

fn zigzag(levels: &[i32]) -> LevelGraph {
    lg(
        &[1, 1, 0, 0],
        &[&[1, 2], &[3, 4], &[5, 6, 7], &[8, 9, 10, 11]],
        &[(1, 6), (3, 7), (4, 10), (2, 11)],
        &[(1, 0), (2, 0), (3, 0), (4, 0), (5, 2), (6, -2), (7, -2), (8, 1), (9, 1), (10, -2), (11, -2)],
        levels,
    )
    .unwrap()
}

fn criterion_4() -> Outcome {
    expect_eq("long zigzag left legal", zigzag(&[0, 0, -1, -2]).is_legal_classical(), false)?;
    expect_eq("long zigzag right legal", zigzag(&[0, 0, -2, -1]).is_legal_classical(), true)?;
    // The bottom level of the centre zigzag and its two-level degenerations.
    let amb = GeneralisedStratum::connected(&[2, 1, 1]).unwrap();
    let dmp = [(5, PointRef::new(0, 0)), (8, PointRef::new(0, 1)), (9, PointRef::new(0, 2))].into_iter().collect();
    let centre = EmbeddedLevelGraph::new(amb.data().clone(), zigzag(&[0, 0, -1, -1]), dmp).unwrap();
    let bottom = centre.level(1).unwrap();
    let two = |levels: &[i32]| {
        let g = lg(
            &[0, 0],
            &[&[1, 2, 3], &[4, 5, 6, 7]],
            &[],
            &[(1, 2), (2, -2), (3, -2), (4, 1), (5, 1), (6, -2), (7, -2)],
            levels,
        )
        .unwrap();
        let pts = [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2), (1, 3)];
        let dmp = (1..=7).zip(pts).map(|(l, (c, i))| (l, PointRef::new(c, i))).collect();
        EmbeddedLevelGraph::new(bottom.data().clone(), g, dmp).unwrap()
    };
    expect_eq("zigzag centre bottom degeneration legal", two(&[-1, 0]).is_legal(), true)?;
    expect_eq("zigzag right bottom degeneration legal", two(&[0, -1]).is_legal(), false)?;
    expect_eq("(1,-1) empty", stratum(&[1, -1]).is_empty(), true)?;
    Ok(())
}

fn criterion_5() -> Outcome {
    let x = stratum(&[4]);
    let bananas: Vec<_> = x
        .bics()
        .iter()
        .filter(|b| b.level_genera() == vec![vec![2], vec![0]] && b.lg().edges().len() == 2)
        .collect();
    let auts: BTreeSet<usize> = bananas.iter().map(|b| b.num_automorphisms()).collect();
    expect_eq("double banana automorphisms (asymmetric, symmetric)", auts, [1, 2].into())?;
    let symmetric = bananas.iter().find(|b| b.prong_list().iter().all_equal()).unwrap();
    expect_eq("symmetric banana", symmetric.num_automorphisms(), 2)?;
    let asymmetric = bananas.iter().find(|b| !b.prong_list().iter().all_equal()).unwrap();
    expect_eq("asymmetric banana", asymmetric.num_automorphisms(), 1)?;
    let triple = x
        .bics()
        .iter()
        .find(|b| b.level_genera() == vec![vec![1], vec![0]] && b.lg().edges().len() == 3)
        .unwrap();
    expect_eq("triple banana", triple.num_automorphisms(), 6)?;
    let all: BTreeSet<usize> = x.bics().iter().map(|b| b.num_automorphisms()).collect();
    expect_eq("automorphism counts over BICs of (4,)", all, [1, 2, 6].into())
}

fn has_long_edge(g: &EmbeddedLevelGraph) -> bool {
    let l = g.lg();
    l.edges().iter().any(|&(a, b)| {
        let la = l.rel_level(l.vertex_of_leg(a).unwrap());
        let lb = l.rel_level(l.vertex_of_leg(b).unwrap());
        la.abs_diff(lb) > 1
    })
}

fn criterion_6() -> Outcome {
    let x = stratum(&[4]);
    let profiles = &x.lookup_list()[2];
    let sizes: Vec<usize> = profiles.iter().map(|p| x.lookup(p).unwrap().len()).collect();
    expect_eq("graphs of length 2", sizes.iter().sum::<usize>(), 19)?;
    expect_eq("profiles with one graph", sizes.iter().filter(|&&n| n == 1).count(), 15)?;
    expect_eq("profiles with two graphs", sizes.iter().filter(|&&n| n == 2).count(), 2)?;
    // The reducible profile whose graphs differ in genera and long edges.
    let reducible = profiles.iter().find(|p| {
        let gs = x.lookup(p).unwrap();
        gs.len() == 2 && {
            let genus_sets: Vec<Vec<u32>> =
                gs.iter().map(|g| g.level_genera().concat().into_iter().sorted().collect()).collect();
            genus_sets[0] != genus_sets[1] && has_long_edge(&gs[0]) != has_long_edge(&gs[1])
        }
    });
    if reducible.is_none() {
        return Err("no reducible profile told apart by genera and long edges".into());
    }
    // Triple banana on top: one bottom BIC has three preimages, yet one graph.
    let t = x
        .bics()
        .iter()
        .position(|b| b.level_genera() == vec![vec![1], vec![0]] && b.lg().edges().len() == 3)
        .unwrap();
    let inv = x.dg().bot_to_bic_inv(t);
    let (j, pre) = inv.iter().find(|(_, v)| v.len() == 3).ok_or("no three-element preimage")?;
    expect_eq(&format!("preimage of {j} below the triple banana"), pre.len(), 3)?;
    expect_eq("graphs of the triple-banana bottom profile", x.lookup(&[t, *j]).unwrap().len(), 1)
}

fn criterion_7() -> Outcome {
    let x = stratum(&[1, 1]);
    for (i, b) in x.bics().iter().enumerate() {
        let g = clutch(&split_bic(b).unwrap()).unwrap();
        if !g.is_isomorphic(b) {
            return Err(format!("clutch(split(BIC {i})) of (1,1) is not isomorphic"));
        }
    }
    for sig in [&[1, 1][..], &[2, 2, -2]] {
        let x = stratum(sig);
        for e in x.enhanced_profiles_of_length(2) {
            let g = clutch(&doublesplit(&x, &e).unwrap()).unwrap();
            if !g.is_isomorphic(&x.lookup_graph(&e).unwrap()) {
                return Err(format!("clutch(doublesplit({e})) of {sig:?} is not isomorphic"));
            }
        }
    }
    Ok(())
}

fn monomial(x: &GeneralisedStratum, e: &EnhancedProfile, psi: &[(Leg, u32)]) -> TautClass {
    x.additive_generator(e, psi.iter().copied().collect::<PsiMonomial>()).unwrap()
}

fn criterion_8() -> Outcome {
    let ctx = EvalContext::new(EvalCache::seeded());
    let x = stratum(&[2]);
    let sm = ep(&[], 0);
    expect_eq("(2,) psi1^3", x.evaluate_with(&monomial(&x, &sm, &[(1, 3)]), &ctx).unwrap(), frac(1, 1920))?;
    expect_eq("(2,) xi^3", x.evaluate_with(&x.xi_at_level_pow(0, &sm, 3).unwrap(), &ctx).unwrap(), frac(-1, 640))?;
    expect_eq("(2,) psi1", x.evaluate_with(&x.psi(1).unwrap(), &ctx).unwrap(), frac(0, 1))?;
    let y = stratum(&[1, 1]);
    let xi = y.xi().unwrap();
    let (p1, p2) = (y.psi(1).unwrap(), y.psi(2).unwrap());
    let a = y.mul(&y.mul(&y.pow(&xi, 2).unwrap(), &p1).unwrap(), &p2).unwrap();
    expect_eq("(1,1) xi^2 psi1 psi2", y.evaluate_with(&a, &ctx).unwrap(), frac(-1, 720))?;
    let b = y.mul(&y.pow(&xi, 3).unwrap(), &p1).unwrap();
    expect_eq("(1,1) xi^3 psi1", y.evaluate_with(&b, &ctx).unwrap(), frac(-1, 360))?;
    let ct = y
        .bics()
        .iter()
        .position(|b| b.level_genera() == vec![vec![2], vec![0]] && b.lg().edges().len() == 1)
        .ok_or("no compact-type BIC with genus-2 top")?;
    expect_eq(
        "(1,1) top_xi_at_level of the genus-2 compact-type BIC",
        y.top_xi_at_level_with(&ep(&[ct], 0), 0, &ctx).unwrap(),
        frac(-1, 640),
    )?;
    let z = stratum(&[23, 5, -13, -17]);
    let rc = strata::ResidueCondition::new([PointRef::new(0, 2)]);
    let cls = z.res_stratum_class(&rc).unwrap();
    expect_eq("res_stratum_class on (23,5,-13,-17)", z.evaluate_with(&cls, &ctx).unwrap(), frac(5, 1))
}

fn criterion_9() -> Outcome {
    let ctx = EvalContext::new(EvalCache::seeded());
    expect_eq("chi(2,)", stratum(&[2]).euler_characteristic_with(&ctx).unwrap(), frac(-1, 40))?;
    let x = stratum(&[4]);
    x.euler_characteristic_with(&ctx).unwrap();
    let start = Instant::now();
    let chi = x.euler_characteristic_with(&ctx).unwrap();
    let took = start.elapsed();
    expect_eq("chi(4,)", chi, frac(-55, 504))?;
    if took > EULER_H4_BUDGET {
        return Err(format!("chi(4,) warm took {took:?}, budget {EULER_H4_BUDGET:?}"));
    }
    Ok(())
}

/// All leg bijections preserving orders, marks, vertices, levels and edges.
fn brute_force(d1: Labelled<'_>, d2: Labelled<'_>) -> Vec<BTreeMap<Leg, Leg>> {
    let (g1, g2) = (d1.lg, d2.lg);
    let l1: Vec<Leg> = g1.orders().keys().copied().collect();
    let l2: Vec<Leg> = g2.orders().keys().copied().collect();
    if l1.len() != l2.len() || g1.num_vertices() != g2.num_vertices() {
        return vec![];
    }
    let mut out = Vec::new();
    for perm in l2.iter().copied().permutations(l2.len()) {
        let m: BTreeMap<Leg, Leg> = l1.iter().copied().zip(perm).collect();
        if l1.iter().any(|l| g1.orders()[l] != g2.orders()[&m[l]] || d1.marks.get(l) != d2.marks.get(&m[l])) {
            continue;
        }
        let mut vm: HashMap<usize, usize> = HashMap::new();
        let mut ok = true;
        for l in &l1 {
            let (v, w) = (g1.vertex_of_leg(*l).unwrap(), g2.vertex_of_leg(m[l]).unwrap());
            ok &= *vm.entry(v).or_insert(w) == w;
        }
        if !ok || vm.values().unique().count() != vm.len() {
            continue;
        }
        if vm.iter().any(|(&v, &w)| {
            g1.genus(v) != g2.genus(w)
                || g1.internal_levels()[v] != g2.internal_levels()[w]
                || g1.legs_at_vertex(v).len() != g2.legs_at_vertex(w).len()
        }) {
            continue;
        }
        let edges_ok = g1.edges().iter().all(|&(a, b)| {
            let (x, y) = (m[&a], m[&b]);
            g2.edges().contains(&(x, y)) || g2.edges().contains(&(y, x))
        });
        if edges_ok {
            out.push(m);
        }
    }
    out.sort();
    out
}

fn fast(d1: Labelled<'_>, d2: Labelled<'_>) -> Vec<BTreeMap<Leg, Leg>> {
    isomorphisms(d1, d2).into_iter().map(|i| i.isom_legs).sorted().collect()
}

fn property_isomorphisms() -> Outcome {
    let mut checked = 0;
    for sig in [&[2][..], &[1, 1], &[4], &[2, -2], &[1, 1, -2], &[2, 2]] {
        let x = stratum(sig);
        let graphs: Vec<Arc<EmbeddedLevelGraph>> = (0..x.lookup_list().len())
            .flat_map(|l| x.enhanced_profiles_of_length(l))
            .map(|e| x.lookup_graph(&e).unwrap())
            .filter(|g| g.lg().orders().len() <= 6)
            .collect();
        for (a, b) in graphs.iter().cartesian_product(graphs.iter()) {
            if fast(a.labelled(), b.labelled()) != brute_force(a.labelled(), b.labelled()) {
                return Err(format!("isomorphisms differ from brute force in {sig:?}"));
            }
            checked += 1;
        }
    }
    if checked == 0 {
        return Err("no graphs checked".into());
    }
    Ok(())
}

fn property_leg_invariance() -> Outcome {
    let ctx = EvalContext::new(EvalCache::seeded());
    let x = stratum(&[4]);
    let mut seen = Vec::new();
    for l in 0..x.lookup_list().len() {
        for e in x.enhanced_profiles_of_length(l) {
            let g = x.lookup_graph(&e).unwrap();
            let dims: Vec<i64> = (0..g.num_levels()).map(|i| g.level(i).unwrap().dim()).collect();
            if dims.iter().sum::<i64>() != 1 {
                continue;
            }
            let amb = x.mul(&x.xi().unwrap(), &x.taut_from_graph(&e).unwrap()).unwrap();
            let v = x.evaluate_with(&amb, &ctx).unwrap();
            for (lv, _) in dims.iter().enumerate().filter(|(_, &d)| d == 1) {
                let split = strata::clutch_split::splitting_info_at_level(&x, &e, lv).unwrap();
                for &leg in split.leg_dict.keys() {
                    let w = x.evaluate_with(&x.xi_at_level(lv, &e, Some(leg)).unwrap(), &ctx).unwrap();
                    expect_eq(&format!("{e} level {lv} leg {leg}"), w, v.clone())?;
                }
            }
            seen.push(v);
        }
    }
    seen.sort();
    expect_eq("values on 1-dimensional graphs", seen, vec![frac(1, 48), frac(1, 48), frac(1, 48), frac(1, 24)])
}

fn property_commutativity() -> Outcome {
    let ctx = EvalContext::new(EvalCache::seeded());
    let x = stratum(&[2]);
    let d: Vec<TautClass> = (0..x.bics().len()).map(|i| x.taut_from_graph(&ep(&[i], 0)).unwrap()).collect();
    for t in (0..3).map(|_| 0..d.len()).multi_cartesian_product() {
        let vals: BTreeSet<BigRational> = t
            .iter()
            .permutations(3)
            .map(|o| {
                let p = x.mul(&x.mul(&d[*o[0]], &d[*o[1]]).unwrap(), &d[*o[2]]).unwrap();
                x.evaluate_with(&p, &ctx).unwrap()
            })
            .collect();
        if vals.len() != 1 {
            return Err(format!("D{t:?} depends on the order: {vals:?}"));
        }
    }
    Ok(())
}

fn property_normal_bundle() -> Outcome {
    let x = stratum(&[2]);
    for i in 0..x.bics().len() {
        let e = ep(&[i], 0);
        let d = x.taut_from_graph(&e).unwrap();
        let nb = x.normal_bundle(&e, &ep(&[], 0)).unwrap();
        expect_eq(&format!("NB(D{i}) = D{i}^2"), x.symmetrize(&nb).unwrap(), x.symmetrize(&x.mul(&d, &d).unwrap()).unwrap())?;
    }
    Ok(())
}

fn property_cnb_transversal() -> Outcome {
    let x = stratum(&[2]);
    expect_eq("cnb of the two BICs of (2,)", (*x.cnb(&ep(&[0], 0), &ep(&[1], 0), &ep(&[], 0)).unwrap()).clone(), Cnb::Unit)
}

fn main() -> ExitCode {
    let checks: Vec<(&str, fn() -> Outcome)> = vec![
        ("1. boundary graph counts", criterion_1),
        ("2. bic_alt and generalised BIC counts", criterion_2),
        ("3. dimension identities", criterion_3),
        ("4. legality fixtures", criterion_4),
        ("5. automorphisms", criterion_5),
        ("6. reducibility statistics of (4,)", criterion_6),
        ("7. clutch/split round trips", criterion_7),
        ("8. intersection numbers", criterion_8),
        ("9. Euler characteristics (chi(4,) warm budget 10 s)", criterion_9),
        ("10a. isomorphisms equal brute force (<= 6 legs)", property_isomorphisms),
        ("10b. leg-choice invariance on (4,)", property_leg_invariance),
        ("10c. commutativity of triple BIC products on (2,)", property_commutativity),
        ("10d. NB(D) = D^2 on (2,)", property_normal_bundle),
        ("10e. cnb transversality on (2,)", property_cnb_transversal),
    ];
    let mut failed = 0;
    for (name, f) in checks {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panic: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => println!("PASS {name} ({secs:.2}s)"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name} ({secs:.2}s): {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
