//! Canonical forms and isomorphisms of level graphs whose marked legs carry
//! labels.
//!
//! Vertices are coloured by level, genus, labelled legs and leg orders, then
//! refined by their neighbourhoods.  Canonical forms come from
//! individualisation-refinement; isomorphisms from backtracking over colour
//! classes followed by bijections of parallel edges.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashMap};
use std::hash::{Hash, Hasher};

use crate::level_graph::{Leg, LevelGraph};

/// Label attached to a marked leg.
pub type Label = u64;

/// Canonical serialisation of a labelled level graph.
pub type CanonForm = Vec<i64>;

/// A vertex and leg bijection between two labelled graphs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphIsomorphism {
    pub isom_vertices: Vec<usize>,
    pub isom_legs: BTreeMap<Leg, Leg>,
}

/// A level graph together with labels for its marked legs.
#[derive(Clone, Copy, Debug)]
pub struct Labelled<'a> {
    pub lg: &'a LevelGraph,
    pub marks: &'a BTreeMap<Leg, Label>,
}

fn hash_of<T: Hash>(t: &T) -> u64 {
    let mut h = DefaultHasher::new();
    t.hash(&mut h);
    h.finish()
}

/// Per-vertex adjacency: (other vertex, order here, order there).
fn incidences(lg: &LevelGraph) -> Vec<Vec<(usize, i32, i32)>> {
    let mut inc = vec![Vec::new(); lg.num_vertices()];
    for &(a, b) in lg.edges() {
        let (va, vb) = (lg.vertex(a), lg.vertex(b));
        inc[va].push((vb, lg.order(a), lg.order(b)));
        inc[vb].push((va, lg.order(b), lg.order(a)));
    }
    inc
}

fn initial_colours(d: Labelled<'_>) -> Vec<u64> {
    let lg = d.lg;
    (0..lg.num_vertices())
        .map(|v| {
            let mut marked: Vec<(Label, i32)> = Vec::new();
            let mut other: Vec<i32> = Vec::new();
            for &l in lg.legs_at_vertex(v) {
                match d.marks.get(&l) {
                    Some(&lab) => marked.push((lab, lg.order(l))),
                    None => other.push(lg.order(l)),
                }
            }
            marked.sort_unstable();
            other.sort_unstable();
            hash_of(&(lg.internal_levels()[v], lg.genus(v), marked, other))
        })
        .collect()
}

fn num_classes(c: &[u64]) -> usize {
    let mut s = c.to_vec();
    s.sort_unstable();
    s.dedup();
    s.len()
}

/// Refine colours by neighbourhoods until the partition is stable.
fn refine(inc: &[Vec<(usize, i32, i32)>], mut colours: Vec<u64>) -> Vec<u64> {
    let mut classes = num_classes(&colours);
    loop {
        let next: Vec<u64> = (0..colours.len())
            .map(|v| {
                let mut nb: Vec<(u64, i32, i32)> = inc[v]
                    .iter()
                    .map(|&(w, o1, o2)| (colours[w], o1, o2))
                    .collect();
                nb.sort_unstable();
                hash_of(&(colours[v], nb))
            })
            .collect();
        let nc = num_classes(&next);
        colours = next;
        if nc == classes {
            return colours;
        }
        classes = nc;
    }
}

/// Stable vertex colours, comparable between graphs.
pub fn vertex_colours(d: Labelled<'_>) -> Vec<u64> {
    refine(&incidences(d.lg), initial_colours(d))
}

fn serialise(d: Labelled<'_>, pos: &[usize]) -> CanonForm {
    let lg = d.lg;
    let n = lg.num_vertices();
    let mut order = vec![0usize; n];
    for v in 0..n {
        order[pos[v]] = v;
    }
    let mut out: Vec<i64> = vec![n as i64];
    for &v in &order {
        out.push(lg.internal_levels()[v] as i64);
        out.push(lg.genus(v) as i64);
        let mut marked: Vec<(Label, i32)> = lg
            .legs_at_vertex(v)
            .iter()
            .filter_map(|l| d.marks.get(l).map(|&lab| (lab, lg.order(*l))))
            .collect();
        marked.sort_unstable();
        out.push(marked.len() as i64);
        for (lab, o) in marked {
            out.push(lab as i64);
            out.push(o as i64);
        }
    }
    let mut edges: Vec<(usize, usize, i32, i32)> = lg
        .edges()
        .iter()
        .map(|&(a, b)| {
            let (pa, pb) = (pos[lg.vertex(a)], pos[lg.vertex(b)]);
            let (oa, ob) = (lg.order(a), lg.order(b));
            if lg.is_horizontal((a, b)) && (pb, ob) < (pa, oa) {
                (pb, pa, ob, oa)
            } else {
                (pa, pb, oa, ob)
            }
        })
        .collect();
    edges.sort_unstable();
    out.push(edges.len() as i64);
    for (a, b, oa, ob) in edges {
        out.extend([a as i64, b as i64, oa as i64, ob as i64]);
    }
    out
}

fn canon_search(
    d: Labelled<'_>,
    inc: &[Vec<(usize, i32, i32)>],
    colours: Vec<u64>,
    best: &mut Option<CanonForm>,
) {
    let colours = refine(inc, colours);
    let mut cells: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (v, &c) in colours.iter().enumerate() {
        cells.entry(c).or_default().push(v);
    }
    match cells.values().find(|cell| cell.len() > 1) {
        None => {
            let mut pos = vec![0usize; colours.len()];
            for (i, cell) in cells.values().enumerate() {
                pos[cell[0]] = i;
            }
            let s = serialise(d, &pos);
            if best.as_ref().is_none_or(|b| s < *b) {
                *best = Some(s);
            }
        }
        Some(cell) => {
            for &v in cell {
                let mut c = colours.clone();
                c[v] = hash_of(&(colours[v], 0x5eed_u32));
                canon_search(d, inc, c, best);
            }
        }
    }
}

/// The canonical form: minimal serialisation over all colour-compatible
/// vertex orders reachable by individualisation-refinement.
pub fn canonical_form(d: Labelled<'_>) -> CanonForm {
    let inc = incidences(d.lg);
    let mut best = None;
    canon_search(d, &inc, initial_colours(d), &mut best);
    best.unwrap_or_else(|| vec![0, 0])
}

type PairEdges = HashMap<(usize, usize), Vec<(i32, i32)>>;

fn pair_edges(lg: &LevelGraph) -> PairEdges {
    let mut m: PairEdges = HashMap::new();
    for &(a, b) in lg.edges() {
        let (va, vb) = (lg.vertex(a), lg.vertex(b));
        m.entry((va, vb)).or_default().push((lg.order(a), lg.order(b)));
        if va != vb {
            m.entry((vb, va)).or_default().push((lg.order(b), lg.order(a)));
        } else {
            m.entry((va, va)).or_default().push((lg.order(b), lg.order(a)));
        }
    }
    for v in m.values_mut() {
        v.sort_unstable();
    }
    m
}

struct IsoSearch<'a> {
    d1: Labelled<'a>,
    d2: Labelled<'a>,
    c1: Vec<u64>,
    c2: Vec<u64>,
    pe1: PairEdges,
    pe2: PairEdges,
    order: Vec<usize>,
}

impl<'a> IsoSearch<'a> {
    fn compatible(&self, phi: &[usize], v: usize, w: usize, assigned: &[usize]) -> bool {
        let empty = Vec::new();
        let self1 = self.pe1.get(&(v, v)).unwrap_or(&empty);
        let self2 = self.pe2.get(&(w, w)).unwrap_or(&empty);
        if self1 != self2 {
            return false;
        }
        assigned.iter().all(|&u| {
            let e1 = self.pe1.get(&(v, u)).unwrap_or(&empty);
            let e2 = self.pe2.get(&(w, phi[u])).unwrap_or(&empty);
            e1 == e2
        })
    }

    fn vertex_maps(
        &self,
        depth: usize,
        phi: &mut Vec<usize>,
        used: &mut Vec<bool>,
        f: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        if depth == self.order.len() {
            return f(phi);
        }
        let v = self.order[depth];
        let assigned: Vec<usize> = self.order[..depth].to_vec();
        for w in 0..self.c2.len() {
            if used[w] || self.c2[w] != self.c1[v] || !self.compatible(phi, v, w, &assigned) {
                continue;
            }
            phi[v] = w;
            used[w] = true;
            let cont = self.vertex_maps(depth + 1, phi, used, f);
            used[w] = false;
            phi[v] = usize::MAX;
            if !cont {
                return false;
            }
        }
        true
    }

    /// Enumerate leg maps over a fixed vertex map.
    fn leg_maps(&self, phi: &[usize], f: &mut dyn FnMut(&GraphIsomorphism) -> bool) -> bool {
        let (g1, g2) = (self.d1.lg, self.d2.lg);
        let mut legs = BTreeMap::new();
        let by_label: HashMap<Label, Leg> = self.d2.marks.iter().map(|(&l, &lab)| (lab, l)).collect();
        for (&l, lab) in self.d1.marks {
            let Some(&l2) = by_label.get(lab) else { return true };
            if g2.vertex(l2) != phi[g1.vertex(l)] || g2.order(l2) != g1.order(l) {
                return true;
            }
            legs.insert(l, l2);
        }
        // Candidate oriented edges of g2 keyed by endpoint vertices and orders.
        let mut cands: HashMap<(usize, usize, i32, i32), Vec<(usize, Leg, Leg)>> = HashMap::new();
        for (id, &(a, b)) in g2.edges().iter().enumerate() {
            let (va, vb) = (g2.vertex(a), g2.vertex(b));
            cands
                .entry((va, vb, g2.order(a), g2.order(b)))
                .or_default()
                .push((id, a, b));
            if g2.is_horizontal((a, b)) {
                cands
                    .entry((vb, va, g2.order(b), g2.order(a)))
                    .or_default()
                    .push((id, b, a));
            }
        }
        let mut todo: Vec<(Leg, Leg, Vec<(usize, Leg, Leg)>)> = Vec::new();
        for &(a, b) in g1.edges() {
            let key = (phi[g1.vertex(a)], phi[g1.vertex(b)], g1.order(a), g1.order(b));
            let Some(c) = cands.get(&key) else { return true };
            todo.push((a, b, c.clone()));
        }
        let mut used = vec![false; g2.edges().len()];
        self.assign_edges(0, &todo, &mut used, &mut legs, phi, f)
    }

    fn assign_edges(
        &self,
        i: usize,
        todo: &[(Leg, Leg, Vec<(usize, Leg, Leg)>)],
        used: &mut Vec<bool>,
        legs: &mut BTreeMap<Leg, Leg>,
        phi: &[usize],
        f: &mut dyn FnMut(&GraphIsomorphism) -> bool,
    ) -> bool {
        if i == todo.len() {
            return f(&GraphIsomorphism {
                isom_vertices: phi.to_vec(),
                isom_legs: legs.clone(),
            });
        }
        let (a, b, ref cands) = todo[i];
        for &(id, a2, b2) in cands {
            if used[id] {
                continue;
            }
            used[id] = true;
            legs.insert(a, a2);
            legs.insert(b, b2);
            let cont = self.assign_edges(i + 1, todo, used, legs, phi, f);
            legs.remove(&a);
            legs.remove(&b);
            used[id] = false;
            if !cont {
                return false;
            }
        }
        true
    }
}

/// Calls `f` on every isomorphism `d1 -> d2` until it returns `false`.
pub fn for_each_isomorphism(
    d1: Labelled<'_>,
    d2: Labelled<'_>,
    f: &mut dyn FnMut(&GraphIsomorphism) -> bool,
) {
    let (g1, g2) = (d1.lg, d2.lg);
    if g1.num_vertices() != g2.num_vertices()
        || g1.edges().len() != g2.edges().len()
        || g1.orders().len() != g2.orders().len()
        || d1.marks.len() != d2.marks.len()
    {
        return;
    }
    let c1 = vertex_colours(d1);
    let c2 = vertex_colours(d2);
    let (mut s1, mut s2) = (c1.clone(), c2.clone());
    s1.sort_unstable();
    s2.sort_unstable();
    if s1 != s2 {
        return;
    }
    let mut class_size: HashMap<u64, usize> = HashMap::new();
    for &c in &c1 {
        *class_size.entry(c).or_default() += 1;
    }
    let mut order: Vec<usize> = (0..c1.len()).collect();
    order.sort_by_key(|&v| (class_size[&c1[v]], c1[v], v));
    let search = IsoSearch {
        d1,
        d2,
        c1,
        c2,
        pe1: pair_edges(g1),
        pe2: pair_edges(g2),
        order,
    };
    let n = g1.num_vertices();
    let mut phi = vec![usize::MAX; n];
    let mut used = vec![false; n];
    search.vertex_maps(0, &mut phi, &mut used, &mut |phi| search.leg_maps(phi, f));
}

/// All isomorphisms `d1 -> d2` in deterministic order.
pub fn isomorphisms(d1: Labelled<'_>, d2: Labelled<'_>) -> Vec<GraphIsomorphism> {
    let mut out = Vec::new();
    for_each_isomorphism(d1, d2, &mut |iso| {
        out.push(iso.clone());
        true
    });
    out
}

/// The first isomorphism, if any.
pub fn first_isomorphism(d1: Labelled<'_>, d2: Labelled<'_>) -> Option<GraphIsomorphism> {
    let mut out = None;
    for_each_isomorphism(d1, d2, &mut |iso| {
        out = Some(iso.clone());
        false
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::level_graph::lg;
    use itertools::Itertools;

    fn marks(pairs: &[(Leg, Label)]) -> BTreeMap<Leg, Label> {
        pairs.iter().copied().collect()
    }

    fn banana(o1: i32, o2: i32) -> LevelGraph {
        // Genus-2 top over a genus-0 bottom carrying the zero of order 4.
        lg(
            &[2, 0],
            &[&[1, 2], &[3, 4, 5]],
            &[(1, 4), (2, 5)],
            &[(1, o1), (2, o2), (3, 4), (4, -o1 - 2), (5, -o2 - 2)],
            &[0, -1],
        )
        .unwrap()
    }

    /// Brute-force oracle: all leg bijections preserving the structure.
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
            if l1.iter().any(|l| g1.order(*l) != g2.order(m[l])) {
                continue;
            }
            if l1.iter().any(|l| d1.marks.get(l) != d2.marks.get(&m[l])) {
                continue;
            }
            // Vertex map induced by legs must be well defined and bijective.
            let mut vm: HashMap<usize, usize> = HashMap::new();
            let mut ok = true;
            for l in &l1 {
                let (v, w) = (g1.vertex(*l), g2.vertex(m[l]));
                if *vm.entry(v).or_insert(w) != w {
                    ok = false;
                }
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
        let mut v: Vec<_> = isomorphisms(d1, d2).into_iter().map(|i| i.isom_legs).collect();
        v.sort();
        v
    }

    #[test]
    fn symmetric_and_asymmetric_bananas() {
        let m = marks(&[(3, 1)]);
        let sym = banana(1, 1);
        let asym = banana(2, 0);
        let ds = Labelled { lg: &sym, marks: &m };
        let da = Labelled { lg: &asym, marks: &m };
        assert_eq!(isomorphisms(ds, ds).len(), 2);
        assert_eq!(isomorphisms(da, da).len(), 1);
        assert!(isomorphisms(ds, da).is_empty());
        assert_ne!(canonical_form(ds), canonical_form(da));
        assert_eq!(fast(ds, ds), brute_force(ds, ds));
    }

    #[test]
    fn canonical_form_ignores_leg_names() {
        let a = banana(1, 1);
        let b = lg(
            &[0, 2],
            &[&[7, 8, 9], &[5, 6]],
            &[(6, 8), (5, 9)],
            &[(5, 1), (6, 1), (7, 4), (8, -3), (9, -3)],
            &[-1, 0],
        )
        .unwrap();
        let ma = marks(&[(3, 1)]);
        let mb = marks(&[(7, 1)]);
        let da = Labelled { lg: &a, marks: &ma };
        let db = Labelled { lg: &b, marks: &mb };
        assert_eq!(canonical_form(da), canonical_form(db));
        assert_eq!(fast(da, db), brute_force(da, db));
        assert_eq!(first_isomorphism(da, db).unwrap().isom_legs[&3], 7);
    }

    #[test]
    fn triple_banana_has_six_automorphisms() {
        let g = lg(
            &[1, 0],
            &[&[1, 2, 3], &[4, 5, 6, 7]],
            &[(1, 5), (2, 6), (3, 7)],
            &[(1, 0), (2, 0), (3, 0), (4, 4), (5, -2), (6, -2), (7, -2)],
            &[0, -1],
        )
        .unwrap();
        let m = marks(&[(4, 1)]);
        let d = Labelled { lg: &g, marks: &m };
        assert_eq!(isomorphisms(d, d).len(), 6);
        assert_eq!(fast(d, d), brute_force(d, d));
    }
}
