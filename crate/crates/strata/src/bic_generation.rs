//! Enumeration of two-level graphs without horizontal edges (BICs).
//!
//! For a connected signature the marked points are split between the two
//! levels and grouped into vertices.  Genera fix the number of edges through
//! the Betti number, and the prongs at each bottom vertex form an integer
//! partition of its edge demand.  Edges are then distributed over the top
//! vertices so that every top vertex meets its order budget.  Candidates are
//! filtered by connectivity, stability and the classical GRC and deduplicated
//! by canonical form.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::{Arc, Mutex, OnceLock};

use crate::canonical::{self, CanonForm, Labelled};
use crate::embedded_graph::EmbeddedLevelGraph;
use crate::level_graph::{Leg, LevelGraph};
use crate::strata_core::{GeneralisedStratum, PointRef, Signature};

/// All set partitions of `items`, blocks in order of their first element.
pub fn set_partitions<T: Clone>(items: &[T]) -> Vec<Vec<Vec<T>>> {
    fn rec<T: Clone>(items: &[T], i: usize, cur: &mut Vec<Vec<T>>, out: &mut Vec<Vec<Vec<T>>>) {
        if i == items.len() {
            out.push(cur.clone());
            return;
        }
        for b in 0..cur.len() {
            cur[b].push(items[i].clone());
            rec(items, i + 1, cur, out);
            cur[b].pop();
        }
        cur.push(vec![items[i].clone()]);
        rec(items, i + 1, cur, out);
        cur.pop();
    }
    let mut out = Vec::new();
    rec(items, 0, &mut Vec::new(), &mut out);
    out
}

/// Partitions of `n` into exactly `k` parts, each at least `min`, nonincreasing.
pub fn partitions_into(n: i64, k: usize, min: i64) -> Vec<Vec<i64>> {
    fn rec(n: i64, k: usize, min: i64, max: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if k == 0 {
            if n == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let hi = max.min(n - min * (k as i64 - 1));
        let mut p = hi;
        while p >= min {
            cur.push(p);
            rec(n - p, k - 1, min, p, cur, out);
            cur.pop();
            p -= 1;
        }
    }
    let mut out = Vec::new();
    if k == 0 {
        if n == 0 {
            out.push(vec![]);
        }
        return out;
    }
    rec(n, k, min, n, &mut Vec::new(), &mut out);
    out
}

/// Compositions of `total` into `parts` nonnegative summands.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// All genus vectors with `lo[i] <= g_i <= hi[i]` and sum at most `budget`.
fn genus_vectors(lo: &[i64], hi: &[i64], budget: i64) -> Vec<Vec<i64>> {
    fn rec(lo: &[i64], hi: &[i64], i: usize, left: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if i == lo.len() {
            out.push(cur.clone());
            return;
        }
        let mut x = lo[i];
        while x <= hi[i] && x <= left {
            cur.push(x);
            rec(lo, hi, i + 1, left - x, cur, out);
            cur.pop();
            x += 1;
        }
    }
    let mut out = Vec::new();
    rec(lo, hi, 0, budget, &mut Vec::new(), &mut out);
    out
}

struct Candidate<'a> {
    orders: &'a [i32],
    top_blocks: Vec<Vec<usize>>,
    top_genera: Vec<i64>,
    bot_blocks: Vec<Vec<usize>>,
    bot_genera: Vec<i64>,
}

impl Candidate<'_> {
    /// Order budget of each top vertex: `2g - 2` minus its marked orders.
    fn top_budget(&self) -> Vec<i64> {
        self.top_blocks
            .iter()
            .zip(&self.top_genera)
            .map(|(b, &g)| 2 * g - 2 - b.iter().map(|&i| self.orders[i] as i64).sum::<i64>())
            .collect()
    }

    /// Sum of `kappa + 1` over the edges at each bottom vertex.
    fn bot_demand(&self) -> Vec<i64> {
        self.bot_blocks
            .iter()
            .zip(&self.bot_genera)
            .map(|(b, &g)| b.iter().map(|&i| self.orders[i] as i64).sum::<i64>() - 2 * g + 2)
            .collect()
    }
}

/// Distribute edges `(bottom vertex, kappa)` over top vertices exactly
/// exhausting each budget, every top vertex receiving an edge.
fn assign_edges(edges: &[(usize, i64)], budget: &[i64], ordered: bool) -> Vec<Vec<usize>> {
    fn rec(
        edges: &[(usize, i64)],
        ordered: bool,
        i: usize,
        left: &mut Vec<i64>,
        count: &mut Vec<usize>,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if i == edges.len() {
            if left.iter().all(|&x| x == 0) && count.iter().all(|&c| c > 0) {
                out.push(cur.clone());
            }
            return;
        }
        // Identical edges are assigned in nondecreasing order of targets.
        let start = if ordered && i > 0 && edges[i - 1] == edges[i] { cur[i - 1] } else { 0 };
        let need = edges[i].1 - 1;
        for v in start..left.len() {
            if left[v] >= need {
                left[v] -= need;
                count[v] += 1;
                cur.push(v);
                rec(edges, ordered, i + 1, left, count, cur, out);
                cur.pop();
                count[v] -= 1;
                left[v] += need;
            }
        }
    }
    let mut out = Vec::new();
    rec(
        edges,
        ordered,
        0,
        &mut budget.to_vec(),
        &mut vec![0; budget.len()],
        &mut Vec::new(),
        &mut out,
    );
    out
}

fn marks_for(n: usize) -> BTreeMap<Leg, u64> {
    (1..=n as Leg).map(|l| (l, l as u64)).collect()
}

fn build_graph(c: &Candidate<'_>, edges: &[(usize, i64)], targets: &[usize]) -> Option<LevelGraph> {
    let n = c.orders.len() as Leg;
    let nt = c.top_blocks.len();
    let mut genera = Vec::new();
    let mut legs: Vec<Vec<Leg>> = Vec::new();
    let mut orders = BTreeMap::new();
    for (i, &m) in c.orders.iter().enumerate() {
        orders.insert(i as Leg + 1, m);
    }
    for (b, &g) in c.top_blocks.iter().zip(&c.top_genera) {
        genera.push(g as u32);
        legs.push(b.iter().map(|&i| i as Leg + 1).collect());
    }
    for (b, &g) in c.bot_blocks.iter().zip(&c.bot_genera) {
        genera.push(g as u32);
        legs.push(b.iter().map(|&i| i as Leg + 1).collect());
    }
    let mut edge_list = Vec::new();
    let mut next = n + 1;
    for (&(w, kappa), &v) in edges.iter().zip(targets) {
        let (u, l) = (next, next + 1);
        next += 2;
        legs[v].push(u);
        legs[nt + w].push(l);
        orders.insert(u, kappa as i32 - 1);
        orders.insert(l, -(kappa as i32) - 1);
        edge_list.push((u, l));
    }
    let levels = (0..genera.len()).map(|v| if v < nt { 0 } else { -1 }).collect();
    LevelGraph::new(genera, legs, edge_list, orders, levels).ok()
}

/// Candidate graphs; with `dedup` isomorphic graphs and permuted placements
/// of identical edges are removed.
fn enumerate(sig: &Signature, dedup: bool) -> Vec<LevelGraph> {
    let orders = sig.sig();
    let n = orders.len();
    let g = sig.g() as i64;
    let marks = marks_for(n);
    let mut seen: HashSet<CanonForm> = HashSet::new();
    let mut out = Vec::new();
    for mask in 1u64..(1u64 << n) {
        let bot: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let top: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 0).collect();
        for bot_blocks in set_partitions(&bot) {
            let bsum: Vec<i64> = bot_blocks
                .iter()
                .map(|b| b.iter().map(|&i| orders[i] as i64).sum())
                .collect();
            // Demand sum(m) - 2g_w + 2 must be at least 2.
            let bot_hi: Vec<i64> = bsum.iter().map(|&s| (s / 2).min(g)).collect();
            if bot_hi.iter().any(|&h| h < 0) {
                continue;
            }
            let bot_lo = vec![0; bot_blocks.len()];
            let top_partitions = if top.is_empty() { vec![vec![]] } else { set_partitions(&top) };
            for bot_genera in genus_vectors(&bot_lo, &bot_hi, g) {
                let gb: i64 = bot_genera.iter().sum();
                for top_marked in &top_partitions {
                    let tsum: Vec<i64> = top_marked
                        .iter()
                        .map(|b| b.iter().map(|&i| orders[i] as i64).sum())
                        .collect();
                    // Budget 2g_v - 2 - sum(m) must be nonnegative.
                    let t_lo: Vec<i64> = tsum.iter().map(|&s| ((s + 2) as f64 / 2.0).ceil() as i64).map(|x| x.max(0)).collect();
                    let t_hi = vec![g; top_marked.len()];
                    for top_genera_marked in genus_vectors(&t_lo, &t_hi, g - gb) {
                        let gt: i64 = top_genera_marked.iter().sum();
                        let left = g - gb - gt;
                        // Unmarked top vertices have genus at least one.
                        let left = left.max(0) as usize;
                        let shapes = (0..=left).flat_map(|u| {
                            (u..=left).flat_map(move |total| compositions(total - u, u))
                        });
                        for extra in shapes {
                            let u = extra.len();
                            {
                                let extra: Vec<i64> = extra.iter().map(|&x| x as i64 + 1).collect();
                                // Nondecreasing genera among interchangeable unmarked vertices.
                                if extra.windows(2).any(|w| w[0] > w[1]) {
                                    continue;
                                }
                                let mut top_blocks = top_marked.clone();
                                top_blocks.extend(std::iter::repeat_n(Vec::new(), u));
                                let mut top_genera = top_genera_marked.clone();
                                top_genera.extend(&extra);
                                let cand = Candidate {
                                    orders,
                                    top_blocks,
                                    top_genera,
                                    bot_blocks: bot_blocks.clone(),
                                    bot_genera: bot_genera.clone(),
                                };
                                collect_candidate(&cand, g, &marks, dedup, &mut seen, &mut out);
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

fn collect_candidate(
    c: &Candidate<'_>,
    g: i64,
    marks: &BTreeMap<Leg, u64>,
    dedup: bool,
    seen: &mut HashSet<CanonForm>,
    out: &mut Vec<LevelGraph>,
) {
    if c.top_blocks.is_empty() {
        return;
    }
    let budget = c.top_budget();
    let demand = c.bot_demand();
    let nv = (c.top_blocks.len() + c.bot_blocks.len()) as i64;
    let sum_genera: i64 = c.top_genera.iter().chain(&c.bot_genera).sum();
    // The Betti number fixes the number of edges.
    let ne = g - sum_genera + nv - 1;
    if ne < c.top_blocks.len() as i64 || ne < c.bot_blocks.len() as i64 {
        return;
    }
    if demand.iter().sum::<i64>() - budget.iter().sum::<i64>() != 2 * ne {
        return;
    }
    // Split the edges among the bottom vertices, then the demand into prongs.
    let nb = c.bot_blocks.len();
    for counts in compositions(ne as usize - nb, nb) {
        let counts: Vec<usize> = counts.iter().map(|&x| x + 1).collect();
        let per_vertex: Vec<Vec<Vec<i64>>> = counts
            .iter()
            .zip(&demand)
            .map(|(&k, &d)| partitions_into(d, k, 2))
            .collect();
        if per_vertex.iter().any(|p| p.is_empty()) {
            continue;
        }
        for choice in itertools::Itertools::multi_cartesian_product(per_vertex.iter().map(|p| p.iter())) {
            let mut edges: Vec<(usize, i64)> = Vec::new();
            for (w, parts) in choice.iter().enumerate() {
                for &p in parts.iter() {
                    edges.push((w, p - 1));
                }
            }
            for targets in assign_edges(&edges, &budget, dedup) {
                let Some(lg) = build_graph(c, &edges, &targets) else {
                    continue;
                };
                if !lg.is_connected() || !lg.is_stable() || !lg.is_legal_classical() {
                    continue;
                }
                if !dedup || seen.insert(canonical::canonical_form(Labelled { lg: &lg, marks })) {
                    out.push(lg);
                }
            }
        }
    }
}

/// All BICs of a connected signature, with marked point `i` on leg `i + 1`.
pub fn bic_alt(sig: &Signature) -> Arc<Vec<LevelGraph>> {
    static MEMO: OnceLock<Mutex<HashMap<Signature, Arc<Vec<LevelGraph>>>>> = OnceLock::new();
    let memo = MEMO.get_or_init(Default::default);
    if let Some(v) = memo.lock().expect("bic memo poisoned").get(sig) {
        return v.clone();
    }
    let v = Arc::new(enumerate(sig, true));
    memo.lock()
        .expect("bic memo poisoned")
        .entry(sig.clone())
        .or_insert(v)
        .clone()
}

/// All two-level graphs before isomorphism removal: edges are labelled, so
/// placements differing by a permutation of identical edges are distinct.
pub fn bic_alt_noiso(sig: &Signature) -> Vec<LevelGraph> {
    enumerate(sig, false)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Placement {
    Bic(usize),
    SmoothTop,
    SmoothBottom,
}

/// Disjoint union of per-component factors as one graph of the stratum.
fn unite(x: &GeneralisedStratum, factors: &[Placement], bics: &[Arc<Vec<LevelGraph>>]) -> EmbeddedLevelGraph {
    let mut genera = Vec::new();
    let mut legs: Vec<Vec<Leg>> = Vec::new();
    let mut edges = Vec::new();
    let mut orders = BTreeMap::new();
    let mut levels = Vec::new();
    let mut dmp = BTreeMap::new();
    let mut next: Leg = 1;
    for (c, (f, sig)) in factors.iter().zip(x.sig_list()).enumerate() {
        let n = sig.n() as Leg;
        let piece = match f {
            Placement::Bic(i) => bics[c][*i].clone(),
            _ => LevelGraph::new(
                vec![sig.g()],
                vec![(1..=n).collect()],
                vec![],
                (1..=n).zip(sig.sig().iter().copied()).collect(),
                vec![0],
            )
            .expect("smooth component graph"),
        };
        let mut all: Vec<Leg> = piece.orders().keys().copied().collect();
        all.sort_unstable();
        let rename: BTreeMap<Leg, Leg> = all
            .iter()
            .map(|&l| {
                let r = next;
                next += 1;
                (l, r)
            })
            .collect();
        for v in 0..piece.num_vertices() {
            genera.push(piece.genus(v));
            legs.push(piece.legs_at_vertex(v).iter().map(|l| rename[l]).collect());
            levels.push(match f {
                Placement::Bic(_) => piece.internal_levels()[v],
                Placement::SmoothTop => 0,
                Placement::SmoothBottom => -1,
            });
        }
        for &(a, b) in piece.edges() {
            edges.push((rename[&a], rename[&b]));
        }
        for (l, &o) in piece.orders() {
            orders.insert(rename[l], o);
        }
        for i in 0..sig.n() {
            dmp.insert(rename[&(i as Leg + 1)], PointRef::new(c, i));
        }
    }
    let lg = LevelGraph::new(genera, legs, edges, orders, levels).expect("united graph");
    EmbeddedLevelGraph::new(x.data().clone(), lg, dmp).expect("united embedding")
}

/// All BICs of a generalised stratum in canonical order.
pub fn generate_bics(x: &GeneralisedStratum) -> Vec<Arc<EmbeddedLevelGraph>> {
    let k = x.sig_list().len();
    let per_comp: Vec<Arc<Vec<LevelGraph>>> = x.sig_list().iter().map(bic_alt).collect();
    let options: Vec<Vec<Placement>> = per_comp
        .iter()
        .map(|b| {
            let mut o: Vec<Placement> = (0..b.len()).map(Placement::Bic).collect();
            if k > 1 {
                o.push(Placement::SmoothTop);
                o.push(Placement::SmoothBottom);
            }
            o
        })
        .collect();
    let mut seen = HashSet::new();
    let mut out: Vec<Arc<EmbeddedLevelGraph>> = Vec::new();
    for combo in itertools::Itertools::multi_cartesian_product(options.iter().map(|o| o.iter().copied())) {
        let has_bic = combo.iter().any(|p| matches!(p, Placement::Bic(_)));
        let has_top = combo.contains(&Placement::SmoothTop);
        let has_bot = combo.contains(&Placement::SmoothBottom);
        if !has_bic && !(has_top && has_bot) {
            continue;
        }
        let elg = unite(x, &combo, &per_comp);
        if !elg.is_legal() {
            continue;
        }
        if seen.insert(elg.canonical_form().clone()) {
            out.push(Arc::new(elg));
        }
    }
    out.sort_by_cached_key(|b| b.sort_key());
    out
}

impl GeneralisedStratum {
    /// The BICs of the stratum, generated once.
    pub fn bics(&self) -> &[Arc<EmbeddedLevelGraph>] {
        self.bics.get_or_init(|| generate_bics(self))
    }

    /// The graph with one vertex per component and no edges.
    pub fn smooth_lg(&self) -> &Arc<EmbeddedLevelGraph> {
        self.smooth
            .get_or_init(|| Arc::new(EmbeddedLevelGraph::smooth(self.data().clone())))
    }
}
