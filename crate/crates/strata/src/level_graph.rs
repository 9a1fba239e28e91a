//! Enhanced level graphs: combinatorial data, prongs, squishing and the
//! global residue condition on vertices and horizontal edges.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num::integer::lcm;
use serde::{Deserialize, Serialize};

use crate::error::{Result, StrataError};

/// A leg (half-edge) number.
pub type Leg = u32;

/// Serialised form used by JSON round-trips.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelGraphData {
    pub genera: Vec<u32>,
    pub legs: Vec<Vec<Leg>>,
    pub edges: Vec<(Leg, Leg)>,
    pub orders: BTreeMap<Leg, i32>,
    pub levels: Vec<i32>,
}

/// An immutable enhanced level graph.
///
/// Levels are stored normalised to `0, -1, ..., -L`; public methods that take
/// a level use relative numbers `0..=L` (relative `r` is internal `-r`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelGraph {
    genera: Vec<u32>,
    legs: Vec<Vec<Leg>>,
    edges: Vec<(Leg, Leg)>,
    orders: BTreeMap<Leg, i32>,
    levels: Vec<i32>,
    vertex_of: HashMap<Leg, usize>,
}

impl Serialize for LevelGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_data().serialize(s)
    }
}

impl<'de> Deserialize<'de> for LevelGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let data = LevelGraphData::deserialize(d)?;
        LevelGraph::from_data(data).map_err(serde::de::Error::custom)
    }
}

impl LevelGraph {
    /// Builds and validates a level graph.  Edges may be given in either
    /// orientation; levels may be arbitrary integers.
    pub fn new(
        genera: Vec<u32>,
        legs: Vec<Vec<Leg>>,
        edges: Vec<(Leg, Leg)>,
        orders: BTreeMap<Leg, i32>,
        levels: Vec<i32>,
    ) -> Result<Self> {
        let nv = genera.len();
        if legs.len() != nv || levels.len() != nv {
            return Err(StrataError::MalformedGraph(
                "genera, legs and levels must have equal length".into(),
            ));
        }
        let mut vertex_of = HashMap::new();
        for (v, ls) in legs.iter().enumerate() {
            for &l in ls {
                if l == 0 || vertex_of.insert(l, v).is_some() {
                    return Err(StrataError::MalformedGraph(format!("bad or repeated leg {l}")));
                }
                if !orders.contains_key(&l) {
                    return Err(StrataError::MalformedGraph(format!("leg {l} has no order")));
                }
            }
        }
        if orders.len() != vertex_of.len() {
            return Err(StrataError::MalformedGraph("orders for unknown legs".into()));
        }
        let mut distinct: Vec<i32> = levels.clone();
        distinct.sort_unstable_by(|a, b| b.cmp(a));
        distinct.dedup();
        let norm: HashMap<i32, i32> = distinct
            .iter()
            .enumerate()
            .map(|(i, &l)| (l, -(i as i32)))
            .collect();
        let levels: Vec<i32> = levels.iter().map(|l| norm[l]).collect();
        let mut seen = BTreeSet::new();
        let mut oriented = Vec::with_capacity(edges.len());
        for &(a, b) in &edges {
            let (Some(&va), Some(&vb)) = (vertex_of.get(&a), vertex_of.get(&b)) else {
                return Err(StrataError::MalformedGraph(format!("edge ({a},{b}) has unknown legs")));
            };
            if a == b || !seen.insert(a) || !seen.insert(b) {
                return Err(StrataError::MalformedGraph(format!("leg reused in edge ({a},{b})")));
            }
            let (oa, ob) = (orders[&a], orders[&b]);
            if oa + ob != -2 {
                return Err(StrataError::MalformedGraph(format!(
                    "edge ({a},{b}) has orders {oa},{ob} not summing to -2"
                )));
            }
            if levels[va] == levels[vb] {
                if oa != -1 {
                    return Err(StrataError::MalformedGraph(format!(
                        "horizontal edge ({a},{b}) needs orders -1"
                    )));
                }
                oriented.push((a.min(b), a.max(b)));
            } else {
                let (u, l) = if levels[va] > levels[vb] { (a, b) } else { (b, a) };
                if orders[&u] < 0 {
                    return Err(StrataError::MalformedGraph(format!(
                        "edge ({a},{b}) has a pole on its upper end"
                    )));
                }
                oriented.push((u, l));
            }
        }
        let mut legs = legs;
        for ls in legs.iter_mut() {
            ls.sort_unstable();
        }
        let g = LevelGraph {
            genera,
            legs,
            edges: oriented,
            orders,
            levels,
            vertex_of,
        };
        for v in 0..nv {
            let deg: i64 = g.legs[v].iter().map(|l| g.orders[l] as i64).sum();
            if deg != 2 * g.genera[v] as i64 - 2 {
                return Err(StrataError::MalformedGraph(format!(
                    "vertex {v} has degree {deg} but genus {}",
                    g.genera[v]
                )));
            }
        }
        Ok(g)
    }

    pub fn from_data(d: LevelGraphData) -> Result<Self> {
        Self::new(d.genera, d.legs, d.edges, d.orders, d.levels)
    }

    pub fn to_data(&self) -> LevelGraphData {
        LevelGraphData {
            genera: self.genera.clone(),
            legs: self.legs.clone(),
            edges: self.edges.clone(),
            orders: self.orders.clone(),
            levels: self.levels.clone(),
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.genera.len()
    }

    pub fn genera(&self) -> &[u32] {
        &self.genera
    }

    pub fn genus(&self, v: usize) -> u32 {
        self.genera[v]
    }

    pub fn legs(&self) -> &[Vec<Leg>] {
        &self.legs
    }

    pub fn legs_at_vertex(&self, v: usize) -> &[Leg] {
        &self.legs[v]
    }

    pub fn edges(&self) -> &[(Leg, Leg)] {
        &self.edges
    }

    pub fn orders(&self) -> &BTreeMap<Leg, i32> {
        &self.orders
    }

    pub fn internal_levels(&self) -> &[i32] {
        &self.levels
    }

    pub fn vertex_of_leg(&self, l: Leg) -> Result<usize> {
        self.vertex_of.get(&l).copied().ok_or(StrataError::UnknownLeg(l))
    }

    pub(crate) fn vertex(&self, l: Leg) -> usize {
        self.vertex_of[&l]
    }

    pub fn order_at_leg(&self, l: Leg) -> Result<i32> {
        self.orders.get(&l).copied().ok_or(StrataError::UnknownLeg(l))
    }

    pub(crate) fn order(&self, l: Leg) -> i32 {
        self.orders[&l]
    }

    /// Internal level of a vertex.
    pub fn level_of_vertex(&self, v: usize) -> Result<i32> {
        self.levels.get(v).copied().ok_or(StrataError::UnknownVertex(v))
    }

    /// Relative level (`0` on top) of a vertex.
    pub fn rel_level(&self, v: usize) -> usize {
        (-self.levels[v]) as usize
    }

    /// Relative level number of an internal level.
    pub fn level_number(&self, internal: i32) -> usize {
        (-internal) as usize
    }

    /// Internal level of a relative level number.
    pub fn internal_level_number(&self, rel: usize) -> i32 {
        -(rel as i32)
    }

    /// Number of levels `L + 1`.
    pub fn num_levels(&self) -> usize {
        self.levels.iter().map(|&l| (-l) as usize).max().map_or(0, |m| m + 1)
    }

    pub fn vertices_at_level(&self, rel: usize) -> Vec<usize> {
        (0..self.num_vertices())
            .filter(|&v| self.rel_level(v) == rel)
            .collect()
    }

    pub fn is_horizontal(&self, e: (Leg, Leg)) -> bool {
        self.levels[self.vertex(e.0)] == self.levels[self.vertex(e.1)]
    }

    pub fn has_horizontal_edges(&self) -> bool {
        self.edges.iter().any(|&e| self.is_horizontal(e))
    }

    /// Legs that are not half of an edge.
    pub fn marked_legs(&self) -> Vec<Leg> {
        let in_edge: BTreeSet<Leg> = self.edges.iter().flat_map(|&(a, b)| [a, b]).collect();
        self.orders.keys().copied().filter(|l| !in_edge.contains(l)).collect()
    }

    pub fn is_edge_leg(&self, l: Leg) -> bool {
        self.edges.iter().any(|&(a, b)| a == l || b == l)
    }

    /// The prong `kappa(e) = order(upper) + 1`, zero for horizontal edges.
    pub fn prong(&self, e: (Leg, Leg)) -> u32 {
        if self.is_horizontal(e) {
            0
        } else {
            (self.orders[&e.0] + 1) as u32
        }
    }

    pub fn prongs(&self) -> BTreeMap<(Leg, Leg), u32> {
        self.edges.iter().map(|&e| (e, self.prong(e))).collect()
    }

    /// Least common multiple of the non-horizontal prongs.
    pub fn prong_lcm(&self) -> u64 {
        self.edges
            .iter()
            .filter(|&&e| !self.is_horizontal(e))
            .fold(1u64, |acc, &e| lcm(acc, self.prong(e) as u64))
    }

    /// Edges whose upper end is at relative level `<= rel` and lower end below.
    pub fn edges_crossing(&self, crossing: usize) -> Vec<(Leg, Leg)> {
        self.edges
            .iter()
            .copied()
            .filter(|&(u, l)| {
                self.rel_level(self.vertex(u)) < crossing && self.rel_level(self.vertex(l)) >= crossing
            })
            .collect()
    }

    /// Total genus `sum g_v + h^1`.
    pub fn total_genus(&self) -> i64 {
        let g: i64 = self.genera.iter().map(|&g| g as i64).sum();
        g + self.edges.len() as i64 - self.num_vertices() as i64 + self.num_components() as i64
    }

    pub fn num_components(&self) -> usize {
        let mut uf = UnionFind::new(self.num_vertices());
        for &(a, b) in &self.edges {
            uf.union(self.vertex(a), self.vertex(b));
        }
        uf.count()
    }

    pub fn is_connected(&self) -> bool {
        self.num_components() == 1
    }

    /// `2g - 2 + n > 0` at every vertex.
    pub fn is_stable(&self) -> bool {
        (0..self.num_vertices())
            .all(|v| 2 * self.genera[v] as i64 - 2 + self.legs[v].len() as i64 > 0)
    }

    /// Sorted leg orders at a vertex.
    pub fn sorted_orders_at(&self, v: usize) -> Vec<i32> {
        let mut os: Vec<i32> = self.legs[v].iter().map(|l| self.orders[l]).collect();
        os.sort_unstable();
        os
    }

    /// Contract a horizontal edge.
    pub fn squish_horizontal(&self, e: (Leg, Leg)) -> Result<LevelGraph> {
        let e = (e.0.min(e.1), e.0.max(e.1));
        if !self.edges.contains(&e) || !self.is_horizontal(e) {
            return Err(StrataError::NotHorizontal(e));
        }
        let (va, vb) = (self.vertex(e.0), self.vertex(e.1));
        let mut genera = self.genera.clone();
        let mut legs = self.legs.clone();
        let mut levels = self.levels.clone();
        let edges: Vec<(Leg, Leg)> = self.edges.iter().copied().filter(|&x| x != e).collect();
        let mut orders = self.orders.clone();
        orders.remove(&e.0);
        orders.remove(&e.1);
        for ls in legs.iter_mut() {
            ls.retain(|&l| l != e.0 && l != e.1);
        }
        if va == vb {
            genera[va] += 1;
        } else {
            let (keep, drop) = (va.min(vb), va.max(vb));
            genera[keep] += genera[drop];
            let moved = std::mem::take(&mut legs[drop]);
            legs[keep].extend(moved);
            genera.remove(drop);
            legs.remove(drop);
            levels.remove(drop);
        }
        LevelGraph::new(genera, legs, edges, orders, levels)
    }

    /// Contract the level crossing between relative levels `rel` and `rel + 1`.
    pub fn squish_vertical(&self, rel: usize) -> Result<LevelGraph> {
        if rel + 1 >= self.num_levels() {
            return Err(StrataError::NoSuchLevel(rel));
        }
        let upper = self.internal_level_number(rel);
        let lower = self.internal_level_number(rel + 1);
        let nv = self.num_vertices();
        let contract: Vec<(Leg, Leg)> = self
            .edges
            .iter()
            .copied()
            .filter(|&(u, l)| {
                self.levels[self.vertex(u)] == upper && self.levels[self.vertex(l)] == lower
            })
            .collect();
        let mut uf = UnionFind::new(nv);
        for &(u, l) in &contract {
            uf.union(self.vertex(u), self.vertex(l));
        }
        let mut cluster_edges: HashMap<usize, usize> = HashMap::new();
        for &(u, _) in &contract {
            *cluster_edges.entry(uf.find(self.vertex(u))).or_default() += 1;
        }
        let mut cluster_size: HashMap<usize, usize> = HashMap::new();
        for v in 0..nv {
            *cluster_size.entry(uf.find(v)).or_default() += 1;
        }
        // Representative of each cluster is its smallest vertex.
        let mut rep_of: HashMap<usize, usize> = HashMap::new();
        for v in 0..nv {
            rep_of.entry(uf.find(v)).or_insert(v);
        }
        let removed: BTreeSet<Leg> = contract.iter().flat_map(|&(a, b)| [a, b]).collect();
        let reps: Vec<usize> = (0..nv).filter(|&v| rep_of[&uf.find(v)] == v).collect();
        let new_index: HashMap<usize, usize> =
            reps.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut genera = vec![0u32; reps.len()];
        let mut legs: Vec<Vec<Leg>> = vec![Vec::new(); reps.len()];
        let mut levels = vec![0i32; reps.len()];
        for v in 0..nv {
            let root = uf.find(v);
            let i = new_index[&rep_of[&root]];
            genera[i] += self.genera[v];
            legs[i].extend(self.legs[v].iter().copied().filter(|l| !removed.contains(l)));
            levels[i] = if self.levels[v] == lower { upper } else { self.levels[v] };
        }
        for (&root, &ne) in &cluster_edges {
            let i = new_index[&rep_of[&root]];
            genera[i] += (ne + 1 - cluster_size[&root]) as u32;
        }
        let edges = self.edges.iter().copied().filter(|e| !contract.contains(e)).collect();
        let mut orders = self.orders.clone();
        for l in &removed {
            orders.remove(l);
        }
        LevelGraph::new(genera, legs, edges, orders, levels)
    }

    /// The two-level graph keeping only crossing `i` (1-based).
    pub fn delta(&self, i: usize) -> Result<LevelGraph> {
        let crossings = self.num_levels().saturating_sub(1);
        if i == 0 || i > crossings {
            return Err(StrataError::NoSuchCrossing(i));
        }
        let mut g = self.clone();
        for k in (1..=crossings).rev() {
            if k != i {
                g = g.squish_vertical(k - 1)?;
            }
        }
        Ok(g)
    }

    /// Keep only the crossings in `keep` (1-based), squishing the rest bottom-up.
    pub fn squish_all_but(&self, keep: &[usize]) -> Result<LevelGraph> {
        let crossings = self.num_levels().saturating_sub(1);
        let mut g = self.clone();
        for k in (1..=crossings).rev() {
            if !keep.contains(&k) {
                g = g.squish_vertical(k - 1)?;
            }
        }
        Ok(g)
    }

    /// Whether the graph satisfies the GRC relative to `ctx`.
    pub fn is_legal(&self, ctx: &ResidueContext) -> bool {
        let ug = UnderlyingGraph::new(self, ctx);
        (0..self.num_vertices()).all(|v| ug.is_legal_vertex(v))
            && self
                .edges
                .iter()
                .filter(|&&e| self.is_horizontal(e))
                .all(|&e| ug.is_legal_horizontal_edge(e))
    }

    /// Legality of one vertex relative to `ctx`.
    pub fn is_legal_vertex(&self, v: usize, ctx: &ResidueContext) -> bool {
        UnderlyingGraph::new(self, ctx).is_legal_vertex(v)
    }

    /// Classical GRC: every marked pole is free, no residue conditions.
    pub fn is_legal_classical(&self) -> bool {
        self.is_legal(&ResidueContext::classical(self))
    }
}

/// Residue conditions and free poles expressed in legs of a graph.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ResidueContext {
    pub conditions: Vec<Vec<Leg>>,
    pub free_poles: BTreeSet<Leg>,
}

impl ResidueContext {
    /// All marked poles free, no conditions.
    pub fn classical(g: &LevelGraph) -> Self {
        ResidueContext {
            conditions: vec![],
            free_poles: g
                .marked_legs()
                .into_iter()
                .filter(|&l| g.order(l) < 0)
                .collect(),
        }
    }
}

/// Vertex tag of the underlying graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UgVertex {
    /// A vertex of the level graph.
    Graph(usize),
    /// A residue condition, sitting at level infinity.
    Residue(usize),
}

/// The plain multigraph of a level graph plus one vertex per residue condition.
#[derive(Clone, Debug)]
pub struct UnderlyingGraph<'a> {
    lg: &'a LevelGraph,
    ctx: &'a ResidueContext,
    /// Adjacency: (neighbour, edge id).  Graph edges have ids `0..E`, residue
    /// edges follow.
    adj: Vec<Vec<(usize, usize)>>,
    level: Vec<i64>,
    num_edges: usize,
}

impl<'a> UnderlyingGraph<'a> {
    pub fn new(lg: &'a LevelGraph, ctx: &'a ResidueContext) -> Self {
        let nv = lg.num_vertices();
        let total = nv + ctx.conditions.len();
        let mut adj = vec![Vec::new(); total];
        let mut id = 0;
        for &(a, b) in lg.edges() {
            let (va, vb) = (lg.vertex(a), lg.vertex(b));
            adj[va].push((vb, id));
            adj[vb].push((va, id));
            id += 1;
        }
        for (k, cond) in ctx.conditions.iter().enumerate() {
            for &l in cond {
                let v = lg.vertex(l);
                adj[nv + k].push((v, id));
                adj[v].push((nv + k, id));
                id += 1;
            }
        }
        let mut level: Vec<i64> = lg.internal_levels().iter().map(|&l| l as i64).collect();
        level.extend(std::iter::repeat_n(i64::MAX, ctx.conditions.len()));
        UnderlyingGraph {
            lg,
            ctx,
            adj,
            level,
            num_edges: id,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.adj.len()
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn tag(&self, v: usize) -> UgVertex {
        if v < self.lg.num_vertices() {
            UgVertex::Graph(v)
        } else {
            UgVertex::Residue(v - self.lg.num_vertices())
        }
    }

    /// Components of the subgraph induced on `allowed`, skipping `skip_edge`.
    fn components(&self, allowed: &[bool], skip_edge: Option<usize>) -> Vec<usize> {
        let n = self.num_vertices();
        let mut comp = vec![usize::MAX; n];
        let mut c = 0;
        for s in 0..n {
            if !allowed[s] || comp[s] != usize::MAX {
                continue;
            }
            comp[s] = c;
            let mut stack = vec![s];
            while let Some(x) = stack.pop() {
                for &(y, id) in &self.adj[x] {
                    if Some(id) == skip_edge || !allowed[y] || comp[y] != usize::MAX {
                        continue;
                    }
                    comp[y] = c;
                    stack.push(y);
                }
            }
            c += 1;
        }
        comp
    }

    fn has_free_pole(&self, v: usize) -> bool {
        v < self.lg.num_vertices()
            && self.lg.legs_at_vertex(v).iter().any(|l| self.ctx.free_poles.contains(l))
    }

    fn is_inconvenient(&self, v: usize) -> bool {
        if self.lg.genus(v) > 0 {
            return false;
        }
        let poles: Vec<i64> = self
            .lg
            .legs_at_vertex(v)
            .iter()
            .map(|&l| self.lg.order(l) as i64)
            .filter(|&o| o < 0)
            .map(|o| -o)
            .collect();
        if poles.contains(&1) {
            return false;
        }
        // A zero of order above this bound forbids all residues vanishing.
        let bound: i64 = poles.iter().sum::<i64>() - poles.len() as i64 - 1;
        self.lg
            .legs_at_vertex(v)
            .iter()
            .map(|&l| self.lg.order(l) as i64)
            .any(|m| m > bound)
    }

    /// Vertex legality: inconvenient vertices need a cycle above or two free poles.
    pub fn is_legal_vertex(&self, v: usize) -> bool {
        if !self.is_inconvenient(v) {
            return true;
        }
        let lv = self.level[v];
        let n = self.num_vertices();
        let above: Vec<bool> = (0..n).map(|x| self.level[x] >= lv).collect();
        let comp = self.components(&above, None);
        let rest: Vec<bool> = (0..n).map(|x| x != v && comp[x] == comp[v]).collect();
        let rest_comp = self.components(&rest, None);
        let mut reached: BTreeSet<usize> = BTreeSet::new();
        for &(y, _) in &self.adj[v] {
            if !rest[y] {
                continue;
            }
            if !reached.insert(rest_comp[y]) {
                return true;
            }
        }
        let mut free = self
            .lg
            .legs_at_vertex(v)
            .iter()
            .filter(|l| self.ctx.free_poles.contains(l))
            .count();
        free += reached
            .iter()
            .filter(|&&c| (0..n).any(|x| rest[x] && rest_comp[x] == c && self.has_free_pole(x)))
            .count();
        free >= 2
    }

    /// Horizontal-edge legality: a cycle through the edge above, or free poles
    /// on both sides.
    pub fn is_legal_horizontal_edge(&self, e: (Leg, Leg)) -> bool {
        let Some(id) = self.lg.edges().iter().position(|&x| x == e) else {
            return false;
        };
        let (a, b) = (self.lg.vertex(e.0), self.lg.vertex(e.1));
        let le = self.level[a];
        let n = self.num_vertices();
        let above: Vec<bool> = (0..n).map(|x| self.level[x] >= le).collect();
        let comp = self.components(&above, Some(id));
        if comp[a] == comp[b] {
            return true;
        }
        let side_free =
            |c: usize| (0..n).any(|x| above[x] && comp[x] == c && self.has_free_pole(x));
        side_free(comp[a]) && side_free(comp[b])
    }
}

/// Minimal union-find over `0..n`.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut y = x;
        while self.parent[y] != r {
            let next = self.parent[y];
            self.parent[y] = r;
            y = next;
        }
        r
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }

    pub fn count(&mut self) -> usize {
        (0..self.parent.len()).filter(|&x| self.find(x) == x).count()
    }
}

/// Convenience constructor taking `(leg, order)` pairs.
pub fn lg(
    genera: &[u32],
    legs: &[&[Leg]],
    edges: &[(Leg, Leg)],
    orders: &[(Leg, i32)],
    levels: &[i32],
) -> Result<LevelGraph> {
    LevelGraph::new(
        genera.to_vec(),
        legs.iter().map(|l| l.to_vec()).collect(),
        edges.to_vec(),
        orders.iter().copied().collect(),
        levels.to_vec(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The banana of (2,): genus-1 top, two edges to the bottom zero.
    fn banana() -> LevelGraph {
        lg(
            &[1, 0],
            &[&[1, 2], &[3, 4, 5]],
            &[(1, 4), (2, 5)],
            &[(1, 0), (2, 0), (3, 2), (4, -2), (5, -2)],
            &[0, -1],
        )
        .unwrap()
    }

    fn three_level_chain() -> LevelGraph {
        lg(
            &[1, 0, 0],
            &[&[1], &[2, 3, 4], &[5, 6, 7]],
            &[(1, 2), (3, 6), (4, 7)],
            &[(1, 0), (2, -2), (3, 0), (4, 0), (5, 2), (6, -2), (7, -2)],
            &[0, -1, -2],
        )
        .unwrap()
    }

    #[test]
    fn accessors_on_banana() {
        let l = banana();
        assert_eq!(l.order_at_leg(3).unwrap(), 2);
        assert_eq!(l.level_number(-1), 1);
        assert_eq!(l.internal_level_number(0), 0);
        assert_eq!(l.num_levels(), 2);
        assert_eq!(l.marked_legs(), vec![3]);
        assert_eq!(l.prong_lcm(), 1);
        assert!(l.order_at_leg(9).is_err());
        assert_eq!(l.total_genus(), 2);
    }

    #[test]
    fn prongs_of_chain() {
        let g = lg(
            &[2, 0, 0],
            &[&[3, 4], &[5, 6, 7, 8], &[9, 10, 11]],
            &[(3, 6), (4, 8), (5, 9)],
            &[
                (3, 1),
                (4, 1),
                (5, 0),
                (6, -3),
                (7, 4),
                (8, -3),
                (9, -2),
                (10, 0),
                (11, 0),
            ],
            &[0, -1, -2],
        )
        .unwrap();
        let p = g.prongs();
        assert_eq!(p[&(3, 6)], 2);
        assert_eq!(p[&(4, 8)], 2);
        assert_eq!(p[&(5, 9)], 1);
        assert_eq!(g.prong_lcm(), 2);
    }

    #[test]
    fn invalid_graphs_rejected() {
        assert!(lg(&[0], &[&[1]], &[], &[(1, 0)], &[0]).is_err());
        assert!(lg(&[1, 0], &[&[1], &[2, 3]], &[(1, 2)], &[(1, 0), (2, -3), (3, 1)], &[0, -1]).is_err());
    }

    #[test]
    fn squish_chain() {
        let g = three_level_chain();
        let top = g.squish_vertical(0).unwrap();
        assert_eq!(top.num_levels(), 2);
        assert_eq!(top.genera(), &[1, 0]);
        assert_eq!(top.edges().len(), 2);
        let bot = g.squish_vertical(1).unwrap();
        assert_eq!(bot.genera(), &[1, 1]);
        assert_eq!(bot.edges(), &[(1, 2)]);
        assert_eq!(bot.legs_at_vertex(1), &[2, 5]);
        assert!(g.squish_vertical(2).is_err());
        assert_eq!(g.delta(1).unwrap(), bot);
        assert_eq!(g.delta(2).unwrap(), top);
        assert!(g.delta(3).is_err());
        let smooth = banana().squish_vertical(0).unwrap();
        assert_eq!(smooth.num_vertices(), 1);
        assert_eq!(smooth.genera(), &[2]);
    }

    #[test]
    fn squish_horizontal_cases() {
        let loop_g = lg(&[0], &[&[1, 2, 3]], &[(1, 2)], &[(1, -1), (2, -1), (3, 0)], &[0]).unwrap();
        let s = loop_g.squish_horizontal((1, 2)).unwrap();
        assert_eq!(s.genera(), &[1]);
        assert!(s.edges().is_empty());
        let two = lg(
            &[1, 1],
            &[&[1, 3], &[2, 4]],
            &[(1, 2)],
            &[(1, -1), (2, -1), (3, 1), (4, 1)],
            &[0, 0],
        )
        .unwrap();
        let s = two.squish_horizontal((2, 1)).unwrap();
        assert_eq!(s.genera(), &[2]);
        assert_eq!(s.num_vertices(), 1);
        assert!(banana().squish_horizontal((1, 4)).is_err());
    }

    #[test]
    fn banana_is_legal() {
        assert!(banana().is_legal_classical());
        let smooth = lg(&[2], &[&[1]], &[], &[(1, 2)], &[0]).unwrap();
        assert!(smooth.is_legal_classical());
    }

    #[test]
    fn compact_type_with_low_genus_zero_is_illegal() {
        // Genus-0 bottom vertex (2,-2,-2) below one edge only: illegal.
        let g = lg(
            &[1, 1, 0],
            &[&[1], &[2], &[3, 4, 5]],
            &[(1, 4), (2, 5)],
            &[(1, 0), (2, 0), (3, 2), (4, -2), (5, -2)],
            &[0, 0, -1],
        )
        .unwrap();
        assert!(!g.is_legal_classical());
        assert!(!g.is_legal_vertex(2, &ResidueContext::classical(&g)));
    }

    #[test]
    fn free_poles_rescue_inconvenient_vertex() {
        // (0,-2) genus-1 top over a genus-0 bottom with two free marked poles.
        let g = lg(
            &[1, 0],
            &[&[1, 5], &[2, 3, 4]],
            &[(1, 2)],
            &[(1, 2), (5, -2), (2, -4), (3, 4), (4, -2)],
            &[0, -1],
        )
        .unwrap();
        let ctx = ResidueContext::classical(&g);
        assert!(g.is_legal(&ctx));
        let mut constrained = ctx.clone();
        constrained.free_poles.clear();
        assert!(!g.is_legal(&constrained));
    }

    #[test]
    fn union_find_counts() {
        let mut uf = UnionFind::new(4);
        uf.union(0, 1);
        uf.union(2, 3);
        assert_eq!(uf.count(), 2);
        uf.union(1, 3);
        assert_eq!(uf.count(), 1);
    }

    #[test]
    fn json_round_trip() {
        let g = banana();
        let s = serde_json::to_string(&g).unwrap();
        let back: LevelGraph = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
    }
}
