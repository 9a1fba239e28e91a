//! Level graphs embedded into a generalised stratum: R-GRC legality, level
//! extraction, isomorphisms, automorphisms and human readable descriptions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::ops::Deref;
use std::sync::{Arc, OnceLock};

use crate::canonical::{self, CanonForm, GraphIsomorphism, Label, Labelled};
use crate::error::{Result, StrataError};
use crate::level_graph::{Leg, LevelGraph, ResidueContext, UnionFind};
use crate::strata_core::{
    self, GeneralisedStratum, Matrix, PointRef, ResidueCondition, Signature, StratumData,
};

/// Label of a stratum point inside canonical forms.
pub fn point_label(p: &PointRef) -> Label {
    ((p.component as u64) << 24) | (p.index as u64 + 1)
}

/// A level of a graph, viewed as a generalised stratum of its own.
pub struct LevelStratum {
    stratum: Arc<GeneralisedStratum>,
    /// Legs of the parent graph on this level, mapped to points of the level.
    pub leg_dict: BTreeMap<Leg, PointRef>,
    /// Orbits of the level's points under automorphisms of the parent graph.
    pub orbits: Vec<Vec<PointRef>>,
}

impl Deref for LevelStratum {
    type Target = GeneralisedStratum;

    fn deref(&self) -> &GeneralisedStratum {
        &self.stratum
    }
}

impl fmt::Debug for LevelStratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LevelStratum({}, leg_dict={:?})", self.data().describe(), self.leg_dict)
    }
}

impl LevelStratum {
    pub fn new(data: StratumData, leg_dict: BTreeMap<Leg, PointRef>, orbits: Vec<Vec<PointRef>>) -> Self {
        LevelStratum {
            stratum: strata_core::intern(data),
            leg_dict,
            orbits,
        }
    }

    pub fn stratum(&self) -> &Arc<GeneralisedStratum> {
        &self.stratum
    }

    /// The inverse of `leg_dict`.
    pub fn point_to_leg(&self) -> BTreeMap<PointRef, Leg> {
        self.leg_dict.iter().map(|(&l, &p)| (p, l)).collect()
    }
}

/// A level graph together with its embedding into a stratum.
pub struct EmbeddedLevelGraph {
    data: Arc<StratumData>,
    lg: LevelGraph,
    dmp: BTreeMap<Leg, PointRef>,
    marks: BTreeMap<Leg, Label>,
    canon: OnceLock<CanonForm>,
    automorphisms: OnceLock<Vec<GraphIsomorphism>>,
    levels: Vec<OnceLock<Arc<LevelStratum>>>,
}

impl fmt::Debug for EmbeddedLevelGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "EmbeddedLevelGraph(LG={:?}, dmp={:?})",
            self.lg.to_data(),
            self.dmp
        )
    }
}

impl EmbeddedLevelGraph {
    /// Validates that `dmp` is a bijection from marked legs onto the stratum's
    /// points respecting orders.
    pub fn new(data: Arc<StratumData>, lg: LevelGraph, dmp: BTreeMap<Leg, PointRef>) -> Result<Self> {
        let marked: BTreeSet<Leg> = lg.marked_legs().into_iter().collect();
        let keys: BTreeSet<Leg> = dmp.keys().copied().collect();
        if marked != keys {
            return Err(StrataError::MalformedGraph(format!(
                "dmp keys {keys:?} differ from marked legs {marked:?}"
            )));
        }
        let image: BTreeSet<PointRef> = dmp.values().copied().collect();
        let points: BTreeSet<PointRef> = data.points().into_iter().collect();
        if image != points || image.len() != dmp.len() {
            return Err(StrataError::MalformedGraph("dmp is not a bijection onto the points".into()));
        }
        for (&l, p) in &dmp {
            if lg.order(l) != data.order(p) {
                return Err(StrataError::MalformedGraph(format!(
                    "leg {l} has order {} but point {p} has order {}",
                    lg.order(l),
                    data.order(p)
                )));
            }
        }
        let marks = dmp.iter().map(|(&l, p)| (l, point_label(p))).collect();
        let nl = lg.num_levels();
        Ok(EmbeddedLevelGraph {
            data,
            lg,
            dmp,
            marks,
            canon: OnceLock::new(),
            automorphisms: OnceLock::new(),
            levels: (0..nl).map(|_| OnceLock::new()).collect(),
        })
    }

    /// The one-vertex-per-component graph of a stratum.
    pub fn smooth(data: Arc<StratumData>) -> Self {
        let mut genera = Vec::new();
        let mut legs = Vec::new();
        let mut orders = BTreeMap::new();
        let mut dmp = BTreeMap::new();
        let mut next: Leg = 1;
        for (c, s) in data.sig_list().iter().enumerate() {
            genera.push(s.g());
            let mut ls = Vec::new();
            for (i, &m) in s.sig().iter().enumerate() {
                ls.push(next);
                orders.insert(next, m);
                dmp.insert(next, PointRef::new(c, i));
                next += 1;
            }
            legs.push(ls);
        }
        let nv = genera.len();
        let lg = LevelGraph::new(genera, legs, vec![], orders, vec![0; nv])
            .expect("smooth graph of a valid stratum");
        EmbeddedLevelGraph::new(data, lg, dmp).expect("smooth embedding")
    }

    pub fn stratum_data(&self) -> &Arc<StratumData> {
        &self.data
    }

    pub fn lg(&self) -> &LevelGraph {
        &self.lg
    }

    pub fn dmp(&self) -> &BTreeMap<Leg, PointRef> {
        &self.dmp
    }

    /// Point to leg.
    pub fn dmp_inv(&self) -> BTreeMap<PointRef, Leg> {
        self.dmp.iter().map(|(&l, &p)| (p, l)).collect()
    }

    pub fn num_levels(&self) -> usize {
        self.lg.num_levels()
    }

    pub fn is_bic(&self) -> bool {
        self.num_levels() == 2 && !self.lg.has_horizontal_edges()
    }

    /// Least common multiple of the prongs.
    pub fn ell(&self) -> u64 {
        self.lg.prong_lcm()
    }

    pub fn labelled(&self) -> Labelled<'_> {
        Labelled {
            lg: &self.lg,
            marks: &self.marks,
        }
    }

    pub fn canonical_form(&self) -> &CanonForm {
        self.canon.get_or_init(|| canonical::canonical_form(self.labelled()))
    }

    /// Residue conditions and free poles expressed in legs.
    pub fn residue_context(&self) -> ResidueContext {
        let inv = self.dmp_inv();
        ResidueContext {
            conditions: self
                .data
                .res_cond()
                .iter()
                .map(|rc| rc.poles().iter().map(|p| inv[p]).collect())
                .collect(),
            free_poles: self.data.free_poles().iter().map(|p| inv[p]).collect(),
        }
    }

    /// Stratum residue rows stacked with one residue-theorem row per vertex.
    pub fn full_residue_matrix(&self) -> Matrix {
        let groups: Vec<Vec<PointRef>> = (0..self.lg.num_vertices())
            .map(|v| {
                self.lg
                    .legs_at_vertex(v)
                    .iter()
                    .filter_map(|l| self.dmp.get(l).copied())
                    .collect()
            })
            .collect();
        self.data.full_residue_matrix_for_groups(&groups)
    }

    /// Whether the residue at a pole is forced to vanish on this graph.
    pub fn residue_zero(&self, pole: &PointRef) -> Result<bool> {
        self.data.residue_zero_in(&self.full_residue_matrix(), pole)
    }

    /// R-GRC legality together with non-emptiness of every level.
    pub fn is_legal(&self) -> bool {
        for l in 0..self.num_levels() {
            match self.level(l) {
                Ok(ls) if !ls.is_empty() => {}
                _ => return false,
            }
        }
        self.lg.is_legal(&self.residue_context())
    }

    /// The extracted level `l` (relative numbering), memoised.
    pub fn level(&self, l: usize) -> Result<Arc<LevelStratum>> {
        let cell = self.levels.get(l).ok_or(StrataError::NoSuchLevel(l))?;
        if let Some(ls) = cell.get() {
            return Ok(ls.clone());
        }
        let ls = Arc::new(self.extract_level(l)?);
        Ok(cell.get_or_init(|| ls).clone())
    }

    /// Builds the level stratum at relative level `l`.
    pub fn extract_level(&self, l: usize) -> Result<LevelStratum> {
        if l >= self.num_levels() {
            return Err(StrataError::NoSuchLevel(l));
        }
        let lg = &self.lg;
        let verts = lg.vertices_at_level(l);
        let mut sigs = Vec::new();
        let mut leg_dict = BTreeMap::new();
        for (c, &v) in verts.iter().enumerate() {
            let legs = lg.legs_at_vertex(v);
            sigs.push(Signature::new(legs.iter().map(|&x| lg.order(x)).collect())?);
            for (i, &x) in legs.iter().enumerate() {
                leg_dict.insert(x, PointRef::new(c, i));
            }
        }
        // Components of the underlying graph strictly above level l, residue
        // vertices included.
        let ctx = self.residue_context();
        let nv = lg.num_vertices();
        let nr = ctx.conditions.len();
        let above = |v: usize| lg.rel_level(v) < l;
        let mut uf = UnionFind::new(nv + nr);
        for &(a, b) in lg.edges() {
            let (va, vb) = (lg.vertex(a), lg.vertex(b));
            if above(va) && above(vb) {
                uf.union(va, vb);
            }
        }
        for (k, cond) in ctx.conditions.iter().enumerate() {
            for &x in cond {
                let v = lg.vertex(x);
                if above(v) {
                    uf.union(nv + k, v);
                }
            }
        }
        // For every component: linked poles on level l and whether it has a free pole.
        let mut linked: BTreeMap<usize, BTreeSet<PointRef>> = BTreeMap::new();
        let mut has_free: BTreeSet<usize> = BTreeSet::new();
        let mut first_seen: BTreeMap<usize, usize> = BTreeMap::new();
        for x in 0..nv + nr {
            if x < nv && !above(x) {
                continue;
            }
            let r = uf.find(x);
            first_seen.entry(r).or_insert(x);
            if x < nv && lg.legs_at_vertex(x).iter().any(|leg| ctx.free_poles.contains(leg)) {
                has_free.insert(r);
            }
        }
        for &(u, w) in lg.edges() {
            let (vu, vw) = (lg.vertex(u), lg.vertex(w));
            if above(vu) && lg.rel_level(vw) == l {
                linked.entry(uf.find(vu)).or_default().insert(leg_dict[&w]);
            }
        }
        for (k, cond) in ctx.conditions.iter().enumerate() {
            for &x in cond {
                if lg.rel_level(lg.vertex(x)) == l {
                    linked.entry(uf.find(nv + k)).or_default().insert(leg_dict[&x]);
                }
            }
        }
        let mut comps: Vec<(usize, usize)> = first_seen.iter().map(|(&r, &x)| (x, r)).collect();
        comps.sort_unstable();
        let mut res = Vec::new();
        for (_, r) in comps {
            if has_free.contains(&r) {
                continue;
            }
            if let Some(poles) = linked.get(&r) {
                if !poles.is_empty() {
                    res.push(ResidueCondition::new(poles.iter().copied()));
                }
            }
        }
        let data = StratumData::new(sigs, res)?;
        let orbits = self.point_orbits(&leg_dict);
        Ok(LevelStratum::new(data, leg_dict, orbits))
    }

    fn point_orbits(&self, leg_dict: &BTreeMap<Leg, PointRef>) -> Vec<Vec<PointRef>> {
        let legs: Vec<Leg> = leg_dict.keys().copied().collect();
        let idx: BTreeMap<Leg, usize> = legs.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let mut uf = UnionFind::new(legs.len());
        for aut in self.automorphisms() {
            for (&a, &b) in &aut.isom_legs {
                if let (Some(&i), Some(&j)) = (idx.get(&a), idx.get(&b)) {
                    uf.union(i, j);
                }
            }
        }
        let mut orbits: BTreeMap<usize, Vec<PointRef>> = BTreeMap::new();
        for (i, x) in legs.iter().enumerate() {
            orbits.entry(uf.find(i)).or_default().push(leg_dict[x]);
        }
        let mut out: Vec<Vec<PointRef>> = orbits.into_values().collect();
        for o in out.iter_mut() {
            o.sort_unstable();
        }
        out.sort_unstable();
        out
    }

    /// All isomorphisms to another graph in the same stratum.
    pub fn isomorphisms(&self, other: &EmbeddedLevelGraph) -> Vec<GraphIsomorphism> {
        if self.data != other.data {
            return vec![];
        }
        canonical::isomorphisms(self.labelled(), other.labelled())
    }

    pub fn first_isomorphism(&self, other: &EmbeddedLevelGraph) -> Option<GraphIsomorphism> {
        if self.data != other.data {
            return None;
        }
        canonical::first_isomorphism(self.labelled(), other.labelled())
    }

    pub fn is_isomorphic(&self, other: &EmbeddedLevelGraph) -> bool {
        self.data == other.data
            && self.num_levels() == other.num_levels()
            && self.canonical_form() == other.canonical_form()
    }

    /// Automorphisms, memoised.
    pub fn automorphisms(&self) -> &[GraphIsomorphism] {
        self.automorphisms
            .get_or_init(|| canonical::isomorphisms(self.labelled(), self.labelled()))
    }

    pub fn num_automorphisms(&self) -> usize {
        self.automorphisms().len()
    }

    /// Prongs in edge order.
    pub fn prong_list(&self) -> Vec<u32> {
        self.lg.edges().iter().map(|&e| self.lg.prong(e)).collect()
    }

    /// Sorted genera per level.
    pub fn level_genera(&self) -> Vec<Vec<u32>> {
        (0..self.num_levels())
            .map(|l| {
                let mut g: Vec<u32> = self
                    .lg
                    .vertices_at_level(l)
                    .into_iter()
                    .map(|v| self.lg.genus(v))
                    .collect();
                g.sort_unstable();
                g
            })
            .collect()
    }

    /// Deterministic sort key: vertex count, level genera, prongs, canonical form.
    pub fn sort_key(&self) -> (usize, Vec<Vec<u32>>, Vec<u32>, CanonForm) {
        let mut prongs = self.prong_list();
        prongs.sort_unstable();
        (
            self.lg.num_vertices(),
            self.level_genera(),
            prongs,
            self.canonical_form().clone(),
        )
    }

    /// Human readable description.
    pub fn explain(&self) -> String {
        let lg = &self.lg;
        let mut s = String::new();
        let _ = writeln!(s, "LevelGraph embedded into stratum {}", self.data.header());
        let _ = writeln!(s, " with:");
        for l in 0..self.num_levels() {
            let _ = writeln!(s, "On level {l}:");
            for v in lg.vertices_at_level(l) {
                let _ = writeln!(s, "* A vertex (number {v}) of genus {}", lg.genus(v));
            }
        }
        let mut marked: Vec<(PointRef, Leg)> = self.dmp.iter().map(|(&l, &p)| (p, l)).collect();
        marked.sort_unstable();
        let mut mlevels: Vec<usize> = marked.iter().map(|&(_, l)| lg.rel_level(lg.vertex(l))).collect();
        mlevels.sort_unstable();
        mlevels.dedup();
        if !marked.is_empty() {
            if mlevels.len() == 1 {
                let _ = writeln!(s, "The marked points are on level {}.", mlevels[0]);
            } else {
                let ls: Vec<String> = mlevels.iter().map(|x| x.to_string()).collect();
                let _ = writeln!(
                    s,
                    "The marked points are on levels {} and {}.",
                    ls[..ls.len() - 1].join(", "),
                    ls[ls.len() - 1]
                );
            }
            let _ = writeln!(s, "More precisely, we have:");
            for (p, l) in &marked {
                let v = lg.vertex(*l);
                let _ = writeln!(
                    s,
                    "* Marked point {p} of order {} on vertex {v} on level {}",
                    lg.order(*l),
                    lg.rel_level(v)
                );
            }
        }
        let ne = lg.edges().len();
        let count = match ne {
            0 => "no edges".to_string(),
            1 => "one edge".to_string(),
            n => format!("{n} edges"),
        };
        if ne == 0 {
            let _ = writeln!(s, "Finally, we have {count}.");
            return s;
        }
        let _ = writeln!(s, "Finally, we have {count}. More precisely:");
        let mut groups: Vec<((usize, usize), Vec<u32>)> = Vec::new();
        for &e in lg.edges() {
            let key = (lg.vertex(e.0), lg.vertex(e.1));
            match groups.iter_mut().find(|(k, _)| *k == key) {
                Some((_, ps)) => ps.push(lg.prong(e)),
                None => groups.push((key, vec![lg.prong(e)])),
            }
        }
        for ((a, b), ps) in groups {
            let (la, lb) = (lg.rel_level(a), lg.rel_level(b));
            if ps.len() == 1 {
                let _ = writeln!(
                    s,
                    "* one edge between vertex {a} (on level {la}) and vertex {b} (on level {lb}) with prong {}.",
                    ps[0]
                );
            } else {
                let strs: Vec<String> = ps.iter().map(|x| x.to_string()).collect();
                let _ = writeln!(
                    s,
                    "* {} edges between vertex {a} (on level {la}) and vertex {b} (on level {lb}) with prongs {} and {}.",
                    ps.len(),
                    strs[..strs.len() - 1].join(", "),
                    strs[strs.len() - 1]
                );
            }
        }
        s
    }
}
