//! Profiles of level graphs, the maps between BICs of a BIC's levels and the
//! ambient BICs, graph lookup and degeneration queries.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use itertools::Itertools;

use crate::canonical::CanonForm;
use crate::clutch_split::{clutch, split_bic, splitting_info_at_level};
use crate::embedded_graph::EmbeddedLevelGraph;
use crate::error::{Result, StrataError};
use crate::level_graph::Leg;
use crate::strata_core::{fmt_tuple, GeneralisedStratum};

/// Ordered tuple of BIC indices, top crossing first.
pub type Profile = Vec<usize>;

/// A leg map from a less degenerate graph into a more degenerate one.
pub type LegMap = BTreeMap<Leg, Leg>;

/// A profile together with the index of one of its graphs.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EnhancedProfile {
    pub profile: Profile,
    pub component: usize,
}

impl EnhancedProfile {
    pub fn new(profile: Profile, component: usize) -> Self {
        EnhancedProfile { profile, component }
    }

    /// The profile of the smooth graph.
    pub fn smooth() -> Self {
        Self::new(vec![], 0)
    }

    /// Number of BICs, i.e. the codimension.
    pub fn len(&self) -> usize {
        self.profile.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profile.is_empty()
    }
}

impl fmt::Display for EnhancedProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", fmt_tuple(&self.profile), self.component)
    }
}

type GraphList = Arc<Vec<Arc<EmbeddedLevelGraph>>>;

/// Memo tables of a stratum for graph lookup and leg maps.
#[derive(Default)]
pub struct GraphMemo {
    graphs: Mutex<HashMap<Profile, GraphList>>,
    leg_maps: Mutex<HashMap<(EnhancedProfile, EnhancedProfile), Arc<Vec<LegMap>>>>,
    middle: Mutex<HashMap<EnhancedProfile, Arc<BTreeMap<usize, usize>>>>,
}

/// How the BICs of the levels of each BIC sit among the ambient BICs.
#[derive(Clone, Debug, Default)]
pub struct DegenerationMaps {
    /// `top_to_bic[i][j]`: ambient index of BIC `j` of the top level of BIC `i`.
    pub top_to_bic: Vec<BTreeMap<usize, usize>>,
    /// `bot_to_bic[i][j]`: ambient index of BIC `j` of the bottom level of BIC `i`.
    pub bot_to_bic: Vec<BTreeMap<usize, usize>>,
}

fn invert(m: &BTreeMap<usize, usize>) -> BTreeMap<usize, Vec<usize>> {
    let mut out: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (&k, &v) in m {
        out.entry(v).or_default().push(k);
    }
    out
}

impl DegenerationMaps {
    pub fn top_to_bic_inv(&self, i: usize) -> BTreeMap<usize, Vec<usize>> {
        invert(&self.top_to_bic[i])
    }

    pub fn bot_to_bic_inv(&self, i: usize) -> BTreeMap<usize, Vec<usize>> {
        invert(&self.bot_to_bic[i])
    }
}

impl GeneralisedStratum {
    fn bic_index(&self) -> HashMap<CanonForm, usize> {
        self.bics()
            .iter()
            .enumerate()
            .map(|(i, b)| (b.canonical_form().clone(), i))
            .collect()
    }

    /// Ambient index of the BIC keeping only `crossing` of `g`.
    fn bic_of_crossing(
        &self,
        index: &HashMap<CanonForm, usize>,
        g: &EmbeddedLevelGraph,
        crossing: usize,
    ) -> Result<usize> {
        let lg = g.lg().delta(crossing)?;
        let b = EmbeddedLevelGraph::new(g.stratum_data().clone(), lg, g.dmp().clone())?;
        index.get(b.canonical_form()).copied().ok_or_else(|| {
            StrataError::InternalInconsistency(format!("undegeneration {b:?} is not a BIC of the stratum"))
        })
    }

    fn build_degeneration_maps(&self) -> Result<DegenerationMaps> {
        let index = self.bic_index();
        let mut dg = DegenerationMaps::default();
        for b in self.bics() {
            let info = split_bic(b)?;
            let mut top = BTreeMap::new();
            for (j, tb) in b.level(0)?.bics().iter().enumerate() {
                let mut i2 = info.clone();
                i2.top = tb.clone();
                top.insert(j, self.bic_of_crossing(&index, &clutch(&i2)?, 1)?);
            }
            let mut bot = BTreeMap::new();
            for (j, bb) in b.level(1)?.bics().iter().enumerate() {
                let mut i2 = info.clone();
                i2.bottom = bb.clone();
                bot.insert(j, self.bic_of_crossing(&index, &clutch(&i2)?, 2)?);
            }
            dg.top_to_bic.push(top);
            dg.bot_to_bic.push(bot);
        }
        Ok(dg)
    }

    /// The degeneration maps, built once.
    pub fn dg(&self) -> &DegenerationMaps {
        self.dg.get_or_init(|| {
            self.build_degeneration_maps()
                .unwrap_or_else(|e| panic!("degeneration maps of {self:?}: {e}"))
        })
    }

    /// Whether `j` can sit directly below `i`.
    pub fn lies_over(&self, i: usize, j: usize) -> bool {
        self.dg().bot_to_bic.get(i).is_some_and(|m| m.values().any(|&x| x == j))
    }

    /// The entries of `p` ordered from top to bottom, if they form a chain.
    pub fn ordered_profile(&self, p: &[usize]) -> Option<Profile> {
        if !p.iter().all_unique() || p.iter().any(|&i| i >= self.bics().len()) {
            return None;
        }
        let mut out: Profile = Vec::with_capacity(p.len());
        for &x in p {
            // Insert before the first entry lying below x.
            let pos = out.iter().position(|&y| self.lies_over(x, y)).unwrap_or(out.len());
            out.insert(pos, x);
        }
        out.windows(2).all(|w| self.lies_over(w[0], w[1])).then_some(out)
    }

    /// All non-isomorphic graphs with profile `p`, in any order of entries.
    pub fn lookup(&self, p: &[usize]) -> Result<GraphList> {
        let Some(p) = self.ordered_profile(p) else {
            return Ok(Arc::new(vec![]));
        };
        if let Some(v) = self.graph_memo.graphs.lock().expect("graph memo poisoned").get(&p) {
            return Ok(v.clone());
        }
        let v = Arc::new(self.compute_lookup(&p)?);
        Ok(self
            .graph_memo
            .graphs
            .lock()
            .expect("graph memo poisoned")
            .entry(p)
            .or_insert(v)
            .clone())
    }

    fn compute_lookup(&self, p: &[usize]) -> Result<Vec<Arc<EmbeddedLevelGraph>>> {
        match p.len() {
            0 => return Ok(vec![self.smooth_lg().clone()]),
            1 => return Ok(vec![self.bics()[p[0]].clone()]),
            _ => {}
        }
        let b = &self.bics()[p[0]];
        let bot = b.level(1)?;
        let info = split_bic(b)?;
        let inv = self.dg().bot_to_bic_inv(p[0]);
        let choices: Vec<Vec<usize>> = p[1..]
            .iter()
            .map(|x| inv.get(x).cloned().unwrap_or_default())
            .collect();
        let mut seen = HashMap::new();
        let mut out = Vec::new();
        for q in choices.iter().map(|c| c.iter().copied()).multi_cartesian_product() {
            for h in bot.lookup(&q)?.iter() {
                let mut i2 = info.clone();
                i2.bottom = h.clone();
                let g = clutch(&i2)?;
                if seen.insert(g.canonical_form().clone(), ()).is_none() {
                    out.push(Arc::new(g));
                }
            }
        }
        out.sort_by_cached_key(|g| g.sort_key());
        Ok(out)
    }

    /// The representative graph of an enhanced profile in top-to-bottom order.
    pub fn lookup_graph(&self, ep: &EnhancedProfile) -> Result<Arc<EmbeddedLevelGraph>> {
        if self.ordered_profile(&ep.profile).as_ref() != Some(&ep.profile) {
            return Err(StrataError::UnknownProfile(ep.profile.clone()));
        }
        self.lookup(&ep.profile)?
            .get(ep.component)
            .cloned()
            .ok_or_else(|| StrataError::UnknownProfile(ep.profile.clone()))
    }

    fn build_lookup_list(&self) -> Vec<Vec<Profile>> {
        let dg = self.dg();
        let mut list: Vec<Vec<Profile>> = vec![vec![vec![]]];
        let first: Vec<Profile> = (0..self.bics().len()).map(|i| vec![i]).collect();
        if first.is_empty() {
            return list;
        }
        list.push(first);
        loop {
            let last = list.last().expect("nonempty lookup list");
            let len = last[0].len();
            let mut next: Vec<Profile> = Vec::new();
            for p in last {
                for &j in dg.top_to_bic[p[0]].values() {
                    let mut q = vec![j];
                    q.extend(p);
                    next.push(q);
                }
                if len > 1 {
                    for &j in dg.bot_to_bic[p[len - 1]].values() {
                        let mut q = p.clone();
                        q.push(j);
                        next.push(q);
                    }
                }
            }
            next.sort_unstable();
            next.dedup();
            next.retain(|q| {
                !self.lookup(q)
                    .unwrap_or_else(|e| panic!("lookup of {q:?} in {self:?}: {e}")).is_empty()
            });
            if next.is_empty() {
                return list;
            }
            list.push(next);
        }
    }

    /// All non-empty profiles, grouped by length.
    pub fn lookup_list(&self) -> &[Vec<Profile>] {
        self.lookup_list.get_or_init(|| self.build_lookup_list())
    }

    /// All enhanced profiles with `l` BICs.
    pub fn enhanced_profiles_of_length(&self, l: usize) -> Vec<EnhancedProfile> {
        let Some(ps) = self.lookup_list().get(l) else {
            return vec![];
        };
        let mut out = Vec::new();
        for p in ps {
            let n = self.lookup(p).map(|v| v.len()).unwrap_or(0);
            out.extend((0..n).map(|c| EnhancedProfile::new(p.clone(), c)));
        }
        out
    }

    /// Number of graphs per codimension.
    pub fn graph_counts(&self) -> Vec<usize> {
        (0..self.lookup_list().len())
            .map(|l| self.enhanced_profiles_of_length(l).len())
            .collect()
    }

    /// Leg maps from the graph of `small` into the graph of `big`, obtained by
    /// squishing `big` down to the crossings of `small`.  Empty unless `big`
    /// degenerates from `small`.
    pub fn explicit_leg_maps(&self, small: &EnhancedProfile, big: &EnhancedProfile) -> Result<Arc<Vec<LegMap>>> {
        let key = (small.clone(), big.clone());
        if let Some(v) = self.graph_memo.leg_maps.lock().expect("leg map memo poisoned").get(&key) {
            return Ok(v.clone());
        }
        let v = Arc::new(self.compute_leg_maps(small, big)?);
        Ok(self
            .graph_memo
            .leg_maps
            .lock()
            .expect("leg map memo poisoned")
            .entry(key)
            .or_insert(v)
            .clone())
    }

    fn compute_leg_maps(&self, small: &EnhancedProfile, big: &EnhancedProfile) -> Result<Vec<LegMap>> {
        let gb = self.lookup_graph(big)?;
        let gs = self.lookup_graph(small)?;
        let keep: Vec<usize> = big
            .profile
            .iter()
            .enumerate()
            .filter(|(_, b)| small.profile.contains(b))
            .map(|(k, _)| k + 1)
            .collect();
        let kept: Profile = keep.iter().map(|&k| big.profile[k - 1]).collect();
        if kept != small.profile {
            return Ok(vec![]);
        }
        let squished = EmbeddedLevelGraph::new(
            gb.stratum_data().clone(),
            gb.lg().squish_all_but(&keep)?,
            gb.dmp().clone(),
        )?;
        Ok(gs.isomorphisms(&squished).into_iter().map(|iso| iso.isom_legs).collect())
    }

    /// Whether the graph of `ep1` degenerates from the graph of `ep2`.
    pub fn is_degeneration(&self, ep1: &EnhancedProfile, ep2: &EnhancedProfile) -> Result<bool> {
        Ok(!self.explicit_leg_maps(ep2, ep1)?.is_empty())
    }

    /// Removes entry `i` of the profile and finds the component of the squished graph.
    pub fn squish(&self, ep: &EnhancedProfile, i: usize) -> Result<EnhancedProfile> {
        if i >= ep.len() {
            return Err(StrataError::NoSuchCrossing(i + 1));
        }
        let g = self.lookup_graph(ep)?;
        let s = EmbeddedLevelGraph::new(
            g.stratum_data().clone(),
            g.lg().squish_vertical(i)?,
            g.dmp().clone(),
        )?;
        let mut p = ep.profile.clone();
        p.remove(i);
        let c = self
            .lookup(&p)?
            .iter()
            .position(|h| h.is_isomorphic(&s))
            .ok_or_else(|| StrataError::InternalInconsistency(format!("squish of {ep} at {i} not found")))?;
        Ok(EnhancedProfile::new(p, c))
    }

    /// The union of two profiles in top-to-bottom order, if it is non-empty.
    pub fn merge_profiles(&self, p: &[usize], q: &[usize]) -> Option<Profile> {
        let mut all: Vec<usize> = p.to_vec();
        all.extend(q.iter().filter(|x| !p.contains(x)));
        let merged = self.ordered_profile(&all)?;
        let nonempty = self.lookup(&merged).map(|v| !v.is_empty()).unwrap_or(false);
        nonempty.then_some(merged)
    }

    /// All graphs degenerating from both `ep1` and `ep2` with the merged profile.
    pub fn common_degenerations(&self, ep1: &EnhancedProfile, ep2: &EnhancedProfile) -> Result<Vec<EnhancedProfile>> {
        let Some(p) = self.merge_profiles(&ep1.profile, &ep2.profile) else {
            return Ok(vec![]);
        };
        let mut out = Vec::new();
        for c in 0..self.lookup(&p)?.len() {
            let ep = EnhancedProfile::new(p.clone(), c);
            if self.is_degeneration(&ep, ep1)? && self.is_degeneration(&ep, ep2)? {
                out.push(ep);
            }
        }
        Ok(out)
    }

    /// Graphs with one more level degenerating from `ep`.
    pub fn codim_one_degenerations(&self, ep: &EnhancedProfile) -> Result<Vec<EnhancedProfile>> {
        let mut out = Vec::new();
        for cand in self.enhanced_profiles_of_length(ep.len() + 1) {
            if ep.profile.iter().all(|b| cand.profile.contains(b)) && self.is_degeneration(&cand, ep)? {
                out.push(cand);
            }
        }
        Ok(out)
    }

    /// The common undegeneration of `ep1` and `ep2` with the largest profile.
    pub fn minimal_common_undegeneration(
        &self,
        ep1: &EnhancedProfile,
        ep2: &EnhancedProfile,
    ) -> Result<EnhancedProfile> {
        let p: Profile = ep1.profile.iter().copied().filter(|b| ep2.profile.contains(b)).collect();
        // Two components of one profile only meet after dropping entries.
        for k in (0..=p.len()).rev() {
            for sub in p.iter().copied().combinations(k) {
                for c in 0..self.lookup(&sub)?.len() {
                    let ep = EnhancedProfile::new(sub.clone(), c);
                    if self.is_degeneration(ep1, &ep)? && self.is_degeneration(ep2, &ep)? {
                        return Ok(ep);
                    }
                }
            }
        }
        Err(StrataError::InternalInconsistency(format!(
            "no common undegeneration of {ep1} and {ep2}"
        )))
    }

    /// Codimension-one degenerations of `amb` from which both `ep1` and `ep2` degenerate.
    pub fn codim_one_common_undegenerations(
        &self,
        ep1: &EnhancedProfile,
        ep2: &EnhancedProfile,
        amb: &EnhancedProfile,
    ) -> Result<Vec<EnhancedProfile>> {
        let mut out = Vec::new();
        for &b in &ep1.profile {
            if !ep2.profile.contains(&b) || amb.profile.contains(&b) {
                continue;
            }
            let Some(p) = self.merge_profiles(&amb.profile, &[b]) else {
                continue;
            };
            for c in 0..self.lookup(&p)?.len() {
                let ep = EnhancedProfile::new(p.clone(), c);
                if self.is_degeneration(&ep, amb)?
                    && self.is_degeneration(ep1, &ep)?
                    && self.is_degeneration(ep2, &ep)?
                {
                    out.push(ep);
                }
            }
        }
        Ok(out)
    }

    /// The three-level graph bounding level `l` of `ep` (for `0 < l < len`).
    pub fn three_level_profile_for_level(&self, ep: &EnhancedProfile, l: usize) -> Result<EnhancedProfile> {
        if l == 0 || l >= ep.len() {
            return Err(StrataError::NoSuchLevel(l));
        }
        let p = vec![ep.profile[l - 1], ep.profile[l]];
        for c in 0..self.lookup(&p)?.len() {
            let e3 = EnhancedProfile::new(p.clone(), c);
            if self.is_degeneration(ep, &e3)? {
                return Ok(e3);
            }
        }
        Err(StrataError::InternalInconsistency(format!(
            "no three-level undegeneration of {ep} at level {l}"
        )))
    }

    /// Ambient BIC index of each BIC of the middle level of a three-level graph.
    pub fn middle_to_bic(&self, ep: &EnhancedProfile) -> Result<Arc<BTreeMap<usize, usize>>> {
        if ep.len() != 2 {
            return Err(StrataError::NotThreeLevel);
        }
        if let Some(m) = self.graph_memo.middle.lock().expect("middle memo poisoned").get(ep) {
            return Ok(m.clone());
        }
        let split = splitting_info_at_level(self, ep, 1)?;
        let index = self.bic_index();
        let mut m = BTreeMap::new();
        for (j, b) in split.level.bics().iter().enumerate() {
            let g = split.glue(b)?;
            m.insert(j, self.bic_of_crossing(&index, &g, 2)?);
        }
        let m = Arc::new(m);
        Ok(self
            .graph_memo
            .middle
            .lock()
            .expect("middle memo poisoned")
            .entry(ep.clone())
            .or_insert(m)
            .clone())
    }
}
