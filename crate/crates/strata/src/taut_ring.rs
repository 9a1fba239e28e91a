//! Additive generators, tautological classes and their products: ψ and ξ
//! classes, level classes, normal bundles, pullbacks and excess intersection.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use num::{BigInt, BigRational, One, Zero};

use crate::clutch_split::splitting_info_at_level;
use crate::degeneration_graph::EnhancedProfile;
use crate::embedded_graph::EmbeddedLevelGraph;
use crate::error::{Result, StrataError};
use crate::level_graph::Leg;
use crate::strata_core::{GeneralisedStratum, PointRef, ResidueCondition};

/// A ψ-monomial: leg to positive exponent.
pub type PsiMonomial = BTreeMap<Leg, u32>;

/// Exact rational from an integer.
pub fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// A product of ψ-classes on the boundary stratum of a graph.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AdditiveGenerator {
    pub ep: EnhancedProfile,
    pub psi: PsiMonomial,
}

impl AdditiveGenerator {
    /// Zero exponents are dropped.
    pub fn new(ep: EnhancedProfile, psi: PsiMonomial) -> Self {
        let psi = psi.into_iter().filter(|&(_, e)| e > 0).collect();
        AdditiveGenerator { ep, psi }
    }

    /// The fundamental class of the boundary stratum of `ep`.
    pub fn graph(ep: EnhancedProfile) -> Self {
        AdditiveGenerator { ep, psi: PsiMonomial::new() }
    }

    pub fn psi_degree(&self) -> usize {
        self.psi.values().map(|&e| e as usize).sum()
    }

    /// Codimension in the stratum.
    pub fn degree(&self) -> usize {
        self.ep.len() + self.psi_degree()
    }
}

/// A rational linear combination of additive generators.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct TautClass {
    terms: Vec<(BigRational, AdditiveGenerator)>,
}

impl TautClass {
    pub fn zero() -> Self {
        TautClass::default()
    }

    pub fn terms(&self) -> &[(BigRational, AdditiveGenerator)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The class multiplied by `c`.
    pub fn scaled(&self, c: &BigRational) -> TautClass {
        if c.is_zero() {
            return TautClass::zero();
        }
        TautClass {
            terms: self.terms.iter().map(|(a, g)| (a * c, g.clone())).collect(),
        }
    }

    /// The terms of codimension `d`.
    pub fn degree_part(&self, d: usize) -> TautClass {
        TautClass {
            terms: self.terms.iter().filter(|(_, g)| g.degree() == d).cloned().collect(),
        }
    }

    /// Whether all terms have the same codimension.
    pub fn is_equidimensional(&self) -> bool {
        self.terms.windows(2).all(|w| w[0].1.degree() == w[1].1.degree())
    }
}

/// Common normal bundle: either a class or the transversal marker.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Cnb {
    /// The intersection is transversal.
    Unit,
    Class(TautClass),
}

/// Level dimensions and the level of every leg of a graph.
#[derive(Clone, Debug)]
pub struct LevelInfo {
    pub dims: Vec<i64>,
    pub leg_level: BTreeMap<Leg, usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum MemoKey {
    XiAtLevel(usize, EnhancedProfile, Option<Leg>),
    CalL(EnhancedProfile, usize),
    NormalBundle(EnhancedProfile, EnhancedProfile),
    Intersection(AdditiveGenerator, AdditiveGenerator, EnhancedProfile),
    XiPow(usize, EnhancedProfile, u32),
}

/// Memo tables of a stratum for tautological computations.
#[derive(Default)]
pub struct TautMemo {
    classes: Mutex<HashMap<MemoKey, Arc<TautClass>>>,
    cnbs: Mutex<HashMap<(EnhancedProfile, EnhancedProfile, EnhancedProfile), Arc<Cnb>>>,
    levels: Mutex<HashMap<EnhancedProfile, Arc<LevelInfo>>>,
    xi_point: OnceLock<PointRef>,
}

impl GeneralisedStratum {
    fn memo_get(&self, key: &MemoKey) -> Option<Arc<TautClass>> {
        self.taut_memo.classes.lock().expect("taut memo poisoned").get(key).cloned()
    }

    fn memo_put(&self, key: MemoKey, t: TautClass) -> Arc<TautClass> {
        let t = Arc::new(t);
        self.taut_memo
            .classes
            .lock()
            .expect("taut memo poisoned")
            .insert(key, t.clone());
        t
    }

    /// Level dimensions and leg levels of the graph of `ep`.
    pub fn level_info(&self, ep: &EnhancedProfile) -> Result<Arc<LevelInfo>> {
        if let Some(i) = self.taut_memo.levels.lock().expect("level memo poisoned").get(ep) {
            return Ok(i.clone());
        }
        let g = self.lookup_graph(ep)?;
        let dims = (0..g.num_levels())
            .map(|i| Ok(g.level(i)?.dim()))
            .collect::<Result<Vec<_>>>()?;
        let lg = g.lg();
        let leg_level = lg
            .legs()
            .iter()
            .enumerate()
            .flat_map(|(v, ls)| ls.iter().map(move |&l| (l, lg.rel_level(v))))
            .collect();
        let info = Arc::new(LevelInfo { dims, leg_level });
        self.taut_memo
            .levels
            .lock()
            .expect("level memo poisoned")
            .insert(ep.clone(), info.clone());
        Ok(info)
    }

    /// Merges duplicates and drops zero terms and terms vanishing for
    /// dimension reasons.
    pub fn reduce(&self, terms: impl IntoIterator<Item = (BigRational, AdditiveGenerator)>) -> Result<TautClass> {
        let mut merged: BTreeMap<AdditiveGenerator, BigRational> = BTreeMap::new();
        for (c, g) in terms {
            *merged.entry(g).or_insert_with(BigRational::zero) += c;
        }
        let dim = self.dim();
        let mut out = Vec::new();
        for (g, c) in merged {
            if c.is_zero() || g.degree() as i64 > dim {
                continue;
            }
            let info = self.level_info(&g.ep)?;
            let mut per_level = vec![0i64; info.dims.len()];
            for (leg, &e) in &g.psi {
                let l = *info.leg_level.get(leg).ok_or(StrataError::UnknownLeg(*leg))?;
                per_level[l] += e as i64;
            }
            if per_level.iter().zip(&info.dims).any(|(d, m)| d > m) {
                continue;
            }
            out.push((c, g));
        }
        Ok(TautClass { terms: out })
    }

    pub fn add(&self, a: &TautClass, b: &TautClass) -> Result<TautClass> {
        self.reduce(a.terms.iter().chain(&b.terms).cloned())
    }

    pub fn sub(&self, a: &TautClass, b: &TautClass) -> Result<TautClass> {
        self.add(a, &b.scaled(&rat(-1)))
    }

    /// The unit class.
    pub fn one(&self) -> TautClass {
        TautClass {
            terms: vec![(rat(1), AdditiveGenerator::graph(EnhancedProfile::smooth()))],
        }
    }

    /// A single generator, validated against its graph.
    pub fn additive_generator(&self, ep: &EnhancedProfile, psi: PsiMonomial) -> Result<TautClass> {
        let info = self.level_info(ep)?;
        if let Some(l) = psi.keys().find(|l| !info.leg_level.contains_key(l)) {
            return Err(StrataError::UnknownLeg(*l));
        }
        self.reduce([(rat(1), AdditiveGenerator::new(ep.clone(), psi))])
    }

    /// The class of the boundary stratum of `ep`.
    pub fn taut_from_graph(&self, ep: &EnhancedProfile) -> Result<TautClass> {
        self.additive_generator(ep, PsiMonomial::new())
    }

    /// The ψ-class of a leg of the smooth graph.
    pub fn psi(&self, leg: Leg) -> Result<TautClass> {
        if !self.is_connected() {
            return Err(StrataError::Disconnected);
        }
        self.additive_generator(&EnhancedProfile::smooth(), [(leg, 1)].into())
    }

    fn point_on_bottom(b: &EmbeddedLevelGraph, p: &PointRef) -> bool {
        b.dmp_inv()
            .get(p)
            .is_some_and(|&l| b.lg().rel_level(b.lg().vertex(l)) == 1)
    }

    /// The point lying on the bottom level of the fewest BICs.
    pub fn default_xi_point(&self) -> PointRef {
        *self.taut_memo.xi_point.get_or_init(|| {
            let bics = self.bics();
            self.data()
                .points()
                .into_iter()
                .min_by_key(|p| (bics.iter().filter(|b| Self::point_on_bottom(b, p)).count(), *p))
                .expect("strata have at least one point")
        })
    }

    /// ξ expressed with the ψ-class of the default point.
    pub fn xi(&self) -> Result<Arc<TautClass>> {
        self.xi_at_level(0, &EnhancedProfile::smooth(), None)
    }

    /// ξ expressed with the ψ-class of `point`.
    pub fn xi_with_leg(&self, point: PointRef) -> Result<Arc<TautClass>> {
        let leg = *self
            .smooth_lg()
            .dmp_inv()
            .get(&point)
            .ok_or_else(|| StrataError::InvalidResidueCondition(format!("no point {point}")))?;
        self.xi_at_level(0, &EnhancedProfile::smooth(), Some(leg))
    }

    /// ξ of the standardized level `l` of `ep`, pulled back to the boundary
    /// stratum of `ep`.
    pub fn xi_at_level(&self, l: usize, ep: &EnhancedProfile, leg: Option<Leg>) -> Result<Arc<TautClass>> {
        let key = MemoKey::XiAtLevel(l, ep.clone(), leg);
        if let Some(t) = self.memo_get(&key) {
            return Ok(t);
        }
        let split = splitting_info_at_level(self, ep, l)?;
        let (leg, point) = match leg {
            Some(leg) => (leg, *split.leg_dict.get(&leg).ok_or(StrataError::LegNotOnLevel(leg, l))?),
            None => {
                let p = split.level.default_xi_point();
                let leg = split.leg_dict.iter().find(|(_, &q)| q == p).map(|(&l, _)| l).ok_or_else(|| {
                    StrataError::InternalInconsistency(format!("point {p} of level {l} has no leg"))
                })?;
                (leg, p)
            }
        };
        let m = split.level.data().order(&point) as i64;
        let mut terms = vec![(rat(m + 1), AdditiveGenerator::new(ep.clone(), [(leg, 1)].into()))];
        for (j, b) in split.level.bics().iter().enumerate() {
            if Self::point_on_bottom(b, &point) {
                let (c, ag) = self.glue_bic_at_level(ep, l, j)?;
                terms.push((-c, ag));
            }
        }
        let t = self.reduce(terms)?;
        Ok(self.memo_put(key, t))
    }

    /// Profile of `ep` extended by the ambient BIC of level BIC `j` at level `l`.
    fn extended_profile(&self, ep: &EnhancedProfile, l: usize, j: usize) -> Result<Vec<usize>> {
        let p = &ep.profile;
        let n = p.len();
        let missing = || StrataError::InternalInconsistency(format!("level BIC {j} of {ep} at level {l} has no ambient image"));
        let b = if n == 0 {
            j
        } else if l == 0 {
            *self.dg().top_to_bic[p[0]].get(&j).ok_or_else(missing)?
        } else if l == n {
            *self.dg().bot_to_bic[p[n - 1]].get(&j).ok_or_else(missing)?
        } else {
            let e3 = self.three_level_profile_for_level(ep, l)?;
            *self.middle_to_bic(&e3)?.get(&j).ok_or_else(missing)?
        };
        let mut out = p.clone();
        out.insert(l, b);
        Ok(out)
    }

    /// Glues BIC `j` of the standardized level `l` into `ep`; returns the
    /// weight ℓ_ext · |Aut(glued)| / (|Aut(ep)| · |Aut(B)|) and the glued graph.
    fn glue_bic_at_level(&self, ep: &EnhancedProfile, l: usize, j: usize) -> Result<(BigRational, AdditiveGenerator)> {
        let split = splitting_info_at_level(self, ep, l)?;
        let b = &split.level.bics()[j];
        let glued = split.glue(b)?;
        let profile = self.extended_profile(ep, l, j)?;
        let candidates = self.lookup(&profile)?;
        let comp = candidates.iter().position(|h| h.is_isomorphic(&glued)).ok_or_else(|| {
            StrataError::InternalInconsistency(format!("glued graph not found in profile {profile:?}"))
        })?;
        let ell_ext = self.bics()[profile[l]].ell();
        let g = self.lookup_graph(ep)?;
        let w = BigRational::new(
            BigInt::from(ell_ext) * BigInt::from(glued.num_automorphisms()),
            BigInt::from(g.num_automorphisms()) * BigInt::from(b.num_automorphisms()),
        );
        Ok((w, AdditiveGenerator::graph(EnhancedProfile::new(profile, comp))))
    }

    /// The class L at level `l` of `ep`: every BIC of the standardized level
    /// glued in, weighted by ℓ of the inserted crossing.
    pub fn cal_l(&self, ep: &EnhancedProfile, l: usize) -> Result<Arc<TautClass>> {
        let key = MemoKey::CalL(ep.clone(), l);
        if let Some(t) = self.memo_get(&key) {
            return Ok(t);
        }
        let split = splitting_info_at_level(self, ep, l)?;
        let terms = (0..split.level.bics().len())
            .map(|j| self.glue_bic_at_level(ep, l, j))
            .collect::<Result<Vec<_>>>()?;
        let t = self.reduce(terms)?;
        Ok(self.memo_put(key, t))
    }

    /// First Chern class of the normal bundle of `ep` inside `amb`.
    pub fn normal_bundle(&self, ep: &EnhancedProfile, amb: &EnhancedProfile) -> Result<Arc<TautClass>> {
        let key = MemoKey::NormalBundle(ep.clone(), amb.clone());
        if let Some(t) = self.memo_get(&key) {
            return Ok(t);
        }
        if ep.len() != amb.len() + 1 || !self.is_degeneration(ep, amb)? {
            return Err(StrataError::NotCodimOne);
        }
        let k = ep
            .profile
            .iter()
            .position(|b| !amb.profile.contains(b))
            .ok_or(StrataError::NotCodimOne)?;
        let ell = self.bics()[ep.profile[k]].ell();
        let upper = self.xi_at_level(k, ep, None)?;
        let lower = self.xi_at_level(k + 1, ep, None)?;
        let cal = self.cal_l(ep, k)?;
        let sum = self.sub(&self.sub(&lower, &upper)?, &cal)?;
        let t = sum.scaled(&BigRational::new(BigInt::one(), BigInt::from(ell)));
        Ok(self.memo_put(key, t))
    }

    /// The product of the normal bundles of the codimension-one common
    /// undegenerations of `ep1` and `ep2` inside `amb`, pulled back to their
    /// minimal common undegeneration.
    pub fn cnb(&self, ep1: &EnhancedProfile, ep2: &EnhancedProfile, amb: &EnhancedProfile) -> Result<Arc<Cnb>> {
        let key = (ep1.clone(), ep2.clone(), amb.clone());
        if let Some(c) = self.taut_memo.cnbs.lock().expect("cnb memo poisoned").get(&key) {
            return Ok(c.clone());
        }
        let min_com = self.minimal_common_undegeneration(ep1, ep2)?;
        let value = if &min_com == amb {
            Cnb::Unit
        } else {
            let mut acc: Option<TautClass> = None;
            for delta in self.codim_one_common_undegenerations(ep1, ep2, amb)? {
                let nb = self.normal_bundle(&delta, amb)?;
                let mut pulled = Vec::new();
                for (c, g) in nb.terms() {
                    let p = self.gen_pullback(g, &min_com, &delta)?;
                    pulled.extend(p.scaled(c).terms);
                }
                let pulled = self.reduce(pulled)?;
                acc = Some(match acc {
                    None => pulled,
                    Some(a) => self.multiply(&a, &pulled, &min_com)?,
                });
            }
            Cnb::Class(acc.ok_or_else(|| {
                StrataError::InternalInconsistency(format!("no codimension-one undegeneration between {min_com} and {amb}"))
            })?)
        };
        let value = Arc::new(value);
        self.taut_memo
            .cnbs
            .lock()
            .expect("cnb memo poisoned")
            .insert(key, value.clone());
        Ok(value)
    }

    /// Pullback of `a` to a degeneration `target` of its graph, averaged over
    /// the undegeneration maps.
    pub fn simple_pullback(&self, a: &AdditiveGenerator, target: &EnhancedProfile) -> Result<TautClass> {
        let maps = self.explicit_leg_maps(&a.ep, target)?;
        if maps.is_empty() {
            return Err(StrataError::InternalInconsistency(format!("{target} does not degenerate {}", a.ep)));
        }
        let w = BigRational::new(BigInt::one(), BigInt::from(maps.len()));
        let mut terms = Vec::with_capacity(maps.len());
        for m in maps.iter() {
            let mut psi = PsiMonomial::new();
            for (leg, &e) in &a.psi {
                let img = *m.get(leg).ok_or(StrataError::UnknownLeg(*leg))?;
                *psi.entry(img).or_insert(0) += e;
            }
            terms.push((w.clone(), AdditiveGenerator::new(target.clone(), psi)));
        }
        self.reduce(terms)
    }

    /// Pullback of `a` to the intersection of its graph with `target`, both
    /// degenerations of `amb`, including the excess normal bundle.
    pub fn gen_pullback(&self, a: &AdditiveGenerator, target: &EnhancedProfile, amb: &EnhancedProfile) -> Result<TautClass> {
        let mut terms = Vec::new();
        for pi in self.common_degenerations(&a.ep, target)? {
            terms.extend(self.simple_pullback(a, &pi)?.terms);
        }
        let base = self.reduce(terms)?;
        if base.is_zero() {
            return Ok(base);
        }
        match &*self.cnb(&a.ep, target, amb)? {
            Cnb::Unit => Ok(base),
            Cnb::Class(c) => {
                let min_com = self.minimal_common_undegeneration(&a.ep, target)?;
                self.multiply(&base, c, &min_com)
            }
        }
    }

    /// Averages every term over the automorphisms of its graph, so that
    /// classes equal in the Chow ring up to relabelling compare equal.
    pub fn symmetrize(&self, t: &TautClass) -> Result<TautClass> {
        let mut terms = Vec::new();
        for (c, g) in t.terms() {
            terms.extend(self.simple_pullback(g, &g.ep)?.scaled(c).terms);
        }
        self.reduce(terms)
    }

    /// Pullback of a class, term by term.
    pub fn gen_pullback_taut(&self, t: &TautClass, target: &EnhancedProfile, amb: &EnhancedProfile) -> Result<TautClass> {
        let mut terms = Vec::new();
        for (c, g) in t.terms() {
            terms.extend(self.gen_pullback(g, target, amb)?.scaled(c).terms);
        }
        self.reduce(terms)
    }

    /// Product of two generators supported on degenerations of `amb`.
    pub fn intersection_ag(
        &self,
        a1: &AdditiveGenerator,
        a2: &AdditiveGenerator,
        amb: &EnhancedProfile,
    ) -> Result<Arc<TautClass>> {
        let key = MemoKey::Intersection(a1.clone(), a2.clone(), amb.clone());
        if let Some(t) = self.memo_get(&key) {
            return Ok(t);
        }
        if !self.is_degeneration(&a1.ep, amb)? || !self.is_degeneration(&a2.ep, amb)? {
            return Err(StrataError::AmbientMismatch);
        }
        let mut terms = Vec::new();
        // Both factors already contain the class of `amb`.
        if (a1.degree() + a2.degree() - amb.len()) as i64 <= self.dim() {
            for (c, b) in self.gen_pullback(a1, &a2.ep, amb)?.terms() {
                let second = if a2.psi.is_empty() {
                    TautClass { terms: vec![(rat(1), AdditiveGenerator::graph(b.ep.clone()))] }
                } else {
                    self.simple_pullback(a2, &b.ep)?
                };
                for (c2, b2) in second.terms() {
                    let mut psi = b.psi.clone();
                    for (&l, &e) in &b2.psi {
                        *psi.entry(l).or_insert(0) += e;
                    }
                    terms.push((c * c2, AdditiveGenerator::new(b.ep.clone(), psi)));
                }
            }
        }
        let t = self.reduce(terms)?;
        Ok(self.memo_put(key, t))
    }

    /// Product of two classes supported on degenerations of `amb`.
    pub fn multiply(&self, t1: &TautClass, t2: &TautClass, amb: &EnhancedProfile) -> Result<TautClass> {
        let mut terms = Vec::new();
        for (c1, g1) in t1.terms() {
            for (c2, g2) in t2.terms() {
                let p = self.intersection_ag(g1, g2, amb)?;
                let c = c1 * c2;
                terms.extend(p.terms().iter().map(|(c3, g)| (&c * c3, g.clone())));
            }
        }
        self.reduce(terms)
    }

    /// Product in the Chow ring of the stratum.
    pub fn mul(&self, t1: &TautClass, t2: &TautClass) -> Result<TautClass> {
        self.multiply(t1, t2, &EnhancedProfile::smooth())
    }

    /// `k`-th power in the Chow ring of the stratum.
    pub fn pow(&self, t: &TautClass, k: u32) -> Result<TautClass> {
        let mut acc = self.one();
        for _ in 0..k {
            acc = self.mul(&acc, t)?;
        }
        Ok(acc)
    }

    /// `k`-th power of ξ at level `l` of `ep`, multiplied inside `ep`.
    pub fn xi_at_level_pow(&self, l: usize, ep: &EnhancedProfile, k: u32) -> Result<Arc<TautClass>> {
        let key = MemoKey::XiPow(l, ep.clone(), k);
        if let Some(t) = self.memo_get(&key) {
            return Ok(t);
        }
        let t = if k == 0 {
            self.taut_from_graph(ep)?
        } else {
            let xi = self.xi_at_level(l, ep, None)?;
            let prev = self.xi_at_level_pow(l, ep, k - 1)?;
            self.multiply(&prev, &xi, ep)?
        };
        Ok(self.memo_put(key, t))
    }

    /// Row of `cond` over the poles of the stratum.
    fn condition_row(&self, cond: &ResidueCondition) -> Vec<i64> {
        self.data().poles().iter().map(|p| i64::from(cond.contains(p))).collect()
    }

    /// Whether `cond` already follows from the residue conditions and the
    /// residue theorem.
    pub fn is_redundant_condition(&self, cond: &ResidueCondition) -> bool {
        let m = self.data().full_residue_matrix_smooth();
        m.with_row(self.condition_row(cond)).rank() == m.rank()
    }

    /// The class of the sub-stratum cut out by one more residue condition.
    pub fn res_stratum_class(&self, cond: &ResidueCondition) -> Result<TautClass> {
        if let Some(p) = cond.poles().iter().find(|p| self.data().order_checked(p).is_none_or(|o| o >= 0)) {
            return Err(StrataError::NotAPole(p.to_string()));
        }
        if self.is_redundant_condition(cond) {
            return Err(StrataError::RedundantCondition);
        }
        let mut terms: Vec<_> = self.xi()?.scaled(&rat(-1)).terms.clone();
        for (i, b) in self.bics().iter().enumerate() {
            if Self::condition_automatic_on_top(b, cond)? {
                terms.push((-rat(b.ell() as i64), AdditiveGenerator::graph(EnhancedProfile::new(vec![i], 0))));
            }
        }
        self.reduce(terms)
    }

    /// Whether `cond` holds automatically on the top level of the BIC `b`:
    /// either none of its poles is on top, or its restriction to the top
    /// poles follows from the top level's conditions.
    fn condition_automatic_on_top(b: &EmbeddedLevelGraph, cond: &ResidueCondition) -> Result<bool> {
        let inv = b.dmp_inv();
        let top = b.level(0)?;
        let mut top_points = Vec::new();
        for p in cond.poles() {
            let leg = inv[p];
            if b.lg().rel_level(b.lg().vertex(leg)) == 0 {
                top_points.push(top.leg_dict[&leg]);
            }
        }
        if top_points.is_empty() {
            return Ok(true);
        }
        let m = top.data().full_residue_matrix_smooth();
        let row = top.data().poles().iter().map(|p| i64::from(top_points.contains(p))).collect();
        Ok(m.with_row(row).rank() == m.rank())
    }

    /// Multiline rendering of a generator.
    pub fn display_generator(&self, g: &AdditiveGenerator) -> Result<String> {
        let info = self.level_info(&g.ep)?;
        let mut parts = Vec::new();
        for (leg, e) in &g.psi {
            let l = info.leg_level.get(leg).ok_or(StrataError::UnknownLeg(*leg))?;
            parts.push(format!("Psi class {leg} with exponent {e} on level {l}"));
        }
        parts.push(format!("Graph {}", g.ep));
        Ok(parts.join(" * "))
    }

    /// Rendering of a class: header, blank line, one line per term.
    pub fn display_class(&self, t: &TautClass) -> Result<String> {
        let mut s = format!("Tautological class on {}\n\n", self.data().header());
        for (c, g) in t.terms() {
            s.push_str(&format!("{c} * {} +\n", self.display_generator(g)?));
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn x2() -> Arc<GeneralisedStratum> {
        crate::strata_core::intern(GeneralisedStratum::connected(&[2]).unwrap().data().as_ref().clone())
    }

    fn ep(p: &[usize], c: usize) -> EnhancedProfile {
        EnhancedProfile::new(p.to_vec(), c)
    }

    #[test]
    fn xi_on_h2() {
        let x = x2();
        let xi = x.xi().unwrap();
        let mut expect = vec![(rat(3), AdditiveGenerator::new(ep(&[], 0), [(1, 1)].into()))];
        for i in 0..x.bics().len() {
            expect.push((rat(-1), AdditiveGenerator::graph(ep(&[i], 0))));
        }
        assert_eq!(*xi, x.reduce(expect).unwrap());
    }

    #[test]
    fn xi_at_top_of_smooth_is_xi() {
        let x = GeneralisedStratum::connected(&[2, -2]).unwrap();
        assert_eq!(x.xi().unwrap(), x.xi_at_level(0, &ep(&[], 0), None).unwrap());
        for (pt, leg) in [(PointRef::new(0, 0), 1), (PointRef::new(0, 1), 2)] {
            assert_eq!(x.xi_with_leg(pt).unwrap(), x.xi_at_level(0, &ep(&[], 0), Some(leg)).unwrap());
        }
    }

    #[test]
    fn xi_at_level_needs_leg_on_level() {
        let x = x2();
        let ct = (0..2).find(|&i| x.bics()[i].lg().num_vertices() == 2 && x.bics()[i].lg().edges().len() == 1).unwrap();
        let g = x.lookup_graph(&ep(&[ct], 0)).unwrap();
        let bottom_leg = g.lg().legs_at_vertex(g.lg().vertices_at_level(1)[0])[0];
        assert!(matches!(
            x.xi_at_level(0, &ep(&[ct], 0), Some(bottom_leg)),
            Err(StrataError::LegNotOnLevel(_, 0))
        ));
    }

    #[test]
    fn compact_type_top_xi_is_psi() {
        let x = x2();
        let ct = (0..2).find(|&i| x.bics()[i].lg().edges().len() == 1).unwrap();
        let e = ep(&[ct], 0);
        let xi = x.xi_at_level(0, &e, None).unwrap();
        assert_eq!(xi.terms().len(), 1);
        assert_eq!(xi.terms()[0].0, rat(1));
        assert_eq!(xi.terms()[0].1.psi.len(), 1);
    }

    #[test]
    fn normal_bundle_is_self_intersection() {
        let x = x2();
        for i in 0..x.bics().len() {
            let d = x.taut_from_graph(&ep(&[i], 0)).unwrap();
            let nb = x.normal_bundle(&ep(&[i], 0), &ep(&[], 0)).unwrap();
            assert_eq!(x.symmetrize(&x.mul(&d, &d).unwrap()).unwrap(), x.symmetrize(&nb).unwrap(), "BIC {i}");
        }
    }

    #[test]
    fn compact_type_square_has_two_psi_terms() {
        let x = x2();
        let ct = (0..2).find(|&i| x.bics()[i].lg().edges().len() == 1).unwrap();
        let d = x.taut_from_graph(&ep(&[ct], 0)).unwrap();
        let sq = x.mul(&d, &d).unwrap();
        assert_eq!(sq.terms().len(), 2);
        assert!(sq.terms().iter().all(|(c, g)| *c == rat(-1) && g.psi_degree() == 1));
    }

    #[test]
    fn distinct_bics_meet_transversally() {
        let x = x2();
        assert_eq!(*x.cnb(&ep(&[1], 0), &ep(&[0], 0), &ep(&[], 0)).unwrap(), Cnb::Unit);
        let d0 = x.taut_from_graph(&ep(&[0], 0)).unwrap();
        let d1 = x.taut_from_graph(&ep(&[1], 0)).unwrap();
        let prod = x.mul(&d0, &d1).unwrap();
        let p = x.ordered_profile(&[0, 1]).unwrap();
        assert_eq!(prod, x.taut_from_graph(&ep(&p, 0)).unwrap());
    }

    #[test]
    fn cnb_of_equal_codim_one_is_normal_bundle() {
        let x = x2();
        for i in 0..2 {
            let e = ep(&[i], 0);
            let Cnb::Class(c) = &*x.cnb(&e, &e, &ep(&[], 0)).unwrap() else {
                panic!("expected a class")
            };
            let nb = x.normal_bundle(&e, &ep(&[], 0)).unwrap();
            assert_eq!(x.symmetrize(c).unwrap(), x.symmetrize(&nb).unwrap());
        }
    }

    #[test]
    fn edge_leg_pullback_averages_over_automorphisms() {
        let x = x2();
        let banana = (0..2).find(|&i| x.bics()[i].lg().edges().len() == 2).unwrap();
        let e = ep(&[banana], 0);
        let g = x.lookup_graph(&e).unwrap();
        let (top_leg, other) = {
            let es = g.lg().edges();
            (es[0].0, es[1].0)
        };
        let a = AdditiveGenerator::new(e.clone(), [(top_leg, 1)].into());
        let pb = x.simple_pullback(&a, &e).unwrap();
        let half = BigRational::new(1.into(), 2.into());
        let expect = x
            .reduce([
                (half.clone(), AdditiveGenerator::new(e.clone(), [(top_leg, 1)].into())),
                (half, AdditiveGenerator::new(e.clone(), [(other, 1)].into())),
            ])
            .unwrap();
        assert_eq!(pb, expect);
    }

    #[test]
    fn bottom_psi_pullback_vanishes() {
        let x = x2();
        let ct = (0..2).find(|&i| x.bics()[i].lg().edges().len() == 1).unwrap();
        let e = ep(&[ct], 0);
        let g = x.lookup_graph(&e).unwrap();
        let bottom_leg = g.dmp().keys().copied().next().unwrap();
        let a = AdditiveGenerator::new(e.clone(), [(bottom_leg, 1)].into());
        let p = x.ordered_profile(&[0, 1]).unwrap();
        assert!(x.simple_pullback(&a, &ep(&p, 0)).unwrap().is_zero());
        let top_leg = g.lg().edges()[0].0;
        let a = AdditiveGenerator::new(e, [(top_leg, 1)].into());
        let pb = x.simple_pullback(&a, &ep(&p, 0)).unwrap();
        assert_eq!(pb.terms().len(), 1);
        assert_eq!(pb.terms()[0].0, rat(1));
    }

    #[test]
    fn psi_requires_connected_and_valid_leg() {
        let x = GeneralisedStratum::new(vec![vec![0], vec![0]], vec![]).unwrap();
        assert_eq!(x.psi(1), Err(StrataError::Disconnected));
        assert!(matches!(x2().psi(7), Err(StrataError::UnknownLeg(7))));
    }

    #[test]
    fn default_xi_uses_legs_of_the_graph() {
        let x = GeneralisedStratum::new(vec![vec![0], vec![0, 0]], vec![]).unwrap();
        for l in 0..x.lookup_list().len() {
            for e in x.enhanced_profiles_of_length(l) {
                let info = x.level_info(&e).unwrap();
                for lv in 0..=l {
                    for (_, g) in x.xi_at_level(lv, &e, None).unwrap().terms() {
                        assert!(g.psi.keys().all(|leg| info.leg_level[leg] == lv), "{e} level {lv}");
                    }
                }
            }
        }
    }

    #[test]
    fn one_is_a_unit() {
        let x = x2();
        let p = x.psi(1).unwrap();
        assert_eq!(x.mul(&p, &x.one()).unwrap(), p);
        assert_eq!(x.mul(&x.one(), &p).unwrap(), p);
        assert!(x.mul(&p, &TautClass::zero()).unwrap().is_zero());
    }

    #[test]
    fn normal_bundle_rejects_non_codim_one() {
        let x = x2();
        assert_eq!(x.normal_bundle(&ep(&[], 0), &ep(&[], 0)), Err(StrataError::NotCodimOne));
    }

    #[test]
    fn redundant_condition_rejected() {
        let x = GeneralisedStratum::connected(&[2, -2, -2]).unwrap();
        let both = ResidueCondition::new([PointRef::new(0, 1), PointRef::new(0, 2)]);
        assert_eq!(x.res_stratum_class(&both), Err(StrataError::RedundantCondition));
    }

    #[test]
    fn display_matches_line_format() {
        let x = x2();
        let s = x.display_class(&x.psi(1).unwrap()).unwrap();
        assert_eq!(
            s,
            "Tautological class on Stratum: (2,)\nwith residue conditions: []\n\n\
             1 * Psi class 1 with exponent 1 on level 0 * Graph ((), 0) +\n"
        );
    }

    fn arb_class() -> impl Strategy<Value = Vec<(i64, usize, u32)>> {
        prop::collection::vec((-3i64..4, 0usize..4, 0u32..4), 0..8)
    }

    proptest! {
        #[test]
        fn reduce_is_idempotent(spec in arb_class()) {
            let x = x2();
            let eps = [ep(&[], 0), ep(&[0], 0), ep(&[1], 0), ep(&x.ordered_profile(&[0, 1]).unwrap(), 0)];
            let terms: Vec<_> = spec
                .iter()
                .map(|&(c, e, k)| (rat(c), AdditiveGenerator::new(eps[e].clone(), [(1, k)].into())))
                .collect();
            let once = x.reduce(terms).unwrap();
            let twice = x.reduce(once.terms().to_vec()).unwrap();
            prop_assert_eq!(&once, &twice);
            prop_assert!(once.terms().iter().all(|(c, g)| !c.is_zero() && g.degree() as i64 <= x.dim()));
        }
    }
}
