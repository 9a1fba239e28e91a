//! Splitting graphs at levels into pieces with clutching data, and clutching
//! pieces back together.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::degeneration_graph::EnhancedProfile;
use crate::embedded_graph::{EmbeddedLevelGraph, LevelStratum};
use crate::error::{Result, StrataError};
use crate::level_graph::{Leg, LevelGraph};
use crate::strata_core::{GeneralisedStratum, PointRef, StratumData};

/// Data for clutching two or three pieces into a graph of an ambient stratum.
#[derive(Clone, Debug)]
pub struct SplittingInfo {
    /// The ambient stratum.
    pub stratum: Arc<StratumData>,
    pub top: Arc<EmbeddedLevelGraph>,
    pub bottom: Arc<EmbeddedLevelGraph>,
    pub middle: Option<Arc<EmbeddedLevelGraph>>,
    /// Ambient point to point of the top piece.
    pub emb_dict_top: BTreeMap<PointRef, PointRef>,
    pub emb_dict_mid: BTreeMap<PointRef, PointRef>,
    pub emb_dict_bot: BTreeMap<PointRef, PointRef>,
    /// Top points to middle points, or to bottom points without a middle.
    pub clutch_dict: BTreeMap<PointRef, PointRef>,
    /// Middle points to bottom points.
    pub clutch_dict_lower: BTreeMap<PointRef, PointRef>,
    /// Top points to bottom points along edges skipping the middle.
    pub clutch_dict_long: BTreeMap<PointRef, PointRef>,
}

/// Splits a BIC into its smooth top and bottom levels.
pub fn split_bic(b: &EmbeddedLevelGraph) -> Result<SplittingInfo> {
    if !b.is_bic() {
        return Err(StrataError::NotABic);
    }
    let top = b.level(0)?;
    let bot = b.level(1)?;
    let mut emb_dict_top = BTreeMap::new();
    let mut emb_dict_bot = BTreeMap::new();
    for (&l, p) in b.dmp() {
        if let Some(q) = top.leg_dict.get(&l) {
            emb_dict_top.insert(*p, *q);
        } else {
            emb_dict_bot.insert(*p, bot.leg_dict[&l]);
        }
    }
    let clutch_dict = b
        .lg()
        .edges()
        .iter()
        .map(|&(u, w)| (top.leg_dict[&u], bot.leg_dict[&w]))
        .collect();
    Ok(SplittingInfo {
        stratum: b.stratum_data().clone(),
        top: top.stratum().smooth_lg().clone(),
        bottom: bot.stratum().smooth_lg().clone(),
        middle: None,
        emb_dict_top,
        emb_dict_mid: BTreeMap::new(),
        emb_dict_bot,
        clutch_dict,
        clutch_dict_lower: BTreeMap::new(),
        clutch_dict_long: BTreeMap::new(),
    })
}

/// Glues the pieces of `info` into one graph of the ambient stratum.
///
/// Legs are renumbered consecutively: top piece first, then middle, then
/// bottom.  Every point of every piece must be used exactly once, either by
/// an embedding dictionary or by a clutching dictionary.
pub fn clutch(info: &SplittingInfo) -> Result<EmbeddedLevelGraph> {
    let mut pieces: Vec<&EmbeddedLevelGraph> = vec![&info.top];
    if let Some(m) = &info.middle {
        pieces.push(m);
    }
    pieces.push(&info.bottom);
    let (ti, bi) = (0, pieces.len() - 1);
    let mi = if info.middle.is_some() { Some(1) } else { None };

    let mut genera = Vec::new();
    let mut legs: Vec<Vec<Leg>> = Vec::new();
    let mut edges = Vec::new();
    let mut orders = BTreeMap::new();
    let mut levels = Vec::new();
    let mut renames: Vec<BTreeMap<Leg, Leg>> = Vec::new();
    let mut next: Leg = 1;
    let mut level_offset = 0i32;
    for piece in &pieces {
        let lg = piece.lg();
        let rename: BTreeMap<Leg, Leg> = lg
            .orders()
            .keys()
            .map(|&l| {
                let r = next;
                next += 1;
                (l, r)
            })
            .collect();
        for v in 0..lg.num_vertices() {
            genera.push(lg.genus(v));
            legs.push(lg.legs_at_vertex(v).iter().map(|l| rename[l]).collect());
            levels.push(lg.internal_levels()[v] - level_offset);
        }
        for &(a, b) in lg.edges() {
            edges.push((rename[&a], rename[&b]));
        }
        for (l, &o) in lg.orders() {
            orders.insert(rename[l], o);
        }
        level_offset += lg.num_levels() as i32;
        renames.push(rename);
    }

    let inv: Vec<BTreeMap<PointRef, Leg>> = pieces.iter().map(|p| p.dmp_inv()).collect();
    let mut used: Vec<BTreeSet<PointRef>> = vec![BTreeSet::new(); pieces.len()];
    let mut leg_of = |k: usize, p: &PointRef| -> Result<Leg> {
        let l = *inv[k]
            .get(p)
            .ok_or_else(|| StrataError::IncompatibleClutch(format!("piece {k} has no point {p}")))?;
        if !used[k].insert(*p) {
            return Err(StrataError::IncompatibleClutch(format!("point {p} of piece {k} used twice")));
        }
        Ok(renames[k][&l])
    };

    let mut clutches: Vec<(usize, usize, &BTreeMap<PointRef, PointRef>)> = Vec::new();
    match mi {
        Some(m) => {
            clutches.push((ti, m, &info.clutch_dict));
            clutches.push((m, bi, &info.clutch_dict_lower));
            clutches.push((ti, bi, &info.clutch_dict_long));
        }
        None => {
            if !info.clutch_dict_lower.is_empty() || !info.clutch_dict_long.is_empty() {
                return Err(StrataError::IncompatibleClutch(
                    "lower or long clutching without a middle piece".into(),
                ));
            }
            clutches.push((ti, bi, &info.clutch_dict));
        }
    }
    for (hi, lo, dict) in clutches {
        for (p, q) in dict {
            let (a, b) = (leg_of(hi, p)?, leg_of(lo, q)?);
            if orders[&a] + orders[&b] != -2 || orders[&a] < 0 {
                return Err(StrataError::IncompatibleClutch(format!(
                    "orders {} at {p} and {} at {q} do not form an edge",
                    orders[&a], orders[&b]
                )));
            }
            edges.push((a, b));
        }
    }

    let mut dmp = BTreeMap::new();
    let mut embs: Vec<(usize, &BTreeMap<PointRef, PointRef>)> = vec![(ti, &info.emb_dict_top)];
    if let Some(m) = mi {
        embs.push((m, &info.emb_dict_mid));
    } else if !info.emb_dict_mid.is_empty() {
        return Err(StrataError::IncompatibleClutch("middle embedding without a middle piece".into()));
    }
    embs.push((bi, &info.emb_dict_bot));
    for (k, dict) in embs {
        for (amb, p) in dict {
            if dmp.insert(leg_of(k, p)?, *amb).is_some() {
                return Err(StrataError::IncompatibleClutch(format!("duplicate leg for {amb}")));
            }
        }
    }
    for (k, piece) in pieces.iter().enumerate() {
        if used[k].len() != piece.dmp().len() {
            return Err(StrataError::IncompatibleClutch(format!("piece {k} has dangling points")));
        }
    }
    let lg = LevelGraph::new(genera, legs, edges, orders, levels)
        .map_err(|e| StrataError::IncompatibleClutch(e.to_string()))?;
    EmbeddedLevelGraph::new(info.stratum.clone(), lg, dmp)
        .map_err(|e| StrataError::IncompatibleClutch(e.to_string()))
}

/// The subgraph of `g` on relative levels `range`, with cut legs marked and
/// embedded through `dmp`.
fn sub_graph(
    g: &EmbeddedLevelGraph,
    levels: std::ops::Range<usize>,
    data: Arc<StratumData>,
    dmp: BTreeMap<Leg, PointRef>,
) -> Result<EmbeddedLevelGraph> {
    let lg = g.lg();
    let verts: Vec<usize> = (0..lg.num_vertices())
        .filter(|&v| levels.contains(&lg.rel_level(v)))
        .collect();
    let inside: BTreeSet<usize> = verts.iter().copied().collect();
    let mut orders = BTreeMap::new();
    for &v in &verts {
        for &l in lg.legs_at_vertex(v) {
            orders.insert(l, lg.order(l));
        }
    }
    let edges = lg
        .edges()
        .iter()
        .copied()
        .filter(|&(a, b)| inside.contains(&lg.vertex(a)) && inside.contains(&lg.vertex(b)))
        .collect();
    let sub = LevelGraph::new(
        verts.iter().map(|&v| lg.genus(v)).collect(),
        verts.iter().map(|&v| lg.legs_at_vertex(v).to_vec()).collect(),
        edges,
        orders,
        verts.iter().map(|&v| lg.internal_levels()[v]).collect(),
    )?;
    EmbeddedLevelGraph::new(data, sub, dmp)
}

/// A graph split around one of its levels, with the level identified with its
/// standardized stratum.
#[derive(Clone, Debug)]
pub struct LevelSplit {
    /// The split graph.
    pub graph: Arc<EmbeddedLevelGraph>,
    /// The standardized level.
    pub level: Arc<LevelStratum>,
    /// Legs of the graph on the level, mapped to points of the standardized level.
    pub leg_dict: BTreeMap<Leg, PointRef>,
    /// Clutching data with the smooth level as the replaceable piece; `None`
    /// for graphs with a single level.
    pub info: Option<SplittingInfo>,
    position: Position,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Position {
    Whole,
    Top,
    Middle,
    Bottom,
}

impl LevelSplit {
    /// Replaces the level by the graph `h` of the standardized level stratum
    /// and clutches.
    pub fn glue(&self, h: &Arc<EmbeddedLevelGraph>) -> Result<EmbeddedLevelGraph> {
        if h.stratum_data() != self.level.data() {
            return Err(StrataError::IncompatibleClutch("graph lives on a different level stratum".into()));
        }
        let Some(info) = &self.info else {
            return EmbeddedLevelGraph::new(self.graph.stratum_data().clone(), h.lg().clone(), h.dmp().clone());
        };
        let mut info = info.clone();
        match self.position {
            Position::Top => info.top = h.clone(),
            Position::Middle => info.middle = Some(h.clone()),
            Position::Bottom => info.bottom = h.clone(),
            Position::Whole => unreachable!("single-level graphs carry no clutching data"),
        }
        clutch(&info)
    }
}

/// First explicit leg map from a one-BIC profile into `ep`.
fn bic_leg_map(x: &GeneralisedStratum, b: usize, ep: &EnhancedProfile) -> Result<BTreeMap<Leg, Leg>> {
    x.explicit_leg_maps(&EnhancedProfile::new(vec![b], 0), ep)?
        .first()
        .cloned()
        .ok_or_else(|| StrataError::InternalInconsistency(format!("BIC {b} is not an undegeneration of {ep}")))
}

/// The graph of `ep` split at level `l`, with the level replaced by its
/// standardized stratum.
pub fn splitting_info_at_level(x: &GeneralisedStratum, ep: &EnhancedProfile, l: usize) -> Result<LevelSplit> {
    let g = x.lookup_graph(ep)?;
    let n = ep.profile.len();
    if l > n {
        return Err(StrataError::NoSuchLevel(l));
    }
    let glg = g.lg();
    let on_level = |leg: Leg| glg.rel_level(glg.vertex(leg));
    if n == 0 {
        let level = Arc::new(LevelStratum::new(
            (**x.data()).clone(),
            g.dmp().clone(),
            x.data().points().into_iter().map(|p| vec![p]).collect(),
        ));
        return Ok(LevelSplit {
            leg_dict: g.dmp().clone(),
            graph: g,
            level,
            info: None,
            position: Position::Whole,
        });
    }
    // Level: standardized stratum and the leg dictionary on the graph.
    let (level, leg_dict, position) = if l == 0 || l == n {
        let b = ep.profile[if l == 0 { 0 } else { n - 1 }];
        let bic = &x.bics()[b];
        let rho = bic_leg_map(x, b, ep)?;
        let lv = bic.level(if l == 0 { 0 } else { 1 })?;
        let ld: BTreeMap<Leg, PointRef> = lv.leg_dict.iter().map(|(y, &p)| (rho[y], p)).collect();
        (lv, ld, if l == 0 { Position::Top } else { Position::Bottom })
    } else {
        let ep3 = x.three_level_profile_for_level(ep, l)?;
        let g3 = x.lookup_graph(&ep3)?;
        let rho3 = x
            .explicit_leg_maps(&ep3, ep)?
            .first()
            .cloned()
            .ok_or_else(|| StrataError::InternalInconsistency(format!("{ep3} is not an undegeneration of {ep}")))?;
        let lv = g3.level(1)?;
        let ld: BTreeMap<Leg, PointRef> = lv.leg_dict.iter().map(|(y, &p)| (rho3[y], p)).collect();
        (lv, ld, Position::Middle)
    };
    for &leg in leg_dict.keys() {
        if on_level(leg) != l {
            return Err(StrataError::InternalInconsistency(format!("leg {leg} is not on level {l}")));
        }
    }
    // Pieces above and below, embedded into the bounding BICs' levels.
    let above = if l > 0 {
        let b = ep.profile[l - 1];
        let bic = &x.bics()[b];
        let rho = bic_leg_map(x, b, ep)?;
        let top = bic.level(0)?;
        let dmp = top.leg_dict.iter().map(|(y, &p)| (rho[y], p)).collect();
        Some(Arc::new(sub_graph(&g, 0..l, top.data().clone(), dmp)?))
    } else {
        None
    };
    let below = if l < n {
        let b = ep.profile[l];
        let bic = &x.bics()[b];
        let rho = bic_leg_map(x, b, ep)?;
        let bot = bic.level(1)?;
        let dmp = bot.leg_dict.iter().map(|(y, &p)| (rho[y], p)).collect();
        Some(Arc::new(sub_graph(&g, l + 1..n + 1, bot.data().clone(), dmp)?))
    } else {
        None
    };
    // Point of the piece containing a given graph leg.
    let piece_point = |leg: Leg| -> (usize, PointRef) {
        let lv = on_level(leg);
        if lv == l {
            (1, leg_dict[&leg])
        } else if lv < l {
            (0, above.as_ref().expect("piece above").dmp()[&leg])
        } else {
            (2, below.as_ref().expect("piece below").dmp()[&leg])
        }
    };
    let mut embs: [BTreeMap<PointRef, PointRef>; 3] = Default::default();
    for (&leg, amb) in g.dmp() {
        let (k, p) = piece_point(leg);
        embs[k].insert(*amb, p);
    }
    let mut dicts: [BTreeMap<PointRef, PointRef>; 3] = Default::default();
    let piece_of = |leg: Leg| on_level(leg).cmp(&l) as i8;
    for &(u, w) in glg.edges() {
        if piece_of(u) == piece_of(w) {
            continue;
        }
        let ((ku, pu), (kw, pw)) = (piece_point(u), piece_point(w));
        // 0: above to level, 1: level to below, 2: above to below.
        let slot = match (ku, kw) {
            (0, 1) => 0,
            (1, 2) => 1,
            _ => 2,
        };
        dicts[slot].insert(pu, pw);
    }
    let smooth = level.stratum().smooth_lg().clone();
    let [e_above, e_level, e_below] = embs;
    let [d_upper, d_lower, d_long] = dicts;
    let info = match (above, below) {
        (None, Some(bot)) => SplittingInfo {
            stratum: g.stratum_data().clone(),
            top: smooth,
            bottom: bot,
            middle: None,
            emb_dict_top: e_level,
            emb_dict_mid: BTreeMap::new(),
            emb_dict_bot: e_below,
            clutch_dict: d_lower,
            clutch_dict_lower: BTreeMap::new(),
            clutch_dict_long: BTreeMap::new(),
        },
        (Some(top), None) => SplittingInfo {
            stratum: g.stratum_data().clone(),
            top,
            bottom: smooth,
            middle: None,
            emb_dict_top: e_above,
            emb_dict_mid: BTreeMap::new(),
            emb_dict_bot: e_level,
            clutch_dict: d_upper,
            clutch_dict_lower: BTreeMap::new(),
            clutch_dict_long: BTreeMap::new(),
        },
        (Some(top), Some(bot)) => SplittingInfo {
            stratum: g.stratum_data().clone(),
            top,
            bottom: bot,
            middle: Some(smooth),
            emb_dict_top: e_above,
            emb_dict_mid: e_level,
            emb_dict_bot: e_below,
            clutch_dict: d_upper,
            clutch_dict_lower: d_lower,
            clutch_dict_long: d_long,
        },
        (None, None) => unreachable!("profiles of positive length have a piece above or below"),
    };
    Ok(LevelSplit {
        graph: g,
        level,
        leg_dict,
        info: Some(info),
        position,
    })
}

/// Splits the graph of a three-level profile into the top of its first BIC,
/// the standardized middle level and the bottom of its second BIC.
pub fn doublesplit(x: &GeneralisedStratum, ep: &EnhancedProfile) -> Result<SplittingInfo> {
    if ep.profile.len() != 2 {
        return Err(StrataError::NotThreeLevel);
    }
    let s = splitting_info_at_level(x, ep, 1)?;
    Ok(s.info.expect("three-level graphs split with clutching data"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stratum(sig: &[i32]) -> Arc<GeneralisedStratum> {
        let data = StratumData::new(
            vec![crate::strata_core::Signature::new(sig.to_vec()).unwrap()],
            vec![],
        )
        .unwrap();
        crate::strata_core::intern(data)
    }

    #[test]
    fn clutch_inverts_split_bic() {
        let x = stratum(&[1, 1]);
        for b in x.bics() {
            let info = split_bic(b).unwrap();
            assert!(info.middle.is_none());
            assert!(clutch(&info).unwrap().is_isomorphic(b));
        }
    }

    #[test]
    fn clutch_dict_sizes_in_genus_two() {
        let x = stratum(&[2]);
        let mut sizes: Vec<usize> = x
            .bics()
            .iter()
            .map(|b| split_bic(b).unwrap().clutch_dict.len())
            .collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![1, 2]);
    }

    #[test]
    fn split_rejects_non_bics() {
        let x = stratum(&[2]);
        assert_eq!(split_bic(x.smooth_lg()).unwrap_err(), StrataError::NotABic);
    }

    #[test]
    fn clutch_detects_order_mismatch() {
        let x = stratum(&[2]);
        let b = x.bics().iter().find(|b| b.lg().edges().len() == 2).unwrap();
        let mut info = split_bic(b).unwrap();
        let (k, v) = info.clutch_dict.pop_first().unwrap();
        let (k2, v2) = info.clutch_dict.pop_first().unwrap();
        info.clutch_dict.insert(k, v2);
        info.clutch_dict.insert(k2, v);
        // Both prongs are 1, so swapping is still compatible.
        assert!(clutch(&info).is_ok());
        info.clutch_dict.clear();
        assert!(matches!(clutch(&info), Err(StrataError::IncompatibleClutch(_))));
    }

    #[test]
    fn doublesplit_round_trips() {
        for sig in [&[1, 1][..], &[2, 2, -2]] {
            let x = stratum(sig);
            let eps = x.enhanced_profiles_of_length(2);
            assert!(!eps.is_empty());
            let mut long_edges = false;
            for ep in eps {
                let info = doublesplit(&x, &ep).unwrap();
                long_edges |= !info.clutch_dict_long.is_empty();
                assert!(clutch(&info).unwrap().is_isomorphic(&x.lookup_graph(&ep).unwrap()));
            }
            assert!(long_edges, "{sig:?} has three-level graphs with long edges");
        }
    }

    #[test]
    fn level_split_of_a_bic_matches_split_bic() {
        let x = stratum(&[4]);
        for (i, b) in x.bics().iter().enumerate() {
            let ep = EnhancedProfile::new(vec![i], 0);
            let s = splitting_info_at_level(&x, &ep, 0).unwrap();
            assert_eq!(s.level.data(), b.level(0).unwrap().data());
            let glued = s.glue(s.level.stratum().smooth_lg()).unwrap();
            assert!(glued.is_isomorphic(b));
        }
    }

    #[test]
    fn gluing_level_bics_inserts_their_image() {
        let x = stratum(&[2, 1, 1]);
        let mut swapped_middle = false;
        for ep in x.enhanced_profiles_of_length(3) {
            let n = ep.len();
            for l in 0..=n {
                let s = splitting_info_at_level(&x, &ep, l).unwrap();
                let images: BTreeMap<usize, usize> = if l == 0 {
                    x.dg().top_to_bic[ep.profile[0]].clone()
                } else if l == n {
                    x.dg().bot_to_bic[ep.profile[n - 1]].clone()
                } else {
                    let ep3 = x.three_level_profile_for_level(&ep, l).unwrap();
                    let g = s.graph.level(l).unwrap();
                    swapped_middle |= g.data() != s.level.data();
                    (*x.middle_to_bic(&ep3).unwrap()).clone()
                };
                for (j, h) in s.level.bics().iter().enumerate() {
                    let glued = s.glue(h).unwrap();
                    let mut p = ep.profile.clone();
                    p.insert(l, images[&j]);
                    let found = x.lookup(&p).unwrap().iter().any(|g| g.is_isomorphic(&glued));
                    assert!(found, "{ep} level {l} BIC {j}");
                }
            }
        }
        assert!(swapped_middle, "some standardized middle level differs from the extracted one");
    }
}
