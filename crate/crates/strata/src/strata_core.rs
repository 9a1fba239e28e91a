//! Signatures, points, residue conditions and generalised strata.
//!
//! A [`GeneralisedStratum`] is a product of connected strata together with a
//! list of residue conditions on poles.  It owns every lazily built cache
//! (BICs, degeneration maps, lookup tables, tautological memo tables).

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num::{BigInt, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::degeneration_graph::{DegenerationMaps, GraphMemo, Profile};
use crate::embedded_graph::EmbeddedLevelGraph;
use crate::error::{Result, StrataError};
use crate::taut_ring::TautMemo;

/// The orders of zeros and poles of one connected component.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Signature {
    sig: Vec<i32>,
    g: u32,
}

impl Signature {
    /// Validates that the orders sum to `2g - 2` for some `g >= 0`.
    pub fn new(sig: Vec<i32>) -> Result<Self> {
        let total: i64 = sig.iter().map(|&m| m as i64).sum();
        if total < -2 || (total + 2) % 2 != 0 {
            return Err(StrataError::MalformedSignature(sig));
        }
        let g = ((total + 2) / 2) as u32;
        Ok(Signature { sig, g })
    }

    pub fn sig(&self) -> &[i32] {
        &self.sig
    }

    pub fn g(&self) -> u32 {
        self.g
    }

    pub fn n(&self) -> usize {
        self.sig.len()
    }

    /// Number of poles (negative orders).
    pub fn p(&self) -> usize {
        self.sig.iter().filter(|&&m| m < 0).count()
    }

    /// Number of zeros (positive orders).
    pub fn z(&self) -> usize {
        self.sig.iter().filter(|&&m| m > 0).count()
    }

    pub fn pole_ind(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.sig[i] < 0).collect()
    }

    pub fn zero_ind(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.sig[i] > 0).collect()
    }

    pub fn poles(&self) -> Vec<i32> {
        self.sig.iter().copied().filter(|&m| m < 0).collect()
    }

    pub fn zeroes(&self) -> Vec<i32> {
        self.sig.iter().copied().filter(|&m| m > 0).collect()
    }

    pub fn is_holomorphic(&self) -> bool {
        self.sig.iter().all(|&m| m >= 0)
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", fmt_tuple(&self.sig))
    }
}

/// Formats integers as a tuple with a trailing comma for one entry.
pub fn fmt_tuple<T: fmt::Display>(xs: &[T]) -> String {
    match xs.len() {
        0 => "()".to_string(),
        1 => format!("({},)", xs[0]),
        _ => format!(
            "({})",
            xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
        ),
    }
}

/// A marked point of a stratum: component index and position in its signature.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PointRef {
    pub component: usize,
    pub index: usize,
}

impl PointRef {
    pub fn new(component: usize, index: usize) -> Self {
        PointRef { component, index }
    }
}

impl fmt::Display for PointRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.component, self.index)
    }
}

/// A set of poles whose residues must sum to zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ResidueCondition {
    poles: Vec<PointRef>,
}

impl ResidueCondition {
    pub fn new(poles: impl IntoIterator<Item = PointRef>) -> Self {
        let poles: BTreeSet<PointRef> = poles.into_iter().collect();
        ResidueCondition {
            poles: poles.into_iter().collect(),
        }
    }

    pub fn poles(&self) -> &[PointRef] {
        &self.poles
    }

    pub fn contains(&self, p: &PointRef) -> bool {
        self.poles.binary_search(p).is_ok()
    }
}

impl fmt::Display for ResidueCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.poles.iter().map(|p| p.to_string()).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// A dense integer matrix with exact rank.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix {
    pub ncols: usize,
    pub rows: Vec<Vec<i64>>,
}

impl Matrix {
    pub fn new(ncols: usize, rows: Vec<Vec<i64>>) -> Self {
        debug_assert!(rows.iter().all(|r| r.len() == ncols));
        Matrix { ncols, rows }
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    /// Rank by fraction-free (Bareiss) elimination.
    pub fn rank(&self) -> usize {
        let mut m: Vec<Vec<BigInt>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
            .collect();
        let nrows = m.len();
        let mut rank = 0;
        let mut prev = BigInt::from(1);
        for col in 0..self.ncols {
            if rank == nrows {
                break;
            }
            let Some(piv) = (rank..nrows).find(|&r| !m[r][col].is_zero()) else {
                continue;
            };
            m.swap(rank, piv);
            for r in rank + 1..nrows {
                for c in col + 1..self.ncols {
                    let v = &m[rank][col] * &m[r][c] - &m[r][col] * &m[rank][c];
                    m[r][c] = v / &prev;
                }
                m[r][col] = BigInt::zero();
            }
            prev = m[rank][col].abs();
            rank += 1;
        }
        rank
    }

    /// The matrix with one more row appended.
    pub fn with_row(&self, row: Vec<i64>) -> Self {
        let mut rows = self.rows.clone();
        rows.push(row);
        Matrix::new(self.ncols, rows)
    }
}

/// The immutable data of a generalised stratum.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StratumData {
    sig_list: Vec<Signature>,
    res_cond: Vec<ResidueCondition>,
}

impl StratumData {
    pub fn new(sig_list: Vec<Signature>, res_cond: Vec<ResidueCondition>) -> Result<Self> {
        if sig_list.is_empty() {
            return Err(StrataError::EmptySignatureList);
        }
        let data = StratumData { sig_list, res_cond };
        for rc in &data.res_cond {
            if rc.poles().is_empty() {
                return Err(StrataError::InvalidResidueCondition(
                    "empty condition".into(),
                ));
            }
            for p in rc.poles() {
                match data.order_checked(p) {
                    Some(o) if o <= -2 => {}
                    Some(o) => {
                        return Err(StrataError::InvalidResidueCondition(format!(
                            "point {p} has order {o}, not a pole of order <= -2"
                        )))
                    }
                    None => {
                        return Err(StrataError::InvalidResidueCondition(format!(
                            "point {p} does not exist"
                        )))
                    }
                }
            }
        }
        Ok(data)
    }

    pub fn sig_list(&self) -> &[Signature] {
        &self.sig_list
    }

    pub fn res_cond(&self) -> &[ResidueCondition] {
        &self.res_cond
    }

    pub fn order_checked(&self, p: &PointRef) -> Option<i32> {
        self.sig_list
            .get(p.component)
            .and_then(|s| s.sig().get(p.index))
            .copied()
    }

    /// Order at a point; panics on invalid points.
    pub fn order(&self, p: &PointRef) -> i32 {
        self.sig_list[p.component].sig()[p.index]
    }

    /// All marked points in lexicographic order.
    pub fn points(&self) -> Vec<PointRef> {
        self.sig_list
            .iter()
            .enumerate()
            .flat_map(|(c, s)| (0..s.n()).map(move |i| PointRef::new(c, i)))
            .collect()
    }

    /// All poles (negative orders) in lexicographic order.
    pub fn poles(&self) -> Vec<PointRef> {
        self.points()
            .into_iter()
            .filter(|p| self.order(p) < 0)
            .collect()
    }

    pub fn num_points(&self) -> usize {
        self.sig_list.iter().map(|s| s.n()).sum()
    }

    pub fn is_pole_in_condition(&self, p: &PointRef) -> bool {
        self.res_cond.iter().any(|rc| rc.contains(p))
    }

    /// Poles constrained only by the residue theorem.
    pub fn free_poles(&self) -> BTreeSet<PointRef> {
        self.poles()
            .into_iter()
            .filter(|p| !self.is_pole_in_condition(p))
            .collect()
    }

    pub fn is_connected(&self) -> bool {
        self.sig_list.len() == 1
    }

    /// One row per residue condition, one column per pole.
    pub fn residue_matrix(&self) -> Matrix {
        let poles = self.poles();
        let rows = self
            .res_cond
            .iter()
            .map(|rc| {
                poles
                    .iter()
                    .map(|p| i64::from(rc.contains(p)))
                    .collect()
            })
            .collect();
        Matrix::new(poles.len(), rows)
    }

    /// Residue matrix stacked with one residue-theorem row per group of points.
    pub fn full_residue_matrix_for_groups(&self, groups: &[Vec<PointRef>]) -> Matrix {
        let poles = self.poles();
        let mut m = self.residue_matrix();
        for grp in groups {
            let row = poles.iter().map(|p| i64::from(grp.contains(p))).collect();
            m.rows.push(row);
        }
        m
    }

    /// Points grouped by component, i.e. the vertices of the smooth graph.
    pub fn component_groups(&self) -> Vec<Vec<PointRef>> {
        self.sig_list
            .iter()
            .enumerate()
            .map(|(c, s)| (0..s.n()).map(|i| PointRef::new(c, i)).collect())
            .collect()
    }

    pub fn full_residue_matrix_smooth(&self) -> Matrix {
        self.full_residue_matrix_for_groups(&self.component_groups())
    }

    /// Projectivised dimension.
    pub fn dimension(&self) -> i64 {
        let unproj: i64 = self
            .sig_list
            .iter()
            .map(|s| 2 * s.g() as i64 + s.n() as i64 - 1)
            .sum();
        unproj - self.full_residue_matrix_smooth().rank() as i64 - 1
    }

    /// Whether the residue at `pole` is forced to vanish by `m`.
    pub fn residue_zero_in(&self, m: &Matrix, pole: &PointRef) -> Result<bool> {
        if self.order_checked(pole).is_none_or(|o| o >= 0) {
            return Err(StrataError::NotAPole(pole.to_string()));
        }
        let poles = self.poles();
        let row = poles.iter().map(|p| i64::from(p == pole)).collect();
        Ok(m.with_row(row).rank() == m.rank())
    }

    /// Empty iff some simple pole is forced to have zero residue.
    pub fn is_empty(&self) -> bool {
        let m = self.full_residue_matrix_smooth();
        self.poles()
            .iter()
            .filter(|p| self.order(p) == -1)
            .any(|p| self.residue_zero_in(&m, p).unwrap_or(false))
    }

    /// Two-line header used when printing graphs and classes.
    pub fn header(&self) -> String {
        let sigs: Vec<String> = self.sig_list.iter().map(|s| s.to_string()).collect();
        let strat = if sigs.len() == 1 { sigs[0].clone() } else { format!("[{}]", sigs.join(", ")) };
        let rcs: Vec<String> = self.res_cond.iter().map(|r| r.to_string()).collect();
        format!("Stratum: {strat}\nwith residue conditions: [{}]", rcs.join(", "))
    }

    /// A compact human readable description.
    pub fn describe(&self) -> String {
        let sigs: Vec<String> = self.sig_list.iter().map(|s| s.to_string()).collect();
        let sig_part = if sigs.len() == 1 {
            sigs[0].clone()
        } else {
            format!("[{}]", sigs.join(", "))
        };
        if self.res_cond.is_empty() {
            sig_part
        } else {
            let rcs: Vec<String> = self.res_cond.iter().map(|r| r.to_string()).collect();
            format!("{} with residue conditions [{}]", sig_part, rcs.join(", "))
        }
    }
}

/// A (possibly disconnected, residue-constrained) stratum owning its caches.
pub struct GeneralisedStratum {
    pub(crate) data: Arc<StratumData>,
    pub(crate) bics: OnceLock<Vec<Arc<EmbeddedLevelGraph>>>,
    pub(crate) smooth: OnceLock<Arc<EmbeddedLevelGraph>>,
    pub(crate) dg: OnceLock<DegenerationMaps>,
    pub(crate) lookup_list: OnceLock<Vec<Vec<Profile>>>,
    pub(crate) graph_memo: GraphMemo,
    pub(crate) taut_memo: TautMemo,
}

impl fmt::Debug for GeneralisedStratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GeneralisedStratum({})", self.data.describe())
    }
}

impl GeneralisedStratum {
    /// Builds a stratum from raw orders and residue conditions.
    pub fn new(sig_list: Vec<Vec<i32>>, res_cond: Vec<Vec<PointRef>>) -> Result<Self> {
        let sigs = sig_list
            .into_iter()
            .map(Signature::new)
            .collect::<Result<Vec<_>>>()?;
        let rcs = res_cond.into_iter().map(ResidueCondition::new).collect();
        Ok(Self::from_data(StratumData::new(sigs, rcs)?))
    }

    /// A connected stratum without residue conditions.
    pub fn connected(sig: &[i32]) -> Result<Self> {
        Self::new(vec![sig.to_vec()], vec![])
    }

    pub fn from_data(data: StratumData) -> Self {
        GeneralisedStratum {
            data: Arc::new(data),
            bics: OnceLock::new(),
            smooth: OnceLock::new(),
            dg: OnceLock::new(),
            lookup_list: OnceLock::new(),
            graph_memo: GraphMemo::default(),
            taut_memo: TautMemo::default(),
        }
    }

    pub fn data(&self) -> &Arc<StratumData> {
        &self.data
    }

    pub fn sig_list(&self) -> &[Signature] {
        self.data.sig_list()
    }

    pub fn res_cond(&self) -> &[ResidueCondition] {
        self.data.res_cond()
    }

    pub fn residue_matrix(&self) -> Matrix {
        self.data.residue_matrix()
    }

    pub fn dim(&self) -> i64 {
        self.data.dimension()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Genus of each component.
    pub fn genera(&self) -> Vec<u32> {
        self.sig_list().iter().map(|s| s.g()).collect()
    }

    pub fn is_connected(&self) -> bool {
        self.data.is_connected()
    }
}

/// The shared stratum for `data`, so that equal level strata share caches.
pub fn intern(data: StratumData) -> Arc<GeneralisedStratum> {
    static REGISTRY: OnceLock<Mutex<HashMap<StratumData, Arc<GeneralisedStratum>>>> =
        OnceLock::new();
    let reg = REGISTRY.get_or_init(Default::default);
    let mut map = reg.lock().expect("stratum registry poisoned");
    map.entry(data.clone())
        .or_insert_with(|| Arc::new(GeneralisedStratum::from_data(data)))
        .clone()
}
