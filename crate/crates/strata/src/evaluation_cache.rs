//! Evaluation of top-degree classes through stack factors and level-wise
//! ψ-integrals, with persistent caches of ψ-integrals and top ξ-powers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use itertools::Itertools;
use num::{BigInt, BigRational, One, Zero};
use serde::{Deserialize, Serialize};

use crate::degeneration_graph::EnhancedProfile;
use crate::error::{Result, StrataError};
use crate::level_graph::UnionFind;
use crate::strata_core::{fmt_tuple, intern, GeneralisedStratum, PointRef, ResidueCondition, StratumData};
use crate::taut_ring::{rat, AdditiveGenerator, PsiMonomial, TautClass};

/// File name of the ψ-integral cache.
pub const ADM_FILE: &str = "adm_evals.jsonl";
/// File name of the top ξ-power cache.
pub const XI_FILE: &str = "top_xis.jsonl";
/// Environment variable naming the cache directory.
pub const CACHE_DIR_ENV: &str = "STRATA_CACHE_DIR";

const SEED_ADM: &str = include_str!("../data/adm_evals.jsonl");
const SEED_XI: &str = include_str!("../data/top_xis.jsonl");

/// Normalized key of a ψ-integral on a connected stratum without residue
/// conditions: sorted signature and 1-based point indices with exponents.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AdmKey {
    pub sig: Vec<i32>,
    pub psis: Vec<(usize, u32)>,
}

/// Normalizes a signature and a ψ-monomial keyed by 1-based point index.
/// Exponents on points of equal order are sorted in decreasing order.
pub fn adm_key(sig: &[i32], psis: &BTreeMap<usize, u32>) -> AdmKey {
    let mut pts: Vec<(i32, u32)> = sig
        .iter()
        .enumerate()
        .map(|(i, &o)| (o, psis.get(&(i + 1)).copied().unwrap_or(0)))
        .collect();
    pts.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
    AdmKey {
        sig: pts.iter().map(|p| p.0).collect(),
        psis: pts
            .iter()
            .enumerate()
            .filter(|(_, p)| p.1 > 0)
            .map(|(i, p)| (i + 1, p.1))
            .collect(),
    }
}

impl fmt::Display for AdmKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ps = self.psis.iter().map(|(i, e)| format!("{i}: {e}")).join(", ");
        write!(f, "{} with psis {{{ps}}}", fmt_tuple(&self.sig))
    }
}

/// Normalized key of a generalised stratum: sorted components of sorted
/// signatures and the smallest rendering of the renumbered residue conditions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct XiKey {
    pub components: Vec<Vec<i32>>,
    pub res: Vec<Vec<(usize, usize)>>,
}

/// Relabellings beyond this count fall back to the first one found.
const MAX_RELABELLINGS: usize = 40_320;

impl XiKey {
    pub fn of(data: &StratumData) -> XiKey {
        let comps: Vec<Vec<i32>> = data.sig_list().iter().map(|s| s.sig().to_vec()).collect();
        let res: Vec<Vec<(usize, usize)>> = data
            .res_cond()
            .iter()
            .map(|rc| rc.poles().iter().map(|p| (p.component, p.index)).collect())
            .collect();
        Self::normalize(&comps, &res)
    }

    /// Normalizes raw components and conditions given as (component, index).
    pub fn normalize(comps: &[Vec<i32>], res: &[Vec<(usize, usize)>]) -> XiKey {
        let sorted: Vec<Vec<i32>> = comps.iter().map(|c| c.iter().copied().sorted().collect()).collect();
        let order: Vec<usize> = (0..comps.len())
            .sorted_by(|&a, &b| (sorted[a].len(), &sorted[a]).cmp(&(sorted[b].len(), &sorted[b])))
            .collect();
        let components: Vec<Vec<i32>> = order.iter().map(|&c| sorted[c].clone()).collect();
        // Old indices of each component, sorted by order; runs of equal
        // orders are the interchangeable points.
        let by_order: Vec<Vec<usize>> = comps
            .iter()
            .map(|c| (0..c.len()).sorted_by_key(|&i| c[i]).collect())
            .collect();
        let runs: Vec<Vec<(usize, usize)>> = comps
            .iter()
            .enumerate()
            .map(|(c, sig)| {
                let idx = &by_order[c];
                let mut out = Vec::new();
                let mut start = 0;
                for k in 1..=idx.len() {
                    if k == idx.len() || sig[idx[k]] != sig[idx[start]] {
                        if k - start > 1 && res.iter().flatten().any(|&(cc, i)| cc == c && sig[i] == sig[idx[start]]) {
                            out.push((start, k));
                        }
                        start = k;
                    }
                }
                out
            })
            .collect();
        let blocks: Vec<Vec<usize>> = order
            .iter()
            .copied()
            .chunk_by(|&c| (sorted[c].len(), sorted[c].clone()))
            .into_iter()
            .map(|(_, g)| g.collect())
            .collect();
        let render = |slot_of: &[usize], idx_perm: &[Vec<usize>]| -> Vec<Vec<(usize, usize)>> {
            let mut out: Vec<Vec<(usize, usize)>> = res
                .iter()
                .map(|cond| {
                    cond.iter()
                        .map(|&(c, i)| {
                            let pos = idx_perm[c].iter().position(|&j| j == i).expect("index in component");
                            (slot_of[c], pos)
                        })
                        .sorted()
                        .collect()
                })
                .collect();
            out.sort();
            out
        };
        let mut best: Option<Vec<Vec<(usize, usize)>>> = None;
        let mut count = 0usize;
        let block_perms = blocks
            .iter()
            .map(|b| b.iter().copied().permutations(b.len()).collect::<Vec<_>>())
            .multi_cartesian_product();
        'outer: for bp in block_perms {
            let mut slot_of = vec![0; comps.len()];
            for (slot, &c) in bp.iter().flatten().enumerate() {
                slot_of[c] = slot;
            }
            let run_perms = runs
                .iter()
                .enumerate()
                .flat_map(|(c, rs)| rs.iter().map(move |&r| (c, r)))
                .map(|(c, (s, e))| by_order[c][s..e].iter().copied().permutations(e - s).map(move |p| (c, s, p)).collect::<Vec<_>>())
                .multi_cartesian_product();
            let mut any = false;
            for rp in run_perms {
                any = true;
                let mut idx_perm = by_order.clone();
                for (c, s, p) in rp {
                    idx_perm[c].splice(s..s + p.len(), p);
                }
                let r = render(&slot_of, &idx_perm);
                if best.as_ref().is_none_or(|b| r < *b) {
                    best = Some(r);
                }
                count += 1;
                if count >= MAX_RELABELLINGS {
                    break 'outer;
                }
            }
            if !any {
                let r = render(&slot_of, &by_order);
                if best.as_ref().is_none_or(|b| r < *b) {
                    best = Some(r);
                }
                count += 1;
                if count >= MAX_RELABELLINGS {
                    break;
                }
            }
        }
        XiKey {
            components,
            res: best.unwrap_or_default(),
        }
    }

    /// The stratum column of the printed table.
    pub fn stratum_label(&self) -> String {
        if self.components.len() == 1 {
            fmt_tuple(&self.components[0])
        } else {
            format!("[{}]", self.components.iter().map(|c| fmt_tuple(c)).join(", "))
        }
    }

    /// The residue column of the printed table.
    pub fn res_label(&self) -> String {
        let cond = |c: &Vec<(usize, usize)>| c.iter().map(|(a, b)| format!("({a}, {b})")).join(", ");
        match self.res.len() {
            0 => "()".to_string(),
            1 => format!("[{}]", cond(&self.res[0])),
            _ => format!("[{}]", self.res.iter().map(|c| format!("[{}]", cond(c))).join(", ")),
        }
    }
}

impl fmt::Display for XiKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} with residue conditions {}", self.stratum_label(), self.res_label())
    }
}

fn fmt_rational(q: &BigRational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

fn parse_rational(s: &str) -> Result<BigRational> {
    let q = BigRational::from_str(s.trim()).map_err(|e| StrataError::FileCorrupt(format!("bad rational {s:?}: {e}")))?;
    Ok(q)
}

#[derive(Serialize, Deserialize)]
struct AdmRecord {
    sig: Vec<i32>,
    psis: Vec<(usize, u32)>,
    value: String,
}

#[derive(Serialize, Deserialize)]
struct XiRecord {
    components: Vec<Vec<i32>>,
    res: Vec<Vec<(usize, usize)>>,
    value: String,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AnyRecord {
    Adm(AdmRecord),
    Xi(XiRecord),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct Tables {
    adm: BTreeMap<AdmKey, BigRational>,
    xi: BTreeMap<XiKey, BigRational>,
}

impl Tables {
    fn merge_text(&mut self, text: &str, origin: &str) -> Result<usize> {
        let mut n = 0;
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: AnyRecord = serde_json::from_str(line)
                .map_err(|e| StrataError::FileCorrupt(format!("{origin}:{}: {e}", lineno + 1)))?;
            match rec {
                AnyRecord::Adm(r) => {
                    let psis = r.psis.iter().copied().collect();
                    self.adm.insert(adm_key(&r.sig, &psis), parse_rational(&r.value)?);
                }
                AnyRecord::Xi(r) => {
                    self.xi.insert(XiKey::normalize(&r.components, &r.res), parse_rational(&r.value)?);
                }
            }
            n += 1;
        }
        Ok(n)
    }

    fn adm_text(&self) -> String {
        self.adm
            .iter()
            .map(|(k, v)| {
                let r = AdmRecord { sig: k.sig.clone(), psis: k.psis.clone(), value: fmt_rational(v) };
                serde_json::to_string(&r).expect("records serialize") + "\n"
            })
            .collect()
    }

    fn xi_text(&self) -> String {
        self.xi
            .iter()
            .map(|(k, v)| {
                let r = XiRecord { components: k.components.clone(), res: k.res.clone(), value: fmt_rational(v) };
                serde_json::to_string(&r).expect("records serialize") + "\n"
            })
            .collect()
    }
}

fn atomic_write(path: &Path, text: &str) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        path.file_name().and_then(|s| s.to_str()).unwrap_or("cache"),
        std::process::id()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(text.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Cache of ψ-integrals and top ξ-powers, optionally persisted to a directory.
#[derive(Debug)]
pub struct EvalCache {
    tables: Mutex<Tables>,
    dir: Option<PathBuf>,
}

impl EvalCache {
    /// An empty in-memory cache.
    pub fn empty() -> Self {
        EvalCache { tables: Mutex::new(Tables::default()), dir: None }
    }

    /// An in-memory cache holding the built-in seed values.
    pub fn seeded() -> Self {
        let mut t = Tables::default();
        t.merge_text(SEED_ADM, ADM_FILE).expect("seed ψ-integrals parse");
        t.merge_text(SEED_XI, XI_FILE).expect("seed ξ-powers parse");
        EvalCache { tables: Mutex::new(t), dir: None }
    }

    /// The seeded ψ-integrals with an empty ξ-power table.
    pub fn seeded_integrals_only() -> Self {
        let mut t = Tables::default();
        t.merge_text(SEED_ADM, ADM_FILE).expect("seed ψ-integrals parse");
        EvalCache { tables: Mutex::new(t), dir: None }
    }

    /// The seed values merged with the cache files in `dir`; new values are
    /// written through to `dir`.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        let c = Self::seeded();
        {
            let mut t = c.tables.lock().expect("cache poisoned");
            for name in [ADM_FILE, XI_FILE] {
                let p = dir.join(name);
                if p.exists() {
                    t.merge_text(&fs::read_to_string(&p)?, &p.display().to_string())?;
                }
            }
        }
        Ok(EvalCache { dir: Some(dir), ..c })
    }

    /// Seeds plus the directory named by `STRATA_CACHE_DIR`, if set.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(CACHE_DIR_ENV) {
            Some(d) => Self::open(PathBuf::from(d)),
            None => Ok(Self::seeded()),
        }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn persist(&self, t: &Tables) -> Result<()> {
        if let Some(d) = &self.dir {
            atomic_write(&d.join(ADM_FILE), &t.adm_text())?;
            atomic_write(&d.join(XI_FILE), &t.xi_text())?;
        }
        Ok(())
    }

    pub fn get_adm(&self, k: &AdmKey) -> Option<BigRational> {
        self.tables.lock().expect("cache poisoned").adm.get(k).cloned()
    }

    pub fn get_xi(&self, k: &XiKey) -> Option<BigRational> {
        self.tables.lock().expect("cache poisoned").xi.get(k).cloned()
    }

    pub fn insert_adm(&self, k: AdmKey, v: BigRational) -> Result<()> {
        let mut t = self.tables.lock().expect("cache poisoned");
        if t.adm.get(&k) != Some(&v) {
            t.adm.insert(k, v);
            self.persist(&t)?;
        }
        Ok(())
    }

    pub fn insert_xi(&self, k: XiKey, v: BigRational) -> Result<()> {
        let mut t = self.tables.lock().expect("cache poisoned");
        if t.xi.get(&k) != Some(&v) {
            t.xi.insert(k, v);
            self.persist(&t)?;
        }
        Ok(())
    }

    /// Merges a file of records of either kind and persists; returns the
    /// number of records read.
    pub fn import(&self, path: &Path) -> Result<usize> {
        let text = fs::read_to_string(path)?;
        let mut t = self.tables.lock().expect("cache poisoned");
        let mut merged = t.clone();
        let n = merged.merge_text(&text, &path.display().to_string())?;
        *t = merged;
        self.persist(&t)?;
        Ok(n)
    }

    /// All records of both kinds as JSON lines.
    pub fn jsonl(&self) -> String {
        let t = self.tables.lock().expect("cache poisoned");
        t.adm_text() + &t.xi_text()
    }

    /// Writes all records of both kinds to one file.
    pub fn export(&self, path: &Path) -> Result<()> {
        atomic_write(path, &self.jsonl())
    }

    pub fn len_adm(&self) -> usize {
        self.tables.lock().expect("cache poisoned").adm.len()
    }

    pub fn len_xi(&self) -> usize {
        self.tables.lock().expect("cache poisoned").xi.len()
    }

    /// (components, residue conditions, value) of every cached top ξ-power.
    pub fn list_top_xis(&self) -> Vec<(Vec<Vec<i32>>, Vec<Vec<(usize, usize)>>, BigRational)> {
        let t = self.tables.lock().expect("cache poisoned");
        t.xi.iter().map(|(k, v)| (k.components.clone(), k.res.clone(), v.clone())).collect()
    }

    /// The top ξ-power table.
    pub fn print_top_xis(&self) -> String {
        let t = self.tables.lock().expect("cache poisoned");
        let mut s = format!("{:<18} | {:<28} | {}\n{}\n", "Stratum", "Residue Conditions", "xi^dim", "-".repeat(64));
        for (k, v) in &t.xi {
            s.push_str(&format!("{:<18} | {:<28} | {}\n", k.stratum_label(), k.res_label(), v));
        }
        s
    }

    /// The ψ-integral table.
    pub fn print_adm_evals(&self) -> String {
        let t = self.tables.lock().expect("cache poisoned");
        let mut s = format!("{:<18} | {:<28} | {}\n{}\n", "Stratum", "Psis", "eval", "-".repeat(64));
        for (k, v) in &t.adm {
            let ps = format!("{{{}}}", k.psis.iter().map(|(i, e)| format!("{i}: {e}")).join(", "));
            s.push_str(&format!("{:<18} | {:<28} | {}\n", fmt_tuple(&k.sig), ps, v));
        }
        s
    }
}

/// Source of ψ-integrals on connected strata without residue conditions.
pub trait EvalOracle: Send + Sync {
    fn adm_evaluate(&self, key: &AdmKey) -> Option<BigRational>;
}

/// Closed formulas: genus 0 strata are M_{0,n}, and the genus-1 stratum with
/// all orders zero is M_{1,n}.
#[derive(Clone, Copy, Debug, Default)]
pub struct AnalyticOracle;

fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |a, k| a * BigInt::from(k))
}

/// ∫ ψ_1^{a_1} ⋯ ψ_n^{a_n} over M̄_{0,n}.
pub fn genus0_psi_integral(a: &[u32]) -> BigRational {
    let n = a.len() as u64;
    let total: u64 = a.iter().map(|&e| u64::from(e)).sum();
    if n < 3 || total != n - 3 {
        return BigRational::zero();
    }
    let den = a.iter().fold(BigInt::one(), |acc, &e| acc * factorial(u64::from(e)));
    BigRational::new(factorial(n - 3), den)
}

/// ∫ ψ_1^{a_1} ⋯ ψ_n^{a_n} over M̄_{1,n} via the string and dilaton equations.
pub fn genus1_psi_integral(a: &[u32]) -> BigRational {
    let n = a.len();
    let total: usize = a.iter().map(|&e| e as usize).sum();
    if n == 0 || total != n {
        return BigRational::zero();
    }
    if n == 1 {
        return BigRational::new(BigInt::one(), BigInt::from(24));
    }
    if let Some(z) = a.iter().position(|&e| e == 0) {
        let rest: Vec<u32> = a.iter().enumerate().filter(|&(i, _)| i != z).map(|(_, &e)| e).collect();
        let mut acc = BigRational::zero();
        for j in 0..rest.len() {
            if rest[j] > 0 {
                let mut b = rest.clone();
                b[j] -= 1;
                acc += genus1_psi_integral(&b);
            }
        }
        return acc;
    }
    // All exponents are 1: dilaton with 2g - 2 + (n - 1) = n - 1.
    rat(n as i64 - 1) * genus1_psi_integral(&a[1..])
}

impl EvalOracle for AnalyticOracle {
    fn adm_evaluate(&self, key: &AdmKey) -> Option<BigRational> {
        let exps: Vec<u32> = (1..=key.sig.len())
            .map(|i| key.psis.iter().find(|p| p.0 == i).map_or(0, |p| p.1))
            .collect();
        let total: i32 = key.sig.iter().sum();
        if total == -2 {
            Some(genus0_psi_integral(&exps))
        } else if total == 0 && key.sig.iter().all(|&o| o == 0) {
            Some(genus1_psi_integral(&exps))
        } else {
            None
        }
    }
}

/// A cache together with a fallback oracle.
#[derive(Clone)]
pub struct EvalContext {
    pub cache: Arc<EvalCache>,
    pub oracle: Arc<dyn EvalOracle>,
}

impl fmt::Debug for EvalContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EvalContext").field("cache", &self.cache).finish_non_exhaustive()
    }
}

impl EvalContext {
    pub fn new(cache: EvalCache) -> Self {
        EvalContext { cache: Arc::new(cache), oracle: Arc::new(AnalyticOracle) }
    }

    /// Process-wide context: seeds, `STRATA_CACHE_DIR` and the analytic oracle.
    pub fn global() -> &'static EvalContext {
        static CTX: OnceLock<EvalContext> = OnceLock::new();
        CTX.get_or_init(|| {
            let cache = EvalCache::from_env().unwrap_or_else(|_| EvalCache::seeded());
            EvalContext::new(cache)
        })
    }

    /// ψ-integral from the cache, else from the oracle, written through.
    pub fn adm_evaluate(&self, key: &AdmKey) -> Result<BigRational> {
        if let Some(v) = self.cache.get_adm(key) {
            return Ok(v);
        }
        let v = self
            .oracle
            .adm_evaluate(key)
            .ok_or_else(|| StrataError::OracleMiss(key.to_string()))?;
        self.cache.insert_adm(key.clone(), v.clone())?;
        Ok(v)
    }
}

impl GeneralisedStratum {
    /// ∏ prongs / (∏ ℓ of the profile BICs · |Aut|) of the graph of `ep`.
    pub fn stack_factor(&self, ep: &EnhancedProfile) -> Result<BigRational> {
        let g = self.lookup_graph(ep)?;
        let prongs = g.prong_list().iter().fold(BigInt::one(), |a, &p| a * BigInt::from(p));
        let ells = ep.profile.iter().fold(BigInt::one(), |a, &b| a * BigInt::from(self.bics()[b].ell()));
        Ok(BigRational::new(prongs, ells * BigInt::from(g.num_automorphisms())))
    }

    /// Degree of the top-degree part of `t`, with the global context.
    pub fn evaluate(&self, t: &TautClass) -> Result<BigRational> {
        self.evaluate_with(t, EvalContext::global())
    }

    /// Integral of the top-degree part of `t`.
    pub fn evaluate_with(&self, t: &TautClass, ctx: &EvalContext) -> Result<BigRational> {
        let mut acc = BigRational::zero();
        for (c, g) in t.terms() {
            let v = self.evaluate_generator(g, ctx)?;
            if !v.is_zero() {
                acc += c * v;
            }
        }
        Ok(acc)
    }

    fn evaluate_generator(&self, g: &AdditiveGenerator, ctx: &EvalContext) -> Result<BigRational> {
        if g.degree() as i64 != self.dim() {
            return Ok(BigRational::zero());
        }
        let graph = self.lookup_graph(&g.ep)?;
        let mut val = self.stack_factor(&g.ep)?;
        for i in 0..graph.num_levels() {
            let level = graph.level(i)?;
            let mut psis = BTreeMap::new();
            for (leg, &e) in &g.psi {
                if let Some(p) = level.leg_dict.get(leg) {
                    psis.insert(*p, e);
                }
            }
            let v = level_integral(level.stratum(), &psis, ctx)?;
            if v.is_zero() {
                return Ok(v);
            }
            val *= v;
        }
        Ok(val)
    }

    /// ∫ ξ^dim over the stratum, through the cache.
    pub fn top_xi(&self, ctx: &EvalContext) -> Result<BigRational> {
        let key = XiKey::of(self.data());
        if let Some(v) = ctx.cache.get_xi(&key) {
            return Ok(v);
        }
        let dim = self.dim();
        let g = self.genera().iter().sum::<u32>() as i64;
        let v = if dim < 0 || self.is_connected() && self.res_cond().is_empty() && self.sig_list()[0].is_holomorphic() && dim >= 2 * g {
            BigRational::zero()
        } else {
            let t = self.xi_at_level_pow(0, &EnhancedProfile::smooth(), dim as u32)?;
            self.evaluate_with(&t, ctx)?
        };
        ctx.cache.insert_xi(key, v.clone())?;
        Ok(v)
    }

    /// ∫ (ξ^[l])^{dim} over level `l` of the graph of `ep`.
    pub fn top_xi_at_level(&self, ep: &EnhancedProfile, l: usize) -> Result<BigRational> {
        self.top_xi_at_level_with(ep, l, EvalContext::global())
    }

    pub fn top_xi_at_level_with(&self, ep: &EnhancedProfile, l: usize, ctx: &EvalContext) -> Result<BigRational> {
        let g = self.lookup_graph(ep)?;
        g.level(l)?.stratum().top_xi(ctx)
    }
}

/// ∫ of a ψ-monomial (keyed by point) over a stratum.
pub fn level_integral(s: &GeneralisedStratum, psis: &BTreeMap<PointRef, u32>, ctx: &EvalContext) -> Result<BigRational> {
    let deg: i64 = psis.values().map(|&e| e as i64).sum();
    let dim = s.dim();
    if deg != dim {
        return Ok(BigRational::zero());
    }
    if dim == 0 {
        return Ok(BigRational::one());
    }
    if s.res_cond().is_empty() {
        if !s.is_connected() {
            return Ok(BigRational::zero());
        }
        let sig = s.sig_list()[0].sig();
        let idx = psis.iter().map(|(p, &e)| (p.index + 1, e)).collect();
        return ctx.adm_evaluate(&adm_key(sig, &idx));
    }
    let ncomp = s.sig_list().len();
    let mut uf = UnionFind::new(ncomp);
    for rc in s.res_cond() {
        let comps: BTreeSet<usize> = rc.poles().iter().map(|p| p.component).collect();
        for (a, b) in comps.iter().tuple_windows() {
            uf.union(*a, *b);
        }
    }
    if uf.count() > 1 {
        return Ok(BigRational::zero());
    }
    let mut conds: Vec<ResidueCondition> = s.res_cond().to_vec();
    let c = conds.remove(0);
    let relaxed = intern(StratumData::new(s.sig_list().to_vec(), conds)?);
    if relaxed.is_redundant_condition(&c) {
        return level_integral(&relaxed, psis, ctx);
    }
    let legs = relaxed.smooth_lg().dmp_inv();
    let mono: PsiMonomial = psis.iter().map(|(p, &e)| (legs[p], e)).collect();
    let psi_class = relaxed.additive_generator(&EnhancedProfile::smooth(), mono)?;
    let cut = relaxed.res_stratum_class(&c)?;
    let prod = relaxed.mul(&psi_class, &cut)?;
    relaxed.evaluate_with(&prod, ctx)
}
