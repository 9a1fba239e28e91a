//! Euler characteristics of strata and the stratum report.

use std::fmt::Write as _;

use num::{BigInt, BigRational, One, Zero};

use crate::degeneration_graph::EnhancedProfile;
use crate::error::Result;
use crate::evaluation_cache::{EvalContext, XiKey};
use crate::strata_core::GeneralisedStratum;

/// One summand of the Euler characteristic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EulerTerm {
    pub ep: EnhancedProfile,
    /// Product of the ℓ of the BICs in the profile.
    pub ell_product: BigRational,
    /// Dimension of the top level plus one.
    pub n_top: i64,
    /// Stack factor of the boundary graph.
    pub stack_factor: BigRational,
    /// ∫ ξ^dim per level, cut short after the first zero.
    pub level_values: Vec<BigRational>,
}

impl EulerTerm {
    pub fn value(&self) -> BigRational {
        if self.level_values.iter().any(Zero::is_zero) {
            return BigRational::zero();
        }
        let prod = self.level_values.iter().fold(BigRational::one(), |a, v| a * v);
        &self.ell_product * BigRational::from_integer(self.n_top.into()) * &self.stack_factor * prod
    }
}

impl GeneralisedStratum {
    /// The summand of `ep`, written to `trace` level by level if given.
    pub fn euler_term(&self, ep: &EnhancedProfile, ctx: &EvalContext, mut trace: Option<&mut String>) -> Result<EulerTerm> {
        let g = self.lookup_graph(ep)?;
        let ell_product = ep
            .profile
            .iter()
            .fold(BigInt::one(), |a, &b| a * BigInt::from(self.bics()[b].ell()));
        let n_top = g.level(0)?.dim() + 1;
        let mut level_values = Vec::new();
        for l in 0..g.num_levels() {
            let level = g.level(l)?;
            let cached = ctx.cache.get_xi(&XiKey::of(level.data())).is_some();
            let v = level.stratum().top_xi(ctx)?;
            if let Some(t) = trace.as_deref_mut() {
                let src = if cached { "cache" } else { "computed" };
                let _ = write!(t, " level {l} ({src}) {v}");
            }
            let zero = v.is_zero();
            level_values.push(v);
            if zero {
                if let Some(t) = trace.as_deref_mut() {
                    t.push_str(" Product 0.");
                }
                break;
            }
        }
        let stack_factor = if level_values.iter().any(Zero::is_zero) {
            BigRational::zero()
        } else {
            self.stack_factor(ep)?
        };
        Ok(EulerTerm { ep: ep.clone(), ell_product: BigRational::from_integer(ell_product), n_top, stack_factor, level_values })
    }

    /// All summands, ordered by profile length and then by profile.
    pub fn euler_terms(&self, ctx: &EvalContext) -> Result<Vec<EulerTerm>> {
        let mut out = Vec::new();
        for l in 0..self.lookup_list().len() {
            for ep in self.enhanced_profiles_of_length(l) {
                out.push(self.euler_term(&ep, ctx, None)?);
            }
        }
        Ok(out)
    }

    pub fn euler_characteristic(&self) -> Result<BigRational> {
        self.euler_characteristic_with(EvalContext::global())
    }

    pub fn euler_characteristic_with(&self, ctx: &EvalContext) -> Result<BigRational> {
        let sum = self.euler_terms(ctx)?.iter().fold(BigRational::zero(), |a, t| a + t.value());
        Ok(self.euler_sign() * sum)
    }

    /// Euler characteristic together with a per-profile trace.
    pub fn euler_characteristic_verbose(&self, ctx: &EvalContext) -> Result<(BigRational, String)> {
        let mut trace = String::new();
        let mut sum = BigRational::zero();
        for l in 0..=self.lookup_list().len() {
            let _ = writeln!(trace, "Generating enhanced profiles of length {l}...");
            let eps = self.enhanced_profiles_of_length(l);
            let _ = writeln!(trace, "Going through {} profiles of length {l}...", eps.len());
            for (i, ep) in eps.iter().enumerate() {
                let _ = write!(trace, "{} / {}, {}: Calculating xi at", i + 1, eps.len(), ep);
                let term = self.euler_term(ep, ctx, Some(&mut trace))?;
                trace.push_str(" Done.\n");
                sum += term.value();
            }
        }
        Ok((self.euler_sign() * sum, trace))
    }

    fn euler_sign(&self) -> BigRational {
        if self.dim() % 2 == 0 {
            BigRational::one()
        } else {
            -BigRational::one()
        }
    }

    /// Genus, dimension and the number of boundary graphs per codimension.
    pub fn info(&self) -> String {
        let mut s = format!("{}\n\n", self.data().header());
        let genera: Vec<String> = self.genera().iter().map(|g| g.to_string()).collect();
        let _ = writeln!(s, "Genus: [{}]", genera.join(", "));
        let _ = writeln!(s, "Dimension: {}", self.dim());
        s.push_str("Boundary Graphs (without horizontal edges):\n");
        let counts = self.graph_counts();
        for (c, n) in counts.iter().enumerate() {
            let _ = writeln!(s, "Codimension {c}: {n} graph{}", if *n == 1 { "" } else { "s" });
        }
        let _ = writeln!(s, "Total graphs: {}", counts.iter().sum::<usize>());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation_cache::EvalCache;
    use crate::taut_ring::rat;

    fn frac(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    #[test]
    fn euler_of_h2() {
        let x = GeneralisedStratum::connected(&[2]).unwrap();
        let ctx = EvalContext::new(EvalCache::seeded());
        assert_eq!(x.euler_characteristic_with(&ctx).unwrap(), frac(-1, 40));
    }

    #[test]
    fn euler_of_h2_without_cached_xi_powers() {
        let x = GeneralisedStratum::connected(&[2]).unwrap();
        let ctx = EvalContext::new(EvalCache::seeded_integrals_only());
        assert_eq!(x.euler_characteristic_with(&ctx).unwrap(), frac(-1, 40));
    }

    #[test]
    fn smooth_term_uses_full_dimension() {
        let x = GeneralisedStratum::connected(&[2]).unwrap();
        let ctx = EvalContext::new(EvalCache::seeded());
        let t = x.euler_term(&EnhancedProfile::smooth(), &ctx, None).unwrap();
        assert_eq!(t.n_top, x.dim() + 1);
        assert_eq!(t.ell_product, rat(1));
        assert_eq!(t.value(), frac(-4, 640));
    }

    #[test]
    fn trace_lists_every_profile() {
        let x = GeneralisedStratum::connected(&[2]).unwrap();
        let ctx = EvalContext::new(EvalCache::seeded());
        let (v, trace) = x.euler_characteristic_verbose(&ctx).unwrap();
        assert_eq!(v, frac(-1, 40));
        let total: usize = x.graph_counts().iter().sum();
        assert_eq!(trace.matches("Done.").count(), total);
        assert!(trace.contains("((), 0): Calculating xi at level 0 (cache) -1/640 Done."));
        assert!(trace.contains("Product 0. Done."));
    }

    #[test]
    fn info_of_h4() {
        let x = GeneralisedStratum::connected(&[4]).unwrap();
        assert_eq!(
            x.info(),
            "Stratum: (4,)\nwith residue conditions: []\n\nGenus: [3]\nDimension: 5\n\
             Boundary Graphs (without horizontal edges):\nCodimension 0: 1 graph\n\
             Codimension 1: 8 graphs\nCodimension 2: 19 graphs\nCodimension 3: 16 graphs\n\
             Codimension 4: 4 graphs\nTotal graphs: 48\n"
        );
    }

    #[test]
    fn zero_dimensional_stratum_is_a_single_term() {
        let x = GeneralisedStratum::connected(&[-2, 0, 0]).unwrap();
        assert_eq!(x.dim(), 0);
        let ctx = EvalContext::new(EvalCache::empty());
        assert_eq!(x.euler_characteristic_with(&ctx).unwrap(), rat(1));
    }
}
