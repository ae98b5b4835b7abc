use crate::error::{Error, Result};
use crate::experiments::shot_seed;
use crate::linalg::{DensityOperator, HermitianOperator};
use crate::model::{BasisCatalog, HiddenState, COMMUTATION_TOL};
use crate::stats::{run_shots, RngKey, Tally};

const MIXTURE_DOMAIN: u64 = 0x4d49_5854;
const PROJECTOR_TOL: f64 = 1e-10;

/// A Monte-Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    fn from(tally: &Tally, variable: &str) -> Result<Self> {
        let (mean, se) = tally.mean_and_se(variable)?;
        Ok(Self { mean, se })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixtureResult {
    /// `(1/2 + Tr(P1 P2)/2)^2`, the joint probability under the measure of
    /// `rho = (P1 + P2)/2`.
    pub analytic_lhs: f64,
    /// `Tr(P1 P2)`, the joint probability under the even mixture of the
    /// measures of `P1` and `P2`.
    pub analytic_rhs: f64,
    pub empirical_lhs: Estimate,
    pub empirical_rhs: Estimate,
    /// Single-projector marginals: `[P1, P2]` under `rho` and under the
    /// mixture of measures.
    pub marginals_rho: [Estimate; 2],
    pub marginals_mix: [Estimate; 2],
    pub shots: u64,
}

fn check_rank_one_projector(p: &HermitianOperator) -> Result<()> {
    let idempotent = p.square().matrix().max_abs_diff(p.matrix()) <= PROJECTOR_TOL;
    if !idempotent || (p.trace() - 1.0).abs() > PROJECTOR_TOL {
        return Err(Error::Domain("expected a rank-1 projector".into()));
    }
    Ok(())
}

/// Compares the hidden-state measure of `rho = (P1 + P2)/2` with the even
/// mixture of the measures of `P1` and `P2`.
///
/// Both ensembles give the same statistics for every single measurement, but
/// the probability that a coloring assigns 1 to both projectors differs.
/// The two values are read from one coloring without collapse: this compares
/// measures on colorings, not outcomes of a physical joint measurement.
pub fn mixture_nonconvexity_demo(
    catalog: &mut BasisCatalog,
    p1: &HermitianOperator,
    p2: &HermitianOperator,
    shots: u64,
    seed: u64,
) -> Result<MixtureResult> {
    check_rank_one_projector(p1)?;
    check_rank_one_projector(p2)?;
    if p1.commutator_norm(p2)? <= COMMUTATION_TOL {
        return Err(Error::Domain("the projectors commute, so the two measures agree".into()));
    }
    if shots < 2 {
        return Err(Error::Domain("need at least 2 shots".into()));
    }
    let overlap = p1.matrix().mul(p2.matrix()).trace().re;
    let rho1 = DensityOperator::new(p1.matrix().clone())?;
    let rho2 = DensityOperator::new(p2.matrix().clone())?;
    let rho = rho1.mix(&rho2, 0.5)?;
    let h1 = catalog.resolve_target(p1)?;
    let h2 = catalog.resolve_target(p2)?;
    let catalog = &*catalog;
    let tally = run_shots(shots, |shot, t| {
        let mut joint = |state: &mut HiddenState, tag: &str| -> Result<()> {
            let v1 = state.value_of(catalog, &h1)?;
            let v2 = state.value_of(catalog, &h2)?;
            t.record(&format!("joint_{tag}"), v1 * v2);
            t.record(&format!("p1_{tag}"), v1);
            t.record(&format!("p2_{tag}"), v2);
            Ok(())
        };
        let mut state = HiddenState::sample(catalog, &rho, shot_seed(seed, MIXTURE_DOMAIN, 2 * shot))?;
        joint(&mut state, "rho")?;
        let pick = RngKey::new(seed, [MIXTURE_DOMAIN, shot, 1, 0]).uniform() < 0.5;
        let component = if pick { &rho1 } else { &rho2 };
        let mut state = HiddenState::sample(catalog, component, shot_seed(seed, MIXTURE_DOMAIN, 2 * shot + 1))?;
        joint(&mut state, "mix")
    })?;
    Ok(MixtureResult {
        analytic_lhs: (0.5 + 0.5 * overlap).powi(2),
        analytic_rhs: overlap,
        empirical_lhs: Estimate::from(&tally, "joint_rho")?,
        empirical_rhs: Estimate::from(&tally, "joint_mix")?,
        marginals_rho: [Estimate::from(&tally, "p1_rho")?, Estimate::from(&tally, "p2_rho")?],
        marginals_mix: [Estimate::from(&tally, "p1_mix")?, Estimate::from(&tally, "p2_mix")?],
        shots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;
    use crate::model::new_catalog;
    use crate::stats::z_score;

    fn ket0() -> HermitianOperator {
        HermitianOperator::diagonal(&[1.0, 0.0]).unwrap()
    }

    fn plus() -> HermitianOperator {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        HermitianOperator::projector_onto(&[C64::new(h, 0.0), C64::new(h, 0.0)]).unwrap()
    }

    #[test]
    fn analytic_values() {
        let mut cat = new_catalog(2, 1e-3, 0).unwrap();
        let r = mixture_nonconvexity_demo(&mut cat, &ket0(), &plus(), 100, 0).unwrap();
        assert!((r.analytic_lhs - 0.5625).abs() < 1e-12);
        assert!((r.analytic_rhs - 0.5).abs() < 1e-12);
    }

    #[test]
    fn empirical_values_track_analytic() {
        let mut cat = new_catalog(2, 1e-3, 0).unwrap();
        let r = mixture_nonconvexity_demo(&mut cat, &ket0(), &plus(), 40_000, 9).unwrap();
        assert!((r.empirical_lhs.mean - r.analytic_lhs).abs() < 4.0 * r.empirical_lhs.se);
        assert!((r.empirical_rhs.mean - r.analytic_rhs).abs() < 4.0 * r.empirical_rhs.se);
        for i in 0..2 {
            let (a, b) = (r.marginals_rho[i], r.marginals_mix[i]);
            assert!(z_score((a.mean, a.se), (b.mean, b.se)).abs() < 4.0);
        }
    }

    #[test]
    fn commuting_projectors_are_rejected() {
        let mut cat = new_catalog(2, 1e-3, 0).unwrap();
        let other = HermitianOperator::diagonal(&[0.0, 1.0]).unwrap();
        assert!(matches!(mixture_nonconvexity_demo(&mut cat, &ket0(), &other, 100, 0), Err(Error::Domain(_))));
        let not_projector = HermitianOperator::diagonal(&[1.0, 1.0]).unwrap();
        assert!(mixture_nonconvexity_demo(&mut cat, &not_projector, &plus(), 100, 0).is_err());
    }
}
