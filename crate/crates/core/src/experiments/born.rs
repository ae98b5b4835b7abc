use rand::Rng;

use crate::error::{Error, Result};
use crate::experiments::mixture::Estimate;
use crate::experiments::shot_seed;
use crate::linalg::{born_expectation, random_density, random_hermitian, DensityOperator, HermitianOperator};
use crate::model::{BasisCatalog, HiddenState};
use crate::stats::{run_shots, RngKey};

const BORN_DOMAIN: u64 = 0x424f_524e;
const LAW_DOMAIN: u64 = 0x4c41_5753;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BornCheck {
    /// `Tr(rho A)` for the requested operator.
    pub expected: f64,
    pub empirical: Estimate,
}

/// Samples `shots` hidden states from `rho` and averages the value the
/// coloring assigns to the catalog observable resolved for `target`.
pub fn born_convergence(
    catalog: &mut BasisCatalog,
    rho: &DensityOperator,
    target: &HermitianOperator,
    shots: u64,
    seed: u64,
) -> Result<BornCheck> {
    if shots < 2 {
        return Err(Error::Domain("need at least 2 shots".into()));
    }
    let expected = born_expectation(rho, target)?;
    let handle = catalog.resolve_target(target)?;
    let catalog = &*catalog;
    let tally = run_shots(shots, |shot, t| {
        let mut state = HiddenState::sample(catalog, rho, shot_seed(seed, BORN_DOMAIN, shot))?;
        t.record("value", state.value_of(catalog, &handle)?);
        Ok(())
    })?;
    let (mean, se) = tally.mean_and_se("value")?;
    Ok(BornCheck { expected, empirical: Estimate { mean, se } })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ColoringLawReport {
    pub checked: u64,
    /// Values outside the handle's spectrum.
    pub spectrum_violations: u64,
    /// Cases with `value_of(g∘h) != g(value_of(h))`.
    pub functional_violations: u64,
}

/// Resolves `trials` random observables and checks, on a hidden state drawn
/// from a random state, that each value lies in the spectrum and that a
/// random integer polynomial of degree at most 3 commutes with the coloring.
pub fn coloring_law_check(catalog: &mut BasisCatalog, trials: u64, seed: u64) -> Result<ColoringLawReport> {
    let mut report = ColoringLawReport::default();
    let dim = catalog.dim();
    for trial in 0..trials {
        let mut rng = RngKey::new(seed, [LAW_DOMAIN, trial, 0, 0]).rng();
        let handle = catalog.resolve_target(&random_hermitian(&mut rng, dim))?;
        let rho = random_density(&mut rng, dim);
        let coeffs: [i32; 4] = std::array::from_fn(|_| rng.random_range(-3..=3));
        let g = |x: f64| coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + f64::from(c));
        let mut state = HiddenState::sample(catalog, &rho, shot_seed(seed, LAW_DOMAIN, trial))?;
        let v = state.value_of(catalog, &handle)?;
        if !handle.spectrum().contains(&v) {
            report.spectrum_violations += 1;
        }
        if state.value_of(catalog, &handle.map(g))? != g(v) {
            report.functional_violations += 1;
        }
        report.checked += 1;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::new_catalog;

    #[test]
    fn born_mean_matches_trace() {
        let mut rng = RngKey::new(1, [0; 4]).rng();
        let mut cat = new_catalog(3, 1e-3, 1).unwrap();
        let rho = random_density(&mut rng, 3);
        let a = random_hermitian(&mut rng, 3);
        let r = born_convergence(&mut cat, &rho, &a, 20_000, 2).unwrap();
        assert!((r.empirical.mean - r.expected).abs() < 4.0 * r.empirical.se);
    }

    #[test]
    fn coloring_laws_hold() {
        let mut cat = new_catalog(3, 1e-3, 1).unwrap();
        let r = coloring_law_check(&mut cat, 30, 3).unwrap();
        assert_eq!(r.checked, 30);
        assert_eq!(r.spectrum_violations + r.functional_violations, 0);
        assert!(cat.is_pairwise_incompatible().unwrap());
    }
}
