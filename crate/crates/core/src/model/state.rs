use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{same_dim, DensityOperator, HermitianOperator, C64};
use crate::model::catalog::{BasisCatalog, ContextHandle, ObservableHandle};
use crate::stats::{draw_categorical, RngKey};

const OUTCOME_DOMAIN: u64 = 0x434f_4c52;
/// Born weights below this make an observed outcome numerically impossible.
pub const IMPOSSIBLE_WEIGHT: f64 = 1e-15;

/// What happens to the hidden state after a measurement.
#[derive(Clone, Debug, PartialEq)]
pub enum StateUpdate {
    /// Lüders projection of the quantum state onto the observed eigenspace,
    /// followed by a fresh coloring drawn from the projected state.
    Collapse,
    /// Nothing changes; the coloring stays in force.
    Keep,
    /// A fresh coloring is drawn from the unchanged quantum state.
    Refresh,
    /// A fresh coloring is drawn from the given state.
    Resample(DensityOperator),
}

/// A coloring of the catalog's observables, realized lazily.
///
/// The outcome for basis `k` is drawn the first time it is needed, with
/// probabilities `Tr(rho P_{e_{k,i}})`, from a random stream keyed on
/// `(seed, epoch, k)`. Because basis outcomes are independent under the
/// product measure, drawing them on demand is distributionally the same as
/// drawing the whole coloring up front, and the keyed stream makes the result
/// independent of query order.
#[derive(Clone, Debug)]
pub struct HiddenState {
    rho: DensityOperator,
    outcomes: BTreeMap<usize, usize>,
    seed: u64,
    epoch: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementRecord {
    pub handle: ObservableHandle,
    pub value: f64,
    pub epoch_before: u64,
    pub epoch_after: u64,
}

/// Draws a hidden state from the product Born measure of `rho`.
pub fn sample_hidden_state(catalog: &BasisCatalog, rho: &DensityOperator, seed: u64) -> Result<HiddenState> {
    HiddenState::sample(catalog, rho, seed)
}

impl HiddenState {
    pub fn sample(catalog: &BasisCatalog, rho: &DensityOperator, seed: u64) -> Result<Self> {
        same_dim(catalog.dim(), rho.dim())?;
        Ok(Self { rho: rho.clone(), outcomes: BTreeMap::new(), seed, epoch: 0 })
    }

    pub fn rho(&self) -> &DensityOperator {
        &self.rho
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    /// Outcomes materialized so far in the current epoch.
    pub fn materialized(&self) -> &BTreeMap<usize, usize> {
        &self.outcomes
    }

    /// The outcome index `f(k)` for catalog basis `k` in the current epoch.
    pub fn outcome(&mut self, catalog: &BasisCatalog, k: usize) -> Result<usize> {
        if let Some(&i) = self.outcomes.get(&k) {
            return Ok(i);
        }
        let basis = catalog.basis(k).ok_or_else(|| Error::Domain(format!("basis {k} is not in the catalog")))?;
        let weights: Vec<f64> = (0..basis.dim()).map(|i| self.rho.weight_of(&basis.vector(i))).collect();
        let key = RngKey::new(self.seed, [OUTCOME_DOMAIN, self.epoch, k as u64, 0]);
        let i = draw_categorical(&key, &weights)?;
        self.outcomes.insert(k, i);
        Ok(i)
    }

    /// `lambda(A)`: `c` for scalars, `a_{f(k)}` for `A = sum_i a_i P_{e_{k,i}}`.
    pub fn value_of(&mut self, catalog: &BasisCatalog, handle: &ObservableHandle) -> Result<f64> {
        catalog.validate(handle)?;
        match handle {
            ObservableHandle::Scalar(c) => Ok(*c),
            ObservableHandle::InBasis { basis, eigenvalues } => {
                let i = self.outcome(catalog, *basis)?;
                Ok(eigenvalues[i])
            }
        }
    }

    /// Measures with the projection postulate.
    pub fn measure(&mut self, catalog: &BasisCatalog, handle: &ObservableHandle) -> Result<MeasurementRecord> {
        self.measure_with(catalog, handle, &StateUpdate::Collapse)
    }

    /// Reveals the handle's value, then applies `update`. Under
    /// [`StateUpdate::Collapse`] the state is projected onto the spectral
    /// projector of the observed value; scalar handles leave the state alone.
    pub fn measure_with(
        &mut self,
        catalog: &BasisCatalog,
        handle: &ObservableHandle,
        update: &StateUpdate,
    ) -> Result<MeasurementRecord> {
        let epoch_before = self.epoch;
        let value = self.value_of(catalog, handle)?;
        if let ObservableHandle::InBasis { basis, eigenvalues } = handle {
            let indices: Vec<usize> = (0..eigenvalues.len()).filter(|&i| eigenvalues[i] == value).collect();
            self.apply(catalog, *basis, &indices, update)?;
        } else if !matches!(update, StateUpdate::Collapse) {
            self.apply(catalog, 0, &[], update)?;
        }
        Ok(MeasurementRecord { handle: handle.clone(), value, epoch_before, epoch_after: self.epoch })
    }

    /// Resolves and jointly measures a commuting family: one outcome is drawn
    /// for the family's catalog basis, each member reports its eigenvalue on
    /// that joint eigenvector, and the state collapses once onto it.
    pub fn measure_context(
        &mut self,
        catalog: &mut BasisCatalog,
        targets: &[HermitianOperator],
    ) -> Result<Vec<MeasurementRecord>> {
        let ctx = catalog.resolve_context(targets)?;
        self.measure_resolved_context(catalog, &ctx, &StateUpdate::Collapse)
    }

    /// [`measure_context`](Self::measure_context) for an already resolved
    /// family.
    pub fn measure_resolved_context(
        &mut self,
        catalog: &BasisCatalog,
        ctx: &ContextHandle,
        update: &StateUpdate,
    ) -> Result<Vec<MeasurementRecord>> {
        let epoch_before = self.epoch;
        let i = self.outcome(catalog, ctx.basis)?;
        let values = ctx.targets.iter().map(|h| self.value_of(catalog, h)).collect::<Result<Vec<_>>>()?;
        self.apply(catalog, ctx.basis, &[i], update)?;
        Ok(ctx
            .targets
            .iter()
            .zip(values)
            .map(|(h, value)| MeasurementRecord { handle: h.clone(), value, epoch_before, epoch_after: self.epoch })
            .collect())
    }

    /// Starts a new epoch with quantum state `rho`.
    pub fn reset_to(&mut self, rho: DensityOperator) -> Result<()> {
        same_dim(self.rho.dim(), rho.dim())?;
        self.rho = rho;
        self.next_epoch();
        Ok(())
    }

    fn next_epoch(&mut self) {
        self.epoch += 1;
        self.outcomes.clear();
    }

    fn apply(&mut self, catalog: &BasisCatalog, basis: usize, indices: &[usize], update: &StateUpdate) -> Result<()> {
        match update {
            StateUpdate::Keep => Ok(()),
            StateUpdate::Refresh => {
                self.next_epoch();
                Ok(())
            }
            StateUpdate::Resample(rho) => self.reset_to(rho.clone()),
            StateUpdate::Collapse => {
                let b = catalog
                    .basis(basis)
                    .ok_or_else(|| Error::Domain(format!("basis {basis} is not in the catalog")))?;
                let n = b.dim();
                let mut p = DMatrix::<C64>::zeros(n, n);
                for &i in indices {
                    let v = b.vector(i);
                    p += &v * v.adjoint();
                }
                let projected = &p * self.rho.inner() * &p;
                let weight = projected.trace().re;
                if !(weight >= IMPOSSIBLE_WEIGHT) {
                    return Err(Error::ImpossibleOutcome { weight });
                }
                self.rho = DensityOperator::from_inner_normalized(projected);
                self.next_epoch();
                Ok(())
            }
        }
    }
}
