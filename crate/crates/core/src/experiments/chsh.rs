use crate::error::{Error, Result};
use crate::experiments::shot_seed;
use crate::linalg::{eigenspaces, spin1_component, tensor, DensityOperator, HermitianOperator, C64};
use crate::model::{BasisCatalog, HiddenState, ObservableHandle, StateUpdate};
use crate::stats::{run_shots, Tally};

const CHSH_DOMAIN: u64 = 0x4348_5348;
const FIRST: &str = "first_value";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Setting {
    A,
    APrime,
    B,
    BPrime,
}

impl Setting {
    fn index(self) -> usize {
        self as usize
    }

    fn primed(self) -> bool {
        matches!(self, Setting::APrime | Setting::BPrime)
    }
}

/// Setting pairs in round-robin order, with their correlator names.
const PAIRS: [(Setting, Setting, &str); 4] = [
    (Setting::A, Setting::B, "E(AB)"),
    (Setting::A, Setting::BPrime, "E(AB')"),
    (Setting::APrime, Setting::B, "E(A'B)"),
    (Setting::APrime, Setting::BPrime, "E(A'B')"),
];

/// Two spin-1 systems with `Q_r = 2 S_r^2 - I`.
///
/// `A = Q_x ⊗ I`, `A' = Q_y ⊗ I`, `B = I ⊗ Q_x`, `B' = I ⊗ Q_y`. `psi_r` is the
/// `S_r = 0` state, the `-1` eigenvector of `Q_r`.
#[derive(Clone, Debug)]
pub struct ChshToyModel {
    pub observables: [HermitianOperator; 4],
    /// Product state `psi_z ⊗ psi_z`.
    pub rho_zz: DensityOperator,
    /// Product state `psi_y ⊗ psi_y`.
    pub rho_yy: DensityOperator,
}

fn q(axis: [f64; 3]) -> Result<HermitianOperator> {
    let s = spin1_component(axis)?;
    s.square().scale(2.0).add(&HermitianOperator::identity(3)?.scale(-1.0))
}

fn minus_one_state(q: &HermitianOperator) -> Result<Vec<C64>> {
    let space = eigenspaces(q)
        .into_iter()
        .find(|s| s.eigenvalue == -1.0 && s.vectors.ncols() == 1)
        .ok_or_else(|| Error::InvariantViolation("Q_r has no simple -1 eigenvalue".into()))?;
    Ok(space.vectors.column(0).iter().copied().collect())
}

fn product_state(psi: &[C64]) -> Result<DensityOperator> {
    let v: Vec<C64> = psi.iter().flat_map(|&a| psi.iter().map(move |&b| a * b)).collect();
    DensityOperator::pure(&v)
}

impl ChshToyModel {
    pub fn new() -> Result<Self> {
        let qx = q([1.0, 0.0, 0.0])?;
        let qy = q([0.0, 1.0, 0.0])?;
        let qz = q([0.0, 0.0, 1.0])?;
        let id = HermitianOperator::identity(3)?;
        Ok(Self {
            observables: [tensor(&qx, &id)?, tensor(&qy, &id)?, tensor(&id, &qx)?, tensor(&id, &qy)?],
            rho_zz: product_state(&minus_one_state(&qz)?)?,
            rho_yy: product_state(&minus_one_state(&qy)?)?,
        })
    }

    pub fn observable(&self, s: Setting) -> &HermitianOperator {
        &self.observables[s.index()]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChshToyResult {
    /// E(AB), E(AB'), E(A'B), E(A'B').
    pub correlators: [f64; 4],
    pub standard_errors: [f64; 4],
    pub chsh_value: f64,
    pub chsh_se: f64,
    /// Mean of the first value revealed in each trial.
    pub first_value_mean: f64,
    pub shots: u64,
}

/// Runs the event-triggered toy dynamics on a dim-9 catalog.
///
/// Each trial starts from a fresh hidden state drawn from `rho_zz`, takes
/// the next setting pair in round-robin order and measures the A side first.
/// Measuring A or B leaves the hidden state alone; measuring A' or B'
/// resamples it from `rho_yy`.
pub fn run_chsh_toy(catalog: &mut BasisCatalog, shots: u64, seed: u64) -> Result<ChshToyResult> {
    if shots == 0 {
        return Err(Error::Domain("shots must be at least 1".into()));
    }
    if catalog.dim() != 9 {
        return Err(Error::Domain(format!("the toy model needs a dim-9 catalog, got {}", catalog.dim())));
    }
    let model = ChshToyModel::new()?;
    let handles: Vec<ObservableHandle> =
        model.observables.iter().map(|o| catalog.resolve_target(o)).collect::<Result<_>>()?;
    let catalog = &*catalog;
    let resample = StateUpdate::Resample(model.rho_yy.clone());
    let tally: Tally = run_shots(shots, |shot, t| {
        let (a, b, name) = PAIRS[(shot % 4) as usize];
        let mut state = HiddenState::sample(catalog, &model.rho_zz, shot_seed(seed, CHSH_DOMAIN, shot))?;
        let mut reveal = |s: Setting| {
            let update = if s.primed() { &resample } else { &StateUpdate::Keep };
            state.measure_with(catalog, &handles[s.index()], update).map(|r| r.value)
        };
        let x = reveal(a)?;
        let y = reveal(b)?;
        t.record(FIRST, x);
        t.record(name, x * y);
        Ok(())
    })?;
    let mut correlators = [f64::NAN; 4];
    let mut standard_errors = [f64::NAN; 4];
    for (i, &(_, _, name)) in PAIRS.iter().enumerate() {
        match tally.mean_and_se(name) {
            Ok((m, se)) => (correlators[i], standard_errors[i]) = (m, se),
            Err(_) => correlators[i] = tally.mean(name).unwrap_or(f64::NAN),
        }
    }
    let chsh_value = correlators[0] + correlators[1] + correlators[2] - correlators[3];
    let chsh_se = standard_errors.iter().map(|s| s * s).sum::<f64>().sqrt();
    Ok(ChshToyResult {
        correlators,
        standard_errors,
        chsh_value,
        chsh_se,
        first_value_mean: tally.mean(FIRST).unwrap_or(f64::NAN),
        shots,
    })
}
