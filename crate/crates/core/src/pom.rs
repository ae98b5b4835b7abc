//! Two-bit parity-oblivious multiplexing: Alice holds bits `(a1, a2)`, Bob is
//! asked for bit `a_b` and must not learn anything about `a1 ⊕ a2`.

use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::experiments::shot_seed;
use crate::linalg::{born_expectation, pauli, DensityOperator, HermitianOperator, Pauli, C64};
use crate::model::{BasisCatalog, HiddenState, ObservableHandle};
use crate::stats::{draw_categorical, run_shots, RngKey, Tally};

const POM_DOMAIN: u64 = 0x504f_4d31;
const SUCCESS: &str = "success";

/// Success rate of the qubit protocol and of the hidden-bit table, `1/2 + √2/4`.
pub const QUANTUM_SUCCESS: f64 = 0.5 + SQRT_2 / 4.0;

/// The four qubit preparations, indexed by `2 * a1 + a2`.
#[derive(Clone, Debug)]
pub struct PomStates {
    pub states: [DensityOperator; 4],
}

impl Default for PomStates {
    fn default() -> Self {
        Self::new()
    }
}

impl PomStates {
    pub fn new() -> Self {
        let c = SQRT_2 / 4.0;
        let make = |s: f64, sign_im: f64| {
            let off = C64::new(s * c, -s * sign_im * c);
            DensityOperator::from_rows(2, &[C64::new(0.5, 0.0), off, off.conj(), C64::new(0.5, 0.0)])
                .expect("valid qubit state")
        };
        Self { states: [make(1.0, 1.0), make(1.0, -1.0), make(-1.0, -1.0), make(-1.0, 1.0)] }
    }

    pub fn state(&self, a1: u8, a2: u8) -> &DensityOperator {
        &self.states[usize::from(2 * a1 + a2)]
    }
}

/// Alice's hidden-bit table: row `2 * a1 + a2`, column `2 * λ1 + λ2`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalPomTable {
    pub rows: [[f64; 4]; 4],
}

impl Default for ClassicalPomTable {
    fn default() -> Self {
        Self::new()
    }
}

impl ClassicalPomTable {
    pub fn new() -> Self {
        let hi = 3.0 / 8.0 + SQRT_2 / 4.0;
        let lo = 3.0 / 8.0 - SQRT_2 / 4.0;
        let e = 1.0 / 8.0;
        Self { rows: [[hi, e, e, lo], [e, hi, lo, e], [e, lo, hi, e], [lo, e, e, hi]] }
    }

    /// `P[λ_b = a_b]` for the row of `(a1, a2)`, by direct summation.
    pub fn marginal_success(&self, a1: u8, a2: u8, b: u8) -> f64 {
        let row = &self.rows[usize::from(2 * a1 + a2)];
        let target = if b == 1 { a1 } else { a2 };
        (0..4u8).filter(|&l| (if b == 1 { l >> 1 } else { l & 1 }) == target).map(|l| row[usize::from(l)]).sum()
    }
}

/// A box with two sealed compartments; opening one destroys the other.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoobyBox {
    compartments: [u8; 2],
    opened: Option<u8>,
}

impl BoobyBox {
    pub fn new(first: u8, second: u8) -> Self {
        Self { compartments: [first, second], opened: None }
    }

    pub fn opened(&self) -> Option<u8> {
        self.opened
    }

    /// Reads compartment `i` (1 or 2). Reading it again is fine; reading the
    /// other one afterwards fails.
    pub fn open(&mut self, i: u8) -> Result<u8> {
        if !(1..=2).contains(&i) {
            return Err(Error::Domain(format!("the box has compartments 1 and 2, not {i}")));
        }
        match self.opened {
            Some(j) if j != i => Err(Error::BoobyTrap { opened: usize::from(j), destroyed: usize::from(i) }),
            _ => {
                self.opened = Some(i);
                Ok(self.compartments[usize::from(i - 1)])
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Protocol {
    /// Qubit states, measured by direct Born sampling.
    Quantum,
    /// Qubit states, measured through the hidden-variable model.
    QuantumMkc,
    /// Both hidden bits sent in the clear.
    ClassicalTable,
    /// Hidden bits sent in a booby-trapped box.
    ClassicalBoxed,
    /// `(a1, a2)` themselves sent in a booby-trapped box.
    DirectBox,
}

impl Protocol {
    pub const ALL: [Protocol; 5] = [
        Protocol::Quantum,
        Protocol::QuantumMkc,
        Protocol::ClassicalTable,
        Protocol::ClassicalBoxed,
        Protocol::DirectBox,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Quantum => "quantum",
            Protocol::QuantumMkc => "quantum-mkc",
            Protocol::ClassicalTable => "classical-table",
            Protocol::ClassicalBoxed => "classical-boxed",
            Protocol::DirectBox => "direct-box",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name).ok_or_else(|| Error::UnknownProtocol(name.to_owned()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PomRunResult {
    pub protocol: Protocol,
    pub shots: u64,
    pub success_rate: f64,
    pub success_se: f64,
    /// Empirical success of the best deterministic parity decoder on Bob's
    /// observation.
    pub parity_guess_rate: f64,
    pub parity_guess_se: f64,
}

/// What Bob sees in one shot, coded as a symbol below 4, and his guess for `a_b`.
struct Observation {
    symbol: usize,
    guess: u8,
}

fn observation_key(symbol: usize, parity: u8) -> String {
    format!("obs{symbol}_parity{parity}")
}

/// Best empirical success over all `2^4` maps from observation symbol to
/// parity guess.
fn best_decoder(tally: &Tally, shots: u64) -> (f64, f64) {
    let counts: Vec<[u64; 2]> =
        (0..4).map(|s| [tally.count(&observation_key(s, 0)), tally.count(&observation_key(s, 1))]).collect();
    let best = (0u32..16)
        .map(|decoder| (0..4).map(|s| counts[s][((decoder >> s) & 1) as usize]).sum::<u64>())
        .max()
        .unwrap_or(0);
    let p = best as f64 / shots as f64;
    (p, (p * (1.0 - p) / shots as f64).sqrt())
}

fn run_protocol<F>(protocol: Protocol, shots: u64, seed: u64, observe: F) -> Result<PomRunResult>
where
    F: Fn(u64, u8, u8, u8) -> Result<Observation> + Sync,
{
    if shots < 2 {
        return Err(Error::Domain("need at least 2 shots".into()));
    }
    let tally = run_shots(shots, |shot, t| {
        let key = |label| RngKey::new(seed, [POM_DOMAIN, shot, label, 0]);
        let a = draw_categorical(&key(0), &[0.25; 4])? as u8;
        let (a1, a2) = (a >> 1, a & 1);
        let b = 1 + draw_categorical(&key(1), &[0.5; 2])? as u8;
        let obs = observe(shot, a1, a2, b)?;
        let target = if b == 1 { a1 } else { a2 };
        t.record(SUCCESS, if obs.guess == target { 1.0 } else { 0.0 });
        t.record(&observation_key(obs.symbol, a1 ^ a2), 1.0);
        Ok(())
    })?;
    let (success_rate, success_se) = tally.mean_and_se(SUCCESS)?;
    let (parity_guess_rate, parity_guess_se) = best_decoder(&tally, shots);
    Ok(PomRunResult { protocol, shots, success_rate, success_se, parity_guess_rate, parity_guess_se })
}

fn outcome_bit(value: f64) -> u8 {
    if value > 0.0 {
        0
    } else {
        1
    }
}

/// Bob measures σx for `b = 1` or σy for `b = 2` and guesses 0 on +1, 1 on -1.
///
/// With `catalog` set, the measurement goes through the hidden-variable model
/// on that (dim 2) catalog; otherwise outcomes are sampled from the Born rule.
pub fn run_quantum_pom(shots: u64, seed: u64, catalog: Option<&mut BasisCatalog>) -> Result<PomRunResult> {
    let states = PomStates::new();
    let observables = [pauli(Pauli::X), pauli(Pauli::Y)];
    let key = |shot: u64| RngKey::new(seed, [POM_DOMAIN, shot, 2, 0]);
    match catalog {
        None => run_protocol(Protocol::Quantum, shots, seed, |shot, a1, a2, b| {
            let e = born_expectation(states.state(a1, a2), &observables[usize::from(b - 1)])?;
            let plus = (1.0 + e) / 2.0;
            let bit = draw_categorical(&key(shot), &[plus, 1.0 - plus])? as u8;
            Ok(Observation { symbol: usize::from(2 * (b - 1) + bit), guess: bit })
        }),
        Some(cat) => {
            if cat.dim() != 2 {
                return Err(Error::Domain(format!("qubit protocol needs a dim-2 catalog, got {}", cat.dim())));
            }
            let handles: Vec<ObservableHandle> =
                observables.iter().map(|o| cat.resolve_target(o)).collect::<Result<_>>()?;
            let cat = &*cat;
            run_protocol(Protocol::QuantumMkc, shots, seed, |shot, a1, a2, b| {
                let mut state = HiddenState::sample(cat, states.state(a1, a2), shot_seed(seed, POM_DOMAIN, shot))?;
                let bit = outcome_bit(state.value_of(cat, &handles[usize::from(b - 1)])?);
                Ok(Observation { symbol: usize::from(2 * (b - 1) + bit), guess: bit })
            })
        }
    }
}

/// Alice sends hidden bits drawn from [`ClassicalPomTable`] and Bob guesses
/// `λ_b`. Unwrapped, Bob sees both bits; wrapped, he can open only
/// compartment `b`.
pub fn run_classical_table_pom(shots: u64, seed: u64, wrapped_in_box: bool) -> Result<PomRunResult> {
    let table = ClassicalPomTable::new();
    let protocol = if wrapped_in_box { Protocol::ClassicalBoxed } else { Protocol::ClassicalTable };
    run_protocol(protocol, shots, seed, |shot, a1, a2, b| {
        let row = &table.rows[usize::from(2 * a1 + a2)];
        let lambda = draw_categorical(&RngKey::new(seed, [POM_DOMAIN, shot, 2, 0]), row)? as u8;
        let (l1, l2) = (lambda >> 1, lambda & 1);
        if wrapped_in_box {
            let bit = BoobyBox::new(l1, l2).open(b)?;
            Ok(Observation { symbol: usize::from(2 * (b - 1) + bit), guess: bit })
        } else {
            let guess = if b == 1 { l1 } else { l2 };
            Ok(Observation { symbol: usize::from(lambda), guess })
        }
    })
}

/// Alice puts `(a1, a2)` themselves in the box; Bob opens compartment `b`.
pub fn run_direct_box_pom(shots: u64, seed: u64) -> Result<PomRunResult> {
    run_protocol(Protocol::DirectBox, shots, seed, |_, a1, a2, b| {
        let bit = BoobyBox::new(a1, a2).open(b)?;
        Ok(Observation { symbol: usize::from(2 * (b - 1) + bit), guess: bit })
    })
}

/// Best parity-guessing success available from Bob's observations under the
/// named protocol, found by exhaustive search over deterministic decoders.
///
/// `quantum-mkc` runs on a fresh dim-2 catalog with precision `1e-3`.
pub fn audit_parity_obliviousness(protocol: &str, shots: u64, seed: u64) -> Result<f64> {
    let result = match Protocol::from_name(protocol)? {
        Protocol::Quantum => run_quantum_pom(shots, seed, None)?,
        Protocol::QuantumMkc => {
            let mut cat = crate::model::new_catalog(2, crate::model::DEFAULT_EPSILON, seed)?;
            run_quantum_pom(shots, seed, Some(&mut cat))?
        }
        Protocol::ClassicalTable => run_classical_table_pom(shots, seed, false)?,
        Protocol::ClassicalBoxed => run_classical_table_pom(shots, seed, true)?,
        Protocol::DirectBox => run_direct_box_pom(shots, seed)?,
    };
    Ok(result.parity_guess_rate)
}

/// Whether the four preparations are parity-oblivious as operators:
/// `ρ00 + ρ11 = ρ01 + ρ10` entrywise within `tol`.
pub fn parity_identity_holds(states: &PomStates, tol: f64) -> bool {
    let sum = |i: usize, j: usize| states.states[i].inner() + states.states[j].inner();
    (sum(0, 3) - sum(1, 2)).iter().all(|z| z.norm() <= tol)
}

/// The observable Bob measures for bit `b`.
pub fn bob_observable(b: u8) -> Result<HermitianOperator> {
    match b {
        1 => Ok(pauli(Pauli::X)),
        2 => Ok(pauli(Pauli::Y)),
        _ => Err(Error::Domain(format!("b must be 1 or 2, got {b}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::spectral_decomposition;
    use crate::model::new_catalog;
    use crate::stats::z_score;

    #[test]
    fn states_match_expectations() {
        let s = PomStates::new();
        let h = SQRT_2 / 2.0;
        let e = |a1, a2, b| born_expectation(s.state(a1, a2), &bob_observable(b).unwrap()).unwrap();
        // The sign of <σ> encodes the requested bit.
        for a1 in 0..2u8 {
            for a2 in 0..2u8 {
                let sign = |bit: u8| if bit == 0 { 1.0 } else { -1.0 };
                assert!((e(a1, a2, 1) - sign(a1) * h).abs() < 1e-12);
                assert!((e(a1, a2, 2) - sign(a2) * h).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn states_are_pure_and_parity_balanced() {
        let s = PomStates::new();
        assert!(parity_identity_holds(&s, 1e-12));
        for rho in &s.states {
            let p = spectral_decomposition(&HermitianOperator::new(rho.matrix().clone()).unwrap());
            let ranks: Vec<f64> = p.iter().map(|c| c.eigenvalue).collect();
            assert!((ranks[0]).abs() < 1e-12 && (ranks[1] - 1.0).abs() < 1e-12, "{ranks:?}");
        }
    }

    #[test]
    fn table_rows_and_marginals() {
        let t = ClassicalPomTable::new();
        for a in 0..4u8 {
            let row = &t.rows[usize::from(a)];
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|&p| p >= 0.0));
            for b in 1..=2 {
                assert!((t.marginal_success(a >> 1, a & 1, b) - QUANTUM_SUCCESS).abs() < 1e-12);
            }
            // Parity of the hidden bits matches the parity of the input 3/4
            // of the time.
            let parity = (a >> 1) ^ (a & 1);
            let agree: f64 = (0..4u8).filter(|l| (l >> 1) ^ (l & 1) == parity).map(|l| row[usize::from(l)]).sum();
            assert!((agree - 0.75).abs() < 1e-12);
        }
    }

    #[test]
    fn booby_box_destroys_the_other_compartment() {
        let mut b = BoobyBox::new(1, 0);
        assert_eq!(b.open(1).unwrap(), 1);
        assert_eq!(b.open(1).unwrap(), 1);
        assert!(matches!(b.open(2), Err(Error::BoobyTrap { opened: 1, destroyed: 2 })));
        let mut b = BoobyBox::new(1, 0);
        assert_eq!(b.open(2).unwrap(), 0);
        assert!(b.open(1).is_err());
        assert!(BoobyBox::new(0, 0).open(3).is_err());
    }

    #[test]
    fn quantum_protocol_rates() {
        let r = run_quantum_pom(40_000, 1, None).unwrap();
        assert!((r.success_rate - QUANTUM_SUCCESS).abs() < 4.0 * r.success_se);
        assert!((r.parity_guess_rate - 0.5).abs() < 4.0 * r.parity_guess_se);
    }

    #[test]
    fn mkc_route_matches_born_route() {
        let born = run_quantum_pom(40_000, 2, None).unwrap();
        let mut cat = new_catalog(2, 1e-3, 2).unwrap();
        let mkc = run_quantum_pom(40_000, 2, Some(&mut cat)).unwrap();
        let z = z_score((born.success_rate, born.success_se), (mkc.success_rate, mkc.success_se));
        assert!(z.abs() < 4.0, "z = {z}");
        assert_eq!(cat.len(), 2);
    }

    #[test]
    fn classical_table_rates() {
        let open = run_classical_table_pom(40_000, 3, false).unwrap();
        assert!((open.success_rate - QUANTUM_SUCCESS).abs() < 4.0 * open.success_se);
        assert!((open.parity_guess_rate - 0.75).abs() < 4.0 * open.parity_guess_se);
        let boxed = run_classical_table_pom(40_000, 3, true).unwrap();
        assert!((boxed.success_rate - QUANTUM_SUCCESS).abs() < 4.0 * boxed.success_se);
        assert!((boxed.parity_guess_rate - 0.5).abs() < 4.0 * boxed.parity_guess_se);
    }

    #[test]
    fn direct_box_is_perfect() {
        let r = run_direct_box_pom(10_000, 4).unwrap();
        assert_eq!(r.success_rate, 1.0);
        assert_eq!(r.success_se, 0.0);
        assert!(r.success_rate > QUANTUM_SUCCESS);
    }

    #[test]
    fn audit_by_name() {
        assert!(matches!(audit_parity_obliviousness("telepathy", 10, 0), Err(Error::UnknownProtocol(_))));
        let rate = audit_parity_obliviousness("classical-table", 20_000, 5).unwrap();
        assert!((rate - 0.75).abs() < 0.02);
    }
}
