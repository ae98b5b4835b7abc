//! The acceptance suite: every criterion at its stated shots and tolerance.

use std::collections::BTreeMap;

use mkc_core::experiments::{
    born_convergence, classical_bound_bruteforce, coloring_law_check, ks_obstruction_check, mixture_nonconvexity_demo,
    run_cabello_sequential, run_cabello_single_shot, run_chsh_toy, SequentialOptions,
};
use mkc_core::linalg::{random_density, random_hermitian, DensityOperator};
use mkc_core::model::{new_catalog, BasisCatalog};
use mkc_core::pom::{
    audit_parity_obliviousness, run_classical_table_pom, run_direct_box_pom, run_quantum_pom, QUANTUM_SUCCESS,
};
use mkc_core::stats::RngKey;
use mkc_core::{Error, Result};

use crate::config::{Format, RunConfig, TwoQubitState};
use crate::report::{emit_report, RunReport, Variable};
use crate::run::{
    binomial_se, cabello_variables, chsh_variables, mixture_projectors, mixture_variables, pom_variables,
    two_qubit_state, SIGMAS,
};

const ACCEPT_DOMAIN: u64 = 0x4143_4350;

pub const CABELLO_SHOTS: u64 = 600_000;
pub const SEQUENTIAL_SHOTS: u64 = 10_000;
pub const CHSH_SHOTS: u64 = 10_000;
pub const BORN_PAIRS: u64 = 50;
pub const BORN_SHOTS: u64 = 100_000;
pub const LAW_TRIALS: u64 = 100;
pub const MIXTURE_SHOTS: u64 = 100_000;
pub const POM_SHOTS: u64 = 100_000;

#[derive(Clone, Debug, PartialEq)]
pub struct Criterion {
    pub id: u8,
    pub title: &'static str,
    pub variables: Vec<Variable>,
}

impl Criterion {
    pub fn pass(&self) -> bool {
        !self.variables.is_empty() && self.variables.iter().all(|v| v.pass != Some(false))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AcceptanceRun {
    pub criteria: Vec<Criterion>,
    pub catalog_size: usize,
}

impl AcceptanceRun {
    pub fn pass(&self) -> bool {
        self.criteria.iter().all(Criterion::pass)
    }
}

/// One catalog per dimension, shared by every criterion.
struct Catalogs {
    epsilon: f64,
    seed: u64,
    by_dim: BTreeMap<usize, BasisCatalog>,
}

impl Catalogs {
    fn get(&mut self, dim: usize) -> Result<&mut BasisCatalog> {
        if !self.by_dim.contains_key(&dim) {
            let seed = RngKey::new(self.seed, [ACCEPT_DOMAIN, 0, dim as u64, 0]).derive_seed();
            self.by_dim.insert(dim, new_catalog(dim, self.epsilon, seed)?);
        }
        Ok(self.by_dim.get_mut(&dim).expect("just inserted"))
    }
}

fn criterion_seed(seed: u64, id: u8) -> u64 {
    RngKey::new(seed, [ACCEPT_DOMAIN, u64::from(id), 0, 0]).derive_seed()
}

fn prefixed(id: u8, rest: &str) -> String {
    format!("c{id:02}.{rest}")
}

/// Criteria 1 to 12.
pub fn run_criteria(seed: u64, epsilon: f64) -> Result<AcceptanceRun> {
    let mut cats = Catalogs { epsilon, seed, by_dim: BTreeMap::new() };
    let mut criteria = Vec::new();

    let bound = classical_bound_bruteforce();
    criteria.push(Criterion {
        id: 1,
        title: "KS obstruction and classical bound",
        variables: vec![
            Variable::flag(prefixed(1, "obstruction"), ks_obstruction_check()),
            Variable::checked(prefixed(1, "classical_bound"), f64::from(bound.bound), None, 4.0, 0.0),
        ],
    });

    let s2 = criterion_seed(seed, 2);
    let mut c2 = Vec::new();
    let mut c3 = Vec::new();
    for (tag, state) in [("mixed", TwoQubitState::Mixed), ("zero_plus", TwoQubitState::ZeroPlus)] {
        let r = run_cabello_single_shot(cats.get(4)?, &two_qubit_state(state)?, CABELLO_SHOTS, s2)?;
        for v in cabello_variables(&prefixed(2, &format!("{tag}.")), &r) {
            if v.name.ends_with("product_violations") {
                c3.push(Variable { name: prefixed(3, &format!("{tag}.product_violations")), ..v });
            } else if v.name.ends_with("cabello_sum") || v.name.ends_with("E(C3)") {
                c2.push(v);
            }
        }
    }
    criteria.push(Criterion { id: 2, title: "Cabello single-shot sum", variables: c2 });
    criteria.push(Criterion { id: 3, title: "Per-shot context products", variables: c3 });

    let mixed = two_qubit_state(TwoQubitState::Mixed)?;
    let r = run_cabello_sequential(
        cats.get(4)?,
        &mixed,
        SEQUENTIAL_SHOTS,
        criterion_seed(seed, 4),
        &SequentialOptions::default(),
    )?;
    criteria.push(Criterion {
        id: 4,
        title: "Sequential consistency",
        variables: vec![
            Variable::checked(
                prefixed(4, "a11_agreement_rate"),
                r.a11_agreement_rate,
                Some(r.a11_agreement_se),
                1.0,
                1e-3,
            ),
            Variable::within_sigmas(
                prefixed(4, "cabello_sum"),
                r.cabello.cabello_sum,
                r.cabello.cabello_se,
                6.0,
                SIGMAS,
                0.0,
            ),
        ],
    });

    let r = run_chsh_toy(cats.get(9)?, CHSH_SHOTS, criterion_seed(seed, 5))?;
    let c5 = chsh_variables(&prefixed(5, ""), &r)
        .into_iter()
        .filter(|v| v.name.ends_with("chsh_value") || v.name.ends_with("exceeds_tsirelson"))
        .collect();
    criteria.push(Criterion { id: 5, title: "CHSH toy value", variables: c5 });

    let s6 = criterion_seed(seed, 6);
    let mut c6 = Vec::new();
    for pair in 0..BORN_PAIRS {
        let mut rng = RngKey::new(s6, [ACCEPT_DOMAIN, pair, 1, 0]).rng();
        let rho: DensityOperator = random_density(&mut rng, 3);
        let a = random_hermitian(&mut rng, 3);
        let r = born_convergence(cats.get(3)?, &rho, &a, BORN_SHOTS, s6.wrapping_add(pair))?;
        c6.push(Variable::checked(
            prefixed(6, &format!("pair{pair:02}")),
            r.empirical.mean,
            Some(r.empirical.se),
            r.expected,
            SIGMAS * r.empirical.se,
        ));
    }
    criteria.push(Criterion { id: 6, title: "Born convergence", variables: c6 });

    let laws = coloring_law_check(cats.get(3)?, LAW_TRIALS, criterion_seed(seed, 7))?;
    criteria.push(Criterion {
        id: 7,
        title: "Coloring laws",
        variables: vec![
            Variable::checked(prefixed(7, "checked"), laws.checked as f64, None, LAW_TRIALS as f64, 0.0),
            Variable::checked(prefixed(7, "spectrum_violations"), laws.spectrum_violations as f64, None, 0.0, 0.0),
            Variable::checked(prefixed(7, "functional_violations"), laws.functional_violations as f64, None, 0.0, 0.0),
        ],
    });

    let (p1, p2) = mixture_projectors(0.5)?;
    let r = mixture_nonconvexity_demo(cats.get(2)?, &p1, &p2, MIXTURE_SHOTS, criterion_seed(seed, 9))?;
    let mut c9 = mixture_variables(&prefixed(9, ""), &r);
    c9.insert(0, Variable::checked(prefixed(9, "analytic_lhs"), r.analytic_lhs, None, 0.5625, 1e-12));
    c9.insert(1, Variable::checked(prefixed(9, "analytic_rhs"), r.analytic_rhs, None, 0.5, 1e-12));
    let c9 = Criterion { id: 9, title: "Mixture non-convexity", variables: c9 };

    let s10 = criterion_seed(seed, 10);
    let born = run_quantum_pom(POM_SHOTS, s10, None)?;
    let mkc = run_quantum_pom(POM_SHOTS, s10, Some(cats.get(2)?))?;
    let audit = audit_parity_obliviousness("quantum", POM_SHOTS, s10)?;
    let mut c10 = vec![pom_variables(&prefixed(10, ""), &born).remove(0)];
    c10.push(Variable::within_sigmas(
        prefixed(10, "via_mkc.success_rate"),
        mkc.success_rate,
        mkc.success_se,
        QUANTUM_SUCCESS,
        SIGMAS,
        0.0,
    ));
    c10.push(Variable::within_sigmas(
        prefixed(10, "parity_audit"),
        audit,
        binomial_se(audit, POM_SHOTS),
        0.5,
        SIGMAS,
        0.0,
    ));
    let c10 = Criterion { id: 10, title: "POM quantum", variables: c10 };

    let s11 = criterion_seed(seed, 11);
    let open = run_classical_table_pom(POM_SHOTS, s11, false)?;
    let open_audit = audit_parity_obliviousness("classical-table", POM_SHOTS, s11)?;
    let boxed_audit = audit_parity_obliviousness("classical-boxed", POM_SHOTS, s11)?;
    let c11 = Criterion {
        id: 11,
        title: "POM classical table",
        variables: vec![
            pom_variables(&prefixed(11, "unwrapped."), &open).remove(0),
            Variable::within_sigmas(
                prefixed(11, "unwrapped.parity_audit"),
                open_audit,
                binomial_se(open_audit, POM_SHOTS),
                0.75,
                SIGMAS,
                0.0,
            ),
            Variable::within_sigmas(
                prefixed(11, "boxed.parity_audit"),
                boxed_audit,
                binomial_se(boxed_audit, POM_SHOTS),
                0.5,
                SIGMAS,
                0.0,
            ),
        ],
    };

    let s12 = criterion_seed(seed, 12);
    let direct = run_direct_box_pom(POM_SHOTS, s12)?;
    let direct_audit = audit_parity_obliviousness("direct-box", POM_SHOTS, s12)?;
    let c12 = Criterion {
        id: 12,
        title: "POM direct box",
        variables: vec![
            pom_variables(&prefixed(12, ""), &direct).remove(0),
            Variable::within_sigmas(
                prefixed(12, "parity_audit"),
                direct_audit,
                binomial_se(direct_audit, POM_SHOTS),
                0.5,
                SIGMAS,
                0.0,
            ),
        ],
    };

    // Catalog integrity is checked after every other criterion has grown
    // the catalogs.
    let mut c8 = Vec::new();
    for (dim, cat) in &cats.by_dim {
        c8.push(Variable::flag(
            prefixed(8, &format!("dim{dim}.pairwise_incompatible")),
            cat.is_pairwise_incompatible()?,
        ));
    }
    criteria.push(Criterion { id: 8, title: "Catalog integrity", variables: c8 });
    criteria.extend([c9, c10, c11, c12]);

    let catalog_size = cats.by_dim.values().map(BasisCatalog::len).sum();
    Ok(AcceptanceRun { criteria, catalog_size })
}

fn base_report(config: &RunConfig, run: &AcceptanceRun) -> RunReport {
    let mut report = RunReport::new(config.echo());
    for c in &run.criteria {
        report
            .fact(format!("criterion_{:02}", c.id), format!("{} {}", if c.pass() { "pass" } else { "fail" }, c.title));
    }
    for c in &run.criteria {
        for v in &c.variables {
            report.push(v.clone());
        }
    }
    report.catalog_size = Some(run.catalog_size);
    report
}

/// Criteria 1 to 12, then criterion 13: the suite is run again on a single
/// worker thread and both renderings must match byte for byte.
pub fn run_acceptance(config: &RunConfig) -> Result<AcceptanceRun> {
    let first = run_criteria(config.seed, config.epsilon)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Error::Domain(format!("cannot start worker pool: {e}")))?;
    let second = pool.install(|| run_criteria(config.seed, config.epsilon))?;
    let identical = [Format::Json, Format::Csv, Format::Text]
        .iter()
        .all(|&f| emit_report(&base_report(config, &first), f) == emit_report(&base_report(config, &second), f));
    let mut run = first;
    run.criteria.push(Criterion {
        id: 13,
        title: "Determinism",
        variables: vec![Variable::flag("c13.identical_rerun_output", identical)],
    });
    Ok(run)
}

pub fn acceptance_report(config: &RunConfig) -> Result<RunReport> {
    Ok(base_report(config, &run_acceptance(config)?))
}

/// One line per criterion, for logs.
pub fn summary_lines(run: &AcceptanceRun) -> Vec<String> {
    run.criteria
        .iter()
        .map(|c| format!("criterion {:>2} {:<36} {}", c.id, c.title, if c.pass() { "PASS" } else { "FAIL" }))
        .collect()
}
