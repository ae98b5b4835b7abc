//! Runs one configured experiment and builds its report.

use mkc_core::experiments::{
    classical_bound_bruteforce, ks_obstruction_check, mixture_nonconvexity_demo, run_cabello_sequential,
    run_cabello_single_shot, run_chsh_toy, satisfiable_with_targets, CabelloResult, ChshToyResult, Context,
    MixtureResult, SequentialOptions,
};
use mkc_core::linalg::{tensor_vectors, DensityOperator, HermitianOperator, C64};
use mkc_core::model::{new_catalog, BasisCatalog};
use mkc_core::pom::{
    audit_parity_obliviousness, run_classical_table_pom, run_direct_box_pom, run_quantum_pom, PomRunResult, Protocol,
    QUANTUM_SUCCESS,
};
use mkc_core::stats::z_score;
use mkc_core::Result;

use crate::acceptance;
use crate::config::{Experiment, RunConfig, TwoQubitState};
use crate::report::{RunReport, Variable};

/// Tolerance floor for expectations that are exact up to basis perturbation.
pub const EXACT_FLOOR: f64 = 0.02;
pub const SIGMAS: f64 = 4.0;

pub fn two_qubit_state(state: TwoQubitState) -> Result<DensityOperator> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let re = |x: f64| C64::new(x, 0.0);
    match state {
        TwoQubitState::Mixed => DensityOperator::maximally_mixed(4),
        TwoQubitState::ZeroPlus => DensityOperator::pure(&tensor_vectors(&[re(1.0), re(0.0)], &[re(h), re(h)])),
        TwoQubitState::Bell => DensityOperator::pure(&[re(h), re(0.0), re(0.0), re(h)]),
    }
}

/// `|0><0|` and a pure projector with `Tr(P1 P2) = overlap`.
pub fn mixture_projectors(overlap: f64) -> Result<(HermitianOperator, HermitianOperator)> {
    let p1 = HermitianOperator::diagonal(&[1.0, 0.0])?;
    let p2 =
        HermitianOperator::projector_onto(&[C64::new(overlap.sqrt(), 0.0), C64::new((1.0 - overlap).sqrt(), 0.0)])?;
    Ok((p1, p2))
}

pub fn cabello_variables(prefix: &str, r: &CabelloResult) -> Vec<Variable> {
    let mut out: Vec<Variable> = Context::ALL
        .iter()
        .map(|&c| {
            Variable::within_sigmas(
                format!("{prefix}E({})", c.name()),
                r.expectation(c),
                r.standard_error(c),
                c.product(),
                SIGMAS,
                EXACT_FLOOR,
            )
        })
        .collect();
    out.push(Variable::within_sigmas(
        format!("{prefix}cabello_sum"),
        r.cabello_sum,
        r.cabello_se,
        6.0,
        SIGMAS,
        EXACT_FLOOR,
    ));
    out.push(Variable::checked(format!("{prefix}product_violations"), r.product_violations as f64, None, 0.0, 0.0));
    out
}

pub fn chsh_variables(prefix: &str, r: &ChshToyResult) -> Vec<Variable> {
    let names = ["E(AB)", "E(AB')", "E(A'B)", "E(A'B')"];
    let targets = [1.0, 1.0, 1.0, -1.0];
    let mut out: Vec<Variable> = (0..4)
        .map(|i| {
            Variable::within_sigmas(
                format!("{prefix}{}", names[i]),
                r.correlators[i],
                r.standard_errors[i],
                targets[i],
                SIGMAS,
                EXACT_FLOOR,
            )
        })
        .collect();
    out.push(Variable::checked(format!("{prefix}chsh_value"), r.chsh_value, Some(r.chsh_se), 4.0, EXACT_FLOOR));
    out.push(Variable::flag(format!("{prefix}exceeds_tsirelson"), r.chsh_value > 2.0 * std::f64::consts::SQRT_2));
    out.push(Variable::checked(format!("{prefix}first_value_mean"), r.first_value_mean, None, 1.0, EXACT_FLOOR));
    out
}

pub fn mixture_variables(prefix: &str, r: &MixtureResult) -> Vec<Variable> {
    let mut out = vec![
        Variable::within_sigmas(
            format!("{prefix}joint_rho"),
            r.empirical_lhs.mean,
            r.empirical_lhs.se,
            r.analytic_lhs,
            SIGMAS,
            0.0,
        ),
        Variable::within_sigmas(
            format!("{prefix}joint_mixture"),
            r.empirical_rhs.mean,
            r.empirical_rhs.se,
            r.analytic_rhs,
            SIGMAS,
            0.0,
        ),
    ];
    for i in 0..2 {
        let (a, b) = (r.marginals_rho[i], r.marginals_mix[i]);
        let se = (a.se * a.se + b.se * b.se).sqrt();
        out.push(Variable::within_sigmas(
            format!("{prefix}p{}_marginal_diff", i + 1),
            a.mean - b.mean,
            se,
            0.0,
            SIGMAS,
            0.0,
        ));
    }
    out
}

/// Parity target for the best decoder: only the unwrapped table leaks parity.
pub fn parity_target(p: Protocol) -> f64 {
    if p == Protocol::ClassicalTable {
        0.75
    } else {
        0.5
    }
}

pub fn pom_variables(prefix: &str, r: &PomRunResult) -> Vec<Variable> {
    let success = if r.protocol == Protocol::DirectBox {
        Variable::checked(format!("{prefix}success_rate"), r.success_rate, Some(r.success_se), 1.0, 0.0)
    } else {
        Variable::within_sigmas(
            format!("{prefix}success_rate"),
            r.success_rate,
            r.success_se,
            QUANTUM_SUCCESS,
            SIGMAS,
            0.0,
        )
    };
    vec![
        success,
        Variable::within_sigmas(
            format!("{prefix}parity_guess_rate"),
            r.parity_guess_rate,
            r.parity_guess_se,
            parity_target(r.protocol),
            SIGMAS,
            0.0,
        ),
    ]
}

pub fn binomial_se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Runs `config` on the current rayon pool.
pub fn execute(config: &RunConfig) -> Result<RunReport> {
    let mut report = RunReport::new(config.echo());
    let (shots, seed, eps) = (config.shots, config.seed, config.epsilon);
    let catalog = |dim| new_catalog(dim, eps, seed);
    let mut catalogs: Vec<BasisCatalog> = Vec::new();
    match &config.experiment {
        Experiment::CabelloSingle { state } => {
            let mut cat = catalog(4)?;
            let r = run_cabello_single_shot(&mut cat, &two_qubit_state(*state)?, shots, seed)?;
            cabello_variables("", &r).into_iter().for_each(|v| report.push(v));
            catalogs.push(cat);
        }
        Experiment::CabelloSequential { state, order, collapse } => {
            let mut cat = catalog(4)?;
            let opts = SequentialOptions { order: order.clone(), collapse: *collapse };
            let r = run_cabello_sequential(&mut cat, &two_qubit_state(*state)?, shots, seed, &opts)?;
            let complete = Context::ALL.iter().all(|c| order.contains(c));
            let skipped: Vec<String> =
                Context::ALL.iter().filter(|c| !order.contains(c)).map(|c| format!("E({})", c.name())).collect();
            for v in cabello_variables("", &r.cabello) {
                // The sum needs every context.
                if skipped.contains(&v.name) || (v.name == "cabello_sum" && !complete) {
                    continue;
                }
                report.push(v);
            }
            if *collapse {
                report.push(Variable::checked(
                    "a11_agreement_rate",
                    r.a11_agreement_rate,
                    Some(r.a11_agreement_se),
                    1.0,
                    1e-3,
                ));
            } else {
                report.push(Variable::observed("a11_agreement_rate", r.a11_agreement_rate, Some(r.a11_agreement_se)));
            }
            catalogs.push(cat);
        }
        Experiment::ChshToy => {
            let mut cat = catalog(9)?;
            let r = run_chsh_toy(&mut cat, shots, seed)?;
            chsh_variables("", &r).into_iter().for_each(|v| report.push(v));
            catalogs.push(cat);
        }
        Experiment::KsCheck => {
            let obstruction = ks_obstruction_check();
            let relaxed = satisfiable_with_targets([1; 6]);
            report.fact("obstruction", obstruction);
            report.fact("relaxed_c3_satisfiable", relaxed);
            report.push(Variable::flag("obstruction", obstruction));
            report.push(Variable::flag("relaxed_c3_satisfiable", relaxed));
        }
        Experiment::ClassicalBound => {
            let b = classical_bound_bruteforce();
            report.fact("bound", b.bound);
            report.fact("maximizers", b.maximizers.len());
            report.push(Variable::checked("bound", f64::from(b.bound), None, 4.0, 0.0));
        }
        Experiment::Mixture { overlap } => {
            let mut cat = catalog(2)?;
            let (p1, p2) = mixture_projectors(*overlap)?;
            let r = mixture_nonconvexity_demo(&mut cat, &p1, &p2, shots, seed)?;
            report.fact("analytic_lhs", crate::report::round6(r.analytic_lhs));
            report.fact("analytic_rhs", crate::report::round6(r.analytic_rhs));
            mixture_variables("", &r).into_iter().for_each(|v| report.push(v));
            catalogs.push(cat);
        }
        Experiment::PomQuantum { via_mkc } => {
            let born = run_quantum_pom(shots, seed, None)?;
            if *via_mkc {
                let mut cat = catalog(2)?;
                let r = run_quantum_pom(shots, seed, Some(&mut cat))?;
                pom_variables("", &r).into_iter().for_each(|v| report.push(v));
                let z = z_score((r.success_rate, r.success_se), (born.success_rate, born.success_se));
                report.push(Variable::checked("success_z_vs_born", z, None, 0.0, SIGMAS));
                catalogs.push(cat);
            } else {
                pom_variables("", &born).into_iter().for_each(|v| report.push(v));
            }
        }
        Experiment::PomClassical { boxed } => {
            let r = run_classical_table_pom(shots, seed, *boxed)?;
            pom_variables("", &r).into_iter().for_each(|v| report.push(v));
        }
        Experiment::PomBox => {
            let r = run_direct_box_pom(shots, seed)?;
            pom_variables("", &r).into_iter().for_each(|v| report.push(v));
        }
        Experiment::PomAudit { protocol } => {
            let rate = audit_parity_obliviousness(protocol.name(), shots, seed)?;
            report.fact("protocol", protocol.name());
            report.push(Variable::within_sigmas(
                "best_parity_decoder",
                rate,
                binomial_se(rate, shots),
                parity_target(*protocol),
                SIGMAS,
                0.0,
            ));
        }
        Experiment::Acceptance => return acceptance::acceptance_report(config),
    }
    if !catalogs.is_empty() {
        report.catalog_size = Some(catalogs.iter().map(BasisCatalog::len).sum());
    }
    Ok(report)
}

/// Runs `config` on a pool of the requested size, or on the global pool.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    let start = std::time::Instant::now();
    let mut report = match config.parallel {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| mkc_core::Error::Domain(format!("cannot start worker pool: {e}")))?
            .install(|| execute(config))?,
        None => execute(config)?,
    };
    report.duration = Some(start.elapsed());
    Ok(report)
}
