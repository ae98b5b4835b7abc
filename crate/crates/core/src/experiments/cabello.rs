use crate::error::{Error, Result};
use crate::experiments::shot_seed;
use crate::experiments::square::{Context, MerminPeresSquare};
use crate::linalg::DensityOperator;
use crate::model::{BasisCatalog, ContextHandle, HiddenState, StateUpdate};
use crate::stats::{run_shots, Tally};

const SINGLE_DOMAIN: u64 = 0x4341_4231;
const SEQUENTIAL_DOMAIN: u64 = 0x4341_4232;
const VIOLATIONS: &str = "violations";
const SUM: &str = "sum";
const AGREE: &str = "a11_agree";

#[derive(Clone, Debug, PartialEq)]
pub struct CabelloResult {
    /// Indexed like [`Context::ALL`].
    pub expectations: [f64; 6],
    /// Standard errors of the expectations. NaN where a context has fewer
    /// than two samples.
    pub standard_errors: [f64; 6],
    pub samples: [u64; 6],
    pub cabello_sum: f64,
    pub cabello_se: f64,
    /// Shots whose reported values multiplied to something other than the
    /// context's operator product.
    pub product_violations: u64,
    pub shots: u64,
}

impl CabelloResult {
    pub fn expectation(&self, ctx: Context) -> f64 {
        self.expectations[ctx.index()]
    }

    pub fn standard_error(&self, ctx: Context) -> f64 {
        self.standard_errors[ctx.index()]
    }

    fn from_tally(tally: &Tally, shots: u64) -> Self {
        let mut expectations = [f64::NAN; 6];
        let mut standard_errors = [f64::NAN; 6];
        let mut samples = [0; 6];
        for ctx in Context::ALL {
            let i = ctx.index();
            samples[i] = tally.count(ctx.name());
            match tally.mean_and_se(ctx.name()) {
                Ok((m, se)) => (expectations[i], standard_errors[i]) = (m, se),
                Err(_) => expectations[i] = tally.mean(ctx.name()).unwrap_or(f64::NAN),
            }
        }
        let cabello_sum = Context::ALL.iter().map(|c| c.sign() * expectations[c.index()]).sum();
        let cabello_se = standard_errors.iter().map(|s| s * s).sum::<f64>().sqrt();
        let product_violations = tally.count(VIOLATIONS);
        Self { expectations, standard_errors, samples, cabello_sum, cabello_se, product_violations, shots }
    }
}

fn resolve_square(catalog: &mut BasisCatalog, rho: &DensityOperator) -> Result<[ContextHandle; 6]> {
    if rho.dim() != 4 || catalog.dim() != 4 {
        return Err(Error::Domain(format!(
            "the square lives on C^4, got state dim {} and catalog dim {}",
            rho.dim(),
            catalog.dim()
        )));
    }
    let square = MerminPeresSquare::new();
    let mut handles = Vec::with_capacity(6);
    for ctx in Context::ALL {
        handles.push(catalog.resolve_context(&square.context(ctx))?);
    }
    Ok(handles.try_into().expect("six contexts"))
}

fn check_shots(shots: u64) -> Result<()> {
    if shots == 0 {
        return Err(Error::Domain("shots must be at least 1".into()));
    }
    Ok(())
}

/// Measures one context per shot, cycling through the six contexts in order,
/// each time on a fresh system drawn from `rho`.
pub fn run_cabello_single_shot(
    catalog: &mut BasisCatalog,
    rho: &DensityOperator,
    shots: u64,
    seed: u64,
) -> Result<CabelloResult> {
    check_shots(shots)?;
    let contexts = resolve_square(catalog, rho)?;
    let catalog = &*catalog;
    let tally = run_shots(shots, |shot, t| {
        let ctx = Context::ALL[(shot % 6) as usize];
        let mut state = HiddenState::sample(catalog, rho, shot_seed(seed, SINGLE_DOMAIN, shot))?;
        let records = state.measure_resolved_context(catalog, &contexts[ctx.index()], &StateUpdate::Collapse)?;
        let product: f64 = records.iter().map(|r| r.value).product();
        t.record(ctx.name(), product);
        if product != ctx.product() {
            t.record(VIOLATIONS, 1.0);
        }
        Ok(())
    })?;
    Ok(CabelloResult::from_tally(&tally, shots))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequentialOptions {
    /// Contexts measured on each system, in order. Must contain R1 and C1.
    pub order: Vec<Context>,
    /// When false, measurements start a fresh coloring of the unprojected
    /// state instead of collapsing it.
    pub collapse: bool,
}

impl Default for SequentialOptions {
    fn default() -> Self {
        Self {
            order: vec![Context::R1, Context::C1, Context::R2, Context::R3, Context::C2, Context::C3],
            collapse: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequentialResult {
    pub cabello: CabelloResult,
    /// Fraction of shots where A11 reported the same value in R1 and in C1.
    pub a11_agreement_rate: f64,
    pub a11_agreement_se: f64,
}

/// Measures several contexts one after another on the same system.
///
/// A11 is the first member of both R1 and C1; its value in the two contexts
/// is compared on every shot. When every context appears in `options.order`
/// the Cabello sum is estimated from per-shot sums.
pub fn run_cabello_sequential(
    catalog: &mut BasisCatalog,
    rho: &DensityOperator,
    shots: u64,
    seed: u64,
    options: &SequentialOptions,
) -> Result<SequentialResult> {
    check_shots(shots)?;
    if !options.order.contains(&Context::R1) || !options.order.contains(&Context::C1) {
        return Err(Error::Domain("sequential order must include R1 and C1".into()));
    }
    let complete = Context::ALL.iter().all(|c| options.order.contains(c));
    let contexts = resolve_square(catalog, rho)?;
    let catalog = &*catalog;
    let update = if options.collapse { StateUpdate::Collapse } else { StateUpdate::Refresh };
    let tally = run_shots(shots, |shot, t| {
        let mut state = HiddenState::sample(catalog, rho, shot_seed(seed, SEQUENTIAL_DOMAIN, shot))?;
        let mut products = [None; 6];
        let mut a11 = [0.0; 2];
        for &ctx in &options.order {
            let records = state.measure_resolved_context(catalog, &contexts[ctx.index()], &update)?;
            let product: f64 = records.iter().map(|r| r.value).product();
            match ctx {
                Context::R1 => a11[0] = records[0].value,
                Context::C1 => a11[1] = records[0].value,
                _ => {}
            }
            t.record(ctx.name(), product);
            if product != ctx.product() {
                t.record(VIOLATIONS, 1.0);
            }
            products[ctx.index()].get_or_insert(product);
        }
        t.record(AGREE, if a11[0] == a11[1] { 1.0 } else { 0.0 });
        if complete {
            let sum: f64 = Context::ALL.iter().map(|c| c.sign() * products[c.index()].unwrap_or(0.0)).sum();
            t.record(SUM, sum);
        }
        Ok(())
    })?;
    let mut cabello = CabelloResult::from_tally(&tally, shots);
    // Contexts measured on one system are correlated, so the sum's error
    // comes from the per-shot sums rather than from the parts.
    if let Ok((sum, se)) = tally.mean_and_se(SUM) {
        cabello.cabello_sum = sum;
        cabello.cabello_se = se;
    }
    let (a11_agreement_rate, a11_agreement_se) = match tally.mean_and_se(AGREE) {
        Ok(v) => v,
        Err(_) => (tally.mean(AGREE).unwrap_or(f64::NAN), f64::NAN),
    };
    Ok(SequentialResult { cabello, a11_agreement_rate, a11_agreement_se })
}
