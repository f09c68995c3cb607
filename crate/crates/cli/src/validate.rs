use nbproc_core::distributions::RandomSource;
use nbproc_core::models::{Fault, ModelKind};
use nbproc_core::validation::{
    crt_exact_identities, crt_sampler_agreement, gamma_nb_hdp_reduction, geweke_outcome, geweke_suite,
    nb_augmentation_equivalence, poisson_multinomial_equivalence, CheckOutcome, POISSON_MULTINOMIAL_DRAWS,
};

use crate::error::CliError;

const IDENTITY_DRAWS: usize = 100_000;
const GEWEKE_DRAWS: usize = 50_000;
const QUICK_GEWEKE_DRAWS: usize = 5_000;
const CRT_M_MAX: u64 = 50;

#[derive(Clone, Debug, PartialEq)]
pub struct ValidateOptions {
    pub quick: bool,
    pub fault: Option<Fault>,
    pub seed: u64,
    pub models: Vec<ModelKind>,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self { quick: false, fault: None, seed: 0, models: ModelKind::ALL.to_vec() }
    }
}

/// Identity checks followed by one Geweke run per model. Quick mode only
/// shortens the Geweke chains; the identity tolerances need the full draws.
pub fn run_checks(opts: &ValidateOptions) -> Result<Vec<CheckOutcome>, CliError> {
    let root = RandomSource::new(opts.seed);
    let fail = |e: nbproc_core::distributions::DistError| CliError::Failed(e.to_string());
    let mut outcomes = vec![
        crt_exact_identities(CRT_M_MAX).map_err(fail)?,
        crt_sampler_agreement(IDENTITY_DRAWS, &mut root.child(0)).map_err(fail)?,
    ];
    outcomes.extend(nb_augmentation_equivalence(IDENTITY_DRAWS, &mut root.child(1)).map_err(fail)?);
    outcomes.push(poisson_multinomial_equivalence(POISSON_MULTINOMIAL_DRAWS, &mut root.child(2)).map_err(fail)?);
    outcomes.push(gamma_nb_hdp_reduction(IDENTITY_DRAWS, &mut root.child(3)).map_err(fail)?);

    let draws = if opts.quick { QUICK_GEWEKE_DRAWS } else { GEWEKE_DRAWS };
    let reports = geweke_suite(&opts.models, draws, opts.fault, &root.child(4))?;
    outcomes.extend(reports.iter().map(geweke_outcome));
    Ok(outcomes)
}

/// Fixed-width pass/fail table.
pub fn render_table(outcomes: &[CheckOutcome]) -> String {
    let width = outcomes.iter().map(|o| o.name.len()).max().unwrap_or(5).max(5);
    let mut out = format!("{:<6} {:<width$} detail\n", "status", "check");
    for o in outcomes {
        let status = if o.passed { "PASS" } else { "FAIL" };
        out.push_str(&format!("{status:<6} {:<width$} {}\n", o.name, o.detail));
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    out.push_str(&format!("{} checks, {failed} failed\n", outcomes.len()));
    out
}
