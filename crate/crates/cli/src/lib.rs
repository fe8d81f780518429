//! Command-line front end: `analyze` and `reproduce-paper`.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use coincidence::bayes::chain_both_conventions;
use coincidence::case::{builtin_case, parse_case, pool_wards, CaseFile, Variant, WardRoster};
use coincidence::frequentist::{
    bonferroni_min, convolved_sum_test, elffers_pipeline, fisher_combine_wards, pooled_test,
    ward_tail_p,
};
use coincidence::poisson::{
    conditional_binomial_test, estimate_mu, lr_poisson, IntensityBasis, SuspectIntensity,
};
use coincidence::relative_risk::{derive_sim_config, simulate_max_rr, DEFAULT_REPLICATES, DEFAULT_SEED};
use coincidence::report::{describe_wards, AnalysisReport, MethodResult, ResultEntry};
use coincidence::reproduce::{render_rows, reproduce_paper};

#[derive(Debug, Parser)]
#[command(
    name = "coincidence",
    version,
    about = "Evaluate coincidences between a nurse's shifts and ward incidents",
    after_help = "\
Examples:
  coincidence analyze --builtin corrected --method convolved
  coincidence analyze --builtin original --method elffers --jkz-multiplier 27
  coincidence analyze case.toml --method poisson-lr --mu-basis include-suspect
  coincidence reproduce-paper --seed 7"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one analysis on a case file or a built-in roster
    Analyze(AnalyzeArgs),
    /// Recompute every published figure for the reference roster
    ReproducePaper {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Elffers,
    PerWard,
    Bonferroni,
    Pooled,
    Convolved,
    Fisher,
    PoissonLr,
    BinomialCond,
    Bayes,
    RelativeRisk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Original,
    Corrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputArg {
    Text,
    Machine,
}

#[derive(Debug, clap::Args)]
pub struct AnalyzeArgs {
    /// Case file (same as --case)
    #[arg(conflicts_with_all = ["case", "builtin"])]
    pub case_path: Option<PathBuf>,

    #[arg(long, conflicts_with = "builtin")]
    pub case: Option<PathBuf>,

    /// Built-in reference roster
    #[arg(long, value_enum)]
    pub builtin: Option<VariantArg>,

    #[arg(long, value_enum)]
    pub method: MethodArg,

    /// Comma-separated ward names; the default depends on the method
    #[arg(long, value_delimiter = ',')]
    pub wards: Option<Vec<String>>,

    /// Post-hoc multiplier for the first ward (required by `elffers`)
    #[arg(long)]
    pub jkz_multiplier: Option<u64>,

    /// exclude-suspect, include-suspect or fixed=<incidents per shift>
    #[arg(long, default_value = "exclude-suspect", value_parser = parse_mu_basis)]
    pub mu_basis: IntensityBasis,

    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    #[arg(long, default_value_t = DEFAULT_REPLICATES)]
    pub replicates: u64,

    /// Prior probability of the prosecution hypothesis (bayes)
    #[arg(long, default_value_t = 1e-5)]
    pub prior: f64,

    #[arg(long, value_enum, default_value = "text")]
    pub output: OutputArg,
}

pub fn parse_mu_basis(s: &str) -> Result<IntensityBasis, String> {
    match s {
        "exclude-suspect" => Ok(IntensityBasis::ExcludeSuspect),
        "include-suspect" => Ok(IntensityBasis::IncludeSuspect),
        other => match other.strip_prefix("fixed=") {
            Some(v) => v
                .parse::<f64>()
                .ok()
                .filter(|mu| mu.is_finite() && *mu > 0.0)
                .map(IntensityBasis::Fixed)
                .ok_or_else(|| format!("`{v}` is not a positive intensity")),
            None => Err(format!(
                "unknown basis `{other}` (expected exclude-suspect, include-suspect or fixed=<v>)"
            )),
        },
    }
}

/// Exit status plus what would go to stdout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub status: i32,
    pub stdout: String,
}

pub fn load_case(args: &AnalyzeArgs) -> Result<CaseFile> {
    if let Some(v) = args.builtin {
        return Ok(builtin_case(match v {
            VariantArg::Original => Variant::Original,
            VariantArg::Corrected => Variant::Corrected,
        }));
    }
    let path = args
        .case
        .as_ref()
        .or(args.case_path.as_ref())
        .ok_or_else(|| anyhow!("give a case file or --builtin <original|corrected>"))?;
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read case file {}", path.display()))?;
    parse_case(&text).with_context(|| format!("invalid case file {}", path.display()))
}

/// Wards used when `--wards` is absent. Combining methods leave out the first
/// ward, the one whose data raised the suspicion in the first place.
fn default_wards(case: &CaseFile, method: MethodArg) -> Vec<String> {
    let names: Vec<String> = case.wards.iter().map(|w| w.name.clone()).collect();
    match method {
        MethodArg::Elffers | MethodArg::PerWard | MethodArg::Bayes => names,
        MethodArg::Bonferroni => case
            .wards
            .iter()
            .filter(|w| w.nurse_count.is_some())
            .map(|w| w.name.clone())
            .collect(),
        _ if names.len() > 1 => names[1..].to_vec(),
        _ => names,
    }
}

pub fn analyze(args: &AnalyzeArgs) -> Result<AnalysisReport> {
    let case = load_case(args)?;
    let wards = args.wards.clone().unwrap_or_else(|| default_wards(&case, args.method));
    if wards.is_empty() {
        bail!("no wards selected; pass --wards");
    }
    let selected = wards
        .iter()
        .map(|n| case.ward(n).map_err(anyhow::Error::from))
        .collect::<Result<Vec<&WardRoster>>>()?;
    let inputs = describe_wards(&selected);
    let mut report = AnalysisReport::for_case(&case);

    match args.method {
        MethodArg::Elffers => {
            let m = args
                .jkz_multiplier
                .ok_or_else(|| anyhow!("--method elffers needs an explicit --jkz-multiplier"))?;
            let sub = CaseFile {
                wards: selected.iter().map(|w| (*w).clone()).collect(),
                ..case.clone()
            };
            let t = elffers_pipeline(&sub, &wards[0], m)?;
            report.push(ResultEntry::new(
                format!("product of per-ward tails, {} x {m}", wards[0]),
                format!("{inputs}|multiplier={m}"),
                MethodResult::Test(t),
            ));
        }
        MethodArg::PerWard => {
            for w in &selected {
                report.push(ResultEntry::new(
                    format!("tail probability, {}", w.name),
                    describe_wards(&[w]),
                    MethodResult::Test(ward_tail_p(w)?),
                ));
            }
        }
        MethodArg::Bonferroni => {
            for w in &selected {
                let nurses = w.require_nurse_count()?;
                let tail = ward_tail_p(w)?.value();
                report.push(ResultEntry::new(
                    format!("Bonferroni over {nurses} nurses, {}", w.name),
                    format!("{}|nurses={nurses}", describe_wards(&[w])),
                    MethodResult::Test(bonferroni_min(&[tail], nurses)?),
                ));
            }
        }
        MethodArg::Pooled => report.push(ResultEntry::new(
            format!("pooled tail, {}", wards.join("+")),
            inputs,
            MethodResult::Test(pooled_test(&case, &wards)?),
        )),
        MethodArg::Convolved => report.push(ResultEntry::new(
            format!("sum of independent ward counts, {}", wards.join(", ")),
            inputs,
            MethodResult::Test(convolved_sum_test(&case, &wards)?),
        )),
        MethodArg::Fisher => report.push(ResultEntry::new(
            format!("Fisher combination, {}", wards.join(", ")),
            inputs,
            MethodResult::Test(fisher_combine_wards(&case, &wards)?),
        )),
        MethodArg::PoissonLr => {
            let pool = pool_wards(&case, &wards)?;
            let mu = estimate_mu(&pool, args.mu_basis, None)?;
            let mu_l = SuspectIntensity::observed_rate(pool.suspect_incidents, pool.suspect_shifts)?;
            let lr = lr_poisson(&mu, &mu_l, pool.suspect_shifts, pool.suspect_incidents)?;
            report.push(ResultEntry::new(
                format!("Poisson likelihood ratio, {}", pool.name),
                format!("{inputs}|basis={}", args.mu_basis),
                MethodResult::LikelihoodRatio {
                    lr,
                    intensity: mu,
                    mu_l: mu_l.mu_l(),
                },
            ));
        }
        MethodArg::BinomialCond => {
            let pool = pool_wards(&case, &wards)?;
            report.push(ResultEntry::new(
                format!("conditional binomial test, {}", pool.name),
                inputs,
                MethodResult::Test(conditional_binomial_test(&pool, None)?),
            ));
        }
        MethodArg::Bayes => {
            if case.evidence.is_empty() {
                bail!("the case file has no [[evidence]] entries");
            }
            let evidence_inputs = case
                .evidence
                .iter()
                .map(|e| format!("{}={}", e.label, e.lr))
                .collect::<Vec<_>>()
                .join(";");
            for (convention, state) in chain_both_conventions(args.prior, &case.evidence)? {
                report.push(ResultEntry::new(
                    format!("posterior odds ({})", convention.describe()),
                    format!("prior={}|{evidence_inputs}|{convention:?}", args.prior),
                    MethodResult::Odds {
                        convention,
                        prior_probability: args.prior,
                        state,
                    },
                ));
            }
        }
        MethodArg::RelativeRisk => {
            let pool = pool_wards(&case, &wards)?;
            let derived = derive_sim_config(&pool, args.mu_basis, args.replicates, args.seed)?;
            let sim = simulate_max_rr(&derived.config, derived.observed_rr.value)?;
            report.push(ResultEntry::new(
                format!("largest relative risk, {} (observed {})", pool.name, derived.observed_rr.value),
                format!(
                    "{inputs}|basis={}|replicates={}|seed={}",
                    args.mu_basis, args.replicates, args.seed
                ),
                MethodResult::Simulation {
                    derived: Box::new(derived),
                    report: sim,
                },
            ));
        }
    }
    Ok(report)
}

pub fn execute(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Analyze(args) => {
            let report = analyze(args)?;
            let stdout = match args.output {
                OutputArg::Text => report.render_text(),
                OutputArg::Machine => report.render_machine(),
            };
            Ok(Outcome { status: 0, stdout })
        }
        Command::ReproducePaper { seed } => {
            let rows = reproduce_paper(*seed)?;
            let status = if rows.iter().all(|r| r.pass) { 0 } else { 1 };
            Ok(Outcome {
                status,
                stdout: render_rows(&rows, *seed),
            })
        }
    }
}

/// Parses `args` (including the program name) and runs the command. Errors
/// become a nonzero status with the message on stdout's place.
pub fn run_cli<I, T>(args: I) -> (Outcome, Option<String>)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let status = if e.use_stderr() { 2 } else { 0 };
            return (
                Outcome {
                    status,
                    stdout: if status == 0 { e.to_string() } else { String::new() },
                },
                (status != 0).then(|| e.to_string()),
            );
        }
    };
    match execute(&cli) {
        Ok(outcome) => (outcome, None),
        Err(e) => (
            Outcome {
                status: 1,
                stdout: String::new(),
            },
            Some(format!("error: {e:#}")),
        ),
    }
}
