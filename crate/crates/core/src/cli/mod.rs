//! Config-driven experiment runner behind the `macpower` binary.
//!
//! Exit codes: 0 success, 2 configuration or validation error, 3 regularity
//! refusal, 4 inconclusive Monte Carlo certificate.

mod config;
mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub use config::{Experiment, ExperimentConfig, Resolved};
pub use output::to_json;

use crate::channel::validate_spec;
use crate::error::{Error, Result};
use crate::optimize::{
    best_response, brute_force_best_response, find_n_star, moment_decay, mu_lower_bound,
    verify_entropy_dual_certificate, verify_m_dominating, CertificateReport, CertificateStatus, PowerGrid,
    ProfileCertificate,
};
use crate::policy::{average_power, invariant_policy, PolicyProfile, ProfileDocument};
use crate::rate::{expected_sum_rate, user_objective, MethodChoice};
use output::{emit, number, write_csv};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_REGULARITY: i32 = 3;
pub const EXIT_INCONCLUSIVE: i32 = 4;

/// Environment variable fixing the worker thread count.
pub const THREADS_VAR: &str = "MACPOWER_THREADS";

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Regularity(_) => EXIT_REGULARITY,
            Error::Inconclusive(_) => EXIT_INCONCLUSIVE,
            _ => EXIT_VALIDATION,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "macpower", version, about = "Invariant power allocation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Invariant threshold policy of every distinct user.
    Policy {
        #[command(flatten)]
        common: Common,
        /// Refuse (exit 3) unless both regularity conditions hold.
        #[arg(long)]
        require_regularity: bool,
    },
    /// Expected sum rate of a profile, or one user's objective.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Profile document; every user plays its invariant policy otherwise.
        #[arg(long)]
        profile: Option<PathBuf>,
        /// Evaluate this user's objective instead of the sum rate.
        #[arg(long)]
        user: Option<usize>,
    },
    /// Best response of one user to the rest of a profile.
    BestResponse {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long)]
        user: Option<usize>,
        /// Cross-check against exhaustive vertex enumeration.
        #[arg(long)]
        verify: bool,
    },
    /// Sweep the number of users and locate the invariance threshold.
    FindNstar {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n_min: Option<usize>,
        #[arg(long)]
        n_max: Option<usize>,
        /// Per-size summary (one row per tested size).
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Per-cell margins.
        #[arg(long)]
        margins_csv: Option<PathBuf>,
    },
    /// Entropy-level and rate-level dual certificates.
    Certificate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = CertificateKind::Both)]
        kind: CertificateKind,
        #[arg(long)]
        margins_csv: Option<PathBuf>,
    },
    /// μ bounds and interference-moment decay.
    Bounds {
        #[command(flatten)]
        common: Common,
        /// Comma-separated system sizes.
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        /// Comma-separated moment orders.
        #[arg(long, value_delimiter = ',')]
        orders: Option<Vec<u32>>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Exact,
    Mc,
    Convolve,
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CertificateKind {
    Entropy,
    Rate,
    Both,
}

impl Common {
    fn load(&self) -> Result<(ExperimentConfig, Resolved)> {
        let config = ExperimentConfig::from_path(&self.config)?;
        let mut resolved = config.resolve()?;
        if let Some(seed) = self.seed {
            resolved.settings.seed = seed;
        }
        if let Some(m) = self.method {
            resolved.settings.method = match m {
                MethodArg::Exact => MethodChoice::Exact,
                MethodArg::Mc => MethodChoice::MonteCarlo,
                MethodArg::Convolve => MethodChoice::Convolve,
                MethodArg::Auto => MethodChoice::Auto,
            };
        }
        Ok((config, resolved))
    }

    fn out(&self) -> Option<&Path> {
        self.out.as_deref()
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Errors are reported on stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return EXIT_VALIDATION;
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn main() {
    std::process::exit(run(std::env::args_os()));
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .map_err(|_| Error::validation(THREADS_VAR, format!("expected a thread count, got {value:?}")))?;
    // A second initialization (in-process callers) keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Policy {
            common,
            require_regularity,
        } => cmd_policy(&common, require_regularity),
        Command::Evaluate { common, profile, user } => cmd_evaluate(&common, profile.as_deref(), user),
        Command::BestResponse {
            common,
            profile,
            user,
            verify,
        } => cmd_best_response(&common, profile.as_deref(), user, verify),
        Command::FindNstar {
            common,
            n_min,
            n_max,
            csv,
            margins_csv,
        } => cmd_find_nstar(&common, n_min, n_max, csv.as_deref(), margins_csv.as_deref()),
        Command::Certificate {
            common,
            kind,
            margins_csv,
        } => cmd_certificate(&common, kind, margins_csv.as_deref()),
        Command::Bounds {
            common,
            sizes,
            orders,
            csv,
        } => cmd_bounds(&common, sizes, orders, csv.as_deref()),
    }
}

#[derive(Serialize)]
struct PolicyEntry {
    user: usize,
    tau: usize,
    mix_prob: f64,
    regime: crate::policy::Regime,
    average_power: f64,
    policy: crate::policy::Policy,
}

fn cmd_policy(common: &Common, require_regularity: bool) -> Result<i32> {
    let (_, r) = common.load()?;
    let report = validate_spec(&r.spec);
    if require_regularity {
        report.require()?;
    }
    let entries = r
        .spec
        .distinct_users()
        .into_iter()
        .map(|i| {
            let u = r.spec.user(i);
            let inv = invariant_policy(u, r.spec.ladder())?;
            Ok(PolicyEntry {
                user: i,
                tau: inv.tau,
                mix_prob: inv.mix_prob,
                regime: inv.regime,
                average_power: average_power(&inv.base, u)?,
                policy: inv.base,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut err = std::io::stderr().lock();
    writeln!(err, "{:>6} {:>4} {:>14} {:>14}  regime", "user", "tau", "mix_prob", "avg_power")?;
    for e in &entries {
        writeln!(
            err,
            "{:>6} {:>4} {:>14} {:>14}  {:?}",
            e.user,
            e.tau,
            number(e.mix_prob),
            number(e.average_power),
            e.regime
        )?;
    }

    #[derive(Serialize)]
    struct Out<'a> {
        regularity_passed: bool,
        users: &'a [PolicyEntry],
    }
    emit(
        &to_json(&Out {
            regularity_passed: report.passed(),
            users: &entries,
        })?,
        common.out(),
    )?;
    Ok(EXIT_OK)
}

fn load_profile(path: Option<&Path>, r: &Resolved) -> Result<PolicyProfile> {
    match path {
        Some(p) => {
            let doc: ProfileDocument =
                serde_json::from_str(&std::fs::read_to_string(p)?).map_err(|e| Error::validation("profile", e.to_string()))?;
            PolicyProfile::from_document(doc, &r.spec)
        }
        None => PolicyProfile::invariant(&r.spec),
    }
}

fn cmd_evaluate(common: &Common, profile: Option<&Path>, user: Option<usize>) -> Result<i32> {
    let (_, r) = common.load()?;
    let profile = load_profile(profile, &r)?;
    let result = match user {
        Some(i) => user_objective(i, &profile, &r.spec, &r.settings)?,
        None => expected_sum_rate(&profile, &r.spec, &r.settings)?,
    };
    emit(&to_json(&result)?, common.out())?;
    Ok(EXIT_OK)
}

fn cmd_best_response(common: &Common, profile: Option<&Path>, user: Option<usize>, verify: bool) -> Result<i32> {
    let (config, r) = common.load()?;
    let profile = load_profile(profile, &r)?;
    let i = user
        .or(match config.experiment {
            Some(Experiment::BestResponse { user }) => Some(user),
            _ => None,
        })
        .unwrap_or(0);
    let result = best_response(i, &profile, &r.spec, &r.grid, &r.settings)?;

    #[derive(Serialize)]
    struct Out {
        user: usize,
        #[serde(flatten)]
        result: crate::optimize::BestResponseResult,
        verification: Option<Verification>,
    }
    let verification = if verify {
        Some(verify_against_oracle(i, &profile, &r, &result)?)
    } else {
        None
    };
    emit(
        &to_json(&Out {
            user: i,
            result,
            verification,
        })?,
        common.out(),
    )?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct Verification {
    grid_points: usize,
    value: f64,
    oracle_value: f64,
    difference: f64,
    agrees: bool,
}

/// Compares the optimizer with exhaustive enumeration. Enumeration grows
/// like `M^K`, so when the configured grid is too fine both solvers are rerun
/// on the densest coarser uniform grid the oracle accepts.
fn verify_against_oracle(
    i: usize,
    profile: &PolicyProfile,
    r: &Resolved,
    full: &crate::optimize::BestResponseResult,
) -> Result<Verification> {
    let mut m = r.grid.len();
    loop {
        let (grid, value) = if m == r.grid.len() {
            (r.grid.clone(), full.value)
        } else {
            let grid = PowerGrid::uniform(m, r.grid.max())?;
            let value = best_response(i, profile, &r.spec, &grid, &r.settings)?.value;
            (grid, value)
        };
        match brute_force_best_response(i, profile, &r.spec, &grid, &r.settings) {
            Ok(oracle) => {
                let difference = value - oracle.value;
                return Ok(Verification {
                    grid_points: m,
                    value,
                    oracle_value: oracle.value,
                    difference,
                    agrees: difference.abs() <= 1e-9 * value.abs().max(1.0),
                });
            }
            Err(Error::SizeCap(_)) if m > 2 => m = (m / 2).max(2),
            Err(e) => return Err(e),
        }
    }
}

fn cmd_find_nstar(
    common: &Common,
    n_min: Option<usize>,
    n_max: Option<usize>,
    csv: Option<&Path>,
    margins_csv: Option<&Path>,
) -> Result<i32> {
    let (config, r) = common.load()?;
    let (default_min, default_max) = match config.experiment {
        Some(Experiment::FindNstar { n_min, n_max }) => (n_min, n_max),
        _ => (1, r.spec.n_users()),
    };
    let n_min = n_min.unwrap_or(default_min);
    let n_max = n_max.unwrap_or(default_max);
    let report = find_n_star(&r.template, n_min, n_max, &r.grid, &r.settings)?;
    if let Some(path) = csv {
        write_csv(
            path,
            &["n_users", "min_margin", "min_margin_at_or_below_tau", "min_margin_above_tau", "holds", "status"],
            report.sweep.iter().map(|e| {
                vec![
                    e.n_users.to_string(),
                    number(e.min_margin),
                    e.min_margin_at_or_below_tau.map(number).unwrap_or_default(),
                    e.min_margin_above_tau.map(number).unwrap_or_default(),
                    e.holds.to_string(),
                    status_name(e.status).to_string(),
                ]
            }),
        )?;
    }
    if let Some(path) = margins_csv {
        write_csv(
            path,
            &MARGIN_HEADER,
            report.margins.iter().map(|m| {
                vec![
                    m.n_users.to_string(),
                    m.level.to_string(),
                    number(m.g),
                    m.condition.as_str().to_string(),
                    number(m.margin),
                    number(m.ci_low),
                    number(m.ci_high),
                ]
            }),
        )?;
    }
    emit(&to_json(&report)?, common.out())?;
    let inconclusive = report.sweep.iter().any(|e| e.status == CertificateStatus::Inconclusive);
    Ok(if inconclusive && report.n_star.is_none() { EXIT_INCONCLUSIVE } else { EXIT_OK })
}

const MARGIN_HEADER: [&str; 7] = ["n_users", "level", "g", "condition", "margin", "ci_low", "ci_high"];

fn status_name(s: CertificateStatus) -> &'static str {
    match s {
        CertificateStatus::Holds => "holds",
        CertificateStatus::Fails => "fails",
        CertificateStatus::Inconclusive => "inconclusive",
    }
}

fn cmd_certificate(common: &Common, kind: CertificateKind, margins_csv: Option<&Path>) -> Result<i32> {
    let (_, r) = common.load()?;
    let entropy: Option<Vec<CertificateReport>> = match kind {
        CertificateKind::Rate => None,
        _ => Some(
            r.spec
                .distinct_users()
                .into_iter()
                .map(|i| verify_entropy_dual_certificate(i, &r.spec, &r.grid))
                .collect::<Result<_>>()?,
        ),
    };
    let rate: Option<ProfileCertificate> = match kind {
        CertificateKind::Entropy => None,
        _ => Some(verify_m_dominating(&r.spec, &r.grid, &r.settings)?),
    };
    if let Some(path) = margins_csv {
        let reports = entropy.iter().flatten().chain(rate.iter().flat_map(|p| &p.reports));
        let rows: Vec<Vec<String>> = reports
            .flat_map(|rep| {
                rep.entries.iter().map(move |e| {
                    vec![
                        rep.n_users.to_string(),
                        e.level.to_string(),
                        number(e.g),
                        e.condition.as_str().to_string(),
                        number(e.margin),
                        number(e.ci_low),
                        number(e.ci_high),
                    ]
                })
            })
            .collect();
        write_csv(path, &MARGIN_HEADER, rows)?;
    }

    #[derive(Serialize)]
    struct Out<'a> {
        entropy: Option<&'a [CertificateReport]>,
        rate: Option<&'a ProfileCertificate>,
    }
    emit(
        &to_json(&Out {
            entropy: entropy.as_deref(),
            rate: rate.as_ref(),
        })?,
        common.out(),
    )?;
    match &rate {
        Some(p) if p.status == CertificateStatus::Inconclusive => {
            let hint = p.reports.iter().filter_map(|r| r.required_samples).max();
            eprintln!(
                "certificate inconclusive: a confidence interval contains zero{}",
                hint.map(|n| format!("; about {n} samples would resolve it")).unwrap_or_default()
            );
            Ok(EXIT_INCONCLUSIVE)
        }
        _ => Ok(EXIT_OK),
    }
}

fn cmd_bounds(common: &Common, sizes: Option<Vec<usize>>, orders: Option<Vec<u32>>, csv: Option<&Path>) -> Result<i32> {
    let (config, r) = common.load()?;
    let (default_sizes, default_orders) = match config.experiment {
        Some(Experiment::Bounds { sizes, orders }) => (sizes, orders),
        _ => (config::default_sizes(), config::default_orders()),
    };
    let sizes = sizes.unwrap_or(default_sizes);
    let orders = orders.unwrap_or(default_orders);

    #[derive(Serialize)]
    struct Mu {
        user: usize,
        mu: f64,
        full_power_regime: bool,
    }
    let mu = r
        .spec
        .distinct_users()
        .into_iter()
        .map(|i| {
            Ok(Mu {
                user: i,
                mu: mu_lower_bound(i, &r.spec)?,
                full_power_regime: r.spec.user(i).is_full_power_regime(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let decay = moment_decay(
        r.spec.ladder(),
        r.spec.model(),
        r.spec.user(0),
        r.spec.eta(),
        &sizes,
        &orders,
        &r.settings,
    )?;
    if let Some(path) = csv {
        write_csv(
            path,
            &["n_users", "k", "estimate", "stderr"],
            decay.rows.iter().map(|row| {
                vec![row.n_users.to_string(), row.k.to_string(), number(row.estimate), number(row.stderr)]
            }),
        )?;
    }

    #[derive(Serialize)]
    struct Out<'a> {
        mu_bounds: &'a [Mu],
        n0: f64,
        moment_decay: &'a crate::optimize::MomentDecay,
    }
    emit(
        &to_json(&Out {
            mu_bounds: &mu,
            n0: r.settings.n0,
            moment_decay: &decay,
        })?,
        common.out(),
    )?;
    Ok(EXIT_OK)
}
