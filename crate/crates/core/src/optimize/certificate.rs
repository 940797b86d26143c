use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use super::{DualParams, DualSource, PowerGrid};
use crate::channel::{validate_spec, SystemSpec};
use crate::error::{Error, Result};
use crate::policy::{invariant_policy, PolicyProfile};
use crate::rate::{own_rate, EvalMethod, EvalSettings, SumLaw};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// `N(h, g) − λg` against its value under the threshold policy.
    Entropy,
    /// Levels at or below the threshold: `λ*·g ≥ E[U(h, g)]`.
    AtOrBelowTau,
    /// Levels above the threshold, relative to full power.
    AboveTau,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Entropy => "entropy",
            Condition::AtOrBelowTau => "at_or_below_tau",
            Condition::AboveTau => "above_tau",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateStatus {
    Holds,
    Fails,
    /// Some Monte Carlo confidence interval contains zero.
    Inconclusive,
}

/// Margin of one (level, power) cell; nonnegative when the cell satisfies its
/// condition. For exact evaluation the interval collapses to the margin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MarginEntry {
    /// 1-based ladder level.
    pub level: usize,
    pub g: f64,
    pub condition: Condition,
    pub margin: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateReport {
    pub user: usize,
    pub n_users: usize,
    /// 1-based threshold level of the user's invariant policy.
    pub tau: usize,
    pub lambda: DualParams,
    pub min_margin: f64,
    pub holds: bool,
    pub status: CertificateStatus,
    pub tolerance: f64,
    pub method: EvalMethod,
    pub samples: u64,
    /// Cells whose margin is zero within tolerance.
    pub equality_points: Vec<(usize, f64)>,
    /// Samples needed to resolve every straddling interval, when inconclusive.
    pub required_samples: Option<u64>,
    pub entries: Vec<MarginEntry>,
}

impl CertificateReport {
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        user: usize,
        n_users: usize,
        tau: usize,
        lambda: DualParams,
        entries: Vec<MarginEntry>,
        tolerance: f64,
        method: EvalMethod,
        samples: u64,
        required_samples: Option<u64>,
    ) -> Self {
        let min_margin = entries.iter().map(|e| e.margin).fold(f64::INFINITY, f64::min);
        let status = if entries.iter().all(|e| e.ci_low >= -tolerance) {
            CertificateStatus::Holds
        } else if entries.iter().any(|e| e.ci_high < -tolerance) {
            CertificateStatus::Fails
        } else {
            CertificateStatus::Inconclusive
        };
        let equality_points = entries
            .iter()
            .filter(|e| e.margin.abs() <= tolerance)
            .map(|e| (e.level, e.g))
            .collect();
        Self {
            user,
            n_users,
            tau,
            lambda,
            min_margin,
            holds: status == CertificateStatus::Holds,
            status,
            tolerance,
            method,
            samples,
            equality_points,
            required_samples: if status == CertificateStatus::Inconclusive { required_samples } else { None },
            entries,
        }
    }

    /// Smallest margin among cells of one condition family.
    pub fn min_margin_of(&self, condition: Condition) -> Option<f64> {
        self.entries
            .iter()
            .filter(|e| e.condition == condition)
            .map(|e| e.margin)
            .reduce(f64::min)
    }
}

/// Checks that `λ = N(h^(τ), g_max)/g_max` certifies the threshold policy of
/// user `i` for the entropy-power relaxation: for every level and grid
/// power, `N(h, g) − λg` does not exceed its value under the threshold
/// policy, `max(0, N(h, g_max) − N(h^(τ), g_max))`.
pub fn verify_entropy_dual_certificate(i: usize, spec: &SystemSpec, grid: &PowerGrid) -> Result<CertificateReport> {
    if i >= spec.n_users() {
        return Err(Error::validation("user", format!("index {i} out of range")));
    }
    validate_spec(spec).require()?;
    let user = spec.user(i);
    let inv = invariant_policy(user, spec.ladder())?;
    let grid = grid.rescaled(user.g_max());
    let model = spec.model();
    let g_max = user.g_max();
    let gains = spec.ladder().gains();
    let n_tau = model.eval(gains[inv.tau_index()], g_max);
    let lambda = n_tau / g_max;
    let scale = model.eval(spec.ladder().max_gain(), g_max).max(1.0);
    let tolerance = 1e-12 * scale;
    let entries = gains
        .iter()
        .enumerate()
        .flat_map(|(k, &h)| {
            let bound = (model.eval(h, g_max) - n_tau).max(0.0);
            grid.points().iter().map(move |&g| {
                let margin = bound - (model.eval(h, g) - lambda * g);
                MarginEntry {
                    level: k + 1,
                    g,
                    condition: Condition::Entropy,
                    margin,
                    ci_low: margin,
                    ci_high: margin,
                }
            })
        })
        .collect();
    Ok(CertificateReport::assemble(
        i,
        spec.n_users(),
        inv.tau,
        DualParams {
            lambda,
            source: DualSource::EntropyCertificate,
        },
        entries,
        tolerance,
        EvalMethod::Exact,
        0,
        None,
    ))
}

/// Bonferroni-adjusted two-sided confidence level of the sampled margins.
const CONFIDENCE: f64 = 0.999;

/// Checks the rate-level dual conditions for user `i` when every user plays
/// its invariant policy.
///
/// With `B(g) = E_{-i}[U_i(h^(τ), g)]` and `λ* = B(g_max)/g_max`, the cell
/// margins are `λ*·g − E[U(h, g)]` for levels up to `τ` and
/// `E[U(h, g_max)] − B(g_max) − (E[U(h, g)] − λ*·g)` above it. Sampled
/// margins are averaged per draw of the interference, so their intervals
/// account for the correlation between the terms.
pub fn verify_m_dominating_user(
    i: usize,
    spec: &SystemSpec,
    grid: &PowerGrid,
    settings: &EvalSettings,
) -> Result<CertificateReport> {
    let profile = PolicyProfile::invariant(spec)?;
    let law = SumLaw::of_profile(&profile, spec, Some(i), settings)?;
    Ok(m_dominating_from_law(i, spec, grid, &law, settings.tolerance))
}

pub(crate) fn m_dominating_from_law(
    i: usize,
    spec: &SystemSpec,
    grid: &PowerGrid,
    law: &SumLaw,
    tolerance: f64,
) -> CertificateReport {
    let user = spec.user(i);
    let tau = invariant_policy(user, spec.ladder()).map(|p| p.tau_index()).unwrap_or(0);
    let grid = grid.rescaled(user.g_max());
    let model = spec.model();
    let g_max = user.g_max();
    let gains = spec.ladder().gains();
    let n_tau = model.eval(gains[tau], g_max);
    let lambda = law.expect(|s| own_rate(n_tau, s)) / g_max;

    let cells: Vec<(usize, f64)> = (0..gains.len())
        .flat_map(|k| grid.points().iter().map(move |&g| (k, g)))
        .collect();
    let z = if law.method() == EvalMethod::MonteCarlo {
        let alpha = (1.0 - CONFIDENCE) / cells.len() as f64;
        Normal::standard().inverse_cdf(1.0 - alpha / 2.0)
    } else {
        0.0
    };
    let scored: Vec<(MarginEntry, f64)> = cells
        .par_iter()
        .map(|&(k, g)| {
            let own = model.eval(gains[k], g);
            let w = g / g_max;
            let (condition, (mean, se)) = if k <= tau {
                (Condition::AtOrBelowTau, law.mean_and_stderr(|s| w * own_rate(n_tau, s) - own_rate(own, s)))
            } else {
                let top = model.eval(gains[k], g_max);
                (
                    Condition::AboveTau,
                    law.mean_and_stderr(|s| {
                        let b = own_rate(n_tau, s);
                        (own_rate(top, s) - own_rate(own, s)) + (w * b - b)
                    }),
                )
            };
            let entry = MarginEntry {
                level: k + 1,
                g,
                condition,
                margin: mean,
                ci_low: mean - z * se,
                ci_high: mean + z * se,
            };
            (entry, se)
        })
        .collect();

    // For an interval straddling the tolerance band, the sample count that
    // would shrink it to the distance from its centre.
    let n = law.len() as f64;
    let required = scored
        .iter()
        .filter(|(e, _)| e.ci_low < -tolerance && e.ci_high >= -tolerance)
        .map(|(e, se)| {
            let gap = (e.margin + tolerance).abs().max(f64::MIN_POSITIVE);
            (n * (z * se / gap).powi(2)).ceil()
        })
        .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.max(x))))
        .map(|x| if x >= u64::MAX as f64 { u64::MAX } else { x as u64 });

    CertificateReport::assemble(
        i,
        spec.n_users(),
        tau + 1,
        DualParams {
            lambda,
            source: DualSource::RateCertificate,
        },
        scored.into_iter().map(|(e, _)| e).collect(),
        tolerance,
        law.method(),
        law.len() as u64,
        required,
    )
}

/// Rate-level certificates of every distinct user of `spec`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfileCertificate {
    pub n_users: usize,
    pub min_margin: f64,
    pub holds: bool,
    pub status: CertificateStatus,
    pub reports: Vec<CertificateReport>,
}

pub fn verify_m_dominating(spec: &SystemSpec, grid: &PowerGrid, settings: &EvalSettings) -> Result<ProfileCertificate> {
    let profile = PolicyProfile::invariant(spec)?;
    let reports = spec
        .distinct_users()
        .into_iter()
        .map(|i| {
            let law = SumLaw::of_profile(&profile, spec, Some(i), settings)?;
            Ok(m_dominating_from_law(i, spec, grid, &law, settings.tolerance))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProfileCertificate::from_reports(spec.n_users(), reports))
}

impl ProfileCertificate {
    pub(crate) fn from_reports(n_users: usize, reports: Vec<CertificateReport>) -> Self {
        let min_margin = reports.iter().map(|r| r.min_margin).fold(f64::INFINITY, f64::min);
        let status = if reports.iter().all(|r| r.status == CertificateStatus::Holds) {
            CertificateStatus::Holds
        } else if reports.iter().any(|r| r.status == CertificateStatus::Fails) {
            CertificateStatus::Fails
        } else {
            CertificateStatus::Inconclusive
        };
        Self {
            n_users,
            min_margin,
            holds: status == CertificateStatus::Holds,
            status,
            reports,
        }
    }
}
