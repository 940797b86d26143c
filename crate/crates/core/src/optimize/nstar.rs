use rayon::prelude::*;
use serde::Serialize;

use super::certificate::{verify_m_dominating, CertificateStatus, Condition, ProfileCertificate};
use super::PowerGrid;
use crate::channel::{validate_spec, GainLadder, SystemSpec, UserSpec};
use crate::entropy_power::EntropyPowerModel;
use crate::error::{Error, Result};
use crate::rate::EvalSettings;

/// Blueprint for systems of any size: users are drawn from `users` in
/// cyclic order, so a single entry gives a homogeneous system.
#[derive(Clone, Debug, PartialEq)]
pub struct SpecTemplate {
    pub ladder: GainLadder,
    pub users: Vec<UserSpec>,
    pub model: EntropyPowerModel,
    pub eta: f64,
}

impl SpecTemplate {
    pub fn homogeneous(ladder: GainLadder, user: UserSpec, model: EntropyPowerModel, eta: f64) -> Self {
        Self {
            ladder,
            users: vec![user],
            model,
            eta,
        }
    }

    pub fn cycle(ladder: GainLadder, users: Vec<UserSpec>, model: EntropyPowerModel, eta: f64) -> Result<Self> {
        if users.is_empty() {
            return Err(Error::validation("users", "the template needs at least one user"));
        }
        Ok(Self {
            ladder,
            users,
            model,
            eta,
        })
    }

    /// Template cycling through the users of `spec`.
    pub fn from_spec(spec: &SystemSpec) -> Self {
        let distinct = spec.distinct_users();
        let users = if distinct.len() == 1 {
            vec![spec.user(0).clone()]
        } else {
            spec.users().to_vec()
        };
        Self {
            ladder: spec.ladder().clone(),
            users,
            model: spec.model().clone(),
            eta: spec.eta(),
        }
    }

    pub fn instantiate(&self, n: usize) -> Result<SystemSpec> {
        if n == 0 {
            return Err(Error::domain("a system needs at least one user"));
        }
        let users = self.users.iter().cycle().take(n).cloned().collect();
        SystemSpec::new(self.ladder.clone(), users, self.model.clone(), self.eta)
    }
}

/// Outcome of the rate certificate at one system size.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepEntry {
    pub n_users: usize,
    pub min_margin: f64,
    pub min_margin_at_or_below_tau: Option<f64>,
    pub min_margin_above_tau: Option<f64>,
    pub holds: bool,
    pub status: CertificateStatus,
}

/// One cell of the margin table, worst case over the distinct users.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarginRow {
    pub n_users: usize,
    pub level: usize,
    pub g: f64,
    pub condition: Condition,
    pub margin: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NStarReport {
    /// Smallest tested size from which the certificate holds at every larger
    /// tested size.
    pub n_star: Option<usize>,
    pub tested_range: [usize; 2],
    pub persistence: bool,
    pub sweep: Vec<SweepEntry>,
    #[serde(skip)]
    pub margins: Vec<MarginRow>,
}

/// Sweeps the system size over `n_min..=n_max` and locates the invariance
/// threshold. Every size in the range is checked; margins are not assumed to
/// be monotone in the number of users.
pub fn find_n_star(
    template: &SpecTemplate,
    n_min: usize,
    n_max: usize,
    grid: &PowerGrid,
    settings: &EvalSettings,
) -> Result<NStarReport> {
    if n_min == 0 || n_min > n_max {
        return Err(Error::validation("n_range", format!("invalid range [{n_min}, {n_max}]")));
    }
    let probe = template.instantiate(n_max.min(n_min.max(template.users.len())))?;
    validate_spec(&probe).require()?;

    let certificates: Vec<ProfileCertificate> = (n_min..=n_max)
        .into_par_iter()
        .map(|n| verify_m_dominating(&template.instantiate(n)?, grid, settings))
        .collect::<Result<_>>()?;

    let sweep: Vec<SweepEntry> = certificates.iter().map(sweep_entry).collect();
    let margins = certificates.iter().flat_map(margin_rows).collect();
    let suffix = sweep.iter().rev().take_while(|e| e.holds).count();
    let n_star = (suffix > 0).then(|| sweep[sweep.len() - suffix].n_users);
    Ok(NStarReport {
        n_star,
        tested_range: [n_min, n_max],
        persistence: n_star.is_some(),
        sweep,
        margins,
    })
}

fn sweep_entry(c: &ProfileCertificate) -> SweepEntry {
    let family = |condition| {
        c.reports
            .iter()
            .filter_map(|r| r.min_margin_of(condition))
            .reduce(f64::min)
    };
    SweepEntry {
        n_users: c.n_users,
        min_margin: c.min_margin,
        min_margin_at_or_below_tau: family(Condition::AtOrBelowTau),
        min_margin_above_tau: family(Condition::AboveTau),
        holds: c.holds,
        status: c.status,
    }
}

fn margin_rows(c: &ProfileCertificate) -> Vec<MarginRow> {
    let Some(first) = c.reports.first() else {
        return Vec::new();
    };
    (0..first.entries.len())
        .map(|j| {
            let worst = c
                .reports
                .iter()
                .map(|r| &r.entries[j])
                .min_by(|a, b| a.ci_low.total_cmp(&b.ci_low))
                .unwrap();
            MarginRow {
                n_users: c.n_users,
                level: worst.level,
                g: worst.g,
                condition: worst.condition,
                margin: worst.margin,
                ci_low: worst.ci_low,
                ci_high: worst.ci_high,
            }
        })
        .collect()
}

/// Thresholds found for several single-user laws sharing one model, to probe
/// how much `N*` depends on the gain statistics and the budget.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NStarSpread {
    pub n_stars: Vec<Option<usize>>,
    pub min: Option<usize>,
    pub max: Option<usize>,
}

#[allow(clippy::too_many_arguments)]
pub fn nstar_spread(
    ladder: &GainLadder,
    model: &EntropyPowerModel,
    eta: f64,
    variants: &[UserSpec],
    n_min: usize,
    n_max: usize,
    grid: &PowerGrid,
    settings: &EvalSettings,
) -> Result<NStarSpread> {
    let n_stars = variants
        .iter()
        .map(|u| {
            let template = SpecTemplate::homogeneous(ladder.clone(), u.clone(), model.clone(), eta);
            find_n_star(&template, n_min, n_max, grid, settings).map(|r| r.n_star)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NStarSpread {
        min: n_stars.iter().flatten().min().copied(),
        max: n_stars.iter().flatten().max().copied(),
        n_stars,
    })
}
