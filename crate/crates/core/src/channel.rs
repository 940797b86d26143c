//! Discrete fading environment: gain ladder, per-user stationary laws and
//! budgets, regularity checks and i.i.d. state sampling.

use rayon::prelude::*;
use serde::Serialize;

use crate::entropy_power::{second_differences, EntropyPowerModel};
use crate::error::{Error, Result};
use crate::optimize::PowerGrid;
use crate::rng;

/// Probability vectors must sum to one within this tolerance.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

/// Ordered channel-gain magnitudes `0 = h^(1) < h^(2) < … < h^(K)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GainLadder {
    gains: Vec<f64>,
}

impl GainLadder {
    pub fn new(gains: Vec<f64>) -> Result<Self> {
        if gains.len() < 2 {
            return Err(Error::validation("ladder.gains", "needs at least two levels"));
        }
        if gains[0] != 0.0 {
            return Err(Error::validation("ladder.gains[0]", "the lowest gain must be 0"));
        }
        for (k, w) in gains.windows(2).enumerate() {
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return Err(Error::validation(
                    format!("ladder.gains[{}]", k + 1),
                    "gains must be finite and strictly increasing",
                ));
            }
        }
        Ok(Self { gains })
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Gain of 0-based level `k`.
    pub fn gain(&self, k: usize) -> f64 {
        self.gains[k]
    }

    pub fn max_gain(&self) -> f64 {
        *self.gains.last().expect("at least two levels")
    }
}

/// One transmitter: stationary gain law `pi`, budget `g_bar`, power cap
/// `g_max` and the lower budget bound `g_min` (metadata only).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UserSpec {
    pi: Vec<f64>,
    g_bar: f64,
    g_max: f64,
    g_min: f64,
}

impl UserSpec {
    /// `g_min` defaults to `g_bar`.
    pub fn new(pi: Vec<f64>, g_bar: f64, g_max: f64) -> Result<Self> {
        Self::with_min_budget(pi, g_bar, g_max, g_bar)
    }

    pub fn with_min_budget(pi: Vec<f64>, g_bar: f64, g_max: f64, g_min: f64) -> Result<Self> {
        check_probabilities("pi", &pi)?;
        if !(g_max.is_finite() && g_max > 0.0) {
            return Err(Error::validation("g_max", "must be positive and finite"));
        }
        if !(g_min > 0.0 && g_min <= g_bar) {
            return Err(Error::validation("g_min", "must satisfy 0 < g_min ≤ g_bar"));
        }
        if !(g_bar <= g_max) {
            return Err(Error::validation("g_bar", "must not exceed g_max"));
        }
        Ok(Self { pi, g_bar, g_max, g_min })
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn g_bar(&self) -> f64 {
        self.g_bar
    }

    pub fn g_max(&self) -> f64 {
        self.g_max
    }

    pub fn g_min(&self) -> f64 {
        self.g_min
    }

    /// Probability of the zero-gain level.
    pub fn zero_gain_probability(&self) -> f64 {
        self.pi[0]
    }

    /// Power spent by transmitting `g_max` at every positive gain:
    /// `g_max·Σ_{k≥2} π_k`.
    pub fn full_power_cost(&self) -> f64 {
        self.g_max * self.pi[1..].iter().sum::<f64>()
    }

    /// True when the budget covers full power at every positive gain.
    pub fn is_full_power_regime(&self) -> bool {
        self.g_bar >= self.full_power_cost() - 1e-12 * self.g_max
    }
}

pub(crate) fn check_probabilities(path: &str, pi: &[f64]) -> Result<()> {
    for (k, &p) in pi.iter().enumerate() {
        if !(p.is_finite() && p >= 0.0) {
            return Err(Error::validation(format!("{path}[{k}]"), "probabilities must be finite and nonnegative"));
        }
    }
    let sum: f64 = pi.iter().sum();
    if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
        return Err(Error::validation(path, format!("probabilities sum to {sum}, expected 1")));
    }
    Ok(())
}

/// The full system: shared ladder and model, per-user laws, regularity margin.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemSpec {
    ladder: GainLadder,
    users: Vec<UserSpec>,
    model: EntropyPowerModel,
    eta: f64,
}

impl SystemSpec {
    pub fn new(ladder: GainLadder, users: Vec<UserSpec>, model: EntropyPowerModel, eta: f64) -> Result<Self> {
        if users.is_empty() {
            return Err(Error::validation("users", "at least one user is required"));
        }
        for (i, u) in users.iter().enumerate() {
            if u.pi().len() != ladder.len() {
                return Err(Error::validation(
                    format!("users[{i}].pi"),
                    format!("length {} does not match the {} ladder levels", u.pi().len(), ladder.len()),
                ));
            }
        }
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::validation("eta", "must lie in (0, 1)"));
        }
        if let Some(table) = model.table() {
            if ladder.max_gain() > table.max_gain() {
                return Err(Error::validation("ladder.gains", "exceeds the tabulated gain range"));
            }
            if users.iter().any(|u| u.g_max() > table.max_power()) {
                return Err(Error::validation("users", "g_max exceeds the tabulated power range"));
            }
        }
        Ok(Self { ladder, users, model, eta })
    }

    /// `count` copies of one user.
    pub fn homogeneous(ladder: GainLadder, user: UserSpec, count: usize, model: EntropyPowerModel, eta: f64) -> Result<Self> {
        Self::new(ladder, vec![user; count], model, eta)
    }

    pub fn ladder(&self) -> &GainLadder {
        &self.ladder
    }

    pub fn users(&self) -> &[UserSpec] {
        &self.users
    }

    pub fn user(&self, i: usize) -> &UserSpec {
        &self.users[i]
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn model(&self) -> &EntropyPowerModel {
        &self.model
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn max_g_max(&self) -> f64 {
        self.users.iter().map(UserSpec::g_max).fold(0.0, f64::max)
    }

    /// Same ladder, model and margin with a different user population.
    pub fn with_users(&self, users: Vec<UserSpec>) -> Result<Self> {
        Self::new(self.ladder.clone(), users, self.model.clone(), self.eta)
    }

    /// Indices of the first occurrence of each distinct user specification.
    pub fn distinct_users(&self) -> Vec<usize> {
        let mut reps: Vec<usize> = Vec::new();
        for i in 0..self.users.len() {
            if !reps.iter().any(|&r| self.users[r] == self.users[i]) {
                reps.push(i);
            }
        }
        reps
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZeroGainCheck {
    pub user: usize,
    pub pi_zero: f64,
    /// `1 − η`.
    pub threshold: f64,
    /// `threshold − pi_zero`; must be positive.
    pub slack: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvexityCheck {
    /// 1-based ladder level.
    pub level: usize,
    pub gain: f64,
    pub min_second_difference: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Pass/fail listing of both regularity conditions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub zero_gain: Vec<ZeroGainCheck>,
    pub convexity: Vec<ConvexityCheck>,
}

impl ValidationReport {
    pub fn zero_gain_ok(&self) -> bool {
        self.zero_gain.iter().all(|c| c.pass)
    }

    pub fn convexity_ok(&self) -> bool {
        self.convexity.iter().all(|c| c.pass)
    }

    pub fn passed(&self) -> bool {
        self.zero_gain_ok() && self.convexity_ok()
    }

    /// `Err(Regularity)` naming the first failing condition.
    pub fn require(&self) -> Result<()> {
        if let Some(c) = self.convexity.iter().find(|c| !c.pass) {
            return Err(Error::Regularity(format!(
                "regularity condition 2 fails: N(h, g) is not strictly convex in g at level {} (h = {}); \
                 min second difference {:.3e} ≤ tolerance {:.3e}",
                c.level, c.gain, c.min_second_difference, c.tolerance
            )));
        }
        if let Some(c) = self.zero_gain.iter().find(|c| !c.pass) {
            return Err(Error::Regularity(format!(
                "regularity condition 1 fails for user {}: π(h^(1)) = {} is not below 1 − η = {}",
                c.user, c.pi_zero, c.threshold
            )));
        }
        Ok(())
    }
}

/// Checks both regularity conditions on the default `M = 101` grid.
pub fn validate_spec(spec: &SystemSpec) -> ValidationReport {
    let grid = PowerGrid::uniform(PowerGrid::DEFAULT_POINTS, spec.max_g_max()).expect("positive g_max");
    validate_spec_on(spec, &grid)
}

pub fn validate_spec_on(spec: &SystemSpec, grid: &PowerGrid) -> ValidationReport {
    let threshold = 1.0 - spec.eta();
    let zero_gain = spec
        .users()
        .iter()
        .enumerate()
        .map(|(user, u)| {
            let slack = threshold - u.zero_gain_probability();
            ZeroGainCheck {
                user,
                pi_zero: u.zero_gain_probability(),
                threshold,
                slack,
                pass: slack > 0.0,
            }
        })
        .collect();
    let convexity = spec
        .ladder()
        .gains()
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &gain)| {
            let (diffs, tolerance) =
                second_differences(spec.model(), gain, grid.points()).expect("positive gain on a valid grid");
            let min = diffs.iter().copied().fold(f64::INFINITY, f64::min);
            ConvexityCheck {
                level: k + 1,
                gain,
                min_second_difference: min,
                tolerance,
                pass: tolerance > 0.0 && min > tolerance,
            }
        })
        .collect();
    ValidationReport { zero_gain, convexity }
}

/// Channel states, `levels[user][slot]` holding 0-based ladder indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateMatrix {
    pub levels: Vec<Vec<usize>>,
}

/// Draws `slots` i.i.d. channel states per user from the stationary laws.
///
/// The draw of user `i` at slot `t` comes from the counter-based stream
/// `(seed, i)` at position `t`, so the result does not depend on how the work
/// is split across threads.
pub fn sample_states(spec: &SystemSpec, slots: usize, seed: u64) -> Result<StateMatrix> {
    if slots == 0 {
        return Err(Error::domain("at least one slot is required"));
    }
    const BLOCK: usize = 1 << 14;
    let levels = spec
        .users()
        .par_iter()
        .enumerate()
        .map(|(i, u)| {
            let cumulative = cumulative(u.pi());
            let starts: Vec<usize> = (0..slots).step_by(BLOCK).collect();
            starts
                .par_iter()
                .flat_map_iter(|&start| {
                    let mut r = rng::positioned(seed, rng::stream_id(rng::TAG_STATES, i), start as u64);
                    let end = (start + BLOCK).min(slots);
                    let cumulative = &cumulative;
                    (start..end).map(move |_| rng::pick(cumulative, rng::unit_f64(&mut r)))
                })
                .collect()
        })
        .collect();
    Ok(StateMatrix { levels })
}

/// Cumulative sums with the final entry pinned to exactly 1.
pub(crate) fn cumulative(probs: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = probs
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();
    // Zero-probability trailing entries must never be picked.
    let last_positive = probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1);
    for c in out.iter_mut().skip(last_positive) {
        *c = 1.0;
    }
    out
}
