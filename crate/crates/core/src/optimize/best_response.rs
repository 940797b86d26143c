use rayon::prelude::*;
use serde::Serialize;

use super::{DualParams, DualSource, PowerGrid};
use crate::channel::{SystemSpec, UserSpec};
use crate::error::{Error, Result};
use crate::policy::{AtomicDistribution, Policy, PolicyProfile};
use crate::rate::{expected_sum_rate, own_rate, EvalMethod, EvalSettings, SumLaw};

/// `values[k][m] = E_{-i}[U_i(h^(k+1), g_m)]`: the user's expected payoff for
/// a fixed own state, averaged over everybody else.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PayoffTable {
    pub grid: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub method: EvalMethod,
    pub samples: u64,
}

pub fn conditional_payoff_table(
    i: usize,
    profile: &PolicyProfile,
    spec: &SystemSpec,
    grid: &PowerGrid,
    settings: &EvalSettings,
) -> Result<PayoffTable> {
    if i >= spec.n_users() {
        return Err(Error::validation("user", format!("index {i} out of range for {} users", spec.n_users())));
    }
    let law = SumLaw::of_profile(profile, spec, Some(i), settings)?;
    Ok(table_from_law(&law, spec, spec.user(i), grid))
}

pub(crate) fn table_from_law(law: &SumLaw, spec: &SystemSpec, user: &UserSpec, grid: &PowerGrid) -> PayoffTable {
    let grid = grid.rescaled(user.g_max());
    let model = spec.model();
    let values = spec
        .ladder()
        .gains()
        .iter()
        .map(|&h| {
            grid.points()
                .par_iter()
                .map(|&g| {
                    let own = model.eval(h, g);
                    if own == 0.0 {
                        0.0
                    } else {
                        law.expect(|s| own_rate(own, s))
                    }
                })
                .collect()
        })
        .collect();
    PayoffTable {
        grid: grid.points().to_vec(),
        values,
        method: law.method(),
        samples: law.len() as u64,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BestResponseResult {
    pub policy: Policy,
    /// `T_i` of the returned policy.
    pub value: f64,
    /// Multiplier found by bisection; absent for the enumeration oracle.
    pub lambda: Option<DualParams>,
    pub budget_used: f64,
    /// Whether the average power constraint binds.
    pub active: bool,
}

/// Best grid-supported response of user `i` to the rest of `profile`.
pub fn best_response(
    i: usize,
    profile: &PolicyProfile,
    spec: &SystemSpec,
    grid: &PowerGrid,
    settings: &EvalSettings,
) -> Result<BestResponseResult> {
    let table = conditional_payoff_table(i, profile, spec, grid, settings)?;
    best_response_from_table(&table, spec.user(i))
}

const BISECTION_ITERATIONS: usize = 200;

/// Solves the per-user linear program over grid-supported policies through
/// its Lagrangian dual.
///
/// For a multiplier `λ` each level independently maximizes
/// `C[k][m] − λ·g_m` (ties go to the smaller power). `λ` is bisected until
/// the pointwise maximizers bracket the budget; the levels whose choice
/// differs across the final bracket are switched one by one, and the one
/// that would overshoot is split into a two-atom mixture meeting the budget
/// exactly.
pub fn best_response_from_table(table: &PayoffTable, user: &UserSpec) -> Result<BestResponseResult> {
    check_table(table, user)?;
    let (pi, g_bar, g) = (user.pi(), user.g_bar(), &table.grid);
    let tolerance = 1e-10 * user.g_max();
    let power = |choice: &[usize]| -> f64 { choice.iter().zip(pi).map(|(&m, &w)| w * g[m]).sum() };

    let free = pointwise_argmax(table, 0.0);
    let free_power = power(&free);
    if free_power <= g_bar {
        return Ok(pure_result(table, user, &free, None));
    }

    let peak = table.values.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
    let (mut lo, mut hi) = (0.0, 2.0 * peak / g[1] + f64::MIN_POSITIVE);
    let mut hi_choice = pointwise_argmax(table, hi);
    let mut lo_choice = free;
    for _ in 0..BISECTION_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let choice = pointwise_argmax(table, mid);
        let used = power(&choice);
        if used > g_bar {
            lo = mid;
            lo_choice = choice;
        } else {
            hi = mid;
            hi_choice = choice;
            if g_bar - used <= tolerance {
                break;
            }
        }
    }
    let dual = Some(DualParams {
        lambda: hi,
        source: DualSource::Bisection,
    });
    let mut used = power(&hi_choice);
    if g_bar - used <= tolerance {
        return Ok(pure_result(table, user, &hi_choice, dual));
    }

    let mut levels: Vec<AtomicDistribution> = hi_choice.iter().map(|&m| AtomicDistribution::point(g[m])).collect();
    let mut value: f64 = hi_choice.iter().enumerate().map(|(k, &m)| pi[k] * table.values[k][m]).sum();
    for k in 0..pi.len() {
        let (a, b) = (hi_choice[k], lo_choice[k]);
        if a == b {
            continue;
        }
        let extra = pi[k] * (g[b] - g[a]);
        let gain = pi[k] * (table.values[k][b] - table.values[k][a]);
        if used + extra <= g_bar {
            levels[k] = AtomicDistribution::point(g[b]);
            used += extra;
            value += gain;
        } else {
            let w = (g_bar - used) / extra;
            levels[k] = AtomicDistribution::mixture(g[a], g[b], w);
            used = g_bar;
            value += w * gain;
            break;
        }
    }
    Ok(BestResponseResult {
        policy: Policy::from_levels(levels),
        value,
        lambda: dual,
        budget_used: used,
        active: true,
    })
}

fn check_table(table: &PayoffTable, user: &UserSpec) -> Result<()> {
    if table.values.len() != user.pi().len() {
        return Err(Error::validation("table", "level count does not match the user law"));
    }
    if table.grid.len() < 2 || table.values.iter().any(|row| row.len() != table.grid.len()) {
        return Err(Error::validation("table", "row length does not match the grid"));
    }
    Ok(())
}

fn pointwise_argmax(table: &PayoffTable, lambda: f64) -> Vec<usize> {
    table
        .values
        .iter()
        .map(|row| {
            let mut best = 0;
            let mut best_value = row[0] - lambda * table.grid[0];
            for (m, (&c, &g)) in row.iter().zip(&table.grid).enumerate().skip(1) {
                let v = c - lambda * g;
                if v > best_value {
                    best = m;
                    best_value = v;
                }
            }
            best
        })
        .collect()
}

fn pure_result(table: &PayoffTable, user: &UserSpec, choice: &[usize], lambda: Option<DualParams>) -> BestResponseResult {
    let pi = user.pi();
    let value = choice.iter().enumerate().map(|(k, &m)| pi[k] * table.values[k][m]).sum();
    let budget_used = choice.iter().zip(pi).map(|(&m, &w)| w * table.grid[m]).sum();
    BestResponseResult {
        policy: Policy::from_levels(choice.iter().map(|&m| AtomicDistribution::point(table.grid[m])).collect()),
        value,
        lambda,
        budget_used,
        active: lambda.is_some(),
    }
}

/// Enumeration oracle refuses beyond this many candidate vertices.
const BRUTE_FORCE_CAP: f64 = 5e6;

/// Exhaustive search over the vertices of the per-user linear program: one
/// grid atom per level, plus candidates where a single level mixes two grid
/// atoms so that the budget is met with equality.
pub fn brute_force_best_response(
    i: usize,
    profile: &PolicyProfile,
    spec: &SystemSpec,
    grid: &PowerGrid,
    settings: &EvalSettings,
) -> Result<BestResponseResult> {
    let table = conditional_payoff_table(i, profile, spec, grid, settings)?;
    brute_force_from_table(&table, spec.user(i))
}

pub fn brute_force_from_table(table: &PayoffTable, user: &UserSpec) -> Result<BestResponseResult> {
    check_table(table, user)?;
    let (pi, g_bar, g, c) = (user.pi(), user.g_bar(), &table.grid, &table.values);
    let (k_levels, m) = (pi.len(), g.len());
    let pure = (m as f64).powi(k_levels as i32);
    let vertices = pure * (1.0 + k_levels as f64 * (m * m) as f64 / (2.0 * m as f64));
    if vertices > BRUTE_FORCE_CAP {
        return Err(Error::SizeCap(format!(
            "{vertices:.3e} candidate vertices for K = {k_levels}, M = {m} (cap {BRUTE_FORCE_CAP:.0e})"
        )));
    }
    let slack = 1e-12 * user.g_max();
    let mut best: Option<(f64, Vec<AtomicDistribution>, f64)> = None;
    let mut consider = |value: f64, levels: &dyn Fn() -> Vec<AtomicDistribution>, used: f64| {
        if best.as_ref().is_none_or(|(v, _, _)| value > *v) {
            best = Some((value, levels(), used));
        }
    };

    let mut choice = vec![0usize; k_levels];
    loop {
        let used: f64 = choice.iter().zip(pi).map(|(&j, &w)| w * g[j]).sum();
        if used <= g_bar + slack {
            let value = choice.iter().enumerate().map(|(k, &j)| pi[k] * c[k][j]).sum();
            consider(value, &|| choice.iter().map(|&j| AtomicDistribution::point(g[j])).collect(), used);
        }
        // Mixtures at level k between atoms a < b; the atom recorded in
        // `choice[k]` is ignored.
        for k in 0..k_levels {
            if pi[k] <= 0.0 || choice[k] != 0 {
                continue;
            }
            let rest: f64 = (0..k_levels).filter(|&l| l != k).map(|l| pi[l] * g[choice[l]]).sum();
            let rest_value: f64 = (0..k_levels).filter(|&l| l != k).map(|l| pi[l] * c[l][choice[l]]).sum();
            for a in 0..m {
                for b in a + 1..m {
                    let low = rest + pi[k] * g[a];
                    let high = rest + pi[k] * g[b];
                    if !(low <= g_bar && g_bar < high) {
                        continue;
                    }
                    let w = (g_bar - low) / (high - low);
                    let value = rest_value + pi[k] * ((1.0 - w) * c[k][a] + w * c[k][b]);
                    let levels = || {
                        (0..k_levels)
                            .map(|l| {
                                if l == k {
                                    AtomicDistribution::mixture(g[a], g[b], w)
                                } else {
                                    AtomicDistribution::point(g[choice[l]])
                                }
                            })
                            .collect()
                    };
                    consider(value, &levels, g_bar);
                }
            }
        }
        // Next assignment in odometer order.
        let mut k = 0;
        loop {
            if k == k_levels {
                let (value, levels, used) = best.ok_or_else(|| Error::SearchFailure("no feasible vertex".into()))?;
                return Ok(BestResponseResult {
                    policy: Policy::from_levels(levels),
                    value,
                    lambda: None,
                    budget_used: used,
                    active: used >= g_bar - 1e-10 * user.g_max(),
                });
            }
            choice[k] += 1;
            if choice[k] < m {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

/// Sum rate after each round of round-robin best responses.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub round: usize,
    pub profile: PolicyProfile,
    pub sum_rate: f64,
}

/// Starting from `initial`, lets every user in turn replace its policy by a
/// best response, for `rounds` rounds. Nothing is claimed about convergence
/// or monotonicity of the sum rate; the trajectory is only recorded.
pub fn iterated_best_response(
    initial: &PolicyProfile,
    spec: &SystemSpec,
    grid: &PowerGrid,
    rounds: usize,
    settings: &EvalSettings,
) -> Result<Vec<TrajectoryPoint>> {
    if rounds == 0 {
        return Err(Error::domain("at least one round is required"));
    }
    let mut profile = initial.clone();
    let mut trajectory = Vec::with_capacity(rounds + 1);
    trajectory.push(TrajectoryPoint {
        round: 0,
        profile: profile.clone(),
        sum_rate: expected_sum_rate(&profile, spec, settings)?.value,
    });
    for round in 1..=rounds {
        for i in 0..spec.n_users() {
            let response = best_response(i, &profile, spec, grid, settings)?;
            profile.replace(i, response.policy);
        }
        trajectory.push(TrajectoryPoint {
            round,
            profile: profile.clone(),
            sum_rate: expected_sum_rate(&profile, spec, settings)?.value,
        });
    }
    Ok(trajectory)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::GainLadder;
    use crate::entropy_power::EntropyPowerModel;
    use crate::policy::{full_power_policy, Atom};

    fn single_user(p: f64, g_bar: f64) -> SystemSpec {
        let ladder = GainLadder::new(vec![0.0, 1.0]).unwrap();
        let user = UserSpec::new(vec![0.5, 0.5], g_bar, 1.0).unwrap();
        let model = EntropyPowerModel::gaussian_power_law(p, 1.0).unwrap();
        SystemSpec::homogeneous(ladder, user, 1, model, 0.1).unwrap()
    }

    fn respond(spec: &SystemSpec, m: usize) -> BestResponseResult {
        let grid = PowerGrid::uniform(m, 1.0).unwrap();
        let profile = PolicyProfile::new(vec![Policy::silent(spec.ladder().len())]);
        best_response(0, &profile, spec, &grid, &EvalSettings::exact()).unwrap()
    }

    #[test]
    fn empty_interference_table() {
        let spec = single_user(2.0, 0.5);
        let grid = PowerGrid::uniform(11, 1.0).unwrap();
        let profile = PolicyProfile::new(vec![Policy::silent(2)]);
        let t = conditional_payoff_table(0, &profile, &spec, &grid, &EvalSettings::exact()).unwrap();
        for (m, &g) in t.grid.iter().enumerate() {
            assert_eq!(t.values[0][m], 0.0);
            assert!((t.values[1][m] - 0.5 * (1.0 + g).ln()).abs() < 1e-15);
        }
    }

    #[test]
    fn convex_single_user_mixes() {
        let r = respond(&single_user(1.0, 0.25), 101);
        assert!((r.value - 0.125561).abs() < 1e-6);
        assert_eq!(r.policy.level(1).atoms(), &[Atom::new(0.0, 0.5), Atom::new(1.0, 0.5)]);
        assert!((r.budget_used - 0.25).abs() < 1e-12);
        assert!(r.active);
        let deterministic = 0.5 * 0.5 * (1.0 + 2.0 * std::f64::consts::E / std::f64::consts::PI * 0.25).ln();
        assert!((deterministic - 0.089878).abs() < 1e-6);
        assert!(r.value > deterministic);
    }

    #[test]
    fn affine_single_user_is_deterministic() {
        let r = respond(&single_user(2.0, 0.5), 101);
        assert_eq!(r.policy.level(1).atoms(), &[Atom::new(1.0, 1.0)]);
        assert!((r.value - 0.25 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn slack_budget_gives_full_power() {
        let spec = single_user(1.0, 0.5);
        let r = respond(&spec, 101);
        assert_eq!(r.policy, full_power_policy(spec.user(0), spec.ladder()));
        assert_eq!(r.lambda, None);
        assert!(!r.active);
    }

    #[test]
    fn oracle_matches_on_fixture() {
        let spec = single_user(1.0, 0.25);
        let grid = PowerGrid::uniform(9, 1.0).unwrap();
        let profile = PolicyProfile::new(vec![Policy::silent(2)]);
        let settings = EvalSettings::exact();
        let fast = best_response(0, &profile, &spec, &grid, &settings).unwrap();
        let slow = brute_force_best_response(0, &profile, &spec, &grid, &settings).unwrap();
        assert!((fast.value - slow.value).abs() < 1e-12);
        let big = PowerGrid::uniform(2000, 1.0).unwrap();
        assert!(matches!(
            brute_force_best_response(0, &profile, &spec, &big, &settings),
            Err(Error::SizeCap(_))
        ));
    }

    #[test]
    fn two_point_grid_is_threshold_family() {
        let spec = single_user(1.0, 0.25);
        let grid = PowerGrid::uniform(2, 1.0).unwrap();
        let profile = PolicyProfile::new(vec![Policy::silent(2)]);
        let r = brute_force_best_response(0, &profile, &spec, &grid, &EvalSettings::exact()).unwrap();
        assert_eq!(r.policy.level(1).atoms(), &[Atom::new(0.0, 0.5), Atom::new(1.0, 0.5)]);
    }

    #[test]
    fn single_user_dynamics_converge_in_one_round() {
        let spec = single_user(1.0, 0.25);
        let grid = PowerGrid::uniform(21, 1.0).unwrap();
        let start = PolicyProfile::new(vec![Policy::silent(2)]);
        let settings = EvalSettings::exact();
        let path = iterated_best_response(&start, &spec, &grid, 2, &settings).unwrap();
        let direct = best_response(0, &start, &spec, &grid, &settings).unwrap();
        assert_eq!(path.len(), 3);
        assert_eq!(path[1].profile.policy(0), &direct.policy);
        assert_eq!(path[2].profile, path[1].profile);
    }
}
