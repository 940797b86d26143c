#![allow(dead_code)]

use macpower::policy::{make_grid_policy, Atom};
use macpower::{EntropyPowerModel, GainLadder, Policy, PowerGrid, SystemSpec, UserSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `0 = h^(1) < h^(2) < …` with `k` levels.
pub fn random_ladder(r: &mut ChaCha8Rng, k: usize) -> GainLadder {
    let mut gains = vec![0.0];
    for _ in 1..k {
        let last = *gains.last().unwrap();
        gains.push(last + r.random_range(0.1..1.5));
    }
    GainLadder::new(gains).unwrap()
}

/// Gain law with `π(h^(1)) ≤ max_zero`.
pub fn random_pi(r: &mut ChaCha8Rng, k: usize, max_zero: f64) -> Vec<f64> {
    let zero = r.random_range(0.0..max_zero);
    let w: Vec<f64> = (1..k).map(|_| r.random_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    let mut pi = vec![zero];
    pi.extend(w.iter().map(|x| x / total * (1.0 - zero)));
    pi
}

/// User in the threshold regime: budget strictly below the full-power cost.
pub fn random_threshold_user(r: &mut ChaCha8Rng, k: usize, g_max: f64) -> UserSpec {
    let pi = random_pi(r, k, 0.8);
    let cost = g_max * pi[1..].iter().sum::<f64>();
    let g_bar = cost * r.random_range(0.02..0.98);
    UserSpec::new(pi, g_bar, g_max).unwrap()
}

pub fn random_spec(r: &mut ChaCha8Rng, k: usize, n: usize, p: f64) -> SystemSpec {
    let ladder = random_ladder(r, k);
    let g_max = r.random_range(0.5..2.0);
    let users = (0..n).map(|_| random_threshold_user(r, k, g_max)).collect();
    SystemSpec::new(ladder, users, EntropyPowerModel::gaussian_power_law(p, 1.0).unwrap(), 0.05).unwrap()
}

/// Random one- or two-atom grid policy at every level.
pub fn random_grid_policy(r: &mut ChaCha8Rng, k: usize, grid: &PowerGrid) -> Policy {
    let g = grid.points();
    let levels = (0..k)
        .map(|_| {
            let a = g[r.random_range(0..g.len())];
            if r.random_bool(0.5) {
                vec![Atom::new(a, 1.0)]
            } else {
                let b = g[r.random_range(0..g.len())];
                let w = r.random_range(0.1..0.9);
                vec![Atom::new(a, w), Atom::new(b, 1.0 - w)]
            }
        })
        .collect();
    make_grid_policy(levels, grid.max()).unwrap()
}

pub fn mean_power(policy: &Policy, pi: &[f64]) -> f64 {
    policy.levels().iter().zip(pi).map(|(d, p)| p * d.mean()).sum()
}

/// Spec in which users `1..n` play `others` and carry budgets they satisfy;
/// user 0 has a random threshold-regime budget.
pub fn spec_with_opponents(
    r: &mut ChaCha8Rng,
    ladder: GainLadder,
    model: EntropyPowerModel,
    grid: &PowerGrid,
    n: usize,
) -> (SystemSpec, Vec<Policy>) {
    let k = ladder.len();
    let g_max = grid.max();
    let mut users = vec![random_threshold_user(r, k, g_max)];
    let mut policies = vec![Policy::silent(k)];
    for _ in 1..n {
        let pi = random_pi(r, k, 0.8);
        let policy = random_grid_policy(r, k, grid);
        let g_bar = (mean_power(&policy, &pi) * 1.000001).clamp(1e-3 * g_max, g_max);
        users.push(UserSpec::new(pi, g_bar, g_max).unwrap());
        policies.push(policy);
    }
    (SystemSpec::new(ladder, users, model, 0.05).unwrap(), policies)
}
