mod common;

use macpower::channel::sample_states;
use macpower::optimize::{best_response, mu_lower_bound, paley_zygmund};
use macpower::policy::{average_power, invariant_policy, Atom};
use macpower::rate::{
    expected_sum_rate, expected_sum_rate_exact, expected_sum_rate_mc, instantaneous_sum_rate, user_objective,
    EntropyMarginal, StateVector, SumLaw,
};
use macpower::{EntropyPowerModel, EvalSettings, GainLadder, PolicyProfile, PowerGrid, SystemSpec, UserSpec};
use proptest::prelude::*;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 64,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn invariant_policy_spends_the_budget(seed in any::<u64>(), k in 2usize..7, g_max in 0.1f64..10.0) {
        let mut r = common::rng(seed);
        let ladder = common::random_ladder(&mut r, k);
        let user = common::random_threshold_user(&mut r, k, g_max);
        let inv = invariant_policy(&user, &ladder).unwrap();
        let spent = average_power(&inv.base, &user).unwrap();
        prop_assert!((spent - user.g_bar()).abs() <= 1e-12 * g_max.max(1.0));
        prop_assert!(inv.mix_prob >= 0.0 && inv.mix_prob < 1.0);
    }

    #[test]
    fn threshold_falls_as_budget_grows(seed in any::<u64>(), k in 2usize..7) {
        let mut r = common::rng(seed);
        let ladder = common::random_ladder(&mut r, k);
        let pi = common::random_pi(&mut r, k, 0.8);
        let mut last = usize::MAX;
        for step in 1..=40 {
            let user = UserSpec::new(pi.clone(), step as f64 / 40.0, 1.0).unwrap();
            let tau = invariant_policy(&user, &ladder).unwrap().tau;
            prop_assert!(tau <= last);
            last = tau;
        }
    }

    #[test]
    fn rate_lies_between_log_bounds(h in 0.0f64..4.0, g in 0.0f64..5.0) {
        let ladder = GainLadder::new(vec![0.0, h.max(1e-9)]).unwrap();
        let model = EntropyPowerModel::gaussian_power_law(2.0, 1.0).unwrap();
        let x = ladder.gain(1).powi(2) * g;
        let u = instantaneous_sum_rate(&model, &ladder, &StateVector::new(vec![1], vec![g]).unwrap()).unwrap();
        prop_assert!(x / (2.0 * (1.0 + x)) <= u + 1e-15);
        prop_assert!(u <= x / 2.0 + 1e-15);
    }

    #[test]
    fn sum_rate_splits_into_own_and_rest(seed in any::<u64>(), n in 2usize..4, p in 0.5f64..1.9) {
        let mut r = common::rng(seed);
        let k = r.random_range(2..=4);
        let spec = common::random_spec(&mut r, k, n, p);
        let profile = PolicyProfile::invariant(&spec).unwrap();
        let settings = EvalSettings::exact();
        let total = expected_sum_rate(&profile, &spec, &settings).unwrap().value;
        for i in 0..n {
            let own = user_objective(i, &profile, &spec, &settings).unwrap().value;
            let rest = SumLaw::of_profile(&profile, &spec, Some(i), &settings).unwrap().expect(|s| 0.5 * s.ln_1p());
            prop_assert!((total - own - rest).abs() <= 1e-12);
        }
    }

    #[test]
    fn paley_zygmund_bound_holds(seed in any::<u64>(), atoms in 1usize..8) {
        let mut r = common::rng(seed);
        let w: Vec<f64> = (0..atoms).map(|_| r.random_range(0.01..1.0)).collect();
        let total: f64 = w.iter().sum();
        let law: Vec<Atom> = w.iter().map(|x| Atom::new(r.random_range(0.0..3.0), x / total)).collect();
        let pz = paley_zygmund(&law);
        prop_assert!(pz.probability + 1e-12 >= pz.bound);
    }

    #[test]
    fn mu_bounds_exact_best_responses(seed in any::<u64>(), n in 1usize..4, p in 0.5f64..1.9) {
        let mut r = common::rng(seed);
        let k = r.random_range(2..=4);
        let spec = common::random_spec(&mut r, k, n, p);
        let grid = PowerGrid::uniform(41, spec.max_g_max()).unwrap();
        let profile = PolicyProfile::invariant(&spec).unwrap();
        for i in 0..n {
            let mu = mu_lower_bound(i, &spec).unwrap();
            let br = best_response(i, &profile, &spec, &grid, &EvalSettings::exact()).unwrap();
            let mean = EntropyMarginal::new(spec.model(), spec.ladder(), spec.user(i).pi(), &br.policy).mean();
            prop_assert!(mu > 0.0 && mean >= mu, "mean {} mu {}", mean, mu);
        }
    }

    #[test]
    fn best_response_value_grows_with_budget(seed in any::<u64>(), n in 1usize..4) {
        let mut r = common::rng(seed);
        let k = r.random_range(2..=3);
        let ladder = common::random_ladder(&mut r, k);
        let grid = PowerGrid::uniform(9, 1.0).unwrap();
        let model = EntropyPowerModel::gaussian_power_law(1.0, 1.0).unwrap();
        let (spec, policies) = common::spec_with_opponents(&mut r, ladder, model, &grid, n);
        let profile = PolicyProfile::new(policies);
        let base = spec.user(0).clone();
        let mut last = f64::NEG_INFINITY;
        for step in 1..=10 {
            let user = UserSpec::new(base.pi().to_vec(), step as f64 / 10.0, 1.0).unwrap();
            let mut users = spec.users().to_vec();
            users[0] = user;
            let spec = spec.with_users(users).unwrap();
            let v = best_response(0, &profile, &spec, &grid, &EvalSettings::exact()).unwrap().value;
            prop_assert!(v >= last - 1e-12);
            last = v;
        }
    }

    #[test]
    fn best_response_beats_every_feasible_grid_policy(seed in any::<u64>(), n in 1usize..4) {
        let mut r = common::rng(seed);
        let k = r.random_range(2..=3);
        let ladder = common::random_ladder(&mut r, k);
        let grid = PowerGrid::uniform(7, 1.0).unwrap();
        let model = EntropyPowerModel::gaussian_power_law(r.random_range(0.5..1.9), 1.0).unwrap();
        let (spec, policies) = common::spec_with_opponents(&mut r, ladder, model, &grid, n);
        let mut profile = PolicyProfile::new(policies);
        let settings = EvalSettings::exact();
        let br = best_response(0, &profile, &spec, &grid, &settings).unwrap();
        prop_assert!(br.budget_used <= spec.user(0).g_bar() + 1e-12);
        profile.replace(0, br.policy.clone());
        let achieved = user_objective(0, &profile, &spec, &settings).unwrap().value;
        prop_assert!((achieved - br.value).abs() <= 1e-12);
        let pi = spec.user(0).pi().to_vec();
        for _ in 0..50 {
            let candidate = common::random_grid_policy(&mut r, k, &grid);
            if common::mean_power(&candidate, &pi) > spec.user(0).g_bar() {
                continue;
            }
            profile.replace(0, candidate);
            let v = user_objective(0, &profile, &spec, &settings).unwrap().value;
            prop_assert!(v <= br.value + 1e-12);
        }
    }
}

#[test]
fn sampled_states_follow_the_gain_law() {
    let ladder = GainLadder::new(vec![0.0, 0.4, 0.9, 1.7]).unwrap();
    let pi = vec![0.1, 0.2, 0.3, 0.4];
    let user = UserSpec::new(pi.clone(), 0.5, 1.0).unwrap();
    let model = EntropyPowerModel::gaussian_power_law(1.0, 1.0).unwrap();
    let spec = SystemSpec::homogeneous(ladder, user, 3, model, 0.05).unwrap();
    let slots = 100_000;
    let states = sample_states(&spec, slots, 11).unwrap();
    let quantile = ChiSquared::new(3.0).unwrap().inverse_cdf(0.999);
    for row in &states.levels {
        let mut counts = [0usize; 4];
        row.iter().for_each(|&k| counts[k] += 1);
        let chi2: f64 = counts
            .iter()
            .zip(&pi)
            .map(|(&c, &p)| (c as f64 - p * slots as f64).powi(2) / (p * slots as f64))
            .sum();
        assert!(chi2 < quantile, "chi2 {chi2} ≥ {quantile}");
    }
    assert_ne!(states.levels[0], states.levels[1]);
}

#[test]
fn monte_carlo_agrees_with_exact() {
    let ladder = GainLadder::new(vec![0.0, 0.5, 1.0]).unwrap();
    let user = UserSpec::new(vec![0.2, 0.3, 0.5], 0.6, 1.0).unwrap();
    let model = EntropyPowerModel::gaussian_power_law(1.0, 1.0).unwrap();
    let spec = SystemSpec::homogeneous(ladder, user, 5, model, 0.5).unwrap();
    let profile = PolicyProfile::invariant(&spec).unwrap();
    let exact = expected_sum_rate_exact(&profile, &spec, 10_000_000).unwrap().value;
    let within = (0..100)
        .filter(|&seed| {
            let mc = expected_sum_rate_mc(&profile, &spec, 20_000, seed).unwrap();
            (mc.value - exact).abs() <= 4.0 * mc.stderr
        })
        .count();
    assert!(within >= 99, "{within} of 100 seeds within 4 sigma");
}

#[test]
fn monte_carlo_ignores_thread_count() {
    let ladder = GainLadder::new(vec![0.0, 0.5, 1.0]).unwrap();
    let user = UserSpec::new(vec![0.2, 0.3, 0.5], 0.6, 1.0).unwrap();
    let model = EntropyPowerModel::gaussian_power_law(1.0, 1.0).unwrap();
    let spec = SystemSpec::homogeneous(ladder, user, 7, model, 0.5).unwrap();
    let profile = PolicyProfile::invariant(&spec).unwrap();
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            (
                expected_sum_rate_mc(&profile, &spec, 70_000, 5).unwrap(),
                sample_states(&spec, 40_000, 5).unwrap(),
            )
        })
    };
    let (a, sa) = run(1);
    let (b, sb) = run(5);
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    assert_eq!(sa, sb);
}
