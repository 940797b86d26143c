//! Sum-rate lower bound, its expectation under a policy profile, per-user
//! objectives and interference moments.
//!
//! Every expectation here is an expectation of some function of the
//! aggregate entropy power `S = Σ_j N(h_j, G_j)` of a set of independent
//! users. [`SumLaw`] holds the law of `S`, obtained in one of three ways:
//! exact enumeration of the merged support, a fixed-bucket histogram
//! convolution, or Monte Carlo sampling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{cumulative, GainLadder, SystemSpec};
use crate::entropy_power::EntropyPowerModel;
use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;
use crate::policy::{Policy, PolicyProfile};
use crate::rng;

/// One channel realization: ladder indices (0-based) and transmit powers.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub levels: Vec<usize>,
    pub powers: Vec<f64>,
}

impl StateVector {
    pub fn new(levels: Vec<usize>, powers: Vec<f64>) -> Result<Self> {
        if levels.len() != powers.len() {
            return Err(Error::validation("powers", "length differs from levels"));
        }
        if let Some(i) = powers.iter().position(|g| !(*g >= 0.0 && g.is_finite())) {
            return Err(Error::validation(format!("powers[{i}]"), "power must be finite and nonnegative"));
        }
        Ok(Self { levels, powers })
    }
}

/// `½·ln(1 + Σ_i N(h_i, g_i))`.
pub fn instantaneous_sum_rate(model: &EntropyPowerModel, ladder: &GainLadder, state: &StateVector) -> Result<f64> {
    if let Some(i) = state.levels.iter().position(|&k| k >= ladder.len()) {
        return Err(Error::validation(format!("levels[{i}]"), "ladder index out of range"));
    }
    let terms = state
        .levels
        .iter()
        .zip(&state.powers)
        .map(|(&k, &g)| model.scaled_entropy_power(ladder.gain(k), g))
        .collect::<Result<Vec<_>>>()?;
    Ok(0.5 * pairwise_sum(&terms).ln_1p())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMethod {
    Exact,
    MonteCarlo,
    Convolve,
}

/// An expectation together with its Monte Carlo standard error.
///
/// `samples` is the sample count for Monte Carlo, the number of support
/// points of the aggregate law for exact enumeration and the bucket count for
/// convolution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EvalResult {
    pub value: f64,
    pub stderr: f64,
    pub method: EvalMethod,
    pub samples: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    Exact,
    #[serde(alias = "mc")]
    MonteCarlo,
    Convolve,
    /// Exact enumeration while it fits, convolution otherwise.
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalSettings {
    pub method: MethodChoice,
    pub samples: u64,
    pub seed: u64,
    /// Largest merged support exact enumeration may build.
    pub enumeration_cap: usize,
    pub buckets: usize,
    /// Under [`MethodChoice::Auto`], systems with more users are convolved
    /// right away.
    pub exact_max_users: Option<usize>,
    /// Noise floor added to the aggregate entropy power in interference
    /// moments.
    pub n0: f64,
    /// Certificate margins down to `-tolerance` count as nonnegative.
    pub tolerance: f64,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            method: MethodChoice::Auto,
            samples: 100_000,
            seed: 0,
            enumeration_cap: 10_000_000,
            buckets: 1 << 14,
            exact_max_users: None,
            n0: 1.0,
            tolerance: 1e-12,
        }
    }
}

impl EvalSettings {
    pub fn exact() -> Self {
        Self {
            method: MethodChoice::Exact,
            ..Self::default()
        }
    }

    pub fn monte_carlo(samples: u64, seed: u64) -> Self {
        Self {
            method: MethodChoice::MonteCarlo,
            samples,
            seed,
            ..Self::default()
        }
    }

    pub fn convolve() -> Self {
        Self {
            method: MethodChoice::Convolve,
            ..Self::default()
        }
    }
}

/// Law of one user's entropy power `N(h, G)` under its policy.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropyMarginal {
    pub values: Vec<f64>,
    pub probs: Vec<f64>,
}

impl EntropyMarginal {
    pub fn new(model: &EntropyPowerModel, ladder: &GainLadder, pi: &[f64], policy: &Policy) -> Self {
        let mut pairs: Vec<(f64, f64)> = policy
            .levels()
            .iter()
            .zip(pi)
            .enumerate()
            .flat_map(|(k, (level, &w))| {
                let h = ladder.gain(k);
                level.atoms().iter().map(move |a| (h, a.g, w * a.p))
            })
            .filter(|&(_, _, p)| p > 0.0)
            .map(|(h, g, p)| (model.eval(h, g), p))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut values: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut probs: Vec<f64> = Vec::with_capacity(pairs.len());
        for (v, p) in pairs {
            if values.last() == Some(&v) {
                *probs.last_mut().unwrap() += p;
            } else {
                values.push(v);
                probs.push(p);
            }
        }
        Self { values, probs }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().zip(&self.probs).map(|(v, p)| v * p).sum()
    }

    fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

/// Law of the aggregate entropy power of a set of users.
#[derive(Clone, Debug)]
pub struct SumLaw {
    points: Vec<f64>,
    /// Empty for Monte Carlo samples, which are equally weighted.
    weights: Vec<f64>,
    method: EvalMethod,
}

/// Support points closer than this (relative) are merged during exact
/// enumeration; they only differ through summation order.
const MERGE_TOLERANCE: f64 = 1e-13;

const MC_BLOCK: usize = 1 << 14;

impl SumLaw {
    /// Exact law of the sum; refuses when the merged support exceeds `cap`.
    pub fn exact(marginals: &[EntropyMarginal], cap: usize) -> Result<Self> {
        let mut points = vec![0.0];
        let mut weights = vec![1.0];
        for m in marginals {
            // Bound the pre-merge buffer as well as the merged support.
            if points.len().saturating_mul(m.values.len()) > cap.saturating_mul(8) {
                return Err(cap_error(marginals, cap));
            }
            let mut next: Vec<(f64, f64)> = points
                .iter()
                .zip(&weights)
                .flat_map(|(&s, &w)| m.values.iter().zip(&m.probs).map(move |(&v, &p)| (s + v, w * p)))
                .collect();
            next.sort_by(|a, b| a.0.total_cmp(&b.0));
            points.clear();
            weights.clear();
            for (s, w) in next {
                match points.last() {
                    Some(&last) if s - last <= MERGE_TOLERANCE * last.abs().max(1.0) => {
                        *weights.last_mut().unwrap() += w;
                    }
                    _ => {
                        points.push(s);
                        weights.push(w);
                    }
                }
            }
            if points.len() > cap {
                return Err(cap_error(marginals, cap));
            }
        }
        Ok(Self {
            points,
            weights,
            method: EvalMethod::Exact,
        })
    }

    /// Histogram convolution on `buckets` equal-width bins over the support.
    /// Each bin keeps its exact mass and mean, so moments of order one are
    /// exact and smooth functionals carry an error of order the bin width.
    pub fn convolve(marginals: &[EntropyMarginal], buckets: usize) -> Result<Self> {
        if buckets < 2 {
            return Err(Error::domain("convolution needs at least 2 buckets"));
        }
        let s_max: f64 = marginals.iter().map(EntropyMarginal::max).sum();
        if s_max <= 0.0 {
            return Ok(Self {
                points: vec![0.0],
                weights: vec![1.0],
                method: EvalMethod::Convolve,
            });
        }
        let width = s_max / buckets as f64;
        let mut points = vec![0.0];
        let mut weights = vec![1.0];
        let mut mass = vec![0.0; buckets];
        let mut moment = vec![0.0; buckets];
        for m in marginals {
            mass.iter_mut().for_each(|x| *x = 0.0);
            moment.iter_mut().for_each(|x| *x = 0.0);
            for (&s, &w) in points.iter().zip(&weights) {
                for (&v, &p) in m.values.iter().zip(&m.probs) {
                    let t = s + v;
                    let b = ((t / width) as usize).min(buckets - 1);
                    mass[b] += w * p;
                    moment[b] += w * p * t;
                }
            }
            points.clear();
            weights.clear();
            for (&w, &mo) in mass.iter().zip(&moment) {
                if w > 0.0 {
                    points.push(mo / w);
                    weights.push(w);
                }
            }
        }
        Ok(Self {
            points,
            weights,
            method: EvalMethod::Convolve,
        })
    }

    /// `samples` i.i.d. draws of the sum. `ids[j]` is the user index of
    /// `marginals[j]`; it selects the user's random stream so that a user
    /// contributes the same draws whichever other users are included.
    pub fn monte_carlo(marginals: &[EntropyMarginal], ids: &[usize], samples: u64, seed: u64) -> Result<Self> {
        if samples < 100 {
            return Err(Error::domain("Monte Carlo needs at least 100 samples"));
        }
        let n = samples as usize;
        let cumulatives: Vec<Vec<f64>> = marginals.iter().map(|m| cumulative(&m.probs)).collect();
        let starts: Vec<usize> = (0..n).step_by(MC_BLOCK).collect();
        let points = starts
            .par_iter()
            .flat_map_iter(|&start| {
                let end = (start + MC_BLOCK).min(n);
                let mut block = vec![0.0; end - start];
                for ((m, cum), &id) in marginals.iter().zip(&cumulatives).zip(ids) {
                    let mut r = rng::positioned(seed, rng::stream_id(rng::TAG_PROFILE, id), start as u64);
                    for s in block.iter_mut() {
                        *s += m.values[rng::pick(cum, rng::unit_f64(&mut r))];
                    }
                }
                block
            })
            .collect();
        Ok(Self {
            points,
            weights: Vec::new(),
            method: EvalMethod::MonteCarlo,
        })
    }

    /// Builds the law of the users of `profile` other than `exclude`.
    pub fn of_profile(
        profile: &PolicyProfile,
        spec: &SystemSpec,
        exclude: Option<usize>,
        settings: &EvalSettings,
    ) -> Result<Self> {
        check_profile(profile, spec)?;
        let ids: Vec<usize> = (0..spec.n_users()).filter(|&j| Some(j) != exclude).collect();
        let marginals: Vec<EntropyMarginal> = ids
            .iter()
            .map(|&j| EntropyMarginal::new(spec.model(), spec.ladder(), spec.user(j).pi(), profile.policy(j)))
            .collect();
        match settings.method {
            MethodChoice::Exact => Self::exact(&marginals, settings.enumeration_cap),
            MethodChoice::MonteCarlo => Self::monte_carlo(&marginals, &ids, settings.samples, settings.seed),
            MethodChoice::Convolve => Self::convolve(&marginals, settings.buckets),
            MethodChoice::Auto => {
                if settings.exact_max_users.is_some_and(|n| spec.n_users() > n) {
                    return Self::convolve(&marginals, settings.buckets);
                }
                match Self::exact(&marginals, settings.enumeration_cap) {
                    Err(Error::EnumerationCap { .. }) => Self::convolve(&marginals, settings.buckets),
                    other => other,
                }
            }
        }
    }

    pub fn method(&self) -> EvalMethod {
        self.method
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Support size, or sample count for Monte Carlo.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `E[f(S)]` and its standard error (zero unless sampled).
    pub fn mean_and_stderr(&self, f: impl Fn(f64) -> f64) -> (f64, f64) {
        if self.method == EvalMethod::MonteCarlo {
            let values: Vec<f64> = self.points.iter().map(|&s| f(s)).collect();
            let n = values.len() as f64;
            let mean = pairwise_sum(&values) / n;
            let squares: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
            let var = pairwise_sum(&squares) / (n - 1.0);
            (mean, (var / n).sqrt())
        } else {
            let terms: Vec<f64> = self.points.iter().zip(&self.weights).map(|(&s, &w)| w * f(s)).collect();
            (pairwise_sum(&terms), 0.0)
        }
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.mean_and_stderr(f).0
    }

    pub fn result(&self, f: impl Fn(f64) -> f64) -> EvalResult {
        let (value, stderr) = self.mean_and_stderr(f);
        EvalResult {
            value,
            stderr,
            method: self.method,
            samples: self.points.len() as u64,
        }
    }
}

fn cap_error(marginals: &[EntropyMarginal], cap: usize) -> Error {
    let required = marginals.iter().map(|m| m.values.len() as f64).product();
    Error::EnumerationCap {
        required,
        cap,
        hint_samples: 100_000,
    }
}

pub(crate) fn check_profile(profile: &PolicyProfile, spec: &SystemSpec) -> Result<()> {
    if profile.len() != spec.n_users() {
        return Err(Error::validation(
            "policies",
            format!("{} policies for {} users", profile.len(), spec.n_users()),
        ));
    }
    if let Some(i) = profile.policies().iter().position(|p| p.len() != spec.ladder().len()) {
        return Err(Error::validation(format!("policies[{i}]"), "level count does not match the ladder"));
    }
    Ok(())
}

fn sum_rate(s: f64) -> f64 {
    0.5 * s.ln_1p()
}

/// `U = ½·ln(1 + own/(1 + others))`.
pub(crate) fn own_rate(own: f64, others: f64) -> f64 {
    0.5 * (own / (1.0 + others)).ln_1p()
}

/// Expected sum rate by exhaustive enumeration.
pub fn expected_sum_rate_exact(profile: &PolicyProfile, spec: &SystemSpec, cap: usize) -> Result<EvalResult> {
    let settings = EvalSettings {
        enumeration_cap: cap,
        ..EvalSettings::exact()
    };
    expected_sum_rate(profile, spec, &settings)
}

pub fn expected_sum_rate_mc(profile: &PolicyProfile, spec: &SystemSpec, samples: u64, seed: u64) -> Result<EvalResult> {
    expected_sum_rate(profile, spec, &EvalSettings::monte_carlo(samples, seed))
}

/// `T(Z) = E[½·ln(1 + Σ_i N(h_i, G_i))]`.
pub fn expected_sum_rate(profile: &PolicyProfile, spec: &SystemSpec, settings: &EvalSettings) -> Result<EvalResult> {
    Ok(SumLaw::of_profile(profile, spec, None, settings)?.result(sum_rate))
}

/// `T_i = E[½·ln(1 + N(h_i, G_i)/(1 + Σ_{j≠i} N(h_j, G_j)))]`.
///
/// The user's own state is integrated exactly against the law of the
/// others' aggregate.
pub fn user_objective(i: usize, profile: &PolicyProfile, spec: &SystemSpec, settings: &EvalSettings) -> Result<EvalResult> {
    if i >= spec.n_users() {
        return Err(Error::validation("user", format!("index {i} out of range for {} users", spec.n_users())));
    }
    let law = SumLaw::of_profile(profile, spec, Some(i), settings)?;
    let own = EntropyMarginal::new(spec.model(), spec.ladder(), spec.user(i).pi(), profile.policy(i));
    Ok(law.result(|s| own.values.iter().zip(&own.probs).map(|(&v, &p)| p * own_rate(v, s)).sum()))
}

/// `E[(Σ_j N(h_j, G_j) + n0)^(-k)]` over all users except `exclude`.
pub fn interference_moments(
    profile: &PolicyProfile,
    spec: &SystemSpec,
    exclude: Option<usize>,
    k: u32,
    settings: &EvalSettings,
) -> Result<EvalResult> {
    if !(1..=3).contains(&k) {
        return Err(Error::domain(format!("moment order {k} outside 1..=3")));
    }
    let n0 = settings.n0;
    if !(n0 > 0.0 && n0.is_finite()) {
        return Err(Error::domain("n0 must be positive"));
    }
    let law = SumLaw::of_profile(profile, spec, exclude, settings)?;
    Ok(law.result(|s| (s + n0).powi(-(k as i32))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::UserSpec;
    use crate::policy::{full_power_policy, make_grid_policy, Atom};

    fn gaussian() -> EntropyPowerModel {
        EntropyPowerModel::gaussian_power_law(2.0, 1.0).unwrap()
    }

    fn laplace() -> EntropyPowerModel {
        EntropyPowerModel::gaussian_power_law(1.0, 1.0).unwrap()
    }

    fn two_level_spec(model: EntropyPowerModel, n: usize) -> SystemSpec {
        let ladder = GainLadder::new(vec![0.0, 1.0]).unwrap();
        let user = UserSpec::new(vec![0.5, 0.5], 0.5, 1.0).unwrap();
        SystemSpec::homogeneous(ladder, user, n, model, 0.1).unwrap()
    }

    fn full_power_profile(spec: &SystemSpec) -> PolicyProfile {
        PolicyProfile::new(spec.users().iter().map(|u| full_power_policy(u, spec.ladder())).collect())
    }

    #[test]
    fn instantaneous_examples() {
        let ladder = GainLadder::new(vec![0.0, 1.0]).unwrap();
        let zero = StateVector::new(vec![0, 0], vec![1.0, 1.0]).unwrap();
        assert_eq!(instantaneous_sum_rate(&gaussian(), &ladder, &zero).unwrap(), 0.0);
        let both = StateVector::new(vec![1, 1], vec![1.0, 1.0]).unwrap();
        let r = instantaneous_sum_rate(&gaussian(), &ladder, &both).unwrap();
        assert!((r - 0.5 * 3f64.ln()).abs() < 1e-15);
        let one = StateVector::new(vec![1], vec![1.0]).unwrap();
        let r = instantaneous_sum_rate(&laplace(), &ladder, &one).unwrap();
        let oracle = 0.5 * (1.0 + 2.0 * std::f64::consts::E / std::f64::consts::PI).ln();
        assert!((r - oracle).abs() < 1e-14);
        assert!((r - 0.502245).abs() < 1e-6);
        assert!(StateVector::new(vec![0], vec![-1.0]).is_err());
        let bad = StateVector::new(vec![2], vec![1.0]).unwrap();
        assert!(instantaneous_sum_rate(&gaussian(), &ladder, &bad).is_err());
    }

    #[test]
    fn exact_two_user_fixture() {
        let spec = two_level_spec(gaussian(), 2);
        let r = expected_sum_rate_exact(&full_power_profile(&spec), &spec, 10_000_000).unwrap();
        let oracle = 0.25 * 0.5 * 2f64.ln() * 2.0 + 0.25 * 0.5 * 3f64.ln();
        assert!((r.value - oracle).abs() < 1e-15);
        assert!((r.value - 0.310613).abs() < 1e-6);
        assert_eq!((r.stderr, r.method), (0.0, EvalMethod::Exact));
    }

    #[test]
    fn exact_single_user_mixture() {
        let spec = two_level_spec(laplace(), 1);
        let p = make_grid_policy(
            vec![vec![Atom::new(0.0, 1.0)], vec![Atom::new(0.0, 0.5), Atom::new(1.0, 0.5)]],
            1.0,
        )
        .unwrap();
        let r = expected_sum_rate_exact(&PolicyProfile::new(vec![p]), &spec, 100).unwrap();
        let oracle = 0.25 * 0.5 * (1.0 + 2.0 * std::f64::consts::E / std::f64::consts::PI).ln();
        assert!((r.value - oracle).abs() < 1e-15);
        assert!((r.value - 0.125561).abs() < 1e-6);
    }

    #[test]
    fn silent_profile_is_zero() {
        let spec = two_level_spec(laplace(), 3);
        let profile = PolicyProfile::new(vec![Policy::silent(2); 3]);
        for settings in [EvalSettings::exact(), EvalSettings::monte_carlo(1000, 1), EvalSettings::convolve()] {
            assert_eq!(expected_sum_rate(&profile, &spec, &settings).unwrap().value, 0.0);
        }
    }

    #[test]
    fn cap_refusal() {
        let spec = two_level_spec(laplace(), 30);
        let profile = full_power_profile(&spec);
        // Homogeneous supports merge, so this fits easily.
        assert!(expected_sum_rate_exact(&profile, &spec, 100).is_ok());
        let ladder = GainLadder::new(vec![0.0, 1.0]).unwrap();
        let users: Vec<UserSpec> = (0..30).map(|j| UserSpec::new(vec![0.5, 0.5], 0.5, 0.5 + j as f64 / 60.0).unwrap()).collect();
        let spec = SystemSpec::new(ladder, users, laplace(), 0.1).unwrap();
        let profile = full_power_profile(&spec);
        let err = expected_sum_rate_exact(&profile, &spec, 1000).unwrap_err();
        assert!(matches!(err, Error::EnumerationCap { cap: 1000, .. }));
    }

    #[test]
    fn mc_determinism_and_accuracy() {
        let spec = two_level_spec(gaussian(), 2);
        let profile = full_power_profile(&spec);
        let a = expected_sum_rate_mc(&profile, &spec, 200_000, 7).unwrap();
        let b = expected_sum_rate_mc(&profile, &spec, 200_000, 7).unwrap();
        assert_eq!(a, b);
        assert!((a.value - 0.310613).abs() < 4.0 * a.stderr);
        assert!(expected_sum_rate_mc(&profile, &spec, 10, 7).is_err());
    }

    #[test]
    fn deterministic_profile_has_no_variance() {
        let ladder = GainLadder::new(vec![0.0, 1.0]).unwrap();
        let user = UserSpec::new(vec![0.0, 1.0], 0.5, 1.0).unwrap();
        let spec = SystemSpec::homogeneous(ladder, user, 2, laplace(), 0.1).unwrap();
        let profile = full_power_profile(&spec);
        let mc = expected_sum_rate_mc(&profile, &spec, 1000, 3).unwrap();
        let exact = expected_sum_rate_exact(&profile, &spec, 100).unwrap();
        assert!((mc.value - exact.value).abs() < 1e-14);
        assert!(mc.stderr < 1e-14);
    }

    #[test]
    fn user_objective_fixture() {
        let spec = two_level_spec(gaussian(), 2);
        let mut profile = full_power_profile(&spec);
        // Own state pinned at h = 1, g = 1.
        profile.replace(0, make_grid_policy(vec![vec![Atom::new(1.0, 1.0)]; 2], 1.0).unwrap());
        let own = UserSpec::new(vec![0.0, 1.0], 0.5, 1.0).unwrap();
        let spec = spec.with_users(vec![own, spec.user(1).clone()]).unwrap();
        let r = user_objective(0, &profile, &spec, &EvalSettings::exact()).unwrap();
        let oracle = 0.25 * 2f64.ln() + 0.25 * 1.5f64.ln();
        assert!((r.value - oracle).abs() < 1e-15);
        assert!((r.value - 0.274653).abs() < 1e-6);
    }

    #[test]
    fn single_user_objective_is_sum_rate() {
        let spec = two_level_spec(laplace(), 1);
        let profile = full_power_profile(&spec);
        let t = expected_sum_rate(&profile, &spec, &EvalSettings::exact()).unwrap();
        let ti = user_objective(0, &profile, &spec, &EvalSettings::exact()).unwrap();
        assert!((t.value - ti.value).abs() < 1e-15);
    }

    #[test]
    fn moments_of_single_atom() {
        let ladder = GainLadder::new(vec![0.0, 1.0]).unwrap();
        let user = UserSpec::new(vec![0.0, 1.0], 0.5, 1.0).unwrap();
        let spec = SystemSpec::homogeneous(ladder, user, 1, laplace(), 0.1).unwrap();
        let profile = full_power_profile(&spec);
        let a = laplace().scaled_entropy_power(1.0, 1.0).unwrap();
        let settings = EvalSettings { n0: 2.0, ..EvalSettings::exact() };
        let r = interference_moments(&profile, &spec, None, 1, &settings).unwrap();
        assert!((r.value - 1.0 / (a + 2.0)).abs() < 1e-15);
        assert!(interference_moments(&profile, &spec, None, 4, &settings).is_err());
        let empty = interference_moments(&profile, &spec, Some(0), 2, &settings).unwrap();
        assert!((empty.value - 0.25).abs() < 1e-15);
    }

    #[test]
    fn convolution_tracks_exact() {
        let spec = two_level_spec(laplace(), 12);
        let profile = full_power_profile(&spec);
        let exact = expected_sum_rate(&profile, &spec, &EvalSettings::exact()).unwrap();
        let conv = expected_sum_rate(&profile, &spec, &EvalSettings::convolve()).unwrap();
        assert!((exact.value - conv.value).abs() < 1e-6);
        assert_eq!(conv.method, EvalMethod::Convolve);
    }
}
