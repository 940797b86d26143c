use serde::Serialize;

use crate::channel::{validate_spec, GainLadder, SystemSpec, UserSpec};
use crate::entropy_power::EntropyPowerModel;
use crate::error::{Error, Result};
use crate::policy::{Atom, PolicyProfile};
use crate::rate::{EvalResult, EvalSettings, SumLaw};

/// Lower bound on `E[N(h_i, G_i)]` valid for every best response of user `i`.
///
/// In the slack-budget regime the user transmits at full power on every
/// positive gain, giving `N(h^(2), g_max)·η`. Otherwise the bound is
/// `min{N(h^(2), g_max)·η, N(h^(2), Ḡ/2)·Ḡ²/(4·g_max²)}`, where the second
/// term combines the smallest positive gain with the Paley–Zygmund
/// inequality and `E[G²] ≤ g_max²`.
pub fn mu_lower_bound(i: usize, spec: &SystemSpec) -> Result<f64> {
    if i >= spec.n_users() {
        return Err(Error::validation("user", format!("index {i} out of range")));
    }
    validate_spec(spec).require()?;
    let user = spec.user(i);
    let model = spec.model();
    let h2 = spec.ladder().gain(1);
    let (g_bar, g_max) = (user.g_bar(), user.g_max());
    let full = model.eval(h2, g_max) * spec.eta();
    if user.is_full_power_regime() {
        return Ok(full);
    }
    let spread = model.eval(h2, g_bar / 2.0) * g_bar * g_bar / (4.0 * g_max * g_max);
    Ok(full.min(spread))
}

/// Both sides of the Paley–Zygmund inequality
/// `Pr(G ≥ E[G]/2) ≥ E[G]²/(4·E[G²])` for a finite power law.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PaleyZygmund {
    pub probability: f64,
    pub bound: f64,
}

pub fn paley_zygmund(law: &[Atom]) -> PaleyZygmund {
    let mean: f64 = law.iter().map(|a| a.g * a.p).sum();
    let second: f64 = law.iter().map(|a| a.g * a.g * a.p).sum();
    let probability = law.iter().filter(|a| a.g >= mean / 2.0).map(|a| a.p).sum();
    let bound = if second > 0.0 { mean * mean / (4.0 * second) } else { 0.0 };
    PaleyZygmund { probability, bound }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::domain("slope fit needs at least two paired points"));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0)) {
        return Err(Error::domain("slope fit needs positive values"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("slope fit needs distinct abscissae"));
    }
    Ok(sxy / sxx)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentRow {
    pub n_users: usize,
    pub k: u32,
    pub estimate: f64,
    pub stderr: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SlopeFit {
    pub k: u32,
    pub slope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentDecay {
    pub rows: Vec<MomentRow>,
    pub slopes: Vec<SlopeFit>,
}

/// `E[(S + n0)^(-k)]` for homogeneous systems of each size in `sizes`, all
/// users playing the invariant policy of `user`, plus the fitted log–log
/// slope for each `k`.
pub fn moment_decay(
    ladder: &GainLadder,
    model: &EntropyPowerModel,
    user: &UserSpec,
    eta: f64,
    sizes: &[usize],
    orders: &[u32],
    settings: &EvalSettings,
) -> Result<MomentDecay> {
    if let Some(&k) = orders.iter().find(|k| !(1..=3).contains(*k)) {
        return Err(Error::domain(format!("moment order {k} outside 1..=3")));
    }
    let n0 = settings.n0;
    let mut rows = Vec::with_capacity(sizes.len() * orders.len());
    for &n in sizes {
        let spec = SystemSpec::homogeneous(ladder.clone(), user.clone(), n, model.clone(), eta)?;
        let profile = PolicyProfile::invariant(&spec)?;
        let law = SumLaw::of_profile(&profile, &spec, None, settings)?;
        for &k in orders {
            let EvalResult { value, stderr, .. } = law.result(|s| (s + n0).powi(-(k as i32)));
            rows.push(MomentRow {
                n_users: n,
                k,
                estimate: value,
                stderr,
            });
        }
    }
    let slopes = orders
        .iter()
        .map(|&k| {
            let (xs, ys): (Vec<f64>, Vec<f64>) =
                rows.iter().filter(|r| r.k == k).map(|r| (r.n_users as f64, r.estimate)).unzip();
            Ok(SlopeFit {
                k,
                slope: log_log_slope(&xs, &ys)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(MomentDecay { rows, slopes })
}
