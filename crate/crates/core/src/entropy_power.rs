//! Generalized power constraints and the scaled entropy power `N(h, g)`.
//!
//! For the p-law constraint `φ(s) = |s|^p` the entropy-maximizing input is a
//! generalized Gaussian and
//!
//! ```text
//! h(X)    = (1/p)·ln(K_p · E[|X|^p]),   K_p = p·e / (2·c_p^p)
//! N(h, g) = (K_p · h^p · g)^{2/p} / e^{2·h(W)}
//! ```
//!
//! with `c_p = p / (2^{(p+1)/p}·Γ(1/p))`. The received moment is
//! `E[|hS|^p] = h^p·g`, which is why `h` enters raised to `p`.

use std::f64::consts::LN_2;

use crate::channel::GainLadder;
use crate::error::{Error, Result};

/// `φ(s) = |s|^p` with `p > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerLawConstraint {
    p: f64,
}

impl PowerLawConstraint {
    pub fn new(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::domain(format!("power-law exponent must be positive, got {p}")));
        }
        Ok(Self { p })
    }

    pub fn exponent(&self) -> f64 {
        self.p
    }

    pub fn phi(&self, s: f64) -> f64 {
        s.abs().powf(self.p)
    }

    /// `c_p` of the generalized Gaussian density.
    pub fn c_p(&self) -> f64 {
        let p = self.p;
        p / (2f64.powf((p + 1.0) / p) * libm::tgamma(1.0 / p))
    }

    /// `ln K_p = ln(p·e / (2·c_p^p))`, expanded to avoid under/overflow of
    /// `c_p^p` for extreme exponents.
    fn ln_scale(&self) -> f64 {
        let p = self.p;
        1.0 + p * LN_2 + p * libm::lgamma(1.0 / p) + (1.0 - p) * p.ln()
    }
}

/// Additive noise, summarized by its differential entropy in nats.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    entropy: f64,
}

impl NoiseModel {
    pub fn from_entropy(entropy: f64) -> Result<Self> {
        if !entropy.is_finite() {
            return Err(Error::domain("noise entropy must be finite"));
        }
        Ok(Self { entropy })
    }

    /// Gaussian noise of variance `sigma2`: `h(W) = ½·ln(2πe·σ²)`.
    pub fn gaussian(sigma2: f64) -> Result<Self> {
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(Error::domain(format!("noise variance must be positive, got {sigma2}")));
        }
        Self::from_entropy(0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * sigma2).ln())
    }

    pub fn entropy(&self) -> f64 {
        self.entropy
    }

    /// `e^{2h(W)}`.
    pub fn entropy_power(&self) -> f64 {
        (2.0 * self.entropy).exp()
    }
}

/// Maximum differential entropy (nats) of a scalar with `E[|X|^p] = moment`.
pub fn max_entropy(constraint: &PowerLawConstraint, moment: f64) -> Result<f64> {
    if !(moment > 0.0) || !moment.is_finite() {
        return Err(Error::domain(format!("moment must be positive and finite, got {moment}")));
    }
    Ok((constraint.ln_scale() + moment.ln()) / constraint.exponent())
}

/// `N(h, g)` tabulated on a gain × power grid for constraint families other
/// than the p-law. Values are bilinearly interpolated.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedEntropyPower {
    gains: Vec<f64>,
    powers: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl TabulatedEntropyPower {
    /// `values[a][b]` is `N(gains[a], powers[b])`. Both axes must start at 0
    /// and increase strictly; the table must vanish on both zero edges and be
    /// nondecreasing along each axis.
    pub fn new(gains: Vec<f64>, powers: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        check_axis("table.gains", &gains)?;
        check_axis("table.powers", &powers)?;
        if values.len() != gains.len() || values.iter().any(|row| row.len() != powers.len()) {
            return Err(Error::validation("table.values", "shape must be gains × powers"));
        }
        for (a, row) in values.iter().enumerate() {
            for (b, &v) in row.iter().enumerate() {
                let path = format!("table.values[{a}][{b}]");
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::validation(path, "entries must be finite and nonnegative"));
                }
                if (a == 0 || b == 0) && v != 0.0 {
                    return Err(Error::validation(path, "N must vanish at zero gain and zero power"));
                }
                if b > 0 && v < row[b - 1] {
                    return Err(Error::validation(path, "N must be nondecreasing in power"));
                }
                if a > 0 && v < values[a - 1][b] {
                    return Err(Error::validation(path, "N must be nondecreasing in gain"));
                }
            }
        }
        Ok(Self { gains, powers, values })
    }

    pub fn max_gain(&self) -> f64 {
        *self.gains.last().expect("validated nonempty")
    }

    pub fn max_power(&self) -> f64 {
        *self.powers.last().expect("validated nonempty")
    }

    fn eval(&self, h: f64, g: f64) -> f64 {
        let (a, ta) = bracket(&self.gains, h);
        let (b, tb) = bracket(&self.powers, g);
        let v = |i: usize, j: usize| self.values[i][j];
        let a1 = (a + 1).min(self.gains.len() - 1);
        let b1 = (b + 1).min(self.powers.len() - 1);
        let low = v(a, b) * (1.0 - tb) + v(a, b1) * tb;
        let high = v(a1, b) * (1.0 - tb) + v(a1, b1) * tb;
        low * (1.0 - ta) + high * ta
    }
}

fn check_axis(path: &str, axis: &[f64]) -> Result<()> {
    if axis.len() < 2 {
        return Err(Error::validation(path, "needs at least two points"));
    }
    if axis[0] != 0.0 {
        return Err(Error::validation(path, "must start at 0"));
    }
    if axis.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
        return Err(Error::validation(path, "must be finite and strictly increasing"));
    }
    Ok(())
}

/// Cell index and interpolation weight of `x` on `axis`, clamped to its range.
fn bracket(axis: &[f64], x: f64) -> (usize, f64) {
    let last = axis.len() - 1;
    if x >= axis[last] {
        return (last, 0.0);
    }
    let i = axis.partition_point(|&a| a <= x).saturating_sub(1);
    let t = (x - axis[i]) / (axis[i + 1] - axis[i]);
    (i, t.clamp(0.0, 1.0))
}

#[derive(Clone, Debug, PartialEq)]
enum Repr {
    PowerLaw {
        constraint: PowerLawConstraint,
        noise: NoiseModel,
        /// `K_p^{2/p} / e^{2h(W)}`.
        coefficient: f64,
    },
    Tabulated(TabulatedEntropyPower),
}

/// The map `(h, g) ↦ N(h, g)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropyPowerModel {
    repr: Repr,
}

impl EntropyPowerModel {
    pub fn power_law(constraint: PowerLawConstraint, noise: NoiseModel) -> Self {
        let p = constraint.exponent();
        let coefficient = (2.0 / p * constraint.ln_scale() - 2.0 * noise.entropy()).exp();
        Self {
            repr: Repr::PowerLaw {
                constraint,
                noise,
                coefficient,
            },
        }
    }

    /// Convenience constructor: p-law constraint with Gaussian noise.
    pub fn gaussian_power_law(p: f64, sigma2: f64) -> Result<Self> {
        Ok(Self::power_law(PowerLawConstraint::new(p)?, NoiseModel::gaussian(sigma2)?))
    }

    pub fn tabulated(table: TabulatedEntropyPower) -> Self {
        Self {
            repr: Repr::Tabulated(table),
        }
    }

    pub fn constraint(&self) -> Option<&PowerLawConstraint> {
        match &self.repr {
            Repr::PowerLaw { constraint, .. } => Some(constraint),
            Repr::Tabulated(_) => None,
        }
    }

    pub fn noise(&self) -> Option<&NoiseModel> {
        match &self.repr {
            Repr::PowerLaw { noise, .. } => Some(noise),
            Repr::Tabulated(_) => None,
        }
    }

    pub fn table(&self) -> Option<&TabulatedEntropyPower> {
        match &self.repr {
            Repr::Tabulated(t) => Some(t),
            Repr::PowerLaw { .. } => None,
        }
    }

    /// Checked evaluation of `N(h, g)`.
    pub fn scaled_entropy_power(&self, h: f64, g: f64) -> Result<f64> {
        if !(h >= 0.0 && h.is_finite()) || !(g >= 0.0 && g.is_finite()) {
            return Err(Error::domain(format!("N(h, g) needs finite h ≥ 0 and g ≥ 0, got ({h}, {g})")));
        }
        if let Repr::Tabulated(t) = &self.repr {
            if h > t.max_gain() || g > t.max_power() {
                return Err(Error::domain(format!("({h}, {g}) lies outside the tabulated range")));
            }
        }
        Ok(self.eval(h, g))
    }

    /// Unchecked evaluation for inputs already known to be in range.
    /// Degenerate inputs (`h = 0` or `g = 0`) give exactly 0.
    pub(crate) fn eval(&self, h: f64, g: f64) -> f64 {
        if h == 0.0 || g == 0.0 {
            return 0.0;
        }
        match &self.repr {
            Repr::PowerLaw {
                constraint,
                coefficient,
                ..
            } => coefficient * h * h * g.powf(2.0 / constraint.exponent()),
            Repr::Tabulated(t) => t.eval(h, g),
        }
    }
}

/// Outcome of [`classify_convexity`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvexityClass {
    StrictlyConvex,
    NotStrictlyConvex,
}

/// Interior second differences of `g ↦ N(h, g)` on `grid`, together with the
/// positive tolerance they are compared against.
///
/// For non-uniform grids the second difference at `b` (neighbours `a < b < c`)
/// is twice the gap between the chord from `a` to `c` and `N(h, b)`, which
/// reduces to `N(a) − 2N(b) + N(c)` on a uniform grid.
pub fn second_differences(model: &EntropyPowerModel, h: f64, grid: &[f64]) -> Result<(Vec<f64>, f64)> {
    if !(h > 0.0) {
        return Err(Error::domain("convexity is only defined for positive gains"));
    }
    check_power_grid(grid)?;
    let values: Vec<f64> = grid.iter().map(|&g| model.eval(h, g)).collect();
    let diffs = grid
        .windows(3)
        .zip(values.windows(3))
        .map(|(g, n)| {
            let w = (g[2] - g[1]) / (g[2] - g[0]);
            2.0 * (w * n[0] + (1.0 - w) * n[2] - n[1])
        })
        .collect();
    let tolerance = CONVEXITY_RELATIVE_TOLERANCE * values.last().copied().unwrap_or(0.0);
    Ok((diffs, tolerance))
}

/// Second differences must exceed this fraction of `N(h, g_max)`.
pub const CONVEXITY_RELATIVE_TOLERANCE: f64 = 1e-10;

pub fn classify_convexity(model: &EntropyPowerModel, h: f64, grid: &[f64]) -> Result<ConvexityClass> {
    let (diffs, tolerance) = second_differences(model, h, grid)?;
    Ok(if tolerance > 0.0 && diffs.iter().all(|&d| d > tolerance) {
        ConvexityClass::StrictlyConvex
    } else {
        ConvexityClass::NotStrictlyConvex
    })
}

pub(crate) fn check_power_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 3 {
        return Err(Error::domain("power grid needs at least 3 points"));
    }
    if grid[0] != 0.0 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("power grid must start at 0 and increase strictly"));
    }
    Ok(())
}

/// `N(h, g_max)·g/g_max − N(h, g)`: height of the chord from the origin to
/// `g_max` above the function at `g`.
pub fn chord_gap(model: &EntropyPowerModel, h: f64, g: f64, g_max: f64) -> f64 {
    model.eval(h, g_max) * g / g_max - model.eval(h, g)
}

/// Witnesses for the slope and gap structure of a strictly convex `N`.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ConvexityGapReport {
    pub g1: f64,
    pub g2: f64,
    pub epsilon: f64,
    /// Upper cap on secant slopes towards `g_max`.
    pub l: f64,
    pub delta: f64,
    pub g_max: f64,
    pub tau_gain: f64,
}

/// Searches for `(g1, g2, ε, L)` such that, on `grid`,
///
/// * for every positive ladder gain and `g2 ≤ g < g_max`, the secant slope
///   `(N(h, g_max) − N(h, g))/(g_max − g)` lies in `[N(h, g_max)/g_max + ε, L + ε]`;
/// * at `tau_gain` and `0 < g ≤ g1`, `N(h, g)/g ≤ N(h, g_max)/g_max − ε`;
/// * for every positive gain, the chord gap on `[δ, g_max − δ]` exceeds `ε`.
///
/// The search uses `g1 = δ` and `g2 = g_max − δ`, evaluating the interval
/// endpoints exactly in addition to the grid points. The reported `ε` is half
/// the smallest slack found, so all three inequalities hold strictly.
pub fn probe_convexity_gaps(
    model: &EntropyPowerModel,
    ladder: &GainLadder,
    tau_gain: f64,
    delta: f64,
    grid: &[f64],
) -> Result<ConvexityGapReport> {
    check_power_grid(grid)?;
    let g_max = *grid.last().expect("checked length");
    if !(delta > 0.0 && delta < g_max / 2.0) {
        return Err(Error::domain(format!("probe margin must lie in (0, g_max/2), got {delta}")));
    }
    if !(tau_gain > 0.0) {
        return Err(Error::domain("threshold gain must be positive"));
    }
    let positive: Vec<f64> = ladder.gains().iter().copied().filter(|&h| h > 0.0).collect();
    for &h in positive.iter().chain(std::iter::once(&tau_gain)) {
        if classify_convexity(model, h, grid)? != ConvexityClass::StrictlyConvex {
            return Err(Error::Regularity(format!(
                "regularity condition 2 fails: N(h, g) is not strictly convex in g at h = {h}"
            )));
        }
    }

    let (g1, g2) = (delta, g_max - delta);
    let probe = |lo: f64, hi: f64| -> Vec<f64> {
        let mut pts: Vec<f64> = grid.iter().copied().filter(|&g| g >= lo && g <= hi).collect();
        pts.push(lo);
        pts.push(hi);
        pts
    };

    // Secant slopes towards g_max above g2.
    let mut slack_secant = f64::INFINITY;
    let mut l = 0.0f64;
    for &h in &positive {
        let top = model.eval(h, g_max);
        let chord = top / g_max;
        for g in probe(g2, g_max).into_iter().filter(|&g| g < g_max) {
            let slope = (top - model.eval(h, g)) / (g_max - g);
            slack_secant = slack_secant.min(slope - chord);
            l = l.max(slope);
        }
        // Left derivative at g_max bounds every secant slope.
        let near = g_max * (1.0 - 1e-9);
        l = l.max((top - model.eval(h, near)) / (g_max - near));
    }

    // Ratio N/g below g1 at the threshold gain.
    let chord_tau = model.eval(tau_gain, g_max) / g_max;
    let slack_origin = probe(0.0, g1)
        .into_iter()
        .filter(|&g| g > 0.0)
        .map(|g| chord_tau - model.eval(tau_gain, g) / g)
        .fold(f64::INFINITY, f64::min);

    // Uniform chord gap on [δ, g_max − δ].
    let slack_gap = positive
        .iter()
        .flat_map(|&h| probe(g1, g2).into_iter().map(move |g| (h, g)))
        .map(|(h, g)| chord_gap(model, h, g, g_max))
        .fold(f64::INFINITY, f64::min);

    let slack = slack_secant.min(slack_origin).min(slack_gap);
    let scale = positive
        .iter()
        .map(|&h| model.eval(h, g_max))
        .fold(0.0, f64::max);
    let floor = 1e-12 * scale.max(f64::MIN_POSITIVE);
    if !(slack > floor) {
        return Err(Error::SearchFailure(format!(
            "no ε above {floor:.3e} at δ = {delta}: secant slack {slack_secant:.3e}, \
             origin slack {slack_origin:.3e}, chord-gap slack {slack_gap:.3e}"
        )));
    }
    Ok(ConvexityGapReport {
        g1,
        g2,
        epsilon: 0.5 * slack,
        l,
        delta,
        g_max,
        tau_gain,
    })
}

impl ConvexityGapReport {
    /// Re-checks the three inequalities on `grid` (typically finer than the
    /// search grid). Returns a description of the first violation.
    pub fn verify(&self, model: &EntropyPowerModel, ladder: &GainLadder, grid: &[f64]) -> Result<(), String> {
        let g_max = self.g_max;
        let eps = self.epsilon;
        for &h in ladder.gains().iter().filter(|&&h| h > 0.0) {
            let top = model.eval(h, g_max);
            for &g in grid.iter().filter(|&&g| g >= self.g2 && g < g_max) {
                let slope = (top - model.eval(h, g)) / (g_max - g);
                if !(slope >= top / g_max + eps && slope <= self.l + eps) {
                    return Err(format!("secant bound fails at h = {h}, g = {g}: slope {slope}"));
                }
            }
            for &g in grid.iter().filter(|&&g| g >= self.delta && g <= g_max - self.delta) {
                let gap = chord_gap(model, h, g, g_max);
                if !(gap > eps) {
                    return Err(format!("chord gap {gap} ≤ ε at h = {h}, g = {g}"));
                }
            }
        }
        let chord_tau = model.eval(self.tau_gain, g_max) / g_max;
        for &g in grid.iter().filter(|&&g| g > 0.0 && g < self.g1) {
            let ratio = model.eval(self.tau_gain, g) / g;
            if !(ratio >= 0.0 && ratio <= chord_tau - eps) {
                return Err(format!("origin ratio bound fails at g = {g}: {ratio}"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(m: usize, g_max: f64) -> Vec<f64> {
        (0..m).map(|i| g_max * i as f64 / (m - 1) as f64).collect()
    }

    fn laplace() -> EntropyPowerModel {
        EntropyPowerModel::gaussian_power_law(1.0, 1.0).unwrap()
    }

    #[test]
    fn gaussian_and_laplace_entropies() {
        let gauss = PowerLawConstraint::new(2.0).unwrap();
        let expected = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
        assert!((max_entropy(&gauss, 1.0).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 1.418_939).abs() < 1e-6);

        // Laplace with E|X| = b has entropy 1 + ln(2b).
        let laplace = PowerLawConstraint::new(1.0).unwrap();
        for b in [0.1, 1.0, 3.5] {
            let h = max_entropy(&laplace, b).unwrap();
            assert!((h - (1.0 + (2.0 * b).ln())).abs() < 1e-12);
        }
        assert!((max_entropy(&laplace, 1.0).unwrap() - 1.693_147).abs() < 1e-6);
    }

    #[test]
    fn entropy_diverges_at_zero_moment() {
        let c = PowerLawConstraint::new(1.0).unwrap();
        assert!(max_entropy(&c, 1e-300).unwrap() < -600.0);
        assert!(matches!(max_entropy(&c, 0.0), Err(Error::Domain(_))));
        assert!(matches!(max_entropy(&c, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn c_p_matches_closed_form() {
        // p = 2: c_2 = 2 / (2^{3/2}·√π).
        let c = PowerLawConstraint::new(2.0).unwrap().c_p();
        assert!((c - 2.0 / (2f64.powf(1.5) * std::f64::consts::PI.sqrt())).abs() < 1e-15);
        assert!((PowerLawConstraint::new(1.0).unwrap().c_p() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn entropy_power_reference_values() {
        let gauss = EntropyPowerModel::gaussian_power_law(2.0, 1.0).unwrap();
        assert!((gauss.scaled_entropy_power(1.0, 1.0).unwrap() - 1.0).abs() < 1e-12);
        let n = laplace().scaled_entropy_power(1.0, 1.0).unwrap();
        let expected = 2.0 * std::f64::consts::E / std::f64::consts::PI;
        assert!((n - expected).abs() < 1e-12 * expected);
        assert!((n - 1.730_512).abs() < 1e-6);
        assert_eq!(laplace().scaled_entropy_power(0.0, 1.0).unwrap(), 0.0);
        assert_eq!(laplace().scaled_entropy_power(1.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_negative_arguments() {
        assert!(laplace().scaled_entropy_power(-1.0, 1.0).is_err());
        assert!(laplace().scaled_entropy_power(1.0, -0.1).is_err());
        assert!(PowerLawConstraint::new(0.0).is_err());
        assert!(NoiseModel::gaussian(0.0).is_err());
        assert!(NoiseModel::from_entropy(f64::INFINITY).is_err());
    }

    #[test]
    fn convexity_classes() {
        let grid = uniform(101, 1.0);
        for h in [0.3, 1.0, 2.5] {
            let m1 = EntropyPowerModel::gaussian_power_law(1.0, 1.0).unwrap();
            let m2 = EntropyPowerModel::gaussian_power_law(2.0, 1.0).unwrap();
            let m3 = EntropyPowerModel::gaussian_power_law(3.0, 1.0).unwrap();
            assert_eq!(classify_convexity(&m1, h, &grid).unwrap(), ConvexityClass::StrictlyConvex);
            assert_eq!(classify_convexity(&m2, h, &grid).unwrap(), ConvexityClass::NotStrictlyConvex);
            assert_eq!(classify_convexity(&m3, h, &grid).unwrap(), ConvexityClass::NotStrictlyConvex);
        }
        assert!(classify_convexity(&laplace(), 0.0, &grid).is_err());
        assert!(classify_convexity(&laplace(), 1.0, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn chord_gap_of_quadratic() {
        let gap = chord_gap(&laplace(), 1.0, 0.5, 1.0);
        let n1 = 2.0 * std::f64::consts::E / std::f64::consts::PI;
        assert!((gap - (n1 * 0.5 - n1 * 0.25)).abs() < 1e-15);
        assert!((gap - 0.432_628).abs() < 1e-6);
    }

    #[test]
    fn gap_probe_finds_witnesses_and_survives_refinement() {
        let ladder = GainLadder::new(vec![0.0, 0.5, 1.0]).unwrap();
        let grid = uniform(101, 1.0);
        let report = probe_convexity_gaps(&laplace(), &ladder, 0.5, 0.25, &grid).unwrap();
        assert!(report.epsilon > 0.0);
        assert!(report.g1 > 0.0 && report.g1 <= report.g2 && report.g2 < 1.0);
        report.verify(&laplace(), &ladder, &grid).unwrap();
        report.verify(&laplace(), &ladder, &uniform(1001, 1.0)).unwrap();
    }

    #[test]
    fn gap_probe_refuses_affine_model() {
        let ladder = GainLadder::new(vec![0.0, 1.0]).unwrap();
        let affine = EntropyPowerModel::gaussian_power_law(2.0, 1.0).unwrap();
        let err = probe_convexity_gaps(&affine, &ladder, 1.0, 0.25, &uniform(101, 1.0)).unwrap_err();
        assert!(matches!(err, Error::Regularity(_)));
    }

    #[test]
    fn gap_probe_fails_as_margin_vanishes() {
        let ladder = GainLadder::new(vec![0.0, 1.0]).unwrap();
        let grid = uniform(101, 1.0);
        let wide = probe_convexity_gaps(&laplace(), &ladder, 1.0, 0.1, &grid).unwrap();
        let narrow = probe_convexity_gaps(&laplace(), &ladder, 1.0, 1e-4, &grid).unwrap();
        assert!(narrow.epsilon < wide.epsilon);
        let err = probe_convexity_gaps(&laplace(), &ladder, 1.0, 1e-14, &grid).unwrap_err();
        assert!(matches!(err, Error::SearchFailure(_)));
    }

    #[test]
    fn tabulated_model_validates_and_interpolates() {
        let gains = vec![0.0, 1.0];
        let powers = vec![0.0, 0.5, 1.0];
        let table = TabulatedEntropyPower::new(gains.clone(), powers.clone(), vec![vec![0.0; 3], vec![0.0, 0.25, 1.0]]).unwrap();
        let model = EntropyPowerModel::tabulated(table);
        assert!((model.scaled_entropy_power(1.0, 0.75).unwrap() - 0.625).abs() < 1e-15);
        assert!((model.scaled_entropy_power(0.5, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(model.scaled_entropy_power(1.5, 0.5).is_err());

        let decreasing = TabulatedEntropyPower::new(gains.clone(), powers.clone(), vec![vec![0.0; 3], vec![0.0, 0.5, 0.4]]);
        assert!(matches!(decreasing, Err(Error::Validation { .. })));
        let nonzero_edge = TabulatedEntropyPower::new(gains, powers, vec![vec![0.0, 0.1, 0.2], vec![0.0, 0.5, 1.0]]);
        assert!(nonzero_edge.is_err());
    }
}
