//! Best responses, dual certificates, the invariance threshold `N*` and the
//! concentration bounds.

mod best_response;
mod bounds;
mod certificate;
mod nstar;

use serde::Serialize;

use crate::error::{Error, Result};

pub use best_response::{
    best_response, best_response_from_table, brute_force_best_response, brute_force_from_table,
    conditional_payoff_table, iterated_best_response, BestResponseResult, PayoffTable, TrajectoryPoint,
};
pub use bounds::{
    log_log_slope, moment_decay, mu_lower_bound, paley_zygmund, MomentDecay, MomentRow, PaleyZygmund, SlopeFit,
};
pub use certificate::{
    verify_entropy_dual_certificate, verify_m_dominating, verify_m_dominating_user, CertificateReport,
    CertificateStatus, Condition, MarginEntry, ProfileCertificate,
};
pub use nstar::{find_n_star, nstar_spread, MarginRow, NStarReport, NStarSpread, SpecTemplate, SweepEntry};

/// Strictly increasing transmit powers from 0 to the power cap.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PowerGrid {
    points: Vec<f64>,
}

impl PowerGrid {
    pub const DEFAULT_POINTS: usize = 101;

    /// `m` equally spaced powers; the last one is exactly `g_max`.
    pub fn uniform(m: usize, g_max: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::validation("grid.m", "a power grid needs at least 2 points"));
        }
        if !(g_max > 0.0 && g_max.is_finite()) {
            return Err(Error::domain("g_max must be positive and finite"));
        }
        let step = g_max / (m - 1) as f64;
        let mut points: Vec<f64> = (0..m).map(|j| j as f64 * step).collect();
        points[m - 1] = g_max;
        Ok(Self { points })
    }

    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 || points[0] != 0.0 {
            return Err(Error::validation("grid", "needs at least 2 points starting at 0"));
        }
        if points.windows(2).any(|w| !(w[1] > w[0])) || !points[points.len() - 1].is_finite() {
            return Err(Error::validation("grid", "points must be finite and strictly increasing"));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    /// The same grid stretched to end exactly at `g_max`.
    pub fn rescaled(&self, g_max: f64) -> Self {
        if self.max() == g_max {
            return self.clone();
        }
        let scale = g_max / self.max();
        let mut points: Vec<f64> = self.points.iter().map(|g| g * scale).collect();
        let last = points.len() - 1;
        points[last] = g_max;
        Self { points }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DualSource {
    EntropyCertificate,
    RateCertificate,
    Bisection,
}

/// Lagrange multiplier of the average power constraint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DualParams {
    pub lambda: f64,
    pub source: DualSource,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_endpoints() {
        let g = PowerGrid::uniform(101, 1.0).unwrap();
        assert_eq!(g.len(), 101);
        assert_eq!(g.points()[0], 0.0);
        assert_eq!(g.max(), 1.0);
        assert!((g.points()[50] - 0.5).abs() < 1e-15);
        let g = PowerGrid::uniform(7, 0.3).unwrap();
        assert_eq!(g.max(), 0.3);
        assert!(PowerGrid::uniform(1, 1.0).is_err());
    }

    #[test]
    fn grid_validation_and_rescale() {
        assert!(PowerGrid::from_points(vec![0.1, 1.0]).is_err());
        assert!(PowerGrid::from_points(vec![0.0, 0.5, 0.5]).is_err());
        let g = PowerGrid::from_points(vec![0.0, 0.25, 1.0]).unwrap();
        let r = g.rescaled(2.0);
        assert_eq!(r.points(), &[0.0, 0.5, 2.0]);
    }
}
