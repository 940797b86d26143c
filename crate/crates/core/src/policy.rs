//! Finite-support power allocation policies and the invariant threshold
//! policy.

use serde::{Deserialize, Serialize};

use crate::channel::{GainLadder, SystemSpec, UserSpec, PROBABILITY_TOLERANCE};
use crate::error::{Error, Result};

/// One point mass: transmit power `g` with probability `p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub g: f64,
    pub p: f64,
}

impl Atom {
    pub fn new(g: f64, p: f64) -> Self {
        Self { g, p }
    }
}

/// Distribution of transmit power at one gain level, in canonical form:
/// powers strictly increasing, probabilities positive and summing to one.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct AtomicDistribution {
    atoms: Vec<Atom>,
}

impl AtomicDistribution {
    /// Canonicalizes `atoms`: sorts by power, merges duplicates, drops null
    /// atoms and renormalizes when the total is off by less than 1e-12.
    pub fn new(atoms: Vec<Atom>, g_max: f64) -> Result<Self> {
        Self::new_at("atoms", atoms, g_max)
    }

    fn new_at(path: &str, mut atoms: Vec<Atom>, g_max: f64) -> Result<Self> {
        for (a, atom) in atoms.iter().enumerate() {
            if !(atom.g >= 0.0 && atom.g <= g_max) {
                return Err(Error::validation(
                    format!("{path}[{a}].g"),
                    format!("power {} outside [0, {g_max}]", atom.g),
                ));
            }
            if !(atom.p.is_finite() && atom.p >= 0.0) {
                return Err(Error::validation(format!("{path}[{a}].p"), "probability must be finite and nonnegative"));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.p).sum();
        if (total - 1.0).abs() >= PROBABILITY_TOLERANCE {
            return Err(Error::validation(path, format!("probabilities sum to {total}, expected 1")));
        }
        atoms.sort_by(|a, b| a.g.total_cmp(&b.g));
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        for atom in atoms {
            match merged.last_mut() {
                Some(last) if last.g == atom.g => last.p += atom.p,
                _ => merged.push(atom),
            }
        }
        merged.retain(|a| a.p > 0.0);
        if total != 1.0 {
            merged.iter_mut().for_each(|a| a.p /= total);
        }
        Ok(Self { atoms: merged })
    }

    pub fn point(g: f64) -> Self {
        Self {
            atoms: vec![Atom::new(g, 1.0)],
        }
    }

    /// Two-point mixture `(1 − w)·δ_low + w·δ_high` with `low < high`.
    pub(crate) fn mixture(low: f64, high: f64, w: f64) -> Self {
        let atoms = [Atom::new(low, 1.0 - w), Atom::new(high, w)]
            .into_iter()
            .filter(|a| a.p > 0.0)
            .collect();
        Self { atoms }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|a| a.g * a.p).sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.atoms.iter().map(|a| a.g * a.g * a.p).sum()
    }

    /// Largest absolute difference between the two CDFs, plus any power
    /// mismatch of matching atoms.
    pub fn distance(&self, other: &Self) -> f64 {
        let mut points: Vec<f64> = self.atoms.iter().chain(&other.atoms).map(|a| a.g).collect();
        points.sort_by(f64::total_cmp);
        points
            .into_iter()
            .map(|x| (cdf(&self.atoms, x) - cdf(&other.atoms, x)).abs())
            .fold(0.0, f64::max)
    }
}

fn cdf(atoms: &[Atom], x: f64) -> f64 {
    atoms.iter().filter(|a| a.g <= x).map(|a| a.p).sum()
}

/// Per-level power distributions; `levels()[k]` applies at gain `h^(k+1)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Policy {
    levels: Vec<AtomicDistribution>,
}

/// Serialized policy, before validation against a power cap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyDocument {
    pub levels: Vec<Vec<Atom>>,
}

impl Policy {
    pub fn from_levels(levels: Vec<AtomicDistribution>) -> Self {
        Self { levels }
    }

    pub fn levels(&self) -> &[AtomicDistribution] {
        &self.levels
    }

    pub fn level(&self, k: usize) -> &AtomicDistribution {
        &self.levels[k]
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Transmit nothing at any level.
    pub fn silent(levels: usize) -> Self {
        Self {
            levels: vec![AtomicDistribution::point(0.0); levels],
        }
    }

    pub fn to_document(&self) -> PolicyDocument {
        PolicyDocument {
            levels: self.levels.iter().map(|l| l.atoms.clone()).collect(),
        }
    }

    /// Unconditional law of the transmit power `Σ_k π_k·F_k`.
    pub fn power_distribution(&self, pi: &[f64]) -> Vec<Atom> {
        let mut atoms: Vec<Atom> = self
            .levels
            .iter()
            .zip(pi)
            .flat_map(|(level, &w)| level.atoms.iter().map(move |a| Atom::new(a.g, a.p * w)))
            .filter(|a| a.p > 0.0)
            .collect();
        atoms.sort_by(|a, b| a.g.total_cmp(&b.g));
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match merged.last_mut() {
                Some(last) if last.g == a.g => last.p += a.p,
                _ => merged.push(a),
            }
        }
        merged
    }

    /// Largest per-level CDF distance to `other`.
    pub fn distance(&self, other: &Policy) -> f64 {
        self.levels
            .iter()
            .zip(&other.levels)
            .map(|(a, b)| a.distance(b))
            .fold(0.0, f64::max)
    }
}

/// Builds a canonical policy from raw per-level atoms.
pub fn make_grid_policy(levels: Vec<Vec<Atom>>, g_max: f64) -> Result<Policy> {
    let levels = levels
        .into_iter()
        .enumerate()
        .map(|(k, atoms)| AtomicDistribution::new_at(&format!("levels[{k}]"), atoms, g_max))
        .collect::<Result<_>>()?;
    Ok(Policy { levels })
}

impl PolicyDocument {
    pub fn into_policy(self, g_max: f64) -> Result<Policy> {
        make_grid_policy(self.levels, g_max)
    }
}

/// `E[G] = Σ_k π_k Σ_atoms g·p`.
pub fn average_power(policy: &Policy, user: &UserSpec) -> Result<f64> {
    if policy.len() != user.pi().len() {
        return Err(Error::validation(
            "levels",
            format!("policy has {} levels, user law has {}", policy.len(), user.pi().len()),
        ));
    }
    Ok(policy.levels.iter().zip(user.pi()).map(|(l, &w)| w * l.mean()).sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Budget-binding threshold policy.
    Threshold,
    /// Budget covers full power at all positive gains; budget is slack.
    FullPower,
}

/// Threshold policy: silent below level `tau`, full power above it and a
/// `{0, g_max}` mixture at `tau`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvariantPolicy {
    /// 1-based threshold level.
    pub tau: usize,
    /// Probability of transmitting `g_max` at level `tau`.
    pub mix_prob: f64,
    pub base: Policy,
    pub regime: Regime,
}

impl InvariantPolicy {
    /// 0-based index of the threshold level.
    pub fn tau_index(&self) -> usize {
        self.tau - 1
    }
}

/// Threshold policy balancing the budget exactly.
///
/// Levels with zero probability are skipped when locating `tau`: it is the
/// level with `Σ_{l>τ} g_max·π_l ≤ Ḡ < Σ_{l≥τ} g_max·π_l`. When the budget
/// reaches the full-power cost `(1 − π(h^(1)))·g_max` the full-power policy is
/// returned with `tau = 1`, `mix_prob = 0` and [`Regime::FullPower`].
pub fn invariant_policy(user: &UserSpec, ladder: &GainLadder) -> Result<InvariantPolicy> {
    let k_levels = ladder.len();
    if user.pi().len() != k_levels {
        return Err(Error::validation("pi", "length does not match the ladder"));
    }
    if user.is_full_power_regime() {
        return Ok(InvariantPolicy {
            tau: 1,
            mix_prob: 0.0,
            base: full_power_policy(user, ladder),
            regime: Regime::FullPower,
        });
    }
    let (g_max, g_bar, pi) = (user.g_max(), user.g_bar(), user.pi());
    let mut above = 0.0;
    let mut tau = None;
    for k in (0..k_levels).rev() {
        if pi[k] <= 0.0 {
            continue;
        }
        let through = above + g_max * pi[k];
        if above <= g_bar && g_bar < through {
            tau = Some(k);
            break;
        }
        above = through;
    }
    let tau = tau.ok_or_else(|| Error::validation("pi", "no positive-probability level balances the budget"))?;
    let mix_prob = ((g_bar - above) / (g_max * pi[tau])).clamp(0.0, 1.0);
    let levels = (0..k_levels)
        .map(|k| match k.cmp(&tau) {
            std::cmp::Ordering::Less => AtomicDistribution::point(0.0),
            std::cmp::Ordering::Greater => AtomicDistribution::point(g_max),
            std::cmp::Ordering::Equal => AtomicDistribution::mixture(0.0, g_max, mix_prob),
        })
        .collect();
    Ok(InvariantPolicy {
        tau: tau + 1,
        mix_prob,
        base: Policy { levels },
        regime: Regime::Threshold,
    })
}

/// `g_max` at every positive gain, silence at zero gain.
pub fn full_power_policy(user: &UserSpec, ladder: &GainLadder) -> Policy {
    let levels = (0..ladder.len())
        .map(|k| AtomicDistribution::point(if k == 0 { 0.0 } else { user.g_max() }))
        .collect();
    Policy { levels }
}

/// The joint assignment of one policy per user.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolicyProfile {
    policies: Vec<Policy>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileDocument {
    pub policies: Vec<PolicyDocument>,
}

impl PolicyProfile {
    pub fn new(policies: Vec<Policy>) -> Self {
        Self { policies }
    }

    /// Checks lengths and budgets (within 1e-10) against `spec`.
    pub fn validated(policies: Vec<Policy>, spec: &SystemSpec) -> Result<Self> {
        let profile = Self { policies };
        profile.validate(spec)?;
        Ok(profile)
    }

    pub fn validate(&self, spec: &SystemSpec) -> Result<()> {
        if self.policies.len() != spec.n_users() {
            return Err(Error::validation(
                "policies",
                format!("{} policies for {} users", self.policies.len(), spec.n_users()),
            ));
        }
        for (i, (p, u)) in self.policies.iter().zip(spec.users()).enumerate() {
            let path = format!("policies[{i}]");
            if p.len() != spec.ladder().len() {
                return Err(Error::validation(path, "level count does not match the ladder"));
            }
            if p.levels.iter().flat_map(|l| &l.atoms).any(|a| a.g > u.g_max()) {
                return Err(Error::validation(path, "atom above the user's g_max"));
            }
            let used = average_power(p, u)?;
            if used > u.g_bar() + 1e-10 {
                return Err(Error::validation(path, format!("average power {used} exceeds budget {}", u.g_bar())));
            }
        }
        Ok(())
    }

    /// Every user plays its invariant policy.
    pub fn invariant(spec: &SystemSpec) -> Result<Self> {
        let policies = spec
            .users()
            .iter()
            .map(|u| invariant_policy(u, spec.ladder()).map(|p| p.base))
            .collect::<Result<_>>()?;
        Ok(Self { policies })
    }

    pub fn policies(&self) -> &[Policy] {
        &self.policies
    }

    pub fn policy(&self, i: usize) -> &Policy {
        &self.policies[i]
    }

    pub fn len(&self) -> usize {
        self.policies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.policies.is_empty()
    }

    pub fn replace(&mut self, i: usize, policy: Policy) {
        self.policies[i] = policy;
    }

    pub fn to_document(&self) -> ProfileDocument {
        ProfileDocument {
            policies: self.policies.iter().map(Policy::to_document).collect(),
        }
    }

    pub fn from_document(doc: ProfileDocument, spec: &SystemSpec) -> Result<Self> {
        if doc.policies.len() != spec.n_users() {
            return Err(Error::validation(
                "policies",
                format!("{} policies for {} users", doc.policies.len(), spec.n_users()),
            ));
        }
        let policies = doc
            .policies
            .into_iter()
            .enumerate()
            .map(|(i, d)| {
                make_grid_policy(d.levels, spec.user(i).g_max()).map_err(|e| match e {
                    Error::Validation { path, message } => Error::validation(format!("policies[{i}].{path}"), message),
                    other => other,
                })
            })
            .collect::<Result<_>>()?;
        Self::validated(policies, spec)
    }
}
