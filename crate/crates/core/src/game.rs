//! Shared game vocabulary: distributions, gains, regret bookkeeping, the
//! quantile of a regret vector and unit-step discrete derivatives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SIMPLEX_SUM_TOLERANCE: f64 = 1e-9;

/// A probability vector over `n` experts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplexDistribution {
    weights: Vec<f64>,
}

impl SimplexDistribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::domain("SimplexDistribution", "no experts"));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(**w >= 0.0) || w.is_infinite())
        {
            return Err(Error::domain(
                "SimplexDistribution",
                format!("weight {i} is {w}"),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_SUM_TOLERANCE {
            return Err(Error::domain(
                "SimplexDistribution",
                format!("weights sum to {sum}"),
            ));
        }
        Ok(SimplexDistribution { weights })
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform distribution over zero experts");
        SimplexDistribution {
            weights: vec![1.0 / n as f64; n],
        }
    }

    /// Normalizes non-negative scores; falls back to uniform when their sum
    /// is below `1e-300` (treated as a zero vector).
    pub(crate) fn from_scores(mut scores: Vec<f64>) -> Self {
        let sum: f64 = scores.iter().sum();
        if !(sum >= 1e-300) || !sum.is_finite() {
            return Self::uniform(scores.len());
        }
        for s in &mut scores {
            *s /= sum;
        }
        SimplexDistribution { weights: scores }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dot(&self, v: &[f64]) -> f64 {
        dot(&self.weights, v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GainKind {
    /// One round's gains in `[−1, 1]ⁿ`.
    Discrete,
    /// A Brownian increment `ΔG`; unbounded but finite.
    ContinuousIncrement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainVector {
    gains: Vec<f64>,
    kind: GainKind,
}

impl GainVector {
    pub fn discrete(gains: Vec<f64>) -> Result<Self> {
        if let Some((i, g)) = gains
            .iter()
            .enumerate()
            .find(|(_, g)| !(**g >= -1.0 && **g <= 1.0))
        {
            return Err(Error::domain(
                "GainVector",
                format!("discrete gain {i} is {g}, outside [-1, 1]"),
            ));
        }
        Ok(GainVector {
            gains,
            kind: GainKind::Discrete,
        })
    }

    pub fn increment(gains: Vec<f64>) -> Result<Self> {
        if let Some((i, g)) = gains.iter().enumerate().find(|(_, g)| !g.is_finite()) {
            return Err(Error::domain(
                "GainVector",
                format!("increment {i} is {g}"),
            ));
        }
        Ok(GainVector {
            gains,
            kind: GainKind::ContinuousIncrement,
        })
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn kind(&self) -> GainKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }
}

/// Cumulative regret `R`, expert gains `G` and player gain `A` after some
/// number of rounds (or Euler steps). `R = G − A·1` holds up to rounding.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretState {
    /// Rounds played, or Euler steps taken.
    pub round: u64,
    /// Equal to `round` in the discrete game, `round · dt` in the continuous one.
    pub time: f64,
    regret: Vec<f64>,
    cumulative_gain: Vec<f64>,
    player_gain: f64,
}

impl RegretState {
    pub fn new(n: usize) -> Self {
        RegretState {
            round: 0,
            time: 0.0,
            regret: vec![0.0; n],
            cumulative_gain: vec![0.0; n],
            player_gain: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.regret.len()
    }

    pub fn regret(&self) -> &[f64] {
        &self.regret
    }

    pub fn cumulative_gain(&self) -> &[f64] {
        &self.cumulative_gain
    }

    pub fn player_gain(&self) -> f64 {
        self.player_gain
    }

    pub fn max_regret(&self) -> f64 {
        self.regret.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Applies one round: returns the instantaneous regret `g − ⟨p, g⟩·1`
    /// after adding it to `R` and advancing the clock by `dt`.
    pub fn apply(&mut self, p: &SimplexDistribution, g: &GainVector, dt: f64) -> Result<Vec<f64>> {
        let r = instantaneous_regret(p, g)?;
        let player = p.dot(g.gains());
        for ((ri, gi), (rr, gg)) in self
            .regret
            .iter_mut()
            .zip(self.cumulative_gain.iter_mut())
            .zip(r.iter().zip(g.gains()))
        {
            *ri += rr;
            *gi += gg;
        }
        self.player_gain += player;
        self.round += 1;
        self.time = self.round as f64 * dt;
        Ok(r)
    }

    /// Largest deviation from `R = G − A·1`.
    pub fn identity_defect(&self) -> f64 {
        self.regret
            .iter()
            .zip(&self.cumulative_gain)
            .map(|(r, g)| (r - (g - self.player_gain)).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileQuery {
    epsilon: f64,
}

impl QuantileQuery {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::domain(
                "quantile",
                format!("epsilon must lie in (0, 1], got {epsilon}"),
            ));
        }
        Ok(QuantileQuery { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `⌈εn⌉`, with products within `1e-12` of an integer snapped to it.
    pub fn rank(&self, n: usize) -> usize {
        let prod = self.epsilon * n as f64;
        let nearest = prod.round();
        let k = if (prod - nearest).abs() <= 1e-12 {
            nearest
        } else {
            prod.ceil()
        };
        (k as usize).clamp(1, n)
    }
}

/// The `⌈εn⌉`-th largest entry of `x`.
pub fn quantile(q: QuantileQuery, x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::domain("quantile", "empty vector"));
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    Ok(sorted[q.rank(x.len()) - 1])
}

/// `r = g − ⟨p, g⟩·1`, which satisfies `⟨p, r⟩ = 0`.
pub fn instantaneous_regret(p: &SimplexDistribution, g: &GainVector) -> Result<Vec<f64>> {
    if p.len() != g.len() {
        return Err(Error::domain(
            "instantaneous_regret",
            format!("distribution has {} experts, gains have {}", p.len(), g.len()),
        ));
    }
    let player = p.dot(g.gains());
    Ok(g.gains().iter().map(|gi| gi - player).collect())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `f(t, x) − f(t − 1, x)`
pub fn discrete_deriv_t<F>(f: F, t: f64, x: f64) -> Result<f64>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    Ok(f(t, x)? - f(t - 1.0, x)?)
}

/// `(f(t, x + 1) − f(t, x − 1)) / 2`
pub fn discrete_deriv_x<F>(f: F, t: f64, x: f64) -> Result<f64>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    Ok((f(t, x + 1.0)? - f(t, x - 1.0)?) / 2.0)
}

/// `f(t, x + 1) + f(t, x − 1) − 2 f(t, x)`
pub fn discrete_deriv_xx<F>(f: F, t: f64, x: f64) -> Result<f64>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    Ok(f(t, x + 1.0)? + f(t, x - 1.0)? - 2.0 * f(t, x)?)
}
