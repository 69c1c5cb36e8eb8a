//! Player strategies.
//!
//! * `mwu-fixed` / `mwu-anytime`: exponential weights on cumulative gains.
//! * `quantile-potential`: the discrete-gradient player for the separable
//!   potential `Φ(t, x) = Σ φ(t, x_i / 2)`.
//! * `independent-potential`: the gradient player for `Φ(t, x) = Σ φ(t, x_i)`,
//!   designed for independent Brownian experts. In the discrete game it is
//!   experimental (no regret guarantee is known).
//!
//! All strategies predict from the state *before* the round (or Euler step)
//! they are used in.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{RegretState, SimplexDistribution};
use crate::specfun::{erfi_scaled, phi_dx_scaled_unchecked, phi_scaled_unchecked};

/// Exponents above this are handled by factoring out a common `e^{shift}`.
const OVERFLOW_EXPONENT: f64 = 600.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LearnerKind {
    MwuFixed,
    MwuAnytime,
    QuantilePotential,
    IndependentPotential,
}

impl LearnerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LearnerKind::MwuFixed => "mwu-fixed",
            LearnerKind::MwuAnytime => "mwu-anytime",
            LearnerKind::QuantilePotential => "quantile-potential",
            LearnerKind::IndependentPotential => "independent-potential",
        }
    }
}

impl std::fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerConfig {
    pub kind: LearnerKind,
    pub n: usize,
    /// Horizon `T` of the fixed-horizon MWU learning rate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    /// Manual learning rate for the MWU kinds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_override: Option<f64>,
}

impl LearnerConfig {
    pub fn new(kind: LearnerKind, n: usize) -> Self {
        LearnerConfig {
            kind,
            n,
            horizon: None,
            eta_override: None,
        }
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = Some(horizon);
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta_override = Some(eta);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("learner needs at least one expert".into()));
        }
        match self.horizon {
            Some(h) if !(h > 0.0 && h.is_finite()) => {
                return Err(Error::Config(format!("learner horizon must be positive, got {h}")))
            }
            None if self.kind == LearnerKind::MwuFixed && self.eta_override.is_none() => {
                return Err(Error::Config("mwu-fixed requires a horizon".into()))
            }
            _ => {}
        }
        if let Some(eta) = self.eta_override {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::Config(format!("eta_override must be positive, got {eta}")));
            }
        }
        Ok(())
    }

    /// Learning rate at time `t` (the round being predicted, or the end of the
    /// Euler step). Zero for the potential learners.
    pub fn eta(&self, t: f64) -> f64 {
        if let Some(eta) = self.eta_override {
            return eta;
        }
        let ln_n = (self.n as f64).ln();
        match self.kind {
            // √(2 ln n / T) is the minimizer of ln n / η + ηT / 2.
            LearnerKind::MwuFixed => (2.0 * ln_n / self.horizon.unwrap_or(1.0)).sqrt(),
            LearnerKind::MwuAnytime if t > 0.0 => (ln_n / t).sqrt(),
            _ => 0.0,
        }
    }
}

/// Softmax of `eta · gains` with the maximum subtracted first.
fn softmax(eta: f64, gains: &[f64]) -> SimplexDistribution {
    if eta == 0.0 {
        return SimplexDistribution::uniform(gains.len());
    }
    let top = gains.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scores = gains.iter().map(|g| (eta * (g - top)).exp()).collect();
    SimplexDistribution::from_scores(scores)
}

/// MWU prediction for round `state.round + 1`: `p_i ∝ exp(η_t G_i)`.
pub fn mwu_distribution(cfg: &LearnerConfig, state: &RegretState) -> Result<SimplexDistribution> {
    cfg.validate()?;
    check_dims("mwu_distribution", cfg.n, state.n())?;
    let t = (state.round + 1) as f64;
    Ok(softmax(cfg.eta(t), state.cumulative_gain()))
}

fn check_dims(op: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::domain(
            op,
            format!("configured for {expected} experts, state has {got}"),
        ));
    }
    Ok(())
}

fn check_time(op: &'static str, t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::domain(op, format!("time must be positive, got {t}")));
    }
    Ok(())
}

fn check_regret(op: &'static str, regret: &[f64]) -> Result<()> {
    if regret.is_empty() {
        return Err(Error::domain(op, "no experts"));
    }
    if let Some(r) = regret.iter().find(|r| !r.is_finite()) {
        return Err(Error::domain(op, format!("non-finite regret {r}")));
    }
    Ok(())
}

/// Common exponent to factor out so the largest `e^{x²/2t}` stays finite.
fn overflow_shift(t: f64, xs: impl Iterator<Item = f64>) -> f64 {
    let top = xs.map(|x| x.max(0.0)).fold(0.0, f64::max);
    let exponent = top * top / (2.0 * t);
    if exponent > OVERFLOW_EXPONENT {
        exponent
    } else {
        0.0
    }
}

/// Discrete quantile-potential player for round `round ≥ 1`.
///
/// `p_t ∝ −[φ(t, R_i/2 + 1) − φ(t, R_i/2 − 1)]`, uniform when the discrete
/// gradient vanishes.
pub fn quantile_potential_distribution(
    round: u64,
    prev_regret: &[f64],
) -> Result<SimplexDistribution> {
    if round < 1 {
        return Err(Error::domain(
            "quantile_potential_distribution",
            "predictions start at round 1",
        ));
    }
    check_regret("quantile_potential_distribution", prev_regret)?;
    let t = round as f64;
    let shift = overflow_shift(t, prev_regret.iter().map(|r| r / 2.0 + 1.0));
    let scores = prev_regret
        .iter()
        .map(|r| {
            let x = r / 2.0;
            phi_scaled_unchecked(t, x - 1.0, shift) - phi_scaled_unchecked(t, x + 1.0, shift)
        })
        .collect();
    Ok(SimplexDistribution::from_scores(scores))
}

/// Gradient player `p ∝ −∂x φ(t, scale · R_i)`; `scale` is `1/2` for the
/// quantile potential and `1` for the independent-experts potential.
fn gradient_distribution(t: f64, regret: &[f64], scale: f64) -> SimplexDistribution {
    let shift = overflow_shift(t, regret.iter().map(|r| r * scale));
    let scores = regret
        .iter()
        .map(|r| -phi_dx_scaled_unchecked(t, r * scale, shift))
        .collect();
    SimplexDistribution::from_scores(scores)
}

/// Independent-experts player: `p_i ∝ erfi(R_i / √(2t))` over positive regrets.
pub fn independent_potential_distribution(t: f64, regret: &[f64]) -> Result<SimplexDistribution> {
    check_time("independent_potential_distribution", t)?;
    check_regret("independent_potential_distribution", regret)?;
    Ok(gradient_distribution(t, regret, 1.0))
}

/// Continuous-time quantile-potential player: `p_i ∝ −∂x φ(t, R_i / 2)`.
pub fn quantile_potential_distribution_continuous(
    t: f64,
    regret: &[f64],
) -> Result<SimplexDistribution> {
    check_time("quantile_potential_distribution_continuous", t)?;
    check_regret("quantile_potential_distribution_continuous", regret)?;
    Ok(gradient_distribution(t, regret, 0.5))
}

/// The separable potential value `Σ φ(t, scale · R_i)`.
pub fn potential(t: f64, regret: &[f64], scale: f64) -> Result<f64> {
    check_time("potential", t)?;
    check_regret("potential", regret)?;
    Ok(regret.iter().map(|r| phi_scaled_unchecked(t, r * scale, 0.0)).sum())
}

/// A configured player strategy.
#[derive(Debug, Clone)]
pub struct Learner {
    cfg: LearnerConfig,
}

impl Learner {
    pub fn new(cfg: LearnerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Learner { cfg })
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.cfg
    }

    pub fn kind(&self) -> LearnerKind {
        self.cfg.kind
    }

    /// Distribution for round `state.round + 1` of the discrete game.
    pub fn predict_discrete(&self, state: &RegretState) -> Result<SimplexDistribution> {
        check_dims("predict_discrete", self.cfg.n, state.n())?;
        let round = state.round + 1;
        match self.cfg.kind {
            LearnerKind::MwuFixed | LearnerKind::MwuAnytime => mwu_distribution(&self.cfg, state),
            LearnerKind::QuantilePotential => quantile_potential_distribution(round, state.regret()),
            LearnerKind::IndependentPotential => {
                independent_potential_distribution(round as f64, state.regret())
            }
        }
    }

    /// Distribution used over the Euler step ending at `time`, computed from
    /// the state at the start of the step.
    pub fn predict_continuous(&self, time: f64, state: &RegretState) -> Result<SimplexDistribution> {
        check_dims("predict_continuous", self.cfg.n, state.n())?;
        check_time("predict_continuous", time)?;
        match self.cfg.kind {
            LearnerKind::MwuFixed | LearnerKind::MwuAnytime => {
                Ok(softmax(self.cfg.eta(time), state.cumulative_gain()))
            }
            LearnerKind::QuantilePotential => {
                quantile_potential_distribution_continuous(time, state.regret())
            }
            LearnerKind::IndependentPotential => {
                independent_potential_distribution(time, state.regret())
            }
        }
    }
}

/// An evaluation point of the sBHT: `x` is clamped at zero on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SbhtPoint {
    t: f64,
    x: Vec<f64>,
}

impl SbhtPoint {
    pub fn new(t: f64, x: &[f64]) -> Result<Self> {
        check_time("sbht", t)?;
        check_regret("sbht", x)?;
        Ok(SbhtPoint {
            t,
            x: x.iter().map(|v| v.max(0.0)).collect(),
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }
}

/// `∂t Φ + ½ Σ ∂ii Φ ‖e_i − p‖²` for `Φ(t, x) = Σ φ(t, x_i)` and `p ∝ ∇Φ`,
/// in the closed form `(1 / 2Θ²√t) Σ q_i (2Θ Q_i − QᵀQ)` with
/// `q_i = e^{x_i²/2t}`, `Q_i = erfi(x_i/√(2t))`, `Θ = Σ Q_i`.
///
/// Every `q_i`, `Q_i` is computed with the largest `x_i²/2t` factored out, and
/// the factor is restored at the end.
pub fn sbht(point: &SbhtPoint) -> f64 {
    let t = point.t;
    let n = point.x.len() as f64;
    let root_t = t.sqrt();
    let shift = point
        .x
        .iter()
        .map(|x| x * x / (2.0 * t))
        .fold(0.0, f64::max);
    let mut q = Vec::with_capacity(point.x.len());
    let mut big_q = Vec::with_capacity(point.x.len());
    for &x in &point.x {
        q.push((x * x / (2.0 * t) - shift).exp());
        big_q.push(erfi_scaled(x / (2.0 * t).sqrt(), shift));
    }
    let theta: f64 = big_q.iter().sum();
    if theta == 0.0 {
        return n / (2.0 * root_t);
    }
    // With p = Q/Θ the sum is Σ q_i (2 p_i − pᵀp).
    let p_sq: f64 = big_q.iter().map(|v| (v / theta).powi(2)).sum();
    let scaled: f64 = q
        .iter()
        .zip(&big_q)
        .map(|(qi, bq)| qi * (2.0 * bq / theta - p_sq))
        .sum();
    scaled * shift.exp() / (2.0 * root_t)
}

/// [`sbht`] straight from its definition, with `p ∝ −∇Φ` (uniform when the
/// gradient vanishes). Overflows where the closed form does not.
pub fn sbht_definition(point: &SbhtPoint) -> f64 {
    let t = point.t;
    let n = point.x.len();
    let grads: Vec<f64> = point
        .x
        .iter()
        .map(|&x| -phi_dx_scaled_unchecked(t, x, 0.0))
        .collect();
    let total: f64 = grads.iter().sum();
    let p: Vec<f64> = if total == 0.0 {
        vec![1.0 / n as f64; n]
    } else {
        grads.iter().map(|g| g / total).collect()
    };
    let p_sq: f64 = p.iter().map(|v| v * v).sum();
    point
        .x
        .iter()
        .zip(&p)
        .map(|(&x, &pi)| {
            let q = (x * x / (2.0 * t)).exp();
            let dt = q / (2.0 * t.sqrt());
            let dxx = -q / t.sqrt();
            dt + 0.5 * dxx * (1.0 - 2.0 * pi + p_sq)
        })
        .sum()
}

/// The lower bound `(2 − n)/√t` on [`sbht`].
pub fn sbht_lower_bound(n: usize, t: f64) -> f64 {
    (2.0 - n as f64) / t.sqrt()
}
