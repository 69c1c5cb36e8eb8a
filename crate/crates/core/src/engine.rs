//! Game loops, bound curves and the Monte Carlo harness.
//!
//! Per-trial output rows share one schema:
//!
//! ```text
//! t,trial,regret,quantile_eps,quantile_value,bound_kind,bound_value,violation
//! ```
//!
//! `regret` is `max_i R_i`. There is one row per sampled time, trial and
//! requested `ε` (a single row with empty quantile columns when no `ε` is
//! requested). A row is a violation when its measured value exceeds
//! `bound_value` by more than the tolerance: `1e-6·√t` in the discrete game
//! and the discretization slack `5·√dt·√(ln n + 1)·√t` in the continuous one.

use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::environments::{
    standard_normals, Adversary, AdversaryKind, AdversarySpec, BrownianPathConfig, CovarianceSpec,
};
use crate::error::{Error, Result};
use crate::game::{dot, quantile, GainVector, QuantileQuery, RegretState, SimplexDistribution};
use crate::learners::{Learner, LearnerConfig, LearnerKind};
use crate::specfun::lambda;

/// Discrete-game tolerance coefficient: violations need `> bound + 1e-6·√t`.
pub const DISCRETE_TOLERANCE: f64 = 1e-6;
/// Coefficient of the continuous-game slack `c·√dt·√(ln n + 1)·√t`.
pub const SLACK_COEFFICIENT: f64 = 5.0;
/// Allowed `|⟨p, r⟩|` relative to `max(1, max|g|)`.
const IDENTITY_TOLERANCE: f64 = 1e-12;

/// Discretization allowance for continuous-game bound checks.
pub fn slack(dt: f64, n: usize, t: f64) -> f64 {
    SLACK_COEFFICIENT * dt.sqrt() * ((n as f64).ln() + 1.0).sqrt() * t.sqrt()
}

/// Which steps a transcript records. The final step is always recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stride {
    /// Steps `1, 2, 4, 8, …`.
    #[default]
    Geometric,
    /// Every `k`-th step.
    Every(u64),
}

impl Stride {
    pub fn validate(&self) -> Result<()> {
        match self {
            Stride::Every(0) => Err(Error::Config("stride must be positive".into())),
            _ => Ok(()),
        }
    }

    pub fn samples(&self, step: u64, total: u64) -> bool {
        step == total
            || match self {
                Stride::Geometric => step.is_power_of_two(),
                Stride::Every(k) => step.is_multiple_of(*k),
            }
    }
}

/// What the per-step observer sees after each round or Euler step.
#[derive(Debug)]
pub struct Step<'a> {
    /// Distribution played in this step.
    pub p: &'a SimplexDistribution,
    pub gains: &'a GainVector,
    /// Instantaneous regret `g − ⟨p, g⟩·1`.
    pub instantaneous: &'a [f64],
    /// State after the step.
    pub state: &'a RegretState,
}

pub type Observer<'o> = dyn FnMut(&Step<'_>) -> Result<()> + 'o;

#[derive(Debug, Clone, Serialize)]
pub struct GameTranscript {
    /// Sampled states, strictly increasing in round; the last one is `final_state`.
    pub states: Vec<RegretState>,
    pub final_state: RegretState,
    pub learner_kind: LearnerKind,
    /// Adversary kind, or `brownian` for the continuous game.
    pub environment: String,
    pub seed: u64,
    pub trial: u64,
}

fn check_identity(p: &SimplexDistribution, g: &GainVector, r: &[f64]) -> Result<()> {
    let scale = g.gains().iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let defect = dot(p.weights(), r);
    if defect.abs() > IDENTITY_TOLERANCE * scale {
        return Err(Error::Internal(format!("<p, r> = {defect:e}, expected 0")));
    }
    Ok(())
}

/// Plays rounds `1..=horizon`: the learner predicts from the state through
/// the previous round, then the adversary answers.
pub fn run_discrete_game(
    learner: &LearnerConfig,
    adversary: &Adversary,
    horizon: u64,
    stride: Stride,
    seed: u64,
    trial: u64,
    mut observer: Option<&mut Observer<'_>>,
) -> Result<GameTranscript> {
    if horizon < 1 {
        return Err(Error::Config("horizon must be at least 1".into()));
    }
    stride.validate()?;
    if learner.n != adversary.n() {
        return Err(Error::Config(format!(
            "learner has {} experts, adversary {}",
            learner.n,
            adversary.n()
        )));
    }
    let player = Learner::new(learner.clone())?;
    let mut state = RegretState::new(learner.n);
    let mut states = Vec::new();
    for round in 1..=horizon {
        let mut step = || -> Result<()> {
            let p = player.predict_discrete(&state)?;
            let g = adversary.next_gain(round, &p)?;
            let r = state.apply(&p, &g, 1.0)?;
            check_identity(&p, &g, &r)?;
            if let Some(obs) = observer.as_deref_mut() {
                obs(&Step {
                    p: &p,
                    gains: &g,
                    instantaneous: &r,
                    state: &state,
                })?;
            }
            Ok(())
        };
        step().map_err(|e| e.at_round(round))?;
        if stride.samples(round, horizon) {
            states.push(state.clone());
        }
    }
    Ok(GameTranscript {
        states,
        final_state: state,
        learner_kind: learner.kind,
        environment: adversary.kind().to_string(),
        seed,
        trial,
    })
}

/// Euler loop: step `k` plays `p` computed at time `k·dt` from the state after
/// step `k − 1`, then applies `ΔG_k`.
pub fn run_continuous_game(
    learner: &LearnerConfig,
    path: &BrownianPathConfig,
    stride: Stride,
    trial: u64,
    mut observer: Option<&mut Observer<'_>>,
) -> Result<GameTranscript> {
    stride.validate()?;
    let n = path.cov.n();
    if learner.n != n {
        return Err(Error::Config(format!(
            "learner has {} experts, covariance {n}",
            learner.n
        )));
    }
    let player = Learner::new(learner.clone())?;
    let mut increments = path.increments(trial)?;
    let total = increments.steps();
    let mut state = RegretState::new(n);
    let mut states = Vec::new();
    let mut dg = vec![0.0; n];
    for k in 1..=total {
        increments.next_into(&mut dg);
        let mut step = || -> Result<()> {
            let p = player.predict_continuous(k as f64 * path.dt, &state)?;
            let g = GainVector::increment(dg.clone())?;
            let r = state.apply(&p, &g, path.dt)?;
            check_identity(&p, &g, &r)?;
            if let Some(obs) = observer.as_deref_mut() {
                obs(&Step {
                    p: &p,
                    gains: &g,
                    instantaneous: &r,
                    state: &state,
                })?;
            }
            Ok(())
        };
        step().map_err(|e| e.at_round(k))?;
        if stride.samples(k, total) {
            states.push(state.clone());
        }
    }
    Ok(GameTranscript {
        states,
        final_state: state,
        learner_kind: learner.kind,
        environment: "brownian".into(),
        seed: path.seed,
        trial,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    /// `√(2T ln n)`
    MwuFixed,
    /// `2√(t ln n)`
    MwuAnytime,
    /// `2λ((1 − ε)/ε)√t` on the `ε`-quantile of `R`.
    Quantile,
    /// `λ(3n − 1)√t`
    Independent,
    None,
}

impl BoundKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundKind::MwuFixed => "mwu-fixed",
            BoundKind::MwuAnytime => "mwu-anytime",
            BoundKind::Quantile => "quantile",
            BoundKind::Independent => "independent",
            BoundKind::None => "none",
        }
    }
}

/// Learner-specific bound curves for one experiment.
#[derive(Debug, Clone)]
pub struct BoundCurves {
    kind: BoundKind,
    n: usize,
    horizon: f64,
    /// `Some(dt)` in the continuous game.
    dt: Option<f64>,
    epsilons: Vec<QuantileQuery>,
    /// `λ((1 − ε)/ε)` per requested `ε`, or `λ(3n − 1)`.
    lambdas: Vec<f64>,
}

impl BoundCurves {
    pub fn new(
        learner: LearnerKind,
        n: usize,
        horizon: f64,
        dt: Option<f64>,
        identity_cov: bool,
        epsilons: &[f64],
    ) -> Result<Self> {
        let epsilons = epsilons
            .iter()
            .map(|&e| QuantileQuery::new(e))
            .collect::<Result<Vec<_>>>()?;
        let (kind, lambdas) = match learner {
            LearnerKind::MwuFixed => (BoundKind::MwuFixed, vec![]),
            LearnerKind::MwuAnytime => (BoundKind::MwuAnytime, vec![]),
            LearnerKind::QuantilePotential => {
                let lambdas = epsilons
                    .iter()
                    .map(|q| lambda((1.0 - q.epsilon()) / q.epsilon()))
                    .collect::<Result<Vec<_>>>()?;
                (BoundKind::Quantile, lambdas)
            }
            // the guarantee is for the continuous game with Σ = I
            LearnerKind::IndependentPotential if dt.is_some() && identity_cov => {
                (BoundKind::Independent, vec![lambda(3.0 * n as f64 - 1.0)?])
            }
            LearnerKind::IndependentPotential => (BoundKind::None, vec![]),
        };
        Ok(BoundCurves {
            kind,
            n,
            horizon,
            dt,
            epsilons,
            lambdas,
        })
    }

    pub fn kind(&self) -> BoundKind {
        self.kind
    }

    pub fn tolerance(&self, t: f64) -> f64 {
        match self.dt {
            Some(dt) => slack(dt, self.n, t),
            None => DISCRETE_TOLERANCE * t.sqrt(),
        }
    }

    /// Bound on `max_i R_i`, if the learner has one.
    pub fn regret_bound(&self, t: f64) -> Option<f64> {
        let ln_n = (self.n as f64).ln();
        match self.kind {
            BoundKind::MwuFixed => Some((2.0 * self.horizon * ln_n).sqrt()),
            BoundKind::MwuAnytime => Some(2.0 * (t * ln_n).sqrt()),
            BoundKind::Independent => Some(self.lambdas[0] * t.sqrt()),
            BoundKind::Quantile | BoundKind::None => None,
        }
    }

    /// Bound on the `i`-th requested quantile.
    pub fn quantile_bound(&self, i: usize, t: f64) -> Option<f64> {
        (self.kind == BoundKind::Quantile).then(|| 2.0 * self.lambdas[i] * t.sqrt())
    }

    /// Output rows for one sampled state.
    pub fn rows(&self, trial: u64, state: &RegretState) -> Result<Vec<BoundRow>> {
        let t = state.time;
        let regret = state.max_regret();
        let tol = self.tolerance(t);
        let make = |quantile_eps, quantile_value, bound: Option<f64>, measured: f64| {
            let kind = if bound.is_some() { self.kind } else { BoundKind::None };
            BoundRow {
                t,
                trial,
                regret,
                quantile_eps,
                quantile_value,
                bound_kind: kind,
                bound_value: bound,
                violation: bound.is_some_and(|b| measured > b + tol),
            }
        };
        if self.epsilons.is_empty() {
            return Ok(vec![make(None, None, self.regret_bound(t), regret)]);
        }
        self.epsilons
            .iter()
            .enumerate()
            .map(|(i, q)| {
                let value = quantile(*q, state.regret())?;
                Ok(match self.quantile_bound(i, t) {
                    Some(b) => make(Some(q.epsilon()), Some(value), Some(b), value),
                    None => make(Some(q.epsilon()), Some(value), self.regret_bound(t), regret),
                })
            })
            .collect()
    }
}

/// One line of the per-trial CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub t: f64,
    pub trial: u64,
    pub regret: f64,
    pub quantile_eps: Option<f64>,
    pub quantile_value: Option<f64>,
    pub bound_kind: BoundKind,
    pub bound_value: Option<f64>,
    pub violation: bool,
}

pub const CSV_HEADER: [&str; 8] = [
    "t",
    "trial",
    "regret",
    "quantile_eps",
    "quantile_value",
    "bound_kind",
    "bound_value",
    "violation",
];

pub fn write_rows_csv<W: Write>(out: W, rows: &[BoundRow]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(CSV_HEADER)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for row in rows {
        writer.write_record([
            row.t.to_string(),
            row.trial.to_string(),
            row.regret.to_string(),
            opt(row.quantile_eps),
            opt(row.quantile_value),
            row.bound_kind.as_str().to_string(),
            opt(row.bound_value),
            row.violation.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Learner section of an experiment spec; `n` and the horizon come from the
/// experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerDoc {
    pub kind: LearnerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_override: Option<f64>,
}

/// Adversary section of an experiment spec; seeded from `base_seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversaryDoc {
    pub kind: AdversaryKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leader: Option<usize>,
}

/// Brownian section of an experiment spec; `dt` is top level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathDoc {
    pub cov: CovarianceSpec,
}

fn default_trials() -> u64 {
    1
}

/// A full experiment: one learner against either a discrete adversary or a
/// Brownian gain process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub learner: LearnerDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adversary: Option<AdversaryDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathDoc>,
    pub n: usize,
    /// Rounds in the discrete game, terminal time in the continuous one.
    pub horizon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub stride: Stride,
}

/// The game an experiment plays, resolved and validated.
#[derive(Debug, Clone)]
pub enum Environment {
    Discrete { adversary: AdversarySpec, rounds: u64 },
    Continuous(BrownianPathConfig),
}

impl ExperimentSpec {
    pub fn learner_config(&self) -> LearnerConfig {
        LearnerConfig {
            kind: self.learner.kind,
            n: self.n,
            horizon: Some(self.horizon),
            eta_override: self.learner.eta_override,
        }
    }

    /// Checks every field and resolves the environment.
    pub fn resolve(&self) -> Result<Environment> {
        if self.n == 0 {
            return Err(Error::Config("n must be positive".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config(format!("horizon must be positive, got {}", self.horizon)));
        }
        self.stride.validate()?;
        self.learner_config().validate()?;
        for &eps in &self.epsilons {
            QuantileQuery::new(eps).map_err(|_| {
                Error::Config(format!("epsilon {eps} outside (0, 1]"))
            })?;
        }
        match (&self.adversary, &self.path) {
            (Some(adv), None) => {
                if self.horizon.fract() != 0.0 {
                    return Err(Error::Config(format!(
                        "discrete horizon must be a whole number of rounds, got {}",
                        self.horizon
                    )));
                }
                if self.dt.is_some() {
                    return Err(Error::Config("dt only applies to a Brownian path".into()));
                }
                let adversary = AdversarySpec {
                    kind: adv.kind,
                    seed: self.base_seed,
                    sequence_path: adv.sequence_path.clone(),
                    leader: adv.leader,
                };
                // surfaces unreadable sequence files before any game runs
                Adversary::new(&adversary, self.n, 0)?;
                Ok(Environment::Discrete {
                    adversary,
                    rounds: self.horizon as u64,
                })
            }
            (None, Some(path)) => {
                if path.cov.n() != self.n {
                    return Err(Error::Config(format!(
                        "covariance is {}x{}, expected n = {}",
                        path.cov.n(),
                        path.cov.n(),
                        self.n
                    )));
                }
                let dt = self
                    .dt
                    .ok_or_else(|| Error::Config("a Brownian path needs dt".into()))?;
                let cfg = BrownianPathConfig {
                    cov: path.cov.clone(),
                    dt,
                    horizon: self.horizon,
                    seed: self.base_seed,
                };
                cfg.validate()?;
                Ok(Environment::Continuous(cfg))
            }
            _ => Err(Error::Config(
                "exactly one of adversary and path must be given".into(),
            )),
        }
    }

    fn bound_curves(&self, env: &Environment) -> Result<BoundCurves> {
        let (dt, identity) = match env {
            Environment::Discrete { .. } => (None, true),
            Environment::Continuous(cfg) => (Some(cfg.dt), cfg.cov.is_identity()),
        };
        BoundCurves::new(self.learner.kind, self.n, self.horizon, dt, identity, &self.epsilons)
    }
}

/// Plays trial `trial` of an experiment.
pub fn run_trial(
    spec: &ExperimentSpec,
    env: &Environment,
    trial: u64,
    observer: Option<&mut Observer<'_>>,
) -> Result<GameTranscript> {
    let learner = spec.learner_config();
    match env {
        Environment::Discrete { adversary, rounds } => {
            let adv = Adversary::new(adversary, spec.n, trial)?;
            run_discrete_game(&learner, &adv, *rounds, spec.stride, spec.base_seed, trial, observer)
        }
        Environment::Continuous(cfg) => run_continuous_game(&learner, cfg, spec.stride, trial, observer),
    }
}

/// Output rows of one transcript.
pub fn transcript_rows(spec: &ExperimentSpec, transcript: &GameTranscript) -> Result<Vec<BoundRow>> {
    let env = spec.resolve()?;
    let curves = spec.bound_curves(&env)?;
    transcript_rows_with(&curves, transcript)
}

fn transcript_rows_with(curves: &BoundCurves, transcript: &GameTranscript) -> Result<Vec<BoundRow>> {
    let mut rows = Vec::new();
    for state in &transcript.states {
        rows.extend(curves.rows(transcript.trial, state)?);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundValue {
    pub kind: BoundKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub value: f64,
    pub tolerance: f64,
}

/// Aggregates over trials at one sampled time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub t: f64,
    pub mean_regret: f64,
    pub max_regret: f64,
    /// Aligned with the experiment's `epsilons`.
    pub mean_quantile_regret: Vec<f64>,
    pub bounds: Vec<BoundValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub t: f64,
    pub trial: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub measured: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub learner: LearnerKind,
    pub environment: String,
    pub n: usize,
    pub horizon: f64,
    pub trials: u64,
    pub base_seed: u64,
    pub epsilons: Vec<f64>,
    pub bound_kind: BoundKind,
    /// `"1e-6*sqrt(t)"` or the continuous slack formula.
    pub tolerance: String,
    pub rows: Vec<SummaryRow>,
    pub violation_count: usize,
    pub violations: Vec<Violation>,
    /// Per-trial rows in trial order, written to CSV rather than JSON.
    #[serde(skip)]
    pub trial_rows: Vec<BoundRow>,
}

impl ExperimentSummary {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_rows_csv(out, &self.trial_rows)
    }

    pub fn terminal(&self) -> Option<&SummaryRow> {
        self.rows.last()
    }
}

/// Runs every trial (in parallel on the current rayon pool) and aggregates.
/// The result does not depend on the number of threads.
pub fn monte_carlo(spec: &ExperimentSpec) -> Result<ExperimentSummary> {
    let env = spec.resolve()?;
    let curves = spec.bound_curves(&env)?;
    let per_trial: Vec<(Vec<RegretState>, Vec<BoundRow>)> = (0..spec.trials)
        .into_par_iter()
        .map(|trial| {
            let run = || -> Result<_> {
                let transcript = run_trial(spec, &env, trial, None)?;
                let rows = transcript_rows_with(&curves, &transcript)?;
                Ok((transcript.states, rows))
            };
            run().map_err(|e| e.at_trial(trial))
        })
        .collect::<Result<_>>()?;

    let queries: Vec<QuantileQuery> = spec
        .epsilons
        .iter()
        .map(|&e| QuantileQuery::new(e))
        .collect::<Result<_>>()?;
    let samples = per_trial[0].0.len();
    let trials = spec.trials as f64;
    let mut rows = Vec::with_capacity(samples);
    for s in 0..samples {
        let t = per_trial[0].0[s].time;
        let mut sum = 0.0;
        let mut max = f64::NEG_INFINITY;
        let mut q_sum = vec![0.0; queries.len()];
        for (states, _) in &per_trial {
            let state = &states[s];
            let r = state.max_regret();
            sum += r;
            max = max.max(r);
            for (acc, q) in q_sum.iter_mut().zip(&queries) {
                *acc += quantile(*q, state.regret())?;
            }
        }
        let tolerance = curves.tolerance(t);
        let mut bounds = Vec::new();
        if let Some(value) = curves.regret_bound(t) {
            bounds.push(BoundValue {
                kind: curves.kind(),
                epsilon: None,
                value,
                tolerance,
            });
        }
        for (i, q) in queries.iter().enumerate() {
            if let Some(value) = curves.quantile_bound(i, t) {
                bounds.push(BoundValue {
                    kind: curves.kind(),
                    epsilon: Some(q.epsilon()),
                    value,
                    tolerance,
                });
            }
        }
        rows.push(SummaryRow {
            t,
            mean_regret: sum / trials,
            max_regret: max,
            mean_quantile_regret: q_sum.iter().map(|v| v / trials).collect(),
            bounds,
        });
    }

    let trial_rows: Vec<BoundRow> = per_trial.into_iter().flat_map(|(_, r)| r).collect();
    let violations: Vec<Violation> = trial_rows
        .iter()
        .filter(|r| r.violation)
        .map(|r| Violation {
            t: r.t,
            trial: r.trial,
            epsilon: if r.bound_kind == BoundKind::Quantile { r.quantile_eps } else { None },
            measured: if r.bound_kind == BoundKind::Quantile {
                r.quantile_value.unwrap_or(r.regret)
            } else {
                r.regret
            },
            bound: r.bound_value.unwrap_or(f64::INFINITY),
        })
        .collect();
    let (environment, tolerance) = match &env {
        Environment::Discrete { adversary, .. } => {
            (adversary.kind.to_string(), format!("{DISCRETE_TOLERANCE:e}*sqrt(t)"))
        }
        Environment::Continuous(_) => (
            "brownian".to_string(),
            format!("{SLACK_COEFFICIENT}*sqrt(dt)*sqrt(ln(n)+1)*sqrt(t)"),
        ),
    };
    Ok(ExperimentSummary {
        learner: spec.learner.kind,
        environment,
        n: spec.n,
        horizon: spec.horizon,
        trials: spec.trials,
        base_seed: spec.base_seed,
        epsilons: spec.epsilons.clone(),
        bound_kind: curves.kind(),
        tolerance,
        rows,
        violation_count: violations.len(),
        violations,
        trial_rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxOfGaussians {
    pub n: usize,
    pub trials: u64,
    pub mean: f64,
    pub standard_error: f64,
    /// `mean / √(2 ln n)`.
    pub ratio: f64,
}

/// Monte Carlo estimate of `E[max of n standard normals]`, the expected
/// regret at `t = 1` of any player against independent Brownian experts.
pub fn max_of_gaussians_mean(n: usize, trials: u64, seed: u64) -> Result<MaxOfGaussians> {
    if n < 2 || trials < 2 {
        return Err(Error::Config("need n ≥ 2 and at least 2 trials".into()));
    }
    let maxima: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            standard_normals(seed, trial, n)
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let count = trials as f64;
    let mean = maxima.iter().sum::<f64>() / count;
    let var = maxima.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (count - 1.0);
    Ok(MaxOfGaussians {
        n,
        trials,
        mean,
        standard_error: (var / count).sqrt(),
        ratio: mean / (2.0 * (n as f64).ln()).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::potential;

    fn discrete_spec(kind: LearnerKind, adversary: AdversaryKind, n: usize, horizon: f64) -> ExperimentSpec {
        ExperimentSpec {
            learner: LearnerDoc {
                kind,
                eta_override: None,
            },
            adversary: Some(AdversaryDoc {
                kind: adversary,
                sequence_path: None,
                leader: None,
            }),
            path: None,
            n,
            horizon,
            dt: None,
            trials: 1,
            epsilons: vec![],
            base_seed: 3,
            stride: Stride::Geometric,
        }
    }

    #[test]
    fn stride_sampling() {
        let picked: Vec<u64> = (1..=20).filter(|&s| Stride::Geometric.samples(s, 20)).collect();
        assert_eq!(picked, vec![1, 2, 4, 8, 16, 20]);
        let picked: Vec<u64> = (1..=10).filter(|&s| Stride::Every(3).samples(s, 10)).collect();
        assert_eq!(picked, vec![3, 6, 9, 10]);
        assert!(Stride::Every(0).validate().is_err());
        let json = serde_json::to_string(&Stride::Every(4)).unwrap();
        assert_eq!(serde_json::from_str::<Stride>(&json).unwrap(), Stride::Every(4));
        assert_eq!(serde_json::from_str::<Stride>("\"geometric\"").unwrap(), Stride::Geometric);
    }

    #[test]
    fn one_round_regret_range() {
        for kind in [
            LearnerKind::MwuAnytime,
            LearnerKind::QuantilePotential,
            LearnerKind::IndependentPotential,
        ] {
            let spec = discrete_spec(kind, AdversaryKind::UniformRandom, 5, 1.0);
            let env = spec.resolve().unwrap();
            let tr = run_trial(&spec, &env, 0, None).unwrap();
            assert_eq!(tr.final_state.round, 1);
            assert!(tr.final_state.regret().iter().all(|r| r.abs() <= 2.0));
        }
    }

    #[test]
    fn zero_gains_keep_regret_at_zero() {
        let adv = Adversary::from_rows(vec![vec![0.0; 3]; 50]).unwrap();
        let cfg = LearnerConfig::new(LearnerKind::QuantilePotential, 3);
        let tr = run_discrete_game(&cfg, &adv, 50, Stride::Every(1), 0, 0, None).unwrap();
        assert_eq!(tr.states.len(), 50);
        for s in &tr.states {
            assert!(s.regret().iter().all(|r| *r == 0.0));
            let phi = potential(s.time, s.regret(), 0.5).unwrap();
            assert!((phi - 3.0 * s.time.sqrt()).abs() < 1e-12);
        }
        assert!(matches!(
            run_discrete_game(&cfg, &adv, 51, Stride::Geometric, 0, 0, None),
            Err(Error::AtRound { round: 51, .. })
        ));
    }

    #[test]
    fn transcripts_increase_and_end_at_horizon() {
        let spec = discrete_spec(LearnerKind::QuantilePotential, AdversaryKind::Alternating, 4, 100.0);
        let env = spec.resolve().unwrap();
        let tr = run_trial(&spec, &env, 0, None).unwrap();
        assert_eq!(tr.final_state.round, 100);
        assert_eq!(tr.states.last().unwrap(), &tr.final_state);
        assert!(tr.states.windows(2).all(|w| w[0].round < w[1].round));
    }

    #[test]
    fn observer_sees_orthogonal_regret() {
        let spec = discrete_spec(LearnerKind::QuantilePotential, AdversaryKind::UniformRandom, 6, 300.0);
        let env = spec.resolve().unwrap();
        let mut steps = 0;
        let mut obs = |s: &Step<'_>| -> Result<()> {
            steps += 1;
            assert!(dot(s.p.weights(), s.instantaneous).abs() < 1e-12);
            assert!(s.state.identity_defect() < 1e-9);
            Ok(())
        };
        run_trial(&spec, &env, 0, Some(&mut obs)).unwrap();
        assert_eq!(steps, 300);
    }

    #[test]
    fn single_leader_stays_under_quantile_bound() {
        let mut spec = discrete_spec(LearnerKind::QuantilePotential, AdversaryKind::SingleLeader, 8, 10_000.0);
        spec.epsilons = vec![1.0 / 8.0];
        let summary = monte_carlo(&spec).unwrap();
        assert_eq!(summary.violation_count, 0);
        let last = summary.terminal().unwrap();
        let bound = 2.0 * lambda(7.0).unwrap() * 100.0;
        assert!(last.max_regret <= bound);
        assert!((last.bounds[0].value - bound).abs() < 1e-9);
    }

    #[test]
    fn single_trial_summary_matches_transcript() {
        let mut spec = discrete_spec(LearnerKind::MwuAnytime, AdversaryKind::UniformRandom, 4, 64.0);
        spec.epsilons = vec![0.25, 0.5];
        let summary = monte_carlo(&spec).unwrap();
        let env = spec.resolve().unwrap();
        let tr = run_trial(&spec, &env, 0, None).unwrap();
        assert_eq!(summary.rows.len(), tr.states.len());
        for (row, state) in summary.rows.iter().zip(&tr.states) {
            assert_eq!(row.mean_regret, state.max_regret());
            assert_eq!(row.max_regret, state.max_regret());
        }
        assert_eq!(summary.trial_rows, transcript_rows(&spec, &tr).unwrap());
    }

    #[test]
    fn forced_violation_is_counted() {
        // a huge learning rate makes MWU follow the leader, which the
        // alternating adversary punishes every round
        let mut spec = discrete_spec(LearnerKind::MwuAnytime, AdversaryKind::Alternating, 2, 256.0);
        spec.learner.eta_override = Some(50.0);
        let summary = monte_carlo(&spec).unwrap();
        assert!(summary.violation_count > 0);
        assert_eq!(
            summary.violation_count,
            summary.trial_rows.iter().filter(|r| r.violation).count()
        );
    }

    #[test]
    fn continuous_single_expert_has_zero_regret() {
        let path = BrownianPathConfig {
            cov: CovarianceSpec::identity(1).unwrap(),
            dt: 0.01,
            horizon: 1.0,
            seed: 1,
        };
        let cfg = LearnerConfig::new(LearnerKind::IndependentPotential, 1);
        let tr = run_continuous_game(&cfg, &path, Stride::Every(1), 0, None).unwrap();
        assert_eq!(tr.states.len(), 100);
        assert!((tr.final_state.time - 1.0).abs() < 1e-12);
        for s in &tr.states {
            assert_eq!(s.regret(), &[0.0]);
        }
    }

    #[test]
    fn continuous_first_step_is_uniform() {
        let path = BrownianPathConfig {
            cov: CovarianceSpec::identity(3).unwrap(),
            dt: 0.01,
            horizon: 0.05,
            seed: 2,
        };
        let cfg = LearnerConfig::new(LearnerKind::QuantilePotential, 3);
        let mut first = None;
        let mut obs = |s: &Step<'_>| -> Result<()> {
            if first.is_none() {
                first = Some(s.p.weights().to_vec());
            }
            Ok(())
        };
        run_continuous_game(&cfg, &path, Stride::Geometric, 0, Some(&mut obs)).unwrap();
        assert!(first.unwrap().iter().all(|w| (w - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn spec_validation() {
        let good = discrete_spec(LearnerKind::MwuFixed, AdversaryKind::UniformRandom, 3, 10.0);
        assert!(good.resolve().is_ok());
        let mut bad = good.clone();
        bad.horizon = 10.5;
        assert!(bad.resolve().is_err());
        let mut bad = good.clone();
        bad.trials = 0;
        assert!(bad.resolve().is_err());
        let mut bad = good.clone();
        bad.epsilons = vec![1.5];
        assert!(bad.resolve().is_err());
        let mut bad = good.clone();
        bad.path = Some(PathDoc {
            cov: CovarianceSpec::identity(3).unwrap(),
        });
        assert!(bad.resolve().is_err());
        let mut bad = good;
        bad.adversary = None;
        bad.path = Some(PathDoc {
            cov: CovarianceSpec::identity(2).unwrap(),
        });
        bad.dt = Some(0.1);
        assert!(bad.resolve().is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let json = r#"{
            "learner": {"kind": "independent-potential"},
            "path": {"cov": {"kind": "identity", "n": 2}},
            "n": 2, "horizon": 1.0, "dt": 0.01, "trials": 3,
            "epsilons": [0.5], "base_seed": 9, "stride": {"every": 10}
        }"#;
        let spec: ExperimentSpec = serde_json::from_str(json).unwrap();
        assert!(matches!(spec.resolve().unwrap(), Environment::Continuous(_)));
        let back: ExperimentSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
        assert!(serde_json::from_str::<ExperimentSpec>(r#"{"learner":{"kind":"x"},"n":1,"horizon":1}"#).is_err());
    }

    #[test]
    fn csv_header_and_formatting() {
        let rows = vec![BoundRow {
            t: 4.0,
            trial: 1,
            regret: 0.5,
            quantile_eps: None,
            quantile_value: None,
            bound_kind: BoundKind::MwuAnytime,
            bound_value: Some(2.5),
            violation: false,
        }];
        let mut buf = Vec::new();
        write_rows_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "t,trial,regret,quantile_eps,quantile_value,bound_kind,bound_value,violation\n4,1,0.5,,,mwu-anytime,2.5,false\n"
        );
    }

    #[test]
    fn monte_carlo_is_reproducible_across_thread_counts() {
        let mut spec = discrete_spec(LearnerKind::QuantilePotential, AdversaryKind::UniformRandom, 4, 200.0);
        spec.trials = 6;
        spec.epsilons = vec![0.25];
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| monte_carlo(&spec)).unwrap();
        let b = three.install(|| monte_carlo(&spec)).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let (mut ca, mut cb) = (Vec::new(), Vec::new());
        a.write_csv(&mut ca).unwrap();
        b.write_csv(&mut cb).unwrap();
        assert_eq!(ca, cb);
    }

    #[test]
    fn max_of_gaussians_small_n() {
        // E[max of 2 standard normals] = 1/√π
        let m = max_of_gaussians_mean(2, 200_000, 4).unwrap();
        let want = 1.0 / std::f64::consts::PI.sqrt();
        assert!((m.mean - want).abs() < 4.0 * m.standard_error, "{m:?}");
    }
}
