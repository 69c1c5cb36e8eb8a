//! Numerical sweeps over the inequalities behind the regret bounds.
//!
//! Each sweep evaluates a margin `LHS − RHS` (oriented so that the inequality
//! says `margin ≥ 0`) over a grid or a seeded random scan and reports the
//! smallest one. Where the two sides can be astronomically large the margin
//! is divided by `max(1, |largest term|)`, computed in log space, so the
//! tolerance is relative in the tails and absolute near the origin.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{run_continuous_game, run_discrete_game, slack, Observer, Step, Stride};
use crate::environments::{
    random_sequence, Adversary, AdversaryKind, AdversarySpec, BrownianPathConfig, CovarianceSpec,
};
use crate::error::{Error, Result};
use crate::game::{discrete_deriv_t, discrete_deriv_x, discrete_deriv_xx, GainVector, RegretState, SimplexDistribution};
use crate::learners::{potential, sbht, sbht_definition, sbht_lower_bound, LearnerConfig, LearnerKind, SbhtPoint};
use crate::specfun::{
    erfi, lambda, lambda_upper_bound, m0, m0_signed_log, phi, phi_dt, phi_dxx, phi_signed_log, SignedLog,
};

/// Stored violations per report; the count is always exact.
const MAX_LISTED_VIOLATIONS: usize = 25;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepViolation {
    pub point: Vec<f64>,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub lemma_id: String,
    /// Names of the coordinates of each point.
    pub axes: Vec<String>,
    pub points_checked: u64,
    pub worst_margin: f64,
    pub worst_point: Vec<f64>,
    pub tolerance: f64,
    pub violation_count: u64,
    pub violations: Vec<SweepViolation>,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }
}

/// Accumulates margins in a fixed order.
#[derive(Debug, Clone)]
struct Tally {
    points: u64,
    worst: f64,
    worst_point: Vec<f64>,
    tolerance: f64,
    violation_count: u64,
    violations: Vec<SweepViolation>,
}

impl Tally {
    fn new(tolerance: f64) -> Self {
        Tally {
            points: 0,
            worst: f64::INFINITY,
            worst_point: Vec::new(),
            tolerance,
            violation_count: 0,
            violations: Vec::new(),
        }
    }

    fn record(&mut self, point: &[f64], margin: f64) {
        self.points += 1;
        // NaN margins count as violations
        if !(margin >= self.worst) {
            self.worst = if margin.is_nan() { f64::NEG_INFINITY } else { margin };
            self.worst_point = point.to_vec();
        }
        if !(margin >= -self.tolerance) {
            self.violation_count += 1;
            if self.violations.len() < MAX_LISTED_VIOLATIONS {
                self.violations.push(SweepViolation {
                    point: point.to_vec(),
                    margin,
                });
            }
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.points += other.points;
        if other.worst < self.worst {
            self.worst = other.worst;
            self.worst_point = other.worst_point;
        }
        self.violation_count += other.violation_count;
        let room = MAX_LISTED_VIOLATIONS - self.violations.len();
        self.violations.extend(other.violations.into_iter().take(room));
        self
    }

    fn report(self, lemma_id: &str, axes: &[&str]) -> SweepReport {
        SweepReport {
            lemma_id: lemma_id.into(),
            axes: axes.iter().map(|a| a.to_string()).collect(),
            points_checked: self.points,
            worst_margin: self.worst,
            worst_point: self.worst_point,
            tolerance: self.tolerance,
            violation_count: self.violation_count,
            violations: self.violations,
        }
    }
}

/// Runs `f` over `chunks` in parallel and merges the tallies in chunk order.
fn par_tally<T, F>(tolerance: f64, chunks: &[T], f: F) -> Result<Tally>
where
    T: Sync,
    F: Fn(&T, &mut Tally) -> Result<()> + Sync + Send,
{
    let parts: Vec<Tally> = chunks
        .par_iter()
        .map(|c| {
            let mut tally = Tally::new(tolerance);
            f(c, &mut tally)?;
            Ok(tally)
        })
        .collect::<Result<_>>()?;
    Ok(parts
        .into_iter()
        .fold(Tally::new(tolerance), Tally::merge))
}

/// `Σ c_k v_k / max(1, max_k |v_k|)` without overflowing.
fn normalized_sum(terms: &[(f64, SignedLog)]) -> f64 {
    let scale = terms.iter().map(|(_, v)| v.ln_abs).fold(0.0, f64::max);
    terms.iter().map(|(c, v)| c * v.to_scaled(scale)).sum()
}

fn linspace(lo: f64, hi: f64, count: usize) -> impl Iterator<Item = f64> {
    let step = (hi - lo) / (count - 1) as f64;
    (0..count).map(move |i| if i == count - 1 { hi } else { lo + step * i as f64 })
}

/// `φ(t, x + 1) + φ(t, x − 1) ≥ 2 φ(t − 1, x)` for `t ∈ (1, 1000]`.
pub fn check_discrete_bhe() -> Result<SweepReport> {
    const TOLERANCE: f64 = 1e-10;
    // t − 1 log-spaced over [1e-6, 999], which puts t = 1 + 1e-6 on the grid
    let mut times: Vec<f64> = linspace((1e-6f64).log10(), 999f64.log10(), 498)
        .map(|e| 1.0 + 10f64.powf(e))
        .collect();
    times.extend([2.0, 100.0]);
    let tally = par_tally(TOLERANCE, &times, |&t, tally| {
        let half_width = 10.0 * t.sqrt();
        let mut xs: Vec<f64> = linspace(-half_width, half_width, 2000).collect();
        xs.extend([-1.0, 0.0, 1.0, -5.0, 30.0]);
        for x in xs {
            let margin = normalized_sum(&[
                (1.0, phi_signed_log(t, x + 1.0)?),
                (1.0, phi_signed_log(t, x - 1.0)?),
                (-2.0, phi_signed_log(t - 1.0, x)?),
            ]);
            tally.record(&[t, x], margin);
        }
        Ok(())
    })?;
    Ok(tally.report("discrete-bhe", &["t", "x"]))
}

/// `M0((x+z)²/2) + M0((x−z)²/2) ≥ 2√(1−z²) M0(x²/(2(1−z²)))`, `z ∈ [0, 1)`.
pub fn check_m0_convolution() -> Result<SweepReport> {
    const TOLERANCE: f64 = 1e-10;
    let zs = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99];
    let tally = par_tally(TOLERANCE, &zs, |&z, tally| {
        let shrink = 1.0 - z * z;
        for x in linspace(-6.0, 6.0, 2401) {
            let rhs = m0_signed_log(x * x / (2.0 * shrink))?.scale(2.0 * shrink.sqrt());
            let margin = normalized_sum(&[
                (1.0, m0_signed_log((x + z) * (x + z) / 2.0)?),
                (1.0, m0_signed_log((x - z) * (x - z) / 2.0)?),
                (-1.0, rhs),
            ]);
            tally.record(&[z, x], margin);
        }
        Ok(())
    })?;
    Ok(tally.report("m0-ineq", &["z", "x"]))
}

fn f_half(t: f64, x: f64) -> Result<f64> {
    phi(t, x / 2.0)
}

/// Sequence families for the discrete Itô sweep, all with `|Δx| ≤ 1`.
fn ito_sequence(index: u64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let len = rng.random_range(2..=200usize);
    let mut x = vec![rng.random_range(-3.0..=3.0)];
    for _ in 1..len {
        let prev = *x.last().unwrap();
        let step = match index % 5 {
            0 | 1 => rng.random_range(-1.0..=1.0),
            2 => {
                if rng.random_bool(0.5) {
                    1.0
                } else {
                    -1.0
                }
            }
            3 => 0.0,
            // persistent drift, mostly upward
            _ => rng.random_range(-0.2..=1.0),
        };
        x.push(prev + step);
    }
    x
}

/// The discrete Itô lower bound for `f(t, x) = φ(t, x/2)` over random
/// sequences, and the exact telescoping identity it comes from.
pub fn check_discrete_ito() -> Result<Vec<SweepReport>> {
    const TOLERANCE: f64 = 1e-9;
    const SEQUENCES: u64 = 1000;
    let seeds: Vec<u64> = (0..SEQUENCES).collect();
    let results: Vec<(f64, f64, f64, f64)> = seeds
        .par_iter()
        .map(|&i| -> Result<_> {
            let mut rng = ChaCha8Rng::seed_from_u64(0x1d0);
            rng.set_stream(i);
            let x = ito_sequence(i, &mut rng);
            let big_t = x.len();
            let lhs = f_half(big_t as f64, x[big_t - 1])? - f_half(1.0, x[0])?;
            let mut scale = lhs.abs().max(1.0);
            let mut first_order = 0.0;
            let mut drift = 0.0;
            let mut martingale = 0.0;
            for step in 2..=big_t {
                let t = step as f64;
                let prev = x[step - 2];
                let dx = x[step - 1] - prev;
                let fx = discrete_deriv_x(f_half, t, prev)?;
                let bhe = 0.5 * discrete_deriv_xx(f_half, t, prev)? + discrete_deriv_t(f_half, t, prev)?;
                let jump = f_half(t, x[step - 1])?
                    - (f_half(t, prev + 1.0)? + f_half(t, prev - 1.0)?) / 2.0;
                first_order += fx * dx;
                drift += bhe;
                martingale += jump;
                scale = scale.max(f_half(t, prev)?.abs());
            }
            let inequality = (lhs - first_order - drift) / scale;
            let identity = -(lhs - martingale - drift).abs() / scale;
            Ok((big_t as f64, x[big_t - 1], inequality, identity))
        })
        .collect::<Result<_>>()?;
    let mut ineq = Tally::new(TOLERANCE);
    let mut ident = Tally::new(TOLERANCE);
    for (i, (len, last, a, b)) in results.into_iter().enumerate() {
        let point = [i as f64, len, last];
        ineq.record(&point, a);
        ident.record(&point, b);
    }
    let axes = ["sequence", "T", "x_T"];
    Ok(vec![
        ineq.report("discrete-ito", &axes),
        ident.report("discrete-ito-identity", &axes),
    ])
}

/// Configuration of the potential-monotonicity game sweep.
#[derive(Debug, Clone)]
pub struct MonotoneSweep {
    pub sizes: Vec<usize>,
    pub horizon: u64,
    pub seeds: u64,
    pub continuous_horizon: f64,
    pub dt: f64,
    pub continuous_trials: u64,
}

impl Default for MonotoneSweep {
    fn default() -> Self {
        MonotoneSweep {
            sizes: vec![2, 8, 32],
            horizon: 2000,
            seeds: 50,
            continuous_horizon: 1.0,
            dt: 1e-3,
            continuous_trials: 10,
        }
    }
}

/// Every built-in adversary for `n` experts: seeded kinds once per seed,
/// deterministic kinds once, plus random fixed sequences.
pub fn adversary_suite(n: usize, horizon: u64, seeds: u64, sequences: u64) -> Result<Vec<(String, Adversary)>> {
    let mut suite = Vec::new();
    for seed in 0..seeds {
        let spec = AdversarySpec::new(AdversaryKind::UniformRandom, seed);
        suite.push((format!("uniform-random/{seed}"), Adversary::new(&spec, n, 0)?));
    }
    for kind in [AdversaryKind::SingleLeader, AdversaryKind::Alternating] {
        suite.push((kind.to_string(), Adversary::new(&AdversarySpec::new(kind, 0), n, 0)?));
    }
    for s in 0..sequences {
        let rows = random_sequence(n, horizon as usize, 0xf1ed ^ (s << 8) ^ n as u64);
        suite.push((format!("fixed-sequence/{s}"), Adversary::from_rows(rows)?));
    }
    Ok(suite)
}

/// `Φ(t, R_t) ≥ Φ(1, R_1) ≥ 0` along discrete games of the quantile-potential
/// learner, and `Φ(t, R(t)) ≥ −slack` along continuous ones.
pub fn check_potential_monotone(cfg: &MonotoneSweep) -> Result<Vec<SweepReport>> {
    const TOLERANCE: f64 = 1e-6;
    let mut games = Vec::new();
    for &n in &cfg.sizes {
        for (name, adv) in adversary_suite(n, cfg.horizon, cfg.seeds, cfg.seeds)? {
            games.push((n, name, adv));
        }
    }
    let discrete = par_tally(TOLERANCE, &games, |(n, _, adv), tally| {
        let learner = LearnerConfig::new(LearnerKind::QuantilePotential, *n);
        let mut start = None;
        let mut obs = |s: &Step<'_>| -> Result<()> {
            let t = s.state.time;
            let phi_t = potential(t, s.state.regret(), 0.5)?;
            let base = *start.get_or_insert(phi_t);
            if s.state.round == 1 {
                tally.record(&[*n as f64, t, phi_t], phi_t);
            }
            tally.record(&[*n as f64, t, phi_t], phi_t - base);
            Ok(())
        };
        run_discrete_game(&learner, adv, cfg.horizon, Stride::Geometric, 0, 0, Some(&mut obs as &mut Observer<'_>))?;
        Ok(())
    })?;

    let runs: Vec<(usize, u64)> = cfg
        .sizes
        .iter()
        .flat_map(|&n| (0..cfg.continuous_trials).map(move |trial| (n, trial)))
        .collect();
    let continuous = par_tally(0.0, &runs, |&(n, trial), tally| {
        let learner = LearnerConfig::new(LearnerKind::QuantilePotential, n);
        let path = BrownianPathConfig {
            cov: CovarianceSpec::identity(n)?,
            dt: cfg.dt,
            horizon: cfg.continuous_horizon,
            seed: 0x5eed,
        };
        let mut obs = |s: &Step<'_>| -> Result<()> {
            let t = s.state.time;
            let phi_t = potential(t, s.state.regret(), 0.5)?;
            tally.record(&[n as f64, trial as f64, t], phi_t + slack(cfg.dt, n, t));
            Ok(())
        };
        run_continuous_game(&learner, &path, Stride::Geometric, trial, Some(&mut obs as &mut Observer<'_>))?;
        Ok(())
    })?;
    Ok(vec![
        discrete.report("potential-monotone", &["n", "t", "potential"]),
        continuous.report("potential-monotone-continuous", &["n", "trial", "t"]),
    ])
}

/// `1 − M0(x²/2) ≥ e^{x²/2} / (x² + 1 + 2/x²)` for `x ∈ (0, 10]`.
pub fn check_expx2() -> Result<SweepReport> {
    let mut tally = Tally::new(1e-12);
    for x in linspace(0.01, 10.0, 1000) {
        let alpha = x * x / 2.0;
        let one_minus = SignedLog::from_f64(1.0);
        let m = m0_signed_log(alpha)?;
        let rhs = SignedLog {
            sign: 1.0,
            ln_abs: alpha - (x * x + 1.0 + 2.0 / (x * x)).ln(),
        };
        let margin = normalized_sum(&[(1.0, one_minus), (-1.0, m), (-1.0, rhs)]);
        tally.record(&[x], margin);
    }
    Ok(tally.report("expx2", &["x"]))
}

/// `λ(α) ≤ 3 + √(2 ln(α + 1))` on 10³ log-spaced `α ∈ [0, 10⁶]`, and the
/// trend `λ(α)/√(2 ln α)` decreasing over `α = 10², …, 10⁶` and at most
/// `1.35` at `10⁶`.
pub fn check_lambda_bound() -> Result<Vec<SweepReport>> {
    let alphas: Vec<f64> = linspace(0.0, 1e6f64.ln_1p(), 1000).map(f64::exp_m1).collect();
    let tally = par_tally(0.0, &alphas, |&alpha, tally| {
        tally.record(&[alpha], lambda_upper_bound(alpha) - lambda(alpha)?);
        Ok(())
    })?;
    let mut trend = Tally::new(0.0);
    let ratio = |a: f64| -> Result<f64> { Ok(lambda(a)? / (2.0 * a.ln()).sqrt()) };
    let decades = [1e2, 1e3, 1e4, 1e5, 1e6];
    for w in decades.windows(2) {
        trend.record(&[w[0], w[1]], ratio(w[0])? - ratio(w[1])?);
    }
    trend.record(&[1e6, 1e6], 1.35 - ratio(1e6)?);
    Ok(vec![
        tally.report("lambdabound", &["alpha"]),
        trend.report("lambdabound-trend", &["alpha", "next_alpha"]),
    ])
}

/// `(√π/2) erfi(z) < (e^{z²} − 1)/z` for `z ∈ (0, 6]`.
pub fn check_erfi_bound() -> Result<SweepReport> {
    let mut tally = Tally::new(0.0);
    for z in linspace(0.006, 6.0, 1000) {
        let lhs = std::f64::consts::PI.sqrt() / 2.0 * erfi(z)?;
        let rhs = (z * z).exp_m1() / z;
        let margin = (rhs - lhs) / rhs.max(1.0);
        // strict inequality: a zero margin is a violation
        tally.record(&[z], if margin > 0.0 { margin } else { margin.min(-f64::MIN_POSITIVE) });
    }
    Ok(tally.report("erfi-bound", &["z"]))
}

/// `φ_t + ½φ_xx = 0` for `x > 0` and `≥ 0` for `x < 0`.
pub fn check_continuous_bhe() -> Result<SweepReport> {
    let mut tally = Tally::new(1e-10);
    for t in [0.5, 1.0, 10.0] {
        let half_width = 8.0 * f64::sqrt(t);
        for x in linspace(-half_width, half_width, 2001) {
            let dt = phi_dt(t, x)?;
            let v = dt + 0.5 * phi_dxx(t, x)?;
            let margin = if x >= 0.0 { -v.abs() / dt.max(1.0) } else { v };
            tally.record(&[t, x], margin);
        }
    }
    Ok(tally.report("continuous-bhe", &["t", "x"]))
}

/// Strict monotonicity of `M0` on a 10⁴-point grid of `[0, 50]`.
pub fn check_m0_monotone() -> Result<SweepReport> {
    let mut tally = Tally::new(0.0);
    let grid: Vec<f64> = linspace(0.0, 50.0, 10_000).collect();
    for w in grid.windows(2) {
        let (a, b) = (m0(w[0])?, m0(w[1])?);
        let margin = (a - b) / a.abs().max(1.0);
        tally.record(&[w[0], w[1]], if margin > 0.0 { margin } else { margin.min(-f64::MIN_POSITIVE) });
    }
    Ok(tally.report("m0-monotone", &["a", "b"]))
}

/// Second central differences of `φ(t, ·)` are `≤ 1e-9`.
pub fn check_phi_concave() -> Result<SweepReport> {
    let mut tally = Tally::new(1e-9);
    for t in [0.5, 1.0, 10.0, 100.0] {
        let half_width = 5.0 * f64::sqrt(t);
        let h = half_width / 1000.0;
        for x in linspace(-half_width, half_width, 2001) {
            let d2 = phi(t, x + h)? + phi(t, x - h)? - 2.0 * phi(t, x)?;
            tally.record(&[t, x], -d2);
        }
    }
    Ok(tally.report("phi-concave", &["t", "x"]))
}

/// Scan density of the sBHT sweep.
#[derive(Debug, Clone)]
pub struct SbhtScan {
    pub max_n: usize,
    pub times: Vec<f64>,
    pub points_per_cell: usize,
    pub seed: u64,
}

impl Default for SbhtScan {
    fn default() -> Self {
        SbhtScan {
            max_n: 16,
            times: vec![0.25, 1.0, 4.0, 100.0],
            points_per_cell: 10_000,
            seed: 0x5b47,
        }
    }
}

/// `sBHT ≥ (2 − n)/√t` on random non-negative points with entries up to
/// `5√t`, and agreement of the closed form with the definition.
pub fn check_sbht(scan: &SbhtScan) -> Result<Vec<SweepReport>> {
    let cells: Vec<(usize, f64, u64)> = (1..=scan.max_n)
        .flat_map(|n| scan.times.iter().map(move |&t| (n, t)))
        .enumerate()
        .map(|(i, (n, t))| (n, t, i as u64))
        .collect();
    let bound = par_tally(1e-9, &cells, |&(n, t, stream), tally| {
        let mut rng = ChaCha8Rng::seed_from_u64(scan.seed);
        rng.set_stream(stream);
        let top = 5.0 * t.sqrt();
        let floor = sbht_lower_bound(n, t);
        for _ in 0..scan.points_per_cell {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..=top)).collect();
            let v = sbht(&SbhtPoint::new(t, &x)?);
            let mut point = vec![n as f64, t];
            point.extend(&x);
            tally.record(&point, v - floor);
        }
        Ok(())
    })?;
    let agreement = par_tally(1e-8, &cells, |&(n, t, stream), tally| {
        let mut rng = ChaCha8Rng::seed_from_u64(scan.seed ^ 0xa9);
        rng.set_stream(stream);
        let top = 5.0 * t.sqrt();
        for _ in 0..(scan.points_per_cell / 10).max(1) {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..=top)).collect();
            let point = SbhtPoint::new(t, &x)?;
            let closed = sbht(&point);
            let direct = sbht_definition(&point);
            let scale = direct.abs().max(1.0 / t.sqrt());
            tally.record(&[n as f64, t], -(closed - direct).abs() / scale);
        }
        Ok(())
    })?;
    Ok(vec![
        bound.report("sbht", &["n", "t", "x..."]),
        agreement.report("sbht-closed-form", &["n", "t"]),
    ])
}

/// Quadratic-covariation experiment for a fixed player distribution.
#[derive(Debug, Clone)]
pub struct CovariationRun {
    pub cov: CovarianceSpec,
    pub p: Vec<f64>,
    pub dt: f64,
    pub steps: u64,
    pub seed: u64,
}

impl Default for CovariationRun {
    fn default() -> Self {
        CovariationRun {
            cov: CovarianceSpec::equicorrelated(3, 0.5).expect("valid equicorrelation"),
            p: vec![0.5, 0.3, 0.2],
            dt: 1e-6,
            steps: 1_000_000,
            seed: 0xc0,
        }
    }
}

/// `(e_i − p)ᵀ Σ (e_j − p)`.
pub fn predicted_covariation_rate(sigma: &nalgebra::DMatrix<f64>, p: &[f64], i: usize, j: usize) -> f64 {
    let n = p.len();
    let e = |k: usize| nalgebra::DVector::from_fn(n, |m, _| if m == k { 1.0 } else { 0.0 });
    let pv = nalgebra::DVector::from_column_slice(p);
    (e(i) - &pv).dot(&(sigma * (e(j) - &pv)))
}

/// Realized covariation `Σ ΔR_i ΔR_j` against `(e_i − p)ᵀΣ(e_j − p)·T`; the
/// margin is `3 − |z|` with `z` the deviation in standard errors.
pub fn check_covariance(run: &CovariationRun) -> Result<SweepReport> {
    let n = run.cov.n();
    if run.p.len() != n {
        return Err(Error::Config("p and covariance disagree on n".into()));
    }
    let p = SimplexDistribution::new(run.p.clone())?;
    let path = BrownianPathConfig {
        cov: run.cov.clone(),
        dt: run.dt,
        horizon: run.dt * run.steps as f64,
        seed: run.seed,
    };
    let mut inc = path.increments(0)?;
    let mut state = RegretState::new(n);
    let mut dg = vec![0.0; n];
    let mut sum = vec![0.0; n * n];
    let mut sum_sq = vec![0.0; n * n];
    let mut steps = 0u64;
    while inc.next_into(&mut dg) {
        let r = state.apply(&p, &GainVector::increment(dg.clone())?, run.dt)?;
        for i in 0..n {
            for j in i..n {
                let prod = r[i] * r[j];
                sum[i * n + j] += prod;
                sum_sq[i * n + j] += prod * prod;
            }
        }
        steps += 1;
    }
    let sigma = run.cov.sigma();
    let horizon = state.time;
    let mut tally = Tally::new(0.0);
    let count = steps as f64;
    for i in 0..n {
        for j in i..n {
            let k = i * n + j;
            let mean = sum[k] / count;
            let var = (sum_sq[k] / count - mean * mean) * count / (count - 1.0);
            let se = (var * count).sqrt();
            let predicted = predicted_covariation_rate(&sigma, &run.p, i, j) * horizon;
            let z = (sum[k] - predicted) / se;
            tally.record(&[i as f64, j as f64, sum[k], predicted], 3.0 - z.abs());
        }
    }
    Ok(tally.report("covariance", &["i", "j", "realized", "predicted"]))
}

/// Every sweep name accepted by [`run_named`].
pub const SWEEPS: [&str; 12] = [
    "discrete-bhe",
    "m0-ineq",
    "discrete-ito",
    "potential-monotone",
    "expx2",
    "lambdabound",
    "erfi-bound",
    "continuous-bhe",
    "m0-monotone",
    "phi-concave",
    "sbht",
    "covariance",
];

/// Runs one sweep by name; some names produce more than one report.
pub fn run_named(name: &str) -> Result<Vec<SweepReport>> {
    Ok(match name {
        "discrete-bhe" => vec![check_discrete_bhe()?],
        "m0-ineq" => vec![check_m0_convolution()?],
        "discrete-ito" => check_discrete_ito()?,
        "potential-monotone" => check_potential_monotone(&MonotoneSweep::default())?,
        "expx2" => vec![check_expx2()?],
        "lambdabound" => check_lambda_bound()?,
        "erfi-bound" => vec![check_erfi_bound()?],
        "continuous-bhe" => vec![check_continuous_bhe()?],
        "m0-monotone" => vec![check_m0_monotone()?],
        "phi-concave" => vec![check_phi_concave()?],
        "sbht" => check_sbht(&SbhtScan::default())?,
        "covariance" => vec![check_covariance(&CovariationRun::default())?],
        other => {
            return Err(Error::Config(format!(
                "unknown lemma {other:?}; expected one of {}",
                SWEEPS.join(", ")
            )))
        }
    })
}

/// The specfun sweeps: expx2, lambdabound (with its trend) and erfi-bound.
pub fn check_specfun_lemmas() -> Result<Vec<SweepReport>> {
    let mut out = vec![check_expx2()?];
    out.extend(check_lambda_bound()?);
    out.push(check_erfi_bound()?);
    Ok(out)
}

/// Runs the named sweeps in order (all of [`SWEEPS`] when `names` is empty),
/// rejecting unknown names before anything runs.
pub fn run_sweeps(names: &[String]) -> Result<Vec<SweepReport>> {
    let names: Vec<&str> = if names.is_empty() {
        SWEEPS.to_vec()
    } else {
        names.iter().map(String::as_str).collect()
    };
    if let Some(bad) = names.iter().find(|n| !SWEEPS.contains(n)) {
        return Err(Error::Config(format!(
            "unknown lemma {bad:?}; expected one of {}",
            SWEEPS.join(", ")
        )));
    }
    let mut reports = Vec::new();
    for name in names {
        reports.extend(run_named(name)?);
    }
    Ok(reports)
}
