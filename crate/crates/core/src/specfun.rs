//! Special functions behind the hypergeometric potential.
//!
//! `M0(α) = e^α − √(πα)·erfi(√α)` is the confluent hypergeometric function
//! `1F1(−1/2; 1/2; α)`. The potential is `φ(t, x) = √t · M0([x]₊² / 2t)` and
//! `λ(α)` is the positive root of `−M0(λ²/2) = α`.
//!
//! Everything is evaluated through Dawson's function `D(x) = e^{−x²}∫₀ˣ e^{s²} ds`
//! so that the `e^{x²}` growth is only applied at the very end, and callers that
//! need to compare astronomically large values can work with a shifted
//! exponent (`*_scaled`) or with [`SignedLog`] values.

use crate::error::{Error, Result};

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;
const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;
/// `√(π/2)`
const SQRT_FRAC_PI_2: f64 = 1.253_314_137_315_500_3;

/// Below this magnitude `erfi` is summed from its Maclaurin series.
const ERFI_SERIES_MAX: f64 = 1.5;
/// Below this magnitude Dawson's function is summed from its Maclaurin series.
const DAWSON_SERIES_MAX: f64 = 0.2;
/// Above this magnitude Dawson's function uses its asymptotic expansion.
const DAWSON_ASYMPTOTIC_MIN: f64 = 8.0;

/// Step of Rybicki's exponentially convergent sum. The truncation error is
/// of order `exp(−(π / 2h)²) ≈ 7e-18`.
const RYBICKI_H: f64 = 0.25;
/// `exp(−((2i + 1)h)²)` for `i = 0..14`; later terms are below `1e-19`.
const RYBICKI_COEFFS: [f64; 14] = [
    0.939_413_062_813_475_8,
    0.569_782_824_730_923,
    0.209_611_387_151_097_8,
    0.046_770_622_383_958_98,
    0.006_329_715_427_485_747,
    0.000_519_574_682_154_838_4,
    2.586_810_022_265_412e-5,
    7.811_489_408_304_491e-7,
    1.430_724_191_856_768_8e-8,
    1.589_391_009_451_636_8e-10,
    1.070_923_238_250_807_7e-12,
    4.376_618_502_870_85e-15,
    1.084_855_264_042_937_8e-17,
    1.631_013_922_670_185_8e-20,
];

/// Dawson's function `D(x) = e^{−x²} ∫₀ˣ e^{s²} ds`.
///
/// Maclaurin series near the origin, Rybicki's sum in the bulk and the
/// asymptotic expansion `D(x) ~ (1/2x) Σ (2k−1)!!/(2x²)^k` in the tail.
/// Relative accuracy is a few ulps everywhere.
pub fn dawson(x: f64) -> f64 {
    let ax = x.abs();
    let value = if ax < DAWSON_SERIES_MAX {
        dawson_series(ax)
    } else if ax < DAWSON_ASYMPTOTIC_MIN {
        dawson_rybicki(ax)
    } else {
        0.5 / ax * dawson_tail_sum(ax * ax)
    };
    value.copysign(x)
}

fn dawson_series(x: f64) -> f64 {
    // D(x) = Σ (−2x²)^k x / (2k+1)!!
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    for k in 1..40 {
        term *= -2.0 * x2 / (2 * k + 1) as f64;
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

fn dawson_rybicki(x: f64) -> f64 {
    // D(x) = lim_{h→0} π^{-1/2} Σ_{n odd} e^{−(x − nh)²} / n, centred on the
    // even multiple of h nearest to x so only 14 terms per side matter.
    let m = (x / (2.0 * RYBICKI_H)).round();
    let xp = x - 2.0 * m * RYBICKI_H;
    let mut e1 = (2.0 * xp * RYBICKI_H).exp();
    let e2 = e1 * e1;
    let mut d1 = 2.0 * m + 1.0;
    let mut d2 = d1 - 2.0;
    let mut sum = 0.0;
    for c in RYBICKI_COEFFS {
        sum += c * (e1 / d1 + 1.0 / (d2 * e1));
        d1 += 2.0;
        d2 -= 2.0;
        e1 *= e2;
    }
    FRAC_1_SQRT_PI * (-xp * xp).exp() * sum
}

/// `Σ_{k≥0} (2k−1)!! / (2s)^k`, summed until the terms stop shrinking.
fn dawson_tail_sum(s: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let next = term * (2 * k - 1) as f64 / (2.0 * s);
        if next >= term || next <= 1e-18 * sum {
            break;
        }
        term = next;
        sum += term;
    }
    sum
}

/// Imaginary error function `erfi(x) = (2/√π) ∫₀ˣ e^{s²} ds`.
///
/// Overflows to `±inf` once `x²` exceeds the `f64` exponent range (|x| ≳ 26.6).
pub fn erfi(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain("erfi", format!("non-finite argument {x}")));
    }
    Ok(erfi_scaled(x, 0.0))
}

/// `erfi(x) · e^{−shift}`, evaluated without forming `e^{x²}` on its own.
pub fn erfi_scaled(x: f64, shift: f64) -> f64 {
    if x.abs() <= ERFI_SERIES_MAX {
        erfi_series(x) * (-shift).exp()
    } else {
        FRAC_2_SQRT_PI * (x * x - shift).exp() * dawson(x)
    }
}

fn erfi_series(x: f64) -> f64 {
    // (2/√π) Σ x^{2k+1} / (k! (2k+1))
    let x2 = x * x;
    let mut power = x;
    let mut sum = x;
    for k in 1..60 {
        power *= x2 / k as f64;
        let term = power / (2 * k + 1) as f64;
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
    }
    FRAC_2_SQRT_PI * sum
}

/// `e^{−α} M0(α) = 1 − 2√α D(√α)`.
///
/// For large `α` the difference is taken analytically from the asymptotic
/// expansion of `D` so the leading `1` cancels exactly.
fn m0_reduced(alpha: f64) -> f64 {
    let x = alpha.sqrt();
    if x < DAWSON_ASYMPTOTIC_MIN {
        1.0 - 2.0 * x * dawson(x)
    } else {
        1.0 - dawson_tail_sum(alpha)
    }
}

fn check_m0_arg(op: &'static str, alpha: f64) -> Result<()> {
    if alpha.is_nan() || alpha < 0.0 || alpha.is_infinite() {
        return Err(Error::domain(
            op,
            format!("argument must be finite and non-negative, got {alpha}"),
        ));
    }
    Ok(())
}

/// `M0(α) = e^α − √(πα)·erfi(√α)` for `α ≥ 0`.
///
/// Strictly decreasing from `M0(0) = 1` to `−∞`; returns `−inf` once the
/// result leaves the `f64` range (α ≳ 709).
pub fn m0(alpha: f64) -> Result<f64> {
    check_m0_arg("m0", alpha)?;
    Ok(m0_scaled_unchecked(alpha, 0.0))
}

/// `M0(α) · e^{−shift}`.
pub fn m0_scaled(alpha: f64, shift: f64) -> Result<f64> {
    check_m0_arg("m0_scaled", alpha)?;
    Ok(m0_scaled_unchecked(alpha, shift))
}

pub(crate) fn m0_scaled_unchecked(alpha: f64, shift: f64) -> f64 {
    (alpha - shift).exp() * m0_reduced(alpha)
}

/// A real number stored as `sign · exp(ln_abs)`; `sign` is `-1`, `0` or `1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLog {
    pub sign: f64,
    pub ln_abs: f64,
}

impl SignedLog {
    pub const ZERO: SignedLog = SignedLog {
        sign: 0.0,
        ln_abs: f64::NEG_INFINITY,
    };

    pub fn from_f64(v: f64) -> Self {
        if v == 0.0 {
            Self::ZERO
        } else {
            SignedLog {
                sign: v.signum(),
                ln_abs: v.abs().ln(),
            }
        }
    }

    /// `self · e^{−shift}` as a plain float.
    pub fn to_scaled(self, shift: f64) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * (self.ln_abs - shift).exp()
        }
    }

    pub fn to_f64(self) -> f64 {
        self.to_scaled(0.0)
    }

    pub fn scale(self, factor: f64) -> Self {
        if factor == 0.0 || self.sign == 0.0 {
            return Self::ZERO;
        }
        SignedLog {
            sign: self.sign * factor.signum(),
            ln_abs: self.ln_abs + factor.abs().ln(),
        }
    }
}

/// `M0(α)` as a [`SignedLog`]; finite for every finite `α ≥ 0`.
pub fn m0_signed_log(alpha: f64) -> Result<SignedLog> {
    check_m0_arg("m0_signed_log", alpha)?;
    let reduced = m0_reduced(alpha);
    Ok(SignedLog::from_f64(reduced).scale_exp(alpha))
}

impl SignedLog {
    fn scale_exp(self, exponent: f64) -> Self {
        if self.sign == 0.0 {
            self
        } else {
            SignedLog {
                sign: self.sign,
                ln_abs: self.ln_abs + exponent,
            }
        }
    }
}

fn check_time(op: &'static str, t: f64) -> Result<()> {
    if t.is_nan() || t <= 0.0 || t.is_infinite() {
        return Err(Error::domain(op, format!("time must be positive, got {t}")));
    }
    Ok(())
}

fn check_x(op: &'static str, x: f64) -> Result<()> {
    if x.is_nan() || x.is_infinite() {
        return Err(Error::domain(op, format!("non-finite argument {x}")));
    }
    Ok(())
}

/// The potential `φ(t, x) = √t · M0([x]₊² / 2t)`.
pub fn phi(t: f64, x: f64) -> Result<f64> {
    check_time("phi", t)?;
    check_x("phi", x)?;
    Ok(phi_unchecked(t, x))
}

pub(crate) fn phi_unchecked(t: f64, x: f64) -> f64 {
    phi_scaled_unchecked(t, x, 0.0)
}

/// `φ(t, x) · e^{−shift}`.
pub(crate) fn phi_scaled_unchecked(t: f64, x: f64, shift: f64) -> f64 {
    if x <= 0.0 {
        t.sqrt() * (-shift).exp()
    } else {
        t.sqrt() * m0_scaled_unchecked(x * x / (2.0 * t), shift)
    }
}

/// `φ(t, x)` as a [`SignedLog`], finite even where `φ` itself overflows.
pub fn phi_signed_log(t: f64, x: f64) -> Result<SignedLog> {
    check_time("phi_signed_log", t)?;
    check_x("phi_signed_log", x)?;
    let xp = x.max(0.0);
    Ok(m0_signed_log(xp * xp / (2.0 * t))?.scale(t.sqrt()))
}

/// `∂x φ(t, x) = −√(π/2) · erfi(x / √(2t))` for `x > 0`, zero otherwise.
pub fn phi_dx(t: f64, x: f64) -> Result<f64> {
    check_time("phi_dx", t)?;
    check_x("phi_dx", x)?;
    Ok(phi_dx_scaled_unchecked(t, x, 0.0))
}

pub(crate) fn phi_dx_scaled_unchecked(t: f64, x: f64, shift: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -SQRT_FRAC_PI_2 * erfi_scaled(x / (2.0 * t).sqrt(), shift)
    }
}

/// `∂xx φ(t, x) = −e^{x²/2t} / √t` for `x ≥ 0` (right limit at the kink),
/// zero for `x < 0`.
pub fn phi_dxx(t: f64, x: f64) -> Result<f64> {
    check_time("phi_dxx", t)?;
    check_x("phi_dxx", x)?;
    if x < 0.0 {
        Ok(0.0)
    } else {
        Ok(-(x * x / (2.0 * t)).exp() / t.sqrt())
    }
}

/// `∂t φ(t, x) = e^{[x]₊²/2t} / (2√t)`.
pub fn phi_dt(t: f64, x: f64) -> Result<f64> {
    check_time("phi_dt", t)?;
    check_x("phi_dt", x)?;
    let xp = x.max(0.0);
    Ok((xp * xp / (2.0 * t)).exp() / (2.0 * t.sqrt()))
}

/// Default absolute tolerance on `|−M0(λ²/2) − α|`.
pub const DEFAULT_LAMBDA_TOLERANCE: f64 = 1e-10;
const LAMBDA_MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaQuery {
    pub alpha: f64,
    pub tolerance: f64,
}

impl LambdaQuery {
    pub fn new(alpha: f64) -> Result<Self> {
        Self::with_tolerance(alpha, DEFAULT_LAMBDA_TOLERANCE)
    }

    pub fn with_tolerance(alpha: f64, tolerance: f64) -> Result<Self> {
        if !(alpha >= 0.0) || alpha.is_infinite() {
            return Err(Error::domain(
                "lambda_inv",
                format!("alpha must be finite and non-negative, got {alpha}"),
            ));
        }
        if !(tolerance > 0.0) {
            return Err(Error::domain(
                "lambda_inv",
                format!("tolerance must be positive, got {tolerance}"),
            ));
        }
        Ok(LambdaQuery { alpha, tolerance })
    }
}

/// Upper end of the root bracket, `3 + √(2 ln(α + 1)) ≥ λ(α)`.
pub fn lambda_upper_bound(alpha: f64) -> f64 {
    3.0 + (2.0 * alpha.ln_1p()).sqrt()
}

/// `λ(α)`: the unique positive root of `−M0(λ²/2) = α`, by bisection.
///
/// Stops once the residual is within `q.tolerance` or the bracket has shrunk
/// to adjacent floats, returning whichever endpoint has the smaller residual.
/// For large `α` the residual at the best `f64` root can exceed a tight
/// absolute tolerance because `−M0(λ²/2)` is steep there.
pub fn lambda_inv(q: LambdaQuery) -> Result<f64> {
    let alpha = q.alpha;
    let residual = |lam: f64| -m0_scaled_unchecked(lam * lam / 2.0, 0.0) - alpha;

    let mut lo = 0.0;
    let mut hi = lambda_upper_bound(alpha);
    let (f_lo, f_hi) = (residual(lo), residual(hi));
    if !(f_lo < 0.0 && f_hi >= 0.0) {
        return Err(Error::Internal(format!(
            "lambda bracket [{lo}, {hi}] does not enclose the root for alpha = {alpha}: \
             residuals {f_lo}, {f_hi}"
        )));
    }
    let (mut r_lo, mut r_hi) = (f_lo, f_hi);
    for _ in 0..LAMBDA_MAX_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let r = residual(mid);
        if r.abs() <= q.tolerance {
            return Ok(mid);
        }
        if r < 0.0 {
            lo = mid;
            r_lo = r;
        } else {
            hi = mid;
            r_hi = r;
        }
    }
    Ok(if r_lo.abs() <= r_hi.abs() { lo } else { hi })
}

/// `λ(α)` at the default tolerance.
pub fn lambda(alpha: f64) -> Result<f64> {
    lambda_inv(LambdaQuery::new(alpha)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Truncated Maclaurin series, the independent oracle for `erfi`.
    fn erfi_oracle(x: f64) -> f64 {
        let mut sum = 0.0;
        let mut fact = 1.0;
        for k in 0..=60 {
            if k > 0 {
                fact *= k as f64;
            }
            sum += x.powi(2 * k + 1) / (fact * (2 * k + 1) as f64);
        }
        FRAC_2_SQRT_PI * sum
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn rybicki_table_matches_definition() {
        for (i, c) in RYBICKI_COEFFS.iter().enumerate() {
            let exact = (-(((2 * i + 1) as f64) * RYBICKI_H).powi(2)).exp();
            assert!(rel(*c, exact) < 1e-14, "coefficient {i}: {c} vs {exact}");
        }
    }

    #[test]
    fn erfi_basic_examples() {
        assert_eq!(erfi(0.0).unwrap(), 0.0);
        for x in [0.5, 1.0, 2.0] {
            assert_eq!(erfi(-x).unwrap(), -erfi(x).unwrap());
        }
        assert!(rel(erfi(1.0).unwrap(), erfi_oracle(1.0)) < 1e-12);
        assert!(erfi(f64::NAN).is_err());
        assert!(erfi(f64::INFINITY).is_err());
    }

    #[test]
    fn erfi_matches_series_oracle_in_both_regimes() {
        // The oracle is numerically sound up to |x| ≈ 4 with 60 terms.
        let mut x = 0.01;
        while x <= 4.0 {
            let got = erfi(x).unwrap();
            assert!(rel(got, erfi_oracle(x)) < 1e-12, "x = {x}");
            x += 0.0137;
        }
    }

    #[test]
    fn erfi_matches_high_precision_values() {
        // 40-digit reference values.
        let refs = [
            (0.25, 0.288_083_619_794_971_98),
            (0.5, 0.614_952_094_696_510_98),
            (1.0, 1.650_425_758_797_542_9),
            (1.5, 4.584_733_257_284_427),
            (2.0, 18.564_802_414_575_553),
            (3.0, 1_629.994_622_601_565_7),
            (4.0, 1_296_959.730_717_639_2),
            (6.0, 411_275_145_582_823.87),
            (8.0, 4.432_449_746_002_334_6e26),
        ];
        for (x, want) in refs {
            assert!(rel(erfi(x).unwrap(), want) < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn dawson_matches_high_precision_values() {
        let refs = [
            (0.05, 0.049_916_749_940_509_247),
            (0.15, 0.147_770_120_469_667_87),
            (0.35, 0.322_769_534_857_408_28),
            (0.5, 0.424_436_383_502_022_3),
            (1.0, 0.538_079_506_912_768_4),
            (1.5, 0.428_249_071_085_398_63),
            (2.0, 0.301_340_388_923_791_97),
            (3.0, 0.178_271_030_610_558_29),
            (4.5, 0.114_088_610_226_824_98),
            (6.0, 0.084_542_688_974_543_852),
            (8.0, 0.063_000_198_707_553_388),
            (9.0, 0.055_905_046_724_350_461),
            (12.0, 0.041_812_876_453_988_26),
            (20.0, 0.025_031_367_926_403_672),
        ];
        for (x, want) in refs {
            assert!(rel(dawson(x), want) < 1e-13, "x = {x}: {}", dawson(x));
            assert_eq!(dawson(-x), -dawson(x));
        }
    }

    #[test]
    fn dawson_is_continuous_across_regime_switches() {
        for edge in [DAWSON_SERIES_MAX, DAWSON_ASYMPTOTIC_MIN] {
            let below = dawson(edge * (1.0 - 1e-12));
            let above = dawson(edge);
            assert!(rel(below, above) < 1e-11, "edge {edge}");
        }
    }

    #[test]
    fn m0_examples() {
        assert_eq!(m0(0.0).unwrap(), 1.0);
        let oracle = 0.5f64.exp() - (0.5 * PI).sqrt() * erfi_oracle(0.5f64.sqrt());
        assert!((m0(0.5).unwrap() - oracle).abs() < 1e-10);
        let lam0 = lambda(0.0).unwrap();
        assert!(m0(lam0 * lam0 / 2.0).unwrap().abs() < 1e-9);
        assert!(m0(-1e-3).is_err());
        assert!(m0(f64::NAN).is_err());
    }

    #[test]
    fn m0_matches_high_precision_values() {
        let refs = [
            (0.01, 0.989_983_299_940_383_47),
            (0.1, 0.898_299_395_374_839_92),
            (0.5, 0.453_763_608_789_900_52),
            (1.0, -0.207_021_663_355_317_98),
            (2.0, -2.068_759_472_290_186_9),
            (5.0, -23.308_418_635_838_295),
            (10.0, -1_338.143_476_782_062_1),
            (25.0, -1_536_638_140.985_432_5),
            (36.0, -62_565_746_304_822.172),
            (50.0, -5.348_623_359_711_537_6e19),
            (100.0, -1.364_741_952_770_839e41),
            (300.0, -3.253_700_700_524_353e127),
        ];
        for (a, want) in refs {
            assert!(rel(m0(a).unwrap(), want) < 1e-12, "alpha = {a}");
        }
    }

    #[test]
    fn m0_signed_log_agrees_where_finite_and_survives_overflow() {
        for a in [0.0, 0.3, 0.85, 2.0, 40.0, 300.0, 700.0] {
            let direct = m0(a).unwrap();
            let via_log = m0_signed_log(a).unwrap().to_f64();
            assert!(rel(via_log, direct) < 1e-12, "alpha = {a}");
        }
        let big = m0_signed_log(5e7).unwrap();
        assert_eq!(big.sign, -1.0);
        // −M0(α) ≈ e^α / 2α
        assert!((big.ln_abs - (5e7 - (1e8f64).ln())).abs() < 1e-6);
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi(1.0, 0.0).unwrap(), 1.0);
        assert_eq!(phi(4.0, -3.0).unwrap(), 2.0);
        assert_eq!(phi(1.0, 1.0).unwrap(), m0(0.5).unwrap());
        assert!(phi(0.0, 1.0).is_err());
        assert!(phi(-1.0, 1.0).is_err());
        assert!(phi_dx(0.0, 1.0).is_err());
        assert!(phi_dxx(-2.0, 1.0).is_err());
        assert!(phi_dt(0.0, 1.0).is_err());
    }

    #[test]
    fn phi_derivative_examples() {
        assert_eq!(phi_dx(1.0, -2.0).unwrap(), 0.0);
        assert_eq!(phi_dt(1.0, 0.0).unwrap(), 0.5);
        assert_eq!(phi_dxx(4.0, 0.0).unwrap(), -0.5);
        assert_eq!(phi_dxx(4.0, -0.1).unwrap(), 0.0);
        let h = 1e-5;
        let fd = (phi(2.0, 1.0 + h).unwrap() - phi(2.0, 1.0 - h).unwrap()) / (2.0 * h);
        assert!((phi_dx(2.0, 1.0).unwrap() - fd).abs() < 1e-6);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for t in [0.5, 1.0, 10.0, 100.0] {
            let st = f64::sqrt(t);
            let h = 1e-4 * st;
            let n = 400;
            for k in 0..=n {
                let x = -5.0 * st + 10.0 * st * k as f64 / n as f64;
                if x.abs() < 1e-3 {
                    continue;
                }
                let f = |x: f64| phi(t, x).unwrap();
                let fd_x = (f(x + h) - f(x - h)) / (2.0 * h);
                let fd_xx = (f(x + h) + f(x - h) - 2.0 * f(x)) / (h * h);
                let ht = 1e-5 * t;
                let fd_t = (phi(t + ht, x).unwrap() - phi(t - ht, x).unwrap()) / (2.0 * ht);
                let close = |fd: f64, exact: f64| (fd - exact).abs() <= 1e-6 * exact.abs() + 1e-12;
                if x.abs() > h {
                    assert!(close(fd_x, phi_dx(t, x).unwrap()), "dx t={t} x={x}");
                    assert!(close(fd_xx, phi_dxx(t, x).unwrap()), "dxx t={t} x={x}");
                }
                assert!(close(fd_t, phi_dt(t, x).unwrap()), "dt t={t} x={x}");
            }
        }
    }

    #[test]
    fn m0_strictly_decreasing_on_grid() {
        let n = 10_000;
        let mut prev = m0(0.0).unwrap();
        for k in 1..=n {
            let a = 50.0 * k as f64 / n as f64;
            let cur = m0(a).unwrap();
            assert!(cur < prev, "alpha = {a}");
            prev = cur;
        }
    }

    #[test]
    fn phi_concave_in_x() {
        for t in [0.5, 1.0, 10.0, 100.0] {
            let st = f64::sqrt(t);
            let n = 2_000;
            let h = 10.0 * st / n as f64;
            for k in 1..n {
                let x = -5.0 * st + h * k as f64;
                let d2 = phi(t, x + h).unwrap() + phi(t, x - h).unwrap() - 2.0 * phi(t, x).unwrap();
                assert!(d2 <= 1e-9, "t={t} x={x} d2={d2}");
            }
        }
    }

    #[test]
    fn phi_bounded_by_sqrt_t() {
        for t in [0.5f64, 3.0, 40.0] {
            for k in -50..=50 {
                let x = k as f64 * 0.3;
                assert!(phi(t, x).unwrap() <= t.sqrt() + 1e-15);
            }
        }
    }

    #[test]
    fn continuous_backwards_heat_equation() {
        for t in [0.5f64, 1.0, 10.0] {
            for k in 1..=500 {
                let x = 0.02 * k as f64 * t.sqrt();
                let bhe = phi_dt(t, x).unwrap() + 0.5 * phi_dxx(t, x).unwrap();
                let scale = phi_dt(t, x).unwrap().max(1.0);
                assert!(bhe.abs() <= 1e-10 * scale, "t={t} x={x} bhe={bhe}");
                let bhe_neg = phi_dt(t, -x).unwrap() + 0.5 * phi_dxx(t, -x).unwrap();
                assert!(bhe_neg >= 0.0);
            }
        }
    }

    #[test]
    fn lambda_examples() {
        let lam0 = lambda(0.0).unwrap();
        assert!((lam0 - 1.3069).abs() < 1e-3);
        assert!((lam0 - 1.306_929_727_719_281).abs() < 1e-9);
        assert!(lambda(3.0).unwrap() <= 3.0 + (2.0 * 4f64.ln()).sqrt());
        for lam in [1.5, 3.0] {
            let alpha = -m0(lam * lam / 2.0).unwrap();
            assert!(alpha >= 0.0);
            let back = lambda_inv(LambdaQuery::with_tolerance(alpha, 1e-13).unwrap()).unwrap();
            assert!((back - lam).abs() < 1e-8, "lambda* = {lam}: {back}");
        }
        // λ* = 0.5 gives −M0 < 0, outside the domain of λ.
        assert!(-m0(0.125).unwrap() < 0.0);
        assert!(LambdaQuery::new(-1.0).is_err());
        assert!(LambdaQuery::with_tolerance(1.0, 0.0).is_err());
    }

    #[test]
    fn lambda_matches_high_precision_values() {
        let refs = [
            (0.0, 1.306_929_727_719_281),
            (1.0, 1.723_695_927_582_736),
            (3.0, 2.171_127_436_011_261_2),
            (10.0, 2.772_883_714_899_589_5),
            (100.0, 3.716_434_846_938_402),
            (1000.0, 4.396_638_545_392_910_2),
            (1e6, 5.875_179_440_278_686),
        ];
        for (a, want) in refs {
            assert!((lambda(a).unwrap() - want).abs() < 1e-10, "alpha = {a}");
        }
    }

    #[test]
    fn lambda_strictly_increasing() {
        let mut prev = lambda(0.0).unwrap();
        for k in 1..200 {
            let a = 10f64.powf(-3.0 + 9.0 * k as f64 / 200.0);
            let cur = lambda(a).unwrap();
            assert!(cur > prev);
            prev = cur;
        }
    }
}
