//! Laplace transforms `∫_0^∞ e^{-ts} s^α (log s)^j ds`, asymptotic expansions
//! built from them, the cut-off bound for densities vanishing to a given
//! order, and limits `t^n ∫ e^{-t f} ρ ω^n` over parametrized complex curves.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::asymptotics::fit::linear_fit;
use crate::lattice::{rational_to_f64, Rational};
use crate::quadrature;
use crate::special::{gamma_derivative, SpecialError};

/// Largest supported power of the logarithm.
pub const MAX_LOG_POWER: u32 = 2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LaplaceError {
    #[error("exponent α = {0} must exceed −1")]
    AlphaDomain(f64),
    #[error("log power j = {0} exceeds {MAX_LOG_POWER}")]
    LogPower(u32),
    #[error("t = {0} must be positive")]
    NonPositiveT(f64),
    #[error("expansion needs t > 1, got {0}")]
    ExpansionDomain(f64),
    #[error("cut-off A = {0} must be positive")]
    NonPositiveCutoff(f64),
    #[error("tail bound needs t·A > {needed}; widen A (t·A = {got})")]
    WidenCutoff { needed: f64, got: f64 },
    #[error("expansion terms must be sorted by increasing α + ν (term {0})")]
    Unsorted(usize),
    #[error("curve-limit fit did not converge (relative residual {0:e})")]
    NonConvergentFit(f64),
    #[error("negative constant C = {0}")]
    NegativeConstant(f64),
    #[error(transparent)]
    Special(#[from] SpecialError),
}

fn check_term(alpha: f64, j: u32, t: f64) -> Result<(), LaplaceError> {
    if !(alpha > -1.0) {
        return Err(LaplaceError::AlphaDomain(alpha));
    }
    if j > MAX_LOG_POWER {
        return Err(LaplaceError::LogPower(j));
    }
    if !(t > 0.0) {
        return Err(LaplaceError::NonPositiveT(t));
    }
    Ok(())
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `∫_0^∞ e^{-ts} s^α (log s)^j ds = ∂_α^j [Γ(α+1) t^{-(α+1)}]`
/// `= t^{-(α+1)} Σ_{i≤j} C(j,i) Γ^{(i)}(α+1) (−log t)^{j−i}`.
pub fn term_transform_exact(alpha: f64, j: u32, t: f64) -> Result<f64, LaplaceError> {
    check_term(alpha, j, t)?;
    let neg_log_t = -t.ln();
    let mut sum = 0.0;
    for i in 0..=j {
        sum += binomial(j, i) * gamma_derivative(alpha + 1.0, i)? * neg_log_t.powi((j - i) as i32);
    }
    Ok(sum * t.powf(-(alpha + 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncatedTransform {
    /// `∫_0^A e^{-ts} s^α (log s)^j ds` by adaptive quadrature.
    pub value: f64,
    /// Quadrature error estimate on `[0, A]`.
    pub quadrature_error: f64,
    /// Certified bound on `|∫_A^∞ e^{-ts} s^α (log s)^j ds|`.
    pub tail_bound: f64,
}

/// `Γ(a, x) <= x^{a−1} e^{−x} / (1 − (a−1)/x)` for `x > a − 1`, and
/// `Γ(a, x) <= x^{a−1} e^{−x}` when `a <= 1`.
fn upper_gamma_bound(a: f64, x: f64) -> Result<f64, LaplaceError> {
    let lead = ((a - 1.0) * x.ln() - x).exp();
    if a <= 1.0 {
        return Ok(lead);
    }
    if x <= a - 1.0 {
        return Err(LaplaceError::WidenCutoff { needed: a - 1.0, got: x });
    }
    Ok(lead / (1.0 - (a - 1.0) / x))
}

/// Quadrature over `[0, A]` plus a certified bound for `[A, ∞)`.
///
/// The quadrature substitutes `s = A x^q` with `q = 2/(α+1)`, which turns
/// `s^α ds` into a smooth multiple of `x dx`. The tail uses
/// `|log s| <= |log A| + s` on `s >= A` and the incomplete-gamma bound.
pub fn truncated_transform(alpha: f64, j: u32, t: f64, cutoff: f64) -> Result<TruncatedTransform, LaplaceError> {
    check_term(alpha, j, t)?;
    if !(cutoff > 0.0) {
        return Err(LaplaceError::NonPositiveCutoff(cutoff));
    }
    let q = 2.0 / (alpha + 1.0);
    let log_a = cutoff.ln();
    let r = quadrature::adaptive(
        |x| {
            if x <= 0.0 {
                return 0.0;
            }
            let s = cutoff * x.powf(q);
            let log_s = log_a + q * x.ln();
            // s^α ds = A^{α+1} q x^{q(α+1) − 1} dx = A^{α+1} q x dx
            (-t * s).exp() * log_s.powi(j as i32) * cutoff.powf(alpha + 1.0) * q * x
        },
        0.0,
        1.0,
        1e-300,
        1e-13,
    );
    let mut tail = 0.0;
    for i in 0..=j {
        let a = alpha + i as f64 + 1.0;
        let piece = upper_gamma_bound(a, t * cutoff)? * t.powf(-a);
        tail += binomial(j, i) * log_a.abs().powi((j - i) as i32) * piece;
    }
    Ok(TruncatedTransform { value: r.value, quadrature_error: r.error_estimate, tail_bound: tail })
}

/// One term `γ s^{α+ν} (log s)^j` of a fiber-density expansion.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct ExpansionTerm {
    #[serde(with = "crate::lattice::rational_string")]
    pub alpha: Rational,
    pub nu: u32,
    pub j: u32,
    pub gamma: f64,
}

impl ExpansionTerm {
    pub fn new(alpha: Rational, nu: u32, j: u32, gamma: f64) -> Result<Self, LaplaceError> {
        let e = rational_to_f64(&alpha) + nu as f64;
        if !(rational_to_f64(&alpha) > -1.0) {
            return Err(LaplaceError::AlphaDomain(e));
        }
        if j > MAX_LOG_POWER {
            return Err(LaplaceError::LogPower(j));
        }
        Ok(ExpansionTerm { alpha, nu, j, gamma })
    }

    pub fn exponent(&self) -> Rational {
        self.alpha + Rational::from_integer(self.nu as i64)
    }

    /// Laplace transform of this term at `t`.
    pub fn transform(&self, t: f64) -> Result<f64, LaplaceError> {
        Ok(self.gamma * term_transform_exact(rational_to_f64(&self.exponent()), self.j, t)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpansionValue {
    pub value: f64,
    /// Magnitude of the first omitted term (zero when none is omitted).
    pub truncation_estimate: f64,
}

/// Partial sum of the transformed expansion over the first `depth` terms.
pub fn expansion_eval(terms: &[ExpansionTerm], t: f64, depth: usize) -> Result<ExpansionValue, LaplaceError> {
    if !(t > 1.0) {
        return Err(LaplaceError::ExpansionDomain(t));
    }
    if let Some(i) = terms.windows(2).position(|w| w[1].exponent() < w[0].exponent()) {
        return Err(LaplaceError::Unsorted(i + 1));
    }
    let mut value = 0.0;
    for term in terms.iter().take(depth) {
        value += term.transform(t)?;
    }
    let truncation_estimate = match terms.get(depth) {
        Some(term) => term.transform(t)?.abs(),
        None => 0.0,
    };
    Ok(ExpansionValue { value, truncation_estimate })
}

/// A fiber density `φ` supported in `(0, A]`.
pub struct FiberDensity<F: Fn(f64) -> f64> {
    pub phi: F,
    pub support_end: f64,
}

impl<F: Fn(f64) -> f64> FiberDensity<F> {
    pub fn new(phi: F, support_end: f64) -> Self {
        FiberDensity { phi, support_end }
    }

    /// `F(t) = ∫_0^A e^{-ts} φ(s) ds`, split at `s = 1/t` multiples so the
    /// adaptive rule sees the boundary layer.
    pub fn transform(&self, t: f64) -> f64 {
        let a = self.support_end;
        let mut breaks = vec![0.0];
        let mut b = 1.0 / t;
        while b < a {
            breaks.push(b);
            b *= 4.0;
        }
        breaks.push(a);
        breaks
            .windows(2)
            .map(|w| quadrature::adaptive(|s| (-t * s).exp() * (self.phi)(s), w[0], w[1], 1e-300, 1e-13).value)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutBound {
    pub log_bound: f64,
    /// `C (N+1)! / t^{N+1}`; may be infinite when only the log is representable.
    pub bound: f64,
}

/// `C (N+1)! / t^{N+1}`, evaluated in the log domain.
pub fn cut_bound(c: f64, npow: u32, t: f64) -> Result<CutBound, LaplaceError> {
    if c < 0.0 {
        return Err(LaplaceError::NegativeConstant(c));
    }
    if !(t > 0.0) {
        return Err(LaplaceError::NonPositiveT(t));
    }
    if c == 0.0 {
        return Ok(CutBound { log_bound: f64::NEG_INFINITY, bound: 0.0 });
    }
    let k = npow as f64 + 1.0;
    let log_bound = c.ln() + ln_gamma(k + 1.0) - k * t.ln();
    Ok(CutBound { log_bound, bound: log_bound.exp() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutCheck {
    pub integral: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Compares `|∫_0^A e^{-ts} φ(s) ds|` with the cut bound for `|φ(s)| <= C s^{N}`.
pub fn check_cut_bound(phi: impl Fn(f64) -> f64, c: f64, npow: u32, t: f64, cutoff: f64) -> Result<CutCheck, LaplaceError> {
    let integral = FiberDensity::new(phi, cutoff).transform(t).abs();
    let bound = cut_bound(c, npow, t)?.bound;
    Ok(CutCheck { integral, bound, holds: integral <= bound })
}

/// A holomorphic curve germ `s ↦ γ(s) ∈ C^k`.
pub trait ComplexCurve: Sync {
    /// The point `γ(s)` and `|γ'(s)|²`.
    fn eval(&self, s: Complex64) -> (Vec<Complex64>, f64);
}

/// Coordinates `c_i s^{e_i}`; a zero coefficient gives a constant zero coordinate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonomialCurve {
    pub terms: Vec<(f64, u32)>,
}

impl MonomialCurve {
    /// `s ↦ (s, 0)`.
    pub fn line() -> Self {
        MonomialCurve { terms: vec![(1.0, 1), (0.0, 0)] }
    }

    /// `s ↦ (s², s³)`.
    pub fn cusp() -> Self {
        MonomialCurve { terms: vec![(1.0, 2), (1.0, 3)] }
    }
}

impl ComplexCurve for MonomialCurve {
    fn eval(&self, s: Complex64) -> (Vec<Complex64>, f64) {
        let mut jac = 0.0;
        let point = self
            .terms
            .iter()
            .map(|&(c, e)| {
                if c == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                if e > 0 {
                    jac += (c * e as f64).powi(2) * s.norm_sqr().powi(e as i32 - 1);
                }
                s.powu(e) * c
            })
            .collect();
        (point, jac)
    }
}

/// Smooth cutoff equal to 1 on `[0, radius/2]` and 0 beyond `radius`.
pub fn bump(r: f64, radius: f64) -> f64 {
    let x = (radius - r) / (0.5 * radius);
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let h = |y: f64| if y > 0.0 { (-1.0 / y).exp() } else { 0.0 };
    h(x) / (h(x) + h(1.0 - x))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveOptions {
    /// Radius of the cutoff `ρ` in the parameter disc.
    pub radius: f64,
    /// Trapezoid nodes in the angle.
    pub angular_nodes: usize,
    /// Number of `t^{-k/2}` correction terms in the limit fit.
    pub corrections: usize,
}

impl Default for CurveOptions {
    fn default() -> Self {
        CurveOptions { radius: 2.0, angular_nodes: 64, corrections: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveLimit {
    /// Extrapolated `lim t^n F(t)`.
    pub limit: f64,
    /// Largest relative deviation of `t^n F(t)` from the limit fit.
    pub residual: f64,
    /// Slope of `log F` against `log t` over the grid.
    pub exponent: f64,
    /// `t^n F(t)` at the largest grid point.
    pub last_scaled: f64,
    pub t_grid: Vec<f64>,
    pub scaled_values: Vec<f64>,
}

/// Relative residual above which a curve-limit fit is rejected.
pub const CURVE_FIT_TOLERANCE: f64 = 1e-2;

/// `F(t) = ∫_C e^{-t f(γ(s))} |γ'(s)|² ρ(|s|) dA(s)` in polar coordinates:
/// trapezoid in the angle, adaptive Gauss–Legendre on geometric radial pieces.
pub fn curve_integral(
    curve: &dyn ComplexCurve,
    f: &(dyn Fn(&[Complex64]) -> f64 + Sync),
    t: f64,
    opts: &CurveOptions,
) -> f64 {
    let k = opts.angular_nodes.max(4);
    let mut breaks = vec![0.0];
    let mut r = opts.radius;
    let mut outer = Vec::new();
    while r > 1e-8 {
        outer.push(r);
        r *= 0.5;
    }
    breaks.extend(outer.into_iter().rev());
    let radial = |theta: f64| -> f64 {
        let dir = Complex64::from_polar(1.0, theta);
        breaks
            .windows(2)
            .map(|w| {
                quadrature::adaptive(
                    |rr| {
                        let (p, jac) = curve.eval(dir * rr);
                        let e = (-t * f(&p)).exp();
                        if e == 0.0 {
                            0.0
                        } else {
                            e * jac * bump(rr, opts.radius) * rr
                        }
                    },
                    w[0],
                    w[1],
                    1e-300,
                    1e-12,
                )
                .value
            })
            .sum()
    };
    let h = std::f64::consts::TAU / k as f64;
    (0..k).map(|i| radial(i as f64 * h)).sum::<f64>() * h
}

/// Squared Euclidean norm `Σ |z_i|²`.
pub fn norm_sq(z: &[Complex64]) -> f64 {
    z.iter().map(|c| c.norm_sqr()).sum()
}

/// Extrapolates `lim_{t→∞} t^n F(t)` by least squares of
/// `t^n F(t) = L + Σ_{k=1}^{K} c_k t^{-k/2}` over the grid.
pub fn curve_limit(
    curve: &dyn ComplexCurve,
    f: &(dyn Fn(&[Complex64]) -> f64 + Sync),
    n: u32,
    t_grid: &[f64],
    opts: &CurveOptions,
) -> Result<CurveLimit, LaplaceError> {
    let values: Vec<f64> = t_grid.iter().map(|&t| curve_integral(curve, f, t, opts)).collect();
    let scaled: Vec<f64> = t_grid.iter().zip(&values).map(|(t, v)| t.powi(n as i32) * v).collect();
    let cols = opts.corrections + 1;
    let a = DMatrix::from_fn(t_grid.len(), cols, |i, k| t_grid[i].powf(-(k as f64) * 0.5));
    let b = DVector::from_column_slice(&scaled);
    let coef = a.clone().svd(true, true).solve(&b, 1e-14).expect("full column rank");
    let limit = coef[0];
    let fitted = &a * &coef;
    let residual = fitted.iter().zip(&scaled).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / limit.abs();
    if !(residual <= CURVE_FIT_TOLERANCE) {
        return Err(LaplaceError::NonConvergentFit(residual));
    }
    let lx: Vec<f64> = t_grid.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let (exponent, _, _) = linear_fit(&lx, &ly).map_err(|_| LaplaceError::NonConvergentFit(f64::NAN))?;
    Ok(CurveLimit {
        limit,
        residual,
        exponent,
        last_scaled: *scaled.last().expect("nonempty grid"),
        t_grid: t_grid.to_vec(),
        scaled_values: scaled,
    })
}

/// Geometric grid of `count` values over `[a, b]`.
pub fn geometric_grid(a: f64, b: f64, count: usize) -> Vec<f64> {
    crate::asymptotics::log_grid(a, b, count)
}
