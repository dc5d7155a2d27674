//! Torus-invariant integrals in logarithmic coordinates: section norms,
//! normalized densities `|φ_N|²`, their superlevel-set volumes and moments.
//!
//! Angular factors `(2π)^m` are dropped throughout; they cancel in every
//! normalized quantity. The reference measure is `det Hess g(u) du`, whose
//! push-forward under the moment map is Lebesgue measure on P.

pub mod fit;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::exact;
use crate::lattice::{rational_to_f64, Rational, RationalPoint, Weight};
use crate::potential::{log_sum_exp, MetricPotential, PotentialError};
use crate::quadrature::{self, composite_nodes, PANEL_ORDER};
use crate::rays::{RaysError, SectionSequence};

pub use fit::{fit_log_law, fit_power_law, AsymptoticFit, FitError, LogLawFit};

/// Relative mass a box face may leave outside.
const SLAB_TOLERANCE: f64 = 1e-12;
/// Initial half-width of the box in standard deviations.
const INITIAL_SIGMAS: f64 = 8.0;
/// Required distance between the box edge and the integrand centre.
const MARGIN_SIGMAS: f64 = 3.0;
/// Panels per axis on the coarse grids used while sizing the box.
const COARSE_PANELS: usize = 3;
/// Distance beyond the box searched for the end of a superlevel interval.
const LEVEL_SEARCH_LIMIT: f64 = 1.0e3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AsymptoticsError {
    #[error("quadrature resolution {0} is below 16 points per axis")]
    InvalidResolution(usize),
    #[error("box dimension {found} does not match polytope dimension {expected}")]
    BoxDimension { expected: usize, found: usize },
    #[error("integrand centre is within {MARGIN_SIGMAS} standard deviations of the box edge on axis {axis}; suggested box {suggested:?}")]
    BoxTooSmall { axis: usize, suggested: Box<QuadratureSpec> },
    #[error("box sizing did not converge (tail mass estimate {0:e})")]
    BoxSizing(f64),
    #[error("threshold t = {0} must be positive")]
    NonPositiveThreshold(f64),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Rays(#[from] RaysError),
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Tensor-product composite Gauss–Legendre rule on a box in `u`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Nodes per axis; rounded up to a multiple of 16.
    pub resolution: usize,
    /// Estimated relative mass outside the box.
    pub tail_margin: f64,
}

impl QuadratureSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, resolution: usize) -> Result<Self, AsymptoticsError> {
        if resolution < PANEL_ORDER {
            return Err(AsymptoticsError::InvalidResolution(resolution));
        }
        Ok(QuadratureSpec { lo, hi, resolution, tail_margin: 0.0 })
    }

    pub fn panels(&self) -> usize {
        self.resolution.div_ceil(PANEL_ORDER)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn with_resolution(&self, resolution: usize) -> Self {
        QuadratureSpec { resolution, ..self.clone() }
    }

    /// Box sized for `e^{<α,u> − N g(u)} det Hess g(u)`: centred where that
    /// integrand peaks for simplices and intervals, `±8σ` wide, grown face by
    /// face while the adjacent half-width slab carries non-negligible mass, then
    /// trimmed back to the tolerance.
    pub fn auto(pot: &MetricPotential, alpha: &Weight, n: u64, resolution: usize) -> Result<Self, AsymptoticsError> {
        if resolution < PANEL_ORDER {
            return Err(AsymptoticsError::InvalidResolution(resolution));
        }
        let integrand = Integrand::new(pot, alpha, n);
        let (centre, sigma) = integrand.centre_and_scale(pot)?;
        let m = pot.dim();
        let mut lo: Vec<f64> = (0..m).map(|i| centre[i] - INITIAL_SIGMAS * sigma[i]).collect();
        let mut hi: Vec<f64> = (0..m).map(|i| centre[i] + INITIAL_SIGMAS * sigma[i]).collect();
        let f = |u: &[f64]| integrand.log_value(u);
        for _ in 0..200 {
            let total = log_integrate(&lo, &hi, COARSE_PANELS + 1, &f);
            let mut grown = false;
            let mut margin = 0.0;
            for axis in 0..m {
                for upper in [false, true] {
                    let (slo, shi) = slab(&lo, &hi, axis, upper);
                    let rel = (log_integrate(&slo, &shi, COARSE_PANELS, &f) - total).exp();
                    if rel > SLAB_TOLERANCE {
                        if upper {
                            hi[axis] = shi[axis];
                        } else {
                            lo[axis] = slo[axis];
                        }
                        grown = true;
                    } else {
                        margin += rel;
                    }
                }
            }
            if !grown {
                let margin = trim(&mut lo, &mut hi, &centre, total, &f) + margin;
                return Ok(QuadratureSpec { lo, hi, resolution, tail_margin: margin });
            }
        }
        Err(AsymptoticsError::BoxSizing(f64::NAN))
    }

    /// Refuses boxes whose edges come within 3σ of the integrand centre.
    pub fn validate_for(&self, pot: &MetricPotential, alpha: &Weight, n: u64) -> Result<(), AsymptoticsError> {
        if self.resolution < PANEL_ORDER {
            return Err(AsymptoticsError::InvalidResolution(self.resolution));
        }
        if self.dim() != pot.dim() || self.hi.len() != pot.dim() {
            return Err(AsymptoticsError::BoxDimension { expected: pot.dim(), found: self.dim() });
        }
        let (centre, sigma) = Integrand::new(pot, alpha, n).centre_and_scale(pot)?;
        for axis in 0..self.dim() {
            let room = (centre[axis] - self.lo[axis]).min(self.hi[axis] - centre[axis]);
            if room < MARGIN_SIGMAS * sigma[axis] {
                let suggested = Self::auto(pot, alpha, n, self.resolution)?;
                return Err(AsymptoticsError::BoxTooSmall { axis, suggested: Box::new(suggested) });
            }
        }
        Ok(())
    }

    /// `log ∫_box e^{f}` with the tensor rule.
    pub fn log_integrate(&self, f: impl Fn(&[f64]) -> f64 + Sync) -> f64 {
        log_integrate(&self.lo, &self.hi, self.panels(), &f)
    }

    /// Per-axis `(node, log weight)` lists.
    fn axes(&self) -> Vec<Vec<(f64, f64)>> {
        axes(&self.lo, &self.hi, self.panels())
    }
}

/// Moves each face inward, by bisection on its position, as long as the cut
/// region carries relative mass below the slab tolerance; returns the summed
/// relative mass that was cut.
fn trim(lo: &mut [f64], hi: &mut [f64], centre: &[f64], log_total: f64, f: &(impl Fn(&[f64]) -> f64 + Sync)) -> f64 {
    let mut cut = 0.0;
    for axis in 0..lo.len() {
        for upper in [false, true] {
            let edge = if upper { hi[axis] } else { lo[axis] };
            let cut_mass = |c: f64| {
                let (mut a, mut b) = (lo.to_vec(), hi.to_vec());
                if upper {
                    a[axis] = c;
                    b[axis] = edge;
                } else {
                    a[axis] = edge;
                    b[axis] = c;
                }
                (log_integrate(&a, &b, COARSE_PANELS, f) - log_total).exp()
            };
            // keep[c]: cutting at c loses too much; drop: cutting is fine
            let (mut keep, mut drop) = (centre[axis], edge);
            for _ in 0..30 {
                let mid = 0.5 * (keep + drop);
                if cut_mass(mid) <= SLAB_TOLERANCE {
                    drop = mid;
                } else {
                    keep = mid;
                }
            }
            if drop != edge {
                cut += cut_mass(drop);
                if upper {
                    hi[axis] = drop;
                } else {
                    lo[axis] = drop;
                }
            }
        }
    }
    cut
}

fn slab(lo: &[f64], hi: &[f64], axis: usize, upper: bool) -> (Vec<f64>, Vec<f64>) {
    let w = 0.5 * (hi[axis] - lo[axis]);
    let mut slo = lo.to_vec();
    let mut shi = hi.to_vec();
    if upper {
        slo[axis] = hi[axis];
        shi[axis] = hi[axis] + w;
    } else {
        shi[axis] = lo[axis];
        slo[axis] = lo[axis] - w;
    }
    (slo, shi)
}

fn axes(lo: &[f64], hi: &[f64], panels: usize) -> Vec<Vec<(f64, f64)>> {
    lo.iter()
        .zip(hi)
        .map(|(&a, &b)| composite_nodes(a, b, panels).into_iter().map(|(x, w)| (x, w.ln())).collect())
        .collect()
}

/// Folds `(node, log weight)` over the tensor grid; one rayon task per node of
/// the first axis, combined in index order so results do not depend on the
/// number of workers.
fn tensor_fold<T: Send>(
    axes: &[Vec<(f64, f64)>],
    per_node: impl Fn(&[f64], f64) -> T + Sync,
    init: impl Fn() -> Vec<T> + Sync,
) -> Vec<Vec<T>> {
    let m = axes.len();
    axes[0]
        .par_iter()
        .map(|&(x0, lw0)| {
            let mut out = init();
            let mut idx = vec![0usize; m];
            let mut u = vec![0.0; m];
            u[0] = x0;
            loop {
                let mut lw = lw0;
                for d in 1..m {
                    u[d] = axes[d][idx[d]].0;
                    lw += axes[d][idx[d]].1;
                }
                out.push(per_node(&u, lw));
                let mut d = m;
                loop {
                    d -= 1;
                    if d == 0 {
                        return out;
                    }
                    idx[d] += 1;
                    if idx[d] < axes[d].len() {
                        break;
                    }
                    idx[d] = 0;
                }
            }
        })
        .collect()
}

fn log_integrate(lo: &[f64], hi: &[f64], panels: usize, f: &(impl Fn(&[f64]) -> f64 + Sync)) -> f64 {
    let ax = axes(lo, hi, panels);
    let rows = tensor_fold(&ax, |u, lw| f(u) + lw, Vec::new);
    let partial: Vec<f64> = rows.iter().map(|r| log_sum_exp(r)).collect();
    log_sum_exp(&partial)
}

/// `log det Hess g` as a log-sum-exp over affinely independent `(m+1)`-subsets:
/// `det Cov = Σ_S Π_{i∈S} p_i · det[1 β_i]_{i∈S}²`, a sum of positive terms.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeForm {
    subsets: Vec<(Vec<usize>, f64)>,
    m: usize,
}

impl VolumeForm {
    pub fn new(pot: &MetricPotential) -> Self {
        let m = pot.dim();
        let pts = pot.points();
        let subsets = exact::combinations(pts.len(), m + 1)
            .into_iter()
            .filter_map(|s| {
                let rows: Vec<Vec<i64>> = s
                    .iter()
                    .map(|&i| std::iter::once(1).chain(pts[i].0.iter().copied()).collect())
                    .collect();
                let det = rational_to_f64(&exact::abs_det_int(&rows));
                (det > 0.0).then(|| (s, 2.0 * det.ln()))
            })
            .collect();
        VolumeForm { subsets, m }
    }

    /// `log det Hess g` from the logits `l_i = log c_i + <β_i, u>` and `g = lse(l)`.
    pub fn log_det(&self, logits: &[f64], g: f64) -> f64 {
        let terms: Vec<f64> = self
            .subsets
            .iter()
            .map(|(s, ld)| s.iter().map(|&i| logits[i]).sum::<f64>() + ld)
            .collect();
        log_sum_exp(&terms) - (self.m as f64 + 1.0) * g
    }
}

/// `u ↦ <α, u> − N g(u) + log det Hess g(u)`.
#[derive(Debug, Clone)]
struct Integrand {
    exponents: Vec<Vec<f64>>,
    log_weights: Vec<f64>,
    form: VolumeForm,
    alpha: Vec<f64>,
    alpha_w: Weight,
    n: f64,
}

impl Integrand {
    fn new(pot: &MetricPotential, alpha: &Weight, n: u64) -> Self {
        Integrand {
            exponents: pot.lse().exponents.clone(),
            log_weights: pot.lse().log_weights.clone(),
            form: VolumeForm::new(pot),
            alpha: alpha.to_f64(),
            alpha_w: alpha.clone(),
            n: n as f64,
        }
    }

    fn logits(&self, u: &[f64]) -> Vec<f64> {
        self.exponents
            .iter()
            .zip(&self.log_weights)
            .map(|(b, lc)| lc + b.iter().zip(u).map(|(x, y)| x * y).sum::<f64>())
            .collect()
    }

    fn pairing(&self, u: &[f64]) -> f64 {
        self.alpha.iter().zip(u).map(|(a, x)| a * x).sum()
    }

    /// `<α, u> − N g(u)`.
    fn log_section(&self, u: &[f64]) -> f64 {
        self.pairing(u) - self.n * log_sum_exp(&self.logits(u))
    }

    fn log_value(&self, u: &[f64]) -> f64 {
        let l = self.logits(u);
        let g = log_sum_exp(&l);
        self.pairing(u) - self.n * g + self.form.log_det(&l, g)
    }

    fn log_det(&self, u: &[f64]) -> f64 {
        let l = self.logits(u);
        self.form.log_det(&l, log_sum_exp(&l))
    }

    /// Moment-map preimage of `(α + (m+1) q)/(N + m + 1)`, q the vertex centroid,
    /// and per-axis standard deviations from the scaled covariance there.
    fn centre_and_scale(&self, pot: &MetricPotential) -> Result<(Vec<f64>, Vec<f64>), AsymptoticsError> {
        let m = pot.dim();
        let verts = pot.polytope().vertices();
        let k = Rational::from_integer(m as i64 + 1);
        let denom = Rational::from_integer(self.n as i64) + k;
        let target: Vec<f64> = (0..m)
            .map(|i| {
                let q = verts.iter().fold(Rational::from_integer(0), |s, v| s + v.0[i])
                    / Rational::from_integer(verts.len() as i64);
                rational_to_f64(&((Rational::from_integer(self.alpha_w.0[i]) + k * q) / denom))
            })
            .collect();
        let report = pot.lse().minimize_tilted(&target, &vec![0.0; m])?;
        let scale = self.n + m as f64 + 1.0;
        let h: DMatrix<f64> = pot.covariance(&report.u_star) * scale;
        let inv = h.try_inverse().unwrap_or_else(|| DMatrix::identity(m, m));
        let sigma = (0..m).map(|i| inv[(i, i)].abs().sqrt().max(1e-3)).collect();
        Ok((report.u_star, sigma))
    }
}

/// `log det Hess g(u)`, the log density of the reference measure in `u`.
pub fn log_volume_density(pot: &MetricPotential, u: &[f64]) -> f64 {
    let lse = pot.lse();
    let logits: Vec<f64> = lse
        .exponents
        .iter()
        .zip(&lse.log_weights)
        .map(|(b, lc)| lc + b.iter().zip(u).map(|(x, y)| x * y).sum::<f64>())
        .collect();
    VolumeForm::new(pot).log_det(&logits, log_sum_exp(&logits))
}

/// `log ∫ det Hess g du`; equals `log Vol(P)`.
pub fn log_moment_volume(pot: &MetricPotential, resolution: usize) -> Result<f64, AsymptoticsError> {
    let zero = Weight::zero(pot.dim());
    let quad = QuadratureSpec::auto(pot, &zero, 0, resolution)?;
    let integrand = Integrand::new(pot, &zero, 0);
    Ok(quad.log_integrate(|u| integrand.log_value(u)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormEstimate {
    /// `log ∫ e^{-N f_N} det Hess g du`.
    pub log_value: f64,
    /// Estimated relative mass outside the quadrature box.
    pub tail_margin: f64,
}

/// The normalized density `|φ_N|² = e^{-N f_N} / ‖s_N‖²` of one section.
#[derive(Debug, Clone)]
pub struct SectionDensity {
    pot: MetricPotential,
    integrand: Integrand,
    alpha: Weight,
    n: u64,
    quad: QuadratureSpec,
    log_norm: f64,
    volume: f64,
}

impl SectionDensity {
    /// Builds the density with an automatically sized box.
    pub fn new(pot: &MetricPotential, alpha: &Weight, n: u64, resolution: usize) -> Result<Self, AsymptoticsError> {
        let quad = QuadratureSpec::auto(pot, alpha, n, resolution)?;
        Ok(Self::assemble(pot, alpha, n, quad))
    }

    /// Builds the density on a caller-supplied box, refusing boxes that are too small.
    pub fn with_quadrature(
        pot: &MetricPotential,
        alpha: &Weight,
        n: u64,
        quad: QuadratureSpec,
    ) -> Result<Self, AsymptoticsError> {
        quad.validate_for(pot, alpha, n)?;
        Ok(Self::assemble(pot, alpha, n, quad))
    }

    fn assemble(pot: &MetricPotential, alpha: &Weight, n: u64, quad: QuadratureSpec) -> Self {
        let integrand = Integrand::new(pot, alpha, n);
        let log_norm = quad.log_integrate(|u| integrand.log_value(u));
        SectionDensity {
            pot: pot.clone(),
            integrand,
            alpha: alpha.clone(),
            n,
            quad,
            log_norm,
            volume: rational_to_f64(&pot.polytope().volume()),
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn alpha(&self) -> &Weight {
        &self.alpha
    }

    pub fn quadrature(&self) -> &QuadratureSpec {
        &self.quad
    }

    pub fn norm(&self) -> NormEstimate {
        NormEstimate { log_value: self.log_norm, tail_margin: self.quad.tail_margin }
    }

    /// `log |φ_N|²(u) = −N f_N(u) − log ‖s_N‖²`.
    pub fn log_density(&self, u: &[f64]) -> f64 {
        self.integrand.log_section(u) - self.log_norm
    }

    /// Supremum of `log |φ_N|²`, attained at the moment preimage of `α/N`
    /// (or approached along the normal cone when `α/N` is on the boundary).
    pub fn log_max_density(&self) -> Result<f64, AsymptoticsError> {
        let ratio = RationalPoint(
            self.alpha.0.iter().map(|&a| Rational::new(a, self.n as i64)).collect(),
        );
        let (_, report) = self.pot.face_minimize(&ratio)?;
        Ok(-(self.n as f64) * report.f_min - self.log_norm)
    }

    /// `log ‖s_N‖² + N min_u f_N(u)`: the norm with its exponential factor
    /// removed, which carries the power law `N^{-κ}`.
    pub fn scaled_log_norm(&self) -> Result<f64, AsymptoticsError> {
        Ok(-self.log_max_density()?)
    }

    /// Bound on the measure of `{|φ_N|² > t}` outside the box: Markov's inequality
    /// applied to the probability mass outside, divided by `Vol(P)`.
    pub fn tail_truncation_bound(&self, t: f64) -> f64 {
        if self.pot.dim() == 1 {
            0.0
        } else {
            self.quad.tail_margin / t / self.volume
        }
    }

    /// `∫ T(μ(u)) |φ_N|² det Hess g du` for a test function on moment coordinates.
    pub fn expectation(&self, test: impl Fn(&[f64]) -> f64 + Sync) -> f64 {
        let rows = tensor_fold(
            &self.quad.axes(),
            |u, lw| {
                let w = (self.integrand.log_value(u) + lw - self.log_norm).exp();
                if w == 0.0 {
                    0.0
                } else {
                    w * test(&self.pot.moment(u))
                }
            },
            Vec::new,
        );
        rows.iter().map(|r| r.iter().sum::<f64>()).sum()
    }

    /// `D_N(t) = Vol{|φ_N|² > t} / Vol(P)` under the reference measure.
    ///
    /// Along the last axis the superlevel set is an interval (f_N is convex),
    /// found by bisection; its measure is a moment difference for m = 1 and an
    /// adaptive integral of `det Hess g` otherwise, with Gauss–Legendre outer axes
    /// over the box. For m >= 2 the part of the set outside the box is omitted;
    /// see [`Self::tail_truncation_bound`].
    pub fn tail_volume(&self, t: f64) -> Result<f64, AsymptoticsError> {
        if !(t > 0.0) {
            return Err(AsymptoticsError::NonPositiveThreshold(t));
        }
        let log_t = t.ln();
        let m = self.pot.dim();
        let last = m - 1;
        let (lo, hi) = (self.quad.lo[last], self.quad.hi[last]);
        let inner = |outer: &[f64]| -> f64 {
            let mut u = outer.to_vec();
            u.push(0.0);
            let Some((a, b)) = self.level_interval(&mut u, log_t, lo, hi) else {
                return 0.0;
            };
            if m == 1 {
                return self.pot.moment(&[b])[0] - self.pot.moment(&[a])[0];
            }
            let mut v = u.clone();
            quadrature::adaptive(
                |s| {
                    v[last] = s;
                    self.integrand.log_det(&v).exp()
                },
                a,
                b,
                1e-15,
                1e-11,
            )
            .value
        };
        let measure = if m == 1 {
            inner(&[])
        } else {
            let outer_axes = axes(&self.quad.lo[..last], &self.quad.hi[..last], self.quad.panels());
            let rows = tensor_fold(&outer_axes, |u, lw| lw.exp() * inner(u), Vec::new);
            rows.iter().map(|r| r.iter().sum::<f64>()).sum()
        };
        Ok(measure / self.volume)
    }

    /// Interval of the last coordinate where `log |φ_N|² > log t`, other
    /// coordinates fixed in `u`; may extend past `[lo, hi]` up to the search limit.
    fn level_interval(&self, u: &mut [f64], log_t: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
        let last = u.len() - 1;
        let alpha_last = self.alpha.0[last] as f64;
        let n = self.n as f64;
        let at = |s: f64, u: &mut [f64]| {
            u[last] = s;
            self.log_density(u) - log_t
        };
        let slope = |s: f64, u: &mut [f64]| {
            u[last] = s;
            alpha_last - n * self.pot.moment(u)[last]
        };
        let far_lo = lo - LEVEL_SEARCH_LIMIT;
        let far_hi = hi + LEVEL_SEARCH_LIMIT;
        // maximizer of the concave section profile
        let peak = if slope(far_lo, u) <= 0.0 {
            far_lo
        } else if slope(far_hi, u) >= 0.0 {
            far_hi
        } else {
            quadrature::bisect(|s| slope(s, &mut u.to_vec()), far_lo, far_hi, 1e-13)?
        };
        if at(peak, u) <= 0.0 {
            return None;
        }
        let left = if at(far_lo, u) > 0.0 {
            far_lo
        } else {
            quadrature::bisect(|s| at(s, &mut u.to_vec()), far_lo, peak, 1e-13)?
        };
        let right = if at(far_hi, u) > 0.0 {
            far_hi
        } else {
            quadrature::bisect(|s| at(s, &mut u.to_vec()), peak, far_hi, 1e-13)?
        };
        u[last] = 0.0;
        Some((left, right))
    }
}

/// `log ‖s_N‖²` for the sequence weight at `N`.
pub fn log_norm_sq(
    pot: &MetricPotential,
    seq: &SectionSequence,
    n: u64,
    quad: &QuadratureSpec,
) -> Result<NormEstimate, AsymptoticsError> {
    let alpha = seq.alpha(n)?;
    Ok(SectionDensity::with_quadrature(pot, &alpha, n, quad.clone())?.norm())
}

pub fn log_density_point(
    pot: &MetricPotential,
    seq: &SectionSequence,
    n: u64,
    quad: &QuadratureSpec,
    u: &[f64],
) -> Result<f64, AsymptoticsError> {
    let alpha = seq.alpha(n)?;
    Ok(SectionDensity::with_quadrature(pot, &alpha, n, quad.clone())?.log_density(u))
}

pub fn tail_volume(
    pot: &MetricPotential,
    seq: &SectionSequence,
    n: u64,
    quad: &QuadratureSpec,
    t: f64,
) -> Result<f64, AsymptoticsError> {
    let alpha = seq.alpha(n)?;
    SectionDensity::with_quadrature(pot, &alpha, n, quad.clone())?.tail_volume(t)
}

pub fn weak_convergence_test(
    pot: &MetricPotential,
    seq: &SectionSequence,
    n: u64,
    quad: &QuadratureSpec,
    test: impl Fn(&[f64]) -> f64 + Sync,
) -> Result<f64, AsymptoticsError> {
    let alpha = seq.alpha(n)?;
    Ok(SectionDensity::with_quadrature(pot, &alpha, n, quad.clone())?.expectation(test))
}

/// Absolute slack allowed when comparing tail volumes.
pub const COMPARISON_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailComparison {
    pub n: u64,
    pub t: f64,
    pub d: f64,
    pub d_tame: f64,
    /// `d <= d_tame + tolerance`.
    pub holds: bool,
}

/// Tail volumes of a sequence and a tame sequence for the same ray at one `(N, t)`.
pub fn compare_tame(
    pot: &MetricPotential,
    seq: &SectionSequence,
    tame: &SectionSequence,
    n: u64,
    resolution: usize,
    t: f64,
) -> Result<TailComparison, AsymptoticsError> {
    let d = SectionDensity::new(pot, &seq.alpha(n)?, n, resolution)?.tail_volume(t)?;
    let d_tame = SectionDensity::new(pot, &tame.alpha(n)?, n, resolution)?.tail_volume(t)?;
    Ok(TailComparison { n, t, d, d_tame, holds: d <= d_tame + COMPARISON_TOLERANCE })
}

/// `∫_0^∞ r^{2a+1} (1 + r²)^{-N} dr`, the projective-line norm of `z_1^a z_0^{N−a}`
/// in the affine chart with Euclidean area measure, by adaptive quadrature.
pub fn euclidean_chart_norm(a: u32, n: u64) -> f64 {
    let p = 2 * a as i32 + 1;
    let nf = n as f64;
    quadrature::adaptive_semi_infinite(|r| r.powi(p) * (-(nf) * (r * r).ln_1p()).exp(), 0.0, 1e-16, 1e-13).value
}

/// Absolute slack for monotonicity of error sequences; errors at this level
/// are quadrature roundoff.
pub const MONOTONE_SLACK: f64 = 1e-9;

/// `values[i+1] <= values[i] + slack` for every consecutive pair.
pub fn is_nonincreasing(values: &[f64], slack: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + slack)
}

/// Logarithmic grid of `count` thresholds between `t_min` and `t_max`.
pub fn log_grid(t_min: f64, t_max: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![t_min];
    }
    let (a, b) = (t_min.ln(), t_max.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::FacetPolytope;
    use crate::rays::SequenceKind;
    use approx::assert_relative_eq;
    use statrs::function::gamma::ln_gamma;

    fn interval() -> MetricPotential {
        MetricPotential::uniform(&FacetPolytope::unit_interval()).unwrap()
    }

    /// Beta integral `∫_0^1 p^a (1−p)^{N−a} dp`.
    fn ln_beta_norm(a: u64, n: u64) -> f64 {
        ln_gamma(a as f64 + 1.0) + ln_gamma((n - a) as f64 + 1.0) - ln_gamma(n as f64 + 2.0)
    }

    #[test]
    fn volume_density_matches_covariance_determinant() {
        let pot = MetricPotential::new(
            &FacetPolytope::unit_cube(2),
            vec![Weight::new([0, 0]), Weight::new([0, 1]), Weight::new([1, 0]), Weight::new([1, 1])],
            vec![1.0, 0.4, 2.0, 1.5],
        )
        .unwrap();
        for u in [[0.0, 0.0], [1.3, -0.7], [-4.0, 2.5]] {
            let det = pot.covariance(&u).determinant();
            assert_relative_eq!(log_volume_density(&pot, &u), det.ln(), max_relative = 1e-12);
        }
        assert_relative_eq!(log_volume_density(&interval(), &[0.0]), 0.25f64.ln(), max_relative = 1e-14);
    }

    #[test]
    fn moment_volumes() {
        for (p, v) in [
            (FacetPolytope::unit_interval(), 1.0),
            (FacetPolytope::unit_simplex(2), 0.5),
            (FacetPolytope::unit_cube(2), 1.0),
        ] {
            let pot = MetricPotential::uniform(&p).unwrap();
            assert_relative_eq!(log_moment_volume(&pot, 128).unwrap().exp(), v, max_relative = 1e-8);
        }
    }

    #[test]
    fn beta_golden_values() {
        let pot = interval();
        for (n, a) in [(2u64, 1i64), (9, 0), (20, 10), (50, 3)] {
            let d = SectionDensity::new(&pot, &Weight::new([a]), n, 128).unwrap();
            assert_relative_eq!(d.norm().log_value.exp(), ln_beta_norm(a as u64, n).exp(), max_relative = 1e-8);
        }
        let d = SectionDensity::new(&pot, &Weight::new([1]), 2, 64).unwrap();
        assert_relative_eq!(d.norm().log_value.exp(), 1.0 / 6.0, max_relative = 1e-8);
    }

    #[test]
    fn euclidean_chart_values() {
        for n in 3..=10u64 {
            let nf = n as f64;
            assert_relative_eq!(euclidean_chart_norm(0, n), 1.0 / (2.0 * (nf - 1.0)), max_relative = 1e-8);
            assert_relative_eq!(
                euclidean_chart_norm(1, n),
                1.0 / (2.0 * (nf - 1.0) * (nf - 2.0)),
                max_relative = 1e-8
            );
        }
    }

    #[test]
    fn vertex_expectation_is_exact() {
        let pot = interval();
        for n in [8u64, 50, 400] {
            let d = SectionDensity::new(&pot, &Weight::new([0]), n, 128).unwrap();
            assert_relative_eq!(d.expectation(|p| p[0]), 1.0 / (n as f64 + 2.0), max_relative = 1e-8);
            assert_relative_eq!(d.expectation(|_| 1.0), 1.0, max_relative = 1e-10);
        }
    }

    #[test]
    fn interval_tail_matches_closed_form() {
        // α = 0: |φ|² = (N+1)(1−p)^N, so D(t) = 1 − (t/(N+1))^{1/N} for t < N+1
        let pot = interval();
        let n = 40u64;
        let d = SectionDensity::new(&pot, &Weight::new([0]), n, 128).unwrap();
        for t in [1e-3, 0.5, 1.0, 7.0, 40.0] {
            let exact = 1.0 - (t / (n as f64 + 1.0)).powf(1.0 / n as f64);
            assert_relative_eq!(d.tail_volume(t).unwrap(), exact, max_relative = 1e-8);
        }
        assert_eq!(d.tail_volume(42.0).unwrap(), 0.0);
        assert_relative_eq!(d.log_max_density().unwrap(), (n as f64 + 1.0).ln(), max_relative = 1e-10);
        assert!(d.tail_volume(0.0).is_err());
    }

    #[test]
    fn tails_tend_to_full_volume() {
        let d = SectionDensity::new(&interval(), &Weight::new([3]), 10, 64).unwrap();
        assert!((d.tail_volume(1e-300).unwrap() - 1.0).abs() < 1e-12);

        let pot = MetricPotential::uniform(&FacetPolytope::unit_simplex(2)).unwrap();
        let d = SectionDensity::new(&pot, &Weight::new([3, 2]), 10, 64).unwrap();
        let ts = [1e-12, 1e-9, 1e-6, 1e-3, 1.0, 10.0];
        let vols: Vec<f64> = ts.iter().map(|&t| d.tail_volume(t).unwrap()).collect();
        assert!(vols.windows(2).all(|w| w[0] >= w[1]));
        assert!(vols[0] > 0.99 && vols[0] <= 1.0);
        assert_eq!(d.tail_volume(d.log_max_density().unwrap().exp() * 1.01).unwrap(), 0.0);
    }

    #[test]
    fn small_box_is_refused_with_suggestion() {
        let pot = interval();
        let seq = SectionSequence::new(pot.polytope(), &RationalPoint::from_fractions(&[(1, 2)]), SequenceKind::Tame)
            .unwrap();
        let tiny = QuadratureSpec::new(vec![-0.01], vec![0.01], 64).unwrap();
        match log_norm_sq(&pot, &seq, 100, &tiny) {
            Err(AsymptoticsError::BoxTooSmall { suggested, .. }) => {
                assert!(log_norm_sq(&pot, &seq, 100, &suggested).is_ok());
            }
            other => panic!("expected refusal, got {other:?}"),
        }
        assert!(QuadratureSpec::new(vec![0.0], vec![1.0], 8).is_err());
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let pot = MetricPotential::uniform(&FacetPolytope::unit_simplex(2)).unwrap();
        let alpha = Weight::new([20, 0]);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| SectionDensity::new(&pot, &alpha, 40, 64).unwrap().norm().log_value)
        };
        assert_eq!(run(1).to_bits(), run(4).to_bits());
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-3, 10.0, 5);
        assert_relative_eq!(g[0], 1e-3, max_relative = 1e-14);
        assert_relative_eq!(g[4], 10.0, max_relative = 1e-14);
        assert_relative_eq!(g[2], 0.1, max_relative = 1e-12);
    }
}
