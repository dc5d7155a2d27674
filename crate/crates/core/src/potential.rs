//! Log-sum-exp potentials `g(u) = log Σ c_i e^{<β_i, u>}` in logarithmic torus
//! coordinates, the limit function attached to a ray, and its minimization.

use nalgebra::{DMatrix, DVector};

use crate::lattice::{RationalPoint, Weight};
use crate::polytope::{Face, FacetPolytope, PolytopeError};
use crate::rays::{RaysError, SectionSequence};

pub const NEWTON_MAX_ITER: usize = 500;
pub const NEWTON_TOL: f64 = 1e-10;
const ARMIJO: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PotentialError {
    #[error("weight c_{index} = {value} must be positive and finite")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("{points} points but {weights} weights")]
    LengthMismatch { points: usize, weights: usize },
    #[error("point {0} is not a lattice point of the polytope")]
    PointOutside(String),
    #[error("vertex {0} of the polytope is missing from the potential (or is not a lattice point)")]
    MissingVertex(String),
    #[error("point {0} is on the boundary; use face_minimize")]
    BoundaryPoint(String),
    #[error("point {0} is not in the polytope")]
    NotInPolytope(String),
    #[error("Newton did not converge in {iterations} iterations (|grad| = {gradient_norm:e}, last iterate {last:?})")]
    NoConvergence { iterations: usize, gradient_norm: f64, last: Vec<f64> },
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
    #[error(transparent)]
    Rays(#[from] RaysError),
}

/// Exponents and log-weights of a log-sum-exp function on `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogSumExp {
    pub exponents: Vec<Vec<f64>>,
    pub log_weights: Vec<f64>,
}

/// Value, gradient and Hessian of a log-sum-exp function at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

impl LogSumExp {
    pub fn dim(&self) -> usize {
        self.exponents.first().map_or(0, Vec::len)
    }

    fn logits(&self, u: &[f64]) -> Vec<f64> {
        self.exponents
            .iter()
            .zip(&self.log_weights)
            .map(|(b, lc)| lc + b.iter().zip(u).map(|(x, y)| x * y).sum::<f64>())
            .collect()
    }

    pub fn value(&self, u: &[f64]) -> f64 {
        log_sum_exp(&self.logits(u))
    }

    /// Softmax weights `p_i` and the index of the largest logit.
    fn probabilities(&self, u: &[f64]) -> (f64, Vec<f64>, usize) {
        let l = self.logits(u);
        let (imax, &lmax) = l
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty");
        let e: Vec<f64> = l.iter().map(|x| (x - lmax).exp()).collect();
        let s: f64 = e.iter().sum();
        (lmax + s.ln(), e.iter().map(|x| x / s).collect(), imax)
    }

    pub fn gradient(&self, u: &[f64]) -> DVector<f64> {
        self.evaluate(u).gradient
    }

    /// Value, softmax mean and covariance; the covariance is accumulated
    /// relative to the dominant exponent so it stays accurate far from the origin.
    pub fn evaluate(&self, u: &[f64]) -> Evaluation {
        let d = self.dim();
        let (value, p, imax) = self.probabilities(u);
        let reference = &self.exponents[imax];
        let mut shifted_mean = DVector::zeros(d);
        let mut second = DMatrix::zeros(d, d);
        for (b, &pi) in self.exponents.iter().zip(&p) {
            if pi == 0.0 {
                continue;
            }
            let diff = DVector::from_iterator(d, b.iter().zip(reference).map(|(x, r)| x - r));
            shifted_mean.axpy(pi, &diff, 1.0);
            second.ger(pi, &diff, &diff, 1.0);
        }
        second.ger(-1.0, &shifted_mean, &shifted_mean, 1.0);
        let gradient = shifted_mean + DVector::from_column_slice(reference);
        Evaluation { value, gradient, hessian: second }
    }

    /// Minimizes `value(u) − <eta, u>` by damped Newton from `start`.
    pub fn minimize_tilted(&self, eta: &[f64], start: &[f64]) -> Result<MinimizerReport, PotentialError> {
        let d = self.dim();
        let eta_v = DVector::from_column_slice(eta);
        let objective = |u: &[f64]| self.value(u) - u.iter().zip(eta).map(|(a, b)| a * b).sum::<f64>();
        let mut u = start.to_vec();
        let mut h = objective(&u);
        for iter in 0..=NEWTON_MAX_ITER {
            let ev = self.evaluate(&u);
            let grad = &ev.gradient - &eta_v;
            let gnorm = grad.norm();
            if gnorm <= NEWTON_TOL {
                let (cond, min_eig) = spectrum(&ev.hessian);
                return Ok(MinimizerReport {
                    u_star: u,
                    f_min: h,
                    gradient_norm: gnorm,
                    hessian_condition: cond,
                    min_eigenvalue: min_eig,
                    iterations: iter,
                });
            }
            if iter == NEWTON_MAX_ITER {
                break;
            }
            let step = newton_step(&ev.hessian, &grad);
            let slope = grad.dot(&step);
            let slack = 64.0 * f64::EPSILON * (1.0 + h.abs());
            let mut t = 1.0;
            loop {
                let trial: Vec<f64> = (0..d).map(|i| u[i] + t * step[i]).collect();
                let ht = objective(&trial);
                if ht <= h + ARMIJO * t * slope + slack {
                    u = trial;
                    h = ht;
                    break;
                }
                t *= 0.5;
                if t < 1e-30 {
                    return Err(PotentialError::NoConvergence { iterations: iter, gradient_norm: gnorm, last: u });
                }
            }
        }
        let gnorm = (&self.gradient(&u) - &eta_v).norm();
        Err(PotentialError::NoConvergence { iterations: NEWTON_MAX_ITER, gradient_norm: gnorm, last: u })
    }
}

fn newton_step(hess: &DMatrix<f64>, grad: &DVector<f64>) -> DVector<f64> {
    if let Some(ch) = hess.clone().cholesky() {
        return -ch.solve(grad);
    }
    // far in a flat direction the Hessian is numerically singular; regularize
    let scale = hess.diagonal().amax().max(1e-300);
    let mut lambda = 1e-12 * scale;
    loop {
        let reg = hess + DMatrix::identity(hess.nrows(), hess.ncols()) * lambda;
        if let Some(ch) = reg.cholesky() {
            return -ch.solve(grad);
        }
        lambda *= 10.0;
    }
}

/// Condition number and smallest eigenvalue of a symmetric matrix.
fn spectrum(h: &DMatrix<f64>) -> (f64, f64) {
    if h.nrows() == 0 {
        return (1.0, f64::INFINITY);
    }
    let eig = h.clone().symmetric_eigen();
    let min = eig.eigenvalues.min();
    let max = eig.eigenvalues.max();
    (max / min, min)
}

pub fn log_sum_exp(x: &[f64]) -> f64 {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + x.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizerReport {
    /// Minimizer, in ambient or face-lattice coordinates depending on the caller.
    pub u_star: Vec<f64>,
    pub f_min: f64,
    pub gradient_norm: f64,
    pub hessian_condition: f64,
    pub min_eigenvalue: f64,
    pub iterations: usize,
}

/// Metric data: lattice points of P with positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricPotential {
    polytope: FacetPolytope,
    points: Vec<Weight>,
    weights: Vec<f64>,
    lse: LogSumExp,
}

impl MetricPotential {
    pub fn new(polytope: &FacetPolytope, points: Vec<Weight>, weights: Vec<f64>) -> Result<Self, PotentialError> {
        if points.len() != weights.len() {
            return Err(PotentialError::LengthMismatch { points: points.len(), weights: weights.len() });
        }
        if let Some((index, &value)) = weights.iter().enumerate().find(|(_, c)| !(c.is_finite() && **c > 0.0)) {
            return Err(PotentialError::NonPositiveWeight { index, value });
        }
        for b in &points {
            if !polytope.dilate_contains(b, 1)? {
                return Err(PotentialError::PointOutside(b.to_string()));
            }
        }
        for v in polytope.vertices() {
            if !v.to_weight().is_some_and(|w| points.contains(&w)) {
                return Err(PotentialError::MissingVertex(v.to_string()));
            }
        }
        let lse = LogSumExp {
            exponents: points.iter().map(Weight::to_f64).collect(),
            log_weights: weights.iter().map(|c| c.ln()).collect(),
        };
        Ok(MetricPotential { polytope: polytope.clone(), points, weights, lse })
    }

    /// All lattice points of P with unit weights (the Fubini–Study type metric).
    pub fn uniform(polytope: &FacetPolytope) -> Result<Self, PotentialError> {
        let points = polytope.lattice_points(1)?;
        let n = points.len();
        Self::new(polytope, points, vec![1.0; n])
    }

    /// Same potential with every weight multiplied by `e^{-phi0}`.
    pub fn rescaled(&self, phi0: f64) -> Self {
        let weights = self.weights.iter().map(|c| c * (-phi0).exp()).collect();
        Self::new(&self.polytope, self.points.clone(), weights).expect("positive weights stay positive")
    }

    pub fn polytope(&self) -> &FacetPolytope {
        &self.polytope
    }

    pub fn points(&self) -> &[Weight] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn lse(&self) -> &LogSumExp {
        &self.lse
    }

    pub fn dim(&self) -> usize {
        self.polytope.dim()
    }

    pub fn g_eval(&self, u: &[f64]) -> f64 {
        self.lse.value(u)
    }

    /// Gradient of g; lies in the interior of P.
    pub fn moment(&self, u: &[f64]) -> Vec<f64> {
        self.lse.gradient(u).iter().copied().collect()
    }

    /// Hessian of g: the covariance of the exponents under the softmax weights.
    pub fn covariance(&self, u: &[f64]) -> DMatrix<f64> {
        self.lse.evaluate(u).hessian
    }

    /// `f_N(u) = g(u) − <α_N, u>/N`, so that `|s_N|^2 = e^{-N f_N}`.
    pub fn f_n_eval(&self, alpha: &Weight, n: u64, u: &[f64]) -> f64 {
        let pairing: f64 = alpha.0.iter().zip(u).map(|(a, x)| *a as f64 * x).sum();
        self.g_eval(u) - pairing / n as f64
    }

    /// Newton minimization of `g − <ξ, u>` for interior ξ.
    pub fn minimize(&self, xi: &RationalPoint) -> Result<MinimizerReport, PotentialError> {
        if !self.polytope.contains(xi)? {
            return Err(PotentialError::NotInPolytope(xi.to_string()));
        }
        if !self.polytope.interior_contains(xi)? {
            return Err(PotentialError::BoundaryPoint(xi.to_string()));
        }
        self.lse.minimize_tilted(&xi.to_f64(), &vec![0.0; self.dim()])
    }

    /// Minimizes the potential restricted to the face through ξ, in face-lattice
    /// coordinates `u' = Wᵀ u`. Its minimum is the infimum of `g − <ξ, u>` over `R^m`.
    pub fn face_minimize(&self, xi: &RationalPoint) -> Result<(Face, MinimizerReport), PotentialError> {
        if !self.polytope.contains(xi)? {
            return Err(PotentialError::NotInPolytope(xi.to_string()));
        }
        let face = self.polytope.face_of(xi)?;
        let restricted = self.face_potential(&face);
        let eta = face_coordinates(&face, xi);
        let report = if face.dim == 0 {
            // only the vertex term survives in the normal-cone limit
            MinimizerReport {
                u_star: vec![],
                f_min: restricted.log_weights[0],
                gradient_norm: 0.0,
                hessian_condition: 1.0,
                min_eigenvalue: f64::INFINITY,
                iterations: 0,
            }
        } else {
            restricted.minimize_tilted(&eta, &vec![0.0; face.dim])?
        };
        Ok((face, report))
    }

    /// The face potential `u' ↦ log Σ_{β_i ∈ F} c_i e^{<y_i, u'>}` with
    /// `β_i = b + W y_i`.
    pub fn face_potential(&self, face: &Face) -> LogSumExp {
        let mut exponents = Vec::new();
        let mut log_weights = Vec::new();
        for (b, lc) in self.points.iter().zip(&self.lse.log_weights) {
            let on = face.active.iter().all(|&i| {
                let f = &self.polytope.facets()[i];
                b.pair(&f.normal).expect("dims") + f.offset == 0
            });
            if on {
                exponents.push(face_coordinates(face, &b.to_rational()));
                log_weights.push(*lc);
            }
        }
        LogSumExp { exponents, log_weights }
    }
}

/// Coordinates of `x − b` in the face lattice basis; `x` must lie in aff(F).
pub fn face_coordinates(face: &Face, x: &RationalPoint) -> Vec<f64> {
    let diff: Vec<_> = x.0.iter().zip(&face.basepoint.0).map(|(a, b)| a - b).collect();
    crate::exact::coordinates_in_basis(&face.lattice_basis, &diff)
        .expect("point lies in the affine hull of the face")
        .iter()
        .map(crate::lattice::rational_to_f64)
        .collect()
}

/// The normalized limit function `f(u) = g(u) − <ξ, u> − f_min` of a ray.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitFunction {
    pub potential: MetricPotential,
    pub xi: RationalPoint,
    pub face: Face,
    pub f_min: f64,
    /// Face-coordinate minimizer (empty for vertices).
    pub face_minimizer: Vec<f64>,
    xi_f64: Vec<f64>,
}

pub fn f_limit(pot: &MetricPotential, xi: &RationalPoint) -> Result<LimitFunction, PotentialError> {
    let (face, report) = pot.face_minimize(xi)?;
    Ok(LimitFunction {
        potential: pot.clone(),
        xi: xi.clone(),
        face,
        f_min: report.f_min,
        face_minimizer: report.u_star,
        xi_f64: xi.to_f64(),
    })
}

impl LimitFunction {
    /// `g(u) − <ξ, u>` before normalization.
    pub fn tilted(&self, u: &[f64]) -> f64 {
        self.potential.g_eval(u) - self.xi_f64.iter().zip(u).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn eval(&self, u: &[f64]) -> f64 {
        self.tilted(u) - self.f_min
    }

    /// Certified bound on `|f_N − f − f_min|` at `u` for a sequence with
    /// `‖α_N − N ξ‖_∞ ≤ bound`: Hölder gives `bound · ‖u‖_1 / N`.
    pub fn convergence_bound(&self, u: &[f64], bound: f64, n: u64) -> f64 {
        bound * u.iter().map(|x| x.abs()).sum::<f64>() / n as f64
    }

    /// `Wᵀ u`, the face-lattice coordinates of a point of `R^m`.
    pub fn to_face(&self, u: &[f64]) -> Vec<f64> {
        self.face
            .lattice_basis
            .iter()
            .map(|w| w.iter().zip(u).map(|(a, b)| *a as f64 * b).sum())
            .collect()
    }

    /// A preimage `u = W (WᵀW)^{-1} u'` of face coordinates.
    pub fn lift(&self, u_face: &[f64]) -> Vec<f64> {
        let m = self.potential.dim();
        let k = self.face.dim;
        if k == 0 {
            return vec![0.0; m];
        }
        let w = DMatrix::from_fn(m, k, |i, j| self.face.lattice_basis[j][i] as f64);
        let gram = w.transpose() * &w;
        let coeff = gram.lu().solve(&DVector::from_column_slice(u_face)).expect("independent basis");
        (w * coeff).iter().copied().collect()
    }

    /// Direction `−Σ_{i∈I} v_i` along which the non-face terms die out.
    pub fn normal_direction(&self) -> Vec<f64> {
        let m = self.potential.dim();
        let mut n = vec![0.0; m];
        for &i in &self.face.active {
            for (x, v) in n.iter_mut().zip(&self.potential.polytope().facets()[i].normal.0) {
                *x -= *v as f64;
            }
        }
        n
    }

    /// Ambient point on the minimum set pushed a distance `s` along the normal cone.
    pub fn minimum_at_depth(&self, s: f64) -> Vec<f64> {
        let base = self.lift(&self.face_minimizer);
        base.iter().zip(self.normal_direction()).map(|(b, n)| b + s * n).collect()
    }

    /// Whether `u` lies in the exclusion neighbourhood of radius `r` around the
    /// minimum set: face coordinates within `r` (sup norm) of the face minimizer,
    /// and the moment image within slack `r` of every facet containing ξ.
    pub fn near_minimum(&self, u: &[f64], r: f64) -> bool {
        let uf = self.to_face(u);
        let close = uf.iter().zip(&self.face_minimizer).all(|(a, b)| (a - b).abs() <= r);
        if !close {
            return false;
        }
        if self.face.active.is_empty() {
            return true;
        }
        let mu = self.potential.moment(u);
        self.face.active.iter().all(|&i| {
            let f = &self.potential.polytope().facets()[i];
            let slack: f64 = f.normal.0.iter().zip(&mu).map(|(v, x)| *v as f64 * x).sum::<f64>() + f.offset as f64;
            slack < r
        })
    }
}

/// Grid description for the localization check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizationBox {
    /// Half-width of the cube `[-radius, radius]^m`.
    pub radius: f64,
    /// Radius of the excluded neighbourhood of the minimum set.
    pub exclusion: f64,
    pub points_per_axis: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationReport {
    pub holds: bool,
    /// Smallest normalized `f_N` found outside the neighbourhood.
    pub min_outside: f64,
    /// First grid point with `f_N − f_min <= ε`.
    pub witness: Option<Vec<f64>>,
}

/// Checks `f_N − f_min > ε` on a grid over the box minus the neighbourhood of
/// the minimum set.
pub fn localization_check(
    pot: &MetricPotential,
    seq: &SectionSequence,
    n: u64,
    epsilon: f64,
    bx: LocalizationBox,
) -> Result<LocalizationReport, PotentialError> {
    let limit = f_limit(pot, &seq.xi)?;
    let alpha = seq.alpha(n)?;
    let m = pot.dim();
    let k = bx.points_per_axis.max(2);
    let axis: Vec<f64> = (0..k).map(|i| -bx.radius + 2.0 * bx.radius * i as f64 / (k - 1) as f64).collect();
    let mut idx = vec![0usize; m];
    let mut min_outside = f64::INFINITY;
    let mut witness = None;
    loop {
        let u: Vec<f64> = idx.iter().map(|&i| axis[i]).collect();
        if !limit.near_minimum(&u, bx.exclusion) {
            let v = pot.f_n_eval(&alpha, n, &u) - limit.f_min;
            if v <= epsilon && witness.is_none() {
                witness = Some(u.clone());
            }
            min_outside = min_outside.min(v);
        }
        let mut d = m;
        loop {
            if d == 0 {
                return Ok(LocalizationReport { holds: witness.is_none(), min_outside, witness });
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < k {
                break;
            }
            idx[d] = 0;
        }
    }
}
