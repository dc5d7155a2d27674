//! Invariant suite run by the `selftest` command: derivative checks, Newton
//! agreement, Beta and moment-volume oracles, normalization, and Laplace
//! identities. Faults can be injected to confirm that checks can fail.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::function::gamma::{gamma, ln_gamma};

use crate::asymptotics::{log_moment_volume, AsymptoticsError, SectionDensity};
use crate::laplace::{check_cut_bound, term_transform_exact, truncated_transform, LaplaceError};
use crate::lattice::Weight;
use crate::polytope::FacetPolytope;
use crate::potential::{MetricPotential, PotentialError};

/// Deliberate corruptions for exercising the failure paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// Sets one metric weight to zero before constructing the potential.
    ZeroWeight,
    /// Adds `10⁻³` to one Hessian entry before the finite-difference comparison.
    PerturbedHessian,
}

#[derive(Debug, thiserror::Error)]
pub enum SelfTestError {
    #[error(transparent)]
    Asymptotics(#[from] AsymptoticsError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Laplace(#[from] LaplaceError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfTestOptions {
    pub seed: u64,
    pub resolution: usize,
    pub fault: Option<Fault>,
}

impl Default for SelfTestOptions {
    fn default() -> Self {
        SelfTestOptions { seed: 7, resolution: 128, fault: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed deviation.
    pub worst: f64,
    pub tolerance: f64,
}

impl Check {
    fn new(name: &'static str, worst: f64, tolerance: f64) -> Self {
        Check { name, passed: worst <= tolerance, worst, tolerance }
    }
}

const DERIVATIVE_TOL: f64 = 1e-5;
const ORACLE_TOL: f64 = 1e-8;
const REFINEMENT_TOL: f64 = 1e-6;

fn test_potentials(rng: &mut ChaCha8Rng, fault: Option<Fault>) -> Result<Vec<MetricPotential>, PotentialError> {
    let mut out = Vec::new();
    for p in [FacetPolytope::unit_interval(), FacetPolytope::unit_simplex(2), FacetPolytope::unit_cube(2)] {
        let points = p.lattice_points(1)?;
        let mut weights: Vec<f64> = points.iter().map(|_| rng.gen_range(0.5..2.0)).collect();
        if fault == Some(Fault::ZeroWeight) {
            weights[0] = 0.0;
        }
        out.push(MetricPotential::new(&p, points, weights)?);
    }
    Ok(out)
}

/// Largest relative deviation of the analytic gradient and Hessian from
/// central differences over `samples` random points per potential.
fn derivative_errors(pots: &[MetricPotential], rng: &mut ChaCha8Rng, samples: usize, fault: Option<Fault>) -> (f64, f64) {
    let h = 1e-5;
    let (mut grad_err, mut hess_err) = (0.0f64, 0.0f64);
    for pot in pots {
        let lse = pot.lse();
        let m = pot.dim();
        for _ in 0..samples {
            let u: Vec<f64> = (0..m).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let ev = lse.evaluate(&u);
            let mut hess = ev.hessian.clone();
            if fault == Some(Fault::PerturbedHessian) {
                hess[(0, 0)] += 1e-3;
            }
            for i in 0..m {
                let mut up = u.clone();
                let mut dn = u.clone();
                up[i] += h;
                dn[i] -= h;
                let fd = (lse.value(&up) - lse.value(&dn)) / (2.0 * h);
                grad_err = grad_err.max((fd - ev.gradient[i]).abs() / ev.gradient[i].abs().max(1.0));
                let (gu, gd) = (lse.gradient(&up), lse.gradient(&dn));
                for j in 0..m {
                    let fd = (gu[j] - gd[j]) / (2.0 * h);
                    hess_err = hess_err.max((fd - hess[(j, i)]).abs() / hess[(j, i)].abs().max(1.0));
                }
            }
        }
    }
    (grad_err, hess_err)
}

/// Largest distance between Newton minimizers of `g − <η, u>` from random starts.
fn newton_spread(pots: &[MetricPotential], rng: &mut ChaCha8Rng, starts: usize) -> Result<f64, PotentialError> {
    let mut worst = 0.0f64;
    for pot in pots {
        let m = pot.dim();
        // interior moment target: the vertex centroid
        let verts = pot.polytope().vertices();
        let eta: Vec<f64> =
            (0..m).map(|i| verts.iter().map(|v| v.to_f64()[i]).sum::<f64>() / verts.len() as f64).collect();
        let mut first: Option<Vec<f64>> = None;
        for _ in 0..starts {
            let start: Vec<f64> = (0..m).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let r = pot.lse().minimize_tilted(&eta, &start)?;
            match &first {
                None => first = Some(r.u_star),
                Some(u0) => {
                    let d = u0.iter().zip(&r.u_star).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    worst = worst.max(d);
                }
            }
        }
    }
    Ok(worst)
}

/// Runs the suite. A construction error (e.g. a zero weight) is returned as `Err`.
pub fn run_selftest(opts: &SelfTestOptions) -> Result<Vec<Check>, SelfTestError> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let pots = test_potentials(&mut rng, opts.fault)?;
    let mut checks = Vec::new();

    let (g, h) = derivative_errors(&pots, &mut rng, 100, opts.fault);
    checks.push(Check::new("gradient_vs_central_differences", g, DERIVATIVE_TOL));
    checks.push(Check::new("hessian_vs_central_differences", h, DERIVATIVE_TOL));
    checks.push(Check::new("newton_from_20_starts_agrees", newton_spread(&pots, &mut rng, 20)?, ORACLE_TOL));

    let interval = MetricPotential::uniform(&FacetPolytope::unit_interval())?;
    let mut worst = 0.0f64;
    for (n, a) in [(2u64, 1i64), (9, 0), (20, 10)] {
        let d = SectionDensity::new(&interval, &Weight::new([a]), n, opts.resolution)?;
        let beta = ln_gamma(a as f64 + 1.0) + ln_gamma((n as i64 - a) as f64 + 1.0) - ln_gamma(n as f64 + 2.0);
        worst = worst.max((d.norm().log_value - beta).exp_m1().abs());
    }
    checks.push(Check::new("projective_line_beta_norms", worst, ORACLE_TOL));

    let mut worst = 0.0f64;
    for p in [FacetPolytope::unit_interval(), FacetPolytope::unit_simplex(2), FacetPolytope::unit_cube(2)] {
        let exact = crate::lattice::rational_to_f64(&p.volume());
        let pot = MetricPotential::uniform(&p)?;
        worst = worst.max((log_moment_volume(&pot, opts.resolution)?.exp() / exact - 1.0).abs());
    }
    checks.push(Check::new("moment_image_volume", worst, ORACLE_TOL));

    // the density normalized on one grid integrates to 1 on a doubled grid
    let simplex = MetricPotential::uniform(&FacetPolytope::unit_simplex(2))?;
    let (mut norm_err, mut refine_err) = (0.0f64, 0.0f64);
    for (pot, alpha, n) in [(&interval, Weight::new([0]), 50u64), (&simplex, Weight::new([25, 0]), 50), (&simplex, Weight::new([17, 17]), 50)] {
        let coarse = SectionDensity::new(pot, &alpha, n, opts.resolution)?;
        let fine = SectionDensity::with_quadrature(pot, &alpha, n, coarse.quadrature().with_resolution(2 * opts.resolution))?;
        let diff = (fine.norm().log_value - coarse.norm().log_value).exp_m1().abs();
        norm_err = norm_err.max(diff);
        refine_err = refine_err.max(diff);
        norm_err = norm_err.max((coarse.expectation(|_| 1.0) - 1.0).abs());
    }
    checks.push(Check::new("probability_normalization", norm_err, ORACLE_TOL));
    checks.push(Check::new("quadrature_refinement_stability", refine_err, REFINEMENT_TOL));

    let mut worst = 0.0f64;
    for alpha in [0.0, 0.5, 1.0] {
        for t in [10.0, 50.0, 200.0] {
            let exact = term_transform_exact(alpha, 0, t)?;
            worst = worst.max((exact / (gamma(alpha + 1.0) * t.powf(-(alpha + 1.0))) - 1.0).abs());
        }
    }
    checks.push(Check::new("laplace_gamma_identity", worst, 1e-12));

    let mut worst = 0.0f64;
    for alpha in [0.0, 0.5, 1.0] {
        for j in 0..=2 {
            for t in [10.0, 50.0, 200.0] {
                let exact = term_transform_exact(alpha, j, t)?;
                let tr = truncated_transform(alpha, j, t, 30.0 / t)?;
                let excess = (exact - tr.value).abs() - tr.tail_bound - tr.quadrature_error;
                worst = worst.max(excess.max(0.0) / exact.abs());
            }
        }
    }
    checks.push(Check::new("laplace_truncated_within_remainder", worst, ORACLE_TOL));

    let mut violations = 0.0;
    for _ in 0..20 {
        let c = rng.gen_range(0.1..5.0);
        let npow = rng.gen_range(0..5u32);
        let omega = rng.gen_range(0.5..20.0);
        let t = rng.gen_range(2.0..300.0);
        let chk = check_cut_bound(move |s: f64| c * s.powi(npow as i32) * (1.0 + (omega * s).sin().powi(2)) / 2.0, c, npow, t, 1.0)?;
        if !chk.holds {
            violations += 1.0;
        }
    }
    checks.push(Check::new("cut_bound_dominates_random_family", violations, 0.0));
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_run_passes() {
        let checks = run_selftest(&SelfTestOptions::default()).unwrap();
        for c in &checks {
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn faults_are_detected() {
        let opts = SelfTestOptions { resolution: 64, fault: Some(Fault::PerturbedHessian), ..Default::default() };
        let checks = run_selftest(&opts).unwrap();
        let hess = checks.iter().find(|c| c.name == "hessian_vs_central_differences").unwrap();
        assert!(!hess.passed);
        assert!(checks.iter().find(|c| c.name == "gradient_vs_central_differences").unwrap().passed);

        let opts = SelfTestOptions { fault: Some(Fault::ZeroWeight), ..Default::default() };
        assert!(matches!(
            run_selftest(&opts),
            Err(SelfTestError::Potential(PotentialError::NonPositiveWeight { .. }))
        ));
    }
}
