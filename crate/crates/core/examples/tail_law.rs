//! Distribution tails `D_N(t)` of the probability densities `|φ_N|²` and the
//! fitted law `D_N(t₀) ~ (log N / N)^κ`.

use std::error::Error;

use toric_lab::asymptotics::fit::fit_log_law;
use toric_lab::asymptotics::{log_grid, SectionDensity};
use toric_lab::lattice::{rational_to_f64, RationalPoint};
use toric_lab::polytope::FacetPolytope;
use toric_lab::potential::MetricPotential;
use toric_lab::rays::{SectionSequence, SequenceKind};

pub fn run() -> Result<(), Box<dyn Error>> {
    let p = FacetPolytope::unit_interval();
    let pot = MetricPotential::uniform(&p)?;
    let xi = RationalPoint::from_fractions(&[(0, 1)]);
    let seq = SectionSequence::new(&p, &xi, SequenceKind::Tame)?;

    let d = SectionDensity::new(&pot, &seq.alpha(40)?, 40, 128)?;
    let tmax = d.log_max_density()?.exp();
    println!("N = 40, max density {tmax:.3}");
    for t in log_grid(1e-3, tmax, 6) {
        // closed form for the vertex section: 1 − (t/(N+1))^{1/N}
        let exact = 1.0 - (t / 41.0).powf(1.0 / 40.0);
        println!("  D({t:.3e}) = {:.10} (closed form {exact:.10})", d.tail_volume(t)?);
    }

    let mut samples = Vec::new();
    for n in [25u64, 50, 100, 200, 400, 800] {
        let d = SectionDensity::new(&pot, &seq.alpha(n)?, n, 128)?;
        samples.push((n, d.tail_volume(1.0)?.ln()));
    }
    let kappa = rational_to_f64(&p.kappa(&xi)?);
    let fit = fit_log_law(&samples, kappa)?;
    println!("log-law slope {:.4} against κ = {kappa}", fit.fit.exponent);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
