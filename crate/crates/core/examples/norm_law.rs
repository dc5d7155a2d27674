//! Norms of peak sections and their power law `‖s_N‖² e^{N f_min} ~ c N^{-κ}`
//! for an interior, a vertex and an edge ray.

use std::error::Error;

use toric_lab::asymptotics::fit::fit_power_law;
use toric_lab::asymptotics::SectionDensity;
use toric_lab::lattice::{rational_to_f64, RationalPoint};
use toric_lab::polytope::FacetPolytope;
use toric_lab::potential::MetricPotential;
use toric_lab::rays::{SectionSequence, SequenceKind};

pub fn run() -> Result<(), Box<dyn Error>> {
    let cases = [
        ("interval, interior", FacetPolytope::unit_interval(), RationalPoint::from_fractions(&[(1, 2)])),
        ("interval, vertex", FacetPolytope::unit_interval(), RationalPoint::from_fractions(&[(0, 1)])),
        ("simplex, edge", FacetPolytope::unit_simplex(2), RationalPoint::from_fractions(&[(1, 2), (0, 1)])),
    ];
    for (name, p, xi) in cases {
        let pot = MetricPotential::uniform(&p)?;
        let seq = SectionSequence::new(&p, &xi, SequenceKind::Tame)?;
        let mut samples = Vec::new();
        for n in [50u64, 100, 200, 400, 800] {
            let d = SectionDensity::new(&pot, &seq.alpha(n)?, n, 128)?;
            samples.push((n, d.scaled_log_norm()?));
        }
        let fit = fit_power_law(&samples)?;
        println!(
            "{name:>20}: fitted exponent {:+.4}, expected {:+.4} (residual {:.1e})",
            fit.exponent,
            -rational_to_f64(&p.kappa(&xi)?),
            fit.residual
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
