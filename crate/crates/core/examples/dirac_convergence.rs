//! Weak convergence of `|φ_N|²` to the point mass at ξ, tested against
//! moment-coordinate functions.

use std::error::Error;

use toric_lab::asymptotics::SectionDensity;
use toric_lab::lattice::RationalPoint;
use toric_lab::polytope::FacetPolytope;
use toric_lab::potential::MetricPotential;
use toric_lab::rays::{SectionSequence, SequenceKind};

pub fn run() -> Result<(), Box<dyn Error>> {
    let p = FacetPolytope::unit_simplex(2);
    let pot = MetricPotential::uniform(&p)?;
    let xi = RationalPoint::from_fractions(&[(1, 2), (0, 1)]);
    let x = xi.to_f64();
    let seq = SectionSequence::new(&p, &xi, SequenceKind::Tame)?;
    println!("{:>5} {:>12} {:>12}", "N", "|E p − ξ|", "E|p − ξ|²");
    for n in [25u64, 100, 400] {
        let d = SectionDensity::new(&pot, &seq.alpha(n)?, n, 128)?;
        let mean = [d.expectation(|q| q[0]), d.expectation(|q| q[1])];
        let bias = (mean[0] - x[0]).abs().max((mean[1] - x[1]).abs());
        let spread = d.expectation(|q| (q[0] - x[0]).powi(2) + (q[1] - x[1]).powi(2));
        println!("{n:>5} {bias:>12.3e} {spread:>12.3e}");
    }

    // the vertex section of the projective line has E p = 1/(N+2) exactly
    let line = MetricPotential::uniform(&FacetPolytope::unit_interval())?;
    let d = SectionDensity::new(&line, &toric_lab::lattice::Weight::new([0]), 98, 128)?;
    println!("vertex, N = 98: E p = {:.12} (1/100)", d.expectation(|q| q[0]));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
