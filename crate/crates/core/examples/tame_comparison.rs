//! Tail volumes of a non-tame sequence against the tame sequence for the same
//! ray. For the projective line at the vertex ξ = 0 the offset section
//! `α_N = 1` has the wider superlevel sets below its peak density.

use std::error::Error;

use toric_lab::asymptotics::{compare_tame, log_grid, SectionDensity};
use toric_lab::lattice::{RationalPoint, Weight};
use toric_lab::polytope::FacetPolytope;
use toric_lab::potential::MetricPotential;
use toric_lab::rays::{BaseRule, SectionSequence, SequenceKind};

pub fn run() -> Result<(), Box<dyn Error>> {
    let p = FacetPolytope::unit_interval();
    let pot = MetricPotential::uniform(&p)?;
    let xi = RationalPoint::from_fractions(&[(0, 1)]);
    let tame = SectionSequence::new(&p, &xi, SequenceKind::Tame)?;
    let offset =
        SectionSequence::new(&p, &xi, SequenceKind::Offset { base: BaseRule::Tame, offsets: vec![Weight::new([1])] })?;

    for n in [25u64, 100] {
        let peak = SectionDensity::new(&pot, &offset.alpha(n)?, n, 128)?.log_max_density()?.exp();
        println!("N = {n}: offset peak density {peak:.2}, tame peak {}", n + 1);
        for t in log_grid(1e-3, (n + 1) as f64, 5) {
            let c = compare_tame(&pot, &offset, &tame, n, 128, t)?;
            println!("  t = {t:>9.3e}: D = {:.5}, D_tame = {:.5}, D <= D_tame: {}", c.d, c.d_tame, c.holds);
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
