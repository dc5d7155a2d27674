//! The log-sum-exp potential of a weighted polytope: moment map, Newton
//! minimization of the tilted potential, the limit function for boundary
//! rays and the grid localization check.

use std::error::Error;

use toric_lab::lattice::RationalPoint;
use toric_lab::polytope::FacetPolytope;
use toric_lab::potential::{f_limit, localization_check, LocalizationBox, MetricPotential};
use toric_lab::rays::{SectionSequence, SequenceKind};

pub fn run() -> Result<(), Box<dyn Error>> {
    let square = FacetPolytope::unit_cube(2);
    let points = square.lattice_points(1)?;
    // heavier weight on the corner (1, 1)
    let weights = points.iter().map(|p| if p.0 == [1, 1] { 3.0 } else { 1.0 }).collect();
    let pot = MetricPotential::new(&square, points, weights)?;

    let xi = RationalPoint::from_fractions(&[(1, 4), (1, 2)]);
    let min = pot.minimize(&xi)?;
    println!(
        "interior ξ = {xi}: u* = {:?}, f_min = {:.12}, {} Newton steps, cond(H) = {:.3}",
        min.u_star, min.f_min, min.iterations, min.hessian_condition
    );
    println!("moment(u*) = {:?}", pot.moment(&min.u_star));

    let edge = RationalPoint::from_fractions(&[(1, 2), (0, 1)]);
    let limit = f_limit(&pot, &edge)?;
    println!("edge ξ = {edge}: face dim {}, f_min = {:.12}", limit.face.dim, limit.f_min);
    for s in [2.0, 8.0, 32.0] {
        let u = limit.minimum_at_depth(s);
        println!("  f along the normal cone at depth {s}: {:.3e}", limit.eval(&u));
    }

    let seq = SectionSequence::new(&square, &edge, SequenceKind::Tame)?;
    let bx = LocalizationBox { radius: 6.0, exclusion: 0.5, points_per_axis: 61 };
    for n in [50, 200] {
        let rep = localization_check(&pot, &seq, n, 0.01, bx)?;
        println!("  localization at N = {n}: holds {}, min outside {:.4}", rep.holds, rep.min_outside);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
