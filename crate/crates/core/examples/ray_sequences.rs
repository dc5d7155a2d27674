//! Weight sequences approximating a ray: rounding, the tame rule, periodic
//! offsets, vanishing orders and the limiting support.

use std::error::Error;

use toric_lab::lattice::{RationalPoint, Weight};
use toric_lab::polytope::FacetPolytope;
use toric_lab::rays::{limiting_support, order_profile, vanishing_order, BaseRule, SectionSequence, SequenceKind};

pub fn run() -> Result<(), Box<dyn Error>> {
    let simplex = FacetPolytope::unit_simplex(2);
    // on the edge y = 0, a third of the way along
    let xi = RationalPoint::from_fractions(&[(1, 3), (0, 1)]);

    let profile = order_profile(&simplex, &xi)?;
    let k: Vec<String> = profile.k.iter().map(|k| k.to_string()).collect();
    println!("k_j = [{}], support {:?}", k.join(", "), limiting_support(&simplex, &xi)?);

    let rules = [
        ("rounded", SequenceKind::Rounded),
        ("tame", SequenceKind::Tame),
        ("offset", SequenceKind::Offset { base: BaseRule::Tame, offsets: vec![Weight::new([0, 1]), Weight::new([0, 0])] }),
    ];
    for (name, kind) in rules {
        let seq = SectionSequence::new(&simplex, &xi, kind)?;
        let report = seq.is_tame(10..=40)?;
        print!("{name:>8}: bound {}, tame {}", seq.bound, report.tame);
        for n in [10, 11, 40] {
            let alpha = seq.alpha(n)?;
            let along_edge = vanishing_order(&simplex, &alpha, n, 1)?;
            print!(" | N={n} α={alpha} dev={} ord_y={along_edge}", seq.deviation(n)?);
        }
        println!();
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
