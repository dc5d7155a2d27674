//! Facet-presented polytopes: vertices, faces through a point, the exponent κ,
//! exact volume and the lattice points of dilates.

use std::error::Error;

use toric_lab::lattice::RationalPoint;
use toric_lab::polytope::{Facet, FacetPolytope};

pub fn run() -> Result<(), Box<dyn Error>> {
    // a trapezoid: 0 <= x, 0 <= y <= 1, x + y <= 2
    let trapezoid = FacetPolytope::new(vec![
        Facet::new([1, 0], 0),
        Facet::new([0, 1], 0),
        Facet::new([0, -1], 1),
        Facet::new([-1, -1], 2),
    ])?;
    let verts: Vec<String> = trapezoid.vertices().iter().map(|v| v.to_string()).collect();
    println!("vertices: {}", verts.join(" "));
    println!("volume: {}", trapezoid.volume());

    for xi in ["1/2, 1/2", "1, 0", "0, 0"] {
        let xi: RationalPoint = xi.parse()?;
        let face = trapezoid.face_of(&xi)?;
        println!(
            "ξ = {xi}: active facets {:?}, face dimension {}, κ = {}",
            face.active,
            face.dim,
            trapezoid.kappa(&xi)?
        );
    }

    for n in [1, 2, 3] {
        println!("#(N P ∩ Z²) at N = {n}: {}", trapezoid.lattice_points(n)?.len());
    }

    match FacetPolytope::new(vec![Facet::new([2], 0), Facet::new([-1], 1)]) {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!("non-primitive normals are refused"),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
