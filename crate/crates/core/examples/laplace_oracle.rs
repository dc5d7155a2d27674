//! Exact Laplace transforms of `s^α (log s)^j`, truncated transforms with
//! certified tails, expansions of fiber integrals, the cut bound, and the
//! limits `t ∫ e^{-t‖γ‖²} |γ'|² ρ` over complex curves.

use std::error::Error;

use toric_lab::lattice::Rational;
use toric_lab::laplace::{
    curve_limit, cut_bound, expansion_eval, geometric_grid, norm_sq, term_transform_exact, truncated_transform,
    CurveOptions, ExpansionTerm, FiberDensity, MonomialCurve,
};

pub fn run() -> Result<(), Box<dyn Error>> {
    let t = 50.0;
    let exact = term_transform_exact(0.5, 1, t)?;
    let tr = truncated_transform(0.5, 1, t, 1.0)?;
    println!("∫ e^(-50s) s^(1/2) log s ds = {exact:.15e}");
    println!("  on [0, 1]: {:.15e}, tail bound {:.2e}", tr.value, tr.tail_bound);

    // φ(s) = s^{1/2} + 2 s^{3/2} log s on (0, 1]
    let phi = FiberDensity::new(|s: f64| s.sqrt() + 2.0 * s.powf(1.5) * s.ln(), 1.0);
    let terms = [
        ExpansionTerm::new(Rational::new(1, 2), 0, 0, 1.0)?,
        ExpansionTerm::new(Rational::new(1, 2), 1, 1, 2.0)?,
    ];
    for t in [20.0, 200.0, 2000.0] {
        let one = expansion_eval(&terms, t, 1)?;
        let two = expansion_eval(&terms, t, 2)?;
        println!(
            "t = {t}: F = {:.10e}, one term {:.10e} (next {:.1e}), two terms {:.10e}",
            phi.transform(t),
            one.value,
            one.truncation_estimate,
            two.value
        );
    }

    println!("cut bound for |φ| <= s², t = 10: {}", cut_bound(1.0, 2, 10.0)?.bound);

    let grid = geometric_grid(100.0, 1000.0, 10);
    for (name, curve) in [("line", MonomialCurve::line()), ("cusp", MonomialCurve::cusp())] {
        let lim = curve_limit(&curve, &norm_sq, 1, &grid, &CurveOptions::default())?;
        println!(
            "{name}: limit {:.8}, t·F(1000) = {:.8}, exponent {:.4}",
            lim.limit, lim.last_scaled, lim.exponent
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run()
}
