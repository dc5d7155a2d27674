//! Invariants over randomized inputs.

use num_integer::binomial;
use proptest::prelude::*;
use statrs::function::gamma::{gamma, ln_gamma};

use toric_lab::asymptotics::fit::fit_power_law;
use toric_lab::asymptotics::SectionDensity;
use toric_lab::config::ExperimentConfig;
use toric_lab::laplace::{check_cut_bound, term_transform_exact, truncated_transform};
use toric_lab::lattice::{format_rational, Rational, RationalPoint, Weight};
use toric_lab::polytope::FacetPolytope;
use toric_lab::potential::MetricPotential;
use toric_lab::rays::{SectionSequence, SequenceKind};

fn config() -> ProptestConfig {
    ProptestConfig { cases: 32, ..ProptestConfig::default() }
}

/// A rational point of the closed simplex `{x, y >= 0, x + y <= 1}`.
fn simplex_point() -> impl Strategy<Value = RationalPoint> {
    (1i64..12).prop_flat_map(|q| (Just(q), 0..=q)).prop_flat_map(|(q, a)| {
        (0..=q - a).prop_map(move |b| RationalPoint::from_fractions(&[(a, q), (b, q)]))
    })
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn dilate_lattice_point_counts(n in 1u64..40) {
        let interval = FacetPolytope::unit_interval().lattice_points(n).unwrap();
        prop_assert_eq!(interval.len() as u64, n + 1);
        let simplex = FacetPolytope::unit_simplex(2).lattice_points(n).unwrap();
        prop_assert_eq!(simplex.len() as u64, binomial(n + 2, 2));
        let square = FacetPolytope::unit_cube(2).lattice_points(n).unwrap();
        prop_assert_eq!(square.len() as u64, (n + 1) * (n + 1));
    }

    #[test]
    fn kappa_is_codim_plus_half_face_dim(xi in simplex_point()) {
        let p = FacetPolytope::unit_simplex(2);
        let k = p.kappa(&xi).unwrap();
        let face_dim = p.face_of(&xi).unwrap().dim as i64;
        prop_assert_eq!(k, Rational::from_integer(2 - face_dim) + Rational::new(face_dim, 2));
        prop_assert!(k >= Rational::from_integer(1) && k <= Rational::from_integer(2));
    }

    #[test]
    fn moment_in_polytope_and_hessian_psd(
        u in prop::collection::vec(-20.0f64..20.0, 2),
        w in prop::collection::vec(0.1f64..10.0, 3),
    ) {
        let p = FacetPolytope::unit_simplex(2);
        let pot = MetricPotential::new(&p, p.lattice_points(1).unwrap(), w).unwrap();
        let mu = pot.moment(&u);
        for facet in p.facets() {
            let slack: f64 = mu.iter().zip(&facet.normal.0).map(|(x, v)| x * *v as f64).sum::<f64>() + facet.offset as f64;
            prop_assert!(slack >= -1e-12);
        }
        let eig = pot.covariance(&u).symmetric_eigen().eigenvalues;
        prop_assert!(eig.iter().all(|&l| l >= -1e-12));
    }

    #[test]
    fn sequences_stay_in_dilate_near_ray(xi in simplex_point(), tame in any::<bool>(), n in 1u64..300) {
        let p = FacetPolytope::unit_simplex(2);
        let kind = if tame { SequenceKind::Tame } else { SequenceKind::Rounded };
        let seq = SectionSequence::new(&p, &xi, kind).unwrap();
        let n = n.max(seq.n0);
        let alpha = seq.alpha(n).unwrap();
        prop_assert!(p.dilate_contains(&alpha, n).unwrap());
        prop_assert!(seq.deviation(n).unwrap() <= seq.bound);
        if tame {
            prop_assert!(seq.is_tame(n..n + 1).unwrap().tame);
        }
    }

    #[test]
    fn transform_matches_truncated_quadrature(alpha in 0.0f64..2.0, j in 0u32..=2, t in 5.0f64..400.0) {
        let exact = term_transform_exact(alpha, j, t).unwrap();
        if j == 0 {
            prop_assert!((exact / (gamma(alpha + 1.0) * t.powf(-alpha - 1.0)) - 1.0).abs() < 1e-12);
        }
        let tr = truncated_transform(alpha, j, t, 40.0 / t).unwrap();
        prop_assert!((exact - tr.value).abs() <= tr.tail_bound + tr.quadrature_error + 1e-12 * exact.abs());
    }

    #[test]
    fn cut_bound_dominates(c in 0.1f64..5.0, npow in 0u32..6, omega in 0.5f64..20.0, t in 2.0f64..500.0) {
        let phi = move |s: f64| c * s.powi(npow as i32) * (1.0 + (omega * s).sin().powi(2)) / 2.0;
        prop_assert!(check_cut_bound(phi, c, npow, t, 1.0).unwrap().holds);
    }

    #[test]
    fn interval_density_is_normalized_beta(n in 2u64..120, frac in 0.0f64..=1.0) {
        let a = (frac * n as f64).round() as i64;
        let pot = MetricPotential::uniform(&FacetPolytope::unit_interval()).unwrap();
        let d = SectionDensity::new(&pot, &Weight::new([a]), n, 256).unwrap();
        let beta = ln_gamma(a as f64 + 1.0) + ln_gamma((n as i64 - a) as f64 + 1.0) - ln_gamma(n as f64 + 2.0);
        prop_assert!((d.norm().log_value - beta).abs() < 1e-8);
        prop_assert!((d.expectation(|_| 1.0) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn power_law_fit_recovers_exponent(exponent in -3.0f64..3.0, log_c in -5.0f64..5.0) {
        let samples: Vec<(u64, f64)> =
            [25u64, 50, 100, 200, 400].iter().map(|&n| (n, log_c + exponent * (n as f64).ln())).collect();
        let fit = fit_power_law(&samples).unwrap();
        prop_assert!((fit.exponent - exponent).abs() < 1e-10);
        prop_assert!((fit.log_constant - log_c).abs() < 1e-9);
    }

    #[test]
    fn config_round_trip(xi in simplex_point(), res in 16usize..512) {
        let json = format!(
            r#"{{"polytope": [{{"normal": [1, 0], "offset": 0}}, {{"normal": [0, 1], "offset": 0}},
                              {{"normal": [-1, -1], "offset": 1}}],
                 "ray": ["{}", "{}"], "sequence": {{"kind": "tame"}}, "N_list": [10, 20],
                 "quadrature": {{"resolution": {res}}}}}"#,
            format_rational(&xi.0[0]),
            format_rational(&xi.0[1])
        );
        let cfg = ExperimentConfig::from_json(&json).unwrap();
        prop_assert_eq!(&cfg.ray, &xi);
        prop_assert_eq!(&ExperimentConfig::from_json(&cfg.to_json()).unwrap(), &cfg);
        prop_assert!(cfg.build().is_ok());
    }
}
