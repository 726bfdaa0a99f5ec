use certipose::bench::{generate_random_graph, GeneratorConfig};
use certipose::dual::{certify, DualOptions, Status};
use certipose::g2o::{parse_g2o, write_g2o, ParseOptions};
use certipose::graph::evaluate_cost;
use certipose::matrices::build_complex_matrix;
use certipose::refine::{gauss_newton, RefineOptions};
use certipose::relaxation::{rank_one_extract, solve_sdp_relaxation, RelaxationOptions};

fn graph(seed: u64) -> GeneratorConfig {
    GeneratorConfig {
        n: 12,
        pc: 0.15,
        sigma_delta: 0.1,
        sigma_r: 0.2,
        seed,
        ..GeneratorConfig::default()
    }
}

#[test]
fn g2o_export_preserves_certificate() {
    for seed in 0..3 {
        let (g, truth) = generate_random_graph(&graph(seed)).unwrap();
        let text = write_g2o(&g, Some(&truth), 100).unwrap();
        let parsed = parse_g2o(&text, ParseOptions { strict: true }).unwrap();
        assert_eq!(parsed.ids, (100..112).collect::<Vec<_>>());
        let a = certify(&g, &DualOptions::default()).unwrap();
        let b = certify(&parsed.graph, &DualOptions::default()).unwrap();
        assert_eq!(a.status, b.status);
        // The file keeps 9 significant digits.
        assert!((a.dual_value - b.dual_value).abs() <= 1e-6 * (1.0 + a.dual_value.abs()));
        assert_eq!(write_g2o(&parsed.graph, parsed.initial.as_ref(), 100).unwrap(), text);
    }
}

#[test]
fn certified_optimum_is_a_fixed_point_of_refinement_and_relaxation() {
    for seed in 10..13 {
        let (g, _) = generate_random_graph(&graph(seed)).unwrap();
        let cert = certify(&g, &DualOptions::default()).unwrap();
        assert_eq!(cert.status, Status::Optimal, "seed {seed}");
        let f = evaluate_cost(&g, &cert.estimate.realized).unwrap();
        let gn = gauss_newton(&g, &cert.estimate.realized, &RefineOptions::default()).unwrap();
        assert!(gn.final_cost >= cert.dual_value - 1e-6 * (1.0 + f));
        assert!((gn.final_cost - f).abs() <= 1e-6 * (1.0 + f));

        let w = build_complex_matrix(&g).unwrap();
        let sdp = solve_sdp_relaxation(&w, &RelaxationOptions::default()).unwrap();
        let (est, exact) = rank_one_extract(&sdp, RelaxationOptions::default().rank_tol).unwrap();
        assert!(exact);
        let fs = evaluate_cost(&g, &est.realized).unwrap();
        assert!((fs - f).abs() <= 1e-5 * (1.0 + f), "{fs} vs {f}");
    }
}
