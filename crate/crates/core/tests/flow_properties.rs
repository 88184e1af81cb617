use hilbert_rg::flow::{build_quadratic_from_amplitudes, ground_amplitudes};
use hilbert_rg::oracles::{projected_denominator, projected_residual, scan_bisect_roots};
use hilbert_rg::{
    build_custom, build_degenerate_fixed_point, build_tight_binding, eigen_decompose, flow_derivative,
    reduction_step, run_flow, solve_continuity, ContinuityTie, Error, FlowConfig, Hamiltonian, TargetMode,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_hamiltonian(rng: &mut ChaCha8Rng, n: usize) -> Hamiltonian {
    let eps: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut h1 = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let x = rng.random_range(-1.0..1.0);
            h1[(i, j)] = x;
            h1[(j, i)] = x;
        }
    }
    let h1: Vec<Vec<f64>> = h1.row_iter().map(|r| r.iter().copied().collect()).collect();
    build_custom(&eps, &h1, rng.random_range(0.5..3.0)).unwrap()
}

/// Appends a state with no H1 coupling to the rest, placed above the spectrum.
fn with_decoupled_state(h: &Hamiltonian, h_nn: f64) -> Hamiltonian {
    let n = h.dim();
    let top = eigen_decompose(&h.full_matrix()).unwrap().values()[n - 1];
    let mut eps = h.eps().clone().insert_row(n, 0.0);
    eps[n] = top + 1.0 + (h.g() * h_nn).abs() - h.g() * h_nn;
    let mut h1 = DMatrix::zeros(n + 1, n + 1);
    h1.view_mut((0, 0), (n, n)).copy_from(h.h1());
    h1[(n, n)] = h_nn;
    Hamiltonian::new(eps, h1, h.g()).unwrap()
}

#[test]
fn quadratic_root_matches_bracketing_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let tie = ContinuityTie::SmallerMagnitude;
    let (mut compared, mut complex) = (0, 0);
    while compared < 100 {
        let n = rng.random_range(4..=8);
        let h = random_hamiltonian(&mut rng, n);
        let es = eigen_decompose(&h.full_matrix()).unwrap();
        let spread = es.values()[n - 1] - es.values()[0];
        let lambda = es.values()[0] + rng.random_range(-0.2..0.2) * spread;
        let (anchor, elim) = (0, n - 1);
        let a = ground_amplitudes(&es, anchor, 1e-8);
        let Ok(build) = build_quadratic_from_amplitudes(&h, &a, lambda, anchor, elim) else {
            continue;
        };

        let f = |g: f64| projected_residual(&h, &a, lambda, anchor, elim, g);
        let pole = |g: f64| projected_denominator(&h, lambda, elim, g);
        let half_width = 10.0 * h.g().abs().max(1.0);
        let oracle = scan_bisect_roots(f, pole, h.g(), half_width, 40_000);

        match solve_continuity(build.a_coef, build.b_coef, build.c_coef, h.g(), tie) {
            Ok(choice) => {
                if (choice.chosen - h.g()).abs() > 0.9 * half_width {
                    continue;
                }
                let nearest = oracle.first().copied().unwrap_or(f64::NAN);
                assert!(
                    (choice.chosen - nearest).abs() <= 1e-6 * choice.chosen.abs().max(1.0),
                    "n = {n}: quadratic {} vs bisection {nearest}",
                    choice.chosen
                );
                compared += 1;
            }
            Err(Error::ComplexRoots { .. }) => {
                assert!(
                    oracle.is_empty(),
                    "oracle found {oracle:?} where the quadratic has none"
                );
                complex += 1;
            }
            Err(e) => panic!("unexpected {e}"),
        }
    }
    assert!(complex < 1000);
}

#[test]
fn decoupled_elimination_is_invisible() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let n = rng.random_range(3..=8);
        let base = random_hamiltonian(&mut rng, n);
        let h = with_decoupled_state(&base, rng.random_range(-1.0..1.0));
        let es = eigen_decompose(&h.full_matrix()).unwrap();
        for mode in [TargetMode::Frozen, TargetMode::Running] {
            let config = FlowConfig {
                n_min: 2,
                m_track: 2,
                target_mode: mode,
                ..FlowConfig::default()
            };
            let (next, step) = reduction_step(&h, es.values()[0], &config).unwrap();
            assert!((next.g() - h.g()).abs() <= 1e-10 * h.g().abs());
            assert_eq!(step.eliminated, n);
            let before = eigen_decompose(&base.full_matrix()).unwrap();
            let after = eigen_decompose(&next.full_matrix()).unwrap();
            for (x, y) in before.values().iter().zip(after.values().iter()) {
                assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0));
            }
        }
    }
}

#[test]
fn decoupled_tight_binding_keeps_p_block_spectrum() {
    let base = build_tight_binding(6, 1.0, 0.5, 4.0).unwrap();
    let h = with_decoupled_state(&base, 1.0);
    let es = eigen_decompose(&h.full_matrix()).unwrap();
    let config = FlowConfig::default();
    let (next, step) = reduction_step(&h, es.values()[0], &config).unwrap();
    assert!((next.g() - 4.0).abs() <= 1e-12 * 4.0);
    let p_block = eigen_decompose(&base.full_matrix()).unwrap().lowest(5);
    for (x, y) in step.spectrum_after.iter().zip(&p_block) {
        assert!((x - y).abs() <= 1e-10);
    }
}

#[test]
fn degenerate_model_is_a_fixed_point() {
    for n in [5, 10, 20, 50] {
        let n_min = if n == 5 { 2 } else { 5 };
        let config = FlowConfig {
            n_min,
            m_track: n_min,
            ..FlowConfig::default()
        };
        let trace = run_flow(&build_degenerate_fixed_point(n, 20.0).unwrap(), &config).unwrap();
        assert!(trace.is_complete());
        assert_eq!(trace.steps.len(), n - n_min);
        for s in &trace.steps {
            assert!((s.g_after - 20.0).abs() <= 1e-8 * 20.0);
            assert!((s.spectrum_after[0] + 20.0).abs() <= 1e-8 * 20.0);
            assert!(s.residual.abs() <= s.residual_tol);
        }
        for (_, dg) in flow_derivative(&trace) {
            assert!(dg.abs() <= 1e-8);
        }
    }
}

#[test]
fn tight_binding_flow_decreases_after_first_step() {
    let trace = run_flow(
        &build_tight_binding(20, 1.0, 0.5, 20.0).unwrap(),
        &FlowConfig::default(),
    )
    .unwrap();
    let dg = flow_derivative(&trace);
    assert_eq!(dg.len(), 15);
    assert!(dg[0].1.abs() <= 1e-12 * 20.0);
    assert!(dg[1..].iter().all(|&(_, d)| d < 0.0));
    assert!((trace.g_at(5).unwrap() - 2.2557).abs() < 1e-3);
}

#[test]
fn restriction_is_exact_and_continuity_holds() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..20 {
        let n = rng.random_range(4..=8);
        let h = random_hamiltonian(&mut rng, n);
        let es = eigen_decompose(&h.full_matrix()).unwrap();
        let lambda = es.values()[0] + 0.05;
        let config = FlowConfig {
            n_min: 2,
            m_track: 2,
            ..FlowConfig::default()
        };
        let Ok((next, step)) = reduction_step(&h, lambda, &config) else {
            continue;
        };
        for i in 0..n - 1 {
            assert_eq!(next.eps()[i], h.eps()[i]);
            for j in 0..n - 1 {
                assert_eq!(next.h1()[(i, j)], h.h1()[(i, j)]);
            }
        }
        if let Some(other) = step.other_root() {
            assert!((step.g_after - step.g_before).abs() <= (other - step.g_before).abs());
        }
        assert!(step.residual.abs() <= step.residual_tol);
    }
}

#[test]
fn custom_model_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    std::fs::write(
        &path,
        r#"{"eps": [0.0, 0.5, 1.0], "h1": [[1, 0.2, 0], [0.2, 1, 0.2], [0, 0.2, 1]], "g0": 3}"#,
    )
    .unwrap();
    let spec = hilbert_rg::ModelSpec {
        kind: hilbert_rg::ModelKind::Custom,
        source_path: Some(path),
        ..Default::default()
    };
    let h = spec.build().unwrap();
    assert_eq!(h.dim(), 3);
    assert_eq!(h.g(), 3.0);
    assert_eq!(spec.resolved(&h).n, 3);
}

fn amplitudes(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.0f64..1.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// The expanded coefficients agree with the unexpanded condition times its
    /// denominator at arbitrary g, for arbitrary (not necessarily eigen-) amplitudes.
    #[test]
    fn expansion_matches_direct_form(
        seed in any::<u64>(),
        raw in amplitudes(6),
        lambda in -3.0f64..3.0,
        g in -4.0f64..4.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_hamiltonian(&mut rng, 6);
        let mut a = DVector::from_vec(raw);
        a[0] = a[0].abs() + 0.1;
        let b = build_quadratic_from_amplitudes(&h, &a, lambda, 0, 5).unwrap();
        let den = projected_denominator(&h, lambda, 5, g);
        prop_assume!(den.abs() > 1e-3);
        let direct = projected_residual(&h, &a, lambda, 0, 5, g) * den;
        let scale = b.a_coef.abs() * g * g + b.b_coef.abs() * g.abs() + b.c_coef.abs() + 1.0;
        prop_assert!((b.polynomial(g) - direct).abs() <= 1e-12 * scale);
        prop_assert!((b.constraint_residual(g) - projected_residual(&h, &a, lambda, 0, 5, g)).abs()
            <= 1e-12 * (scale / den.abs()).max(1.0));
    }

    #[test]
    fn chosen_root_is_nearest(a in -5.0f64..5.0, r1 in -10.0f64..10.0, r2 in -10.0f64..10.0, g in -10.0f64..10.0) {
        prop_assume!(a.abs() > 1e-3);
        let (b, c) = (-a * (r1 + r2), a * r1 * r2);
        let choice = solve_continuity(a, b, c, g, ContinuityTie::SmallerMagnitude).unwrap();
        for r in &choice.roots {
            prop_assert!((choice.chosen - g).abs() <= (r - g).abs() + 1e-12);
        }
        let nearest = if (r1 - g).abs() <= (r2 - g).abs() { r1 } else { r2 };
        prop_assert!((choice.chosen - nearest).abs() <= 1e-8 * (1.0 + nearest.abs()) || (r1 - r2).abs() < 1e-6);
    }
}
