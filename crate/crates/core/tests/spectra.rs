use hilbert_rg::oracles::{tight_binding_spectrum, uniform_coupled_spectrum};
use hilbert_rg::{
    build_degenerate_fixed_point, build_tight_binding, eigen_decompose, ground_state, EigenSystem,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn assert_close(got: &[f64], want: &[f64], tol: f64) {
    assert_eq!(got.len(), want.len());
    for (k, (g, w)) in got.iter().zip(want).enumerate() {
        assert!((g - w).abs() <= tol, "level {k}: {g} vs {w}");
    }
}

fn check_invariants(m: &DMatrix<f64>, es: &EigenSystem) {
    let n = m.nrows();
    let fro = m.norm();
    let v = es.vectors();
    let values = es.values();

    for k in 1..n {
        assert!(values[k - 1] <= values[k]);
    }
    let gram = v.transpose() * v;
    for i in 0..n {
        for j in 0..n {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!(
                (gram[(i, j)] - want).abs() <= 1e-10,
                "gram[{i}][{j}] = {}",
                gram[(i, j)]
            );
        }
    }
    for k in 0..n {
        let r = (m * v.column(k) - v.column(k) * values[k]).norm();
        assert!(r <= 1e-10 * fro.max(1.0), "residual {r} for level {k}");
    }
    let rebuilt = v * DMatrix::from_diagonal(values) * v.transpose();
    for i in 0..n {
        for j in 0..n {
            assert!((rebuilt[(i, j)] - m[(i, j)]).abs() <= 1e-9 * fro.max(f64::MIN_POSITIVE));
        }
    }
    let trace = m.trace();
    assert!((values.sum() - trace).abs() <= 1e-10 * trace.abs().max(1.0));
    for k in 0..n {
        let col = v.column(k);
        let pivot = col
            .iter()
            .copied()
            .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        assert!(pivot > 0.0);
    }
}

#[test]
fn tight_binding_matches_cosine_band() {
    for n in [2, 3, 7, 10, 20, 30, 50] {
        for (beta, gamma, g) in [
            (1.0, 0.5, 20.0),
            (1.0, 0.5, 1.0),
            (0.0, 1.0, 1.0),
            (-0.3, 2.0, 0.7),
        ] {
            let m = build_tight_binding(n, beta, gamma, g).unwrap().full_matrix();
            let es = eigen_decompose(&m).unwrap();
            assert_close(
                es.values().as_slice(),
                &tight_binding_spectrum(n, beta, gamma, g),
                1e-9,
            );
            check_invariants(&m, &es);
        }
    }
}

#[test]
fn degenerate_model_matches_all_ones_spectrum() {
    for n in [2, 3, 5, 10, 20, 50] {
        let m = build_degenerate_fixed_point(n, 20.0).unwrap().full_matrix();
        let es = eigen_decompose(&m).unwrap();
        assert_close(
            es.values().as_slice(),
            &uniform_coupled_spectrum(n, -0.5, 0.5, 20.0),
            1e-9,
        );
        check_invariants(&m, &es);
    }
    let es = eigen_decompose(&build_degenerate_fixed_point(2, 20.0).unwrap().full_matrix()).unwrap();
    assert_close(es.values().as_slice(), &[-20.0, 0.0], 1e-12);
    let es = eigen_decompose(&build_degenerate_fixed_point(5, 20.0).unwrap().full_matrix()).unwrap();
    assert_close(es.values().as_slice(), &[-20.0, -20.0, -20.0, -20.0, 30.0], 1e-9);
    assert!((ground_state(&es).0 + 20.0).abs() < 1e-12);
}

#[test]
fn degenerate_eigenspace_projector() {
    // ground multiplet of the n = 6 model is the complement of (1, ..., 1)
    let n = 6;
    let es = eigen_decompose(&build_degenerate_fixed_point(n, 20.0).unwrap().full_matrix()).unwrap();
    let block = es.vectors().columns(0, n - 1);
    let projector = block * block.transpose();
    for i in 0..n {
        for j in 0..n {
            let want = if i == j { 1.0 } else { 0.0 } - 1.0 / n as f64;
            assert!((projector[(i, j)] - want).abs() < 1e-12);
        }
    }
}

#[test]
fn published_initial_spectra() {
    let m = build_tight_binding(10, 1.0, 0.5, 20.0).unwrap().full_matrix();
    let es = eigen_decompose(&m).unwrap();
    assert_close(&es.lowest(5), &[0.81, 3.17, 6.90, 11.69, 17.15], 0.005);

    let es = eigen_decompose(&build_tight_binding(20, 1.0, 0.5, 20.0).unwrap().full_matrix()).unwrap();
    let (lambda1, a) = ground_state(&es);
    assert!((lambda1 - 0.22).abs() <= 0.005);
    assert!((a.norm() - 1.0).abs() < 1e-12);
}

fn symmetric_matrix() -> impl Strategy<Value = DMatrix<f64>> {
    (1usize..=50).prop_flat_map(|n| {
        proptest::collection::vec(-10.0f64..10.0, n * n).prop_map(move |raw| {
            let m = DMatrix::from_vec(n, n, raw);
            (&m + m.transpose()) * 0.5
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_symmetric_invariants(m in symmetric_matrix()) {
        let es = eigen_decompose(&m).unwrap();
        check_invariants(&m, &es);
        prop_assert_eq!(eigen_decompose(&m).unwrap(), es);
    }
}
