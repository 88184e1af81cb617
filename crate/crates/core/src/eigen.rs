//! Dense symmetric eigendecomposition by cyclic Jacobi rotations.
//!
//! Jacobi is slow next to tridiagonal QL, but it is backward stable, delivers
//! eigenvectors orthonormal to machine precision and is bit-reproducible for a
//! given input, which the flow traces rely on. Problem sizes here stay below a
//! few hundred states.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Symmetry tolerance accepted by [`eigen_decompose`].
pub const INPUT_SYMMETRY_TOL: f64 = 1e-9;

const MAX_SWEEPS: usize = 64;

/// Ascending eigenvalues and the matching orthonormal eigenvectors (columns).
///
/// In every column the entry of largest magnitude is positive; on exact ties
/// the first such entry wins.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    values: DVector<f64>,
    vectors: DMatrix<f64>,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn vector(&self, k: usize) -> DVector<f64> {
        self.vectors.column(k).into_owned()
    }

    /// The `m` lowest eigenvalues (fewer if the dimension is smaller).
    pub fn lowest(&self, m: usize) -> Vec<f64> {
        self.values.iter().take(m).copied().collect()
    }

    /// Amplitudes `a_1i` of the ground state in the basis.
    pub fn ground_components(&self) -> DVector<f64> {
        self.vector(0)
    }
}

/// Lowest eigenvalue and its unit eigenvector.
pub fn ground_state(es: &EigenSystem) -> (f64, DVector<f64>) {
    (es.values[0], es.ground_components())
}

pub fn eigen_decompose(m: &DMatrix<f64>) -> Result<EigenSystem> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Shape(format!("{}x{} matrix is not square", n, m.ncols())));
    }
    if n == 0 {
        return Err(Error::InvalidDimension { n, min: 1 });
    }
    for i in 0..n {
        for j in 0..n {
            if !m[(i, j)].is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let diff = (m[(i, j)] - m[(j, i)]).abs();
            if diff > INPUT_SYMMETRY_TOL * m[(i, j)].abs().max(1.0) {
                return Err(Error::NotSymmetric { row: i, col: j, diff });
            }
        }
    }

    let (values, vectors) = jacobi(m)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));

    let sorted_values = DVector::from_iterator(n, order.iter().map(|&k| values[k]));
    let mut sorted_vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = vectors.column(src).into_owned();
        let mut pivot = 0;
        for i in 1..n {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
        sorted_vectors.set_column(dst, &col);
    }

    Ok(EigenSystem {
        values: sorted_values,
        vectors: sorted_vectors,
    })
}

/// Threshold cyclic Jacobi. Works on the upper triangle of a copy of `m`.
fn jacobi(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    let mut a = m.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let mut d: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    let mut b = d.clone();
    let mut z = vec![0.0; n];

    for sweep in 1..=MAX_SWEEPS {
        let mut sm = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                sm += a[(p, q)].abs();
            }
        }
        if sm == 0.0 {
            return Ok((d, v));
        }
        let tresh = if sweep < 4 { 0.2 * sm / (n * n) as f64 } else { 0.0 };

        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let g = 100.0 * apq.abs();
                if sweep > 4 && d[p].abs() + g == d[p].abs() && d[q].abs() + g == d[q].abs() {
                    a[(p, q)] = 0.0;
                } else if apq.abs() > tresh {
                    let h = d[q] - d[p];
                    let t = if h.abs() + g == h.abs() {
                        apq / h
                    } else {
                        let theta = 0.5 * h / apq;
                        let t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                        if theta < 0.0 {
                            -t
                        } else {
                            t
                        }
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    let tau = s / (1.0 + c);
                    let h = t * apq;
                    z[p] -= h;
                    z[q] += h;
                    d[p] -= h;
                    d[q] += h;
                    a[(p, q)] = 0.0;

                    let rot = |mat: &mut DMatrix<f64>, i: (usize, usize), k: (usize, usize)| {
                        let g = mat[i];
                        let h = mat[k];
                        mat[i] = g - s * (h + g * tau);
                        mat[k] = h + s * (g - h * tau);
                    };
                    for j in 0..p {
                        rot(&mut a, (j, p), (j, q));
                    }
                    for j in (p + 1)..q {
                        rot(&mut a, (p, j), (j, q));
                    }
                    for j in (q + 1)..n {
                        rot(&mut a, (p, j), (q, j));
                    }
                    for j in 0..n {
                        rot(&mut v, (j, p), (j, q));
                    }
                }
            }
        }
        for p in 0..n {
            b[p] += z[p];
            d[p] = b[p];
            z[p] = 0.0;
        }
    }

    let mut off = 0.0;
    for p in 0..n {
        for q in (p + 1)..n {
            off += 2.0 * a[(p, q)] * a[(p, q)];
        }
    }
    Err(Error::NoConvergence {
        sweeps: MAX_SWEEPS,
        off_norm: off.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity() {
        let es = eigen_decompose(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(es.values().as_slice(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn two_by_two_swap() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let es = eigen_decompose(&m).unwrap();
        assert_abs_diff_eq!(es.values()[0], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(es.values()[1], 1.0, epsilon = 1e-15);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let (l, a) = ground_state(&es);
        assert_abs_diff_eq!(l, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a[0], r, epsilon = 1e-15);
        assert_abs_diff_eq!(a[1], -r, epsilon = 1e-15);
        let top = es.vector(1);
        assert_abs_diff_eq!(top[0], r, epsilon = 1e-15);
        assert_abs_diff_eq!(top[1], r, epsilon = 1e-15);
    }

    #[test]
    fn rejects_asymmetric_and_non_finite() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]);
        assert!(matches!(eigen_decompose(&m), Err(Error::NotSymmetric { .. })));
        let m = DMatrix::from_row_slice(2, 2, &[f64::NAN, 0.0, 0.0, 1.0]);
        assert!(matches!(
            eigen_decompose(&m),
            Err(Error::NonFinite { row: 0, col: 0 })
        ));
        let m = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(eigen_decompose(&m), Err(Error::Shape(_))));
    }

    #[test]
    fn sign_convention_on_largest_entry() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]);
        let es = eigen_decompose(&m).unwrap();
        for k in 0..3 {
            let col = es.vector(k);
            let big = col
                .iter()
                .copied()
                .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
            assert!(big > 0.0);
        }
    }

    #[test]
    fn one_by_one_and_diagonal() {
        let es = eigen_decompose(&DMatrix::from_element(1, 1, -3.0)).unwrap();
        assert_eq!(es.values()[0], -3.0);
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, -1.0, 2.0]));
        let es = eigen_decompose(&m).unwrap();
        assert_eq!(es.values().as_slice(), &[-1.0, 2.0, 3.0]);
        assert_eq!(es.vector(0).as_slice(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn deterministic_output() {
        let m = DMatrix::from_fn(12, 12, |i, j| {
            ((i * 7 + j * 7) % 5) as f64 - 2.0 + (i == j) as u8 as f64
        });
        let a = eigen_decompose(&m).unwrap();
        let b = eigen_decompose(&m).unwrap();
        assert_eq!(a, b);
    }
}
