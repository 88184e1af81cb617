//! Reference computations that do not share code paths with the solvers:
//! closed-form spectra and a brute-force root search on the unexpanded
//! projected eigenvalue condition. Test support only.

use nalgebra::DVector;

use crate::models::Hamiltonian;

/// Spectrum of the `n`-site uniform chain `g * (beta + gamma * (shift + shift^T))`,
/// ascending: `g * (beta + 2 gamma cos(k pi / (n + 1)))`, `k = 1..n`.
pub fn tight_binding_spectrum(n: usize, beta: f64, gamma: f64, g: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (1..=n)
        .map(|k| g * (beta + 2.0 * gamma * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos()))
        .collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Spectrum of `g * ((diag - offdiag) I + offdiag J)` with `J` the all-ones
/// matrix: `g (diag - offdiag)` with multiplicity `n - 1` and
/// `g (diag + (n - 1) offdiag)` once.
pub fn uniform_coupled_spectrum(n: usize, diag: f64, offdiag: f64, g: f64) -> Vec<f64> {
    let mut v = vec![g * (diag - offdiag); n - 1];
    v.push(g * (diag + (n as f64 - 1.0) * offdiag));
    v.sort_by(f64::total_cmp);
    v
}

/// The anchor row of `H_eff(lambda) P a - lambda P a` for the Hamiltonian
/// `h` re-coupled to `g`, evaluated straight from the full matrix:
///
/// `sum_{i != e} H'[1][i] a_i + H'[1][e] (lambda - H'[e][e])^-1 sum_{i != e} H'[e][i] a_i - lambda a_1`
pub fn projected_residual(
    h: &Hamiltonian,
    a: &DVector<f64>,
    lambda: f64,
    anchor: usize,
    elim: usize,
    g: f64,
) -> f64 {
    let m = |i: usize, j: usize| if i == j { h.eps()[i] } else { 0.0 } + g * h.h1()[(i, j)];
    let n = h.dim();
    let mut direct = 0.0;
    let mut back = 0.0;
    for i in (0..n).filter(|&i| i != elim) {
        direct += m(anchor, i) * a[i];
        back += m(elim, i) * a[i];
    }
    direct + m(anchor, elim) * back / (lambda - m(elim, elim)) - lambda * a[anchor]
}

/// Denominator `lambda - H'[e][e]` of [`projected_residual`].
pub fn projected_denominator(h: &Hamiltonian, lambda: f64, elim: usize, g: f64) -> f64 {
    lambda - h.eps()[elim] - g * h.h1()[(elim, elim)]
}

/// Scans `[center - half_width, center + half_width]` on `samples` cells,
/// bisects every sign change of `f` that is not a sign change of `pole`, and
/// returns all roots found, sorted by distance from `center`.
pub fn scan_bisect_roots(
    f: impl Fn(f64) -> f64,
    pole: impl Fn(f64) -> f64,
    center: f64,
    half_width: f64,
    samples: usize,
) -> Vec<f64> {
    let lo = center - half_width;
    let step = 2.0 * half_width / samples as f64;
    let mut roots = Vec::new();
    let mut x0 = lo;
    let mut f0 = f(x0);
    for k in 1..=samples {
        let x1 = lo + k as f64 * step;
        let f1 = f(x1);
        if f0 == 0.0 {
            roots.push(x0);
        } else if f0.signum() != f1.signum() && f1 != 0.0 && pole(x0).signum() == pole(x1).signum() {
            let (mut a, mut b, mut fa) = (x0, x1, f0);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                let fm = f(mid);
                if fm == 0.0 {
                    a = mid;
                    b = mid;
                    break;
                }
                if fm.signum() == fa.signum() {
                    a = mid;
                    fa = fm;
                } else {
                    b = mid;
                }
            }
            roots.push(0.5 * (a + b));
        }
        x0 = x1;
        f0 = f1;
    }
    roots.sort_by(|a, b| (a - center).abs().total_cmp(&(b - center).abs()));
    roots
}
