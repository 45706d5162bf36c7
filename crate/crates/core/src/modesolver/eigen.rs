//! Shift-invert Arnoldi for the few eigenvalues of a sparse real matrix
//! closest to a real shift.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::Col;
use nalgebra::{DMatrix, DVector};

use super::sparse::Csr;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct ArnoldiOptions {
    /// Backward error `||A x - lambda x|| / (||A|| ||x||)` accepted for a
    /// pair. Scaling by the operator norm keeps the round-off floor
    /// independent of the grid pitch.
    pub tolerance: f64,
    pub max_restarts: usize,
    /// Krylov dimension; at least `2 * wanted + 8` is used.
    pub krylov_dim: usize,
}

impl Default for ArnoldiOptions {
    fn default() -> Self {
        ArnoldiOptions {
            tolerance: 1e-10,
            max_restarts: 12,
            krylov_dim: 24,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
}

/// Eigenpairs of `a` with real eigenvalues nearest `shift`, ordered by
/// distance from the shift. Complex-conjugate Ritz pairs are discarded.
///
/// Only pairs with eigenvalue above `floor` must converge and are
/// returned; the rest of the `wanted` window (radiation-like pairs in a
/// closed box, typically clustered) is allowed to stay unconverged.
pub(crate) fn eigs_near(
    a: &Csr,
    shift: f64,
    floor: f64,
    wanted: usize,
    opts: &ArnoldiOptions,
) -> Result<Vec<EigenPair>> {
    let n = a.nrows;
    let shifted = a.to_faer_shifted(shift).map_err(|e| Error::NoConvergence {
        iterations: 0,
        residual: f64::NAN,
        reason: format!("operator assembly: {e}"),
    })?;
    let lu: Lu<usize, f64> = shifted.sp_lu().map_err(|e| Error::NoConvergence {
        iterations: 0,
        residual: f64::NAN,
        reason: format!("sparse LU of shifted operator failed: {e:?}"),
    })?;
    let apply_inv = |v: &[f64]| -> Vec<f64> {
        let rhs = Col::<f64>::from_fn(n, |i| v[i]);
        let x = lu.solve(&rhs);
        (0..n).map(|i| x[i]).collect()
    };

    let m = opts.krylov_dim.max(2 * wanted + 8).min(n);
    // Deterministic, non-symmetric start vector.
    let mut start: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.5 * ((i as f64) * 0.618_033_988_7).fract())
        .collect();
    let mut best_residual = f64::INFINITY;
    let a_norm = a.norm_inf().max(f64::MIN_POSITIVE);

    for restart in 0..=opts.max_restarts {
        let (basis, hess, steps) = arnoldi(&apply_inv, &start, m);
        let ritz = ritz_pairs(&hess, steps);
        let mut pairs = Vec::new();
        for (mu, y) in ritz.into_iter().take(wanted + 2) {
            let mut x = vec![0.0; n];
            for (k, yk) in y.iter().enumerate() {
                axpy(&mut x, *yk, &basis[k]);
            }
            let nx = norm(&x);
            x.iter_mut().for_each(|v| *v /= nx);
            let lambda = shift + 1.0 / mu;
            let ax = a.mul_vec(&x);
            let res = ax
                .iter()
                .zip(&x)
                .map(|(p, q)| (p - lambda * q).powi(2))
                .sum::<f64>()
                .sqrt()
                / a_norm;
            pairs.push(EigenPair {
                value: lambda,
                vector: x,
                residual: res,
            });
        }
        pairs.truncate(wanted);
        pairs.retain(|p| p.value > floor);
        let worst = pairs.iter().map(|p| p.residual).fold(0.0, f64::max);
        best_residual = best_residual.min(worst);
        if worst <= opts.tolerance {
            return Ok(pairs);
        }
        // Restart from a blend of the unconverged Ritz vectors.
        start = vec![0.0; n];
        for (k, p) in pairs.iter().enumerate() {
            let w = if p.residual > opts.tolerance { 1.0 } else { 1e-3 };
            axpy(&mut start, w / (k + 1) as f64, &p.vector);
        }
        if restart == opts.max_restarts {
            break;
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_restarts + 1,
        residual: best_residual,
        reason: format!("{wanted} eigenpairs near shift {shift:.6e} not converged"),
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * xi);
}

/// Modified Gram-Schmidt Arnoldi with one reorthogonalization pass.
/// Returns the basis, the (steps+1) x steps Hessenberg matrix and the
/// number of completed steps (fewer than `m` on breakdown).
fn arnoldi(op: &impl Fn(&[f64]) -> Vec<f64>, start: &[f64], m: usize) -> (Vec<Vec<f64>>, DMatrix<f64>, usize) {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut h = DMatrix::<f64>::zeros(m + 1, m);
    let s = norm(start);
    basis.push(start.iter().map(|v| v / s).collect());
    let mut steps = 0;
    for j in 0..m {
        let mut w = op(&basis[j]);
        for _pass in 0..2 {
            for (i, q) in basis.iter().enumerate() {
                let c = dot(&w, q);
                h[(i, j)] += c;
                axpy(&mut w, -c, q);
            }
        }
        let hn = norm(&w);
        h[(j + 1, j)] = hn;
        steps = j + 1;
        if hn < 1e-14 * h.column(j).norm() {
            break;
        }
        basis.push(w.into_iter().map(|v| v / hn).collect());
    }
    basis.truncate(steps);
    (basis, h, steps)
}

/// Real Ritz values of the leading `steps x steps` block, largest
/// magnitude first, with their eigenvectors.
fn ritz_pairs(h: &DMatrix<f64>, steps: usize) -> Vec<(f64, DVector<f64>)> {
    let hm = h.view((0, 0), (steps, steps)).into_owned();
    let scale = hm.norm().max(f64::MIN_POSITIVE);
    let mut vals: Vec<f64> = hm
        .clone()
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= 1e-8 * scale)
        .map(|z| z.re)
        .collect();
    vals.sort_by(|a, b| b.abs().partial_cmp(&a.abs()).unwrap());
    vals.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * scale);
    vals.into_iter()
        .filter_map(|mu| {
            // inverse iteration on the small matrix
            let perturbed = mu + 1e-10 * scale;
            let shifted = &hm - DMatrix::<f64>::identity(steps, steps) * perturbed;
            let lu = shifted.lu();
            let mut y = DVector::<f64>::from_fn(steps, |i, _| 1.0 + 0.1 * i as f64);
            for _ in 0..3 {
                y = lu.solve(&y)?;
                let ny = y.norm();
                if !ny.is_finite() || ny == 0.0 {
                    return None;
                }
                y /= ny;
            }
            Some((mu, y))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_eigenvalues_of_nonsymmetric_tridiagonal() {
        // upper/lower off-diagonals differ -> nonsymmetric, real spectrum
        // 2 + 2 sqrt(bc) cos(k pi / (n + 1)) with b = 1.1, c = 0.9
        let n = 60;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.1));
                t.push((i + 1, i, -0.9));
            }
        }
        let a = Csr::from_triplets(n, n, t);
        let exact =
            |k: usize| 2.0 - 2.0 * (1.1f64 * 0.9).sqrt() * (k as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
        let shift = 4.2; // above the top of the spectrum
        let pairs = eigs_near(&a, shift, f64::NEG_INFINITY, 3, &ArnoldiOptions::default()).unwrap();
        assert_eq!(pairs.len(), 3);
        for (k, p) in pairs.iter().enumerate() {
            let e = exact(n - k);
            assert!((p.value - e).abs() < 1e-9, "{} vs {}", p.value, e);
        }
    }
}
