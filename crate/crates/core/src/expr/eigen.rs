//! Hermitian eigen-decomposition by cyclic Jacobi on the real symmetric embedding
//!
//! ```text
//! M = A + iB   ↦   S = [ A  -B ]
//!                      [ B   A ]
//! ```
//!
//! Every eigenvalue of `M` appears twice in `S`, and an eigenvector `[x; y]` of `S`
//! maps to the eigenvector `x + iy` of `M`.

use num_complex::Complex64;

use super::matrix::{ComplexMatrix, LinalgError};

pub const MAX_DIMENSION: usize = 64;
pub const MAX_SWEEPS: usize = 100;

/// Off-diagonal mass (relative to ‖S‖_F) at which a sweep loop stops.
const OFF_DIAGONAL_TOL: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `k` is the unit eigenvector for `values[k]`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// `Q Λ Q†`
    pub fn reconstruct(&self) -> ComplexMatrix {
        let lambda: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let ql = self
            .vectors
            .matmul(&ComplexMatrix::diagonal(&lambda))
            .expect("square factors");
        ql.matmul(&self.vectors.dagger()).expect("square factors")
    }
}

pub fn hermitian_eigenvalues(m: &ComplexMatrix, tol: f64) -> Result<Vec<f64>, LinalgError> {
    Ok(hermitian_eigen(m, tol)?.values)
}

pub fn hermitian_eigen(m: &ComplexMatrix, tol: f64) -> Result<HermitianEigen, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::ShapeMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let n = m.rows();
    if n > MAX_DIMENSION {
        return Err(LinalgError::TooLarge(n));
    }
    let residual = m.hermiticity_residual()?;
    if residual > tol {
        return Err(LinalgError::NotHermitian { residual });
    }

    // symmetrize so the embedding is exactly symmetric
    let h = m.add(&m.dagger())?.scale(Complex64::new(0.5, 0.0));
    let size = 2 * n;
    let mut s = vec![0.0; size * size];
    for i in 0..n {
        for j in 0..n {
            let z = h.get(i, j);
            s[i * size + j] = z.re;
            s[(i + n) * size + (j + n)] = z.re;
            s[i * size + (j + n)] = -z.im;
            s[(i + n) * size + j] = z.im;
        }
    }
    let (_, embedded_vectors) = jacobi_symmetric(&mut s, size)?;

    // Pick n complex-independent vectors out of the 2n embedding eigenvectors,
    // always taking the one with the largest component outside the current span.
    let mut candidates: Vec<Vec<Complex64>> = (0..size)
        .map(|k| {
            (0..n)
                .map(|i| Complex64::new(embedded_vectors[i * size + k], embedded_vectors[(i + n) * size + k]))
                .collect()
        })
        .collect();
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    while basis.len() < n {
        let (best, best_norm) = candidates
            .iter()
            .enumerate()
            .map(|(k, v)| (k, norm(v)))
            .fold((usize::MAX, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if best == usize::MAX || best_norm <= 1e-8 {
            return Err(LinalgError::NoConvergence { sweeps: MAX_SWEEPS });
        }
        let mut v = candidates.swap_remove(best);
        // re-orthogonalize once more against the basis for stability
        for q in &basis {
            project_out(&mut v, q);
        }
        let nv = norm(&v);
        v.iter_mut().for_each(|z| *z /= nv);
        for c in candidates.iter_mut() {
            project_out(c, &v);
        }
        basis.push(v);
    }

    let mut pairs: Vec<(f64, Vec<Complex64>)> = basis
        .into_iter()
        .map(|v| (rayleigh_quotient(&h, &v), v))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut vectors = ComplexMatrix::zeros(n, n);
    for (k, (_, v)) in pairs.iter().enumerate() {
        for (i, z) in v.iter().enumerate() {
            vectors.set(i, k, *z);
        }
    }
    Ok(HermitianEigen {
        values: pairs.into_iter().map(|(val, _)| val).collect(),
        vectors,
    })
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// v ← v − ⟨q, v⟩ q for unit q.
fn project_out(v: &mut [Complex64], q: &[Complex64]) {
    let overlap: Complex64 = q.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
    for (vi, qi) in v.iter_mut().zip(q) {
        *vi -= overlap * qi;
    }
}

fn rayleigh_quotient(h: &ComplexMatrix, v: &[Complex64]) -> f64 {
    let n = v.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let mut row = Complex64::new(0.0, 0.0);
        for j in 0..n {
            row += h.get(i, j) * v[j];
        }
        acc += v[i].conj() * row;
    }
    acc.re
}

/// Cyclic Jacobi on a dense symmetric `n × n` row-major matrix (destroyed in place).
///
/// Returns the diagonal after convergence and the accumulated rotations, whose
/// columns are the eigenvectors.
pub fn jacobi_symmetric(a: &mut [f64], n: usize) -> Result<(Vec<f64>, Vec<f64>), LinalgError> {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let total: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let off = |a: &[f64]| -> f64 {
        let mut acc = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                acc += 2.0 * a[p * n + q] * a[p * n + q];
            }
        }
        acc.sqrt()
    };

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let off_norm = off(a);
        if off_norm == 0.0 || off_norm <= OFF_DIAGONAL_TOL * total {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        let off_norm = off(a);
        if !(off_norm == 0.0 || off_norm <= OFF_DIAGONAL_TOL * total) {
            return Err(LinalgError::NoConvergence { sweeps: MAX_SWEEPS });
        }
    }
    Ok(((0..n).map(|i| a[i * n + i]).collect(), v))
}
