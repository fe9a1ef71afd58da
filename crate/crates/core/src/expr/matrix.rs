use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("matrix is not Hermitian (‖M−M†‖_F = {residual:e})")]
    NotHermitian { residual: f64 },
    #[error("Jacobi iteration did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("matrix dimension {0} exceeds the supported maximum")]
    TooLarge(usize),
    #[error("invalid matrix: {0}")]
    Invalid(String),
}

/// Dense row-major complex matrix with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixWire", into = "MatrixWire")]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixWire {
    rows: usize,
    cols: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl TryFrom<MatrixWire> for ComplexMatrix {
    type Error = LinalgError;
    fn try_from(w: MatrixWire) -> Result<Self, Self::Error> {
        if w.re.len() != w.im.len() {
            return Err(LinalgError::Invalid("re/im length differ".into()));
        }
        let data = w.re.into_iter().zip(w.im).map(|(r, i)| Complex64::new(r, i)).collect();
        ComplexMatrix::new(w.rows, w.cols, data)
    }
}

impl From<ComplexMatrix> for MatrixWire {
    fn from(m: ComplexMatrix) -> Self {
        MatrixWire {
            rows: m.rows,
            cols: m.cols,
            re: m.data.iter().map(|z| z.re).collect(),
            im: m.data.iter().map(|z| z.im).collect(),
        }
    }
}

/// Euclidean norm that neither underflows nor overflows on extreme entries.
fn scaled_norm(values: impl Iterator<Item = Complex64> + Clone) -> f64 {
    let scale = values.clone().map(|z| z.re.abs().max(z.im.abs())).fold(0.0, f64::max);
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * values.map(|z| (z / scale).norm_sqr()).sum::<f64>().sqrt()
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::Invalid("dimensions must be positive".into()));
        }
        if data.len() != rows * cols {
            return Err(LinalgError::Invalid(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LinalgError::Invalid("non-finite entry".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self, LinalgError> {
        Self::new(rows, cols, data.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Builds a matrix from nested rows; every row must have the same length.
    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(LinalgError::Invalid("ragged rows".into()));
        }
        Self::new(r, c, rows.into_iter().flatten().collect())
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![Complex64::new(1.0, 0.0); n])
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn diagonal(diag: &[Complex64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            m.data[i * n + i] = *d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: Complex64) {
        self.data[i * self.cols + j] = value;
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.get(i, j).conj();
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self, LinalgError> {
        if self.cols != rhs.rows {
            return Err(LinalgError::ShapeMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.get(k, j);
                }
            }
        }
        Ok(out)
    }

    fn zip_with(
        &self,
        rhs: &Self,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self, LinalgError> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(LinalgError::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| f(*a, *b)).collect(),
        })
    }

    pub fn add(&self, rhs: &Self) -> Result<Self, LinalgError> {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self, LinalgError> {
        self.zip_with(rhs, |a, b| a - b)
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn trace(&self) -> Result<Complex64, LinalgError> {
        self.require_square()?;
        Ok((0..self.rows).map(|i| self.get(i, i)).sum())
    }

    pub fn frobenius_norm(&self) -> f64 {
        scaled_norm(self.data.iter().copied())
    }

    /// ‖M − I‖_F
    pub fn identity_distance(&self) -> Result<f64, LinalgError> {
        self.require_square()?;
        let n = self.rows;
        Ok(scaled_norm(self.data.iter().enumerate().map(|(k, z)| {
            if k / n == k % n {
                z - Complex64::new(1.0, 0.0)
            } else {
                *z
            }
        })))
    }

    /// ‖M − M†‖_F
    pub fn hermiticity_residual(&self) -> Result<f64, LinalgError> {
        self.require_square()?;
        Ok(self.sub(&self.dagger())?.frobenius_norm())
    }

    /// `AB − BA`
    pub fn commutator(&self, rhs: &Self) -> Result<Self, LinalgError> {
        self.matmul(rhs)?.sub(&rhs.matmul(self)?)
    }

    /// Top-left `k × k` block.
    pub fn leading_block(&self, k: usize) -> Result<Self, LinalgError> {
        if k == 0 || k > self.rows || k > self.cols {
            return Err(LinalgError::ShapeMismatch(format!(
                "leading {k}x{k} block of {}x{}",
                self.rows, self.cols
            )));
        }
        let mut out = Self::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                out.data[i * k + j] = self.get(i, j);
            }
        }
        Ok(out)
    }

    fn require_square(&self) -> Result<(), LinalgError> {
        if self.is_square() {
            Ok(())
        } else {
            Err(LinalgError::ShapeMismatch(format!(
                "expected a square matrix, got {}x{}",
                self.rows, self.cols
            )))
        }
    }
}

/// Formats a complex number so that the expression parser reads it back.
pub fn format_complex(z: Complex64) -> String {
    match (z.re, z.im) {
        (re, im) if im == 0.0 => format!("{re}"),
        (re, im) if re == 0.0 => format!("{im}*I"),
        (re, im) if im < 0.0 => format!("{re}-{}*I", -im),
        (re, im) => format!("{re}+{im}*I"),
    }
}

/// Nested-list literal: `[[a,b],[c,d]]`.
impl fmt::Display for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for i in 0..self.rows {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str("[")?;
            for j in 0..self.cols {
                if j > 0 {
                    f.write_str(",")?;
                }
                f.write_str(&format_complex(self.get(i, j)))?;
            }
            f.write_str("]")?;
        }
        f.write_str("]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    #[test]
    fn test_identity_self_adjoint() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(i2.dagger(), i2);
        assert_eq!(ComplexMatrix::identity(3).identity_distance().unwrap(), 0.0);
    }

    #[test]
    fn test_pauli_x_squares_to_identity() {
        let x = pauli_x();
        assert_eq!(x.matmul(&x).unwrap(), ComplexMatrix::identity(2));
    }

    #[test]
    fn test_trace_and_dagger() {
        let m = ComplexMatrix::new(
            2,
            2,
            vec![
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 2.0),
                Complex64::new(3.0, 0.0),
                Complex64::new(4.0, -1.0),
            ],
        )
        .unwrap();
        assert_eq!(m.trace().unwrap(), Complex64::new(5.0, -1.0));
        let d = m.dagger();
        assert_eq!(d.get(1, 0), Complex64::new(0.0, -2.0));
        assert_eq!(d.get(1, 1), Complex64::new(4.0, 1.0));
    }

    #[test]
    fn test_shape_errors() {
        let a = ComplexMatrix::zeros(2, 3);
        assert!(matches!(a.matmul(&a), Err(LinalgError::ShapeMismatch(_))));
        assert!(matches!(a.trace(), Err(LinalgError::ShapeMismatch(_))));
        assert!(matches!(a.identity_distance(), Err(LinalgError::ShapeMismatch(_))));
        assert!(ComplexMatrix::from_real(2, 2, &[1.0, 2.0, 3.0]).is_err());
        assert!(ComplexMatrix::from_real(1, 1, &[f64::NAN]).is_err());
    }

    #[test]
    fn test_identity_distance_nonzero_off_identity() {
        let mut m = ComplexMatrix::identity(2);
        m.set(0, 1, Complex64::new(1e-300, 0.0));
        assert!(m.identity_distance().unwrap() > 0.0);
    }

    #[test]
    fn test_json_wire_format() {
        let m = ComplexMatrix::new(1, 2, vec![Complex64::new(1.0, 0.5), Complex64::new(0.0, -1.0)])
            .unwrap();
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, r#"{"rows":1,"cols":2,"re":[1.0,0.0],"im":[0.5,-1.0]}"#);
        let back: ComplexMatrix = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<ComplexMatrix>(r#"{"rows":2,"cols":2,"re":[1],"im":[0]}"#).is_err());
    }

    #[test]
    fn test_display_literal() {
        let m = ComplexMatrix::new(1, 2, vec![Complex64::new(0.5, -0.25), Complex64::new(0.0, 1.0)])
            .unwrap();
        assert_eq!(m.to_string(), "[[0.5-0.25*I,1*I]]");
    }
}
