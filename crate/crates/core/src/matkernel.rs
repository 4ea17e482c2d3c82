//! Dense complex matrix kernel.
//!
//! Everything the capacity formulas need reduces to Hermitian positive
//! definite algebra: Gram products `H^H H`, their inverses and determinants.
//! All inversions and determinants go through a Cholesky factorization; there
//! is no general LU path.

use std::fmt;
use std::ops::Index;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Maximum elementwise deviation from `A = A^H` accepted for a Hermitian matrix.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Largest imaginary residue tolerated on a Hermitian diagonal.
pub const DIAG_IMAG_TOL: f64 = 1e-10;
/// A Cholesky pivot at or below `PIVOT_REL_TOL * trace / n` is rejected.
pub const PIVOT_REL_TOL: f64 = 1e-12;
/// Relative Frobenius error bound for `L L^H` against the factored matrix.
pub const CHOLESKY_RECON_TOL: f64 = 1e-9;
/// Max elementwise error bound for `A A^-1 - I`.
pub const INVERSE_TOL: f64 = 1e-8;

/// Dense row-major complex matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidMatrix(format!("empty shape {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidMatrix(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidMatrix(format!(
                "non-finite entry at ({}, {})",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a real-valued matrix from row slices.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidMatrix("ragged rows".into()));
        }
        let data = rows
            .iter()
            .flat_map(|row| row.iter().map(|&x| Complex64::new(x, 0.0)))
            .collect();
        Self::new(r, c, data)
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub(crate) fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix shape must be non-empty");
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, z: Complex64) {
        self.data[i * self.cols + j] = z;
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn mul(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Maximum absolute column sum.
    pub fn norm_1(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  {}", row.join(", "))?;
        }
        write!(f, "]")
    }
}

/// Square matrix satisfying `A = A^H` with a real diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    /// Accepts `m` if it is square and Hermitian within [`HERMITIAN_TOL`];
    /// the stored value is the exact Hermitian part `(m + m^H) / 2`.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if m.rows != m.cols {
            return Err(Error::DimensionMismatch(format!(
                "Hermitian matrix must be square, got {}x{}",
                m.rows, m.cols
            )));
        }
        let n = m.rows;
        for i in 0..n {
            for j in i..n {
                let dev = (m[(i, j)] - m[(j, i)].conj()).norm();
                if dev > HERMITIAN_TOL {
                    return Err(Error::InvalidMatrix(format!(
                        "not Hermitian at ({i}, {j}): deviation {dev:e}"
                    )));
                }
            }
        }
        Ok(Self::symmetrized(m))
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::new(ComplexMatrix::from_real_rows(rows)?)
    }

    pub fn identity(n: usize) -> Self {
        Self(ComplexMatrix::identity(n))
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let n = values.len();
        let mut m = ComplexMatrix::zeros(n.max(1), n.max(1));
        if n == 0 {
            return Err(Error::InvalidMatrix("empty diagonal".into()));
        }
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, Complex64::new(v, 0.0));
        }
        Self::new(m)
    }

    fn symmetrized(mut m: ComplexMatrix) -> Self {
        let n = m.rows;
        for i in 0..n {
            let d = m[(i, i)].re;
            m.set(i, i, Complex64::new(d, 0.0));
            for j in (i + 1)..n {
                let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
                m.set(i, j, avg);
                m.set(j, i, avg.conj());
            }
        }
        Self(m)
    }

    pub fn n(&self) -> usize {
        self.0.rows
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        (0..self.n()).map(|i| self.0[(i, i)].re).sum()
    }

    /// `shift * I + scale * A`.
    pub fn scale_and_shift(&self, scale: f64, shift: f64) -> HermitianMatrix {
        let n = self.n();
        let mut m = self.0.clone();
        for z in &mut m.data {
            *z *= scale;
        }
        for i in 0..n {
            let d = m[(i, i)].re + shift;
            m.set(i, i, Complex64::new(d, 0.0));
        }
        HermitianMatrix(m)
    }
}

impl Index<(usize, usize)> for HermitianMatrix {
    type Output = Complex64;

    fn index(&self, idx: (usize, usize)) -> &Complex64 {
        &self.0[idx]
    }
}

/// `H^H H` for an `N_r x N_t` matrix `H`, as an `N_t x N_t` Hermitian matrix.
///
/// Only the upper triangle is accumulated; the lower triangle is its
/// conjugate mirror and the diagonal is a sum of squared moduli, so the
/// result is exactly Hermitian and PSD up to roundoff.
pub fn herm_gram(h: &ComplexMatrix) -> HermitianMatrix {
    let (r, c) = (h.rows, h.cols);
    let mut out = ComplexMatrix::zeros(c, c);
    for i in 0..c {
        let d: f64 = (0..r).map(|k| h[(k, i)].norm_sqr()).sum();
        out.set(i, i, Complex64::new(d, 0.0));
        for j in (i + 1)..c {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..r {
                acc += h[(k, i)].conj() * h[(k, j)];
            }
            out.set(i, j, acc);
            out.set(j, i, acc.conj());
        }
    }
    HermitianMatrix(out)
}

/// Lower Cholesky factor `L` with positive real diagonal and `L L^H = A`.
pub fn cholesky(a: &HermitianMatrix) -> Result<ComplexMatrix> {
    let n = a.n();
    let threshold = PIVOT_REL_TOL * a.trace() / n as f64;
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > threshold) || !(d > 0.0) {
            return Err(Error::NotPositiveDefinite { index: j, pivot: d });
        }
        let ljj = d.sqrt();
        l.set(j, j, Complex64::new(ljj, 0.0));
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l.set(i, j, s / ljj);
        }
    }
    Ok(l)
}

/// Inverse of a lower triangular matrix with nonzero diagonal.
fn lower_triangular_inverse(l: &ComplexMatrix) -> ComplexMatrix {
    let n = l.rows;
    let mut m = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        m.set(j, j, l[(j, j)].inv());
        for i in (j + 1)..n {
            let mut s = Complex64::new(0.0, 0.0);
            for k in j..i {
                s += l[(i, k)] * m[(k, j)];
            }
            m.set(i, j, -s / l[(i, i)]);
        }
    }
    m
}

/// Inverse of a positive definite matrix via `A^-1 = L^-H L^-1`.
pub fn inv_pd(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    let l = cholesky(a)?;
    let m = lower_triangular_inverse(&l);
    let n = a.n();
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in j..n {
                acc += m[(k, i)].conj() * m[(k, j)];
            }
            if i == j {
                acc.im = 0.0;
            }
            out.set(i, j, acc);
            out.set(j, i, acc.conj());
        }
    }
    Ok(HermitianMatrix(out))
}

/// Diagonal of `A^-1` without forming the full inverse.
pub fn inv_pd_diag(a: &HermitianMatrix) -> Result<Vec<f64>> {
    let l = cholesky(a)?;
    let m = lower_triangular_inverse(&l);
    let n = a.n();
    Ok((0..n).map(|k| (k..n).map(|i| m[(i, k)].norm_sqr()).sum()).collect())
}

/// Natural log of `det(A)` for positive definite `A`.
pub fn log_det_pd(a: &HermitianMatrix) -> Result<f64> {
    let l = cholesky(a)?;
    Ok(2.0 * (0..a.n()).map(|i| l[(i, i)].re.ln()).sum::<f64>())
}

/// `det(A)` computed in the log domain.
pub fn det_pd(a: &HermitianMatrix) -> Result<f64> {
    log_det_pd(a).map(f64::exp)
}

/// Real parts of the diagonal.
pub fn diag_real(a: &HermitianMatrix) -> Result<Vec<f64>> {
    (0..a.n())
        .map(|i| {
            let z = a[(i, i)];
            if z.im.abs() >= DIAG_IMAG_TOL {
                Err(Error::NonRealDiagonal { index: i, imag: z.im })
            } else {
                Ok(z.re)
            }
        })
        .collect()
}

/// 1-norm condition number `||A||_1 ||A^-1||_1`.
pub fn condition_number_1(a: &HermitianMatrix, inverse: &HermitianMatrix) -> f64 {
    a.as_matrix().norm_1() * inverse.as_matrix().norm_1()
}
