//! Dense complex matrix primitives.
//!
//! Everything here works on small row-major complex matrices (desk scale,
//! n ≤ 32). The Hermitian eigensolver is a cyclic complex Jacobi method; the
//! SVD is derived from the eigendecomposition of the Gram matrix `A^+A`.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entrywise tolerance for `|A - A^+|` (scaled by `max(1, max|a_ij|)`).
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues in `[-PSD_TOL, 0)` are clamped to zero (scaled by `max(1, |λ|max)`).
pub const PSD_TOL: f64 = 1e-10;
/// Relative threshold used to decide numerical rank.
pub const RANK_TOL: f64 = 1e-10;

const JACOBI_OFF_TOL: f64 = 1e-13;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Row-major dense complex matrix with finite entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

/// On-disk layout: `{"rows": n, "cols": m, "entries": [[[re, im], ...], ...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixRepr {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Vec<[f64; 2]>>,
}

impl TryFrom<MatrixRepr> for ComplexMatrix {
    type Error = Error;

    fn try_from(repr: MatrixRepr) -> Result<Self> {
        if repr.entries.len() != repr.rows {
            return Err(Error::DimensionMismatch(format!(
                "declared {} rows but found {}",
                repr.rows,
                repr.entries.len()
            )));
        }
        let mut data = Vec::with_capacity(repr.rows * repr.cols);
        for (i, row) in repr.entries.iter().enumerate() {
            if row.len() != repr.cols {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {}",
                    row.len(),
                    repr.cols
                )));
            }
            data.extend(row.iter().map(|&[re, im]| Complex64::new(re, im)));
        }
        ComplexMatrix::new(repr.rows, repr.cols, data)
    }
}

impl From<ComplexMatrix> for MatrixRepr {
    fn from(m: ComplexMatrix) -> Self {
        let entries = (0..m.rows)
            .map(|i| (0..m.cols).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
            .collect();
        MatrixRepr {
            rows: m.rows,
            cols: m.cols,
            entries,
        }
    }
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(k) = data
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite {
                row: k / cols,
                col: k % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix must be at least 1x1");
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Square diagonal matrix with real diagonal.
    pub fn from_real_diag(diag: &[f64]) -> Self {
        Self::rect_diag(diag.len(), diag.len(), diag)
    }

    /// `rows x cols` matrix with `diag` on the main diagonal.
    pub fn rect_diag(rows: usize, cols: usize, diag: &[f64]) -> Self {
        let mut m = Self::zeros(rows, cols);
        for (i, &d) in diag.iter().enumerate().take(rows.min(cols)) {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        let data = rows
            .iter()
            .flatten()
            .map(|&x| Complex64::new(x, 0.0))
            .collect();
        Self::new(r, c, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Build a matrix whose columns are the given vectors.
    pub fn from_columns(rows: usize, columns: &[Vec<Complex64>]) -> Self {
        let mut m = Self::zeros(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            m.set_column(j, col);
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

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[Complex64]) {
        assert_eq!(col.len(), self.rows);
        for (i, &z) in col.iter().enumerate() {
            self[(i, j)] = z;
        }
    }

    /// Keep the first `k` columns.
    pub fn leading_columns(&self, k: usize) -> Self {
        Self::from_fn(self.rows, k, |i, j| self[(i, j)])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_complex(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data
            .iter()
            .map(Complex64::norm_sqr)
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise deviation `|a_ij - conj(a_ji)|` and where it occurs.
    pub fn hermitian_deviation(&self) -> (f64, usize, usize) {
        let mut worst = (0.0, 0, 0);
        for i in 0..self.rows {
            for j in i..self.cols {
                let d = (self[(i, j)] - self[(j, i)].conj()).norm();
                if d > worst.0 {
                    worst = (d, i, j);
                }
            }
        }
        worst
    }

    /// `(A + A^+)/2`, with an exactly real diagonal.
    pub fn hermitian_part(&self) -> Self {
        assert!(self.is_square());
        let n = self.rows;
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(self[(i, i)].re, 0.0);
            for j in i + 1..n {
                let z = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    }

    /// `A^+ A`, computed so that the result is exactly Hermitian.
    pub fn gram(&self) -> Self {
        let n = self.cols;
        let mut g = Self::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let z: Complex64 = (0..self.rows)
                    .map(|k| self[(k, i)].conj() * self[(k, j)])
                    .sum();
                if i == j {
                    g[(i, i)] = Complex64::new(z.re, 0.0);
                } else {
                    g[(i, j)] = z;
                    g[(j, i)] = z.conj();
                }
            }
        }
        g
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn determinant(&self) -> Complex64 {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = ONE;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| a[x * n + k].norm().total_cmp(&a[y * n + k].norm()))
                .unwrap();
            if a[p * n + k].norm() == 0.0 {
                return ZERO;
            }
            if p != k {
                for j in 0..n {
                    a.swap(p * n + j, k * n + j);
                }
                det = -det;
            }
            let pivot = a[k * n + k];
            det *= pivot;
            for i in k + 1..n {
                let f = a[i * n + k] / pivot;
                for j in k..n {
                    let t = a[k * n + j];
                    a[i * n + j] -= f * t;
                }
            }
        }
        det
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix product dimension mismatch");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a + b)
            .collect();
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a - b)
            .collect();
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }
}

/// Hermitian positive semi-definite matrix (Gram matrices, covariances).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComplexMatrix", into = "ComplexMatrix")]
pub struct HermitianPSD(ComplexMatrix);

impl TryFrom<ComplexMatrix> for HermitianPSD {
    type Error = Error;

    fn try_from(m: ComplexMatrix) -> Result<Self> {
        HermitianPSD::new(m)
    }
}

impl From<HermitianPSD> for ComplexMatrix {
    fn from(h: HermitianPSD) -> Self {
        h.0
    }
}

impl HermitianPSD {
    /// Validate Hermitian symmetry and positive semi-definiteness.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "Hermitian matrix must be square, got {}x{}",
                m.rows, m.cols
            )));
        }
        let (dev, row, col) = m.hermitian_deviation();
        if dev > HERMITIAN_TOL * m.max_abs().max(1.0) {
            return Err(Error::NotHermitian {
                row,
                col,
                deviation: dev,
            });
        }
        let h = m.hermitian_part();
        let eig = jacobi_eig(&h)?;
        let tol = psd_tolerance(&eig.eigenvalues);
        if let Some(&bad) = eig.eigenvalues.iter().find(|&&l| l < -tol) {
            return Err(Error::NotPsd { eigenvalue: bad });
        }
        Ok(Self(h))
    }

    /// Wrap a matrix that is PSD by construction; only Hermitian symmetrization is applied.
    pub(crate) fn from_psd_unchecked(m: ComplexMatrix) -> Self {
        Self(m.hermitian_part())
    }

    /// `H^+ H` for any channel matrix `H`.
    pub fn gram_of(h: &ComplexMatrix) -> Self {
        Self(h.gram())
    }

    pub fn zeros(n: usize) -> Self {
        Self(ComplexMatrix::zeros(n, n))
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        assert!(s >= 0.0 && s.is_finite(), "scale must be nonnegative");
        Self(ComplexMatrix::identity(n).scale(s))
    }

    pub fn from_real_diag(diag: &[f64]) -> Result<Self> {
        if let Some(&d) = diag.iter().find(|&&d| !(d >= 0.0) || !d.is_finite()) {
            return Err(Error::NotPsd { eigenvalue: d });
        }
        Ok(Self(ComplexMatrix::from_real_diag(diag)))
    }

    /// `U diag(values) U^+` for a unitary (or semi-unitary) `U` and nonnegative values.
    pub fn from_spectrum(basis: &ComplexMatrix, values: &[f64]) -> Result<Self> {
        if basis.cols() != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} eigenvalues for {} basis vectors",
                values.len(),
                basis.cols()
            )));
        }
        if let Some(&v) = values.iter().find(|&&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::NotPsd { eigenvalue: v });
        }
        Ok(Self::from_psd_unchecked(congruence_diag(basis, values)))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn scale(&self, s: f64) -> Self {
        assert!(s >= 0.0, "PSD scale must be nonnegative");
        Self(self.0.scale(s))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(&self.0 + &other.0)
    }

    /// Positive square root `A^{1/2}`.
    pub fn sqrt(&self) -> Result<Self> {
        let eig = hermitian_eig(self)?;
        let roots: Vec<f64> = eig.eigenvalues.iter().map(|l| l.sqrt()).collect();
        Ok(Self::from_psd_unchecked(congruence_diag(
            &eig.eigenvectors,
            &roots,
        )))
    }

    /// Numerical rank: eigenvalues above `RANK_TOL` times the largest.
    pub fn rank(&self) -> Result<usize> {
        let eig = hermitian_eig(self)?;
        Ok(numerical_rank(&eig.eigenvalues))
    }

    /// PSD order `self ≥ other`, decided by `λ_min(self - other) ≥ -PSD_TOL`.
    pub fn dominates(&self, other: &Self) -> Result<bool> {
        Ok(min_eigenvalue(&(&self.0 - &other.0))? >= -PSD_TOL)
    }
}

/// `U diag(d) U^+`.
pub fn congruence_diag(u: &ComplexMatrix, d: &[f64]) -> ComplexMatrix {
    assert_eq!(u.cols(), d.len());
    let n = u.rows();
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let z: Complex64 = (0..d.len())
                .map(|k| u[(i, k)] * d[k] * u[(j, k)].conj())
                .sum();
            if i == j {
                out[(i, i)] = Complex64::new(z.re, 0.0);
            } else {
                out[(i, j)] = z;
                out[(j, i)] = z.conj();
            }
        }
    }
    out
}

fn psd_tolerance(eigenvalues: &[f64]) -> f64 {
    PSD_TOL * eigenvalues.iter().fold(1.0_f64, |m, l| m.max(l.abs()))
}

/// Count of eigen/singular values above `RANK_TOL` times the largest (input sorted descending).
pub fn numerical_rank(values: &[f64]) -> usize {
    let top = values.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return 0;
    }
    values.iter().filter(|&&v| v > RANK_TOL * top).count()
}

/// Hermitian eigendecomposition, eigenvalues in descending order.
#[derive(Clone, Debug, PartialEq)]
pub struct EigDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Unitary matrix whose columns are the eigenvectors.
    pub eigenvectors: ComplexMatrix,
}

impl EigDecomposition {
    pub fn reconstruct(&self) -> ComplexMatrix {
        congruence_diag(&self.eigenvectors, &self.eigenvalues)
    }
}

/// Eigendecomposition of a PSD matrix; eigenvalues within `-PSD_TOL` of zero are clamped.
pub fn hermitian_eig(a: &HermitianPSD) -> Result<EigDecomposition> {
    let mut eig = jacobi_eig(a.matrix())?;
    let tol = psd_tolerance(&eig.eigenvalues);
    for l in &mut eig.eigenvalues {
        if *l < 0.0 {
            if *l < -tol {
                return Err(Error::NotPsd { eigenvalue: *l });
            }
            *l = 0.0;
        }
    }
    Ok(eig)
}

/// Eigendecomposition of an arbitrary Hermitian matrix (no clamping).
pub fn hermitian_eig_general(a: &ComplexMatrix) -> Result<EigDecomposition> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(
            "eigendecomposition needs a square matrix".into(),
        ));
    }
    let (dev, row, col) = a.hermitian_deviation();
    if dev > HERMITIAN_TOL * a.max_abs().max(1.0) {
        return Err(Error::NotHermitian {
            row,
            col,
            deviation: dev,
        });
    }
    jacobi_eig(&a.hermitian_part())
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(a: &ComplexMatrix) -> Result<f64> {
    let eig = hermitian_eig_general(a)?;
    Ok(*eig.eigenvalues.last().unwrap())
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

// Cyclic Jacobi on an exactly Hermitian input. Each rotation first removes the
// phase of a_pq with diag(1, e^{-iφ}) and then applies a real Givens rotation.
fn jacobi_eig(input: &ComplexMatrix) -> Result<EigDecomposition> {
    let n = input.rows();
    let mut a = input.clone();
    let mut v = ComplexMatrix::identity(n);
    let threshold = JACOBI_OFF_TOL * input.frobenius_norm().max(1.0);
    let cap = 100 * n * n;
    let mut rotations = 0usize;

    while off_diagonal_norm(&a) > threshold {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag < f64::MIN_POSITIVE {
                    continue;
                }
                if rotations >= cap {
                    return Err(Error::NoConvergence {
                        algorithm: "Jacobi eigensolver",
                        iterations: rotations,
                    });
                }
                rotations += 1;
                rotated = true;

                let phase = apq / mag;
                let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * mag);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let sp = phase * s; // s·e^{iφ}
                let spc = sp.conj(); // s·e^{-iφ}
                let cp = phase * c;
                let cpc = cp.conj();

                // A <- A V (columns p, q)
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c - akq * spc;
                    a[(k, q)] = akp * s + akq * cpc;
                }
                // A <- V^+ A (rows p, q)
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c - aqk * sp;
                    a[(q, k)] = apk * s + aqk * cp;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);

                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c - vkq * spc;
                    v[(k, q)] = vkp * s + vkq * cpc;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // stable: ties keep input order
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(EigDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Singular value decomposition `A = left · diag(singulars) · right^+`.
#[derive(Clone, Debug, PartialEq)]
pub struct SvdResult {
    /// `rows x rows` unitary.
    pub left: ComplexMatrix,
    /// `min(rows, cols)` values, descending.
    pub singulars: Vec<f64>,
    /// `cols x cols` unitary.
    pub right: ComplexMatrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let sigma = ComplexMatrix::rect_diag(self.left.rows(), self.right.rows(), &self.singulars);
        &(&self.left * &sigma) * &self.right.adjoint()
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    // a^+ b
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
}

/// Orthonormalize `v` against `basis` (two Gram-Schmidt passes). Returns `None`
/// when almost nothing is left.
fn orthonormalize_against(
    basis: &[Vec<Complex64>],
    mut v: Vec<Complex64>,
) -> Option<Vec<Complex64>> {
    let start = norm(&v);
    for _ in 0..2 {
        for b in basis {
            let proj = dot(b, &v);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= proj * y;
            }
        }
    }
    let n = norm(&v);
    if n <= 1e-8 * start || n < f64::MIN_POSITIVE {
        return None;
    }
    Some(v.into_iter().map(|x| x / n).collect())
}

/// Extend an orthonormal set to a full basis of `C^dim` using standard basis vectors.
fn complete_basis(mut basis: Vec<Vec<Complex64>>, dim: usize) -> Vec<Vec<Complex64>> {
    let mut e = 0;
    while basis.len() < dim && e < dim {
        let mut cand = vec![ZERO; dim];
        cand[e] = ONE;
        if let Some(u) = orthonormalize_against(&basis, cand) {
            basis.push(u);
        }
        e += 1;
    }
    basis
}

/// SVD from the eigendecomposition of `A^+A`. Right vectors come straight from
/// the eigensolver; left vectors are `A v_i / σ_i`, re-orthonormalized and
/// completed, and each σ_i is refined as `|u_i^+ A v_i|`.
pub fn svd(a: &ComplexMatrix) -> Result<SvdResult> {
    let (m, n) = (a.rows(), a.cols());
    let k = m.min(n);
    let eig = jacobi_eig(&a.gram())?;
    let right = eig.eigenvectors;

    let mut lefts: Vec<Vec<Complex64>> = Vec::with_capacity(m);
    let mut owner: Vec<Option<usize>> = Vec::with_capacity(k);
    for i in 0..k {
        let w = a.mul_vec(&right.column(i));
        match orthonormalize_against(&lefts, w) {
            Some(u) => {
                lefts.push(u);
                owner.push(Some(lefts.len() - 1));
            }
            None => owner.push(None),
        }
    }
    // Singular directions with (numerically) zero image get completion vectors.
    let computed = lefts.len();
    lefts = complete_basis(lefts, m);
    let mut spare = computed..m;
    let owner: Vec<usize> = owner
        .into_iter()
        .map(|o| o.unwrap_or_else(|| spare.next().unwrap()))
        .collect();

    let mut pairs: Vec<(f64, Vec<Complex64>, Vec<Complex64>)> = Vec::with_capacity(k);
    for (i, &li) in owner.iter().enumerate() {
        let v = right.column(i);
        let av = a.mul_vec(&v);
        let mut u = lefts[li].clone();
        let inner = dot(&u, &av);
        let sigma = inner.norm();
        if sigma > 0.0 {
            let ph = inner / sigma;
            for x in &mut u {
                *x *= ph;
            }
        }
        pairs.push((sigma, u, v));
    }
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));

    let mut left_cols: Vec<Vec<Complex64>> = pairs.iter().map(|p| p.1.clone()).collect();
    let used: Vec<usize> = owner.clone();
    for (idx, l) in lefts.iter().enumerate() {
        if !used.contains(&idx) {
            left_cols.push(l.clone());
        }
    }
    let mut right_cols: Vec<Vec<Complex64>> = pairs.iter().map(|p| p.2.clone()).collect();
    for j in k..n {
        right_cols.push(right.column(j));
    }
    Ok(SvdResult {
        left: ComplexMatrix::from_columns(m, &left_cols),
        singulars: pairs.iter().map(|p| p.0).collect(),
        right: ComplexMatrix::from_columns(n, &right_cols),
    })
}

/// `ln|I + W R|`, evaluated as `ln|I + R^{1/2} W R^{1/2}|` through a Cholesky factor.
pub fn logdet_ipwr(w: &HermitianPSD, r: &HermitianPSD) -> Result<f64> {
    if w.dim() != r.dim() {
        return Err(Error::DimensionMismatch(format!(
            "W is {0}x{0} but R is {1}x{1}",
            w.dim(),
            r.dim()
        )));
    }
    let root = r.sqrt()?;
    let inner = &(root.matrix() * w.matrix()) * root.matrix();
    let m = &ComplexMatrix::identity(w.dim()) + &inner.hermitian_part();
    cholesky_logdet(&m)
}

fn cholesky_logdet(m: &ComplexMatrix) -> Result<f64> {
    let n = m.rows();
    let mut l = ComplexMatrix::zeros(n, n);
    let mut logdet = 0.0;
    for j in 0..n {
        let s: f64 = (0..j).map(|k| l[(j, k)].norm_sqr()).sum();
        let d = m[(j, j)].re - s;
        if !(d > 0.0) {
            return Err(Error::NotPsd { eigenvalue: d });
        }
        let ljj = d.sqrt();
        l[(j, j)] = Complex64::new(ljj, 0.0);
        logdet += 2.0 * ljj.ln();
        for i in j + 1..n {
            let s: Complex64 = (0..j).map(|k| l[(i, k)] * l[(j, k)].conj()).sum();
            l[(i, j)] = (m[(i, j)] - s) / ljj;
        }
    }
    Ok(logdet)
}

/// Largest singular value.
pub fn spectral_norm(a: &ComplexMatrix) -> Result<f64> {
    Ok(svd(a)?.singulars[0])
}

/// Matrix of i.i.d. circularly-symmetric complex Gaussians with unit variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * s, im * s)
    })
}

/// Haar-distributed unitary from Gram-Schmidt on a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    assert!(n >= 1, "unitary dimension must be positive");
    loop {
        let g = complex_gaussian(n, n, rng);
        let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(n);
        for j in 0..n {
            match orthonormalize_against(&cols, g.column(j)) {
                Some(c) => cols.push(c),
                None => break,
            }
        }
        if cols.len() == n {
            return ComplexMatrix::from_columns(n, &cols);
        }
    }
}

/// Random PSD matrix `G G^+` of the given rank (G is `n x rank` Gaussian).
pub fn random_psd<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> HermitianPSD {
    let g = complex_gaussian(n, rank.max(1), rng);
    let m = if rank == 0 {
        ComplexMatrix::zeros(n, n)
    } else {
        &g * &g.adjoint()
    };
    HermitianPSD::from_psd_unchecked(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;

    fn random_hermitian(n: usize, seed: u64) -> ComplexMatrix {
        let mut rng = seeded_rng(seed);
        let g = complex_gaussian(n, n, &mut rng);
        (&g + &g.adjoint()).hermitian_part()
    }

    fn unitarity_error(u: &ComplexMatrix) -> f64 {
        (&u.adjoint() * u).max_abs_diff(&ComplexMatrix::identity(u.cols()))
    }

    #[test]
    fn eig_identity() {
        let eig = hermitian_eig(&HermitianPSD::scaled_identity(2, 1.0)).unwrap();
        assert_eq!(eig.eigenvalues, vec![1.0, 1.0]);
        assert!(unitarity_error(&eig.eigenvectors) < 1e-12);
    }

    #[test]
    fn eig_diagonal_keeps_standard_basis() {
        let eig = hermitian_eig(&HermitianPSD::from_real_diag(&[2.0, 1.0]).unwrap()).unwrap();
        assert_eq!(eig.eigenvalues, vec![2.0, 1.0]);
        assert_eq!(eig.eigenvectors, ComplexMatrix::identity(2));
    }

    #[test]
    fn eig_sorts_descending_from_ascending_diag() {
        let eig = hermitian_eig(&HermitianPSD::from_real_diag(&[1.0, 3.0, 2.0]).unwrap()).unwrap();
        assert_eq!(eig.eigenvalues, vec![3.0, 2.0, 1.0]);
        assert_eq!(eig.eigenvectors[(1, 0)], ONE);
    }

    #[test]
    fn eig_reconstructs_random_hermitian() {
        for seed in 0..20 {
            for n in [2, 3, 4, 7] {
                let a = random_hermitian(n, seed * 31 + n as u64);
                let eig = hermitian_eig_general(&a).unwrap();
                assert!(unitarity_error(&eig.eigenvectors) < 1e-10);
                let err = (&eig.reconstruct() - &a).frobenius_norm();
                assert!(err <= 1e-9 * (1.0 + a.frobenius_norm()), "n={n} err={err}");
                assert!(eig.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
            }
        }
    }

    #[test]
    fn eig_trace_equals_sum() {
        let mut rng = seeded_rng(7);
        for _ in 0..20 {
            let a = random_psd(5, 3, &mut rng);
            let eig = hermitian_eig(&a).unwrap();
            assert!(eig.eigenvalues.iter().all(|&l| l >= 0.0));
            let s: f64 = eig.eigenvalues.iter().sum();
            assert!((s - a.trace()).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            HermitianPSD::new(m),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn rejects_indefinite_and_clamps_tiny_negative() {
        let m = ComplexMatrix::from_real_diag(&[1.0, -1e-3]);
        assert!(matches!(HermitianPSD::new(m), Err(Error::NotPsd { .. })));
        let m = ComplexMatrix::from_real_diag(&[1.0, -1e-12]);
        let h = HermitianPSD::new(m).unwrap();
        assert_eq!(hermitian_eig(&h).unwrap().eigenvalues, vec![1.0, 0.0]);
    }

    #[test]
    fn rejects_empty_and_nonfinite() {
        assert!(ComplexMatrix::new(0, 1, vec![]).is_err());
        assert!(matches!(
            ComplexMatrix::new(1, 2, vec![ONE, Complex64::new(f64::NAN, 0.0)]),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
    }

    #[test]
    fn svd_zero_matrix() {
        let s = svd(&ComplexMatrix::zeros(3, 2)).unwrap();
        assert_eq!(s.singulars, vec![0.0, 0.0]);
        assert!(unitarity_error(&s.left) < 1e-12);
        assert!(unitarity_error(&s.right) < 1e-12);
    }

    #[test]
    fn svd_diagonal() {
        let s = svd(&ComplexMatrix::from_real_diag(&[2f64.sqrt(), 1.0])).unwrap();
        assert!((s.singulars[0] - std::f64::consts::SQRT_2).abs() < 1e-8);
        assert!((s.singulars[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn svd_matches_gram_eigenvalues_and_reconstructs() {
        let mut rng = seeded_rng(11);
        for (m, n) in [(3, 2), (2, 3), (4, 4), (1, 3), (3, 1), (5, 2)] {
            for _ in 0..10 {
                let a = complex_gaussian(m, n, &mut rng);
                let s = svd(&a).unwrap();
                let eig = hermitian_eig_general(&a.gram()).unwrap();
                for (i, sv) in s.singulars.iter().enumerate() {
                    assert!((sv * sv - eig.eigenvalues[i]).abs() < 1e-9);
                }
                assert!(unitarity_error(&s.left) < 1e-10, "{m}x{n}");
                assert!(unitarity_error(&s.right) < 1e-10);
                let err = (&s.reconstruct() - &a).frobenius_norm();
                assert!(
                    err <= 1e-9 * (1.0 + a.frobenius_norm()),
                    "{m}x{n} err={err}"
                );
            }
        }
    }

    #[test]
    fn svd_rank_deficient_reconstructs() {
        let mut rng = seeded_rng(12);
        let g = complex_gaussian(4, 1, &mut rng);
        let h = complex_gaussian(1, 3, &mut rng);
        let a = &g * &h;
        let s = svd(&a).unwrap();
        assert!(s.singulars[1] < 1e-7 && s.singulars[2] < 1e-7);
        assert!((&s.reconstruct() - &a).frobenius_norm() <= 1e-9 * (1.0 + a.frobenius_norm()));
        assert!(unitarity_error(&s.left) < 1e-10);
    }

    #[test]
    fn logdet_cases() {
        let r = HermitianPSD::from_real_diag(&[0.75, 0.25]).unwrap();
        assert_eq!(logdet_ipwr(&HermitianPSD::zeros(2), &r).unwrap(), 0.0);
        let w = HermitianPSD::from_real_diag(&[2.0, 1.0]).unwrap();
        let v = logdet_ipwr(&w, &r).unwrap();
        assert!((v - (2.5f64.ln() + 1.25f64.ln())).abs() < 1e-12);
        assert!((v - 1.13943).abs() < 1e-5);
        assert!(matches!(
            logdet_ipwr(&HermitianPSD::zeros(3), &r),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn logdet_matches_determinant() {
        let mut rng = seeded_rng(5);
        for _ in 0..20 {
            let w = random_psd(3, 3, &mut rng);
            let r = random_psd(3, 2, &mut rng);
            let direct = (&ComplexMatrix::identity(3) + &(w.matrix() * r.matrix())).determinant();
            let v = logdet_ipwr(&w, &r).unwrap();
            assert!((v - direct.norm().ln()).abs() < 1e-10);
            assert!(direct.im.abs() < 1e-9 * direct.norm());
        }
    }

    #[test]
    fn spectral_norm_cases() {
        assert!((spectral_norm(&ComplexMatrix::identity(4)).unwrap() - 1.0).abs() < 1e-12);
        let d = ComplexMatrix::from_real_diag(&[3.0, -4.0]);
        assert!((spectral_norm(&d).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_norm_matches_power_iteration() {
        let mut rng = seeded_rng(99);
        for _ in 0..10 {
            let a = complex_gaussian(3, 4, &mut rng);
            let g = a.gram();
            let mut x = vec![ONE; 4];
            let mut est = 0.0;
            for _ in 0..2000 {
                let y = g.mul_vec(&x);
                let n = norm(&y);
                x = y.into_iter().map(|z| z / n).collect();
                est = n;
            }
            assert!((spectral_norm(&a).unwrap() - est.sqrt()).abs() < 1e-8);
        }
    }

    #[test]
    fn random_unitary_properties() {
        let mut rng = seeded_rng(3);
        let u1 = random_unitary(1, &mut rng);
        assert!((u1[(0, 0)].norm() - 1.0).abs() < 1e-12);
        for n in 2..6 {
            let u = random_unitary(n, &mut rng);
            assert!(unitarity_error(&u) < 1e-10);
            assert!((u.determinant().norm() - 1.0).abs() < 1e-8);
        }
        let a = random_unitary(4, &mut seeded_rng(42));
        let b = random_unitary(4, &mut seeded_rng(42));
        assert_eq!(a, b);
    }

    #[test]
    fn matrix_json_round_trip() {
        let mut rng = seeded_rng(1);
        let a = complex_gaussian(2, 3, &mut rng);
        let s = serde_json::to_string(&a).unwrap();
        let back: ComplexMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(a, back);
    }
}
