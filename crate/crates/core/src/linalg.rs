//! Dense complex Hermitian matrices.
//!
//! Every state, effect and functional operator in the crate is carried by a
//! [`HermitianMatrix`]. Hermiticity is checked at construction against
//! [`HERMITIAN_TOL`] and then enforced exactly by symmetrization, so that
//! downstream eigensolves see an exactly Hermitian input.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Absolute tolerance on `|m[i][j] - conj(m[j][i])|` for constructed data.
pub const HERMITIAN_TOL: f64 = 1e-10;

pub type CMatrix = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Clone, PartialEq)]
pub struct HermitianMatrix {
    m: CMatrix,
}

impl HermitianMatrix {
    /// Checks squareness and Hermiticity within [`HERMITIAN_TOL`].
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerance(m, HERMITIAN_TOL)
    }

    pub fn with_tolerance(m: CMatrix, tol: f64) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension(format!(
                "expected a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::Dimension("empty matrix".into()));
        }
        let dev = hermitian_deviation(&m);
        if !(dev <= tol) {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self::symmetrized(m))
    }

    /// Projects onto the Hermitian part without any check.
    pub fn symmetrized(m: CMatrix) -> Self {
        let adj = m.adjoint();
        HermitianMatrix { m: (m + adj) * c(0.5, 0.0) }
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("ragged or non-square matrix rows".into()));
        }
        Self::new(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Real matrix given row-major.
    pub fn from_real(n: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Dimension(format!(
                "expected {} entries, got {}",
                n * n,
                data.len()
            )));
        }
        Self::new(CMatrix::from_fn(n, n, |i, j| c(data[i * n + j], 0.0)))
    }

    /// Real symmetric 2x2 matrix `[[a, b], [b, d]]`.
    pub fn real2(a: f64, b: f64, d: f64) -> Self {
        Self::symmetrized(CMatrix::from_row_slice(
            2,
            2,
            &[c(a, 0.0), c(b, 0.0), c(b, 0.0), c(d, 0.0)],
        ))
    }

    pub fn zeros(n: usize) -> Self {
        HermitianMatrix { m: CMatrix::zeros(n, n) }
    }

    pub fn identity(n: usize) -> Self {
        HermitianMatrix { m: CMatrix::identity(n, n) }
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        HermitianMatrix {
            m: CMatrix::from_fn(n, n, |i, j| if i == j { c(d[i], 0.0) } else { c(0.0, 0.0) }),
        }
    }

    /// `|v><v|`
    pub fn projector(v: &DVector<Complex64>) -> Self {
        Self::symmetrized(v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.m[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.m[(i, i)].re).sum()
    }

    /// `tr(self * other)`, without forming the product.
    pub fn trace_product(&self, other: &HermitianMatrix) -> Complex64 {
        let n = self.dim();
        let mut acc = c(0.0, 0.0);
        for i in 0..n {
            for k in 0..n {
                acc += self.m[(i, k)] * other.m[(k, i)];
            }
        }
        acc
    }

    /// Eigenvalues in ascending order with matching eigenvector columns.
    pub fn eigh(&self) -> (Vec<f64>, CMatrix) {
        let eig = self.m.clone().symmetric_eigen();
        let n = self.dim();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = CMatrix::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
        (values, vectors)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigh().0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn max_abs_diff(&self, other: &HermitianMatrix) -> f64 {
        self.m
            .iter()
            .zip(other.m.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        self.m.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.max_imag() <= tol
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Hilbert-Schmidt inner product `Re tr(self^† other)`.
    pub fn hs_inner(&self, other: &HermitianMatrix) -> f64 {
        self.m.iter().zip(other.m.iter()).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// Entrywise complex conjugate, which for a Hermitian matrix is the transpose.
    pub fn transpose(&self) -> Self {
        HermitianMatrix { m: self.m.transpose() }
    }

    /// `a * self * a^†` for any (possibly rectangular) `a`.
    pub fn congruence(&self, a: &CMatrix) -> Self {
        Self::symmetrized(a * &self.m * a.adjoint())
    }

    /// Embeds into the top-left corner of an `n x n` zero matrix.
    pub fn embed(&self, n: usize) -> Result<Self> {
        if n < self.dim() {
            return Err(Error::Dimension(format!("cannot embed dimension {} into {}", self.dim(), n)));
        }
        let mut m = CMatrix::zeros(n, n);
        m.view_mut((0, 0), (self.dim(), self.dim())).copy_from(&self.m);
        Ok(HermitianMatrix { m })
    }

    /// Top-left `k x k` principal block.
    pub fn principal_block(&self, k: usize) -> Result<Self> {
        if k > self.dim() || k == 0 {
            return Err(Error::Dimension(format!("cannot take a {}-block of dimension {}", k, self.dim())));
        }
        Ok(HermitianMatrix { m: self.m.view((0, 0), (k, k)).into_owned() })
    }

    pub fn scale(&self, s: f64) -> Self {
        HermitianMatrix { m: &self.m * c(s, 0.0) }
    }

    pub fn to_rows(&self) -> Vec<Vec<Complex64>> {
        (0..self.dim()).map(|i| (0..self.dim()).map(|j| self.m[(i, j)]).collect()).collect()
    }

    /// Sum of a non-empty iterator of equally sized matrices.
    pub fn sum<'a>(mut items: impl Iterator<Item = &'a HermitianMatrix>) -> Option<Self> {
        let first = items.next()?.clone();
        Some(items.fold(first, |acc, x| &acc + x))
    }
}

pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

impl fmt::Debug for HermitianMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HermitianMatrix{:?}", self.to_rows())
    }
}

impl<'a> Add<&'a HermitianMatrix> for &'a HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix { m: &self.m + &rhs.m }
    }
}

impl<'a> Sub<&'a HermitianMatrix> for &'a HermitianMatrix {
    type Output = HermitianMatrix;
    fn sub(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix { m: &self.m - &rhs.m }
    }
}

impl Add for HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix { m: self.m + rhs.m }
    }
}

impl Sub for HermitianMatrix {
    type Output = HermitianMatrix;
    fn sub(self, rhs: HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix { m: self.m - rhs.m }
    }
}

impl Mul<f64> for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn mul(self, rhs: f64) -> HermitianMatrix {
        self.scale(rhs)
    }
}

impl Mul<f64> for HermitianMatrix {
    type Output = HermitianMatrix;
    fn mul(self, rhs: f64) -> HermitianMatrix {
        self.scale(rhs)
    }
}

impl Neg for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn neg(self) -> HermitianMatrix {
        self.scale(-1.0)
    }
}

pub fn pauli_x() -> HermitianMatrix {
    HermitianMatrix::real2(0.0, 1.0, 0.0)
}

pub fn pauli_y() -> HermitianMatrix {
    HermitianMatrix::symmetrized(CMatrix::from_row_slice(
        2,
        2,
        &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)],
    ))
}

pub fn pauli_z() -> HermitianMatrix {
    HermitianMatrix::real2(1.0, 0.0, -1.0)
}

/// Complex numbers travel as `[re, im]`, matrices as row-major nested arrays.
impl Serialize for HermitianMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = self
            .to_rows()
            .into_iter()
            .map(|r| r.into_iter().map(|z| [z.re, z.im]).collect())
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for HermitianMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(d)?;
        let rows: Vec<Vec<Complex64>> = rows
            .into_iter()
            .map(|r| r.into_iter().map(|[re, im]| c(re, im)).collect())
            .collect();
        HermitianMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Complex vectors as arrays of `[re, im]`.
pub mod complex_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &DVector<Complex64>, s: S) -> std::result::Result<S::Ok, S::Error> {
        let items: Vec<[f64; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
        items.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<DVector<Complex64>, D::Error> {
        let items: Vec<[f64; 2]> = Vec::deserialize(d)?;
        Ok(DVector::from_iterator(items.len(), items.into_iter().map(|[re, im]| c(re, im))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.5, 0.0), c(0.4, 0.0), c(1.0, 0.0)]);
        assert!(matches!(HermitianMatrix::new(m), Err(Error::NotHermitian(_))));
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.1), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(HermitianMatrix::new(m).is_err());
    }

    #[test]
    fn rejects_non_square() {
        assert!(matches!(
            HermitianMatrix::new(CMatrix::zeros(2, 3)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn eigh_sorted_and_reconstructs() {
        let m = &(&pauli_x() * 0.3) + &(&pauli_y() * 0.4);
        let (vals, vecs) = m.eigh();
        assert!((vals[0] + 0.5).abs() < 1e-12 && (vals[1] - 0.5).abs() < 1e-12);
        let d = CMatrix::from_diagonal(&DVector::from_iterator(2, vals.iter().map(|&v| c(v, 0.0))));
        let back = &vecs * d * vecs.adjoint();
        assert!((back - m.matrix()).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn trace_product_matches_dense_product() {
        let a = HermitianMatrix::real2(0.3, -0.2, 0.7);
        let b = &pauli_y() + &HermitianMatrix::identity(2);
        let dense: Complex64 = (a.matrix() * b.matrix()).trace();
        assert!((a.trace_product(&b) - dense).norm() < 1e-15);
    }

    #[test]
    fn json_is_nested_re_im_pairs() {
        let s = serde_json::to_string(&pauli_y()).unwrap();
        assert_eq!(s, "[[[0.0,0.0],[0.0,-1.0]],[[0.0,1.0],[0.0,0.0]]]");
        let back: HermitianMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, pauli_y());
    }

    #[test]
    fn embed_and_principal_block_invert() {
        let a = HermitianMatrix::real2(0.1, 0.2, 0.3);
        let e = a.embed(3).unwrap();
        assert_eq!(e.dim(), 3);
        assert_eq!(e.principal_block(2).unwrap(), a);
    }
}
