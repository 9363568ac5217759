//! Complex matrices, the real space of traceless Hermitian matrices, and
//! the 2x2 block extraction/embedding used by the way-point constructions.
//!
//! Index pairs `<i,j>` are 1-based everywhere in the public interface.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type Block2 = Matrix2<C64>;

/// Per-entry tolerance for Hermiticity of constructed values.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Relative trace tolerance for membership in the traceless space.
pub const TRACE_TOL: f64 = 1e-12;
/// Frobenius tolerance on `U*U - I`.
pub const UNITARY_TOL: f64 = 1e-10;

pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn from_real(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| c(x, 0.0))
}

/// Frobenius norm of `A - B`.
pub fn frobenius_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm()
}

/// Commutator `[a, b] = ab - ba`.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// `Tr(a b)` without forming the product.
pub(crate) fn trace_of_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// `||U*U - I||_F`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - identity(n)).norm()
}

pub(crate) fn ensure_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    Ok(m.nrows())
}

pub(crate) fn ensure_same_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Largest per-entry deviation `|m_ij - conj(m_ji)|` and where it occurs.
pub(crate) fn hermitian_deviation(m: &CMatrix) -> (f64, usize, usize) {
    let n = m.nrows();
    let mut worst = (0.0, 0, 0);
    for i in 0..n {
        for j in i..n {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            if d > worst.0 {
                worst = (d, i, j);
            }
        }
    }
    worst
}

pub(crate) fn ensure_hermitian(m: &CMatrix, tol: f64) -> Result<()> {
    let (dev, row, col) = hermitian_deviation(m);
    if dev > tol {
        return Err(Error::NotHermitian { row: row + 1, col: col + 1, deviation: dev });
    }
    Ok(())
}

/// Eigenvalues ascending with eigenvectors as matching columns, for a Hermitian matrix.
pub(crate) fn sorted_eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    let h = (m + m.adjoint()).scale(0.5);
    let eig = nalgebra::SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = CMatrix::from_fn(n, n, |r, p| eig.eigenvectors[(r, order[p])]);
    (vals, vecs)
}

/// Element of the real (N²−1)-dimensional space of traceless Hermitian matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianZT(CMatrix);

impl HermitianZT {
    /// Validates Hermiticity (per entry, 1e-12) and tracelessness (relative to the Frobenius norm).
    pub fn new(m: CMatrix) -> Result<Self> {
        ensure_square(&m)?;
        ensure_hermitian(&m, HERMITIAN_TOL)?;
        let tr = m.trace().norm();
        if tr > TRACE_TOL * m.norm() {
            return Err(Error::NotTraceless(tr));
        }
        Ok(Self(m))
    }

    /// Hermitian part of `m` with its trace removed. Intended for computed
    /// values that are Hermitian and traceless up to round-off.
    pub fn project(m: &CMatrix) -> Self {
        let n = m.nrows();
        let mut h = (m + m.adjoint()).scale(0.5);
        let shift = h.trace() / n as f64;
        for k in 0..n {
            h[(k, k)] -= shift;
            h[(k, k)].im = 0.0;
        }
        Self(h)
    }

    pub fn from_real(m: &DMatrix<f64>) -> Result<Self> {
        Self::new(from_real(m))
    }

    pub fn zeros(n: usize) -> Self {
        Self(CMatrix::zeros(n, n))
    }

    pub(crate) fn from_raw(m: CMatrix) -> Self {
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    /// Hilbert–Schmidt norm `sqrt(Tr(A²))`.
    pub fn hs_norm(&self) -> f64 {
        self.0.norm()
    }
}

/// A unitary matrix, checked to `||U*U - I||_F < 1e-10`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix(CMatrix);

impl UnitaryMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        ensure_square(&m)?;
        let defect = unitarity_defect(&m);
        if defect.is_nan() || defect >= UNITARY_TOL {
            return Err(Error::NotUnitary(defect));
        }
        Ok(Self(m))
    }

    pub fn identity(n: usize) -> Self {
        Self(identity(n))
    }

    pub(crate) fn from_raw(m: CMatrix) -> Self {
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn compose(&self, rhs: &UnitaryMatrix) -> Self {
        Self(&self.0 * &rhs.0)
    }

    /// Phase-invariant overlap `|Tr(self* other)| / N`.
    pub fn fidelity(&self, other: &UnitaryMatrix) -> f64 {
        phase_invariant_fidelity(&self.0, &other.0)
    }
}

/// `|Tr(W* U)| / N`.
pub fn phase_invariant_fidelity(w: &CMatrix, u: &CMatrix) -> f64 {
    let n = w.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += w[(k, i)].conj() * u[(k, i)];
        }
    }
    acc.norm() / n as f64
}

/// Canonical scalar product `Tr(AB)` on traceless Hermitian matrices.
pub fn hs_inner(a: &HermitianZT, b: &HermitianZT) -> Result<f64> {
    ensure_same_dim(a.dim(), b.dim())?;
    let t = trace_of_product(&a.0, &b.0);
    debug_assert!(
        t.im.abs() <= 1e-12 * (1.0 + a.hs_norm() * b.hs_norm()),
        "imaginary residual {} in Hermitian inner product",
        t.im
    );
    Ok(t.re)
}

fn check_pair(i: usize, j: usize, n: usize) -> Result<(usize, usize)> {
    if i == 0 || j == 0 || i >= j || j > n {
        return Err(Error::InvalidIndices { i, j, n });
    }
    Ok((i - 1, j - 1))
}

/// `[[m_ii, m_ij], [m_ji, m_jj]]` for 1-based `i < j`.
pub fn submatrix_2x2(m: &CMatrix, i: usize, j: usize) -> Result<Block2> {
    let n = ensure_square(m)?;
    let (a, b) = check_pair(i, j, n)?;
    Ok(Block2::new(m[(a, a)], m[(a, b)], m[(b, a)], m[(b, b)]))
}

/// The n×n identity with rows/columns `i`, `j` overwritten by `d`.
pub fn embed_2x2(d: &Block2, i: usize, j: usize, n: usize) -> Result<CMatrix> {
    let (a, b) = check_pair(i, j, n)?;
    let mut m = identity(n);
    m[(a, a)] = d[(0, 0)];
    m[(a, b)] = d[(0, 1)];
    m[(b, a)] = d[(1, 0)];
    m[(b, b)] = d[(1, 1)];
    Ok(m)
}

/// Orthonormal basis of the traceless Hermitian space (generalized Gell-Mann).
///
/// Ordering: symmetric pairs `(E_ij + E_ji)/√2` for `i<j` in lexicographic
/// order, then antisymmetric pairs `(-i E_ij + i E_ji)/√2` in the same order,
/// then the diagonals `diag(1,…,1,−k,0,…)/√(k(k+1))` for `k = 1..n−1`.
#[derive(Debug, Clone)]
pub struct ZtBasis {
    n: usize,
    elems: Vec<HermitianZT>,
}

pub fn basis_zt(n: usize) -> Result<ZtBasis> {
    ZtBasis::new(n)
}

impl ZtBasis {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::DimensionTooSmall(n));
        }
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut elems = Vec::with_capacity(n * n - 1);
        for i in 0..n {
            for j in (i + 1)..n {
                let mut m = CMatrix::zeros(n, n);
                m[(i, j)] = c(s, 0.0);
                m[(j, i)] = c(s, 0.0);
                elems.push(HermitianZT::from_raw(m));
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let mut m = CMatrix::zeros(n, n);
                m[(i, j)] = c(0.0, -s);
                m[(j, i)] = c(0.0, s);
                elems.push(HermitianZT::from_raw(m));
            }
        }
        for k in 1..n {
            let norm = ((k * (k + 1)) as f64).sqrt();
            let mut m = CMatrix::zeros(n, n);
            for d in 0..k {
                m[(d, d)] = c(1.0 / norm, 0.0);
            }
            m[(k, k)] = c(-(k as f64) / norm, 0.0);
            elems.push(HermitianZT::from_raw(m));
        }
        Ok(Self { n, elems })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// N² − 1.
    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn elements(&self) -> &[HermitianZT] {
        &self.elems
    }

    pub fn to_coords(&self, z: &HermitianZT) -> Result<Vec<f64>> {
        ensure_same_dim(self.n, z.dim())?;
        self.elems.iter().map(|b| hs_inner(b, z)).collect()
    }

    pub fn from_coords(&self, coords: &[f64]) -> Result<HermitianZT> {
        ensure_same_dim(self.len(), coords.len())?;
        let mut m = CMatrix::zeros(self.n, self.n);
        for (b, &x) in self.elems.iter().zip(coords) {
            m += b.matrix().scale(x);
        }
        Ok(HermitianZT::from_raw(m))
    }
}

pub fn to_coords(z: &HermitianZT, basis: &ZtBasis) -> Result<Vec<f64>> {
    basis.to_coords(z)
}

/// Pauli matrices, used throughout the tests and examples.
pub mod pauli {
    use super::*;

    pub fn x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    pub fn y() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO])
    }

    pub fn z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, c(-1.0, 0.0)])
    }
}
