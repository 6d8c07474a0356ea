//! Dense complex matrix substrate: the symplectic form, validated boundary
//! conditions, PSD coefficient values, matrix exponentials and SVD kernels.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Tolerance for structural identities such as `αJα* = 0`.
pub const STRUCTURAL_TOL: f64 = 1e-10;
/// Relative singular value cut used for rank decisions.
pub const RANK_TOL: f64 = 1e-10;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Build a complex matrix from real row-major rows.
pub fn real_matrix(rows: &[&[f64]]) -> CMatrix {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    CMatrix::from_fn(nrows, ncols, |i, j| real(rows[i][j]))
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Frobenius norm.
pub fn norm(m: &CMatrix) -> f64 {
    m.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * real(0.5)
}

/// `(m − m*)/(2i)`, the imaginary part of a square matrix.
pub fn imaginary_part(m: &CMatrix) -> CMatrix {
    (m - m.adjoint()) * c64(0.0, -0.5)
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    vals
}

pub fn min_hermitian_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m).first().copied().unwrap_or(0.0)
}

/// `m^{-1/2}` for Hermitian positive definite `m`.
pub fn inverse_sqrt_hermitian(m: &CMatrix) -> Result<CMatrix> {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if eig.eigenvalues.iter().any(|&l| l <= RANK_TOL * top.max(f64::MIN_POSITIVE)) {
        return Err(Error::NotPositive("Gram matrix is singular".into()));
    }
    let d = CMatrix::from_diagonal(&DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| real(1.0 / l.sqrt())),
    ));
    let q = &eig.eigenvectors;
    Ok(q * d * q.adjoint())
}

/// Singular values in descending order together with the full set of right
/// singular vectors (columns of a `q×q` unitary matrix, same order).
pub fn svd_full(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let (p, q) = m.shape();
    let padded = if p < q {
        let mut padded = CMatrix::zeros(q, q);
        padded.view_mut((0, 0), (p, q)).copy_from(m);
        padded
    } else {
        m.clone()
    };
    let svd = SVD::new(padded, false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let values = order.iter().map(|&i| svd.singular_values[i]).collect();
    let v = CMatrix::from_fn(q, order.len(), |r, c| v_t[(order[c], r)].conj());
    (values, v)
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// The standard symplectic form of order `2n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SymplecticForm {
    n: usize,
}

impl SymplecticForm {
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 || !order.is_multiple_of(2) {
            return Err(Error::Shape(format!("symplectic order must be even and positive, got {order}")));
        }
        Ok(Self { n: order / 2 })
    }

    pub fn half(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        2 * self.n
    }

    /// `J = [[0, −I], [I, 0]]`.
    pub fn matrix(&self) -> CMatrix {
        symplectic(self.n)
    }
}

/// `J` of order `2n`.
pub fn symplectic(n: usize) -> CMatrix {
    let mut j = CMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = real(-1.0);
        j[(n + i, i)] = real(1.0);
    }
    j
}

/// `N = diag(−I, I)` of order `2n`; reflects the first components.
pub fn reflection(n: usize) -> CMatrix {
    let mut m = CMatrix::identity(2 * n, 2 * n);
    for i in 0..n {
        m[(i, i)] = real(-1.0);
    }
    m
}

/// A self-adjoint boundary condition `α ∈ C^{n×2n}` with `αα* = I` and `αJα* = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryCondition {
    matrix: CMatrix,
}

impl BoundaryCondition {
    /// Normalize and validate a raw full-rank condition. See [`validate_boundary`].
    pub fn new(raw: CMatrix) -> Result<Self> {
        validate_boundary(&raw)
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        validate_boundary(&real_matrix(rows))
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn order(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// Left half `β₁` (acts on first components).
    pub fn left_block(&self) -> CMatrix {
        let n = self.n();
        self.matrix.columns(0, n).into_owned()
    }

    /// Right half `β₂` (acts on second components).
    pub fn right_block(&self) -> CMatrix {
        let n = self.n();
        self.matrix.columns(n, n).into_owned()
    }

    /// `P = β*β = [[β₁*β₁, β₁*β₂], [β₂*β₁, β₂*β₂]]`, the orthogonal projection
    /// onto the row space.
    pub fn projection(&self) -> CMatrix {
        self.matrix.adjoint() * &self.matrix
    }

    /// Residuals `(‖αα* − I‖, ‖αJα*‖)`.
    pub fn residuals(&self) -> (f64, f64) {
        boundary_residuals(&self.matrix)
    }
}

/// `(‖αα* − I‖, ‖αJα*‖)` for an arbitrary `n×2n` matrix.
pub fn boundary_residuals(m: &CMatrix) -> (f64, f64) {
    let n = m.nrows();
    let gram = m * m.adjoint();
    let j = symplectic(m.ncols() / 2);
    (norm(&(gram - identity(n))), norm(&(m * j * m.adjoint())))
}

/// Row-orthonormalize a full-rank `n×2n` condition, `α = (raw·raw*)^{-1/2}·raw`.
pub fn validate_boundary(raw: &CMatrix) -> Result<BoundaryCondition> {
    let (n, cols) = raw.shape();
    if n == 0 || cols != 2 * n {
        return Err(Error::Shape(format!("boundary condition must be n×2n, got {n}×{cols}")));
    }
    if raw.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Input("boundary condition has non-finite entries".into()));
    }
    let sv = singular_values(raw);
    let top = sv[0];
    let rank = sv.iter().filter(|&&s| s > RANK_TOL * top).count();
    if top == 0.0 || rank < n {
        return Err(Error::RankDeficient { rank: if top == 0.0 { 0 } else { rank }, expected: n });
    }
    let j = symplectic(n);
    let residual = norm(&(raw * &j * raw.adjoint())) / (top * top);
    if residual > STRUCTURAL_TOL {
        return Err(Error::NotSelfAdjoint { residual });
    }
    let gram = raw * raw.adjoint();
    let matrix = inverse_sqrt_hermitian(&gram)? * raw;
    Ok(BoundaryCondition { matrix })
}

/// A Hermitian positive semidefinite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianPsd {
    matrix: CMatrix,
}

impl HermitianPsd {
    /// Accepts `m` when it is Hermitian and its smallest eigenvalue is at
    /// least `−tol·max(1, ‖m‖)`. The stored value is the Hermitian part.
    pub fn new(m: CMatrix, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Shape(format!("PSD matrix must be square, got {:?}", m.shape())));
        }
        let scale = norm(&m).max(1.0);
        let skew = norm(&(&m - m.adjoint()));
        if skew > tol * scale {
            return Err(Error::NotPositive(format!("not Hermitian (skew part {skew:.3e})")));
        }
        let h = hermitian_part(&m);
        let low = min_hermitian_eigenvalue(&h);
        if low < -tol * scale {
            return Err(Error::NotPositive(format!("smallest eigenvalue {low:.3e}")));
        }
        Ok(Self { matrix: h })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::new(real_matrix(rows), 1e-12)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn is_definite(&self, tol: f64) -> bool {
        let vals = hermitian_eigenvalues(&self.matrix);
        let top = vals.last().copied().unwrap_or(0.0);
        top > 0.0 && vals[0] > tol * top
    }
}

/// Matrix exponential (Padé scaling and squaring).
pub fn mat_exp(m: &CMatrix) -> Result<CMatrix> {
    if !m.is_square() {
        return Err(Error::Shape("matrix exponential needs a square matrix".into()));
    }
    if m.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Overflow);
    }
    let e = m.exp();
    if e.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Overflow);
    }
    Ok(e)
}

/// Orthonormal basis of the numerical kernel of `m`: right singular vectors
/// whose singular values fall below `tol·σ_max`.
pub fn kernel_basis(m: &CMatrix, tol: f64) -> Vec<CVector> {
    let q = m.ncols();
    if q == 0 {
        return Vec::new();
    }
    let (sv, v) = svd_full(m);
    let top = sv.first().copied().unwrap_or(0.0);
    (0..q)
        .filter(|&i| top == 0.0 || sv.get(i).copied().unwrap_or(0.0) < tol * top)
        .map(|i| v.column(i).into_owned())
        .collect()
}

/// A permutation `C` given by `C e_i = e_{map[i]}`.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self { map: (0..n).collect() }
    }

    /// Builds a permutation from images, rejecting maps that are not bijections.
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let p = Self { map };
        if !p.is_bijection() {
            return Err(Error::Shape(format!("index map is not a permutation: {:?}", p.map)));
        }
        Ok(p)
    }

    /// Builds without checking; use [`Permutation::is_bijection`] afterwards.
    pub fn from_map_unchecked(map: Vec<usize>) -> Self {
        Self { map }
    }

    /// The interleaving permutation `C_d e_i = e_{(i+1)/2}` (i odd),
    /// `e_{(d+i)/2}` (i even), written 0-based.
    pub fn interleave(d: usize) -> Self {
        let half = d / 2;
        let map = (0..d).map(|i| if i % 2 == 0 { i / 2 } else { half + i / 2 }).collect();
        Self { map }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn image(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (i, &j) in self.map.iter().enumerate() {
            inv[j] = i;
        }
        Self { map: inv }
    }

    pub fn is_bijection(&self) -> bool {
        let mut seen = vec![false; self.map.len()];
        for &j in &self.map {
            if j >= seen.len() || seen[j] {
                return false;
            }
            seen[j] = true;
        }
        true
    }

    pub fn matrix(&self) -> CMatrix {
        let n = self.map.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, &j) in self.map.iter().enumerate() {
            m[(j, i)] = real(1.0);
        }
        m
    }

    /// `C·M·C*`.
    pub fn conjugate(&self, m: &CMatrix) -> CMatrix {
        let n = self.map.len();
        let mut out = CMatrix::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                out[(self.map[a], self.map[b])] = m[(a, b)];
            }
        }
        out
    }

    /// `C·v`.
    pub fn apply(&self, v: &CVector) -> CVector {
        let mut out = CVector::zeros(v.len());
        for (i, &j) in self.map.iter().enumerate() {
            out[j] = v[i];
        }
        out
    }

    /// `C*·v`.
    pub fn apply_inverse(&self, v: &CVector) -> CVector {
        CVector::from_iterator(v.len(), self.map.iter().map(|&j| v[j]))
    }
}

/// Block diagonal matrix of the given square blocks.
pub fn block_diagonal(blocks: &[CMatrix]) -> CMatrix {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMatrix::zeros(n, n);
    let mut at = 0;
    for b in blocks {
        let k = b.nrows();
        out.view_mut((at, at), (k, k)).copy_from(b);
        at += k;
    }
    out
}

/// Block diagonal of rectangular blocks.
pub fn block_diagonal_rect(blocks: &[CMatrix]) -> CMatrix {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn taylor_exp(m: &CMatrix) -> CMatrix {
        let n = m.nrows();
        let mut term = identity(n);
        let mut sum = identity(n);
        for k in 1..80 {
            term = &term * m * real(1.0 / k as f64);
            sum += &term;
        }
        sum
    }

    #[test]
    fn symplectic_identities() {
        for n in 1..4 {
            let j = SymplecticForm::new(2 * n).unwrap().matrix();
            assert!(norm(&(&j * &j + identity(2 * n))) < 1e-15);
            assert!(norm(&(j.adjoint() + &j)) < 1e-15);
        }
        assert!(SymplecticForm::new(3).is_err());
        assert!(SymplecticForm::new(0).is_err());
    }

    #[test]
    fn validate_examples() {
        let a = BoundaryCondition::from_real_rows(&[&[0.0, 1.0]]).unwrap();
        assert!(norm(&(a.matrix() - real_matrix(&[&[0.0, 1.0]]))) < 1e-15);

        let b = BoundaryCondition::from_real_rows(&[&[0.0, 2.0]]).unwrap();
        assert!(norm(&(b.matrix() - real_matrix(&[&[0.0, 1.0]]))) < 1e-15);

        let c = BoundaryCondition::from_real_rows(&[&[1.0, 1.0]]).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert!(norm(&(c.matrix() - real_matrix(&[&[s, s]]))) < 1e-15);
        let (gram, sympl) = c.residuals();
        assert!(gram < 1e-12 && sympl < 1e-12);
    }

    #[test]
    fn validate_errors() {
        let zero = CMatrix::zeros(1, 2);
        assert!(matches!(validate_boundary(&zero), Err(Error::RankDeficient { .. })));
        let dup = real_matrix(&[&[1.0, 0.0, 0.0, 0.0], &[2.0, 0.0, 0.0, 0.0]]);
        assert!(matches!(validate_boundary(&dup), Err(Error::RankDeficient { .. })));
        // rows (1,0,0,0) and (0,0,1,0) pair u₁ with u₁'s conjugate momentum
        let bad = real_matrix(&[&[1.0, 0.0, 0.0, 0.0], &[0.0, 0.0, 1.0, 0.0]]);
        assert!(matches!(validate_boundary(&bad), Err(Error::NotSelfAdjoint { .. })));
        let complex = CMatrix::from_row_slice(1, 2, &[c64(1.0, 0.0), c64(0.0, 1.0)]);
        assert!(matches!(validate_boundary(&complex), Err(Error::NotSelfAdjoint { .. })));
        assert!(matches!(validate_boundary(&CMatrix::zeros(1, 3)), Err(Error::Shape(_))));
    }

    #[test]
    fn exp_examples() {
        let z = CMatrix::zeros(3, 3);
        assert!(norm(&(mat_exp(&z).unwrap() - identity(3))) < 1e-15);

        let pj = symplectic(1) * real(PI);
        let oracle = taylor_exp(&pj);
        let e = mat_exp(&pj).unwrap();
        assert!(norm(&(&e - &oracle)) < 1e-12);
        assert!(norm(&(e + identity(2))) < 1e-12);

        let d = real_matrix(&[&[1.0, 0.0], &[0.0, -1.0]]);
        let e = mat_exp(&d).unwrap();
        let expected = real_matrix(&[&[1f64.exp(), 0.0], &[0.0, (-1f64).exp()]]);
        assert!(norm(&(e - expected)) < 1e-14);

        let huge = real_matrix(&[&[1e6]]);
        assert!(matches!(mat_exp(&huge), Err(Error::Overflow)));
    }

    #[test]
    fn kernel_examples() {
        assert!(kernel_basis(&identity(2), 1e-10).is_empty());
        let zero = CMatrix::zeros(2, 2);
        let k = kernel_basis(&zero, 1e-10);
        assert_eq!(k.len(), 2);
        assert!((k[0].dotc(&k[1])).norm() < 1e-15);

        let m = real_matrix(&[&[1.0, 0.0], &[0.0, 1e-14]]);
        let k = kernel_basis(&m, 1e-10);
        assert_eq!(k.len(), 1);
        assert!((k[0][0].norm()) < 1e-12 && (k[0][1].norm() - 1.0).abs() < 1e-12);

        // wide matrix: a single row has a 2-dimensional kernel in C^3
        let wide = real_matrix(&[&[1.0, 1.0, 0.0]]);
        let k = kernel_basis(&wide, 1e-10);
        assert_eq!(k.len(), 2);
        for v in &k {
            assert!((&wide * v).norm() < 1e-14);
        }
    }

    #[test]
    fn interleave_matches_index_rule() {
        // 1-based: C e_i = e_{(i+1)/2} for odd i, e_{2k+i/2} for even i, with d = 4k.
        let c = Permutation::interleave(4);
        assert_eq!(c.map(), &[0, 2, 1, 3]);
        let c = Permutation::interleave(12);
        for i in 1..=12usize {
            let expected = if i % 2 == 1 { (i + 1) / 2 } else { 6 + i / 2 };
            assert_eq!(c.image(i - 1) + 1, expected);
        }
        assert!(c.is_bijection());
        let m = c.matrix();
        assert!(norm(&(&m * m.adjoint() - identity(12))) < 1e-15);
    }

    #[test]
    fn interleave_block_diagonalizes_j() {
        for k in 1..5 {
            let c = Permutation::interleave(2 * k).matrix();
            let blocks = vec![symplectic(1); k];
            let lhs = c.adjoint() * symplectic(k) * &c;
            assert!(norm(&(lhs - block_diagonal(&blocks))) < 1e-15);
        }
    }
}
