//! m-functions, Green kernels, resolvents, eigenvalues, spectral measures and
//! Herglotz data for regular and half-line canonical systems.

mod eigen;
mod green;
mod herglotz;

pub use eigen::{eigenvalues, eigenvalues_with, transform_u, EigenScan, SpectralDecomposition, SpectralPoint};
pub use green::{apply_resolvent, green, GreenKernel, ResolventSolution};
pub use herglotz::{herglotz_decompose, stieltjes_inversion, weight_limit, HerglotzData, TailEstimate};

use crate::algebra::{
    block_diagonal_rect, identity, kernel_basis, singular_values, svd_full, symplectic, BoundaryCondition, CMatrix,
    C64,
};
use crate::error::{Error, Result};
use crate::evolve::{fundamental_solution, FundamentalSolution};
use crate::hamiltonian::{Hamiltonian, SchrodingerPiece, Tail};

/// Relative singular value below which `Γu(L, z)` counts as singular.
pub const AT_EIGENVALUE_TOL: f64 = 1e-12;

/// A canonical system with a boundary condition at the left endpoint and
/// either a boundary condition at the right endpoint (regular problem) or a
/// tail (half line).
#[derive(Clone, Debug)]
pub struct SpectralProblem {
    hamiltonian: Hamiltonian,
    alpha: BoundaryCondition,
    beta: Option<BoundaryCondition>,
}

/// `m(z)` together with the fundamental solution it was computed from.
pub struct MEvaluation<'a> {
    pub solution: FundamentalSolution<'a>,
    pub m: CMatrix,
}

impl<'a> MEvaluation<'a> {
    /// `f_m(x, z) = v(x, z) + u(x, z) m(z) = W(x, z)·(m; I)`.
    pub fn f_m(&self, x: f64) -> Result<CMatrix> {
        let w = self.solution.evaluate(x)?;
        Ok(w * stacked(&self.m))
    }

    pub fn u(&self, x: f64) -> Result<CMatrix> {
        self.solution.u(x)
    }
}

/// `(m; I)`.
pub(crate) fn stacked(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    let mut out = CMatrix::zeros(2 * n, n);
    out.view_mut((0, 0), (n, n)).copy_from(m);
    out.view_mut((n, 0), (n, n)).copy_from(&identity(n));
    out
}

impl SpectralProblem {
    pub fn regular(h: Hamiltonian, alpha: BoundaryCondition, beta: BoundaryCondition) -> Result<Self> {
        if h.tail().is_some() {
            return Err(Error::BadDomain("a regular problem cannot have a tail; use half_line".into()));
        }
        if h.segments().is_empty() {
            return Err(Error::BadDomain("a regular problem needs a finite part".into()));
        }
        if alpha.order() != h.order() || beta.order() != h.order() {
            return Err(Error::Shape(format!(
                "boundary conditions of orders {}, {} for a system of order {}",
                alpha.order(),
                beta.order(),
                h.order()
            )));
        }
        Ok(Self { hamiltonian: h, alpha, beta: Some(beta) })
    }

    pub fn half_line(h: Hamiltonian, alpha: BoundaryCondition) -> Result<Self> {
        if h.tail().is_none() {
            return Err(Error::BadDomain("a half-line problem needs a tail".into()));
        }
        if alpha.order() != h.order() {
            return Err(Error::Shape(format!(
                "boundary condition of order {} for a system of order {}",
                alpha.order(),
                h.order()
            )));
        }
        Ok(Self { hamiltonian: h, alpha, beta: None })
    }

    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.hamiltonian
    }

    pub fn alpha(&self) -> &BoundaryCondition {
        &self.alpha
    }

    pub fn beta(&self) -> Option<&BoundaryCondition> {
        self.beta.as_ref()
    }

    pub fn n(&self) -> usize {
        self.hamiltonian.n()
    }

    pub fn is_half_line(&self) -> bool {
        self.beta.is_none()
    }

    /// A projection tail `β*β` on `(L, ∞)` is the regular problem on `(0, L)`
    /// with boundary condition `β` at `L`.
    pub fn as_regular(&self) -> Option<SpectralProblem> {
        match (&self.beta, self.hamiltonian.tail()) {
            (Some(_), _) => Some(self.clone()),
            (None, Some(Tail::Projection(beta))) if !self.hamiltonian.segments().is_empty() => Some(SpectralProblem {
                hamiltonian: self.hamiltonian.without_tail(),
                alpha: self.alpha.clone(),
                beta: Some(beta.clone()),
            }),
            _ => None,
        }
    }

    /// `Γ(z)` with `Γ f_m(L, z) = 0` at the end of the finite part: `β` for a
    /// regular problem, the annihilator of the admissible subspace for a tail.
    pub fn right_annihilator(&self, z: C64) -> Result<CMatrix> {
        match (&self.beta, self.hamiltonian.tail()) {
            (Some(beta), _) => Ok(beta.matrix().clone()),
            (None, Some(tail)) => {
                if z.im == 0.0 {
                    return Err(Error::RealZ);
                }
                tail_annihilator(tail, z)
            }
            (None, None) => unreachable!("constructors guarantee a right datum"),
        }
    }

    /// Solve for `m(z)` and keep the fundamental solution.
    pub fn m_evaluation(&self, z: C64) -> Result<MEvaluation<'_>> {
        let gamma = self.right_annihilator(z)?;
        let solution = fundamental_solution(&self.hamiltonian, &self.alpha, z)?;
        let m = solve_m(&gamma, solution.at_end(), z)?;
        Ok(MEvaluation { solution, m })
    }

    /// The Weyl function `m(z)`.
    pub fn m(&self, z: C64) -> Result<CMatrix> {
        Ok(self.m_evaluation(z)?.m)
    }

    /// `‖βu(b, t)‖`-relative smallest singular value, the eigenvalue indicator.
    pub(crate) fn boundary_matrix(&self, t: f64) -> Result<(CMatrix, f64)> {
        let regular = self.as_regular().ok_or_else(|| {
            Error::Input("eigenvalues need a regular problem or a projection tail".into())
        })?;
        let beta = regular.beta.as_ref().expect("regular").matrix().clone();
        let sol = fundamental_solution(&regular.hamiltonian, &regular.alpha, C64::new(t, 0.0))?;
        let n = regular.n();
        let u = sol.at_end().columns(0, n).into_owned();
        let scale = singular_values(&u)[0];
        Ok((beta * u, scale))
    }
}

/// `m = −(Γu)⁻¹ Γv`, rejecting `Γu` whose smallest singular value is below
/// `AT_EIGENVALUE_TOL·‖Γ‖·‖u‖`.
fn solve_m(gamma: &CMatrix, w: &CMatrix, z: C64) -> Result<CMatrix> {
    let n = gamma.nrows();
    let u = w.columns(0, n);
    let gu = gamma * u;
    let gv = gamma * w.columns(n, n);
    let scale = singular_values(gamma)[0] * singular_values(&u.into_owned())[0];
    let low = *singular_values(&gu).last().expect("square");
    if !(low >= AT_EIGENVALUE_TOL * scale) || scale == 0.0 {
        return Err(Error::AtEigenvalue { re: z.re, im: z.im });
    }
    let sol = gu.lu().solve(&gv).ok_or(Error::AtEigenvalue { re: z.re, im: z.im })?;
    Ok(-sol)
}

/// Weyl function of a regular problem, `−(βu(b,z))⁻¹ βv(b,z)`.
pub fn m_regular(h: &Hamiltonian, alpha: &BoundaryCondition, beta: &BoundaryCondition, z: C64) -> Result<CMatrix> {
    SpectralProblem::regular(h.clone(), alpha.clone(), beta.clone())?.m(z)
}

/// Weyl function of a half-line problem, `−(Γu(L,z))⁻¹ Γv(L,z)`.
pub fn m_halfline(h: &Hamiltonian, alpha: &BoundaryCondition, z: C64) -> Result<CMatrix> {
    SpectralProblem::half_line(h.clone(), alpha.clone())?.m(z)
}

/// Annihilator `Γ(z) ∈ C^{n×2n}` of the solutions at the tail start that
/// stay square integrable on the tail.
pub fn tail_annihilator(tail: &Tail, z: C64) -> Result<CMatrix> {
    match tail {
        Tail::Projection(beta) => Ok(beta.matrix().clone()),
        Tail::DefiniteConstant(h) => {
            let n = h.matrix().nrows() / 2;
            let a = symplectic(n) * h.matrix() * z;
            stable_annihilator(&a, n)
        }
        Tail::Schrodinger(piece) => Ok(schrodinger_annihilator(piece, z)),
        Tail::Composite { perm, blocks } => {
            let parts = blocks.iter().map(|b| tail_annihilator(b, z)).collect::<Result<Vec<_>>>()?;
            Ok(block_diagonal_rect(&parts) * perm.matrix().adjoint())
        }
    }
}

/// Row annihilating the decaying solution of `−y″ + V∞ y = zy` in canonical
/// coordinates at the start of the piece.
fn schrodinger_annihilator(piece: &SchrodingerPiece, z: C64) -> CMatrix {
    let mut kappa = (z - piece.potential).sqrt();
    if kappa.im < 0.0 {
        kappa = -kappa;
    }
    // decays as y → +∞ with (y′, y) ∝ (iκ, 1), or as y → −∞ with (−iκ, 1)
    let i = C64::new(0.0, 1.0);
    let row = if piece.reflected { [C64::new(1.0, 0.0), i * kappa] } else { [C64::new(1.0, 0.0), -i * kappa] };
    let t = piece.start_transfer;
    let mut g = CMatrix::from_fn(1, 2, |_, j| row[0] * t[(0, j)] + row[1] * t[(1, j)]);
    if piece.reflected {
        g[(0, 0)] = -g[(0, 0)];
    }
    let scale = g.norm();
    g / C64::new(scale, 0.0)
}

/// Matrix sign function by scaled Newton iteration.
pub fn matrix_sign(a: &CMatrix) -> Result<CMatrix> {
    let d = a.nrows();
    let mut s = a.clone();
    for _ in 0..100 {
        let inv = s
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::DichotomyFailure("eigenvalue on the imaginary axis".into()))?;
        let det = s.determinant().norm();
        let mu = if det.is_finite() && det > 0.0 { det.powf(-1.0 / d as f64) } else { 1.0 };
        let next = (&s * C64::new(mu, 0.0) + inv * C64::new(1.0 / mu, 0.0)) * C64::new(0.5, 0.0);
        let change = crate::algebra::norm(&(&next - &s));
        let size = crate::algebra::norm(&next);
        s = next;
        if !size.is_finite() {
            break;
        }
        if change <= 1e-13 * size {
            return Ok(s);
        }
    }
    Err(Error::DichotomyFailure("sign iteration did not converge".into()))
}

/// Annihilator of the stable invariant subspace of `A`, which must have
/// dimension `n`.
fn stable_annihilator(a: &CMatrix, n: usize) -> Result<CMatrix> {
    let s = matrix_sign(a)?;
    let d = a.nrows();
    let pi = (identity(d) - s) * C64::new(0.5, 0.0);
    let (sv, _) = svd_full(&pi);
    let rank = sv.iter().filter(|&&x| x > 1e-6).count();
    if rank != n {
        return Err(Error::DichotomyFailure(format!("stable subspace has dimension {rank}, expected {n}")));
    }
    let basis = kernel_basis(&pi.adjoint(), 1e-8);
    if basis.len() != n {
        return Err(Error::DichotomyFailure("could not split the tail dynamics".into()));
    }
    Ok(CMatrix::from_fn(n, d, |i, j| basis[i][j].conj()))
}
