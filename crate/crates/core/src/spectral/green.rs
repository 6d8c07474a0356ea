use super::{MEvaluation, SpectralProblem};
use crate::algebra::{symplectic, CMatrix, CVector, C64};
use crate::error::{Error, Result};
use crate::evolve::gram_of;

/// `G(x, y, z)` built from `u` and `f_m` at `z` and at `z̄`.
pub struct GreenKernel<'a> {
    problem: &'a SpectralProblem,
    z: C64,
    at_z: MEvaluation<'a>,
    at_conj: MEvaluation<'a>,
}

impl<'a> GreenKernel<'a> {
    pub fn new(problem: &'a SpectralProblem, z: C64) -> Result<Self> {
        if z.im == 0.0 {
            return Err(Error::RealZ);
        }
        let at_z = problem.m_evaluation(z)?;
        let at_conj = problem.m_evaluation(z.conj())?;
        Ok(Self { problem, z, at_z, at_conj })
    }

    pub fn z(&self) -> C64 {
        self.z
    }

    pub fn problem(&self) -> &'a SpectralProblem {
        self.problem
    }

    pub fn m(&self) -> &CMatrix {
        &self.at_z.m
    }

    pub fn u(&self, x: f64) -> Result<CMatrix> {
        self.at_z.u(x)
    }

    pub fn f_m(&self, x: f64) -> Result<CMatrix> {
        self.at_z.f_m(x)
    }

    pub fn u_conj(&self, x: f64) -> Result<CMatrix> {
        self.at_conj.u(x)
    }

    pub fn f_m_conj(&self, x: f64) -> Result<CMatrix> {
        self.at_conj.f_m(x)
    }

    /// `u(x,z) f_m(y,z̄)*` for `x ≤ y`, `f_m(x,z) u(y,z̄)*` for `x > y`.
    pub fn eval(&self, x: f64, y: f64) -> Result<CMatrix> {
        if x <= y {
            Ok(self.u(x)? * self.f_m_conj(y)?.adjoint())
        } else {
            Ok(self.f_m(x)? * self.u_conj(y)?.adjoint())
        }
    }

    /// `f_m(x,z) u(x,z̄)* − u(x,z) f_m(x,z̄)*`, which equals `J`.
    pub fn jump(&self, x: f64) -> Result<CMatrix> {
        Ok(self.f_m(x)? * self.u_conj(x)?.adjoint() - self.u(x)? * self.f_m_conj(x)?.adjoint())
    }

    pub fn jump_defect(&self, x: f64) -> Result<f64> {
        let n = self.problem.n();
        Ok(crate::algebra::norm(&(self.jump(x)? - symplectic(n))))
    }
}

pub fn green(problem: &SpectralProblem, z: C64, x: f64, y: f64) -> Result<CMatrix> {
    GreenKernel::new(problem, z)?.eval(x, y)
}

/// `g = (S − z)⁻¹h` with
/// `g(x) = f_m(x,z) ∫_a^x u(y,z̄)*Hh + u(x,z) ∫_x^b f_m(y,z̄)*Hh`.
/// On a half line `h` is taken to vanish on the tail.
pub struct ResolventSolution<'a, F> {
    kernel: GreenKernel<'a>,
    h: F,
    breakpoints: Vec<f64>,
    prefix: Vec<CMatrix>,
    suffix: Vec<CMatrix>,
}

/// Apply the resolvent to `h`, a `2n`-vector valued function on the finite part.
pub fn apply_resolvent<'a, F>(problem: &'a SpectralProblem, z: C64, h: F) -> Result<ResolventSolution<'a, F>>
where
    F: Fn(f64) -> Result<CVector>,
{
    let kernel = GreenKernel::new(problem, z)?;
    let ham = problem.hamiltonian();
    let breakpoints = ham.breakpoints();
    let count = breakpoints.len();
    let n = problem.n();
    let column = |x: f64| -> Result<CMatrix> {
        let v = h(x)?;
        if v.len() != 2 * n {
            return Err(Error::Shape(format!("h has {} components, expected {}", v.len(), 2 * n)));
        }
        Ok(CMatrix::from_column_slice(2 * n, 1, v.as_slice()))
    };
    let mut prefix = vec![CMatrix::zeros(n, 1); count];
    let mut pieces_f = vec![CMatrix::zeros(n, 1); count];
    for i in 0..count.saturating_sub(1) {
        let (c, d) = (breakpoints[i], breakpoints[i + 1]);
        let zb = z.conj();
        let pu = gram_of(ham, c, d, zb, zb, |x| kernel.u_conj(x), column)?;
        prefix[i + 1] = &prefix[i] + pu;
        pieces_f[i] = gram_of(ham, c, d, zb, zb, |x| kernel.f_m_conj(x), column)?;
    }
    let mut suffix = vec![CMatrix::zeros(n, 1); count];
    for i in (0..count.saturating_sub(1)).rev() {
        suffix[i] = &suffix[i + 1] + &pieces_f[i];
    }
    Ok(ResolventSolution { kernel, h, breakpoints, prefix, suffix })
}

impl<'a, F> ResolventSolution<'a, F>
where
    F: Fn(f64) -> Result<CVector>,
{
    pub fn kernel(&self) -> &GreenKernel<'a> {
        &self.kernel
    }

    /// `g(x)`.
    pub fn evaluate(&self, x: f64) -> Result<CVector> {
        let problem = self.kernel.problem;
        let ham = problem.hamiltonian();
        let n = problem.n();
        let last = self.breakpoints.len() - 1;
        let (before, after) = match ham.locate(x) {
            Some((i, s)) => {
                let c = self.breakpoints[i];
                let d = self.breakpoints[i + 1];
                let zb = self.kernel.z.conj();
                let column = |y: f64| -> Result<CMatrix> {
                    let v = (self.h)(y)?;
                    Ok(CMatrix::from_column_slice(2 * n, 1, v.as_slice()))
                };
                let head = if s == 0.0 {
                    CMatrix::zeros(n, 1)
                } else {
                    gram_of(ham, c, x, zb, zb, |y| self.kernel.u_conj(y), column)?
                };
                let rest = if x >= d {
                    CMatrix::zeros(n, 1)
                } else {
                    gram_of(ham, x, d, zb, zb, |y| self.kernel.f_m_conj(y), column)?
                };
                (&self.prefix[i] + head, &self.suffix[i + 1] + rest)
            }
            None if ham.tail().is_some() && x >= ham.end() && x.is_finite() => {
                (self.prefix[last].clone(), CMatrix::zeros(n, 1))
            }
            None => return Err(ham.domain_error(x)),
        };
        let g = self.kernel.f_m(x)? * before + self.kernel.u(x)? * after;
        Ok(g.column(0).into_owned())
    }
}
