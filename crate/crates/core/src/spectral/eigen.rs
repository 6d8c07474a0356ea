use super::SpectralProblem;
use crate::algebra::{inverse_sqrt_hermitian, svd_full, CMatrix, CVector, C64};
use crate::error::{Error, Result, Warning};
use crate::evolve::{fundamental_solution, gram_of};

pub const MIN_SCAN_POINTS: usize = 1000;
pub const POINTS_PER_ROTATION: f64 = 40.0;
pub const GOLDEN_ITERATIONS: usize = 200;
pub const REFINE_TARGET: f64 = 1e-11;
pub const ACCEPT_TOL: f64 = 1e-9;
pub const MULTIPLICITY_TOL: f64 = 1e-6;

/// One eigenvalue with its orthonormalized kernel coefficients and weight.
#[derive(Clone, Debug)]
pub struct SpectralPoint {
    pub t: f64,
    pub multiplicity: usize,
    /// `c_jk`, orthonormal for `∫u*Hu`.
    pub coefficients: Vec<CVector>,
    /// `ρ_j = Σ_k c_jk c_jk*`.
    pub weight: CMatrix,
}

#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub window: (f64, f64),
    pub points: Vec<SpectralPoint>,
    pub warnings: Vec<Warning>,
    pub scan_points: usize,
}

impl SpectralDecomposition {
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t).collect()
    }
}

/// Scan options. `points` overrides the default grid size.
#[derive(Clone, Copy, Debug, Default)]
pub struct EigenScan {
    pub points: Option<usize>,
}

struct Indicator<'a> {
    problem: &'a SpectralProblem,
}

impl Indicator<'_> {
    /// `σ_min(βu(b,t)) / σ_max(u(b,t))`.
    fn relative(&self, t: f64) -> Result<f64> {
        let (bu, scale) = self.problem.boundary_matrix(t)?;
        let (sv, _) = svd_full(&bu);
        Ok(sv.last().copied().unwrap_or(0.0) / scale)
    }
}

/// Eigenvalues of a regular problem in a closed window, with multiplicities
/// and weights.
pub fn eigenvalues(problem: &SpectralProblem, window: (f64, f64)) -> Result<SpectralDecomposition> {
    eigenvalues_with(problem, window, EigenScan::default())
}

pub fn eigenvalues_with(problem: &SpectralProblem, window: (f64, f64), scan: EigenScan) -> Result<SpectralDecomposition> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Input(format!("bad window ({lo}, {hi})")));
    }
    let regular = problem
        .as_regular()
        .ok_or_else(|| Error::Input("eigenvalues need a regular problem or a projection tail".into()))?;
    let h = regular.hamiltonian();
    if !h.is_definite()? {
        return Err(Error::NotDefinite("∫H is singular; the problem is theta-form or degenerate".into()));
    }
    let rate = h.trace_integral()?;
    let len = hi - lo;
    let default_points = MIN_SCAN_POINTS.max((POINTS_PER_ROTATION * len * rate / std::f64::consts::PI).ceil() as usize);
    let count = scan.points.unwrap_or(default_points).max(3);
    let spacing = len / (count - 1) as f64;

    let indicator = Indicator { problem: &regular };
    let grid: Vec<f64> = (0..count).map(|i| if i + 1 == count { hi } else { lo + spacing * i as f64 }).collect();
    let values = grid.iter().map(|&t| indicator.relative(t)).collect::<Result<Vec<_>>>()?;

    let mut warnings = Vec::new();
    if spacing * rate > 0.5 {
        warnings.push(Warning::MissedRootRisk {
            near: 0.5 * (lo + hi),
            detail: format!("grid spacing {spacing:.3e} against rotation rate {rate:.3e}"),
        });
    }

    let mut roots: Vec<f64> = Vec::new();
    for i in 0..count {
        let left = if i == 0 { f64::INFINITY } else { values[i - 1] };
        let right = if i + 1 == count { f64::INFINITY } else { values[i + 1] };
        if !(values[i] <= left && values[i] <= right) {
            continue;
        }
        let a = grid[i.saturating_sub(1)];
        let b = grid[(i + 1).min(count - 1)];
        let (t, sigma) = golden_section(&indicator, a, b)?;
        if sigma < ACCEPT_TOL && !roots.iter().any(|&r| (r - t).abs() <= 1e-7 * t.abs().max(1.0)) {
            roots.push(t);
        }
    }
    roots.sort_by(f64::total_cmp);

    let points = roots.into_iter().map(|t| spectral_point(&regular, t)).collect::<Result<Vec<_>>>()?;
    Ok(SpectralDecomposition { window, points, warnings, scan_points: count })
}

fn golden_section(ind: &Indicator<'_>, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = ind.relative(c)?;
    let mut fd = ind.relative(d)?;
    for _ in 0..GOLDEN_ITERATIONS {
        if fc.min(fd) < REFINE_TARGET && (b - a) <= 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(1.0) {
            break;
        }
        if (b - a) <= f64::EPSILON * a.abs().max(b.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = ind.relative(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = ind.relative(d)?;
        }
    }
    Ok(if fc < fd { (c, fc) } else { (d, fd) })
}

/// Kernel of `βu(b,t)`, orthonormalized against `∫u*Hu`.
fn spectral_point(problem: &SpectralProblem, t: f64) -> Result<SpectralPoint> {
    let (bu, scale) = problem.boundary_matrix(t)?;
    let n = problem.n();
    let (sv, v) = svd_full(&bu);
    let multiplicity = sv.iter().filter(|&&s| s < MULTIPLICITY_TOL * scale).count().max(1);
    let k = v.columns(n - multiplicity, multiplicity).into_owned();
    let gram = u_gram(problem, t)?;
    let reduced = k.adjoint() * &gram * &k;
    let half = inverse_sqrt_hermitian(&crate::algebra::hermitian_part(&reduced))?;
    let c = &k * half;
    let weight = &c * c.adjoint();
    let coefficients = (0..multiplicity).map(|j| c.column(j).into_owned()).collect();
    Ok(SpectralPoint { t, multiplicity, coefficients, weight })
}

/// `∫u(x,t)* H u(x,t)` over the finite part.
pub(crate) fn u_gram(problem: &SpectralProblem, t: f64) -> Result<CMatrix> {
    let h = problem.hamiltonian();
    let z = C64::new(t, 0.0);
    let sol = fundamental_solution(h, problem.alpha(), z)?;
    gram_of(h, h.start(), h.end(), z, z, |x| sol.u(x), |x| sol.u(x))
}

/// `(Uh)(t) = ∫u(x,t)* H(x) h(x) dx` over the finite part.
pub fn transform_u<F>(problem: &SpectralProblem, h: F, t: f64) -> Result<CVector>
where
    F: Fn(f64) -> Result<CVector>,
{
    let ham = problem.hamiltonian();
    let n = problem.n();
    let z = C64::new(t, 0.0);
    let sol = fundamental_solution(ham, problem.alpha(), z)?;
    let column = |x: f64| -> Result<CMatrix> {
        let v = h(x)?;
        if v.len() != 2 * n {
            return Err(Error::Shape(format!("h has {} components, expected {}", v.len(), 2 * n)));
        }
        Ok(CMatrix::from_column_slice(2 * n, 1, v.as_slice()))
    };
    let out = gram_of(ham, ham.start(), ham.end(), z, z, |x| sol.u(x), column)?;
    Ok(out.column(0).into_owned())
}
