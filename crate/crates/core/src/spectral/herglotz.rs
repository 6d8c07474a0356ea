use super::{SpectralDecomposition, SpectralProblem};
use crate::algebra::{imaginary_part, hermitian_part, norm, CMatrix, C64};
use crate::error::{Error, Result};
use crate::quadrature::integrate_adaptive_matrix;

/// Estimate of `Σ ρ_j/(1+t_j²)` over atoms outside the window.
#[derive(Clone, Debug)]
pub struct TailEstimate {
    pub lower: CMatrix,
    pub upper: CMatrix,
    /// Bound on the error of `lower + upper`.
    pub bound: f64,
}

/// `m(z) = A + Bz + Σ ρ_j (1/(t_j − z) − t_j/(1+t_j²))` restricted to the
/// atoms found in a window.
#[derive(Clone, Debug)]
pub struct HerglotzData {
    pub a: CMatrix,
    pub b: CMatrix,
    pub atoms: Vec<(f64, CMatrix)>,
    pub window: (f64, f64),
    pub tail: TailEstimate,
}

impl HerglotzData {
    /// Evaluate the truncated representation at `z`.
    pub fn evaluate(&self, z: C64) -> CMatrix {
        let mut out = &self.a + &self.b * z;
        for (t, rho) in &self.atoms {
            let k = C64::new(1.0, 0.0) / (C64::new(*t, 0.0) - z) - C64::new(t / (1.0 + t * t), 0.0);
            out += rho * k;
        }
        out
    }
}

struct SideEstimate {
    value: CMatrix,
    bound: f64,
}

/// Density of atoms beyond `edge` extrapolated from those in the outer part
/// of `[0, edge]` (measured from the origin along `sign`).
fn side_tail(atoms: &[(f64, CMatrix)], edge: f64, fraction: f64, n: usize) -> Option<(CMatrix, f64, f64)> {
    let inner = edge * (1.0 - fraction);
    let outer: Vec<&(f64, CMatrix)> = atoms.iter().filter(|(t, _)| *t > inner && *t <= edge).collect();
    if outer.is_empty() {
        return None;
    }
    let width = edge - inner;
    let mut mass = CMatrix::zeros(n, n);
    for (_, rho) in &outer {
        mass += rho;
    }
    let density = mass / C64::new(width, 0.0);
    let spacing = width / outer.len() as f64;
    let last = outer.iter().map(|(t, _)| *t).fold(f64::NEG_INFINITY, f64::max);
    let effective = last + 0.5 * spacing;
    let weight = 0.5 * std::f64::consts::PI - effective.atan();
    Some((density * C64::new(weight, 0.0), spacing, effective))
}

fn one_side(atoms: &[(f64, CMatrix)], edge: f64, n: usize) -> SideEstimate {
    let zero = || SideEstimate { value: CMatrix::zeros(n, n), bound: 0.0 };
    if edge <= 0.0 {
        return zero();
    }
    let Some((half, spacing, effective)) = side_tail(atoms, edge, 0.5, n) else {
        return zero();
    };
    let quarter = side_tail(atoms, edge, 0.25, n).map(|(q, _, _)| q).unwrap_or_else(|| half.clone());
    let density_norm = norm(&half) / (0.5 * std::f64::consts::PI - effective.atan()).max(f64::MIN_POSITIVE);
    let midpoint = density_norm * spacing / (1.0 + effective * effective);
    let bound = norm(&(&half - &quarter)) + midpoint;
    SideEstimate { value: half, bound }
}

/// `A = Re m(i)`, `B = Im m(i) − Σρ_j/(1+t_j²) − tail`.
pub fn herglotz_decompose(problem: &SpectralProblem, decomposition: &SpectralDecomposition, tol: f64) -> Result<HerglotzData> {
    let n = problem.n();
    let m = problem.m(C64::new(0.0, 1.0))?;
    let a = hermitian_part(&m);
    let mut b = imaginary_part(&m);
    let atoms: Vec<(f64, CMatrix)> = decomposition.points.iter().map(|p| (p.t, p.weight.clone())).collect();
    for (t, rho) in &atoms {
        b -= rho * C64::new(1.0 / (1.0 + t * t), 0.0);
    }
    let (lo, hi) = decomposition.window;
    let upper = one_side(&atoms, hi, n);
    let mirrored: Vec<(f64, CMatrix)> = atoms.iter().map(|(t, r)| (-t, r.clone())).collect();
    let lower = one_side(&mirrored, -lo, n);
    b -= &upper.value;
    b -= &lower.value;
    let bound = upper.bound + lower.bound;
    if bound > tol {
        return Err(Error::WindowTooSmall { bound, tol });
    }
    Ok(HerglotzData {
        a,
        b,
        atoms,
        window: decomposition.window,
        tail: TailEstimate { lower: lower.value, upper: upper.value, bound },
    })
}

/// `lim_{y→0⁺} −iy·m(t+iy)` by Neville extrapolation to `y = 0`.
pub fn weight_limit(problem: &SpectralProblem, t: f64, ys: &[f64]) -> Result<CMatrix> {
    if ys.is_empty() || ys.iter().any(|&y| !(y > 0.0)) {
        return Err(Error::Input("weight limit needs positive heights".into()));
    }
    let mut table: Vec<CMatrix> = ys
        .iter()
        .map(|&y| Ok(problem.m(C64::new(t, y))? * C64::new(0.0, -y)))
        .collect::<Result<_>>()?;
    let k = ys.len();
    for level in 1..k {
        for i in 0..k - level {
            let (yi, yj) = (ys[i], ys[i + level]);
            let next = (&table[i + 1] * C64::new(yi, 0.0) - &table[i] * C64::new(yj, 0.0)) / C64::new(yi - yj, 0.0);
            table[i] = next;
        }
    }
    Ok(table.swap_remove(0))
}

/// `(1/π) ∫_{t₁}^{t₂} Im m(t+iy) dt`.
pub fn stieltjes_inversion(problem: &SpectralProblem, t1: f64, t2: f64, y: f64) -> Result<CMatrix> {
    if !(y > 0.0) {
        return Err(Error::Input("stieltjes inversion needs y > 0".into()));
    }
    let f = |t: f64| -> Result<CMatrix> { Ok(imaginary_part(&problem.m(C64::new(t, y))?)) };
    let total = integrate_adaptive_matrix(t1, t2, 1e-10, &f)?;
    Ok(total / C64::new(std::f64::consts::PI, 0.0))
}
