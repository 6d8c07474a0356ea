//! Transfer-matrix propagation of `W(x, z) = (u v)` for `JW′ = −zHW` and
//! weighted Gram integrals `∫ W(x,z)* H W(x,w)`.
//!
//! Solutions satisfy `u′ = zJHu` since `J⁻¹ = −J`.

use crate::algebra::{block_diagonal, mat_exp, symplectic, BoundaryCondition, CMatrix, C64};
use crate::error::{Error, Result};
use crate::hamiltonian::{Hamiltonian, Segment, SegmentKind};
use crate::quadrature::integrate_matrix;

fn check_finite(m: CMatrix) -> Result<CMatrix> {
    if m.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        Ok(m)
    } else {
        Err(Error::Overflow)
    }
}

/// `Φ` with `u(s1) = Φ u(s0)` for the dynamics `kind` (local parameters).
pub fn kind_transfer(kind: &SegmentKind, z: C64, s0: f64, s1: f64) -> Result<CMatrix> {
    match kind {
        SegmentKind::Constant(m) => {
            let n = m.nrows() / 2;
            mat_exp(&(symplectic(n) * m * (z * (s1 - s0))))
        }
        SegmentKind::Schrodinger(p) => check_finite(p.transfer(z, s0, s1)),
        SegmentKind::Composite { perm, blocks } => {
            let parts = blocks.iter().map(|b| kind_transfer(b, z, s0, s1)).collect::<Result<Vec<_>>>()?;
            Ok(perm.conjugate(&block_diagonal(&parts)))
        }
    }
}

/// Transfer across the first `delta` of a segment.
pub fn segment_transfer(seg: &Segment, z: C64, delta: f64) -> Result<CMatrix> {
    if !(0.0..=seg.length * (1.0 + 1e-14)).contains(&delta) {
        return Err(Error::OutOfDomain { x: delta, start: 0.0, end: seg.length });
    }
    kind_transfer(&seg.kind, z, 0.0, delta)
}

/// `W(x, z)` at the breakpoints, started from `W(a) = (−Jα*, α*)` or from an
/// arbitrary initial matrix.
#[derive(Clone, Debug)]
pub struct FundamentalSolution<'a> {
    hamiltonian: &'a Hamiltonian,
    z: C64,
    breakpoints: Vec<f64>,
    values: Vec<CMatrix>,
}

/// `(−Jα*, α*)`.
pub fn initial_value(alpha: &BoundaryCondition) -> CMatrix {
    let n = alpha.n();
    let a_star = alpha.matrix().adjoint();
    let u0 = -(symplectic(n) * &a_star);
    let mut w = CMatrix::zeros(2 * n, 2 * n);
    w.view_mut((0, 0), (2 * n, n)).copy_from(&u0);
    w.view_mut((0, n), (2 * n, n)).copy_from(&a_star);
    w
}

pub fn fundamental_solution<'a>(h: &'a Hamiltonian, alpha: &BoundaryCondition, z: C64) -> Result<FundamentalSolution<'a>> {
    if alpha.order() != h.order() {
        return Err(Error::Shape(format!(
            "boundary condition of order {} for a system of order {}",
            alpha.order(),
            h.order()
        )));
    }
    FundamentalSolution::from_initial(h, initial_value(alpha), z)
}

impl<'a> FundamentalSolution<'a> {
    pub fn from_initial(h: &'a Hamiltonian, w0: CMatrix, z: C64) -> Result<Self> {
        if w0.nrows() != h.order() {
            return Err(Error::Shape("initial value has the wrong number of rows".into()));
        }
        let breakpoints = h.breakpoints();
        let mut values = Vec::with_capacity(breakpoints.len());
        values.push(w0);
        for seg in h.segments() {
            let phi = segment_transfer(seg, z, seg.length)?;
            let next = check_finite(phi * values.last().expect("non-empty"))?;
            values.push(next);
        }
        Ok(Self { hamiltonian: h, z, breakpoints, values })
    }

    pub fn z(&self) -> C64 {
        self.z
    }

    pub fn hamiltonian(&self) -> &'a Hamiltonian {
        self.hamiltonian
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[CMatrix] {
        &self.values
    }

    /// `W` at the end of the finite part.
    pub fn at_end(&self) -> &CMatrix {
        self.values.last().expect("non-empty")
    }

    pub fn n(&self) -> usize {
        self.hamiltonian.n()
    }

    /// `W(x, z)` anywhere in the domain, including the tail.
    pub fn evaluate(&self, x: f64) -> Result<CMatrix> {
        let h = self.hamiltonian;
        if let Some((i, s)) = h.locate(x) {
            if s == 0.0 {
                return Ok(self.values[i].clone());
            }
            let phi = kind_transfer(&h.segments()[i].kind, self.z, 0.0, s)?;
            return check_finite(phi * &self.values[i]);
        }
        match h.tail() {
            Some(t) if x >= h.end() && x.is_finite() => {
                let phi = kind_transfer(&t.dynamics(), self.z, 0.0, x - h.end())?;
                check_finite(phi * self.at_end())
            }
            _ => Err(h.domain_error(x)),
        }
    }

    /// First `n` columns `u(x, z)`.
    pub fn u(&self, x: f64) -> Result<CMatrix> {
        let n = self.n();
        Ok(self.evaluate(x)?.columns(0, n).into_owned())
    }

    /// Last `n` columns `v(x, z)`.
    pub fn v(&self, x: f64) -> Result<CMatrix> {
        let n = self.n();
        Ok(self.evaluate(x)?.columns(n, n).into_owned())
    }
}

/// `W(x, z)`.
pub fn evaluate_solution(f: &FundamentalSolution<'_>, x: f64) -> Result<CMatrix> {
    f.evaluate(x)
}

/// `∫_c^d W_F(x)* H(x) W_G(x) dx` over a sub-interval of the domain, by
/// per-segment Gauss–Legendre quadrature with order doubling.
pub fn weighted_gram(
    h: &Hamiltonian,
    f: &FundamentalSolution<'_>,
    g: &FundamentalSolution<'_>,
    c: f64,
    d: f64,
) -> Result<CMatrix> {
    gram_of(h, c, d, f.z, g.z, |x| f.evaluate(x), |x| g.evaluate(x))
}

/// `∫_c^d A(x)* H(x) B(x)` (tail included when present) for solution-like integrands `A`, `B` at spectral
/// parameters `za`, `zb` (used for oscillation-based subdivision).
pub fn gram_of<FA, FB>(h: &Hamiltonian, c: f64, d: f64, za: C64, zb: C64, a: FA, b: FB) -> Result<CMatrix>
where
    FA: Fn(f64) -> Result<CMatrix>,
    FB: Fn(f64) -> Result<CMatrix>,
{
    let upper = if h.tail().is_some() { f64::INFINITY } else { h.end() * (1.0 + 1e-14) + 1e-14 };
    if c > d || c < h.start() || d > upper || !d.is_finite() {
        return Err(Error::OutOfDomain { x: if c < h.start() { c } else { d }, start: h.start(), end: h.end() });
    }
    let probe_a = a(c)?;
    let probe_b = b(c)?;
    let mut total = CMatrix::zeros(probe_a.ncols(), probe_b.ncols());
    if c == d {
        return Ok(total);
    }
    let pts = h.breakpoints();
    for (i, seg) in h.segments().iter().enumerate() {
        let (lo, hi) = (pts[i].max(c), pts[i + 1].min(d));
        if hi <= lo {
            continue;
        }
        let osc = seg.kind.oscillation(za, hi - lo).max(seg.kind.oscillation(zb, hi - lo));
        let pieces = 1 + (osc / 4.0).ceil() as usize;
        let base = pts[i];
        total += integrate_matrix(lo, hi, pieces, |x| {
            let hx = seg.kind.value_at(x - base);
            Ok(a(x)?.adjoint() * hx * b(x)?)
        })?;
    }
    if let Some(tail) = h.tail() {
        let end = h.end();
        let lo = c.max(end);
        if d > lo {
            let kind = tail.dynamics();
            let osc = kind.oscillation(za, d - lo).max(kind.oscillation(zb, d - lo));
            let pieces = 1 + (osc / 4.0).ceil() as usize;
            total += integrate_matrix(lo, d, pieces, |x| {
                let hx = kind.value_at(x - end);
                Ok(a(x)?.adjoint() * hx * b(x)?)
            })?;
        }
    }
    Ok(total)
}

/// `(W_F(d)* J W_G(d) − W_F(c)* J W_G(c)) / (z̄ − w)`, the Lagrange identity
/// route to the same Gram matrix. Requires `z̄ ≠ w`.
pub fn lagrange_gram(f: &FundamentalSolution<'_>, g: &FundamentalSolution<'_>, c: f64, d: f64) -> Result<CMatrix> {
    let denom = f.z.conj() - g.z;
    if denom.norm() == 0.0 {
        return Err(Error::Input("Lagrange route needs conj(z) ≠ w".into()));
    }
    let j = symplectic(f.n());
    let (fd, gd, fc, gc) = (f.evaluate(d)?, g.evaluate(d)?, f.evaluate(c)?, g.evaluate(c)?);
    Ok((fd.adjoint() * &j * gd - fc.adjoint() * &j * gc) / denom)
}

/// `max ‖W(x,t)* J W(x,t) − W(a)* J W(a)‖` over breakpoints; with the
/// standard initial value `W(a)* J W(a) = J`.
pub fn symplectic_defect(f: &FundamentalSolution<'_>) -> f64 {
    let j = symplectic(f.n());
    let w0 = &f.values[0];
    let reference = w0.adjoint() * &j * w0;
    f.values
        .iter()
        .map(|w| crate::algebra::norm(&(w.adjoint() * &j * w - &reference)))
        .fold(0.0, f64::max)
}
