//! Segmented coefficient matrices `H(x) ≥ 0` with closed-form segments,
//! optional tails, reflection/scaling and theta-form detection.

use nalgebra::Matrix2;

use crate::algebra::{
    block_diagonal, c64, hermitian_eigenvalues, norm, real, BoundaryCondition, CMatrix, HermitianPsd,
    Permutation, C64,
};
use crate::error::{Error, Result};

/// `(c, s)` with `c = cos √w`, `s = sin(√w)/√w` (entire in `w`).
fn cos_sinc(w: C64) -> (C64, C64) {
    if w.norm() < 1e-6 {
        // 8-term Taylor series in w = (ωΔ)²
        let mut c = C64::new(0.0, 0.0);
        let mut s = C64::new(0.0, 0.0);
        let mut term = C64::new(1.0, 0.0);
        let mut fact_even = 1.0;
        let mut fact_odd = 1.0;
        for k in 0..8 {
            if k > 0 {
                term *= -w;
                fact_even *= ((2 * k - 1) * (2 * k)) as f64;
                fact_odd *= ((2 * k) * (2 * k + 1)) as f64;
            }
            c += term / fact_even;
            s += term / fact_odd;
        }
        (c, s)
    } else {
        let root = w.sqrt();
        (root.cos(), root.sin() / root)
    }
}

/// Transfer of `(y′, y)` across a step `Δ` of `−y″ + V y = z y`, with
/// `ω² = z − V`: `[[cos ωΔ, −ω sin ωΔ], [sin(ωΔ)/ω, cos ωΔ]]`.
pub fn schrodinger_step(omega_sq: C64, delta: f64) -> Matrix2<C64> {
    let (c, s) = cos_sinc(omega_sq * delta * delta);
    Matrix2::new(c, -omega_sq * delta * s, s * delta, c)
}

/// The zero-energy step for constant potential `v`.
pub fn zero_energy_step(v: f64, delta: f64) -> Matrix2<f64> {
    schrodinger_step(c64(-v, 0.0), delta).map(|e| e.re)
}

/// Inverse of a unimodular 2×2 matrix `[[a, b], [c, d]] ↦ [[d, −b], [−c, a]]`.
pub fn unimodular_inverse<T: nalgebra::Scalar + std::ops::Neg<Output = T> + Copy>(m: &Matrix2<T>) -> Matrix2<T> {
    Matrix2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)])
}

pub fn to_cmatrix2(m: &Matrix2<C64>) -> CMatrix {
    CMatrix::from_fn(2, 2, |i, j| m[(i, j)])
}

pub fn real_to_cmatrix2(m: &Matrix2<f64>) -> CMatrix {
    CMatrix::from_fn(2, 2, |i, j| real(m[(i, j)]))
}

/// `N = diag(−1, 1)`.
pub fn reflect2(m: &CMatrix) -> CMatrix {
    let mut out = m.clone();
    out[(0, 1)] = -out[(0, 1)];
    out[(1, 0)] = -out[(1, 0)];
    out
}

/// A piece of a Schrödinger-induced coefficient `[[p², pq], [pq, q²]]` with
/// constant potential. The local parameter `s ∈ [0, len]` corresponds to the
/// edge coordinate `y(s) = y₀ ± r·s` (minus when reflected), the value is
/// `r·N^ε H(y(s)) N^ε` with `ε = 1` when reflected.
#[derive(Clone, Debug, PartialEq)]
pub struct SchrodingerPiece {
    pub potential: f64,
    /// `T(y₀) = [[p′, q′], [p, q]]` at the start of the piece.
    pub start_transfer: Matrix2<f64>,
    pub scale: f64,
    pub reflected: bool,
}

impl SchrodingerPiece {
    /// A piece at the left endpoint of an edge, where `T = I`.
    pub fn at_origin(potential: f64) -> Self {
        Self { potential, start_transfer: Matrix2::identity(), scale: 1.0, reflected: false }
    }

    fn direction(&self) -> f64 {
        if self.reflected {
            -self.scale
        } else {
            self.scale
        }
    }

    /// Edge coordinate displacement at local parameter `s`.
    pub fn displacement(&self, s: f64) -> f64 {
        self.direction() * s
    }

    /// `T(y(s))`.
    pub fn transfer_at(&self, s: f64) -> Matrix2<f64> {
        zero_energy_step(self.potential, self.displacement(s)) * self.start_transfer
    }

    pub fn value(&self, s: f64) -> CMatrix {
        let t = self.transfer_at(s);
        let (p, q) = (t[(1, 0)], t[(1, 1)]);
        let h = CMatrix::from_row_slice(
            2,
            2,
            &[real(p * p), real(p * q), real(p * q), real(q * q)],
        ) * real(self.scale);
        if self.reflected {
            reflect2(&h)
        } else {
            h
        }
    }

    /// Transfer of canonical solutions from `s0` to `s1`:
    /// `N^ε T(y₁)⁻¹ M_z(y₁ − y₀) T(y₀) N^ε`.
    pub fn transfer(&self, z: C64, s0: f64, s1: f64) -> CMatrix {
        let t0 = self.transfer_at(s0).map(real);
        let t1_inv = unimodular_inverse(&self.transfer_at(s1)).map(real);
        let step = schrodinger_step(z - self.potential, self.displacement(s1) - self.displacement(s0));
        let phi = to_cmatrix2(&(t1_inv * step * t0));
        if self.reflected {
            reflect2(&phi)
        } else {
            phi
        }
    }

    pub fn shifted(&self, s0: f64) -> Self {
        Self { start_transfer: self.transfer_at(s0), ..self.clone() }
    }

    /// Reverse a piece of local length `len` and multiply its scale by `rho`.
    fn reflected_scaled(&self, len: f64, rho: f64) -> Self {
        Self {
            potential: self.potential,
            start_transfer: self.transfer_at(len),
            scale: self.scale * rho,
            reflected: !self.reflected,
        }
    }

    fn scaled(&self, rho: f64) -> Self {
        Self { scale: self.scale * rho, ..self.clone() }
    }

    /// A rough count of radians swept over a local step `delta` at `z`.
    fn oscillation(&self, z: C64, delta: f64) -> f64 {
        ((z - self.potential).norm().sqrt() + self.potential.abs().sqrt()) * self.scale * delta
    }
}

/// Pointwise description of `H` on one segment.
#[derive(Clone, Debug, PartialEq)]
pub enum SegmentKind {
    Constant(CMatrix),
    Schrodinger(SchrodingerPiece),
    /// `H = C (⊕ blocks) C*` with `C (⊕J) C* = J`.
    Composite { perm: Permutation, blocks: Vec<SegmentKind> },
}

impl SegmentKind {
    pub fn order(&self) -> usize {
        match self {
            SegmentKind::Constant(m) => m.nrows(),
            SegmentKind::Schrodinger(_) => 2,
            SegmentKind::Composite { perm, .. } => perm.len(),
        }
    }

    /// `H` at local parameter `s`.
    pub fn value_at(&self, s: f64) -> CMatrix {
        match self {
            SegmentKind::Constant(m) => m.clone(),
            SegmentKind::Schrodinger(p) => p.value(s),
            SegmentKind::Composite { perm, blocks } => {
                let vals: Vec<CMatrix> = blocks.iter().map(|b| b.value_at(s)).collect();
                perm.conjugate(&block_diagonal(&vals))
            }
        }
    }

    /// The same dynamics restarted at local parameter `s0`.
    pub fn shifted(&self, s0: f64) -> SegmentKind {
        match self {
            SegmentKind::Constant(_) => self.clone(),
            SegmentKind::Schrodinger(p) => SegmentKind::Schrodinger(p.shifted(s0)),
            SegmentKind::Composite { perm, blocks } => SegmentKind::Composite {
                perm: perm.clone(),
                blocks: blocks.iter().map(|b| b.shifted(s0)).collect(),
            },
        }
    }

    /// Kind of `x ↦ ρ N H(ℓ − ρx) N` on `(0, ℓ/ρ)` for a segment of length `len = ℓ`.
    pub fn reflected_scaled(&self, len: f64, rho: f64) -> Result<SegmentKind> {
        Ok(match self {
            SegmentKind::Constant(m) => SegmentKind::Constant(reflect_big(m)? * real(rho)),
            SegmentKind::Schrodinger(p) => SegmentKind::Schrodinger(p.reflected_scaled(len, rho)),
            SegmentKind::Composite { perm, blocks } => {
                check_reflection_compatible(perm, blocks.iter().map(|b| b.order()))?;
                SegmentKind::Composite {
                    perm: perm.clone(),
                    blocks: blocks.iter().map(|b| b.reflected_scaled(len, rho)).collect::<Result<_>>()?,
                }
            }
        })
    }

    /// Kind of `x ↦ ρ H(ρx)`.
    pub fn scaled(&self, rho: f64) -> SegmentKind {
        match self {
            SegmentKind::Constant(m) => SegmentKind::Constant(m * real(rho)),
            SegmentKind::Schrodinger(p) => SegmentKind::Schrodinger(p.scaled(rho)),
            SegmentKind::Composite { perm, blocks } => SegmentKind::Composite {
                perm: perm.clone(),
                blocks: blocks.iter().map(|b| b.scaled(rho)).collect(),
            },
        }
    }

    /// Estimated phase swept by solutions at `z` over a local step.
    pub fn oscillation(&self, z: C64, delta: f64) -> f64 {
        match self {
            SegmentKind::Constant(m) => z.norm() * norm(m) * delta,
            SegmentKind::Schrodinger(p) => p.oscillation(z, delta),
            SegmentKind::Composite { blocks, .. } => {
                blocks.iter().map(|b| b.oscillation(z, delta)).fold(0.0, f64::max)
            }
        }
    }
}

/// `N H N` with `N = diag(−I, I)`.
fn reflect_big(m: &CMatrix) -> Result<CMatrix> {
    let d = m.nrows();
    if !d.is_multiple_of(2) {
        return Err(Error::Shape(format!("order {d} is odd")));
    }
    let n = d / 2;
    Ok(CMatrix::from_fn(d, d, |i, j| if (i < n) != (j < n) { -m[(i, j)] } else { m[(i, j)] }))
}

fn check_reflection_compatible(perm: &Permutation, orders: impl Iterator<Item = usize>) -> Result<()> {
    let mut diag = Vec::new();
    for o in orders {
        let h = o / 2;
        diag.extend(std::iter::repeat_n(-1.0, h));
        diag.extend(std::iter::repeat_n(1.0, h));
    }
    let d = diag.len();
    let n = d / 2;
    for (i, &sign) in diag.iter().enumerate() {
        let target = if perm.image(i) < n { -1.0 } else { 1.0 };
        if sign != target {
            return Err(Error::BadDomain("composite permutation does not commute with reflection".into()));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub length: f64,
    pub kind: SegmentKind,
}

impl Segment {
    pub fn new(length: f64, kind: SegmentKind) -> Self {
        Self { length, kind }
    }

    pub fn constant(length: f64, m: CMatrix) -> Self {
        Self { length, kind: SegmentKind::Constant(m) }
    }

    pub fn schrodinger(length: f64, piece: SchrodingerPiece) -> Self {
        Self { length, kind: SegmentKind::Schrodinger(piece) }
    }
}

/// Coefficient beyond the last finite breakpoint.
#[derive(Clone, Debug, PartialEq)]
pub enum Tail {
    /// `H = β*β` on `(L, ∞)`.
    Projection(BoundaryCondition),
    /// A constant definite `H∞` on `(L, ∞)`.
    DefiniteConstant(HermitianPsd),
    /// A Schrödinger piece with constant potential continued to infinity.
    Schrodinger(SchrodingerPiece),
    /// `H = C (⊕ blocks) C*` with `C (⊕J) C* = J`.
    Composite { perm: Permutation, blocks: Vec<Tail> },
}

impl Tail {
    pub fn order(&self) -> usize {
        match self {
            Tail::Projection(b) => b.order(),
            Tail::DefiniteConstant(h) => h.matrix().nrows(),
            Tail::Schrodinger(_) => 2,
            Tail::Composite { perm, .. } => perm.len(),
        }
    }

    /// Pointwise dynamics on the tail as a segment kind.
    pub fn dynamics(&self) -> SegmentKind {
        match self {
            Tail::Projection(b) => SegmentKind::Constant(b.projection()),
            Tail::DefiniteConstant(h) => SegmentKind::Constant(h.matrix().clone()),
            Tail::Schrodinger(p) => SegmentKind::Schrodinger(p.clone()),
            Tail::Composite { perm, blocks } => SegmentKind::Composite {
                perm: perm.clone(),
                blocks: blocks.iter().map(|b| b.dynamics()).collect(),
            },
        }
    }

    pub fn value_at(&self, s: f64) -> CMatrix {
        self.dynamics().value_at(s)
    }

    pub fn shifted(&self, s0: f64) -> Tail {
        match self {
            Tail::Schrodinger(p) => Tail::Schrodinger(p.shifted(s0)),
            Tail::Composite { perm, blocks } => Tail::Composite {
                perm: perm.clone(),
                blocks: blocks.iter().map(|b| b.shifted(s0)).collect(),
            },
            other => other.clone(),
        }
    }

    fn scaled(&self, rho: f64) -> Result<Tail> {
        Ok(match self {
            Tail::Projection(_) => {
                if (rho - 1.0).abs() > 0.0 {
                    return Err(Error::BadDomain("a projection tail cannot be rescaled".into()));
                }
                self.clone()
            }
            Tail::DefiniteConstant(h) => Tail::DefiniteConstant(HermitianPsd::new(h.matrix() * real(rho), 1e-12)?),
            Tail::Schrodinger(p) => Tail::Schrodinger(p.scaled(rho)),
            Tail::Composite { perm, blocks } => Tail::Composite {
                perm: perm.clone(),
                blocks: blocks.iter().map(|b| b.scaled(rho)).collect::<Result<_>>()?,
            },
        })
    }
}

/// `H` on `[start, start + Σ lengths]`, optionally continued by a tail.
#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian {
    start: f64,
    segments: Vec<Segment>,
    tail: Option<Tail>,
    order: usize,
}

fn check_psd(m: &CMatrix, what: &str) -> Result<()> {
    let scale = norm(m).max(1.0);
    if norm(&(m - m.adjoint())) > 1e-10 * scale {
        return Err(Error::NotPositive(format!("{what} is not Hermitian")));
    }
    let low = hermitian_eigenvalues(m)[0];
    if low < -1e-10 * scale {
        return Err(Error::NotPositive(format!("{what} has eigenvalue {low:.3e}")));
    }
    Ok(())
}

fn check_kind(kind: &SegmentKind, order: usize) -> Result<()> {
    if kind.order() != order {
        return Err(Error::Shape(format!("segment of order {} in a system of order {order}", kind.order())));
    }
    match kind {
        SegmentKind::Constant(m) => {
            if !m.is_square() {
                return Err(Error::Shape("segment matrix must be square".into()));
            }
            check_psd(m, "segment matrix")
        }
        SegmentKind::Schrodinger(p) => {
            if !(p.scale > 0.0) || !p.potential.is_finite() {
                return Err(Error::Input("Schrödinger piece needs positive scale and finite potential".into()));
            }
            Ok(())
        }
        SegmentKind::Composite { perm, blocks } => {
            if !perm.is_bijection() {
                return Err(Error::Shape("composite index map is not a permutation".into()));
            }
            let total: usize = blocks.iter().map(|b| b.order()).sum();
            if total != order {
                return Err(Error::Shape(format!("composite blocks sum to order {total}, expected {order}")));
            }
            for b in blocks {
                check_kind(b, b.order())?;
            }
            check_symplectic_perm(perm, blocks.iter().map(|b| b.order()))
        }
    }
}

fn check_symplectic_perm(perm: &Permutation, orders: impl Iterator<Item = usize>) -> Result<()> {
    let blocks: Vec<CMatrix> = orders.map(|o| crate::algebra::symplectic(o / 2)).collect();
    let j = crate::algebra::symplectic(perm.len() / 2);
    if norm(&(perm.conjugate(&block_diagonal(&blocks)) - j)) > 1e-12 {
        return Err(Error::Shape("composite permutation does not carry ⊕J to J".into()));
    }
    Ok(())
}

fn check_tail(tail: &Tail, order: usize) -> Result<()> {
    if tail.order() != order {
        return Err(Error::Shape(format!("tail of order {} in a system of order {order}", tail.order())));
    }
    match tail {
        Tail::Projection(_) => Ok(()),
        Tail::DefiniteConstant(h) => {
            if !h.is_definite(1e-12) {
                return Err(Error::NotDefinite("constant tail matrix is singular".into()));
            }
            Ok(())
        }
        Tail::Schrodinger(p) => check_kind(&SegmentKind::Schrodinger(p.clone()), 2),
        Tail::Composite { perm, blocks } => {
            for b in blocks {
                check_tail(b, b.order())?;
            }
            check_symplectic_perm(perm, blocks.iter().map(|b| b.order()))
        }
    }
}

/// Which half of an edge `(−r, r)` a transform acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// `H^(1)(x) = r N H(−rx) N` on `(0, 1)`.
    Left,
    /// `H^(2)(x) = r H(rx)` on `(0, 1)` or `(0, ∞)`.
    Right,
}

impl Hamiltonian {
    pub fn new(start: f64, segments: Vec<Segment>, tail: Option<Tail>) -> Result<Self> {
        if !start.is_finite() {
            return Err(Error::BadDomain("start point must be finite".into()));
        }
        let order = segments
            .first()
            .map(|s| s.kind.order())
            .or_else(|| tail.as_ref().map(|t| t.order()))
            .ok_or_else(|| Error::BadDomain("Hamiltonian needs at least one segment or a tail".into()))?;
        if order == 0 || order % 2 != 0 {
            return Err(Error::Shape(format!("order must be even and positive, got {order}")));
        }
        for seg in &segments {
            if !(seg.length > 0.0) || !seg.length.is_finite() {
                return Err(Error::BadDomain(format!("segment length {} must be positive", seg.length)));
            }
            check_kind(&seg.kind, order)?;
        }
        if let Some(t) = &tail {
            check_tail(t, order)?;
        }
        if segments.is_empty() && tail.is_none() {
            return Err(Error::BadDomain("total finite length must be positive".into()));
        }
        Ok(Self { start, segments, tail, order })
    }

    /// A single constant segment on `[a, b]`.
    pub fn constant(m: CMatrix, a: f64, b: f64) -> Result<Self> {
        Self::new(a, vec![Segment::constant(b - a, m)], None)
    }

    pub fn with_tail(mut self, tail: Tail) -> Result<Self> {
        check_tail(&tail, self.order)?;
        self.tail = Some(tail);
        Ok(self)
    }

    pub fn without_tail(&self) -> Self {
        Self { tail: None, ..self.clone() }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn n(&self) -> usize {
        self.order / 2
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    /// End of the finite part (the tail start `L` when a tail is present).
    pub fn end(&self) -> f64 {
        self.start + self.segments.iter().map(|s| s.length).sum::<f64>()
    }

    pub fn finite_length(&self) -> f64 {
        self.end() - self.start
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn tail(&self) -> Option<&Tail> {
        self.tail.as_ref()
    }

    /// `start = x₀ < x₁ < … < x_m = end`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts = Vec::with_capacity(self.segments.len() + 1);
        let mut x = self.start;
        pts.push(x);
        for s in &self.segments {
            x += s.length;
            pts.push(x);
        }
        if let Some(last) = pts.last_mut() {
            *last = self.end();
        }
        pts
    }

    /// Index of the segment containing `x` and the local offset. Breakpoints
    /// belong to the segment on their right, except the end point.
    pub fn locate(&self, x: f64) -> Option<(usize, f64)> {
        let pts = self.breakpoints();
        if self.segments.is_empty() || x < self.start || x > self.end() {
            return None;
        }
        let idx = match pts.binary_search_by(|p| p.total_cmp(&x)) {
            Ok(i) => i.min(self.segments.len() - 1),
            Err(i) => i - 1,
        };
        Some((idx, x - pts[idx]))
    }

    pub fn domain_error(&self, x: f64) -> Error {
        Error::OutOfDomain {
            x,
            start: self.start,
            end: if self.tail.is_some() { f64::INFINITY } else { self.end() },
        }
    }

    pub fn value_at(&self, x: f64) -> Result<CMatrix> {
        if let Some((i, s)) = self.locate(x) {
            return Ok(self.segments[i].kind.value_at(s));
        }
        match &self.tail {
            Some(t) if x >= self.end() && x.is_finite() => Ok(t.value_at(x - self.end())),
            _ => Err(self.domain_error(x)),
        }
    }

    /// `∫ tr H` over the finite part.
    pub fn trace_integral(&self) -> Result<f64> {
        let mut total = 0.0;
        for seg in &self.segments {
            total += match &seg.kind {
                SegmentKind::Constant(m) => m.trace().re * seg.length,
                kind => {
                    let pieces = 1 + kind.oscillation(C64::new(0.0, 0.0), seg.length).ceil() as usize;
                    crate::quadrature::integrate_matrix(0.0, seg.length, pieces, |s| {
                        Ok(CMatrix::from_element(1, 1, kind.value_at(s).trace()))
                    })?[(0, 0)]
                        .re
                }
            };
        }
        Ok(total)
    }

    /// `∫ H` over the finite part.
    pub fn integral(&self) -> Result<CMatrix> {
        let mut total = CMatrix::zeros(self.order, self.order);
        for seg in &self.segments {
            total += match &seg.kind {
                SegmentKind::Constant(m) => m * real(seg.length),
                kind => {
                    let pieces = 1 + kind.oscillation(C64::new(0.0, 0.0), seg.length).ceil() as usize;
                    crate::quadrature::integrate_matrix(0.0, seg.length, pieces, |s| Ok(kind.value_at(s)))?
                }
            };
        }
        Ok(total)
    }

    /// Definite on the finite part: `∫H ≻ 0`, equivalently no constant `v`
    /// with `H v = 0` almost everywhere.
    pub fn is_definite(&self) -> Result<bool> {
        let vals = hermitian_eigenvalues(&self.integral()?);
        let top = vals.last().copied().unwrap_or(0.0);
        Ok(top > 0.0 && vals[0] > 1e-10 * top)
    }

    /// The portion on `[a, b]` re-based to start at `a` (with `b = ∞` keeping the tail).
    pub fn restrict(&self, a: f64, b: f64) -> Result<Hamiltonian> {
        let end = self.end();
        let upper = if self.tail.is_some() { f64::INFINITY } else { end };
        let tol = 1e-12 * (end - self.start).abs().max(1.0);
        let (a, b) = (
            if a < self.start && a >= self.start - tol { self.start } else { a },
            if b > upper && b <= upper + tol { upper } else { b },
        );
        if !(a >= self.start && b <= upper && a < b) {
            return Err(Error::BadDomain(format!(
                "[{a}, {b}] is not inside [{}, {upper}]",
                self.start
            )));
        }
        let mut segments = Vec::new();
        let pts = self.breakpoints();
        for (i, seg) in self.segments.iter().enumerate() {
            let (lo, hi) = (pts[i].max(a), pts[i + 1].min(b));
            if hi - lo > 0.0 {
                segments.push(Segment::new(hi - lo, seg.kind.shifted(lo - pts[i])));
            }
        }
        if b > end {
            let tail = self.tail.as_ref().expect("checked above");
            let from = a.max(end);
            if b.is_finite() {
                segments.push(Segment::new(b - from, tail.dynamics().shifted(from - end)));
                Hamiltonian::new(a, segments, None)
            } else {
                Hamiltonian::new(a, segments, Some(tail.shifted(from - end)))
            }
        } else {
            Hamiltonian::new(a, segments, None)
        }
    }

    /// Shift the domain so that it starts at `new_start`.
    pub fn rebased(&self, new_start: f64) -> Hamiltonian {
        Self { start: new_start, ..self.clone() }
    }
}

/// `H(x)` as a validated PSD matrix.
pub fn evaluate(h: &Hamiltonian, x: f64) -> Result<HermitianPsd> {
    HermitianPsd::new(h.value_at(x)?, 1e-9)
}

/// Reflect and scale an edge Hamiltonian on `(−r, r)` (or `(−1, ∞)` with
/// `r = 1`) into `H^(1)(x) = r N H(−rx) N` on `(0, 1)` for [`Side::Left`],
/// or `H^(2)(x) = r H(rx)` on `(0, 1)` or `(0, ∞)` for [`Side::Right`].
pub fn reflect_and_scale(h: &Hamiltonian, r: f64, side: Side) -> Result<Hamiltonian> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::BadDomain(format!("half length {r} must be positive")));
    }
    let tol = 1e-12 * r.max(1.0);
    if (h.start() + r).abs() > tol {
        return Err(Error::BadDomain(format!("edge must start at −r = {}, starts at {}", -r, h.start())));
    }
    if h.tail().is_none() && (h.end() - r).abs() > tol {
        return Err(Error::BadDomain(format!("edge must end at r = {r}, ends at {}", h.end())));
    }
    if h.tail().is_some() && h.end() < 0.0 {
        return Err(Error::BadDomain("half-line finite part must reach 0".into()));
    }
    match side {
        Side::Left => {
            let part = h.restrict(-r, 0.0)?;
            let mut segments: Vec<Segment> = part
                .segments()
                .iter()
                .map(|s| Ok(Segment::new(s.length / r, s.kind.reflected_scaled(s.length, r)?)))
                .collect::<Result<_>>()?;
            segments.reverse();
            Hamiltonian::new(0.0, segments, None)
        }
        Side::Right => {
            let upper = if h.tail().is_some() { f64::INFINITY } else { r };
            let part = h.restrict(0.0, upper)?;
            let segments = part
                .segments()
                .iter()
                .map(|s| Segment::new(s.length / r, s.kind.scaled(r)))
                .collect();
            let tail = part.tail().map(|t| t.scaled(r)).transpose()?;
            Hamiltonian::new(0.0, segments, tail)
        }
    }
}

/// `H = h(x) P_θ` with `P_θ` the projection onto `(cos θ, sin θ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaLine {
    /// Angle in `[0, π)`.
    pub theta: f64,
    /// `h` per finite segment (mean trace for sampled segments), then the tail weight if any.
    pub weights: Vec<f64>,
}

impl ThetaLine {
    pub fn projection(&self) -> CMatrix {
        theta_projection(self.theta)
    }

    /// The row `(cos θ, sin θ)`.
    pub fn direction(&self) -> (f64, f64) {
        (self.theta.cos(), self.theta.sin())
    }
}

pub fn theta_projection(theta: f64) -> CMatrix {
    let (s, c) = theta.sin_cos();
    CMatrix::from_row_slice(2, 2, &[real(c * c), real(s * c), real(s * c), real(s * s)])
}

/// Returns `(h, θ)` when the 2×2 PSD value is rank one (or zero: `θ = None`).
fn rank_one_angle(m: &CMatrix) -> Option<(f64, Option<f64>)> {
    let t = m.trace().re;
    let scale = norm(m);
    if scale < 1e-300 {
        return Some((0.0, None));
    }
    let det = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).norm();
    if det > 1e-10 * t * t || m[(0, 1)].im.abs() > 1e-10 * t {
        return None;
    }
    let theta = (2.0 * m[(0, 1)].re).atan2(m[(0, 0)].re - m[(1, 1)].re) / 2.0;
    Some((t, Some(theta.rem_euclid(std::f64::consts::PI))))
}

fn angle_close(a: f64, b: f64) -> bool {
    let d = (a - b).rem_euclid(std::f64::consts::PI);
    d.min(std::f64::consts::PI - d) < 1e-8
}

/// Detect `H = h(x) P_θ` with a single `θ` across all segments (and the tail).
/// Schrödinger pieces are sampled at 16 points each.
pub fn detect_theta_form(h: &Hamiltonian) -> Option<ThetaLine> {
    if h.order() != 2 {
        return None;
    }
    let mut theta: Option<f64> = None;
    let mut weights = Vec::new();
    let mut visit = |samples: Vec<CMatrix>| -> Option<f64> {
        let mut total = 0.0;
        for m in &samples {
            let (w, angle) = rank_one_angle(m)?;
            if let Some(a) = angle {
                match theta {
                    None => theta = Some(a),
                    Some(t) if !angle_close(t, a) => return None,
                    _ => {}
                }
            }
            total += w;
        }
        Some(total / samples.len() as f64)
    };
    let sample = |kind: &SegmentKind, len: f64| -> Vec<CMatrix> {
        match kind {
            SegmentKind::Constant(m) => vec![m.clone()],
            other => (0..16).map(|i| other.value_at(len * (i as f64 + 0.5) / 16.0)).collect(),
        }
    };
    for seg in h.segments() {
        weights.push(visit(sample(&seg.kind, seg.length))?);
    }
    if let Some(t) = h.tail() {
        weights.push(visit(sample(&t.dynamics(), 16.0))?);
    }
    Some(ThetaLine { theta: theta.unwrap_or(0.0), weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{identity, real_matrix};
    use std::f64::consts::PI;

    fn schrodinger_edge(v: f64, a: f64, b: f64) -> Hamiltonian {
        Hamiltonian::new(a, vec![Segment::schrodinger(b - a, SchrodingerPiece::at_origin(v))], None).unwrap()
    }

    #[test]
    fn constant_value() {
        let h = Hamiltonian::constant(identity(2), 0.0, 1.0).unwrap();
        for x in [0.0, 0.3, 1.0] {
            assert_eq!(evaluate(&h, x).unwrap().matrix(), &identity(2));
        }
        assert!(matches!(evaluate(&h, 1.5), Err(Error::OutOfDomain { .. })));
        assert!(matches!(evaluate(&h, -0.1), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn free_schrodinger_value() {
        let h = schrodinger_edge(0.0, 0.0, 2.0);
        let v = evaluate(&h, 2.0).unwrap();
        assert!(norm(&(v.matrix() - real_matrix(&[&[4.0, 2.0], &[2.0, 1.0]]))) < 1e-14);
    }

    #[test]
    fn projection_tail_value() {
        let beta = BoundaryCondition::from_real_rows(&[&[0.0, 1.0]]).unwrap();
        let h = Hamiltonian::constant(identity(2), 0.0, 1.0)
            .unwrap()
            .with_tail(Tail::Projection(beta))
            .unwrap();
        let v = evaluate(&h, 3.0).unwrap();
        assert!(norm(&(v.matrix() - real_matrix(&[&[0.0, 0.0], &[0.0, 1.0]]))) < 1e-15);
    }

    #[test]
    fn projection_identities() {
        let beta = BoundaryCondition::from_real_rows(&[&[1.0, 0.0, 0.3, 0.0], &[0.0, 1.0, 0.0, -2.0]]).unwrap();
        let p = beta.projection();
        let j = crate::algebra::symplectic(2);
        assert!(norm(&(&p * &p - &p)) < 1e-12);
        assert!(norm(&(&p * j * &p)) < 1e-12);
    }

    #[test]
    fn step_matches_trig() {
        let m = schrodinger_step(c64(1.0, 0.0), PI / 2.0);
        assert!((m[(0, 0)].re).abs() < 1e-15 && (m[(0, 1)].re + 1.0).abs() < 1e-15);
        assert!((m[(1, 0)].re - 1.0).abs() < 1e-15);
        // series branch agrees with the closed form just above the switch
        for w in [1e-7, 2e-6] {
            let a = schrodinger_step(c64(w, 0.3 * w), 1.0);
            let r = c64(w, 0.3 * w).sqrt();
            assert!((a[(0, 0)] - r.cos()).norm() < 1e-15);
            assert!((a[(1, 0)] - r.sin() / r).norm() < 1e-15);
        }
    }

    #[test]
    fn reflect_scale_examples() {
        let h = Hamiltonian::constant(identity(2), -1.0, 1.0).unwrap();
        let right = reflect_and_scale(&h, 1.0, Side::Right).unwrap();
        assert_eq!(right.start(), 0.0);
        assert!((right.end() - 1.0).abs() < 1e-15);
        assert_eq!(right.value_at(0.5).unwrap(), identity(2));

        let h = Hamiltonian::constant(identity(2), -2.0, 2.0).unwrap();
        let left = reflect_and_scale(&h, 2.0, Side::Left).unwrap();
        assert!(norm(&(left.value_at(0.3).unwrap() - identity(2) * real(2.0))) < 1e-15);

        let ones = real_matrix(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let h = Hamiltonian::constant(ones, -1.0, 1.0).unwrap();
        let left = reflect_and_scale(&h, 1.0, Side::Left).unwrap();
        let expected = real_matrix(&[&[1.0, -1.0], &[-1.0, 1.0]]);
        assert!(norm(&(left.value_at(0.5).unwrap() - expected)) < 1e-15);

        assert!(matches!(reflect_and_scale(&h, 2.0, Side::Left), Err(Error::BadDomain(_))));
    }

    #[test]
    fn reflect_scale_pointwise_on_schrodinger_edge() {
        let r = 0.75;
        let segs = vec![
            Segment::schrodinger(0.5, SchrodingerPiece::at_origin(2.0)),
            Segment::schrodinger(1.0, SchrodingerPiece::at_origin(-1.0)),
        ];
        // make the second piece continue the first
        let first = SchrodingerPiece::at_origin(2.0);
        let second = SchrodingerPiece { start_transfer: first.transfer_at(0.5), ..SchrodingerPiece::at_origin(-1.0) };
        let h = Hamiltonian::new(-r, vec![segs[0].clone(), Segment::schrodinger(1.0, second)], None).unwrap();
        let left = reflect_and_scale(&h, r, Side::Left).unwrap();
        let right = reflect_and_scale(&h, r, Side::Right).unwrap();
        let n = real_matrix(&[&[-1.0, 0.0], &[0.0, 1.0]]);
        for i in 0..100 {
            let x = (i as f64 + 0.5) / 100.0;
            let expect_left = &n * h.value_at(-r * x).unwrap() * &n * real(r);
            let expect_right = h.value_at(r * x).unwrap() * real(r);
            assert!(norm(&(left.value_at(x).unwrap() - expect_left)) < 1e-12);
            assert!(norm(&(right.value_at(x).unwrap() - expect_right)) < 1e-12);
        }
    }

    #[test]
    fn theta_detection() {
        let d = real_matrix(&[&[0.0, 0.0], &[0.0, 1.0]]);
        let h = Hamiltonian::new(
            0.0,
            vec![Segment::constant(0.5, &d * real(2.0)), Segment::constant(0.5, d.clone())],
            None,
        )
        .unwrap();
        let line = detect_theta_form(&h).unwrap();
        assert!((line.theta - PI / 2.0).abs() < 1e-12);
        assert_eq!(line.weights, vec![2.0, 1.0]);

        let h = Hamiltonian::constant(identity(2), 0.0, 1.0).unwrap();
        assert!(detect_theta_form(&h).is_none());

        let e = real_matrix(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let h = Hamiltonian::new(0.0, vec![Segment::constant(0.5, e), Segment::constant(0.5, d)], None).unwrap();
        assert!(detect_theta_form(&h).is_none());

        assert!(detect_theta_form(&schrodinger_edge(0.0, 0.0, 1.0)).is_none());
    }

    #[test]
    fn restrict_splits_segments() {
        let h = schrodinger_edge(1.5, -1.0, 1.0);
        let part = h.restrict(-0.2, 0.7).unwrap();
        assert_eq!(part.start(), -0.2);
        assert!((part.end() - 0.7).abs() < 1e-15);
        for x in [-0.2, 0.0, 0.33, 0.7] {
            assert!(norm(&(part.value_at(x).unwrap() - h.value_at(x).unwrap())) < 1e-13);
        }
        let rebased = part.rebased(0.0);
        assert!(norm(&(rebased.value_at(0.2).unwrap() - h.value_at(0.0).unwrap())) < 1e-13);
    }
}
