//! Schrödinger edges `−y″ + V y = zy` with piecewise-constant `V`, their
//! conversion to canonical systems and the transport of vertex conditions.

use nalgebra::Matrix2;

use crate::algebra::{boundary_residuals, real, validate_boundary, BoundaryCondition, CMatrix, CVector, C64};
use crate::error::{Error, Result};
use crate::graph::{
    compile, interface_preset, interleaved_block_diagonal, CompiledSystem, Edge, EdgeSpan, InterfaceKind,
    QuantumGraph, Role, Vertex,
};
use crate::hamiltonian::{
    real_to_cmatrix2, unimodular_inverse, zero_energy_step, Hamiltonian, SchrodingerPiece, Segment, Tail,
};

/// Constant potential `value` over `length`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PotentialPiece {
    pub length: f64,
    pub value: f64,
}

/// An edge carrying `−y″ + V y = zy` on `(−r, r)` or `(−1, ∞)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SchrodingerEdge {
    pub name: String,
    pub initial: usize,
    pub span: EdgeSpan,
    /// Pieces from the left endpoint; on a finite edge they must cover `2r`.
    pub pieces: Vec<PotentialPiece>,
    /// Constant potential on the rest of a half line.
    pub tail_potential: Option<f64>,
}

impl SchrodingerEdge {
    pub fn finite(name: &str, initial: usize, terminal: usize, half_length: f64, pieces: Vec<PotentialPiece>) -> Self {
        Self { name: name.into(), initial, span: EdgeSpan::Finite { half_length, terminal }, pieces, tail_potential: None }
    }

    /// Free edge of full length `length`.
    pub fn free(name: &str, initial: usize, terminal: usize, length: f64) -> Self {
        Self::finite(name, initial, terminal, 0.5 * length, vec![PotentialPiece { length, value: 0.0 }])
    }

    pub fn half_line(name: &str, initial: usize, pieces: Vec<PotentialPiece>, tail_potential: f64) -> Self {
        Self { name: name.into(), initial, span: EdgeSpan::HalfLine, pieces, tail_potential: Some(tail_potential) }
    }

    pub fn half_length(&self) -> f64 {
        match self.span {
            EdgeSpan::Finite { half_length, .. } => half_length,
            EdgeSpan::HalfLine => 1.0,
        }
    }

    pub fn start(&self) -> f64 {
        -self.half_length()
    }

    /// Pieces after padding a half line with its tail potential up to 0.
    fn covered_pieces(&self) -> Result<Vec<PotentialPiece>> {
        for p in &self.pieces {
            if !(p.length > 0.0) || !p.length.is_finite() || !p.value.is_finite() {
                return Err(Error::Input(format!("edge `{}` has a bad potential piece {p:?}", self.name)));
            }
        }
        let total: f64 = self.pieces.iter().map(|p| p.length).sum();
        let mut pieces = self.pieces.clone();
        match self.span {
            EdgeSpan::Finite { half_length, .. } => {
                if (total - 2.0 * half_length).abs() > 1e-12 * half_length.max(1.0) {
                    return Err(Error::Input(format!(
                        "potential pieces on edge `{}` cover {total}, expected {}",
                        self.name,
                        2.0 * half_length
                    )));
                }
            }
            EdgeSpan::HalfLine => {
                let v = self
                    .tail_potential
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Input(format!("half line `{}` needs a constant tail potential", self.name)))?;
                if total < 1.0 {
                    pieces.push(PotentialPiece { length: 1.0 - total, value: v });
                }
            }
        }
        Ok(pieces)
    }

    /// `T(x) = [[p′, q′], [p, q]]` with `T = I` at the left endpoint.
    pub fn transfer(&self, x: f64) -> Result<Matrix2<f64>> {
        let pieces = self.covered_pieces()?;
        let start = self.start();
        let end = start + pieces.iter().map(|p| p.length).sum::<f64>();
        let upper = if self.span == EdgeSpan::HalfLine { f64::INFINITY } else { end };
        let tol = 1e-12 * (end - start).max(1.0);
        if !(x >= start - tol && x <= upper + tol) {
            return Err(Error::OutOfDomain { x, start, end: upper });
        }
        let mut t = Matrix2::identity();
        let mut at = start;
        for p in &pieces {
            if x <= at + p.length {
                return Ok(zero_energy_step(p.value, x - at) * t);
            }
            t = zero_energy_step(p.value, p.length) * t;
            at += p.length;
        }
        let v = self.tail_potential.unwrap_or(0.0);
        Ok(zero_energy_step(v, x - at) * t)
    }

    /// The canonical coefficient `[[p², pq], [pq, q²]]` on the same domain.
    pub fn to_canonical(&self) -> Result<Hamiltonian> {
        let pieces = self.covered_pieces()?;
        let mut t = Matrix2::identity();
        let mut segments = Vec::with_capacity(pieces.len());
        for p in &pieces {
            segments.push(Segment::schrodinger(
                p.length,
                SchrodingerPiece { potential: p.value, start_transfer: t, scale: 1.0, reflected: false },
            ));
            t = zero_energy_step(p.value, p.length) * t;
        }
        let tail = self.tail_potential.filter(|_| self.span == EdgeSpan::HalfLine).map(|v| {
            Tail::Schrodinger(SchrodingerPiece { potential: v, start_transfer: t, scale: 1.0, reflected: false })
        });
        Hamiltonian::new(self.start(), segments, tail)
    }

    /// `(Uf)(x) = T(x)⁻¹ (0, f(x))`.
    pub fn map_u(&self, f: C64, x: f64) -> Result<CVector> {
        let inv = unimodular_inverse(&self.transfer(x)?);
        Ok(CVector::from_vec(vec![real(inv[(0, 1)]) * f, real(inv[(1, 1)]) * f]))
    }
}

/// `T` as a complex 2×2 matrix.
pub fn transfer_matrix(edge: &SchrodingerEdge, x: f64) -> Result<CMatrix> {
    Ok(real_to_cmatrix2(&edge.transfer(x)?))
}

/// `β C (⊕ A_p) C*` before re-normalization, for 2×2 blocks in role order.
pub fn transport_interface_raw(beta: &BoundaryCondition, blocks: &[CMatrix]) -> Result<CMatrix> {
    if 2 * blocks.len() != beta.order() {
        return Err(Error::Shape(format!(
            "{} transfer blocks for a condition of order {}",
            blocks.len(),
            beta.order()
        )));
    }
    Ok(beta.matrix() * interleaved_block_diagonal(blocks))
}

/// Transported condition and the residuals `(‖α̃α̃* − I‖, ‖α̃Jα̃*‖)` of the
/// raw product.
pub fn transport_interface(beta: &BoundaryCondition, blocks: &[CMatrix]) -> Result<(BoundaryCondition, (f64, f64))> {
    let raw = transport_interface_raw(beta, blocks)?;
    let residuals = boundary_residuals(&raw);
    Ok((validate_boundary(&raw)?, residuals))
}

/// A graph of Schrödinger edges. Vertex conditions act on `(±y′, y)` with
/// the same role ordering and sign convention as [`QuantumGraph`].
#[derive(Clone, Debug)]
pub struct SchrodingerGraph {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<SchrodingerEdge>,
}

/// Conversion result: the canonical graph, the compiled system and the raw
/// residuals `(vertex, ‖α̃α̃* − I‖, ‖α̃Jα̃*‖)` of every transported condition.
#[derive(Clone, Debug)]
pub struct SchrodingerPipeline {
    pub graph: QuantumGraph,
    pub compiled: CompiledSystem,
    pub transport_residuals: Vec<(String, f64, f64)>,
}

impl SchrodingerGraph {
    pub fn with_interfaces(vertices: Vec<(String, InterfaceKind)>, edges: Vec<SchrodingerEdge>) -> Result<Self> {
        let mut degree = vec![0usize; vertices.len()];
        for e in &edges {
            for v in std::iter::once(e.initial).chain(match e.span {
                EdgeSpan::Finite { terminal, .. } => Some(terminal),
                EdgeSpan::HalfLine => None,
            }) {
                if let Some(d) = degree.get_mut(v) {
                    *d += 1;
                }
            }
        }
        let vertices = vertices
            .into_iter()
            .zip(degree)
            .map(|((name, kind), d)| {
                let condition = interface_preset(&kind, d).map_err(|e| match e {
                    Error::NotSelfAdjoint { residual } => {
                        Error::InvalidGraph(format!("NotSelfAdjoint at vertex `{name}` (residual {residual:.3e})"))
                    }
                    other => Error::InvalidGraph(format!("vertex `{name}`: {other}")),
                })?;
                Ok(Vertex { name, condition })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { vertices, edges })
    }

    /// Canonical graph with transported vertex conditions.
    pub fn to_canonical(&self) -> Result<(QuantumGraph, Vec<(String, f64, f64)>)> {
        let edges = self
            .edges
            .iter()
            .map(|e| {
                let h = e.to_canonical()?;
                Ok(Edge { name: e.name.clone(), initial: e.initial, span: e.span.clone(), hamiltonian: h })
            })
            .collect::<Result<Vec<_>>>()?;
        // validates topology and degrees with the untransported conditions
        let plain = QuantumGraph::new(self.vertices.clone(), edges.clone())?;
        let n = crate::algebra::reflection(1);
        let mut vertices = Vec::with_capacity(self.vertices.len());
        let mut residuals = Vec::new();
        for (v, vert) in self.vertices.iter().enumerate() {
            let blocks = plain
                .roles(v)
                .into_iter()
                .map(|r| match r {
                    Role::Initial(i) => transfer_matrix(&self.edges[i], self.edges[i].start()),
                    Role::Terminal(j) => {
                        let e = &self.edges[j];
                        Ok(&n * transfer_matrix(e, e.half_length())? * &n)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            let (condition, (orth, iso)) = transport_interface(&vert.condition, &blocks)?;
            residuals.push((vert.name.clone(), orth, iso));
            vertices.push(Vertex { name: vert.name.clone(), condition });
        }
        Ok((QuantumGraph::new(vertices, edges)?, residuals))
    }

    /// Convert and compile.
    pub fn pipeline(&self) -> Result<SchrodingerPipeline> {
        let (graph, transport_residuals) = self.to_canonical()?;
        let compiled = compile(&graph)?;
        Ok(SchrodingerPipeline { graph, compiled, transport_residuals })
    }

    /// `‖f‖²` and `‖Uf‖²` in the canonical weighted norm, for per-edge
    /// functions supported on `[start, start + reach]`.
    pub fn isometry_check<F>(&self, f: F, reach: f64) -> Result<(f64, f64)>
    where
        F: Fn(usize, f64) -> C64,
    {
        let mut plain = 0.0;
        let mut weighted = 0.0;
        for (i, e) in self.edges.iter().enumerate() {
            let h = e.to_canonical()?;
            let end = if e.span == EdgeSpan::HalfLine { e.start() + reach } else { h.end() };
            let mut cuts: Vec<f64> = h.breakpoints().into_iter().filter(|&x| x < end).collect();
            cuts.push(end);
            for w in cuts.windows(2) {
                let (a, b) = (w[0], w[1]);
                let pieces = 1 + (b - a).ceil() as usize * 4;
                let sq = crate::quadrature::integrate_matrix(a, b, pieces, |x| {
                    Ok(CMatrix::from_element(1, 1, real(f(i, x).norm_sqr())))
                })?;
                let wt = crate::quadrature::integrate_matrix(a, b, pieces, |x| {
                    let g = e.map_u(f(i, x), x)?;
                    let hv = h.value_at(x)?;
                    Ok(CMatrix::from_element(1, 1, g.dotc(&(hv * &g))))
                })?;
                plain += sq[(0, 0)].re;
                weighted += wt[(0, 0)].re;
            }
        }
        Ok((plain, weighted))
    }
}
