//! Quantum graphs with canonical systems on the edges and their compilation
//! into a single higher-order canonical system on `(0, 1)` or `(0, ∞)`.

use crate::algebra::{
    block_diagonal_rect, c64, real, validate_boundary, BoundaryCondition, CMatrix, CVector, Permutation,
};
use crate::error::{Error, Result, Warning};
use crate::hamiltonian::{
    detect_theta_form, reflect_and_scale, Hamiltonian, Segment, SegmentKind, Side, Tail,
};
use crate::spectral::SpectralProblem;

/// Interface condition kinds at a vertex of degree `d`. Columns follow the
/// vertex's incident roles: initial-vertex edges by increasing index, then
/// terminal-vertex edges by increasing index; the first block acts on the
/// signed derivative components, the second on the values.
#[derive(Clone, Debug, PartialEq)]
pub enum InterfaceKind {
    Kirchhoff,
    Dirichlet,
    Delta(f64),
    Custom { b1: CMatrix, b2: CMatrix },
}

/// Row-orthonormal self-adjoint interface matrix for a vertex of degree `d`.
pub fn interface_preset(kind: &InterfaceKind, degree: usize) -> Result<BoundaryCondition> {
    let d = degree;
    if d == 0 {
        return Err(Error::Input("vertex degree must be at least 1".into()));
    }
    let mut raw = CMatrix::zeros(d, 2 * d);
    match kind {
        InterfaceKind::Dirichlet => {
            for i in 0..d {
                raw[(i, d + i)] = real(1.0);
            }
        }
        InterfaceKind::Kirchhoff | InterfaceKind::Delta(_) => {
            for i in 0..d - 1 {
                raw[(i, d + i)] = real(1.0);
                raw[(i, d + i + 1)] = real(-1.0);
            }
            let gamma = if let InterfaceKind::Delta(g) = kind { *g } else { 0.0 };
            for j in 0..d {
                raw[(d - 1, j)] = real(1.0);
                raw[(d - 1, d + j)] = real(-gamma / d as f64);
            }
        }
        InterfaceKind::Custom { b1, b2 } => {
            if b1.shape() != (d, d) || b2.shape() != (d, d) {
                return Err(Error::Shape(format!(
                    "custom blocks {:?} and {:?} for a vertex of degree {d}",
                    b1.shape(),
                    b2.shape()
                )));
            }
            raw.view_mut((0, 0), (d, d)).copy_from(b1);
            raw.view_mut((0, d), (d, d)).copy_from(b2);
        }
    }
    validate_boundary(&raw)
}

#[derive(Clone, Debug)]
pub struct Vertex {
    pub name: String,
    pub condition: BoundaryCondition,
}

/// Where an edge lives: `(−r, r)` between two vertices or `(−1, ∞)` leaving
/// its initial vertex.
#[derive(Clone, Debug, PartialEq)]
pub enum EdgeSpan {
    Finite { half_length: f64, terminal: usize },
    HalfLine,
}

#[derive(Clone, Debug)]
pub struct Edge {
    pub name: String,
    pub initial: usize,
    pub span: EdgeSpan,
    /// Order-2 coefficient on the edge domain (with a tail for half lines).
    pub hamiltonian: Hamiltonian,
}

impl Edge {
    pub fn finite(name: &str, initial: usize, terminal: usize, half_length: f64, hamiltonian: Hamiltonian) -> Self {
        Self { name: name.into(), initial, span: EdgeSpan::Finite { half_length, terminal }, hamiltonian }
    }

    pub fn half_line(name: &str, initial: usize, hamiltonian: Hamiltonian) -> Self {
        Self { name: name.into(), initial, span: EdgeSpan::HalfLine, hamiltonian }
    }

    pub fn is_half_line(&self) -> bool {
        self.span == EdgeSpan::HalfLine
    }

    pub fn terminal(&self) -> Option<usize> {
        match self.span {
            EdgeSpan::Finite { terminal, .. } => Some(terminal),
            EdgeSpan::HalfLine => None,
        }
    }

    /// `r_i`, with `r = 1` on half lines.
    pub fn half_length(&self) -> f64 {
        match self.span {
            EdgeSpan::Finite { half_length, .. } => half_length,
            EdgeSpan::HalfLine => 1.0,
        }
    }
}

/// Role of an edge end at a vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Initial(usize),
    Terminal(usize),
}

/// A connected directed graph with canonical systems on the edges, finite
/// edges listed before half lines.
#[derive(Clone, Debug)]
pub struct QuantumGraph {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
}

impl QuantumGraph {
    pub fn new(vertices: Vec<Vertex>, edges: Vec<Edge>) -> Result<Self> {
        let g = Self { vertices, edges };
        g.validate()?;
        Ok(g)
    }

    /// Build from vertex names and interface kinds; degrees are read off the edges.
    pub fn with_interfaces(vertices: Vec<(String, InterfaceKind)>, edges: Vec<Edge>) -> Result<Self> {
        let mut degree = vec![0usize; vertices.len()];
        for e in &edges {
            if let Some(d) = degree.get_mut(e.initial) {
                *d += 1;
            }
            if let Some(t) = e.terminal() {
                if let Some(d) = degree.get_mut(t) {
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
        Self::new(vertices, edges)
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// `k`.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// `k̃`, the number of finite edges.
    pub fn finite_count(&self) -> usize {
        self.edges.iter().filter(|e| !e.is_half_line()).count()
    }

    pub fn has_half_lines(&self) -> bool {
        self.edges.iter().any(|e| e.is_half_line())
    }

    /// Incident roles at `v`: `i_1 < … < i_L` then `j_1 < … < j_M`.
    pub fn roles(&self, v: usize) -> Vec<Role> {
        let mut out: Vec<Role> =
            self.edges.iter().enumerate().filter(|(_, e)| e.initial == v).map(|(i, _)| Role::Initial(i)).collect();
        out.extend(
            self.edges.iter().enumerate().filter(|(_, e)| e.terminal() == Some(v)).map(|(i, _)| Role::Terminal(i)),
        );
        out
    }

    fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        if self.edges.is_empty() {
            return Err(Error::InvalidGraph("graph has no edges".into()));
        }
        let mut seen_half = false;
        let mut pairs = std::collections::HashSet::new();
        for e in &self.edges {
            if e.initial >= nv {
                return Err(Error::InvalidGraph(format!("edge `{}` refers to an unknown vertex", e.name)));
            }
            if e.hamiltonian.order() != 2 {
                return Err(Error::InvalidGraph(format!("edge `{}` must carry an order-2 system", e.name)));
            }
            match e.span {
                EdgeSpan::Finite { half_length, terminal } => {
                    if seen_half {
                        return Err(Error::InvalidGraph(format!(
                            "finite edge `{}` listed after a half line; list finite edges first",
                            e.name
                        )));
                    }
                    if terminal >= nv {
                        return Err(Error::InvalidGraph(format!("edge `{}` refers to an unknown vertex", e.name)));
                    }
                    if terminal == e.initial {
                        return Err(Error::InvalidGraph(format!("edge `{}` is a loop", e.name)));
                    }
                    let key = (e.initial.min(terminal), e.initial.max(terminal));
                    if !pairs.insert(key) {
                        return Err(Error::InvalidGraph(format!(
                            "more than one edge between `{}` and `{}`; insert a vertex to split one of them",
                            self.vertices[key.0].name, self.vertices[key.1].name
                        )));
                    }
                    if !(half_length > 0.0) || !half_length.is_finite() {
                        return Err(Error::InvalidGraph(format!("edge `{}` needs a positive half length", e.name)));
                    }
                    let h = &e.hamiltonian;
                    let tol = 1e-12 * half_length.max(1.0);
                    if h.tail().is_some() || (h.start() + half_length).abs() > tol || (h.end() - half_length).abs() > tol {
                        return Err(Error::InvalidGraph(format!(
                            "edge `{}` must be described on (−{half_length}, {half_length})",
                            e.name
                        )));
                    }
                }
                EdgeSpan::HalfLine => {
                    seen_half = true;
                    let h = &e.hamiltonian;
                    if h.tail().is_none() || (h.start() + 1.0).abs() > 1e-12 || h.end() < 0.0 {
                        return Err(Error::InvalidGraph(format!(
                            "half line `{}` must start at −1, reach 0 and end in a tail",
                            e.name
                        )));
                    }
                }
            }
        }
        for (v, vert) in self.vertices.iter().enumerate() {
            let d = self.roles(v).len();
            if d == 0 {
                return Err(Error::InvalidGraph("graph not connected".into()));
            }
            if vert.condition.n() != d {
                return Err(Error::InvalidGraph(format!(
                    "vertex `{}` has degree {d} but its condition has {} rows",
                    vert.name,
                    vert.condition.n()
                )));
            }
        }
        // union-find over vertices
        let mut parent: Vec<usize> = (0..nv).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let next = p[y];
                p[y] = r;
                y = next;
            }
            r
        }
        for e in &self.edges {
            if let Some(t) = e.terminal() {
                let (a, b) = (find(&mut parent, e.initial), find(&mut parent, t));
                parent[a] = b;
            }
        }
        let root = find(&mut parent, 0);
        if (0..nv).any(|v| find(&mut parent, v) != root) {
            return Err(Error::InvalidGraph("graph not connected".into()));
        }
        Ok(())
    }

    /// Relabel edges so that new edge `p` is old edge `order[p]`, permuting
    /// vertex-condition columns to follow the new role order.
    fn reordered(&self, order: &[usize], edges: Vec<Edge>) -> Result<QuantumGraph> {
        let old_roles: Vec<Vec<Role>> = (0..self.vertices.len()).map(|v| self.roles(v)).collect();
        let draft = QuantumGraph { vertices: self.vertices.clone(), edges };
        let mut vertices = Vec::with_capacity(self.vertices.len());
        for (v, vert) in self.vertices.iter().enumerate() {
            let new_roles = draft.roles(v);
            let d = new_roles.len();
            if old_roles[v].is_empty() {
                // vertex created by the caller, already in the new ordering
                vertices.push(vert.clone());
                continue;
            }
            let to_old = |r: Role| match r {
                Role::Initial(i) => Role::Initial(order[i]),
                Role::Terminal(i) => Role::Terminal(order[i]),
            };
            let m = vert.condition.matrix();
            let mut out = CMatrix::zeros(d, 2 * d);
            for (new_col, &r) in new_roles.iter().enumerate() {
                let old_col = old_roles[v].iter().position(|&o| o == to_old(r)).ok_or_else(|| {
                    Error::InvalidGraph(format!("vertex `{}` lost an incident edge while reordering", vert.name))
                })?;
                out.set_column(new_col, &m.column(old_col));
                out.set_column(d + new_col, &m.column(d + old_col));
            }
            vertices.push(Vertex { name: vert.name.clone(), condition: BoundaryCondition::new(out)? });
        }
        QuantumGraph::new(vertices, draft.edges)
    }
}

/// `(edge, side, component)` of a compiled coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct IndexEntry {
    pub edge: usize,
    /// 1 for the reflected left half, 2 for the right half.
    pub half: u8,
    /// 1 or 2.
    pub component: u8,
    pub row: usize,
}

/// Index bookkeeping of a compiled system.
#[derive(Clone, Debug, serde::Serialize)]
pub struct IndexMap {
    pub k: usize,
    pub k_finite: usize,
    /// `C_{4k}` from the stacked halves to compiled rows.
    pub c: Permutation,
    /// The tail reordering `D` (non-compact graphs only).
    pub d: Option<Permutation>,
    pub entries: Vec<IndexEntry>,
}

impl IndexMap {
    fn new(k: usize, k_finite: usize, d: Option<Permutation>) -> Self {
        let c = Permutation::interleave(4 * k);
        let mut entries = Vec::with_capacity(4 * k);
        for half in 1..=2u8 {
            for edge in 0..k {
                for component in 1..=2u8 {
                    let stacked = 2 * k * (half as usize - 1) + 2 * edge + component as usize - 1;
                    entries.push(IndexEntry { edge, half, component, row: c.image(stacked) });
                }
            }
        }
        Self { k, k_finite, c, d, entries }
    }

    pub fn row(&self, edge: usize, half: u8, component: u8) -> usize {
        let k = self.k;
        match (half, component) {
            (1, 1) => edge,
            (2, 1) => k + edge,
            (1, 2) => 2 * k + edge,
            _ => 3 * k + edge,
        }
    }

    /// Rows kept by `Q`: first components `1..k+k̃` and second components `2k+1..3k+k̃`.
    pub fn q_rows(&self) -> Vec<usize> {
        let (k, kf) = (self.k, self.k_finite);
        (0..k + kf).chain(2 * k..3 * k + kf).collect()
    }

    /// Rows kept by `Q⊥`.
    pub fn q_perp_rows(&self) -> Vec<usize> {
        let (k, kf) = (self.k, self.k_finite);
        (k + kf..2 * k).chain(3 * k + kf..4 * k).collect()
    }
}

/// Result of compiling a graph.
#[derive(Clone, Debug)]
pub struct CompiledSystem {
    pub hamiltonian: Hamiltonian,
    pub alpha: BoundaryCondition,
    /// Boundary condition at `1` for compact graphs, the `(k+k̃)`-row
    /// assembled condition generating the projection tail otherwise.
    pub beta: BoundaryCondition,
    pub index: IndexMap,
    pub half_lengths: Vec<f64>,
    pub edge_names: Vec<String>,
    pub warnings: Vec<Warning>,
}

impl CompiledSystem {
    pub fn is_compact(&self) -> bool {
        self.hamiltonian.tail().is_none()
    }

    pub fn order(&self) -> usize {
        self.hamiltonian.order()
    }

    /// The spectral problem of the compiled system.
    pub fn problem(&self) -> Result<SpectralProblem> {
        if self.is_compact() {
            SpectralProblem::regular(self.hamiltonian.clone(), self.alpha.clone(), self.beta.clone())
        } else {
            SpectralProblem::half_line(self.hamiltonian.clone(), self.alpha.clone())
        }
    }

    /// `(V₀f)(x)` for per-edge functions `f(edge, y)` in edge coordinates.
    pub fn rewire<F>(&self, f: F, x: f64) -> Result<CVector>
    where
        F: Fn(usize, f64) -> Result<CVector>,
    {
        let k = self.index.k;
        let upper = if self.is_compact() { 1.0 } else { f64::INFINITY };
        if !(x >= 0.0 && x <= upper) {
            return Err(self.hamiltonian.domain_error(x));
        }
        let mut out = CVector::zeros(4 * k);
        for edge in 0..k {
            let r = self.half_lengths[edge];
            if x <= 1.0 {
                let left = f(edge, -r * x)?;
                out[self.index.row(edge, 1, 1)] = -left[0];
                out[self.index.row(edge, 1, 2)] = left[1];
            }
            if x <= 1.0 || edge >= self.index.k_finite {
                let right = f(edge, r * x)?;
                out[self.index.row(edge, 2, 1)] = right[0];
                out[self.index.row(edge, 2, 2)] = right[1];
            }
        }
        Ok(out)
    }
}

/// `α = ((1/√2)(I I; 0 0), (1/√2)(0 0; I −I))` with `I ∈ C^{k×k}`.
pub fn gluing_condition(k: usize) -> Result<BoundaryCondition> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut a = CMatrix::zeros(2 * k, 4 * k);
    for i in 0..k {
        a[(i, i)] = real(s);
        a[(i, k + i)] = real(s);
        a[(k + i, 2 * k + i)] = real(s);
        a[(k + i, 3 * k + i)] = real(-s);
    }
    BoundaryCondition::new(a)
}

/// Assemble `β` from the vertex conditions. Rows: initial roles of all edges
/// (`i`), then terminal roles of finite edges (`k + j`). Columns follow the
/// same index with `ã = −a`, `b̃ = b`.
fn assemble_beta(g: &QuantumGraph) -> Result<BoundaryCondition> {
    let k = g.edge_count();
    let kf = g.finite_count();
    let m = k + kf;
    let mut beta = CMatrix::zeros(m, 2 * m);
    let column = |r: Role| match r {
        Role::Initial(i) => i,
        Role::Terminal(j) => k + j,
    };
    for (v, vert) in g.vertices().iter().enumerate() {
        let roles = g.roles(v);
        let b0 = vert.condition.matrix();
        let d = roles.len();
        for (l, &row_role) in roles.iter().enumerate() {
            let row = column(row_role);
            for (c, &col_role) in roles.iter().enumerate() {
                let col = column(col_role);
                beta[(row, col)] = -b0[(l, c)];
                beta[(row, m + col)] = b0[(l, d + c)];
            }
        }
    }
    let (orth, iso) = crate::algebra::boundary_residuals(&beta);
    if orth > 1e-10 || iso > 1e-10 {
        return Err(Error::InvalidGraph(format!(
            "assembled boundary condition fails checks (‖ββ*−I‖ = {orth:.3e}, ‖βJβ*‖ = {iso:.3e})"
        )));
    }
    BoundaryCondition::new(beta)
}

/// `H^(1)_i` and `H^(2)_i` for every edge.
fn split_edges(g: &QuantumGraph) -> Result<(Vec<Hamiltonian>, Vec<Hamiltonian>)> {
    let mut left = Vec::new();
    let mut right = Vec::new();
    for e in g.edges() {
        let r = e.half_length();
        left.push(reflect_and_scale(&e.hamiltonian, r, Side::Left)?);
        right.push(reflect_and_scale(&e.hamiltonian, r, Side::Right)?);
    }
    Ok((left, right))
}

/// Sorted union of breakpoints in `[a, b]`, merging points closer than 1e−13.
fn merged_breakpoints(parts: &[&Hamiltonian], a: f64, b: f64) -> Vec<f64> {
    let mut pts: Vec<f64> = vec![a, b];
    for h in parts {
        pts.extend(h.breakpoints().into_iter().filter(|&x| x > a && x < b));
    }
    pts.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(pts.len());
    for x in pts {
        if out.last().is_none_or(|&l| x - l > 1e-13) {
            out.push(x);
        } else if x == b {
            *out.last_mut().expect("non-empty") = b;
        }
    }
    out
}

/// Dynamics of `h` on `[x0, x1]` as a kind restarted at `x0`.
fn kind_on(h: &Hamiltonian, x0: f64, x1: f64) -> Result<SegmentKind> {
    let mid = 0.5 * (x0 + x1);
    if let Some((i, _)) = h.locate(mid) {
        let start = h.breakpoints()[i];
        return Ok(h.segments()[i].kind.shifted(x0 - start));
    }
    match h.tail() {
        Some(t) if mid >= h.end() => Ok(t.dynamics().shifted(x0 - h.end())),
        _ => Err(h.domain_error(mid)),
    }
}

/// Per-interval composite segments `perm(⊕ blocks)perm*`.
fn composite_segments<F>(parts: &[&Hamiltonian], a: f64, b: f64, perm: &Permutation, extra: F) -> Result<Vec<Segment>>
where
    F: Fn() -> Vec<SegmentKind>,
{
    let pts = merged_breakpoints(parts, a, b);
    pts.windows(2)
        .map(|w| {
            let mut blocks = extra();
            for h in parts {
                blocks.push(kind_on(h, w[0], w[1])?);
            }
            Ok(Segment::new(w[1] - w[0], SegmentKind::Composite { perm: perm.clone(), blocks }))
        })
        .collect()
}

fn theta_warning(blocks: &[&Hamiltonian]) -> Option<Warning> {
    let thetas: Option<Vec<f64>> = blocks.iter().map(|h| detect_theta_form(h).map(|t| t.theta)).collect();
    thetas.map(|thetas| Warning::NonDefiniteCompiled { thetas })
}

/// Compile a graph of finite edges into an order-`4k` system on `(0, 1)`.
pub fn compile_compact(g: &QuantumGraph) -> Result<CompiledSystem> {
    if g.has_half_lines() {
        return Err(Error::HasHalfLine);
    }
    let k = g.edge_count();
    let (left, right) = split_edges(g)?;
    let parts: Vec<&Hamiltonian> = left.iter().chain(right.iter()).collect();
    let perm = Permutation::interleave(4 * k);
    let segments = composite_segments(&parts, 0.0, 1.0, &perm, Vec::new)?;
    let hamiltonian = Hamiltonian::new(0.0, segments, None)?;
    let mut warnings = Vec::new();
    if let Some(w) = theta_warning(&parts) {
        warnings.push(w);
    }
    Ok(CompiledSystem {
        hamiltonian,
        alpha: gluing_condition(k)?,
        beta: assemble_beta(g)?,
        index: IndexMap::new(k, k, None),
        half_lengths: g.edges().iter().map(|e| e.half_length()).collect(),
        edge_names: g.edges().iter().map(|e| e.name.clone()).collect(),
        warnings,
    })
}

/// The tail reordering `D` (0-based): fixes `0..k+k̃` and `3k+k̃..4k`, sends
/// `2k+i → k+k̃+i` for `0 ≤ i < k+k̃` and `2k−1−i → 3k+k̃−1−i` for `0 ≤ i < k−k̃`.
pub fn tail_shift(k: usize, k_finite: usize) -> Permutation {
    let kf = k_finite;
    let mut map: Vec<usize> = (0..4 * k).collect();
    for i in 0..k + kf {
        map[2 * k + i] = k + kf + i;
    }
    for i in 0..k - kf {
        map[2 * k - 1 - i] = 3 * k + kf - 1 - i;
    }
    Permutation::from_map_unchecked(map)
}

/// `D⁻¹ ∘ (I ⊕ C_{2(k−k̃)})`, the index map of the tail blocks.
fn tail_perm(k: usize, k_finite: usize) -> Permutation {
    let m = 2 * (k + k_finite);
    let inner = Permutation::interleave(2 * (k - k_finite));
    let d_inv = tail_shift(k, k_finite).inverse();
    let map = (0..4 * k)
        .map(|i| {
            let local = if i < m { i } else { m + inner.image(i - m) };
            d_inv.image(local)
        })
        .collect();
    Permutation::from_map_unchecked(map)
}

/// Compile a graph with half lines into an order-`4k` system on `(0, ∞)`.
pub fn compile_noncompact(g: &QuantumGraph) -> Result<CompiledSystem> {
    if !g.has_half_lines() {
        return Err(Error::Input("graph has no half lines; use compile_compact".into()));
    }
    let k = g.edge_count();
    let kf = g.finite_count();
    for e in &g.edges()[kf..] {
        let outer = e.hamiltonian.restrict(0.0, f64::INFINITY)?;
        if detect_theta_form(&outer).is_some() {
            return Err(Error::IndefiniteTail(e.name.clone()));
        }
    }
    let (left, right) = split_edges(g)?;
    let parts: Vec<&Hamiltonian> = left.iter().chain(right.iter()).collect();
    let mut segments = composite_segments(&parts, 0.0, 1.0, &Permutation::interleave(4 * k), Vec::new)?;

    let beta = assemble_beta(g)?;
    let projection = beta.projection();
    let perm = tail_perm(k, kf);
    let tails: Vec<&Hamiltonian> = right[kf..].iter().collect();
    let tail_start = tails.iter().map(|h| h.end()).fold(1.0, f64::max);
    if tail_start > 1.0 {
        let p = projection.clone();
        segments.extend(composite_segments(&tails, 1.0, tail_start, &perm, move || {
            vec![SegmentKind::Constant(p.clone())]
        })?);
    }
    let mut blocks = vec![Tail::Projection(beta.clone())];
    for h in &tails {
        let t = h.tail().expect("half lines carry tails");
        blocks.push(t.shifted(tail_start - h.end()));
    }
    let hamiltonian = Hamiltonian::new(0.0, segments, Some(Tail::Composite { perm, blocks }))?;
    Ok(CompiledSystem {
        hamiltonian,
        alpha: gluing_condition(k)?,
        beta,
        index: IndexMap::new(k, kf, Some(tail_shift(k, kf))),
        half_lengths: g.edges().iter().map(|e| e.half_length()).collect(),
        edge_names: g.edges().iter().map(|e| e.name.clone()).collect(),
        warnings: Vec::new(),
    })
}

/// Compile with the compiler matching the graph.
pub fn compile(g: &QuantumGraph) -> Result<CompiledSystem> {
    if g.has_half_lines() {
        compile_noncompact(g)
    } else {
        compile_compact(g)
    }
}

/// A half line replaced by a finite edge and a new vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedHalfLine {
    pub edge: String,
    pub vertex: String,
    pub theta: f64,
    /// `(cos θ, sin θ)`, the condition `(cos θ, sin θ) f(0) = 0`.
    pub row: (f64, f64),
}

#[derive(Clone, Debug)]
pub struct Reduction {
    pub graph: QuantumGraph,
    pub reduced: Vec<ReducedHalfLine>,
}

/// Replace every half line whose coefficient on `(0, ∞)` is `h(x)P_θ` by the
/// edge `(−1, 0)` ending at a new vertex with `(cos θ, sin θ) f(0) = 0`.
pub fn reduce_indefinite_halflines(g: &QuantumGraph) -> Result<Reduction> {
    let mut vertices = g.vertices().to_vec();
    let mut finite = Vec::new();
    let mut half = Vec::new();
    let mut reduced = Vec::new();
    for (i, e) in g.edges().iter().enumerate() {
        if !e.is_half_line() {
            finite.push((i, e.clone()));
            continue;
        }
        let outer = e.hamiltonian.restrict(0.0, f64::INFINITY)?;
        match detect_theta_form(&outer) {
            None => half.push((i, e.clone())),
            Some(line) => {
                let (c, s) = line.direction();
                let name = format!("{}:end", e.name);
                // terminal convention: the derivative component enters with a minus sign
                let condition = BoundaryCondition::new(CMatrix::from_row_slice(1, 2, &[c64(-c, 0.0), c64(s, 0.0)]))?;
                vertices.push(Vertex { name: name.clone(), condition });
                let h = e.hamiltonian.restrict(-1.0, 0.0)?.rebased(-0.5);
                let edge = Edge::finite(&e.name, e.initial, vertices.len() - 1, 0.5, h);
                finite.push((i, edge));
                reduced.push(ReducedHalfLine { edge: e.name.clone(), vertex: name, theta: line.theta, row: (c, s) });
            }
        }
    }
    if reduced.is_empty() {
        return Ok(Reduction { graph: g.clone(), reduced });
    }
    let order: Vec<usize> = finite.iter().chain(half.iter()).map(|(i, _)| *i).collect();
    let edges: Vec<Edge> = finite.into_iter().chain(half).map(|(_, e)| e).collect();
    let staged = QuantumGraph { vertices, edges: g.edges().to_vec() };
    let graph = staged.reordered(&order, edges)?;
    Ok(Reduction { graph, reduced })
}

/// `C (⊕ A_i) C*` for 2×2 blocks `A_i`, `C` the interleaving permutation.
pub fn interleaved_block_diagonal(blocks: &[CMatrix]) -> CMatrix {
    let d = 2 * blocks.len();
    Permutation::interleave(d).conjugate(&block_diagonal_rect(blocks))
}
