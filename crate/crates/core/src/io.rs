//! Text formats for canonical systems and graphs (TOML or JSON by file
//! extension) and their conversion to the library types.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::algebra::{c64, validate_boundary, BoundaryCondition, CMatrix, HermitianPsd, Permutation};
use crate::error::{Error, Result};
use crate::graph::{CompiledSystem, Edge, EdgeSpan, InterfaceKind, QuantumGraph, Vertex};
use crate::hamiltonian::{Hamiltonian, SchrodingerPiece, Segment, SegmentKind, Tail};
use crate::schrodinger::{PotentialPiece, SchrodingerEdge, SchrodingerGraph};
use crate::spectral::SpectralProblem;

/// A matrix entry: a real number or `[re, im]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

pub type Rows = Vec<Vec<Entry>>;

pub fn rows_to_matrix(rows: &Rows, what: &str) -> Result<CMatrix> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, |r| r.len());
    if nr == 0 || nc == 0 || rows.iter().any(|r| r.len() != nc) {
        return Err(Error::Input(format!("{what}: matrix rows must be non-empty and of equal length")));
    }
    Ok(CMatrix::from_fn(nr, nc, |i, j| match rows[i][j] {
        Entry::Real(x) => c64(x, 0.0),
        Entry::Complex([re, im]) => c64(re, im),
    }))
}

pub fn matrix_to_rows(m: &CMatrix) -> Rows {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| {
                    let v = m[(i, j)];
                    if v.im == 0.0 {
                        Entry::Real(v.re)
                    } else {
                        Entry::Complex([v.re, v.im])
                    }
                })
                .collect()
        })
        .collect()
}

fn real2(rows: &[[f64; 2]; 2]) -> Matrix2<f64> {
    Matrix2::new(rows[0][0], rows[0][1], rows[1][0], rows[1][1])
}

fn rows2(m: &Matrix2<f64>) -> [[f64; 2]; 2] {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

/// Pointwise dynamics of a segment or tail.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KindSpec {
    Constant {
        matrix: Rows,
    },
    /// `r N^ε [[p², pq], [pq, q²]] N^ε` for constant potential.
    Induced {
        potential: f64,
        /// `[[p′, q′], [p, q]]` at the start.
        #[serde(default = "identity2")]
        transfer: [[f64; 2]; 2],
        #[serde(default = "one")]
        scale: f64,
        #[serde(default)]
        reflected: bool,
    },
    Composite {
        /// 0-based images `C e_i = e_{perm[i]}`.
        perm: Vec<usize>,
        blocks: Vec<KindSpec>,
    },
}

fn identity2() -> [[f64; 2]; 2] {
    [[1.0, 0.0], [0.0, 1.0]]
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub length: f64,
    #[serde(flatten)]
    pub kind: KindSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TailSpec {
    /// `H = β*β`.
    Projection { rows: Rows },
    Definite { matrix: Rows },
    Induced {
        potential: f64,
        #[serde(default = "identity2")]
        transfer: [[f64; 2]; 2],
        #[serde(default = "one")]
        scale: f64,
        #[serde(default)]
        reflected: bool,
    },
    Composite { perm: Vec<usize>, blocks: Vec<TailSpec> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    #[serde(default)]
    pub start: f64,
    #[serde(default)]
    pub segments: Vec<SegmentSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailSpec>,
}

fn kind_from_spec(k: &KindSpec) -> Result<SegmentKind> {
    Ok(match k {
        KindSpec::Constant { matrix } => SegmentKind::Constant(rows_to_matrix(matrix, "segment")?),
        KindSpec::Induced { potential, transfer, scale, reflected } => SegmentKind::Schrodinger(SchrodingerPiece {
            potential: *potential,
            start_transfer: real2(transfer),
            scale: *scale,
            reflected: *reflected,
        }),
        KindSpec::Composite { perm, blocks } => SegmentKind::Composite {
            perm: Permutation::new(perm.clone())?,
            blocks: blocks.iter().map(kind_from_spec).collect::<Result<_>>()?,
        },
    })
}

fn kind_to_spec(k: &SegmentKind) -> KindSpec {
    match k {
        SegmentKind::Constant(m) => KindSpec::Constant { matrix: matrix_to_rows(m) },
        SegmentKind::Schrodinger(p) => KindSpec::Induced {
            potential: p.potential,
            transfer: rows2(&p.start_transfer),
            scale: p.scale,
            reflected: p.reflected,
        },
        SegmentKind::Composite { perm, blocks } => {
            KindSpec::Composite { perm: perm.map().to_vec(), blocks: blocks.iter().map(kind_to_spec).collect() }
        }
    }
}

fn tail_from_spec(t: &TailSpec) -> Result<Tail> {
    Ok(match t {
        TailSpec::Projection { rows } => Tail::Projection(validate_boundary(&rows_to_matrix(rows, "tail")?)?),
        TailSpec::Definite { matrix } => Tail::DefiniteConstant(HermitianPsd::new(rows_to_matrix(matrix, "tail")?, 1e-10)?),
        TailSpec::Induced { potential, transfer, scale, reflected } => Tail::Schrodinger(SchrodingerPiece {
            potential: *potential,
            start_transfer: real2(transfer),
            scale: *scale,
            reflected: *reflected,
        }),
        TailSpec::Composite { perm, blocks } => Tail::Composite {
            perm: Permutation::new(perm.clone())?,
            blocks: blocks.iter().map(tail_from_spec).collect::<Result<_>>()?,
        },
    })
}

fn tail_to_spec(t: &Tail) -> TailSpec {
    match t {
        Tail::Projection(b) => TailSpec::Projection { rows: matrix_to_rows(b.matrix()) },
        Tail::DefiniteConstant(h) => TailSpec::Definite { matrix: matrix_to_rows(h.matrix()) },
        Tail::Schrodinger(p) => TailSpec::Induced {
            potential: p.potential,
            transfer: rows2(&p.start_transfer),
            scale: p.scale,
            reflected: p.reflected,
        },
        Tail::Composite { perm, blocks } => {
            TailSpec::Composite { perm: perm.map().to_vec(), blocks: blocks.iter().map(tail_to_spec).collect() }
        }
    }
}

impl HamiltonianSpec {
    pub fn build(&self) -> Result<Hamiltonian> {
        let segments = self
            .segments
            .iter()
            .map(|s| {
                if !(s.length > 0.0) || !s.length.is_finite() {
                    return Err(Error::Input(format!("segment length {} must be positive", s.length)));
                }
                Ok(Segment::new(s.length, kind_from_spec(&s.kind)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let tail = self.tail.as_ref().map(tail_from_spec).transpose()?;
        Hamiltonian::new(self.start, segments, tail)
    }

    pub fn from_hamiltonian(h: &Hamiltonian) -> Self {
        Self {
            start: h.start(),
            segments: h.segments().iter().map(|s| SegmentSpec { length: s.length, kind: kind_to_spec(&s.kind) }).collect(),
            tail: h.tail().map(tail_to_spec),
        }
    }
}

/// A bare canonical system: `H`, `α` and, on a bounded interval, `β`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub hamiltonian: HamiltonianSpec,
    pub alpha: Rows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Rows>,
}

impl SystemSpec {
    pub fn build(&self) -> Result<SpectralProblem> {
        let h = self.hamiltonian.build()?;
        let alpha = validate_boundary(&rows_to_matrix(&self.alpha, "alpha")?)?;
        match &self.beta {
            Some(b) => {
                let beta = validate_boundary(&rows_to_matrix(b, "beta")?)?;
                if h.tail().is_some() {
                    return Err(Error::Input("a system with a tail takes no beta".into()));
                }
                SpectralProblem::regular(h, alpha, beta)
            }
            None => SpectralProblem::half_line(h, alpha),
        }
    }

    pub fn from_problem(p: &SpectralProblem) -> Self {
        Self {
            hamiltonian: HamiltonianSpec::from_hamiltonian(p.hamiltonian()),
            alpha: matrix_to_rows(p.alpha().matrix()),
            beta: p.beta().map(|b| matrix_to_rows(b.matrix())),
        }
    }
}

/// Interface condition of a vertex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConditionSpec {
    /// `"kirchhoff"`, `"dirichlet"` or `"neumann"` (Kirchhoff).
    Named(String),
    Delta { delta: f64 },
    Custom { b1: Rows, b2: Rows },
    /// A full `d×2d` matrix used as is (after normalization).
    Matrix { matrix: Rows },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexSpec {
    pub name: String,
    #[serde(default = "kirchhoff")]
    pub condition: ConditionSpec,
}

fn kirchhoff() -> ConditionSpec {
    ConditionSpec::Named("kirchhoff".into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKindSpec {
    Finite,
    Halfline,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DynamicsSpec {
    Canonical {
        #[serde(default)]
        segments: Vec<SegmentSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tail: Option<TailSpec>,
    },
    Schrodinger {
        #[serde(default)]
        pieces: Vec<PotentialPiece>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tail_potential: Option<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub name: String,
    pub from: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<String>,
    pub kind: EdgeKindSpec,
    /// `r`; ignored on half lines (`r = 1`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_length: Option<f64>,
    pub dynamics: DynamicsSpec,
}

/// A graph document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub vertices: Vec<VertexSpec>,
    pub edges: Vec<EdgeSpec>,
}

/// Either a bare system or a graph.
#[derive(Clone, Debug, PartialEq)]
pub enum Document {
    System(SystemSpec),
    Graph(GraphSpec),
}

#[derive(Deserialize)]
struct RawDocument {
    system: Option<SystemSpec>,
    vertices: Option<Vec<VertexSpec>>,
    edges: Option<Vec<EdgeSpec>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Toml,
    Json,
}

impl Format {
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Format::Json,
            _ => Format::Toml,
        }
    }
}

pub fn parse_document(text: &str, format: Format) -> Result<Document> {
    let raw: RawDocument = match format {
        Format::Toml => toml::from_str(text).map_err(|e| Error::Input(format!("parse error: {e}")))?,
        Format::Json => serde_json::from_str(text).map_err(|e| Error::Input(format!("parse error: {e}")))?,
    };
    match (raw.system, raw.vertices, raw.edges) {
        (Some(s), None, None) => Ok(Document::System(s)),
        (None, Some(vertices), Some(edges)) => Ok(Document::Graph(GraphSpec { vertices, edges })),
        _ => Err(Error::Input("document needs either a `system` table or `vertices` and `edges`".into())),
    }
}

pub fn read_document(path: &Path) -> Result<Document> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    parse_document(&text, Format::from_path(path))
}

#[derive(Serialize)]
struct SystemDocument<'a> {
    system: &'a SystemSpec,
}

pub fn write_system(spec: &SystemSpec, format: Format) -> Result<String> {
    let doc = SystemDocument { system: spec };
    match format {
        Format::Json => serde_json::to_string_pretty(&doc).map_err(|e| Error::Input(e.to_string())),
        Format::Toml => toml::to_string(&doc).map_err(|e| Error::Input(e.to_string())),
    }
}

pub fn write_graph(spec: &GraphSpec, format: Format) -> Result<String> {
    match format {
        Format::Json => serde_json::to_string_pretty(spec).map_err(|e| Error::Input(e.to_string())),
        Format::Toml => toml::to_string(spec).map_err(|e| Error::Input(e.to_string())),
    }
}

fn condition_kind(c: &ConditionSpec, vertex: &str) -> Result<Option<InterfaceKind>> {
    Ok(Some(match c {
        ConditionSpec::Named(n) => match n.to_ascii_lowercase().as_str() {
            "kirchhoff" | "neumann" => InterfaceKind::Kirchhoff,
            "dirichlet" => InterfaceKind::Dirichlet,
            other => return Err(Error::Input(format!("vertex `{vertex}`: unknown condition `{other}`"))),
        },
        ConditionSpec::Delta { delta } => InterfaceKind::Delta(*delta),
        ConditionSpec::Custom { b1, b2 } => {
            InterfaceKind::Custom { b1: rows_to_matrix(b1, "b1")?, b2: rows_to_matrix(b2, "b2")? }
        }
        ConditionSpec::Matrix { .. } => return Ok(None),
    }))
}

struct Topology {
    index: HashMap<String, usize>,
    degree: Vec<usize>,
}

fn topology(spec: &GraphSpec) -> Result<Topology> {
    let mut index = HashMap::new();
    for (i, v) in spec.vertices.iter().enumerate() {
        if index.insert(v.name.clone(), i).is_some() {
            return Err(Error::InvalidGraph(format!("duplicate vertex `{}`", v.name)));
        }
    }
    let mut degree = vec![0; spec.vertices.len()];
    for e in &spec.edges {
        let from = *index
            .get(&e.from)
            .ok_or_else(|| Error::InvalidGraph(format!("edge `{}`: unknown vertex `{}`", e.name, e.from)))?;
        degree[from] += 1;
        match (e.kind, &e.to) {
            (EdgeKindSpec::Finite, Some(to)) => {
                let t = *index
                    .get(to)
                    .ok_or_else(|| Error::InvalidGraph(format!("edge `{}`: unknown vertex `{to}`", e.name)))?;
                degree[t] += 1;
            }
            (EdgeKindSpec::Finite, None) => {
                return Err(Error::InvalidGraph(format!("finite edge `{}` needs `to`", e.name)));
            }
            (EdgeKindSpec::Halfline, Some(_)) => {
                return Err(Error::InvalidGraph(format!("half line `{}` takes no `to`", e.name)));
            }
            (EdgeKindSpec::Halfline, None) => {}
        }
    }
    Ok(Topology { index, degree })
}

fn vertex_conditions(spec: &GraphSpec, topo: &Topology) -> Result<Vec<Vertex>> {
    spec.vertices
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let wrap = |e: Error| match e {
                Error::NotSelfAdjoint { residual } => {
                    Error::InvalidGraph(format!("NotSelfAdjoint at vertex `{}` (residual {residual:.3e})", v.name))
                }
                other => Error::InvalidGraph(format!("vertex `{}`: {other}", v.name)),
            };
            let condition = match condition_kind(&v.condition, &v.name)? {
                Some(kind) => crate::graph::interface_preset(&kind, topo.degree[i]).map_err(wrap)?,
                None => match &v.condition {
                    ConditionSpec::Matrix { matrix } => {
                        validate_boundary(&rows_to_matrix(matrix, "condition")?).map_err(wrap)?
                    }
                    _ => unreachable!("named conditions handled above"),
                },
            };
            Ok(Vertex { name: v.name.clone(), condition })
        })
        .collect()
}

fn span_of(e: &EdgeSpec, topo: &Topology) -> Result<EdgeSpan> {
    Ok(match e.kind {
        EdgeKindSpec::Finite => EdgeSpan::Finite {
            half_length: e
                .half_length
                .filter(|r| *r > 0.0 && r.is_finite())
                .ok_or_else(|| Error::InvalidGraph(format!("edge `{}` needs a positive half_length", e.name)))?,
            terminal: topo.index[e.to.as_ref().expect("checked")],
        },
        EdgeKindSpec::Halfline => EdgeSpan::HalfLine,
    })
}

/// A parsed graph: canonical edges, or Schrödinger edges still to be converted.
#[derive(Clone, Debug)]
pub enum GraphModel {
    Canonical(QuantumGraph),
    Schrodinger(SchrodingerGraph),
}

impl GraphSpec {
    pub fn build(&self) -> Result<GraphModel> {
        let topo = topology(self)?;
        let vertices = vertex_conditions(self, &topo)?;
        let schrodinger = self.edges.iter().filter(|e| matches!(e.dynamics, DynamicsSpec::Schrodinger { .. })).count();
        if schrodinger != 0 && schrodinger != self.edges.len() {
            return Err(Error::InvalidGraph("edges must be all canonical or all Schrödinger".into()));
        }
        if schrodinger > 0 {
            let edges = self
                .edges
                .iter()
                .map(|e| {
                    let DynamicsSpec::Schrodinger { pieces, tail_potential } = &e.dynamics else { unreachable!() };
                    Ok(SchrodingerEdge {
                        name: e.name.clone(),
                        initial: topo.index[&e.from],
                        span: span_of(e, &topo)?,
                        pieces: pieces.clone(),
                        tail_potential: *tail_potential,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let g = SchrodingerGraph { vertices, edges };
            // topology checks happen during conversion
            g.to_canonical()?;
            return Ok(GraphModel::Schrodinger(g));
        }
        let edges = self
            .edges
            .iter()
            .map(|e| {
                let DynamicsSpec::Canonical { segments, tail } = &e.dynamics else { unreachable!() };
                let span = span_of(e, &topo)?;
                let start = match span {
                    EdgeSpan::Finite { half_length, .. } => -half_length,
                    EdgeSpan::HalfLine => -1.0,
                };
                let h = HamiltonianSpec { start, segments: segments.clone(), tail: tail.clone() }
                    .build()
                    .map_err(|err| Error::InvalidGraph(format!("edge `{}`: {err}", e.name)))?;
                Ok(Edge { name: e.name.clone(), initial: topo.index[&e.from], span, hamiltonian: h })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GraphModel::Canonical(QuantumGraph::new(vertices, edges)?))
    }

    /// Canonical description of a graph, with vertex conditions as matrices.
    pub fn from_graph(g: &QuantumGraph) -> Self {
        let vertices = g
            .vertices()
            .iter()
            .map(|v| VertexSpec {
                name: v.name.clone(),
                condition: ConditionSpec::Matrix { matrix: matrix_to_rows(v.condition.matrix()) },
            })
            .collect();
        let edges = g
            .edges()
            .iter()
            .map(|e| {
                let h = HamiltonianSpec::from_hamiltonian(&e.hamiltonian);
                EdgeSpec {
                    name: e.name.clone(),
                    from: g.vertices()[e.initial].name.clone(),
                    to: e.terminal().map(|t| g.vertices()[t].name.clone()),
                    kind: if e.is_half_line() { EdgeKindSpec::Halfline } else { EdgeKindSpec::Finite },
                    half_length: (!e.is_half_line()).then(|| e.half_length()),
                    dynamics: DynamicsSpec::Canonical { segments: h.segments, tail: h.tail },
                }
            })
            .collect();
        Self { vertices, edges }
    }
}

/// Serialized compile output: the compiled system (re-readable as a bare
/// system) plus the index bookkeeping.
#[derive(Clone, Debug, Serialize)]
pub struct CompiledDocument {
    pub system: SystemSpec,
    pub order: usize,
    pub edge_names: Vec<String>,
    pub half_lengths: Vec<f64>,
    pub index: crate::graph::IndexMap,
    /// The assembled vertex condition (the projection-tail generator when non-compact).
    pub assembled_beta: Rows,
    pub warnings: Vec<String>,
}

impl CompiledDocument {
    pub fn new(c: &CompiledSystem) -> Result<Self> {
        let problem = c.problem()?;
        Ok(Self {
            system: SystemSpec::from_problem(&problem),
            order: c.order(),
            edge_names: c.edge_names.clone(),
            half_lengths: c.half_lengths.clone(),
            index: c.index.clone(),
            assembled_beta: matrix_to_rows(c.beta.matrix()),
            warnings: c.warnings.iter().map(|w| w.to_string()).collect(),
        })
    }
}

/// `Rows` of a boundary condition.
pub fn condition_rows(b: &BoundaryCondition) -> Rows {
    matrix_to_rows(b.matrix())
}
