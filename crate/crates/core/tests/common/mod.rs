#![allow(dead_code)]

use cansys::algebra::{c64, identity, validate_boundary, BoundaryCondition, CMatrix, CVector, HermitianPsd, C64};
use cansys::graph::{Edge, InterfaceKind, QuantumGraph};
use cansys::hamiltonian::{Hamiltonian, Segment, Tail};
use cansys::schrodinger::{PotentialPiece, SchrodingerEdge, SchrodingerGraph};
use cansys::spectral::SpectralProblem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex(rng: &mut ChaCha8Rng) -> C64 {
    c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> CMatrix {
    CMatrix::from_fn(r, c, |_, _| complex(rng))
}

/// `GG*/d + floor·I`.
pub fn random_psd(rng: &mut ChaCha8Rng, d: usize, floor: f64) -> CMatrix {
    let g = random_matrix(rng, d, d);
    (&g * g.adjoint()) / c64(d as f64, 0.0) + identity(d) * c64(floor, 0.0)
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let g = random_matrix(rng, n, n);
    (&g + g.adjoint()) * c64(0.5, 0.0)
}

/// A self-adjoint condition `(A, I)` or `(I, A)` with `A` Hermitian.
pub fn random_condition(rng: &mut ChaCha8Rng, n: usize) -> BoundaryCondition {
    let a = random_hermitian(rng, n);
    let mut raw = CMatrix::zeros(n, 2 * n);
    if rng.random_bool(0.5) {
        raw.view_mut((0, 0), (n, n)).copy_from(&a);
        raw.view_mut((0, n), (n, n)).copy_from(&identity(n));
    } else {
        raw.view_mut((0, 0), (n, n)).copy_from(&identity(n));
        raw.view_mut((0, n), (n, n)).copy_from(&a);
    }
    validate_boundary(&raw).expect("(A, I) with A Hermitian is self-adjoint")
}

/// `0 = c₀ < … < 1` with at most `pieces` intervals, none shorter than 1e-3.
fn unit_cuts(rng: &mut ChaCha8Rng, pieces: usize) -> Vec<f64> {
    let mut inner: Vec<f64> = (0..pieces - 1).map(|_| rng.random_range(0.1..0.9)).collect();
    inner.sort_by(f64::total_cmp);
    let mut cuts = vec![0.0];
    for c in inner {
        if c - cuts[cuts.len() - 1] > 1e-3 {
            cuts.push(c);
        }
    }
    cuts.push(1.0);
    cuts
}

/// Definite piecewise-constant `H` of order `2n` on `(start, start + len)`.
pub fn random_hamiltonian(rng: &mut ChaCha8Rng, n: usize, start: f64, len: f64, pieces: usize) -> Hamiltonian {
    let cuts = unit_cuts(rng, pieces);
    let segments = cuts
        .windows(2)
        .map(|w| Segment::constant((w[1] - w[0]) * len, random_psd(rng, 2 * n, 0.1)))
        .collect();
    Hamiltonian::new(start, segments, None).unwrap()
}

pub fn random_regular(rng: &mut ChaCha8Rng, n: usize) -> SpectralProblem {
    let len = rng.random_range(0.5..1.5);
    let pieces = rng.random_range(1..4);
    let h = random_hamiltonian(rng, n, 0.0, len, pieces);
    SpectralProblem::regular(h, random_condition(rng, n), random_condition(rng, n)).unwrap()
}

pub fn random_upper(rng: &mut ChaCha8Rng) -> C64 {
    c64(rng.random_range(-5.0..5.0), rng.random_range(0.2..3.0))
}

pub fn random_interface(rng: &mut ChaCha8Rng) -> InterfaceKind {
    match rng.random_range(0..4) {
        0 => InterfaceKind::Kirchhoff,
        1 => InterfaceKind::Dirichlet,
        2 => InterfaceKind::Delta(rng.random_range(-2.0..2.0)),
        _ => InterfaceKind::Custom { b1: CMatrix::zeros(0, 0), b2: CMatrix::zeros(0, 0) },
    }
}

/// Degree-aware custom interface `(A, I)` with `A` Hermitian.
fn realize(kind: InterfaceKind, degree: usize, rng: &mut ChaCha8Rng) -> InterfaceKind {
    match kind {
        InterfaceKind::Custom { .. } => {
            InterfaceKind::Custom { b1: random_hermitian(rng, degree), b2: identity(degree) }
        }
        other => other,
    }
}

/// Topology of a random connected graph: `(edges as (initial, Some(terminal) | None), vertex count)`.
pub fn random_topology(rng: &mut ChaCha8Rng, k: usize, k_finite: usize) -> (Vec<(usize, Option<usize>)>, usize) {
    let nv = k_finite + 1;
    let mut edges = Vec::new();
    for v in 1..nv {
        let parent = rng.random_range(0..v);
        if rng.random_bool(0.5) {
            edges.push((parent, Some(v)));
        } else {
            edges.push((v, Some(parent)));
        }
    }
    for _ in k_finite..k {
        edges.push((rng.random_range(0..nv), None));
    }
    (edges, nv)
}

fn degrees(edges: &[(usize, Option<usize>)], nv: usize) -> Vec<usize> {
    let mut d = vec![0; nv];
    for (a, b) in edges {
        d[*a] += 1;
        if let Some(b) = b {
            d[*b] += 1;
        }
    }
    d
}

fn vertex_kinds(rng: &mut ChaCha8Rng, edges: &[(usize, Option<usize>)], nv: usize) -> Vec<(String, InterfaceKind)> {
    degrees(edges, nv)
        .into_iter()
        .enumerate()
        .map(|(v, d)| {
            let kind = random_interface(rng);
            (format!("v{v}"), realize(kind, d, rng))
        })
        .collect()
}

/// Random canonical graph with `k` edges, `k_finite` of them finite.
pub fn random_graph(rng: &mut ChaCha8Rng, k: usize, k_finite: usize) -> QuantumGraph {
    let (topo, nv) = random_topology(rng, k, k_finite);
    let vertices = vertex_kinds(rng, &topo, nv);
    let edges = topo
        .iter()
        .enumerate()
        .map(|(i, &(a, b))| {
            let name = format!("e{i}");
            let pieces = rng.random_range(1..4);
            match b {
                Some(b) => {
                    let r = rng.random_range(0.3..1.5);
                    Edge::finite(&name, a, b, r, random_hamiltonian(rng, 1, -r, 2.0 * r, pieces))
                }
                None => {
                    let len = rng.random_range(1.0..2.5);
                    let tail = Tail::DefiniteConstant(HermitianPsd::new(random_psd(rng, 2, 0.2), 1e-12).unwrap());
                    let h = random_hamiltonian(rng, 1, -1.0, len, pieces).with_tail(tail).unwrap();
                    Edge::half_line(&name, a, h)
                }
            }
        })
        .collect();
    QuantumGraph::with_interfaces(vertices, edges).unwrap()
}

pub fn random_potential(rng: &mut ChaCha8Rng, total: f64) -> Vec<PotentialPiece> {
    let count = rng.random_range(1..4);
    unit_cuts(rng, count)
        .windows(2)
        .map(|w| PotentialPiece { length: (w[1] - w[0]) * total, value: rng.random_range(-4.0..4.0) })
        .collect()
}

/// Random Schrödinger graph with `k` edges, `k_finite` finite.
pub fn random_schrodinger_graph(rng: &mut ChaCha8Rng, k: usize, k_finite: usize) -> SchrodingerGraph {
    let (topo, nv) = random_topology(rng, k, k_finite);
    let vertices = vertex_kinds(rng, &topo, nv);
    let edges = topo
        .iter()
        .enumerate()
        .map(|(i, &(a, b))| {
            let name = format!("e{i}");
            match b {
                Some(b) => {
                    let r = rng.random_range(0.3..1.2);
                    SchrodingerEdge::finite(&name, a, b, r, random_potential(rng, 2.0 * r))
                }
                None => {
                    let reach = rng.random_range(1.0..2.0);
                    let tail = rng.random_range(0.0..2.0);
                    SchrodingerEdge::half_line(&name, a, random_potential(rng, reach), tail)
                }
            }
        })
        .collect();
    SchrodingerGraph::with_interfaces(vertices, edges).unwrap()
}

/// Random vector polynomial `Σ c_j y^j` of degree 3 with 2 components.
pub struct VectorPolynomial {
    pub coefficients: Vec<CVector>,
}

impl VectorPolynomial {
    pub fn random(rng: &mut ChaCha8Rng, dim: usize) -> Self {
        Self { coefficients: (0..4).map(|_| CVector::from_fn(dim, |_, _| complex(rng))).collect() }
    }

    pub fn eval(&self, y: f64) -> CVector {
        let mut out = CVector::zeros(self.coefficients[0].len());
        let mut p = 1.0;
        for c in &self.coefficients {
            out += c * c64(p, 0.0);
            p *= y;
        }
        out
    }
}

pub fn to_column(v: CVector) -> CMatrix {
    let n = v.len();
    CMatrix::from_column_slice(n, 1, v.as_slice())
}
