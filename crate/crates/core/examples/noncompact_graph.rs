//! A finite bond joined to a half line by a δ vertex, compiled into one
//! half-line system, with the rewiring map checked against edge norms.

use cansys::algebra::{c64, identity, real_matrix, CVector, HermitianPsd};
use cansys::evolve::gram_of;
use cansys::graph::{compile, Edge, InterfaceKind, QuantumGraph};
use cansys::hamiltonian::{Hamiltonian, Segment, Tail};

fn main() -> cansys::Result<()> {
    let bond = Hamiltonian::new(
        -0.8,
        vec![
            Segment::constant(0.6, real_matrix(&[&[1.0, 0.2], &[0.2, 1.0]])),
            Segment::constant(1.0, identity(2)),
        ],
        None,
    )?;
    let lead = Hamiltonian::new(-1.0, vec![Segment::constant(1.5, real_matrix(&[&[2.0, 0.0], &[0.0, 0.5]]))], None)?
        .with_tail(Tail::DefiniteConstant(HermitianPsd::new(identity(2), 1e-12)?))?;
    let graph = QuantumGraph::with_interfaces(
        vec![("end".into(), InterfaceKind::Dirichlet), ("joint".into(), InterfaceKind::Delta(1.5))],
        vec![Edge::finite("bond", 0, 1, 0.8, bond), Edge::half_line("lead", 1, lead)],
    )?;
    let compiled = compile(&graph)?;
    println!("compact: {}, order {}", compiled.is_compact(), compiled.order());
    println!("half lengths {:?}", compiled.half_lengths);
    println!("interleave map {:?}", compiled.index.c.map());
    let (orth, iso) = compiled.beta.residuals();
    println!("assembled β: ‖ββ*−I‖ = {orth:.1e}, ‖βJβ*‖ = {iso:.1e}");

    let problem = compiled.problem()?;
    for z in [c64(0.0, 1.0), c64(3.0, 0.2)] {
        println!("m({z}) =\n{:.6}", problem.m(z)?);
    }

    let f = |e: usize, y: f64| -> cansys::Result<CVector> {
        Ok(CVector::from_vec(vec![c64(1.0 + y * e as f64, 0.0), c64(y.cos(), y)]))
    };
    let zero = c64(0.0, 0.0);
    let mut edge_norm = 0.0;
    for (e, edge) in graph.edges().iter().enumerate() {
        let h = &edge.hamiltonian;
        let upper = if edge.is_half_line() { 2.0 } else { h.end() };
        let col = |y: f64| f(e, y).map(|v| cansys::algebra::CMatrix::from_column_slice(2, 1, v.as_slice()));
        edge_norm += gram_of(h, h.start(), upper, zero, zero, col, col)?[(0, 0)].re;
    }
    let col = |x: f64| compiled.rewire(f, x).map(|v| cansys::algebra::CMatrix::from_column_slice(v.len(), 1, v.as_slice()));
    let compiled_norm = gram_of(&compiled.hamiltonian, 0.0, 2.0, zero, zero, col, col)?[(0, 0)].re;
    println!("‖f‖² on edges {edge_norm:.12}, after rewiring {compiled_norm:.12}");
    Ok(())
}
