//! Round trip through the on-disk formats: a system and a graph written as
//! TOML and JSON, read back, and compiled.

use cansys::algebra::{identity, BoundaryCondition};
use cansys::graph::InterfaceKind;
use cansys::hamiltonian::Hamiltonian;
use cansys::io::{parse_document, write_graph, write_system, Document, Format, GraphModel, GraphSpec, SystemSpec};
use cansys::schrodinger::{SchrodingerEdge, SchrodingerGraph};
use cansys::spectral::SpectralProblem;

fn main() -> cansys::Result<()> {
    let row = BoundaryCondition::from_real_rows(&[&[0.0, 1.0]])?;
    let problem = SpectralProblem::regular(Hamiltonian::constant(identity(2), 0.0, 1.0)?, row.clone(), row)?;
    let text = write_system(&SystemSpec::from_problem(&problem), Format::Toml)?;
    println!("{text}");
    let Document::System(spec) = parse_document(&text, Format::Toml)? else { unreachable!() };
    let back = spec.build()?;
    println!("m(i) after the round trip: {:.12}\n", back.m(cansys::algebra::c64(0.0, 1.0))?[(0, 0)]);

    let star = SchrodingerGraph::with_interfaces(
        vec![("c".into(), InterfaceKind::Kirchhoff), ("a".into(), InterfaceKind::Dirichlet), ("b".into(), InterfaceKind::Dirichlet)],
        vec![SchrodingerEdge::free("ea", 0, 1, 1.0), SchrodingerEdge::free("eb", 0, 2, 1.0)],
    )?;
    let (canonical, _) = star.to_canonical()?;
    let json = write_graph(&GraphSpec::from_graph(&canonical), Format::Json)?;
    println!("{}…", &json[..json.len().min(400)]);
    let Document::Graph(g) = parse_document(&json, Format::Json)? else { unreachable!() };
    let GraphModel::Canonical(q) = g.build()? else { unreachable!() };
    let c = cansys::graph::compile(&q)?;
    println!("\nread back {} edges, compiled order {}", q.edge_count(), c.order());
    Ok(())
}
