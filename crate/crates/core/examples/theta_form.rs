//! Non-definite coefficients: a theta-form compact graph warns, and a
//! theta-form half line is replaced by a boundary row.

use std::f64::consts::PI;

use cansys::algebra::{c64, identity, BoundaryCondition};
use cansys::graph::{compile, reduce_indefinite_halflines, Edge, InterfaceKind, QuantumGraph};
use cansys::hamiltonian::{theta_projection, Hamiltonian, Tail};

fn main() -> cansys::Result<()> {
    let flat = |r: f64| Hamiltonian::constant(theta_projection(PI / 2.0) * c64(2.0, 0.0), -r, r);
    let g = QuantumGraph::with_interfaces(
        vec![
            ("c".into(), InterfaceKind::Kirchhoff),
            ("a".into(), InterfaceKind::Dirichlet),
            ("b".into(), InterfaceKind::Dirichlet),
        ],
        vec![Edge::finite("ea", 0, 1, 0.5, flat(0.5)?), Edge::finite("eb", 0, 2, 0.5, flat(0.5)?)],
    )?;
    for w in compile(&g)?.warnings {
        println!("warning: {w}");
    }

    let theta: f64 = 0.7;
    let stub = Hamiltonian::constant(identity(2), -1.0, 0.0)?
        .with_tail(Tail::Projection(BoundaryCondition::from_real_rows(&[&[theta.cos(), theta.sin()]])?))?;
    let g = QuantumGraph::with_interfaces(
        vec![("hub".into(), InterfaceKind::Kirchhoff), ("far".into(), InterfaceKind::Dirichlet)],
        vec![
            Edge::finite("bond", 0, 1, 1.0, Hamiltonian::constant(identity(2), -1.0, 1.0)?),
            Edge::half_line("stub", 0, stub),
        ],
    )?;
    match compile(&g) {
        Err(e) => println!("\nunreduced: {e}"),
        Ok(_) => println!("\nunreduced graph compiled"),
    }
    let red = reduce_indefinite_halflines(&g)?;
    for r in &red.reduced {
        println!("edge `{}`: θ = {:.6}, new vertex `{}` with row ({:.6}, {:.6})", r.edge, r.theta, r.vertex, r.row.0, r.row.1);
    }
    let c = compile(&red.graph)?;
    println!("reduced graph: compact {}, order {}, {} warnings", c.is_compact(), c.order(), c.warnings.len());
    let d = cansys::spectral::eigenvalues(&c.problem()?, (0.1, 10.0))?;
    println!("eigenvalues: {:?}", d.eigenvalues().iter().map(|t| format!("{t:.8}")).collect::<Vec<_>>());
    Ok(())
}
