//! Equilateral Schrödinger 3-star with Dirichlet leaves and a Kirchhoff centre.
//! Expected: (π/2)², π² (×2), (3π/2)², (2π)² (×2), ...

use cansys::graph::InterfaceKind;
use cansys::schrodinger::{SchrodingerEdge, SchrodingerGraph};
use cansys::spectral::eigenvalues;

fn main() -> cansys::Result<()> {
    let graph = SchrodingerGraph::with_interfaces(
        vec![
            ("centre".into(), InterfaceKind::Kirchhoff),
            ("a".into(), InterfaceKind::Dirichlet),
            ("b".into(), InterfaceKind::Dirichlet),
            ("c".into(), InterfaceKind::Dirichlet),
        ],
        vec![
            SchrodingerEdge::free("ea", 0, 1, 1.0),
            SchrodingerEdge::free("eb", 0, 2, 1.0),
            SchrodingerEdge::free("ec", 0, 3, 1.0),
        ],
    )?;
    let pipeline = graph.pipeline()?;
    let compiled = &pipeline.compiled;
    println!("compiled order {} on [0, 1]", compiled.order());
    for (v, _, iso) in &pipeline.transport_residuals {
        println!("  vertex {v}: transported ‖αJα*‖ = {iso:.1e}");
    }
    let d = eigenvalues(&compiled.problem()?, (0.5, 45.0))?;
    for p in &d.points {
        println!("λ = {:>12.8}  (k = {:.6}π)  multiplicity {}", p.t, p.t.sqrt() / std::f64::consts::PI, p.multiplicity);
    }
    Ok(())
}
