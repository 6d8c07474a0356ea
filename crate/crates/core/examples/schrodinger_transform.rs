//! Schrödinger edges as canonical systems: transfer matrices, the
//! coefficient [[p², pq], [pq, q²]], and the isometry f ↦ T⁻¹(0, f).

use cansys::graph::InterfaceKind;
use cansys::schrodinger::{PotentialPiece, SchrodingerEdge, SchrodingerGraph};
use cansys::spectral::eigenvalues;

fn main() -> cansys::Result<()> {
    let well = SchrodingerEdge::finite(
        "well",
        0,
        1,
        1.5,
        vec![
            PotentialPiece { length: 1.0, value: 0.0 },
            PotentialPiece { length: 1.0, value: -6.0 },
            PotentialPiece { length: 1.0, value: 0.0 },
        ],
    );
    for x in [-1.5, -0.5, 0.0, 0.5, 1.5] {
        let t = well.transfer(x)?;
        println!("T({x:>4}) = [[{:>9.5}, {:>9.5}], [{:>9.5}, {:>9.5}]]  det {:.15}", t[(0, 0)], t[(0, 1)], t[(1, 0)], t[(1, 1)], t.determinant());
    }
    let h = well.to_canonical()?;
    println!("H(0) =\n{:.6}", h.value_at(0.0)?);

    let graph = SchrodingerGraph::with_interfaces(
        vec![("l".into(), InterfaceKind::Dirichlet), ("r".into(), InterfaceKind::Dirichlet)],
        vec![well],
    )?;
    let f = |_: usize, x: f64| cansys::algebra::c64((2.0 * x).sin(), x * x);
    let (plain, weighted) = graph.isometry_check(f, 2.0)?;
    println!("‖f‖² = {plain:.12}, ‖Uf‖²_H = {weighted:.12}");

    let pipeline = graph.pipeline()?;
    let d = eigenvalues(&pipeline.compiled.problem()?, (-6.0, 20.0))?;
    println!("eigenvalues of −y'' + Vy on the well: {:?}", d.eigenvalues().iter().map(|t| format!("{t:.8}")).collect::<Vec<_>>());
    Ok(())
}
