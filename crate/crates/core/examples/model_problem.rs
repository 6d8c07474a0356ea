//! H = I on (0, 1) with Neumann-type rows at both ends: m(z) = −cot z,
//! eigenvalues kπ with unit weights.

use std::f64::consts::PI;

use cansys::algebra::{c64, identity, BoundaryCondition};
use cansys::hamiltonian::Hamiltonian;
use cansys::spectral::{eigenvalues, herglotz_decompose, SpectralProblem};

fn main() -> cansys::Result<()> {
    let h = Hamiltonian::constant(identity(2), 0.0, 1.0)?;
    let row = BoundaryCondition::from_real_rows(&[&[0.0, 1.0]])?;
    let problem = SpectralProblem::regular(h, row.clone(), row)?;

    for z in [c64(0.0, 1.0), c64(2.0, 0.5), c64(-7.0, 0.1)] {
        let m = problem.m(z)?[(0, 0)];
        let cot = z.cos() / z.sin();
        println!("m({z}) = {m:.12}   −cot z = {:.12}", -cot);
    }

    let d = eigenvalues(&problem, (-10.5 * PI, 10.5 * PI))?;
    println!("\n{} eigenvalues in |t| ≤ 10.5π", d.points.len());
    for p in d.points.iter().filter(|p| p.t >= 0.0).take(4) {
        println!("  t = {:>12.9} = {:.3}π   ρ = {:.10}", p.t, p.t / PI, p.weight[(0, 0)].re);
    }

    let data = herglotz_decompose(&problem, &d, 1e-2)?;
    println!("\nA = {:.2e}", data.a[(0, 0)].norm());
    println!("B = {:.2e} (tail bound {:.2e})", data.b[(0, 0)].norm(), data.tail.bound);
    let z = c64(0.3, 0.7);
    let diff = (data.evaluate(z) - problem.m(z)?)[(0, 0)].norm();
    println!("truncated representation at {z}: off by {diff:.2e}");
    Ok(())
}
