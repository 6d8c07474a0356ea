//! Green kernel and resolvent on a two-piece system of order 4.

use cansys::algebra::{c64, identity, real_matrix, BoundaryCondition, CMatrix, CVector};

fn show(v: &CVector) -> String {
    v.iter().map(|c| format!("{:>9.5}{:+.5}i", c.re, c.im)).collect::<Vec<_>>().join("  ")
}
use cansys::hamiltonian::{Hamiltonian, Segment};
use cansys::spectral::{apply_resolvent, GreenKernel, SpectralProblem};

fn main() -> cansys::Result<()> {
    let mut h1 = identity(4);
    h1[(0, 2)] = c64(0.5, 0.0);
    h1[(2, 0)] = c64(0.5, 0.0);
    let h2 = real_matrix(&[&[2.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0], &[0.0, 0.0, 1.0, 0.0], &[0.0, 0.0, 0.0, 3.0]]);
    let h = Hamiltonian::new(0.0, vec![Segment::constant(0.5, h1), Segment::constant(0.7, h2)], None)?;
    let dirichlet = BoundaryCondition::from_real_rows(&[&[0.0, 0.0, 1.0, 0.0], &[0.0, 0.0, 0.0, 1.0]])?;
    let mixed = BoundaryCondition::new(CMatrix::from_fn(2, 4, |i, j| if j == i { c64(1.0, 0.0) } else { c64(0.0, 0.0) }))?;
    let problem = SpectralProblem::regular(h, dirichlet, mixed)?;

    let z = c64(1.0, 0.5);
    let k = GreenKernel::new(&problem, z)?;
    println!("m({z}) =\n{:.6}", k.m());
    for x in [0.2, 0.5, 0.9] {
        println!("jump of G at x = {x}: defect {:.2e}", k.jump_defect(x)?);
    }
    println!("G(0.3, 0.8) =\n{:.6}", k.eval(0.3, 0.8)?);

    let f = |x: f64| -> cansys::Result<CVector> { Ok(CVector::from_fn(4, |i, _| c64((x * (i + 1) as f64).sin(), 0.0))) };
    let g = apply_resolvent(&problem, z, f)?;
    for x in [0.0, 0.4, 0.8, 1.2] {
        println!("(S − z)⁻¹f at {x:.1}: {}", show(&g.evaluate(x)?));
    }
    Ok(())
}
