//! Half lines: a constant definite tail (m = i), and a projection tail which
//! reproduces the regular problem with that boundary row.

use cansys::algebra::{c64, identity, norm, BoundaryCondition, HermitianPsd};
use cansys::hamiltonian::{Hamiltonian, Segment, Tail};
use cansys::spectral::{stieltjes_inversion, weight_limit, SpectralProblem};

fn main() -> cansys::Result<()> {
    let alpha = BoundaryCondition::from_real_rows(&[&[0.0, 1.0]])?;

    let free = Hamiltonian::new(0.0, vec![], Some(Tail::DefiniteConstant(HermitianPsd::new(identity(2), 1e-12)?)))?;
    let free = SpectralProblem::half_line(free, alpha.clone())?;
    println!("free half line: m(1+2i) = {:.12}", free.m(c64(1.0, 2.0))?[(0, 0)]);
    let mass = stieltjes_inversion(&free, 0.0, 1.0, 0.3)?[(0, 0)].re;
    println!("ρ((0, 1)) = {mass:.12}  (1/π = {:.12})", 1.0 / std::f64::consts::PI);

    let beta = BoundaryCondition::from_real_rows(&[&[0.6, 0.8]])?;
    let h = Hamiltonian::new(
        0.0,
        vec![
            Segment::constant(0.4, cansys::algebra::real_matrix(&[&[2.0, 0.3], &[0.3, 1.0]])),
            Segment::constant(0.9, cansys::algebra::real_matrix(&[&[1.0, 0.0], &[0.0, 3.0]])),
        ],
        None,
    )?;
    let regular = SpectralProblem::regular(h.clone(), alpha.clone(), beta.clone())?;
    let tailed = SpectralProblem::half_line(h.with_tail(Tail::Projection(beta))?, alpha)?;
    for z in [c64(0.0, 1.0), c64(5.0, 0.2)] {
        let d = norm(&(tailed.m(z)? - regular.m(z)?));
        println!("projection tail vs regular at {z}: {d:.2e}");
    }
    let d = cansys::spectral::eigenvalues(&tailed, (0.0, 6.0))?;
    for p in &d.points {
        let lim = weight_limit(&tailed, p.t, &[1e-4, 1e-5, 1e-6])?;
        println!("  t = {:.9}  ρ = {:.9}  from −iy m(t+iy): {:.9}", p.t, p.weight[(0, 0)].re, lim[(0, 0)].re);
    }
    Ok(())
}
