//! Gauss–Legendre quadrature with order doubling and adaptive bisection.

use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::GaussLegendre;

use crate::algebra::{norm, CMatrix};
use crate::error::{Error, Result};

pub const BASE_ORDER: usize = 20;
pub const MAX_DOUBLINGS: usize = 5;
pub const REL_TOL: f64 = 1e-12;

/// Nodes and weights on [−1, 1].
pub fn rule(order: usize) -> Arc<Vec<(f64, f64)>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<(f64, f64)>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    guard
        .entry(order)
        .or_insert_with(|| {
            let gl = GaussLegendre::new(NonZeroUsize::new(order).expect("order must be positive"));
            let mut pairs: Vec<(f64, f64)> = gl.as_node_weight_pairs().to_vec();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            Arc::new(pairs)
        })
        .clone()
}

/// Nodes and weights mapped to `[a, b]`.
pub fn mapped_rule(order: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    rule(order).iter().map(|&(x, w)| (mid + half * x, half * w)).collect()
}

fn apply<F>(order: usize, pieces: &[(f64, f64)], f: &F) -> Result<(CMatrix, f64)>
where
    F: Fn(f64) -> Result<CMatrix>,
{
    let mut sum: Option<CMatrix> = None;
    let mut scale = 0.0;
    for &(a, b) in pieces {
        for (x, w) in mapped_rule(order, a, b) {
            let v = f(x)?;
            scale += w.abs() * norm(&v);
            match sum.as_mut() {
                Some(s) => *s += v * crate::algebra::real(w),
                None => sum = Some(v * crate::algebra::real(w)),
            }
        }
    }
    Ok((sum.expect("at least one node"), scale))
}

/// `∫_a^b f` for a matrix valued integrand, splitting `[a, b]` into `pieces`
/// equal parts and doubling the order from 20 until successive estimates agree
/// to 1e−12 relative.
pub fn integrate_matrix<F>(a: f64, b: f64, pieces: usize, f: F) -> Result<CMatrix>
where
    F: Fn(f64) -> Result<CMatrix>,
{
    let pieces = pieces.max(1);
    let h = (b - a) / pieces as f64;
    let parts: Vec<(f64, f64)> = (0..pieces)
        .map(|i| (a + h * i as f64, if i + 1 == pieces { b } else { a + h * (i + 1) as f64 }))
        .collect();
    let mut order = BASE_ORDER;
    let (mut prev, _) = apply(order, &parts, &f)?;
    let mut change = f64::INFINITY;
    for _ in 0..MAX_DOUBLINGS {
        order *= 2;
        let (next, scale) = apply(order, &parts, &f)?;
        change = norm(&(&next - &prev));
        let reference = norm(&next).max(scale).max(f64::MIN_POSITIVE);
        if change <= REL_TOL * reference {
            return Ok(next);
        }
        change /= reference;
        prev = next;
    }
    Err(Error::NoConvergence { change })
}

/// Adaptive Gauss–Legendre for a scalar integrand: 20/40 point pairs on
/// bisected intervals until the local estimates agree to `tol` (absolute).
/// The interval is always bisected at least four times.
pub fn integrate_adaptive<F>(a: f64, b: f64, tol: f64, f: &F) -> f64
where
    F: Fn(f64) -> f64,
{
    fn estimate<F: Fn(f64) -> f64>(order: usize, a: f64, b: f64, f: &F) -> (f64, f64) {
        mapped_rule(order, a, b).into_iter().fold((0.0, 0.0), |(s, m), (x, w)| {
            let v = f(x);
            (s + w * v, m + (w * v).abs())
        })
    }
    fn recurse<F: Fn(f64) -> f64>(a: f64, b: f64, tol: f64, depth: usize, f: &F) -> f64 {
        if depth >= 4 {
            let (coarse, _) = estimate(BASE_ORDER, a, b, f);
            let (fine, magnitude) = estimate(2 * BASE_ORDER, a, b, f);
            let floor = 1e-12 * magnitude;
            if (fine - coarse).abs() <= tol.max(floor) || depth == 50 {
                return fine;
            }
        }
        let mid = 0.5 * (a + b);
        recurse(a, mid, 0.5 * tol, depth + 1, f) + recurse(mid, b, 0.5 * tol, depth + 1, f)
    }
    if a == b {
        return 0.0;
    }
    recurse(a, b, tol, 0, f)
}

/// Matrix version of [`integrate_adaptive`]; `tol` is absolute in the Frobenius norm.
pub fn integrate_adaptive_matrix<F>(a: f64, b: f64, tol: f64, f: &F) -> Result<CMatrix>
where
    F: Fn(f64) -> Result<CMatrix>,
{
    fn estimate<F: Fn(f64) -> Result<CMatrix>>(order: usize, a: f64, b: f64, f: &F) -> Result<(CMatrix, f64)> {
        apply(order, &[(a, b)], f)
    }
    fn recurse<F: Fn(f64) -> Result<CMatrix>>(a: f64, b: f64, tol: f64, depth: usize, f: &F) -> Result<CMatrix> {
        if depth >= 4 {
            let (coarse, _) = estimate(BASE_ORDER, a, b, f)?;
            let (fine, magnitude) = estimate(2 * BASE_ORDER, a, b, f)?;
            let floor = 1e-12 * magnitude;
            if norm(&(&fine - &coarse)) <= tol.max(floor) || depth == 50 {
                return Ok(fine);
            }
        }
        let mid = 0.5 * (a + b);
        Ok(recurse(a, mid, 0.5 * tol, depth + 1, f)? + recurse(mid, b, 0.5 * tol, depth + 1, f)?)
    }
    if a == b {
        let probe = f(a)?;
        return Ok(CMatrix::zeros(probe.nrows(), probe.ncols()));
    }
    recurse(a, b, tol, 0, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::real;

    #[test]
    fn rule_integrates_polynomials() {
        let r = rule(20);
        assert_eq!(r.len(), 20);
        let s: f64 = r.iter().map(|&(x, w)| w * x.powi(38)).sum();
        assert!((s - 2.0 / 39.0).abs() < 1e-14);
    }

    #[test]
    fn matrix_integral_of_trig() {
        let v = integrate_matrix(0.0, std::f64::consts::PI, 1, |x| {
            Ok(CMatrix::from_element(1, 1, real(x.sin())))
        })
        .unwrap();
        assert!((v[(0, 0)].re - 2.0).abs() < 1e-13);
    }

    #[test]
    fn matrix_integral_zero_integrand() {
        let v = integrate_matrix(0.0, 1.0, 3, |_| Ok(CMatrix::zeros(2, 2))).unwrap();
        assert_eq!(norm(&v), 0.0);
    }

    #[test]
    fn adaptive_resolves_narrow_peak() {
        let y = 1e-4;
        let f = |t: f64| y / ((t - 3.5).powi(2) + y * y);
        let v = integrate_adaptive(3.0, 4.0, 1e-12, &f);
        let exact = (0.5 / y).atan() * 2.0;
        assert!((v - exact).abs() < 1e-9);
    }
}
