//! Form-bound estimation `β̂ = sup_φ ⟨|b|²φ, φ⟩ / ⟨∇φ, ∇φ⟩` for stationary fields.
//!
//! The quotient is the top eigenvalue of `M φ = λ K φ` where `M` is the
//! lumped mass weighted by `|b|²` and `K` the Dirichlet stiffness matrix of
//! the same finite-volume discretization the solver uses. Power iteration
//! on `K⁻¹ M` with a seeded positive start vector.

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{Grid, Layout};
use crate::linalg::{Stencil7, Tridiagonal, DIRECTIONS};
use crate::rng;
use crate::solver::VectorSamples;

#[derive(Debug, Clone, PartialEq)]
pub struct FormBoundReport {
    pub beta_hat: f64,
    pub iterations: usize,
    pub residual: f64,
    /// Maximizer with unit stiffness norm, one value per grid node.
    pub maximizer: Vec<f64>,
    pub grid: String,
}

impl FormBoundReport {
    pub const CSV_HEADER: [&'static str; 4] = ["beta_hat", "iterations", "residual", "grid"];

    pub fn csv_record(&self) -> [String; 4] {
        [
            format!("{:.12e}", self.beta_hat),
            self.iterations.to_string(),
            format!("{:.6e}", self.residual),
            self.grid.clone(),
        ]
    }
}

enum Stiffness {
    Radial(Tridiagonal),
    Tensor(Stencil7),
}

impl Stiffness {
    fn build(grid: &Grid) -> Self {
        match grid.layout() {
            Layout::Radial(lay) => {
                let n = lay.r.len() - 1;
                let mut k = Tridiagonal::zeros(n);
                for f in 0..n {
                    let c = lay.face[f] / (lay.r[f + 1] - lay.r[f]);
                    k.diag[f] += c;
                    if f + 1 < n {
                        k.diag[f + 1] += c;
                        k.upper[f] = -c;
                        k.lower[f + 1] = -c;
                    }
                }
                Stiffness::Radial(k)
            }
            Layout::Tensor(lay) => {
                let n = lay.n;
                let mut k = Stencil7::zeros(n);
                for i in 0..n * n * n {
                    let (ix, iy, iz) = lay.unflatten(i);
                    let c = [ix, iy, iz];
                    for axis in 0..3 {
                        for side in 0..2 {
                            let inside = if side == 0 { c[axis] > 0 } else { c[axis] + 1 < n };
                            if inside {
                                k.off[2 * axis + side][i] = -lay.h;
                                k.diag[i] += lay.h;
                            } else {
                                k.diag[i] += 2.0 * lay.h;
                            }
                        }
                    }
                }
                debug_assert_eq!(k.off.len(), DIRECTIONS);
                Stiffness::Tensor(k)
            }
        }
    }

    fn unknowns(&self) -> usize {
        match self {
            Stiffness::Radial(k) => k.len(),
            Stiffness::Tensor(k) => k.diag.len(),
        }
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        match self {
            Stiffness::Radial(k) => k.apply(x, y),
            Stiffness::Tensor(k) => k.apply(x, y),
        }
    }

    fn solve(&self, rhs: &[f64], x: &mut [f64]) -> Result<()> {
        match self {
            Stiffness::Radial(k) => k.solve(rhs, x),
            Stiffness::Tensor(k) => k.solve_cg(rhs, x, 1e-12, 20 * k.n * k.n).map(|_| ()),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Lumped `|b|² vol` weights restricted to the unknowns.
fn weights(b: &VectorSamples, grid: &Grid, unknowns: usize) -> Result<Vec<f64>> {
    let ok = match b {
        VectorSamples::Radial(v) => grid.is_radial() && v.len() == grid.len(),
        VectorSamples::Tensor(v) => !grid.is_radial() && v.len() == grid.len(),
    };
    if !ok {
        return Err(Error::GridMismatch(format!("drift samples do not fit {}", grid.describe())));
    }
    let w: Vec<f64> = b
        .squared_magnitudes()
        .iter()
        .zip(grid.volumes())
        .take(unknowns)
        .map(|(b2, v)| b2 * v)
        .collect();
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("b", "|b|² samples must be finite; truncate or mollify first"));
    }
    Ok(w)
}

/// `Σ|b|²φ² vol / Σ|∇φ|² vol` with the stiffness-matched gradient.
pub fn rayleigh(b: &VectorSamples, phi: &[f64], grid: &Grid) -> Result<f64> {
    if phi.len() != grid.len() {
        return Err(Error::GridMismatch("phi length".into()));
    }
    let k = Stiffness::build(grid);
    let n = k.unknowns();
    let w = weights(b, grid, n)?;
    let x = &phi[..n];
    let mut kx = vec![0.0; n];
    k.apply(x, &mut kx);
    let den = dot(x, &kx);
    if !(den > 0.0) {
        return Err(Error::invalid("phi", "zero Dirichlet energy"));
    }
    let num: f64 = x.iter().zip(&w).map(|(p, wi)| p * p * wi).sum();
    Ok(num / den)
}

/// Top generalized eigenvalue of `(diag(|b|² vol), K)` by power iteration.
pub fn estimate_beta(b: &VectorSamples, grid: &Grid, tol: f64, max_iter: usize, seed: u64) -> Result<FormBoundReport> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", format!("need tol > 0, got {tol}")));
    }
    let k = Stiffness::build(grid);
    let n = k.unknowns();
    let w = weights(b, grid, n)?;
    let report = |beta_hat, iterations, residual, mut x: Vec<f64>| {
        x.resize(grid.len(), 0.0);
        FormBoundReport {
            beta_hat,
            iterations,
            residual,
            maximizer: x,
            grid: grid.describe(),
        }
    };
    if w.iter().all(|&v| v == 0.0) {
        return Ok(report(0.0, 0, 0.0, vec![0.0; n]));
    }

    let mut rng = rng::stream(seed, "formbound");
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
    let mut kx = vec![0.0; n];
    let mut mx = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut lambda = 0.0;
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        for i in 0..n {
            mx[i] = w[i] * x[i];
        }
        k.solve(&mx, &mut next)?;
        std::mem::swap(&mut x, &mut next);
        k.apply(&x, &mut kx);
        let energy = dot(&x, &kx);
        let scale = energy.sqrt();
        x.iter_mut().for_each(|v| *v /= scale);
        kx.iter_mut().for_each(|v| *v /= scale);
        lambda = x.iter().zip(&w).map(|(p, wi)| p * p * wi).sum::<f64>();
        let r2: f64 = (0..n).map(|i| (w[i] * x[i] - lambda * kx[i]).powi(2)).sum();
        residual = r2.sqrt() / (lambda * dot(&kx, &kx).sqrt());
        if residual <= tol {
            if x.iter().sum::<f64>() < 0.0 {
                x.iter_mut().for_each(|v| *v = -*v);
            }
            return Ok(report(lambda, it, residual, x));
        }
    }
    let _ = lambda;
    Err(Error::NonConvergence {
        solver: "power-iteration",
        iterations: max_iter,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::truncated_samples;
    use crate::drift::{DriftField, DriftKind};
    use crate::grid::GridSpec;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn unit_ball(n: usize) -> Grid {
        Grid::build(GridSpec::Radial { d: 3, r_max: 1.0, n }).unwrap()
    }

    fn ones(grid: &Grid) -> VectorSamples {
        VectorSamples::Radial(vec![1.0; grid.len()])
    }

    #[test]
    fn rayleigh_examples() {
        let grid = unit_ball(2048);
        let phi = grid.sample(|_, r| if r == 0.0 { PI } else { (PI * r).sin() / r });
        assert_eq!(rayleigh(&VectorSamples::zeros(&grid), &phi, &grid).unwrap(), 0.0);
        let q = rayleigh(&ones(&grid), &phi, &grid).unwrap();
        assert!((q - 1.0 / (PI * PI)).abs() < 1e-5, "{q}");
        let q3 = rayleigh(&ones(&grid).scaled(3.0), &phi, &grid).unwrap();
        assert_relative_eq!(q3, 9.0 * q, max_relative = 1e-13);
        assert!(rayleigh(&ones(&grid), &vec![0.0; grid.len()], &grid).is_err());
    }

    #[test]
    fn bounded_field_oracle() {
        let grid = unit_ball(2048);
        assert_eq!(estimate_beta(&VectorSamples::zeros(&grid), &grid, 1e-9, 100, 1).unwrap().beta_hat, 0.0);
        let r = estimate_beta(&ones(&grid), &grid, 1e-9, 500, 1).unwrap();
        assert!((r.beta_hat - 1.0 / (PI * PI)).abs() < 1e-3, "{}", r.beta_hat);
        let q = rayleigh(&ones(&grid), &r.maximizer, &grid).unwrap();
        assert_relative_eq!(q, r.beta_hat, max_relative = 1e-10);
    }

    #[test]
    fn scaling_is_quadratic() {
        let grid = Grid::build(GridSpec::Radial { d: 3, r_max: 4.0, n: 512 }).unwrap();
        let f = DriftField::hardy(1.0, 3).unwrap();
        let b = truncated_samples(&f, 16, &grid, 0.0).unwrap();
        let a = estimate_beta(&b, &grid, 1e-10, 2000, 3).unwrap().beta_hat;
        let c = estimate_beta(&b.scaled(0.3), &grid, 1e-10, 2000, 3).unwrap().beta_hat;
        assert_relative_eq!(c, 0.09 * a, max_relative = 1e-8);
    }

    #[test]
    fn split_reduces_to_hardy() {
        let grid = Grid::build(GridSpec::Radial { d: 3, r_max: 4.0, n: 256 }).unwrap();
        let h = truncated_samples(&DriftField::hardy(1.0, 3).unwrap(), 16, &grid, 0.0).unwrap();
        let split = DriftField::build(DriftKind::Split { c1: 1.0, c2: 0.0, n: 3, m: 0 }, 3).unwrap();
        let s = truncated_samples(&split, 16, &grid, 0.0).unwrap();
        let a = estimate_beta(&h, &grid, 1e-10, 2000, 5).unwrap().beta_hat;
        let b = estimate_beta(&s, &grid, 1e-10, 2000, 5).unwrap().beta_hat;
        assert!((a - b).abs() <= 1e-10 * a);
    }

    #[test]
    fn larger_domain_never_decreases() {
        let f = DriftField::hardy(1.0, 3).unwrap();
        let h = 1.0 / 128.0;
        let mut prev = 0.0;
        for r_max in [1.0, 2.0, 4.0] {
            let grid = Grid::build(GridSpec::Radial { d: 3, r_max, n: (r_max / h) as usize }).unwrap();
            let b = truncated_samples(&f, 16, &grid, 0.0).unwrap();
            let beta = estimate_beta(&b, &grid, 1e-10, 5000, 2).unwrap().beta_hat;
            assert!(beta >= prev);
            prev = beta;
        }
    }

    #[test]
    fn tensor_matches_radial_for_bounded_field() {
        // |b| = 1 on the cube [-1, 1]³: top eigenvalue 1/(3π²/4).
        let grid = Grid::build(GridSpec::Tensor3 { half_width: 1.0, n: 24 }).unwrap();
        let b = VectorSamples::Tensor(vec![[1.0, 0.0, 0.0]; grid.len()]);
        let r = estimate_beta(&b, &grid, 1e-9, 500, 4).unwrap();
        assert!((r.beta_hat - 4.0 / (3.0 * PI * PI)).abs() < 2e-3, "{}", r.beta_hat);
    }
}
