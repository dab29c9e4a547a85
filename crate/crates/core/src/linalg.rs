//! Sparse kernels for the two stencil shapes the grids produce.

use crate::error::{Error, Result};

/// Tridiagonal matrix; row `i` reads `lower[i] u[i-1] + diag[i] u[i] + upper[i] u[i+1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Tridiagonal {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut v = self.diag[i] * x[i];
            if i > 0 {
                v += self.lower[i] * x[i - 1];
            }
            if i + 1 < n {
                v += self.upper[i] * x[i + 1];
            }
            y[i] = v;
        }
    }

    /// Thomas algorithm. Requires a diagonally dominant matrix (no pivoting).
    pub fn solve(&self, rhs: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = self.diag[0];
        if denom == 0.0 {
            return Err(Error::NonConvergence {
                solver: "thomas",
                iterations: 0,
                residual: f64::INFINITY,
            });
        }
        c[0] = self.upper[0] / denom;
        d[0] = rhs[0] / denom;
        for i in 1..n {
            denom = self.diag[i] - self.lower[i] * c[i - 1];
            if denom == 0.0 {
                return Err(Error::NonConvergence {
                    solver: "thomas",
                    iterations: i,
                    residual: f64::INFINITY,
                });
            }
            c[i] = if i + 1 < n { self.upper[i] / denom } else { 0.0 };
            d[i] = (rhs[i] - self.lower[i] * d[i - 1]) / denom;
        }
        out[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            out[i] = d[i] - c[i] * out[i + 1];
        }
        Ok(())
    }
}

/// Neighbour directions of a 7-point stencil: -x, +x, -y, +y, -z, +z.
pub const DIRECTIONS: usize = 6;

/// 7-point operator on an `n³` cell-centred grid. Neighbour coefficients
/// pointing outside the grid are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil7 {
    pub n: usize,
    pub diag: Vec<f64>,
    pub off: [Vec<f64>; DIRECTIONS],
}

impl Stencil7 {
    pub fn zeros(n: usize) -> Self {
        let len = n * n * n;
        Stencil7 {
            n,
            diag: vec![0.0; len],
            off: std::array::from_fn(|_| vec![0.0; len]),
        }
    }

    #[inline]
    fn neighbours(&self, i: usize) -> [Option<usize>; DIRECTIONS] {
        let n = self.n;
        let (ix, iy, iz) = (i % n, (i / n) % n, i / (n * n));
        let s = [1, n, n * n];
        let coord = [ix, iy, iz];
        let mut out = [None; DIRECTIONS];
        for axis in 0..3 {
            if coord[axis] > 0 {
                out[2 * axis] = Some(i - s[axis]);
            }
            if coord[axis] + 1 < n {
                out[2 * axis + 1] = Some(i + s[axis]);
            }
        }
        out
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut v = self.diag[i] * x[i];
            for (dir, nb) in self.neighbours(i).into_iter().enumerate() {
                if let Some(j) = nb {
                    v += self.off[dir][i] * x[j];
                }
            }
            *yi = v;
        }
    }

    fn relax(&self, rhs: &[f64], x: &mut [f64], i: usize) {
        let mut v = rhs[i];
        for (dir, nb) in self.neighbours(i).into_iter().enumerate() {
            if let Some(j) = nb {
                v -= self.off[dir][i] * x[j];
            }
        }
        x[i] = v / self.diag[i];
    }

    fn residual_norm(&self, rhs: &[f64], x: &[f64], scratch: &mut [f64]) -> f64 {
        self.apply(x, scratch);
        scratch
            .iter()
            .zip(rhs)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Symmetric Gauss–Seidel iteration started from `x`.
    ///
    /// For an M-matrix with unit-dominated rows every update is a convex
    /// combination of `rhs[i]` and neighbour values, so each iterate obeys the
    /// discrete maximum principle of the exact solution.
    pub fn solve_gauss_seidel(&self, rhs: &[f64], x: &mut [f64], rel_tol: f64, max_sweeps: usize) -> Result<usize> {
        let len = x.len();
        let mut scratch = vec![0.0; len];
        let rhs_norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rhs_norm == 0.0 {
            x.iter_mut().for_each(|v| *v = 0.0);
            return Ok(0);
        }
        let mut res = f64::INFINITY;
        for sweep in 1..=max_sweeps {
            for i in 0..len {
                self.relax(rhs, x, i);
            }
            for i in (0..len).rev() {
                self.relax(rhs, x, i);
            }
            if sweep % 2 == 0 || sweep == max_sweeps {
                res = self.residual_norm(rhs, x, &mut scratch) / rhs_norm;
                if res <= rel_tol {
                    return Ok(sweep);
                }
            }
        }
        Err(Error::NonConvergence {
            solver: "gauss-seidel",
            iterations: max_sweeps,
            residual: res,
        })
    }

    /// Jacobi-preconditioned conjugate gradients for symmetric positive definite stencils.
    pub fn solve_cg(&self, rhs: &[f64], x: &mut [f64], rel_tol: f64, max_iter: usize) -> Result<usize> {
        let len = x.len();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
        let rhs_norm = dot(rhs, rhs).sqrt();
        if rhs_norm == 0.0 {
            x.iter_mut().for_each(|v| *v = 0.0);
            return Ok(0);
        }
        let mut r = vec![0.0; len];
        self.apply(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(rhs) {
            *ri = bi - *ri;
        }
        let mut z: Vec<f64> = r.iter().zip(&self.diag).map(|(a, d)| a / d).collect();
        let mut p = z.clone();
        let mut ap = vec![0.0; len];
        let mut rz = dot(&r, &z);
        let mut res = dot(&r, &r).sqrt() / rhs_norm;
        for it in 0..max_iter {
            if res <= rel_tol {
                return Ok(it);
            }
            self.apply(&p, &mut ap);
            let alpha = rz / dot(&p, &ap);
            for i in 0..len {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            res = dot(&r, &r).sqrt() / rhs_norm;
            for i in 0..len {
                z[i] = r[i] / self.diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..len {
                p[i] = z[i] + beta * p[i];
            }
        }
        if res <= rel_tol {
            return Ok(max_iter);
        }
        Err(Error::NonConvergence {
            solver: "conjugate-gradient",
            iterations: max_iter,
            residual: res,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_solves_poisson_1d() {
        let n = 50;
        let mut m = Tridiagonal::zeros(n);
        for i in 0..n {
            m.lower[i] = -1.0;
            m.diag[i] = 2.0;
            m.upper[i] = -1.0;
        }
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut rhs = vec![0.0; n];
        m.apply(&x_true, &mut rhs);
        let mut x = vec![0.0; n];
        m.solve(&rhs, &mut x).unwrap();
        for (a, b) in x.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    fn laplace_plus_identity(n: usize, shift: f64) -> Stencil7 {
        let mut s = Stencil7::zeros(n);
        for i in 0..n * n * n {
            s.diag[i] = shift + 6.0;
            for dir in 0..DIRECTIONS {
                s.off[dir][i] = -1.0;
            }
        }
        s
    }

    #[test]
    fn cg_and_gauss_seidel_agree() {
        let n = 10;
        let s = laplace_plus_identity(n, 0.5);
        let rhs: Vec<f64> = (0..n * n * n).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let mut x_cg = vec![0.0; rhs.len()];
        s.solve_cg(&rhs, &mut x_cg, 1e-13, 500).unwrap();
        let mut x_gs = rhs.clone();
        s.solve_gauss_seidel(&rhs, &mut x_gs, 1e-13, 2000).unwrap();
        for (a, b) in x_cg.iter().zip(&x_gs) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn gauss_seidel_iterates_respect_max_principle() {
        // M-matrix with unit row excess: solution bounded by max |rhs|.
        let n = 8;
        let s = laplace_plus_identity(n, 1.0);
        let rhs: Vec<f64> = (0..n * n * n).map(|i| if i % 5 == 0 { 1.0 } else { 0.0 }).collect();
        let mut x = rhs.clone();
        let _ = s.solve_gauss_seidel(&rhs, &mut x, 1e-30, 3);
        assert!(x.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
}
