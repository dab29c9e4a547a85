//! Spatial discretizations of `ℝ^d`.
//!
//! * `Radial`: uniform nodes `r_i = i h` on `[0, r_max]`, symmetry at `r = 0`,
//!   Dirichlet-zero at `r_max`. Values carry all `n + 1` nodes; the last is 0.
//! * `RadialLog`: geometric nodes on `[r_min, r_max]` with a natural
//!   (zero-flux) inner boundary. Used to resolve many scales near a point
//!   singularity.
//! * `Tensor3`: cell-centred `n³` grid on `[-L, L]³` with Dirichlet-zero walls
//!   imposed through antisymmetric ghost cells.
//!
//! Radial quantities use the full `d`-dimensional volume element
//! `|S^{d-1}| r^{d-1} dr`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridSpec {
    Radial { d: usize, r_max: f64, n: usize },
    RadialLog { d: usize, r_min: f64, r_max: f64, n: usize },
    Tensor3 { half_width: f64, n: usize },
}

pub const MIN_NODES: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    spec: GridSpec,
    layout: Layout,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Layout {
    Radial(RadialLayout),
    Tensor(TensorLayout),
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct RadialLayout {
    pub d: usize,
    /// Node radii, `n + 1` entries; the last node is the Dirichlet boundary.
    pub r: Vec<f64>,
    /// Dual-cell volumes.
    pub vol: Vec<f64>,
    /// Area of the face between node `i` and `i + 1` (`n` entries).
    pub face: Vec<f64>,
    /// Whether node 0 sits at the origin (symmetry) or at `r_min` (zero flux).
    pub origin: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct TensorLayout {
    pub n: usize,
    pub h: f64,
    pub half_width: f64,
}

/// `|S^{d-1}| = 2π^{d/2} / Γ(d/2)`.
pub fn sphere_area(d: usize) -> f64 {
    // Γ(d/2) by the recurrence Γ(x + 1) = x Γ(x) from Γ(1) or Γ(1/2).
    let (mut x, mut gamma) = if d % 2 == 0 { (1.0, 1.0) } else { (0.5, PI.sqrt()) };
    let target = d as f64 / 2.0;
    while x < target {
        gamma *= x;
        x += 1.0;
    }
    2.0 * PI.powf(d as f64 / 2.0) / gamma
}

impl Grid {
    pub fn build(spec: GridSpec) -> Result<Self> {
        let layout = match spec {
            GridSpec::Radial { d, r_max, n } => {
                check_common(d, n)?;
                if !(r_max.is_finite() && r_max > 0.0) {
                    return Err(Error::invalid("r_max", format!("need r_max > 0, got {r_max}")));
                }
                let h = r_max / n as f64;
                let r: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
                Layout::Radial(radial_layout(d, r, true))
            }
            GridSpec::RadialLog { d, r_min, r_max, n } => {
                check_common(d, n)?;
                if !(r_min.is_finite() && r_min > 0.0 && r_max.is_finite() && r_max > r_min) {
                    return Err(Error::invalid(
                        "r_min,r_max",
                        format!("need 0 < r_min < r_max, got ({r_min}, {r_max})"),
                    ));
                }
                let ratio = (r_max / r_min).ln() / n as f64;
                let mut r: Vec<f64> = (0..=n).map(|i| r_min * (ratio * i as f64).exp()).collect();
                r[n] = r_max;
                Layout::Radial(radial_layout(d, r, false))
            }
            GridSpec::Tensor3 { half_width, n } => {
                if n < MIN_NODES {
                    return Err(Error::invalid("n", format!("need n >= {MIN_NODES}, got {n}")));
                }
                if !(half_width.is_finite() && half_width > 0.0) {
                    return Err(Error::invalid("L", format!("need L > 0, got {half_width}")));
                }
                Layout::Tensor(TensorLayout {
                    n,
                    h: 2.0 * half_width / n as f64,
                    half_width,
                })
            }
        };
        Ok(Grid { spec, layout })
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub(crate) fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.layout, Layout::Radial(_))
    }

    /// Spatial dimension of the discretized space.
    pub fn dim(&self) -> usize {
        match &self.layout {
            Layout::Radial(r) => r.d,
            Layout::Tensor(_) => 3,
        }
    }

    /// Number of stored values per state.
    pub fn len(&self) -> usize {
        match &self.layout {
            Layout::Radial(r) => r.r.len(),
            Layout::Tensor(t) => t.n * t.n * t.n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Smallest node spacing.
    pub fn spacing(&self) -> f64 {
        match &self.layout {
            Layout::Radial(r) => r.r[1] - r.r[0],
            Layout::Tensor(t) => t.h,
        }
    }

    /// Per-node quadrature weights (cell volumes).
    pub fn volumes(&self) -> Vec<f64> {
        match &self.layout {
            Layout::Radial(r) => r.vol.clone(),
            Layout::Tensor(t) => vec![t.h.powi(3); t.n * t.n * t.n],
        }
    }

    /// Total measure of the discretized domain.
    pub fn measure(&self) -> f64 {
        self.volumes().iter().sum()
    }

    /// Distance of each node from the origin.
    pub fn radii(&self) -> Vec<f64> {
        match &self.layout {
            Layout::Radial(r) => r.r.clone(),
            Layout::Tensor(_) => (0..self.len())
                .map(|i| {
                    let p = self.point(i);
                    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
                })
                .collect(),
        }
    }

    /// Position of node `i`: `(r, 0, …)` along the sampling ray for radial
    /// grids (see [`crate::drift::DriftField::ray_component`]), the cell
    /// centre for tensor grids.
    pub fn point(&self, i: usize) -> Vec<f64> {
        match &self.layout {
            Layout::Radial(r) => {
                let s = 1.0 / (r.d as f64).sqrt();
                vec![r.r[i] * s; r.d]
            }
            Layout::Tensor(t) => {
                let (ix, iy, iz) = t.unflatten(i);
                vec![t.center(ix), t.center(iy), t.center(iz)]
            }
        }
    }

    /// Whether node `i` carries a Dirichlet-zero value.
    pub fn is_boundary(&self, i: usize) -> bool {
        match &self.layout {
            Layout::Radial(r) => i + 1 == r.r.len(),
            Layout::Tensor(_) => false,
        }
    }

    /// Sample a function of `(point, radius)` at every node; Dirichlet nodes are 0.
    pub fn sample(&self, mut f: impl FnMut(&[f64], f64) -> f64) -> Vec<f64> {
        let radii = self.radii();
        (0..self.len())
            .map(|i| {
                if self.is_boundary(i) {
                    0.0
                } else {
                    f(&self.point(i), radii[i])
                }
            })
            .collect()
    }

    pub fn describe(&self) -> String {
        match self.spec {
            GridSpec::Radial { d, r_max, n } => format!("radial(d={d};r_max={r_max};n={n})"),
            GridSpec::RadialLog { d, r_min, r_max, n } => {
                format!("radial_log(d={d};r_min={r_min};r_max={r_max};n={n})")
            }
            GridSpec::Tensor3 { half_width, n } => format!("tensor3(L={half_width};n={n})"),
        }
    }
}

fn check_common(d: usize, n: usize) -> Result<()> {
    if d < 3 {
        return Err(Error::invalid("d", format!("need d >= 3, got {d}")));
    }
    if n < MIN_NODES {
        return Err(Error::invalid("n", format!("need n >= {MIN_NODES}, got {n}")));
    }
    Ok(())
}

fn radial_layout(d: usize, r: Vec<f64>, origin: bool) -> RadialLayout {
    let area = sphere_area(d);
    let df = d as f64;
    let n = r.len() - 1;
    let mid: Vec<f64> = r.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let face: Vec<f64> = mid.iter().map(|m| area * m.powi(d as i32 - 1)).collect();
    let ball = |x: f64| area * x.powi(d as i32) / df;
    let vol = (0..=n)
        .map(|i| {
            let lo = if i == 0 { r[0] } else { mid[i - 1] };
            let hi = if i == n { r[n] } else { mid[i] };
            ball(hi) - ball(lo)
        })
        .collect();
    RadialLayout { d, r, vol, face, origin }
}

impl TensorLayout {
    pub fn center(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.h
    }

    #[cfg(test)]
    pub fn flatten(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (iz * self.n + iy) * self.n + ix
    }

    pub fn unflatten(&self, i: usize) -> (usize, usize, usize) {
        (i % self.n, (i / self.n) % self.n, i / (self.n * self.n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn build_examples() {
        let g = Grid::build(GridSpec::Radial { d: 3, r_max: 20.0, n: 2048 }).unwrap();
        assert!((g.spacing() - 9.7656e-3).abs() < 1e-7);
        let t = Grid::build(GridSpec::Tensor3 { half_width: 4.0, n: 64 }).unwrap();
        assert_eq!(t.len(), 64 * 64 * 64);
        assert_eq!(t.spacing(), 0.125);
        assert!(Grid::build(GridSpec::Radial { d: 2, r_max: 1.0, n: 64 }).is_err());
        assert!(Grid::build(GridSpec::Radial { d: 3, r_max: 1.0, n: 8 }).is_err());
        assert!(Grid::build(GridSpec::Tensor3 { half_width: -1.0, n: 32 }).is_err());
    }

    #[test]
    fn tensor_index_round_trip() {
        let g = Grid::build(GridSpec::Tensor3 { half_width: 2.0, n: 16 }).unwrap();
        let Layout::Tensor(t) = g.layout() else { unreachable!() };
        for i in [0, 1, 17, 300, g.len() - 1] {
            let (x, y, z) = t.unflatten(i);
            assert_eq!(t.flatten(x, y, z), i);
        }
    }

    #[test]
    fn sphere_areas() {
        assert_relative_eq!(sphere_area(3), 4.0 * PI, max_relative = 1e-15);
        assert_relative_eq!(sphere_area(4), 2.0 * PI * PI, max_relative = 1e-15);
        assert_relative_eq!(sphere_area(5), 8.0 * PI * PI / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn radial_volumes_sum_to_ball() {
        let g = Grid::build(GridSpec::Radial { d: 3, r_max: 2.0, n: 100 }).unwrap();
        assert_relative_eq!(g.measure(), 4.0 * PI * 8.0 / 3.0, max_relative = 1e-13);
        let g = Grid::build(GridSpec::RadialLog { d: 4, r_min: 0.1, r_max: 2.0, n: 64 }).unwrap();
        let area = sphere_area(4);
        assert_relative_eq!(g.measure(), area * (16.0 - 1e-4) / 4.0, max_relative = 1e-13);
    }
}
