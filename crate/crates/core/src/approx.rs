//! Bounded, smooth approximations `b_m = η_m * (1_m b)` of singular drifts.
//!
//! `1_m` keeps `b(t, x)` where `|b| <= m`, `|x| <= m` and `t <= m`. The
//! mollifier acts in space only, slice by slice in time, with kernel
//! `(1 - r²/w²)⁴` normalized to unit discrete mass.
//!
//! On radial grids the convolution runs along the full sampling line
//! `s ↦ s ê`, `s ∈ ℝ`, so the symmetric extension through the origin is
//! handled by evaluating the field at negative `s`.

use rayon::prelude::*;

use crate::drift::{norm, DriftField};
use crate::error::{Error, Result};
use crate::formbound::{estimate_beta, FormBoundReport};
use crate::grid::{Grid, Layout};
use crate::solver::{DriftSource, VectorSamples};

/// `1_m b` at `(t, x)`; zero outside the kept set and on singular loci.
pub fn truncate(field: &DriftField, m: u32, t: f64, x: &[f64]) -> Result<Vec<f64>> {
    check_m(m)?;
    let mut out = vec![0.0; field.dim()];
    truncate_into(field, m as f64, t, x, &mut out);
    Ok(out)
}

fn check_m(m: u32) -> Result<()> {
    if m == 0 {
        return Err(Error::invalid("m", "need m >= 1"));
    }
    Ok(())
}

fn truncate_into(field: &DriftField, m: f64, t: f64, x: &[f64], out: &mut [f64]) {
    let keep = t <= m && norm(x) <= m && field.eval_into(t, x, out).is_ok() && {
        let b2: f64 = out.iter().map(|v| v * v).sum();
        b2 <= m * m * (1.0 + 1e-12)
    };
    if !keep {
        out.iter_mut().for_each(|v| *v = 0.0);
    }
}

/// Ray component of `1_m b` at signed distance `s` along `ê`.
fn truncated_ray(field: &DriftField, m: f64, t: f64, s: f64) -> f64 {
    let d = field.dim();
    let scale = 1.0 / (d as f64).sqrt();
    let x = vec![s * scale; d];
    let mut out = vec![0.0; d];
    truncate_into(field, m, t, &x, &mut out);
    out.iter().sum::<f64>() * scale
}

fn bump(r2_over_w2: f64) -> f64 {
    if r2_over_w2 >= 1.0 {
        0.0
    } else {
        (1.0 - r2_over_w2).powi(4)
    }
}

/// Mollified truncated drift sampled on one grid at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct MollifiedDrift {
    pub source: DriftField,
    pub m: u32,
    pub time: f64,
    pub width: f64,
    pub grid: String,
    pub samples: VectorSamples,
}

/// Default width `max(1/m, 2h)`; explicit widths below `2h` are rejected.
pub fn mollifier_width(m: u32, grid: &Grid, width: Option<f64>) -> Result<f64> {
    check_m(m)?;
    let floor = 2.0 * grid.spacing();
    match width {
        None => Ok((1.0 / m as f64).max(floor)),
        Some(w) if w.is_finite() && w >= floor * (1.0 - 1e-12) => Ok(w),
        Some(w) => Err(Error::invalid(
            "mollifier_width",
            format!("width {w} is below two grid spacings ({floor})"),
        )),
    }
}

fn check_dims(field: &DriftField, grid: &Grid) -> Result<()> {
    if field.dim() != grid.dim() {
        return Err(Error::GridMismatch(format!(
            "field of dimension {} on {}",
            field.dim(),
            grid.describe()
        )));
    }
    Ok(())
}

/// `η_m * (1_m b)(t, ·)` sampled at the nodes of `grid`.
pub fn mollify(field: &DriftField, m: u32, grid: &Grid, t: f64, width: Option<f64>) -> Result<MollifiedDrift> {
    check_dims(field, grid)?;
    let w = mollifier_width(m, grid, width)?;
    let mf = m as f64;
    let samples = match grid.layout() {
        Layout::Radial(lay) => {
            // Quadrature step: the grid spacing on uniform grids, w/16 otherwise.
            let delta = if lay.origin { lay.r[1] - lay.r[0] } else { w / 16.0 };
            let k = (w / delta).ceil() as i64;
            let weights: Vec<f64> = (-k..=k).map(|j| bump((j as f64 * delta / w).powi(2))).collect();
            let mass: f64 = weights.iter().sum();
            let vals = lay
                .r
                .par_iter()
                .enumerate()
                .map(|(i, &r)| {
                    if i + 1 == lay.r.len() {
                        return 0.0;
                    }
                    weights
                        .iter()
                        .enumerate()
                        .filter(|(_, &wt)| wt > 0.0)
                        .map(|(j, &wt)| wt * truncated_ray(field, mf, t, r + (j as i64 - k) as f64 * delta))
                        .sum::<f64>()
                        / mass
                })
                .collect();
            VectorSamples::Radial(vals)
        }
        Layout::Tensor(lay) => {
            let n = lay.n as i64;
            let h = lay.h;
            let k = (w / h).ceil() as i64;
            let ext = n + 2 * k;
            // Truncated samples on the grid extended by k cells per side.
            let raw: Vec<[f64; 3]> = (0..ext * ext * ext)
                .into_par_iter()
                .map(|idx| {
                    let (ix, iy, iz) = (idx % ext, (idx / ext) % ext, idx / (ext * ext));
                    let c = |i: i64| -lay.half_width + ((i - k) as f64 + 0.5) * h;
                    let mut out = [0.0; 3];
                    truncate_into(field, mf, t, &[c(ix), c(iy), c(iz)], &mut out);
                    out
                })
                .collect();
            let mut stencil = Vec::new();
            for dz in -k..=k {
                for dy in -k..=k {
                    for dx in -k..=k {
                        let wt = bump(((dx * dx + dy * dy + dz * dz) as f64) * h * h / (w * w));
                        if wt > 0.0 {
                            stencil.push((dx, dy, dz, wt));
                        }
                    }
                }
            }
            let mass: f64 = stencil.iter().map(|s| s.3).sum();
            let vals = (0..n * n * n)
                .into_par_iter()
                .map(|i| {
                    let (ix, iy, iz) = (i % n + k, (i / n) % n + k, i / (n * n) + k);
                    let mut acc = [0.0; 3];
                    for &(dx, dy, dz, wt) in &stencil {
                        let j = ((iz + dz) * ext + iy + dy) * ext + ix + dx;
                        let b = raw[j as usize];
                        for a in 0..3 {
                            acc[a] += wt * b[a];
                        }
                    }
                    acc.map(|v| v / mass)
                })
                .collect();
            VectorSamples::Tensor(vals)
        }
    };
    Ok(MollifiedDrift {
        source: field.clone(),
        m,
        time: t,
        width: w,
        grid: grid.describe(),
        samples,
    })
}

/// `1_m b(t, ·)` sampled at grid nodes without smoothing.
pub fn truncated_samples(field: &DriftField, m: u32, grid: &Grid, t: f64) -> Result<VectorSamples> {
    check_m(m)?;
    check_dims(field, grid)?;
    let mf = m as f64;
    Ok(match grid.layout() {
        Layout::Radial(lay) => VectorSamples::Radial(
            lay.r
                .iter()
                .enumerate()
                .map(|(i, &r)| if i + 1 == lay.r.len() { 0.0 } else { truncated_ray(field, mf, t, r) })
                .collect(),
        ),
        Layout::Tensor(_) => VectorSamples::Tensor(
            (0..grid.len())
                .into_par_iter()
                .map(|i| {
                    let mut out = [0.0; 3];
                    truncate_into(field, mf, t, &grid.point(i), &mut out);
                    out
                })
                .collect(),
        ),
    })
}

/// Drift source yielding `b_m` on demand, one slice per requested time.
#[derive(Debug, Clone)]
pub struct Regularized {
    pub field: DriftField,
    pub m: u32,
    pub width: Option<f64>,
    /// Skip the convolution and use `1_m b` directly.
    pub truncate_only: bool,
}

impl Regularized {
    pub fn new(field: DriftField, m: u32) -> Self {
        Regularized {
            field,
            m,
            width: None,
            truncate_only: false,
        }
    }
}

impl DriftSource for Regularized {
    fn samples(&self, grid: &Grid, t: f64) -> Result<VectorSamples> {
        if self.truncate_only {
            truncated_samples(&self.field, self.m, grid, t)
        } else {
            Ok(mollify(&self.field, self.m, grid, t, self.width)?.samples)
        }
    }

    fn is_time_dependent(&self) -> bool {
        self.field.is_time_dependent()
    }

    fn describe(&self) -> String {
        format!("{} m={}", self.field, self.m)
    }
}

/// Region over which approximation errors are measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    /// `r_in <= |x| <= r_out`.
    Shell { r_in: f64, r_out: f64 },
    /// Axis-aligned cube `[lo, hi]^d`.
    Cube { lo: f64, hi: f64 },
}

impl Region {
    fn contains(&self, x: &[f64], r: f64) -> bool {
        match *self {
            Region::Shell { r_in, r_out } => r >= r_in && r <= r_out,
            Region::Cube { lo, hi } => x.iter().all(|&v| v >= lo && v <= hi),
        }
    }
}

/// Discrete `L²(region × times)` distance between `b_m` and `b`.
///
/// Nodes on a singular locus of `b` compare against `1_m b` there. Several
/// times are combined with the trapezoid rule; a single time gives the
/// spatial norm.
pub fn c1_error(
    field: &DriftField,
    m: u32,
    width: Option<f64>,
    grid: &Grid,
    region: Region,
    times: &[f64],
) -> Result<f64> {
    check_dims(field, grid)?;
    if times.is_empty() {
        return Err(Error::invalid("times", "need at least one time"));
    }
    let radii = grid.radii();
    let vol = grid.volumes();
    let nodes: Vec<usize> = (0..grid.len())
        .filter(|&i| !grid.is_boundary(i) && region.contains(&grid.point(i), radii[i]))
        .collect();
    if nodes.is_empty() {
        return Err(Error::invalid("region", format!("{region:?} contains no nodes of {}", grid.describe())));
    }
    let mut slices = Vec::with_capacity(times.len());
    for &t in times {
        let bm = mollify(field, m, grid, t, width)?.samples;
        let s: f64 = nodes
            .iter()
            .map(|&i| {
                let x = grid.point(i);
                let exact = match field.eval(t, &x) {
                    Ok(b) => b,
                    Err(_) => {
                        let mut out = vec![0.0; field.dim()];
                        truncate_into(field, m as f64, t, &x, &mut out);
                        out
                    }
                };
                let diff2 = match &bm {
                    VectorSamples::Radial(v) => {
                        let ray = exact.iter().sum::<f64>() / (field.dim() as f64).sqrt();
                        (v[i] - ray).powi(2)
                    }
                    VectorSamples::Tensor(v) => (0..3).map(|a| (v[i][a] - exact[a]).powi(2)).sum(),
                };
                diff2 * vol[i]
            })
            .sum();
        slices.push(s);
    }
    let total = if times.len() == 1 {
        slices[0]
    } else {
        times
            .windows(2)
            .zip(slices.windows(2))
            .map(|(t, s)| 0.5 * (s[0] + s[1]) * (t[1] - t[0]).abs())
            .sum()
    };
    Ok(total.sqrt())
}

/// `β̂(b_m) - (β + 1/m)` on a stationary slice, with the underlying estimate.
pub fn c2_margin(
    moll: &MollifiedDrift,
    grid: &Grid,
    beta: f64,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<(f64, FormBoundReport)> {
    let report = estimate_beta(&moll.samples, grid, tol, max_iter, seed)?;
    Ok((report.beta_hat - (beta + 1.0 / moll.m as f64), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::DriftKind;
    use crate::grid::GridSpec;

    fn hardy3() -> DriftField {
        DriftField::hardy(1.0, 3).unwrap()
    }

    #[test]
    fn truncate_examples() {
        assert_eq!(truncate(&hardy3(), 10, 0.0, &[1.0, 0.0, 0.0]).unwrap(), vec![1.0, 0.0, 0.0]);
        assert_eq!(truncate(&hardy3(), 10, 0.0, &[0.05, 0.0, 0.0]).unwrap(), vec![0.0; 3]);
        assert_eq!(truncate(&hardy3(), 10, 0.0, &[11.0, 0.0, 0.0]).unwrap(), vec![0.0; 3]);
        assert_eq!(truncate(&hardy3(), 10, 0.0, &[0.0; 3]).unwrap(), vec![0.0; 3]);
        assert_eq!(truncate(&hardy3(), 2, 3.0, &[1.0, 0.0, 0.0]).unwrap(), vec![0.0; 3]);
        assert!(truncate(&hardy3(), 0, 0.0, &[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn truncation_is_monotone_in_m() {
        let f = hardy3();
        for i in 1..200 {
            let x = [i as f64 * 0.013, -0.02, 0.0];
            let small = truncate(&f, 8, 0.0, &x).unwrap();
            let large = truncate(&f, 16, 0.0, &x).unwrap();
            if small.iter().any(|v| *v != 0.0) {
                assert_eq!(small, large);
            }
        }
    }

    #[test]
    fn constant_field_is_unchanged_inside() {
        let f = DriftField::build(DriftKind::Uniform { c: 0.5 }, 3).unwrap();
        let grid = Grid::build(GridSpec::Radial { d: 3, r_max: 4.0, n: 256 }).unwrap();
        let m = mollify(&f, 8, &grid, 0.0, None).unwrap();
        if let VectorSamples::Radial(v) = &m.samples {
            for &vi in &v[..200] {
                assert!((vi - 0.5 * 3f64.sqrt()).abs() < 1e-12);
            }
        }
        let t = Grid::build(GridSpec::Tensor3 { half_width: 2.0, n: 16 }).unwrap();
        let m = mollify(&f, 8, &t, 0.0, None).unwrap();
        if let VectorSamples::Tensor(v) = &m.samples {
            assert!(v.iter().all(|b| b.iter().all(|c| (c - 0.5).abs() < 1e-12)));
        }
    }

    #[test]
    fn zero_field_and_width_rules() {
        let grid = Grid::build(GridSpec::Radial { d: 3, r_max: 4.0, n: 64 }).unwrap();
        let z = mollify(&DriftField::zero(3).unwrap(), 4, &grid, 0.0, None).unwrap();
        assert_eq!(z.samples.sup_norm(), 0.0);
        assert_eq!(z.width, 0.25);
        assert!(mollify(&hardy3(), 4, &grid, 0.0, Some(0.1)).is_err());
        assert_eq!(mollifier_width(64, &grid, None).unwrap(), 0.125);
    }

    #[test]
    fn sup_norm_stays_below_m() {
        let grid = Grid::build(GridSpec::Radial { d: 3, r_max: 4.0, n: 512 }).unwrap();
        let ann = DriftField::build(DriftKind::Annulus { c: 1.0, delta: 0.6, a_exp: 0.25 }, 3).unwrap();
        for m in [1, 2, 8, 32, 64] {
            for f in [hardy3(), ann.clone()] {
                let s = mollify(&f, m, &grid, 0.0, None).unwrap().samples.sup_norm();
                assert!(s <= m as f64 * (1.0 + 1e-12), "{f} m={m}: {s}");
            }
        }
    }

    #[test]
    fn hardy_samples_converge_at_probes() {
        let grid = Grid::build(GridSpec::Radial { d: 3, r_max: 4.0, n: 4096 }).unwrap();
        let mut prev = f64::INFINITY;
        for m in [4, 8, 16, 32] {
            let v = match mollify(&hardy3(), m, &grid, 0.0, None).unwrap().samples {
                VectorSamples::Radial(v) => v,
                _ => unreachable!(),
            };
            let err = (1..=10)
                .map(|k| {
                    let i = k * 300;
                    (v[i] - 1.0 / grid.radii()[i]).abs()
                })
                .fold(0.0, f64::max);
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 1e-2, "{prev}");
    }

    #[test]
    fn c1_error_decreases_for_hardy_on_shell() {
        let grid = Grid::build(GridSpec::Radial { d: 3, r_max: 4.0, n: 4096 }).unwrap();
        let region = Region::Shell { r_in: 0.5, r_out: 1.0 };
        let e: Vec<f64> = [4, 8, 16]
            .iter()
            .map(|&m| c1_error(&hardy3(), m, None, &grid, region, &[0.0]).unwrap())
            .collect();
        assert!(e[0] > e[1] && e[1] > e[2], "{e:?}");
        assert_eq!(c1_error(&DriftField::zero(3).unwrap(), 4, None, &grid, region, &[0.0]).unwrap(), 0.0);
        assert!(c1_error(&hardy3(), 4, None, &grid, Region::Shell { r_in: 5.0, r_out: 6.0 }, &[0.0]).is_err());
    }
}
