//! Implicit finite-difference evolution operators for `∂_t u = Δu + b·∇u + h'(t) u`.
//!
//! One step solves `(I - Δt A) u_next = u` with `A` the conservative Laplacian
//! plus first-order upwinded drift. Every off-diagonal entry of `I - Δt A` is
//! nonpositive and each row exceeds its off-diagonal mass by at least one, so
//! the step is positivity preserving and contractive in the sup norm at any
//! `Δt`.

use crate::error::{Error, Result};
use crate::grid::{Grid, Layout, RadialLayout, TensorLayout};
use crate::linalg::{Stencil7, Tridiagonal, DIRECTIONS};
use crate::profile::TimeProfile;

/// A vector field sampled on a grid: the radial (ray) component on radial
/// grids, full 3-vectors on tensor grids.
#[derive(Debug, Clone, PartialEq)]
pub enum VectorSamples {
    Radial(Vec<f64>),
    Tensor(Vec<[f64; 3]>),
}

impl VectorSamples {
    pub fn zeros(grid: &Grid) -> Self {
        if grid.is_radial() {
            VectorSamples::Radial(vec![0.0; grid.len()])
        } else {
            VectorSamples::Tensor(vec![[0.0; 3]; grid.len()])
        }
    }

    pub fn len(&self) -> usize {
        match self {
            VectorSamples::Radial(v) => v.len(),
            VectorSamples::Tensor(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        match self {
            VectorSamples::Radial(v) => v.iter().map(|x| x.abs()).collect(),
            VectorSamples::Tensor(v) => v
                .iter()
                .map(|x| (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt())
                .collect(),
        }
    }

    pub fn squared_magnitudes(&self) -> Vec<f64> {
        match self {
            VectorSamples::Radial(v) => v.iter().map(|x| x * x).collect(),
            VectorSamples::Tensor(v) => v.iter().map(|x| x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).collect(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.magnitudes().into_iter().fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: f64) -> Self {
        match self {
            VectorSamples::Radial(v) => VectorSamples::Radial(v.iter().map(|x| c * x).collect()),
            VectorSamples::Tensor(v) => {
                VectorSamples::Tensor(v.iter().map(|x| [c * x[0], c * x[1], c * x[2]]).collect())
            }
        }
    }

    fn check(&self, grid: &Grid) -> Result<()> {
        let ok = match self {
            VectorSamples::Radial(v) => grid.is_radial() && v.len() == grid.len(),
            VectorSamples::Tensor(v) => !grid.is_radial() && v.len() == grid.len(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{} samples do not fit {}",
                self.len(),
                grid.describe()
            )))
        }
    }
}

/// Something that yields drift samples on a grid at a given time.
pub trait DriftSource: Sync {
    fn samples(&self, grid: &Grid, t: f64) -> Result<VectorSamples>;
    fn is_time_dependent(&self) -> bool;
    fn describe(&self) -> String;
}

/// Fixed, time-independent samples.
#[derive(Debug, Clone)]
pub struct FixedDrift(pub VectorSamples);

impl DriftSource for FixedDrift {
    fn samples(&self, grid: &Grid, _t: f64) -> Result<VectorSamples> {
        self.0.check(grid)?;
        Ok(self.0.clone())
    }

    fn is_time_dependent(&self) -> bool {
        false
    }

    fn describe(&self) -> String {
        "fixed".into()
    }
}

/// No drift.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoDrift;

impl DriftSource for NoDrift {
    fn samples(&self, grid: &Grid, _t: f64) -> Result<VectorSamples> {
        Ok(VectorSamples::zeros(grid))
    }

    fn is_time_dependent(&self) -> bool {
        false
    }

    fn describe(&self) -> String {
        "zero".into()
    }
}

/// Optional reaction term `h'(t) = -coef g(t)`, applied as its step average
/// `(h(t + Δt) - h(t)) / Δt` so integrable singularities of `g` stay finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Damping {
    pub coef: f64,
    pub g: TimeProfile,
}

impl Damping {
    pub fn step_rate(&self, t: f64, dt: f64) -> f64 {
        -self.coef * (self.g.integral(t + dt) - self.g.integral(t)) / dt
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarState {
    pub time: f64,
    pub values: Vec<f64>,
}

impl ScalarState {
    pub fn new(time: f64, values: Vec<f64>) -> Self {
        ScalarState { time, values }
    }

    pub fn zeros(grid: &Grid, time: f64) -> Self {
        ScalarState::new(time, vec![0.0; grid.len()])
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub s: f64,
    pub step: f64,
    pub states: Vec<ScalarState>,
}

impl Trajectory {
    pub fn last(&self) -> &ScalarState {
        self.states.last().expect("trajectory holds at least the initial state")
    }

    /// State whose time is within rounding of `t`.
    pub fn at(&self, t: f64) -> Option<&ScalarState> {
        let k = ((t - self.s) / self.step).round();
        if k < 0.0 || self.step == 0.0 && t != self.s {
            return None;
        }
        let k = if self.step == 0.0 { 0 } else { k as usize };
        self.states.get(k).filter(|st| (st.time - t).abs() <= 1e-9 * t.abs().max(1.0))
    }

    /// Index range of states inside `[s, tau]`.
    fn window(&self, s: f64, tau: f64) -> Result<std::ops::RangeInclusive<usize>> {
        let tol = 1e-9 * tau.abs().max(1.0);
        let first = self.states.iter().position(|st| st.time >= s - tol);
        let last = self.states.iter().rposition(|st| st.time <= tau + tol);
        match (first, last) {
            (Some(a), Some(b)) if a <= b && self.states[a].time <= s + tol && self.states[b].time >= tau - tol => Ok(a..=b),
            _ => Err(Error::invalid(
                "window",
                format!(
                    "[{s}, {tau}] not inside trajectory span [{}, {}]",
                    self.states[0].time,
                    self.last().time
                ),
            )),
        }
    }
}

/// Stencil for the drift term.
///
/// `Upwind` gives an M-matrix for any `Δt`, hence positivity and sup-norm
/// contraction. `Centered` is second order but loses monotonicity once the
/// cell Péclet number `|b| h / 2` exceeds one; it exists for reproducing
/// solutions that do not obey a maximum principle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Advection {
    #[default]
    Upwind,
    Centered,
}

#[derive(Debug, Clone, PartialEq)]
enum StepMatrix {
    Radial(Tridiagonal),
    Tensor(Stencil7),
}

/// Assembled implicit-Euler system `(I - Δt A(t)) u_next = u`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOperator {
    pub time: f64,
    pub dt: f64,
    pub rel_tol: f64,
    pub max_sweeps: usize,
    matrix: StepMatrix,
}

impl StepOperator {
    /// Assemble for drift samples frozen at `time`; `reaction` is `h'` (<= 0).
    pub fn assemble(grid: &Grid, drift: &VectorSamples, time: f64, dt: f64, reaction: f64) -> Result<Self> {
        Self::assemble_with(grid, drift, time, dt, reaction, Advection::Upwind)
    }

    pub fn assemble_with(
        grid: &Grid,
        drift: &VectorSamples,
        time: f64,
        dt: f64,
        reaction: f64,
        advection: Advection,
    ) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid("dt", format!("need dt > 0, got {dt}")));
        }
        if reaction.is_nan() || reaction > 0.0 {
            return Err(Error::invalid(
                "damping",
                format!("reaction rate must be <= 0 to keep the M-matrix, got {reaction}"),
            ));
        }
        drift.check(grid)?;
        let matrix = match (grid.layout(), drift) {
            (Layout::Radial(lay), VectorSamples::Radial(b)) => StepMatrix::Radial(assemble_radial(lay, b, dt, reaction, advection)),
            (Layout::Tensor(lay), VectorSamples::Tensor(b)) => StepMatrix::Tensor(assemble_tensor(lay, b, dt, reaction, advection)),
            _ => unreachable!("checked above"),
        };
        Ok(StepOperator {
            time,
            dt,
            rel_tol: 1e-12,
            max_sweeps: 20_000,
            matrix,
        })
    }

    /// Smallest value of `diag - Σ|offdiag|` over rows; >= 1 for a valid step.
    pub fn row_excess(&self) -> f64 {
        match &self.matrix {
            StepMatrix::Radial(m) => (0..m.len())
                .map(|i| m.diag[i] - m.lower[i].abs() * (i > 0) as u8 as f64 - m.upper[i].abs() * (i + 1 < m.len()) as u8 as f64)
                .fold(f64::INFINITY, f64::min),
            StepMatrix::Tensor(m) => (0..m.diag.len())
                .map(|i| m.diag[i] - (0..DIRECTIONS).map(|d| m.off[d][i].abs()).sum::<f64>())
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Whether every off-diagonal entry is nonpositive.
    pub fn offdiagonal_nonpositive(&self) -> bool {
        match &self.matrix {
            StepMatrix::Radial(m) => m.lower.iter().chain(&m.upper).all(|&v| v <= 0.0),
            StepMatrix::Tensor(m) => m.off.iter().all(|o| o.iter().all(|&v| v <= 0.0)),
        }
    }

    /// Advance `state` by one step.
    pub fn step(&self, state: &ScalarState) -> Result<ScalarState> {
        let mut next = state.values.clone();
        match &self.matrix {
            StepMatrix::Radial(m) => {
                let n = m.len();
                let rhs = &state.values[..n];
                m.solve(rhs, &mut next[..n])?;
                next[n] = 0.0;
                let mut check = vec![0.0; n];
                m.apply(&next[..n], &mut check);
                let num: f64 = check.iter().zip(rhs).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                let den: f64 = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
                if den > 0.0 && num / den > self.rel_tol.max(1e-10) {
                    return Err(Error::NonConvergence {
                        solver: "thomas",
                        iterations: 1,
                        residual: num / den,
                    });
                }
            }
            StepMatrix::Tensor(m) => {
                m.solve_gauss_seidel(&state.values, &mut next, self.rel_tol, self.max_sweeps)?;
            }
        }
        Ok(ScalarState::new(state.time + self.dt, next))
    }
}

fn assemble_radial(lay: &RadialLayout, b: &[f64], dt: f64, reaction: f64, advection: Advection) -> Tridiagonal {
    let n = lay.r.len() - 1;
    let mut m = Tridiagonal::zeros(n);
    for i in 0..n {
        let (mut lo, mut di, mut up) = (0.0, 0.0, 0.0);
        let dr_right = lay.r[i + 1] - lay.r[i];
        let c_r = lay.face[i] / (dr_right * lay.vol[i]);
        up += c_r;
        di -= c_r;
        if i > 0 {
            let c_l = lay.face[i - 1] / ((lay.r[i] - lay.r[i - 1]) * lay.vol[i]);
            lo += c_l;
            di -= c_l;
        }
        let bi = b[i];
        if advection == Advection::Centered {
            // at the origin the symmetric ghost makes the centred derivative vanish
            if i > 0 {
                let w = bi / (lay.r[i + 1] - lay.r[i - 1]);
                up += w;
                lo -= w;
            }
        } else if bi > 0.0 {
            di -= bi / dr_right;
            up += bi / dr_right;
        } else if bi < 0.0 {
            if i > 0 {
                let dr = lay.r[i] - lay.r[i - 1];
                di += bi / dr;
                lo -= bi / dr;
            } else if lay.origin {
                // ghost u(-r_1) = u(r_1)
                di += bi / dr_right;
                up -= bi / dr_right;
            }
        }
        di += reaction;
        m.lower[i] = -dt * lo;
        m.diag[i] = 1.0 - dt * di;
        m.upper[i] = -dt * up;
    }
    m
}

fn assemble_tensor(lay: &TensorLayout, b: &[[f64; 3]], dt: f64, reaction: f64, advection: Advection) -> Stencil7 {
    let n = lay.n;
    let h = lay.h;
    let lap = 1.0 / (h * h);
    let mut m = Stencil7::zeros(n);
    for i in 0..n * n * n {
        let (ix, iy, iz) = lay.unflatten(i);
        let coord = [ix, iy, iz];
        let mut di = reaction;
        let mut off = [0.0; DIRECTIONS];
        for axis in 0..3 {
            let has = [coord[axis] > 0, coord[axis] + 1 < n];
            for (side, &inside) in has.iter().enumerate() {
                if inside {
                    off[2 * axis + side] += lap;
                    di -= lap;
                } else {
                    di -= 2.0 * lap;
                }
            }
            let ba = b[i][axis];
            if advection == Advection::Centered {
                // odd ghost u = -u_i across the Dirichlet wall
                let w = ba / (2.0 * h);
                if has[1] {
                    off[2 * axis + 1] += w;
                } else {
                    di -= w;
                }
                if has[0] {
                    off[2 * axis] -= w;
                } else {
                    di += w;
                }
                continue;
            }
            let side = if ba > 0.0 { 1 } else { 0 };
            let w = ba.abs() / h;
            if ba != 0.0 {
                if has[side] {
                    off[2 * axis + side] += w;
                    di -= w;
                } else {
                    di -= 2.0 * w;
                }
            }
        }
        m.diag[i] = 1.0 - dt * di;
        for d in 0..DIRECTIONS {
            m.off[d][i] = -dt * off[d];
        }
    }
    m
}

/// Advance `f` from `s` to `t` with uniform step `dt`.
pub fn evolve(
    source: &dyn DriftSource,
    grid: &Grid,
    s: f64,
    t: f64,
    f: &ScalarState,
    dt: f64,
    damping: Option<&Damping>,
) -> Result<Trajectory> {
    evolve_with(source, grid, s, t, f, dt, damping, Advection::Upwind)
}

/// [`evolve`] with an explicit drift stencil.
#[allow(clippy::too_many_arguments)]
pub fn evolve_with(
    source: &dyn DriftSource,
    grid: &Grid,
    s: f64,
    t: f64,
    f: &ScalarState,
    dt: f64,
    damping: Option<&Damping>,
    advection: Advection,
) -> Result<Trajectory> {
    if !(t >= s) {
        return Err(Error::invalid("t", format!("need s <= t, got s={s}, t={t}")));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid("dt", format!("need dt > 0, got {dt}")));
    }
    if f.values.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "initial state has {} values, grid {} has {}",
            f.values.len(),
            grid.describe(),
            grid.len()
        )));
    }
    let steps_f = (t - s) / dt;
    let steps = steps_f.round();
    if (steps - steps_f).abs() > 1e-6 {
        return Err(Error::invalid(
            "dt",
            format!("(t - s)/dt = {steps_f} is not an integer"),
        ));
    }
    let steps = steps as usize;
    let mut states = Vec::with_capacity(steps + 1);
    let mut first = f.clone();
    first.time = s;
    for (i, v) in first.values.iter_mut().enumerate() {
        if grid.is_boundary(i) {
            *v = 0.0;
        }
    }
    states.push(first);

    let rate = |k: usize| damping.map_or(0.0, |d| d.step_rate(s + k as f64 * dt, dt));
    let frozen = if source.is_time_dependent() || damping.is_some_and(|d| !d.g.is_zero()) {
        None
    } else {
        Some(StepOperator::assemble_with(grid, &source.samples(grid, s)?, s, dt, rate(0), advection)?)
    };
    for k in 0..steps {
        let tk = s + k as f64 * dt;
        let op = match &frozen {
            Some(op) => std::borrow::Cow::Borrowed(op),
            None => std::borrow::Cow::Owned(StepOperator::assemble_with(
                grid,
                &source.samples(grid, tk)?,
                tk,
                dt,
                rate(k),
                advection,
            )?),
        };
        let mut next = op.step(&states[k])?;
        next.time = s + (k + 1) as f64 * dt;
        states.push(next);
    }
    Ok(Trajectory { s, step: dt, states })
}

/// Discrete gradient: centred differences inside, one-sided at the ends.
/// Radial grids return the signed radial derivative.
pub fn gradient(values: &[f64], grid: &Grid) -> VectorSamples {
    match grid.layout() {
        Layout::Radial(lay) => {
            let r = &lay.r;
            let n = r.len() - 1;
            let mut g = vec![0.0; n + 1];
            g[0] = (values[1] - values[0]) / (r[1] - r[0]);
            g[n] = (values[n] - values[n - 1]) / (r[n] - r[n - 1]);
            for i in 1..n {
                g[i] = (values[i + 1] - values[i - 1]) / (r[i + 1] - r[i - 1]);
            }
            VectorSamples::Radial(g)
        }
        Layout::Tensor(lay) => {
            let n = lay.n;
            let stride = [1, n, n * n];
            let out = (0..values.len())
                .map(|i| {
                    let (ix, iy, iz) = lay.unflatten(i);
                    let coord = [ix, iy, iz];
                    let mut v = [0.0; 3];
                    for axis in 0..3 {
                        let s = stride[axis];
                        v[axis] = if coord[axis] == 0 {
                            (values[i + s] - values[i]) / lay.h
                        } else if coord[axis] + 1 == n {
                            (values[i] - values[i - s]) / lay.h
                        } else {
                            (values[i + s] - values[i - s]) / (2.0 * lay.h)
                        };
                    }
                    v
                })
                .collect();
            VectorSamples::Tensor(out)
        }
    }
}

/// Quadrature `(Σ |v_i|^p vol_i)^{1/p}` for any `p > 0`; `p = ∞` is the max.
pub(crate) fn quasi_norm(values: &[f64], vol: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return values.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let s: f64 = values.iter().zip(vol).map(|(v, w)| v.abs().powf(p) * w).sum();
    s.powf(1.0 / p)
}

/// `L^p` norm of grid values with the grid's volume element, `p >= 1` or `∞`.
pub fn lp_norm(values: &[f64], grid: &Grid, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::invalid("p", format!("need p >= 1, got {p}")));
    }
    if values.len() != grid.len() {
        return Err(Error::GridMismatch("value count".into()));
    }
    Ok(quasi_norm(values, &grid.volumes(), p))
}

/// `L^{p_time}([s, τ], L^{p_space})` norm of `map(state)` along a trajectory.
///
/// Space norms use the grid quadrature; the time integral of
/// `‖·‖^{p_time}` uses the trapezoid rule over the stored states. Exponents
/// only need to be positive here so the iteration inequality's quasi-norms
/// can be evaluated; the public [`mixed_norm`] insists on `p >= 1`.
pub fn mixed_quasi_norm_with(
    traj: &Trajectory,
    grid: &Grid,
    s: f64,
    tau: f64,
    p_time: f64,
    p_space: f64,
    map: impl Fn(&ScalarState) -> Vec<f64>,
) -> Result<f64> {
    if !(p_time > 0.0 && p_space > 0.0) {
        return Err(Error::invalid("p", format!("need positive exponents, got ({p_time}, {p_space})")));
    }
    let window = traj.window(s, tau)?;
    let vol = grid.volumes();
    let norms: Vec<(f64, f64)> = traj.states[window]
        .iter()
        .map(|st| (st.time, quasi_norm(&map(st), &vol, p_space)))
        .collect();
    if p_time.is_infinite() {
        return Ok(norms.iter().fold(0.0, |m, (_, v)| m.max(*v)));
    }
    let integral: f64 = norms
        .windows(2)
        .map(|w| 0.5 * (w[0].1.powf(p_time) + w[1].1.powf(p_time)) * (w[1].0 - w[0].0))
        .sum();
    Ok(integral.powf(1.0 / p_time))
}

pub fn mixed_norm_with(
    traj: &Trajectory,
    grid: &Grid,
    s: f64,
    tau: f64,
    p_time: f64,
    p_space: f64,
    map: impl Fn(&ScalarState) -> Vec<f64>,
) -> Result<f64> {
    if p_time.is_nan() || p_space.is_nan() || p_time < 1.0 || p_space < 1.0 {
        return Err(Error::invalid("p", format!("need p >= 1, got ({p_time}, {p_space})")));
    }
    mixed_quasi_norm_with(traj, grid, s, tau, p_time, p_space, map)
}

pub fn mixed_norm(traj: &Trajectory, grid: &Grid, s: f64, tau: f64, p_time: f64, p_space: f64) -> Result<f64> {
    mixed_norm_with(traj, grid, s, tau, p_time, p_space, |st| st.values.clone())
}

/// Pointwise `|∇u|` of a state.
pub fn gradient_magnitude(state: &ScalarState, grid: &Grid) -> Vec<f64> {
    gradient(&state.values, grid).magnitudes()
}
