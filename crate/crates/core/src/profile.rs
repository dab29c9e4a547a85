//! Time weights `g(t)` attached to form-bounded fields.

use std::f64::consts::E;

use crate::error::{Error, Result};

/// An integrable, nonnegative time profile.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeProfile {
    Zero,
    /// `Σ c_k t^k`.
    Polynomial(Vec<f64>),
    /// `amplitude · τ⁻¹ (log(e + τ⁻¹))^{-1-eps}` with `τ = |t - t0|`.
    LogSingular { amplitude: f64, t0: f64, eps: f64 },
    /// Piecewise-linear interpolation of `(time, value)` samples, zero outside.
    Samples { times: Vec<f64>, values: Vec<f64> },
    Scaled(f64, Box<TimeProfile>),
    Sum(Vec<TimeProfile>),
}

impl TimeProfile {
    pub fn constant(c: f64) -> Self {
        TimeProfile::Polynomial(vec![c])
    }

    pub fn samples(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() || times.len() < 2 {
            return Err(Error::invalid(
                "g",
                "sampled profile needs matching time/value lists of length >= 2",
            ));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("g", "sample times must be increasing"));
        }
        Ok(TimeProfile::Samples { times, values })
    }

    pub fn is_zero(&self) -> bool {
        match self {
            TimeProfile::Zero => true,
            TimeProfile::Polynomial(c) => c.iter().all(|&v| v == 0.0),
            TimeProfile::LogSingular { amplitude, .. } => *amplitude == 0.0,
            TimeProfile::Samples { values, .. } => values.iter().all(|&v| v == 0.0),
            TimeProfile::Scaled(c, inner) => *c == 0.0 || inner.is_zero(),
            TimeProfile::Sum(parts) => parts.iter().all(TimeProfile::is_zero),
        }
    }

    /// Pointwise value; `+inf` at the singular time of a log profile.
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TimeProfile::Zero => 0.0,
            TimeProfile::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ck| acc * t + ck),
            TimeProfile::LogSingular { amplitude, t0, eps } => {
                let tau = (t - t0).abs();
                if tau == 0.0 {
                    return f64::INFINITY;
                }
                amplitude / tau * (E + 1.0 / tau).ln().powf(-1.0 - eps)
            }
            TimeProfile::Samples { times, values } => interpolate(times, values, t),
            TimeProfile::Scaled(c, inner) => c * inner.eval(t),
            TimeProfile::Sum(parts) => parts.iter().map(|p| p.eval(t)).sum(),
        }
    }

    /// `∫_0^t g(θ) dθ` for `t >= 0`.
    pub fn integral(&self, t: f64) -> f64 {
        match self {
            TimeProfile::Zero => 0.0,
            TimeProfile::Polynomial(c) => c
                .iter()
                .enumerate()
                .map(|(k, ck)| ck * t.powi(k as i32 + 1) / (k as f64 + 1.0))
                .sum(),
            TimeProfile::LogSingular { amplitude, t0, eps } => {
                let (t0, eps) = (*t0, *eps);
                let part = if t <= t0 {
                    log_singular_mass(t0, eps) - log_singular_mass(t0 - t, eps)
                } else {
                    log_singular_mass(t0, eps) + log_singular_mass(t - t0, eps)
                };
                amplitude * part
            }
            TimeProfile::Samples { times, values } => trapezoid_to(times, values, t),
            TimeProfile::Scaled(c, inner) => c * inner.integral(t),
            TimeProfile::Sum(parts) => parts.iter().map(|p| p.integral(t)).sum(),
        }
    }
}

fn interpolate(times: &[f64], values: &[f64], t: f64) -> f64 {
    if t < times[0] || t > times[times.len() - 1] {
        return 0.0;
    }
    let k = times.partition_point(|&s| s <= t).clamp(1, times.len() - 1);
    let (t0, t1) = (times[k - 1], times[k]);
    let w = (t - t0) / (t1 - t0);
    values[k - 1] * (1.0 - w) + values[k] * w
}

fn trapezoid_to(times: &[f64], values: &[f64], t: f64) -> f64 {
    let mut acc = 0.0;
    let mut prev_t = 0.0_f64.max(times[0]);
    let mut prev_v = interpolate(times, values, prev_t);
    for (&ti, &vi) in times.iter().zip(values) {
        if ti <= prev_t {
            continue;
        }
        let tk = ti.min(t);
        if tk <= prev_t {
            break;
        }
        let vk = if tk == ti { vi } else { interpolate(times, values, tk) };
        acc += 0.5 * (prev_v + vk) * (tk - prev_t);
        prev_t = tk;
        prev_v = vk;
        if tk >= t {
            break;
        }
    }
    acc
}

/// `∫_0^T τ⁻¹ (log(e + τ⁻¹))^{-1-eps} dτ`.
///
/// With `u = log(e + 1/τ)` the integrand becomes `u^{-1-eps} / (1 - e^{1-u})`,
/// whose algebraic part integrates in closed form; the remainder decays like
/// `e^{-u}` and is summed by composite Simpson.
fn log_singular_mass(big_t: f64, eps: f64) -> f64 {
    if big_t <= 0.0 {
        return 0.0;
    }
    let u0 = (E + 1.0 / big_t).ln();
    let head = u0.powf(-eps) / eps;
    let f = |u: f64| {
        let q = (1.0 - u).exp();
        u.powf(-1.0 - eps) * q / (1.0 - q)
    };
    let span = 60.0;
    let n = 40_000;
    let h = span / n as f64;
    let mut s = f(u0) + f(u0 + span);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(u0 + i as f64 * h);
    }
    head + s * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_integral_is_exact() {
        let g = TimeProfile::Polynomial(vec![0.0, 1.0]);
        assert_eq!(g.integral(2.0), 2.0);
        assert_eq!(TimeProfile::constant(1.0).integral(3.0), 3.0);
    }

    #[test]
    fn log_singular_mass_matches_direct_quadrature() {
        // Direct midpoint rule in s = log τ, far from the singularity.
        let (a, b) = (1e-3_f64, 0.5_f64);
        let eps = 1.0;
        let g = |tau: f64| (E + 1.0 / tau).ln().powf(-1.0 - eps) / tau;
        let n = 200_000;
        let (la, lb) = (a.ln(), b.ln());
        let h = (lb - la) / n as f64;
        let direct: f64 = (0..n)
            .map(|i| {
                let s = la + (i as f64 + 0.5) * h;
                g(s.exp()) * s.exp() * h
            })
            .sum();
        let via = log_singular_mass(b, eps) - log_singular_mass(a, eps);
        assert!((direct - via).abs() < 1e-8, "{direct} vs {via}");
    }

    #[test]
    fn sampled_integral_uses_trapezoid() {
        let g = TimeProfile::samples(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 2.0]).unwrap();
        assert!((g.integral(2.0) - 2.0).abs() < 1e-15);
        assert!((g.integral(1.5) - 1.125).abs() < 1e-15);
    }
}
