//! Catalog of singular drifts with their known form-bound data.
//!
//! Fields are immutable after [`DriftField::build`] and evaluate pointwise in
//! closed form. Evaluation on a singular locus is an error, never a
//! non-finite vector.

use std::f64::consts::{E, PI};
use std::fmt;

use crate::error::{Error, Result};
use crate::profile::TimeProfile;

#[derive(Debug, Clone, PartialEq)]
pub enum DriftKind {
    /// `b ≡ 0`.
    Zero,
    /// `c·e`, `e = (1, …, 1)`.
    Uniform { c: f64 },
    /// `a (x - x0) / |x - x0|²`.
    Hardy { a: f64, x0: Vec<f64> },
    /// `C1 y/|y|² + C2 z/|z|²` with `x = (y, z)`, `y ∈ ℝⁿ`, `z ∈ ℝᵐ`.
    Split { c1: f64, c2: f64, n: usize, m: usize },
    /// `C (1_{1+δ} - 1_{1-δ}) e ||x| - 1|^{-a}`.
    Annulus { c: f64, delta: f64, a_exp: f64 },
    /// `a2 |t - t0|^{-1/2} (log(e + |t - t0|⁻¹))^{-(1+ε)/2} e`.
    TimeLog { a2: f64, t0: f64, eps: f64 },
    /// `2κα (-ln t)^{α-1} x/|x|²`, `0 < t < 1`.
    LogCounterexample { kappa: f64, alpha_exp: f64 },
    Scaled { c: f64, inner: Box<DriftField> },
    Sum { parts: Vec<DriftField> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftField {
    kind: DriftKind,
    dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Trivial,
    HardyInequality,
    Scaling,
    LpsSubcritical,
    /// `(√β₁ + √β₂)²` upper bound for sums; not sharp.
    SumHeuristic,
    Unknown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FormBoundInfo {
    pub beta: Option<f64>,
    pub g: TimeProfile,
    pub provenance: Provenance,
    /// Known lower bound on any admissible β when `beta` is unknown.
    pub beta_lower_bound: Option<f64>,
    pub note: Option<String>,
}

impl FormBoundInfo {
    fn known(beta: f64, g: TimeProfile, provenance: Provenance) -> Self {
        FormBoundInfo {
            beta: Some(beta),
            g,
            provenance,
            beta_lower_bound: None,
            note: None,
        }
    }

    fn unknown(note: impl Into<String>) -> Self {
        FormBoundInfo {
            beta: None,
            g: TimeProfile::Zero,
            provenance: Provenance::Unknown,
            beta_lower_bound: None,
            note: Some(note.into()),
        }
    }
}

/// `(2/(n-2))²`, the sharp Hardy constant in `ℝⁿ`, `n >= 3`.
pub fn hardy_constant(n: usize) -> f64 {
    let k = 2.0 / (n as f64 - 2.0);
    k * k
}

impl DriftField {
    /// Validate a catalog description in dimension `dim`.
    pub fn build(kind: DriftKind, dim: usize) -> Result<Self> {
        if dim < 3 {
            return Err(Error::invalid("d", format!("need d >= 3, got {dim}")));
        }
        let finite = |name: &'static str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be finite, got {v}")))
            }
        };
        match &kind {
            DriftKind::Zero => {}
            DriftKind::Uniform { c } => finite("c", *c)?,
            DriftKind::Hardy { a, x0 } => {
                finite("a", *a)?;
                if x0.len() != dim {
                    return Err(Error::invalid(
                        "x0",
                        format!("expected {dim} coordinates, got {}", x0.len()),
                    ));
                }
                for &v in x0 {
                    finite("x0", v)?;
                }
            }
            DriftKind::Split { c1, c2, n, m } => {
                finite("C1", *c1)?;
                finite("C2", *c2)?;
                if n + m != dim || *n == 0 {
                    return Err(Error::invalid(
                        "n,m",
                        format!("need n >= 1 and n + m = d = {dim}, got n={n}, m={m}"),
                    ));
                }
            }
            DriftKind::Annulus { c, delta, a_exp } => {
                finite("C", *c)?;
                if !(*delta > 0.0 && *delta < 1.0) {
                    return Err(Error::invalid("delta", format!("need 0 < delta < 1, got {delta}")));
                }
                if !(*a_exp > 0.0 && *a_exp < 0.5) {
                    return Err(Error::invalid("a_exp", format!("need 0 < a < 1/2, got {a_exp}")));
                }
            }
            DriftKind::TimeLog { a2, t0, eps } => {
                finite("a2", *a2)?;
                if !(t0.is_finite() && *t0 >= 0.0) {
                    return Err(Error::invalid("t0", format!("need t0 >= 0, got {t0}")));
                }
                if !(eps.is_finite() && *eps > 0.0) {
                    return Err(Error::invalid("eps", format!("need eps > 0, got {eps}")));
                }
            }
            DriftKind::LogCounterexample { kappa, alpha_exp } => {
                if !(kappa.is_finite() && *kappa > 0.0) {
                    return Err(Error::invalid("kappa", format!("need kappa > 0, got {kappa}")));
                }
                if !(alpha_exp.is_finite() && *alpha_exp >= 1.0) {
                    return Err(Error::invalid(
                        "alpha_exp",
                        format!("need alpha >= 1, got {alpha_exp}"),
                    ));
                }
            }
            DriftKind::Scaled { c, inner } => {
                finite("c", *c)?;
                if inner.dim != dim {
                    return Err(Error::invalid("inner", "dimension mismatch"));
                }
            }
            DriftKind::Sum { parts } => {
                if parts.is_empty() {
                    return Err(Error::invalid("parts", "sum needs at least one part"));
                }
                if parts.iter().any(|p| p.dim != dim) {
                    return Err(Error::invalid("parts", "dimension mismatch"));
                }
            }
        }
        Ok(DriftField { kind, dim })
    }

    pub fn zero(dim: usize) -> Result<Self> {
        Self::build(DriftKind::Zero, dim)
    }

    pub fn hardy(a: f64, dim: usize) -> Result<Self> {
        Self::build(DriftKind::Hardy { a, x0: vec![0.0; dim] }, dim)
    }

    pub fn scaled(self, c: f64) -> Result<Self> {
        let dim = self.dim;
        Self::build(DriftKind::Scaled { c, inner: Box::new(self) }, dim)
    }

    pub fn kind(&self) -> &DriftKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            DriftKind::Zero => "zero",
            DriftKind::Uniform { .. } => "uniform",
            DriftKind::Hardy { .. } => "hardy",
            DriftKind::Split { .. } => "split",
            DriftKind::Annulus { .. } => "annulus",
            DriftKind::TimeLog { .. } => "time_log",
            DriftKind::LogCounterexample { .. } => "log_counterexample",
            DriftKind::Scaled { .. } => "scaled",
            DriftKind::Sum { .. } => "sum",
        }
    }

    /// Whether the field depends on time.
    pub fn is_time_dependent(&self) -> bool {
        match &self.kind {
            DriftKind::TimeLog { a2, .. } => *a2 != 0.0,
            DriftKind::LogCounterexample { alpha_exp, .. } => *alpha_exp != 1.0,
            DriftKind::Scaled { inner, .. } => inner.is_time_dependent(),
            DriftKind::Sum { parts } => parts.iter().any(DriftField::is_time_dependent),
            _ => false,
        }
    }

    /// Evaluate `b(t, x)`.
    pub fn eval(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(t, x, &mut out)?;
        Ok(out)
    }

    /// Evaluate `b(t, x)` into `out` (overwritten).
    pub fn eval_into(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        debug_assert_eq!(x.len(), self.dim);
        out.iter_mut().for_each(|v| *v = 0.0);
        self.accumulate(t, x, 1.0, out)?;
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularLocus {
                field: self.name(),
                t,
                norm: norm(x),
            });
        }
        Ok(())
    }

    fn singular(&self, t: f64, x: &[f64]) -> Error {
        Error::SingularLocus {
            field: self.name(),
            t,
            norm: norm(x),
        }
    }

    fn accumulate(&self, t: f64, x: &[f64], scale: f64, out: &mut [f64]) -> Result<()> {
        match &self.kind {
            DriftKind::Zero => {}
            DriftKind::Uniform { c } => out.iter_mut().for_each(|v| *v += scale * c),
            DriftKind::Hardy { a, x0 } => {
                let r2: f64 = x.iter().zip(x0).map(|(xi, ci)| (xi - ci).powi(2)).sum();
                if *a != 0.0 {
                    if r2 == 0.0 {
                        return Err(self.singular(t, x));
                    }
                    let f = scale * a / r2;
                    for ((o, xi), ci) in out.iter_mut().zip(x).zip(x0) {
                        *o += f * (xi - ci);
                    }
                }
            }
            DriftKind::Split { c1, c2, n, .. } => {
                let (y, z) = x.split_at(*n);
                for (c, part, offset) in [(*c1, y, 0), (*c2, z, *n)] {
                    if c == 0.0 || part.is_empty() {
                        continue;
                    }
                    let r2: f64 = part.iter().map(|v| v * v).sum();
                    if r2 == 0.0 {
                        return Err(self.singular(t, x));
                    }
                    let f = scale * c / r2;
                    for (i, v) in part.iter().enumerate() {
                        out[offset + i] += f * v;
                    }
                }
            }
            DriftKind::Annulus { c, delta, a_exp } => {
                let r = norm(x);
                if r >= 1.0 - delta && r < 1.0 + delta && *c != 0.0 {
                    let gap = (r - 1.0).abs();
                    if gap == 0.0 {
                        return Err(self.singular(t, x));
                    }
                    let f = scale * c * gap.powf(-a_exp);
                    out.iter_mut().for_each(|v| *v += f);
                }
            }
            DriftKind::TimeLog { a2, t0, eps } => {
                if *a2 != 0.0 {
                    let f = scale * a2 * time_log_factor(t, *t0, *eps).ok_or_else(|| self.singular(t, x))?;
                    out.iter_mut().for_each(|v| *v += f);
                }
            }
            DriftKind::LogCounterexample { kappa, alpha_exp } => {
                if !(t > 0.0 && t < 1.0) {
                    return Err(Error::TimeDomain {
                        field: "log_counterexample",
                        t,
                    });
                }
                let r2: f64 = x.iter().map(|v| v * v).sum();
                if r2 == 0.0 {
                    return Err(self.singular(t, x));
                }
                let amp = 2.0 * kappa * alpha_exp * (-t.ln()).powf(alpha_exp - 1.0);
                let f = scale * amp / r2;
                for (o, xi) in out.iter_mut().zip(x) {
                    *o += f * xi;
                }
            }
            DriftKind::Scaled { c, inner } => {
                if *c != 0.0 {
                    inner.accumulate(t, x, scale * c, out)?;
                }
            }
            DriftKind::Sum { parts } => {
                for p in parts {
                    p.accumulate(t, x, scale, out)?;
                }
            }
        }
        Ok(())
    }

    /// Component of `b(t, r ê)` along the diagonal direction `ê = e/|e|`.
    ///
    /// Radial grids sample drifts along this ray. For radial fields
    /// (`hardy` centred at 0, `log_counterexample`, `split` with a single
    /// block) this is exactly the radial profile `b·x/|x|`; for other
    /// fields it is the ray projection. Negative `r` walks the opposite ray,
    /// which makes radial profiles odd.
    pub fn ray_component(&self, t: f64, r: f64) -> Result<f64> {
        let s = 1.0 / (self.dim as f64).sqrt();
        let x = vec![r * s; self.dim];
        let b = self.eval(t, &x)?;
        Ok(b.iter().sum::<f64>() * s)
    }

    /// Known `(β, g)` of the catalog entry.
    pub fn known_form_bound(&self) -> FormBoundInfo {
        let d = self.dim;
        match &self.kind {
            DriftKind::Zero => FormBoundInfo::known(0.0, TimeProfile::Zero, Provenance::Trivial),
            DriftKind::Uniform { c } => FormBoundInfo::known(
                0.0,
                TimeProfile::constant(c * c * d as f64),
                Provenance::LpsSubcritical,
            ),
            DriftKind::Hardy { a, .. } => FormBoundInfo::known(
                a * a * hardy_constant(d),
                TimeProfile::Zero,
                Provenance::HardyInequality,
            ),
            DriftKind::Split { c1, c2, n, m } => {
                let part = |c: f64, k: usize| -> Option<f64> {
                    if c == 0.0 || k == 0 {
                        Some(0.0)
                    } else if k >= 3 {
                        Some(c * c * hardy_constant(k))
                    } else {
                        None
                    }
                };
                match (part(*c1, *n), part(*c2, *m)) {
                    (Some(b1), Some(b2)) if b1 == 0.0 || b2 == 0.0 => {
                        FormBoundInfo::known(b1 + b2, TimeProfile::Zero, Provenance::HardyInequality)
                    }
                    (Some(b1), Some(b2)) => {
                        let beta = (b1.sqrt() + b2.sqrt()).powi(2);
                        FormBoundInfo::known(beta, TimeProfile::Zero, Provenance::SumHeuristic)
                    }
                    _ => FormBoundInfo::unknown("block of dimension < 3 has no Hardy inequality"),
                }
            }
            DriftKind::Annulus { .. } => {
                FormBoundInfo::unknown("finite but not printed; estimate numerically")
            }
            DriftKind::TimeLog { a2, t0, eps } => FormBoundInfo::known(
                0.0,
                TimeProfile::LogSingular {
                    amplitude: a2 * a2 * d as f64,
                    t0: *t0,
                    eps: *eps,
                },
                Provenance::HardyInequality,
            ),
            DriftKind::LogCounterexample { kappa, alpha_exp } => {
                let mut info = FormBoundInfo::unknown("");
                let df = d as f64;
                if *alpha_exp == 1.0 {
                    if *kappa > df / 2.0 {
                        info.beta_lower_bound = Some(4.0 * df * df / ((df - 2.0) * (df - 2.0)));
                        info.note = Some("non-uniqueness regime: beta > 4d^2/(d-2)^2".into());
                    } else {
                        info.note = Some("kappa <= d/2: no sup-norm decay".into());
                    }
                } else {
                    info.note = Some("alpha > 1: not form-bounded for any beta".into());
                    info.beta_lower_bound = Some(f64::INFINITY);
                }
                info
            }
            DriftKind::Scaled { c, inner } => {
                let inner = inner.known_form_bound();
                let c2 = c * c;
                match inner.beta {
                    Some(beta) => FormBoundInfo {
                        beta: Some(c2 * beta),
                        g: if inner.g.is_zero() {
                            TimeProfile::Zero
                        } else {
                            TimeProfile::Scaled(c2, Box::new(inner.g))
                        },
                        provenance: Provenance::Scaling,
                        beta_lower_bound: None,
                        note: inner.note,
                    },
                    None => FormBoundInfo {
                        beta_lower_bound: inner.beta_lower_bound.map(|b| c2 * b),
                        ..inner
                    },
                }
            }
            DriftKind::Sum { parts } => {
                let infos: Vec<_> = parts.iter().map(DriftField::known_form_bound).collect();
                if infos.iter().any(|i| i.beta.is_none()) {
                    return FormBoundInfo::unknown("sum with a part of unknown form-bound");
                }
                let root: f64 = infos.iter().map(|i| i.beta.unwrap().sqrt()).sum();
                let g: Vec<_> = infos.into_iter().map(|i| i.g).filter(|g| !g.is_zero()).collect();
                FormBoundInfo {
                    beta: Some(root * root),
                    g: if g.is_empty() { TimeProfile::Zero } else { TimeProfile::Sum(g) },
                    provenance: Provenance::SumHeuristic,
                    beta_lower_bound: None,
                    note: Some("(sum of sqrt(beta))^2 upper bound".into()),
                }
            }
        }
    }
}

impl fmt::Display for DriftField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            DriftKind::Zero => write!(f, "zero()"),
            DriftKind::Uniform { c } => write!(f, "uniform(c={c})"),
            DriftKind::Hardy { a, x0 } => {
                let x0: Vec<String> = x0.iter().map(|v| v.to_string()).collect();
                write!(f, "hardy(a={a}, x0={})", x0.join(":"))
            }
            DriftKind::Split { c1, c2, n, m } => write!(f, "split(c1={c1}, c2={c2}, n={n}, m={m})"),
            DriftKind::Annulus { c, delta, a_exp } => {
                write!(f, "annulus(c={c}, delta={delta}, a_exp={a_exp})")
            }
            DriftKind::TimeLog { a2, t0, eps } => write!(f, "time_log(a2={a2}, t0={t0}, eps={eps})"),
            DriftKind::LogCounterexample { kappa, alpha_exp } => {
                write!(f, "log_counterexample(kappa={kappa}, alpha_exp={alpha_exp})")
            }
            DriftKind::Scaled { c, inner } => write!(f, "scaled(c={c}, {inner})"),
            DriftKind::Sum { parts } => {
                write!(f, "sum(")?;
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// `|t - t0|^{-1/2} (log(e + |t - t0|⁻¹))^{-(1+ε)/2}`; `None` at `t = t0`.
pub fn time_log_factor(t: f64, t0: f64, eps: f64) -> Option<f64> {
    let tau = (t - t0).abs();
    if tau == 0.0 {
        return None;
    }
    Some(tau.powf(-0.5) * (E + 1.0 / tau).ln().powf(-(1.0 + eps) / 2.0))
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `(4πt)^{-d/2} exp(-κ(-ln t)^α - |x|²/(4t))`, the explicit solution that
/// defeats uniqueness when the counterexample drift is too strong.
pub fn explicit_solution(kappa: f64, alpha_exp: f64, d: usize, t: f64, x: &[f64]) -> Result<f64> {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    explicit_solution_radial(kappa, alpha_exp, d, t, r2.sqrt())
}

/// [`explicit_solution`] as a function of `r = |x|`.
pub fn explicit_solution_radial(kappa: f64, alpha_exp: f64, d: usize, t: f64, r: f64) -> Result<f64> {
    let sup = supnorm_decay(kappa, alpha_exp, d, t)?;
    Ok(sup * (-r * r / (4.0 * t)).exp())
}

/// `sup_x |u(t, x)| = (4πt)^{-d/2} exp(-κ(-ln t)^α)`, attained at `x = 0`.
pub fn supnorm_decay(kappa: f64, alpha_exp: f64, d: usize, t: f64) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::TimeDomain {
            field: "log_counterexample",
            t,
        });
    }
    if !(kappa > 0.0) || !(alpha_exp >= 1.0) || d < 3 {
        return Err(Error::invalid(
            "kappa,alpha,d",
            format!("need kappa > 0, alpha >= 1, d >= 3; got ({kappa}, {alpha_exp}, {d})"),
        ));
    }
    let log_amp = -(d as f64) / 2.0 * (4.0 * PI * t).ln() - kappa * (-t.ln()).powf(alpha_exp);
    Ok(log_amp.exp())
}
