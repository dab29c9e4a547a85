//! Closed-form thresholds, exponents and proof constants.
//!
//! Everything here is a pure function of its arguments. `f64::INFINITY` is an
//! accepted encoding for the integrability exponent `q` and the approximation
//! index `m`, with arithmetic defined by the limiting formula.

use crate::error::{Error, Result};
use crate::profile::TimeProfile;

/// `ω_q = (q-1)/(2q-3)`, the dimension-free factor in the drift thresholds.
pub fn omega(q: f64) -> Result<f64> {
    if q.is_nan() || q < 2.0 {
        return Err(Error::invalid("q", format!("need q >= 2, got {q}")));
    }
    if q.is_infinite() {
        return Ok(0.5);
    }
    Ok((q - 1.0) / (2.0 * q - 3.0))
}

/// Largest admissible form-bound `4 ω_d² / d²` for the evolution family in dimension `d`.
pub fn beta_threshold(d: u32) -> Result<f64> {
    if d < 3 {
        return Err(Error::invalid("d", format!("need d >= 3, got {d}")));
    }
    let d = d as f64;
    let w = omega(d)?;
    Ok(4.0 * w * w / (d * d))
}

/// Smallest exponent `(1 - √(β/4))⁻¹` above which the `L^p` bound holds.
pub fn lp_threshold(beta: f64) -> Result<f64> {
    if !(0.0..4.0).contains(&beta) {
        return Err(Error::invalid("beta", format!("need 0 <= beta < 4, got {beta}")));
    }
    Ok(1.0 / (1.0 - (beta / 4.0).sqrt()))
}

/// Whether `|b| ∈ L^q L^p` lies in the sub-critical class, `d/p + 2/q <= 1`.
pub fn lps_in_f0(p: f64, q: f64, d: u32) -> Result<bool> {
    if p.is_nan() || q.is_nan() || p < 2.0 || q < 2.0 {
        return Err(Error::invalid("p,q", format!("need p, q >= 2, got ({p}, {q})")));
    }
    if d < 3 {
        return Err(Error::invalid("d", format!("need d >= 3, got {d}")));
    }
    Ok(d as f64 / p + 2.0 / q <= 1.0)
}

/// Parameter choices of the gradient a priori estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProofCoefficients {
    pub eta_star: f64,
    pub kappa_star: f64,
    pub gamma_star: f64,
    pub n: f64,
    /// `q - 1 - (q√β/2)(2q-3)`.
    pub m_margin: f64,
    pub admissible: bool,
    /// `β = 0`: `γ* = 0`, callers must take the drift-free path.
    pub degenerate: bool,
}

pub fn proof_coefficients(q: f64, beta: f64, m: f64) -> Result<ProofCoefficients> {
    if !q.is_finite() || q < 2.0 {
        return Err(Error::invalid("q", format!("need finite q >= 2, got {q}")));
    }
    if beta.is_nan() || beta < 0.0 || beta.is_infinite() {
        return Err(Error::invalid("beta", format!("need finite beta >= 0, got {beta}")));
    }
    if m.is_nan() || m < 1.0 {
        return Err(Error::invalid("m", format!("need m >= 1 or m = inf, got {m}")));
    }
    let inv_m = if m.is_infinite() { 0.0 } else { 1.0 / m };
    let sb = beta.sqrt();
    let eta_star = q * (beta + inv_m).sqrt() / 4.0;
    let kappa_star = (q - 1.0) / 2.0;
    let gamma_star = q * sb / (q - 1.0);
    let n = 1.0 - sb / 2.0;
    let m_margin = q - 1.0 - q * sb / 2.0 * (2.0 * q - 3.0);
    let admissible = sb < 2.0 / q * omega(q)?;
    Ok(ProofCoefficients {
        eta_star,
        kappa_star,
        gamma_star,
        n,
        m_margin,
        admissible,
        degenerate: beta == 0.0,
    })
}

/// Constants of the Moser-type iteration `p_0 → p_1 → …`.
#[derive(Debug, Clone, PartialEq)]
pub struct MoserParams {
    pub k: f64,
    pub a: f64,
    pub p0: f64,
    pub alpha: f64,
    pub sigma_prime: f64,
    pub c1: f64,
    pub c2: f64,
    /// `p_1, …, p_L` from the closed form.
    pub p_seq: Vec<f64>,
    pub alpha_seq: Vec<f64>,
    pub gamma_seq: Vec<f64>,
    /// `Γ_l^{1/2k}`.
    pub gamma_root_seq: Vec<f64>,
    pub alpha_sup_bound: f64,
    pub gamma_inf_bound: f64,
    pub gamma_root_bound: f64,
    /// Largest relative gap between the closed form and the recurrence.
    pub recurrence_gap: f64,
    /// `γ` as printed in the sup-norm corollary statement (with `d-2` in
    /// place of `d-2+2α`); kept for comparison only.
    pub gamma_statement: f64,
}

/// Left side of the exponent condition fixing `k`: `4(p-1)/p² - 2√β/p`.
pub fn iteration_margin(beta: f64, p: f64) -> f64 {
    4.0 * (p - 1.0) / (p * p) - 2.0 * beta.sqrt() / p
}

/// Root `k` of `4(p-1)/p² - 2√β/p = 2/p^k`; any larger `k` also satisfies the
/// inequality.
pub fn iteration_k(beta: f64, p0: f64) -> Result<f64> {
    if !(0.0..4.0).contains(&beta) {
        return Err(Error::invalid("beta", format!("need 0 <= beta < 4, got {beta}")));
    }
    let lower = 2.0 / (2.0 - beta.sqrt());
    if p0.is_nan() || p0 <= lower {
        return Err(Error::invalid("p0", format!("need p0 > {lower}, got {p0}")));
    }
    let margin = iteration_margin(beta, p0);
    Ok((2.0 / margin).ln() / p0.ln())
}

/// Closed-form `p_l` for the iteration started at `p0`.
pub fn p_closed_form(a: f64, p0: f64, sigma_prime: f64, l: u32) -> f64 {
    let r = p0 / sigma_prime;
    let al = a.powi(l as i32);
    let al1 = a.powi(l as i32 - 1);
    (al * (r + 2.0) - al1 * r - 2.0) / (a - 1.0)
}

pub fn moser_params(beta: f64, p0: f64, sigma_prime: f64, d: u32, len: usize) -> Result<MoserParams> {
    if d < 3 {
        return Err(Error::invalid("d", format!("need d >= 3, got {d}")));
    }
    if len == 0 {
        return Err(Error::invalid("L", "sequence length must be >= 1"));
    }
    let k = iteration_k(beta, p0)?;
    if k <= 1.0 {
        return Err(Error::invalid(
            "k",
            format!("exponent condition gives k = {k} <= 1 at p0 = {p0}"),
        ));
    }
    let df = d as f64;
    let alpha = 2.0 / (df + 2.0);
    let dd = df - 2.0 + 2.0 * alpha;
    let sigma_max = df / dd;
    if !(sigma_prime > 1.0 && sigma_prime < sigma_max) {
        return Err(Error::invalid(
            "sigma_prime",
            format!("need 1 < sigma' < {sigma_max}, got {sigma_prime}"),
        ));
    }
    let a = sigma_max / sigma_prime;

    let p_seq: Vec<f64> = (1..=len as u32)
        .map(|l| p_closed_form(a, p0, sigma_prime, l))
        .collect();

    // σ'(p_1 - 2) = p0, σ'(p_{l+1} - 2) = p_l d/(d-2+2α).
    let mut recurrence_gap = 0.0_f64;
    let mut p = 2.0 + p0 / sigma_prime;
    for &closed in &p_seq {
        recurrence_gap = recurrence_gap.max(((closed - p) / p).abs());
        p = 2.0 + p * sigma_max / sigma_prime;
    }

    // Products straight from the definitions of γ_l, α_l and Γ_l^{1/2k}.
    let mut gamma_seq = Vec::with_capacity(len);
    let mut alpha_seq = Vec::with_capacity(len);
    let mut gamma_root_seq = Vec::with_capacity(len);
    for l in 1..=len {
        let ps = &p_seq[..l];
        let tail = |j: usize| -> f64 { ps[j + 1..].iter().map(|pi| 1.0 - 2.0 / pi).product() };
        gamma_seq.push(ps.iter().map(|pi| 1.0 - 2.0 / pi).product());
        alpha_seq.push((0..l).map(|j| tail(j) / ps[j]).sum());
        let log_root: f64 = (0..l).map(|j| ps[j].ln() / ps[j] * tail(j)).sum();
        gamma_root_seq.push(log_root.exp());
    }

    let c1 = p_seq[0] / a;
    let c2 = c1 / (a - 1.0);
    let alpha_sup_bound = 1.0 / (p0 / sigma_prime + 2.0 - p0 * dd / df);
    let s = 1.0 - sigma_prime * dd / df;
    let gamma_inf_bound = s / (s + 2.0 * sigma_prime / p0);
    let gamma_root_bound = (c1.ln() / (a - 1.0) + c2.ln() * a / (a - 1.0)) / c2;
    let gamma_root_bound = gamma_root_bound.exp();
    let s_stmt = 1.0 - sigma_prime * (df - 2.0) / df;
    let gamma_statement = s_stmt / (s_stmt + 2.0 * sigma_prime / p0);

    let params = MoserParams {
        k,
        a,
        p0,
        alpha,
        sigma_prime,
        c1,
        c2,
        p_seq,
        alpha_seq,
        gamma_seq,
        gamma_root_seq,
        alpha_sup_bound,
        gamma_inf_bound,
        gamma_root_bound,
        recurrence_gap,
        gamma_statement,
    };
    params.check_bounds()?;
    Ok(params)
}

impl MoserParams {
    fn check_bounds(&self) -> Result<()> {
        let tol = 1e-12;
        let sup_alpha = self.alpha_seq.iter().cloned().fold(f64::MIN, f64::max);
        if sup_alpha > self.alpha_sup_bound * (1.0 + tol) {
            return Err(Error::invalid(
                "alpha_seq",
                format!("sup α_l = {sup_alpha} exceeds {}", self.alpha_sup_bound),
            ));
        }
        let inf_gamma = self.gamma_seq.iter().cloned().fold(f64::MAX, f64::min);
        if inf_gamma < self.gamma_inf_bound * (1.0 - tol) {
            return Err(Error::invalid(
                "gamma_seq",
                format!("inf γ_l = {inf_gamma} below {}", self.gamma_inf_bound),
            ));
        }
        let sup_root = self.gamma_root_seq.iter().cloned().fold(f64::MIN, f64::max);
        if sup_root > self.gamma_root_bound * (1.0 + tol) {
            return Err(Error::invalid(
                "gamma_root_seq",
                format!("sup Γ_l^(1/2k) = {sup_root} exceeds {}", self.gamma_root_bound),
            ));
        }
        Ok(())
    }

    /// Whether `c1 a^l <= p_l <= c2 a^l` holds for every computed term.
    pub fn sandwich_holds(&self) -> bool {
        self.p_seq.iter().enumerate().all(|(i, &p)| {
            let al = self.a.powi(i as i32 + 1);
            let slack = 1e-12 * p;
            self.c1 * al <= p + slack && p <= self.c2 * al + slack
        })
    }
}

/// `h(t) = -coef ∫_0^t g`, the damping exponent that absorbs the time weight.
pub fn damping_h(coef: f64, g: &TimeProfile, t: f64) -> Result<f64> {
    if coef.is_nan() || coef < 0.0 {
        return Err(Error::invalid("coef", format!("need coef >= 0, got {coef}")));
    }
    if t.is_nan() || t < 0.0 {
        return Err(Error::invalid("t", format!("need t >= 0, got {t}")));
    }
    if coef == 0.0 || g.is_zero() {
        return Ok(0.0);
    }
    Ok(-coef * g.integral(t))
}

/// Damping coefficient `β/(2pη*)` with the optimal `η* = √(β/4)`.
pub fn lp_damping_coefficient(beta: f64, p: f64) -> Result<f64> {
    let threshold = lp_threshold(beta)?;
    if p <= threshold {
        return Err(Error::invalid("p", format!("need p > {threshold}, got {p}")));
    }
    if beta == 0.0 {
        return Ok(0.0);
    }
    let eta = (beta / 4.0).sqrt();
    Ok(beta / (2.0 * p * eta))
}
