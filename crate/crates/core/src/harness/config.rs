//! Experiment configuration.
//!
//! The format is line-oriented: `[section]` headers, `key = value` pairs and
//! `#` comment lines. Lists are comma-separated. Every problem found is
//! reported with its line number, not just the first one.
//!
//! ```text
//! [run]
//! name = heat
//! seed = 7
//!
//! [drift]
//! kind = zero
//!
//! [grid]
//! kind = radial
//! d = 3
//! r_max = 8
//! n = 256
//!
//! [time]
//! t_end = 0.4
//! dt = 0.01
//!
//! [checks]
//! run = e3
//! ```

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use crate::drift::{DriftField, DriftKind};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridSpec};
use crate::solver::ScalarState;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExportFormat {
    #[default]
    None,
    Csv,
    Binary,
    Both,
}

impl ExportFormat {
    const NAMES: &'static [&'static str] = &["none", "csv", "binary", "both"];

    fn name(self) -> &'static str {
        Self::NAMES[self as usize]
    }

    pub fn csv(self) -> bool {
        matches!(self, ExportFormat::Csv | ExportFormat::Both)
    }

    pub fn binary(self) -> bool {
        matches!(self, ExportFormat::Binary | ExportFormat::Both)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftConfig {
    pub kind: DriftKind,
    /// Plain multiplier applied after building the field.
    pub scale: f64,
    /// Form-bound of the field as described, when the catalog does not know it.
    pub beta: Option<f64>,
    /// Rescale the field so that its form-bound equals this value.
    pub beta_scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxConfig {
    pub m_list: Vec<u32>,
    pub width: Option<f64>,
    pub truncate_only: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeConfig {
    pub s: f64,
    pub t_end: f64,
    pub dt: f64,
    /// `k` of the `(s, τ)` lattice `s = iT/k`, `τ = jT/k`.
    pub lattice: usize,
}

/// Initial data, all radial profiles in `r = |x|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialData {
    /// `exp(-((r - center)/width)²)`. Off the origin this has a kink at `r = 0`.
    Gaussian { center: f64, width: f64 },
    /// First Dirichlet eigenfunction of the ball of radius `radius`, 1 at the origin.
    Eigenmode { radius: f64 },
    /// 1 on `r <= radius`, smooth transition to 0 over `width`.
    Indicator { radius: f64, width: f64 },
}

impl InitialData {
    pub fn eval(&self, d: usize, r: f64) -> f64 {
        match *self {
            InitialData::Gaussian { center, width } => (-((r - center) / width).powi(2)).exp(),
            InitialData::Eigenmode { radius } => eigenmode_profile(d, r / radius),
            InitialData::Indicator { radius, width } => smooth_step(1.0 - (r - radius) / width),
        }
    }

    pub fn state(&self, grid: &Grid, time: f64) -> ScalarState {
        let d = grid.dim();
        ScalarState::new(time, grid.sample(|_, r| self.eval(d, r)))
    }
}

/// Ground state of the Dirichlet Laplacian on the unit ball, normalised to 1
/// at the origin. Closed forms exist for `d = 3`; other dimensions use the
/// `d = 3` shape, which is still a smooth positive bump vanishing at `r = 1`.
fn eigenmode_profile(_d: usize, x: f64) -> f64 {
    use std::f64::consts::PI;
    if x >= 1.0 {
        0.0
    } else if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// `C^∞` step: 0 for `x <= 0`, 1 for `x >= 1`.
fn smooth_step(x: f64) -> f64 {
    let e = |y: f64| if y > 0.0 { (-1.0 / y).exp() } else { 0.0 };
    let a = e(x);
    let b = e(1.0 - x);
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CauchyNorms {
    SupL2,
    SupC,
    Both,
}

impl CauchyNorms {
    const NAMES: &'static [&'static str] = &["sup_l2", "sup_c", "both"];

    fn name(self) -> &'static str {
        Self::NAMES[self as usize]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CheckSpec {
    E1 { mid: f64 },
    E2 { deltas: Vec<f64> },
    E3,
    WeakResidual { t_lo: f64, t_hi: f64, center: f64, radius: f64 },
    Formbound { tol: f64, max_iter: usize },
    C1 { r_in: f64, r_out: f64 },
    C2 { tol: f64 },
    Hardy { eps: Vec<f64>, r_max: f64, n: usize, lower: f64, upper: f64 },
    Apriori { q: f64, alpha: f64 },
    Lp { p: Vec<f64> },
    Cauchy { norm: CauchyNorms },
    Iteration { p: f64, alpha: f64, sigma_prime: f64, calibrate: [u32; 2], reference: [u32; 2] },
    Counterexample { kappa: f64, alpha_exp: f64, t0: f64, t1: f64, t0_sweep: Vec<f64> },
}

pub const CHECK_NAMES: &[&str] = &[
    "e1",
    "e2",
    "e3",
    "weak_residual",
    "formbound",
    "c1",
    "c2",
    "hardy",
    "apriori",
    "lp",
    "cauchy",
    "iteration",
    "counterexample",
];

impl CheckSpec {
    pub fn name(&self) -> &'static str {
        let i = match self {
            CheckSpec::E1 { .. } => 0,
            CheckSpec::E2 { .. } => 1,
            CheckSpec::E3 => 2,
            CheckSpec::WeakResidual { .. } => 3,
            CheckSpec::Formbound { .. } => 4,
            CheckSpec::C1 { .. } => 5,
            CheckSpec::C2 { .. } => 6,
            CheckSpec::Hardy { .. } => 7,
            CheckSpec::Apriori { .. } => 8,
            CheckSpec::Lp { .. } => 9,
            CheckSpec::Cauchy { .. } => 10,
            CheckSpec::Iteration { .. } => 11,
            CheckSpec::Counterexample { .. } => 12,
        };
        CHECK_NAMES[i]
    }

    /// Whether the check evaluates on the `(s, τ)` lattice.
    pub fn uses_lattice(&self) -> bool {
        matches!(self, CheckSpec::Apriori { .. } | CheckSpec::Lp { .. } | CheckSpec::Cauchy { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    pub threads: Option<usize>,
    pub export: ExportFormat,
    pub drift: DriftConfig,
    pub grid: GridSpec,
    pub approx: ApproxConfig,
    pub time: TimeConfig,
    pub initial: InitialData,
    pub checks: Vec<CheckSpec>,
}

impl ExperimentConfig {
    pub fn build_grid(&self) -> Result<Grid> {
        Grid::build(self.grid)
    }

    /// The drift after `scale` and `beta_scale` are applied.
    pub fn build_field(&self, dim: usize) -> Result<DriftField> {
        let base = DriftField::build(with_dim(&self.drift.kind, dim), dim)?;
        let mut c = self.drift.scale;
        if let Some(target) = self.drift.beta_scale {
            let beta = self.base_beta(&base).ok_or_else(|| {
                Error::invalid("beta_scale", "needs a known form-bound; set `beta` in [drift]")
            })?;
            if beta <= 0.0 {
                return Err(Error::invalid("beta_scale", "the unscaled field has form-bound 0"));
            }
            c *= (target / beta).sqrt();
        }
        if c == 1.0 {
            Ok(base)
        } else {
            base.scaled(c)
        }
    }

    fn base_beta(&self, base: &DriftField) -> Option<f64> {
        self.drift.beta.or(base.known_form_bound().beta)
    }

    /// Form-bound of the built field, used by the β-dependent checks.
    pub fn beta(&self, dim: usize) -> Result<Option<f64>> {
        let base = DriftField::build(with_dim(&self.drift.kind, dim), dim)?;
        let Some(b0) = self.base_beta(&base) else {
            return Ok(None);
        };
        let c2 = self.drift.scale * self.drift.scale;
        Ok(Some(match self.drift.beta_scale {
            Some(target) => c2 * target,
            None => c2 * b0,
        }))
    }
}

fn with_dim(kind: &DriftKind, dim: usize) -> DriftKind {
    match kind {
        DriftKind::Hardy { a, .. } => DriftKind::Hardy { a: *a, x0: vec![0.0; dim] },
        k => k.clone(),
    }
}

// ---------------------------------------------------------------- parsing

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
    used: bool,
}

#[derive(Debug, Default)]
struct Section {
    line: usize,
    entries: BTreeMap<String, Entry>,
}

struct Parser {
    sections: BTreeMap<String, Section>,
    issues: Vec<ConfigIssue>,
}

const SECTIONS: &[&str] = &["run", "drift", "grid", "approx", "time", "initial", "checks"];

impl Parser {
    fn lex(text: &str) -> Self {
        let mut p = Parser {
            sections: BTreeMap::new(),
            issues: Vec::new(),
        };
        let mut current: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            if let Some(name) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
                let name = name.trim().to_string();
                let known = SECTIONS.contains(&name.as_str())
                    || name.strip_prefix("check.").is_some_and(|c| CHECK_NAMES.contains(&c));
                if !known {
                    p.issue(line, format!("unknown section [{name}]"));
                    current = None;
                    continue;
                }
                p.sections.entry(name.clone()).or_insert_with(|| Section { line, ..Default::default() });
                current = Some(name);
                continue;
            }
            let Some((k, v)) = t.split_once('=') else {
                p.issue(line, format!("expected `key = value` or `[section]`, found `{t}`"));
                continue;
            };
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            let Some(sec) = current.as_ref() else {
                p.issue(line, format!("key `{k}` outside any section"));
                continue;
            };
            let section = p.sections.get_mut(sec).expect("section registered on header");
            if let Some(prev) = section.entries.get(&k) {
                let first = prev.line;
                p.issue(line, format!("duplicate key `{k}` in [{sec}] (first set at line {first}, again at line {line})"));
                continue;
            }
            section.entries.insert(
                k,
                Entry {
                    value: v,
                    line,
                    used: false,
                },
            );
        }
        p
    }

    fn issue(&mut self, line: usize, message: impl Into<String>) {
        self.issues.push(ConfigIssue {
            line,
            message: message.into(),
        });
    }

    fn section_line(&self, sec: &str) -> usize {
        self.sections.get(sec).map_or(0, |s| s.line)
    }

    fn has(&self, sec: &str, key: &str) -> bool {
        self.sections.get(sec).is_some_and(|s| s.entries.contains_key(key))
    }

    fn line_of(&self, sec: &str, key: &str) -> usize {
        self.sections
            .get(sec)
            .and_then(|s| s.entries.get(key))
            .map_or_else(|| self.section_line(sec), |e| e.line)
    }

    /// Raw value and its line, marking the key as consumed.
    fn raw(&mut self, sec: &str, key: &str) -> Option<(String, usize)> {
        let e = self.sections.get_mut(sec)?.entries.get_mut(key)?;
        e.used = true;
        Some((e.value.clone(), e.line))
    }

    fn typed<T>(
        &mut self,
        sec: &str,
        key: &str,
        default: Option<T>,
        what: &str,
        parse: impl Fn(&str) -> Option<T>,
        check: impl Fn(&T) -> Option<String>,
    ) -> Option<T> {
        match self.raw(sec, key) {
            None => {
                if default.is_none() {
                    let line = self.section_line(sec);
                    self.issue(line, format!("missing required key `{key}` in [{sec}]"));
                }
                default
            }
            Some((v, line)) => match parse(&v) {
                None => {
                    self.issue(line, format!("`{key}` expects {what}, found `{v}`"));
                    None
                }
                Some(x) => match check(&x) {
                    Some(msg) => {
                        self.issue(line, format!("`{key}` out of range: {msg}"));
                        None
                    }
                    None => Some(x),
                },
            },
        }
    }

    fn real(&mut self, sec: &str, key: &str, default: Option<f64>, check: impl Fn(f64) -> Option<String>) -> Option<f64> {
        self.typed(sec, key, default, "a number", parse_real, |x| check(*x))
    }

    fn opt_real(&mut self, sec: &str, key: &str, check: impl Fn(f64) -> Option<String>) -> Option<f64> {
        if self.has(sec, key) {
            self.real(sec, key, None, check)
        } else {
            None
        }
    }

    fn int(&mut self, sec: &str, key: &str, default: Option<u64>, check: impl Fn(u64) -> Option<String>) -> Option<u64> {
        self.typed(sec, key, default, "a non-negative integer", |s| s.parse().ok(), |x| check(*x))
    }

    fn boolean(&mut self, sec: &str, key: &str, default: bool) -> Option<bool> {
        self.typed(sec, key, Some(default), "true or false", |s| s.parse().ok(), |_| None)
    }

    fn choice(&mut self, sec: &str, key: &str, names: &[&str], default: Option<usize>) -> Option<usize> {
        let what = format!("one of {}", names.join(", "));
        self.typed(sec, key, default, &what, |s| names.iter().position(|n| *n == s), |_| None)
    }

    fn reals(&mut self, sec: &str, key: &str, default: Option<Vec<f64>>, check: impl Fn(f64) -> Option<String>) -> Option<Vec<f64>> {
        self.typed(
            sec,
            key,
            default,
            "a comma-separated list of numbers",
            |s| s.split(',').map(|x| parse_real(x.trim())).collect::<Option<Vec<_>>>().filter(|v| !v.is_empty()),
            |v| v.iter().find_map(|&x| check(x)),
        )
    }

    fn ints(&mut self, sec: &str, key: &str, default: Option<Vec<u64>>, check: impl Fn(u64) -> Option<String>) -> Option<Vec<u64>> {
        self.typed(
            sec,
            key,
            default,
            "a comma-separated list of integers",
            |s| s.split(',').map(|x| x.trim().parse().ok()).collect::<Option<Vec<_>>>().filter(|v| !v.is_empty()),
            |v| v.iter().find_map(|&x| check(x)),
        )
    }

    fn text(&mut self, sec: &str, key: &str, default: &str) -> Option<String> {
        self.typed(
            sec,
            key,
            Some(default.to_string()),
            "a name of letters, digits, `-` or `_`",
            |s| {
                (!s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_'))
                    .then(|| s.to_string())
            },
            |_| None,
        )
    }

    fn flag_unused(&mut self) {
        let mut extra = Vec::new();
        for (name, sec) in &self.sections {
            for (k, e) in &sec.entries {
                if !e.used {
                    extra.push((e.line, format!("unknown key `{k}` in [{name}]")));
                }
            }
        }
        for (line, msg) in extra {
            self.issue(line, msg);
        }
    }
}

fn parse_real(s: &str) -> Option<f64> {
    match s {
        "inf" | "+inf" => Some(f64::INFINITY),
        _ => s.parse::<f64>().ok().filter(|x| x.is_finite()),
    }
}

fn positive(x: f64) -> Option<String> {
    (!(x > 0.0) || x.is_infinite()).then(|| format!("need a finite value > 0, got {x}"))
}

fn nonneg(x: f64) -> Option<String> {
    (!(x >= 0.0) || x.is_infinite()).then(|| format!("need a finite value >= 0, got {x}"))
}

fn finite(x: f64) -> Option<String> {
    (!x.is_finite()).then(|| format!("need a finite value, got {x}"))
}

fn at_least(lo: u64) -> impl Fn(u64) -> Option<String> {
    move |x| (x < lo).then(|| format!("need >= {lo}, got {x}"))
}

const DRIFT_KINDS: &[&str] = &["zero", "uniform", "hardy", "split", "annulus", "time_log", "counterexample"];
const GRID_KINDS: &[&str] = &["radial", "radial_log", "tensor3"];
const INITIAL_KINDS: &[&str] = &["gaussian", "eigenmode", "indicator"];

fn parse_drift(p: &mut Parser) -> Option<DriftConfig> {
    let s = "drift";
    let kind = p.choice(s, "kind", DRIFT_KINDS, None);
    let scale = p.real(s, "scale", Some(1.0), finite);
    let beta = p.opt_real(s, "beta", nonneg);
    let beta_scale = p.opt_real(s, "beta_scale", nonneg);
    let kind = match kind? {
        0 => DriftKind::Zero,
        1 => DriftKind::Uniform {
            c: p.real(s, "c", None, finite)?,
        },
        2 => DriftKind::Hardy {
            a: p.real(s, "a", Some(1.0), finite)?,
            x0: Vec::new(),
        },
        3 => {
            let c1 = p.real(s, "c1", None, finite);
            let c2 = p.real(s, "c2", None, finite);
            let n = p.int(s, "n", None, at_least(1));
            let m = p.int(s, "m", None, |_| None);
            DriftKind::Split {
                c1: c1?,
                c2: c2?,
                n: n? as usize,
                m: m? as usize,
            }
        }
        4 => {
            let c = p.real(s, "c", None, finite);
            let delta = p.real(s, "delta", None, |x| (!(x > 0.0 && x < 1.0)).then(|| format!("need 0 < delta < 1, got {x}")));
            let a_exp = p.real(s, "a_exp", None, |x| (!(x > 0.0 && x < 0.5)).then(|| format!("need 0 < a_exp < 1/2, got {x}")));
            DriftKind::Annulus {
                c: c?,
                delta: delta?,
                a_exp: a_exp?,
            }
        }
        5 => {
            let a2 = p.real(s, "a2", None, finite);
            let t0 = p.real(s, "t0", None, nonneg);
            let eps = p.real(s, "eps", None, positive);
            DriftKind::TimeLog {
                a2: a2?,
                t0: t0?,
                eps: eps?,
            }
        }
        _ => {
            let kappa = p.real(s, "kappa", None, positive);
            let alpha_exp = p.real(s, "alpha_exp", Some(1.0), |x| (!(x >= 1.0)).then(|| format!("need alpha_exp >= 1, got {x}")));
            DriftKind::LogCounterexample {
                kappa: kappa?,
                alpha_exp: alpha_exp?,
            }
        }
    };
    Some(DriftConfig {
        kind,
        scale: scale?,
        beta,
        beta_scale,
    })
}

fn parse_grid(p: &mut Parser) -> Option<GridSpec> {
    let s = "grid";
    let kind = p.choice(s, "kind", GRID_KINDS, None)?;
    let n = p.int(s, "n", None, at_least(crate::grid::MIN_NODES as u64)).map(|n| n as usize);
    match kind {
        0 => {
            let d = p.int(s, "d", Some(3), at_least(3));
            let r_max = p.real(s, "r_max", None, positive);
            Some(GridSpec::Radial {
                d: d? as usize,
                r_max: r_max?,
                n: n?,
            })
        }
        1 => {
            let d = p.int(s, "d", Some(3), at_least(3));
            let r_min = p.real(s, "r_min", None, positive);
            let r_max = p.real(s, "r_max", None, positive);
            Some(GridSpec::RadialLog {
                d: d? as usize,
                r_min: r_min?,
                r_max: r_max?,
                n: n?,
            })
        }
        _ => {
            let half_width = p.real(s, "half_width", None, positive);
            Some(GridSpec::Tensor3 {
                half_width: half_width?,
                n: n?,
            })
        }
    }
}

fn parse_check(p: &mut Parser, name: &str) -> Option<CheckSpec> {
    let sec = format!("check.{name}");
    let s = sec.as_str();
    let unit = |x: f64| (!(x > 0.0 && x < 1.0)).then(|| format!("need a value in (0, 1), got {x}"));
    Some(match name {
        "e1" => CheckSpec::E1 {
            mid: p.real(s, "mid", Some(0.5), unit)?,
        },
        "e2" => CheckSpec::E2 {
            deltas: p.reals(s, "deltas", Some(Vec::new()), positive)?,
        },
        "e3" => CheckSpec::E3,
        "weak_residual" => {
            let t_lo = p.real(s, "t_lo", None, nonneg);
            let t_hi = p.real(s, "t_hi", None, positive);
            let center = p.real(s, "center", Some(0.0), nonneg);
            let radius = p.real(s, "radius", Some(1.0), positive);
            CheckSpec::WeakResidual {
                t_lo: t_lo?,
                t_hi: t_hi?,
                center: center?,
                radius: radius?,
            }
        }
        "formbound" => {
            let tol = p.real(s, "tol", Some(1e-8), positive);
            let max_iter = p.int(s, "max_iter", Some(20_000), at_least(1));
            CheckSpec::Formbound {
                tol: tol?,
                max_iter: max_iter? as usize,
            }
        }
        "c1" => {
            let r_in = p.real(s, "r_in", None, nonneg);
            let r_out = p.real(s, "r_out", None, positive);
            CheckSpec::C1 {
                r_in: r_in?,
                r_out: r_out?,
            }
        }
        "c2" => CheckSpec::C2 {
            tol: p.real(s, "tol", Some(1e-2), nonneg)?,
        },
        "hardy" => {
            let eps = p.reals(s, "eps", None, positive);
            let r_max = p.real(s, "r_max", Some(50.0), positive);
            let n = p.int(s, "n", Some(4096), at_least(crate::grid::MIN_NODES as u64));
            let lower = p.real(s, "lower", Some(3.6), nonneg);
            let upper = p.real(s, "upper", Some(4.0), positive);
            CheckSpec::Hardy {
                eps: eps?,
                r_max: r_max?,
                n: n? as usize,
                lower: lower?,
                upper: upper?,
            }
        }
        "apriori" => {
            let q = p.real(s, "q", Some(2.0), |x| (!(x >= 2.0)).then(|| format!("need q >= 2, got {x}")));
            let alpha = p.real(s, "alpha", Some(1.0), |x| (!(x > 0.0 && x <= 1.0)).then(|| format!("need 0 < alpha <= 1, got {x}")));
            CheckSpec::Apriori { q: q?, alpha: alpha? }
        }
        "lp" => CheckSpec::Lp {
            p: p.typed(
                s,
                "p",
                None,
                "a comma-separated list of numbers or inf",
                |v| v.split(',').map(|x| parse_real(x.trim())).collect::<Option<Vec<_>>>().filter(|v| !v.is_empty()),
                |v| v.iter().find_map(|&x| (!(x >= 1.0)).then(|| format!("need p >= 1, got {x}"))),
            )?,
        },
        "cauchy" => {
            let i = p.choice(s, "norm", CauchyNorms::NAMES, Some(2))?;
            CheckSpec::Cauchy {
                norm: [CauchyNorms::SupL2, CauchyNorms::SupC, CauchyNorms::Both][i],
            }
        }
        "iteration" => {
            let pp = p.real(s, "p", Some(2.5), |x| (!(x > 1.0)).then(|| format!("need p > 1, got {x}")));
            let alpha = p.real(s, "alpha", Some(0.4), |x| (!(x > 0.0 && x < 1.0)).then(|| format!("need 0 < alpha < 1, got {x}")));
            let sigma_prime = p.real(s, "sigma_prime", Some(1.25), |x| (!(x > 1.0)).then(|| format!("need sigma_prime > 1, got {x}")));
            let pair = |v: &Vec<u64>| {
                (v.len() != 2 || v[0] >= v[1]).then(|| format!("need two increasing values, got {v:?}"))
            };
            let cal = p.typed(s, "calibrate", None, "two integers", |v| parse_ints(v), pair);
            let reference = p.typed(s, "reference", None, "two integers", |v| parse_ints(v), pair);
            CheckSpec::Iteration {
                p: pp?,
                alpha: alpha?,
                sigma_prime: sigma_prime?,
                calibrate: to_pair(&cal?),
                reference: to_pair(&reference?),
            }
        }
        _ => {
            let kappa = p.real(s, "kappa", Some(2.0), positive);
            let alpha_exp = p.real(s, "alpha_exp", Some(1.0), |x| (!(x >= 1.0)).then(|| format!("need alpha_exp >= 1, got {x}")));
            let t0 = p.real(s, "t0", Some(0.1), unit);
            let t1 = p.real(s, "t1", Some(0.5), unit);
            let sweep = p.reals(s, "t0_sweep", Some(vec![1e-2, 1e-3, 1e-4]), unit);
            CheckSpec::Counterexample {
                kappa: kappa?,
                alpha_exp: alpha_exp?,
                t0: t0?,
                t1: t1?,
                t0_sweep: sweep?,
            }
        }
    })
}

fn parse_ints(v: &str) -> Option<Vec<u64>> {
    v.split(',').map(|x| x.trim().parse().ok()).collect()
}

fn to_pair(v: &[u64]) -> [u32; 2] {
    [v[0] as u32, v[1] as u32]
}

/// Parse and validate. On failure every issue found is returned, sorted by line.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut p = Parser::lex(text);
    for required in ["drift", "grid", "time"] {
        if !p.sections.contains_key(required) {
            p.issue(0, format!("missing section [{required}]"));
        }
    }

    let name = p.text("run", "name", "experiment");
    let seed = p.int("run", "seed", Some(0), |_| None);
    let threads = if p.has("run", "threads") {
        p.int("run", "threads", None, at_least(1)).map(|t| Some(t as usize))
    } else {
        Some(None)
    };
    let export = p.choice("run", "export", ExportFormat::NAMES, Some(0)).map(|i| {
        [ExportFormat::None, ExportFormat::Csv, ExportFormat::Binary, ExportFormat::Both][i]
    });

    let drift = if p.sections.contains_key("drift") { parse_drift(&mut p) } else { None };
    let grid = if p.sections.contains_key("grid") { parse_grid(&mut p) } else { None };

    let m_list = p.ints("approx", "m", Some(vec![8]), at_least(1)).and_then(|v| {
        if v.windows(2).any(|w| w[0] >= w[1]) {
            let line = p.line_of("approx", "m");
            p.issue(line, "`m` must be strictly increasing");
            None
        } else if v.iter().any(|&m| m > u32::MAX as u64) {
            let line = p.line_of("approx", "m");
            p.issue(line, "`m` out of range: values must fit in 32 bits");
            None
        } else {
            Some(v.into_iter().map(|m| m as u32).collect::<Vec<_>>())
        }
    });
    let width = p.opt_real("approx", "width", positive);
    let truncate_only = p.boolean("approx", "truncate_only", false);

    let time = if p.sections.contains_key("time") {
        let s = p.real("time", "s", Some(0.0), nonneg);
        let t_end = p.real("time", "t_end", None, positive);
        let dt = p.real("time", "dt", None, positive);
        let lattice = p.int("time", "lattice", Some(8), at_least(1));
        match (s, t_end, dt, lattice) {
            (Some(s), Some(t_end), Some(dt), Some(lattice)) => Some(TimeConfig {
                s,
                t_end,
                dt,
                lattice: lattice as usize,
            }),
            _ => None,
        }
    } else {
        None
    };

    let initial = match p.choice("initial", "kind", INITIAL_KINDS, Some(0)) {
        Some(0) => {
            let center = p.real("initial", "center", Some(0.0), nonneg);
            let width = p.real("initial", "width", Some(0.5), positive);
            center.zip(width).map(|(center, width)| InitialData::Gaussian { center, width })
        }
        Some(1) => p.real("initial", "radius", Some(1.0), positive).map(|radius| InitialData::Eigenmode { radius }),
        Some(_) => {
            let radius = p.real("initial", "radius", Some(1.0), positive);
            let width = p.real("initial", "width", Some(0.5), positive);
            radius.zip(width).map(|(radius, width)| InitialData::Indicator { radius, width })
        }
        None => None,
    };

    let mut checks = Vec::new();
    let listed: Vec<(String, usize)> = match p.raw("checks", "run") {
        None => Vec::new(),
        Some((v, line)) => v
            .split(',')
            .map(|x| x.trim().to_string())
            .filter(|x| !x.is_empty())
            .map(|x| (x, line))
            .collect(),
    };
    let mut seen = Vec::new();
    for (name, line) in &listed {
        if !CHECK_NAMES.contains(&name.as_str()) {
            p.issue(*line, format!("unknown check `{name}`; known: {}", CHECK_NAMES.join(", ")));
            continue;
        }
        if seen.contains(name) {
            p.issue(*line, format!("check `{name}` listed twice"));
            continue;
        }
        seen.push(name.clone());
        if let Some(c) = parse_check(&mut p, name) {
            checks.push(c);
        }
    }
    let orphans: Vec<(String, usize)> = p
        .sections
        .iter()
        .filter_map(|(k, sec)| k.strip_prefix("check.").map(|c| (c.to_string(), sec.line)))
        .filter(|(c, _)| !seen.contains(c))
        .collect();
    for (c, line) in orphans {
        p.issue(line, format!("[check.{c}] given but `{c}` is not in [checks] run"));
        if let Some(sec) = p.sections.get_mut(&format!("check.{c}")) {
            sec.entries.values_mut().for_each(|e| e.used = true);
        }
    }
    p.flag_unused();

    let assembled = match (name, seed, threads, export, drift, grid, m_list, width, truncate_only, time, initial) {
        (Some(name), Some(seed), Some(threads), Some(export), Some(drift), Some(grid), Some(m_list), width, Some(truncate_only), Some(time), Some(initial)) => Some(ExperimentConfig {
            name,
            seed,
            threads,
            export,
            drift,
            grid,
            approx: ApproxConfig {
                m_list,
                width,
                truncate_only,
            },
            time,
            initial,
            checks,
        }),
        _ => None,
    };
    if let Some(cfg) = &assembled {
        validate(cfg, &mut p);
    }
    if p.issues.is_empty() {
        Ok(assembled.expect("no issues implies every section parsed"))
    } else {
        p.issues.sort_by_key(|i| i.line);
        Err(Error::Config(p.issues))
    }
}

/// Cross-section checks that need the assembled values.
fn validate(cfg: &ExperimentConfig, p: &mut Parser) {
    let grid = match Grid::build(cfg.grid) {
        Ok(g) => g,
        Err(e) => {
            let line = p.section_line("grid");
            p.issue(line, format!("grid: {e}"));
            return;
        }
    };
    let dim = grid.dim();
    let drift_line = p.line_of("drift", "kind");
    match cfg.build_field(dim) {
        Ok(_) => {}
        Err(e) => p.issue(drift_line, format!("drift: {e}")),
    }
    // Dirichlet data on the outer boundary is 0; initial data must agree.
    let outer = match cfg.grid {
        GridSpec::Radial { r_max, .. } | GridSpec::RadialLog { r_max, .. } => r_max,
        GridSpec::Tensor3 { half_width, .. } => half_width,
    };
    let edge = cfg.initial.eval(dim, outer).abs();
    if !(edge < 1e-10) {
        let line = match p.section_line("initial") {
            0 => p.section_line("grid"),
            l => l,
        };
        p.issue(line, format!("initial data is {edge:e} at the outer boundary r={outer}; need < 1e-10"));
    }
    let t = cfg.time;
    let tl = p.line_of("time", "t_end");
    if !(t.t_end > t.s) {
        p.issue(tl, format!("need t_end > s, got s={}, t_end={}", t.s, t.t_end));
        return;
    }
    let aligned = |len: f64| {
        let k = len / t.dt;
        (k - k.round()).abs() <= 1e-6
    };
    if !aligned(t.t_end - t.s) {
        p.issue(p.line_of("time", "dt"), format!("(t_end - s)/dt = {} is not an integer", (t.t_end - t.s) / t.dt));
    }
    if cfg.checks.iter().any(CheckSpec::uses_lattice) && !aligned(t.t_end / t.lattice as f64) {
        p.issue(
            p.line_of("time", "lattice"),
            format!("lattice step t_end/{} = {} is not a multiple of dt", t.lattice, t.t_end / t.lattice as f64),
        );
    }
    if cfg.checks.iter().any(CheckSpec::uses_lattice) && t.s != 0.0 {
        p.issue(p.line_of("time", "s"), "lattice checks start at s = 0");
    }
    for c in &cfg.checks {
        let line = p.section_line(&format!("check.{}", c.name())).max(p.line_of("checks", "run"));
        match c {
            CheckSpec::E2 { deltas } => {
                // deltas below dt run with a refined step, so they need not align
                if deltas.iter().any(|&d| t.s + d > t.t_end) {
                    p.issue(line, "e2 deltas must lie inside the time window");
                }
            }
            CheckSpec::WeakResidual { t_lo, t_hi, .. } => {
                if !(t.s < *t_lo && t_lo < t_hi && *t_hi < t.t_end) {
                    p.issue(line, "weak_residual needs s < t_lo < t_hi < t_end");
                }
            }
            CheckSpec::C1 { r_in, r_out } if r_in >= r_out => {
                p.issue(line, "c1 needs r_in < r_out");
            }
            CheckSpec::Hardy { eps, r_max, lower, upper, .. } => {
                if eps.iter().any(|e| e >= r_max) || lower >= upper {
                    p.issue(line, "hardy needs every eps < r_max and lower < upper");
                }
            }
            CheckSpec::Iteration { calibrate, reference, .. } => {
                for m in calibrate.iter().chain(reference) {
                    if !cfg.approx.m_list.contains(m) {
                        p.issue(line, format!("iteration pair uses m={m}, which is not in [approx] m"));
                    }
                }
            }
            CheckSpec::Counterexample { t0, t1, t0_sweep, .. } => {
                if !grid.is_radial() {
                    p.issue(line, "counterexample runs on radial grids");
                }
                if !(t0 < t1) || !aligned(t1 - t0) {
                    p.issue(line, "counterexample needs t0 < t1 with (t1 - t0)/dt an integer");
                }
                if t0_sweep.len() < 2 {
                    p.issue(line, "t0_sweep needs at least two times");
                }
            }
            _ => {}
        }
    }
}

// ---------------------------------------------------------- serialization

fn fmt_real(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else {
        format!("{x:?}")
    }
}

fn fmt_list<T>(v: &[T], f: impl Fn(&T) -> String) -> String {
    v.iter().map(f).collect::<Vec<_>>().join(", ")
}

/// Canonical text form; `parse_config(&serialize(c))` returns `c`.
pub fn serialize(cfg: &ExperimentConfig) -> String {
    let mut o = String::new();
    let kv = |o: &mut String, k: &str, v: String| {
        let _ = writeln!(o, "{k} = {v}");
    };
    o.push_str("[run]\n");
    kv(&mut o, "name", cfg.name.clone());
    kv(&mut o, "seed", cfg.seed.to_string());
    if let Some(t) = cfg.threads {
        kv(&mut o, "threads", t.to_string());
    }
    kv(&mut o, "export", cfg.export.name().into());

    o.push_str("\n[drift]\n");
    let d = &cfg.drift;
    match &d.kind {
        DriftKind::Zero => kv(&mut o, "kind", "zero".into()),
        DriftKind::Uniform { c } => {
            kv(&mut o, "kind", "uniform".into());
            kv(&mut o, "c", fmt_real(*c));
        }
        DriftKind::Hardy { a, .. } => {
            kv(&mut o, "kind", "hardy".into());
            kv(&mut o, "a", fmt_real(*a));
        }
        DriftKind::Split { c1, c2, n, m } => {
            kv(&mut o, "kind", "split".into());
            kv(&mut o, "c1", fmt_real(*c1));
            kv(&mut o, "c2", fmt_real(*c2));
            kv(&mut o, "n", n.to_string());
            kv(&mut o, "m", m.to_string());
        }
        DriftKind::Annulus { c, delta, a_exp } => {
            kv(&mut o, "kind", "annulus".into());
            kv(&mut o, "c", fmt_real(*c));
            kv(&mut o, "delta", fmt_real(*delta));
            kv(&mut o, "a_exp", fmt_real(*a_exp));
        }
        DriftKind::TimeLog { a2, t0, eps } => {
            kv(&mut o, "kind", "time_log".into());
            kv(&mut o, "a2", fmt_real(*a2));
            kv(&mut o, "t0", fmt_real(*t0));
            kv(&mut o, "eps", fmt_real(*eps));
        }
        DriftKind::LogCounterexample { kappa, alpha_exp } => {
            kv(&mut o, "kind", "counterexample".into());
            kv(&mut o, "kappa", fmt_real(*kappa));
            kv(&mut o, "alpha_exp", fmt_real(*alpha_exp));
        }
        DriftKind::Scaled { .. } | DriftKind::Sum { .. } => unreachable!("not constructible from a config"),
    }
    kv(&mut o, "scale", fmt_real(d.scale));
    if let Some(b) = d.beta {
        kv(&mut o, "beta", fmt_real(b));
    }
    if let Some(b) = d.beta_scale {
        kv(&mut o, "beta_scale", fmt_real(b));
    }

    o.push_str("\n[grid]\n");
    match cfg.grid {
        GridSpec::Radial { d, r_max, n } => {
            kv(&mut o, "kind", "radial".into());
            kv(&mut o, "d", d.to_string());
            kv(&mut o, "r_max", fmt_real(r_max));
            kv(&mut o, "n", n.to_string());
        }
        GridSpec::RadialLog { d, r_min, r_max, n } => {
            kv(&mut o, "kind", "radial_log".into());
            kv(&mut o, "d", d.to_string());
            kv(&mut o, "r_min", fmt_real(r_min));
            kv(&mut o, "r_max", fmt_real(r_max));
            kv(&mut o, "n", n.to_string());
        }
        GridSpec::Tensor3 { half_width, n } => {
            kv(&mut o, "kind", "tensor3".into());
            kv(&mut o, "half_width", fmt_real(half_width));
            kv(&mut o, "n", n.to_string());
        }
    }

    o.push_str("\n[approx]\n");
    kv(&mut o, "m", fmt_list(&cfg.approx.m_list, |m| m.to_string()));
    if let Some(w) = cfg.approx.width {
        kv(&mut o, "width", fmt_real(w));
    }
    kv(&mut o, "truncate_only", cfg.approx.truncate_only.to_string());

    o.push_str("\n[time]\n");
    kv(&mut o, "s", fmt_real(cfg.time.s));
    kv(&mut o, "t_end", fmt_real(cfg.time.t_end));
    kv(&mut o, "dt", fmt_real(cfg.time.dt));
    kv(&mut o, "lattice", cfg.time.lattice.to_string());

    o.push_str("\n[initial]\n");
    match cfg.initial {
        InitialData::Gaussian { center, width } => {
            kv(&mut o, "kind", "gaussian".into());
            kv(&mut o, "center", fmt_real(center));
            kv(&mut o, "width", fmt_real(width));
        }
        InitialData::Eigenmode { radius } => {
            kv(&mut o, "kind", "eigenmode".into());
            kv(&mut o, "radius", fmt_real(radius));
        }
        InitialData::Indicator { radius, width } => {
            kv(&mut o, "kind", "indicator".into());
            kv(&mut o, "radius", fmt_real(radius));
            kv(&mut o, "width", fmt_real(width));
        }
    }

    o.push_str("\n[checks]\n");
    kv(&mut o, "run", fmt_list(&cfg.checks, |c| c.name().to_string()));
    for c in &cfg.checks {
        let mut body = String::new();
        let b = &mut body;
        match c {
            CheckSpec::E1 { mid } => kv(b, "mid", fmt_real(*mid)),
            CheckSpec::E2 { deltas } => {
                if !deltas.is_empty() {
                    kv(b, "deltas", fmt_list(deltas, |x| fmt_real(*x)));
                }
            }
            CheckSpec::E3 => {}
            CheckSpec::WeakResidual { t_lo, t_hi, center, radius } => {
                kv(b, "t_lo", fmt_real(*t_lo));
                kv(b, "t_hi", fmt_real(*t_hi));
                kv(b, "center", fmt_real(*center));
                kv(b, "radius", fmt_real(*radius));
            }
            CheckSpec::Formbound { tol, max_iter } => {
                kv(b, "tol", fmt_real(*tol));
                kv(b, "max_iter", max_iter.to_string());
            }
            CheckSpec::C1 { r_in, r_out } => {
                kv(b, "r_in", fmt_real(*r_in));
                kv(b, "r_out", fmt_real(*r_out));
            }
            CheckSpec::C2 { tol } => kv(b, "tol", fmt_real(*tol)),
            CheckSpec::Hardy { eps, r_max, n, lower, upper } => {
                kv(b, "eps", fmt_list(eps, |x| fmt_real(*x)));
                kv(b, "r_max", fmt_real(*r_max));
                kv(b, "n", n.to_string());
                kv(b, "lower", fmt_real(*lower));
                kv(b, "upper", fmt_real(*upper));
            }
            CheckSpec::Apriori { q, alpha } => {
                kv(b, "q", fmt_real(*q));
                kv(b, "alpha", fmt_real(*alpha));
            }
            CheckSpec::Lp { p } => kv(b, "p", fmt_list(p, |x| fmt_real(*x))),
            CheckSpec::Cauchy { norm } => kv(b, "norm", norm.name().into()),
            CheckSpec::Iteration { p, alpha, sigma_prime, calibrate, reference } => {
                kv(b, "p", fmt_real(*p));
                kv(b, "alpha", fmt_real(*alpha));
                kv(b, "sigma_prime", fmt_real(*sigma_prime));
                kv(b, "calibrate", fmt_list(calibrate, |m| m.to_string()));
                kv(b, "reference", fmt_list(reference, |m| m.to_string()));
            }
            CheckSpec::Counterexample { kappa, alpha_exp, t0, t1, t0_sweep } => {
                kv(b, "kappa", fmt_real(*kappa));
                kv(b, "alpha_exp", fmt_real(*alpha_exp));
                kv(b, "t0", fmt_real(*t0));
                kv(b, "t1", fmt_real(*t1));
                kv(b, "t0_sweep", fmt_list(t0_sweep, |x| fmt_real(*x)));
            }
        }
        if !body.is_empty() {
            let _ = write!(o, "\n[check.{}]\n{body}", c.name());
        }
    }
    o
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
[drift]
kind = zero

[grid]
kind = radial
d = 3
r_max = 8
n = 256

[time]
t_end = 0.4
dt = 0.01

[checks]
run = e3
";

    fn issues(text: &str) -> Vec<ConfigIssue> {
        match parse_config(text) {
            Err(Error::Config(v)) => v,
            other => panic!("expected config issues, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_parses() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.drift.kind, DriftKind::Zero);
        assert_eq!(c.grid, GridSpec::Radial { d: 3, r_max: 8.0, n: 256 });
        assert_eq!(c.checks, vec![CheckSpec::E3]);
        assert_eq!(c.approx.m_list, vec![8]);
        assert_eq!(c.seed, 0);
    }

    #[test]
    fn initial_data_must_vanish_on_the_boundary() {
        let text = MINIMAL.replace("r_max = 8", "r_max = 2");
        let v = issues(&text);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].line, 4);
        assert!(v[0].message.contains("outer boundary"));
    }

    #[test]
    fn negative_beta_scale_is_a_range_error_at_its_line() {
        let text = MINIMAL.replace("kind = zero", "kind = hardy\nbeta_scale = -1");
        let v = issues(&text);
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].line, 3);
        assert!(v[0].message.contains("beta_scale") && v[0].message.contains("range"));
    }

    #[test]
    fn duplicate_key_names_both_lines() {
        let text = MINIMAL.replace("n = 256", "n = 256\nn = 512");
        let v = issues(&text);
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].line, 9);
        assert!(v[0].message.contains("line 8") && v[0].message.contains("line 9"), "{}", v[0]);
    }

    #[test]
    fn all_issues_are_collected() {
        let text = MINIMAL
            .replace("r_max = 8", "r_max = eight")
            .replace("dt = 0.01", "dt = 0.01\ncolour = blue")
            .replace("run = e3", "run = e3, e9");
        let v = issues(&text);
        let lines: Vec<usize> = v.iter().map(|i| i.line).collect();
        assert_eq!(lines, vec![7, 13, 16], "{v:?}");
        assert!(v[0].message.contains("expects a number"));
        assert!(v[1].message.contains("unknown key `colour`"));
        assert!(v[2].message.contains("unknown check `e9`"));
    }

    #[test]
    fn keys_of_other_drift_kinds_are_unknown() {
        let text = MINIMAL.replace("kind = zero", "kind = zero\nkappa = 2");
        let v = issues(&text);
        assert!(v.len() == 1 && v[0].message.contains("unknown key `kappa`"), "{v:?}");
    }

    #[test]
    fn semantic_validation_reports_alignment_and_dimension() {
        let text = MINIMAL
            .replace("kind = zero", "kind = split\nc1 = 0.1\nc2 = 0.1\nn = 2\nm = 2")
            .replace("dt = 0.01", "dt = 0.03");
        let v = issues(&text);
        assert_eq!(v.len(), 2, "{v:?}");
        assert!(v.iter().any(|i| i.message.contains("n + m")));
        assert!(v.iter().any(|i| i.message.contains("not an integer")));
    }

    #[test]
    fn serialization_is_a_fixed_point() {
        let text = "\
[run]
name = sweep
seed = 42
export = both

[drift]
kind = annulus
c = 1
delta = 0.5
a_exp = 0.25
beta = 6.2439
beta_scale = 0.04

[grid]
kind = radial
n = 2048
r_max = 8

[approx]
m = 8, 16, 32, 64
truncate_only = true

[time]
t_end = 0.4
dt = 1e-3

[initial]
kind = indicator
radius = 1.5

[checks]
run = e3, lp, iteration, counterexample, e2

[check.lp]
p = 2, 3, inf

[check.iteration]
calibrate = 8, 16
reference = 16, 32
";
        let c = parse_config(text).unwrap();
        let s1 = serialize(&c);
        let c2 = parse_config(&s1).unwrap();
        assert_eq!(c, c2);
        assert_eq!(serialize(&c2), s1);
        assert!(s1.contains("p = 2.0, 3.0, inf"));
    }

    #[test]
    fn beta_scale_rescales_to_the_target() {
        let text = MINIMAL.replace("kind = zero", "kind = hardy\nbeta_scale = 0.04");
        let c = parse_config(&text).unwrap();
        assert!((c.beta(3).unwrap().unwrap() - 0.04).abs() < 1e-15);
        let f = c.build_field(3).unwrap();
        assert!((f.known_form_bound().beta.unwrap() - 0.04).abs() < 1e-15);
    }

    #[test]
    fn smooth_step_is_a_partition() {
        assert_eq!(smooth_step(-1.0), 0.0);
        assert_eq!(smooth_step(2.0), 1.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
        assert!((smooth_step(0.3) + smooth_step(0.7) - 1.0).abs() < 1e-15);
    }
}
