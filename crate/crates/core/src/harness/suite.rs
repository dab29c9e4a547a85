//! Runs the checks of an [`ExperimentConfig`] and writes the ledger.
//!
//! Work is split into independent jobs (one per `m`, or per `(m, s)` lattice
//! start) that run on the rayon pool. Rows are gathered in configuration
//! order, so the ledger bytes do not depend on scheduling.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rand::RngCore;
use rayon::prelude::*;

use crate::approx::{c1_error, c2_margin, mollify, truncated_samples, Region, Regularized};
use crate::drift::{DriftField, DriftKind};
use crate::error::{Error, Result};
use crate::export::{write_binary, write_csv};
use crate::formbound::estimate_beta;
use crate::grid::{Grid, GridSpec};
use crate::harness::config::{CauchyNorms, CheckSpec, ExperimentConfig};
use crate::harness::ledger::{Ledger, LedgerRow};
use crate::profile::TimeProfile;
use crate::rng::stream;
use crate::solver::{evolve, lp_norm, DriftSource, ScalarState, Trajectory, VectorSamples};
use crate::verifier::{
    apriori_ratios_on, cauchy_matrix, check_e1, check_e1_freezing, check_e2, check_e3, counterexample_check,
    decay_exponent, iteration_terms, lp_bound, spread, weak_residual, CauchyNorm, CheckReport, Run, TestFunction,
};

/// Truncation level standing in for "no truncation" when a singular field is
/// sampled on a grid that already avoids its singular set.
const UNTRUNCATED: u32 = 1 << 24;

#[derive(Debug)]
pub struct SuiteOutcome {
    pub ledger: Ledger,
    pub ledger_path: PathBuf,
    pub exports: Vec<PathBuf>,
}

impl SuiteOutcome {
    pub fn success(&self) -> bool {
        self.ledger.all_pass()
    }
}

/// Evaluate every configured check and write `<name>_ledger.csv` (plus
/// trajectory exports when enabled) into `out_dir`.
pub fn run_suite(cfg: &ExperimentConfig, out_dir: &Path) -> Result<SuiteOutcome> {
    fs::create_dir_all(out_dir)?;
    let suite = Suite::new(cfg);
    let ledger = suite.ledger();
    let ledger_path = out_dir.join(format!("{}_ledger.csv", cfg.name));
    ledger.write(BufWriter::new(File::create(&ledger_path)?))?;
    let mut exports = Vec::new();
    if cfg.export.csv() || cfg.export.binary() {
        if let Ok(ctx) = &suite.ctx {
            for (m, traj) in cfg.approx.m_list.iter().zip(suite.base()) {
                let Ok(traj) = traj else { continue };
                let stem = out_dir.join(format!("{}_m{m}", cfg.name));
                if cfg.export.csv() {
                    let p = stem.with_extension("csv");
                    write_csv(traj, BufWriter::new(File::create(&p)?))?;
                    exports.push(p);
                }
                if cfg.export.binary() {
                    let p = stem.with_extension("traj");
                    write_binary(traj, &ctx.grid, BufWriter::new(File::create(&p)?))?;
                    exports.push(p);
                }
            }
        }
    }
    Ok(SuiteOutcome {
        ledger,
        ledger_path,
        exports,
    })
}

/// Rows only, no files.
pub fn evaluate(cfg: &ExperimentConfig) -> Ledger {
    Suite::new(cfg).ledger()
}

struct Context {
    grid: Grid,
    field: DriftField,
    beta: Option<f64>,
    g: TimeProfile,
    sources: Vec<Regularized>,
    f: ScalarState,
}

struct Suite<'a> {
    cfg: &'a ExperimentConfig,
    ctx: Result<Context>,
    base: std::sync::OnceLock<Vec<Result<Trajectory>>>,
    lattice: std::sync::OnceLock<Vec<Vec<Result<LatticeRun>>>>,
}

/// What the lattice checks need from one run `s_i → T`.
struct LatticeRun {
    /// `(τ_j, apriori ratio)` for `j > i`, when the apriori check is enabled.
    apriori: Option<Result<Vec<f64>>>,
    /// Per requested `p`: `‖u(τ_j)‖_p / ‖f‖_p` for `j > i`.
    lp: Vec<Result<Vec<f64>>>,
    /// Solution at the lattice times `s_i, …, T`.
    coarse: Trajectory,
}

fn context(cfg: &ExperimentConfig) -> Result<Context> {
    let grid = cfg.build_grid()?;
    let dim = grid.dim();
    let field = cfg.build_field(dim)?;
    let beta = cfg.beta(dim)?;
    let g = field.known_form_bound().g;
    let sources = cfg
        .approx
        .m_list
        .iter()
        .map(|&m| Regularized {
            field: field.clone(),
            m,
            width: cfg.approx.width,
            truncate_only: cfg.approx.truncate_only,
        })
        .collect();
    let f = cfg.initial.state(&grid, cfg.time.s);
    Ok(Context {
        grid,
        field,
        beta,
        g,
        sources,
        f,
    })
}

fn rows(name: &str, r: Result<Vec<LedgerRow>>) -> Vec<LedgerRow> {
    r.unwrap_or_else(|e| vec![LedgerRow::skipped(name, &e)])
}

fn report(name: &str, r: Result<CheckReport>) -> LedgerRow {
    r.map_or_else(|e| LedgerRow::skipped(name, &e), LedgerRow::from)
}

fn need_beta(beta: Option<f64>) -> Result<f64> {
    beta.ok_or_else(|| Error::Refused("form-bound of the drift unknown; set `beta` in [drift]".into()))
}

fn seed_for(seed: u64, label: &str) -> u64 {
    stream(seed, label).next_u64()
}

impl<'a> Suite<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Self {
        Suite {
            cfg,
            ctx: context(cfg),
            base: std::sync::OnceLock::new(),
            lattice: std::sync::OnceLock::new(),
        }
    }

    fn ctx(&self) -> &Context {
        self.ctx.as_ref().expect("checked by caller")
    }

    fn run(&self, k: usize) -> Run<'_> {
        let ctx = self.ctx();
        Run::new(&ctx.grid, &ctx.sources[k], self.cfg.time.dt)
    }

    fn desc(&self, k: usize) -> String {
        self.run(k).describe()
    }

    /// One trajectory `s → T` per `m`.
    fn base(&self) -> &[Result<Trajectory>] {
        self.base.get_or_init(|| {
            let t = self.cfg.time;
            (0..self.cfg.approx.m_list.len())
                .into_par_iter()
                .map(|k| self.run(k).evolve(t.s, t.t_end, &self.ctx().f))
                .collect()
        })
    }

    fn lattice_times(&self) -> Vec<f64> {
        let t = self.cfg.time;
        (0..=t.lattice).map(|i| i as f64 * t.t_end / t.lattice as f64).collect()
    }

    fn lattice(&self) -> &[Vec<Result<LatticeRun>>] {
        self.lattice.get_or_init(|| {
            let k = self.cfg.time.lattice;
            let jobs: Vec<(usize, usize)> =
                (0..self.cfg.approx.m_list.len()).flat_map(|m| (0..k).map(move |i| (m, i))).collect();
            let done: Vec<Result<LatticeRun>> = jobs.par_iter().map(|&(m, i)| self.lattice_run(m, i)).collect();
            let mut out: Vec<Vec<Result<LatticeRun>>> = Vec::new();
            let mut it = done.into_iter();
            for _ in 0..self.cfg.approx.m_list.len() {
                out.push(it.by_ref().take(k).collect());
            }
            out
        })
    }

    fn lattice_run(&self, m: usize, i: usize) -> Result<LatticeRun> {
        let ctx = self.ctx();
        let times = self.lattice_times();
        let (s, t_end) = (times[i], *times.last().expect("lattice has times"));
        let f = ScalarState::new(s, ctx.f.values.clone());
        let traj = self.run(m).evolve(s, t_end, &f)?;
        let taus = &times[i + 1..];
        let mut apriori = None;
        let mut lp = Vec::new();
        for c in &self.cfg.checks {
            match c {
                CheckSpec::Apriori { q, alpha } => {
                    apriori = Some(
                        need_beta(ctx.beta)
                            .and_then(|beta| apriori_ratios_on(&traj, &ctx.grid, &f, *q, *alpha, beta, s, taus)),
                    );
                }
                CheckSpec::Lp { p } => {
                    for &p in p {
                        lp.push(self.lp_ratios(&traj, &f, p, s, taus));
                    }
                }
                _ => {}
            }
        }
        let coarse = Trajectory {
            s,
            step: t_end / self.cfg.time.lattice as f64,
            states: times[i..]
                .iter()
                .map(|&t| traj.at(t).cloned().ok_or_else(|| Error::invalid("lattice", format!("no state at t={t}"))))
                .collect::<Result<_>>()?,
        };
        Ok(LatticeRun { apriori, lp, coarse })
    }

    fn lp_ratios(&self, traj: &Trajectory, f: &ScalarState, p: f64, s: f64, taus: &[f64]) -> Result<Vec<f64>> {
        let ctx = self.ctx();
        let beta = need_beta(ctx.beta)?;
        let den = lp_norm(&f.values, &ctx.grid, p)?;
        taus.iter()
            .map(|&tau| {
                let c = lp_bound(beta, p, &ctx.g, s, tau)?;
                let st = traj.at(tau).ok_or_else(|| Error::invalid("tau", format!("no state at {tau}")))?;
                let num = lp_norm(&st.values, &ctx.grid, p)?;
                Ok(if den == 0.0 { 0.0 } else { num / den / c })
            })
            .collect()
    }

    fn ledger(&self) -> Ledger {
        let mut ledger = Ledger::default();
        for check in &self.cfg.checks {
            if let Err(e) = &self.ctx {
                ledger.push(LedgerRow::skipped(check.name(), e));
                continue;
            }
            ledger.extend(self.check(check));
        }
        ledger
    }

    fn per_m<F>(&self, name: &str, f: F) -> Vec<LedgerRow>
    where
        F: Fn(usize) -> Result<Vec<LedgerRow>> + Sync,
    {
        (0..self.cfg.approx.m_list.len())
            .into_par_iter()
            .map(|k| rows(name, f(k)))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    }

    fn check(&self, check: &CheckSpec) -> Vec<LedgerRow> {
        let cfg = self.cfg;
        let ctx = self.ctx();
        let t = cfg.time;
        let m_list = &cfg.approx.m_list;
        match check {
            CheckSpec::E3 => self
                .base()
                .iter()
                .enumerate()
                .flat_map(|(k, tr)| match tr {
                    Ok(tr) => check_e3(tr, &self.desc(k)).into_iter().map(LedgerRow::from).collect(),
                    Err(e) => vec![LedgerRow::skipped("e3", e)],
                })
                .collect(),
            CheckSpec::E1 { mid } => self.per_m("e1", |k| {
                let run = self.run(k);
                let r = if run.source.is_time_dependent() {
                    check_e1_freezing(&run, &ctx.f, t.s, t.t_end)
                } else {
                    let steps = ((t.t_end - t.s) / t.dt * mid).round();
                    check_e1(&run, &ctx.f, t.s, t.s + steps * t.dt, t.t_end)
                };
                Ok(vec![report("e1", r)])
            }),
            CheckSpec::E2 { deltas } => self.per_m("e2", |k| {
                let deltas = if deltas.is_empty() { vec![8.0 * t.dt, 4.0 * t.dt, 2.0 * t.dt] } else { deltas.clone() };
                Ok(vec![report("e2", check_e2(&self.run(k), &ctx.f, t.s, &deltas))])
            }),
            CheckSpec::WeakResidual { t_lo, t_hi, center, radius } => self
                .base()
                .iter()
                .enumerate()
                .map(|(k, tr)| {
                    let tr = match tr {
                        Ok(tr) => tr,
                        Err(e) => return LedgerRow::skipped("weak_residual", e),
                    };
                    let mut c = vec![0.0; ctx.grid.dim()];
                    c[0] = *center;
                    let psi = TestFunction {
                        t_lo: *t_lo,
                        t_hi: *t_hi,
                        center: c,
                        radius: *radius,
                    };
                    report(
                        "weak_residual",
                        weak_residual(tr, &ctx.grid, &psi, &ctx.sources[k])
                            .map(|v| CheckReport::logged("weak_residual", v, self.desc(k))),
                    )
                })
                .collect(),
            CheckSpec::Formbound { tol, max_iter } => self.per_m("formbound", |k| {
                let m = m_list[k];
                let samples = self.samples_at(k, t.s)?;
                let seed = seed_for(cfg.seed, &format!("formbound/m={m}"));
                let r = estimate_beta(&samples, &ctx.grid, *tol, *max_iter, seed)?;
                let known = ctx.beta.map_or_else(|| "unknown".to_string(), |b| format!("{b:e}"));
                Ok(vec![LedgerRow::from(CheckReport::logged(
                    "formbound_beta_hat",
                    r.beta_hat,
                    format!(
                        "{}; m={m}; iterations={}; residual={:e}; beta_known={known}",
                        self.desc(k),
                        r.iterations,
                        r.residual
                    ),
                ))])
            }),
            CheckSpec::C1 { r_in, r_out } => self.per_m("c1", |k| {
                let m = m_list[k];
                let times = if ctx.field.is_time_dependent() {
                    vec![t.s, 0.5 * (t.s + t.t_end), t.t_end]
                } else {
                    vec![t.s]
                };
                let region = Region::Shell {
                    r_in: *r_in,
                    r_out: *r_out,
                };
                let e = c1_error(&ctx.field, m, cfg.approx.width, &ctx.grid, region, &times)?;
                Ok(vec![LedgerRow::from(CheckReport::logged(
                    "c1_error",
                    e,
                    format!("{}; m={m}; r_in={r_in}; r_out={r_out}", self.desc(k)),
                ))])
            }),
            CheckSpec::C2 { tol } => self.per_m("c2", |k| {
                let m = m_list[k];
                let beta = need_beta(ctx.beta)?;
                let moll = mollify(&ctx.field, m, &ctx.grid, t.s, cfg.approx.width)?;
                let seed = seed_for(cfg.seed, &format!("c2/m={m}"));
                let (margin, r) = c2_margin(&moll, &ctx.grid, beta, 1e-8, 20_000, seed)?;
                Ok(vec![LedgerRow::from(CheckReport::bounded(
                    "c2_margin",
                    margin,
                    *tol,
                    0.0,
                    format!("{}; m={m}; beta_hat={:e}; beta={beta:e}", self.desc(k), r.beta_hat),
                ))])
            }),
            CheckSpec::Hardy { eps, r_max, n, lower, upper } => rows("hardy", self.hardy(eps, *r_max, *n, *lower, *upper)),
            CheckSpec::Apriori { q, alpha } => rows("apriori", self.apriori(*q, *alpha)),
            CheckSpec::Lp { p } => self.lp(p),
            CheckSpec::Cauchy { norm } => rows("cauchy", self.cauchy(*norm)),
            CheckSpec::Iteration {
                p,
                alpha,
                sigma_prime,
                calibrate,
                reference,
            } => rows("iteration", self.iteration(*p, *alpha, *sigma_prime, *calibrate, *reference)),
            CheckSpec::Counterexample {
                kappa,
                alpha_exp,
                t0,
                t1,
                t0_sweep,
            } => rows("counterexample", self.counterexample(*kappa, *alpha_exp, *t0, *t1, t0_sweep)),
        }
    }

    fn samples_at(&self, k: usize, time: f64) -> Result<VectorSamples> {
        self.ctx().sources[k].samples(&self.ctx().grid, time)
    }

    fn hardy(&self, eps: &[f64], r_max: f64, n: usize, lower: f64, upper: f64) -> Result<Vec<LedgerRow>> {
        let d = match self.cfg.grid {
            GridSpec::Radial { d, .. } | GridSpec::RadialLog { d, .. } => d,
            GridSpec::Tensor3 { .. } => 3,
        };
        let field = DriftField::hardy(1.0, d)?;
        let seed = seed_for(self.cfg.seed, "hardy");
        let estimates: Vec<Result<(f64, String)>> = eps
            .par_iter()
            .map(|&e| {
                let grid = Grid::build(GridSpec::RadialLog {
                    d,
                    r_min: e,
                    r_max,
                    n,
                })?;
                let b = truncated_samples(&field, UNTRUNCATED, &grid, 0.0)?;
                let r = estimate_beta(&b, &grid, 1e-8, 200_000, seed)?;
                Ok((
                    r.beta_hat,
                    format!("{}; eps={e}; iterations={}; residual={:e}", grid.describe(), r.iterations, r.residual),
                ))
            })
            .collect();
        let mut out = Vec::new();
        let mut values = Vec::new();
        for r in estimates {
            let (b, desc) = r?;
            values.push(b);
            out.push(LedgerRow::from(CheckReport::logged("hardy_beta_hat", b, desc)));
        }
        let target = crate::drift::hardy_constant(d);
        let desc = format!("d={d}; r_max={r_max}; n={n}; eps0={}; target={target}", eps[0]);
        out.push(CheckReport::bounded("hardy_lower_gap", lower - values[0], 0.0, 0.0, format!("{desc}; lower={lower}")).into());
        let top = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        out.push(CheckReport::bounded("hardy_upper_excess", top - upper, 0.0, 0.0, format!("{desc}; upper={upper}")).into());
        // eps is listed from coarse to fine; the estimate must not drop as eps shrinks
        let mut order: Vec<usize> = (0..eps.len()).collect();
        order.sort_by(|&a, &b| eps[b].total_cmp(&eps[a]));
        let drop = order.windows(2).map(|w| values[w[0]] - values[w[1]]).fold(f64::NEG_INFINITY, f64::max);
        if eps.len() > 1 {
            out.push(CheckReport::bounded("hardy_monotone_drop", drop, 0.0, 0.0, desc).into());
        }
        Ok(out)
    }

    fn apriori(&self, q: f64, alpha: f64) -> Result<Vec<LedgerRow>> {
        let mut all = Vec::new();
        let mut out = Vec::new();
        for (k, runs) in self.lattice().iter().enumerate() {
            let mut mine = Vec::new();
            for run in runs {
                let run = run.as_ref().map_err(clone_err)?;
                let ratios = run.apriori.as_ref().expect("apriori requested").as_ref().map_err(clone_err)?;
                mine.extend_from_slice(ratios);
            }
            let max = mine.iter().cloned().fold(0.0, f64::max);
            out.push(LedgerRow::from(CheckReport::logged(
                "apriori_max_ratio_by_m",
                max,
                format!("{}; q={q}; alpha={alpha}; m={}", self.desc(k), self.cfg.approx.m_list[k]),
            )));
            all.extend(mine);
        }
        let max = all.iter().cloned().fold(0.0, f64::max);
        let sp = spread(&all);
        let desc = format!(
            "{}; {}; q={q}; alpha={alpha}; lattice={}; m={}; pairs={}",
            self.ctx().field,
            self.ctx().grid.describe(),
            self.cfg.time.lattice,
            join(&self.cfg.approx.m_list),
            all.len()
        );
        if alpha == 1.0 {
            out.push(CheckReport::bounded("apriori_max_ratio", max, 1.0, 2e-2, desc.clone()).into());
            out.push(CheckReport::logged("apriori_spread", sp, desc).into());
        } else {
            out.push(CheckReport::logged("apriori_max_ratio", max, desc.clone()).into());
            out.push(CheckReport::bounded("apriori_spread", sp, 1.5, 0.0, desc).into());
        }
        Ok(out)
    }

    fn lp(&self, ps: &[f64]) -> Vec<LedgerRow> {
        let mut out = Vec::new();
        for (pi, &p) in ps.iter().enumerate() {
            for (k, runs) in self.lattice().iter().enumerate() {
                let mut worst = 0.0_f64;
                let mut failure = None;
                for run in runs {
                    match run.as_ref().map_err(clone_err).and_then(|r| r.lp[pi].as_ref().map_err(clone_err)) {
                        Ok(v) => worst = v.iter().cloned().fold(worst, f64::max),
                        Err(e) => {
                            failure = Some(e);
                            break;
                        }
                    }
                }
                let name = "lp_ratio";
                out.push(match failure {
                    Some(e) => {
                        let mut row = LedgerRow::skipped(name, &e);
                        row.descriptor = format!("{}; p={p}; m={}", row.descriptor, self.cfg.approx.m_list[k]);
                        row
                    }
                    None => CheckReport::bounded(
                        name,
                        worst,
                        1.0,
                        1e-3,
                        format!("{}; p={p}; m={}; lattice={}", self.desc(k), self.cfg.approx.m_list[k], self.cfg.time.lattice),
                    )
                    .into(),
                });
            }
        }
        out
    }

    fn cauchy(&self, which: CauchyNorms) -> Result<Vec<LedgerRow>> {
        let runs: Vec<Vec<Trajectory>> = self
            .lattice()
            .iter()
            .map(|rs| rs.iter().map(|r| r.as_ref().map(|r| r.coarse.clone()).map_err(clone_err)).collect())
            .collect::<Result<_>>()?;
        let norms: &[(CauchyNorm, &str)] = match which {
            CauchyNorms::SupL2 => &[(CauchyNorm::SupL2, "sup_l2")],
            CauchyNorms::SupC => &[(CauchyNorm::SupC, "sup_c")],
            CauchyNorms::Both => &[(CauchyNorm::SupL2, "sup_l2"), (CauchyNorm::SupC, "sup_c")],
        };
        let m_list = &self.cfg.approx.m_list;
        let base = format!(
            "{}; {}; dt={}; lattice={}",
            self.ctx().field,
            self.ctx().grid.describe(),
            self.cfg.time.dt,
            self.cfg.time.lattice
        );
        let mut out = Vec::new();
        for &(norm, label) in norms {
            let mat = cauchy_matrix(&self.ctx().grid, &runs, m_list, norm)?;
            for i in 0..m_list.len() {
                for j in 0..m_list.len() {
                    out.push(LedgerRow::from(CheckReport::logged(
                        "cauchy_entry",
                        mat.entries[i][j],
                        format!("{base}; norm={label}; m_i={}; m_j={}", m_list[i], m_list[j]),
                    )));
                }
            }
            out.push(mat.check(&format!("cauchy_{label}_diagonal_ratio"), &format!("{base}; m={}", join(m_list))).into());
        }
        Ok(out)
    }

    fn iteration(&self, p: f64, alpha: f64, sp: f64, cal: [u32; 2], reference: [u32; 2]) -> Result<Vec<LedgerRow>> {
        let ctx = self.ctx();
        let beta = need_beta(ctx.beta)?;
        let idx = |m: u32| self.cfg.approx.m_list.iter().position(|&x| x == m).expect("validated");
        let base = self.base();
        let traj = |m: u32| base[idx(m)].as_ref().map_err(clone_err);
        let s = self.cfg.time.s;
        let terms = |pair: [u32; 2]| {
            iteration_terms(&ctx.grid, traj(pair[0])?, traj(pair[1])?, pair[0], beta, p, alpha, sp, s)
        };
        let tc = terms(cal)?;
        let tr = terms(reference)?;
        let c0 = tc.calibrate();
        let rhs = tr.rhs(c0);
        let ratio = if tr.lhs == 0.0 { 0.0 } else { tr.lhs / rhs };
        let desc = format!(
            "{}; {}; dt={}; p={p}; alpha={alpha}; sigma_prime={sp}; k={}",
            ctx.field,
            ctx.grid.describe(),
            self.cfg.time.dt,
            tc.k
        );
        Ok(vec![
            CheckReport::logged("iteration_c0", c0, format!("{desc}; pair={}", join(&cal))).into(),
            CheckReport::bounded(
                "iteration_lhs_over_rhs",
                ratio,
                1.0,
                0.0,
                format!("{desc}; pair={}; lhs={:e}; rhs={rhs:e}", join(&reference), tr.lhs),
            )
            .into(),
            CheckReport::logged(
                "iteration_lhs_trend",
                if tc.lhs == 0.0 { 0.0 } else { tr.lhs / tc.lhs },
                format!("{desc}; from={}; to={}", join(&cal), join(&reference)),
            )
            .into(),
        ])
    }

    fn counterexample(&self, kappa: f64, alpha_exp: f64, t0: f64, t1: f64, sweep: &[f64]) -> Result<Vec<LedgerRow>> {
        let grid = &self.ctx().grid;
        let d = grid.dim();
        // The closed form solves ∂_t u - Δu + b·∇u = 0; the solver uses +b·∇u.
        let field = DriftField::build(DriftKind::LogCounterexample { kappa, alpha_exp }, d)?.scaled(-1.0)?;
        let source = Regularized {
            field,
            m: UNTRUNCATED,
            width: None,
            truncate_only: true,
        };
        let mut out: Vec<LedgerRow> = counterexample_check(kappa, alpha_exp, grid, &source, t0, t1, self.cfg.time.dt, sweep)?
            .into_iter()
            .map(LedgerRow::from)
            .collect();
        let (sups, _) = decay_exponent(kappa, alpha_exp, grid, sweep)?;
        for (t, s) in sweep.iter().zip(sups) {
            out.push(
                CheckReport::logged("counterexample_sup", s, format!("{}; kappa={kappa}; alpha_exp={alpha_exp}; t0={t}", grid.describe()))
                    .into(),
            );
        }
        Ok(out)
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(":")
}

/// Errors are not `Clone`; shared results are re-reported by message.
fn clone_err(e: &Error) -> Error {
    match e {
        Error::Refused(m) => Error::Refused(m.clone()),
        e => Error::Format(e.to_string()),
    }
}

/// Plain evolution of the configured initial data for one `m`, for callers
/// that want a trajectory without running checks.
pub fn solve(cfg: &ExperimentConfig, m: u32) -> Result<(Grid, Trajectory)> {
    let ctx = context(cfg)?;
    let source = Regularized {
        m,
        ..ctx.sources.first().cloned().ok_or_else(|| Error::invalid("m", "empty m list"))?
    };
    let t = cfg.time;
    let traj = evolve(&source, &ctx.grid, t.s, t.t_end, &ctx.f, t.dt, None)?;
    Ok((ctx.grid, traj))
}
