//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Each criterion loads its configurations from `configs/`, evaluates them and
//! re-checks the ledger numbers against the tolerances pinned below, rather
//! than trusting the ledger's own pass column. Positional arguments filter
//! criteria by substring, like libtest.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use feller_core::constants::{beta_threshold, lp_threshold, moser_params};
use feller_core::harness::{evaluate, parse_config, run_suite, ExperimentConfig, Ledger, LedgerRow, Status};

const HARDY_LOWER: f64 = 3.6;
const HARDY_UPPER: f64 = 4.0;
const HARDY_BUDGET: Duration = Duration::from_secs(60);

const UNIT_BALL_TOL: f64 = 1e-3;
const UNIT_BALL_BUDGET: Duration = Duration::from_secs(30);

const THRESHOLD_TOL: f64 = 1e-15;
const MOSER_TOL: f64 = 1e-12;
const GAMMA_ROOT_EXPECTED: f64 = 4.059;
const GAMMA_ROOT_TOL: f64 = 5e-4;
const CONSTANTS_BUDGET: Duration = Duration::from_secs(1);

const POSITIVITY_FLOOR: f64 = 1e-13;
const CONTRACTION_SLACK: f64 = 1e-12;
const COMPOSITION_TOL: f64 = 1e-12;
/// Halving ratios must lie in `[2 - 0.3, 2 + 0.3]`.
const HALVING_TOL: f64 = 0.3;
const FELLER_BUDGET: Duration = Duration::from_secs(600);

const APRIORI_SLACK: f64 = 2e-2;
const MIXED_SPREAD: f64 = 1.5;
const APRIORI_BUDGET: Duration = Duration::from_secs(600);

const LP_SLACK: f64 = 1e-3;
const LP_BUDGET: Duration = Duration::from_secs(300);

const CAUCHY_SLACK: f64 = 0.05;
const CAUCHY_BUDGET: Duration = Duration::from_secs(600);

const PROPAGATION_TOL: f64 = 0.02;
const DECAY_TOL: f64 = 1e-3;
const COUNTEREXAMPLE_BUDGET: Duration = Duration::from_secs(120);

const M_SWEEP: [u32; 4] = [8, 16, 32, 64];

fn config(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.cfg"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_config(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

struct Verdict {
    pass: bool,
    detail: String,
}

/// Accumulates individual comparisons; the first few failures are kept for the report.
#[derive(Default)]
struct Tally {
    checked: usize,
    failed: Vec<String>,
}

impl Tally {
    fn expect(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failed.push(what());
        }
    }

    fn budget(&mut self, start: Instant, budget: Duration) -> Duration {
        let took = start.elapsed();
        self.expect(took <= budget, || format!("took {took:.1?}, budget {budget:?}"));
        took
    }

    fn verdict(self, summary: String) -> Verdict {
        let pass = self.failed.is_empty();
        let detail = if pass {
            format!("{summary} ({} comparisons)", self.checked)
        } else {
            let shown: Vec<&str> = self.failed.iter().take(4).map(String::as_str).collect();
            format!("{summary}; {} of {} failed: {}", self.failed.len(), self.checked, shown.join(" | "))
        };
        Verdict { pass, detail }
    }
}

fn measured(r: &LedgerRow) -> f64 {
    r.measured.unwrap_or_else(|| panic!("`{}` skipped: {}", r.name, r.descriptor))
}

fn values<'a>(l: &'a Ledger, name: &'a str) -> Vec<(f64, &'a LedgerRow)> {
    l.named(name).map(|r| (measured(r), r)).collect()
}

fn no_skips(t: &mut Tally, label: &str, l: &Ledger) {
    for r in &l.rows {
        t.expect(!matches!(r.status, Status::Refused | Status::Errored), || {
            format!("{label}: `{}` skipped ({})", r.name, r.descriptor)
        });
    }
}

fn hardy() -> Verdict {
    let mut t = Tally::default();
    let start = Instant::now();
    let l = evaluate(&config("hardy"));
    let took = t.budget(start, HARDY_BUDGET);
    let mut by_eps: Vec<(f64, f64)> = values(&l, "hardy_beta_hat")
        .into_iter()
        .map(|(b, r)| (r.field("eps").and_then(|e| e.parse().ok()).expect("eps"), b))
        .collect();
    by_eps.sort_by(|a, b| b.0.total_cmp(&a.0));
    t.expect(by_eps.len() == 4, || format!("expected 4 eps levels, got {}", by_eps.len()));
    let (eps0, b0) = by_eps[0];
    t.expect(eps0 == 1e-3, || format!("coarsest eps is {eps0}"));
    t.expect((HARDY_LOWER..=HARDY_UPPER).contains(&b0), || {
        format!("beta_hat(eps=1e-3) = {b0:.4} outside [{HARDY_LOWER}, {HARDY_UPPER}]")
    });
    for w in by_eps.windows(2) {
        t.expect(w[1].1 > w[0].1 && w[1].1 <= HARDY_UPPER, || {
            format!("beta_hat not increasing toward 4: {:.4} -> {:.4}", w[0].1, w[1].1)
        });
    }
    let shown: Vec<String> = by_eps.iter().map(|(e, b)| format!("{e:e}:{b:.4}")).collect();
    t.verdict(format!("hardy beta_hat by eps {} in {took:.1?}", shown.join(", ")))
}

fn unit_ball() -> Verdict {
    let mut t = Tally::default();
    let start = Instant::now();
    let l = evaluate(&config("unit_ball"));
    let took = t.budget(start, UNIT_BALL_BUDGET);
    let rows = values(&l, "formbound_beta_hat");
    t.expect(rows.len() == 1, || format!("expected one estimate, got {}", rows.len()));
    let target = 1.0 / std::f64::consts::PI.powi(2);
    let b = rows[0].0;
    t.expect((b - target).abs() <= UNIT_BALL_TOL, || format!("beta_hat {b} vs 1/pi^2 = {target}"));
    t.verdict(format!("|b|=1 on the unit ball: beta_hat {b:.9} vs {target:.9} in {took:.1?}"))
}

fn constants() -> Verdict {
    let mut t = Tally::default();
    let start = Instant::now();
    let bt = beta_threshold(3).expect("d = 3");
    t.expect((bt - 16.0 / 81.0).abs() <= THRESHOLD_TOL, || format!("beta_threshold(3) = {bt}"));
    let lt = lp_threshold(1.0).expect("beta = 1");
    t.expect(lt == 2.0, || format!("lp_threshold(1) = {lt}"));
    let mp = moser_params(0.04, 2.0, 1.25, 3, 60).expect("admissible parameters");
    t.expect((mp.p_seq[0] - 3.6).abs() <= MOSER_TOL, || format!("p1 = {}", mp.p_seq[0]));
    t.expect((mp.k - 2.5f64.log2()).abs() <= MOSER_TOL, || format!("k = {}", mp.k));
    t.expect((mp.gamma_inf_bound - 1.0 / 6.0).abs() <= MOSER_TOL, || format!("gamma limit {}", mp.gamma_inf_bound));
    t.expect((mp.gamma_root_bound - GAMMA_ROOT_EXPECTED).abs() <= GAMMA_ROOT_TOL, || {
        format!("Gamma bound {}", mp.gamma_root_bound)
    });
    t.expect(mp.recurrence_gap <= MOSER_TOL, || format!("closed form vs recurrence {:e}", mp.recurrence_gap));
    t.expect(mp.p_seq.len() == 60, || format!("{} terms", mp.p_seq.len()));
    let took = t.budget(start, CONSTANTS_BUDGET);
    t.verdict(format!(
        "16/81, 2, p1={}, k={:.12}, gamma={:.12}, Gamma={:.4}, gap={:e} in {took:.1?}",
        mp.p_seq[0], mp.k, mp.gamma_inf_bound, mp.gamma_root_bound, mp.recurrence_gap
    ))
}

fn m_of(r: &LedgerRow) -> u32 {
    r.descriptor
        .split(';')
        .next()
        .and_then(|head| head.rsplit_once(" m="))
        .and_then(|(_, m)| m.trim().parse().ok())
        .unwrap_or_else(|| panic!("no m in `{}`", r.descriptor))
}

fn feller() -> Verdict {
    let mut t = Tally::default();
    let start = Instant::now();
    let mut worst = BTreeMap::<&str, f64>::new();
    for drift in ["zero", "hardy", "annulus", "split"] {
        for grid in ["radial", "tensor"] {
            let name = format!("feller_{drift}_{grid}");
            let cfg = config(&name);
            t.expect(cfg.approx.m_list == M_SWEEP, || format!("{name}: m list {:?}", cfg.approx.m_list));
            let l = evaluate(&cfg);
            no_skips(&mut t, &name, &l);
            let limits: [(&str, f64); 4] = [
                ("e3_positivity", POSITIVITY_FLOOR),
                ("e3_contraction", 1.0 + CONTRACTION_SLACK),
                ("e1_composition", COMPOSITION_TOL),
                ("e2_halving_deviation", HALVING_TOL),
            ];
            for (check, limit) in limits {
                let rows = values(&l, check);
                let mut ms: Vec<u32> = rows.iter().map(|(_, r)| m_of(r)).collect();
                ms.sort_unstable();
                t.expect(ms == M_SWEEP, || format!("{name}: {check} covers m={ms:?}"));
                for (v, r) in rows {
                    let w = worst.entry(check).or_insert(f64::NEG_INFINITY);
                    *w = w.max(v);
                    t.expect(v <= limit, || format!("{name}: {check}={v:e} > {limit:e} at m={}", m_of(r)));
                }
            }
        }
    }
    let took = t.budget(start, FELLER_BUDGET);
    let shown: Vec<String> = worst.iter().map(|(k, v)| format!("{k}<={v:.3e}")).collect();
    t.verdict(format!("4 drifts x 2 grids x 4 m: {} in {took:.1?}", shown.join(", ")))
}

fn lattice_pairs(r: &LedgerRow) -> usize {
    r.field("pairs").and_then(|p| p.parse().ok()).expect("pairs")
}

fn apriori() -> Verdict {
    let mut t = Tally::default();
    let start = Instant::now();
    let reference = config("reference");
    let l = evaluate(&reference);
    let lm = evaluate(&config("apriori_mixed"));
    let took = t.budget(start, APRIORI_BUDGET);
    no_skips(&mut t, "reference", &l);
    no_skips(&mut t, "apriori_mixed", &lm);
    t.expect(reference.time.lattice == 8 && reference.approx.m_list == M_SWEEP, || "reference lattice or m list changed".into());
    // an 8x8 lattice has 36 pairs s_i < tau_j per m
    let full = 36 * M_SWEEP.len();
    let (max, row) = values(&l, "apriori_max_ratio")[0];
    t.expect(row.field("q") == Some("2") && row.field("alpha") == Some("1"), || format!("apriori at {}", row.descriptor));
    t.expect(lattice_pairs(row) == full, || format!("{} pairs, want {full}", lattice_pairs(row)));
    t.expect(max <= 1.0 + APRIORI_SLACK, || format!("gradient ratio {max} > 1 + {APRIORI_SLACK}"));
    let (spread, row) = values(&lm, "apriori_spread")[0];
    t.expect(row.field("q") == Some("3") && row.field("alpha") == Some("0.4"), || format!("mixed at {}", row.descriptor));
    t.expect(lattice_pairs(row) == full, || format!("{} mixed pairs, want {full}", lattice_pairs(row)));
    t.expect(spread <= MIXED_SPREAD, || format!("mixed spread {spread} > {MIXED_SPREAD}"));
    t.verdict(format!("max gradient ratio {max:.6}, mixed-norm spread {spread:.4} in {took:.1?}"))
}

fn lp() -> Verdict {
    let mut t = Tally::default();
    let start = Instant::now();
    let threshold = lp_threshold(0.04).expect("beta");
    let mut worst = 0.0_f64;
    for name in ["reference", "lp_zero", "lp_annulus", "lp_split"] {
        let l = evaluate(&config(name));
        no_skips(&mut t, name, &l);
        let mut seen = Vec::new();
        for (v, r) in values(&l, "lp_ratio") {
            let p = r.field("p").expect("p").to_string();
            let p_val: f64 = if p == "inf" { f64::INFINITY } else { p.parse().expect("p") };
            t.expect(p_val > threshold, || format!("{name}: p={p} not above {threshold}"));
            worst = worst.max(v);
            t.expect(v <= 1.0 + LP_SLACK, || format!("{name}: ratio {v} at p={p}, m={}", r.field("m").unwrap_or("?")));
            seen.push((p, r.field("m").expect("m").to_string()));
        }
        t.expect(seen.len() == 3 * M_SWEEP.len(), || format!("{name}: {} lp rows", seen.len()));
        for p in ["2", "3", "inf"] {
            t.expect(seen.iter().filter(|(q, _)| q == p).count() == M_SWEEP.len(), || format!("{name}: p={p} missing"));
        }
    }
    let took = t.budget(start, LP_BUDGET);
    t.verdict(format!("p in {{2, 3, inf}} over hardy, zero, annulus, split: worst ratio {worst:.6} in {took:.1?}"))
}

fn cauchy() -> Verdict {
    let mut t = Tally::default();
    let start = Instant::now();
    let l = evaluate(&config("reference"));
    let took = t.budget(start, CAUCHY_BUDGET);
    no_skips(&mut t, "reference", &l);
    let mut worst = BTreeMap::<String, f64>::new();
    for norm in ["sup_l2", "sup_c"] {
        let mut e = BTreeMap::<(u32, u32), f64>::new();
        for (v, r) in values(&l, "cauchy_entry") {
            if r.field("norm") == Some(norm) {
                let key = |k: &str| r.field(k).and_then(|x| x.parse().ok()).expect("index");
                e.insert((key("m_i"), key("m_j")), v);
            }
        }
        t.expect(e.len() == M_SWEEP.len().pow(2), || format!("{norm}: {} entries", e.len()));
        // along each super-diagonal, entries must not grow by more than the slack
        for off in 1..M_SWEEP.len() {
            for i in 0..M_SWEEP.len() - off - 1 {
                let a = e[&(M_SWEEP[i], M_SWEEP[i + off])];
                let b = e[&(M_SWEEP[i + 1], M_SWEEP[i + 1 + off])];
                let w = worst.entry(norm.to_string()).or_insert(0.0);
                *w = w.max(b / a);
                t.expect(b <= (1.0 + CAUCHY_SLACK) * a, || format!("{norm}: diagonal grows {a:e} -> {b:e}"));
            }
        }
    }
    let (ratio, row) = values(&l, "iteration_lhs_over_rhs")[0];
    t.expect(row.field("pair") == Some("16:32"), || format!("reference pair {:?}", row.field("pair")));
    t.expect(ratio <= 1.0, || format!("iteration inequality lhs/rhs = {ratio}"));
    let c0 = values(&l, "iteration_c0")[0].0;
    t.verdict(format!(
        "worst diagonal ratio sup_l2 {:.4}, sup_c {:.4}; C0 {c0:.3e} from (8,16), lhs/rhs {ratio:.4} on (16,32) in {took:.1?}",
        worst["sup_l2"], worst["sup_c"]
    ))
}

fn counterexample() -> Verdict {
    let mut t = Tally::default();
    let start = Instant::now();
    let cfg = config("counterexample");
    let l = evaluate(&cfg);
    let took = t.budget(start, COUNTEREXAMPLE_BUDGET);
    no_skips(&mut t, "counterexample", &l);
    let grid_n = match cfg.grid {
        feller_core::GridSpec::Radial { n, .. } => n,
        _ => 0,
    };
    t.expect(grid_n == 4096, || format!("grid n = {grid_n}"));
    let (err, _) = values(&l, "counterexample_propagation")[0];
    t.expect(err <= PROPAGATION_TOL, || format!("propagation sup-relative error {err:.4} > {PROPAGATION_TOL}"));
    let (decay, row) = values(&l, "counterexample_decay_exponent_error")[0];
    t.expect(decay <= DECAY_TOL, || format!("decay exponent off by {decay:e}"));
    let sweep: Vec<f64> = values(&l, "counterexample_sup")
        .iter()
        .map(|(_, r)| r.field("t0").and_then(|x| x.parse().ok()).expect("t0"))
        .collect();
    t.expect(sweep == [1e-2, 1e-3, 1e-4], || format!("t0 sweep {sweep:?}"));
    t.verdict(format!(
        "propagation error {err:.4}, decay {} (error {decay:.1e}) in {took:.1?}",
        row.field("slope").unwrap_or("?")
    ))
}

fn determinism() -> Verdict {
    let mut t = Tally::default();
    let cfg = config("reference");
    let a = tempfile::tempdir().expect("tempdir");
    let b = tempfile::tempdir().expect("tempdir");
    let first = run_suite(&cfg, a.path()).expect("first run");
    // a different worker count must not change the bytes
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().expect("pool");
    let second = pool.install(|| run_suite(&cfg, b.path())).expect("second run");
    let x = std::fs::read(&first.ledger_path).expect("ledger");
    let y = std::fs::read(&second.ledger_path).expect("ledger");
    t.expect(!x.is_empty() && x == y, || "ledger bytes differ between runs".into());
    t.expect(first.ledger.all_pass(), || format!("{} reference rows fail", first.ledger.failures()));
    t.verdict(format!("reference ledger {} bytes, {} rows, identical across runs", x.len(), first.ledger.rows.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("1 hardy_constant", hardy),
        ("2 bounded_field_eigenvalue", unit_ball),
        ("3 threshold_arithmetic", constants),
        ("4 feller_properties", feller),
        ("5 apriori_estimate", apriori),
        ("6 lp_bound", lp),
        ("7 scheme_convergence", cauchy),
        ("8 counterexample", counterexample),
        ("9 determinism", determinism),
    ];
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let v = run();
        println!("{} criterion {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.pass);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
