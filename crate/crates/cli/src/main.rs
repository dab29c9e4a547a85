use std::fs::{self, File};
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use feller_core::constants::{beta_threshold, lp_threshold, moser_params, proof_coefficients};
use feller_core::export::{read_binary, write_binary, write_csv, MAGIC};
use feller_core::harness::config::{CheckSpec, ExportFormat};
use feller_core::harness::{emit_plot_data, parse_config, run_suite, ExperimentConfig, Ledger, PlotInput, PlotKind};

#[derive(Parser)]
#[command(name = "feller", version, about = "Numerical checks for diffusions with singular drift")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Args)]
struct Global {
    /// Experiment configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads; defaults to the configured value, then to all cores.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Verb {
    /// Evolve the configured initial data and export the trajectories.
    Solve {
        /// Only this approximation index instead of every configured one.
        #[arg(long)]
        m: Option<u32>,
    },
    /// Form-bound and approximation checks (formbound, c1, c2, hardy).
    Formbound,
    /// Every configured check.
    Verify,
    /// Thresholds and iteration constants for one (d, beta).
    Constants(ConstantsArgs),
    /// The explicit solution that escapes the maximum principle.
    Counterexample,
    /// Plot data from a ledger or a binary trajectory.
    Plotdata {
        /// norm_vs_time, beta_vs_eps, cauchy_heatmap or decay_vs_t0.
        kind: String,
        /// Ledger CSV or `.traj` file.
        input: PathBuf,
        /// Write to stdout instead of the output directory.
        #[arg(long)]
        stdout: bool,
    },
}

#[derive(Args)]
struct ConstantsArgs {
    /// Dimension; taken from the config grid when a config is given.
    #[arg(long)]
    d: Option<u32>,
    /// Form-bound; taken from the config drift when a config is given.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    p0: f64,
    #[arg(long, default_value_t = 1.25)]
    sigma_prime: f64,
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    /// Length of the exponent sequence.
    #[arg(long, default_value_t = 60)]
    len: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load(global: &Global) -> Result<ExperimentConfig> {
    let path = global.config.as_ref().context("this verb needs --config PATH")?;
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut cfg = parse_config(&text).with_context(|| format!("in {}", path.display()))?;
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn init_threads(global: &Global, cfg: Option<&ExperimentConfig>) -> Result<()> {
    if let Some(n) = global.threads.or_else(|| cfg.and_then(|c| c.threads)) {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

/// Returns whether every executed check passed.
fn run(cli: Cli) -> Result<bool> {
    let g = &cli.global;
    match &cli.verb {
        Verb::Solve { m } => {
            let cfg = load(g)?;
            init_threads(g, Some(&cfg))?;
            solve(&cfg, *m, &g.out)
        }
        Verb::Formbound => {
            let cfg = load(g)?;
            init_threads(g, Some(&cfg))?;
            let keep = |c: &CheckSpec| matches!(c.name(), "formbound" | "c1" | "c2" | "hardy");
            let default = CheckSpec::Formbound { tol: 1e-8, max_iter: 20_000 };
            suite(subset(cfg, "formbound", keep, default), &g.out)
        }
        Verb::Verify => {
            let cfg = load(g)?;
            init_threads(g, Some(&cfg))?;
            suite(cfg, &g.out)
        }
        Verb::Counterexample => {
            let cfg = load(g)?;
            init_threads(g, Some(&cfg))?;
            let default = CheckSpec::Counterexample {
                kappa: 2.0,
                alpha_exp: 1.0,
                t0: 0.1,
                t1: 0.5,
                t0_sweep: vec![1e-2, 1e-3, 1e-4],
            };
            let keep = |c: &CheckSpec| matches!(c, CheckSpec::Counterexample { .. });
            suite(subset(cfg, "counterexample", keep, default), &g.out)
        }
        Verb::Constants(args) => {
            let cfg = g.config.as_ref().map(|_| load(g)).transpose()?;
            constants(args, cfg.as_ref(), &g.out)
        }
        Verb::Plotdata { kind, input, stdout } => plotdata(kind, input, *stdout, &g.out),
    }
}

/// Keep only the checks this verb owns, falling back to `default` when the
/// config lists none of them.
fn subset(mut cfg: ExperimentConfig, verb: &str, keep: impl Fn(&CheckSpec) -> bool, default: CheckSpec) -> ExperimentConfig {
    cfg.checks.retain(|c| keep(c));
    if cfg.checks.is_empty() {
        cfg.checks.push(default);
    }
    cfg.name = format!("{}_{verb}", cfg.name);
    cfg
}

fn suite(cfg: ExperimentConfig, out: &Path) -> Result<bool> {
    let outcome = run_suite(&cfg, out)?;
    let l = &outcome.ledger;
    for r in &l.rows {
        let value = r.measured.map_or_else(|| "-".to_string(), |v| format!("{v:.6e}"));
        let bound = r.bound.map_or_else(String::new, |b| format!(" (bound {b:.3e})"));
        println!("{:<8} {:<40} {value}{bound}", format!("{:?}", r.status).to_lowercase(), r.name);
    }
    println!("ledger: {}", outcome.ledger_path.display());
    for p in &outcome.exports {
        println!("export: {}", p.display());
    }
    let executed = l.rows.iter().filter(|r| r.status != feller_core::harness::Status::Refused).count();
    println!("{} of {executed} executed checks failed", l.failures());
    Ok(outcome.success())
}

fn solve(cfg: &ExperimentConfig, only: Option<u32>, out: &Path) -> Result<bool> {
    fs::create_dir_all(out)?;
    let ms: Vec<u32> = match only {
        Some(m) => vec![m],
        None => cfg.approx.m_list.clone(),
    };
    let format = match cfg.export {
        ExportFormat::None => ExportFormat::Binary,
        f => f,
    };
    for m in ms {
        let (grid, traj) = feller_core::harness::suite::solve(cfg, m)?;
        let stem = out.join(format!("{}_m{m}", cfg.name));
        if format.csv() {
            let p = stem.with_extension("csv");
            write_csv(&traj, BufWriter::new(File::create(&p)?))?;
            println!("export: {}", p.display());
        }
        if format.binary() {
            let p = stem.with_extension("traj");
            write_binary(&traj, &grid, BufWriter::new(File::create(&p)?))?;
            println!("export: {}", p.display());
        }
        let last = traj.states.last().context("empty trajectory")?;
        println!("m={m} t={} sup={:.6e} steps={}", last.time, last.sup_norm(), traj.states.len() - 1);
    }
    Ok(true)
}

fn constants(args: &ConstantsArgs, cfg: Option<&ExperimentConfig>, out: &Path) -> Result<bool> {
    let (d, beta) = match cfg {
        Some(c) => {
            let d = c.build_grid()?.dim();
            (args.d.unwrap_or(d as u32), args.beta.or(c.beta(d)?))
        }
        None => (args.d.unwrap_or(3), args.beta),
    };
    let beta = beta.context("no form-bound known; pass --beta")?;
    let mut rows: Vec<(String, String)> = vec![
        ("d".into(), d.to_string()),
        ("beta".into(), format!("{beta:e}")),
        ("beta_threshold".into(), format!("{:e}", beta_threshold(d)?)),
        ("lp_threshold".into(), format!("{:e}", lp_threshold(beta)?)),
    ];
    let pc = proof_coefficients(args.q, beta, f64::INFINITY)?;
    rows.extend([
        ("q".into(), format!("{:e}", args.q)),
        ("eta_star".into(), format!("{:e}", pc.eta_star)),
        ("kappa_star".into(), format!("{:e}", pc.kappa_star)),
        ("gamma_star".into(), format!("{:e}", pc.gamma_star)),
        ("apriori_admissible".into(), pc.admissible.to_string()),
    ]);
    let mut ok = true;
    match moser_params(beta, args.p0, args.sigma_prime, d, args.len) {
        Ok(mp) => {
            ok = mp.sandwich_holds() && mp.recurrence_gap <= 1e-12;
            rows.extend([
                ("p0".into(), format!("{:e}", mp.p0)),
                ("sigma_prime".into(), format!("{:e}", mp.sigma_prime)),
                ("k".into(), format!("{:e}", mp.k)),
                ("a".into(), format!("{:e}", mp.a)),
                ("p1".into(), format!("{:e}", mp.p_seq[0])),
                ("alpha_sup_bound".into(), format!("{:e}", mp.alpha_sup_bound)),
                ("gamma_inf_bound".into(), format!("{:e}", mp.gamma_inf_bound)),
                ("gamma_root_bound".into(), format!("{:e}", mp.gamma_root_bound)),
                ("recurrence_gap".into(), format!("{:e}", mp.recurrence_gap)),
                ("sandwich_holds".into(), mp.sandwich_holds().to_string()),
            ]);
        }
        Err(e) => rows.push(("moser".into(), format!("unavailable: {e}"))),
    }
    fs::create_dir_all(out)?;
    let path = out.join("constants.csv");
    let mut w = BufWriter::new(File::create(&path)?);
    writeln!(w, "name,value")?;
    for (k, v) in &rows {
        writeln!(w, "{k},{v}")?;
        println!("{k:<20} {v}");
    }
    w.flush()?;
    println!("written: {}", path.display());
    Ok(ok)
}

fn plotdata(kind: &str, input: &Path, to_stdout: bool, out: &Path) -> Result<bool> {
    let kind: PlotKind = kind.parse()?;
    let mut bytes = Vec::new();
    File::open(input)
        .with_context(|| format!("opening {}", input.display()))?
        .read_to_end(&mut bytes)?;
    let mut buf = Vec::new();
    if bytes.starts_with(MAGIC) {
        let (_, traj) = read_binary(&bytes[..])?;
        emit_plot_data(kind, PlotInput::Trajectory(&traj), &mut buf)?;
    } else {
        let ledger = Ledger::read(&bytes[..]).with_context(|| format!("reading ledger {}", input.display()))?;
        emit_plot_data(kind, PlotInput::Ledger(&ledger), &mut buf)?;
    }
    if to_stdout {
        io::stdout().write_all(&buf)?;
    } else {
        fs::create_dir_all(out)?;
        let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("input");
        let path = out.join(format!("{stem}_{}.dat", kind.name()));
        if path == input {
            bail!("refusing to overwrite the input {}", input.display());
        }
        fs::write(&path, &buf)?;
        println!("written: {}", path.display());
    }
    Ok(true)
}
