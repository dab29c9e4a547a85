//! Plain-text plot data from ledgers and trajectories.
//!
//! Every file starts with `# plot <kind> v1`, a comment naming the quantity,
//! and a comma-separated column header. An empty ledger gives just those
//! lines.

use std::io::Write;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::harness::ledger::{Ledger, LedgerRow};
use crate::solver::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    NormVsTime,
    BetaVsEps,
    CauchyHeatmap,
    DecayVsT0,
}

impl PlotKind {
    pub const ALL: [PlotKind; 4] = [PlotKind::NormVsTime, PlotKind::BetaVsEps, PlotKind::CauchyHeatmap, PlotKind::DecayVsT0];

    pub fn name(self) -> &'static str {
        match self {
            PlotKind::NormVsTime => "norm_vs_time",
            PlotKind::BetaVsEps => "beta_vs_eps",
            PlotKind::CauchyHeatmap => "cauchy_heatmap",
            PlotKind::DecayVsT0 => "decay_vs_t0",
        }
    }

    fn caption(self) -> &'static str {
        match self {
            PlotKind::NormVsTime => "sup-norm of the solution along one run; non-increasing for a Feller evolution",
            PlotKind::BetaVsEps => "estimated form-bound of x/|x|^2 on [eps, r_max]; approaches the Hardy constant as eps shrinks",
            PlotKind::CauchyHeatmap => "sup over the (s, t) lattice of |u_m - u_n|; rows and columns indexed by m",
            PlotKind::DecayVsT0 => "sup-norm of the explicit counterexample solution at t0; decays like t0^(kappa - d/2)",
        }
    }
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PlotKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid("kind", format!("unknown plot kind `{s}`")))
    }
}

pub enum PlotInput<'a> {
    Ledger(&'a Ledger),
    Trajectory(&'a Trajectory),
}

fn header<W: Write>(out: &mut W, kind: PlotKind, extra: Option<&str>, columns: &str) -> Result<()> {
    writeln!(out, "# plot {} v1", kind.name())?;
    writeln!(out, "# {}", kind.caption())?;
    if let Some(e) = extra {
        writeln!(out, "# {e}")?;
    }
    writeln!(out, "{columns}")?;
    Ok(())
}

fn keyed<'a>(ledger: &'a Ledger, name: &'a str, key: &str) -> Result<Vec<(f64, &'a LedgerRow)>> {
    let rows: Vec<&LedgerRow> = ledger.named(name).collect();
    if rows.is_empty() && !ledger.rows.is_empty() {
        return Err(Error::Format(format!("ledger has no `{name}` rows")));
    }
    rows.into_iter()
        .map(|r| {
            let v = r
                .field(key)
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| Error::Format(format!("`{name}` row without `{key}=`")))?;
            Ok((v, r))
        })
        .collect()
}

fn measured(r: &LedgerRow) -> Result<f64> {
    r.measured
        .ok_or_else(|| Error::Format(format!("`{}` row was skipped: {}", r.name, r.descriptor)))
}

pub fn emit_plot_data<W: Write>(kind: PlotKind, input: PlotInput<'_>, mut out: W) -> Result<()> {
    match (kind, input) {
        (PlotKind::NormVsTime, PlotInput::Trajectory(tr)) => {
            header(&mut out, kind, None, "time,sup_norm")?;
            for st in &tr.states {
                writeln!(out, "{:e},{:e}", st.time, st.sup_norm())?;
            }
        }
        (PlotKind::BetaVsEps, PlotInput::Ledger(l)) => {
            let mut rows = keyed(l, "hardy_beta_hat", "eps")?;
            rows.sort_by(|a, b| b.0.total_cmp(&a.0));
            header(&mut out, kind, None, "eps,beta_hat")?;
            for (eps, r) in rows {
                writeln!(out, "{eps:e},{:e}", measured(r)?)?;
            }
        }
        (PlotKind::DecayVsT0, PlotInput::Ledger(l)) => {
            let mut rows = keyed(l, "counterexample_sup", "t0")?;
            rows.sort_by(|a, b| b.0.total_cmp(&a.0));
            header(&mut out, kind, None, "t0,supnorm")?;
            for (t0, r) in rows {
                writeln!(out, "{t0:e},{:e}", measured(r)?)?;
            }
        }
        (PlotKind::CauchyHeatmap, PlotInput::Ledger(l)) => {
            let rows: Vec<&LedgerRow> = l.named("cauchy_entry").collect();
            if rows.is_empty() {
                if !l.rows.is_empty() {
                    return Err(Error::Format("ledger has no `cauchy_entry` rows".into()));
                }
                header(&mut out, kind, None, "m")?;
                return Ok(());
            }
            let norm = rows[0].field("norm").unwrap_or("sup_l2").to_string();
            let rows: Vec<&LedgerRow> = rows.into_iter().filter(|r| r.field("norm") == Some(norm.as_str())).collect();
            let index = |r: &LedgerRow, key: &str| -> Result<u32> {
                r.field(key)
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| Error::Format(format!("`cauchy_entry` row without `{key}=`")))
            };
            let mut ms: Vec<u32> = Vec::new();
            for r in &rows {
                let m = index(r, "m_i")?;
                if !ms.contains(&m) {
                    ms.push(m);
                }
            }
            ms.sort_unstable();
            let k = ms.len();
            let mut mat = vec![vec![None; k]; k];
            for r in &rows {
                let i = ms.iter().position(|&m| m == index(r, "m_i").unwrap_or(0));
                let j = ms.iter().position(|&m| m == index(r, "m_j").unwrap_or(0));
                if let (Some(i), Some(j)) = (i, j) {
                    mat[i][j] = Some(measured(r)?);
                }
            }
            let cols: Vec<String> = ms.iter().map(u32::to_string).collect();
            header(&mut out, kind, Some(&format!("norm={norm}")), &format!("m,{}", cols.join(",")))?;
            for (i, row) in mat.iter().enumerate() {
                let vals = row
                    .iter()
                    .map(|v| v.map(|x| format!("{x:e}")).ok_or_else(|| Error::Format("incomplete cauchy matrix".into())))
                    .collect::<Result<Vec<_>>>()?;
                writeln!(out, "{},{}", ms[i], vals.join(","))?;
            }
        }
        (kind, _) => {
            let want = if kind == PlotKind::NormVsTime { "a trajectory" } else { "a ledger" };
            return Err(Error::invalid("input", format!("{} needs {want}", kind.name())));
        }
    }
    Ok(())
}
