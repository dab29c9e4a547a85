//! The check ledger: a versioned CSV of check reports.
//!
//! ```text
//! # feller-ledger v1
//! name,measured,bound,pass,slack,descriptor
//! e3_positivity,-0e0,1e-13,true,0e0,zero m=8; radial(d=3;r_max=8;n=256); dt=0.01
//! lp,,,skip,,cause=refused: p=1 is not above the threshold 1.11 for beta=0.04
//! ```
//!
//! Numbers use the shortest round-trip scientific form, so identical runs
//! give identical bytes. The `pass` column is `true`, `false` or `skip`;
//! skipped rows carry `cause=refused: …` (hypothesis not met, not counted as
//! executed) or `cause=error: …` (the computation failed, counted as a failure).

use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{Error, Result};
use crate::verifier::CheckReport;

pub const LEDGER_VERSION: &str = "# feller-ledger v1";
pub const LEDGER_HEADER: [&str; 6] = ["name", "measured", "bound", "pass", "slack", "descriptor"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Refused,
    Errored,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerRow {
    pub name: String,
    pub measured: Option<f64>,
    pub bound: Option<f64>,
    pub slack: Option<f64>,
    pub status: Status,
    pub descriptor: String,
}

impl From<CheckReport> for LedgerRow {
    fn from(r: CheckReport) -> Self {
        LedgerRow {
            name: r.name,
            measured: Some(r.measured),
            bound: r.bound,
            slack: Some(r.slack),
            status: if r.pass { Status::Pass } else { Status::Fail },
            descriptor: r.descriptor,
        }
    }
}

impl LedgerRow {
    /// A skipped check; refusals are separated from genuine failures.
    pub fn skipped(name: impl Into<String>, err: &Error) -> Self {
        let (status, cause) = match err {
            Error::Refused(msg) => (Status::Refused, format!("refused: {msg}")),
            e => (Status::Errored, format!("error: {e}")),
        };
        LedgerRow {
            name: name.into(),
            measured: None,
            bound: None,
            slack: None,
            status,
            descriptor: format!("cause={cause}"),
        }
    }

    /// Value of a `key=value` piece of the `;`-separated descriptor.
    pub fn field(&self, key: &str) -> Option<&str> {
        self.descriptor.split(';').find_map(|piece| {
            let (k, v) = piece.trim().split_once('=')?;
            (k == key).then_some(v)
        })
    }
}

fn fmt_num(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| format!("{v:e}"))
}

fn parse_num(s: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse::<f64>()
        .map(Some)
        .map_err(|_| Error::Format(format!("bad number `{s}` in ledger")))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ledger {
    pub rows: Vec<LedgerRow>,
}

impl Ledger {
    pub fn push(&mut self, row: impl Into<LedgerRow>) {
        self.rows.push(row.into());
    }

    pub fn extend(&mut self, rows: impl IntoIterator<Item = LedgerRow>) {
        self.rows.extend(rows);
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| matches!(r.status, Status::Fail | Status::Errored)).count()
    }

    /// Exit-status rule: every executed check passed.
    pub fn all_pass(&self) -> bool {
        self.failures() == 0
    }

    pub fn named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a LedgerRow> + 'a {
        self.rows.iter().filter(move |r| r.name == name)
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{LEDGER_VERSION}")?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(LEDGER_HEADER)?;
        for r in &self.rows {
            let pass = match r.status {
                Status::Pass => "true",
                Status::Fail => "false",
                Status::Refused | Status::Errored => "skip",
            };
            w.write_record([
                r.name.as_str(),
                &fmt_num(r.measured),
                &fmt_num(r.bound),
                pass,
                &fmt_num(r.slack),
                &r.descriptor,
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        buf
    }

    pub fn read<R: Read>(input: R) -> Result<Self> {
        let mut rd = BufReader::new(input);
        let mut first = String::new();
        rd.read_line(&mut first)?;
        if first.trim_end() != LEDGER_VERSION {
            return Err(Error::Format(format!("expected `{LEDGER_VERSION}`, found `{}`", first.trim_end())));
        }
        let mut csv = csv::Reader::from_reader(rd);
        if csv.headers()?.iter().collect::<Vec<_>>() != LEDGER_HEADER {
            return Err(Error::Format("unexpected ledger columns".into()));
        }
        let mut rows = Vec::new();
        for rec in csv.records() {
            let rec = rec?;
            let descriptor = rec[5].to_string();
            let status = match &rec[3] {
                "true" => Status::Pass,
                "false" => Status::Fail,
                "skip" if descriptor.starts_with("cause=refused") => Status::Refused,
                "skip" => Status::Errored,
                other => return Err(Error::Format(format!("bad pass value `{other}`"))),
            };
            rows.push(LedgerRow {
                name: rec[0].to_string(),
                measured: parse_num(&rec[1])?,
                bound: parse_num(&rec[2])?,
                slack: parse_num(&rec[4])?,
                status,
                descriptor,
            });
        }
        Ok(Ledger { rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_statuses() {
        let mut l = Ledger::default();
        l.push(CheckReport::bounded("a", 0.5, 1.0, 0.0, "x=1; grid=radial(d=3;n=16)"));
        l.push(CheckReport::bounded("b", 2.0, 1.0, 0.0, "y"));
        l.push(CheckReport::logged("c", 1.0 / 3.0, "z, with comma"));
        l.push(LedgerRow::skipped("d", &Error::Refused("p too small".into())));
        l.push(LedgerRow::skipped("e", &Error::invalid("n", "bad")));
        let bytes = l.to_bytes();
        let back = Ledger::read(&bytes[..]).unwrap();
        assert_eq!(back, l);
        assert_eq!(back.failures(), 2);
        assert_eq!(back.rows[0].field("x"), Some("1"));
        assert_eq!(back.rows[2].measured.unwrap().to_bits(), (1.0f64 / 3.0).to_bits());
    }

    #[test]
    fn empty_ledger_is_header_only() {
        let bytes = Ledger::default().to_bytes();
        assert_eq!(String::from_utf8(bytes).unwrap(), format!("{LEDGER_VERSION}\n{}\n", LEDGER_HEADER.join(",")));
        assert!(Ledger::default().all_pass());
    }

    #[test]
    fn wrong_version_is_rejected() {
        assert!(Ledger::read(&b"# feller-ledger v2\nname\n"[..]).is_err());
    }
}
