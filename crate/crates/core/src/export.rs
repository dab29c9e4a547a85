//! Trajectory files.
//!
//! The binary layout is little-endian throughout:
//!
//! ```text
//! magic    b"FLTRAJ\0\0"
//! version  u32 (= 1)
//! kind     u32 (0 radial, 1 radial_log, 2 tensor3)
//! d, n     u32, u32
//! a, b     f64, f64     radial: (r_max, 0); radial_log: (r_min, r_max); tensor3: (L, 0)
//! spacing  f64          redundant, checked on load
//! s, step  f64, f64
//! states   u64
//! values   u64          per state
//! times    f64 × states
//! data     f64 × states × values, row-major by state
//! ```

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridSpec};
use crate::solver::{ScalarState, Trajectory};

pub const MAGIC: &[u8; 8] = b"FLTRAJ\0\0";
pub const VERSION: u32 = 1;

/// Write `time,node,value` rows. Floats use the shortest round-trip form.
pub fn write_csv<W: Write>(traj: &Trajectory, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time", "node", "value"])?;
    for st in &traj.states {
        let t = st.time.to_string();
        for (i, v) in st.values.iter().enumerate() {
            w.write_record([t.as_str(), &i.to_string(), &v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_binary<W: Write>(traj: &Trajectory, grid: &Grid, mut out: W) -> Result<()> {
    let (kind, d, n, a, b) = match grid.spec() {
        GridSpec::Radial { d, r_max, n } => (0u32, d, n, r_max, 0.0),
        GridSpec::RadialLog { d, r_min, r_max, n } => (1, d, n, r_min, r_max),
        GridSpec::Tensor3 { half_width, n } => (2, 3, n, half_width, 0.0),
    };
    let mut buf = Vec::with_capacity(80 + 8 * traj.states.len() * (grid.len() + 1));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&kind.to_le_bytes());
    buf.extend_from_slice(&(d as u32).to_le_bytes());
    buf.extend_from_slice(&(n as u32).to_le_bytes());
    for x in [a, b, grid.spacing(), traj.s, traj.step] {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    buf.extend_from_slice(&(traj.states.len() as u64).to_le_bytes());
    buf.extend_from_slice(&(grid.len() as u64).to_le_bytes());
    for st in &traj.states {
        buf.extend_from_slice(&st.time.to_le_bytes());
    }
    for st in &traj.states {
        if st.values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "state at t={} has {} values, grid has {}",
                st.time,
                st.values.len(),
                grid.len()
            )));
        }
        for v in &st.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

struct Cursor<'a>(&'a [u8]);

impl Cursor<'_> {
    fn take<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        if self.0.len() < N {
            return Err(Error::Format(format!("truncated while reading {what}")));
        }
        let (head, rest) = self.0.split_at(N);
        self.0 = rest;
        Ok(head.try_into().expect("split at N"))
    }
    fn u32(&mut self, what: &str) -> Result<u32> {
        self.take::<4>(what).map(u32::from_le_bytes)
    }
    fn u64(&mut self, what: &str) -> Result<u64> {
        self.take::<8>(what).map(u64::from_le_bytes)
    }
    fn f64(&mut self, what: &str) -> Result<f64> {
        self.take::<8>(what).map(f64::from_le_bytes)
    }
}

pub fn read_binary<R: Read>(mut input: R) -> Result<(Grid, Trajectory)> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let mut c = Cursor(&bytes);
    if &c.take::<8>("magic")? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = c.u32("version")?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let kind = c.u32("grid kind")?;
    let d = c.u32("d")? as usize;
    let n = c.u32("n")? as usize;
    let a = c.f64("grid parameter")?;
    let b = c.f64("grid parameter")?;
    let spacing = c.f64("spacing")?;
    let spec = match kind {
        0 => GridSpec::Radial { d, r_max: a, n },
        1 => GridSpec::RadialLog { d, r_min: a, r_max: b, n },
        2 => GridSpec::Tensor3 { half_width: a, n },
        k => return Err(Error::Format(format!("unknown grid kind {k}"))),
    };
    let grid = Grid::build(spec)?;
    if grid.spacing().to_bits() != spacing.to_bits() {
        return Err(Error::Format(format!("spacing {spacing} does not match {}", grid.describe())));
    }
    let s = c.f64("s")?;
    let step = c.f64("step")?;
    let states = c.u64("state count")? as usize;
    let len = c.u64("value count")? as usize;
    if len != grid.len() {
        return Err(Error::Format(format!("{len} values per state, {} expects {}", grid.describe(), grid.len())));
    }
    let expected = states
        .checked_mul(len + 1)
        .and_then(|k| k.checked_mul(8))
        .ok_or_else(|| Error::Format("size overflow".into()))?;
    if c.0.len() != expected {
        return Err(Error::Format(format!("expected {expected} payload bytes, found {}", c.0.len())));
    }
    let times: Vec<f64> = (0..states).map(|_| c.f64("time")).collect::<Result<_>>()?;
    let states = times
        .into_iter()
        .map(|t| Ok(ScalarState::new(t, (0..len).map(|_| c.f64("value")).collect::<Result<_>>()?)))
        .collect::<Result<_>>()?;
    Ok((grid, Trajectory { s, step, states }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{evolve, NoDrift};

    fn sample() -> (Grid, Trajectory) {
        let g = Grid::build(GridSpec::Radial { d: 3, r_max: 4.0, n: 32 }).unwrap();
        let f = ScalarState::new(0.0, g.sample(|_, r| (-r * r).exp() / 3.0));
        let tr = evolve(&NoDrift, &g, 0.0, 0.03, &f, 0.01, None).unwrap();
        (g, tr)
    }

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let (g, tr) = sample();
        let mut buf = Vec::new();
        write_binary(&tr, &g, &mut buf).unwrap();
        let (g2, tr2) = read_binary(&buf[..]).unwrap();
        assert_eq!(g2, g);
        assert_eq!(tr2.s.to_bits(), tr.s.to_bits());
        for (a, b) in tr.states.iter().zip(&tr2.states) {
            assert_eq!(a.time.to_bits(), b.time.to_bits());
            assert!(a.values.iter().zip(&b.values).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        let mut again = Vec::new();
        write_binary(&tr2, &g2, &mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let (g, tr) = sample();
        let mut buf = Vec::new();
        write_binary(&tr, &g, &mut buf).unwrap();
        assert!(read_binary(&buf[..buf.len() - 1]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_binary(&bad[..]), Err(Error::Format(_))));
        let mut bad = buf;
        bad[8] = 9;
        assert!(matches!(read_binary(&bad[..]), Err(Error::Format(_))));
    }

    #[test]
    fn csv_rows_reparse_exactly() {
        let (_, tr) = sample();
        let mut buf = Vec::new();
        write_csv(&tr, &mut buf).unwrap();
        let mut rd = csv::Reader::from_reader(&buf[..]);
        let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), tr.states.len() * tr.states[0].values.len());
        let n = tr.states[0].values.len();
        for (k, row) in rows.iter().enumerate() {
            let st = &tr.states[k / n];
            assert_eq!(row[0].parse::<f64>().unwrap(), st.time);
            assert_eq!(row[1].parse::<usize>().unwrap(), k % n);
            assert_eq!(row[2].parse::<f64>().unwrap().to_bits(), st.values[k % n].to_bits());
        }
    }
}
