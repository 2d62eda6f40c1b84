//! Per-step log records and their CSV form.
//!
//! Columns, in order: `t, q0..q{n-1}, qdot0..qdot{n-1}, ee_x, ee_y, ee_z,
//! ee_zd, f_ext_z, f_contact_z, lambda, beta, gamma, k, j, E_tank, P_task,
//! E_total, T_total, U_total, screw_state`. Floats carry 9 significant
//! digits; `E_tank` is `NaN` for controllers without a tank.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::screw::ScrewState;
use crate::error::{Error, Result};

const TAIL: [&str; 17] = [
    "ee_x",
    "ee_y",
    "ee_z",
    "ee_zd",
    "f_ext_z",
    "f_contact_z",
    "lambda",
    "beta",
    "gamma",
    "k",
    "j",
    "E_tank",
    "P_task",
    "E_total",
    "T_total",
    "U_total",
    "screw_state",
];

#[derive(Debug, Clone, PartialEq)]
pub struct LogRecord {
    pub t: f64,
    pub q: Vec<f64>,
    pub qdot: Vec<f64>,
    pub ee: [f64; 3],
    /// Desired tool height [m].
    pub ee_zd: f64,
    /// Total external force along z [N].
    pub f_ext_z: f64,
    /// Workbench force along z [N].
    pub f_contact_z: f64,
    pub lambda: f64,
    pub beta: f64,
    pub gamma: f64,
    pub k: u8,
    pub j: u8,
    pub e_tank: f64,
    pub p_task: f64,
    pub e_total: f64,
    pub t_total: f64,
    pub u_total: f64,
    pub screw_state: ScrewState,
}

/// Header for an `n`-joint robot.
pub fn header(n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((0..n).map(|i| format!("q{i}")));
    h.extend((0..n).map(|i| format!("qdot{i}")));
    h.extend(TAIL.iter().map(|s| s.to_string()));
    h
}

fn num(x: f64) -> String {
    format!("{x:.8e}")
}

impl LogRecord {
    pub fn to_csv_row(&self) -> String {
        let mut cols = Vec::with_capacity(2 * self.q.len() + 18);
        cols.push(num(self.t));
        cols.extend(self.q.iter().map(|&x| num(x)));
        cols.extend(self.qdot.iter().map(|&x| num(x)));
        cols.extend(self.ee.iter().map(|&x| num(x)));
        for x in [self.ee_zd, self.f_ext_z, self.f_contact_z, self.lambda, self.beta, self.gamma] {
            cols.push(num(x));
        }
        cols.push(self.k.to_string());
        cols.push(self.j.to_string());
        for x in [self.e_tank, self.p_task, self.e_total, self.t_total, self.u_total] {
            cols.push(num(x));
        }
        cols.push(self.screw_state.as_str().to_string());
        cols.join(",")
    }
}

/// Streams records to any writer.
pub struct CsvLogWriter<W: Write> {
    inner: BufWriter<W>,
}

impl<W: Write> CsvLogWriter<W> {
    pub fn new(inner: W, n: usize) -> std::io::Result<Self> {
        let mut inner = BufWriter::new(inner);
        writeln!(inner, "{}", header(n).join(","))?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, r: &LogRecord) -> std::io::Result<()> {
        writeln!(self.inner, "{}", r.to_csv_row())
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        self.inner.flush()?;
        self.inner.into_inner().map_err(|e| e.into_error())
    }
}

/// CSV text for a whole run.
pub fn to_csv_string(records: &[LogRecord], n: usize) -> String {
    let mut out = header(n).join(",");
    out.push('\n');
    for r in records {
        out.push_str(&r.to_csv_row());
        out.push('\n');
    }
    out
}

pub fn write_csv(path: &Path, records: &[LogRecord], n: usize) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = CsvLogWriter::new(file, n).map_err(|e| Error::io(path, e))?;
    for r in records {
        w.write(r).map_err(|e| Error::io(path, e))?;
    }
    w.finish().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// A log read back as text columns.
#[derive(Debug, Clone, PartialEq)]
pub struct LogTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl LogTable {
    pub fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(BufReader::new(file), path)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_reader(text.as_bytes(), Path::new("<memory>"))
    }

    fn from_reader(reader: impl BufRead, path: &Path) -> Result<Self> {
        let malformed = |reason: String| Error::MalformedLog { path: path.to_path_buf(), reason };
        let mut lines = reader.lines();
        let head = lines
            .next()
            .ok_or_else(|| malformed("empty file".into()))?
            .map_err(|e| Error::io(path, e))?;
        let columns: Vec<String> = head.split(',').map(str::to_string).collect();
        if columns.first().map(String::as_str) != Some("t") {
            return Err(malformed("first column must be `t`".into()));
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.is_empty() {
                continue;
            }
            let row: Vec<String> = line.split(',').map(str::to_string).collect();
            if row.len() != columns.len() {
                return Err(malformed(format!("row {} has {} fields, header has {}", i + 1, row.len(), columns.len())));
            }
            rows.push(row);
        }
        Ok(LogTable { columns, rows })
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.columns.iter().position(|c| c == name).ok_or_else(|| Error::UnknownColumn {
            name: name.to_string(),
            available: self.columns.clone(),
        })
    }

    pub fn column_text(&self, name: &str) -> Result<Vec<&str>> {
        let i = self.index_of(name)?;
        Ok(self.rows.iter().map(|r| r[i].as_str()).collect())
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.index_of(name)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(k, r)| {
                r[i].parse::<f64>().map_err(|_| Error::MalformedLog {
                    path: "<log>".into(),
                    reason: format!("row {}: `{}` in column {name} is not a number", k + 1, r[i]),
                })
            })
            .collect()
    }

    /// Joint count inferred from the `q*` columns.
    pub fn dof(&self) -> usize {
        self.columns.iter().filter(|c| c.starts_with('q') && !c.starts_with("qdot")).count()
    }

    /// Typed records.
    pub fn records(&self) -> Result<Vec<LogRecord>> {
        let n = self.dof();
        if self.columns != header(n) {
            return Err(Error::MalformedLog { path: "<log>".into(), reason: "unexpected column layout".into() });
        }
        let bad = |k: usize, what: &str| Error::MalformedLog {
            path: "<log>".into(),
            reason: format!("row {}: bad {what}", k + 1),
        };
        self.rows
            .iter()
            .enumerate()
            .map(|(k, r)| {
                let f = |i: usize| r[i].parse::<f64>().map_err(|_| bad(k, &self.columns[i]));
                let u = |i: usize| r[i].parse::<u8>().map_err(|_| bad(k, &self.columns[i]));
                let b = 1 + 2 * n;
                Ok(LogRecord {
                    t: f(0)?,
                    q: (1..=n).map(f).collect::<Result<_>>()?,
                    qdot: (n + 1..=2 * n).map(f).collect::<Result<_>>()?,
                    ee: [f(b)?, f(b + 1)?, f(b + 2)?],
                    ee_zd: f(b + 3)?,
                    f_ext_z: f(b + 4)?,
                    f_contact_z: f(b + 5)?,
                    lambda: f(b + 6)?,
                    beta: f(b + 7)?,
                    gamma: f(b + 8)?,
                    k: u(b + 9)?,
                    j: u(b + 10)?,
                    e_tank: f(b + 11)?,
                    p_task: f(b + 12)?,
                    e_total: f(b + 13)?,
                    t_total: f(b + 14)?,
                    u_total: f(b + 15)?,
                    screw_state: r[b + 16].parse().map_err(|_| bad(k, "screw_state"))?,
                })
            })
            .collect()
    }
}

/// Largest workbench force with `t` in `[from, to]`.
pub fn peak_impact_force(records: &[LogRecord], window: (f64, f64)) -> Result<f64> {
    let (from, to) = window;
    if !(from <= to) {
        return Err(Error::Scenario(format!("empty window [{from}, {to}]")));
    }
    Ok(records
        .iter()
        .filter(|r| r.t >= from && r.t <= to)
        .map(|r| r.f_contact_z.abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn record(t: f64, f_contact: f64) -> LogRecord {
        LogRecord {
            t,
            q: vec![0.1, -0.2],
            qdot: vec![0.0, 1.5],
            ee: [0.3, 0.0, 0.25],
            ee_zd: 0.2,
            f_ext_z: f_contact,
            f_contact_z: f_contact,
            lambda: 1.0,
            beta: 1.0,
            gamma: 1.0,
            k: 1,
            j: 1,
            e_tank: f64::NAN,
            p_task: -0.01,
            e_total: 0.1,
            t_total: 0.05,
            u_total: 0.05,
            screw_state: ScrewState::Engaged,
        }
    }

    #[test]
    fn header_layout() {
        let h = header(2);
        assert_eq!(&h[..5], ["t", "q0", "q1", "qdot0", "qdot1"]);
        assert_eq!(h.last().unwrap(), "screw_state");
        assert_eq!(h.len(), 1 + 4 + 17);
    }

    #[test]
    fn nine_significant_digits() {
        let r = record(0.001, 12.3456789012);
        let row = r.to_csv_row();
        assert!(row.starts_with("1.00000000e-3,"));
        assert!(row.contains("1.23456789e1"));
        assert!(row.contains("NaN"));
    }

    #[test]
    fn csv_round_trip() {
        let recs: Vec<_> = (0..5).map(|i| record(i as f64 * 1e-3, i as f64)).collect();
        let text = to_csv_string(&recs, 2);
        let table = LogTable::parse(&text).unwrap();
        assert_eq!(table.rows.len(), 5);
        let back = table.records().unwrap();
        assert_eq!(back.len(), 5);
        assert_eq!(back[3].f_contact_z, 3.0);
        assert!(back[3].e_tank.is_nan());
        assert_eq!(back[3].screw_state, ScrewState::Engaged);
    }

    #[test]
    fn peak_force_cases() {
        let quiet: Vec<_> = (0..10).map(|i| record(i as f64, 0.0)).collect();
        assert_eq!(peak_impact_force(&quiet, (0.0, 9.0)).unwrap(), 0.0);
        let mut spiky = quiet.clone();
        spiky[4].f_contact_z = 12.3;
        spiky[8].f_contact_z = 50.0;
        assert_eq!(peak_impact_force(&spiky, (0.0, 6.0)).unwrap(), 12.3);
        let max_col = spiky.iter().map(|r| r.f_contact_z).fold(f64::MIN, f64::max);
        assert_eq!(peak_impact_force(&spiky, (0.0, 9.0)).unwrap(), max_col);
        assert!(peak_impact_force(&spiky, (5.0, 1.0)).is_err());
    }

    #[test]
    fn unknown_column_lists_available() {
        let text = to_csv_string(&[record(0.0, 0.0)], 2);
        let t = LogTable::parse(&text).unwrap();
        match t.column("nope") {
            Err(Error::UnknownColumn { available, .. }) => assert!(available.contains(&"lambda".to_string())),
            other => panic!("{other:?}"),
        }
    }
}
