//! CSV trace of a run, one row per iteration.
//!
//! Columns: `n`, the chosen point `a_0..a_{d-1}`, the measurements
//! `f_hat, g_hat_1..g_hat_q`, the set sizes, `e_n` at the chosen point, the
//! four phase timings in milliseconds and the number of constraints the
//! exact outputs violate at the chosen point.

use std::io::{self, Write};

use crate::safe_learn::IterationRecord;

pub const TIMING_COLUMNS: [&str; 4] = ["t_bounds_ms", "t_sets_ms", "t_select_ms", "t_ingest_ms"];

pub fn header(dim: usize, constraints: usize) -> Vec<String> {
    let mut cols = vec!["n".to_string()];
    cols.extend((0..dim).map(|k| format!("a_{k}")));
    cols.push("f_hat".into());
    cols.extend((1..=constraints).map(|i| format!("g_hat_{i}")));
    for c in ["S_size", "M_size", "G_size", "e_n"] {
        cols.push(c.into());
    }
    cols.extend(TIMING_COLUMNS.iter().map(|c| c.to_string()));
    cols.push("violations_true".into());
    cols
}

/// Formats one record. Floats use the shortest representation that
/// round-trips, so equal values always print identically.
pub fn row(record: &IterationRecord) -> String {
    let t = &record.timings;
    let mut fields = vec![record.n.to_string()];
    fields.extend(record.point.iter().map(f64::to_string));
    fields.extend(record.measurements.iter().map(f64::to_string));
    for v in [
        record.safe_size,
        record.maximizers_size,
        record.expanders_size,
        record.expansion,
    ] {
        fields.push(v.to_string());
    }
    for v in [t.bounds_ms, t.sets_ms, t.select_ms, t.ingest_ms] {
        fields.push(v.to_string());
    }
    fields.push(record.true_violations.to_string());
    fields.join(",")
}

/// Streams rows to `W`, flushing after every row so a failing run leaves
/// a complete prefix behind.
pub struct TraceWriter<W: Write> {
    out: W,
    columns: usize,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(mut out: W, dim: usize, constraints: usize) -> io::Result<Self> {
        let cols = header(dim, constraints);
        writeln!(out, "{}", cols.join(","))?;
        out.flush()?;
        Ok(Self {
            out,
            columns: cols.len(),
        })
    }

    pub fn write(&mut self, record: &IterationRecord) -> io::Result<()> {
        let line = row(record);
        debug_assert_eq!(line.split(',').count(), self.columns);
        writeln!(self.out, "{line}")?;
        self.out.flush()
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::safe_learn::PhaseTimings;

    #[test]
    fn header_layout() {
        let h = header(2, 1).join(",");
        assert_eq!(
            h,
            "n,a_0,a_1,f_hat,g_hat_1,S_size,M_size,G_size,e_n,t_bounds_ms,t_sets_ms,t_select_ms,t_ingest_ms,violations_true"
        );
    }

    #[test]
    fn row_matches_header() {
        let r = IterationRecord {
            n: 3,
            index: 7,
            point: vec![0.25, 0.5],
            measurements: vec![0.1, -0.2],
            safe_size: 10,
            maximizers_size: 4,
            expanders_size: 2,
            expansion: 5,
            best_guess: 7,
            best_lower: 0.0,
            timings: PhaseTimings::default(),
            true_violations: 0,
        };
        let mut w = TraceWriter::new(Vec::new(), 2, 1).unwrap();
        w.write(&r).unwrap();
        let text = String::from_utf8(w.into_inner()).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[1], "3,0.25,0.5,0.1,-0.2,10,4,2,5,0,0,0,0,0");
    }
}
