//! CSV emitters with a `#`-prefixed metadata header.
//!
//! Column orders are fixed. Floats use the shortest representation that
//! round-trips, so equal inputs give byte-identical files. Missing values
//! are written as empty fields.

use std::io::Write;

use crate::fps::{ScalingRow, SuccessSeries};
use crate::noise::NoiseRow;
use crate::resources::ResourceRow;
use crate::{NeighborPair, Result};

/// Ordered `key: value` lines written above the column header.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metadata {
    entries: Vec<(String, String)>,
}

impl Metadata {
    /// Crate version and register bit order, plus the seed when one applies.
    pub fn standard(seed: Option<u64>) -> Self {
        let mut m = Self::default();
        m.push("version", env!("CARGO_PKG_VERSION"));
        m.push("endianness", "little");
        if let Some(s) = seed {
            m.push("seed", s);
        }
        m
    }

    pub fn push(&mut self, key: &str, value: impl ToString) -> &mut Self {
        let value = value.to_string().replace(['\n', '\r'], " ");
        self.entries.push((key.to_string(), value));
        self
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Write `meta`, the header and `rows`.
pub fn write_table<W: Write>(mut w: W, meta: &Metadata, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    for (k, v) in meta.entries() {
        writeln!(w, "# {k}: {v}")?;
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header).map_err(csv_err)?;
    for row in rows {
        out.write_record(&row).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> crate::Error {
    crate::Error::Io(e.to_string())
}

pub const FPS_CURVE_COLUMNS: [&str; 6] = ["i", "alpha_i", "c_i", "s_i", "p_i", "p_cum"];
pub const SCALING_COLUMNS: [&str; 5] = ["S", "schedule", "expected_calls", "mc_mean", "mc_stderr"];
pub const RESOURCE_COLUMNS: [&str; 8] =
    ["kind", "q1", "counted_depth", "counted_cnot", "model_depth", "qubits_data", "qubits_ancilla", "model_ancilla"];
pub const NOISE_COLUMNS: [&str; 7] = ["q0", "rate", "trials", "empirical_success", "model_success", "accepted", "rejected"];
pub const PAIR_COLUMNS: [&str; 3] = ["i", "j", "d"];

pub fn write_fps_curves<W: Write>(w: W, meta: &Metadata, series: &SuccessSeries) -> Result<()> {
    let rows = (0..series.len()).map(|k| {
        let st = series.states[k];
        vec![
            (k + 1).to_string(),
            series.alphas[k].to_string(),
            st.c.to_string(),
            st.s.to_string(),
            series.instantaneous[k].to_string(),
            series.cumulative[k].to_string(),
        ]
    });
    write_table(w, meta, &FPS_CURVE_COLUMNS, rows)
}

pub fn write_scaling<W: Write>(w: W, meta: &Metadata, rows: &[ScalingRow]) -> Result<()> {
    let rows = rows.iter().map(|r| {
        vec![r.space.to_string(), r.schedule.to_string(), r.expected_calls.to_string(), opt(r.mc_mean), opt(r.mc_stderr)]
    });
    write_table(w, meta, &SCALING_COLUMNS, rows)
}

pub fn write_resources<W: Write>(w: W, meta: &Metadata, rows: &[ResourceRow]) -> Result<()> {
    let rows = rows.iter().map(|r| {
        vec![
            r.kind.to_string(),
            r.q1.to_string(),
            opt(r.counted_depth),
            opt(r.counted_cnot),
            r.model_depth.to_string(),
            r.qubits_data.to_string(),
            r.qubits_ancilla.to_string(),
            r.model_ancilla.to_string(),
        ]
    });
    write_table(w, meta, &RESOURCE_COLUMNS, rows)
}

pub fn write_noise_sweep<W: Write>(w: W, meta: &Metadata, rows: &[NoiseRow]) -> Result<()> {
    let rows = rows.iter().map(|r| {
        vec![
            r.q0.to_string(),
            r.rate.to_string(),
            r.trials.to_string(),
            r.empirical_success.to_string(),
            r.model_success.to_string(),
            opt(r.accepted),
            opt(r.rejected),
        ]
    });
    write_table(w, meta, &NOISE_COLUMNS, rows)
}

pub fn write_pairs<'a, W: Write>(w: W, meta: &Metadata, pairs: impl IntoIterator<Item = &'a NeighborPair>) -> Result<()> {
    let rows = pairs.into_iter().map(|p| vec![p.i.to_string(), p.j.to_string(), p.d.to_string()]);
    write_table(w, meta, &PAIR_COLUMNS, rows)
}

/// Split a file written by [`write_table`] into metadata and CSV body.
pub fn split_metadata(text: &str) -> (Vec<(String, String)>, &str) {
    let mut meta = Vec::new();
    let mut rest = text;
    while let Some(line) = rest.strip_prefix("# ") {
        let (head, tail) = line.split_once('\n').unwrap_or((line, ""));
        if let Some((k, v)) = head.split_once(": ") {
            meta.push((k.to_string(), v.to_string()));
        }
        rest = tail;
    }
    (meta, rest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fps::{success_series, AngleSchedule};

    #[test]
    fn header_then_columns() {
        let mut meta = Metadata::standard(Some(7));
        meta.push("note", "two\nlines");
        let mut buf = Vec::new();
        let pairs = [NeighborPair { i: 2, j: 1, d: 3 }];
        write_pairs(&mut buf, &meta, &pairs).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let (m, body) = split_metadata(&text);
        assert_eq!(m[1], ("endianness".into(), "little".into()));
        assert_eq!(m[2], ("seed".into(), "7".into()));
        assert_eq!(m[3].1, "two lines");
        assert_eq!(body, "i,j,d\n2,1,3\n");
    }

    #[test]
    fn curve_rows_and_determinism() {
        let s = success_series(&AngleSchedule::decreasing(), 0.3, 4);
        let write = || {
            let mut buf = Vec::new();
            write_fps_curves(&mut buf, &Metadata::standard(None), &s).unwrap();
            String::from_utf8(buf).unwrap()
        };
        let text = write();
        assert_eq!(text, write());
        let (_, body) = split_metadata(&text);
        let lines: Vec<&str> = body.lines().collect();
        assert_eq!(lines[0], "i,alpha_i,c_i,s_i,p_i,p_cum");
        assert_eq!(lines.len(), 5);
        let first: Vec<f64> = lines[1].split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(first[0], 1.0);
        assert_eq!(first[1], std::f64::consts::FRAC_PI_2);
        assert_eq!(first[3], 0.3f64.sin());
    }

    #[test]
    fn missing_values_are_empty() {
        let rows = [ScalingRow {
            space: 16,
            schedule: crate::fps::ScheduleKind::Critical,
            expected_calls: 2.5,
            mc_mean: None,
            mc_stderr: None,
        }];
        let mut buf = Vec::new();
        write_scaling(&mut buf, &Metadata::default(), &rows).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "S,schedule,expected_calls,mc_mean,mc_stderr\n16,critical,2.5,,\n");
    }
}
