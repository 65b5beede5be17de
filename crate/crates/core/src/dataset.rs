//! Tabular sweep results with a metadata sidecar.
//!
//! Rows are written as comma-separated text with a header line. Metadata goes
//! to `<stem>.meta.toml` next to the table. Failed estimates are stored as
//! `NaN` and the reason is listed in `metadata.errors`.

use crate::discriminator::DiscriminationPoint;
use crate::error::{Error, Result};
use crate::experiment::{CountRecord, ExperimentConfig, HomScan};
use crate::multimeter::MultimeterPoint;
use crate::stats::Estimate;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub command: String,
    #[serde(default)]
    pub args: Vec<String>,
    pub seed: u64,
    /// Unix seconds. Zero until the caller stamps it.
    #[serde(default)]
    pub timestamp: u64,
    #[serde(default)]
    pub errors: Vec<String>,
    #[serde(default)]
    pub extras: BTreeMap<String, f64>,
    pub config: ExperimentConfig,
}

impl Metadata {
    pub fn new(command: impl Into<String>, config: &ExperimentConfig, seed: u64) -> Self {
        Self {
            command: command.into(),
            args: Vec::new(),
            seed,
            timestamp: 0,
            errors: Vec::new(),
            extras: BTreeMap::new(),
            config: config.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub metadata: Metadata,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub const DISCRIMINATION_COLUMNS: [&str; 8] = [
    "epsilon",
    "theta",
    "p_theory",
    "p_optimal",
    "p_estimated",
    "p_estimated_stderr",
    "error_rate",
    "error_rate_stderr",
];

pub const MULTIMETER_COLUMNS: [&str; 10] = [
    "phi",
    "eta",
    "p_inconclusive_theory",
    "fidelity_theory",
    "p_inconclusive",
    "p_inconclusive_stderr",
    "fidelity",
    "fidelity_stderr",
    "error_rate",
    "error_rate_stderr",
];

pub const HOM_COLUMNS: [&str; 6] = ["position", "c_pp", "c_pm", "c_mp", "c_mm", "detected_pair_rate"];

fn with_counts(head: &[&str]) -> Vec<String> {
    head.iter()
        .chain(CountRecord::COLUMNS.iter())
        .map(|s| s.to_string())
        .collect()
}

fn push_estimate(row: &mut Vec<f64>, est: &Result<Estimate>, what: &str, at: &str, errors: &mut Vec<String>) {
    match est {
        Ok(e) => row.extend([e.value, e.stderr]),
        Err(err) => {
            row.extend([f64::NAN, f64::NAN]);
            errors.push(format!("{at}: {what}: {err}"));
        }
    }
}

fn push_counts(row: &mut Vec<f64>, counts: &CountRecord) {
    row.extend(counts.values().iter().map(|&c| c as f64));
}

impl Dataset {
    pub fn new(metadata: Metadata, columns: Vec<String>) -> Self {
        Self {
            metadata,
            columns,
            rows: Vec::new(),
        }
    }

    pub fn from_discrimination(points: &[DiscriminationPoint], config: &ExperimentConfig, seed: u64) -> Self {
        let mut ds = Self::new(
            Metadata::new("discriminate", config, seed),
            with_counts(&DISCRIMINATION_COLUMNS),
        );
        for p in points {
            let at = format!("epsilon={} theta={}", p.epsilon, p.theta);
            let mut row = vec![p.epsilon, p.theta, p.p_theory, p.p_optimal];
            push_estimate(&mut row, &p.p_estimated, "p_estimated", &at, &mut ds.metadata.errors);
            push_estimate(&mut row, &p.error_rate, "error_rate", &at, &mut ds.metadata.errors);
            push_counts(&mut row, &p.counts);
            ds.rows.push(row);
        }
        ds
    }

    pub fn from_multimeter(points: &[MultimeterPoint], config: &ExperimentConfig, seed: u64) -> Self {
        let mut ds = Self::new(
            Metadata::new("multimeter", config, seed),
            with_counts(&MULTIMETER_COLUMNS),
        );
        for p in points {
            let at = format!("phi={} eta={}", p.phi, p.eta);
            let mut row = vec![p.phi, p.eta, p.theory_pi, p.theory_fidelity];
            let errors = &mut ds.metadata.errors;
            push_estimate(&mut row, &p.p_inconclusive, "p_inconclusive", &at, errors);
            push_estimate(&mut row, &p.fidelity, "fidelity", &at, errors);
            push_estimate(&mut row, &p.error_rate, "error_rate", &at, errors);
            push_counts(&mut row, &p.counts);
            ds.rows.push(row);
        }
        ds
    }

    pub fn from_hom_scan(scan: &HomScan, config: &ExperimentConfig, seed: u64) -> Self {
        let mut ds = Self::new(
            Metadata::new("hom-scan", config, seed),
            HOM_COLUMNS.iter().map(|s| s.to_string()).collect(),
        );
        for r in &scan.rows {
            ds.rows
                .push(vec![r.position, r.c_pp, r.c_pm, r.c_mp, r.c_mm, r.detected_pair_rate]);
        }
        let extras = &mut ds.metadata.extras;
        for (name, fit) in [("mp", scan.fit_mp), ("pm", scan.fit_pm)] {
            match fit {
                Some(f) => {
                    extras.insert(format!("visibility_{name}"), f.visibility);
                    extras.insert(format!("shoulder_{name}"), f.shoulder);
                    extras.insert(format!("sigma_{name}"), f.sigma);
                }
                None if !scan.rows.is_empty() => {
                    ds.metadata.errors.push(format!("dip fit of c_{name} failed"));
                }
                None => {}
            }
        }
        if let Some(v) = scan.visibility() {
            extras.insert("visibility".into(), v);
        }
        ds
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Raw counts of every row. Fails on the first missing count column or
    /// on a value that is not a nonnegative integer.
    pub fn count_records(&self) -> Result<Vec<CountRecord>> {
        let idx = CountRecord::COLUMNS
            .iter()
            .map(|c| self.column_index(c))
            .collect::<Result<Vec<_>>>()?;
        self.rows
            .iter()
            .enumerate()
            .map(|(line, row)| {
                let mut v = [0u64; 8];
                for (slot, &i) in v.iter_mut().zip(&idx) {
                    let x = row[i];
                    if !(x >= 0.0 && x.fract() == 0.0 && x < 2f64.powi(53)) {
                        return Err(Error::Parse {
                            line: line + 2,
                            reason: format!("count `{}` = {x} is not a nonnegative integer", self.columns[i]),
                        });
                    }
                    *slot = x as u64;
                }
                Ok(CountRecord::from_values(v))
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|x| x.to_string())).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parses a table written by [`Dataset::write_csv`]. Metadata is left at
    /// its defaults for the given config.
    pub fn read_csv<R: Read>(input: R, metadata: Metadata) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let columns: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for (k, rec) in r.records().enumerate() {
            let line = k + 2;
            let rec = rec.map_err(|e| Error::Parse { line, reason: e.to_string() })?;
            let row = rec
                .iter()
                .map(|f| {
                    f.parse::<f64>().map_err(|_| Error::Parse {
                        line,
                        reason: format!("`{f}` is not a number"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(Self { metadata, columns, rows })
    }

    pub fn metadata_toml(&self) -> Result<String> {
        toml::to_string(&self.metadata).map_err(|e| Error::Config(e.to_string()))
    }

    /// Writes `path` and its `.meta.toml` sidecar.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))?;
        std::fs::write(sidecar_path(path), self.metadata_toml()?)?;
        Ok(())
    }

    /// Reads a table and, if present, its sidecar.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let meta_path = sidecar_path(path);
        let metadata = if meta_path.exists() {
            let text = std::fs::read_to_string(&meta_path)?;
            toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?
        } else {
            Metadata::new("", &ExperimentConfig::default(), 0)
        };
        Self::read_csv(std::fs::File::open(path)?, metadata)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// `dir/name.csv` → `dir/name.meta.toml`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.meta.toml"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Dataset {
        let mut ds = Dataset::new(
            Metadata::new("test", &ExperimentConfig::ideal(), 4),
            with_counts(&["x"]),
        );
        ds.rows.push(vec![0.1, 400.0, 0.0, 0.0, 380.0, 250.0, 250.0, 250.0, 250.0]);
        ds.rows.push(vec![f64::NAN, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        ds.metadata.extras.insert("visibility".into(), 0.92);
        ds
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let ds = sample();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let back = Dataset::read_csv(buf.as_slice(), ds.metadata.clone()).unwrap();
        assert_eq!(back.columns, ds.columns);
        assert_eq!(back.rows[0], ds.rows[0]);
        assert!(back.rows[1][0].is_nan());
        assert_eq!(back.rows[1][1..], ds.rows[1][1..]);
    }

    #[test]
    fn float_text_is_shortest_round_trip() {
        let x = 0.1 + 0.2;
        let mut ds = Dataset::new(Metadata::new("t", &ExperimentConfig::ideal(), 0), vec!["x".into()]);
        ds.rows.push(vec![x]);
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x\n0.30000000000000004\n");
    }

    #[test]
    fn count_records_and_missing_columns() {
        let ds = sample();
        let recs = ds.count_records().unwrap();
        assert_eq!(recs[0].c_pp, 400);
        assert_eq!(recs[0].c_mm, 380);
        let mut broken = ds.clone();
        broken.columns[4] = "other".into();
        assert_eq!(broken.count_records(), Err(Error::MissingColumn("c_mm".into())));
    }

    #[test]
    fn non_integer_counts_are_rejected() {
        let mut ds = sample();
        ds.rows[0][1] = 1.5;
        assert!(matches!(ds.count_records(), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn bad_number_reports_line() {
        let text = "a,b\n1,2\n3,zz\n";
        let err = Dataset::read_csv(text.as_bytes(), sample().metadata).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn metadata_toml_round_trip() {
        let ds = sample();
        let text = ds.metadata_toml().unwrap();
        let back: Metadata = toml::from_str(&text).unwrap();
        assert_eq!(back, ds.metadata);
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(
            sidecar_path(Path::new("out/fig5.csv")),
            PathBuf::from("out/fig5.meta.toml")
        );
    }

    #[test]
    fn discrimination_rows_have_all_columns() {
        let pts = crate::discriminator::run_discriminator_sweep(
            &[0.0],
            &[0.0, 45.0],
            &ExperimentConfig::ideal(),
            1e3,
            0,
        )
        .unwrap();
        let ds = Dataset::from_discrimination(&pts, &ExperimentConfig::ideal(), 0);
        assert_eq!(ds.rows.len(), 2);
        assert!(ds.rows.iter().all(|r| r.len() == ds.columns.len()));
        // ϑ = 0 has no conclusive counts, so its error rate is undefined.
        assert!(ds.rows[0][6].is_nan());
        assert_eq!(ds.metadata.errors.len(), 1);
        assert_eq!(ds.count_records().unwrap()[1], pts[1].counts);
    }
}
