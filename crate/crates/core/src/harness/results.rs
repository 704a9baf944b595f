//! Result tables and their persistence.
//!
//! Each run produces one comma-separated table (one row per measured
//! point) and one TOML metadata file carrying the full configuration
//! echo, the seed and the SNR convention, so every number in the table
//! can be regenerated.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::config::SimConfig;

pub const CSV_HEADER: &str = "snr_db,detector,n_i,iters,frames,bits,bit_errors,ber,seconds";

/// One measured point.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub snr_db: f64,
    pub detector: String,
    pub n_i: usize,
    pub iters: usize,
    pub frames: u64,
    pub bits: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub seconds: f64,
}

impl TrialRecord {
    pub fn new(
        snr_db: f64,
        detector: String,
        n_i: usize,
        iters: usize,
        frames: u64,
        bits: u64,
        bit_errors: u64,
        seconds: f64,
    ) -> Self {
        let ber = if bits == 0 {
            0.0
        } else {
            bit_errors as f64 / bits as f64
        };
        Self {
            snr_db,
            detector,
            n_i,
            iters,
            frames,
            bits,
            bit_errors,
            ber,
            seconds,
        }
    }
}

/// Run header persisted next to the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub artifact_version: String,
    pub seed: u64,
    /// The SNR axis convention used throughout.
    pub snr_definition: String,
    pub timestamp_unix: u64,
    pub warnings: Vec<String>,
    pub config: SimConfig,
}

impl RunMeta {
    pub fn new(config: &SimConfig, warnings: Vec<String>) -> Self {
        Self {
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.seed,
            snr_definition: "Es/N0 in dB with Es = 1 (unit-energy constellation); \
                             noise variance per received entry is N0"
                .into(),
            timestamp_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            warnings,
            config: config.clone(),
        }
    }
}

/// A full experiment outcome: metadata plus measured rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub meta: RunMeta,
    pub rows: Vec<TrialRecord>,
}

impl ResultTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.snr_db,
                r.detector,
                r.n_i,
                r.iters,
                r.frames,
                r.bits,
                r.bit_errors,
                r.ber,
                r.seconds
            ));
        }
        out
    }

    /// Parse rows back from [`to_csv`](Self::to_csv) output.
    pub fn parse_csv(text: &str) -> Result<Vec<TrialRecord>> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h == CSV_HEADER => {}
            other => {
                return Err(Error::Parse(format!(
                    "bad csv header: {:?}",
                    other.unwrap_or("")
                )))
            }
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 9 {
                return Err(Error::Parse(format!(
                    "row {}: expected 9 fields, got {}",
                    i + 1,
                    f.len()
                )));
            }
            let err = |what: &str| Error::Parse(format!("row {}: bad {what}", i + 1));
            rows.push(TrialRecord {
                snr_db: f[0].parse().map_err(|_| err("snr_db"))?,
                detector: f[1].to_string(),
                n_i: f[2].parse().map_err(|_| err("n_i"))?,
                iters: f[3].parse().map_err(|_| err("iters"))?,
                frames: f[4].parse().map_err(|_| err("frames"))?,
                bits: f[5].parse().map_err(|_| err("bits"))?,
                bit_errors: f[6].parse().map_err(|_| err("bit_errors"))?,
                ber: f[7].parse().map_err(|_| err("ber"))?,
                seconds: f[8].parse().map_err(|_| err("seconds"))?,
            });
        }
        Ok(rows)
    }
}

/// Persist a table: `results-<id>.csv` and `run-<id>.toml` under `dir`.
///
/// The run id combines the seed and timestamp; existing files are never
/// overwritten (a numeric suffix is added instead).
pub fn write_results(table: &ResultTable, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let base = format!(
        "{:016x}-{}",
        table.meta.seed, table.meta.timestamp_unix
    );
    let mut suffix = 0u32;
    let (csv_path, meta_path) = loop {
        let tag = if suffix == 0 {
            base.clone()
        } else {
            format!("{base}-{suffix}")
        };
        let csv = dir.join(format!("results-{tag}.csv"));
        let meta = dir.join(format!("run-{tag}.toml"));
        if !csv.exists() && !meta.exists() {
            break (csv, meta);
        }
        suffix += 1;
    };
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |e: std::io::Error| Error::Io { path, source: e }
    };
    std::fs::write(&csv_path, table.to_csv()).map_err(io_err(&csv_path))?;
    let meta_text = toml::to_string(&table.meta)
        .map_err(|e| Error::Parse(format!("metadata serialization: {e}")))?;
    std::fs::write(&meta_path, meta_text).map_err(io_err(&meta_path))?;
    Ok((csv_path, meta_path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_table() -> ResultTable {
        let cfg = SimConfig::desk_preset();
        ResultTable {
            meta: RunMeta::new(&cfg, vec!["clamped n_i".into()]),
            rows: vec![
                TrialRecord::new(12.0, "lc-spa".into(), 8, 20, 100, 102400, 37, 1.25),
                TrialRecord::new(18.0, "lc-spa".into(), 8, 20, 250, 256000, 3, 0.75),
            ],
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let table = sample_table();
        let rows = ResultTable::parse_csv(&table.to_csv()).unwrap();
        assert_eq!(rows, table.rows);
    }

    #[test]
    fn empty_table_is_header_only() {
        let mut table = sample_table();
        table.rows.clear();
        assert_eq!(table.to_csv(), format!("{CSV_HEADER}\n"));
        assert!(ResultTable::parse_csv(&table.to_csv()).unwrap().is_empty());
    }

    #[test]
    fn ber_is_exact_ratio() {
        let r = TrialRecord::new(0.0, "lmmse".into(), 1, 1, 10, 1024, 256, 0.0);
        assert_eq!(r.ber, 0.25);
        let r = TrialRecord::new(0.0, "lmmse".into(), 1, 1, 0, 0, 0, 0.0);
        assert_eq!(r.ber, 0.0);
    }

    #[test]
    fn write_results_never_clobbers() {
        let dir = std::env::temp_dir().join(format!("otfs-results-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        let table = sample_table();
        let (csv1, meta1) = write_results(&table, &dir).unwrap();
        let (csv2, meta2) = write_results(&table, &dir).unwrap();
        assert_ne!(csv1, csv2);
        assert_ne!(meta1, meta2);
        assert!(csv1.exists() && csv2.exists() && meta1.exists() && meta2.exists());
        let meta_text = std::fs::read_to_string(&meta1).unwrap();
        let meta: RunMeta = toml::from_str(&meta_text).unwrap();
        assert_eq!(meta, table.meta);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn parse_rejects_malformed_input() {
        assert!(ResultTable::parse_csv("nope\n").is_err());
        let bad = format!("{CSV_HEADER}\n1,2,3\n");
        assert!(ResultTable::parse_csv(&bad).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn csv_round_trips_arbitrary_rows(
                snr in -40.0f64..40.0,
                n_i in 1usize..10_000,
                iters in 1usize..100,
                frames in 0u64..1_000_000,
                bits_per_frame in 1u64..100_000,
                bit_errors in 0u64..1_000_000,
                seconds in 0.0f64..1e6,
            ) {
                let mut table = sample_table();
                table.rows = vec![TrialRecord::new(
                    snr,
                    "lc-spa".into(),
                    n_i,
                    iters,
                    frames,
                    frames * bits_per_frame,
                    bit_errors,
                    seconds,
                )];
                let parsed = ResultTable::parse_csv(&table.to_csv()).unwrap();
                prop_assert_eq!(parsed, table.rows);
            }
        }
    }
}
