//! Row types for every CSV artifact, plus the JSON documents.
//!
//! CSV files have one header line and a fixed column order. Floats are
//! written with 17 significant digits; missing values are empty cells.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use threshold_lab::bounds::WidthReport;
use threshold_lab::verify::SuiteReport;
use threshold_lab::Channel;

/// `f64` as a 17-significant-digit string.
pub mod float17 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn format(x: f64) -> String {
        if x.is_finite() {
            format!("{x:.16e}")
        } else {
            format!("{x}")
        }
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(*x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let s = String::deserialize(d)?;
        s.trim().parse().map_err(serde::de::Error::custom)
    }
}

pub mod opt_float17 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => s.serialize_str(&super::float17::format(*v)),
            None => s.serialize_str(""),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        let s = String::deserialize(d)?;
        match s.trim() {
            "" => Ok(None),
            t => t.parse().map(Some).map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub code: String,
    pub channel: Channel,
    pub mode: String,
    #[serde(with = "float17")]
    pub epsilon: f64,
    #[serde(with = "float17")]
    pub p_map: f64,
    #[serde(with = "opt_float17")]
    pub ci_low: Option<f64>,
    #[serde(with = "opt_float17")]
    pub ci_high: Option<f64>,
    /// `dP/deps`, exact mode only.
    #[serde(with = "opt_float17")]
    pub derivative: Option<f64>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
}

/// Exact failure counts per pattern weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub code: String,
    pub channel: Channel,
    pub n: usize,
    pub k: usize,
    pub weight: usize,
    pub f: u64,
    pub f_ties: u64,
    pub patterns: u128,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightRow {
    pub code: String,
    pub n: usize,
    pub k: usize,
    pub weight: usize,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub code: String,
    pub channel: Channel,
    pub mode: String,
    #[serde(with = "float17")]
    pub epsilon: f64,
    /// Point where the bound formula is evaluated (clamped inside the open domain).
    #[serde(with = "float17")]
    pub epsilon_eval: f64,
    #[serde(with = "float17")]
    pub p_map: f64,
    #[serde(with = "float17")]
    pub eps_star: f64,
    pub side: String,
    pub kind: String,
    pub w: Option<usize>,
    #[serde(with = "opt_float17")]
    pub bound: Option<f64>,
    #[serde(with = "opt_float17")]
    pub bound_raw: Option<f64>,
    pub respects: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExitRow {
    pub code: String,
    pub mode: String,
    #[serde(with = "float17")]
    pub epsilon: f64,
    #[serde(with = "float17")]
    pub exit: f64,
    #[serde(with = "opt_float17")]
    pub exit_derivative: Option<f64>,
    /// `(1/N) sum_{i != j} I(X_i; X_j | Y_~ij)`, exact mode only.
    #[serde(with = "opt_float17")]
    pub pair_mi_mean: Option<f64>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionRow {
    pub code: String,
    pub i: usize,
    pub j: usize,
    pub mode: String,
    #[serde(with = "float17")]
    pub epsilon: f64,
    #[serde(with = "float17")]
    pub q1: f64,
    #[serde(with = "float17")]
    pub q2: f64,
    #[serde(with = "float17")]
    pub q3: f64,
    #[serde(with = "float17")]
    pub q4: f64,
    #[serde(with = "float17")]
    pub q5: f64,
    #[serde(with = "float17")]
    pub eta: f64,
    #[serde(with = "float17")]
    pub alpha: f64,
    #[serde(with = "float17")]
    pub mi: f64,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthDocument {
    pub code: String,
    pub channel: Channel,
    pub mode: String,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub eps_star: f64,
    pub widths: Vec<WidthReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyDocument {
    pub suite: String,
    pub passed: bool,
    pub codes: Vec<String>,
    pub reports: Vec<SuiteReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// `started` until every data file is written, then `complete`.
    pub status: String,
    pub created_at: String,
    pub threads: usize,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub files: Vec<String>,
}

pub fn write_csv<T: Serialize>(out: impl Write, rows: &[T]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(input: impl Read) -> csv::Result<Vec<T>> {
    csv::Reader::from_reader(input).deserialize().collect()
}

pub fn read_csv_file<T: DeserializeOwned>(path: &Path) -> io::Result<Vec<T>> {
    read_csv(File::open(path)?).map_err(io::Error::other)
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable document");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_exactly() {
        for x in [0.0, 0.1, 1.0 / 3.0, 5e-324, 1.0 - f64::EPSILON, 2f64.powf(-1.0 / 3.0), f64::INFINITY] {
            let s = float17::format(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
            assert_eq!(float17::format(s.parse().unwrap()), s);
        }
        assert_eq!(float17::format(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn rows_round_trip() {
        let rows = vec![
            CurveRow {
                code: "rm:1,3".into(),
                channel: Channel::Bsc,
                mode: "mc".into(),
                epsilon: 0.1,
                p_map: 1.0 / 7.0,
                ci_low: Some(0.1),
                ci_high: Some(0.2),
                derivative: None,
                samples: Some(10),
                seed: Some(3),
            },
            CurveRow {
                code: "rep:3".into(),
                channel: Channel::Bec,
                mode: "exact".into(),
                epsilon: 0.0,
                p_map: 0.0,
                ci_low: None,
                ci_high: None,
                derivative: Some(0.0),
                samples: None,
                seed: None,
            },
        ];
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        let back: Vec<CurveRow> = read_csv(&buf[..]).unwrap();
        assert_eq!(back, rows);
        let mut again = Vec::new();
        write_csv(&mut again, &back).unwrap();
        assert_eq!(buf, again);
        assert!(String::from_utf8(buf).unwrap().starts_with("code,channel,mode,epsilon,p_map,ci_low,ci_high,derivative,samples,seed\n"));
    }
}
