//! Frequency-trace container with CSV/JSON serialization.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A frequency sweep of complex S21 (or any complex spectral amplitude),
/// with a provenance map.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumTrace {
    /// Frequency grid in GHz, strictly increasing.
    pub freqs: Vec<f64>,
    /// Complex values, one per frequency.
    pub values: Vec<C64>,
    /// Provenance: method, model hash, normalization constant, flags.
    pub meta: BTreeMap<String, String>,
}

impl SpectrumTrace {
    pub fn new(freqs: Vec<f64>, values: Vec<C64>) -> Result<Self> {
        if freqs.len() != values.len() {
            return Err(Error::InvalidParameter(format!(
                "freqs ({}) and values ({}) length mismatch",
                freqs.len(),
                values.len()
            )));
        }
        if freqs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "frequency grid must be strictly increasing".into(),
            ));
        }
        Ok(SpectrumTrace {
            freqs,
            values,
            meta: BTreeMap::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// |value| at each frequency.
    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    /// 20 log10 |value| at each frequency.
    pub fn magnitudes_db(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|v| 20.0 * v.norm().max(1e-300).log10())
            .collect()
    }

    /// Divide every value by `c` (normalization to a reference maximum).
    pub fn scale(&mut self, c: f64) {
        for v in &mut self.values {
            *v /= c;
        }
        self.meta
            .insert("normalization".into(), format!("{c:.12e}"));
    }

    /// Write `freq_ghz,re,im,mag_db` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "freq_ghz,re,im,mag_db")?;
        for (f, v) in self.freqs.iter().zip(&self.values) {
            let db = 20.0 * v.norm().max(1e-300).log10();
            writeln!(w, "{f},{},{},{db}", v.re, v.im)?;
        }
        Ok(())
    }

    pub fn to_csv_path(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    /// Read a trace written by `write_csv`. meta is left empty.
    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut freqs = Vec::new();
        let mut values = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let f: f64 = rec
                .get(0)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::InvalidParameter("bad freq_ghz field".into()))?;
            let re: f64 = rec
                .get(1)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::InvalidParameter("bad re field".into()))?;
            let im: f64 = rec
                .get(2)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::InvalidParameter("bad im field".into()))?;
            freqs.push(f);
            values.push(C64::new(re, im));
        }
        SpectrumTrace::new(freqs, values)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(f))
    }

    pub fn to_json_path(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(f), self)?;
        Ok(())
    }
}
