//! Run configuration: one JSON file describes the crystal, the qubit-loaded
//! lattice, the probe ports and the sweep grid, so every output artifact is
//! reproducible from its config alone (no randomness, no wall-clock state).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::crystal::UnitCell;
use crate::error::{Error, Result};
use crate::lattice::{hopping_coefficients, LatticeModel, LossParams, QubitSpec};
use crate::transmission::WaveguidePorts;

/// Uniform frequency grid for sweeps (GHz).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub f_start: f64,
    pub f_stop: f64,
    pub n_points: usize,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if !self.f_start.is_finite() || !self.f_stop.is_finite() || self.f_start >= self.f_stop {
            return Err(Error::InvalidParameter(format!(
                "sweep: f_start ({}) must be finite and below f_stop ({})",
                self.f_start, self.f_stop
            )));
        }
        if self.n_points < 2 {
            return Err(Error::InvalidParameter(format!(
                "sweep.n_points must be at least 2, got {}",
                self.n_points
            )));
        }
        Ok(())
    }
}

fn default_band_index() -> usize {
    2
}

fn default_hopping_range() -> usize {
    5
}

/// Complete experiment description. Fully deterministic: two runs from the
/// same config produce byte-identical outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub unit_cell: UnitCell,
    pub n_cells: usize,
    pub qubits: Vec<QubitSpec>,
    pub losses: LossParams,
    pub ports: WaveguidePorts,
    pub sweep: SweepGrid,
    /// Which crystal band feeds the hopping model (1-based).
    #[serde(default = "default_band_index")]
    pub band_index: usize,
    /// Longest hopping range retained in the lattice model.
    #[serde(default = "default_hopping_range")]
    pub hopping_range: usize,
}

impl ExperimentConfig {
    /// The device configuration studied throughout: 16 cells, two transmons
    /// on neighboring central sites.
    pub fn reference_device() -> Self {
        ExperimentConfig {
            unit_cell: UnitCell::reference(),
            n_cells: 16,
            qubits: vec![
                QubitSpec {
                    site: 8,
                    omega01: 4.5,
                    delta: 0.365,
                    g: 0.505,
                    n_levels: 3,
                },
                QubitSpec {
                    site: 9,
                    omega01: 7.9875,
                    delta: 0.365,
                    g: 0.55,
                    n_levels: 3,
                },
            ],
            losses: LossParams {
                kappa: 1.0,
                kappa0: 0.004,
                kappa_q: 0.0005,
            },
            ports: WaveguidePorts::default(),
            sweep: SweepGrid {
                f_start: 7.0,
                f_stop: 8.6,
                n_points: 3201,
            },
            band_index: 2,
            hopping_range: 5,
        }
    }

    /// Field-by-field validation; every failure names the offending field.
    pub fn validate(&self) -> Result<()> {
        self.unit_cell
            .validate()
            .map_err(|e| Error::InvalidParameter(format!("unit_cell: {e}")))?;
        if self.n_cells == 0 {
            return Err(Error::InvalidParameter(
                "n_cells must be at least 1".into(),
            ));
        }
        if self.band_index == 0 {
            return Err(Error::InvalidParameter(
                "band_index is 1-based and must be at least 1".into(),
            ));
        }
        if self.hopping_range == 0 {
            return Err(Error::InvalidParameter(
                "hopping_range must be at least 1".into(),
            ));
        }
        self.losses
            .validate()
            .map_err(|e| Error::InvalidParameter(format!("losses: {e}")))?;
        self.ports
            .validate()
            .map_err(|e| Error::InvalidParameter(format!("ports: {e}")))?;
        self.sweep
            .validate()
            .map_err(|e| Error::InvalidParameter(format!("sweep: {e}")))?;
        for (i, q) in self.qubits.iter().enumerate() {
            if q.site == 0 || q.site > self.n_cells {
                return Err(Error::InvalidParameter(format!(
                    "qubits[{i}].site must be in 1..={}, got {}",
                    self.n_cells, q.site
                )));
            }
            if !(q.omega01 > 0.0) || !(q.delta >= 0.0) || !(q.g >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "qubits[{i}]: omega01 must be positive, delta and g non-negative"
                )));
            }
            if !(2..=5).contains(&q.n_levels) {
                return Err(Error::InvalidParameter(format!(
                    "qubits[{i}].n_levels must be in 2..=5, got {}",
                    q.n_levels
                )));
            }
        }
        let mut sites: Vec<usize> = self.qubits.iter().map(|q| q.site).collect();
        sites.sort_unstable();
        sites.dedup();
        if sites.len() != self.qubits.len() {
            return Err(Error::InvalidParameter(
                "qubits: two qubits share a site".into(),
            ));
        }
        Ok(())
    }

    /// Derive the qubit-loaded hopping model from the crystal description.
    pub fn build_model(&self) -> Result<LatticeModel> {
        self.validate()?;
        let hoppings = hopping_coefficients(&self.unit_cell, self.band_index, self.hopping_range)?;
        LatticeModel::new(
            self.n_cells,
            hoppings,
            self.qubits.clone(),
            self.losses,
        )
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_device_validates_and_builds() {
        let cfg = ExperimentConfig::reference_device();
        cfg.validate().unwrap();
        let m = cfg.build_model().unwrap();
        assert_eq!(m.n_sites, 16);
        assert_eq!(m.qubits.len(), 2);
    }

    #[test]
    fn json_round_trip_is_stable() {
        let cfg = ExperimentConfig::reference_device();
        let text = cfg.to_json_pretty().unwrap();
        let back = ExperimentConfig::from_json_str(&text).unwrap();
        assert_eq!(back, cfg);
        // byte-stable re-serialization (determinism requirement)
        assert_eq!(back.to_json_pretty().unwrap(), text);
    }

    #[test]
    fn validation_names_offending_field() {
        let mut cfg = ExperimentConfig::reference_device();
        cfg.qubits[1].site = 40;
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("qubits[1].site"), "message was: {msg}");

        let mut cfg = ExperimentConfig::reference_device();
        cfg.sweep.n_points = 1;
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("n_points"), "message was: {msg}");

        let mut cfg = ExperimentConfig::reference_device();
        cfg.qubits[0].site = 9; // collides with qubit 1
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("share a site"), "message was: {msg}");
    }

    #[test]
    fn unknown_fields_rejected() {
        let mut v: serde_json::Value =
            serde_json::from_str(&ExperimentConfig::reference_device().to_json_pretty().unwrap())
                .unwrap();
        v.as_object_mut()
            .unwrap()
            .insert("bogus".into(), serde_json::json!(1));
        assert!(ExperimentConfig::from_json_str(&v.to_string()).is_err());
    }
}
