use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use pulsesim_core::calibration::flux_grid;
use pulsesim_core::device::{DeviceParams, TruncationConfig};
use pulsesim_core::dynamics::DriveFrame;

use crate::error::BenchError;

/// Full run configuration. Every section and key is optional; defaults are
/// the production device and truncation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Time step for all gate simulations, ns.
    pub dt: f64,
    /// Recorded for provenance. The pipeline itself is deterministic.
    pub seed: u64,
    pub device: DeviceParams,
    pub truncation: TruncationSection,
    pub sweep: SweepSection,
    pub rx: RxSection,
    pub cz: CzSection,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dt: 0.002,
            seed: 0,
            device: DeviceParams::default(),
            truncation: TruncationSection::default(),
            sweep: SweepSection::default(),
            rx: RxSection::default(),
            cz: CzSection::default(),
            output: OutputSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TruncationSection {
    pub production: TruncationConfig,
    /// Highly resolved circuit truncation used as the convergence reference.
    pub reference: TruncationConfig,
    /// Flux points averaged over in the convergence study.
    pub study_flux: Vec<f64>,
    pub n_q_values: Vec<usize>,
    pub n_eq_values: Vec<usize>,
    pub n_ec_values: Vec<usize>,
    pub n_duff_values: Vec<usize>,
    /// Qubit truncations timed by the runtime benchmark.
    pub runtime_n_eq: Vec<usize>,
}

impl Default for TruncationSection {
    fn default() -> Self {
        Self {
            production: TruncationConfig::default(),
            reference: TruncationConfig { n_q: 31, n_eq: 11, n_ec: 8, n_duff: 3, n_duff_c: None },
            study_flux: vec![0.0, 0.1, 0.2, 0.233],
            n_q_values: vec![9, 11, 13, 15, 17, 19, 21, 23, 25],
            n_eq_values: vec![3, 4, 5, 6, 7, 8, 9, 10],
            n_ec_values: vec![2, 3, 4, 5, 6, 7],
            n_duff_values: vec![2, 3, 4, 5, 6],
            runtime_n_eq: vec![4, 5, 6, 7, 8, 9],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub flux_min: f64,
    pub flux_max: f64,
    pub flux_points: usize,
    pub harmonic_order: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { flux_min: 0.0, flux_max: 0.45, flux_points: 101, harmonic_order: 4 }
    }
}

impl SweepSection {
    pub fn grid(&self) -> Vec<f64> {
        flux_grid(self.flux_points, self.flux_min, self.flux_max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RxSection {
    /// Peak drive amplitude, GHz.
    pub amplitude: f64,
    /// Envelope area in GHz ns; 0.5 is a pi rotation.
    pub area: f64,
    pub ramp: f64,
    /// Carrier frequency, GHz. Defaults to the dressed q0 frequency at idle.
    pub carrier: Option<f64>,
    pub phase: f64,
    pub idle_flux: f64,
    pub drive_frame: DriveFrame,
}

impl Default for RxSection {
    fn default() -> Self {
        Self {
            amplitude: 0.02,
            area: 0.5,
            ramp: 2.0,
            carrier: None,
            phase: 0.0,
            idle_flux: 0.0,
            drive_frame: DriveFrame::Lab,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CzSection {
    pub idle_flux: f64,
    pub target_flux: f64,
    pub ramp: f64,
    /// Flat duration, ns. Defaults to `1 / (2 |zeta|)` of the effective model
    /// at the target flux.
    pub hold: Option<f64>,
    /// Length of the leakage-analysis run, ns.
    pub leakage_window: f64,
    /// Window for the dominant early current, ns.
    pub early_window: f64,
    pub tracking_threshold: f64,
    /// Coarser step for the runtime benchmark, ns.
    pub runtime_dt: f64,
    pub runtime_repeats: usize,
}

impl Default for CzSection {
    fn default() -> Self {
        Self {
            idle_flux: 0.0,
            target_flux: 0.233,
            ramp: 2.0,
            hold: None,
            leakage_window: 20.0,
            early_window: 2.0,
            tracking_threshold: 0.005,
            runtime_dt: 0.05,
            runtime_repeats: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("results") }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, BenchError> {
        let cfg: Self = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let cfg = |m: String| Err(BenchError::Config(m));
        self.device.validate().map_err(|e| BenchError::Config(e.to_string()))?;
        for t in [&self.truncation.production, &self.truncation.reference] {
            t.validate().map_err(|e| BenchError::Config(e.to_string()))?;
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return cfg(format!("dt must be positive, got {}", self.dt));
        }
        let s = &self.sweep;
        if s.flux_points < 2 || !(s.flux_max > s.flux_min) {
            return cfg("sweep needs flux_points >= 2 and flux_max > flux_min".into());
        }
        if 2 * s.harmonic_order + 1 > s.flux_points {
            return cfg(format!(
                "{} flux points cannot fix a harmonic fit of order {}",
                s.flux_points, s.harmonic_order
            ));
        }
        let (r, p) = (&self.truncation.reference, &self.truncation.production);
        let t = &self.truncation;
        let exceeds = |values: &[usize], limit: usize| values.iter().any(|&v| v > limit);
        if exceeds(&t.n_q_values, r.n_q) || exceeds(&t.n_eq_values, r.n_eq) || exceeds(&t.n_ec_values, r.n_ec) {
            return cfg("reference truncation must be at least every swept value".into());
        }
        if r.n_q < p.n_q || r.n_eq < p.n_eq || r.n_ec < p.n_ec {
            return cfg("reference truncation must be at least the production truncation".into());
        }
        if t.study_flux.is_empty() {
            return cfg("truncation study needs at least one flux point".into());
        }
        if !(self.rx.amplitude > 0.0 && self.rx.area > 0.0 && self.rx.ramp >= 0.0) {
            return cfg("rx needs amplitude > 0, area > 0, ramp >= 0".into());
        }
        let c = &self.cz;
        if !(c.ramp >= 0.0 && c.leakage_window > 2.0 * c.ramp && c.early_window > 0.0) {
            return cfg("cz needs ramp >= 0 and leakage_window longer than both ramps".into());
        }
        if c.hold.is_some_and(|h| !(h > 0.0)) || !(c.runtime_dt > 0.0) || c.runtime_repeats < 3 {
            return cfg("cz hold and runtime_dt must be positive, runtime_repeats at least 3".into());
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("config serializes")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(
            cfg.truncation.production,
            TruncationConfig { n_q: 23, n_eq: 9, n_ec: 6, n_duff: 3, n_duff_c: None }
        );
        assert_eq!(cfg.device.ej_max.q1, 28.48);
        assert_eq!(cfg.device.g.q0, 0.199);
    }

    #[test]
    fn sections_parse() {
        let text = r#"
            dt = 0.001
            [device]
            omega_c = 7.0
            g = { q1 = 0.0, q0 = 0.0 }
            [truncation.production]
            n_q = 21
            [rx]
            drive_frame = "envelope"
            [output]
            dir = "out"
        "#;
        let cfg = RunConfig::from_toml(text).unwrap();
        assert_eq!(cfg.dt, 0.001);
        assert_eq!(cfg.device.omega_c, 7.0);
        assert_eq!(cfg.truncation.production.n_q, 21);
        assert_eq!(cfg.truncation.production.n_eq, 9);
        assert_eq!(cfg.rx.drive_frame, DriveFrame::Envelope);
        assert_eq!(cfg.output.dir, PathBuf::from("out"));
    }

    #[test]
    fn unknown_keys_rejected() {
        for text in ["bogus = 1", "[device]\nej = 3.0", "[extra]\nx = 1", "[cz]\nhold_time = 3.0"] {
            assert!(matches!(RunConfig::from_toml(text), Err(BenchError::Config(_))), "{text}");
        }
    }

    #[test]
    fn invalid_values_rejected() {
        for text in
            ["dt = -1.0", "[truncation.production]\nn_q = 22", "[sweep]\nflux_points = 5", "[cz]\nleakage_window = 3.0"]
        {
            assert!(matches!(RunConfig::from_toml(text), Err(BenchError::Config(_))), "{text}");
        }
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }
}
