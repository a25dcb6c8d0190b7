use std::path::Path;

use pulsesim_core::calibration::{
    calibrate_duffing, calibrate_effective, circuit_sweep, load_artifact, CalibrationArtifact, DuffingRecord,
    InteractionFit, StaticExtraction,
};
use pulsesim_core::device::{Curves, ModelKind};
use pulsesim_core::dynamics::ModelFamily;

use crate::config::RunConfig;
use crate::error::BenchError;
use crate::output::Table;

pub const ARTIFACT_FILE: &str = "calibration.json";

/// Calibrated reduced models plus whatever static data produced them.
#[derive(Debug, Clone)]
pub struct Calibrated {
    pub artifact: CalibrationArtifact,
    /// Circuit extraction on the calibration grid; absent when the artifact
    /// was loaded from disk.
    pub circuit: Option<Vec<StaticExtraction>>,
    pub duffing_records: Option<Vec<DuffingRecord>>,
}

impl Calibrated {
    pub fn curves(&self) -> Curves<'_> {
        Curves::Both(&self.artifact.effective, &self.artifact.duffing)
    }

    pub fn family(&self, kind: ModelKind) -> ModelFamily<'_> {
        ModelFamily::new(kind, &self.artifact.device, self.curves(), &self.artifact.truncation)
    }

    /// Whether this calibration was produced from `cfg`'s device, truncation
    /// and flux grid.
    pub fn matches(&self, cfg: &RunConfig) -> bool {
        let a = &self.artifact;
        a.check_device(&cfg.device).is_ok()
            && a.truncation == cfg.truncation.production
            && a.harmonic_order == cfg.sweep.harmonic_order
            && a.flux_grid == cfg.sweep.grid()
    }

    /// Fit residuals of every calibrated curve.
    pub fn residual_table(&self) -> Table {
        let mut t = Table::new("calibration_residuals", &["model", "quantity", "form", "rms_residual_GHz"]);
        let e = &self.artifact.effective;
        let d = &self.artifact.duffing;
        let form = |f: &InteractionFit| match f {
            InteractionFit::Surrogate(_) => "surrogate",
            InteractionFit::Harmonic(_) => "harmonic",
        };
        let mut row = |model: &str, quantity: &str, form: &str, rms: f64| {
            t.push([model.to_string(), quantity.to_string(), form.to_string(), fmt(rms)]);
        };
        row("effective", "omega_q1", "harmonic", e.omega_tilde.q1.rms_residual);
        row("effective", "omega_q0", "harmonic", e.omega_tilde.q0.rms_residual);
        row("effective", "J", form(&e.j_fit), e.j_fit.rms_residual());
        row("effective", "zeta", form(&e.zeta_fit), e.zeta_fit.rms_residual());
        for (name, fit) in
            [("omega_q1", &d.omega.q1), ("omega_q0", &d.omega.q0), ("alpha_q1", &d.alpha.q1), ("alpha_q0", &d.alpha.q0)]
        {
            row("duffing", name, "harmonic", fit.rms_residual);
        }
        t
    }

    pub fn duffing_table(&self) -> Option<Table> {
        let records = self.duffing_records.as_ref()?;
        let mut t = Table::new(
            "duffing_refinement",
            &["phi", "objective_before_GHz2", "objective_after_GHz2", "dzeta_before_GHz", "dzeta_after_GHz", "flagged"],
        );
        for r in records {
            t.push([
                fmt(r.phi),
                fmt(r.objective_before),
                fmt(r.objective_after),
                fmt(r.zeta_error_before),
                fmt(r.zeta_error_after),
                r.flagged.to_string(),
            ]);
        }
        Some(t)
    }
}

pub fn fmt(x: f64) -> String {
    format!("{x}")
}

/// Circuit sweep, effective fits, then Duffing refinement and fits.
pub fn run_calibrate(cfg: &RunConfig) -> Result<Calibrated, BenchError> {
    let grid = cfg.sweep.grid();
    let trunc = cfg.truncation.production;
    let order = cfg.sweep.harmonic_order;
    let sweep = circuit_sweep(&cfg.device, &trunc, &grid).map_err(BenchError::Calibration)?;
    let circuit: Vec<StaticExtraction> = sweep.into_iter().map(|p| p.extraction).collect();
    let effective = calibrate_effective(&circuit, order, cfg.device.omega_c).map_err(BenchError::Calibration)?;
    let duffing = calibrate_duffing(&cfg.device, &trunc, &circuit, order).map_err(BenchError::Calibration)?;
    let artifact = CalibrationArtifact::new(cfg.device.clone(), trunc, order, grid, effective, duffing.curves);
    Ok(Calibrated { artifact, circuit: Some(circuit), duffing_records: Some(duffing.records) })
}

/// Reuses a matching artifact from `dir` when one exists, otherwise calibrates.
pub fn load_or_calibrate(cfg: &RunConfig, dir: &Path) -> Result<Calibrated, BenchError> {
    let path = dir.join(ARTIFACT_FILE);
    if path.exists() {
        match load_artifact(&path) {
            Ok(artifact) => {
                let cal = Calibrated { artifact, circuit: None, duffing_records: None };
                if cal.matches(cfg) {
                    log::info!("reusing calibration from {}", path.display());
                    return Ok(cal);
                }
                log::info!("{} was calibrated for a different configuration", path.display());
            }
            Err(e) => log::warn!("ignoring {}: {e}", path.display()),
        }
    }
    run_calibrate(cfg)
}
