use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use pulsesim_bench::calibrate::{fmt, ARTIFACT_FILE};
use pulsesim_bench::gates::{cz_table, run_cz_benchmark, run_rx_benchmark, rx_table};
use pulsesim_bench::leakage::{currents_table, populations_table, run_leakage_analysis};
use pulsesim_bench::output::{OutputWriter, Table};
use pulsesim_bench::runtime::{run_runtime_benchmark, runtime_table};
use pulsesim_bench::statics::{convergence_table, mean_rmse, run_static_sweep, run_truncation_study, sweep_table};
use pulsesim_bench::{load_or_calibrate, run_calibrate, BenchError, Calibrated, RunConfig};
use pulsesim_core::device::ModelKind;
use pulsesim_core::dynamics::DriveFrame;

/// Long series are thinned to every this-many samples in the CSV output.
const SERIES_STRIDE: usize = 10;

#[derive(Parser)]
#[command(name = "pulsesim", version, about = "Static and pulse-level benchmarks for a two-transmon bus device")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Circuit sweep and fits of the reduced models; writes the artifact.
    Calibrate,
    /// Energies, J and zeta of all models across the flux grid.
    StaticSweep,
    /// Convergence of the static quantities with each truncation.
    Truncation,
    /// Driven q0 rotation with the spectator in |0> and |1>.
    Rx,
    /// Flux-pulse CZ from |++>.
    Cz,
    /// Populations and currents from |1,0,1> in the multilevel models.
    Leakage,
    /// Build and propagation time against qubit truncation.
    Runtime,
    /// Every benchmark in turn.
    All,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides [output] dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    flux_min: Option<f64>,
    #[arg(long, global = true)]
    flux_max: Option<f64>,
    #[arg(long, global = true)]
    flux_points: Option<usize>,
    /// Gate simulation time step, ns.
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[arg(long, global = true, value_parser = parse_frame)]
    drive_frame: Option<DriveFrame>,
}

fn parse_frame(s: &str) -> Result<DriveFrame, String> {
    s.parse().map_err(|e: pulsesim_core::Error| e.to_string())
}

fn load_config(common: &Common) -> Result<RunConfig, BenchError> {
    let path = common.config.as_ref().ok_or_else(|| BenchError::Config("--config <path> is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(v) = &common.out {
        cfg.output.dir = v.clone();
    }
    if let Some(v) = common.flux_min {
        cfg.sweep.flux_min = v;
    }
    if let Some(v) = common.flux_max {
        cfg.sweep.flux_max = v;
    }
    if let Some(v) = common.flux_points {
        cfg.sweep.flux_points = v;
    }
    if let Some(v) = common.dt {
        cfg.dt = v;
    }
    if let Some(v) = common.drive_frame {
        cfg.rx.drive_frame = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

struct Session {
    cfg: RunConfig,
    out: OutputWriter,
    cal: Option<Calibrated>,
    failures: Vec<BenchError>,
}

impl Session {
    fn calibrated(&mut self) -> Result<&Calibrated, BenchError> {
        if self.cal.is_none() {
            self.cal = Some(load_or_calibrate(&self.cfg, self.out.dir())?);
        }
        Ok(self.cal.as_ref().expect("just set"))
    }

    fn write(&self, table: &Table, extra: serde_json::Value) -> Result<(), BenchError> {
        let path = self.out.write(table, extra)?;
        log::info!("wrote {}", path.display());
        Ok(())
    }

    fn calibrate(&mut self) -> Result<(), BenchError> {
        let cal = run_calibrate(&self.cfg)?;
        let json = cal.artifact.to_json().map_err(BenchError::Calibration)?;
        self.out.write_bytes(ARTIFACT_FILE, json.as_bytes())?;
        self.write(&cal.residual_table(), json!(null))?;
        if let Some(t) = cal.duffing_table() {
            self.write(&t, json!(null))?;
        }
        let e = &cal.artifact.effective;
        println!(
            "calibration: J fit rms {:.3e} GHz, zeta fit rms {:.3e} GHz",
            e.j_fit.rms_residual(),
            e.zeta_fit.rms_residual()
        );
        self.cal = Some(cal);
        Ok(())
    }

    fn static_sweep(&mut self) -> Result<(), BenchError> {
        let cfg = self.cfg.clone();
        let rows = run_static_sweep(&cfg, self.calibrated()?);
        for r in rows.iter().filter(|r| r.flagged()) {
            eprintln!("flux {}: {}", r.phi, r.errors.join("; "));
        }
        self.write(&sweep_table(&rows), json!({ "rmse_reference": "circuit" }))?;
        for kind in [ModelKind::Effective, ModelKind::Duffing] {
            println!("static sweep: mean spectral RMSE {kind} {:.3e} GHz", mean_rmse(&rows, kind));
        }
        Ok(())
    }

    fn truncation(&mut self) -> Result<(), BenchError> {
        let cfg = self.cfg.clone();
        let curves = self.calibrated()?.artifact.duffing.clone();
        let rows = run_truncation_study(&cfg, Some(&curves))?;
        self.write(
            &convergence_table(&rows),
            json!({ "reference": cfg.truncation.reference, "study_flux": cfg.truncation.study_flux }),
        )?;
        for r in rows.iter().filter(|r| r.production) {
            println!("truncation: production {} = {} rmse {:.3e} GHz", r.axis, r.value, r.rmse);
        }
        Ok(())
    }

    fn rx(&mut self) -> Result<(), BenchError> {
        let cfg = self.cfg.clone();
        let frame = cfg.rx.drive_frame;
        let bench = run_rx_benchmark(&cfg, self.calibrated()?, frame, cfg.dt)?;
        let extra = json!({ "drive_frame": frame, "carrier_GHz": bench.carrier, "dt_ns": cfg.dt });
        let mut summary = Table::new(
            "rx_summary",
            &[
                "model",
                "final_P_00_to_01",
                "final_P_10_to_11",
                "max_mismatch",
                "max_leakage_spectator0",
                "max_leakage_spectator1",
            ],
        );
        for (kind, run) in bench.runs {
            match run {
                Ok(run) => {
                    self.write(&rx_table(&run, &bench.schedule), extra.clone())?;
                    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
                    summary.push([
                        kind.to_string(),
                        fmt(*run.transfer.from_00.last().expect("nonempty")),
                        fmt(*run.transfer.from_10.last().expect("nonempty")),
                        fmt(run.transfer.max_mismatch()),
                        fmt(max(&run.leakage[0])),
                        fmt(max(&run.leakage[1])),
                    ]);
                }
                Err(e) => self.fail(e),
            }
        }
        self.write(&summary, extra)
    }

    fn cz(&mut self) -> Result<(), BenchError> {
        let cfg = self.cfg.clone();
        let bench = run_cz_benchmark(&cfg, self.calibrated()?, cfg.dt)?;
        let extra = json!({ "hold_ns": bench.hold, "target_flux": cfg.cz.target_flux, "dt_ns": cfg.dt, "stride": SERIES_STRIDE });
        let mut summary = Table::new(
            "cz_summary",
            &["model", "final_phi_cz_rad", "flat_phi_cz_rad", "linearity_dev_over_pi", "max_leakage"],
        );
        for (kind, run) in bench.runs {
            match run {
                Ok(run) => {
                    self.write(&cz_table(&run, &bench.schedule, SERIES_STRIDE), extra.clone())?;
                    summary.push([
                        kind.to_string(),
                        fmt(run.phase.final_conditional()),
                        fmt(run.flat_phase),
                        fmt(run.linearity),
                        fmt(run.leakage.iter().copied().fold(0.0, f64::max)),
                    ]);
                }
                Err(e) => self.fail(e),
            }
        }
        self.write(&summary, extra)
    }

    fn leakage(&mut self) -> Result<(), BenchError> {
        let cfg = self.cfg.clone();
        let runs = run_leakage_analysis(&cfg, self.calibrated()?)?;
        let extra = json!({ "initial_state": "|1,0,1>", "tracking_threshold": cfg.cz.tracking_threshold, "window_ns": cfg.cz.leakage_window });
        let mut summary = Table::new(
            "leakage_summary",
            &["model", "tracked_states", "dominant_early_channel", "continuity_defect", "continuity_tolerance"],
        );
        for (kind, run) in runs {
            match run {
                Ok(run) => {
                    self.write(&populations_table(&run, SERIES_STRIDE), extra.clone())?;
                    self.write(&currents_table(&run, SERIES_STRIDE), extra.clone())?;
                    let tracked: Vec<String> = run.record.tracked.iter().map(|l| l.to_string()).collect();
                    summary.push([
                        kind.to_string(),
                        tracked.join(" "),
                        run.dominant_early.map_or("none".into(), |l| l.to_string()),
                        fmt(run.continuity_defect),
                        fmt(run.continuity_tolerance),
                    ]);
                }
                Err(e) => self.fail(e),
            }
        }
        self.write(&summary, extra)
    }

    fn runtime(&mut self) -> Result<(), BenchError> {
        let cfg = self.cfg.clone();
        let rows = run_runtime_benchmark(&cfg, self.calibrated()?)?;
        self.write(
            &runtime_table(&rows),
            json!({ "dt_ns": cfg.cz.runtime_dt, "repeats": cfg.cz.runtime_repeats, "statistic": "median" }),
        )
    }

    fn fail(&mut self, e: BenchError) {
        eprintln!("error: {e}");
        self.failures.push(e);
    }
}

fn run(cli: Cli) -> Result<(), BenchError> {
    let cfg = load_config(&cli.common)?;
    let out = OutputWriter::new(&cfg.output.dir, cfg.hash())?;
    let mut s = Session { cfg, out, cal: None, failures: Vec::new() };
    match cli.command {
        Command::Calibrate => s.calibrate()?,
        Command::StaticSweep => s.static_sweep()?,
        Command::Truncation => s.truncation()?,
        Command::Rx => s.rx()?,
        Command::Cz => s.cz()?,
        Command::Leakage => s.leakage()?,
        Command::Runtime => s.runtime()?,
        Command::All => {
            s.calibrate()?;
            s.static_sweep()?;
            s.truncation()?;
            s.rx()?;
            s.cz()?;
            s.leakage()?;
            s.runtime()?;
        }
    }
    match s.failures.into_iter().next() {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
