use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::device::Qubit;
use crate::error::{Error, Result};

/// How the drive phase advances during a schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriveFrame {
    /// `theta_k = 2 pi f t_k + theta` in the laboratory frame.
    Lab,
    /// Constant `theta`, with the drift written in the frame rotating at the
    /// carrier on every excitation.
    Envelope,
}

impl fmt::Display for DriveFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DriveFrame::Lab => "lab",
            DriveFrame::Envelope => "envelope",
        })
    }
}

impl FromStr for DriveFrame {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lab" => Ok(DriveFrame::Lab),
            "envelope" => Ok(DriveFrame::Envelope),
            other => Err(Error::InvalidParameter(format!("unknown drive frame {other:?}"))),
        }
    }
}

/// Flat-top pulse with raised-cosine ramps, `base` outside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RampedPulse {
    pub base: f64,
    pub peak: f64,
    pub ramp: f64,
    pub flat: f64,
}

impl RampedPulse {
    pub fn duration(&self) -> f64 {
        2.0 * self.ramp + self.flat
    }

    pub fn at(&self, t: f64) -> f64 {
        let rise = |s: f64| 0.5 * (1.0 - (PI * s / self.ramp).cos());
        let h = self.peak - self.base;
        if t < 0.0 || t > self.duration() {
            self.base
        } else if t < self.ramp {
            self.base + h * rise(t)
        } else if t <= self.ramp + self.flat {
            self.peak
        } else {
            self.base + h * rise(self.duration() - t)
        }
    }

    /// Integral of `at(t) - base` over the pulse.
    pub fn area(&self) -> f64 {
        (self.peak - self.base) * (self.flat + self.ramp)
    }
}

/// Piecewise-constant controls on a uniform grid. Sample `k` holds the
/// control value at the step midpoint `(k + 1/2) dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    pub dt: f64,
    pub flux: Vec<f64>,
    pub amp: Vec<f64>,
    pub carrier_freq: f64,
    pub phase: f64,
    pub target: Option<Qubit>,
    /// Flux at which the computational frame is defined.
    pub idle_flux: f64,
    flux_shape: Option<RampedPulse>,
    amp_shape: Option<RampedPulse>,
}

/// Steps needed to cover `duration`; exact multiples of `dt` are not rounded up
/// by representation error.
pub fn step_count(duration: f64, dt: f64) -> usize {
    let x = duration / dt;
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

impl PulseSchedule {
    pub fn new(
        dt: f64,
        flux: Vec<f64>,
        amp: Vec<f64>,
        carrier_freq: f64,
        phase: f64,
        target: Option<Qubit>,
    ) -> Result<Self> {
        let idle_flux = flux.first().copied().unwrap_or(0.0);
        let s = Self { dt, flux, amp, carrier_freq, phase, target, idle_flux, flux_shape: None, amp_shape: None };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if self.flux.is_empty() {
            return Err(Error::InvalidParameter("schedule needs at least one step".into()));
        }
        if self.flux.len() != self.amp.len() {
            return Err(Error::ScheduleMismatch("flux and amplitude sample counts differ".into()));
        }
        let finite = self.flux.iter().chain(&self.amp).chain([&self.carrier_freq, &self.phase]).all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("schedule samples must be finite".into()));
        }
        if self.amp.iter().any(|&a| a != 0.0) && self.target.is_none() {
            return Err(Error::InvalidParameter("nonzero drive needs a target qubit".into()));
        }
        Ok(())
    }

    /// Free evolution at constant flux.
    pub fn constant(phi: f64, duration: f64, dt: f64) -> Result<Self> {
        if !(duration > 0.0) {
            return Err(Error::InvalidParameter("duration must be positive".into()));
        }
        let k = step_count(duration, dt);
        Self::new(dt, vec![phi; k], vec![0.0; k], 0.0, 0.0, None)
    }

    pub fn steps(&self) -> usize {
        self.flux.len()
    }

    pub fn duration(&self) -> f64 {
        self.steps() as f64 * self.dt
    }

    /// Start of step `k`.
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn midpoint(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.dt
    }

    /// Drive phase for step `k` in `frame`.
    pub fn drive_phase(&self, k: usize, frame: DriveFrame) -> f64 {
        match frame {
            DriveFrame::Lab => std::f64::consts::TAU * self.carrier_freq * self.midpoint(k) + self.phase,
            DriveFrame::Envelope => self.phase,
        }
    }

    /// Flux at time `t`: the continuous pulse shape when known, otherwise the
    /// sample covering `t`.
    pub fn flux_at(&self, t: f64) -> f64 {
        match &self.flux_shape {
            Some(shape) => shape.at(t),
            None => {
                let k = ((t / self.dt).floor().max(0.0) as usize).min(self.steps() - 1);
                self.flux[k]
            }
        }
    }

    pub fn amp_at(&self, t: f64) -> f64 {
        match &self.amp_shape {
            Some(shape) => shape.at(t),
            None => {
                let k = ((t / self.dt).floor().max(0.0) as usize).min(self.steps() - 1);
                self.amp[k]
            }
        }
    }

    pub fn flux_shape(&self) -> Option<&RampedPulse> {
        self.flux_shape.as_ref()
    }

    pub fn amp_shape(&self) -> Option<&RampedPulse> {
        self.amp_shape.as_ref()
    }

    /// Midpoint-rule area of the drive envelope, `sum_k amp_k dt`.
    pub fn envelope_area(&self) -> f64 {
        self.amp.iter().sum::<f64>() * self.dt
    }

    pub fn has_drive(&self) -> bool {
        self.amp.iter().any(|&a| a != 0.0)
    }

    /// Same pulse resampled on a grid of `dt / factor`.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        let dt = self.dt / factor as f64;
        let k = self.steps() * factor;
        let mut s = self.clone();
        s.dt = dt;
        s.flux = (0..k)
            .map(|i| match &self.flux_shape {
                Some(shape) => shape.at((i as f64 + 0.5) * dt),
                None => self.flux[i / factor],
            })
            .collect();
        s.amp = (0..k)
            .map(|i| match &self.amp_shape {
                Some(shape) => shape.at((i as f64 + 0.5) * dt),
                None => self.amp[i / factor],
            })
            .collect();
        s.validate()?;
        Ok(s)
    }

    /// True when both schedules have the same grid and controls.
    pub fn same_controls(&self, other: &Self) -> bool {
        self.dt == other.dt
            && self.flux == other.flux
            && self.amp == other.amp
            && self.carrier_freq == other.carrier_freq
            && self.phase == other.phase
            && self.target == other.target
    }
}

fn sample(shape: &RampedPulse, k: usize, dt: f64) -> Vec<f64> {
    (0..k).map(|i| shape.at((i as f64 + 0.5) * dt)).collect()
}

/// Flux excursion from `phi_idle` to `phi_target` with raised-cosine ramps
/// of `ramp` ns and a `hold` ns plateau.
pub fn make_flux_pulse(phi_idle: f64, phi_target: f64, ramp: f64, hold: f64, dt: f64) -> Result<PulseSchedule> {
    if !(ramp >= 0.0) || !(hold > 0.0) || !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "flux pulse needs ramp >= 0, hold > 0, dt > 0 (got {ramp}, {hold}, {dt})"
        )));
    }
    let shape = RampedPulse { base: phi_idle, peak: phi_target, ramp, flat: hold };
    let k = step_count(shape.duration(), dt);
    let mut s = PulseSchedule::new(dt, sample(&shape, k, dt), vec![0.0; k], 0.0, 0.0, None)?;
    s.idle_flux = phi_idle;
    s.flux_shape = Some(shape);
    Ok(s)
}

/// Flat-top drive envelope on `target` at constant flux `phi_idle`.
#[allow(clippy::too_many_arguments)]
pub fn make_drive_pulse(
    amp_peak: f64,
    ramp: f64,
    flat: f64,
    carrier_freq: f64,
    theta: f64,
    dt: f64,
    target: Qubit,
    phi_idle: f64,
) -> Result<PulseSchedule> {
    if !(amp_peak >= 0.0) || !(ramp >= 0.0) || !(flat >= 0.0) || !(ramp + flat > 0.0) || !(dt > 0.0) {
        return Err(Error::InvalidParameter(
            "drive pulse needs amp >= 0, ramp >= 0, flat >= 0, positive length".into(),
        ));
    }
    let shape = RampedPulse { base: 0.0, peak: amp_peak, ramp, flat };
    let k = step_count(shape.duration(), dt);
    let mut s = PulseSchedule::new(dt, vec![phi_idle; k], sample(&shape, k, dt), carrier_freq, theta, Some(target))?;
    s.idle_flux = phi_idle;
    s.amp_shape = Some(shape);
    Ok(s)
}

/// Flat duration that keeps the envelope area at `area` for the given peak
/// and ramp, `area / amp_peak - ramp`.
pub fn flat_for_area(area: f64, amp_peak: f64, ramp: f64) -> Result<f64> {
    let flat = area / amp_peak - ramp;
    if !(flat >= 0.0) {
        return Err(Error::InvalidParameter(format!("area {area} unreachable with peak {amp_peak} and ramp {ramp}")));
    }
    Ok(flat)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rectangular_flux_pulse() {
        let s = make_flux_pulse(0.0, 0.233, 0.0, 10.0, 0.5).unwrap();
        assert_eq!(s.steps(), 20);
        assert!(s.flux.iter().all(|&f| f == 0.233));
    }

    #[test]
    fn identity_pulse_is_constant() {
        let s = make_flux_pulse(0.1, 0.1, 2.0, 5.0, 0.01).unwrap();
        assert!(s.flux.iter().all(|&f| f == 0.1));
    }

    #[test]
    fn ramp_midpoint() {
        let s = make_flux_pulse(0.0, 0.233, 2.0, 100.0, 0.002).unwrap();
        assert!((s.flux_at(1.0) - 0.1165).abs() < 1e-15);
        assert!((s.flux_at(2.0 + 100.0 + 1.0) - 0.1165).abs() < 1e-12);
        assert_eq!(s.steps(), 52000);
    }

    #[test]
    fn zero_amplitude_is_free_evolution() {
        let s = make_drive_pulse(0.0, 2.0, 10.0, 5.0, 0.0, 0.01, Qubit::Q0, 0.0).unwrap();
        assert!(!s.has_drive());
    }

    #[test]
    fn rectangular_pi_area() {
        let s = make_drive_pulse(0.05, 0.0, 10.0, 5.0, 0.0, 0.002, Qubit::Q0, 0.0).unwrap();
        assert!((s.envelope_area() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn default_rx_area_by_quadrature() {
        let flat = flat_for_area(0.5, 0.02, 2.0).unwrap();
        assert!((flat - 23.0).abs() < 1e-12);
        let s = make_drive_pulse(0.02, 2.0, flat, 9.7, 0.0, 0.002, Qubit::Q0, 0.0).unwrap();
        assert_eq!(s.steps(), 13500);
        assert!((s.envelope_area() - 0.5).abs() < 1e-9, "{}", s.envelope_area());
        assert!((s.amp_shape().unwrap().area() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn refinement_preserves_shape() {
        let s = make_flux_pulse(0.0, 0.2, 2.0, 3.0, 0.01).unwrap();
        let r = s.refined(2).unwrap();
        assert_eq!(r.steps(), 2 * s.steps());
        assert_eq!(r.dt, 0.005);
        assert!((r.flux[r.steps() / 2] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn invalid_inputs() {
        assert!(make_flux_pulse(0.0, 0.2, -1.0, 3.0, 0.01).is_err());
        assert!(make_flux_pulse(0.0, 0.2, 1.0, 0.0, 0.01).is_err());
        assert!(PulseSchedule::new(0.0, vec![0.0], vec![0.0], 0.0, 0.0, None).is_err());
        assert!(PulseSchedule::new(0.1, vec![0.0], vec![0.1], 0.0, 0.0, None).is_err());
    }
}
