use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which transmon. `Q1` is flux tunable; `Q0` sits at zero flux.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Qubit {
    Q1,
    Q0,
}

impl Qubit {
    pub const BOTH: [Qubit; 2] = [Qubit::Q1, Qubit::Q0];

    /// Position in the `|q1, c, q0>` ordering.
    pub fn slot(self) -> usize {
        match self {
            Qubit::Q1 => 0,
            Qubit::Q0 => 2,
        }
    }

    pub fn other(self) -> Qubit {
        match self {
            Qubit::Q1 => Qubit::Q0,
            Qubit::Q0 => Qubit::Q1,
        }
    }
}

impl fmt::Display for Qubit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Qubit::Q1 => "q1",
            Qubit::Q0 => "q0",
        })
    }
}

/// One value per transmon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PerQubit<T> {
    pub q1: T,
    pub q0: T,
}

impl<T> PerQubit<T> {
    pub fn new(q1: T, q0: T) -> Self {
        Self { q1, q0 }
    }

    pub fn get(&self, j: Qubit) -> &T {
        match j {
            Qubit::Q1 => &self.q1,
            Qubit::Q0 => &self.q0,
        }
    }

    pub fn get_mut(&mut self, j: Qubit) -> &mut T {
        match j {
            Qubit::Q1 => &mut self.q1,
            Qubit::Q0 => &mut self.q0,
        }
    }

    pub fn map<U>(&self, mut f: impl FnMut(Qubit, &T) -> U) -> PerQubit<U> {
        PerQubit { q1: f(Qubit::Q1, &self.q1), q0: f(Qubit::Q0, &self.q0) }
    }

    pub fn try_map<U>(&self, mut f: impl FnMut(Qubit, &T) -> Result<U>) -> Result<PerQubit<U>> {
        Ok(PerQubit { q1: f(Qubit::Q1, &self.q1)?, q0: f(Qubit::Q0, &self.q0)? })
    }
}

/// Physical constants of the two transmons, the bus and their couplings.
/// Energies in GHz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceParams {
    pub ej_max: PerQubit<f64>,
    pub ec: PerQubit<f64>,
    /// SQUID junction asymmetry.
    pub d: PerQubit<f64>,
    /// Offset charge in Cooper pairs.
    pub n_g: PerQubit<f64>,
    pub omega_c: f64,
    /// Bus linewidth. Kept for completeness; the dynamics are closed-system.
    pub kappa: f64,
    pub g: PerQubit<f64>,
}

impl Default for DeviceParams {
    fn default() -> Self {
        Self {
            ej_max: PerQubit::new(28.48, 42.34),
            ec: PerQubit::new(0.317, 0.297),
            d: PerQubit::new(0.0, 0.0),
            n_g: PerQubit::new(0.0, 0.0),
            omega_c: 6.902,
            kappa: 0.001,
            g: PerQubit::new(0.183, 0.199),
        }
    }
}

impl DeviceParams {
    /// Same device with both qubit-bus couplings switched off.
    pub fn decoupled(&self) -> Self {
        Self { g: PerQubit::new(0.0, 0.0), ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.omega_c, self.kappa]
            .into_iter()
            .chain(Qubit::BOTH.iter().flat_map(|&j| {
                [*self.ej_max.get(j), *self.ec.get(j), *self.d.get(j), *self.n_g.get(j), *self.g.get(j)]
            }))
            .all(f64::is_finite);
        if !all_finite {
            return Err(Error::InvalidParameter("device parameters must be finite".into()));
        }
        for j in Qubit::BOTH {
            if *self.ej_max.get(j) <= 0.0 {
                return Err(Error::InvalidParameter(format!("ej_max.{j} must be positive")));
            }
            if *self.ec.get(j) <= 0.0 {
                return Err(Error::InvalidParameter(format!("ec.{j} must be positive")));
            }
            if *self.g.get(j) < 0.0 {
                return Err(Error::InvalidParameter(format!("g.{j} must be non-negative")));
            }
            let d = *self.d.get(j);
            if !(0.0..1.0).contains(&d) {
                return Err(Error::InvalidParameter(format!("d.{j} must lie in [0, 1), got {d}")));
            }
            let ratio = self.ej_max.get(j) / self.ec.get(j);
            if ratio <= 10.0 {
                log::warn!("{j}: ej_max/ec = {ratio:.2} is outside the transmon regime");
            }
        }
        if self.omega_c <= 0.0 {
            return Err(Error::InvalidParameter("omega_c must be positive".into()));
        }
        Ok(())
    }
}

/// Basis sizes for the multilevel models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TruncationConfig {
    /// Charge states per transmon, `2 ncut + 1`.
    pub n_q: usize,
    /// Transmon eigenstates kept.
    pub n_eq: usize,
    /// Bus levels in the circuit model.
    pub n_ec: usize,
    /// Levels per Duffing mode.
    pub n_duff: usize,
    /// Duffing bus levels when they should differ from `n_duff`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_duff_c: Option<usize>,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        Self { n_q: 23, n_eq: 9, n_ec: 6, n_duff: 3, n_duff_c: None }
    }
}

impl TruncationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_q < 3 || self.n_q % 2 == 0 {
            return Err(Error::ChargeBasisNotSymmetric(self.n_q));
        }
        if self.n_eq < 2 || self.n_eq > self.n_q {
            return Err(Error::InvalidParameter(format!("n_eq = {} must lie in [2, n_q = {}]", self.n_eq, self.n_q)));
        }
        if self.n_ec < 2 {
            return Err(Error::InvalidParameter(format!("n_ec = {} must be at least 2", self.n_ec)));
        }
        if self.n_duff < 2 || self.n_duff_c.is_some_and(|c| c < 2) {
            return Err(Error::InvalidParameter("Duffing modes need at least 2 levels".into()));
        }
        Ok(())
    }

    pub fn duffing_coupler_levels(&self) -> usize {
        self.n_duff_c.unwrap_or(self.n_duff)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_table_values() {
        let p = DeviceParams::default();
        assert_eq!(p.ej_max, PerQubit::new(28.48, 42.34));
        assert_eq!(p.ec, PerQubit::new(0.317, 0.297));
        assert_eq!(p.g, PerQubit::new(0.183, 0.199));
        assert_eq!(p.omega_c, 6.902);
        assert_eq!(p.kappa, 0.001);
        assert!(p.validate().is_ok());
        let t = TruncationConfig::default();
        assert_eq!((t.n_q, t.n_eq, t.n_ec, t.n_duff), (23, 9, 6, 3));
    }

    #[test]
    fn validation_rejects_bad_values() {
        let mut p = DeviceParams::default();
        p.d.q1 = 1.0;
        assert!(p.validate().is_err());
        let mut p = DeviceParams::default();
        p.ec.q0 = 0.0;
        assert!(p.validate().is_err());
        let t = TruncationConfig { n_q: 22, ..Default::default() };
        assert!(t.validate().unwrap_err().to_string().starts_with("charge basis must be symmetric"));
        let t = TruncationConfig { n_eq: 25, ..Default::default() };
        assert!(t.validate().is_err());
    }
}
