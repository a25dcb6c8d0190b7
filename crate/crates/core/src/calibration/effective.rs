use serde::{Deserialize, Serialize};

use super::extract::StaticExtraction;
use super::fit::{fit_harmonic, HarmonicFit, InteractionFit};
use super::{require_coverage, samples};
use crate::device::{EffectivePoint, PerQubit};
use crate::error::Result;

/// Flux-dependent parameters of the four-level model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveCurves {
    pub omega_tilde: PerQubit<HarmonicFit>,
    pub j_fit: InteractionFit,
    pub zeta_fit: InteractionFit,
}

impl EffectiveCurves {
    pub fn at(&self, phi: f64) -> EffectivePoint {
        EffectivePoint {
            omega_tilde: self.omega_tilde.map(|_, f| f.eval(phi)),
            j_coupling: self.j_fit.eval(phi),
            zeta: self.zeta_fit.eval(phi),
        }
    }
}

/// Harmonic fits of the dressed frequencies; surrogate fits of `J` and
/// `zeta` against the fitted `q1` detuning from the bus.
pub fn calibrate_effective(sweep: &[StaticExtraction], order: usize, omega_c: f64) -> Result<EffectiveCurves> {
    require_coverage(sweep, order)?;
    let omega_tilde =
        PerQubit::new((), ()).try_map(|j, _| fit_harmonic(&samples(sweep, |x| *x.omega_tilde.get(j)), order))?;
    let j_fit = InteractionFit::fit(&samples(sweep, |x| x.j_coupling), &omega_tilde.q1, omega_c, order)?;
    let zeta_fit = InteractionFit::fit(&samples(sweep, |x| x.zeta), &omega_tilde.q1, omega_c, order)?;
    Ok(EffectiveCurves { omega_tilde, j_fit, zeta_fit })
}
