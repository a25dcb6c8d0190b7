use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::duffing::DuffingCurves;
use super::effective::EffectiveCurves;
use crate::device::{DeviceParams, TruncationConfig};
use crate::error::{Error, Result};

pub const ARTIFACT_VERSION: u32 = 1;

/// Everything needed to rebuild the reduced models without recalibrating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationArtifact {
    pub version: u32,
    pub device: DeviceParams,
    pub device_hash: String,
    pub truncation: TruncationConfig,
    pub harmonic_order: usize,
    pub flux_grid: Vec<f64>,
    pub effective: EffectiveCurves,
    pub duffing: DuffingCurves,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope {
    body: serde_json::Value,
    content_hash: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// SHA-256 of the canonical JSON encoding of `params`.
pub fn device_hash(params: &DeviceParams) -> String {
    sha256_hex(&serde_json::to_vec(params).expect("device parameters serialize"))
}

impl CalibrationArtifact {
    pub fn new(
        device: DeviceParams,
        truncation: TruncationConfig,
        harmonic_order: usize,
        flux_grid: Vec<f64>,
        effective: EffectiveCurves,
        duffing: DuffingCurves,
    ) -> Self {
        let device_hash = device_hash(&device);
        Self {
            version: ARTIFACT_VERSION,
            device,
            device_hash,
            truncation,
            harmonic_order,
            flux_grid,
            effective,
            duffing,
        }
    }

    /// Rejects an artifact calibrated for different device parameters.
    pub fn check_device(&self, params: &DeviceParams) -> Result<()> {
        if self.device_hash != device_hash(params) {
            return Err(Error::ArtifactRejected("calibrated for different device parameters".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let body = serde_json::to_value(self).map_err(|e| Error::ArtifactRejected(e.to_string()))?;
        let content_hash = sha256_hex(body.to_string().as_bytes());
        serde_json::to_string_pretty(&Envelope { body, content_hash })
            .map_err(|e| Error::ArtifactRejected(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let env: Envelope = serde_json::from_str(text).map_err(|e| Error::ArtifactRejected(e.to_string()))?;
        if sha256_hex(env.body.to_string().as_bytes()) != env.content_hash {
            return Err(Error::ArtifactRejected("content hash mismatch".into()));
        }
        let art: Self = serde_json::from_value(env.body).map_err(|e| Error::ArtifactRejected(e.to_string()))?;
        if art.version != ARTIFACT_VERSION {
            return Err(Error::ArtifactRejected(format!("unsupported version {}", art.version)));
        }
        if art.device_hash != device_hash(&art.device) {
            return Err(Error::ArtifactRejected("device hash does not match stored parameters".into()));
        }
        Ok(art)
    }
}

pub fn save_artifact(path: &Path, artifact: &CalibrationArtifact) -> Result<()> {
    std::fs::write(path, artifact.to_json()?).map_err(|e| Error::ArtifactRejected(format!("{}: {e}", path.display())))
}

pub fn load_artifact(path: &Path) -> Result<CalibrationArtifact> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::ArtifactRejected(format!("{}: {e}", path.display())))?;
    CalibrationArtifact::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::{HarmonicFit, InteractionFit};
    use crate::device::PerQubit;

    fn sample() -> CalibrationArtifact {
        let h = |v: f64| HarmonicFit { order: 1, c0: v, cos: vec![0.1], sin: vec![-0.2], rms_residual: 1e-6 };
        CalibrationArtifact::new(
            DeviceParams::default(),
            TruncationConfig::default(),
            1,
            vec![0.0, 0.1, 0.2],
            EffectiveCurves {
                omega_tilde: PerQubit::new(h(8.0), h(9.7)),
                j_fit: InteractionFit::Harmonic(h(0.001)),
                zeta_fit: InteractionFit::Harmonic(h(-0.0001)),
            },
            DuffingCurves { omega: PerQubit::new(h(8.0), h(9.7)), alpha: PerQubit::new(h(-0.35), h(-0.33)) },
        )
    }

    #[test]
    fn round_trip() {
        let a = sample();
        let back = CalibrationArtifact::from_json(&a.to_json().unwrap()).unwrap();
        assert_eq!(a, back);
        assert!(back.check_device(&DeviceParams::default()).is_ok());
        let mut other = DeviceParams::default();
        other.g.q1 = 0.2;
        assert!(back.check_device(&other).is_err());
    }

    #[test]
    fn tampering_rejected() {
        let text = sample().to_json().unwrap().replace("9.7", "9.8");
        let err = CalibrationArtifact::from_json(&text).unwrap_err();
        assert!(matches!(err, Error::ArtifactRejected(_)), "{err}");
    }
}
