use serde::{Deserialize, Serialize};

use crate::phi::{Phi, LAYOUT_VERSION, PHI_DIM};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FingerprintError {
    #[error("feature {index} is not finite ({value})")]
    NonFiniteFeature { index: usize, value: f64 },
}

impl FingerprintError {
    pub fn code(&self) -> &'static str {
        "NonFiniteFeature"
    }
}

/// Unit-norm structural fingerprint `s = phi / |phi|` with `phi` retained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub s: Vec<f64>,
    pub phi: Vec<f64>,
}

impl Fingerprint {
    pub fn dot(&self, other: &[f64]) -> f64 {
        self.s.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "layout_version": LAYOUT_VERSION,
            "fingerprint": self.s,
            "phi": self.phi,
        })
    }
}

/// Normalizes `phi`; the all-zero vector maps to the last basis vector.
pub fn fingerprint(phi: &Phi) -> Result<Fingerprint, FingerprintError> {
    if let Some((index, &value)) = phi.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(FingerprintError::NonFiniteFeature { index, value });
    }
    let norm = phi.iter().map(|v| v * v).sum::<f64>().sqrt();
    let s = if norm == 0.0 {
        let mut e = vec![0.0; PHI_DIM];
        e[PHI_DIM - 1] = 1.0;
        e
    } else {
        phi.iter().map(|v| v / norm).collect()
    };
    Ok(Fingerprint { s, phi: phi.to_vec() })
}
