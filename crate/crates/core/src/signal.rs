//! Sampled complex baseband signals and their raw capture format.
//!
//! On disk a signal is two files: interleaved little-endian `f32` I/Q pairs
//! (`*.cf32`) and a JSON sidecar next to it (same stem, `.json`) carrying the
//! sample rate and the time of sample 0.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BasebandSignal {
    pub samples: Vec<Complex64>,
    /// Hz.
    pub sample_rate: f64,
    /// Seconds; time of `samples[0]`.
    pub origin_time: f64,
}

impl BasebandSignal {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64, origin_time: f64) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::param(
                "sample_rate",
                format!("must be positive and finite, got {sample_rate}"),
            ));
        }
        if !origin_time.is_finite() {
            return Err(Error::param("origin_time", "must be finite"));
        }
        if let Some(i) = samples.iter().position(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(Error::param("samples", format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate,
            origin_time,
        })
    }

    pub fn zeros(len: usize, sample_rate: f64) -> Self {
        Self {
            samples: vec![Complex64::new(0.0, 0.0); len],
            sample_rate,
            origin_time: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_period(&self) -> f64 {
        1.0 / self.sample_rate
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Mean of |x|^2.
    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    /// Copy of `samples[start..end]` with the origin moved accordingly.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        Self {
            samples: self.samples[start..end].to_vec(),
            sample_rate: self.sample_rate,
            origin_time: self.origin_time + start as f64 / self.sample_rate,
        }
    }

    pub fn scaled(&self, gain: Complex64) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s * gain).collect(),
            sample_rate: self.sample_rate,
            origin_time: self.origin_time,
        }
    }

    /// Interleaved little-endian f32 I/Q.
    pub fn to_cf32_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.samples.len() * 8);
        for s in &self.samples {
            out.extend_from_slice(&(s.re as f32).to_le_bytes());
            out.extend_from_slice(&(s.im as f32).to_le_bytes());
        }
        out
    }

    pub fn samples_from_cf32_bytes(bytes: &[u8]) -> std::result::Result<Vec<Complex64>, String> {
        if !bytes.len().is_multiple_of(8) {
            return Err(format!(
                "length {} is not a whole number of 8-byte I/Q pairs",
                bytes.len()
            ));
        }
        Ok(bytes
            .chunks_exact(8)
            .map(|pair| {
                let re = f32::from_le_bytes([pair[0], pair[1], pair[2], pair[3]]);
                let im = f32::from_le_bytes([pair[4], pair[5], pair[6], pair[7]]);
                Complex64::new(f64::from(re), f64::from(im))
            })
            .collect())
    }

    /// Writes `path` (raw I/Q) and its sidecar.
    pub fn write_capture(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_cf32_bytes()).map_err(|e| Error::io(path, e))?;
        let meta = CaptureMeta {
            format: CaptureMeta::FORMAT.to_string(),
            sample_rate: self.sample_rate,
            origin_time: self.origin_time,
            sample_count: self.samples.len(),
        };
        let sidecar = sidecar_path(path);
        let json = serde_json::to_string_pretty(&meta).expect("sidecar serializes");
        std::fs::write(&sidecar, json).map_err(|e| Error::io(&sidecar, e))
    }

    pub fn read_capture(path: &Path) -> Result<Self> {
        let sidecar = sidecar_path(path);
        let text = std::fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
        let meta: CaptureMeta =
            serde_json::from_str(&text).map_err(|e| Error::format(&sidecar, e.to_string()))?;
        if meta.format != CaptureMeta::FORMAT {
            return Err(Error::format(
                &sidecar,
                format!("unsupported sample format `{}`", meta.format),
            ));
        }
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let samples = Self::samples_from_cf32_bytes(&bytes).map_err(|r| Error::format(path, r))?;
        if samples.len() != meta.sample_count {
            return Err(Error::format(
                path,
                format!(
                    "sidecar declares {} samples, file holds {}",
                    meta.sample_count,
                    samples.len()
                ),
            ));
        }
        Self::new(samples, meta.sample_rate, meta.origin_time)
            .map_err(|e| Error::format(path, e.to_string()))
    }
}

/// JSON sidecar for a raw capture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptureMeta {
    pub format: String,
    pub sample_rate: f64,
    pub origin_time: f64,
    pub sample_count: usize,
}

impl CaptureMeta {
    pub const FORMAT: &'static str = "cf32_le";
}

/// `capture.cf32` -> `capture.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_rate() {
        assert!(BasebandSignal::new(vec![], 0.0, 0.0).is_err());
        assert!(BasebandSignal::new(vec![], f64::NAN, 0.0).is_err());
        assert!(BasebandSignal::new(vec![Complex64::new(f64::INFINITY, 0.0)], 1.0, 0.0).is_err());
    }

    #[test]
    fn capture_round_trip_is_f32_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cap.cf32");
        let sig = BasebandSignal::new(
            vec![Complex64::new(0.5, -0.25), Complex64::new(1.0, 3.0)],
            2e6,
            -1.5e-6,
        )
        .unwrap();
        sig.write_capture(&path).unwrap();
        assert!(dir.path().join("cap.json").exists());
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 16);
        let back = BasebandSignal::read_capture(&path).unwrap();
        assert_eq!(back, sig);
    }

    #[test]
    fn truncated_capture_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cap.cf32");
        BasebandSignal::zeros(4, 1.0).write_capture(&path).unwrap();
        std::fs::write(&path, [0u8; 12]).unwrap();
        let err = BasebandSignal::read_capture(&path).unwrap_err();
        assert!(err.to_string().contains("8-byte"), "{err}");
    }
}
