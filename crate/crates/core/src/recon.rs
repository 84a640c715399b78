//! Direct-sum embedding reconstruction and baseline-norm identifiability.
//!
//! A device's reconstructed embedding is
//!
//! ```text
//! v̂_d = s_A ⊕ s_B ⊕ (mean_A, std_A, mean_B, std_B)
//! ```
//!
//! where `s_A`, `s_B` are the two agents' trust series over `T + 1` steps, so
//! `dim v̂_d = 2(T + 1) + 4`. The trailing statistics are a deterministic
//! function of the leading series, which makes the reconstruction map
//! [`reconstruction_map`] a projection.
//!
//! Under Gaussian observation noise the mean centred similarity concentrates
//! at `f(‖b‖) = ‖b‖ / √(‖b‖² + mσ²)`. [`estimate_baseline_norm`] inverts `f`.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::sim::DeviceId;

/// Number of trailing summary features in a reconstructed embedding.
pub const STAT_FEATURES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub mean: f64,
    /// Population standard deviation (divisor `n`).
    pub std: f64,
    pub median: f64,
    pub iqr: f64,
}

pub fn summary_stats(series: &[f64]) -> Result<SummaryStats> {
    let n = series.len();
    if n < 2 {
        return Err(Error::Input(format!("series needs at least 2 values, got {n}")));
    }
    let mean = mean(series);
    let var = series.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    let mut sorted = series.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    let iqr = (quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25)).max(0.0);
    Ok(SummaryStats {
        mean,
        std: var.sqrt(),
        median,
        iqr,
    })
}

fn mean(series: &[f64]) -> f64 {
    series.iter().sum::<f64>() / series.len() as f64
}

/// Linear-interpolation (type 7) quantile of an ascending slice.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `[series_A | series_B | mean_A, std_A, mean_B, std_B]` for one device.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructedEmbedding {
    pub device_id: DeviceId,
    features: Vec<f64>,
}

pub type EmbeddingMatrix = BTreeMap<DeviceId, ReconstructedEmbedding>;

impl ReconstructedEmbedding {
    /// Wraps raw features, checking only the shape `2(T + 1) + 4` with
    /// `T + 1 ≥ 2`. The trailing statistics are not checked.
    pub fn from_features(device_id: DeviceId, features: Vec<f64>) -> Result<Self> {
        let len = features.len();
        if len < 2 * 2 + STAT_FEATURES || (len - STAT_FEATURES) % 2 != 0 {
            return Err(Error::Input(format!(
                "device {device_id}: {len} features is not of the form 2(T+1)+4 with T+1 >= 2"
            )));
        }
        Ok(Self {
            device_id,
            features,
        })
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn dim(&self) -> usize {
        self.features.len()
    }

    /// `T + 1`.
    pub fn series_len(&self) -> usize {
        (self.features.len() - STAT_FEATURES) / 2
    }

    pub fn series_a(&self) -> &[f64] {
        &self.features[..self.series_len()]
    }

    pub fn series_b(&self) -> &[f64] {
        let n = self.series_len();
        &self.features[n..2 * n]
    }

    /// `(mean_A, std_A, mean_B, std_B)` as stored.
    pub fn stats(&self) -> [f64; STAT_FEATURES] {
        let n = 2 * self.series_len();
        [
            self.features[n],
            self.features[n + 1],
            self.features[n + 2],
            self.features[n + 3],
        ]
    }

    /// Whether the stored statistics equal those recomputed from the series.
    pub fn is_self_consistent(&self) -> bool {
        match reconstruct_embedding(self.device_id, self.series_a(), self.series_b()) {
            Ok(fresh) => fresh.stats() == self.stats(),
            Err(_) => false,
        }
    }
}

pub fn reconstruct_embedding(
    device_id: DeviceId,
    series_a: &[f64],
    series_b: &[f64],
) -> Result<ReconstructedEmbedding> {
    if series_a.len() != series_b.len() {
        return Err(Error::Input(format!(
            "device {device_id}: series lengths differ ({} vs {})",
            series_a.len(),
            series_b.len()
        )));
    }
    let a = summary_stats(series_a)?;
    let b = summary_stats(series_b)?;
    let mut features = Vec::with_capacity(2 * series_a.len() + STAT_FEATURES);
    features.extend_from_slice(series_a);
    features.extend_from_slice(series_b);
    features.extend_from_slice(&[a.mean, a.std, b.mean, b.std]);
    Ok(ReconstructedEmbedding {
        device_id,
        features,
    })
}

/// Keeps the series segments and recomputes the summary statistics.
/// Applying it twice gives the same result as applying it once.
pub fn reconstruction_map(matrix: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
    matrix
        .iter()
        .map(|(&id, e)| {
            if e.features.len() < 2 * 2 + STAT_FEATURES || (e.features.len() - STAT_FEATURES) % 2 != 0 {
                return Err(Error::Input(format!("device {id}: malformed embedding dimension")));
            }
            Ok((id, reconstruct_embedding(id, e.series_a(), e.series_b())?))
        })
        .collect()
}

/// `f(x) = x / √(x² + mσ²)`.
pub fn f_similarity(norm: f64, m: usize, sigma: f64) -> Result<f64> {
    if !(norm >= 0.0 && norm.is_finite()) {
        return Err(Error::Domain(format!("norm {norm} must be finite and non-negative")));
    }
    if m == 0 || !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::Domain(format!("need m >= 1 and sigma >= 0 (m = {m}, sigma = {sigma})")));
    }
    let denom = (norm * norm + m as f64 * sigma * sigma).sqrt();
    if denom == 0.0 {
        return Err(Error::Domain("f undefined at norm = 0 with sigma = 0".into()));
    }
    Ok(norm / denom)
}

/// Analytic inverse of [`f_similarity`]: `y·σ·√m / √(1 − y²)`.
pub fn estimate_baseline_norm(mean_centred_sim: f64, m: usize, sigma: f64) -> Result<f64> {
    let y = mean_centred_sim;
    if y.is_nan() || y < 0.0 {
        return Err(Error::Domain(format!(
            "mean centred similarity {y} is negative; the noise model does not apply"
        )));
    }
    if y >= 1.0 {
        return Err(Error::Domain(format!(
            "mean centred similarity {y} >= 1; the norm estimate diverges"
        )));
    }
    if m == 0 || !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Domain(format!("need m >= 1 and sigma > 0 (m = {m}, sigma = {sigma})")));
    }
    Ok(y * sigma * (m as f64).sqrt() / ((1.0 - y) * (1.0 + y)).sqrt())
}

/// Baseline-norm estimate from one agent's trust series: `y = 2·mean(τ) − 1`.
pub fn estimate_norm_from_series(series: &[f64], m: usize, sigma: f64) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::Input("empty trust series".into()));
    }
    estimate_baseline_norm(2.0 * mean(series) - 1.0, m, sigma)
}

/// `‖estimated − truth‖₂ / √n`.
pub fn rmse_features(estimated: &[f64], truth: &[f64]) -> Result<f64> {
    if estimated.len() != truth.len() {
        return Err(Error::Input(format!(
            "length mismatch: {} vs {}",
            estimated.len(),
            truth.len()
        )));
    }
    if estimated.is_empty() {
        return Err(Error::Input("rmse of empty vectors".into()));
    }
    let sq: f64 = estimated.iter().zip(truth).map(|(e, t)| (e - t).powi(2)).sum();
    Ok((sq / estimated.len() as f64).sqrt())
}

/// Publishes a degraded copy of a score series: Gaussian noise, then rounding
/// to the nearest multiple of `quantisation_step` (0 disables rounding), then
/// clamping to `[0, 1]`.
pub fn obfuscate_scores<R: Rng + ?Sized>(
    series: &[f64],
    noise_std: f64,
    quantisation_step: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(Error::Input(format!("noise_std {noise_std} must be non-negative")));
    }
    if !(quantisation_step >= 0.0 && quantisation_step.is_finite()) {
        return Err(Error::Input(format!(
            "quantisation step {quantisation_step} must be non-negative"
        )));
    }
    let noise = Normal::new(0.0, noise_std).expect("validated above");
    Ok(series
        .iter()
        .map(|&x| {
            let mut v = if noise_std > 0.0 { x + noise.sample(rng) } else { x };
            if quantisation_step > 0.0 {
                v = (v / quantisation_step).round() * quantisation_step;
            }
            v.clamp(0.0, 1.0)
        })
        .collect())
}
