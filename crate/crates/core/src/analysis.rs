//! Pairwise distances, inter-agent agreement and the replicate benchmark.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pipeline;
use crate::recon::EmbeddingMatrix;
use crate::sim::{cosine, DeviceId, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    #[default]
    Euclidean,
    /// `1 − cos(u, v)`.
    CosineDissimilarity,
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "cosine" | "cosine-dissimilarity" => Ok(Metric::CosineDissimilarity),
            other => Err(Error::Input(format!(
                "unknown metric `{other}` (expected `euclidean` or `cosine`)"
            ))),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Euclidean => "euclidean",
            Metric::CosineDissimilarity => "cosine",
        })
    }
}

/// Square table of distances between devices, rows and columns in
/// `device_ids` order.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    device_ids: Vec<DeviceId>,
    values: Vec<Vec<f64>>,
}

impl DistanceMatrix {
    /// Checks only that `values` is `n × n` for `n` ids.
    pub fn new(device_ids: Vec<DeviceId>, values: Vec<Vec<f64>>) -> Result<Self> {
        let n = device_ids.len();
        if values.len() != n || values.iter().any(|row| row.len() != n) {
            return Err(Error::Data(format!("distance matrix is not {n}x{n}")));
        }
        Ok(Self { device_ids, values })
    }

    pub fn device_ids(&self) -> &[DeviceId] {
        &self.device_ids
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    pub fn len(&self) -> usize {
        self.device_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.device_ids.is_empty()
    }

    /// Exact symmetry and zero diagonal.
    pub fn is_symmetric(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| self.values[i][i] == 0.0 && (0..i).all(|j| self.values[i][j] == self.values[j][i]))
    }
}

pub fn pairwise_distances(embeddings: &EmbeddingMatrix, metric: Metric) -> Result<DistanceMatrix> {
    if embeddings.is_empty() {
        return Err(Error::Input("no embeddings".into()));
    }
    let rows: Vec<&[f64]> = embeddings.values().map(|e| e.features()).collect();
    let dim = rows[0].len();
    if let Some((id, e)) = embeddings.iter().find(|(_, e)| e.dim() != dim) {
        return Err(Error::Input(format!(
            "device {id} has dimension {}, expected {dim}",
            e.dim()
        )));
    }
    let n = rows.len();
    let mut values = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = match metric {
                Metric::Euclidean => rows[i]
                    .iter()
                    .zip(rows[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt(),
                Metric::CosineDissimilarity => (1.0 - cosine(rows[i], rows[j])?).max(0.0),
            };
            values[i][j] = d;
            values[j][i] = d;
        }
    }
    DistanceMatrix::new(embeddings.keys().copied().collect(), values)
}

/// Mean of the `N(N − 1)` off-diagonal entries.
pub fn mean_offdiagonal(matrix: &DistanceMatrix) -> Result<f64> {
    let n = matrix.len();
    if n < 2 {
        return Err(Error::Input(format!("need at least 2 devices, got {n}")));
    }
    let total: f64 = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| matrix.get(i, j))
        .sum();
    Ok(total / (n * (n - 1)) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentStatsRow {
    pub device_id: DeviceId,
    pub mean_a: f64,
    pub std_a: f64,
    pub mean_b: f64,
    pub std_b: f64,
}

/// Pearson correlation, or `Degenerate` when either side has zero variance
/// or there are fewer than two points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Correlation {
    Value(f64),
    Degenerate,
}

impl Correlation {
    pub fn value(self) -> Option<f64> {
        match self {
            Correlation::Value(v) => Some(v),
            Correlation::Degenerate => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentComparison {
    pub rows: Vec<AgentStatsRow>,
    /// Correlation of `mean_a` against `mean_b` across devices.
    pub correlation: Correlation,
}

impl AgentComparison {
    pub fn max_mean_gap(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.mean_a - r.mean_b).abs())
            .fold(0.0, f64::max)
    }
}

pub fn pearson(x: &[f64], y: &[f64]) -> Correlation {
    if x.len() != y.len() || x.len() < 2 {
        return Correlation::Degenerate;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Correlation::Degenerate;
    }
    Correlation::Value((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

pub fn agent_mean_comparison(embeddings: &EmbeddingMatrix) -> AgentComparison {
    let rows: Vec<AgentStatsRow> = embeddings
        .values()
        .map(|e| {
            let [mean_a, std_a, mean_b, std_b] = e.stats();
            AgentStatsRow {
                device_id: e.device_id,
                mean_a,
                std_a,
                mean_b,
                std_b,
            }
        })
        .collect();
    let xs: Vec<f64> = rows.iter().map(|r| r.mean_a).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mean_b).collect();
    AgentComparison {
        correlation: pearson(&xs, &ys),
        rows,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicateEntry {
    /// 1-based replicate index.
    pub replicate: usize,
    pub seed: u64,
    pub mean_offdiag: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateReport {
    pub entries: Vec<ReplicateEntry>,
}

impl ReplicateReport {
    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.mean_offdiag).collect()
    }

    pub fn mean(&self) -> f64 {
        self.values().iter().sum::<f64>() / self.entries.len() as f64
    }

    /// `max / min` of the replicate values.
    pub fn spread_ratio(&self) -> f64 {
        let v = self.values();
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        max / min
    }

    /// `(max − min) / mean` of the replicate values.
    pub fn relative_spread(&self) -> f64 {
        let v = self.values();
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        (max - min) / self.mean()
    }
}

/// Repeats the two-agent pipeline with seeds `base + r·stride` and records
/// each run's mean off-diagonal Euclidean distance.
pub fn replicate_benchmark(
    base_cfg: &SimConfig,
    replicates: usize,
    seed_stride: u64,
) -> Result<ReplicateReport> {
    if replicates < 1 {
        return Err(Error::Input("replicates must be at least 1".into()));
    }
    base_cfg.validate()?;
    let entries = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let seed = base_cfg
                .seed
                .wrapping_add((r as u64).wrapping_mul(seed_stride));
            let cfg = SimConfig { seed, ..base_cfg.clone() };
            let embeddings = pipeline::simulate_embeddings(&cfg)?;
            let matrix = pairwise_distances(&embeddings, Metric::Euclidean)?;
            Ok(ReplicateEntry {
                replicate: r + 1,
                seed,
                mean_offdiag: mean_offdiagonal(&matrix)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReplicateReport { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recon::{reconstruct_embedding, ReconstructedEmbedding};

    fn matrix_of(rows: &[Vec<f64>]) -> EmbeddingMatrix {
        rows.iter()
            .enumerate()
            .map(|(i, f)| (i as u64, ReconstructedEmbedding::from_features(i as u64, f.clone()).unwrap()))
            .collect()
    }

    #[test]
    fn identical_embeddings_have_zero_distances() {
        let e = reconstruct_embedding(0, &[0.9, 0.8], &[0.7, 0.95]).unwrap();
        let m: EmbeddingMatrix = (0..4)
            .map(|i| (i, ReconstructedEmbedding::from_features(i, e.features().to_vec()).unwrap()))
            .collect();
        for metric in [Metric::Euclidean, Metric::CosineDissimilarity] {
            let d = pairwise_distances(&m, metric).unwrap();
            assert!(d.rows().iter().flatten().all(|&v| v.abs() < 1e-15), "{metric}");
        }
    }

    #[test]
    fn three_four_five() {
        let mut a = vec![0.0; 8];
        let mut b = vec![0.0; 8];
        a[0] = 0.0;
        b[0] = 3.0;
        b[1] = 4.0;
        a[2] = 1.0;
        b[2] = 1.0;
        let d = pairwise_distances(&matrix_of(&[a, b]), Metric::Euclidean).unwrap();
        assert_eq!(d.get(0, 1), 5.0);
        assert_eq!(d.get(1, 0), 5.0);
        assert_eq!(mean_offdiagonal(&d).unwrap(), 5.0);
    }

    #[test]
    fn cosine_metric_rejects_zero_rows() {
        let m = matrix_of(&[vec![0.0; 8], vec![1.0; 8]]);
        assert!(matches!(pairwise_distances(&m, Metric::CosineDissimilarity), Err(Error::Domain(_))));
        let d = pairwise_distances(&m, Metric::Euclidean).unwrap();
        assert!((d.get(0, 1) - 8f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn mixed_dimensions_are_rejected() {
        let m = matrix_of(&[vec![0.0; 8], vec![1.0; 10]]);
        assert!(pairwise_distances(&m, Metric::Euclidean).is_err());
        assert!(pairwise_distances(&EmbeddingMatrix::new(), Metric::Euclidean).is_err());
    }

    #[test]
    fn mean_offdiagonal_cases() {
        let c = DistanceMatrix::new(
            vec![0, 1, 2],
            vec![vec![0.0, 2.5, 2.5], vec![2.5, 0.0, 2.5], vec![2.5, 2.5, 0.0]],
        )
        .unwrap();
        assert_eq!(mean_offdiagonal(&c).unwrap(), 2.5);
        let single = DistanceMatrix::new(vec![0], vec![vec![0.0]]).unwrap();
        assert!(mean_offdiagonal(&single).is_err());
        assert!(DistanceMatrix::new(vec![0, 1], vec![vec![0.0]]).is_err());
    }

    #[test]
    fn metric_names_round_trip() {
        for m in [Metric::Euclidean, Metric::CosineDissimilarity] {
            assert_eq!(m.to_string().parse::<Metric>().unwrap(), m);
        }
        assert!("manhattan".parse::<Metric>().is_err());
    }

    #[test]
    fn agreement_statistics() {
        let same: EmbeddingMatrix = (0..5)
            .map(|i| {
                let s = [0.9 + 0.01 * i as f64, 0.91, 0.93];
                (i, reconstruct_embedding(i, &s, &s).unwrap())
            })
            .collect();
        let cmp = agent_mean_comparison(&same);
        assert_eq!(cmp.max_mean_gap(), 0.0);
        assert!((cmp.correlation.value().unwrap() - 1.0).abs() < 1e-12);

        let anti: EmbeddingMatrix = (0..5)
            .map(|i| {
                let a = [0.5 + 0.1 * i as f64, 0.5];
                let b = [0.9 - 0.1 * i as f64, 0.5];
                (i, reconstruct_embedding(i, &a, &b).unwrap())
            })
            .collect();
        assert!(agent_mean_comparison(&anti).correlation.value().unwrap() < 0.0);

        let flat: EmbeddingMatrix = (0..3)
            .map(|i| (i, reconstruct_embedding(i, &[0.5, 0.5], &[0.5, 0.5]).unwrap()))
            .collect();
        assert_eq!(agent_mean_comparison(&flat).correlation, Correlation::Degenerate);
    }

    #[test]
    fn replicate_report_shape_and_consistency() {
        let cfg = SimConfig::default();
        let report = replicate_benchmark(&cfg, 5, 1).unwrap();
        assert_eq!(report.entries.len(), 5);
        let seeds: Vec<u64> = report.entries.iter().map(|e| e.seed).collect();
        assert_eq!(seeds, (0..5).map(|r| cfg.seed + r).collect::<Vec<_>>());
        assert!(report.values().iter().all(|v| v.is_finite() && *v > 0.0));

        let single = replicate_benchmark(&cfg, 1, 1).unwrap();
        let direct = mean_offdiagonal(
            &pairwise_distances(&pipeline::simulate_embeddings(&cfg).unwrap(), Metric::Euclidean).unwrap(),
        )
        .unwrap();
        assert_eq!(single.entries[0].mean_offdiag, direct);
        assert_eq!(single.entries[0].mean_offdiag, report.entries[0].mean_offdiag);
        assert!(replicate_benchmark(&cfg, 0, 1).is_err());
    }
}
