use std::collections::BTreeMap;

use proptest::prelude::*;
use trust_recon::analysis::{mean_offdiagonal, pairwise_distances, Metric};
use trust_recon::chain::combine_trust;
use trust_recon::ingest::{
    align_agents, export_embeddings_csv, export_trust_csv, parse_embeddings_csv, parse_trust_csv,
};
use trust_recon::recon::{reconstruct_embedding, EmbeddingMatrix, ReconstructedEmbedding};
use trust_recon::sim::{centred_similarity, trust_score, TrustLog};

fn nonzero_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, len).prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-3))
}

proptest! {
    #[test]
    fn trust_score_is_symmetric_bounded_and_scale_invariant(
        (a, b) in (1usize..16).prop_flat_map(|n| (nonzero_vec(n), nonzero_vec(n))),
        scale in 0.01f64..100.0,
    ) {
        let t = trust_score(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&t));
        prop_assert_eq!(t, trust_score(&b, &a).unwrap());
        let scaled: Vec<f64> = a.iter().map(|x| x * scale).collect();
        prop_assert!((trust_score(&scaled, &b).unwrap() - t).abs() < 1e-12);
        let c = centred_similarity(t).unwrap();
        prop_assert!((-1.0..=1.0).contains(&c));
    }

    #[test]
    fn combined_trust_lies_between_inputs(c in 0.0f64..=1.0, s in 0.0f64..=1.0, alpha in 0.0f64..=1.0) {
        let x = combine_trust(c, s, alpha).unwrap();
        prop_assert!(c.min(s) <= x && x <= c.max(s));
    }

    #[test]
    fn trust_csv_round_trips_and_ignores_row_order(
        series in prop::collection::btree_map(0u64..500, prop::collection::vec(0.0f64..=1.0, 4), 1..12),
        shuffle_seed in any::<u64>(),
    ) {
        let log = TrustLog::from_series("p", series.clone()).unwrap();
        let csv = export_trust_csv(&log);
        prop_assert_eq!(&parse_trust_csv(csv.as_bytes()).unwrap(), &series);

        let mut lines: Vec<&str> = csv.lines().skip(1).collect();
        let mut state = shuffle_seed | 1;
        for i in (1..lines.len()).rev() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            lines.swap(i, (state % (i as u64 + 1)) as usize);
        }
        let shuffled = format!("time_step,device_id,trust_score\n{}\n", lines.join("\n"));
        let a = parse_trust_csv(shuffled.as_bytes()).unwrap();
        prop_assert_eq!(&a, &series);
        prop_assert_eq!(align_agents(&a, &a).unwrap(), align_agents(&series, &series).unwrap());
    }

    #[test]
    fn embeddings_csv_round_trips(
        rows in prop::collection::vec((prop::collection::vec(0.0f64..=1.0, 5), prop::collection::vec(0.0f64..=1.0, 5)), 1..8),
    ) {
        let m: EmbeddingMatrix = rows.iter().enumerate()
            .map(|(i, (a, b))| (i as u64, reconstruct_embedding(i as u64, a, b).unwrap()))
            .collect();
        prop_assert_eq!(parse_embeddings_csv(export_embeddings_csv(&m).unwrap().as_bytes()).unwrap(), m);
    }

    #[test]
    fn distances_follow_device_relabelling(
        rows in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 8), 2..8),
        offset in 1u64..1000,
    ) {
        let build = |ids: &dyn Fn(usize) -> u64| -> EmbeddingMatrix {
            rows.iter().enumerate()
                .map(|(i, f)| (ids(i), ReconstructedEmbedding::from_features(ids(i), f.clone()).unwrap()))
                .collect()
        };
        let n = rows.len();
        let forward = build(&|i| i as u64);
        // reversed labels permute the rows of the BTreeMap
        let reversed = build(&|i| offset + (n - 1 - i) as u64);
        let d1 = pairwise_distances(&forward, Metric::Euclidean).unwrap();
        let d2 = pairwise_distances(&reversed, Metric::Euclidean).unwrap();
        for i in 0..n {
            for j in 0..n {
                prop_assert!((d1.get(i, j) - d2.get(n - 1 - i, n - 1 - j)).abs() < 1e-12);
            }
        }
        prop_assert!((mean_offdiagonal(&d1).unwrap() - mean_offdiagonal(&d2).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn alignment_reports_missing_devices_from_either_side() {
    let a: BTreeMap<u64, Vec<f64>> = (0..20).map(|d| (d, vec![0.99; 10])).collect();
    let mut b = a.clone();
    b.remove(&7);
    let al = align_agents(&a, &b).unwrap();
    assert_eq!(al.aligned.len(), 19);
    assert_eq!(al.skipped.len(), 1);
    assert_eq!(al.skipped[0].0, 7);
}
