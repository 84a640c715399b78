use std::collections::BTreeMap;

use trust_recon::analysis::{pairwise_distances, Metric};
use trust_recon::pipeline::{self, obfuscate_log, AGENT_A, AGENT_B};
use trust_recon::recon::{estimate_norm_from_series, f_similarity, rmse_features};
use trust_recon::sim::{centred_similarity, generate_population, run_continuous_evaluation, SimConfig};

#[test]
fn default_scores_sit_in_the_reported_range() {
    let sim = pipeline::simulate(&SimConfig::default()).unwrap();
    let range = 0.9965..=0.9985;
    for log in [&sim.agent_a, &sim.agent_b] {
        assert_eq!(log.device_count(), 20);
        assert_eq!(log.time_steps(), 10);
        for (d, s) in log.series() {
            let mean = s.iter().sum::<f64>() / s.len() as f64;
            assert!(range.contains(&mean), "{} device {d}: mean {mean}", log.agent_id());
        }
        // single draws graze the edge; ~2.6% fall outside across seeds
        let entries = log.entries();
        let outside = entries.iter().filter(|&&(_, _, s)| !range.contains(&s)).count();
        assert!(outside * 20 <= entries.len(), "{}: {outside} scores outside", log.agent_id());
        assert!(entries.iter().all(|&(_, _, s)| (0.996..=0.999).contains(&s)));
    }
}

#[test]
fn agents_see_independent_noise_but_agree_on_means() {
    let cfg = SimConfig::default();
    let sim = pipeline::simulate(&cfg).unwrap();
    assert_ne!(sim.agent_a.series(), sim.agent_b.series());
    for (d, a) in sim.agent_a.series() {
        let b = &sim.agent_b.series()[d];
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        assert!((mean(a) - mean(b)).abs() < 1e-3, "device {d}");
    }
    // same agent id regenerates the same stream
    let again = run_continuous_evaluation(&cfg, &sim.population, AGENT_B).unwrap();
    assert_eq!(again, sim.agent_b);
}

#[test]
fn grand_mean_tracks_the_analytic_value() {
    let sim = pipeline::simulate(&SimConfig::default()).unwrap();
    let scores: Vec<f64> = sim.agent_a.entries().into_iter().map(|(_, _, s)| s).collect();
    let grand = scores.iter().sum::<f64>() / scores.len() as f64;
    let analytic = 0.5 * (1.0 + (128.0f64 / 129.28).sqrt());
    assert!((analytic - 0.99752).abs() < 5e-6);
    assert!((grand - analytic).abs() < 5e-4, "grand mean {grand}");
}

#[test]
fn long_series_centred_mean_converges_to_f() {
    let cfg = SimConfig {
        device_count: 3,
        time_steps: 10_000,
        ..SimConfig::default()
    };
    let pop = generate_population(&cfg).unwrap();
    let log = run_continuous_evaluation(&cfg, &pop, AGENT_A).unwrap();
    for d in &pop {
        let series = &log.series()[&d.device_id];
        let centred: f64 = series.iter().map(|&t| centred_similarity(t).unwrap()).sum::<f64>()
            / series.len() as f64;
        let expected = f_similarity(d.baseline_norm(), cfg.embedding_dim, cfg.noise_std).unwrap();
        assert!((centred - expected).abs() < 1e-3, "device {}: {centred} vs {expected}", d.device_id);
    }
}

#[test]
fn norm_estimates_recover_baselines() {
    let cfg = SimConfig::default();
    let sim = pipeline::simulate(&cfg).unwrap();
    let truth: Vec<f64> = sim.population.iter().map(|d| d.baseline_norm()).collect();
    for log in [&sim.agent_a, &sim.agent_b] {
        let est: Vec<f64> = sim
            .population
            .iter()
            .map(|d| estimate_norm_from_series(&log.series()[&d.device_id], 128, 0.1).unwrap())
            .collect();
        for (e, t) in est.iter().zip(&truth) {
            assert!((e - t).abs() / t < 0.05, "{}: {e} vs {t}", log.agent_id());
        }
        let rmse = rmse_features(&est, &truth).unwrap();
        assert!(rmse < 0.6, "{} rmse {rmse}", log.agent_id());
    }
}

#[test]
fn quantised_publication_defeats_the_estimator() {
    let cfg = SimConfig::default();
    let sim = pipeline::simulate(&cfg).unwrap();
    let published = obfuscate_log(&sim.agent_a, 0.0, 0.05, cfg.seed).unwrap();
    assert!(published.entries().iter().all(|&(_, _, s)| s == 1.0));
    for d in &sim.population {
        assert!(estimate_norm_from_series(&published.series()[&d.device_id], 128, 0.1).is_err());
    }
    // additive noise alone also pushes the estimate well off
    let noisy = obfuscate_log(&sim.agent_a, 0.01, 0.0, cfg.seed).unwrap();
    let worst = sim
        .population
        .iter()
        .map(|d| match estimate_norm_from_series(&noisy.series()[&d.device_id], 128, 0.1) {
            Ok(e) => (e - d.baseline_norm()).abs() / d.baseline_norm(),
            Err(_) => f64::INFINITY,
        })
        .fold(0.0, f64::max);
    assert!(worst > 0.05);
}

#[test]
fn default_distances_are_small_and_bounded() {
    let emb = pipeline::simulate_embeddings(&SimConfig::default()).unwrap();
    assert_eq!(emb.len(), 20);
    assert!(emb.values().all(|e| e.dim() == 24 && e.is_self_consistent()));
    let d = pairwise_distances(&emb, Metric::Euclidean).unwrap();
    for i in 0..20 {
        for j in 0..20 {
            if i != j {
                assert!((0.001..=0.01).contains(&d.get(i, j)), "d({i},{j}) = {}", d.get(i, j));
            }
        }
    }
}

#[test]
fn matching_run_is_deterministic_and_bounded() {
    let cfg = SimConfig::default();
    let sim = pipeline::simulate(&cfg).unwrap();
    let run = pipeline::run_matching(&cfg, &sim.population, &sim.agent_a, 5).unwrap();
    let again = pipeline::run_matching(&cfg, &sim.population, &sim.agent_a, 5).unwrap();
    assert_eq!(run.selections, again.selections);
    assert_eq!(run.selections.len(), 5);
    for sel in &run.selections {
        assert!(!sel.selected.is_empty() && sel.selected.len() <= 2);
        if sel.selected.len() == 2 {
            let (a, b) = (sel.selected[0], sel.selected[1]);
            let w = run.hypergraph.weight(a, b).unwrap();
            assert!((w - (run.trust[&a] + run.trust[&b]) / 2.0).abs() < 1e-15);
        }
    }
    let top: Vec<_> = {
        let mut v: Vec<_> = run.trust.iter().collect();
        v.sort_by(|x, y| y.1.total_cmp(x.1).then(x.0.cmp(y.0)));
        v.into_iter().map(|(&d, _)| d).collect()
    };
    assert!(run.selections.iter().all(|s| s.selected[0] == top[0]));
    let _: BTreeMap<_, _> = run.hypergraph.weights().clone();
}
