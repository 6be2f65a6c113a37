use std::collections::HashMap;

use copair::feedgen::{generate_feed, replay_reader, write_feed_csv, FeedConfig, GroupSpec, Tick};
use copair::labeling::row_changes;
use copair::sampler::{filter_incomplete, run_sampling, SamplingPlan};
use copair::validation::pearson;
use copair_testkit::pearson_sums;

fn planted(seed: u64, steps: usize) -> FeedConfig {
    FeedConfig::planted(seed, vec![GroupSpec { size: 2, coupling: 0.0002 }; 20], 160, 0.002, steps)
}

#[test]
fn planted_groups_are_strongly_correlated() {
    let (meta, ticks) = generate_feed(&planted(7, 64)).unwrap().collect_ticks().unwrap();
    let mut prices: HashMap<&str, Vec<f64>> = HashMap::new();
    for t in &ticks {
        prices.entry(t.symbol.as_str()).or_default().push(t.price);
    }
    for g in 0..20u32 {
        let members: Vec<&str> = meta.iter().filter(|m| m.group_id == Some(g)).map(|m| m.symbol.as_str()).collect();
        assert_eq!(members.len(), 2);
        let a = row_changes(&prices[members[0]]);
        let b = row_changes(&prices[members[1]]);
        let r = pearson_sums(&a, &b);
        assert!(r > 0.9, "group {g}: r = {r}");
    }
}

/// Last tick price at or before `t`, straight from the log.
fn last_price_before(ticks: &[Tick], symbol: &str, t: f64) -> Option<f64> {
    ticks.iter().rev().find(|x| x.symbol == symbol && x.timestamp <= t).map(|x| x.price)
}

#[test]
fn sample_matrix_matches_raw_tick_log() {
    let config = FeedConfig { dropout_rate: 0.3, tick_period: 0.7, ..planted(3, 120) };
    let (meta, ticks) = generate_feed(&config).unwrap().collect_ticks().unwrap();
    let plan = SamplingPlan::uniform(2.0, 10.0, 6).unwrap();
    let mut feed = generate_feed(&config).unwrap();
    let samples = run_sampling(&mut feed, &plan).unwrap();
    assert_eq!((samples.n_series(), samples.n_samples()), (200, 6));
    for (i, m) in meta.iter().enumerate() {
        assert_eq!(samples.symbols[i], m.symbol);
        for (j, &t) in plan.sample_times().iter().enumerate() {
            assert_eq!(samples.values[i][j], last_price_before(&ticks, &m.symbol, t), "{} at {t}", m.symbol);
        }
    }
    let kept = filter_incomplete(&samples).unwrap();
    assert!(kept.matrix.values.iter().all(|row| row.iter().all(Option::is_some)));
    assert_eq!(kept.matrix.n_series() + kept.dropped.len(), 200);
}

#[test]
fn sampling_replayed_csv_matches_generated_feed() {
    let config = planted(5, 70);
    let (meta, ticks) = generate_feed(&config).unwrap().collect_ticks().unwrap();
    let mut csv = Vec::new();
    write_feed_csv(&meta, ticks, &mut csv).unwrap();
    let plan = SamplingPlan::new(0.0, vec![10.0, 5.0, 20.0, 10.0, 15.0]).unwrap();
    let a = run_sampling(&mut generate_feed(&config).unwrap(), &plan).unwrap();
    let b = run_sampling(&mut replay_reader(csv.as_slice(), 0.0).unwrap(), &plan).unwrap();
    assert_eq!(a, b);
}

#[test]
fn pearson_is_symmetric_and_affine_invariant() {
    let (_, ticks) = generate_feed(&planted(8, 40)).unwrap().collect_ticks().unwrap();
    let mut prices: HashMap<&str, Vec<f64>> = HashMap::new();
    for t in &ticks {
        prices.entry(t.symbol.as_str()).or_default().push(t.price);
    }
    let rows: Vec<&Vec<f64>> = prices.values().take(30).collect();
    for w in rows.windows(2) {
        let (x, y) = (w[0], w[1]);
        let r = pearson(x, y).unwrap();
        assert!((-1.0..=1.0).contains(&r));
        assert_eq!(r, pearson(y, x).unwrap());
        assert!((r - pearson_sums(x, y)).abs() < 1e-9);
        let shifted: Vec<f64> = x.iter().map(|v| 3.5 * v + 12.0).collect();
        assert!((pearson(&shifted, y).unwrap() - r).abs() < 1e-12);
    }
}
