use copair::labeling::{compute_changes, self_label};
use copair::sampler::SampleMatrix;
use copair::Sector;
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

fn matrix(rows: Vec<Vec<f64>>) -> SampleMatrix {
    let n = rows[0].len();
    SampleMatrix {
        symbols: (0..rows.len()).map(|i| format!("R{i:04}")).collect(),
        sectors: vec![Sector::Conglomerates; rows.len()],
        timestamps: (0..n).map(|j| 10.0 * j as f64).collect(),
        values: rows.into_iter().map(|r| r.into_iter().map(Some).collect()).collect(),
    }
}

fn price_rows() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..12, 1usize..20).prop_flat_map(|(n, m)| prop::collection::vec(prop::collection::vec(0.5f64..500.0, n), m))
}

proptest! {
    #[test]
    fn shapes_and_label_sums(rows in price_rows()) {
        let (m, n) = (rows.len(), rows[0].len());
        let data = self_label(compute_changes(&matrix(rows)).unwrap());
        prop_assert_eq!(data.changes.features.len(), m);
        prop_assert_eq!(data.labels.len(), m);
        for (row, label) in data.changes.features.iter().zip(&data.labels) {
            prop_assert_eq!(row.len(), n - 1);
            prop_assert!(row.iter().all(|&c| c > -1.0));
            let sum: f64 = row.iter().sum();
            prop_assert!((label - sum).abs() <= 1e-9 * sum.abs().max(f64::MIN_POSITIVE));
        }
    }

    #[test]
    fn positive_rescaling_leaves_changes_alone(rows in price_rows(), k in 0.01f64..100.0) {
        let scaled: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|p| p * k).collect()).collect();
        let a = self_label(compute_changes(&matrix(rows)).unwrap());
        let b = self_label(compute_changes(&matrix(scaled)).unwrap());
        for (x, y) in a.changes.features.iter().flatten().zip(b.changes.features.iter().flatten()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
        for (x, y) in a.labels.iter().zip(&b.labels) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn identical_rows_identical_labels(row in prop::collection::vec(1.0f64..50.0, 2..10)) {
        let data = self_label(compute_changes(&matrix(vec![row.clone(), row])).unwrap());
        prop_assert_eq!(&data.changes.features[0], &data.changes.features[1]);
        prop_assert_eq!(data.labels[0], data.labels[1]);
    }
}

#[test]
fn offsetting_moves_can_label_zero() {
    // +25% then -25% nets a lower price but labels exactly 0, like a flat row
    let data = self_label(compute_changes(&matrix(vec![vec![4.0, 5.0, 3.75], vec![7.0, 7.0, 7.0]])).unwrap());
    assert_eq!(data.changes.features[0], vec![0.25, -0.25]);
    assert_eq!(data.labels, vec![0.0, 0.0]);
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap()
}

#[test]
fn changes_agree_with_exact_rational_arithmetic() {
    use copair::feedgen::{generate_feed, FeedConfig, GroupSpec};
    use copair::sampler::{run_sampling, SamplingPlan};
    use num_traits::ToPrimitive;
    let config = FeedConfig::planted(11, vec![GroupSpec { size: 2, coupling: 0.0002 }; 20], 160, 0.002, 60);
    let mut feed = generate_feed(&config).unwrap();
    let samples = run_sampling(&mut feed, &SamplingPlan::uniform(0.0, 10.0, 6).unwrap()).unwrap();
    let changes = compute_changes(&samples).unwrap();
    assert_eq!((changes.features.len(), changes.features[0].len()), (200, 5));
    let one = BigRational::from_integer(BigInt::from(1));
    for (i, row) in samples.values.iter().enumerate() {
        for j in 0..5 {
            let truth = exact(row[j + 1].unwrap()) / exact(row[j].unwrap()) - &one;
            let truth = truth.to_f64().unwrap();
            assert!((changes.features[i][j] - truth).abs() <= 1e-15, "row {i} col {j}");
        }
    }
}
