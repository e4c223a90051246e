use stepbayes::entropy::concavity_gap;
use stepbayes::io::{read_dataset, write_dataset};
use stepbayes::kernel::log_beta;
use stepbayes::model::{average_onto, l1_distance, sample_dataset};
use stepbayes::{GridFunction, StepFunction};

fn uniform_grid(k: u32) -> Vec<f64> {
    let cells = 1u32 << k;
    (1..cells).map(|j| j as f64 / cells as f64).collect()
}

#[test]
fn averaging_error_shrinks_with_the_mesh() {
    let f = GridFunction::smooth_example();
    let l1: Vec<f64> = (1..=8).map(|k| l1_distance(&f, &average_onto(&f, &uniform_grid(k)).unwrap())).collect();
    let gaps: Vec<f64> = (1..=8).map(|k| concavity_gap(&f, &uniform_grid(k)).unwrap()).collect();
    assert!(l1.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{l1:?}");
    assert!(gaps.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{gaps:?}");
    assert!(l1[7] < 0.01);
    assert!(gaps[7] < 1e-3);
}

#[test]
fn redundant_breakpoints_are_at_distance_zero() {
    let a = StepFunction::new(vec![0.5], vec![0.2, 0.8]).unwrap();
    let b = StepFunction::new(vec![0.25, 0.5], vec![0.2, 0.2, 0.8]).unwrap();
    assert_eq!(l1_distance(&a, &b), 0.0);
    let c = StepFunction::new(vec![0.5], vec![0.2, 0.7]).unwrap();
    assert!((l1_distance(&a, &c) - 0.05).abs() < 1e-15);
}

#[test]
fn refinement_ratio_exhaustive() {
    for n in 0u32..=12 {
        for s in 0..=n {
            let f = n - s;
            for sl in 0..=s {
                for fl in 0..=f {
                    let ratio = log_beta(s, f) - log_beta(sl, fl) - log_beta(s - sl, f - fl);
                    assert!(ratio <= (n.max(1) as f64).ln() + 1e-12, "({s},{f}) into ({sl},{fl})");
                }
            }
        }
    }
}

#[test]
fn csv_round_trip_is_bitwise() {
    let data = sample_dataset(&GridFunction::smooth_example(), 10_000, 5);
    let mut buf = Vec::new();
    write_dataset(&data, &[], &mut buf).unwrap();
    let back = read_dataset(buf.as_slice()).unwrap();
    assert_eq!(data.len(), back.len());
    for (a, b) in data.points().zip(back.points()) {
        assert_eq!(a.0.to_bits(), b.0.to_bits());
        assert_eq!(a.1, b.1);
    }
}
