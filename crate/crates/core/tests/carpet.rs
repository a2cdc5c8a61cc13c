//! The cumulant against an independent 50-digit evaluation, estimators on
//! synthetic data, and the line-measure plumbing.

use frag_core::carpet::{
    bin_counts, binned_line_measure, cumulant_limit, cumulant_residual, cumulant_root, cumulant_tilde,
    empirical_line_measure, loop_tail_mle, uniform_bins, BinnedSample, LineSample,
};
use frag_core::stats::{hill, ks_two_sample, mean_se, pearson};
use frag_core::{derive_relations, Error, StreamKey};
use proptest::prelude::*;
use rand::Rng;

// lim_{ε→0} of the cut cumulant, computed in mpmath from
//   ∫_0^{1/2} (up + down + q(1−u) l^{−α}) dl + ∫_{1/2}^∞ (up + q(1−u) l^{−α}) dl
// with the small-l expansion summed analytically below 1e-6.
const FROZEN: [(f64, f64, f64); 4] = [
    (3.0, 1.6, 1.9604836423341245),
    (3.0, 2.2, -0.7454570267184748),
    (3.5, 1.6, 0.22038269776068093),
    (3.5, 2.2, -0.8546756819573048),
];

#[test]
fn cumulant_matches_oracle() {
    for (kappa, q, want) in FROZEN {
        let r = derive_relations(kappa).unwrap();
        let got = cumulant_limit(q, &r).unwrap().value;
        assert!((got - want).abs() < 1e-6, "kappa {kappa} q {q}: {got} vs {want}");
    }
}

#[test]
fn cumulant_root_is_alpha_plus_half() {
    for kappa in [2.8, 3.0, 3.5, 3.9] {
        let r = derive_relations(kappa).unwrap();
        let root = cumulant_root(&r).unwrap();
        assert!((root - r.malthus_delta).abs() < 1e-6, "kappa {kappa}: {root}");
    }
}

#[test]
fn cumulant_domain() {
    let r = derive_relations(3.0).unwrap();
    assert!(cumulant_residual(r.alpha, &r, 1e-3).is_err());
    assert!(cumulant_residual(2.0 * r.alpha + 1.0, &r, 1e-3).is_err());
    assert!(cumulant_residual(2.0, &r, 0.3).is_err());
    // Loops only add mass.
    assert!(cumulant_tilde(2.0, &r).unwrap() > cumulant_limit(2.0, &r).unwrap().value);
}

#[test]
fn loop_tail_mle_recovers_the_index() {
    // Density ∝ l^{−θ}(y+l)^{−θ} on [2, ∞) by thinning a Pareto(2θ − 1).
    let theta = 7.0 / 3.0;
    let x0 = 2.0;
    let mut rng = StreamKey::replicate(0).rng(99);
    let mut data = Vec::new();
    while data.len() < 4000 {
        let y: f64 = rng.random_range(0.5..2.0);
        let l = x0 * (1.0 - rng.random::<f64>()).powf(-1.0 / (2.0 * theta - 1.0));
        if rng.random::<f64>() < (1.0 + y / l).powf(-theta) {
            data.push((l, y));
        }
    }
    let fit = loop_tail_mle(&data, x0).unwrap();
    assert_eq!(fit.k, 4000);
    assert!((fit.index - (2.0 * theta - 1.0)).abs() < 4.0 * fit.se, "{fit:?}");
    assert!(loop_tail_mle(&data[..3], x0).is_err());
}

#[test]
fn hill_on_pareto() {
    let mut rng = StreamKey::replicate(1).rng(99);
    let xs: Vec<f64> = (0..20_000).map(|_| (1.0 - rng.random::<f64>()).powf(-1.0 / 2.5)).collect();
    let h = hill(&xs, 1.0);
    assert!((h.index - 2.5).abs() < 4.0 * h.se, "{h:?}");
}

#[test]
fn ks_and_correlation() {
    let mut rng = StreamKey::replicate(2).rng(99);
    let a: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
    let b: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
    let c: Vec<f64> = (0..5000).map(|_| rng.random::<f64>().sqrt()).collect();
    assert!(ks_two_sample(&a, &b).p_value > 0.001);
    assert!(ks_two_sample(&a, &c).p_value < 1e-6);
    let y: Vec<f64> = a.iter().map(|x| 3.0 * x - 1.0).collect();
    assert!((pearson(&a, &y) - 1.0).abs() < 1e-12);
    let m = mean_se(&[1.0, 2.0, 3.0]);
    assert!((m.mean - 2.0).abs() < 1e-15 && (m.se - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
}

#[test]
fn line_measure_plumbing() {
    let bins = uniform_bins(0.0, 4);
    assert_eq!(bins.len(), 4);
    assert_eq!(bins[3], (0.75, 1.0));
    // Bins of label / y; the right end of the last bin is included.
    assert_eq!(bin_counts(&[0.1, 0.5, 1.0, 1.5], 1.0, &bins), vec![1, 0, 1, 1]);
    let samples = vec![
        LineSample { labels: vec![0.5, 1.0], m_inf: 2.0 },
        LineSample { labels: vec![0.1], m_inf: 0.0 },
    ];
    let m = empirical_line_measure(&samples, 1.0, 1.5, &bins).unwrap();
    assert_eq!(m.n, 1);
    assert_eq!(m.nu, vec![0.0, 0.0, 0.5, 0.5]);
    assert!((m.total - 1.0).abs() < 1e-15);
    let empty = vec![BinnedSample { counts: vec![1, 0, 0, 0], m_inf: 0.0 }];
    assert!(matches!(binned_line_measure(&empty, 1.0, 1.5, &bins), Err(Error::EmptyEnsemble)));
    let short = vec![BinnedSample { counts: vec![1], m_inf: 1.0 }];
    assert!(binned_line_measure(&short, 1.0, 1.5, &bins).is_err());
}

proptest! {
    #[test]
    fn binning_keeps_every_label_in_range(labels in prop::collection::vec(0.0f64..2.0, 0..50), n in 1usize..12) {
        let bins = uniform_bins(0.0, n);
        let counts = bin_counts(&labels, 1.0, &bins);
        let inside = labels.iter().filter(|&&l| l <= 1.0).count();
        prop_assert_eq!(counts.iter().sum::<usize>(), inside);
    }

    #[test]
    fn cumulant_decreases_through_its_root(kappa in 2.75f64..3.95) {
        let r = derive_relations(kappa).unwrap();
        let d = r.malthus_delta;
        let lo = cumulant_limit(d - 0.1, &r).unwrap().value;
        let hi = cumulant_limit(d + 0.1, &r).unwrap().value;
        prop_assert!(lo > 0.0 && hi < 0.0);
    }
}
