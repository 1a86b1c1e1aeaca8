mod common;

use common::Rng;
use ordnorm::data::Cell;
use ordnorm::kernels::std_normal_cdf;
use ordnorm::model::{ModelSpec, ParameterSet, ResponseParams, ResponseSpec};
use ordnorm::simulate::{
    simulate, simulate_with_latent, slot, toy_config, CovariateLaw, SimConfig,
};
use proptest::prelude::*;

fn config(spec: ModelSpec, params: ParameterSet, n: usize, seed: u64) -> SimConfig {
    SimConfig {
        spec,
        params,
        n,
        seed,
        covariate_law: CovariateLaw::StandardNormalIid,
        missing_rate: vec![],
    }
}

#[test]
fn category_frequencies_follow_the_probit_law() {
    let spec =
        ModelSpec::new(vec![ResponseSpec::ordinal("y", 3)], vec!["x".into()], false).unwrap();
    let params = ParameterSet {
        responses: vec![ResponseParams::Ordinal {
            thresholds: vec![-1.0, 1.0],
            coefficients: vec![0.0],
        }],
        correlations: vec![],
    };
    let n = 100_000;
    let data = simulate(&config(spec, params, n, 3)).unwrap();
    let mut counts = [0usize; 3];
    for i in 0..n {
        match data.cell(i, 0) {
            Cell::Ordinal(c) => counts[c - 1] += 1,
            other => panic!("{other:?}"),
        }
    }
    let expected = [
        std_normal_cdf(-1.0),
        std_normal_cdf(1.0) - std_normal_cdf(-1.0),
        1.0 - std_normal_cdf(1.0),
    ];
    for (c, p) in counts.iter().zip(expected) {
        let freq = *c as f64 / n as f64;
        assert!(
            (freq - p).abs() <= 3.0 * (p * (1.0 - p) / n as f64).sqrt(),
            "{freq} vs {p}"
        );
    }
}

#[test]
fn independent_standard_gaussians_have_identity_covariance() {
    let spec = ModelSpec::new(
        vec![
            ResponseSpec::gaussian("a"),
            ResponseSpec::gaussian("b"),
            ResponseSpec::gaussian("c"),
        ],
        vec!["x".into()],
        false,
    )
    .unwrap();
    let unit = || ResponseParams::Gaussian {
        intercept: 0.0,
        coefficients: vec![0.0],
        scale: 1.0,
    };
    let params = ParameterSet {
        responses: vec![unit(), unit(), unit()],
        correlations: vec![0.0; 3],
    };
    let n = 50_000;
    let data = simulate(&config(spec, params, n, 4)).unwrap();
    let value = |i: usize, j: usize| match data.cell(i, j) {
        Cell::Gaussian(v) => v,
        other => panic!("{other:?}"),
    };
    for a in 0..3 {
        for b in 0..3 {
            let cov = (0..n).map(|i| value(i, a) * value(i, b)).sum::<f64>() / n as f64;
            let target = if a == b { 1.0 } else { 0.0 };
            assert!(
                (cov - target).abs() < 4.0 * (2.0 / n as f64).sqrt(),
                "{a}{b}: {cov}"
            );
        }
    }
    let xs = &data.x;
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|v| v * v).sum::<f64>() / n as f64;
    assert!(
        mean.abs() < 4.0 / (n as f64).sqrt() && (var - 1.0).abs() < 4.0 * (2.0 / n as f64).sqrt()
    );
}

#[test]
fn missing_rate_produces_about_twenty_cells() {
    let mut cfg = toy_config(1);
    cfg.missing_rate = vec![0.02, 0.0, 0.0, 0.0];
    let data = simulate(&cfg).unwrap();
    let missing = (0..data.n)
        .filter(|&i| data.cell(i, 0) == Cell::Missing)
        .count();
    let sd = (1000.0f64 * 0.02 * 0.98).sqrt();
    assert!((missing as f64 - 20.0).abs() <= 3.0 * sd, "{missing}");
    assert!((0..data.n).all(|i| (1..4).all(|j| data.cell(i, j).is_observed())));

    // The draw sequence does not depend on the rates, so only the masked cells differ.
    let complete = simulate(&toy_config(1)).unwrap();
    for i in 0..data.n {
        for j in 0..4 {
            if data.cell(i, j).is_observed() {
                assert_eq!(data.cell(i, j), complete.cell(i, j));
            }
        }
    }
}

#[test]
fn latent_correlations_match_r() {
    let cfg = toy_config(9);
    let (data, latent) = simulate_with_latent(&cfg).unwrap();
    let (n, q) = (data.n, data.q);
    let r = cfg.params.correlation_matrix(&cfg.spec);
    for k in 0..q {
        for l in 0..q {
            let c = (0..n)
                .map(|i| latent[i * q + k] * latent[i * q + l])
                .sum::<f64>()
                / n as f64;
            assert!(
                (c - r[k * q + l]).abs() <= 4.0 / (n as f64).sqrt(),
                "{k}{l}: {c} vs {}",
                r[k * q + l]
            );
        }
    }
    let labels_ok = (0..n).all(|i| matches!(data.cell(i, 0), Cell::Ordinal(1..=3)));
    assert!(labels_ok);
}

#[test]
fn same_seed_is_bit_identical() {
    let a = simulate(&toy_config(12)).unwrap();
    let b = simulate(&toy_config(12)).unwrap();
    assert_eq!(a, b);
    let c = simulate(&toy_config(13)).unwrap();
    assert_ne!(a.x, c.x);
}

#[test]
fn invalid_configs_are_rejected() {
    let mut cfg = toy_config(0);
    cfg.n = 0;
    assert!(simulate(&cfg).is_err());
    let mut cfg = toy_config(0);
    cfg.params.correlations = vec![0.99, -0.99, 0.99, 0.99, 0.99, 0.99];
    assert!(simulate(&cfg).is_err());
    let mut cfg = toy_config(0);
    cfg.missing_rate = vec![0.1];
    assert!(simulate(&cfg).is_err());
}

proptest! {
    #[test]
    fn slotting_is_exhaustive_and_exclusive(latent in -10.0f64..10.0, seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let m = 1 + rng.index(5);
        let th = rng.thresholds(m);
        let c = slot(latent, &th);
        prop_assert!((1..=th.len() + 1).contains(&c));
        let lower = if c == 1 { f64::NEG_INFINITY } else { th[c - 2] };
        let upper = if c == th.len() + 1 { f64::INFINITY } else { th[c - 1] };
        prop_assert!(lower < latent && latent <= upper);
    }
}
