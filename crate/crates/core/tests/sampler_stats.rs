//! Statistical checks of the samplers against exact analytic quantities.

use pgss::analytics::{predictive_mean, zero_prob_table};
use pgss::simulate::gof::{chi_square_gof, two_sample_chi_square};
use pgss::simulate::{
    build_ensemble, sample_marginal_chain, sample_path, summarize, RngStream, SamplerChoice,
};
use pgss::{FilterState, ModelSpec};
use rayon::prelude::*;

fn reference() -> ModelSpec {
    ModelSpec::new(6.5, 1.2, 0.75).unwrap()
}

fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

#[test]
fn state_mean_is_constant() {
    let spec = reference();
    let n = 100_000;
    let thetas: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| sample_path(&spec, 50, &mut RngStream::new(404, i as u64)).unwrap().theta(50))
        .collect();
    let mean = thetas.iter().sum::<f64>() / n as f64;
    let var = thetas.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    let se = (var / n as f64).sqrt();
    assert!((mean - spec.mean()).abs() < 3.0 * se, "mean {mean} se {se}");
}

#[test]
fn first_horizon_zero_rate_matches_negative_binomial() {
    let spec = reference();
    let p0 = FilterState::initial(&spec).one_step_predictive(&spec).zero_prob();
    let n = 200_000;
    for sampler in [SamplerChoice::Path, SamplerChoice::Chain] {
        let e = build_ensemble(&spec, 1, n, 17, sampler).unwrap();
        let rate = e.counts().iter().filter(|&&y| y == 0).count() as f64 / n as f64;
        assert!((rate - p0).abs() < 3.0 * binomial_se(p0, n), "{sampler}: {rate} vs {p0}");
    }
}

#[test]
fn chain_first_horizon_is_negative_binomial() {
    let spec = reference();
    let nb = FilterState::initial(&spec).one_step_predictive(&spec);
    let xs: Vec<u64> = (0..100_000)
        .map(|i| sample_marginal_chain(&spec, 1, &mut RngStream::new(5, i)).unwrap()[0])
        .collect();
    let t = chi_square_gof(&xs, |y| nb.pmf(y), 5.0).unwrap();
    assert!(!t.rejects_at(1e-3), "{t:?}");
}

#[test]
fn negbin_sampler_variance() {
    let nb = FilterState::initial(&reference()).one_step_predictive(&reference());
    let n = 1_000_000;
    let mut rng = RngStream::new(77, 0);
    let xs: Vec<f64> = (0..n).map(|_| nb.sample(&mut rng).unwrap() as f64).collect();
    let m = xs.iter().sum::<f64>() / n as f64;
    let m2 = xs.iter().map(|x| (x - m).powi(2)).collect::<Vec<_>>();
    let v = m2.iter().sum::<f64>() / (n as f64 - 1.0);
    // Standard error of the sample variance from the fourth central moment.
    let m4 = m2.iter().map(|d| d * d).sum::<f64>() / n as f64;
    let se = ((m4 - v * v) / n as f64).sqrt();
    assert!((v - nb.variance()).abs() < 3.0 * se, "var {v} vs {} ± {se}", nb.variance());
    assert!((nb.variance() - 11.435_185).abs() < 1e-5);
}

#[test]
fn samplers_agree_at_third_horizon() {
    let spec = reference();
    let n = 100_000;
    let path = build_ensemble(&spec, 3, n, 2024, SamplerChoice::Path).unwrap().column(3);
    let chain = build_ensemble(&spec, 3, n, 4048, SamplerChoice::Chain).unwrap().column(3);
    let t = two_sample_chi_square(&path, &chain, 5.0).unwrap();
    assert!(!t.rejects_at(1e-3), "{t:?}");
}

#[test]
fn mean_flat_and_zero_rate_tracks_recurrence() {
    let spec = reference();
    let n = 50_000;
    let e = build_ensemble(&spec, 50, n, 31337, SamplerChoice::Chain).unwrap();
    let s = summarize(&e, &[0.5]).unwrap();
    let table = zero_prob_table(&spec, 50).unwrap();
    for t in 1..=50 {
        let row = s.row(t);
        let se = row.mean_se(n);
        assert!((row.mean - predictive_mean(&spec, t)).abs() < 3.0 * se, "t {t}: mean {} ± {se}", row.mean);
        let p = table.zero_prob(t);
        assert!((row.zero_rate - p).abs() < 3.0 * binomial_se(p, n), "t {t}: zero rate {} vs {p}", row.zero_rate);
    }
}
