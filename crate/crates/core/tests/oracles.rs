use lifeboot::rng::Domain;
use lifeboot::*;

fn weibull_sample(n: usize, seed: u64, stream: u64) -> Vec<Observation> {
    let truth = ModelParams::weibull(10.0, 2.0).unwrap();
    let mut rng = StreamRng::new(seed, Domain::Simulation, stream);
    (0..n)
        .map(|_| Observation::exact(dist_quantile(&truth, rng.uniform_open()).unwrap()))
        .collect()
}

fn ln_choose(n: u64, k: u64) -> f64 {
    (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum()
}

/// 1697 right-censored units and six distinct failures.
fn bearing_cage_shaped() -> Vec<Observation> {
    let mut d: Vec<Observation> = (0..1697).map(|i| Observation::right(50.0 + i as f64)).collect();
    d.extend((0..6).map(|i| Observation::exact(2000.0 + 150.0 * i as f64)));
    d
}

#[test]
fn resampling_degenerate_rate_matches_binomial_with_ties() {
    let (n, r) = (1703u64, 6u64);
    let p = r as f64 / n as f64;
    // k failure draws leave fewer than two distinct failure times when k ≤ 1
    // or when all k land on the same failure row
    let mut oracle = 0.0;
    for k in 0..=60u64 {
        let pk = (ln_choose(n, k) + k as f64 * p.ln() + (n - k) as f64 * (-p).ln_1p()).exp();
        let same = if k <= 1 { 1.0 } else { r as f64 * (1.0 / r as f64).powi(k as i32) };
        oracle += pk * same;
    }
    let b = 10_000;
    let run = run_bootstrap(
        Family::Weibull,
        &bearing_cage_shaped(),
        WeightScheme::MultinomialInteger,
        b,
        31,
        &Default::default(),
    )
    .unwrap();
    let report = boundary_diagnostics(&run);
    let rate = report.degenerate_count as f64 / b as f64;
    assert!((rate - oracle).abs() <= 0.004, "rate {rate} vs {oracle}");
    let binomial = prob_degenerate_resample(n, r).unwrap();
    assert!(oracle > binomial + 0.005);
}

#[test]
fn unit_weights_reproduce_the_point_fit() {
    let data = io::rocket_motor();
    let opts = BootstrapOptions {
        weight_override: Some(vec![1.0; data.len()]),
        ..Default::default()
    };
    let run = run_bootstrap(Family::Weibull, &data, WeightScheme::DirichletFractional, 1, 5, &opts).unwrap();
    let est = run.estimates[0].as_ref().unwrap();
    for (a, b) in est.iter().zip(run.point_fit.params.values()) {
        assert!((a - b).abs() <= 1e-8 * b.abs(), "{a} vs {b}");
    }
}

#[test]
fn estimates_concentrate_as_n_grows() {
    let medians: Vec<f64> = [100usize, 1000, 10_000]
        .iter()
        .map(|&n| {
            let mut errs: Vec<f64> = (0..50)
                .map(|trial| {
                    let fit = fit_ml(Family::Weibull, &weibull_sample(n, 40, trial), None, &FitOptions::default()).unwrap();
                    let v = fit.params.values();
                    ((v[0] - 10.0).powi(2) + (v[1] - 2.0).powi(2)).sqrt()
                })
                .collect();
            errs.sort_by(f64::total_cmp);
            0.5 * (errs[24] + errs[25])
        })
        .collect();
    assert!(medians[0] > medians[1] && medians[1] > medians[2], "{medians:?}");
}

#[test]
fn frw_and_resampling_agree_on_complete_data() {
    let data = weibull_sample(40, 41, 0);
    let b = 5000;
    let frw = run_bootstrap(Family::Weibull, &data, WeightScheme::DirichletFractional, b, 7, &Default::default()).unwrap();
    let res = run_bootstrap(Family::Weibull, &data, WeightScheme::MultinomialInteger, b, 7, &Default::default()).unwrap();
    let a = percentile_interval(&frw.draws(ParamName::Beta).unwrap(), 0.95).unwrap();
    let c = percentile_interval(&res.draws(ParamName::Beta).unwrap(), 0.95).unwrap();
    let inter = (a.upper.min(c.upper) - a.lower.max(c.lower)).max(0.0);
    let union = a.upper.max(c.upper) - a.lower.min(c.lower);
    assert!(inter / union > 0.5, "{a:?} {c:?}");
}

#[test]
fn gengamma_fit_nests_lognormal_and_weibull() {
    let data = weibull_sample(60, 42, 0);
    let opts = FitOptions::default();
    let gg = fit_ml(Family::GenGamma, &data, None, &opts).unwrap();
    for f in [Family::Weibull, Family::Lognormal] {
        let sub = fit_ml(f, &data, None, &opts).unwrap();
        assert!(gg.loglik >= sub.loglik - 1e-6, "{f:?}: {} < {}", gg.loglik, sub.loglik);
    }
}

#[test]
fn older_units_have_shorter_remaining_life_under_wearout() {
    let data = io::rocket_motor();
    let run = run_bootstrap(Family::Weibull, &data, WeightScheme::DirichletFractional, 400, 3, &Default::default()).unwrap();
    let young = individual_prediction(&run, &RiskSetUnit::new("young", 5.0).unwrap(), 0.9).unwrap();
    let old = individual_prediction(&run, &RiskSetUnit::new("old", 15.0).unwrap(), 0.9).unwrap();
    assert!(old.upper < young.upper);
    assert!(young.lower < young.upper && old.lower < old.upper);
}

#[test]
fn bc_percentile_matches_normal_quantiles() {
    let mut rng = StreamRng::new(9, Domain::Simulation, 0);
    let draws: Vec<f64> = (0..100_000)
        .map(|_| lifeboot::dist::special::norm_quantile(rng.uniform_open()))
        .collect();
    let iv = bc_percentile_interval(&draws, 0.0, 0.95).unwrap();
    assert!((iv.lower + 1.96).abs() < 0.03 && (iv.upper - 1.96).abs() < 0.03, "{iv:?}");
}
