//! Bootstrap prediction of future failures among surviving units.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{BootstrapRun, MIN_USABLE};
use crate::dist::{quantile_from_log_survival, ModelParams};
use crate::error::{Error, Result};
use crate::numeric::quantile_sorted;
use crate::rng::{Domain, StreamRng};

pub const DEFAULT_SIMS_PER_DRAW: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskSetUnit {
    pub unit_id: String,
    pub current_age: f64,
}

impl RiskSetUnit {
    pub fn new(unit_id: impl Into<String>, current_age: f64) -> Result<Self> {
        if !(current_age > 0.0) || !current_age.is_finite() {
            return Err(Error::input(format!("current age must be positive, got {current_age}")));
        }
        Ok(Self {
            unit_id: unit_id.into(),
            current_age,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionCurve {
    pub horizon_grid: Vec<f64>,
    /// Expected cumulative failures under the point fit.
    pub point: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub level: f64,
    /// Grid indices where the point prediction falls outside the bounds.
    pub containment_violations: Vec<usize>,
}

impl PredictionCurve {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("horizon,point,lower,upper\n");
        for i in 0..self.horizon_grid.len() {
            s.push_str(&format!(
                "{},{},{},{}\n",
                self.horizon_grid[i], self.point[i], self.lower[i], self.upper[i]
            ));
        }
        s
    }
}

fn ln_survival(params: &ModelParams, t: f64) -> f64 {
    if t == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    params.loc_scale().terms_at_log_time(t.ln()).ln_surv
}

fn rho(params: &ModelParams, ln_s_age: f64, age: f64, horizon: f64) -> f64 {
    if horizon == 0.0 {
        return 0.0;
    }
    if ln_s_age == f64::NEG_INFINITY {
        return 1.0;
    }
    let d = ln_survival(params, age + horizon) - ln_s_age;
    if d.is_nan() {
        1.0
    } else {
        (-d.exp_m1()).clamp(0.0, 1.0)
    }
}

/// Probability that a unit of age `age` fails within `horizon` more time
/// units: [F(age+h) − F(age)] / [1 − F(age)].
pub fn conditional_failure_prob(params: &ModelParams, age: f64, horizon: f64) -> Result<f64> {
    params.validate()?;
    if !(age > 0.0) || !age.is_finite() {
        return Err(Error::input(format!("age must be positive, got {age}")));
    }
    if !(horizon >= 0.0) {
        return Err(Error::input(format!("horizon must be non-negative, got {horizon}")));
    }
    Ok(rho(params, ln_survival(params, age), age, horizon))
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::input("horizon grid is empty"));
    }
    if grid[0] < 0.0 || grid.iter().any(|h| !h.is_finite()) {
        return Err(Error::input("horizons must be finite and non-negative"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::input("horizon grid must be strictly increasing"));
    }
    Ok(())
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::input(format!("level must lie in (0, 1), got {level}")))
    }
}

fn usable_draws(run: &BootstrapRun) -> Result<Vec<(u64, ModelParams)>> {
    let draws: Vec<(u64, ModelParams)> = run
        .estimates
        .iter()
        .zip(&run.statuses)
        .filter(|(_, s)| s.state().is_usable())
        .filter_map(|(e, s)| {
            let v = e.as_ref()?;
            Some((s.replicate_id, ModelParams::from_values(run.family, v).ok()?))
        })
        .collect();
    if draws.len() < MIN_USABLE {
        return Err(Error::numerical(format!(
            "run has {} usable replicates; prediction needs at least {MIN_USABLE}",
            draws.len()
        )));
    }
    Ok(draws)
}

/// Cumulative number of failures among `risk_set` within each horizon.
/// The point curve sums conditional failure probabilities under the point
/// fit; bounds are quantiles of counts simulated under each bootstrap draw,
/// `sims_per_draw` paths per draw, each unit keeping one uniform across the
/// grid so that simulated paths never decrease.
pub fn fleet_prediction(
    run: &BootstrapRun,
    risk_set: &[RiskSetUnit],
    horizon_grid: &[f64],
    level: f64,
    sims_per_draw: usize,
    seed: u64,
) -> Result<PredictionCurve> {
    if risk_set.is_empty() {
        return Err(Error::input("risk set is empty"));
    }
    for u in risk_set {
        RiskSetUnit::new(u.unit_id.clone(), u.current_age)?;
    }
    check_grid(horizon_grid)?;
    check_level(level)?;
    if sims_per_draw == 0 {
        return Err(Error::input("sims_per_draw must be at least 1"));
    }
    let draws = usable_draws(run)?;
    let g = horizon_grid.len();

    let hat = &run.point_fit.params;
    let point: Vec<f64> = horizon_grid
        .iter()
        .map(|&h| {
            let mut acc = crate::numeric::CompensatedSum::new();
            for u in risk_set {
                acc.add(rho(hat, ln_survival(hat, u.current_age), u.current_age, h));
            }
            acc.value()
        })
        .collect();

    // counts[g][k] for k over all (draw, sim) pairs
    let per_draw: Vec<Vec<Vec<u32>>> = draws
        .par_iter()
        .map(|(id, p)| {
            let probs: Vec<Vec<f64>> = risk_set
                .iter()
                .map(|u| {
                    let ls = ln_survival(p, u.current_age);
                    horizon_grid.iter().map(|&h| rho(p, ls, u.current_age, h)).collect()
                })
                .collect();
            let mut rng = StreamRng::new(seed, Domain::Prediction, *id);
            (0..sims_per_draw)
                .map(|_| {
                    let mut first_fail = vec![0u32; g + 1];
                    for pr in &probs {
                        let u = rng.uniform_open();
                        // first grid index with u < ρ(h); ρ is non-decreasing
                        let k = pr.partition_point(|&r| r <= u);
                        first_fail[k] += 1;
                    }
                    let mut path = Vec::with_capacity(g);
                    let mut c = 0;
                    for &f in &first_fail[..g] {
                        c += f;
                        path.push(c);
                    }
                    path
                })
                .collect()
        })
        .collect();

    let a = 0.5 * (1.0 - level);
    let mut lower = Vec::with_capacity(g);
    let mut upper = Vec::with_capacity(g);
    let mut column: Vec<f64> = Vec::with_capacity(draws.len() * sims_per_draw);
    for gi in 0..g {
        column.clear();
        column.extend(per_draw.iter().flatten().map(|path| path[gi] as f64));
        column.sort_by(f64::total_cmp);
        lower.push(quantile_sorted(&column, a));
        upper.push(quantile_sorted(&column, 1.0 - a));
    }
    let containment_violations = (0..g)
        .filter(|&i| point[i] < lower[i] || point[i] > upper[i])
        .collect();
    Ok(PredictionCurve {
        horizon_grid: horizon_grid.to_vec(),
        point,
        lower,
        upper,
        level,
        containment_violations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemainingLife {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    /// Draws whose survival at the current age did not underflow.
    pub draws_used: usize,
}

/// Prediction interval for the remaining life of one surviving unit: the
/// median over bootstrap draws of the conditional lower and upper quantiles.
pub fn individual_prediction(run: &BootstrapRun, unit: &RiskSetUnit, level: f64) -> Result<RemainingLife> {
    check_level(level)?;
    let unit = RiskSetUnit::new(unit.unit_id.clone(), unit.current_age)?;
    let age = unit.current_age;
    if ln_survival(&run.point_fit.params, age) == f64::NEG_INFINITY {
        return Err(Error::numerical(format!(
            "survival at age {age} underflows under the fitted model; the prediction would be pure extrapolation"
        )));
    }
    let draws = usable_draws(run)?;
    let a = 0.5 * (1.0 - level);
    let (ln_lo, ln_hi) = ((-a).ln_1p(), a.ln());
    let mut los = vec![];
    let mut his = vec![];
    for (_, p) in &draws {
        let ls = ln_survival(p, age);
        if ls == f64::NEG_INFINITY {
            continue;
        }
        // S(t) = S(age)·(1 − p)
        let (Ok(lo), Ok(hi)) = (quantile_from_log_survival(p, ls + ln_lo), quantile_from_log_survival(p, ls + ln_hi))
        else {
            continue;
        };
        los.push(lo.max(age));
        his.push(hi.max(age));
    }
    if los.is_empty() {
        return Err(Error::numerical(format!(
            "survival at age {age} underflows under every bootstrap draw"
        )));
    }
    los.sort_by(f64::total_cmp);
    his.sort_by(f64::total_cmp);
    Ok(RemainingLife {
        lower: quantile_sorted(&los, 0.5) - age,
        upper: quantile_sorted(&his, 0.5) - age,
        level,
        draws_used: los.len(),
    })
}
