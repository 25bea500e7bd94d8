//! Bootstrap runs under integer or fractional random weights, percentile
//! and bias-corrected percentile intervals, and pathology tallies.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::special::{norm_cdf, norm_quantile};
use crate::dist::{Family, ModelParams, ParamName};
use crate::error::{Error, Result};
use crate::fit::{fit_ml, FitOptions, FitResult};
use crate::likelihood::{check_mle_exists, expand_units, MleVerdict, Observation};
use crate::numeric::quantile_sorted;
use crate::rng::StreamRng;
use crate::weights::{gen_weights, WeightScheme};

pub const DEFAULT_B: usize = 2500;
/// Minimum usable draws for an interval.
pub const MIN_USABLE: usize = 100;
/// Share of pathological replicates above which a strict run fails.
pub const STRICT_PATHOLOGY_RATE: f64 = 0.05;

#[derive(Debug, Clone, Default)]
pub struct BootstrapOptions {
    pub fit: FitOptions,
    /// Give every unit of a grouped record its own weight instead of one
    /// weight per record.
    pub unit_level: bool,
    /// Fail the run when more than 5% of replicates are pathological.
    pub strict: bool,
    /// Use these weights for every replicate instead of random ones.
    pub weight_override: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReplicateState {
    Ok,
    /// Converged with a parameter on its box bound.
    Boundary,
    Unconverged,
    /// Integer weights left too few failures for an ML estimate.
    Degenerate,
    /// The fit returned an error.
    Failed,
}

impl ReplicateState {
    pub fn as_str(self) -> &'static str {
        match self {
            ReplicateState::Ok => "ok",
            ReplicateState::Boundary => "boundary",
            ReplicateState::Unconverged => "unconverged",
            ReplicateState::Degenerate => "degenerate",
            ReplicateState::Failed => "failed",
        }
    }

    /// Rows that enter interval computations.
    pub fn is_usable(self) -> bool {
        matches!(self, ReplicateState::Ok | ReplicateState::Boundary)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateStatus {
    pub replicate_id: u64,
    pub converged: bool,
    pub boundary_hit: Vec<ParamName>,
    pub degenerate_weights: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ReplicateStatus {
    pub fn state(&self) -> ReplicateState {
        if self.degenerate_weights {
            ReplicateState::Degenerate
        } else if self.error.is_some() {
            ReplicateState::Failed
        } else if !self.converged {
            ReplicateState::Unconverged
        } else if !self.boundary_hit.is_empty() {
            ReplicateState::Boundary
        } else {
            ReplicateState::Ok
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapRun {
    pub family: Family,
    pub scheme: WeightScheme,
    pub b: usize,
    pub master_seed: u64,
    pub unit_level: bool,
    /// Row b-1 holds replicate b in reporting order; `None` when no estimate
    /// was produced (degenerate weights or a failed fit).
    pub estimates: Vec<Option<Vec<f64>>>,
    pub statuses: Vec<ReplicateStatus>,
    pub point_fit: FitResult,
}

impl BootstrapRun {
    pub fn param_names(&self) -> &'static [ParamName] {
        self.family.param_names()
    }

    fn param_index(&self, name: ParamName) -> Result<usize> {
        self.param_names()
            .iter()
            .position(|&n| n == name)
            .ok_or_else(|| Error::input(format!("{} has no parameter {name}", self.family)))
    }

    /// Draws of one parameter; NaN marks rows excluded from intervals.
    pub fn draws(&self, name: ParamName) -> Result<Vec<f64>> {
        let k = self.param_index(name)?;
        Ok(self
            .estimates
            .iter()
            .zip(&self.statuses)
            .map(|(e, s)| match e {
                Some(v) if s.state().is_usable() => v[k],
                _ => f64::NAN,
            })
            .collect())
    }

    /// Parameter sets of the usable replicates, in replicate order.
    pub fn usable_params(&self) -> Vec<ModelParams> {
        self.estimates
            .iter()
            .zip(&self.statuses)
            .filter(|(_, s)| s.state().is_usable())
            .filter_map(|(e, _)| e.as_ref().and_then(|v| ModelParams::from_values(self.family, v).ok()))
            .collect()
    }

    pub fn usable_count(&self) -> usize {
        self.statuses.iter().filter(|s| s.state().is_usable()).count()
    }

    /// One row per replicate: replicate_id, status, parameter draws.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("replicate_id,status");
        for n in self.param_names() {
            s.push(',');
            s.push_str(n.as_str());
        }
        s.push('\n');
        for (e, st) in self.estimates.iter().zip(&self.statuses) {
            s.push_str(&format!("{},{}", st.replicate_id, st.state().as_str()));
            for k in 0..self.param_names().len() {
                s.push(',');
                if let Some(v) = e {
                    s.push_str(&format!("{}", v[k]));
                }
            }
            s.push('\n');
        }
        s
    }
}

struct Context<'a> {
    family: Family,
    data: &'a [Observation],
    scheme: WeightScheme,
    master_seed: u64,
    fit_opts: FitOptions,
    weight_override: Option<&'a [f64]>,
}

impl Context<'_> {
    fn replicate(&self, b: u64) -> (Option<Vec<f64>>, ReplicateStatus) {
        let mut status = ReplicateStatus {
            replicate_id: b,
            converged: false,
            boundary_hit: vec![],
            degenerate_weights: false,
            error: None,
        };
        let weights = match self.weight_override {
            Some(w) => w.to_vec(),
            None => {
                let mut rng = StreamRng::replicate(self.master_seed, b);
                match gen_weights(self.scheme, self.data.len(), &mut rng, b) {
                    Ok(w) => w.into_values(),
                    Err(e) => {
                        status.error = Some(e.to_string());
                        return (None, status);
                    }
                }
            }
        };
        if let MleVerdict::Degenerate(_) = check_mle_exists(self.data, Some(&weights)) {
            if self.scheme == WeightScheme::MultinomialInteger {
                status.degenerate_weights = true;
            } else {
                status.error = Some("ML estimate does not exist for these weights".into());
            }
            return (None, status);
        }
        match fit_ml(self.family, self.data, Some(&weights), &self.fit_opts) {
            Ok(f) => {
                status.converged = f.converged;
                status.boundary_hit = f.boundary_hit.clone();
                (Some(f.params.values()), status)
            }
            Err(e) => {
                status.error = Some(e.to_string());
                (None, status)
            }
        }
    }
}

fn prepare(data: &[Observation], opts: &BootstrapOptions) -> Vec<Observation> {
    if opts.unit_level {
        expand_units(data)
    } else {
        data.to_vec()
    }
}

fn point_fit(family: Family, data: &[Observation], opts: &BootstrapOptions) -> Result<FitResult> {
    let fit = fit_ml(family, data, None, &FitOptions { start: None, compute_info: true, ..opts.fit.clone() })
        .map_err(|e| match e {
            Error::InvalidInput(_) | Error::Parse { .. } => e,
            other => Error::numerical(format!("point fit on the original data failed: {other}")),
        })?;
    if !fit.converged {
        return Err(Error::numerical("point fit on the original data did not converge"));
    }
    Ok(fit)
}

fn replicate_fit_options(opts: &BootstrapOptions, point: &FitResult) -> FitOptions {
    FitOptions {
        start: Some(point.params),
        compute_info: false,
        ..opts.fit.clone()
    }
}

/// Runs B weighted refits. Replicate b (1-based) draws its weights from the
/// stream (master_seed, b), so the output does not depend on scheduling.
pub fn run_bootstrap(
    family: Family,
    data: &[Observation],
    scheme: WeightScheme,
    b: usize,
    master_seed: u64,
    opts: &BootstrapOptions,
) -> Result<BootstrapRun> {
    if b == 0 {
        return Err(Error::input("B must be at least 1"));
    }
    let data = prepare(data, opts);
    if let Some(w) = &opts.weight_override {
        if w.len() != data.len() {
            return Err(Error::input(format!(
                "weight override has length {}, data has {} rows",
                w.len(),
                data.len()
            )));
        }
    }
    let point = point_fit(family, &data, opts)?;
    let ctx = Context {
        family,
        data: &data,
        scheme,
        master_seed,
        fit_opts: replicate_fit_options(opts, &point),
        weight_override: opts.weight_override.as_deref(),
    };
    let rows: Vec<(Option<Vec<f64>>, ReplicateStatus)> =
        (1..=b as u64).into_par_iter().map(|i| ctx.replicate(i)).collect();
    let (estimates, statuses) = rows.into_iter().unzip();
    let run = BootstrapRun {
        family,
        scheme,
        b,
        master_seed,
        unit_level: opts.unit_level,
        estimates,
        statuses,
        point_fit: point,
    };
    if opts.strict {
        let report = boundary_diagnostics(&run);
        let rate = report.pathological as f64 / b as f64;
        if rate > STRICT_PATHOLOGY_RATE {
            return Err(Error::Pathology(format!(
                "{} of {b} replicates pathological ({:.1}%): {} degenerate, {} unconverged, {} failed, {} at a bound",
                report.pathological,
                100.0 * rate,
                report.degenerate_count,
                report.unconverged_count,
                report.failed_count,
                report.boundary_count
            )));
        }
    }
    Ok(run)
}

/// Recomputes one replicate of a run from (master_seed, b) alone.
pub fn replay_replicate(
    family: Family,
    data: &[Observation],
    scheme: WeightScheme,
    master_seed: u64,
    b: u64,
    opts: &BootstrapOptions,
) -> Result<(Option<Vec<f64>>, ReplicateStatus)> {
    let data = prepare(data, opts);
    let point = point_fit(family, &data, opts)?;
    let ctx = Context {
        family,
        data: &data,
        scheme,
        master_seed,
        fit_opts: replicate_fit_options(opts, &point),
        weight_override: opts.weight_override.as_deref(),
    };
    Ok(ctx.replicate(b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootInterval {
    pub lower: f64,
    pub upper: f64,
    pub usable: usize,
    /// Non-finite draws (missing or unconverged rows) left out.
    pub excluded: usize,
}

fn usable_sorted(draws: &[f64]) -> Result<(Vec<f64>, usize)> {
    let mut v: Vec<f64> = draws.iter().copied().filter(|x| x.is_finite()).collect();
    let excluded = draws.len() - v.len();
    if v.len() < MIN_USABLE {
        return Err(Error::numerical(format!(
            "only {} usable bootstrap draws; at least {MIN_USABLE} are needed",
            v.len()
        )));
    }
    v.sort_by(f64::total_cmp);
    Ok((v, excluded))
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::input(format!("confidence level must lie in (0, 1), got {level}")))
    }
}

/// Simple percentile interval; NaN draws are excluded and counted.
pub fn percentile_interval(draws: &[f64], level: f64) -> Result<BootInterval> {
    check_level(level)?;
    let (v, excluded) = usable_sorted(draws)?;
    let a = 0.5 * (1.0 - level);
    Ok(BootInterval {
        lower: quantile_sorted(&v, a),
        upper: quantile_sorted(&v, 1.0 - a),
        usable: v.len(),
        excluded,
    })
}

/// Median-bias correction z₀ with ties counted as half.
pub fn bias_correction(sorted: &[f64], point: f64) -> f64 {
    let below = sorted.partition_point(|&x| x < point);
    let upto = sorted.partition_point(|&x| x <= point);
    let p = (below as f64 + 0.5 * (upto - below) as f64) / sorted.len() as f64;
    norm_quantile(p)
}

/// Bias-corrected percentile interval.
pub fn bc_percentile_interval(draws: &[f64], point_estimate: f64, level: f64) -> Result<BootInterval> {
    check_level(level)?;
    if !point_estimate.is_finite() {
        return Err(Error::input("point estimate must be finite"));
    }
    let (v, excluded) = usable_sorted(draws)?;
    let z0 = bias_correction(&v, point_estimate);
    if !z0.is_finite() {
        return Err(Error::numerical(
            "every bootstrap draw lies on one side of the point estimate, so the bias correction is infinite; use the simple percentile interval",
        ));
    }
    let a = 0.5 * (1.0 - level);
    let (a1, a2) = if z0 == 0.0 {
        // skip the Φ(Φ⁻¹(a)) round trip so the two intervals agree exactly
        (a, 1.0 - a)
    } else {
        let zl = norm_quantile(a);
        (norm_cdf(2.0 * z0 + zl), norm_cdf(2.0 * z0 - zl))
    };
    Ok(BootInterval {
        lower: quantile_sorted(&v, a1),
        upper: quantile_sorted(&v, a2),
        usable: v.len(),
        excluded,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCount {
    pub param: ParamName,
    pub at_lower: usize,
    pub at_upper: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathologyReport {
    pub b: usize,
    pub usable: usize,
    pub bounds: Vec<BoundCount>,
    /// Usable replicates with any parameter on a bound.
    pub boundary_count: usize,
    pub unconverged_count: usize,
    pub degenerate_count: usize,
    pub failed_count: usize,
    /// Degenerate, unconverged, failed or at a bound.
    pub pathological: usize,
}

/// Tallies boundary hits and missing rows. usable + unconverged + degenerate
/// + failed = B.
pub fn boundary_diagnostics(run: &BootstrapRun) -> PathologyReport {
    let mut bounds: Vec<BoundCount> = run
        .param_names()
        .iter()
        .map(|&p| BoundCount {
            param: p,
            at_lower: 0,
            at_upper: 0,
        })
        .collect();
    let (mut usable, mut boundary, mut unconv, mut degen, mut failed) = (0, 0, 0, 0, 0);
    for (e, s) in run.estimates.iter().zip(&run.statuses) {
        match s.state() {
            ReplicateState::Ok => usable += 1,
            ReplicateState::Boundary => {
                usable += 1;
                boundary += 1;
            }
            ReplicateState::Unconverged => unconv += 1,
            ReplicateState::Degenerate => degen += 1,
            ReplicateState::Failed => failed += 1,
        }
        if let Some(v) = e {
            for p in &s.boundary_hit {
                // only λ has box bounds, at ±12
                if let Some(k) = run.param_names().iter().position(|n| n == p) {
                    if v[k] < 0.0 {
                        bounds[k].at_lower += 1;
                    } else {
                        bounds[k].at_upper += 1;
                    }
                }
            }
        }
    }
    PathologyReport {
        b: run.b,
        usable,
        bounds,
        boundary_count: boundary,
        unconverged_count: unconv,
        degenerate_count: degen,
        failed_count: failed,
        pathological: boundary + unconv + degen + failed,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// Bin edges; `counts[i]` covers [edges[i], edges[i+1]).
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Bin cap so that a few wild draws cannot request millions of bins.
pub const MAX_BINS: usize = 1000;

/// Freedman–Diaconis histogram of the finite draws.
pub fn fd_histogram(draws: &[f64]) -> Option<Histogram> {
    let mut v: Vec<f64> = draws.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let (lo, hi) = (v[0], v[v.len() - 1]);
    let iqr = quantile_sorted(&v, 0.75) - quantile_sorted(&v, 0.25);
    let mut width = 2.0 * iqr / (v.len() as f64).cbrt();
    if !(width > 0.0) || hi == lo {
        return Some(Histogram {
            edges: vec![lo, hi],
            counts: vec![v.len()],
        });
    }
    let mut bins = ((hi - lo) / width).ceil().max(1.0) as usize;
    if bins > MAX_BINS {
        bins = MAX_BINS;
        width = (hi - lo) / bins as f64;
    }
    let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![0; bins];
    for x in v {
        let i = (((x - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    Some(Histogram { edges, counts })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_examples() {
        let d: Vec<f64> = (1..=100).map(f64::from).collect();
        let ci = percentile_interval(&d, 0.5).unwrap();
        assert_eq!((ci.lower, ci.upper), (25.75, 75.25));
        let c = vec![3.5; 150];
        let ci = percentile_interval(&c, 0.95).unwrap();
        assert_eq!((ci.lower, ci.upper), (3.5, 3.5));
        let short = vec![1.0; 99];
        assert!(percentile_interval(&short, 0.9).unwrap_err().to_string().contains("99"));
        let mut with_missing = d.clone();
        with_missing.push(f64::NAN);
        assert_eq!(percentile_interval(&with_missing, 0.5).unwrap().excluded, 1);
    }

    #[test]
    fn bc_with_zero_bias_equals_percentile() {
        let d: Vec<f64> = (1..=101).map(|i| (i as f64).sqrt()).collect();
        let med = quantile_sorted(&d, 0.5);
        for level in [0.5, 0.8, 0.95] {
            let a = percentile_interval(&d, level).unwrap();
            let b = bc_percentile_interval(&d, med, level).unwrap();
            assert_eq!((a.lower, a.upper), (b.lower, b.upper));
        }
        assert!(bc_percentile_interval(&d, 100.0, 0.9).is_err());
        assert!(bc_percentile_interval(&d, 0.0, 0.9).is_err());
    }

    #[test]
    fn bias_correction_counts_ties_half() {
        let v = [1.0, 2.0, 2.0, 3.0];
        assert_eq!(bias_correction(&v, 2.0), 0.0);
        assert!((bias_correction(&v, 2.5) - norm_quantile(0.75)).abs() < 1e-15);
    }

    #[test]
    fn histogram_counts_every_draw() {
        let d: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1000) as f64 / 10.0).collect();
        let h = fd_histogram(&d).unwrap();
        assert_eq!(h.counts.iter().sum::<usize>(), 1000);
        assert_eq!(h.edges.len(), h.counts.len() + 1);
        let mut wild = d.clone();
        wild.push(1e12);
        assert!(fd_histogram(&wild).unwrap().counts.len() <= MAX_BINS);
    }
}
