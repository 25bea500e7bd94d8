//! Loglikelihood contributions for censored and left-truncated records,
//! weighted totals, and the existence check for ML estimates.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dist::{LocScale, LogTerms, ModelParams};
use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, ln1mexp, CompensatedSum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObsKind {
    Exact,
    #[serde(rename = "right")]
    RightCensored,
    #[serde(rename = "left")]
    LeftCensored,
    #[serde(rename = "interval")]
    IntervalCensored,
}

impl ObsKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ObsKind::Exact => "exact",
            ObsKind::RightCensored => "right",
            ObsKind::LeftCensored => "left",
            ObsKind::IntervalCensored => "interval",
        }
    }
}

impl fmt::Display for ObsKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ObsKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" | "failure" | "f" => Ok(ObsKind::Exact),
            "right" | "r" | "censored" => Ok(ObsKind::RightCensored),
            "left" | "l" => Ok(ObsKind::LeftCensored),
            "interval" | "i" => Ok(ObsKind::IntervalCensored),
            other => Err(Error::input(format!("unknown observation kind '{other}'"))),
        }
    }
}

/// One life-data record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Failure time, censoring time, or lower end of an interval.
    pub time: f64,
    /// Upper end for interval-censored records.
    pub time2: Option<f64>,
    pub kind: ObsKind,
    /// Units enter observation only after surviving past this age.
    pub truncation_lower: Option<f64>,
    pub count: u32,
}

impl Observation {
    fn plain(time: f64, kind: ObsKind) -> Self {
        Self {
            time,
            time2: None,
            kind,
            truncation_lower: None,
            count: 1,
        }
    }

    pub fn exact(time: f64) -> Self {
        Self::plain(time, ObsKind::Exact)
    }

    pub fn right(time: f64) -> Self {
        Self::plain(time, ObsKind::RightCensored)
    }

    pub fn left(time: f64) -> Self {
        Self::plain(time, ObsKind::LeftCensored)
    }

    pub fn interval(lower: f64, upper: f64) -> Self {
        Self {
            time2: Some(upper),
            ..Self::plain(lower, ObsKind::IntervalCensored)
        }
    }

    pub fn with_count(mut self, count: u32) -> Self {
        self.count = count;
        self
    }

    pub fn truncated_at(mut self, tau: f64) -> Self {
        self.truncation_lower = Some(tau);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.time > 0.0) || !self.time.is_finite() {
            return Err(Error::input(format!("time must be positive, got {}", self.time)));
        }
        if self.count == 0 {
            return Err(Error::input("count must be at least 1"));
        }
        match (self.kind, self.time2) {
            (ObsKind::IntervalCensored, Some(t2)) if t2 > self.time && t2.is_finite() => {}
            (ObsKind::IntervalCensored, Some(t2)) => {
                return Err(Error::input(format!(
                    "interval upper end {t2} must exceed lower end {}",
                    self.time
                )))
            }
            (ObsKind::IntervalCensored, None) => {
                return Err(Error::input("interval-censored record needs time2"))
            }
            (_, Some(_)) => {
                return Err(Error::input(format!("time2 is only valid for interval records, not {}", self.kind)))
            }
            _ => {}
        }
        if let Some(tau) = self.truncation_lower {
            if !(tau >= 0.0) || tau >= self.time {
                return Err(Error::input(format!(
                    "truncation bound {tau} must lie in [0, {})",
                    self.time
                )));
            }
        }
        Ok(())
    }

    /// Closed support [lo, hi] of the event time implied by this record.
    fn support(&self) -> (f64, f64) {
        match self.kind {
            ObsKind::Exact => (self.time, self.time),
            ObsKind::RightCensored => (self.time, f64::INFINITY),
            ObsKind::LeftCensored => (0.0, self.time),
            ObsKind::IntervalCensored => (self.time, self.time2.unwrap_or(f64::INFINITY)),
        }
    }
}

/// Contribution of one record (times its count) under a distribution given
/// in location-scale form. Returns -inf when the record has zero probability.
pub(crate) fn record_loglik(
    ls: &LocScale,
    kind: ObsKind,
    ln_t: f64,
    ln_t2: f64,
    ln_tau: Option<f64>,
) -> f64 {
    let a: LogTerms = ls.terms_at_log_time(ln_t);
    let mut l = match kind {
        ObsKind::Exact => a.ln_pdf,
        ObsKind::RightCensored => a.ln_surv,
        ObsKind::LeftCensored => a.ln_cdf,
        ObsKind::IntervalCensored => {
            let b = ls.terms_at_log_time(ln_t2);
            // F(t2) - F(t1) from whichever tail carries the digits
            if b.ln_cdf < -std::f64::consts::LN_2 {
                if a.ln_cdf >= b.ln_cdf {
                    f64::NEG_INFINITY
                } else {
                    b.ln_cdf + ln1mexp(a.ln_cdf - b.ln_cdf)
                }
            } else if b.ln_surv >= a.ln_surv {
                f64::NEG_INFINITY
            } else {
                a.ln_surv + ln1mexp(b.ln_surv - a.ln_surv)
            }
        }
    };
    if let Some(lt) = ln_tau {
        l -= ls.terms_at_log_time(lt).ln_surv;
    }
    if l.is_nan() {
        f64::NEG_INFINITY
    } else {
        l
    }
}

fn ln_tau(obs: &Observation) -> Option<f64> {
    obs.truncation_lower.filter(|&t| t > 0.0).map(f64::ln)
}

/// Loglikelihood contribution of one record, multiplied by its count.
/// A record with numerically zero probability yields -inf.
pub fn obs_loglik(obs: &Observation, params: &ModelParams) -> Result<f64> {
    obs.validate()?;
    params.validate()?;
    let ls = params.loc_scale();
    let l = record_loglik(
        &ls,
        obs.kind,
        obs.time.ln(),
        obs.time2.map_or(f64::NAN, f64::ln),
        ln_tau(obs),
    );
    Ok(if l == f64::NEG_INFINITY {
        l
    } else {
        obs.count as f64 * l
    })
}

/// Σ wᵢ lᵢ(θ); `weights = None` gives the ordinary loglikelihood. Weights
/// attach to records: a record with count k and weight w contributes w·k·lᵢ.
pub fn weighted_loglik(
    data: &[Observation],
    weights: Option<&[f64]>,
    params: &ModelParams,
) -> Result<f64> {
    if let Some(w) = weights {
        if w.len() != data.len() {
            return Err(Error::input(format!(
                "weight length {} does not match {} records",
                w.len(),
                data.len()
            )));
        }
    }
    let mut acc = CompensatedSum::new();
    for (i, obs) in data.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        if w == 0.0 {
            continue;
        }
        let l = obs_loglik(obs, params)?;
        if l == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        acc.add(w * l);
    }
    Ok(acc.value())
}

/// Expands grouped records into one record per unit.
pub fn expand_units(data: &[Observation]) -> Vec<Observation> {
    data.iter()
        .flat_map(|o| std::iter::repeat_n(o.with_count(1), o.count as usize))
        .collect()
}

pub fn total_units(data: &[Observation]) -> u64 {
    data.iter().map(|o| o.count as u64).sum()
}

/// Records with identical (kind, times, truncation) merged, weight × count summed.
/// This is what the optimizer evaluates.
#[derive(Debug, Clone)]
pub(crate) struct CompactData {
    pub kind: Vec<ObsKind>,
    pub ln_t: Vec<f64>,
    pub ln_t2: Vec<f64>,
    pub ln_tau: Vec<Option<f64>>,
    pub weight: Vec<f64>,
    pub total_weight: f64,
}

impl CompactData {
    pub fn new(data: &[Observation], weights: Option<&[f64]>) -> Self {
        let mut rows: Vec<(ObsKind, u64, u64, u64, f64)> = data
            .iter()
            .enumerate()
            .filter_map(|(i, o)| {
                let w = weights.map_or(1.0, |w| w[i]) * o.count as f64;
                (w > 0.0).then(|| {
                    (
                        o.kind,
                        o.time.to_bits(),
                        o.time2.unwrap_or(0.0).to_bits(),
                        o.truncation_lower.filter(|&t| t > 0.0).unwrap_or(0.0).to_bits(),
                        w,
                    )
                })
            })
            .collect();
        rows.sort_by_key(|r| (r.0, r.1, r.2, r.3));
        let mut out = CompactData {
            kind: vec![],
            ln_t: vec![],
            ln_t2: vec![],
            ln_tau: vec![],
            weight: vec![],
            total_weight: 0.0,
        };
        let mut sums: Vec<CompensatedSum> = vec![];
        let mut last: Option<(ObsKind, u64, u64, u64)> = None;
        for (k, t, t2, tau, w) in rows {
            if last != Some((k, t, t2, tau)) {
                out.kind.push(k);
                out.ln_t.push(f64::from_bits(t).ln());
                out.ln_t2.push(if k == ObsKind::IntervalCensored {
                    f64::from_bits(t2).ln()
                } else {
                    f64::NAN
                });
                let tau = f64::from_bits(tau);
                out.ln_tau.push((tau > 0.0).then(|| tau.ln()));
                sums.push(CompensatedSum::new());
                last = Some((k, t, t2, tau.to_bits()));
            }
            sums.last_mut().unwrap().add(w);
        }
        out.weight = sums.iter().map(|s| s.value()).collect();
        out.total_weight = compensated_sum(out.weight.iter().copied());
        out
    }

    pub fn loglik(&self, ls: &LocScale) -> f64 {
        let mut acc = CompensatedSum::new();
        for i in 0..self.weight.len() {
            let l = record_loglik(ls, self.kind[i], self.ln_t[i], self.ln_t2[i], self.ln_tau[i]);
            if l == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            acc.add(self.weight[i] * l);
        }
        acc.value()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DegenerateReason {
    /// Every weight is zero.
    NoWeightedData,
    /// No record with an upper bound on its failure time.
    NoFailures,
    /// Exact failures present but no two distinct ones and no right-censored
    /// time beyond a failure.
    NoTwoDistinctFailures,
    /// A single failure time is consistent with every record.
    CommonFailureTime,
    /// Censored-only data whose left-censored times are not later, on the log
    /// scale, than its right-censored times; the likelihood climbs as σ → ∞.
    NoIncreasingTrend,
}

impl fmt::Display for DegenerateReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DegenerateReason::NoWeightedData => "no observations with positive weight",
            DegenerateReason::NoFailures => "no failures",
            DegenerateReason::NoTwoDistinctFailures => "no two distinct failures",
            DegenerateReason::CommonFailureTime => {
                "one failure time is consistent with every observation"
            }
            DegenerateReason::NoIncreasingTrend => {
                "left-censored times do not exceed right-censored times"
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MleVerdict {
    Exists,
    Degenerate(DegenerateReason),
}

impl MleVerdict {
    pub fn exists(&self) -> bool {
        matches!(self, MleVerdict::Exists)
    }
}

/// Existence of the (weighted) ML estimate for a log-location-scale family.
///
/// For exact and right-censored records this is the classical condition: at
/// least two distinct failure times, or one failure and a right-censored time
/// strictly beyond it. With left- or interval-censored records the same idea
/// generalizes to "no single time is consistent with every record", and
/// data with no exact or interval records additionally need the left-censored
/// times to sit later (mean log time) than the right-censored ones.
/// Only records with positive weight count; truncation is ignored.
pub fn check_mle_exists(data: &[Observation], weights: Option<&[f64]>) -> MleVerdict {
    let active: Vec<(&Observation, f64)> = data
        .iter()
        .enumerate()
        .map(|(i, o)| (o, weights.map_or(1.0, |w| w.get(i).copied().unwrap_or(0.0)) * o.count as f64))
        .filter(|(_, w)| *w > 0.0)
        .collect();
    if active.is_empty() {
        return MleVerdict::Degenerate(DegenerateReason::NoWeightedData);
    }
    let has_failure_info = active.iter().any(|(o, _)| o.kind != ObsKind::RightCensored);
    if !has_failure_info {
        return MleVerdict::Degenerate(DegenerateReason::NoFailures);
    }
    let lo = active.iter().map(|(o, _)| o.support().0).fold(f64::NEG_INFINITY, f64::max);
    let hi = active.iter().map(|(o, _)| o.support().1).fold(f64::INFINITY, f64::min);
    if lo <= hi {
        let has_exact = active.iter().any(|(o, _)| o.kind == ObsKind::Exact);
        return MleVerdict::Degenerate(if has_exact {
            DegenerateReason::NoTwoDistinctFailures
        } else {
            DegenerateReason::CommonFailureTime
        });
    }
    let has_density = active
        .iter()
        .any(|(o, _)| matches!(o.kind, ObsKind::Exact | ObsKind::IntervalCensored));
    if !has_density {
        let mean_log = |kind: ObsKind| {
            let (s, w) = active
                .iter()
                .filter(|(o, _)| o.kind == kind)
                .fold((0.0, 0.0), |(s, ws), (o, w)| (s + w * o.time.ln(), ws + w));
            s / w
        };
        // both kinds are present here, otherwise the supports would intersect
        if !(mean_log(ObsKind::LeftCensored) > mean_log(ObsKind::RightCensored)) {
            return MleVerdict::Degenerate(DegenerateReason::NoIncreasingTrend);
        }
    }
    MleVerdict::Exists
}

/// Profile-maximizing Weibull scale at fixed shape β for exact and
/// right-censored records: η̂(β) = (Σ_all wᵢtᵢ^β / Σ_failures wᵢ)^{1/β}.
pub fn weibull_profile_eta(data: &[Observation], weights: Option<&[f64]>, beta: f64) -> Result<f64> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::input(format!("shape must be positive, got {beta}")));
    }
    if let Some(w) = weights {
        if w.len() != data.len() {
            return Err(Error::input("weight length does not match data"));
        }
    }
    let mut terms = Vec::with_capacity(data.len());
    let mut fail_weight = CompensatedSum::new();
    for (i, o) in data.iter().enumerate() {
        o.validate()?;
        let w = weights.map_or(1.0, |w| w[i]) * o.count as f64;
        if w <= 0.0 {
            continue;
        }
        match o.kind {
            ObsKind::Exact => fail_weight.add(w),
            ObsKind::RightCensored => {}
            other => {
                return Err(Error::input(format!(
                    "closed-form profile needs exact or right-censored data, found {other}"
                )))
            }
        }
        if o.truncation_lower.is_some_and(|t| t > 0.0) {
            return Err(Error::input("closed-form profile does not support truncation"));
        }
        terms.push(w.ln() + beta * o.time.ln());
    }
    let fw = fail_weight.value();
    if !(fw > 0.0) {
        return Err(Error::Degenerate(DegenerateReason::NoFailures));
    }
    // log-sum-exp keeps t^β from overflowing at large β
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + compensated_sum(terms.iter().map(|x| (x - m).exp())).ln();
    Ok(((lse - fw.ln()) / beta).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wb(eta: f64, beta: f64) -> ModelParams {
        ModelParams::weibull(eta, beta).unwrap()
    }

    #[test]
    fn right_censored_is_negative_cumulative_hazard() {
        let (t, eta, beta) = (3.0f64, 5.0f64, 1.7f64);
        let l = obs_loglik(&Observation::right(t), &wb(eta, beta)).unwrap();
        assert!((l + (t / eta).powf(beta)).abs() < 1e-14);
    }

    #[test]
    fn truncation_conditions_on_survival() {
        let p = wb(5.0, 2.0);
        let base = obs_loglik(&Observation::exact(4.0), &p).unwrap();
        let tau = 2.0f64;
        let trunc = obs_loglik(&Observation::exact(4.0).truncated_at(tau), &p).unwrap();
        assert!((trunc - (base + (tau / 5.0).powf(2.0))).abs() < 1e-14);
        let zero = obs_loglik(&Observation::exact(4.0).truncated_at(0.0), &p).unwrap();
        assert_eq!(zero, base);
    }

    #[test]
    fn left_and_interval_contributions() {
        let p = wb(5.0, 2.0);
        let cdf = |t: f64| 1.0 - (-(t / 5.0f64).powi(2)).exp();
        let l = obs_loglik(&Observation::left(3.0), &p).unwrap();
        assert!((l - cdf(3.0).ln()).abs() < 1e-14);
        let i = obs_loglik(&Observation::interval(3.0, 6.0), &p).unwrap();
        assert!((i - (cdf(6.0) - cdf(3.0)).ln()).abs() < 1e-13);
        let far = obs_loglik(&Observation::interval(1e-3, 2e-3), &p).unwrap();
        assert!((far - (cdf(2e-3) - cdf(1e-3)).ln()).abs() < 1e-9);
    }

    #[test]
    fn far_tail_interval_stays_finite() {
        // S(40) - S(41) ≈ S(40) = exp(-40^50)
        let p = wb(1.0, 50.0);
        let l = obs_loglik(&Observation::interval(40.0, 41.0), &p).unwrap();
        let want = -40f64.powi(50);
        assert!((l - want).abs() < 1e-12 * want.abs());
    }

    #[test]
    fn count_multiplies() {
        let p = wb(5.0, 2.0);
        let one = obs_loglik(&Observation::right(3.0), &p).unwrap();
        let many = obs_loglik(&Observation::right(3.0).with_count(236), &p).unwrap();
        assert!((many - 236.0 * one).abs() < 1e-12);
    }

    #[test]
    fn weighted_examples() {
        let p = wb(5.0, 2.0);
        let data = vec![Observation::exact(2.0), Observation::right(6.0)];
        let l1 = obs_loglik(&data[0], &p).unwrap();
        let l2 = obs_loglik(&data[1], &p).unwrap();
        let unit = weighted_loglik(&data, None, &p).unwrap();
        assert!((unit - (l1 + l2)).abs() < 1e-14);
        let ones = weighted_loglik(&data, Some(&[1.0, 1.0]), &p).unwrap();
        assert_eq!(unit, ones);
        let silenced = weighted_loglik(&data, Some(&[2.0, 0.0]), &p).unwrap();
        assert!((silenced - 2.0 * l1).abs() < 1e-14);
        assert!(weighted_loglik(&data, Some(&[1.0]), &p).is_err());
    }

    #[test]
    fn observation_validation() {
        assert!(Observation::exact(0.0).validate().is_err());
        assert!(Observation::interval(3.0, 3.0).validate().is_err());
        assert!(Observation::exact(2.0).with_count(0).validate().is_err());
        assert!(Observation::exact(2.0).truncated_at(2.0).validate().is_err());
        assert!(Observation::exact(2.0).truncated_at(1.0).validate().is_ok());
    }

    #[test]
    fn existence_examples() {
        let ok = vec![Observation::exact(1.0), Observation::right(2.0)];
        assert_eq!(check_mle_exists(&ok, Some(&[1.0, 1.0])), MleVerdict::Exists);
        let tied = vec![Observation::exact(1.0), Observation::exact(1.0)];
        assert_eq!(
            check_mle_exists(&tied, None),
            MleVerdict::Degenerate(DegenerateReason::NoTwoDistinctFailures)
        );
        assert_eq!(
            DegenerateReason::NoTwoDistinctFailures.to_string(),
            "no two distinct failures"
        );
        assert!(!check_mle_exists(&ok, Some(&[1.0, 0.0])).exists());
        let early_censor = vec![Observation::exact(2.0), Observation::right(1.0)];
        assert!(!check_mle_exists(&early_censor, None).exists());
        let equal_censor = vec![Observation::exact(2.0), Observation::right(2.0)];
        assert!(!check_mle_exists(&equal_censor, None).exists());
        let all_censored = vec![Observation::right(2.0), Observation::right(3.0)];
        assert_eq!(
            check_mle_exists(&all_censored, None),
            MleVerdict::Degenerate(DegenerateReason::NoFailures)
        );
    }

    #[test]
    fn existence_with_left_censoring() {
        // separated: left-censored later than right-censored -> finite optimum
        let trend = vec![Observation::right(2.0), Observation::left(5.0), Observation::right(6.0), Observation::left(9.0)];
        assert!(check_mle_exists(&trend, None).exists());
        // a point mass between them explains everything
        let overlap = vec![Observation::right(2.0), Observation::left(5.0)];
        assert_eq!(
            check_mle_exists(&overlap, None),
            MleVerdict::Degenerate(DegenerateReason::CommonFailureTime)
        );
        // survival past the failure bound: likelihood climbs as sigma grows
        let anti = vec![Observation::left(2.0), Observation::right(5.0)];
        assert_eq!(
            check_mle_exists(&anti, None),
            MleVerdict::Degenerate(DegenerateReason::NoIncreasingTrend)
        );
    }

    #[test]
    fn profile_eta_examples() {
        let data = vec![Observation::exact(1.0), Observation::exact(2.0)];
        // weights summing to one over failures only: (Σ w t^β / Σ w)^(1/β)
        let eta = weibull_profile_eta(&data, Some(&[0.5, 0.5]), 1.0).unwrap();
        assert!((eta - 1.5).abs() < 1e-14);

        let (t1, t2, w1, w2, beta) = (1.3f64, 4.0f64, 0.7f64, 1.9f64, 2.4f64);
        let d2 = vec![Observation::exact(t1), Observation::right(t2)];
        let eta = weibull_profile_eta(&d2, Some(&[w1, w2]), beta).unwrap();
        let want = ((w1 * t1.powf(beta) + w2 * t2.powf(beta)) / w1).powf(1.0 / beta);
        assert!((eta - want).abs() < 1e-12 * want);

        let cens = vec![Observation::right(1.0)];
        assert!(matches!(
            weibull_profile_eta(&cens, None, 1.0),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn compact_matches_direct() {
        let p = wb(5.0, 2.0);
        let data = vec![
            Observation::exact(2.0),
            Observation::right(6.0).with_count(3),
            Observation::exact(2.0),
            Observation::left(1.0),
            Observation::interval(1.0, 4.0).truncated_at(0.5),
        ];
        let w = [0.3, 1.2, 0.9, 0.0, 2.0];
        let direct = weighted_loglik(&data, Some(&w), &p).unwrap();
        let compact = CompactData::new(&data, Some(&w));
        assert_eq!(compact.weight.len(), 3);
        assert!((compact.loglik(&p.loc_scale()) - direct).abs() < 1e-13 * direct.abs());
    }
}
