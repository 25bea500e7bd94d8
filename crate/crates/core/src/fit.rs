//! Weighted maximum-likelihood fitting and likelihood-based intervals.

use serde::{Deserialize, Serialize};

use crate::dist::special::{chi2_1_quantile, norm_quantile};
use crate::dist::{Family, Kernel, LocScale, ModelParams, ParamName, LAMBDA_BOUND, LAMBDA_LOGNORMAL_SEAM};
use crate::error::{Error, Result};
use crate::likelihood::{check_mle_exists, CompactData, MleVerdict, ObsKind, Observation};
use crate::numeric::spd_inverse;
use crate::optim::{gradient, hessian, nelder_mead, newton_polish, NelderMeadOptions};

/// Distance from ±12 at which λ counts as sitting on its bound.
pub const BOUNDARY_TOL: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Simplex iteration cap per restart.
    pub max_iter: usize,
    /// Max-norm tolerance on the gradient of loglik/W in internal coordinates.
    pub grad_tol: f64,
    /// Start here instead of the data-driven starting points (one restart;
    /// the full set is tried only if that does not converge).
    pub start: Option<ModelParams>,
    /// Compute the observed information and standard errors.
    pub compute_info: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            grad_tol: 1e-6,
            start: None,
            compute_info: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: ModelParams,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Negative Hessian of the loglikelihood in internal coordinates
    /// (μ, ln σ[, atanh(λ/12)]); empty when not computed.
    pub info_matrix: Vec<Vec<f64>>,
    /// Standard errors in reporting order; `None` where the information is
    /// not positive definite.
    pub se: Vec<Option<f64>>,
    pub boundary_hit: Vec<ParamName>,
    /// Σ wᵢ·countᵢ over the fitted records.
    pub total_weight: f64,
}

impl FitResult {
    pub fn family(&self) -> Family {
        self.params.family()
    }

    /// Inverse observed information in internal coordinates.
    pub fn internal_covariance(&self) -> Option<Vec<Vec<f64>>> {
        if self.info_matrix.is_empty() {
            return None;
        }
        spd_inverse(&self.info_matrix)
    }

    pub fn se_of(&self, name: ParamName) -> Option<f64> {
        let i = self.family().param_names().iter().position(|&n| n == name)?;
        self.se[i]
    }
}

pub(crate) fn loc_scale_internal(family: Family, z: &[f64]) -> LocScale {
    let sigma = z[1].exp();
    let kind = match family {
        Family::Weibull => Kernel::Sev,
        Family::Lognormal => Kernel::Normal,
        Family::GenGamma => {
            let lambda = LAMBDA_BOUND * z[2].tanh();
            if lambda.abs() < LAMBDA_LOGNORMAL_SEAM {
                Kernel::Normal
            } else {
                Kernel::LogGamma(lambda)
            }
        }
    };
    LocScale { kind, mu: z[0], sigma }
}

fn objective(family: Family, cd: &CompactData) -> impl Fn(&[f64]) -> f64 + '_ {
    move |z: &[f64]| {
        if z.iter().any(|v| !v.is_finite()) || z[1].abs() > 700.0 {
            return f64::INFINITY;
        }
        let l = cd.loglik(&loc_scale_internal(family, z));
        if l.is_finite() {
            -l / cd.total_weight
        } else {
            f64::INFINITY
        }
    }
}

fn validate_inputs(data: &[Observation], weights: Option<&[f64]>) -> Result<()> {
    if data.is_empty() {
        return Err(Error::input("no observations"));
    }
    for (i, o) in data.iter().enumerate() {
        o.validate().map_err(|e| Error::input(format!("record {}: {e}", i + 1)))?;
    }
    if let Some(w) = weights {
        if w.len() != data.len() {
            return Err(Error::input(format!(
                "weight length {} does not match {} records",
                w.len(),
                data.len()
            )));
        }
        if let Some(bad) = w.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::input(format!("weights must be finite and non-negative, got {bad}")));
        }
    }
    Ok(())
}

/// Least squares on the probability-plot linearization of a weighted
/// Kaplan-Meier estimate, using exact and right-censored records.
fn probability_plot_start(kernel: Kernel, data: &[Observation], weights: Option<&[f64]>) -> Option<(f64, f64)> {
    let mut rows: Vec<(f64, bool, f64)> = data
        .iter()
        .enumerate()
        .filter(|(_, o)| matches!(o.kind, ObsKind::Exact | ObsKind::RightCensored))
        .map(|(i, o)| (o.time, o.kind == ObsKind::Exact, weights.map_or(1.0, |w| w[i]) * o.count as f64))
        .filter(|r| r.2 > 0.0)
        .collect();
    // failures before censorings at tied times
    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
    let mut at_risk: f64 = rows.iter().map(|r| r.2).sum();
    let mut surv = 1.0;
    let mut pts: Vec<(f64, f64)> = vec![];
    let mut i = 0;
    while i < rows.len() {
        let t = rows[i].0;
        let (mut d, mut c) = (0.0, 0.0);
        while i < rows.len() && rows[i].0 == t {
            if rows[i].1 {
                d += rows[i].2;
            } else {
                c += rows[i].2;
            }
            i += 1;
        }
        if d > 0.0 {
            let before = surv;
            surv *= 1.0 - d / at_risk;
            let f = 1.0 - 0.5 * (before + surv);
            if f > 0.0 && f < 1.0 {
                pts.push((t.ln(), f));
            }
        }
        at_risk -= d + c;
    }
    if pts.len() < 2 {
        return None;
    }
    let q = |f: f64| match kernel {
        Kernel::Sev => (-(-f).ln_1p()).ln(),
        _ => norm_quantile(f),
    };
    let xs: Vec<f64> = pts.iter().map(|p| q(p.1)).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let sigma = sxy / sxx;
    if !(sigma > 1e-8) || !sigma.is_finite() {
        return None;
    }
    Some((my - sigma * mx, sigma))
}

/// Moment-style start on the log scale using every record's recorded time.
fn log_moment_start(data: &[Observation], weights: Option<&[f64]>) -> (f64, f64) {
    let (mut s, mut s2, mut ws) = (0.0, 0.0, 0.0);
    for (i, o) in data.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[i]) * o.count as f64;
        if w <= 0.0 {
            continue;
        }
        let x = match (o.kind, o.time2) {
            (ObsKind::IntervalCensored, Some(t2)) => 0.5 * (o.time.ln() + t2.ln()),
            _ => o.time.ln(),
        };
        s += w * x;
        s2 += w * x * x;
        ws += w;
    }
    let mean = s / ws;
    let sd = (s2 / ws - mean * mean).max(0.0).sqrt();
    (mean, if sd > 1e-3 { sd } else { 1.0 })
}

fn default_starts(family: Family, data: &[Observation], weights: Option<&[f64]>, opts: &FitOptions) -> Vec<Vec<f64>> {
    match family {
        Family::Weibull | Family::Lognormal => {
            let kernel = if family == Family::Weibull { Kernel::Sev } else { Kernel::Normal };
            let (mu, sigma) =
                probability_plot_start(kernel, data, weights).unwrap_or_else(|| log_moment_start(data, weights));
            let ls = sigma.ln();
            vec![vec![mu, ls], vec![mu + sigma, ls + 0.7], vec![mu - 0.5 * sigma, ls - 0.7]]
        }
        Family::GenGamma => {
            let sub = FitOptions {
                compute_info: false,
                start: None,
                ..opts.clone()
            };
            let (mu, sigma) = match fit_ml(Family::Lognormal, data, weights, &sub) {
                Ok(f) if f.loglik.is_finite() => {
                    let v = f.params.values();
                    (v[0], v[1])
                }
                _ => probability_plot_start(Kernel::Normal, data, weights)
                    .unwrap_or_else(|| log_moment_start(data, weights)),
            };
            [-0.5f64, 0.0, 0.5]
                .iter()
                .map(|&l0| vec![mu, sigma.ln(), (l0 / LAMBDA_BOUND).atanh()])
                .collect()
        }
    }
}

fn boundary_of(family: Family, z: &[f64]) -> Vec<ParamName> {
    if family == Family::GenGamma {
        let lambda = LAMBDA_BOUND * z[2].tanh();
        if LAMBDA_BOUND - lambda.abs() <= BOUNDARY_TOL {
            return vec![ParamName::Lambda];
        }
    }
    vec![]
}

fn gradient_ok(family: Family, g: &[f64], tol: f64, boundary: &[ParamName]) -> bool {
    g.iter().enumerate().all(|(i, v)| {
        let skip = family == Family::GenGamma && i == 2 && boundary.contains(&ParamName::Lambda);
        skip || v.abs() < tol
    })
}

/// Maximizes the weighted loglikelihood Σ wᵢ lᵢ(θ). `weights = None` means
/// unit weights. Fails only on invalid input or when the ML estimate does not
/// exist; a search that hits its iteration cap returns `converged = false`.
pub fn fit_ml(family: Family, data: &[Observation], weights: Option<&[f64]>, opts: &FitOptions) -> Result<FitResult> {
    validate_inputs(data, weights)?;
    if let MleVerdict::Degenerate(reason) = check_mle_exists(data, weights) {
        return Err(Error::Degenerate(reason));
    }
    if family == Family::GenGamma {
        let units: f64 = data
            .iter()
            .enumerate()
            .filter(|(i, _)| weights.is_none_or(|w| w[*i] > 0.0))
            .map(|(_, o)| o.count as f64)
            .sum();
        if units < 3.0 {
            return Err(Error::input("generalized gamma fit needs at least 3 observations with positive weight"));
        }
    }
    if let Some(s) = &opts.start {
        if s.family() != family {
            return Err(Error::input(format!("start values are for {}, not {family}", s.family())));
        }
    }

    let cd = CompactData::new(data, weights);
    let obj = objective(family, &cd);
    let mut f = |z: &[f64]| obj(z);
    let nm = NelderMeadOptions {
        max_iter: opts.max_iter,
        ..Default::default()
    };

    let mut iterations = 0;
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut search = |starts: Vec<Vec<f64>>, f: &mut dyn FnMut(&[f64]) -> f64, best: &mut Option<(Vec<f64>, f64)>| {
        for s in starts {
            let m = nelder_mead(f, &s, &nm);
            iterations += m.iterations;
            if best.as_ref().is_none_or(|b| m.f < b.1) {
                *best = Some((m.x, m.f));
            }
        }
    };
    let finish = |f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64], fx: f64| {
        let (x, fx) = newton_polish(f, x, fx, 8);
        let boundary = boundary_of(family, &x);
        let g = gradient(f, &x, 1e-6);
        let ok = fx.is_finite() && gradient_ok(family, &g, opts.grad_tol, &boundary);
        (x, fx, boundary, ok)
    };

    let warm = opts.start.as_ref().map(|s| vec![s.to_internal()]);
    let used_warm = warm.is_some();
    search(
        warm.unwrap_or_else(|| default_starts(family, data, weights, opts)),
        &mut f,
        &mut best,
    );
    let (mut x, mut fx) = best.clone().expect("at least one start");
    let (mut xr, mut fr, mut boundary, mut converged) = finish(&mut f, &x, fx);
    if !converged && used_warm {
        search(default_starts(family, data, weights, opts), &mut f, &mut best);
        (x, fx) = best.clone().unwrap();
        (xr, fr, boundary, converged) = finish(&mut f, &x, fx);
    }
    // restart the simplex from the best point found so far
    for _ in 0..2 {
        if converged {
            break;
        }
        search(vec![xr.clone()], &mut f, &mut best);
        let b = best.clone().unwrap();
        let cand = if b.1 < fr { b } else { (xr.clone(), fr) };
        (xr, fr, boundary, converged) = finish(&mut f, &cand.0, cand.1);
    }

    let w_total = cd.total_weight;
    let loglik = -fr * w_total;
    let params = ModelParams::from_internal(family, &xr)?;
    let (info_matrix, se) = if opts.compute_info && fr.is_finite() {
        let h = hessian(&mut f, &xr);
        let n = h.len();
        let mut info = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                info[i][j] = 0.5 * (h[i][j] + h[j][i]) * w_total;
            }
        }
        let se = standard_errors(family, &xr, &info);
        (info, se)
    } else {
        (vec![], vec![None; family.n_params()])
    };
    Ok(FitResult {
        params,
        loglik,
        converged,
        iterations,
        info_matrix,
        se,
        boundary_hit: boundary,
        total_weight: w_total,
    })
}

/// |d(reporting)/d(internal)| for each coordinate; the map is diagonal.
fn jacobian_diag(family: Family, z: &[f64]) -> Vec<f64> {
    match family {
        Family::Weibull => vec![z[0].exp(), (-z[1]).exp()],
        Family::Lognormal => vec![1.0, z[1].exp()],
        Family::GenGamma => {
            let t = z[2].tanh();
            vec![1.0, z[1].exp(), LAMBDA_BOUND * (1.0 - t * t)]
        }
    }
}

fn standard_errors(family: Family, z: &[f64], info: &[Vec<f64>]) -> Vec<Option<f64>> {
    let Some(cov) = spd_inverse(info) else {
        return vec![None; z.len()];
    };
    let jac = jacobian_diag(family, z);
    (0..z.len()).map(|i| Some(jac[i] * cov[i][i].sqrt())).collect()
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::input(format!("confidence level must lie in (0, 1), got {level}")))
    }
}

fn param_index(family: Family, name: ParamName) -> Result<usize> {
    family
        .param_names()
        .iter()
        .position(|&n| n == name)
        .ok_or_else(|| Error::input(format!("{family} has no parameter {name}")))
}

/// Normal-approximation interval. Intervals are symmetric in the location μ,
/// the scale σ and the shape λ; the Weibull η = exp(μ) and β = 1/σ intervals
/// are the images of the μ and σ intervals. A σ interval reaching zero
/// leaves β's upper endpoint at +∞.
pub fn wald_interval(fit: &FitResult, param: ParamName, level: f64) -> Result<(f64, f64)> {
    check_level(level)?;
    let family = fit.family();
    let k = param_index(family, param)?;
    let cov = fit.internal_covariance().ok_or_else(|| {
        Error::numerical(
            "observed information is not positive definite; use a profile-likelihood or bootstrap interval instead",
        )
    })?;
    let z = fit.params.to_internal();
    let zq = norm_quantile(0.5 + 0.5 * level);
    let ls = fit.params.loc_scale();
    let se_mu = cov[0][0].sqrt();
    let se_sigma = ls.sigma * cov[1][1].sqrt();
    let sigma_ci = ((ls.sigma - zq * se_sigma).max(0.0), ls.sigma + zq * se_sigma);
    Ok(match (family, k) {
        (_, 0) => {
            let (lo, hi) = (ls.mu - zq * se_mu, ls.mu + zq * se_mu);
            if family == Family::Weibull {
                (lo.exp(), hi.exp())
            } else {
                (lo, hi)
            }
        }
        (Family::Weibull, _) => (1.0 / sigma_ci.1, 1.0 / sigma_ci.0),
        (_, 1) => sigma_ci,
        _ => {
            let t = z[2].tanh();
            let se = LAMBDA_BOUND * (1.0 - t * t) * cov[2][2].sqrt();
            let lambda = LAMBDA_BOUND * t;
            (lambda - zq * se, lambda + zq * se)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileInterval {
    pub lower: f64,
    pub upper: f64,
    /// The profile did not cross the threshold on this side within the
    /// search range; the endpoint is the last value examined.
    pub lower_open: bool,
    pub upper_open: bool,
}

/// Maps a reporting-parameter value to its internal coordinate and back.
fn to_coord(family: Family, name: ParamName, v: f64) -> f64 {
    match (family, name) {
        (_, ParamName::Eta) => v.ln(),
        (_, ParamName::Beta) => -v.ln(),
        (_, ParamName::Sigma) => v.ln(),
        (_, ParamName::Lambda) => (v / LAMBDA_BOUND).clamp(-1.0, 1.0).atanh(),
        (_, ParamName::Mu) => v,
    }
}

struct Profiler {
    family: Family,
    cd: CompactData,
    k: usize,
    nuisance: Vec<f64>,
}

impl Profiler {
    fn full(&self, c: f64, rest: &[f64]) -> Vec<f64> {
        let mut z = rest.to_vec();
        z.insert(self.k, c);
        z
    }

    /// Profile loglikelihood at internal coordinate value `c`, warm-started
    /// from `start`; returns the value and the maximizing nuisance values.
    fn at(&self, c: f64, start: &[f64]) -> (f64, Vec<f64>) {
        let obj = objective(self.family, &self.cd);
        let mut f = |r: &[f64]| obj(&self.full(c, r));
        let nm = NelderMeadOptions {
            max_iter: 4000,
            f_tol: 1e-15,
            x_tol: 1e-10,
            initial_step: 0.1,
        };
        let m = nelder_mead(&mut f, start, &nm);
        let (x, fx) = newton_polish(&mut f, &m.x, m.f, 6);
        (-fx * self.cd.total_weight, x)
    }
}

/// Profile-likelihood interval: values v whose profile loglikelihood lies
/// within χ²₁(level)/2 of the maximum. Endpoints are located by bisection
/// to 1e-6 relative accuracy.
pub fn profile_likelihood_interval(
    family: Family,
    data: &[Observation],
    weights: Option<&[f64]>,
    fit: &FitResult,
    param: ParamName,
    level: f64,
) -> Result<ProfileInterval> {
    check_level(level)?;
    validate_inputs(data, weights)?;
    if fit.family() != family {
        return Err(Error::input("fit family does not match"));
    }
    if !fit.converged {
        return Err(Error::numerical("profile interval needs a converged fit"));
    }
    let k = param_index(family, param)?;
    let z_hat = fit.params.to_internal();
    let mut nuisance = z_hat.clone();
    nuisance.remove(k);
    let prof = Profiler {
        family,
        cd: CompactData::new(data, weights),
        k,
        nuisance,
    };
    let v_hat = fit.params.values()[k];
    let target = fit.loglik - 0.5 * chi2_1_quantile(level);

    // Search runs in u = ln v for positive parameters, u = v otherwise.
    let positive = param.is_positive();
    let to_v = |u: f64| if positive { u.exp() } else { u };
    let u_hat = if positive { v_hat.ln() } else { v_hat };
    let (step0, max_span) = match param {
        ParamName::Mu => {
            let s = fit.se_of(ParamName::Mu).filter(|s| s.is_finite() && *s > 0.0).unwrap_or(0.1);
            (0.5 * s, 0.5 * s * 1e6)
        }
        ParamName::Lambda => (0.05, 2.0 * LAMBDA_BOUND),
        _ => (0.02, 1e6f64.ln()),
    };

    let side = |dir: f64| -> (f64, bool) {
        let coord = |u: f64| to_coord(family, param, to_v(u));
        let limit = match param {
            ParamName::Lambda => dir * LAMBDA_BOUND,
            _ => u_hat + dir * max_span,
        };
        let mut inside = (u_hat, prof.nuisance.clone());
        let mut step = step0;
        loop {
            let mut u = inside.0 + dir * step;
            let at_limit = (u - limit) * dir >= 0.0;
            if at_limit {
                u = limit;
            }
            let (l, nu) = prof.at(coord(u), &inside.1);
            if l < target {
                // bisect between inside.0 and u
                let (mut a, mut b) = (inside.0, u);
                let mut na = inside.1.clone();
                for _ in 0..200 {
                    let (va, vb) = (to_v(a), to_v(b));
                    if (va - vb).abs() <= 1e-6 * va.abs().max(vb.abs()).max(1e-300) {
                        break;
                    }
                    let m = 0.5 * (a + b);
                    let (lm, nm) = prof.at(coord(m), &na);
                    if lm < target {
                        b = m;
                    } else {
                        a = m;
                        na = nm;
                    }
                }
                return (to_v(0.5 * (a + b)), false);
            }
            inside = (u, nu);
            if at_limit {
                return (to_v(u), true);
            }
            step *= 2.0;
        }
    };
    let (lo, lo_open) = side(-1.0);
    let (hi, hi_open) = side(1.0);
    Ok(ProfileInterval {
        lower: lo,
        upper: hi,
        lower_open: lo_open,
        upper_open: hi_open,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_exact_points_match_profile_grid() {
        let data = vec![Observation::exact(1.0), Observation::exact(2.0)];
        let fit = fit_ml(Family::Weibull, &data, None, &FitOptions::default()).unwrap();
        assert!(fit.converged);
        // profile in β: ℓ(β) = 2 ln β + (β-1) Σ ln t - 2 ln(Σ t^β / 2) - 2
        let prof = |b: f64| {
            let s = 1f64 + 2f64.powf(b);
            2.0 * b.ln() + (b - 1.0) * 2f64.ln() - 2.0 * (s / 2.0).ln() - 2.0
        };
        let mut best = (0.0, f64::NEG_INFINITY);
        let mut b = 0.05;
        while b < 20.0 {
            let v = prof(b);
            if v > best.1 {
                best = (b, v);
            }
            b += 1e-5;
        }
        let beta = fit.params.values()[1];
        assert!((beta - best.0).abs() < 1e-4, "beta={beta} grid={}", best.0);
        assert!((fit.loglik - best.1).abs() < 1e-8);
    }

    #[test]
    fn lognormal_complete_data_closed_form() {
        let t = [1.2f64, 3.4, 0.7, 2.2, 5.1, 1.9];
        let data: Vec<_> = t.iter().map(|&x| Observation::exact(x)).collect();
        let fit = fit_ml(Family::Lognormal, &data, None, &FitOptions::default()).unwrap();
        let n = t.len() as f64;
        let mu: f64 = t.iter().map(|x| x.ln()).sum::<f64>() / n;
        let sigma = (t.iter().map(|x| (x.ln() - mu).powi(2)).sum::<f64>() / n).sqrt();
        let v = fit.params.values();
        assert!((v[0] - mu).abs() < 1e-8 && (v[1] - sigma).abs() < 1e-8, "{v:?}");
        // observed information of (μ, ln σ) at the MLE is diag(n/σ², 2n)
        assert!((fit.info_matrix[0][0] - n / (sigma * sigma)).abs() < 1e-4 * n / (sigma * sigma));
        assert!((fit.info_matrix[1][1] - 2.0 * n).abs() < 1e-4 * 2.0 * n);
        let (lo, hi) = wald_interval(&fit, ParamName::Mu, 0.95).unwrap();
        assert!(((hi - v[0]) - (v[0] - lo)).abs() < 1e-10);
        let se = sigma / n.sqrt();
        assert!((hi - lo - 2.0 * 1.959_963_984_540_054 * se).abs() < 1e-5);
        let (lo, hi) = wald_interval(&fit, ParamName::Mu, 1e-12).unwrap();
        assert!((hi - lo).abs() < 1e-10);
    }

    #[test]
    fn scale_equivariance() {
        let t = [0.9f64, 2.3, 3.1, 4.4, 6.0];
        let data: Vec<_> = t.iter().map(|&x| Observation::exact(x)).chain([Observation::right(5.0)]).collect();
        let f1 = fit_ml(Family::Weibull, &data, None, &FitOptions::default()).unwrap();
        let c = 37.5;
        let scaled: Vec<_> = data.iter().map(|o| Observation { time: o.time * c, ..*o }).collect();
        let f2 = fit_ml(Family::Weibull, &scaled, None, &FitOptions::default()).unwrap();
        let (a, b) = (f1.params.values(), f2.params.values());
        assert!((b[0] / (c * a[0]) - 1.0).abs() < 1e-8);
        assert!((b[1] / a[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn degenerate_data_is_refused() {
        let data = vec![Observation::exact(1.0), Observation::right(0.5)];
        assert!(matches!(
            fit_ml(Family::Weibull, &data, None, &FitOptions::default()),
            Err(Error::Degenerate(_))
        ));
        let two = vec![Observation::exact(1.0), Observation::exact(2.0)];
        assert!(fit_ml(Family::GenGamma, &two, None, &FitOptions::default()).is_err());
    }

    #[test]
    fn profile_contains_estimate() {
        let t = [0.9f64, 2.3, 3.1, 4.4, 6.0, 1.7, 2.8];
        let data: Vec<_> = t.iter().map(|&x| Observation::exact(x)).collect();
        let fit = fit_ml(Family::Weibull, &data, None, &FitOptions::default()).unwrap();
        for (k, &p) in [ParamName::Eta, ParamName::Beta].iter().enumerate() {
            let ci = profile_likelihood_interval(Family::Weibull, &data, None, &fit, p, 0.95).unwrap();
            let v = fit.params.values()[k];
            assert!(ci.lower < v && v < ci.upper, "{p}: {ci:?} vs {v}");
            assert!(!ci.lower_open && !ci.upper_open);
        }
    }
}
