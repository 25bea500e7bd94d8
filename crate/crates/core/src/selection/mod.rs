//! Forward AIC selection of response-surface terms and bootstrap selection
//! proportions.

pub mod qr;

use std::collections::HashSet;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::StreamRng;
use crate::weights::{gen_weights, WeightScheme};

use qr::weighted_least_squares;

/// Share of failed replicates above which a selection bootstrap is refused.
pub const MAX_FAILED_RATE: f64 = 0.10;
/// Residual sum of squares below this fraction of the total counts as an
/// exact fit (AIC = −∞).
const PERFECT_FIT_RTOL: f64 = 1e-12;
/// Orthogonalized column norm (relative) below which a column is dependent.
const DEPENDENCE_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub name: String,
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub factors: Vec<Factor>,
}

impl DesignSpec {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::input("design needs at least one factor"));
        }
        let mut seen = HashSet::new();
        for f in &factors {
            if !seen.insert(f.name.as_str()) {
                return Err(Error::input(format!("duplicate factor name '{}'", f.name)));
            }
            if !(f.low < f.high) || !f.low.is_finite() || !f.high.is_finite() {
                return Err(Error::input(format!(
                    "factor '{}' needs low < high, got [{}, {}]",
                    f.name, f.low, f.high
                )));
            }
        }
        Ok(Self { factors })
    }

    /// Factors named `names` with ranges taken from the observed columns.
    pub fn from_observed(names: &[String], rows: &[Vec<f64>]) -> Result<Self> {
        let factors = names
            .iter()
            .enumerate()
            .map(|(j, n)| {
                let (lo, hi) = rows
                    .iter()
                    .map(|r| r[j])
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
                Factor {
                    name: n.clone(),
                    low: lo,
                    high: hi,
                }
            })
            .collect();
        Self::new(factors)
    }

    pub fn k(&self) -> usize {
        self.factors.len()
    }

    /// Maps [low, high] to [−1, 1].
    pub fn code(&self, raw: &[f64]) -> Result<Vec<f64>> {
        if raw.len() != self.k() {
            return Err(Error::input(format!(
                "design row has {} values, expected {}",
                raw.len(),
                self.k()
            )));
        }
        Ok(raw
            .iter()
            .zip(&self.factors)
            .map(|(x, f)| (2.0 * x - (f.high + f.low)) / (f.high - f.low))
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Term {
    Main(usize),
    Interaction(usize, usize),
    Quadratic(usize),
}

impl Term {
    pub fn eval(&self, coded: &[f64]) -> f64 {
        match *self {
            Term::Main(i) => coded[i],
            Term::Interaction(i, j) => coded[i] * coded[j],
            Term::Quadratic(i) => coded[i] * coded[i],
        }
    }

    pub fn label(&self, spec: &DesignSpec) -> String {
        let n = |i: usize| spec.factors[i].name.as_str();
        match *self {
            Term::Main(i) => n(i).to_string(),
            Term::Interaction(i, j) => format!("{}*{}", n(i), n(j)),
            Term::Quadratic(i) => format!("{}^2", n(i)),
        }
    }

    fn parents(&self) -> Vec<usize> {
        match *self {
            Term::Main(_) => vec![],
            Term::Interaction(i, j) => vec![i, j],
            Term::Quadratic(i) => vec![i],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub spec: DesignSpec,
    pub terms: Vec<Term>,
}

impl CandidateSet {
    pub fn labels(&self) -> Vec<String> {
        self.terms.iter().map(|t| t.label(&self.spec)).collect()
    }

    /// Candidate columns (one per term) in coded units.
    pub fn columns(&self, x_raw: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let coded = x_raw.iter().map(|r| self.spec.code(r)).collect::<Result<Vec<_>>>()?;
        Ok(self
            .terms
            .iter()
            .map(|t| coded.iter().map(|c| t.eval(c)).collect())
            .collect())
    }
}

/// Mains in factor order, then two-factor interactions in lexicographic
/// order, then quadratics: 2k + k(k−1)/2 terms.
pub fn build_candidates(spec: &DesignSpec) -> Result<CandidateSet> {
    let spec = DesignSpec::new(spec.factors.clone())?;
    let k = spec.k();
    let mut terms: Vec<Term> = (0..k).map(Term::Main).collect();
    for i in 0..k {
        for j in i + 1..k {
            terms.push(Term::Interaction(i, j));
        }
    }
    terms.extend((0..k).map(Term::Quadratic));
    Ok(CandidateSet { spec, terms })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SelectOptions {
    /// Admit an interaction or quadratic only after all of its mains.
    pub strong_heredity: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Indices into the candidate list, in order of entry.
    pub selected: Vec<usize>,
    pub intercept: f64,
    /// One per candidate, in coded units; 0 for terms not selected.
    pub coefficients: Vec<f64>,
    /// AIC of the intercept-only model.
    pub aic_start: f64,
    /// AIC after each accepted step.
    pub aic_trace: Vec<f64>,
}

fn weighted_aic(rss: f64, total_w: f64, n_mean: usize, floor: f64) -> f64 {
    if rss <= floor {
        return f64::NEG_INFINITY;
    }
    total_w * ((2.0 * std::f64::consts::PI * rss / total_w).ln() + 1.0) + 2.0 * (n_mean as f64 + 1.0)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Forward stepwise selection by AIC under weighted least squares. Starts
/// from the intercept-only model, adds the candidate with the largest AIC
/// decrease, and stops when no candidate decreases AIC. Ties go to the
/// earlier candidate. AIC = −2·(weighted Gaussian loglikelihood) + 2·(mean
/// parameters + 1).
pub fn forward_select_aic(
    cands: &CandidateSet,
    x_raw: &[Vec<f64>],
    y: &[f64],
    w: &[f64],
    opts: &SelectOptions,
) -> Result<SelectionResult> {
    let n = y.len();
    if n < 3 {
        return Err(Error::input(format!("selection needs at least 3 runs, got {n}")));
    }
    if x_raw.len() != n || w.len() != n {
        return Err(Error::input("design rows, responses and weights must have equal length"));
    }
    if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("weights must be finite and non-negative, responses finite"));
    }
    let total_w: f64 = w.iter().sum();
    if !(total_w > 0.0) {
        return Err(Error::input("weights must have a positive sum"));
    }
    let cols = cands.columns(x_raw)?;
    let sw: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let scaled: Vec<Vec<f64>> = cols
        .iter()
        .map(|c| c.iter().zip(&sw).map(|(a, b)| a * b).collect())
        .collect();

    // orthonormal basis of the current model in the √w-scaled space
    let q0_norm = dot(&sw, &sw).sqrt();
    let mut basis: Vec<Vec<f64>> = vec![sw.iter().map(|v| v / q0_norm).collect()];
    let mut resid: Vec<f64> = y.iter().zip(&sw).map(|(a, b)| a * b).collect();
    let c0 = dot(&resid, &basis[0]);
    for (r, q) in resid.iter_mut().zip(&basis[0]) {
        *r -= c0 * q;
    }
    let tss = dot(&resid, &resid);
    let floor = PERFECT_FIT_RTOL * tss;
    let mut rss = tss;
    let aic_start = weighted_aic(rss, total_w, 1, floor);
    let mut current = aic_start;
    let mut selected: Vec<usize> = vec![];
    let mut trace = vec![];
    let mut in_model = vec![false; cands.terms.len()];
    let mut main_in = vec![false; cands.spec.k()];
    let mut any_usable = false;

    let orthogonalize = |c: &[f64], basis: &[Vec<f64>]| -> Vec<f64> {
        let mut v = c.to_vec();
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for q in basis {
                let d = dot(&v, q);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= d * qi;
                }
            }
        }
        v
    };

    loop {
        if current == f64::NEG_INFINITY {
            break;
        }
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        for (j, term) in cands.terms.iter().enumerate() {
            if in_model[j] {
                continue;
            }
            if opts.strong_heredity && term.parents().iter().any(|&i| !main_in[i]) {
                continue;
            }
            let c = &scaled[j];
            let cn = dot(c, c).sqrt();
            if cn == 0.0 {
                continue;
            }
            let v = orthogonalize(c, &basis);
            let vn = dot(&v, &v).sqrt();
            if vn <= DEPENDENCE_RTOL * cn {
                continue;
            }
            any_usable = true;
            let u: Vec<f64> = v.iter().map(|x| x / vn).collect();
            let proj = dot(&resid, &u);
            let new_rss = (rss - proj * proj).max(0.0);
            let aic = weighted_aic(new_rss, total_w, basis.len() + 1, floor);
            if aic < current && best.as_ref().is_none_or(|b| aic < b.0) {
                best = Some((aic, j, u));
            }
        }
        if selected.is_empty() && !any_usable {
            return Err(Error::numerical("no candidate column is estimable from this design"));
        }
        let Some((aic, j, u)) = best else { break };
        let proj = dot(&resid, &u);
        for (r, q) in resid.iter_mut().zip(&u) {
            *r -= proj * q;
        }
        rss = dot(&resid, &resid);
        basis.push(u);
        in_model[j] = true;
        if let Term::Main(i) = cands.terms[j] {
            main_in[i] = true;
        }
        selected.push(j);
        current = aic;
        trace.push(aic);
    }

    let mut design = vec![vec![1.0; n]];
    design.extend(selected.iter().map(|&j| cols[j].clone()));
    let fit = weighted_least_squares(&design, y, w);
    let mut coefficients = vec![0.0; cands.terms.len()];
    for (k, &j) in selected.iter().enumerate() {
        coefficients[j] = fit.coef[k + 1];
    }
    Ok(SelectionResult {
        selected,
        intercept: fit.coef[0],
        coefficients,
        aic_start,
        aic_trace: trace,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermProportion {
    pub term: String,
    pub index: usize,
    pub proportion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionBootstrap {
    pub labels: Vec<String>,
    /// Sorted by descending proportion; ties keep candidate order.
    pub proportions: Vec<TermProportion>,
    /// B × candidates; zeros for terms a replicate did not select. Rows of
    /// failed replicates are all zero.
    pub coefficients: Vec<Vec<f64>>,
    /// `None` for failed replicates.
    pub intercepts: Vec<Option<f64>>,
    pub selections: Vec<Vec<usize>>,
    /// Intercept-only AIC per replicate; `None` for failed replicates.
    pub aic_starts: Vec<Option<f64>>,
    pub aic_traces: Vec<Vec<f64>>,
    pub failed: Vec<u64>,
    pub b: usize,
    pub master_seed: u64,
    pub point: SelectionResult,
}

impl fmt::Display for TermProportion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {:.3}", self.term, self.proportion)
    }
}

impl SelectionBootstrap {
    pub fn proportions_csv(&self) -> String {
        let mut s = String::from("term,proportion\n");
        for p in &self.proportions {
            s.push_str(&format!("{},{}\n", p.term, p.proportion));
        }
        s
    }

    pub fn coefficients_csv(&self) -> String {
        let mut s = String::from("replicate_id,intercept");
        for l in &self.labels {
            s.push(',');
            s.push_str(l);
        }
        s.push('\n');
        for (b, row) in self.coefficients.iter().enumerate() {
            let icpt = self.intercepts[b].map(|v| v.to_string()).unwrap_or_default();
            s.push_str(&format!("{},{icpt}", b + 1));
            for v in row {
                s.push_str(&format!(",{v}"));
            }
            s.push('\n');
        }
        s
    }
}

/// Repeats forward selection under B Dirichlet random-weight replicates and
/// reports how often each candidate is chosen.
pub fn bootstrap_selection(
    cands: &CandidateSet,
    x_raw: &[Vec<f64>],
    y: &[f64],
    b: usize,
    master_seed: u64,
    opts: &SelectOptions,
) -> Result<SelectionBootstrap> {
    if b == 0 {
        return Err(Error::input("B must be at least 1"));
    }
    let n = y.len();
    let point = forward_select_aic(cands, x_raw, y, &vec![1.0; n], opts)?;
    let reps: Vec<Result<SelectionResult>> = (1..=b as u64)
        .into_par_iter()
        .map(|id| {
            let mut rng = StreamRng::replicate(master_seed, id);
            let w = gen_weights(WeightScheme::DirichletFractional, n, &mut rng, id)?;
            forward_select_aic(cands, x_raw, y, w.values(), opts)
        })
        .collect();
    let m = cands.terms.len();
    let mut counts = vec![0usize; m];
    let mut coefficients = Vec::with_capacity(b);
    let mut intercepts = Vec::with_capacity(b);
    let mut selections = Vec::with_capacity(b);
    let mut aic_starts = Vec::with_capacity(b);
    let mut aic_traces = Vec::with_capacity(b);
    let mut failed = vec![];
    let mut first_error = None;
    for (i, r) in reps.into_iter().enumerate() {
        match r {
            Ok(s) => {
                for &j in &s.selected {
                    counts[j] += 1;
                }
                coefficients.push(s.coefficients);
                intercepts.push(Some(s.intercept));
                selections.push(s.selected);
                aic_starts.push(Some(s.aic_start));
                aic_traces.push(s.aic_trace);
            }
            Err(e) => {
                failed.push(i as u64 + 1);
                first_error.get_or_insert(e.to_string());
                coefficients.push(vec![0.0; m]);
                intercepts.push(None);
                selections.push(vec![]);
                aic_starts.push(None);
                aic_traces.push(vec![]);
            }
        }
    }
    if failed.len() as f64 > MAX_FAILED_RATE * b as f64 {
        return Err(Error::numerical(format!(
            "{} of {b} selection replicates failed (first: {})",
            failed.len(),
            first_error.unwrap_or_default()
        )));
    }
    let labels = cands.labels();
    let mut proportions: Vec<TermProportion> = (0..m)
        .map(|j| TermProportion {
            term: labels[j].clone(),
            index: j,
            proportion: counts[j] as f64 / b as f64,
        })
        .collect();
    proportions.sort_by(|a, b| b.proportion.total_cmp(&a.proportion));
    Ok(SelectionBootstrap {
        labels,
        proportions,
        coefficients,
        intercepts,
        selections,
        aic_starts,
        aic_traces,
        failed,
        b,
        master_seed,
        point,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(k: usize) -> DesignSpec {
        DesignSpec::new(
            (0..k)
                .map(|i| Factor {
                    name: format!("x{}", i + 1),
                    low: 0.0,
                    high: 10.0 * (i + 1) as f64,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn candidate_counts_and_order() {
        let c = build_candidates(&spec(2)).unwrap();
        assert_eq!(c.labels(), vec!["x1", "x2", "x1*x2", "x1^2", "x2^2"]);
        assert_eq!(build_candidates(&spec(7)).unwrap().terms.len(), 35);
        let s = spec(3);
        let mid: Vec<f64> = s.factors.iter().map(|f| 0.5 * (f.low + f.high)).collect();
        assert!(s.code(&mid).unwrap().iter().all(|v| v.abs() < 1e-15));
        let dup = DesignSpec::new(vec![
            Factor { name: "a".into(), low: 0.0, high: 1.0 },
            Factor { name: "a".into(), low: 0.0, high: 1.0 },
        ]);
        assert!(dup.is_err());
    }

    #[test]
    fn zero_noise_line_selects_only_its_term() {
        let s = DesignSpec::new(vec![
            Factor { name: "x1".into(), low: -1.0, high: 1.0 },
            Factor { name: "x2".into(), low: -1.0, high: 1.0 },
        ])
        .unwrap();
        let cands = CandidateSet { spec: s, terms: vec![Term::Main(0), Term::Main(1)] };
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![(i as f64) / 4.0 - 1.0, ((i * 3) % 8) as f64 / 4.0 - 1.0]).collect();
        let y: Vec<f64> = x.iter().map(|r| 2.0 + 3.0 * r[0]).collect();
        let r = forward_select_aic(&cands, &x, &y, &[1.0; 8], &SelectOptions::default()).unwrap();
        assert_eq!(r.selected, vec![0]);
        assert!((r.coefficients[0] - 3.0).abs() < 1e-12 && r.coefficients[1] == 0.0);
        assert!((r.intercept - 2.0).abs() < 1e-12);
    }

    #[test]
    fn factorial_mains_are_orthogonal() {
        let s = spec(3);
        let cands = build_candidates(&s).unwrap();
        let rows: Vec<Vec<f64>> = (0..8)
            .map(|m| (0..3).map(|i| if m >> i & 1 == 1 { s.factors[i].high } else { s.factors[i].low }).collect())
            .collect();
        let cols = cands.columns(&rows).unwrap();
        for i in 0..3 {
            for j in i + 1..3 {
                assert_eq!(dot(&cols[i], &cols[j]), 0.0);
            }
        }
    }

    #[test]
    fn heredity_blocks_orphan_interaction() {
        let s = spec(2);
        let cands = build_candidates(&s).unwrap();
        let rows: Vec<Vec<f64>> = (0..9)
            .map(|i| vec![(i % 3) as f64 * 5.0, (i / 3) as f64 * 10.0])
            .collect();
        let coded: Vec<Vec<f64>> = rows.iter().map(|r| s.code(r).unwrap()).collect();
        let y: Vec<f64> = coded.iter().map(|c| 4.0 * c[0] * c[1] + 0.01 * c[0]).collect();
        let free = forward_select_aic(&cands, &rows, &y, &[1.0; 9], &SelectOptions::default()).unwrap();
        assert_eq!(free.selected[0], 2);
        let strict = forward_select_aic(&cands, &rows, &y, &[1.0; 9], &SelectOptions { strong_heredity: true }).unwrap();
        let pos = |j| strict.selected.iter().position(|&s| s == j);
        if let Some(p) = pos(2) {
            assert!(pos(0).is_some_and(|a| a < p) && pos(1).is_some_and(|b| b < p));
        }
    }
}
