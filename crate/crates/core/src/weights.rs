//! Bootstrap weight vectors.
//!
//! Resampling rows with replacement is the same as attaching uniform
//! multinomial integer weights to the rows. The fractional-random-weight
//! (FRW) bootstrap replaces those with continuous weights: a uniform
//! Dirichlet vector scaled to sum to `n` (built from normalized unit
//! exponentials), or iid unit-mean exponentials. Continuous weights are
//! strictly positive, so every observation stays in every replicate.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::compensated_sum;
use crate::rng::StreamRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightScheme {
    /// Row resampling with replacement.
    MultinomialInteger,
    /// Uniform Dirichlet times `n`.
    DirichletFractional,
    /// Independent unit-mean exponentials.
    IidExponential,
}

impl WeightScheme {
    pub fn is_fractional(self) -> bool {
        !matches!(self, WeightScheme::MultinomialInteger)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            WeightScheme::MultinomialInteger => "multinomial",
            WeightScheme::DirichletFractional => "dirichlet",
            WeightScheme::IidExponential => "exponential",
        }
    }
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WeightScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "multinomial" | "multinomial-integer" | "resampling" | "resample" => {
                Ok(WeightScheme::MultinomialInteger)
            }
            "dirichlet" | "dirichlet-fractional" | "frw" => Ok(WeightScheme::DirichletFractional),
            "exponential" | "iid-exponential" | "exp" => Ok(WeightScheme::IidExponential),
            other => Err(Error::input(format!("unknown weight scheme '{other}'"))),
        }
    }
}

/// Relative tolerance on the Dirichlet sum.
pub const SUM_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    values: Vec<f64>,
    scheme: WeightScheme,
    replicate_id: u64,
}

impl WeightVector {
    /// Wraps externally supplied values after checking the scheme invariants.
    pub fn new(values: Vec<f64>, scheme: WeightScheme, replicate_id: u64) -> Result<Self> {
        let w = Self {
            values,
            scheme,
            replicate_id,
        };
        w.validate()?;
        Ok(w)
    }

    /// All-ones weights (the original data).
    pub fn unit(n: usize) -> Self {
        Self {
            values: vec![1.0; n],
            scheme: WeightScheme::MultinomialInteger,
            replicate_id: 0,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scheme(&self) -> WeightScheme {
        self.scheme
    }

    pub fn replicate_id(&self) -> u64 {
        self.replicate_id
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.values.len();
        if n == 0 {
            return Err(Error::input("weight vector is empty"));
        }
        if self.values.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::input("weights must be finite and non-negative"));
        }
        match self.scheme {
            WeightScheme::MultinomialInteger => {
                if self.values.iter().any(|w| w.fract() != 0.0) {
                    return Err(Error::input("multinomial weights must be integers"));
                }
                let total: f64 = self.values.iter().sum();
                if total != n as f64 {
                    return Err(Error::input(format!(
                        "multinomial weights sum to {total}, expected {n}"
                    )));
                }
            }
            WeightScheme::DirichletFractional => {
                if self.values.iter().any(|&w| w <= 0.0) {
                    return Err(Error::input("Dirichlet weights must be strictly positive"));
                }
                let total = compensated_sum(self.values.iter().copied());
                if ((total - n as f64) / n as f64).abs() > SUM_RTOL {
                    return Err(Error::input(format!(
                        "Dirichlet weights sum to {total}, expected {n}"
                    )));
                }
            }
            WeightScheme::IidExponential => {
                if self.values.iter().any(|&w| w <= 0.0) {
                    return Err(Error::input("exponential weights must be strictly positive"));
                }
            }
        }
        Ok(())
    }
}

impl AsRef<[f64]> for WeightVector {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// Draws one weight vector of length `n` from `rng`.
pub fn gen_weights(
    scheme: WeightScheme,
    n: usize,
    rng: &mut StreamRng,
    replicate_id: u64,
) -> Result<WeightVector> {
    if n == 0 {
        return Err(Error::input("weight vector length must be at least 1"));
    }
    let values = match scheme {
        WeightScheme::MultinomialInteger => {
            let mut counts = vec![0.0; n];
            for _ in 0..n {
                counts[rng.index(n)] += 1.0;
            }
            counts
        }
        WeightScheme::DirichletFractional => {
            let z: Vec<f64> = (0..n).map(|_| rng.exp1()).collect();
            let total = compensated_sum(z.iter().copied());
            let scale = n as f64 / total;
            z.into_iter().map(|x| x * scale).collect()
        }
        WeightScheme::IidExponential => (0..n).map(|_| rng.exp1()).collect(),
    };
    let w = WeightVector {
        values,
        scheme,
        replicate_id,
    };
    w.validate()
        .map_err(|e| Error::numerical(format!("generated weights failed validation: {e}")))?;
    Ok(w)
}

/// Weighted mean and (divisor Σw) variance.
pub fn weighted_moments(x: &[f64], w: &[f64]) -> Result<(f64, f64)> {
    if x.len() != w.len() {
        return Err(Error::input(format!(
            "data length {} does not match weight length {}",
            x.len(),
            w.len()
        )));
    }
    if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::input("weights must be finite and non-negative"));
    }
    let total = compensated_sum(w.iter().copied());
    if total <= 0.0 {
        return Err(Error::input("weights sum to zero"));
    }
    let mean = compensated_sum(x.iter().zip(w).map(|(x, w)| w * x)) / total;
    let var = compensated_sum(x.iter().zip(w).map(|(x, w)| w * (x - mean) * (x - mean))) / total;
    Ok((mean, var))
}

fn ln_choose(n: u64, k: u64) -> f64 {
    use statrs::function::factorial::ln_factorial;
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// P(X <= 1) for X ~ Binomial(n, r/n): the chance that a row resample of `n`
/// rows holding `r` failures carries fewer than two failures.
pub fn prob_degenerate_resample(n: u64, r: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::input("n must be at least 1"));
    }
    if r > n {
        return Err(Error::input(format!("failure count {r} exceeds n = {n}")));
    }
    if r == 0 {
        return Ok(1.0);
    }
    if r == n {
        return Ok(if n <= 1 { 1.0 } else { 0.0 });
    }
    let p = r as f64 / n as f64;
    let ln_p = p.ln();
    let ln_q = (-p).ln_1p();
    let ln_p0 = n as f64 * ln_q;
    let ln_p1 = ln_choose(n, 1) + ln_p + (n - 1) as f64 * ln_q;
    Ok((ln_p0.exp() + ln_p1.exp()).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multinomial_fifteen_sums_to_fifteen() {
        let mut rng = StreamRng::replicate(11, 1);
        let w = gen_weights(WeightScheme::MultinomialInteger, 15, &mut rng, 1).unwrap();
        assert_eq!(w.len(), 15);
        assert_eq!(w.values().iter().sum::<f64>(), 15.0);
        assert!(w.values().iter().all(|v| v.fract() == 0.0));
    }

    #[test]
    fn dirichlet_single_weight_is_one() {
        let mut rng = StreamRng::replicate(3, 0);
        let w = gen_weights(WeightScheme::DirichletFractional, 1, &mut rng, 0).unwrap();
        assert_eq!(w.values(), &[1.0]);
    }

    #[test]
    fn dirichlet_fifteen_positive_sum() {
        let mut rng = StreamRng::replicate(5, 2);
        let w = gen_weights(WeightScheme::DirichletFractional, 15, &mut rng, 2).unwrap();
        assert!(w.values().iter().all(|&v| v > 0.0));
        let s: f64 = w.values().iter().sum();
        assert!((s - 15.0).abs() < 15.0 * 1e-12);
    }

    #[test]
    fn zero_length_rejected() {
        let mut rng = StreamRng::replicate(5, 2);
        assert!(matches!(
            gen_weights(WeightScheme::IidExponential, 0, &mut rng, 0),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn moments_examples() {
        let (m, v) = weighted_moments(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]).unwrap();
        assert!((m - 2.0).abs() < 1e-15);
        assert!((v - 2.0 / 3.0).abs() < 1e-15);

        let (m, v) = weighted_moments(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!((m - 14.0 / 6.0).abs() < 1e-15);
        // Σw(x-m)^2/Σw with m = 7/3: (16/9 + 2/9 + 12/9) / 6 = 5/9
        assert!((v - 5.0 / 9.0).abs() < 1e-15);

        let (m, v) = weighted_moments(&[4.5; 4], &[0.1, 3.0, 0.0, 2.0]).unwrap();
        assert_eq!(m, 4.5);
        assert_eq!(v, 0.0);

        assert!(weighted_moments(&[1.0, 2.0], &[0.0, 0.0]).is_err());
        assert!(weighted_moments(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn degenerate_probability_examples() {
        let p = prob_degenerate_resample(1703, 6).unwrap();
        assert_eq!(format!("{p:.3}"), "0.017");
        assert_eq!(prob_degenerate_resample(10, 0).unwrap(), 1.0);
        assert_eq!(prob_degenerate_resample(5, 5).unwrap(), 0.0);
        assert!(prob_degenerate_resample(5, 6).is_err());
    }

    #[test]
    fn degenerate_probability_monotone_in_failures() {
        for n in [2u64, 10, 57, 1703] {
            let mut prev = f64::INFINITY;
            for r in 0..=n.min(60) {
                let p = prob_degenerate_resample(n, r).unwrap();
                assert!(p <= prev + 1e-15, "n={n} r={r}");
                prev = p;
            }
        }
    }

    #[test]
    fn scheme_parsing() {
        assert_eq!(
            "dirichlet".parse::<WeightScheme>().unwrap(),
            WeightScheme::DirichletFractional
        );
        assert!("bogus".parse::<WeightScheme>().is_err());
    }
}
