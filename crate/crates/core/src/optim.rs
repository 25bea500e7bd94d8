//! Derivative-free simplex search and finite-difference derivatives.

use crate::numeric::spd_inverse;

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Stop when the spread of objective values over the simplex falls below this.
    pub f_tol: f64,
    /// ... and the simplex diameter falls below this.
    pub x_tol: f64,
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            f_tol: 1e-13,
            x_tol: 1e-9,
            initial_step: 0.2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub hit_cap: bool,
}

/// Nelder-Mead with the standard coefficients (1, 2, ½, ½).
/// Non-finite objective values are treated as +∞.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64 + ?Sized>(f: &mut F, x0: &[f64], opts: &NelderMeadOptions) -> Minimum {
    let n = x0.len();
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += opts.initial_step * x0[i].abs().clamp(1.0, 10.0);
        simplex.push(v);
    }
    let mut fv: Vec<f64> = simplex.iter().map(|x| eval(x)).collect();
    let mut iter = 0;
    let mut order: Vec<usize> = (0..=n).collect();
    loop {
        order.sort_by(|&a, &b| fv[a].total_cmp(&fv[b]));
        let best = order[0];
        let worst = order[n];
        let second = order[n - 1];
        let spread = fv[worst] - fv[best];
        let diam = simplex
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[best])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        let done = fv[best].is_finite() && spread <= opts.f_tol * (1.0 + fv[best].abs()) && diam <= opts.x_tol;
        if done || iter >= opts.max_iter {
            return Minimum {
                x: simplex[best].clone(),
                f: fv[best],
                iterations: iter,
                hit_cap: !done,
            };
        }
        iter += 1;

        let mut centroid = vec![0.0; n];
        for &j in &order[..n] {
            for (c, v) in centroid.iter_mut().zip(&simplex[j]) {
                *c += v / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };
        let xr = along(-1.0);
        let fr = eval(&xr);
        if fr < fv[best] {
            let xe = along(-2.0);
            let fe = eval(&xe);
            if fe < fr {
                simplex[worst] = xe;
                fv[worst] = fe;
            } else {
                simplex[worst] = xr;
                fv[worst] = fr;
            }
            continue;
        }
        if fr < fv[second] {
            simplex[worst] = xr;
            fv[worst] = fr;
            continue;
        }
        // outside contraction when the reflection helped at all, else inside
        let xc = if fr < fv[worst] { along(-0.5) } else { along(0.5) };
        let fc = eval(&xc);
        if fc < fv[worst].min(fr) {
            simplex[worst] = xc;
            fv[worst] = fc;
            continue;
        }
        // shrink toward the best vertex
        let xb = simplex[best].clone();
        for j in 0..=n {
            if j == best {
                continue;
            }
            for (v, b) in simplex[j].iter_mut().zip(&xb) {
                *v = b + 0.5 * (*v - b);
            }
            fv[j] = eval(&simplex[j]);
        }
    }
}

/// Central-difference gradient with step `h·max(1, |xᵢ|)`.
pub fn gradient<F: FnMut(&[f64]) -> f64 + ?Sized>(f: &mut F, x: &[f64], h: f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let hi = h * x[i].abs().max(1.0);
            xp[i] = x[i] + hi;
            let fp = f(&xp);
            xp[i] = x[i] - hi;
            let fm = f(&xp);
            xp[i] = x[i];
            (fp - fm) / (2.0 * hi)
        })
        .collect()
}

/// Central-difference Hessian with per-coordinate step max(1e-5, 1e-5·|xᵢ|).
pub fn hessian<F: FnMut(&[f64]) -> f64 + ?Sized>(f: &mut F, x: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len();
    let h: Vec<f64> = x.iter().map(|v| (1e-5 * v.abs()).max(1e-5)).collect();
    let f0 = f(x);
    let mut xp = x.to_vec();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        xp[i] = x[i] + h[i];
        let fp = f(&xp);
        xp[i] = x[i] - h[i];
        let fm = f(&xp);
        xp[i] = x[i];
        out[i][i] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for j in 0..i {
            let mut corner = |si: f64, sj: f64| {
                xp[i] = x[i] + si * h[i];
                xp[j] = x[j] + sj * h[j];
                let v = f(&xp);
                xp[i] = x[i];
                xp[j] = x[j];
                v
            };
            let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0))
                / (4.0 * h[i] * h[j]);
            out[i][j] = v;
            out[j][i] = v;
        }
    }
    out
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// A few damped Newton steps from a point near a minimum. Returns the
/// improved point and value, or the input unchanged when the Hessian is
/// not positive definite.
pub fn newton_polish<F: FnMut(&[f64]) -> f64 + ?Sized>(f: &mut F, x0: &[f64], f0: f64, steps: usize) -> (Vec<f64>, f64) {
    let mut x = x0.to_vec();
    let mut fx = f0;
    for _ in 0..steps {
        let g = gradient(f, &x, 1e-6);
        let h = hessian(f, &x);
        let Some(inv) = spd_inverse(&h) else { break };
        let d: Vec<f64> = inv
            .iter()
            .map(|row| -row.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..20 {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            let fnew = f(&xn);
            // within rounding of f, let the gradient decide
            let flat = t == 1.0
                && fnew <= fx + 1e-13 * (1.0 + fx.abs())
                && max_abs(&gradient(f, &xn, 1e-6)) < max_abs(&g);
            if fnew <= fx || flat {
                moved = xn != x;
                x = xn;
                fx = fnew;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    (x, fx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let mut f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = nelder_mead(&mut f, &[-1.2, 1.0], &NelderMeadOptions::default());
        assert!(!m.hit_cap);
        assert!((m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] - 1.0).abs() < 1e-5, "{:?}", m.x);
        let (x, _) = newton_polish(&mut f, &m.x, m.f, 5);
        assert!((x[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn quadratic_derivatives() {
        let mut f = |x: &[f64]| 3.0 * x[0] * x[0] + x[0] * x[1] + 2.0 * x[1] * x[1] - x[2];
        let g = gradient(&mut f, &[1.0, 2.0, 0.5], 1e-6);
        assert!((g[0] - 8.0).abs() < 1e-7 && (g[1] - 9.0).abs() < 1e-7 && (g[2] + 1.0).abs() < 1e-7);
        let h = hessian(&mut f, &[1.0, 2.0, 0.5]);
        assert!((h[0][0] - 6.0).abs() < 1e-4 && (h[0][1] - 1.0).abs() < 1e-4 && (h[1][1] - 4.0).abs() < 1e-4);
        assert!(h[2][2].abs() < 1e-4);
    }

    #[test]
    fn infinite_values_are_avoided() {
        let mut f = |x: &[f64]| if x[0] < 0.0 { f64::NAN } else { (x[0] - 0.3).powi(2) };
        let m = nelder_mead(&mut f, &[1.0], &NelderMeadOptions::default());
        assert!((m.x[0] - 0.3).abs() < 1e-6);
    }
}
