//! Weighted least squares through Householder QR with column pivoting.

/// Relative tolerance on |R_kk| / |R_11| below which a column counts as
/// linearly dependent.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct WlsFit {
    /// Coefficients in the caller's column order; 0 for dropped columns.
    pub coef: Vec<f64>,
    pub rank: usize,
    /// Columns dropped as linearly dependent on earlier pivots.
    pub dropped: Vec<usize>,
    /// Σ wᵢ (yᵢ − ŷᵢ)².
    pub rss: f64,
}

/// Minimizes Σ wᵢ (yᵢ − Σⱼ bⱼ cols[j][i])². `cols` holds the design columns.
pub fn weighted_least_squares(cols: &[Vec<f64>], y: &[f64], w: &[f64]) -> WlsFit {
    let n = y.len();
    let p = cols.len();
    let sw: Vec<f64> = w.iter().map(|v| v.max(0.0).sqrt()).collect();
    let mut a: Vec<Vec<f64>> = cols
        .iter()
        .map(|c| c.iter().zip(&sw).map(|(x, s)| x * s).collect())
        .collect();
    let mut b: Vec<f64> = y.iter().zip(&sw).map(|(v, s)| v * s).collect();
    let mut perm: Vec<usize> = (0..p).collect();
    let mut norms: Vec<f64> = a.iter().map(|c| c.iter().map(|x| x * x).sum()).collect();
    let steps = p.min(n);
    let mut rank = 0;
    let mut r_first = 0.0;
    for k in 0..steps {
        // pivot: largest remaining column norm
        let (j, _) = (k..p)
            .map(|j| (j, norms[j]))
            .fold((k, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        a.swap(k, j);
        norms.swap(k, j);
        perm.swap(k, j);
        let col = &a[k];
        let alpha: f64 = col[k..].iter().map(|x| x * x).sum::<f64>().sqrt();
        if k == 0 {
            r_first = alpha;
        }
        if !(alpha > RANK_TOL * r_first) || alpha == 0.0 {
            break;
        }
        let sign = if col[k] >= 0.0 { 1.0 } else { -1.0 };
        let mut v: Vec<f64> = col[k..].to_vec();
        v[0] += sign * alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        let reflect = |x: &mut [f64]| {
            let d: f64 = v.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>() * 2.0 / vnorm2;
            for (xi, vi) in x.iter_mut().zip(&v) {
                *xi -= d * vi;
            }
        };
        for c in a.iter_mut().skip(k) {
            reflect(&mut c[k..]);
        }
        reflect(&mut b[k..]);
        for j in k + 1..p {
            norms[j] = a[j][k + 1..].iter().map(|x| x * x).sum();
        }
        rank = k + 1;
    }
    // back substitution on the leading rank × rank block
    let mut z = vec![0.0; rank];
    for i in (0..rank).rev() {
        let mut s = b[i];
        for j in i + 1..rank {
            s -= a[j][i] * z[j];
        }
        z[i] = s / a[i][i];
    }
    let mut coef = vec![0.0; p];
    for i in 0..rank {
        coef[perm[i]] = z[i];
    }
    let mut dropped: Vec<usize> = perm[rank..].to_vec();
    dropped.sort_unstable();
    let rss = b[rank..].iter().map(|x| x * x).sum();
    WlsFit {
        coef,
        rank,
        dropped,
        rss,
    }
}
