//! Ordinary least squares with an intercept.

/// Outcome of a fit: `[intercept, w_1, ..., w_d]`, plus whether the ridge
/// fallback was needed.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub coefficients: Vec<f64>,
    pub ridge: bool,
}

/// Fit `y ≈ b0 + Σ w_j x_j` by the normal equations on centered features.
/// Returns `None` when the centered system is all zeros (no variation at all
/// in the features) and the ridge fallback cannot help.
pub fn fit(xs: &[Vec<f64>], ys: &[f64]) -> Option<Fit> {
    let n = ys.len();
    let d = xs.first().map_or(0, Vec::len);
    if n == 0 {
        return None;
    }
    let nf = n as f64;
    let ymean = ys.iter().sum::<f64>() / nf;
    let xmean: Vec<f64> = (0..d).map(|j| xs.iter().map(|x| x[j]).sum::<f64>() / nf).collect();
    if d == 0 {
        return Some(Fit { coefficients: vec![ymean], ridge: false });
    }
    let mut a = vec![vec![0.0; d]; d];
    let mut b = vec![0.0; d];
    for (x, y) in xs.iter().zip(ys) {
        let xc: Vec<f64> = x.iter().zip(&xmean).map(|(v, m)| v - m).collect();
        let yc = y - ymean;
        for i in 0..d {
            b[i] += xc[i] * yc;
            for j in 0..d {
                a[i][j] += xc[i] * xc[j];
            }
        }
    }
    let (w, ridge) = match solve(a.clone(), b.clone()) {
        Some(w) => (w, false),
        None => {
            let trace: f64 = (0..d).map(|i| a[i][i]).sum();
            if trace <= 0.0 {
                return None;
            }
            let lambda = 1e-9 * trace;
            let mut ar = a.clone();
            for (i, row) in ar.iter_mut().enumerate() {
                row[i] += lambda;
            }
            (solve(ar, b)?, true)
        }
    };
    let intercept = ymean - w.iter().zip(&xmean).map(|(wi, mi)| wi * mi).sum::<f64>();
    let mut coefficients = vec![intercept];
    coefficients.extend(w);
    Some(Fit { coefficients, ridge })
}

/// Gaussian elimination with partial pivoting. `None` on a zero pivot.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().enumerate().map(|(i, r)| r[i].abs()).fold(0.0, f64::max);
    let tol = scale * 1e-13;
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= tol || a[pivot][col] == 0.0 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let (upper, lower) = a.split_at_mut(col + 1);
        let pivot_row = &upper[col];
        for (offset, row) in lower.iter_mut().enumerate() {
            let f = row[col] / pivot_row[col];
            if f != 0.0 {
                for (r, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *r -= f * p;
                }
                b[col + 1 + offset] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// `b0 + Σ w_j x_j`.
pub fn predict(coefficients: &[f64], x: &[f64]) -> f64 {
    coefficients[0] + coefficients[1..].iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let xs = vec![vec![1.0], vec![2.0], vec![3.0]];
        let f = fit(&xs, &[3.0, 5.0, 7.0]).unwrap();
        assert!((f.coefficients[0] - 1.0).abs() < 1e-12);
        assert!((f.coefficients[1] - 2.0).abs() < 1e-12);
        assert!(!f.ridge);
    }

    #[test]
    fn constant_target() {
        let xs = vec![vec![1.0], vec![5.0], vec![9.0]];
        let f = fit(&xs, &[4.0, 4.0, 4.0]).unwrap();
        assert_eq!(f.coefficients, vec![4.0, 0.0]);
    }

    #[test]
    fn collinear_features_use_ridge() {
        let xs = vec![vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]];
        let f = fit(&xs, &[1.0, 2.0, 3.0]).unwrap();
        assert!(f.ridge);
        for (x, y) in xs.iter().zip([1.0, 2.0, 3.0]) {
            assert!((predict(&f.coefficients, x) - y).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_feature_is_singular() {
        let xs = vec![vec![2.0], vec![2.0]];
        assert!(fit(&xs, &[1.0, 3.0]).is_none());
    }
}
