//! Small least-squares helpers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFit {
    /// Coefficients of `a·x² + b·x + c`.
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub r_squared: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation.
pub fn std_dev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Coefficient of variation σ/|μ|.
pub fn coefficient_of_variation(xs: &[f64]) -> f64 {
    std_dev(xs) / mean(xs).abs()
}

fn r_squared(y: &[f64], w: &[f64], fitted: impl Fn(usize) -> f64) -> f64 {
    let sw: f64 = w.iter().sum();
    let ybar = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let ss_tot: f64 = y.iter().zip(w).map(|(v, wi)| wi * (v - ybar).powi(2)).sum();
    let ss_res: f64 = (0..y.len()).map(|i| w[i] * (y[i] - fitted(i)).powi(2)).sum();
    if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    }
}

/// Weighted straight-line fit; `weights = None` means unit weights.
pub fn linear_fit(x: &[f64], y: &[f64], weights: Option<&[f64]>) -> Result<LinearFit> {
    let n = x.len();
    let ones = vec![1.0; n];
    let w = weights.unwrap_or(&ones);
    if n < 2 || y.len() != n || w.len() != n {
        return Err(Error::SingularDesign(format!("linear fit needs ≥ 2 matching points, got {n}")));
    }
    let sw: f64 = w.iter().sum();
    let xb = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let yb = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxx: f64 = (0..n).map(|i| w[i] * (x[i] - xb).powi(2)).sum();
    let sxy: f64 = (0..n).map(|i| w[i] * (x[i] - xb) * (y[i] - yb)).sum();
    if sxx <= 0.0 || !sxx.is_finite() {
        return Err(Error::SingularDesign("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = yb - slope * xb;
    let r2 = r_squared(y, w, |i| intercept + slope * x[i]);
    Ok(LinearFit { slope, intercept, r_squared: r2 })
}

/// Unweighted least-squares parabola.
pub fn quadratic_fit(x: &[f64], y: &[f64]) -> Result<QuadraticFit> {
    let n = x.len();
    if n < 3 || y.len() != n {
        return Err(Error::SingularDesign(format!("quadratic fit needs ≥ 3 points, got {n}")));
    }
    // Centre and scale x for conditioning, then map the coefficients back.
    let xm = mean(x);
    let xs = x.iter().map(|v| (v - xm).abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let t: Vec<f64> = x.iter().map(|v| (v - xm) / xs).collect();
    let mut m = [[0.0f64; 4]; 3];
    for i in 0..n {
        let row = [t[i] * t[i], t[i], 1.0];
        for r in 0..3 {
            for c in 0..3 {
                m[r][c] += row[r] * row[c];
            }
            m[r][3] += row[r] * y[i];
        }
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|a, b| m[*a][col].abs().total_cmp(&m[*b][col].abs())).unwrap_or(col);
        m.swap(col, piv);
        if m[col][col].abs() < 1e-14 {
            return Err(Error::SingularDesign("quadratic design matrix is singular".into()));
        }
        for r in 0..3 {
            if r != col {
                let f = m[r][col] / m[col][col];
                for c in col..4 {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    let (p2, p1, p0) = (m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]);
    let a = p2 / (xs * xs);
    let b = p1 / xs - 2.0 * a * xm;
    let c = p0 - p1 * xm / xs + p2 * xm * xm / (xs * xs);
    let ones = vec![1.0; n];
    let r2 = r_squared(y, &ones, |i| p2 * t[i] * t[i] + p1 * t[i] + p0);
    Ok(QuadraticFit { a, b, c, r_squared: r2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 1.0).collect();
        let f = linear_fit(&x, &y, None).unwrap();
        assert!((f.slope - 2.5).abs() < 1e-12 && (f.intercept + 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(coefficient_of_variation(&[2.0, 2.0, 2.0]), 0.0);
    }

    #[test]
    fn exact_parabola_far_from_origin() {
        let x: Vec<f64> = (100..140).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 0.03 * v * v - 2.0 * v + 7.0).collect();
        let f = quadratic_fit(&x, &y).unwrap();
        assert!((f.a - 0.03).abs() < 1e-9 && (f.b + 2.0).abs() < 1e-6 && (f.c - 7.0).abs() < 1e-4);
        assert!(f.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(linear_fit(&[1.0, 1.0], &[0.0, 1.0], None).is_err());
        assert!(quadratic_fit(&[1.0, 2.0], &[0.0, 1.0]).is_err());
    }
}
