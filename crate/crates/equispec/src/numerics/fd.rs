//! Finite-difference derivatives on uniform grids.
//!
//! Weights come from Fornberg's recursion, so any window placement works; the
//! interior uses centred windows and the first/last few nodes fall back to
//! one-sided windows of the same width.

use crate::error::{invalid, Result};
use crate::numerics::grid::Grid1D;

/// Fornberg weights for derivatives `0..=max_order` at `z` over nodes `xs`.
///
/// Returns `w[k][j]`, the weight of `f(xs[j])` in the `k`-th derivative.
pub fn fornberg_weights(z: f64, xs: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - z;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Stencil width used for a derivative order: 5 points for orders 1–2,
/// 7 points for orders 3–4.
pub fn stencil_width(order: usize) -> usize {
    if order <= 2 {
        5
    } else {
        7
    }
}

/// Precomputed weights for one derivative order on a uniform grid.
#[derive(Debug, Clone)]
pub struct FdOperator {
    order: usize,
    width: usize,
    /// `weights[p]` applies when the target node is at position `p` of its window.
    weights: Vec<Vec<f64>>,
}

impl FdOperator {
    pub fn new(order: usize, h: f64) -> Result<Self> {
        if !(1..=4).contains(&order) {
            return Err(invalid(format!("derivative order must be 1..=4, got {order}")));
        }
        let width = stencil_width(order);
        let xs: Vec<f64> = (0..width).map(|j| j as f64).collect();
        let scale = h.powi(order as i32);
        let weights = (0..width)
            .map(|p| {
                fornberg_weights(p as f64, &xs, order)[order]
                    .iter()
                    .map(|w| w / scale)
                    .collect()
            })
            .collect();
        Ok(Self { order, width, weights })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn apply(&self, samples: &[f64]) -> Result<Vec<f64>> {
        let n = samples.len();
        if n < self.width {
            return Err(invalid(format!(
                "order-{} derivative needs at least {} nodes, got {n}",
                self.order, self.width
            )));
        }
        let half = self.width / 2;
        Ok((0..n)
            .map(|i| {
                let start = i.saturating_sub(half).min(n - self.width);
                let w = &self.weights[i - start];
                w.iter().zip(&samples[start..start + self.width]).map(|(a, b)| a * b).sum()
            })
            .collect())
    }
}

/// Derivative of `samples` (one value per grid node) of the given order.
pub fn fd_derivative(samples: &[f64], grid: &Grid1D, order: usize) -> Result<Vec<f64>> {
    if samples.len() != grid.n_points() {
        return Err(invalid(format!(
            "{} samples for a grid of {} nodes",
            samples.len(),
            grid.n_points()
        )));
    }
    FdOperator::new(order, grid.spacing())?.apply(samples)
}
