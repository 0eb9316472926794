//! Symmetric tridiagonal eigenproblem: Sturm bisection for the lowest
//! eigenvalues, inverse iteration for the vectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Real symmetric tridiagonal matrix.
///
/// `spacing` is the weight of the inner product `⟨u,v⟩ = spacing·Σ u_i v_i`
/// under which eigenvectors are normalised; it is 1 for a plain matrix and
/// the grid spacing for a discretised Hamiltonian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TridiagonalSym {
    diagonal: Vec<f64>,
    off_diagonal: Vec<f64>,
    spacing: f64,
}

impl TridiagonalSym {
    pub fn new(diagonal: Vec<f64>, off_diagonal: Vec<f64>) -> Result<Self> {
        let n = diagonal.len();
        if n == 0 {
            return Err(invalid("empty matrix"));
        }
        if off_diagonal.len() + 1 != n {
            return Err(invalid(format!(
                "off-diagonal has length {}, expected {}",
                off_diagonal.len(),
                n - 1
            )));
        }
        if let Some(i) = diagonal.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinitePotential { index: i });
        }
        if off_diagonal.iter().any(|v| !v.is_finite()) {
            return Err(invalid("non-finite off-diagonal entry"));
        }
        Ok(Self { diagonal, off_diagonal, spacing: 1.0 })
    }

    pub fn from_diagonal(diagonal: Vec<f64>) -> Result<Self> {
        let n = diagonal.len();
        Self::new(diagonal, vec![0.0; n.saturating_sub(1)])
    }

    pub fn with_spacing(mut self, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(invalid(format!("inner-product spacing must be positive, got {spacing}")));
        }
        self.spacing = spacing;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.diagonal.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn off_diagonal(&self) -> &[f64] {
        &self.off_diagonal
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Gershgorin interval containing the whole spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.n();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off_diagonal[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off_diagonal[i].abs() } else { 0.0 };
            lo = lo.min(self.diagonal[i] - r);
            hi = hi.max(self.diagonal[i] + r);
        }
        (lo, hi)
    }

    /// Infinity norm bound taken from the Gershgorin interval.
    pub fn norm(&self) -> f64 {
        let (lo, hi) = self.gershgorin();
        lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|i| {
                let mut s = self.diagonal[i] * v[i];
                if i > 0 {
                    s += self.off_diagonal[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    s += self.off_diagonal[i] * v[i + 1];
                }
                s
            })
            .collect()
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence count).
    pub fn count_below(&self, x: f64) -> usize {
        let pivmin = self.pivmin();
        let mut count = 0;
        let mut q = self.diagonal[0] - x;
        for i in 0..self.n() {
            if i > 0 {
                let e = self.off_diagonal[i - 1];
                q = self.diagonal[i] - x - e * e / q;
            }
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn pivmin(&self) -> f64 {
        let emax = self.off_diagonal.iter().fold(1.0f64, |m, e| m.max(e * e));
        f64::MIN_POSITIVE * emax
    }

    /// The `index`-th smallest eigenvalue (0-based) by bisection.
    pub fn bisect(&self, index: usize, max_iterations: usize) -> Result<f64> {
        let (mut lo, mut hi) = self.gershgorin();
        let abs_tol = f64::EPSILON * self.norm();
        let pad = 2.0 * abs_tol + 2.0 * f64::MIN_POSITIVE;
        lo -= pad;
        hi += pad;
        for _ in 0..max_iterations {
            let tol = (2.0 * f64::EPSILON * lo.abs().max(hi.abs())).max(abs_tol);
            if hi - lo <= tol {
                return Ok(0.5 * (lo + hi));
            }
            let mid = 0.5 * (lo + hi);
            if self.count_below(mid) > index {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Err(Error::NoConvergence { index, iterations: max_iterations })
    }
}

/// Controls for [`eigensolve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    pub max_bisection_steps: usize,
    pub max_inverse_iterations: usize,
    /// Largest acceptable residual `‖Tv − λv‖/‖v‖`.
    pub residual_tol: f64,
    /// Eigenvalues closer than `cluster_tol·‖T‖` are reorthogonalised against each other.
    pub cluster_tol: f64,
    pub parallel: bool,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            max_bisection_steps: 256,
            max_inverse_iterations: 8,
            residual_tol: 1e-8,
            cluster_tol: 1e-3,
            parallel: true,
        }
    }
}

/// Lowest eigenpairs of a [`TridiagonalSym`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenpairs {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// `vectors[i]` belongs to `values[i]`; normalised under the matrix's inner product.
    pub vectors: Vec<Vec<f64>>,
    /// Residual norms `‖Tv − λv‖/‖v‖`.
    pub residuals: Vec<f64>,
}

/// Lowest `k` eigenpairs, ascending.
///
/// Each vector's first component exceeding `1e-8` of its largest magnitude is
/// made positive.
pub fn eigensolve(t: &TridiagonalSym, k: usize, opts: &EigenOptions) -> Result<Eigenpairs> {
    let n = t.n();
    if k == 0 || k > n {
        return Err(invalid(format!("requested {k} eigenpairs of a {n}x{n} matrix")));
    }
    let values: Vec<f64> = if opts.parallel {
        (0..k)
            .into_par_iter()
            .map(|i| t.bisect(i, opts.max_bisection_steps))
            .collect::<Result<_>>()?
    } else {
        (0..k).map(|i| t.bisect(i, opts.max_bisection_steps)).collect::<Result<_>>()?
    };

    let norm = t.norm();
    let mut clusters: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for i in 1..=k {
        if i == k || values[i] - values[i - 1] >= opts.cluster_tol * norm {
            clusters.push((start, i));
            start = i;
        }
    }

    let solve_cluster = |&(a, b): &(usize, usize)| -> Result<Vec<(f64, Vec<f64>, f64)>> {
        let mut out: Vec<(f64, Vec<f64>, f64)> = Vec::with_capacity(b - a);
        let mut shifted_prev = f64::NEG_INFINITY;
        for i in a..b {
            let pertol = 10.0 * f64::EPSILON * values[i].abs().max(norm * f64::EPSILON);
            let mut shift = values[i];
            if shift - shifted_prev < pertol {
                shift = shifted_prev + pertol;
            }
            shifted_prev = shift;
            let previous: Vec<&[f64]> = out.iter().map(|(_, v, _)| v.as_slice()).collect();
            let (lambda, v, r) = inverse_iteration(t, i, values[i], shift, &previous, opts)?;
            out.push((lambda, v, r));
        }
        Ok(out)
    };
    let solved: Vec<Vec<(f64, Vec<f64>, f64)>> = if opts.parallel {
        clusters.par_iter().map(solve_cluster).collect::<Result<_>>()?
    } else {
        clusters.iter().map(solve_cluster).collect::<Result<_>>()?
    };

    let scale = 1.0 / t.spacing().sqrt();
    let mut result = Eigenpairs { values: Vec::with_capacity(k), vectors: Vec::with_capacity(k), residuals: Vec::with_capacity(k) };
    for (lambda, mut v, r) in solved.into_iter().flatten() {
        fix_sign(&mut v);
        v.iter_mut().for_each(|x| *x *= scale);
        result.values.push(lambda);
        result.vectors.push(v);
        result.residuals.push(r);
    }
    Ok(result)
}

fn fix_sign(v: &mut [f64]) {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-8 * max) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Pivoted LU factors of `T − σI` (LAPACK `dgttrf` layout).
struct TridiagLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagLu {
    fn factor(t: &TridiagonalSym, sigma: f64, tiny: f64) -> Self {
        let n = t.n();
        let mut dl = t.off_diagonal().to_vec();
        let mut du = t.off_diagonal().to_vec();
        let mut d: Vec<f64> = t.diagonal().iter().map(|x| x - sigma).collect();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] != 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                swapped[i] = true;
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
            }
        }
        for x in d.iter_mut() {
            if x.abs() < tiny {
                *x = if *x < 0.0 { -tiny } else { tiny };
            }
        }
        Self { dl, d, du, du2, swapped }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n - 1 {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let nrm = dot(v, v).sqrt();
    if nrm > 0.0 {
        v.iter_mut().for_each(|x| *x /= nrm);
    }
    nrm
}

fn residual(t: &TridiagonalSym, lambda: f64, v: &[f64]) -> f64 {
    let tv = t.mul_vec(v);
    tv.iter().zip(v).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt()
}

/// Inverse iteration for one eigenvector; returns the Rayleigh quotient, the
/// Euclidean-unit vector and its residual.
fn inverse_iteration(
    t: &TridiagonalSym,
    index: usize,
    lambda: f64,
    shift: f64,
    previous: &[&[f64]],
    opts: &EigenOptions,
) -> Result<(f64, Vec<f64>, f64)> {
    let n = t.n();
    let norm = t.norm();
    let lu = TridiagLu::factor(t, shift, f64::EPSILON * norm);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + index as u64);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    normalize(&mut v);

    let converge_at = (0.1 * opts.residual_tol).max(8.0 * f64::EPSILON * norm);
    let mut extra = 0;
    let mut best = (f64::INFINITY, lambda, v.clone());
    for _ in 0..opts.max_inverse_iterations {
        lu.solve(&mut v);
        for _ in 0..2 {
            for p in previous {
                let c = dot(&v, p);
                v.iter_mut().zip(p.iter()).for_each(|(x, y)| *x -= c * y);
            }
        }
        if normalize(&mut v) == 0.0 || v.iter().any(|x| !x.is_finite()) {
            break;
        }
        let rq = dot(&v, &t.mul_vec(&v));
        let r = residual(t, rq, &v);
        if r < best.0 {
            best = (r, rq, v.clone());
        }
        if r <= converge_at {
            extra += 1;
            if extra > 1 {
                break;
            }
        }
    }
    let (r, rq, v) = best;
    if r > opts.residual_tol {
        return Err(Error::NoConvergence { index, iterations: opts.max_inverse_iterations });
    }
    Ok((rq, v, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop, prop_assert, proptest};

    fn dense_check(t: &TridiagonalSym, pairs: &Eigenpairs) {
        let h = t.spacing();
        for (i, v) in pairs.vectors.iter().enumerate() {
            for (j, w) in pairs.vectors.iter().enumerate() {
                let ip = h * dot(v, w);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ip - expect).abs() < 1e-10, "<v{i},v{j}> = {ip}");
            }
            assert!(pairs.residuals[i] <= 1e-8);
        }
        assert!(pairs.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn diagonal_matrix() {
        let t = TridiagonalSym::from_diagonal(vec![3.0, 1.0, 2.0]).unwrap();
        let p = eigensolve(&t, 3, &EigenOptions::default()).unwrap();
        for (a, b) in p.values.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!((p.vectors[0][1] - 1.0).abs() < 1e-12);
        dense_check(&t, &p);
    }

    #[test]
    fn repeated_eigenvalues_stay_orthogonal() {
        let t = TridiagonalSym::from_diagonal(vec![1.0, 1.0, 1.0, 2.0]).unwrap();
        let p = eigensolve(&t, 4, &EigenOptions::default()).unwrap();
        dense_check(&t, &p);
    }

    #[test]
    fn discrete_laplacian_matches_closed_form() {
        // tridiag(-1, 2, -1) has eigenvalues 2 - 2cos(kπ/(n+1)).
        let n = 200;
        let t = TridiagonalSym::new(vec![2.0; n], vec![-1.0; n - 1]).unwrap();
        let p = eigensolve(&t, 12, &EigenOptions::default()).unwrap();
        for (k, v) in p.values.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-12, "{k}: {v} vs {exact}");
        }
        dense_check(&t, &p);
    }

    #[test]
    fn first_significant_component_is_positive() {
        let t = TridiagonalSym::new(vec![2.0; 50], vec![-1.0; 49]).unwrap();
        let p = eigensolve(&t, 5, &EigenOptions::default()).unwrap();
        for v in &p.vectors {
            assert!(v[0] > 0.0);
        }
    }

    #[test]
    fn serial_and_parallel_agree_bitwise() {
        let d: Vec<f64> = (0..300).map(|i| ((i as f64) * 0.37).sin() * 3.0).collect();
        let t = TridiagonalSym::new(d, vec![-0.8; 299]).unwrap();
        let a = eigensolve(&t, 20, &EigenOptions::default()).unwrap();
        let b = eigensolve(&t, 20, &EigenOptions { parallel: false, ..Default::default() }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_k() {
        let t = TridiagonalSym::from_diagonal(vec![1.0, 2.0]).unwrap();
        assert!(eigensolve(&t, 0, &EigenOptions::default()).is_err());
        assert!(eigensolve(&t, 3, &EigenOptions::default()).is_err());
    }

    proptest! {
        #[test]
        fn random_matrices_are_diagonalised(
            d in prop::collection::vec(-5.0f64..5.0, 2..40),
            seed in any::<u64>(),
            spacing in 0.01f64..2.0,
        ) {
            let n = d.len();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let e: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let t = TridiagonalSym::new(d, e).unwrap().with_spacing(spacing).unwrap();
            let k = n.min(8);
            let p = eigensolve(&t, k, &EigenOptions::default()).unwrap();
            dense_check(&t, &p);
            // Sturm counts agree with the computed spectrum.
            for (i, v) in p.values.iter().enumerate() {
                prop_assert!(t.count_below(*v - 1e-9) <= i);
                prop_assert!(t.count_below(*v + 1e-9) > i);
            }
        }
    }
}
