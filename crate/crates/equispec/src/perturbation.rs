//! Exact Rayleigh–Schrödinger perturbation theory for
//! `H = −d²/dξ² + ξ² + λ·u(ξ)` with polynomial `u`.
//!
//! Unperturbed levels are `ε_k⁰ = 2k + 1`. Matrix elements `⟨m|ξ^j|n⟩` in the
//! Hermite-function basis are carried in reduced form `ũ_mn = u_mn / √(s_m/s_n)`
//! with `s_n = n!/2ⁿ`; the reduced values are rational and obey
//! `ũ^(j)_mn = ũ^(j−1)_{m,n+1} + (n/2)·ũ^(j−1)_{m,n−1}`.

use std::ops::RangeInclusive;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::exact::{int, RadicalRational, RationalPolynomial};

/// Energy convention used by every result of this module.
pub const CONVENTION: &str = "H0 = -d^2/dxi^2 + xi^2, eps_k^(0) = 2k + 1";

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// `s_m/s_n` with `s_n = n!/2ⁿ`.
fn s_ratio(m: usize, n: usize) -> BigRational {
    let num = factorial(m) << n;
    let den = factorial(n) << m;
    BigRational::new(num, den)
}

/// Row `ũ^(j)_{m,n}` for `n = 0..=m+j`.
fn reduced_row(m: usize, j: usize) -> Vec<BigRational> {
    let len = m + 2 * j + 2;
    let mut v = vec![BigRational::zero(); len];
    v[m] = BigRational::one();
    for _ in 0..j {
        let next: Vec<BigRational> = (0..len)
            .map(|n| {
                let up = if n + 1 < len { v[n + 1].clone() } else { BigRational::zero() };
                if n > 0 && !v[n - 1].is_zero() {
                    up + &v[n - 1] * BigRational::new(BigInt::from(n), BigInt::from(2))
                } else {
                    up
                }
            })
            .collect();
        v = next;
    }
    v.truncate(m + j + 1);
    v
}

/// Reduced element `ũ^(j)_mn = u^(j)_mn / √(s_m/s_n)`.
pub fn reduced_element(m: usize, n: usize, j: usize) -> BigRational {
    if (m + n + j) % 2 == 1 || m.abs_diff(n) > j {
        return BigRational::zero();
    }
    reduced_row(m, j).swap_remove(n)
}

/// Exact `⟨m|ξ^j|n⟩` in the orthonormal Hermite-function basis.
pub fn matrix_element(m: usize, n: usize, j: usize) -> RadicalRational {
    let q = reduced_element(m, n, j);
    if q.is_zero() {
        return RadicalRational::zero();
    }
    RadicalRational::new(q, s_ratio(m, n)).expect("factorial ratios are positive")
}

/// Exact polynomial `u_kk^(j)` in `k` (degree `j/2`).
pub fn diagonal_polynomial(j: usize) -> Result<RationalPolynomial> {
    if j % 2 == 1 {
        return Err(invalid(format!("diagonal elements of ξ^{j} vanish for odd j")));
    }
    let p = RationalPolynomial::fit_certified(|k| reduced_element(k as usize, k as usize, j), 0, j / 2)?;
    if p.degree() != Some(j / 2) {
        return Err(Error::DegreeCertification(format!("u_kk^({j}) has degree {:?}", p.degree())));
    }
    Ok(p)
}

/// Exact polynomial `p_kl^(j)` defined by
/// `u^(j)_{k,k−l} = √(k!/(2^l (k−l)!))·p_kl^(j)` (degree `(j−l)/2`).
pub fn offdiagonal_polynomial(j: usize, l: usize) -> Result<RationalPolynomial> {
    if l == 0 || l > j {
        return Err(invalid(format!("need 1 ≤ l ≤ j, got j={j}, l={l}")));
    }
    if (j - l) % 2 == 1 {
        return Err(invalid(format!("u^({j})_(k,k-{l}) vanishes identically (j − l odd)")));
    }
    let f = |k: i64| {
        let k = k as usize;
        let radical = RadicalRational::sqrt(BigRational::new(factorial(k), factorial(k - l) << l))
            .expect("positive radicand");
        matrix_element(k, k - l, j).ratio(&radical).expect("shared radicand")
    };
    let deg = (j - l) / 2;
    let p = RationalPolynomial::fit_certified(f, l as i64, deg)?;
    if p.degree() != Some(deg) {
        return Err(Error::DegreeCertification(format!("p_k{l}^({j}) has degree {:?}", p.degree())));
    }
    Ok(p)
}

/// Corrections for one unperturbed level.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSeries {
    pub k: usize,
    /// `energies[p-1] = ε_k^(p)`.
    pub energies: Vec<BigRational>,
    /// `coefficients[p-1]` lists the non-zero `(m, c_km^(p))`, intermediate normalisation.
    pub coefficients: Vec<Vec<(usize, RadicalRational)>>,
}

/// Perturbation matrix `⟨m|u|n⟩` in reduced form on a finite index window.
pub struct PerturbationEngine {
    degree: usize,
    size: usize,
    matrix: Vec<Vec<BigRational>>,
}

impl PerturbationEngine {
    /// Engine able to produce series up to order `p_max` for every `k ≤ k_max`.
    pub fn new(u: &[BigRational], k_max: usize, p_max: usize) -> Self {
        let degree = u.iter().rposition(|c| !c.is_zero()).unwrap_or(0);
        let size = k_max + degree * p_max + 1;
        let matrix = (0..size)
            .into_par_iter()
            .map(|m| {
                let mut row = vec![BigRational::zero(); size];
                for (j, cj) in u.iter().enumerate().take(degree + 1) {
                    if cj.is_zero() {
                        continue;
                    }
                    for (n, v) in reduced_row(m, j).into_iter().enumerate() {
                        if n < size && !v.is_zero() {
                            row[n] += cj * v;
                        }
                    }
                }
                row
            })
            .collect();
        Self { degree, size, matrix }
    }

    pub fn series(&self, k: usize, p_max: usize) -> Result<PerturbationSeries> {
        if p_max == 0 {
            return Err(invalid("p_max must be at least 1"));
        }
        if k + self.degree * p_max >= self.size {
            return Err(invalid(format!("engine window too small for k={k}, p={p_max}")));
        }
        let band = |p: usize| k.saturating_sub(self.degree * p)..=(k + self.degree * p);
        let mut c: Vec<Vec<BigRational>> = vec![vec![BigRational::zero(); self.size]];
        c[0][k] = BigRational::one();
        let mut energies: Vec<BigRational> = Vec::with_capacity(p_max);
        for p in 1..=p_max {
            let prev = &c[p - 1];
            let e: BigRational = band(p - 1).map(|n| &self.matrix[k][n] * &prev[n]).sum();
            energies.push(e);
            let mut next = vec![BigRational::zero(); self.size];
            for m in band(p) {
                if m == k {
                    continue;
                }
                let mut acc: BigRational = band(p - 1)
                    .filter(|n| m.abs_diff(*n) <= self.degree)
                    .map(|n| &self.matrix[m][n] * &prev[n])
                    .sum();
                for q in 1..p {
                    if !c[p - q][m].is_zero() {
                        acc -= &energies[q - 1] * &c[p - q][m];
                    }
                }
                next[m] = acc / int(2 * (k as i64 - m as i64));
            }
            c.push(next);
        }
        let coefficients = c[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, v)| !v.is_zero())
                    .map(|(m, v)| {
                        let r = RadicalRational::new(v.clone(), s_ratio(m, k)).expect("positive radicand");
                        (m, r)
                    })
                    .collect()
            })
            .collect();
        Ok(PerturbationSeries { k, energies, coefficients })
    }
}

/// Corrections `ε_k^(1..=p_max)` and coefficients for `u = Σ u_j ξ^j`.
pub fn correction_series(k: usize, u: &[BigRational], p_max: usize) -> Result<PerturbationSeries> {
    PerturbationEngine::new(u, k, p_max).series(k, p_max)
}

fn degree_bound(u_degree: usize, p: usize) -> usize {
    (p * u_degree).div_ceil(2)
}

/// Exact polynomial `ε_k^(p)` in `k`, certified by one extra evaluation.
pub fn correction_polynomial(u: &[BigRational], p: usize) -> Result<RationalPolynomial> {
    let degree = u.iter().rposition(|c| !c.is_zero()).unwrap_or(0);
    let bound = degree_bound(degree, p);
    let k_max = bound + 1;
    let engine = PerturbationEngine::new(u, k_max, p);
    let values: Vec<BigRational> = (0..=k_max)
        .into_par_iter()
        .map(|k| engine.series(k, p).map(|s| s.energies[p - 1].clone()))
        .collect::<Result<_>>()?;
    RationalPolynomial::fit_certified(|k| values[k as usize].clone(), 0, bound)
}

/// Degree in `k` of `ε_k^(p)` for the monomial `u = ξ^j`; `None` when the
/// correction vanishes identically.
pub fn correction_degree(j: usize, p: usize) -> Result<Option<usize>> {
    if p == 0 {
        return Err(invalid("order p must be at least 1"));
    }
    let mut u = vec![BigRational::zero(); j + 1];
    u[j] = BigRational::one();
    Ok(correction_polynomial(&u, p)?.degree())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub order: usize,
    /// Degree of `ε_k^(order)` in `k`.
    pub degree: usize,
}

/// Outcome of [`equidistance_verdict`].
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub equidistant: bool,
    pub first_violation: Option<Violation>,
    pub k_values: Vec<usize>,
    /// `corrections[p-1][i]` is `ε_k^(p)` at `k = k_values[i]`.
    pub corrections: Vec<Vec<BigRational>>,
    /// Consecutive differences of `corrections[p-1]`.
    pub spacings: Vec<Vec<BigRational>>,
    pub note: Option<String>,
}

/// Checks whether every correction up to `p_max` is affine in `k` over `k_range`.
pub fn equidistance_verdict(u: &[BigRational], p_max: usize, k_range: RangeInclusive<usize>) -> Result<Verdict> {
    if p_max == 0 {
        return Err(invalid("p_max must be at least 1"));
    }
    let k_values: Vec<usize> = k_range.collect();
    if k_values.len() < 3 {
        return Err(invalid("k range needs at least 3 levels to test affinity"));
    }
    let k_max = *k_values.last().expect("non-empty");
    let engine = PerturbationEngine::new(u, k_max, p_max);
    let series: Vec<PerturbationSeries> =
        k_values.par_iter().map(|&k| engine.series(k, p_max)).collect::<Result<_>>()?;
    let corrections: Vec<Vec<BigRational>> =
        (0..p_max).map(|p| series.iter().map(|s| s.energies[p].clone()).collect()).collect();
    let spacings: Vec<Vec<BigRational>> = corrections
        .iter()
        .map(|row| row.windows(2).map(|w| &w[1] - &w[0]).collect())
        .collect();
    let mut first_violation = None;
    for (p, sp) in spacings.iter().enumerate() {
        if sp.windows(2).any(|w| w[0] != w[1]) {
            let degree = correction_polynomial(u, p + 1)?.degree().unwrap_or(0);
            first_violation = Some(Violation { order: p + 1, degree });
            break;
        }
    }
    let equidistant = first_violation.is_none();
    let u_degree = u.iter().rposition(|c| !c.is_zero()).unwrap_or(0);
    let note = (equidistant && u_degree <= 1).then(|| {
        "constant and linear perturbations keep the ladder trivially: a constant shifts every level \
         and a linear term is removed by completing the square"
            .to_string()
    });
    Ok(Verdict { equidistant, first_violation, k_values, corrections, spacings, note })
}
