//! Exact arithmetic: polynomials with rational coefficients and numbers of
//! the form q·√t.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
pub use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{invalid, Error, Result};

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn rat_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Parses an integer, a fraction `p/q` or a terminating decimal exactly.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || invalid(format!("'{s}' is not an exact rational number"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    let (int_part, frac) = s.split_once('.').unwrap_or((s, ""));
    if !frac.chars().all(|c| c.is_ascii_digit()) || int_part.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    let digits: BigInt = format!("{int_part}{frac}").parse().map_err(|_| bad())?;
    let scale = num_traits::pow(BigInt::from(10), frac.len());
    Ok(BigRational::new(digits, scale))
}

/// Polynomial in one variable with exact rational coefficients, lowest order first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RationalPolynomial {
    coeffs: Vec<BigRational>,
}

impl RationalPolynomial {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: BigRational) -> Self {
        Self::new(vec![c])
    }

    /// Builds a polynomial from `(numerator, denominator)` pairs.
    pub fn from_ratios(coeffs: &[(i64, i64)]) -> Self {
        Self::new(coeffs.iter().map(|(n, d)| rat(*n, *d)).collect())
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.coeffs.iter().rev().fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    pub fn eval_int(&self, k: i64) -> BigRational {
        self.eval(&int(k))
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + rat_to_f64(c))
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
                .collect(),
        )
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let zero = BigRational::zero();
        Self::new(
            (0..n)
                .map(|i| self.coeffs.get(i).unwrap_or(&zero) + other.coeffs.get(i).unwrap_or(&zero))
                .collect(),
        )
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// Newton-form interpolation through `points` (distinct abscissae).
    pub fn interpolate(points: &[(BigRational, BigRational)]) -> Result<Self> {
        let n = points.len();
        for i in 0..n {
            for j in 0..i {
                if points[i].0 == points[j].0 {
                    return Err(invalid("interpolation nodes must be distinct"));
                }
            }
        }
        let mut dd: Vec<BigRational> = points.iter().map(|p| p.1.clone()).collect();
        for level in 1..n {
            for i in (level..n).rev() {
                dd[i] = (&dd[i] - &dd[i - 1]) / (&points[i].0 - &points[i - level].0);
            }
        }
        let mut poly = Self::zero();
        for i in (0..n).rev() {
            poly = poly.mul(&Self::new(vec![-points[i].0.clone(), BigRational::one()]));
            poly = poly.add(&Self::constant(dd[i].clone()));
        }
        Ok(poly)
    }

    /// Interpolates `f` at `start, …, start + degree_bound` and checks the
    /// result at one further point, so that a function known to be a
    /// polynomial of degree ≤ `degree_bound` is reconstructed with certainty.
    pub fn fit_certified<F>(f: F, start: i64, degree_bound: usize) -> Result<Self>
    where
        F: Fn(i64) -> BigRational,
    {
        let pts: Vec<(BigRational, BigRational)> =
            (0..=degree_bound as i64).map(|i| (int(start + i), f(start + i))).collect();
        let poly = Self::interpolate(&pts)?;
        let check = start + degree_bound as i64 + 1;
        if poly.eval_int(check) != f(check) {
            return Err(Error::DegreeCertification(format!(
                "interpolant of degree ≤ {degree_bound} misses the value at {check}"
            )));
        }
        Ok(poly)
    }

    /// Renders the polynomial in the variable `var`, e.g. `15/8 + 5*k + 15/4*k^2`.
    pub fn render(&self, var: &str) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut out = String::new();
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            if out.is_empty() {
                if c.is_negative() {
                    out.push('-');
                }
            } else {
                out.push_str(if c.is_negative() { " - " } else { " + " });
            }
            let body = match i {
                0 => mag.to_string(),
                _ => {
                    let pow = if i == 1 { var.to_string() } else { format!("{var}^{i}") };
                    if mag.is_one() {
                        pow
                    } else {
                        format!("{mag}*{pow}")
                    }
                }
            };
            out.push_str(&body);
        }
        out
    }
}

impl fmt::Display for RationalPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render("k"))
    }
}

/// Splits `n > 0` as `a²·b` with `b` squarefree, by trial division.
fn square_split(n: &BigInt) -> (BigInt, BigInt) {
    let mut rest = n.clone();
    let mut root = BigInt::one();
    let mut free = BigInt::one();
    let mut p = BigInt::from(2);
    while &p * &p <= rest {
        let mut e = 0u32;
        loop {
            let (q, r) = rest.div_rem(&p);
            if !r.is_zero() {
                break;
            }
            rest = q;
            e += 1;
        }
        if e > 0 {
            root *= p.pow(e / 2);
            if e % 2 == 1 {
                free *= &p;
            }
        }
        p += if p == BigInt::from(2) { 1 } else { 2 };
    }
    free *= rest;
    (root, free)
}

/// Exact number `q·√t`.
///
/// Canonical form: `t` is a squarefree positive integer and zero is `q = 0,
/// t = 1`, so two values are equal exactly when their fields are.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RadicalRational {
    q: BigRational,
    t: BigInt,
}

impl RadicalRational {
    pub fn zero() -> Self {
        Self { q: BigRational::zero(), t: BigInt::one() }
    }

    pub fn from_rational(q: BigRational) -> Self {
        Self { q, t: BigInt::one() }
    }

    /// `q·√radicand` for a non-negative rational radicand.
    pub fn new(q: BigRational, radicand: BigRational) -> Result<Self> {
        if radicand.is_negative() {
            return Err(invalid(format!("negative radicand {radicand}")));
        }
        if q.is_zero() || radicand.is_zero() {
            return Ok(Self::zero());
        }
        // √(r/s) = √(r·s)/s
        let (r, s) = (radicand.numer().clone(), radicand.denom().clone());
        let (root, free) = square_split(&(r * &s));
        Ok(Self { q: q * BigRational::new(root, s), t: free })
    }

    /// `√radicand`.
    pub fn sqrt(radicand: BigRational) -> Result<Self> {
        Self::new(BigRational::one(), radicand)
    }

    pub fn q(&self) -> &BigRational {
        &self.q
    }

    pub fn t(&self) -> &BigInt {
        &self.t
    }

    pub fn is_zero(&self) -> bool {
        self.q.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.t.is_one()
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let g = self.t.gcd(&other.t);
        let t = (&self.t / &g) * (&other.t / &g);
        Self { q: &self.q * &other.q * BigRational::from_integer(g), t }
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        if s.is_zero() {
            return Self::zero();
        }
        Self { q: &self.q * s, t: self.t.clone() }
    }

    /// Sum, when both terms share a radicand (or one is zero).
    pub fn checked_add(&self, other: &Self) -> Option<Self> {
        if self.is_zero() {
            return Some(other.clone());
        }
        if other.is_zero() {
            return Some(self.clone());
        }
        if self.t != other.t {
            return None;
        }
        let q = &self.q + &other.q;
        Some(if q.is_zero() { Self::zero() } else { Self { q, t: self.t.clone() } })
    }

    /// `self / other` when the quotient is rational.
    pub fn ratio(&self, other: &Self) -> Option<BigRational> {
        if other.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(BigRational::zero());
        }
        (self.t == other.t).then(|| &self.q / &other.q)
    }

    pub fn to_f64(&self) -> f64 {
        rat_to_f64(&self.q) * self.t.to_f64().unwrap_or(f64::NAN).sqrt()
    }
}

impl fmt::Display for RadicalRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.t.is_one() {
            write!(f, "{}", self.q)
        } else {
            write!(f, "{}·sqrt({})", self.q, self.t)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_exact_numbers() {
        assert_eq!(parse_rational("3").unwrap(), int(3));
        assert_eq!(parse_rational("-1/4").unwrap(), rat(-1, 4));
        assert_eq!(parse_rational("0.1").unwrap(), rat(1, 10));
        assert_eq!(parse_rational("-2.50").unwrap(), rat(-5, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1e3").is_err());
    }
    use proptest::prelude::*;

    #[test]
    fn canonical_radicals() {
        let a = RadicalRational::sqrt(rat(1, 2)).unwrap();
        assert_eq!(a.q(), &rat(1, 2));
        assert_eq!(a.t(), &BigInt::from(2));
        assert_eq!(a.to_string(), "1/2·sqrt(2)");
        let b = RadicalRational::sqrt(int(72)).unwrap();
        assert_eq!((b.q().clone(), b.t().clone()), (int(6), BigInt::from(2)));
        let z = RadicalRational::new(int(0), int(5)).unwrap();
        assert_eq!(z, RadicalRational::zero());
        assert_eq!(z.t(), &BigInt::one());
        assert!(RadicalRational::sqrt(int(-1)).is_err());
    }

    #[test]
    fn products_and_ratios() {
        let a = RadicalRational::sqrt(int(6)).unwrap();
        let b = RadicalRational::sqrt(int(10)).unwrap();
        let ab = a.mul(&b);
        assert_eq!(ab, RadicalRational::new(int(2), int(15)).unwrap());
        assert_eq!(a.mul(&a), RadicalRational::from_rational(int(6)));
        assert_eq!(ab.ratio(&RadicalRational::sqrt(int(15)).unwrap()), Some(int(2)));
        assert_eq!(a.ratio(&b), None);
        assert!(a.checked_add(&b).is_none());
        assert_eq!(a.checked_add(&a).unwrap().to_string(), "2·sqrt(6)");
    }

    #[test]
    fn polynomial_basics() {
        let p = RationalPolynomial::from_ratios(&[(15, 8), (5, 1), (15, 4), (5, 2)]);
        assert_eq!(p.degree(), Some(3));
        assert_eq!(p.render("k"), "15/8 + 5*k + 15/4*k^2 + 5/2*k^3");
        assert_eq!(p.derivative(), RationalPolynomial::from_ratios(&[(5, 1), (15, 2), (15, 2)]));
        let q = RationalPolynomial::from_ratios(&[(-1, 1), (2, 1)]);
        assert_eq!(q.to_string(), "-1 + 2*k");
        assert_eq!(RationalPolynomial::zero().degree(), None);
        assert_eq!(q.mul(&q), RationalPolynomial::from_ratios(&[(1, 1), (-4, 1), (4, 1)]));
    }

    #[test]
    fn certification_catches_underestimated_degree() {
        let cube = |k: i64| int(k * k * k);
        assert!(RationalPolynomial::fit_certified(cube, 0, 2).is_err());
        let p = RationalPolynomial::fit_certified(cube, 0, 3).unwrap();
        assert_eq!(p, RationalPolynomial::from_ratios(&[(0, 1), (0, 1), (0, 1), (1, 1)]));
    }

    proptest! {
        #[test]
        fn interpolation_recovers_polynomials(
            coeffs in prop::collection::vec((-50i64..50, 1i64..9), 1..7),
            start in -5i64..5,
        ) {
            let p = RationalPolynomial::from_ratios(&coeffs);
            let bound = coeffs.len() - 1;
            let q = RationalPolynomial::fit_certified(|k| p.eval_int(k), start, bound).unwrap();
            prop_assert_eq!(p, q);
        }

        #[test]
        fn radical_products_match_floats(a in 1i64..400, b in 1i64..400, c in 1i64..50, d in 1i64..50) {
            let x = RadicalRational::sqrt(rat(a, c)).unwrap();
            let y = RadicalRational::sqrt(rat(b, d)).unwrap();
            let expect = ((a as f64 / c as f64) * (b as f64 / d as f64)).sqrt();
            prop_assert!((x.mul(&y).to_f64() - expect).abs() < 1e-12 * expect);
            // Canonical radicands have no square factor.
            let (root, _) = square_split(x.mul(&y).t());
            prop_assert!(root.is_one());
        }
    }
}
