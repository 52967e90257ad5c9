//! Exact rational polynomials, the Euler-operator recursion on seed functions
//! `Q(t) e^{-t^2}`, Bernstein polynomials and the `a_{l,k}` triangle.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::specfun::{c64, gamma_complex, ComplexValue};

#[derive(Debug, Error)]
pub enum AlgebraError {
    #[error("cannot parse rational coefficient {0:?}")]
    Parse(String),
    #[error("invalid seed json: {0}")]
    Json(String),
    #[error("normalization must be finite and nonzero, got {0}")]
    Normalization(f64),
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Parse `"3"`, `"-7/2"` or a finite decimal such as `"0.25"`.
pub fn parse_rational(s: &str) -> Result<BigRational, AlgebraError> {
    let t = s.trim();
    if let Ok(r) = BigRational::from_str(t) {
        return Ok(r);
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (ip, fp) = body.split_once('.').ok_or_else(|| AlgebraError::Parse(s.into()))?;
    if ip.is_empty() && fp.is_empty() || !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return Err(AlgebraError::Parse(s.into()));
    }
    let digits: BigInt = format!("{ip}{fp}").parse().map_err(|_| AlgebraError::Parse(s.into()))?;
    let den = num_traits::pow(BigInt::from(10), fp.len());
    let r = BigRational::new(digits, den);
    Ok(if neg { -r } else { r })
}

fn rat_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // ratio of huge integers: scale through logs of the magnitudes
        let n = r.numer().abs();
        let d = r.denom();
        let shift = n.bits().max(d.bits()) as i64 - 900;
        let n2 = if shift > 0 { &n >> shift as usize } else { n.clone() };
        let d2 = if shift > 0 { d >> shift as usize } else { d.clone() };
        let v = n2.to_f64().unwrap_or(f64::INFINITY) / d2.to_f64().unwrap_or(f64::INFINITY);
        if r.is_negative() {
            -v
        } else {
            v
        }
    })
}

/// Univariate polynomial with exact rational coefficients, `coeffs[j]` multiplies `t^j`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RationalPoly {
    coeffs: Vec<BigRational>,
}

impl RationalPoly {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        RationalPoly { coeffs }
    }

    pub fn from_ints(c: &[i64]) -> Self {
        Self::new(c.iter().map(|&x| BigRational::from_integer(x.into())).collect())
    }

    pub fn zero() -> Self {
        RationalPoly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        Self::new(vec![c])
    }

    /// `t^n`.
    pub fn monomial(n: usize) -> Self {
        let mut c = vec![BigRational::zero(); n + 1];
        c[n] = BigRational::one();
        RationalPoly { coeffs: c }
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn coeff(&self, j: usize) -> BigRational {
        self.coeffs.get(j).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, c)| c * BigRational::from_integer(BigInt::from(j)))
                .collect(),
        )
    }

    /// Multiply by `t^n`.
    pub fn shift(&self, n: usize) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut c = vec![BigRational::zero(); n];
        c.extend(self.coeffs.iter().cloned());
        RationalPoly { coeffs: c }
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * r).collect())
    }

    pub fn eval_exact(&self, t: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * t + c;
        }
        acc
    }

    pub fn to_f64_coeffs(&self) -> Vec<f64> {
        self.coeffs.iter().map(rat_to_f64).collect()
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + rat_to_f64(c))
    }

    pub fn eval_complex(&self, s: ComplexValue) -> ComplexValue {
        self.coeffs.iter().rev().fold(c64(0.0, 0.0), |acc, c| acc * s + rat_to_f64(c))
    }

    /// `p(a t + b)` exactly.
    pub fn compose_affine(&self, a: &BigRational, b: &BigRational) -> Self {
        let lin = RationalPoly::new(vec![b.clone(), a.clone()]);
        let mut acc = RationalPoly::zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * &lin) + &RationalPoly::constant(c.clone());
        }
        acc
    }

    /// `(Q' - 2 t Q)`: the polynomial factor of `d/dt [Q(t) e^{-t^2}]`.
    pub fn gaussian_derivative(&self) -> Self {
        &self.derivative() - &self.shift(1).scale(&rat(2, 1))
    }
}

impl fmt::Display for RationalPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (j, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let a = c.abs();
            match (j, a.is_one()) {
                (0, _) => write!(f, "{a}")?,
                (1, true) => write!(f, "t")?,
                (1, false) => write!(f, "{a} t")?,
                (_, true) => write!(f, "t^{j}")?,
                (_, false) => write!(f, "{a} t^{j}")?,
            }
        }
        Ok(())
    }
}

impl Add for &RationalPoly {
    type Output = RationalPoly;
    fn add(self, o: &RationalPoly) -> RationalPoly {
        let n = self.coeffs.len().max(o.coeffs.len());
        RationalPoly::new((0..n).map(|j| self.coeff(j) + o.coeff(j)).collect())
    }
}

impl Sub for &RationalPoly {
    type Output = RationalPoly;
    fn sub(self, o: &RationalPoly) -> RationalPoly {
        let n = self.coeffs.len().max(o.coeffs.len());
        RationalPoly::new((0..n).map(|j| self.coeff(j) - o.coeff(j)).collect())
    }
}

impl Neg for &RationalPoly {
    type Output = RationalPoly;
    fn neg(self) -> RationalPoly {
        RationalPoly::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl Mul for &RationalPoly {
    type Output = RationalPoly;
    fn mul(self, o: &RationalPoly) -> RationalPoly {
        if self.is_zero() || o.is_zero() {
            return RationalPoly::zero();
        }
        let mut c = vec![BigRational::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        RationalPoly::new(c)
    }
}

/// `normalization * Q(t) e^{-t^2}` on `t > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedFunction {
    pub poly: RationalPoly,
    pub normalization: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SeedJson {
    coeffs: Vec<String>,
    normalization: f64,
}

impl SeedFunction {
    pub fn new(poly: RationalPoly, normalization: f64) -> Self {
        SeedFunction { poly, normalization }
    }

    /// `pi^{-1/4} (8t^6 - 28t^4 + 12t^2) e^{-t^2}`, the seed whose Mellin transform
    /// carries the factor `(s-1) s^2 Gamma(s/2)`.
    pub fn xi_seed() -> Self {
        SeedFunction {
            poly: RationalPoly::from_ints(&[0, 0, 12, 0, -28, 0, 8]),
            normalization: std::f64::consts::PI.powf(-0.25),
        }
    }

    /// Plain Gaussian `e^{-t^2}`.
    pub fn gaussian() -> Self {
        SeedFunction { poly: RationalPoly::one(), normalization: 1.0 }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.normalization * self.poly.eval(t) * (-t * t).exp()
    }

    /// Polynomial factors `(E(s), O(s))` with
    /// `int_0^inf Q(t) e^{-t^2} t^{s-1} dt = E(s) Gamma(s/2) + O(s) Gamma((s+1)/2)`.
    ///
    /// From `Gamma(x + m) = Gamma(x) (x)_m` applied to `Gamma((s+j)/2)/2`.
    pub fn mellin_polys(&self) -> (RationalPoly, RationalPoly) {
        let half = rat(1, 2);
        let mut out = [RationalPoly::zero(), RationalPoly::zero()];
        for (parity, acc) in out.iter_mut().enumerate() {
            // x = (s + parity)/2 as a polynomial in s
            let x = RationalPoly::new(vec![rat(parity as i64, 2), half.clone()]);
            let mut poch = RationalPoly::one();
            let mut m = 0usize;
            while 2 * m + parity < self.poly.coeffs.len() {
                let q = self.poly.coeff(2 * m + parity);
                if !q.is_zero() {
                    *acc = &*acc + &poch.scale(&(q * &half));
                }
                let next = &x + &RationalPoly::constant(BigRational::from_integer(m.into()));
                poch = &poch * &next;
                m += 1;
            }
        }
        let [e, o] = out;
        (e, o)
    }

    pub fn to_json(&self) -> String {
        let j = SeedJson {
            coeffs: self.poly.coeffs().iter().map(|c| c.to_string()).collect(),
            normalization: self.normalization,
        };
        serde_json::to_string(&j).expect("seed json")
    }

    pub fn from_json(s: &str) -> Result<Self, AlgebraError> {
        let j: SeedJson = serde_json::from_str(s).map_err(|e| AlgebraError::Json(e.to_string()))?;
        if !j.normalization.is_finite() || j.normalization == 0.0 {
            return Err(AlgebraError::Normalization(j.normalization));
        }
        let coeffs = j.coeffs.iter().map(|c| parse_rational(c)).collect::<Result<Vec<_>, _>>()?;
        Ok(SeedFunction { poly: RationalPoly::new(coeffs), normalization: j.normalization })
    }
}

/// One Euler-operator step `g -> -t g' - r g`, i.e. `Q -> -t Q' + 2t^2 Q - r Q`.
pub fn seed_recursion_step(g: &SeedFunction, r: &BigRational) -> SeedFunction {
    let q = &g.poly;
    let a = -&q.derivative().shift(1);
    let b = q.shift(2).scale(&rat(2, 1));
    let c = q.scale(r);
    SeedFunction { poly: &(&a + &b) - &c, normalization: g.normalization }
}

/// `g_0, g_1, ..., g_k` for the shift sequence `r_0, ..., r_{k-1}`.
pub fn seed_sequence(g0: &SeedFunction, r: &[BigRational]) -> Vec<SeedFunction> {
    let mut out = vec![g0.clone()];
    for rk in r {
        let next = seed_recursion_step(out.last().unwrap(), rk);
        out.push(next);
    }
    out
}

/// Triangle `a[k][l]`, `0 <= l <= k <= k_max`, with `g_k = sum_l a_{l,k} t^l g_0^{(l)}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoefficientTriangle {
    pub a: Vec<Vec<BigRational>>,
}

impl CoefficientTriangle {
    pub fn get(&self, l: usize, k: usize) -> BigRational {
        self.a.get(k).and_then(|row| row.get(l)).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn k_max(&self) -> usize {
        self.a.len() - 1
    }

    /// `Q_k` from `Q_0` through `sum_l a_{l,k} t^l D^l`, where `D^l` acts on `Q_0 e^{-t^2}`.
    pub fn expand(&self, q0: &RationalPoly, k: usize) -> RationalPoly {
        let mut deriv = q0.clone();
        let mut acc = RationalPoly::zero();
        for l in 0..=k {
            acc = &acc + &deriv.shift(l).scale(&self.get(l, k));
            deriv = deriv.gaussian_derivative();
        }
        acc
    }
}

/// Triangle for the shift sequence `r`; entries up to `k_max = r.len()`.
///
/// `a_{l,k+1} = -(l + r_k) a_{l,k} - a_{l-1,k}`.
pub fn coefficient_triangle_with(r: &[BigRational]) -> CoefficientTriangle {
    let mut a = vec![vec![BigRational::one()]];
    for (k, rk) in r.iter().enumerate() {
        let prev = &a[k];
        let row: Vec<BigRational> = (0..=k + 1)
            .map(|l| {
                let stay = prev.get(l).map(|x| -(BigRational::from_integer(l.into()) + rk) * x);
                let up = if l > 0 { prev.get(l - 1).map(|x| -x) } else { None };
                stay.unwrap_or_else(BigRational::zero) + up.unwrap_or_else(BigRational::zero)
            })
            .collect();
        a.push(row);
    }
    CoefficientTriangle { a }
}

/// Triangle with the constant shift `r_k = 1/2`.
pub fn coefficient_triangle(k_max: usize) -> CoefficientTriangle {
    coefficient_triangle_with(&vec![rat(1, 2); k_max])
}

pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// `C(n+m, n) u^n (1-u)^m`.
pub fn bernstein_eval(n: u32, m: u32, u: f64) -> f64 {
    binomial((n + m) as u64, n as u64) * u.powi(n as i32) * (1.0 - u).powi(m as i32)
}

/// `int_0^inf g(t) t^{s-1} dt` in closed form.
pub fn seed_mellin(g: &SeedFunction, s: ComplexValue) -> ComplexValue {
    let (e, o) = g.mellin_polys();
    let mut acc = c64(0.0, 0.0);
    if !e.is_zero() {
        acc += e.eval_complex(s) * gamma_complex(s / 2.0).expect("Gamma(s/2) at a pole");
    }
    if !o.is_zero() {
        acc += o.eval_complex(s) * gamma_complex((s + 1.0) / 2.0).expect("Gamma((s+1)/2) at a pole");
    }
    acc * g.normalization
}

/// `sum_j q_j Gamma((s+j)/2)/2`, term by term in floating point.
pub fn seed_mellin_termwise(g: &SeedFunction, s: ComplexValue) -> ComplexValue {
    let mut acc = c64(0.0, 0.0);
    for (j, q) in g.poly.coeffs().iter().enumerate() {
        if q.is_zero() {
            continue;
        }
        acc += gamma_complex((s + j as f64) / 2.0).expect("Gamma pole") * (rat_to_f64(q) / 2.0);
    }
    acc * g.normalization
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn recursion_examples() {
        let g = SeedFunction::gaussian();
        let g1 = seed_recursion_step(&g, &rat(1, 2));
        assert_eq!(g1.poly, RationalPoly::new(vec![rat(-1, 2), rat(0, 1), rat(2, 1)]));
        let g1 = seed_recursion_step(&g, &rat(0, 1));
        assert_eq!(g1.poly, RationalPoly::from_ints(&[0, 0, 2]));
        let x1 = seed_recursion_step(&SeedFunction::xi_seed(), &rat(1, 2));
        assert_eq!(x1.poly, RationalPoly::from_ints(&[0, 0, -30, 0, 150, 0, -108, 0, 16]));
        assert_eq!(x1.normalization, SeedFunction::xi_seed().normalization);
    }

    #[test]
    fn triangle_corners_and_reconstruction() {
        let tri = coefficient_triangle(10);
        assert_eq!(tri.get(0, 0), rat(1, 1));
        assert_eq!(tri.get(1, 1), rat(-1, 1));
        for k in 0..=10 {
            let sign = if k % 2 == 0 { 1 } else { -1 };
            assert_eq!(tri.get(k, k), rat(sign, 1));
        }
        let q0 = SeedFunction::xi_seed();
        let seq = seed_sequence(&q0, &vec![rat(1, 2); 10]);
        for (k, gk) in seq.iter().enumerate() {
            assert_eq!(tri.expand(&q0.poly, k), gk.poly, "k = {k}");
        }
    }

    #[test]
    fn triangle_with_varying_shifts() {
        let r = vec![rat(1, 3), rat(-2, 5), rat(7, 4), rat(0, 1)];
        let tri = coefficient_triangle_with(&r);
        let g0 = SeedFunction::gaussian();
        let seq = seed_sequence(&g0, &r);
        for k in 0..=4 {
            assert_eq!(tri.expand(&g0.poly, k), seq[k].poly);
        }
    }

    #[test]
    fn bernstein_values() {
        assert_eq!(bernstein_eval(0, 0, 0.7), 1.0);
        assert!((bernstein_eval(1, 1, 0.5) - 0.5).abs() < 1e-16);
        let s: f64 = (0..=5).map(|n| bernstein_eval(n, 5 - n, 0.3)).sum();
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mellin_examples() {
        let g = SeedFunction::gaussian();
        let v = seed_mellin(&g, c64(0.5, 0.0));
        let want = gamma_complex(c64(0.25, 0.0)).unwrap() / 2.0;
        assert!((v - want).norm() < 1e-14);
        // (s-1) s^2 Gamma(s/2) / 2 for the unnormalized Xi seed
        let x = SeedFunction { normalization: 1.0, ..SeedFunction::xi_seed() };
        let s = c64(0.5, 2.0);
        let want = (s - 1.0) * s * s * gamma_complex(s / 2.0).unwrap() / 2.0;
        for got in [seed_mellin(&x, s), seed_mellin_termwise(&x, s)] {
            assert!((got - want).norm() <= 1e-10 * want.norm(), "{got} vs {want}");
        }
    }

    #[test]
    fn mellin_factorization_through_recursion() {
        let r: Vec<BigRational> = vec![rat(1, 2); 6];
        let seq = seed_sequence(&SeedFunction::xi_seed(), &r);
        for t in [0.0, 0.7, 1.5, 3.0, 6.0, 10.0, 14.1, 20.0, 25.5, 30.0] {
            let s = c64(0.5, t);
            let base = seed_mellin(&seq[0], s);
            for (k, gk) in seq.iter().enumerate() {
                let want = base * (s - 0.5).powu(k as u32);
                let got = seed_mellin(gk, s);
                assert!((got - want).norm() <= 1e-9 * want.norm().max(1e-300), "k={k} t={t}");
            }
        }
    }

    #[test]
    fn xi_seed_decays() {
        let seq = seed_sequence(&SeedFunction::xi_seed(), &vec![rat(1, 2); 6]);
        for (k, g) in seq.iter().enumerate() {
            let v = g.eval(40.0).abs() * 40f64.powi(k as i32 + 2);
            assert!(v < 1e-300, "k = {k}: {v}");
        }
    }

    #[test]
    fn json_roundtrip() {
        let g = seed_recursion_step(&SeedFunction::xi_seed(), &rat(1, 3));
        let s = g.to_json();
        let back = SeedFunction::from_json(&s).unwrap();
        assert_eq!(back, g);
        let parsed = SeedFunction::from_json(r#"{"coeffs": ["8", "-7/2", "0.25"], "normalization": 1.0}"#).unwrap();
        assert_eq!(parsed.poly, RationalPoly::new(vec![rat(8, 1), rat(-7, 2), rat(1, 4)]));
        assert!(SeedFunction::from_json(r#"{"coeffs": ["x"], "normalization": 1.0}"#).is_err());
        assert!(SeedFunction::from_json(r#"{"coeffs": ["1"], "normalization": 0.0}"#).is_err());
        assert!(SeedFunction::from_json(r#"{"coeffs": ["1"], "normalization": 1.0, "x": 2}"#).is_err());
    }

    #[test]
    fn display_and_trim() {
        let p = RationalPoly::new(vec![rat(-1, 2), rat(0, 1), rat(2, 1), rat(0, 1)]);
        assert_eq!(p.degree(), Some(2));
        assert_eq!(p.to_string(), "2 t^2 - 1/2");
        assert_eq!(RationalPoly::zero().degree(), None);
    }

    proptest! {
        #[test]
        fn mellin_is_linear(a in -20i64..20, b in -20i64..20, c in -20i64..20, d in -20i64..20, t in -15.0f64..15.0) {
            let p1 = SeedFunction::new(RationalPoly::from_ints(&[a, 0, b]), 1.0);
            let p2 = SeedFunction::new(RationalPoly::from_ints(&[0, c, 0, d]), 1.0);
            let sum = SeedFunction::new(&p1.poly + &p2.poly, 1.0);
            let s = c64(0.5, t);
            let lhs = seed_mellin(&sum, s);
            let rhs = seed_mellin(&p1, s) + seed_mellin(&p2, s);
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
        }

        #[test]
        fn ring_identities(a in proptest::collection::vec(-9i64..9, 0..6), b in proptest::collection::vec(-9i64..9, 0..6), x in -5i64..5) {
            let p = RationalPoly::from_ints(&a);
            let q = RationalPoly::from_ints(&b);
            let xr = rat(x, 3);
            prop_assert_eq!((&p * &q).eval_exact(&xr), p.eval_exact(&xr) * q.eval_exact(&xr));
            prop_assert_eq!(&(&p + &q) - &q, p.clone());
            // product rule
            prop_assert_eq!((&p * &q).derivative(), &(&p.derivative() * &q) + &(&p * &q.derivative()));
        }
    }
}
