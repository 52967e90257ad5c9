//! Classical dilation basis `e_k(t) = {1/(k t)}`.
//!
//! Everything reduces to two one-dimensional objects:
//! `<chi, e_theta> = int_0^1 {theta/t} dt`, which has a closed form, and
//! `int_0^inf {a/t}{b/t} dt = b I(a/b)` with
//! `I(c) = int_0^inf {c v}{v} v^{-2} dv` for `c >= 1`.
//!
//! `I(c)` is assembled from exact pieces on `(0, 1)`, exact sub-panels on the
//! first unit intervals, a Bernoulli-polynomial expansion on the remaining unit
//! intervals up to `V`, and a tail beyond `V` that keeps the slowly drifting
//! resonances `c ~ p/q` with `q <= Q`.

use serde::{Deserialize, Serialize};

use crate::quad;
use crate::solver::{self, DistanceReport, GramSystem, SolverError};
use crate::specfun::{frac, harmonic_minus_log, EULER_GAMMA};

/// Truncation parameters for [`frac_pair_integral`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FracPairOptions {
    /// Unit intervals summed explicitly before the asymptotic tail.
    pub tail_start: usize,
    /// Largest denominator `q` whose resonance `c ~ p/q` is kept in the tail.
    pub max_resonance: usize,
}

impl Default for FracPairOptions {
    fn default() -> Self {
        FracPairOptions { tail_start: 16_384, max_resonance: 128 }
    }
}

impl FracPairOptions {
    /// Cheaper settings for bulk use (absolute error around `1e-8 / c`).
    pub fn fast() -> Self {
        FracPairOptions { tail_start: 2_048, max_resonance: 64 }
    }

    /// Rough bound on the neglected tail pieces for ratio `c`.
    pub fn error_bound(&self, c: f64) -> f64 {
        let v = self.tail_start as f64;
        let q = self.max_resonance as f64;
        (1.0 / (8.0 * v * v) + 1.0 / (12.0 * q * q * v)) / c
    }
}

// Periodic Bernoulli polynomials divided by factorials, B_j({x}) / j!, j = 2..=6.
#[inline]
fn bernoulli_scaled(x: f64) -> [f64; 5] {
    let x2 = x * x;
    let x3 = x2 * x;
    let x4 = x3 * x;
    let b2 = x2 - x + 1.0 / 6.0;
    let b3 = x3 - 1.5 * x2 + 0.5 * x;
    let b4 = x4 - 2.0 * x3 + x2 - 1.0 / 30.0;
    let b5 = x4 * x - 2.5 * x4 + 5.0 / 3.0 * x3 - x / 6.0;
    let b6 = x3 * x3 - 3.0 * x4 * x + 2.5 * x4 - 0.5 * x2 + 1.0 / 42.0;
    [b2 / 2.0, b3 / 6.0, b4 / 24.0, b5 / 120.0, b6 / 720.0]
}

/// `N - 1 - N ln N + ln N!`.
fn log_factorial_defect(n: u64) -> f64 {
    if n <= 30 {
        let nf = n as f64;
        let lf: f64 = (2..=n).map(|j| (j as f64).ln()).sum();
        nf - 1.0 - nf * nf.ln() + lf
    } else {
        let x = n as f64;
        let x2 = x * x;
        let x3 = x2 * x;
        -1.0 + 0.5 * (2.0 * std::f64::consts::PI * x).ln() + 1.0 / (12.0 * x) - 1.0 / (360.0 * x3)
            + 1.0 / (1260.0 * x3 * x2)
            - 1.0 / (1680.0 * x3 * x3 * x)
    }
}

/// `int_1^c {w}/w dw`.
fn frac_over_w(c: f64) -> f64 {
    let n = c.floor();
    let f = c - n;
    log_factorial_defect(n as u64) + f - n * (f / n).ln_1p()
}

/// `int_m^{m+1} {c v} (v - m) v^{-2} dv` by exact sub-panels between jumps of `{c v}`.
fn panel_exact(c: f64, m: f64) -> f64 {
    let mut total = 0.0;
    let mut alpha = m;
    let end = m + 1.0;
    while alpha < end {
        let p = (c * alpha).floor();
        // guard against alpha sitting a rounding error below a jump
        let p = if (p + 1.0) / c <= alpha { p + 1.0 } else { p };
        let beta = ((p + 1.0) / c).min(end);
        if beta <= alpha {
            break;
        }
        let w = beta - alpha;
        total += c * w - (c * m + p) * (w / alpha).ln_1p() + p * m * w / (alpha * beta);
        alpha = beta;
    }
    total
}

/// `int_y^inf B_j({x}) x^{-2} dx / j!` for `j = 1, 2` and `y >= 64`.
fn bernoulli_tail_asymptotic(j: usize, y: f64) -> f64 {
    let b = bernoulli_scaled(frac(y));
    // b[i] holds B_{i+2}/(i+2)!; the series uses B_{j+1+i}/(j+1+i)! (i+1)! y^{-i-2}
    let mut s = 0.0;
    let mut fact = 1.0;
    let mut ypow = y * y;
    for i in 0..4usize {
        let idx = j + 1 + i;
        if idx - 2 >= b.len() {
            break;
        }
        fact *= (i + 1) as f64;
        s -= b[idx - 2] * fact / ypow;
        ypow *= y;
    }
    s
}

/// `int_y^inf B_2({x}) x^{-2} dx` for any `y > 0`.
fn bernoulli2_tail(y: f64) -> f64 {
    const SWITCH: f64 = 64.0;
    if y >= SWITCH {
        return 2.0 * bernoulli_tail_asymptotic(2, y);
    }
    // exact pieces on [y, 64], then the asymptotic series
    let mut total = 2.0 * bernoulli_tail_asymptotic(2, SWITCH);
    let mut a = y;
    while a < SWITCH {
        let n = a.floor();
        let b = (n + 1.0).min(SWITCH);
        let w = b - a;
        // ((x-n)^2 - (x-n) + 1/6) / x^2
        total += w - (2.0 * n + 1.0) * (w / a).ln_1p() + (n * n + n + 1.0 / 6.0) * w / (a * b);
        a = b;
    }
    total
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// `I(c) = int_0^inf {c v}{v} v^{-2} dv`; uses `I(c) = c I(1/c)` for `c < 1`.
pub fn frac_pair_integral(c: f64, opts: &FracPairOptions) -> f64 {
    assert!(c > 0.0 && c.is_finite(), "ratio must be positive and finite");
    if c < 1.0 {
        return c * frac_pair_integral(1.0 / c, opts);
    }
    let v_end = opts.tail_start.max(64);
    // (0, 1/c): integrand is c; (1/c, 1): {cv}/v.
    let mut total = 1.0 + frac_over_w(c);

    // Unit panels [m, m+1], m < V, with {v} = v - m.
    let exact_until = ((100.0 / c).ceil() as usize).min(v_end);
    let mut body = 0.0;
    for m in 1..exact_until {
        body += panel_exact(c, m as f64);
    }
    let start = exact_until.max(1);
    if start < v_end {
        let inv_c = 1.0 / c;
        let mut b_left = bernoulli_scaled(frac(c * start as f64));
        for m in start..v_end {
            let mf = m as f64;
            let m1 = mf + 1.0;
            let b_right = bernoulli_scaled(frac(c * m1));
            // 1/2 int h + sum_k (-1)^{k-1} c^{-k} [B_{k+1}/(k+1)! h^{(k-1)}]_m^{m+1},
            // h(v) = (v - m)/v^2, h^{(j)}(v) = (-1)^j j! v^{-j-2} (v - m (j+1)).
            let mut acc = 0.5 * ((1.0 / mf).ln_1p() - 1.0 / m1);
            let mut ck = inv_c;
            let mut jfact = 1.0;
            let inv_m = 1.0 / mf;
            let inv_m1 = 1.0 / m1;
            let mut pm = inv_m; // m^{-j-1}
            let mut pm1 = inv_m1 * inv_m1; // (m+1)^{-j-2}
            for j in 0..5usize {
                if j > 0 {
                    jfact *= j as f64;
                }
                let sgn_j = if j % 2 == 0 { 1.0 } else { -1.0 };
                let h_left = -sgn_j * jfact * j as f64 * pm;
                let h_right = sgn_j * jfact * pm1 * (1.0 - mf * j as f64);
                let term = ck * (b_right[j] * h_right - b_left[j] * h_left);
                acc += if j % 2 == 0 { term } else { -term };
                ck *= inv_c;
                pm *= inv_m;
                pm1 *= inv_m1;
                if ck * jfact * pm1 * (mf * (j + 2) as f64) < 1e-20 {
                    break;
                }
            }
            body += acc;
            b_left = b_right;
        }
    }
    total += body;
    total + frac_pair_tail(c, v_end as f64, opts.max_resonance)
}

/// `int_V^inf {c v}{v} v^{-2} dv` from the Fourier structure of the product.
fn frac_pair_tail(c: f64, v: f64, max_q: usize) -> f64 {
    let mut tail = 0.25 / v;
    tail += 0.5 * c * bernoulli_tail_asymptotic(1, c * v);
    tail += 0.5 * bernoulli_tail_asymptotic(1, v);
    for q in 1..=max_q as u64 {
        let qc = q as f64 * c;
        let p = qc.round();
        if p < 1.0 || gcd(p as u64, q) != 1 {
            continue;
        }
        let omega = (qc - p).abs();
        let weight = 1.0 / (2.0 * p * q as f64);
        let part = if omega * v < 1e-300 { 1.0 / (6.0 * v) } else { omega * bernoulli2_tail(omega * v) };
        tail += weight * part;
    }
    tail
}

/// `int_0^inf {a/t}{b/t} dt`.
pub fn dilation_inner(a: f64, b: f64, opts: &FracPairOptions) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    lo * frac_pair_integral(hi / lo, opts)
}

/// `<chi, e_theta> = int_0^1 {theta/t} dt`.
pub fn indicator_inner(theta: f64) -> f64 {
    assert!(theta > 0.0);
    if theta <= 1.0 {
        theta * (1.0 - EULER_GAMMA - theta.ln())
    } else {
        let m = theta.ceil();
        // int_theta^M (v - (M-1)) v^{-2} dv + int_M^inf {v} v^{-2} dv
        let partial = (m / theta).ln() - (m - 1.0) * (m - theta) / (m * theta);
        theta * (partial + harmonic_minus_log(m as u64) - EULER_GAMMA)
    }
}

/// `G_{k,l} = int_0^inf {1/(k t)}{1/(l t)} dt`.
pub fn gram_entry_classical(k: usize, l: usize) -> f64 {
    assert!(k >= 1 && l >= 1, "indices start at 1");
    let (lo, hi) = if k <= l { (k, l) } else { (l, k) };
    // rational ratio hi/lo: the tail has only resonances with q | lo
    frac_pair_integral(hi as f64 / lo as f64, &FracPairOptions::default()) / hi as f64
}

/// `b_k = int_0^1 {1/(k t)} dt = (1 - gamma + ln k)/k`.
pub fn rhs_entry_classical(k: usize) -> f64 {
    assert!(k >= 1);
    indicator_inner(1.0 / k as f64)
}

/// Pairs `(k, k+1)` with `b_{k+1} > b_k` among `k < k_max`.
pub fn rhs_monotonicity_violations(k_max: usize) -> Vec<(usize, usize)> {
    (1..k_max)
        .filter(|&k| rhs_entry_classical(k + 1) > rhs_entry_classical(k))
        .map(|k| (k, k + 1))
        .collect()
}

/// Classical basis with `n` dilations `theta_k = 1/k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalBasis {
    pub n: usize,
}

impl ClassicalBasis {
    pub fn new(n: usize) -> Result<Self, SolverError> {
        if n == 0 {
            return Err(SolverError::Empty);
        }
        Ok(ClassicalBasis { n })
    }

    pub fn gram_system(&self) -> GramSystem {
        let n = self.n;
        let mut g = vec![vec![0.0; n]; n];
        for k in 0..n {
            for l in k..n {
                let v = gram_entry_classical(k + 1, l + 1);
                g[k][l] = v;
                g[l][k] = v;
            }
        }
        let b = (1..=n).map(rhs_entry_classical).collect();
        let tol = vec![vec![1e-12; n]; n];
        GramSystem::new(g, b, "classical", tol).expect("classical Gram matrix is symmetric")
    }
}

fn lcm_upto(n: usize) -> u64 {
    (1..=n as u64).fold(1u64, |acc, k| acc / gcd(acc, k) * k)
}

/// `int_0^inf (chi(t) - sum_k c_k rho(1/(k t)))^2 dt` evaluated in `v = 1/t`.
///
/// On every unit panel `[m, m+1]` the sum `S(v) = sum_k c_k {v/k}` is linear, so a
/// fixed Kronrod rule per panel is exact up to the smooth `v^{-2}` factor. Panels are
/// summed up to a multiple `M` of `L = lcm(1..n)`; past `M` the integrand is
/// `P(v) v^{-2}` with `P` of period `L`, and the tail uses the periodic means.
pub fn residual_quadrature(coeffs: &[f64], tol: f64) -> quad::Result<quad::QuadResult<f64>> {
    let n = coeffs.len();
    let period = lcm_upto(n) as usize;
    let slope: f64 = coeffs.iter().enumerate().map(|(k, c)| c / (k + 1) as f64).sum();
    let s_at = |m: usize| -> f64 {
        coeffs.iter().enumerate().map(|(k, c)| c * ((m % (k + 1)) as f64 / (k + 1) as f64)).sum()
    };
    // v in (0, 1): chi(1/v) = 0 and {v/k} = v/k, integrand (slope v)^2 / v^2.
    let head = slope * slope;

    // periodic profile on [0, L): P(m + x) = (1 - S(m) - slope x)^2
    let mut mean = 0.0;
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    let mut amp: f64 = 0.0;
    let lf = period as f64;
    for m in 0..period {
        let a = 1.0 - s_at(m);
        let prof = |x: f64| (a - slope * x) * (a - slope * x);
        mean += quad::gk15(&prof, 0.0, 1.0).0;
        amp = amp.max(a.abs()).max((a - slope).abs());
    }
    mean /= lf;
    for m in 0..period {
        let a = 1.0 - s_at(m);
        let mf = m as f64;
        let w1 = |x: f64| (lf - mf - x) * ((a - slope * x).powi(2) - mean);
        let w2 = |x: f64| (lf - mf - x).powi(2) * ((a - slope * x).powi(2) - mean);
        m1 += quad::gk15(&w1, 0.0, 1.0).0;
        m2 += quad::gk15(&w2, 0.0, 1.0).0;
    }
    let phi1 = m1 / lf;
    let phi2 = m2 / (2.0 * lf) - lf * phi1 / 2.0;
    let amp = amp * amp + mean;

    // neglected term ~ amp L^3 g''(M) / 24 with g = v^{-2}
    let mut periods = 4usize;
    while amp * lf.powi(3) / 4.0 / ((periods * period) as f64).powi(4) > tol / 4.0 && periods < 1 << 24 {
        periods *= 2;
    }
    let big_m = periods * period;
    let mut body = 0.0;
    let mut comp = 0.0;
    let mut err = 0.0;
    for m in 1..big_m {
        let a = 1.0 - s_at(m % period);
        let mf = m as f64;
        let f = |x: f64| {
            let r = a - slope * x;
            r * r / ((mf + x) * (mf + x))
        };
        let (v, e) = quad::gk15(&f, 0.0, 1.0);
        err += e;
        let y = v - comp;
        let t = body + y;
        comp = (t - body) - y;
        body = t;
    }
    let u = big_m as f64;
    let tail = mean / u + phi1 / (u * u) + phi2 * 2.0 / (u * u * u);
    Ok(quad::QuadResult {
        value: head + body + tail,
        error_estimate: err,
        evaluations: 15 * (big_m + 2 * period),
        truncation_bound: amp * lf.powi(3) / 4.0 / u.powi(4),
    })
}

/// Best approximation of the indicator by the first `n` classical dilations.
pub fn distance_classical(n: usize) -> Result<DistanceReport, SolverError> {
    let basis = ClassicalBasis::new(n)?;
    let sys = basis.gram_system();
    let mut report = solver::distance_from_system(&sys, 1.0)?;
    let check = residual_quadrature(&report.coefficients, 1e-10)
        .map_err(|e| SolverError::Crosscheck(e.to_string()))?;
    report.d2_crosscheck = Some(check.value);
    report.crosscheck_route = Some("time-domain residual quadrature".into());
    Ok(report)
}
