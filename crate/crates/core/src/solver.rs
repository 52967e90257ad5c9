//! Symmetric positive definite systems `G c = b` and the distance `1 - b^T c`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::specfun::RhoSpec;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("system must have at least one unknown")]
    Empty,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix not symmetric at ({i}, {j}): difference {diff:e} exceeds entry tolerance")]
    Asymmetric { i: usize, j: usize, diff: f64 },
    #[error("matrix not positive definite: leading minor {minor} fails even after diagonal shift")]
    NotPositiveDefinite { minor: usize },
    #[error("condition estimate {cond:e} exceeds the refusal threshold {limit:e}")]
    IllConditioned { cond: f64, limit: f64 },
    #[error("non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("cross-check failed: {0}")]
    Crosscheck(String),
}

pub type Result<T> = std::result::Result<T, SolverError>;

/// Symmetric Gram matrix with right-hand side and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramSystem {
    pub g: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub family: String,
    pub entry_tolerances: Vec<Vec<f64>>,
}

impl GramSystem {
    /// Validates shape and symmetry (up to the entry tolerances), then symmetrizes.
    pub fn new(
        mut g: Vec<Vec<f64>>,
        b: Vec<f64>,
        family: &str,
        entry_tolerances: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = g.len();
        if n == 0 {
            return Err(SolverError::Empty);
        }
        if b.len() != n || g.iter().any(|r| r.len() != n) {
            return Err(SolverError::DimensionMismatch(format!("G is {n}x?, b has {}", b.len())));
        }
        if entry_tolerances.len() != n || entry_tolerances.iter().any(|r| r.len() != n) {
            return Err(SolverError::DimensionMismatch("tolerance matrix shape".into()));
        }
        for i in 0..n {
            if !b[i].is_finite() {
                return Err(SolverError::NonFinite(i, n));
            }
            for j in 0..n {
                if !g[i][j].is_finite() {
                    return Err(SolverError::NonFinite(i, j));
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let diff = (g[i][j] - g[j][i]).abs();
                let scale = g[i][j].abs().max(g[j][i].abs());
                let allowed = entry_tolerances[i][j] + entry_tolerances[j][i] + 4.0 * f64::EPSILON * scale;
                if diff > allowed {
                    return Err(SolverError::Asymmetric { i, j, diff });
                }
                let avg = 0.5 * (g[i][j] + g[j][i]);
                g[i][j] = avg;
                g[j][i] = avg;
            }
        }
        Ok(GramSystem { g, b, family: family.to_string(), entry_tolerances })
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// Leading `n x n` subsystem.
    pub fn leading(&self, n: usize) -> GramSystem {
        GramSystem {
            g: self.g[..n].iter().map(|r| r[..n].to_vec()).collect(),
            b: self.b[..n].to_vec(),
            family: self.family.clone(),
            entry_tolerances: self.entry_tolerances[..n].iter().map(|r| r[..n].to_vec()).collect(),
        }
    }
}

/// Error-free product: `a * b = p + e`.
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Error-free sum: `a + b = s + e`.
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Dot product in roughly twice the working precision.
pub fn dot_compensated(x: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    let mut c = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let (p, ep) = two_prod(a, b);
        let (t, es) = two_sum(s, p);
        s = t;
        c += ep + es;
    }
    s + c
}

/// Kahan-Babuska summation.
pub fn sum_compensated(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = 0.0;
    let mut c = 0.0;
    for v in values {
        let t = s + v;
        if s.abs() >= v.abs() {
            c += (s - t) + v;
        } else {
            c += (v - t) + s;
        }
        s = t;
    }
    s + c
}

/// Lower Cholesky factor, or the 1-based index of the failing leading minor.
pub fn cholesky(g: &[Vec<f64>]) -> std::result::Result<Vec<Vec<f64>>, usize> {
    let n = g.len();
    let mut l = vec![vec![0.0; n]; n];
    for j in 0..n {
        let d = g[j][j] - dot_compensated(&l[j][..j], &l[j][..j]);
        if !(d > 0.0) || !d.is_finite() {
            return Err(j + 1);
        }
        let djj = d.sqrt();
        l[j][j] = djj;
        for i in (j + 1)..n {
            let s = g[i][j] - dot_compensated(&l[i][..j], &l[j][..j]);
            l[i][j] = s / djj;
        }
    }
    Ok(l)
}

fn cholesky_solve(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = l.len();
    let mut y = vec![0.0; n];
    for i in 0..n {
        y[i] = (b[i] - dot_compensated(&l[i][..i], &y[..i])) / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    x
}

fn mat_vec(g: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    g.iter().map(|row| dot_compensated(row, x)).collect()
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Hager-Higham estimate of `||G^{-1}||_1` from the Cholesky factor.
fn inverse_norm1_estimate(l: &[Vec<f64>]) -> f64 {
    let n = l.len();
    let mut x = vec![1.0 / n as f64; n];
    let mut est = 0.0;
    for _ in 0..5 {
        let y = cholesky_solve(l, &x);
        let new_est: f64 = y.iter().map(|v| v.abs()).sum();
        let xi: Vec<f64> = y.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
        let z = cholesky_solve(l, &xi); // G symmetric
        let (jmax, zmax) = z
            .iter()
            .enumerate()
            .map(|(j, v)| (j, v.abs()))
            .fold((0, f64::MIN), |acc, v| if v.1 > acc.1 { v } else { acc });
        let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
        if new_est <= est || zmax <= ztx {
            est = est.max(new_est);
            break;
        }
        est = new_est;
        x = vec![0.0; n];
        x[jmax] = 1.0;
    }
    // Higham's alternating-sign safeguard
    let alt: Vec<f64> = (0..n)
        .map(|i| {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            s * (1.0 + i as f64 / (n.max(2) - 1) as f64)
        })
        .collect();
    let y = cholesky_solve(l, &alt);
    let alt_est = 2.0 * y.iter().map(|v| v.abs()).sum::<f64>() / (3.0 * n as f64);
    est.max(alt_est)
}

fn norm1(g: &[Vec<f64>]) -> f64 {
    let n = g.len();
    (0..n).map(|j| (0..n).map(|i| g[i][j].abs()).sum::<f64>()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub c: Vec<f64>,
    pub condition_estimate: f64,
    /// Set when a diagonal shift was needed to factor the matrix.
    pub degraded: bool,
    pub relative_residual: f64,
}

/// Cholesky solve with one step of iterative refinement; on factorization
/// failure retries with the shift `1e-14 trace / n`.
pub fn solve_spd(sys: &GramSystem) -> Result<Solution> {
    let n = sys.dim();
    let mut degraded = false;
    let mut work = sys.g.clone();
    let l = match cholesky(&work) {
        Ok(l) => l,
        Err(_) => {
            let shift = 1e-14 * (0..n).map(|i| sys.g[i][i]).sum::<f64>() / n as f64;
            for (i, row) in work.iter_mut().enumerate() {
                row[i] += shift;
            }
            degraded = true;
            cholesky(&work).map_err(|minor| SolverError::NotPositiveDefinite { minor })?
        }
    };
    let mut c = cholesky_solve(&l, &sys.b);
    let r: Vec<f64> = mat_vec(&sys.g, &c).iter().zip(&sys.b).map(|(gc, b)| b - gc).collect();
    let dc = cholesky_solve(&l, &r);
    for (ci, d) in c.iter_mut().zip(&dc) {
        *ci += d;
    }
    let r2: Vec<f64> = mat_vec(&sys.g, &c).iter().zip(&sys.b).map(|(gc, b)| b - gc).collect();
    let bn = norm2(&sys.b);
    let relative_residual = if bn > 0.0 { norm2(&r2) / bn } else { norm2(&r2) };
    let condition_estimate = norm1(&sys.g) * inverse_norm1_estimate(&l);
    Ok(Solution { c, condition_estimate, degraded, relative_residual })
}

/// `(sum_k k c_k^2, M, sum_k k c_k^2 P(Z_k >= M))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailDiagnostic {
    pub sum_k_c2: f64,
    pub m: f64,
    pub weighted_tail: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub n: usize,
    pub family: String,
    pub coefficients: Vec<f64>,
    #[serde(rename = "D2")]
    pub d2: f64,
    #[serde(rename = "D2_crosscheck")]
    pub d2_crosscheck: Option<f64>,
    pub crosscheck_route: Option<String>,
    #[serde(rename = "cond")]
    pub condition_estimate: f64,
    pub degraded: bool,
    /// Set when a slightly negative `D2` was clamped to zero.
    pub clamped: bool,
    pub relative_residual: f64,
    pub tail_diag: Option<TailDiagnostic>,
}

/// `D2 = phi_norm2 - b^T c` for the solution of `G c = b`.
pub fn distance_from_system(sys: &GramSystem, phi_norm2: f64) -> Result<DistanceReport> {
    let sol = solve_spd(sys)?;
    let btc = dot_compensated(&sys.b, &sol.c);
    let mut d2 = phi_norm2 - btc;
    let clamp_tol = 1e-12 * phi_norm2.abs().max(1.0) * sol.condition_estimate.max(1.0).sqrt();
    let mut clamped = false;
    if d2 < 0.0 {
        if d2 >= -clamp_tol {
            d2 = 0.0;
            clamped = true;
        } else {
            return Err(SolverError::Crosscheck(format!("negative distance {d2:e} beyond clamp tolerance")));
        }
    }
    Ok(DistanceReport {
        n: sys.dim(),
        family: sys.family.clone(),
        coefficients: sol.c,
        d2,
        d2_crosscheck: None,
        crosscheck_route: None,
        condition_estimate: sol.condition_estimate,
        degraded: sol.degraded,
        clamped,
        relative_residual: sol.relative_residual,
        tail_diag: None,
    })
}

/// Discretized positive measure `sum_i w_i delta_{t_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteWeight {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Monic three-term recurrence `p_{j+1} = (t - alpha_j) p_j - beta_j p_{j-1}`,
/// with `beta_0 = m_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Recurrence {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// First index where `beta_j <= 0` stopped the procedure.
    pub truncated_at: Option<usize>,
}

impl Recurrence {
    /// Orthonormal polynomials `p_0..p_{len-1}` at `t`.
    pub fn orthonormal_values(&self, t: f64) -> Vec<f64> {
        let n = self.alpha.len();
        let mut out = Vec::with_capacity(n);
        if n == 0 {
            return out;
        }
        let mut prev = 0.0;
        let mut cur = 1.0 / self.beta[0].sqrt();
        out.push(cur);
        for j in 0..n.saturating_sub(1) {
            let next = ((t - self.alpha[j]) * cur - if j > 0 { self.beta[j].sqrt() * prev } else { 0.0 })
                / self.beta[j + 1].sqrt();
            prev = cur;
            cur = next;
            out.push(cur);
        }
        out
    }
}

/// Stieltjes procedure on a discretized weight, up to `n` polynomials.
pub fn stieltjes(weight: &DiscreteWeight, n: usize) -> Recurrence {
    let m = weight.nodes.len();
    let mut alpha = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    let mut p_prev = vec![0.0; m];
    let mut p_cur = vec![1.0; m];
    let mut norm_prev = 1.0;
    let mut truncated_at = None;
    for j in 0..n {
        let norm = sum_compensated((0..m).map(|i| weight.weights[i] * p_cur[i] * p_cur[i]));
        let tnorm =
            sum_compensated((0..m).map(|i| weight.weights[i] * weight.nodes[i] * p_cur[i] * p_cur[i]));
        let b = if j == 0 { norm } else { norm / norm_prev };
        if !(b > 0.0) || !b.is_finite() {
            truncated_at = Some(j);
            break;
        }
        let a = tnorm / norm;
        alpha.push(a);
        beta.push(b);
        let next: Vec<f64> = (0..m)
            .map(|i| (weight.nodes[i] - a) * p_cur[i] - if j > 0 { b * p_prev[i] } else { 0.0 })
            .collect();
        p_prev = std::mem::replace(&mut p_cur, next);
        norm_prev = norm;
    }
    Recurrence { alpha, beta, truncated_at }
}

/// Regularized lower incomplete gamma `P(k, x)` for integer `k >= 1`.
pub fn regularized_lower_gamma(k: usize, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < k as f64 + 1.0 {
        // e^{-x} x^k / k! sum_j x^j / ((k+1)...(k+j))
        let mut term = 1.0;
        let mut sum = 1.0;
        for j in 1..500 {
            term *= x / (k as f64 + j as f64);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        let ln_pref = -x + k as f64 * x.ln() - (1..=k).map(|j| (j as f64).ln()).sum::<f64>();
        (ln_pref.exp() * sum).min(1.0)
    } else {
        // 1 - e^{-x} sum_{j<k} x^j / j!
        let mut term = 1.0;
        let mut sum = 1.0;
        for j in 1..k {
            term *= x / j as f64;
            sum += term;
        }
        (1.0 - (-x).exp() * sum).max(0.0)
    }
}

/// `P(Z_k >= M)` for `Z_k = Y / X_k`, `X_k ~ Gamma(k, 1)`.
pub fn tail_probability(k: usize, spec: RhoSpec, m: f64) -> f64 {
    assert!(k >= 1 && m > 0.0);
    match spec {
        RhoSpec::DiracOne => regularized_lower_gamma(k, 1.0 / m),
        RhoSpec::Exponential { lambda } => (1.0 + lambda * m).powi(-(k as i32)),
    }
}

/// `sum_k k c_k^2 P(Z_k >= M)` with coefficients indexed from `k = 1`.
pub fn tail_diagnostic(c: &[f64], spec: RhoSpec, m: f64) -> TailDiagnostic {
    let sum_k_c2 = c.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v * v).sum();
    let weighted_tail =
        c.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v * v * tail_probability(i + 1, spec, m)).sum();
    TailDiagnostic { sum_k_c2, m, weighted_tail }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sys(g: Vec<Vec<f64>>, b: Vec<f64>) -> GramSystem {
        let n = b.len();
        GramSystem::new(g, b, "test", vec![vec![0.0; n]; n]).unwrap()
    }

    #[test]
    fn identity_system() {
        let s = sys(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![1.0, 0.0]);
        let sol = solve_spd(&s).unwrap();
        assert_eq!(sol.c, vec![1.0, 0.0]);
        assert!((sol.condition_estimate - 1.0).abs() < 1e-14);
    }

    #[test]
    fn hilbert_two() {
        let s = sys(vec![vec![1.0, 0.5], vec![0.5, 1.0 / 3.0]], vec![1.0, 0.0]);
        let sol = solve_spd(&s).unwrap();
        assert!((sol.c[0] - 4.0).abs() < 1e-13 && (sol.c[1] + 6.0).abs() < 1e-13);
        // ||H||_1 ||H^{-1}||_1 = 1.5 * 18
        assert!((sol.condition_estimate - 27.0).abs() < 1e-10);
    }

    #[test]
    fn scalar_distance() {
        let s = sys(vec![vec![2.0]], vec![0.5]);
        let d = distance_from_system(&s, 1.0).unwrap();
        assert!((d.d2 - (1.0 - 0.25 / 2.0)).abs() < 1e-15);
        let z = sys(vec![vec![2.0]], vec![0.0]);
        assert_eq!(distance_from_system(&z, 0.7).unwrap().d2, 0.7);
    }

    #[test]
    fn asymmetry_rejected_and_symmetrized() {
        let g = vec![vec![1.0, 0.5], vec![0.6, 1.0]];
        assert!(matches!(
            GramSystem::new(g.clone(), vec![1.0, 1.0], "t", vec![vec![0.0; 2]; 2]),
            Err(SolverError::Asymmetric { i: 0, j: 1, .. })
        ));
        let s = GramSystem::new(g, vec![1.0, 1.0], "t", vec![vec![0.1; 2]; 2]).unwrap();
        assert_eq!(s.g[0][1], s.g[1][0]);
    }

    #[test]
    fn indefinite_reports_minor() {
        let s = sys(vec![vec![1.0, 2.0], vec![2.0, 1.0]], vec![1.0, 0.0]);
        assert_eq!(solve_spd(&s).unwrap_err(), SolverError::NotPositiveDefinite { minor: 2 });
    }

    #[test]
    fn semidefinite_is_shifted() {
        let s = sys(vec![vec![1.0, 1.0], vec![1.0, 1.0]], vec![1.0, 1.0]);
        let sol = solve_spd(&s).unwrap();
        assert!(sol.degraded);
    }

    #[test]
    fn hermite_recurrence() {
        let rule = crate::quad::CompositeRule::new(-16.0, 16.0, 128);
        let weights: Vec<f64> = rule
            .nodes
            .iter()
            .zip(rule.kronrod_weights())
            .map(|(t, w)| w * (-t * t / 2.0).exp())
            .collect();
        let dw = DiscreteWeight { nodes: rule.nodes.clone(), weights };
        let rec = stieltjes(&dw, 10);
        assert!((rec.beta[0] - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
        for j in 0..10 {
            assert!(rec.alpha[j].abs() < 1e-10);
            if j > 0 {
                assert!((rec.beta[j] - j as f64).abs() < 1e-9, "beta_{j} = {}", rec.beta[j]);
            }
        }
        let p = rec.orthonormal_values(0.3);
        assert!((p[0] - 1.0 / rec.beta[0].sqrt()).abs() < 1e-15);
    }

    #[test]
    fn incomplete_gamma_branches() {
        for k in 1..8 {
            for &x in &[0.01, 0.5, 2.0, 7.5, 12.0] {
                let mut term = 1.0;
                let mut s = 1.0;
                for j in 1..k {
                    term *= x / j as f64;
                    s += term;
                }
                let direct = 1.0 - (-x).exp() * s;
                assert!((regularized_lower_gamma(k, x) - direct).abs() < 1e-13, "k={k} x={x}");
            }
        }
        assert!((regularized_lower_gamma(1, 1e-8) + (-1e-8f64).exp_m1()).abs() < 1e-22);
    }

    #[test]
    fn tail_diagnostic_basics() {
        let z = tail_diagnostic(&[0.0, 0.0], RhoSpec::DiracOne, 3.0);
        assert_eq!(z.weighted_tail, 0.0);
        let c = [1.0, -2.0, 0.5];
        let mut last = f64::INFINITY;
        for &m in &[0.5, 1.0, 4.0, 100.0] {
            let t = tail_diagnostic(&c, RhoSpec::DiracOne, m).weighted_tail;
            assert!(t < last);
            last = t;
        }
        let e = tail_probability(2, RhoSpec::Exponential { lambda: 1.0 }, 1.0);
        assert!((e - 0.25).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn bordering_never_increases_distance(seed in proptest::collection::vec(-1.0f64..1.0, 8 * 12 + 8)) {
            // G = A A^T + 0.1 I from random rows, b from random entries
            let n = 8;
            let rows: Vec<Vec<f64>> = (0..n).map(|i| seed[i * 12..(i + 1) * 12].to_vec()).collect();
            let mut g = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in 0..n {
                    g[i][j] = dot_compensated(&rows[i], &rows[j]) + if i == j { 0.1 } else { 0.0 };
                }
            }
            let b: Vec<f64> = seed[96..104].iter().map(|v| 0.2 * v).collect();
            let full = sys(g, b);
            // phi_norm2 large enough that the distance stays positive
            let phi = 100.0;
            let mut last = phi;
            for k in 1..=n {
                let d = distance_from_system(&full.leading(k), phi).unwrap();
                prop_assert!(d.d2 <= last + 1e-12);
                prop_assert!(d.relative_residual <= 1e-10);
                last = d.d2;
            }
        }
    }
}
