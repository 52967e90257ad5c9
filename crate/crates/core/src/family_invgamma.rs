//! Inverse-Gamma family `Z_k = Y / X_k`, `X_k ~ Gamma(k, 1)`:
//! basis functions `g_k(t) = E{Z_k / t}`, Gram entries through the Bernstein
//! formula `<g_{n+1}, g_{m+1}> = int_0^1 B_n^{n+m}(u) A(u) du`, and the Mellin-side
//! least squares under the weight `|phi(1/2 + it)|^2`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::binomial;
use crate::family_classical::{frac_pair_integral, FracPairOptions};
use crate::quad::{self, CompositeRule, DecayHint, GkPanel, Integrand, QuadError, QuadOptions, QuadResult};
use crate::solver::{self, DistanceReport, GramSystem, SolverError};
use crate::specfun::{critical, gamma_complex, ln_gamma_real, pochhammer_eval, rho_unchecked, zeta_strip, RhoSpec};

/// Tolerance attached to the `(1,1)` Gram entry, where `E Z_1 = inf`.
pub const DELICATE_ENTRY_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InvGammaError {
    #[error("index must be at least 1, got {0}")]
    Index(usize),
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("A(u) failed near the endpoint u = {u:e}: {source}")]
    EndpointDivergence { u: f64, source: QuadError },
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

pub type Result<T> = std::result::Result<T, InvGammaError>;

/// Accuracy knobs for the family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InvGammaOptions {
    /// Absolute tolerance for each Gram entry.
    pub gram_tol: f64,
    /// Absolute tolerance for each right-hand side entry.
    pub rhs_tol: f64,
    /// Panels per unit of `t` on the critical line for the Mellin route.
    pub mellin_panels_per_unit: usize,
    /// Threshold `M` for the tail diagnostic `sum k c_k^2 P(Z_k >= M)`.
    pub tail_m: f64,
}

impl Default for InvGammaOptions {
    fn default() -> Self {
        InvGammaOptions { gram_tol: 1e-11, rhs_tol: 1e-11, mellin_panels_per_unit: 8, tail_m: 100.0 }
    }
}

fn ln_factorial(k: usize) -> f64 {
    ln_gamma_real(k as f64 + 1.0).expect("factorial of a small integer")
}

/// `g_k(t) = E{Z_k / t}`.
///
/// DiracOne: `int_0^inf {v} h(v) dv` with `h` the density of `1/(X_k t)`.
/// Exponential: `E[rho(X_k t)]`, a smooth integral against the Gamma density.
pub fn gx_invgamma(k: usize, t: f64, spec: RhoSpec) -> Result<f64> {
    gx_invgamma_with(k, t, spec, 1e-13)
}

pub fn gx_invgamma_with(k: usize, t: f64, spec: RhoSpec, tol: f64) -> Result<f64> {
    if k == 0 {
        return Err(InvGammaError::Index(k));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(InvGammaError::Domain(format!("t must be positive and finite, got {t}")));
    }
    spec.validate().map_err(|e| InvGammaError::Domain(e.to_string()))?;
    let kf = k as f64;
    let lnf = ln_factorial(k - 1);
    match spec {
        RhoSpec::DiracOne => {
            let ln_t = t.ln();
            let h = move |v: f64| {
                if v <= 0.0 {
                    return 0.0;
                }
                (-(kf + 1.0) * v.ln() - 1.0 / (v * t) - lnf - kf * ln_t).exp()
            };
            let peak = 1.0 / ((kf + 1.0) * t);
            let bps: Vec<f64> = [0.25, 0.5, 1.0, 2.0, 4.0].iter().map(|f| f * peak).collect();
            let opts = QuadOptions::abs(tol).with_rel(1e-13);
            Ok(quad::integrate_frac_smooth(&h, &bps, 32, opts)?.value)
        }
        RhoSpec::Exponential { lambda } => {
            let f = move |x: f64| {
                if x <= 0.0 {
                    return 0.0;
                }
                rho_unchecked(spec, x * t) * ((kf - 1.0) * x.ln() - x - lnf).exp()
            };
            let scale = 1.0 / (lambda * t);
            let mut bps = vec![kf - 1.0, kf, kf + 1.0, 2.0 * kf + 4.0];
            if scale > 0.0 && scale.is_finite() {
                bps.push(scale);
            }
            bps.retain(|&b| b > 0.0);
            let mut bps = quad::merge_breakpoints(&[bps]);
            bps.dedup();
            let integrand = Integrand::new(f).with_breakpoints(bps)?.with_decay(DecayHint::Exponential(1.0));
            let opts = QuadOptions::abs(tol).with_rel(1e-13);
            Ok(quad::integrate_semiinf_with(&integrand, opts)?.value)
        }
    }
}

/// `A(u) = int_0^inf rho(u t) rho((1-u) t) dt`.
///
/// DiracOne: `A(u) = I((1-u)/u) / (1-u)` for `u <= 1/2` with `I` the fractional-pair
/// integral, mirrored for `u > 1/2`. Exponential: direct quadrature.
pub fn a_function(u: f64, spec: RhoSpec) -> Result<f64> {
    a_function_with(u, spec, 1e-13)
}

pub fn a_function_with(u: f64, spec: RhoSpec, tol: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(InvGammaError::Domain(format!("A(u) needs 0 < u < 1, got {u}")));
    }
    spec.validate().map_err(|e| InvGammaError::Domain(e.to_string()))?;
    let (lo, hi) = if u <= 0.5 { (u, 1.0 - u) } else { (1.0 - u, u) };
    match spec {
        RhoSpec::DiracOne => Ok(frac_pair_integral(hi / lo, &FracPairOptions::default()) / hi),
        RhoSpec::Exponential { lambda } => {
            // tau = lambda t; rho(x) = k(lambda x) with k(y) = 1/y - 1/(e^y - 1)
            let unit = RhoSpec::Exponential { lambda: 1.0 };
            let f = move |tau: f64| rho_unchecked(unit, lo * tau) * rho_unchecked(unit, hi * tau);
            let bps = quad::merge_breakpoints(&[vec![0.5 / hi, 1.0 / hi, 4.0 / hi, 0.5 / lo, 1.0 / lo, 4.0 / lo]]);
            let integrand = Integrand::new(f).with_breakpoints(bps)?.with_decay(DecayHint::Algebraic(2.0));
            let r = quad::integrate_semiinf_with(&integrand, QuadOptions::abs(tol * lambda).with_rel(1e-13))
                .map_err(|e| {
                    if lo < 1e-8 {
                        InvGammaError::EndpointDivergence { u, source: e }
                    } else {
                        InvGammaError::Quad(e)
                    }
                })?;
            Ok(r.value / lambda)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct CachedPanel {
    rule: GkPanel,
    values: [f64; 15],
}

/// `A(u)` tabulated on an adaptive panel grid of `(0, 1)`.
///
/// Only `(0, 1/2]` is stored since `A(u) = A(1-u)`. Panels are refined until the
/// Kronrod-Gauss difference of `int A` on each panel is below the local tolerance, so
/// any smooth weight can be integrated against the cached node values. The left end
/// is pre-split geometrically down to `2^-48`.
/// For DiracOne the grid only serves tabulation: `A` has a logarithmic cusp at every
/// rational `u`, and the Gram entries use [`gram_entry_invgamma`]'s interchanged form.
#[derive(Debug, Clone, PartialEq)]
pub struct AFunction {
    pub y_spec: RhoSpec,
    panels: Vec<CachedPanel>,
    pub error_estimate: f64,
}

impl AFunction {
    pub fn build(y_spec: RhoSpec, panel_tol: f64, max_panels: usize) -> Result<Self> {
        // A(u) = A(1-u): tabulate (0, 1/2] and fold weights
        let mut pts: Vec<f64> = (0..=8).map(|j| j as f64 / 16.0).collect();
        for j in 5..=48 {
            pts.push(0.5f64.powi(j));
        }
        let mut pts = quad::merge_breakpoints(&[pts]);
        pts.dedup();
        let mut stack: Vec<(f64, f64)> = pts.windows(2).map(|w| (w[0], w[1])).collect();
        stack.reverse();
        let mut panels = Vec::new();
        let mut err = 0.0;
        while let Some((a, b)) = stack.pop() {
            let rule = GkPanel::new(a, b);
            let mut values = [0.0; 15];
            for (v, &u) in values.iter_mut().zip(&rule.nodes) {
                *v = a_function(u, y_spec)?;
            }
            let k: f64 = values.iter().zip(&rule.kronrod).map(|(v, w)| v * w).sum();
            let g: f64 = values.iter().zip(&rule.gauss).map(|(v, w)| v * w).sum();
            let e = (k - g).abs();
            let splittable = b - a > 1e-12 * b && panels.len() + stack.len() < max_panels;
            if e > panel_tol && splittable {
                let mid = 0.5 * (a + b);
                stack.push((mid, b));
                stack.push((a, mid));
            } else {
                err += e;
                panels.push(CachedPanel { rule, values });
            }
        }
        Ok(AFunction { y_spec, panels, error_estimate: 2.0 * err })
    }

    /// Default grid for the Exponential family.
    pub fn for_spec(y_spec: RhoSpec) -> Result<Self> {
        Self::build(y_spec, 1e-13, 20_000)
    }

    pub fn panel_count(&self) -> usize {
        self.panels.len()
    }

    /// `(u, A(u))` for every cached node on `(0, 1/2)` and its mirror, sorted by `u`.
    pub fn samples(&self) -> Vec<(f64, f64)> {
        let half = self.panels.iter().flat_map(|p| p.rule.nodes.iter().copied().zip(p.values.iter().copied()));
        let mut out: Vec<(f64, f64)> = half.clone().chain(half.map(|(u, a)| (1.0 - u, a))).collect();
        out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        out
    }

    /// `int_0^1 w(u) A(u) du` on the cached grid, with the summed Kronrod-Gauss error.
    pub fn integrate(&self, w: &dyn Fn(f64) -> f64) -> (f64, f64) {
        let mut total = 0.0;
        let mut comp = 0.0;
        let mut err = 0.0;
        for p in &self.panels {
            let mut k = 0.0;
            let mut g = 0.0;
            for i in 0..15 {
                let u = p.rule.nodes[i];
                let fv = (w(u) + w(1.0 - u)) * p.values[i];
                k += fv * p.rule.kronrod[i];
                g += fv * p.rule.gauss[i];
            }
            err += (k - g).abs();
            let y = k - comp;
            let t = total + y;
            comp = (t - total) - y;
            total = t;
        }
        (total, err)
    }
}

/// `C(n+m, n) u^n (1-u)^m`.
fn bernstein(n: usize, m: usize) -> impl Fn(f64) -> f64 {
    let c = binomial((n + m) as u64, n as u64);
    move |u: f64| c * u.powi(n as i32) * (1.0 - u).powi(m as i32)
}

/// `<g_{n+1}, g_{m+1}> = int_0^1 B_n^{n+m}(u) A(u) du` (indices shifted as in the
/// Bernstein formula: `n = m = 0` is the `(1,1)` entry).
///
/// DiracOne: with `u = 1/(1+c)` and `A(u) = I(c)/(1-u)` the weight becomes
/// `W(c) = C(n+m,n) c^{m-1} (1+c)^{-(n+m+1)}`, and
/// `int W(c) I(c) dc = int_0^inf {v} v^{-2} Phi(v) dv`, `Phi(v) = int_0^inf W(c) {c v} dc`.
/// `Phi` is smooth in `v`, so both levels are fractional-part-times-smooth integrals.
pub fn gram_entry_invgamma(n: usize, m: usize, spec: RhoSpec) -> Result<QuadResult<f64>> {
    gram_entry_invgamma_with(n, m, spec, None, 1e-11)
}

pub fn gram_entry_invgamma_with(
    n: usize,
    m: usize,
    spec: RhoSpec,
    cache: Option<&AFunction>,
    tol: f64,
) -> Result<QuadResult<f64>> {
    spec.validate().map_err(|e| InvGammaError::Domain(e.to_string()))?;
    match spec {
        RhoSpec::DiracOne => gram_entry_dirac(n, m, tol),
        RhoSpec::Exponential { .. } => {
            let owned;
            let a = match cache {
                Some(c) if c.y_spec == spec => c,
                _ => {
                    owned = AFunction::for_spec(spec)?;
                    &owned
                }
            };
            let (value, err) = a.integrate(&bernstein(n, m));
            Ok(QuadResult { value, error_estimate: err + a.error_estimate, evaluations: 15 * a.panel_count(), truncation_bound: 0.0 })
        }
    }
}

fn gram_entry_dirac(n: usize, m: usize, tol: f64) -> Result<QuadResult<f64>> {
    let ln_c = ln_factorial(n + m) - ln_factorial(n) - ln_factorial(m);
    let (nf, mf) = (n as f64, m as f64);
    // W(x/v)/v as a function of x, in log form
    let inner = move |v: f64| -> Result<f64> {
        let ln_v = v.ln();
        let h = move |x: f64| {
            if x <= 0.0 {
                return 0.0;
            }
            let c_ln = x.ln() - ln_v;
            let c = (c_ln).exp();
            (ln_c + (mf - 1.0) * c_ln - (nf + mf + 1.0) * c.ln_1p() - ln_v).exp()
        };
        let bps: Vec<f64> = [0.25, 0.5, 1.0, 2.0, 4.0].iter().map(|f| f * v).collect();
        let r = quad::integrate_frac_smooth(&h, &bps, 32, QuadOptions::abs(tol * 1e-2).with_rel(1e-14))?;
        Ok(r.value)
    };
    let failure = std::cell::RefCell::new(None);
    let outer = |v: f64| -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        match inner(v) {
            Ok(phi) => phi / (v * v),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    let r = quad::integrate_frac_smooth(&outer, &[], 32, QuadOptions::abs(tol).with_rel(1e-13));
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(r?)
}

/// Time-domain oracle `int_0^inf g_i(t) g_j(t) dt` (1-based `i`, `j`), never touching `A`.
pub fn gram_entry_time_domain(i: usize, j: usize, spec: RhoSpec, tol: f64) -> Result<f64> {
    let failure = std::cell::RefCell::new(None);
    let f = |t: f64| -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let gi = gx_invgamma_with(i, t, spec, tol * 1e-2);
        let gj = if i == j { gi.clone() } else { gx_invgamma_with(j, t, spec, tol * 1e-2) };
        match (gi, gj) {
            (Ok(a), Ok(b)) => a * b,
            (Err(e), _) | (_, Err(e)) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    let integrand = Integrand::new(f).with_decay(DecayHint::Algebraic(2.0));
    let r = quad::integrate_semiinf_with(&integrand, QuadOptions::abs(tol).with_rel(1e-12));
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(r?.value)
}

/// `b_k = <chi, g_k> = int_0^1 g_k(t) dt`.
pub fn rhs_entry_invgamma(k: usize, spec: RhoSpec, tol: f64) -> Result<QuadResult<f64>> {
    let failure = std::cell::RefCell::new(None);
    let f = |t: f64| -> f64 {
        if t <= 0.0 {
            return 0.5;
        }
        match gx_invgamma_with(k, t, spec, tol * 1e-2) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    let r = quad::integrate_unit_with(&Integrand::new(f), QuadOptions::abs(tol).with_rel(1e-13));
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(r?)
}

/// `phi(s) = zeta(s)/s E[Y^s] Gamma(1-s)` on the critical line.
pub fn phi_invgamma(t: f64, spec: RhoSpec) -> num_complex::Complex64 {
    let s = critical(t);
    let z = zeta_strip(s).expect("critical line lies in the strip");
    let g = gamma_complex(1.0 - s).expect("Gamma(1-s) regular on the critical line");
    z / s * spec.mellin_moment(s) * g
}

/// `|phi(1/2 + it)|^2`.
pub fn mellin_weight_invgamma(t: f64, spec: RhoSpec) -> f64 {
    phi_invgamma(t, spec).norm_sqr()
}

/// Smallest `T` with `|phi|^2 (1 + t^2)^{n-1} (1 + t)` below `1e-17` times its maximum for `t >= T`.
fn mellin_cutoff(n: usize, spec: RhoSpec) -> f64 {
    let f = |t: f64| mellin_weight_invgamma(t, spec) * (1.0 + t * t).powi(n as i32 - 1) * (1.0 + t);
    let mut peak: f64 = 0.0;
    let mut t = 0.0;
    while t < 400.0 {
        let v = f(t);
        peak = peak.max(v);
        // the envelope decays at least like e^{-pi t}; check a short window to skip zeta zeros
        if t > 5.0 && (0..4).all(|i| f(t + 0.25 * i as f64) < 1e-17 * peak) {
            return t + 1.0;
        }
        t += 0.5;
    }
    t
}

/// Gram system of `g_1..g_n` computed entirely on the critical line:
/// `<g_j, g_k> = (1/2 pi) int P_{j-1} conj(P_{k-1}) |phi|^2 dt / ((j-1)! (k-1)!)` and
/// `b_k = -(1/2 pi) int Re(conj(phi P_{k-1}) / s) dt / (k-1)!`.
pub fn mellin_gram_system(n: usize, spec: RhoSpec, panels_per_unit: usize) -> Result<(GramSystem, f64)> {
    if n == 0 {
        return Err(InvGammaError::Index(0));
    }
    let t_max = mellin_cutoff(n, spec);
    let panels = ((t_max * panels_per_unit as f64).ceil() as usize).max(16);
    let rule = CompositeRule::new(0.0, t_max, panels);
    let mut gvals = vec![vec![vec![0.0; rule.len()]; n]; n];
    let mut bvals = vec![vec![0.0; rule.len()]; n];
    for (idx, &t) in rule.nodes.iter().enumerate() {
        let s = critical(t);
        let phi = phi_invgamma(t, spec);
        let basis: Vec<num_complex::Complex64> =
            (0..n).map(|k| phi * pochhammer_eval(k, s) * (-ln_factorial(k)).exp()).collect();
        for j in 0..n {
            bvals[j][idx] = -(basis[j].conj() / s).re;
            for k in j..n {
                gvals[j][k][idx] = (basis[j] * basis[k].conj()).re;
            }
        }
    }
    // even integrands: (1/2pi) * 2 * int_0^T
    let scale = 1.0 / std::f64::consts::PI;
    let mut g = vec![vec![0.0; n]; n];
    let mut tol = vec![vec![0.0; n]; n];
    let mut b = vec![0.0; n];
    let mut max_err: f64 = 0.0;
    for j in 0..n {
        let (v, e) = rule.integrate(&bvals[j]);
        b[j] = v * scale;
        max_err = max_err.max(e * scale);
        for k in j..n {
            let (v, e) = rule.integrate(&gvals[j][k]);
            g[j][k] = v * scale;
            g[k][j] = v * scale;
            tol[j][k] = e * scale;
            tol[k][j] = e * scale;
            max_err = max_err.max(e * scale);
        }
    }
    Ok((GramSystem::new(g, b, &format!("invgamma-mellin/{}", spec.label()), tol)?, max_err))
}

/// Basis `g_1..g_n` for a fixed law of `Y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvGammaBasis {
    pub y_spec: RhoSpec,
    pub n: usize,
}

impl InvGammaBasis {
    pub fn new(y_spec: RhoSpec, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(InvGammaError::Index(0));
        }
        y_spec.validate().map_err(|e| InvGammaError::Domain(e.to_string()))?;
        Ok(InvGammaBasis { y_spec, n })
    }

    /// Indices `(i, j)` (1-based) whose entries carry the relaxed tolerance.
    pub fn delicate_entries(&self) -> Vec<(usize, usize)> {
        vec![(1, 1)]
    }

    /// Time-domain Gram system: Bernstein-formula entries and `b_k = int_0^1 g_k`.
    pub fn gram_system(&self, opts: &InvGammaOptions) -> Result<GramSystem> {
        let n = self.n;
        let cache = match self.y_spec {
            RhoSpec::Exponential { .. } => Some(AFunction::for_spec(self.y_spec)?),
            RhoSpec::DiracOne => None,
        };
        let mut g = vec![vec![0.0; n]; n];
        let mut tol = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let r = gram_entry_invgamma_with(i, j, self.y_spec, cache.as_ref(), opts.gram_tol)?;
                g[i][j] = r.value;
                g[j][i] = r.value;
                tol[i][j] = r.total_error();
                tol[j][i] = r.total_error();
            }
        }
        tol[0][0] = tol[0][0].max(DELICATE_ENTRY_TOL);
        let b = (1..=n)
            .map(|k| rhs_entry_invgamma(k, self.y_spec, opts.rhs_tol).map(|r| r.value))
            .collect::<Result<Vec<_>>>()?;
        Ok(GramSystem::new(g, b, &format!("invgamma/{}", self.y_spec.label()), tol)?)
    }
}

/// Both routes for `n = 1..n_max`, sharing the Gram computations.
pub fn distance_table_invgamma(n_max: usize, spec: RhoSpec, opts: &InvGammaOptions) -> Result<Vec<DistanceReport>> {
    let basis = InvGammaBasis::new(spec, n_max)?;
    let sys = basis.gram_system(opts)?;
    let (msys, _) = mellin_gram_system(n_max, spec, opts.mellin_panels_per_unit)?;
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let mut report = solver::distance_from_system(&sys.leading(n), 1.0)?;
        let mellin = solver::distance_from_system(&msys.leading(n), 1.0)?;
        report.d2_crosscheck = Some(mellin.d2);
        report.crosscheck_route = Some("mellin".into());
        report.tail_diag = Some(solver::tail_diagnostic(&report.coefficients, spec, opts.tail_m));
        out.push(report);
    }
    Ok(out)
}

/// `D_n^2` by the time-domain route with the Mellin route as cross-check.
pub fn distance_invgamma(n: usize, spec: RhoSpec) -> Result<DistanceReport> {
    let mut table = distance_table_invgamma(n, spec, &InvGammaOptions::default())?;
    Ok(table.pop().expect("n >= 1"))
}

/// `E[Z_k^alpha] = E[Y^alpha] Gamma(k - alpha) / Gamma(k)`, infinite for `alpha >= k`.
pub fn moment_z(k: usize, alpha: f64, spec: RhoSpec) -> f64 {
    if alpha >= k as f64 {
        return f64::INFINITY;
    }
    let lg = ln_gamma_real(k as f64 - alpha).unwrap() - ln_gamma_real(k as f64).unwrap();
    spec.moment(alpha) * lg.exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{c64, frac};

    const DIRAC: RhoSpec = RhoSpec::DiracOne;
    const EXP1: RhoSpec = RhoSpec::Exponential { lambda: 1.0 };

    #[test]
    fn gx_dirac_k1_against_definition() {
        // g_1(1) = int_0^inf {1/x} e^{-x} dx, split at x = 1/j
        let mut pts: Vec<f64> = (1..=4000).map(|j| 1.0 / j as f64).collect();
        pts.reverse();
        let f = |x: f64| frac(1.0 / x) * (-x).exp();
        let head = quad::adaptive(&f, &pts, QuadOptions::abs(1e-13)).unwrap().value;
        // {1/x} on (0, 1/4000) averages 1/2
        let want = head + 0.5 / 4000.0 + quad::integrate_from(
            &Integrand::new(|x: f64| (-x).exp() / x).with_decay(DecayHint::Exponential(1.0)),
            1.0,
            QuadOptions::abs(1e-14),
        )
        .unwrap()
        .value;
        let got = gx_invgamma(1, 1.0, DIRAC).unwrap();
        assert!((got - want).abs() < 1e-7, "{got} vs {want}");
    }

    #[test]
    fn gx_limits() {
        for spec in [DIRAC, EXP1] {
            assert!(gx_invgamma(2, 1e6, spec).unwrap() < 1e-5);
            let v = gx_invgamma(3, 1e-4, spec).unwrap();
            assert!((v - 0.5).abs() < 1e-3, "{v}");
        }
        assert!(gx_invgamma(0, 1.0, DIRAC).is_err());
        assert!(gx_invgamma(1, -1.0, DIRAC).is_err());
    }

    #[test]
    fn a_function_symmetry_and_exp_tolerances() {
        for spec in [DIRAC, EXP1] {
            let a = a_function(0.3, spec).unwrap();
            let b = a_function(0.7, spec).unwrap();
            assert!((a - b).abs() < 1e-8);
            assert!(a > 0.0);
        }
        let coarse = a_function_with(0.5, EXP1, 1e-9).unwrap();
        let fine = a_function_with(0.5, EXP1, 1e-14).unwrap();
        assert!((coarse - fine).abs() < 1e-8);
        assert!(a_function(0.0, DIRAC).is_err());
    }

    #[test]
    fn weight_examples() {
        let z = zeta_strip(c64(0.5, 0.0)).unwrap().re;
        let want = (z * 2.0 * std::f64::consts::PI.sqrt()).powi(2);
        assert!((mellin_weight_invgamma(0.0, DIRAC) - want).abs() < 1e-12 * want);
        for t in [0.7, 3.0, 12.5] {
            for spec in [DIRAC, EXP1] {
                let a = mellin_weight_invgamma(t, spec);
                let b = mellin_weight_invgamma(-t, spec);
                assert!((a - b).abs() <= 1e-13 * a);
            }
        }
    }

    #[test]
    fn weight_decay_envelope() {
        let pi = std::f64::consts::PI;
        let fitted = (0..=50)
            .map(|i| 5.0 + 0.5 * i as f64)
            .map(|t| mellin_weight_invgamma(t, DIRAC) * (pi * t).exp())
            .fold(0.0, f64::max);
        for i in 0..=300 {
            let t = 0.1 * i as f64;
            assert!(mellin_weight_invgamma(t, DIRAC) * (pi * t).exp() <= 40.0, "t = {t}");
        }
        for i in 0..=250 {
            let t = 5.0 + 0.1 * i as f64;
            assert!(mellin_weight_invgamma(t, DIRAC) <= 1.01 * fitted * (-pi * t).exp());
        }
    }

    #[test]
    fn moment_bound_dirac() {
        for alpha in [1.0, 2.0, 3.0] {
            let mut worst: f64 = 0.0;
            for k in (alpha as usize + 1)..=50 {
                let v = (k as f64).powf(alpha) * moment_z(k, alpha, DIRAC);
                worst = worst.max(v);
            }
            assert!(worst.is_finite() && worst <= 2f64.powf(alpha) * 3.0, "alpha {alpha}: {worst}");
        }
        assert!(moment_z(1, 1.0, DIRAC).is_infinite());
        assert!((moment_z(2, 1.0, DIRAC) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn bernstein_identity_for_01_entry() {
        let a = AFunction::for_spec(EXP1).unwrap();
        let g01 = gram_entry_invgamma_with(0, 1, EXP1, Some(&a), 1e-11).unwrap().value;
        let (direct, _) = a.integrate(&|u| 1.0 - u);
        assert!((g01 - direct).abs() < 1e-15);
        let g10 = gram_entry_invgamma_with(1, 0, EXP1, Some(&a), 1e-11).unwrap().value;
        assert!((g01 - g10).abs() < 1e-12);
        let d01 = gram_entry_invgamma(0, 1, DIRAC).unwrap().value;
        let d10 = gram_entry_invgamma(1, 0, DIRAC).unwrap().value;
        assert!((d01 - d10).abs() < 1e-10, "{d01} vs {d10}");
    }
}
