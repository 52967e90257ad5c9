//! Euler-operator family `g_{k+1}(x) = -x g_k'(x) - r_k g_k(x)` from a seed
//! `g_0 = Q(x) e^{-x^2}`, with `g_k^x(t) = int_0^inf g_k(x) {x/t} dx/x`.
//!
//! Index convention: `hat g_k(s) = (s - r_0) ... (s - r_{k-1}) hat g_0(s)`, so
//! `hat g_k^x(s) = -(s - r_0) ... (s - r_{k-1}) zeta(s)/s hat g_0(s)` carries
//! exactly `k` factors. Inner products use Mellin-Plancherel on `s = 1/2 + it`:
//! `<f, h> = (1/2pi) int_R hat f conj(hat h) dt`.

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{rat, seed_mellin, seed_sequence, SeedFunction};
use crate::family_classical::indicator_inner;
use crate::quad::{self, CompositeRule, GkPanel, QuadError, QuadOptions};
use crate::report::ProvenancedValue;
use crate::solver::{self, DiscreteWeight, DistanceReport, GramSystem, SolverError};
use crate::specfun::{c64, critical, frac, xi_function, zeta_strip, SpecFunError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecursiveError {
    #[error(transparent)]
    Strip(#[from] SpecFunError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("index {index} outside the prepared range (max {max})")]
    Index { index: usize, max: usize },
    #[error("seed g_{k} is not Gaussian-dominated: tail ratio {ratio:e}")]
    Decay { k: usize, ratio: f64 },
    #[error("shift sequence has {got} entries, need {need}")]
    ShiftLength { got: usize, need: usize },
    #[error("structure violation at ({k}, {j}): |entry| = {value:e} exceeds {tol:e}")]
    Structure { k: usize, j: usize, value: f64, tol: f64 },
    #[error("operation needs r_k = 1/2 for all k")]
    NotHalf,
    #[error("Stieltjes procedure stopped at degree {0} (non-positive beta)")]
    Stieltjes(usize),
    #[error("convolution oracle needs a seed vanishing at 0")]
    SeedAtZero,
}

pub type Result<T> = std::result::Result<T, RecursiveError>;

/// Seed, shifts `r_0, ..., r_{k_max-1}` and the largest index `k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecursiveBasis {
    pub seed: SeedFunction,
    pub r: Vec<BigRational>,
    pub k_max: usize,
}

impl RecursiveBasis {
    pub fn new(seed: SeedFunction, r: Vec<BigRational>, k_max: usize) -> Result<Self> {
        if r.len() < k_max {
            return Err(RecursiveError::ShiftLength { got: r.len(), need: k_max });
        }
        let b = RecursiveBasis { seed, r: r[..k_max].to_vec(), k_max };
        b.check_decay()?;
        Ok(b)
    }

    /// Constant shift `r` for every step.
    pub fn constant(seed: SeedFunction, r: BigRational, k_max: usize) -> Result<Self> {
        Self::new(seed, vec![r; k_max], k_max)
    }

    /// `pi^{-1/4}`-normalized Xi seed with `r_k = 1/2`.
    pub fn xi(k_max: usize) -> Self {
        Self::constant(SeedFunction::xi_seed(), rat(1, 2), k_max).expect("Xi seed decays")
    }

    pub fn is_half(&self) -> bool {
        let half = rat(1, 2);
        self.r.iter().all(|r| *r == half)
    }

    /// `g_0, ..., g_{k_max}`.
    pub fn functions(&self) -> Vec<SeedFunction> {
        seed_sequence(&self.seed, &self.r)
    }

    /// `r` rendered as "1/2" when constant, else a comma list.
    pub fn r_label(&self) -> String {
        match self.r.first() {
            None => "-".into(),
            Some(r0) if self.r.iter().all(|r| r == r0) => r0.to_string(),
            _ => self.r.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(","),
        }
    }

    /// Each `g_k` must be negligible on `[10, 20]` relative to its size on
    /// `[0, 5]`, sampled.
    pub fn check_decay(&self) -> Result<()> {
        for (k, g) in self.functions().iter().enumerate() {
            let head = (0..=500).map(|i| g.eval(i as f64 * 0.01).abs()).fold(0.0, f64::max);
            let tail = (0..=100).map(|i| g.eval(10.0 + i as f64 * 0.1).abs()).fold(0.0, f64::max);
            let ratio = if head > 0.0 { tail / head } else { f64::INFINITY };
            if !(ratio <= 1e-20) {
                return Err(RecursiveError::Decay { k, ratio });
            }
        }
        Ok(())
    }

    fn shifts_f64(&self) -> Vec<f64> {
        self.r.iter().map(|r| r.to_f64().unwrap_or(f64::NAN)).collect()
    }
}

fn shift_product(r: &[f64], k: usize, s: Complex64) -> Complex64 {
    r[..k].iter().fold(Complex64::one(), |acc, &rj| acc * (s - rj))
}

fn check_strip(s: Complex64) -> Result<()> {
    if s.re > 0.0 && s.re < 1.0 {
        Ok(())
    } else {
        Err(SpecFunError::OutOfStrip { re: s.re, im: s.im }.into())
    }
}

/// `hat g_k^x(s) = -(s - r_0) ... (s - r_{k-1}) zeta(s)/s hat g_0(s)`.
pub fn gx_hat_recursive(k: usize, s: Complex64, basis: &RecursiveBasis) -> Result<Complex64> {
    check_strip(s)?;
    if k > basis.k_max {
        return Err(RecursiveError::Index { index: k, max: basis.k_max });
    }
    let z = zeta_strip(s)?;
    Ok(-shift_product(&basis.shifts_f64(), k, s) * z / s * seed_mellin(&basis.seed, s))
}

/// `g^x(t) = int_0^X g(x) {x/t} dx/x` on panels between the kinks `x = m t`.
fn g_times(g: &SeedFunction, t: f64, x_max: f64) -> f64 {
    let mut pts: Vec<f64> = (0..=(x_max / t).floor() as usize).map(|m| m as f64 * t).collect();
    pts.extend((0..=(4.0 * x_max) as usize).map(|i| 0.25 * i as f64));
    pts.push(x_max);
    let pts = quad::merge_breakpoints(&[pts]);
    let mut acc = 0.0;
    for w in pts.windows(2) {
        let p = GkPanel::new(w[0], w[1]);
        for i in 0..15 {
            let x = p.nodes[i];
            acc += p.kronrod[i] * g.eval(x) * frac(x / t) / x;
        }
    }
    acc
}

/// Mellin transform of `g_k^x` by direct quadrature of its defining
/// convolution, for the oracle check of [`gx_hat_recursive`].
///
/// The outer integral runs over `t in [eps, X]` in `ln t`; below `eps` the
/// convolution is frozen at its value at `eps`, and beyond `X` (where the seed
/// is negligible) it equals `(1/t) int g` exactly.
pub fn gx_hat_by_convolution(k: usize, s: Complex64, basis: &RecursiveBasis) -> Result<Complex64> {
    check_strip(s)?;
    let funcs = basis.functions();
    let g = funcs.get(k).ok_or(RecursiveError::Index { index: k, max: basis.k_max })?;
    if !g.poly.coeff(0).is_zero() {
        return Err(RecursiveError::SeedAtZero);
    }
    let (eps, x_max) = (1e-3f64, 8.0f64);
    let (ua, ub) = (eps.ln(), x_max.ln());
    let panels = ((ub - ua) * 3.0).ceil() as usize;
    let rule = CompositeRule::new(ua, ub, panels);
    let vals: Vec<Complex64> =
        rule.nodes.iter().map(|&u| (s * u).exp() * g_times(g, u.exp(), x_max)).collect();
    let (mid, _) = rule.integrate(&vals);
    let head = g_times(g, eps, x_max) * (s * eps.ln()).exp() / s;
    let mass = quad::adaptive(&|x: f64| g.eval(x), &[0.0, 2.0, 4.0, x_max], QuadOptions::abs(1e-15))?.value;
    let tail = mass * ((s - 1.0) * x_max.ln()).exp() / (1.0 - s);
    Ok(head + mid + tail)
}

/// Truncation of `int t^j w(t) dt` for weights decaying like `e^{-pi |t| / 2}`.
pub fn moment_truncation(j: usize) -> f64 {
    (30.0 + 4.0 * j as f64).max(60.0)
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightVariant {
    /// `|zeta(s)/s hat g_0(s)|^2` for a seed.
    SeedWeight(SeedFunction),
    /// `Xi(t)^2` evaluated directly.
    XiSquared,
}

impl WeightVariant {
    fn route(&self) -> &'static str {
        match self {
            WeightVariant::SeedWeight(_) => "mellin-seed",
            WeightVariant::XiSquared => "xi-squared",
        }
    }
}

fn seed_kernel(seed: &SeedFunction, t: f64) -> Complex64 {
    let s = critical(t);
    zeta_strip(s).expect("critical line") / s * seed_mellin(seed, s)
}

/// Density of `nu` (without the `1/2pi` factor) at `t`.
pub fn weight_density(variant: &WeightVariant, t: f64) -> f64 {
    match variant {
        WeightVariant::SeedWeight(seed) => seed_kernel(seed, t).norm_sqr(),
        WeightVariant::XiSquared => xi_function(t).powi(2),
    }
}

/// Symmetric composite rule on `[-T, T]` with `T = 2 T(j_max)`.
fn symmetric_rule(j_max: usize, panels_per_unit: usize) -> CompositeRule {
    let half = 2.0 * moment_truncation(j_max);
    CompositeRule::new(-half, half, (2.0 * half) as usize * panels_per_unit.max(1))
}

/// `m_j = (1/2pi) int_R t^j dnu(t)` for `j <= j_max`, on a shared symmetric grid.
///
/// Odd moments are integrated like the even ones (density evaluated at `-t`
/// separately). Each value is integrated to `2 T(j)` and its error estimate
/// includes the change from truncating at `T(j)`.
#[derive(Debug, Clone)]
pub struct MomentWeight {
    pub variant: WeightVariant,
    rule: CompositeRule,
    density: Vec<f64>,
    moments: Vec<ProvenancedValue>,
}

impl MomentWeight {
    pub fn new(variant: WeightVariant, j_max: usize, panels_per_unit: usize) -> Self {
        let rule = symmetric_rule(j_max, panels_per_unit);
        let density = rule.nodes.iter().map(|&t| weight_density(&variant, t)).collect();
        Self::from_grid(variant, rule, density, j_max)
    }

    fn from_grid(variant: WeightVariant, rule: CompositeRule, density: Vec<f64>, j_max: usize) -> Self {
        let route = variant.route();
        let moments = (0..=j_max)
            .map(|j| {
                let vals: Vec<f64> = rule.nodes.iter().zip(&density).map(|(&t, w)| t.powi(j as i32) * w).collect();
                let tj = moment_truncation(j);
                let (full, err) = rule.integrate_within(&vals, -2.0 * tj, 2.0 * tj);
                let (cut, _) = rule.integrate_within(&vals, -tj, tj);
                let scale = 1.0 / (2.0 * std::f64::consts::PI);
                ProvenancedValue::new(full * scale, (err + (full - cut).abs()) * scale, route, 2.0 * tj)
                    .expect("finite error")
            })
            .collect();
        MomentWeight { variant, rule, density, moments }
    }

    pub fn j_max(&self) -> usize {
        self.moments.len() - 1
    }

    pub fn moments(&self) -> &[ProvenancedValue] {
        &self.moments
    }

    pub fn moment(&self, j: usize) -> Result<&ProvenancedValue> {
        self.moments.get(j).ok_or(RecursiveError::Index { index: j, max: self.j_max() })
    }

    /// The quadrature nodes with weights `w_i nu(t_i) / 2pi`.
    pub fn discretized(&self) -> DiscreteWeight {
        let scale = 1.0 / (2.0 * std::f64::consts::PI);
        DiscreteWeight {
            nodes: self.rule.nodes.clone(),
            weights: self.rule.kronrod_weights().iter().zip(&self.density).map(|(k, w)| k * w * scale).collect(),
        }
    }

    /// `(t, w(t))` on `[t_lo, t_hi]` with `points` samples; `w` includes `1/2pi`.
    pub fn sample_grid(&self, t_lo: f64, t_hi: f64, points: usize) -> Vec<(f64, f64)> {
        let n = points.max(2);
        (0..n)
            .map(|i| {
                let t = t_lo + (t_hi - t_lo) * i as f64 / (n - 1) as f64;
                (t, weight_density(&self.variant, t) / (2.0 * std::f64::consts::PI))
            })
            .collect()
    }
}

/// `m_j` of a prepared weight.
pub fn moment(weight: &MomentWeight, j: usize) -> Result<f64> {
    Ok(weight.moment(j)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecursiveOptions {
    pub panels_per_unit: usize,
    /// Refuse systems whose condition estimate reaches this.
    pub cond_limit: f64,
    /// Upper limit of `int {x} g_k(x) dx/x` in the b recursion.
    pub frac_cut: f64,
    /// Larger limit used to bound the truncation effect.
    pub frac_cut_check: f64,
    /// `|odd entry| <= structure_tol * m_0` for the r = 1/2 structure.
    pub structure_tol: f64,
}

impl Default for RecursiveOptions {
    fn default() -> Self {
        RecursiveOptions {
            panels_per_unit: 1,
            cond_limit: 1e12,
            frac_cut: 12.0,
            frac_cut_check: 15.0,
            structure_tol: 1e-8,
        }
    }
}

/// Critical-line samples of `zeta(s)/s hat g_0(s)` shared by every Gram entry,
/// right-hand side and moment of one basis.
#[derive(Debug, Clone)]
pub struct RecursiveModel {
    pub basis: RecursiveBasis,
    pub options: RecursiveOptions,
    rule: CompositeRule,
    kernel: Vec<Complex64>,
    shifts: Vec<f64>,
    pub weight: MomentWeight,
}

/// Both routes for one `b_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhsReport {
    pub k: usize,
    pub direct: ProvenancedValue,
    pub recursion: ProvenancedValue,
    /// `|Im|` of the Plancherel integral, zero for a real target.
    pub imag_residue: f64,
}

impl RecursiveModel {
    pub fn build(basis: &RecursiveBasis, options: RecursiveOptions) -> Self {
        let j_max = 2 * basis.k_max;
        let rule = symmetric_rule(j_max, options.panels_per_unit);
        let kernel: Vec<Complex64> = rule.nodes.iter().map(|&t| seed_kernel(&basis.seed, t)).collect();
        let density = kernel.iter().map(|h| h.norm_sqr()).collect();
        let weight =
            MomentWeight::from_grid(WeightVariant::SeedWeight(basis.seed.clone()), rule.clone(), density, j_max);
        RecursiveModel { basis: basis.clone(), options, rule, kernel, shifts: basis.shifts_f64(), weight }
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k > self.basis.k_max {
            return Err(RecursiveError::Index { index: k, max: self.basis.k_max });
        }
        Ok(())
    }

    fn plancherel(&self, f: impl Fn(Complex64, usize) -> Complex64, cut: f64) -> (Complex64, f64, f64) {
        let vals: Vec<Complex64> =
            self.rule.nodes.iter().enumerate().map(|(i, &t)| f(critical(t), i)).collect();
        let (full, err) = self.rule.integrate(&vals);
        let (part, _) = self.rule.integrate_within(&vals, -cut, cut);
        let scale = 1.0 / (2.0 * std::f64::consts::PI);
        (full * scale, err * scale, (full - part).norm() * scale)
    }

    /// `<g_k^x, g_j^x>` as the full complex Plancherel integral; its
    /// imaginary part must vanish for real functions.
    pub fn gram_entry_complex(&self, k: usize, j: usize) -> Result<Complex64> {
        Ok(self.gram_entry_full(k, j)?.0)
    }

    fn gram_entry_full(&self, k: usize, j: usize) -> Result<(Complex64, f64)> {
        self.check_index(k.max(j))?;
        let r = &self.shifts;
        let (v, err, trunc) = self.plancherel(
            |s, i| shift_product(r, k, s) * shift_product(r, j, s).conj() * self.kernel[i].norm_sqr(),
            moment_truncation(k + j),
        );
        Ok((v, err + trunc))
    }

    /// Gram entry by Plancherel quadrature, valid for any shifts.
    pub fn gram_entry(&self, k: usize, j: usize) -> Result<ProvenancedValue> {
        let (v, err) = self.gram_entry_full(k, j)?;
        let tol = self.options.structure_tol * self.weight.moments[0].value;
        if v.im.abs() > tol.max(err) {
            return Err(RecursiveError::Structure { k, j, value: v.im.abs(), tol });
        }
        Ok(ProvenancedValue::new(v.re, err, "mellin", 2.0 * moment_truncation(2 * self.basis.k_max)).unwrap())
    }

    /// `b_k = <chi, g_k^x> = (1/2pi) int (1/s) conj(hat g_k^x(s)) dt`.
    pub fn rhs_direct(&self, k: usize) -> Result<(ProvenancedValue, f64)> {
        self.check_index(k)?;
        let r = &self.shifts;
        let (v, err, trunc) = self.plancherel(
            |s, i| (-shift_product(r, k, s) * self.kernel[i]).conj() / s,
            moment_truncation(k),
        );
        let pv = ProvenancedValue::new(v.re, err + trunc, "mellin", 2.0 * moment_truncation(2 * self.basis.k_max))
            .unwrap();
        Ok((pv, v.im.abs()))
    }

    /// `b_0, ..., b_{k_max}` from `b_{k+1} = (1 - r_k) b_k - int_0^X {x} g_k(x) dx/x`
    /// seeded with the direct `b_0`. With `r_k = 1/2` this is
    /// `b_{k+1} = b_k / 2 - int {x} g_k(x) dx/x`.
    pub fn rhs_by_recursion(&self, cut: f64) -> Result<Vec<ProvenancedValue>> {
        let funcs = self.basis.functions();
        let (b0, _) = self.rhs_direct(0)?;
        let mut out = vec![ProvenancedValue { route: "recursion".into(), ..b0 }];
        for k in 0..self.basis.k_max {
            let f = frac_moment(&funcs[k], cut)?;
            let f_check = frac_moment(&funcs[k], self.options.frac_cut_check.max(cut))?;
            let prev = &out[k];
            let value = (1.0 - self.shifts[k]) * prev.value - f.value;
            let err = (1.0 - self.shifts[k]).abs() * prev.est_error + f.error_estimate + (f.value - f_check.value).abs();
            out.push(ProvenancedValue::new(value, err, "recursion", cut).unwrap());
        }
        Ok(out)
    }

    pub fn rhs_report(&self, k: usize) -> Result<RhsReport> {
        let (direct, imag_residue) = self.rhs_direct(k)?;
        let rec = self.rhs_by_recursion(self.options.frac_cut)?;
        Ok(RhsReport { k, direct, recursion: rec[k].clone(), imag_residue })
    }

    /// Gram system of `g_0, ..., g_{n-1}`.
    ///
    /// For `r = 1/2`: `G_{kj} = (-1)^{(k-j)/2} m_{k+j}` when `k + j` is even; when
    /// it is odd the Plancherel integral is `i^{k-j} m_{k+j}`, purely imaginary, so
    /// the odd moment is checked against `structure_tol * m_0` and the real
    /// entry is 0. Other shifts use [`Self::gram_entry`].
    pub fn gram(&self, n: usize) -> Result<GramSystem> {
        if n == 0 || n > self.basis.k_max + 1 {
            return Err(RecursiveError::Index { index: n, max: self.basis.k_max + 1 });
        }
        let mut g = vec![vec![0.0; n]; n];
        let mut tol = vec![vec![0.0; n]; n];
        let m0 = self.weight.moments[0].value;
        for k in 0..n {
            for j in 0..n {
                if self.basis.is_half() {
                    let m = &self.weight.moments[k + j];
                    if (k + j) % 2 == 1 {
                        let bound = self.options.structure_tol * m0;
                        if m.value.abs() > bound {
                            return Err(RecursiveError::Structure { k, j, value: m.value.abs(), tol: bound });
                        }
                    } else {
                        let sign = if ((k as i64 - j as i64) / 2).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                        g[k][j] = sign * m.value;
                    }
                    tol[k][j] = m.est_error;
                } else if j >= k {
                    let e = self.gram_entry(k, j)?;
                    g[k][j] = e.value;
                    g[j][k] = e.value;
                    tol[k][j] = e.est_error;
                    tol[j][k] = e.est_error;
                }
            }
        }
        let b = (0..n).map(|k| self.rhs_direct(k).map(|(v, _)| v.value)).collect::<Result<Vec<_>>>()?;
        Ok(GramSystem::new(g, b, "recursive", tol)?)
    }

    /// `D_n^2` by solving the moment system, cross-checked by orthonormal
    /// polynomials of the discretized weight (Stieltjes).
    pub fn distance(&self, n: usize) -> Result<DistanceReport> {
        let sys = self.gram(n)?;
        let mut rep = solver::distance_from_system(&sys, 1.0)?;
        if !(rep.condition_estimate < self.options.cond_limit) {
            return Err(SolverError::IllConditioned { cond: rep.condition_estimate, limit: self.options.cond_limit }
                .into());
        }
        rep.d2_crosscheck = Some(self.distance_orthogonal(n)?);
        rep.crosscheck_route = Some("stieltjes".into());
        Ok(rep)
    }

    /// `1 - sum_{j<n} <chi, e_j>^2` with `e_j = i^j p_j(t) hat g_0^x(s)`, `p_j`
    /// orthonormal for `nu / 2pi`. The real span of `e_0..e_{n-1}` equals that of
    /// `g_0^x..g_{n-1}^x` for any shifts.
    pub fn distance_orthogonal(&self, n: usize) -> Result<f64> {
        let rec = solver::stieltjes(&self.weight.discretized(), n);
        if let Some(j) = rec.truncated_at {
            return Err(RecursiveError::Stieltjes(j));
        }
        let kw = self.rule.kronrod_weights();
        let mut proj = vec![0.0; n];
        for (i, &t) in self.rule.nodes.iter().enumerate() {
            let s = critical(t);
            let base = (-self.kernel[i]).conj() / s * kw[i];
            for (j, p) in rec.orthonormal_values(t).into_iter().enumerate() {
                // conj(i^j) = (-i)^j
                let phase = match j % 4 {
                    0 => c64(1.0, 0.0),
                    1 => c64(0.0, -1.0),
                    2 => c64(-1.0, 0.0),
                    _ => c64(0.0, 1.0),
                };
                proj[j] += (base * phase * p).re;
            }
        }
        let scale = 1.0 / (2.0 * std::f64::consts::PI);
        Ok(1.0 - proj.iter().map(|b| (b * scale).powi(2)).sum::<f64>())
    }

    /// Rows for `n = 1..=n_max`; refusals stay in place as errors.
    pub fn distance_table(&self, n_max: usize) -> Vec<Result<DistanceReport>> {
        (1..=n_max).map(|n| self.distance(n)).collect()
    }

    pub fn json_report(&self, n_max: usize) -> Result<RecursiveJson> {
        let n = n_max.min(self.basis.k_max + 1);
        let sys = self.gram(n)?;
        Ok(RecursiveJson {
            family: "recursive".into(),
            seed: serde_json::from_str(&self.basis.seed.to_json()).expect("seed json"),
            r: self.basis.r_label(),
            moments: self.weight.moments.iter().map(|m| m.value).collect(),
            gram: sys.g,
            distance: self
                .distance_table(n)
                .into_iter()
                .enumerate()
                .map(|(i, r)| match r {
                    Ok(r) => DistanceRow { n: i + 1, d2: Some(r.d2), cond: Some(r.condition_estimate), status: "ok".into() },
                    Err(e) => DistanceRow { n: i + 1, d2: None, cond: None, status: e.to_string() },
                })
                .collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceRow {
    pub n: usize,
    #[serde(rename = "D2")]
    pub d2: Option<f64>,
    pub cond: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursiveJson {
    pub family: String,
    pub seed: serde_json::Value,
    pub r: String,
    pub moments: Vec<f64>,
    pub gram: Vec<Vec<f64>>,
    pub distance: Vec<DistanceRow>,
}

/// `int_0^cut {x} g(x) dx / x` with unit panels.
pub fn frac_moment(g: &SeedFunction, cut: f64) -> Result<quad::QuadResult<f64>> {
    let pts: Vec<f64> = (0..=cut.ceil() as usize).map(|i| (i as f64).min(cut)).collect();
    let pts = quad::merge_breakpoints(&[pts]);
    Ok(quad::adaptive(
        &|x: f64| if x > 0.0 { frac(x) * g.eval(x) / x } else { 0.0 },
        &pts,
        QuadOptions::abs(1e-15).with_rel(1e-14),
    )?)
}

/// `b_k = int_0^inf g_k(x) psi(x) dx/x` with `psi(x) = int_0^1 {x/t} dt`, a
/// time-domain oracle for the right-hand side.
pub fn rhs_time_domain(k: usize, basis: &RecursiveBasis, cut: f64) -> Result<f64> {
    let funcs = basis.functions();
    let g = funcs.get(k).ok_or(RecursiveError::Index { index: k, max: basis.k_max })?;
    let pts: Vec<f64> = (0..=cut.ceil() as usize).map(|i| (i as f64).min(cut)).collect();
    let pts = quad::merge_breakpoints(&[pts]);
    Ok(quad::adaptive(
        &|x: f64| if x > 0.0 { g.eval(x) * indicator_inner(x) / x } else { 0.0 },
        &pts,
        QuadOptions::abs(1e-15).with_rel(1e-14),
    )?
    .value)
}

/// Gram system of `g_0..g_{n-1}`; shortcut through a fresh [`RecursiveModel`].
pub fn gram_recursive(n: usize, basis: &RecursiveBasis) -> Result<GramSystem> {
    RecursiveModel::build(basis, RecursiveOptions::default()).gram(n)
}

pub fn rhs_recursive(k: usize, basis: &RecursiveBasis) -> Result<RhsReport> {
    RecursiveModel::build(basis, RecursiveOptions::default()).rhs_report(k)
}

pub fn distance_recursive(n: usize, basis: &RecursiveBasis) -> Result<DistanceReport> {
    RecursiveModel::build(basis, RecursiveOptions::default()).distance(n)
}

/// Odd positions (1-based) first: `[0, 2, 4, ..., 1, 3, 5, ...]` in 0-based indices.
pub fn block_permutation(n: usize) -> Vec<usize> {
    (0..n).step_by(2).chain((1..n).step_by(2)).collect()
}

fn permute(sys: &GramSystem, p: &[usize]) -> GramSystem {
    GramSystem {
        g: p.iter().map(|&i| p.iter().map(|&j| sys.g[i][j]).collect()).collect(),
        b: p.iter().map(|&i| sys.b[i]).collect(),
        family: sys.family.clone(),
        entry_tolerances: p.iter().map(|&i| p.iter().map(|&j| sys.entry_tolerances[i][j]).collect()).collect(),
    }
}

/// Symmetric reordering by [`block_permutation`]; for `r = 1/2` the result has
/// two Hankel-type diagonal blocks and vanishing off-diagonal blocks.
pub fn block_hankel_reorder(sys: &GramSystem) -> GramSystem {
    permute(sys, &block_permutation(sys.dim()))
}

pub fn inverse_block_hankel_reorder(sys: &GramSystem) -> GramSystem {
    let p = block_permutation(sys.dim());
    let mut inv = vec![0; p.len()];
    for (a, &i) in p.iter().enumerate() {
        inv[i] = a;
    }
    permute(sys, &inv)
}

/// Largest entry of the off-diagonal blocks of a reordered matrix.
pub fn off_block_max(reordered: &GramSystem) -> f64 {
    let n = reordered.dim();
    let split = n.div_ceil(2);
    let mut m = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if (i < split) != (j < split) {
                m = m.max(reordered.g[i][j].abs());
            }
        }
    }
    m
}

/// `H_{kj} = (-1)^{(j-k)/2} G_{kj}` on the natural order, requiring
/// `|G_{kj}| <= tol` wherever `k + j` is odd. The result satisfies
/// `H_{kj} = m_{k+j}`.
pub fn sign_strip_to_moment_matrix(sys: &GramSystem, tol: f64) -> Result<Vec<Vec<f64>>> {
    let n = sys.dim();
    let mut h = vec![vec![0.0; n]; n];
    for k in 0..n {
        for j in 0..n {
            if (k + j) % 2 == 1 {
                if sys.g[k][j].abs() > tol {
                    return Err(RecursiveError::Structure { k, j, value: sys.g[k][j].abs(), tol });
                }
            } else {
                let sign = if ((j as i64 - k as i64) / 2).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                h[k][j] = sign * sys.g[k][j];
            }
        }
    }
    Ok(h)
}

/// Largest `|H_{kj} - H_{k+1,j-1}|`, zero for an exact Hankel matrix.
pub fn hankel_defect(h: &[Vec<f64>]) -> f64 {
    let n = h.len();
    let mut d = 0.0f64;
    for k in 0..n.saturating_sub(1) {
        for j in 1..n {
            d = d.max((h[k][j] - h[k + 1][j - 1]).abs());
        }
    }
    d
}

/// Parses the shift sequence: a single rational for a constant sequence, or a
/// comma-separated list.
pub fn parse_shifts(text: &str, k_max: usize) -> std::result::Result<Vec<BigRational>, crate::algebra::AlgebraError> {
    let parts = text.split(',').map(|p| crate::algebra::parse_rational(p.trim())).collect::<std::result::Result<Vec<_>, _>>()?;
    if parts.len() == 1 {
        Ok(vec![parts[0].clone(); k_max])
    } else {
        Ok(parts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gx_hat_vanishes_at_half_for_half_shifts() {
        let b = RecursiveBasis::xi(3);
        assert!(gx_hat_recursive(0, c64(0.5, 0.0), &b).unwrap().norm() > 0.1);
        for k in 1..=3 {
            assert_eq!(gx_hat_recursive(k, c64(0.5, 0.0), &b).unwrap().norm(), 0.0);
        }
        assert!(gx_hat_recursive(1, c64(1.0, 0.0), &b).is_err());
        assert!(gx_hat_recursive(4, c64(0.5, 1.0), &b).is_err());
    }

    #[test]
    fn gx_hat_ratio_is_one_shift_factor() {
        let b = RecursiveBasis::constant(SeedFunction::xi_seed(), rat(1, 3), 4).unwrap();
        let s = c64(0.5, 2.7);
        for k in 0..4 {
            let q = gx_hat_recursive(k + 1, s, &b).unwrap() / gx_hat_recursive(k, s, &b).unwrap();
            assert!((q - (s - 1.0 / 3.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn block_permutation_layout() {
        assert_eq!(block_permutation(4), vec![0, 2, 1, 3]);
        assert_eq!(block_permutation(5), vec![0, 2, 4, 1, 3]);
    }

    #[test]
    fn gaussian_seed_fails_convolution_oracle_precondition() {
        let b = RecursiveBasis::constant(SeedFunction::gaussian(), rat(1, 2), 1).unwrap();
        assert_eq!(gx_hat_by_convolution(0, c64(0.5, 1.0), &b), Err(RecursiveError::SeedAtZero));
    }

    #[test]
    fn parse_shift_list() {
        assert_eq!(parse_shifts("1/2", 3).unwrap(), vec![rat(1, 2); 3]);
        assert_eq!(parse_shifts("1/3, 1/2", 3).unwrap(), vec![rat(1, 3), rat(1, 2)]);
        assert!(RecursiveBasis::new(SeedFunction::xi_seed(), vec![rat(1, 2)], 3).is_err());
    }
}
