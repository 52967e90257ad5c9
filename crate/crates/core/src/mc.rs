//! Monte-Carlo version of the inverse-Gamma approximation: each
//! `E{Z_k/t}` is replaced by the mean of `N` sampled dilations `{Z_{k,j}/t}`.
//!
//! `d^2 = int (chi - sum_k c_k/N sum_j {Z_{k,j}/t})^2 dt` is expanded into
//! `1 - 2 sum w <chi, e_theta> + sum sum w w' <e_theta, e_theta'>` with every
//! inner product in closed or semi-closed form.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::family_classical::{dilation_inner, indicator_inner, FracPairOptions};
use crate::family_invgamma::{mellin_gram_system, moment_z, phi_invgamma, InvGammaError};
use crate::quad::CompositeRule;
use crate::solver::GramSystem;
use crate::specfun::{critical, pochhammer_eval, zeta_strip, RhoSpec, EULER_GAMMA};

/// Largest `n * N` accepted by [`empirical_distance`]; the pair sum is `O((nN)^2)`.
pub const PAIR_GUARD: usize = 512;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("n * N = {n} * {big_n} exceeds the pair guard {limit}")]
    Guard { n: usize, big_n: usize, limit: usize },
    #[error("invalid experiment: {0}")]
    Invalid(String),
    #[error(transparent)]
    InvGamma(#[from] InvGammaError),
}

pub type Result<T> = std::result::Result<T, McError>;

/// One Monte-Carlo run: `N` copies of each `Z_1..Z_n` from `seed`, combined
/// with the fixed coefficients `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCExperiment {
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub seed: u64,
    pub y_spec: RhoSpec,
    pub c: Vec<f64>,
}

impl MCExperiment {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.big_n == 0 {
            return Err(McError::Invalid("n and N must be at least 1".into()));
        }
        if self.c.len() != self.n {
            return Err(McError::Invalid(format!("{} coefficients for n = {}", self.c.len(), self.n)));
        }
        if self.c.iter().any(|c| !c.is_finite()) {
            return Err(McError::Invalid("non-finite coefficient".into()));
        }
        self.y_spec.validate().map_err(|e| McError::Invalid(e.to_string()))?;
        if self.n * self.big_n > PAIR_GUARD {
            return Err(McError::Guard { n: self.n, big_n: self.big_n, limit: PAIR_GUARD });
        }
        Ok(())
    }
}

/// Generator for the substream of `Z_{k,j}` under `seed`.
pub fn stream_rng(seed: u64, k: usize, j: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(((k as u64) << 32) | j as u64);
    rng
}

fn unit_exponential(rng: &mut ChaCha20Rng) -> f64 {
    // 1 - U lies in (0, 1]
    -(1.0 - rng.random::<f64>()).ln()
}

/// `Z_k = Y / X_k` with `X_k` a sum of `k` unit exponentials and `Y` drawn after it.
pub fn sample_zk(k: usize, y_spec: RhoSpec, rng: &mut ChaCha20Rng) -> f64 {
    assert!(k >= 1);
    let x: f64 = (0..k).map(|_| unit_exponential(rng)).sum();
    let y = match y_spec {
        RhoSpec::DiracOne => 1.0,
        RhoSpec::Exponential { lambda } => unit_exponential(rng) / lambda,
    };
    y / x
}

/// `thetas[k-1][j] = Z_{k,j}` for `k <= n`, `j < N`.
pub fn sample_set(exp: &MCExperiment) -> Vec<Vec<f64>> {
    (1..=exp.n)
        .map(|k| (0..exp.big_n).map(|j| sample_zk(k, exp.y_spec, &mut stream_rng(exp.seed, k, j))).collect())
        .collect()
}

/// Deterministic ingredients shared by all seeds of one coefficient vector:
/// the Gram system of `g_1..g_n`, and critical-line samples giving
/// `<g_k, e_theta>` for any `theta`.
#[derive(Debug, Clone)]
pub struct McContext {
    pub y_spec: RhoSpec,
    pub c: Vec<f64>,
    pub system: GramSystem,
    /// `||chi - sum c_k g_k||^2` for the fixed `c`.
    pub d2_fixed: f64,
    /// `c^T G c`.
    pub ctgc: f64,
    pub pair_options: FracPairOptions,
    rule: CompositeRule,
    /// `sum_k c_k hat g_k(s) conj(zeta(s)/s)` at the nodes, without `theta`.
    kernel: Vec<Complex64>,
}

impl McContext {
    pub fn new(y_spec: RhoSpec, c: &[f64]) -> Result<Self> {
        let n = c.len();
        if n == 0 {
            return Err(McError::Invalid("no coefficients".into()));
        }
        let (system, _) = mellin_gram_system(n, y_spec, 8)?;
        let gc: Vec<f64> = (0..n).map(|i| (0..n).map(|j| system.g[i][j] * c[j]).sum()).collect();
        let ctgc: f64 = c.iter().zip(&gc).map(|(a, b)| a * b).sum();
        let ctb: f64 = c.iter().zip(&system.b).map(|(a, b)| a * b).sum();
        let d2_fixed = 1.0 - 2.0 * ctb + ctgc;

        // |integrand| ~ t^{n-3} e^{-pi t/2}
        let t_max = 36.0 + 2.0 * n as f64;
        let rule = CompositeRule::new(0.0, t_max, (8.0 * t_max) as usize);
        let mut lnf = vec![0.0; n];
        for k in 1..n {
            lnf[k] = lnf[k - 1] + (k as f64).ln();
        }
        let kernel = rule
            .nodes
            .iter()
            .map(|&t| {
                let s = critical(t);
                let phi = phi_invgamma(t, y_spec);
                // hat g_k = -phi P_{k-1}/(k-1)!, hat e_theta = -theta^s zeta(s)/s
                let sum: Complex64 =
                    (0..n).map(|k| phi * pochhammer_eval(k, s) * (c[k] * (-lnf[k]).exp())).sum();
                sum * (zeta_strip(s).expect("critical line") / s).conj()
            })
            .collect();
        Ok(McContext {
            y_spec,
            c: c.to_vec(),
            system,
            d2_fixed,
            ctgc,
            pair_options: FracPairOptions::fast(),
            rule,
            kernel,
        })
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    /// `<sum_k c_k g_k, e_theta> = (1/pi) Re int_0^T K(t) theta^{1/2 - it} dt`.
    pub fn combo_inner(&self, theta: f64) -> f64 {
        let lt = theta.ln();
        let vals: Vec<f64> = self
            .rule
            .nodes
            .iter()
            .zip(&self.kernel)
            .map(|(&t, k)| (k * Complex64::from_polar(1.0, -t * lt)).re)
            .collect();
        self.rule.integrate(&vals).0 * theta.sqrt() / std::f64::consts::PI
    }
}

/// Per-seed outcome; `witness_thetas[k-1]` are the sampled `Z_{k,j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRecord {
    pub seed: u64,
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub d2: f64,
    /// `int (sum_k c_k (g_k - mean_j e_{Z_{k,j}}))^2 dt` for this sample.
    pub r2: f64,
    pub witness_thetas: Vec<Vec<f64>>,
}

/// `(d^2, r2)` for given dilations `thetas[k-1][j]`, each weighted by `c_k / N`
/// with `N = thetas[k-1].len()`.
pub fn distance_for_thetas(ctx: &McContext, thetas: &[Vec<f64>]) -> (f64, f64) {
    assert_eq!(thetas.len(), ctx.n());
    let points: Vec<(f64, f64)> = thetas
        .iter()
        .enumerate()
        .flat_map(|(k, row)| {
            let w = ctx.c[k] / row.len() as f64;
            row.iter().map(move |&th| (th, w))
        })
        .collect();

    let mut chi = 0.0;
    let mut combo = 0.0;
    for &(th, w) in &points {
        chi += w * indicator_inner(th);
        combo += w * ctx.combo_inner(th);
    }
    // int {1/t}^2 dt = ln(2 pi) - gamma
    let self_pair = (2.0 * std::f64::consts::PI).ln() - EULER_GAMMA;
    let mut pairs = 0.0;
    for (i, &(a, wa)) in points.iter().enumerate() {
        pairs += wa * wa * a * self_pair;
        for &(b, wb) in &points[..i] {
            pairs += 2.0 * wa * wb * dilation_inner(a, b, &ctx.pair_options);
        }
    }
    let d2 = 1.0 - 2.0 * chi + pairs;
    let r2 = ctx.ctgc - 2.0 * combo + pairs;
    (d2.max(0.0), r2.max(0.0))
}

/// Samples the experiment and evaluates [`distance_for_thetas`].
pub fn empirical_distance(ctx: &McContext, exp: &MCExperiment) -> Result<McRecord> {
    exp.validate()?;
    if exp.c != ctx.c || exp.y_spec != ctx.y_spec {
        return Err(McError::Invalid("experiment does not match the prepared context".into()));
    }
    let thetas = sample_set(exp);
    let (d2, r2) = distance_for_thetas(ctx, &thetas);
    Ok(McRecord { seed: exp.seed, n: exp.n, big_n: exp.big_n, d2, r2, witness_thetas: thetas })
}

/// Runs every seed at every `N` (seeds in parallel, results in seed order).
pub fn run_experiments(ctx: &McContext, seeds: &[u64], big_ns: &[usize]) -> Result<Vec<Vec<McRecord>>> {
    big_ns
        .iter()
        .map(|&big_n| {
            seeds
                .par_iter()
                .map(|&seed| {
                    let exp = MCExperiment { n: ctx.n(), big_n, seed, y_spec: ctx.y_spec, c: ctx.c.clone() };
                    empirical_distance(ctx, &exp)
                })
                .collect()
        })
        .collect()
}

/// Type-7 (linear interpolation) quantile of unsorted data.
pub fn quantile(data: &[f64], q: f64) -> f64 {
    let mut v = data.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    #[serde(rename = "N")]
    pub big_n: usize,
    pub median_d2: f64,
    pub q25: f64,
    pub q75: f64,
    pub mean_d2: f64,
    /// Standard error of the median from the interquartile range,
    /// `1.253 (IQR / 1.349) / sqrt(seeds)`.
    pub se_median: f64,
    /// Median over seeds of the per-sample `r2`.
    pub median_r2: f64,
    pub seeds: usize,
}

pub fn summarize(records: &[McRecord]) -> SummaryRow {
    let d2: Vec<f64> = records.iter().map(|r| r.d2).collect();
    let r2: Vec<f64> = records.iter().map(|r| r.r2).collect();
    let (q25, q75) = (quantile(&d2, 0.25), quantile(&d2, 0.75));
    let m = records.len() as f64;
    SummaryRow {
        big_n: records[0].big_n,
        median_d2: quantile(&d2, 0.5),
        q25,
        q75,
        mean_d2: d2.iter().sum::<f64>() / m,
        se_median: 1.253 * (q75 - q25) / 1.349 / m.sqrt(),
        median_r2: quantile(&r2, 0.5),
        seeds: records.len(),
    }
}

/// Seed whose `d^2` is smallest, with its sampled `theta` values.
pub fn best_witness(records: &[McRecord]) -> &McRecord {
    records.iter().min_by(|a, b| a.d2.total_cmp(&b.d2)).expect("at least one record")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    #[serde(rename = "N")]
    pub big_n: usize,
    /// Sampled `int Var({Z_k/t}) dt`, `k = 1..n`.
    pub var_integrals: Vec<f64>,
    /// `(1/N) sum c_k^2 sum_k int Var`.
    pub r2_bound: f64,
    pub mean_d2: f64,
    pub se_mean: f64,
    /// `mean d^2 - ||chi - sum c_k g_k||^2`.
    pub excess: f64,
    /// `mean d^2 <= 2 D^2 + 2 R^2 + 3 SE`.
    pub holds: bool,
}

/// `int Var({Z_k/t}) dt = (ln 2pi - gamma) E[Z_k] - ||g_k||^2`, with `E[Z_k]`
/// replaced by the mean of `samples` draws (the exact value is infinite for
/// `k = 1`, so the estimate grows with the sample size there).
pub fn variance_integrals(ctx: &McContext, seed: u64, samples: usize) -> Vec<f64> {
    let c = (2.0 * std::f64::consts::PI).ln() - EULER_GAMMA;
    (1..=ctx.n())
        .map(|k| {
            let mut rng = stream_rng(seed, k, u32::MAX as usize);
            let mean = (0..samples).map(|_| sample_zk(k, ctx.y_spec, &mut rng)).sum::<f64>() / samples as f64;
            (c * mean - ctx.system.g[k - 1][k - 1]).max(0.0)
        })
        .collect()
}

pub fn variance_bound_check(ctx: &McContext, records: &[McRecord], var_integrals: &[f64]) -> VarianceReport {
    let big_n = records[0].big_n;
    let m = records.len() as f64;
    let mean_d2 = records.iter().map(|r| r.d2).sum::<f64>() / m;
    let var = records.iter().map(|r| (r.d2 - mean_d2).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
    let se_mean = (var / m).sqrt();
    let c2: f64 = ctx.c.iter().map(|c| c * c).sum();
    let r2_bound = c2 * var_integrals.iter().sum::<f64>() / big_n as f64;
    VarianceReport {
        big_n,
        var_integrals: var_integrals.to_vec(),
        r2_bound,
        mean_d2,
        se_mean,
        excess: mean_d2 - ctx.d2_fixed,
        holds: mean_d2 <= 2.0 * ctx.d2_fixed + 2.0 * r2_bound + 3.0 * se_mean,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub k: usize,
    /// `k E[Z_k]` in closed form.
    pub closed: f64,
    /// `k` times the sample mean.
    pub sampled: f64,
    /// `k` times the standard error of the sample mean.
    pub se: f64,
}

impl MomentRow {
    pub fn within(&self, n_se: f64) -> bool {
        (self.sampled - self.closed).abs() <= n_se * self.se
    }
}

/// `k E[Z_k]` against `k` times the mean of `samples` draws, `k = 2..=k_max`.
pub fn moment_diagnostic(y_spec: RhoSpec, k_max: usize, samples: usize, seed: u64) -> Vec<MomentRow> {
    (2..=k_max)
        .map(|k| {
            let mut rng = stream_rng(seed, k, u32::MAX as usize - 1);
            let z: Vec<f64> = (0..samples).map(|_| sample_zk(k, y_spec, &mut rng)).collect();
            let m = samples as f64;
            let mean = z.iter().sum::<f64>() / m;
            let var = z.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
            let kf = k as f64;
            MomentRow { k, closed: kf * moment_z(k, 1.0, y_spec), sampled: kf * mean, se: kf * (var / m).sqrt() }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_positive_and_reproducible() {
        let exp = MCExperiment { n: 3, big_n: 20, seed: 7, y_spec: RhoSpec::Exponential { lambda: 1.0 }, c: vec![1.0; 3] };
        let a = sample_set(&exp);
        assert!(a.iter().flatten().all(|&z| z > 0.0));
        assert_eq!(a, sample_set(&exp));
        // substreams do not depend on N
        let b = sample_set(&MCExperiment { big_n: 5, ..exp.clone() });
        assert_eq!(b[2][..], a[2][..5]);
        let other = sample_set(&MCExperiment { seed: 8, ..exp });
        assert_ne!(a, other);
    }

    #[test]
    fn guard_and_shape_errors() {
        let exp = MCExperiment { n: 2, big_n: 257, seed: 0, y_spec: RhoSpec::DiracOne, c: vec![0.0; 2] };
        assert!(matches!(exp.validate(), Err(McError::Guard { limit: 512, .. })));
        let exp = MCExperiment { big_n: 4, c: vec![1.0], ..exp };
        assert!(matches!(exp.validate(), Err(McError::Invalid(_))));
    }

    #[test]
    fn quantiles() {
        let d = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(quantile(&d, 0.5), 2.5);
        assert_eq!(quantile(&d, 0.0), 1.0);
        assert_eq!(quantile(&d, 1.0), 4.0);
    }
}
