//! Identity and cross-route checks, grouped into suites.
//!
//! Every check reports the measured residual next to the tolerance it is held to.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{rat, SeedFunction};
use crate::family_classical::distance_classical;
use crate::family_invgamma::{
    distance_table_invgamma, gram_entry_invgamma, gram_entry_time_domain, mellin_gram_system, InvGammaOptions,
};
use crate::family_recursive::{
    block_hankel_reorder, hankel_defect, moment, sign_strip_to_moment_matrix, MomentWeight, RecursiveBasis,
    RecursiveModel, RecursiveOptions, WeightVariant,
};
use crate::mc::{self, McContext};
use crate::oracles::zeta_borwein;
use crate::quad::{self, integrate_frac_smooth, integrate_line, DecayHint, Integrand, QuadOptions};
use crate::solver::{cholesky, DistanceReport};
use crate::specfun::{
    alouin_mellin, c64, gamma_complex, mellin_frac, pochhammer_eval, rho, zeta_strip, RhoSpec,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    pub fn new(name: impl Into<String>, residual: f64, tol: f64) -> Self {
        Check { name: name.into(), residual, tol, pass: residual <= tol, detail: None }
    }

    pub fn failed(name: impl Into<String>, detail: impl fmt::Display) -> Self {
        Check { name: name.into(), residual: f64::NAN, tol: 0.0, pass: false, detail: Some(detail.to_string()) }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{tag} {} residual={:.3e} tol={:.1e}", self.name, self.residual, self.tol)?;
        if let Some(d) = &self.detail {
            write!(f, " ({d})")?;
        }
        Ok(())
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Specfun,
    Mellin,
    Gram,
    Distance,
    Mc,
    All,
}

impl FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "specfun" => Ok(Suite::Specfun),
            "mellin" => Ok(Suite::Mellin),
            "gram" => Ok(Suite::Gram),
            "distance" => Ok(Suite::Distance),
            "mc" => Ok(Suite::Mc),
            "all" => Ok(Suite::All),
            _ => Err(format!("unknown suite '{s}' (expected specfun, mellin, gram, distance, mc or all)")),
        }
    }
}

pub fn run_suite(suite: Suite) -> Vec<Check> {
    match suite {
        Suite::Specfun => [identities(), zeta_crossval()].concat(),
        Suite::Mellin => [mellin_frac_checks(), xi_normalization(), b_recursion(), invgamma_plancherel()].concat(),
        Suite::Gram => [bernstein_gram(), recursive_structure()].concat(),
        Suite::Distance => distance_dual_routes(),
        Suite::Mc => [monte_carlo(32), moment_condition()].concat(),
        Suite::All => [Suite::Specfun, Suite::Mellin, Suite::Gram, Suite::Distance, Suite::Mc]
            .into_iter()
            .flat_map(run_suite)
            .collect(),
    }
}

/// Shared `Xi`-seed model with `r = 1/2` and `k <= 6`.
pub fn xi_model() -> &'static RecursiveModel {
    static M: OnceLock<RecursiveModel> = OnceLock::new();
    M.get_or_init(|| RecursiveModel::build(&RecursiveBasis::xi(6), RecursiveOptions::default()))
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

fn max_of(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, |m, x| if x.is_nan() || m.is_nan() { f64::NAN } else { m.max(x) })
}

/// Reflection, Pochhammer-Gamma, Beta-type Mellin pair, fractional-part Mellin
/// transform and the Exponential `rho`.
pub fn identities() -> Vec<Check> {
    let mut out = Vec::new();

    let pts = [c64(0.3, 0.0), c64(0.5, 1.0), c64(0.25, -3.0), c64(0.7, 10.0), c64(0.1, 0.5), c64(-1.5, 2.0)];
    let r = max_of(pts.iter().map(|&s| {
        let lhs = gamma_complex(s).unwrap() * gamma_complex(1.0 - s).unwrap() * (PI * s).sin();
        (lhs - PI).norm() / PI
    }));
    out.push(Check::new("gamma reflection", r, 1e-12));

    let r = max_of((0..=12).flat_map(|k| {
        pts[..4].iter().map(move |&s| {
            let g = gamma_complex(k as f64 + 1.0 - s).unwrap() / gamma_complex(1.0 - s).unwrap();
            rel(pochhammer_eval(k, s), g)
        })
    }));
    out.push(Check::new("pochhammer gamma ratio (k <= 12)", r, 1e-11));

    out.push(alouin_check());
    out.extend(mellin_frac_checks());

    let mut worst: f64 = 0.0;
    for lambda in [0.5, 1.0, 2.0] {
        let spec = RhoSpec::Exponential { lambda };
        for t in [0.25, 1.0, 4.0] {
            let a = lambda * t;
            let h = |x: f64| a * (-a * x).exp();
            let j = ((40.0 / a).ceil() as usize).max(8);
            match integrate_frac_smooth(&h, &[], j, QuadOptions::abs(1e-12)) {
                Ok(q) => worst = worst.max((q.value - rho(spec, t).unwrap()).abs()),
                Err(e) => return [out, vec![Check::failed("rho exponential vs expectation", e)]].concat(),
            }
        }
    }
    out.push(Check::new("rho exponential vs expectation", worst, 1e-8));
    out
}

fn alouin_check() -> Check {
    let name = "mellin of (1+x)^{-k} vs quadrature";
    let mut worst: f64 = 0.0;
    for k in 1..=3usize {
        for s in [c64(0.3, 0.0), c64(0.5, 2.0), c64(0.7, -5.0), c64(0.5, 0.0)] {
            let kf = k as f64;
            // x = e^y
            let f = Integrand::new(move |y: f64| {
                let l1p = if y > 0.0 { y + (-y).exp().ln_1p() } else { y.exp().ln_1p() };
                (s * y - kf * l1p).exp()
            })
            .with_decay(DecayHint::Exponential(s.re.min(kf - s.re)));
            match integrate_line(&f, 1e-11, false, false) {
                Ok(q) => worst = worst.max((q.value - alouin_mellin(k, s).unwrap()).norm()),
                Err(e) => return Check::failed(name, e),
            }
        }
    }
    Check::new(name, worst, 1e-6)
}

/// `int_0^inf {v} v^{-s-1} dv` by quadrature over unit panels and an
/// Euler-Maclaurin tail.
pub fn mellin_frac_by_quadrature(s: Complex64, j: usize) -> quad::Result<Complex64> {
    let h = |v: f64| Complex64::from(v).powc(-s - 1.0);
    let pts: Vec<f64> = (1..=j).map(|i| i as f64).collect();
    let head = quad::adaptive(&|v: f64| h(v) * (v - v.floor()), &pts, QuadOptions::abs(1e-11))?;
    let jf = j as f64;
    let h2 = (s + 1.0) * (s + 2.0) * Complex64::from(jf).powc(-s - 3.0);
    let tail = 0.5 * Complex64::from(jf).powc(-s) / s - h(jf) / 12.0 + h2 / 720.0;
    Ok(1.0 / (1.0 - s) + head.value + tail)
}

pub fn mellin_frac_checks() -> Vec<Check> {
    let name = "mellin of {1/x} vs quadrature (20 strip points)";
    let mut worst: f64 = 0.0;
    for sigma in [0.2, 0.35, 0.5, 0.65, 0.8] {
        for t in [0.0, 2.0, 7.5, 21.0] {
            let s = c64(sigma, t);
            match mellin_frac_by_quadrature(s, 2000) {
                Ok(q) => worst = worst.max((q - mellin_frac(s).unwrap()).norm()),
                Err(e) => return vec![Check::failed(name, e)],
            }
        }
    }
    vec![Check::new(name, worst, 1e-6)]
}

pub fn zeta_crossval() -> Vec<Check> {
    let mut out = Vec::new();
    for sigma in [0.3, 0.5, 0.7] {
        let r = max_of((0..=40).map(|i| {
            let s = c64(sigma, 2.5 * i as f64);
            rel(zeta_strip(s).unwrap(), zeta_borwein(s))
        }));
        out.push(Check::new(format!("zeta euler-maclaurin vs eta oracle, sigma = {sigma}, t in [0, 100]"), r, 1e-9));
    }
    let z = zeta_strip(c64(0.5, 14.134725)).unwrap().norm();
    out.push(Check::new("|zeta(1/2 + 14.134725i)|", z, 1e-4));
    out
}

pub fn bernstein_gram() -> Vec<Check> {
    let mut out = Vec::new();
    for spec in [RhoSpec::DiracOne, RhoSpec::Exponential { lambda: 1.0 }] {
        let name = format!("bernstein gram vs time-domain product, n, m <= 2, {}", spec.label());
        let mut worst: f64 = 0.0;
        let mut err = None;
        'outer: for n in 0..3 {
            for m in n..3 {
                let b = gram_entry_invgamma(n, m, spec);
                let o = gram_entry_time_domain(n + 1, m + 1, spec, 1e-10);
                match (b, o) {
                    (Ok(b), Ok(o)) => worst = worst.max((b.value - o).abs()),
                    (Err(e), _) | (_, Err(e)) => {
                        err = Some(e);
                        break 'outer;
                    }
                }
            }
        }
        out.push(match err {
            Some(e) => Check::failed(name, e),
            None => Check::new(name, worst, 1e-5),
        });
    }
    out
}

/// Bernstein Gram entries against the critical-line (Plancherel) Gram.
pub fn invgamma_plancherel() -> Vec<Check> {
    let mut out = Vec::new();
    for spec in [RhoSpec::DiracOne, RhoSpec::Exponential { lambda: 1.0 }] {
        let name = format!("bernstein gram vs critical-line gram, n, m <= 3, {}", spec.label());
        let ms = match mellin_gram_system(4, spec, 8) {
            Ok((ms, _)) => ms,
            Err(e) => {
                out.push(Check::failed(name, e));
                continue;
            }
        };
        let mut worst: f64 = 0.0;
        for n in 0..4 {
            for m in n..4 {
                match gram_entry_invgamma(n, m, spec) {
                    Ok(b) => worst = worst.max((b.value - ms.g[n][m]).abs()),
                    Err(_) => worst = f64::NAN,
                }
            }
        }
        out.push(Check::new(name, worst, 1e-7));
    }
    out
}

pub fn recursive_structure() -> Vec<Check> {
    let model = xi_model();
    let ms = model.weight.moments();
    let m0 = ms[0].value;
    let mut out = Vec::new();

    let r = max_of((0..5).map(|k| model.gram_entry_complex(k, k + 1).map_or(f64::NAN, |z| z.norm() / m0)));
    out.push(Check::new("G_{k,k+1} / m_0, k <= 5", r, 1e-8));

    let g13 = model.gram_entry(0, 2).map_or(f64::NAN, |v| v.value);
    let g22 = model.gram_entry(1, 1).map_or(f64::NAN, |v| v.value);
    out.push(Check::new("G_13 + G_22 relative", (g13 + g22).abs() / g22.abs(), 1e-8));

    let third = RecursiveBasis::constant(SeedFunction::xi_seed(), rat(1, 3), 5).expect("decaying seed");
    let m3 = RecursiveModel::build(&third, RecursiveOptions::default());
    let g = |k, j| m3.gram_entry(k, j).map_or(f64::NAN, |v| v.value);
    let r = max_of((0..4).flat_map(|k| (1..5).map(move |j| (k, j))).map(|(k, j)| {
        (g(k, j) + g(k + 1, j - 1) - (1.0 - 2.0 / 3.0) * g(k, j - 1)).abs()
    }));
    out.push(Check::new("gram recurrence residual, r = 1/3", r, 1e-7));

    match model.gram(4) {
        Ok(g4) => {
            let t = block_hankel_reorder(&g4);
            let m = |j: usize| ms[j].value;
            let want = [
                [m(0), -m(2), 0.0, 0.0],
                [-m(2), m(4), 0.0, 0.0],
                [0.0, 0.0, m(2), -m(4)],
                [0.0, 0.0, -m(4), m(6)],
            ];
            let r = max_of((0..4).flat_map(|i| (0..4).map(move |j| (i, j))).map(|(i, j)| {
                (t.g[i][j] - want[i][j]).abs() / m(6)
            }));
            out.push(Check::new("block-hankel reorder layout (n = 4)", r, 1e-15));
        }
        Err(e) => out.push(Check::failed("block-hankel reorder layout (n = 4)", e)),
    }

    let name = "moment matrix hankel and positive definite, n <= 6";
    let mut defect: f64 = 0.0;
    let mut bad = None;
    for n in 1..=6 {
        match model.gram(n).map_err(|e| e.to_string()).and_then(|g| {
            sign_strip_to_moment_matrix(&g, 1e-8 * m0).map_err(|e| e.to_string())
        }) {
            Ok(h) => {
                defect = defect.max(hankel_defect(&h));
                if cholesky(&h).is_err() {
                    bad = Some(format!("not positive definite at n = {n}"));
                }
            }
            Err(e) => bad = Some(e),
        }
    }
    out.push(match bad {
        Some(d) => Check::failed(name, d),
        None => Check::new(name, defect, 0.0),
    });
    out
}

pub fn xi_normalization() -> Vec<Check> {
    let model = xi_model();
    let xi = MomentWeight::new(WeightVariant::XiSquared, 4, 1);
    let r = max_of([0, 2, 4].map(|j| {
        let a = model.weight.moment(j).map_or(f64::NAN, |v| v.value);
        let b = moment(&xi, j).unwrap_or(f64::NAN);
        (a - b).abs() / b
    }));
    vec![Check::new("m_0, m_2, m_4: Xi(t)^2 vs |zeta/s seed transform|^2", r, 1e-8)]
}

pub fn b_recursion() -> Vec<Check> {
    let model = xi_model();
    let name = "b_1..b_3 recursion vs direct mellin";
    let rec = match model.rhs_by_recursion(12.0) {
        Ok(r) => r,
        Err(e) => return vec![Check::failed(name, e)],
    };
    let r = max_of((0..3).map(|k| model.rhs_direct(k).map_or(f64::NAN, |(d, _)| (d.value - rec[k].value).abs())));
    vec![Check::new(name, r, 1e-6)]
}

fn dual_route_checks(label: &str, rows: &[DistanceReport]) -> Vec<Check> {
    let agree = max_of(rows.iter().map(|r| match r.d2_crosscheck {
        Some(c) => (r.d2 - c).abs() / 1e-4f64.max(1e-2 * r.d2),
        None => f64::NAN,
    }));
    let mut violations = 0.0;
    let mut last = 1.0;
    for r in rows {
        if !(r.d2 > 0.0 && r.d2 < 1.0 && r.d2 <= last) {
            violations += 1.0;
        }
        last = r.d2;
    }
    let d2s: Vec<String> = rows.iter().map(|r| format!("{:.6}", r.d2)).collect();
    vec![
        Check::new(format!("{label} D2 dual route, n <= {} (scaled)", rows.len()), agree, 1.0),
        Check::new(format!("{label} D2 in (0, 1) and nonincreasing"), violations, 0.0).with_detail(d2s.join(" ")),
    ]
}

pub fn distance_dual_routes() -> Vec<Check> {
    let mut out = Vec::new();
    match (1..=10).map(distance_classical).collect::<Result<Vec<_>, _>>() {
        Ok(rows) => out.extend(dual_route_checks("classical", &rows)),
        Err(e) => out.push(Check::failed("classical D2", e)),
    }
    for spec in [RhoSpec::DiracOne, RhoSpec::Exponential { lambda: 1.0 }] {
        let label = format!("invgamma {}", spec.label());
        match distance_table_invgamma(6, spec, &InvGammaOptions::default()) {
            Ok(rows) => out.extend(dual_route_checks(&label, &rows)),
            Err(e) => out.push(Check::failed(label, e)),
        }
    }
    match (1..=6).map(|n| xi_model().distance(n)).collect::<Result<Vec<_>, _>>() {
        Ok(rows) => out.extend(dual_route_checks("recursive xi", &rows)),
        Err(e) => out.push(Check::failed("recursive xi D2", e)),
    }
    out
}

/// Fixed `c` from the `n = 2` DiracOne distance, `seeds` seeds, `N` in {4, 16, 32, 64}.
pub fn monte_carlo(seeds: usize) -> Vec<Check> {
    let spec = RhoSpec::DiracOne;
    let rep = match distance_table_invgamma(2, spec, &InvGammaOptions::default()) {
        Ok(mut rows) => rows.remove(1),
        Err(e) => return vec![Check::failed("mc coefficients", e)],
    };
    let ctx = match McContext::new(spec, &rep.coefficients) {
        Ok(c) => c,
        Err(e) => return vec![Check::failed("mc context", e)],
    };
    let seed_list: Vec<u64> = (0..seeds as u64).collect();
    let big_ns = [4, 16, 32, 64];
    let runs = match mc::run_experiments(&ctx, &seed_list, &big_ns) {
        Ok(r) => r,
        Err(e) => return vec![Check::failed("mc runs", e)],
    };
    let s: Vec<mc::SummaryRow> = runs.iter().map(|r| mc::summarize(r)).collect();
    let medians = format!("medians {:.4} {:.4} {:.4}", s[0].median_d2, s[1].median_d2, s[3].median_d2);
    let mut out = vec![Check::new(
        "median d2 decreasing over N = 4, 16, 64",
        (s[1].median_d2 - s[0].median_d2).max(s[3].median_d2 - s[1].median_d2).max(0.0),
        0.0,
    )
    .with_detail(medians)];
    out.push(
        Check::new(
            "|median d2 (N = 64) - D2| within 2 R2 + 3 SE",
            (s[3].median_d2 - rep.d2).abs(),
            2.0 * s[3].median_r2 + 3.0 * s[3].se_median,
        )
        .with_detail(format!("D2 = {:.6}", rep.d2)),
    );
    let ratio = s[3].median_r2 / s[2].median_r2;
    out.push(Check::new("R2 ratio N = 32 -> 64 within [0.3, 0.7]", (ratio - 0.5).abs(), 0.2).with_detail(format!("ratio {ratio:.3}")));
    let v = mc::variance_integrals(&ctx, 1, 20_000);
    let worst = runs
        .iter()
        .map(|r| {
            let b = mc::variance_bound_check(&ctx, r, &v);
            (b.mean_d2 - 2.0 * ctx.d2_fixed - 2.0 * b.r2_bound) / b.se_mean
        })
        .fold(f64::NEG_INFINITY, f64::max);
    out.push(Check::new("mean d2 - 2 D2 - 2 R2 bound, in units of SE", worst, 3.0));
    let w = mc::best_witness(&runs[3]);
    out.push(Check::new("best seed d2 at N = 64 against 4 D2", w.d2, 4.0 * rep.d2).with_detail(format!("seed {}", w.seed)));
    out
}

pub fn moment_condition() -> Vec<Check> {
    let rows = mc::moment_diagnostic(RhoSpec::DiracOne, 20, 20_000, 2024);
    let closed = max_of(rows.iter().map(|r| r.closed));
    let z = max_of(rows.iter().map(|r| (r.sampled - r.closed).abs() / r.se));
    vec![
        Check::new("k E[Z_k], k = 2..20 (bounded by 2)", closed, 2.0),
        Check::new("sampled k E[Z_k] vs closed form, in units of SE", z, 3.0),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names() {
        assert_eq!("gram".parse::<Suite>().unwrap(), Suite::Gram);
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn check_display_and_nan() {
        let c = Check::new("x", 1e-9, 1e-8);
        assert!(c.pass);
        assert!(c.to_string().starts_with("PASS x"));
        assert!(!Check::new("y", f64::NAN, 1.0).pass);
        assert!(!Check::failed("z", "boom").pass);
    }

    #[test]
    fn mellin_frac_quadrature_route() {
        let s = c64(0.5, 3.0);
        let q = mellin_frac_by_quadrature(s, 2000).unwrap();
        assert!((q - mellin_frac(s).unwrap()).norm() < 1e-8);
    }
}
