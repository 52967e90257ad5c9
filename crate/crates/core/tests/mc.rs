use nblab::family_classical::{gram_entry_classical, indicator_inner, rhs_entry_classical};
use nblab::family_invgamma::gx_invgamma;
use nblab::mc::*;
use nblab::quad::{integrate_frac_smooth, QuadOptions};
use nblab::specfun::{frac, RhoSpec};

const DIRAC: RhoSpec = RhoSpec::DiracOne;
const EXP1: RhoSpec = RhoSpec::Exponential { lambda: 1.0 };

fn draws(k: usize, spec: RhoSpec, m: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, k, 0);
    (0..m).map(|_| sample_zk(k, spec, &mut rng)).collect()
}

fn mean_se(x: &[f64]) -> (f64, f64) {
    let m = x.len() as f64;
    let mean = x.iter().sum::<f64>() / m;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

fn kolmogorov_p(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    let p: f64 = (1..=100).map(|k| {
        let k = k as f64;
        2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp()
    }).sum();
    p.clamp(0.0, 1.0)
}

#[test]
fn dirac_z1_is_reciprocal_exponential() {
    let n = 100_000;
    let mut z = draws(1, DIRAC, n, 11);
    z.sort_by(|a, b| a.total_cmp(b));
    let d = z
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = (-1.0 / x).exp();
            (f - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - f).abs())
        })
        .fold(0.0, f64::max);
    let p = kolmogorov_p(d, n);
    assert!(p > 0.01, "KS D = {d}, p = {p}");
    // density at the median 1/ln 2 is (ln 2)^2 / 2
    let med = quantile(&z, 0.5);
    let se = 1.0 / (2.0 * 0.5 * std::f64::consts::LN_2.powi(2) * (n as f64).sqrt());
    assert!((med - 1.0 / std::f64::consts::LN_2).abs() <= 3.0 * se, "median {med}");
}

#[test]
fn reciprocal_gamma_two_has_unit_mean() {
    let (m, se) = mean_se(&draws(2, DIRAC, 100_000, 3));
    assert!((m - 1.0).abs() <= 3.0 * se, "{m} +- {se}");
    let (m, se) = mean_se(&draws(3, EXP1, 100_000, 4));
    assert!((m - 0.5).abs() <= 3.0 * se, "{m} +- {se}");
}

#[test]
fn gx_matches_sampled_fractional_mean() {
    for (k, spec, t) in [(2, DIRAC, 0.7), (3, EXP1, 0.4)] {
        let f: Vec<f64> = draws(k, spec, 100_000, 5).iter().map(|z| frac(z / t)).collect();
        let (m, se) = mean_se(&f);
        let g = gx_invgamma(k, t, spec).unwrap();
        assert!((m - g).abs() <= 3.0 * se, "k={k}: {m} +- {se} vs {g}");
    }
}

#[test]
fn combination_inner_product_matches_time_domain() {
    // <g_k, e_theta> = int_0^inf {v} g_k(theta/v) theta v^{-2} dv
    for (k, theta) in [(1, 0.8), (2, 0.3), (2, 2.5)] {
        let mut c = vec![0.0; k];
        c[k - 1] = 1.0;
        let ctx = McContext::new(DIRAC, &c).unwrap();
        let h = |v: f64| gx_invgamma(k, theta / v, DIRAC).unwrap() * theta / (v * v);
        let td = integrate_frac_smooth(&h, &[], 48, QuadOptions::abs(1e-9)).unwrap().value;
        let m = ctx.combo_inner(theta);
        assert!((m - td).abs() <= 1e-6, "k={k}, theta={theta}: {m} vs {td}");
    }
}

#[test]
fn single_dilation_reproduces_classical_distance() {
    let g11 = gram_entry_classical(1, 1);
    for (theta, g, b) in [(1.0, g11, rhs_entry_classical(1)), (0.5, gram_entry_classical(2, 2), rhs_entry_classical(2))] {
        let c = b / g;
        let ctx = McContext::new(DIRAC, &[c]).unwrap();
        let (d2, _) = distance_for_thetas(&ctx, &[vec![theta]]);
        assert!((d2 - (1.0 - b * b / g)).abs() < 1e-12, "theta={theta}");
        assert!((indicator_inner(theta) - b).abs() < 1e-12);
    }
}

#[test]
fn reproducible_and_nonnegative() {
    let ctx = McContext::new(EXP1, &[-0.5, 1.5]).unwrap();
    let exp = MCExperiment { n: 2, big_n: 8, seed: 99, y_spec: EXP1, c: ctx.c.clone() };
    let a = empirical_distance(&ctx, &exp).unwrap();
    let b = empirical_distance(&ctx, &exp).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(a.d2.to_bits(), b.d2.to_bits());
    for seed in 0..8 {
        let r = empirical_distance(&ctx, &MCExperiment { seed, ..exp.clone() }).unwrap();
        assert!(r.d2 >= 0.0 && r.r2 >= 0.0);
    }
    let v = serde_json::to_value(&a).unwrap();
    for key in ["seed", "n", "N", "d2", "witness_thetas"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    let mismatched = MCExperiment { c: vec![1.0, 1.0], ..exp };
    assert!(matches!(empirical_distance(&ctx, &mismatched), Err(McError::Invalid(_))));
}

#[test]
fn zero_coefficients_have_zero_excess() {
    let ctx = McContext::new(DIRAC, &[0.0, 0.0]).unwrap();
    let runs = run_experiments(&ctx, &[1, 2, 3], &[4]).unwrap();
    assert!(runs[0].iter().all(|r| r.d2 == 1.0));
    let rep = variance_bound_check(&ctx, &runs[0], &variance_integrals(&ctx, 1, 1000));
    assert_eq!(rep.excess, 0.0);
    assert_eq!(rep.r2_bound, 0.0);
    assert!(rep.holds);
}

#[test]
fn deviation_shrinks_like_one_over_n() {
    let ctx = McContext::new(DIRAC, &[-0.568_495_215_854_859_3, 1.559_030_670_619_678]).unwrap();
    let seeds: Vec<u64> = (0..16).collect();
    let runs = run_experiments(&ctx, &seeds, &[32, 64]).unwrap();
    let s32 = summarize(&runs[0]);
    let s64 = summarize(&runs[1]);
    let ratio = s64.median_r2 / s32.median_r2;
    assert!((0.3..=0.7).contains(&ratio), "ratio {ratio}");
    let v = variance_integrals(&ctx, 1, 20_000);
    assert!(v.iter().all(|&x| x >= 0.0));
    for r in &runs {
        assert!(variance_bound_check(&ctx, r, &v).holds);
    }
    assert!(best_witness(&runs[1]).d2 <= 4.0 * ctx.d2_fixed);
}

#[test]
fn sampled_moment_condition() {
    for row in moment_diagnostic(DIRAC, 20, 20_000, 2024) {
        assert!((row.closed - row.k as f64 / (row.k as f64 - 1.0)).abs() < 1e-12);
        assert!(row.closed <= 2.0);
        assert!(row.within(3.0), "{row:?}");
    }
}
