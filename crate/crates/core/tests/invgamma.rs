use nblab::family_classical::indicator_inner;
use nblab::family_invgamma::{
    distance_table_invgamma, gram_entry_invgamma, gram_entry_time_domain, gx_invgamma, mellin_gram_system,
    rhs_entry_invgamma, InvGammaOptions,
};
use nblab::quad::{self, DecayHint, Integrand, QuadOptions};
use nblab::specfun::RhoSpec;

const DIRAC: RhoSpec = RhoSpec::DiracOne;
const EXP1: RhoSpec = RhoSpec::Exponential { lambda: 1.0 };

#[test]
fn bernstein_entries_match_time_domain_product() {
    for spec in [DIRAC, EXP1] {
        for n in 0..3 {
            for m in n..3 {
                let b = gram_entry_invgamma(n, m, spec).unwrap().value;
                let o = gram_entry_time_domain(n + 1, m + 1, spec, 1e-10).unwrap();
                assert!((b - o).abs() <= 1e-7, "{} ({n},{m}): {b} vs {o}", spec.label());
            }
        }
    }
}

#[test]
fn bernstein_entries_match_critical_line() {
    for spec in [DIRAC, EXP1] {
        let (ms, _) = mellin_gram_system(4, spec, 8).unwrap();
        for n in 0..4 {
            for m in n..4 {
                let b = gram_entry_invgamma(n, m, spec).unwrap().value;
                assert!((b - ms.g[n][m]).abs() <= 1e-9, "{} ({n},{m}): {b} vs {}", spec.label(), ms.g[n][m]);
            }
        }
    }
}

#[test]
fn dirac_22_entry_is_classical_g11_minus_half() {
    // frozen from the two routes above
    let v = gram_entry_invgamma(1, 1, DIRAC).unwrap().value;
    assert!((v - 0.760_661_401_5).abs() < 1e-9, "{v}");
}

/// `E psi(Z_k)` with `psi(theta) = int_0^1 {theta/t} dt`, `Z_k = 1/X_k`; psi has kinks at
/// integer `theta`, i.e. at `x = 1/M`.
fn rhs_dirac_by_expectation(k: usize) -> f64 {
    let lnf: f64 = (1..k).map(|j| (j as f64).ln()).sum();
    let dens = move |x: f64| ((k as f64 - 1.0) * x.ln() - x - lnf).exp();
    let m_max = 100_000;
    let mut pts: Vec<f64> = (1..=m_max).map(|m| 1.0 / m as f64).collect();
    pts.reverse();
    let head = quad::adaptive(&|x: f64| indicator_inner(1.0 / x) * dens(x), &pts, QuadOptions::abs(1e-12))
        .unwrap()
        .value;
    // psi -> 1/2 on (0, 1/m_max); the density integrates to delta^k / k! there
    let delta = 1.0 / m_max as f64;
    let sliver = 0.5 * delta.powi(k as i32) / (1..=k).map(|j| j as f64).product::<f64>();
    let head = head + sliver;
    let tail = quad::integrate_from(
        &Integrand::new(move |x: f64| indicator_inner(1.0 / x) * dens(x)).with_decay(DecayHint::Exponential(1.0)),
        1.0,
        QuadOptions::abs(1e-14),
    )
    .unwrap()
    .value;
    head + tail
}

#[test]
fn rhs_matches_expectation_route() {
    for k in 1..=3 {
        let a = rhs_entry_invgamma(k, DIRAC, 1e-11).unwrap().value;
        let b = rhs_dirac_by_expectation(k);
        assert!((a - b).abs() < 1e-8, "k = {k}: {a} vs {b}");
    }
}

#[test]
fn gx_k2_formula_vs_definition() {
    // E{1/(X t)} at t = 1 for X ~ Gamma(2, 1), jumps at x = 1/j
    let mut pts: Vec<f64> = (1..=4000).map(|j| 1.0 / j as f64).collect();
    pts.reverse();
    let f = |x: f64| { let y = 1.0 / x; (y - y.floor()) * x * (-x).exp() };
    let head = quad::adaptive(&f, &pts, QuadOptions::abs(1e-13)).unwrap().value;
    let below = 0.5 * (1.0 / 4000f64).powi(2) / 2.0;
    let tail = quad::integrate_from(
        &Integrand::new(|x: f64| (-x).exp()).with_decay(DecayHint::Exponential(1.0)),
        1.0,
        QuadOptions::abs(1e-14),
    )
    .unwrap()
    .value;
    let want = head + below + tail;
    let got = gx_invgamma(2, 1.0, DIRAC).unwrap();
    assert!((got - want).abs() < 1e-7, "{got} vs {want}");
}

#[test]
fn dual_route_distances() {
    // frozen dual-route values
    let expected = [
        (DIRAC, [0.893_392_99, 0.499_293_79, 0.129_455_77, 0.126_060_16, 0.111_843_94, 0.089_098_57]),
        (EXP1, [0.881_011_68, 0.509_713_73, 0.211_108_34, 0.188_046_65, 0.145_423_47, 0.099_776_95]),
    ];
    for (spec, want) in expected {
        let table = distance_table_invgamma(6, spec, &InvGammaOptions::default()).unwrap();
        let mut last = 1.0;
        for (r, w) in table.iter().zip(want) {
            let cc = r.d2_crosscheck.unwrap();
            assert!((r.d2 - cc).abs() <= 1e-4f64.max(1e-2 * r.d2), "{} n={}", spec.label(), r.n);
            assert!(r.d2 > 0.0 && r.d2 < 1.0);
            assert!(r.d2 <= last);
            assert!((r.d2 - w).abs() < 1e-7, "{} n={}: {} vs {w}", spec.label(), r.n, r.d2);
            last = r.d2;
        }
    }
}
