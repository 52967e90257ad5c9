use nblab::family_classical::{
    dilation_inner, distance_classical, frac_pair_integral, gram_entry_classical, indicator_inner,
    rhs_entry_classical, FracPairOptions,
};
use nblab::quad::{self, periodic_product_real, InversePower, Integrand, QuadOptions, ReciprocalPeriodic};
use nblab::specfun::{frac, EULER_GAMMA};

/// I(l/k) through the periodic structure of {l v / k}{v}, period k in v.
fn frac_pair_rational(l: u64, k: u64) -> f64 {
    let c = l as f64 / k as f64;
    assert!(c >= 1.0);
    // (0, 1/c): constant c; (1/c, 1): {cv}/v with jumps at j/c
    // on (j/c, (j+1)/c) the integrand is (c v - j)/v, evaluated panel-wise to avoid jumps
    let mut head = 0.0;
    let mut j = 1u64;
    while (j as f64) / c < 1.0 {
        let lo = j as f64 / c;
        let hi = ((j + 1) as f64 / c).min(1.0);
        let jf = j as f64;
        head += quad::adaptive(&|v: f64| (c * v - jf) / v, &[lo, hi], QuadOptions::abs(1e-15)).unwrap().value;
        j += 1;
    }
    let mut kinks: Vec<f64> = (0..l).map(|j| j as f64 * k as f64 / l as f64).collect();
    kinks.extend((0..k).map(|j| j as f64));
    // offsets are measured from the start v0 = 1
    let mut kinks: Vec<f64> = kinks.iter().map(|x| (x - 1.0).rem_euclid(k as f64)).collect();
    kinks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    kinks.dedup();
    let p = |v: f64| frac(c * v) * frac(v);
    let tail =
        periodic_product_real(&p, k as f64, &kinks, 1.0, &InversePower { power: 2.0 }, QuadOptions::abs(1e-13))
            .unwrap();
    1.0 + head + tail.value
}

#[test]
fn rational_ratios_match_periodic_quadrature() {
    let o = FracPairOptions::default();
    for &(l, k) in &[(1u64, 1u64), (2, 1), (3, 2), (7, 3), (5, 4), (11, 5)] {
        let want = frac_pair_rational(l, k);
        let got = frac_pair_integral(l as f64 / k as f64, &o);
        assert!((got - want).abs() < 1e-10, "{l}/{k}: {got} vs {want}");
    }
}

/// Brute force on [0, V] with every jump as a breakpoint and the equidistributed tail 1/(4V).
fn frac_pair_brute(c: f64, v_max: f64) -> f64 {
    let mut pts: Vec<f64> = vec![0.0];
    let jumps = (c * v_max) as usize;
    pts.extend((1..=jumps).map(|j| j as f64 / c));
    pts.extend((1..=(v_max as usize)).map(|j| j as f64));
    let pts = quad::merge_breakpoints(&[pts]);
    let f = |v: f64| if v == 0.0 { c } else { frac(c * v) * frac(v) / (v * v) };
    let body = quad::adaptive(&f, &pts, QuadOptions::abs(1e-12)).unwrap();
    body.value + 0.25 / v_max
}

#[test]
fn irrational_ratios_match_brute_force() {
    let o = FracPairOptions::default();
    for &c in &[std::f64::consts::PI, 2f64.sqrt(), 1.618_033_988_749_895, 17.25 + 1e-3] {
        let want = frac_pair_brute(c, 3000.0);
        let got = frac_pair_integral(c, &o);
        assert!((got - want).abs() < 2e-7, "c = {c}: {got} vs {want}");
    }
}

#[test]
fn classical_g11_and_b1() {
    let want = (2.0 * std::f64::consts::PI).ln() - EULER_GAMMA;
    assert!((gram_entry_classical(1, 1) - want).abs() < 1e-12);
    // b_1 against the partial-sum oracle sum_m (1/m - ln(1 + 1/m)) with an Euler-Maclaurin tail
    let m_max = 100_000u64;
    let mut s = 0.0;
    for m in (1..=m_max).rev() {
        let m = m as f64;
        s += 1.0 / m - (1.0 / m).ln_1p();
    }
    let x = m_max as f64;
    s += 1.0 / (2.0 * x) - 5.0 / (12.0 * x * x);
    // sum_m (1/m - ln(1 + 1/m)) = gamma, and int_0^1 {1/t} dt = 1 - gamma
    let s = 1.0 - s;
    assert!((rhs_entry_classical(1) - s).abs() < 1e-12, "{} vs {s}", rhs_entry_classical(1));
}

#[test]
fn gram_entry_by_breakpoint_quadrature() {
    // G_{2,3} via the generic quadrature engine with declared reciprocal periodicity
    let f = Integrand::new(|t: f64| frac(1.0 / (2.0 * t)) * frac(1.0 / (3.0 * t)))
        .with_reciprocal_periodic(ReciprocalPeriodic {
            period: 6.0,
            kink_offsets: vec![0.0, 2.0, 3.0, 4.0],
            start: 0.0,
        });
    let r = quad::integrate_semiinf(&f, 1e-11).unwrap();
    assert!((r.value - gram_entry_classical(2, 3)).abs() < 1e-10);
    assert!((dilation_inner(0.5, 1.0 / 3.0, &FracPairOptions::default()) - r.value).abs() < 1e-10);
    assert!(gram_entry_classical(2, 3) == gram_entry_classical(3, 2));
}

#[test]
fn indicator_inner_by_quadrature() {
    for &theta in &[0.3, 1.0, 2.5, 7.0] {
        let f = Integrand::new(move |t: f64| frac(theta / t)).with_reciprocal_periodic(ReciprocalPeriodic {
            period: 1.0 / theta,
            kink_offsets: vec![0.0],
            start: 0.0,
        });
        let r = quad::integrate_unit(&f, 1e-11).unwrap();
        assert!((r.value - indicator_inner(theta)).abs() < 1e-10, "theta {theta}");
    }
}

#[test]
fn first_distance_value() {
    let d = distance_classical(1).unwrap();
    let b1 = rhs_entry_classical(1);
    let want = 1.0 - b1 * b1 / gram_entry_classical(1, 1);
    assert!((d.d2 - want).abs() < 1e-14);
    assert!((d.d2 - 0.8582).abs() < 1e-4);
}

#[test]
fn distances_monotone_and_crosschecked() {
    let mut last = 1.0;
    for n in 1..=10 {
        let d = distance_classical(n).unwrap();
        assert!(d.d2 <= last + 1e-14, "n = {n}");
        let cc = d.d2_crosscheck.unwrap();
        assert!((d.d2 - cc).abs() <= 1e-5, "n = {n}: {} vs {cc}", d.d2);
        assert!(d.relative_residual < 1e-10);
        last = d.d2;
    }
}
