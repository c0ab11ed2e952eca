mod common;

use common::{lambda, rel, tighter_oracle, xi_oracle, z_oracle, zeta_oracle};
use proptest::prelude::*;
use trustweave::bounds::{
    classification_pmf_bounds, convergence_rate_bound, deviation_bound_leg, deviation_bound_mal, expected_rate_bound,
    rate_asymptotes, tail_bound_p, tighter_mal_bound, total_deviation_bound, xi_value, z_value, zeta_value,
    BoundParams, BoundsReport, ClassTimes, RateEvaluator, ReportGrid,
};

/// Platoon-like parameters with an easy spectrum.
fn params() -> BoundParams {
    BoundParams {
        c: 0.9,
        gamma: 0.05,
        e_l: 0.1,
        e_m: -1.0 / 14.0,
        d_max: 5,
        malicious_links: 6,
        legit_links: 34,
        d1: 0.5,
        eta: 60.0,
        legit_count: 10,
        sigma: 0.8,
        m_sigma: 0,
        m: 1,
        b: 1.5,
        v_max: 0.15,
        v_min: 0.05,
        t_f: ClassTimes::Fixed(20),
        t_f_m: ClassTimes::Fixed(20),
    }
}

#[test]
fn z_matches_series_in_both_branches() {
    for &(gamma, c, k) in &[(0.05, 0.9, 0), (0.01, 0.99, 0), (0.2, 0.5, 3), (1.0, 0.9, 0), (0.05, 0.9, 40)] {
        let z = z_value(gamma, c, k).unwrap();
        assert!(rel(z, z_oracle(gamma, c, k)) < 1e-8, "gamma={gamma} c={c} k={k}");
        assert!(z < 0.0);
    }
}

#[test]
fn xi_matches_direct_sum() {
    for &(t, gamma, c, e_m) in &[(1, 0.05, 0.9, -1.0 / 14.0), (17, 0.2, 0.5, -0.3), (400, 0.01, 0.99, -0.05)] {
        let xi = xi_value(t, gamma, c, e_m).unwrap();
        let oracle = xi_oracle(t, gamma, c, e_m);
        assert!((xi - oracle).abs() < 1e-10 * oracle.max(1.0), "{xi} vs {oracle}");
    }
    let mut prev = 0.0;
    for t in 0..200 {
        let xi = xi_value(t, 0.05, 0.9, -0.1).unwrap();
        assert!(xi >= prev);
        prev = xi;
    }
}

#[test]
fn zeta_matches_series_of_xi() {
    for &(gamma, c, e_m) in &[(0.05, 0.9, -1.0 / 14.0), (0.01, 0.5, -0.2), (1.0, 0.99, -0.05), (0.2, 0.9, -0.4)] {
        let zeta = zeta_value(gamma, c, e_m).unwrap();
        let oracle = zeta_oracle(gamma, c, e_m);
        assert!(rel(zeta, oracle) < 1e-8, "gamma={gamma} c={c} e_m={e_m}: {zeta} vs {oracle}");
    }
}

#[test]
fn tighter_bound_matches_brute_force() {
    for &(c, gamma, e_m, dm, d1) in &[
        (0.9, 0.05, -1.0 / 14.0, 6, 0.5),
        (0.5, 0.2, -0.2, 3, 0.5),
        (0.99, 0.01, -0.1, 10, 2.0 / 3.0),
        (0.9, 1.0, -0.4, 1, 0.5),
        (0.9, 0.05, -0.3, 4, 0.25),
    ] {
        let v = tighter_mal_bound(c, gamma, e_m, dm, d1, 1.0).unwrap();
        let oracle = tighter_oracle(c, gamma, e_m, dm, d1, 1.0, 1_000_000);
        assert!(rel(v, oracle) < 1e-8, "c={c} gamma={gamma} e_m={e_m} dm={dm}: {v} vs {oracle}");
    }
    assert_eq!(tighter_mal_bound(0.9, 0.05, -0.1, 0, 0.0, 1.0).unwrap(), 0.0);
}

#[test]
fn tighter_bound_below_markov_bound_on_lattice() {
    let eta = 1.0;
    for &gamma in &[0.01, 0.1, 1.0] {
        for &c in &[0.5, 0.9, 0.99] {
            for &e_m in &[-0.05, -1.0 / 14.0, -0.3] {
                for &(dm, d1) in &[(1, 0.5), (6, 0.5), (6, 2.0 / 3.0)] {
                    let tight = tighter_mal_bound(c, gamma, e_m, dm, d1, eta).unwrap();
                    let markov = eta * deviation_bound_mal(c, gamma, e_m, dm).unwrap().u_mal;
                    assert!(tight <= markov, "gamma={gamma} c={c} e_m={e_m} dm={dm}: {tight} > {markov}");
                }
            }
        }
    }
}

#[test]
fn u_leg_grows_with_classification_time() {
    let u = |t| deviation_bound_leg(0.9, 0.05, 9, &ClassTimes::Fixed(t)).unwrap().total;
    assert!(u(10).raw < u(50).raw && u(50).raw < u(200).raw);
    assert!(u(10).value <= u(50).value && u(50).value <= u(200).value);
    let mut prev = 0.0;
    for t in 0..300 {
        let v = deviation_bound_leg(0.9, 0.05, 9, &ClassTimes::Fixed(t)).unwrap().total.raw;
        assert!(v >= prev - 1e-15, "t={t}");
        prev = v;
    }
}

#[test]
fn u_leg_input_term_averages_samples() {
    let one = |t| deviation_bound_leg(0.9, 0.05, 9, &ClassTimes::Fixed(t)).unwrap();
    let both = deviation_bound_leg(0.9, 0.05, 9, &ClassTimes::Samples(vec![12, 40])).unwrap();
    assert!((both.input - (one(12).input + one(40).input) / 2.0).abs() < 1e-14);
    assert!((both.autonomous - one(26).autonomous).abs() < 1e-14);
}

#[test]
fn zeta_and_u_mal_grow_with_gamma() {
    let grid = [0.01, 0.1, 1.0];
    let zetas: Vec<f64> = grid.iter().map(|&g| zeta_value(g, 0.9, -1.0 / 14.0).unwrap()).collect();
    assert!(zetas[0] < zetas[1] && zetas[1] < zetas[2], "{zetas:?}");
    let umal: Vec<f64> = grid.iter().map(|&g| deviation_bound_mal(0.9, g, -1.0 / 14.0, 6).unwrap().u_mal).collect();
    assert!(umal.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn rate_decreases_to_zero() {
    let p = params();
    let eval = RateEvaluator::new(&p, 600).unwrap();
    let series = eval.series(20, 20, 520).unwrap();
    assert_eq!(series.first().unwrap().t, 21);
    for w in series.windows(2) {
        assert!(w[1].rho.value <= w[0].rho.value, "t={}", w[1].t);
    }
    assert!(series.last().unwrap().rho.value < 1e-3);
    assert!(series.iter().all(|r| r.rho.value <= 2.0));
}

#[test]
fn series_recurrences_match_direct_formulas() {
    let p = params();
    let eval = RateEvaluator::new(&p, 300).unwrap();
    for (t_f, t_f_m) in [(0, 0), (5, 3), (40, 60)] {
        for r in eval.series(t_f, t_f_m, 250).unwrap() {
            let direct = eval.rho_l(r.t, t_f).unwrap();
            assert!((r.rho_l - direct).abs() < 1e-12 * direct.max(1e-300), "t={} {} vs {direct}", r.t, r.rho_l);
            let direct_m = eval.rho_m(r.t, t_f_m).unwrap();
            assert!((r.rho_m - direct_m).abs() <= 1e-12 * direct_m, "t={}", r.t);
        }
    }
}

/// Legitimate component from naive products.
fn rho_l_oracle(p: &BoundParams, t: usize, t_f: usize) -> f64 {
    let binom = |n: i64, k: usize| -> f64 {
        if n < k as i64 {
            return 0.0;
        }
        (0..k).fold(1.0, |acc, i| acc * (n - i as i64) as f64 / (i + 1) as f64)
    };
    let decay = |n: i64| binom(n, p.m_sigma) * p.sigma.powi((n - p.m_sigma as i64).max(0) as i32);
    let prod = |s: usize| (s..t).map(|k| 1.0 - lambda(p.c, p.gamma, k)).product::<f64>();
    let mut total = prod(0) * decay(t as i64 - t_f as i64);
    for k in 0..t {
        total += prod(k + 1) * lambda(p.c, p.gamma, k) * decay(t as i64 - t_f.max(k + 1) as i64);
    }
    total
}

#[test]
fn legit_component_with_jordan_blocks() {
    let p = BoundParams { m_sigma: 2, m: 3, sigma: 0.7, ..params() };
    let eval = RateEvaluator::new(&p, 200).unwrap();
    for t in [11, 12, 30, 150] {
        let v = eval.rho_l(t, 10).unwrap();
        assert!(rel(v, rho_l_oracle(&p, t, 10)) < 1e-10);
    }
    let series = eval.series(10, 10, 150).unwrap();
    assert!((series[0].rho_l - rho_l_oracle(&p, 11, 10)).abs() < 1e-12);
}

#[test]
fn rate_rejects_rounds_before_classification() {
    assert!(convergence_rate_bound(&params(), 20, 20, 20).is_err());
    assert!(rate_asymptotes(&params(), 3, 5, 0).is_err());
}

#[test]
fn no_malicious_weight_drops_malicious_component() {
    let p = BoundParams { d1: 0.0, ..params() };
    let r = convergence_rate_bound(&p, 60, 20, 30).unwrap();
    let expected = p.b * p.m as f64 * (p.legit_count as f64).sqrt() * r.rho_l;
    assert!((r.rho.raw - expected).abs() < 1e-15);
}

#[test]
fn asymptote_examples() {
    let p = BoundParams { sigma: 0.5, m_sigma: 0, m: 1, b: 1.0, legit_count: 4, d1: 0.5, ..params() };
    let a = rate_asymptotes(&p, 10, 0, 0).unwrap();
    assert_eq!(a.gamma_zero, 2.0);
    assert!((a.gamma_inf - 2f64.powi(-9)).abs() < 1e-18);
}

#[test]
fn fast_schedule_approaches_infinite_gamma_limit() {
    let base = BoundParams { sigma: 0.5, m_sigma: 0, m: 1, b: 1.0, legit_count: 4, d1: 0.5, ..params() };
    for (t_f, t_f_m) in [(5, 0), (10, 40), (40, 40)] {
        let p = BoundParams { gamma: 50.0, ..base.clone() };
        let t = t_f + 20;
        let limit = rate_asymptotes(&p, t, t_f, t_f_m).unwrap().gamma_inf;
        let r = convergence_rate_bound(&p, t, t_f, t_f_m).unwrap();
        assert!(rel(r.rho.raw, limit) < 0.05, "T_f={t_f} T_fM={t_f_m}: {} vs {limit}", r.rho.raw);
    }
}

#[test]
fn tail_bound_decreases() {
    let p = |t| tail_bound_p(t, 34, 6, 0.1, -1.0 / 14.0);
    assert!(p(50).raw > p(100).raw && p(100).raw > p(200).raw);
    let mut prev = f64::INFINITY;
    for t in 1..1000 {
        let v = p(t);
        assert!(v.value <= prev && (0.0..=1.0).contains(&v.value));
        prev = v.value;
    }
}

#[test]
fn expected_rate_examples() {
    let p = params();
    let first = expected_rate_bound(&p, 1).unwrap();
    assert_eq!(first.k_star, 1);
    let tail = tail_bound_p(1, 34, 6, 0.1, -1.0 / 14.0).value;
    assert_eq!(first.bound.raw, p.eta * (2.0 + 2.0 * tail));
    assert_eq!(first.bound.value, 2.0 * p.eta);

    // without trust uncertainty the earliest classification time wins
    let certain = BoundParams { legit_links: 0, malicious_links: 0, ..params() };
    let e = expected_rate_bound(&certain, 80).unwrap();
    assert_eq!(e.k_star, 1);
    let rho = convergence_rate_bound(&certain, 80, 1, 1).unwrap().rho.value;
    assert!((e.bound.raw - certain.eta * rho).abs() < 1e-12);
}

#[test]
fn rate_grows_with_classification_time() {
    let p = params();
    let eval = RateEvaluator::new(&p, 301).unwrap();
    let mut prev = 0.0;
    for k in 1..=300 {
        let v = eval.rate_or_cap(300, k).unwrap();
        assert!(v >= prev - 1e-15, "k={k}");
        prev = v;
    }
}

#[test]
fn pmf_tight_form_never_exceeds_union_bound() {
    for k in 0..300 {
        let b = classification_pmf_bounds(k, 34, 6, 0.1, -1.0 / 14.0);
        assert!(b.malicious_tight <= b.malicious.raw + 1e-12);
        assert!(b.legit_tight <= b.legit.raw + 1e-12);
        assert!(b.total_tight.value <= b.total.value + 1e-12);
    }
}

#[test]
fn report_flags_uninformative_trust() {
    let grid = ReportGrid { t_max: 60, epsilons: vec![0.5, 5.0], expected_at: vec![50], pmf_max_k: 10 };
    let ok = BoundsReport::build(&params(), &grid).unwrap();
    assert!(ok.valid);
    assert_eq!(ok.rate.len(), 40);
    assert_eq!(ok.pmf.len(), 11);
    let bad = BoundsReport::build(&BoundParams { e_m: 0.05, ..params() }, &grid).unwrap();
    assert!(!bad.valid);
    assert_eq!(bad.delta[0].1.value, 1.0);
    assert_eq!(bad.expected_rate[0].bound.value, 2.0 * params().eta);
    assert!(BoundsReport::build(&BoundParams { c: 1.5, ..params() }, &grid).is_err());
}

proptest! {
    #[test]
    fn outputs_stay_clamped(
        c in 0.05f64..0.99,
        gamma in 0.005f64..2.0,
        e_l in 0.01f64..0.5,
        e_m in -0.5f64..-0.01,
        t in 0usize..400,
        eps in 0.01f64..100.0,
    ) {
        let p = BoundParams { c, gamma, e_l, e_m, ..params() };
        let leg = deviation_bound_leg(c, gamma, p.d_max, &ClassTimes::Fixed(t)).unwrap();
        prop_assert!((0.0..=1.0).contains(&leg.total.value));
        let mal = deviation_bound_mal(c, gamma, e_m, p.malicious_links).unwrap();
        let delta = total_deviation_bound(p.eta, eps, leg.total.value, mal.u_mal).unwrap();
        prop_assert!((0.0..=1.0).contains(&delta.value));
        let tail = tail_bound_p(t, p.legit_links, p.malicious_links, e_l, e_m);
        prop_assert!((0.0..=1.0).contains(&tail.value));
        let pmf = classification_pmf_bounds(t, p.legit_links, p.malicious_links, e_l, e_m);
        for v in [pmf.malicious.value, pmf.legit.value, pmf.total.value, pmf.total_tight.value] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        let r = convergence_rate_bound(&p, t + 1, t, t / 2).unwrap();
        prop_assert!(r.rho.value <= 2.0 && r.rho.value >= 0.0);
    }
}

#[test]
fn platoon_expected_rate_minimizer() {
    use trustweave::harness::{build_platoon_scenario, PlatoonConfig};
    let s = build_platoon_scenario(&PlatoonConfig::default()).unwrap();
    let profile = s.spectral_profile().unwrap();
    let p = BoundParams::from_parts(
        &s.graph,
        &profile,
        &s.trust,
        0.9,
        0.05,
        s.eta,
        ClassTimes::Fixed(1),
        ClassTimes::Fixed(1),
    );
    // the tail bound is still saturated at every k <= 500, so the minimum sits at k = 1
    assert!((1..=500).all(|k| tail_bound_p(k, p.legit_links, p.malicious_links, p.e_l, p.e_m).value == 1.0));
    let early = expected_rate_bound(&p, 500).unwrap();
    assert_eq!(early.k_star, 1);
    assert_eq!(early.bound.value, 2.0 * p.eta);
    let late = expected_rate_bound(&p, 2000).unwrap();
    assert_eq!(late.k_star, 1823);
    assert!(late.bound.value < 1e-3);
}
