//! Values checked against oracles computed independently in this file
//! (composite Simpson rules, direct convolution, hand geometry).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ris_coverage::coverage_analytic::{inner_expectation_s1, inner_expectation_s2, inner_expectation_s3};
use ris_coverage::coverage_sim::{mean_connectable_customers, visible_set_scan};
use ris_coverage::numerics::{integrate, integrate_semi_infinite, kummer_m, ln_kummer_m, rel_diff};
use ris_coverage::street::{density_f_i, ExpoEnvParams};
use ris_coverage::*;
use statrs::distribution::{Continuous, Gamma};

/// Composite Simpson rule with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let mut sum = f(lo) + f(hi);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(lo + k as f64 * h);
    }
    sum * h / 3.0
}

fn ln_fact(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// `M(i, 2i, z)` from the Euler integral by Simpson's rule.
fn kummer_oracle(i: usize, z: f64) -> f64 {
    let norm = ln_fact(2 * i - 1) - 2.0 * ln_fact(i - 1);
    let shift = z.max(0.0);
    let body = simpson(
        |u| {
            if i == 1 {
                (z * u - shift).exp()
            } else if u == 0.0 || u == 1.0 {
                0.0
            } else {
                ((i - 1) as f64 * (u * (1.0 - u)).ln() + z * u - shift).exp()
            }
        },
        0.0,
        1.0,
        200_000,
    );
    (norm + shift).exp() * body
}

#[test]
fn kummer_matches_euler_integral_on_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..40 {
        let i = rng.random_range(1..=20usize);
        let z = rng.random_range(-50.0..=50.0);
        let series = kummer_m(i as f64, 2.0 * i as f64, z).unwrap();
        let oracle = kummer_oracle(i, z);
        assert!(rel_diff(series, oracle) < 1e-8, "M({i},{},{z}) = {series} vs {oracle}", 2 * i);
    }
}

#[test]
fn kummer_at_zero_is_one() {
    for a in [0.5, 1.0, 3.0, 17.0] {
        for b in [a + 0.5, 2.0 * a, 3.0 * a + 1.0] {
            assert_eq!(kummer_m(a, b, 0.0).unwrap(), 1.0);
        }
    }
    assert!((kummer_m(1.0, 2.0, 1.0).unwrap() - (1f64.exp() - 1.0)).abs() < 1e-14);
    assert!(rel_diff(kummer_m(2.0, 4.0, -5.0).unwrap(), (-5f64).exp() * kummer_m(2.0, 4.0, 5.0).unwrap()) < 1e-12);
    assert!(ln_kummer_m(30.0, 60.0, 2000.0).unwrap().is_finite());
}

#[test]
fn gaussian_against_midpoint_rule() {
    let n = 1_000_000;
    let h = 6.0 / n as f64;
    let midpoint: f64 = (0..n).map(|k| (-(-3.0 + (k as f64 + 0.5) * h).powi(2)).exp() * h).sum();
    let got = integrate(|t: f64| (-t * t).exp(), -3.0, 3.0, &QuadratureConfig::default()).unwrap();
    assert!(rel_diff(got, midpoint) < 1e-9);
    assert!((got - 1.772_414_696_519).abs() < 1e-11);
}

#[test]
fn semi_infinite_against_truncated_riemann() {
    let cfg = QuadratureConfig::default();
    let n = 5_000_000;
    let h = 50.0 / n as f64;
    let riemann: f64 = (0..n)
        .map(|k| {
            let y = (k as f64 + 0.5) * h;
            (-2.0 * y).exp() / (1.0 + y * y) * h
        })
        .sum();
    let got = integrate_semi_infinite(|y| (-2.0 * y).exp() / (1.0 + y * y), &cfg).unwrap();
    assert!((got - riemann).abs() < 1e-8, "{got} vs {riemann}");
    let gamma2 = integrate_semi_infinite(|y| y * (-y).exp(), &cfg).unwrap();
    assert!((gamma2 - 1.0).abs() < 1e-10);
}

#[test]
fn f_i_normalised_with_correct_mean() {
    for &(g1, g2) in &[(0.5, 1.5), (2.0, 0.3)] {
        let p = ExpoEnvParams::new(g1, g2).unwrap();
        for i in 1..=20usize {
            let (mean, std) = p.end_moments(i);
            let hi = mean + 40.0 * std + 60.0 / g1.min(g2);
            let f = |t: f64| density_f_i(i, &p, t).unwrap();
            let mass = simpson(f, 0.0, hi, 40_000);
            let first = simpson(|t| t * f(t), 0.0, hi, 40_000);
            assert!((mass - 1.0).abs() < 1e-6, "i={i} mass {mass}");
            assert!(rel_diff(first, i as f64 * (1.0 / g1 + 1.0 / g2)) < 1e-6, "i={i} mean {first}");
        }
    }
}

#[test]
fn f_i_equal_rates_is_gamma_pdf() {
    for &g in &[0.5, 1.0, 3.0] {
        let p = ExpoEnvParams::new(g, g).unwrap();
        for i in 1..=20usize {
            let gamma = Gamma::new(2.0 * i as f64, g).unwrap();
            let (mean, std) = p.end_moments(i);
            for k in 1..=12 {
                let t = (mean - 2.0 * std).max(0.05) + k as f64 * std / 3.0;
                let got = density_f_i(i, &p, t).unwrap();
                assert!(rel_diff(got, gamma.pdf(t)) < 1e-12, "i={i} g={g} t={t}: {got} vs {}", gamma.pdf(t));
            }
        }
    }
}

#[test]
fn f_i_matches_convolution_of_gamma_laws() {
    // E_i = Gamma(i, g1) + Gamma(i, g2)
    let (g1, g2) = (1.0, 2.0);
    let p = ExpoEnvParams::new(g1, g2).unwrap();
    let direct = simpson(|s: f64| g1 * (-g1 * s).exp() * g2 * (-g2 * (1.0 - s)).exp(), 0.0, 1.0, 2000);
    assert!(rel_diff(density_f_i(1, &p, 1.0).unwrap(), direct) < 1e-12);
    for i in [2usize, 5, 9] {
        let a = Gamma::new(i as f64, g1).unwrap();
        let b = Gamma::new(i as f64, g2).unwrap();
        for t in [3.0, 7.5, 12.0] {
            let conv = simpson(|s| a.pdf(s) * b.pdf(t - s), 0.0, t, 20_000);
            assert!(rel_diff(density_f_i(i, &p, t).unwrap(), conv) < 1e-9, "i={i} t={t}");
        }
    }
}

#[test]
fn inner_expectation_examples() {
    // memorylessness at t = a
    assert!((inner_expectation_s1(2.0, 0.5, 20.0, 2.0) - 2.0).abs() < 1e-15);
    let want = (-0.5f64).exp() / 0.5;
    assert!((inner_expectation_s1(19.0, 0.5, 20.0, 0.0) - want).abs() < 1e-12);
    assert!((want - 1.21306).abs() < 1e-5);
    assert!(inner_expectation_s1(1e6, 0.5, 20.0, 0.0) < 1e-300);

    // s2 with u = a + delta - t
    assert!((inner_expectation_s2(3.0, 0.5, 3.0, 0.0) - 2.0).abs() < 1e-15);
    let oracle = simpson(|u: f64| u * (-u).exp(), 1.0, 60.0, 200_000);
    assert!((inner_expectation_s2(0.0, 1.0, 0.5, 0.5) - oracle).abs() < 1e-12);
    assert!((oracle - 2.0 * (-1f64).exp()).abs() < 1e-12);

    // s3: zero width, and gamma1 = 0.5, rho = 20, u = 3 against quadrature
    assert_eq!(inner_expectation_s3(2.0, 0.5, 20.0, 2.0, 0.0), 0.0);
    let (g1, rho, u) = (0.5, 20.0, 3.0);
    let oracle = simpson(|v: f64| (rho * v - u) / (rho - 1.0) * g1 * (-g1 * v).exp(), u / rho, u, 100_000);
    let got = inner_expectation_s3(0.0, g1, rho, 2.0, 1.0);
    assert!(rel_diff(got, oracle) < 1e-10, "{got} vs {oracle}");
}

#[test]
fn mean_length_reference_values() {
    let quad = QuadratureConfig::default();
    let series = SeriesConfig::default();
    let p = ExpoEnvParams::new(0.5, 0.5).unwrap();
    let g = StreetGeometry::with_rho(20.0, 0.0, 0.0).unwrap();
    let want = 2.0 / (1.0 - 0.9025);
    let t2 = mean_length_theorem2(&p, &g, &quad, &series).unwrap();
    assert!(rel_diff(t2.total, want) < 1e-14);
    assert!((want - 20.5128).abs() < 1e-4);
    let t1 = mean_length_theorem1(&p, &g, &quad, &series).unwrap();
    assert!(rel_diff(t1.total, want) < 1e-8);
    let cor = mean_length_corollary(&p, &g);
    assert!(rel_diff(cor.via_alpha, want) < 1e-14);

    // obstacles nearly absent: rho / g1
    let p = ExpoEnvParams::new(0.5, 0.5e6).unwrap();
    let t2 = mean_length_theorem2(&p, &g, &quad, &series).unwrap();
    assert!(rel_diff(t2.total, 20.0 / 0.5) < 1e-5);
    let t1 = mean_length_theorem1(&p, &g, &quad, &series).unwrap();
    assert!(rel_diff(t1.total, 20.0 / 0.5) < 1e-5, "{}", t1.total);
}

#[test]
fn corollary_close_to_theorem_in_its_regime() {
    let quad = QuadratureConfig::default();
    let series = SeriesConfig::default();
    for &(g1, g2, rho, a) in &[(0.5, 0.5, 20.0, 0.03), (1.0, 2.0, 10.0, 0.009), (0.2, 0.1, 40.0, 0.1)] {
        let p = ExpoEnvParams::new(g1, g2).unwrap();
        let g = StreetGeometry::with_rho(rho, a, 0.0).unwrap();
        let cor = mean_length_corollary(&p, &g);
        assert!(cor.regime <= 1e-3);
        let t2 = mean_length_theorem2(&p, &g, &quad, &series).unwrap().total;
        assert!((t2 - cor.via_r).abs() / t2 <= 1e-2);
    }
}

#[test]
fn mean_length_increases_with_alpha() {
    let quad = QuadratureConfig::default();
    let series = SeriesConfig::default();
    for &(rho, a, delta) in &[(20.0, 0.0, 0.0), (10.0, 2.0, 0.5)] {
        let g = StreetGeometry::with_rho(rho, a, delta).unwrap();
        let values: Vec<f64> = [0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0]
            .iter()
            .map(|&alpha| {
                let p = ExpoEnvParams::from_alpha(0.5, alpha).unwrap();
                mean_length_theorem2(&p, &g, &quad, &series).unwrap().total
            })
            .collect();
        assert!(values.windows(2).all(|w| w[1] > w[0]), "{values:?}");
    }
}

#[test]
fn two_obstacle_example_against_scan() {
    let geo = StreetGeometry::with_rho(20.0, 0.0, 0.0).unwrap();
    let env = Environment::from_pairs(40.0, &[(5.0, 7.0), (30.0, 31.0)]).unwrap();
    let covered = covered_set_scenarios(&env, &geo);
    let edge = 7.0 + 7.0 / 19.0;
    assert_eq!(covered.intervals(), &[(0.0, 5.0), (edge, 30.0), (31.0 + 31.0 / 19.0, 40.0)]);
    // drop the truncated last gap for the quoted total
    assert!((covered_length(&env, &geo, true) - (40.0 - 31.0 - 31.0 / 19.0) - 27.631_578_947).abs() < 1e-8);
    let scan = visible_set_scan(&env, &geo, 1e-4, &[5.0, edge, 30.0]);
    assert!(covered.symmetric_difference_length(&scan) < 1e-9 * 40.0);
    assert!((mean_connectable_customers(2.0, 27.632).unwrap() - 55.264).abs() < 1e-12);
    assert_eq!(mean_connectable_customers(0.0, 27.632).unwrap(), 0.0);
}

#[test]
fn passive_and_constants_examples() {
    let geo = StreetGeometry::with_rho(20.0, 0.0, 0.0).unwrap();
    let c = radio_constants(&RadioParams::reference(), &geo).unwrap();
    assert!((c.k - 2.0 * geo.l * geo.l).abs() < 1e-9);
}
