//! Mean covered length for exponential free and obstacle lengths.
//!
//! Two routes are implemented:
//!
//! * [`mean_length_theorem1`] sums, over obstacles `i >= 1`, the expected
//!   covered length of the gap after obstacle `i`, integrating the per-gap
//!   inner expectations against the density `f_i` of `E_i`.
//! * [`mean_length_theorem2`] evaluates the closed form: a geometric leading
//!   term `(1/g1) e^(g1 a/(rho-1)) / (1 - r)` minus a series of three finite
//!   integrals over `[0, a]` per `i`.
//!
//! The closed form's leading term contains the gap around the origin as the
//! `i = 0` term of the geometric series, evaluated with the scenario-1 inner
//! expectation at `t = 0`. The first route adds that same term explicitly so
//! both target the same quantity; [`MeanLengthBreakdown::exact_model_total`]
//! swaps it for the gap-0 expectation the per-gap split actually gives when
//! `a > 0`.

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    integrate, integrate_semi_infinite, integrate_with_breaks, ln_factorial, ln_kummer_m_scaled, rel_diff,
    QuadratureConfig, SeriesConfig,
};
use crate::street::{density_f_i, ExpoEnvParams, StreetGeometry};

/// Width, in standard deviations of `E_i`, of the integration window around its mean.
pub const END_WINDOW_SIGMAS: f64 = 12.0;

/// The upper limit is also at least this many mean lengths of the slower
/// exponential past the mean, which matters for small `i` where `f_i` is skewed.
pub const TAIL_RATE_MULTIPLES: f64 = 45.0;

/// `E[(U - s)^+]` with `s = (t - a)/(rho - 1)`, for `U ~ Exp(g1)`.
pub fn inner_expectation_s1(t: f64, gamma1: f64, rho: f64, a: f64) -> f64 {
    (-gamma1 * (t - a) / (rho - 1.0)).exp() / gamma1
}

/// `E[U 1{U > u}]` with `u = a + delta - t`.
pub fn inner_expectation_s2(t: f64, gamma1: f64, a: f64, delta: f64) -> f64 {
    let u = a + delta - t;
    (u + 1.0 / gamma1) * (-gamma1 * u).exp()
}

/// `E[(rho U - u)/(rho - 1) 1{u/rho <= U <= u}]` with `u = a + delta - t`.
pub fn inner_expectation_s3(t: f64, gamma1: f64, rho: f64, a: f64, delta: f64) -> f64 {
    let u = a + delta - t;
    if u <= 0.0 {
        return 0.0;
    }
    let x = gamma1 * u * (rho - 1.0) / rho;
    (-gamma1 * u).exp() * (rho / ((rho - 1.0) * gamma1) * x.exp_m1() - u)
}

/// The three inner expectations, bundled so the oracle check can run on
/// substitutes.
#[derive(Clone, Copy)]
pub struct InnerExpectations {
    pub s1: fn(f64, f64, f64, f64) -> f64,
    pub s2: fn(f64, f64, f64, f64) -> f64,
    pub s3: fn(f64, f64, f64, f64, f64) -> f64,
}

impl Default for InnerExpectations {
    fn default() -> Self {
        Self {
            s1: inner_expectation_s1,
            s2: inner_expectation_s2,
            s3: inner_expectation_s3,
        }
    }
}

const INNER_CHECK_TOL: f64 = 1e-9;

/// Checks closed-form inner expectations against direct quadrature of their
/// defining expectations over a small parameter grid.
pub fn verify_inner_expectations(forms: &InnerExpectations) -> Result<()> {
    let quad = QuadratureConfig::tight();
    let cases = [
        // (gamma1, rho, a, delta, t)
        (0.5, 20.0, 0.0, 0.0, 19.0),
        (0.5, 20.0, 0.0, 0.0, 0.0),
        (1.0, 2.5, 1.0, 0.5, 3.0),
        (2.0, 5.0, 3.0, 1.0, 1.0),
        (0.3, 1.5, 4.0, 2.0, 0.5),
        (1.7, 30.0, 0.5, 0.2, 0.1),
    ];
    for &(g1, rho, a, delta, t) in &cases {
        let (g1, rho, a, delta, t): (f64, f64, f64, f64, f64) = (g1, rho, a, delta, t);
        let density = |v: f64| g1 * (-g1 * v).exp();

        let s = (t - a).max(0.0) / (rho - 1.0);
        let tt = a + s * (rho - 1.0);
        let oracle = integrate_semi_infinite(|w| w * density(w + s), &quad)?;
        check("inner expectation s1", (forms.s1)(tt, g1, rho, a), oracle)?;

        let tt = t.min(a);
        let u = a + delta - tt;
        let oracle = integrate_semi_infinite(|w| (w + u) * density(w + u), &quad)?;
        check("inner expectation s2", (forms.s2)(tt, g1, a, delta), oracle)?;

        let oracle = integrate(|v| (rho * v - u) / (rho - 1.0) * density(v), u / rho, u, &quad)?;
        check("inner expectation s3", (forms.s3)(tt, g1, rho, a, delta), oracle)?;
    }
    Ok(())
}

fn check(what: &'static str, lhs: f64, rhs: f64) -> Result<()> {
    let rel = rel_diff(lhs, rhs);
    if rel <= INNER_CHECK_TOL || (lhs - rhs).abs() <= 1e-15 {
        Ok(())
    } else {
        Err(Error::IdentityMismatch { what, lhs, rhs, rel })
    }
}

/// Runs [`verify_inner_expectations`] once per process.
pub fn ensure_inner_expectations_verified() -> Result<()> {
    static VERIFIED: OnceLock<Result<()>> = OnceLock::new();
    VERIFIED
        .get_or_init(|| verify_inner_expectations(&InnerExpectations::default()))
        .clone()
}

/// Which formula produced a breakdown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Theorem1,
    Theorem2,
}

/// One term of the `i >= 1` series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesTerm {
    pub i: usize,
    /// Route 1: the three per-scenario integrals. Route 2: the three bracket
    /// integrals, including their prefactors.
    pub parts: [f64; 3],
    /// Signed contribution to `total`.
    pub contribution: f64,
}

/// Mean covered length and how it was assembled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanLengthBreakdown {
    pub method: Method,
    /// `leading_term + sum of contributions`.
    pub total: f64,
    pub leading_term: f64,
    pub terms: Vec<SeriesTerm>,
    /// Last `i` included in the series (0 when the series is empty).
    pub truncation_index: usize,
    pub r: f64,
    /// Gap-0 term as the closed form counts it.
    pub gap0_theorem: f64,
    /// Gap-0 expectation of the per-gap scenario split.
    pub gap0_exact: f64,
}

impl MeanLengthBreakdown {
    pub fn total_without_gap0(&self) -> f64 {
        self.total - self.gap0_theorem
    }

    /// Total with the gap-0 term replaced by the scenario-split expectation;
    /// the mean of the simulated covered length.
    pub fn exact_model_total(&self) -> f64 {
        self.total - self.gap0_theorem + self.gap0_exact
    }

    pub fn series_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.contribution).sum()
    }
}

fn validate_inputs(params: &ExpoEnvParams, geo: &StreetGeometry, quad: &QuadratureConfig, series: &SeriesConfig) -> Result<()> {
    params.validate()?;
    geo.validate()?;
    quad.validate()?;
    series.validate()
}

/// Gap-0 expectations `(closed-form convention, per-gap split)`.
pub fn gap0_terms(params: &ExpoEnvParams, geo: &StreetGeometry) -> (f64, f64) {
    let (g1, rho, a, delta) = (params.gamma1, geo.rho(), geo.a, geo.delta);
    let theorem = inner_expectation_s1(0.0, g1, rho, a);
    let exact = if a <= 0.0 {
        theorem
    } else {
        inner_expectation_s2(0.0, g1, a, delta) + inner_expectation_s3(0.0, g1, rho, a, delta)
    };
    (theorem, exact)
}

const SERIES_BATCH: usize = 16;

/// Sums terms `i = 1, 2, ...` until `consecutive_small` consecutive terms fall
/// below `term_tol * |running total|`. Terms are computed in parallel batches
/// and accumulated in index order.
fn sum_series<F>(series: &SeriesConfig, leading: f64, term: F) -> Result<(Vec<SeriesTerm>, f64)>
where
    F: Fn(usize) -> Result<SeriesTerm> + Sync,
{
    let mut terms = Vec::new();
    let mut running = leading;
    let mut small = 0usize;
    let mut next = 1usize;
    while next <= series.i_max {
        let end = (next + SERIES_BATCH).min(series.i_max + 1);
        let batch: Vec<Result<SeriesTerm>> = (next..end).into_par_iter().map(&term).collect();
        for t in batch {
            let t = t?;
            running += t.contribution;
            terms.push(t);
            if t.contribution.abs() < series.term_tol * running.abs() {
                small += 1;
                if small >= series.consecutive_small {
                    return Ok((terms, running));
                }
            } else {
                small = 0;
            }
        }
        next = end;
    }
    Err(Error::SeriesNotConverged {
        partial_sum: running,
        terms: terms.len(),
    })
}

/// Breakpoints that put `E_i`'s bulk on its own panels.
/// Panel breaks around the bulk of `f_i`, plus a few at the short length
/// scale near the origin where `f_i` rises when the two rates differ a lot.
fn bulk_breaks(params: &ExpoEnvParams, mean: f64, std: f64) -> Vec<f64> {
    let short = 1.0 / params.gamma1.max(params.gamma2);
    let mut breaks = vec![mean - 6.0 * std, mean - 2.0 * std, mean, mean + 2.0 * std, mean + 6.0 * std];
    if short < 1e-2 * mean {
        breaks.extend([short, 10.0 * short, 50.0 * short]);
    }
    breaks
}

fn nan_on_error(v: Result<f64>) -> f64 {
    v.unwrap_or(f64::NAN)
}

/// Mean covered length by integrating the per-gap inner expectations against
/// `f_i`, plus the gap-0 term in the closed-form convention.
pub fn mean_length_theorem1(
    params: &ExpoEnvParams,
    geo: &StreetGeometry,
    quad: &QuadratureConfig,
    series: &SeriesConfig,
) -> Result<MeanLengthBreakdown> {
    validate_inputs(params, geo, quad, series)?;
    ensure_inner_expectations_verified()?;
    let (g1, rho, a, delta) = (params.gamma1, geo.rho(), geo.a, geo.delta);
    let (gap0_theorem, gap0_exact) = gap0_terms(params, geo);

    let term = |i: usize| -> Result<SeriesTerm> {
        let (mean, std) = params.end_moments(i);
        let breaks = bulk_breaks(params, mean, std);
        let f = |t: f64| nan_on_error(density_f_i(i, params, t));

        let lo = a.max(mean - END_WINDOW_SIGMAS * std);
        let hi = mean + (END_WINDOW_SIGMAS * std).max(TAIL_RATE_MULTIPLES / params.gamma1.min(params.gamma2));
        let scenario1 = if hi > lo {
            integrate_with_breaks(|t| inner_expectation_s1(t, g1, rho, a) * f(t), lo, hi, &breaks, quad)?.value
        } else {
            0.0
        };
        let (scenario2, scenario3) = if a > 0.0 {
            let s2 = integrate_with_breaks(|t| inner_expectation_s2(t, g1, a, delta) * f(t), 0.0, a, &breaks, quad)?;
            let s3 = integrate_with_breaks(|t| inner_expectation_s3(t, g1, rho, a, delta) * f(t), 0.0, a, &breaks, quad)?;
            (s2.value, s3.value)
        } else {
            (0.0, 0.0)
        };
        Ok(SeriesTerm {
            i,
            parts: [scenario1, scenario2, scenario3],
            contribution: scenario1 + scenario2 + scenario3,
        })
    };

    let (terms, total) = sum_series(series, gap0_theorem, term)?;
    Ok(MeanLengthBreakdown {
        method: Method::Theorem1,
        total,
        leading_term: gap0_theorem,
        truncation_index: terms.last().map_or(0, |t| t.i),
        terms,
        r: params.r(rho),
        gap0_theorem,
        gap0_exact,
    })
}

/// Mean covered length from the closed form.
pub fn mean_length_theorem2(
    params: &ExpoEnvParams,
    geo: &StreetGeometry,
    quad: &QuadratureConfig,
    series: &SeriesConfig,
) -> Result<MeanLengthBreakdown> {
    validate_inputs(params, geo, quad, series)?;
    ensure_inner_expectations_verified()?;
    let (g1, g2, rho, a, delta) = (params.gamma1, params.gamma2, geo.rho(), geo.a, geo.delta);
    let g_min = g1.min(g2);
    let r = params.r(rho);
    let leading = (g1 * a / (rho - 1.0)).exp() / (g1 * (1.0 - r));
    let (gap0_theorem, gap0_exact) = gap0_terms(params, geo);

    let (terms, total) = if a > 0.0 {
        let ln_first = -g1.ln();
        let ln_second = -g1 * (a + delta) - (rho - 1.0).ln() - g1.ln();
        let ln_third = rho.ln() - g1 * (a + delta) / rho - (rho - 1.0).ln() - g1.ln();
        let term = |i: usize| -> Result<SeriesTerm> {
            let n = i as f64;
            let ln_c = n * (g1 * g2).ln() - ln_factorial(2 * i - 1);
            let (mean, std) = params.end_moments(i);
            let breaks = bulk_breaks(params, mean, std);
            // shared factor c_i t^(2i-1) e^(-g2 t) M(i, 2i, (g2 - g1) t) in log form,
            // with the Kummer exponent folded in as e^(-min(g1, g2) t)
            let ln_common = |t: f64| -> f64 {
                if t <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                ln_c + (2.0 * n - 1.0) * t.ln() - g_min * t
                    + nan_on_error(ln_kummer_m_scaled(n, 2.0 * n, (g2 - g1) * t))
            };
            let first = integrate_with_breaks(
                |t| (ln_first + ln_common(t) - g1 * (t - a) / (rho - 1.0)).exp(),
                0.0,
                a,
                &breaks,
                quad,
            )?
            .value;
            let second = integrate_with_breaks(
                |t| (ln_second + ln_common(t) + g1 * t).exp(),
                0.0,
                a,
                &breaks,
                quad,
            )?
            .value;
            let third = integrate_with_breaks(
                |t| (ln_third + ln_common(t) + g1 / rho * t).exp(),
                0.0,
                a,
                &breaks,
                quad,
            )?
            .value;
            Ok(SeriesTerm {
                i,
                parts: [first, second, third],
                contribution: -(first + second - third),
            })
        };
        sum_series(series, leading, term)?
    } else {
        (Vec::new(), leading)
    };

    Ok(MeanLengthBreakdown {
        method: Method::Theorem2,
        total,
        leading_term: leading,
        truncation_index: terms.last().map_or(0, |t| t.i),
        terms,
        r,
        gap0_theorem,
        gap0_exact,
    })
}

/// Both algebraic forms of the small-`a` approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorollaryValue {
    /// `(1/g1) / (1 - r)`.
    pub via_r: f64,
    /// `(1/g1) rho (alpha + 1/(rho-1)) / (1 + alpha + 1/(rho-1))`.
    pub via_alpha: f64,
    /// `g1 a / (rho - 1)`; the approximation needs this to be small.
    pub regime: f64,
}

pub fn mean_length_corollary(params: &ExpoEnvParams, geo: &StreetGeometry) -> CorollaryValue {
    let (g1, rho) = (params.gamma1, geo.rho());
    let alpha = params.alpha();
    let s = 1.0 / (rho - 1.0);
    CorollaryValue {
        via_r: 1.0 / (g1 * (1.0 - params.r(rho))),
        via_alpha: rho * (alpha + s) / (g1 * (1.0 + alpha + s)),
        regime: g1 * geo.a / (rho - 1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geo(rho: f64, a: f64, delta: f64) -> StreetGeometry {
        StreetGeometry::with_rho(rho, a, delta).unwrap()
    }

    #[test]
    fn inner_expectations_pass_oracle_check() {
        verify_inner_expectations(&InnerExpectations::default()).unwrap();
    }

    #[test]
    fn perturbed_forms_fail_oracle_check() {
        fn s1_bad(t: f64, g: f64, rho: f64, a: f64) -> f64 {
            inner_expectation_s1(t, g, rho, a) * (1.0 + 1e-3)
        }
        fn s2_bad(t: f64, g: f64, a: f64, d: f64) -> f64 {
            inner_expectation_s2(t, g, a, d) * (1.0 + 1e-3)
        }
        fn s3_bad(t: f64, g: f64, rho: f64, a: f64, d: f64) -> f64 {
            inner_expectation_s3(t, g, rho, a, d) * (1.0 + 1e-3)
        }
        let ok = InnerExpectations::default();
        assert!(verify_inner_expectations(&InnerExpectations { s1: s1_bad, ..ok }).is_err());
        assert!(verify_inner_expectations(&InnerExpectations { s2: s2_bad, ..ok }).is_err());
        assert!(verify_inner_expectations(&InnerExpectations { s3: s3_bad, ..ok }).is_err());
    }

    #[test]
    fn inner_expectation_examples() {
        assert!((inner_expectation_s1(3.0, 0.5, 20.0, 3.0) - 2.0).abs() < 1e-15);
        assert!((inner_expectation_s1(19.0, 0.5, 20.0, 0.0) - 2.0 * (-0.5f64).exp()).abs() < 1e-14);
        assert!(inner_expectation_s1(1e6, 0.5, 20.0, 0.0) < 1e-300);

        assert!((inner_expectation_s2(2.0, 0.5, 2.0, 0.0) - 2.0).abs() < 1e-15);
        assert!((inner_expectation_s2(0.0, 1.0, 1.0, 0.0) - 2.0 / std::f64::consts::E).abs() < 1e-14);
        assert!(inner_expectation_s2(0.0, 1.0, 1e4, 0.0) < 1e-300);

        assert_eq!(inner_expectation_s3(2.0, 0.5, 20.0, 2.0, 0.0), 0.0);
        assert!(inner_expectation_s3(2.0 - 1e-9, 0.5, 20.0, 2.0, 0.0).abs() < 1e-9);
    }

    #[test]
    fn inner_expectation_s3_reference_value() {
        // gamma1 = 0.5, rho = 20, u = 3
        let quad = QuadratureConfig::tight();
        let oracle = integrate(|v| (20.0 * v - 3.0) / 19.0 * 0.5 * (-0.5 * v).exp(), 0.15, 3.0, &quad).unwrap();
        let got = inner_expectation_s3(0.0, 0.5, 20.0, 3.0, 0.0);
        assert!(rel_diff(got, oracle) < 1e-12, "{got} vs {oracle}");
    }

    #[test]
    fn theorem2_at_zero_offset_is_geometric() {
        let p = ExpoEnvParams::new(0.5, 0.5).unwrap();
        let b = mean_length_theorem2(&p, &geo(20.0, 0.0, 0.0), &Default::default(), &Default::default()).unwrap();
        let r = 0.9025;
        assert!((b.r - r).abs() < 1e-15);
        assert_eq!(b.total, 2.0 / (1.0 - b.r));
        assert!((b.total - 20.512_820_512_820_5).abs() < 1e-9);
        assert!(b.terms.is_empty());
        assert_eq!(b.truncation_index, 0);
    }

    #[test]
    fn theorem1_at_zero_offset_matches_geometric_sum() {
        let p = ExpoEnvParams::new(0.5, 0.5).unwrap();
        let b = mean_length_theorem1(&p, &geo(20.0, 0.0, 0.0), &Default::default(), &Default::default()).unwrap();
        assert!(rel_diff(b.total, 2.0 / 0.0975) < 1e-8, "{}", b.total);
        // each term is (1/g1) r^i
        for t in b.terms.iter().take(5) {
            assert!(rel_diff(t.contribution, 2.0 * 0.9025f64.powi(t.i as i32)) < 1e-8, "{} {}", t.i, t.contribution);
        }
    }

    #[test]
    fn theorem_routes_agree_with_offset() {
        let p = ExpoEnvParams::new(0.5, 1.5).unwrap();
        let g = geo(10.0, 3.0, 1.0);
        let one = mean_length_theorem1(&p, &g, &Default::default(), &Default::default()).unwrap();
        let two = mean_length_theorem2(&p, &g, &Default::default(), &Default::default()).unwrap();
        assert!(rel_diff(one.total, two.total) < 1e-6, "{} vs {}", one.total, two.total);
        assert_eq!(one.gap0_exact, two.gap0_exact);
        assert!(one.gap0_exact < one.gap0_theorem);
    }

    #[test]
    fn corollary_forms() {
        let p = ExpoEnvParams::new(0.5, 0.5).unwrap();
        let c = mean_length_corollary(&p, &geo(20.0, 0.0, 0.0));
        assert!(rel_diff(c.via_r, c.via_alpha) < 1e-14);
        assert!((c.via_r - 20.512_820_512_820_5).abs() < 1e-9);
        let big = ExpoEnvParams::from_alpha(0.5, 1e9).unwrap();
        let c = mean_length_corollary(&big, &geo(20.0, 0.0, 0.0));
        assert!(rel_diff(c.via_alpha, 40.0) < 1e-8);
    }

    #[test]
    fn series_limit_is_reported() {
        let p = ExpoEnvParams::new(0.5, 0.5).unwrap();
        let series = SeriesConfig { i_max: 5, ..Default::default() };
        let err = mean_length_theorem1(&p, &geo(20.0, 0.0, 0.0), &Default::default(), &series).unwrap_err();
        assert!(matches!(err, Error::SeriesNotConverged { terms: 5, .. }));
    }
}
