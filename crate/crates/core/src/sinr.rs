//! Received power through an active RIS and SINR coverage probability.
//!
//! A transmitter at `x` reaches the origin with power `c F_x / (K + (x - a)^2)`
//! where `F_x ~ Exp(1)` is Rayleigh fading, `c = N P_A / sigma^2` and
//! `K = P_A sigma_v^2 / (P_T sigma^2) (l^2 + a^2) + l^2`. Interference comes
//! from the other transmitters in free space whose distance `tau_y` to the
//! last obstacle before them satisfies `tau_y >= (y - a) / rho`. The SINR has
//! no additive noise term, so it is really a signal-to-interference ratio.
//!
//! Three estimators are provided: the closed form derived under the
//! independence assumptions (interferers Poisson, independent `tau_y`
//! marks), a Monte-Carlo estimator of exactly that model, and a Monte-Carlo
//! estimator that samples real obstacle environments so the `tau_y` are
//! dependent.

use rand::Rng;
use rand_distr::{Distribution, Exp, Exp1, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::montecarlo::{run_batched, Domain, McEstimate, Streams};
use crate::numerics::{integrate_semi_infinite, rel_diff, QuadratureConfig};
use crate::street::{sample_environment, ExpoEnvParams, RenewalModel, StreetGeometry, TauBoundary};

/// Converts dBm to milliwatts.
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Link-budget inputs. Powers are in dBm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioParams {
    pub p_t_dbm: f64,
    pub p_a_dbm: f64,
    pub sigma2_dbm: f64,
    pub sigma_v2_dbm: f64,
    pub n_elements: u32,
    /// Intensity of the interfering transmitters (1/m).
    pub lambda: f64,
}

impl RadioParams {
    /// `P_T = P_A = 20 dBm`, `sigma^2 = sigma_v^2 = -90 dBm`, `lambda = 0.2`.
    pub fn reference() -> Self {
        Self {
            p_t_dbm: 20.0,
            p_a_dbm: 20.0,
            sigma2_dbm: -90.0,
            sigma_v2_dbm: -90.0,
            n_elements: 100,
            lambda: 0.2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let powers = [self.p_t_dbm, self.p_a_dbm, self.sigma2_dbm, self.sigma_v2_dbm];
        ensure(powers.iter().all(|p| p.is_finite()), || "all powers must be finite".into())?;
        ensure(self.n_elements >= 1, || "n_elements must be >= 1".into())?;
        ensure(self.lambda >= 0.0 && self.lambda.is_finite(), || {
            format!("lambda must be >= 0, got {}", self.lambda)
        })
    }
}

/// Linear-unit constants of the received-power formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioConstants {
    /// `N P_A / sigma^2`.
    pub c: f64,
    /// `P_A sigma_v^2 / (P_T sigma^2) (l^2 + a^2) + l^2`, in m^2.
    pub k: f64,
}

pub fn radio_constants(params: &RadioParams, geo: &StreetGeometry) -> Result<RadioConstants> {
    params.validate()?;
    geo.validate()?;
    let p_t = dbm_to_mw(params.p_t_dbm);
    let p_a = dbm_to_mw(params.p_a_dbm);
    let sigma2 = dbm_to_mw(params.sigma2_dbm);
    let sigma_v2 = dbm_to_mw(params.sigma_v2_dbm);
    let l2 = geo.l * geo.l;
    Ok(RadioConstants {
        c: params.n_elements as f64 * p_a / sigma2,
        k: p_a * sigma_v2 / (p_t * sigma2) * (l2 + geo.a * geo.a) + l2,
    })
}

/// `c F / (K + (x - a)^2)`.
pub fn received_power_active(x: f64, fading: f64, consts: &RadioConstants, a: f64) -> f64 {
    consts.c * fading / (consts.k + (x - a) * (x - a))
}

/// Passive-RIS received power `N^2 P_T / (d_SR^2 d_RD^2 sigma^2)` (linear units).
pub fn received_power_passive(p_t: f64, n_elements: f64, sigma2: f64, d_sr: f64, d_rd: f64) -> Result<f64> {
    ensure(d_sr > 0.0 && d_rd > 0.0, || "distances must be positive".into())?;
    Ok(n_elements * n_elements * p_t / (d_sr * d_sr * d_rd * d_rd * sigma2))
}

/// Coverage query for a transmitter at `x` and threshold `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinrQuery {
    pub x: f64,
    pub theta: f64,
    /// `theta (K + (x - a)^2)`.
    pub beta: f64,
}

impl SinrQuery {
    pub fn new(x: f64, theta: f64, consts: &RadioConstants, a: f64) -> Result<Self> {
        ensure(theta > 0.0 && theta.is_finite(), || format!("theta must be > 0, got {theta}"))?;
        ensure(x.is_finite(), || "x must be finite".into())?;
        Ok(Self {
            x,
            theta,
            beta: theta * (consts.k + (x - a) * (x - a)),
        })
    }
}

/// Intensity used for the interferers in the independence model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntensityConvention {
    /// `lambda`, as in the closed form's exponent.
    #[default]
    Raw,
    /// `lambda g1 / (g1 + g2)`.
    Thinned,
}

pub fn effective_intensity(lambda: f64, params: &ExpoEnvParams, convention: IntensityConvention) -> f64 {
    match convention {
        IntensityConvention::Raw => lambda,
        IntensityConvention::Thinned => lambda * params.gamma1 / (params.gamma1 + params.gamma2),
    }
}

/// Closed-form coverage probability together with the two exponent routes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticCoverage {
    pub probability: f64,
    /// `beta lambda / sqrt(K+beta) ∫ e^(-(g1/rho) sqrt(K+beta) y) / (1+y^2) dy`.
    pub exponent: f64,
    /// `lambda ∫ beta / (K + beta + y^2) e^(-g1 y / rho) dy`.
    pub exponent_direct: f64,
}

/// Relative tolerance for the change-of-variable identity.
pub const EXPONENT_IDENTITY_TOL: f64 = 1e-10;

/// `P(SINR_x >= theta)` under the independence model, with interferer
/// intensity `lambda`. Both integral forms are evaluated and must agree to
/// [`EXPONENT_IDENTITY_TOL`].
pub fn coverage_probability_analytic(
    q: &SinrQuery,
    lambda: f64,
    consts: &RadioConstants,
    gamma1: f64,
    rho: f64,
    quad: &QuadratureConfig,
) -> Result<AnalyticCoverage> {
    ensure(lambda >= 0.0 && lambda.is_finite(), || format!("lambda must be >= 0, got {lambda}"))?;
    ensure(gamma1 > 0.0 && rho > 1.0, || "need gamma1 > 0 and rho > 1".into())?;
    ensure(q.beta > 0.0, || "beta must be > 0".into())?;
    if lambda == 0.0 {
        return Ok(AnalyticCoverage { probability: 1.0, exponent: 0.0, exponent_direct: 0.0 });
    }
    let cfg = QuadratureConfig {
        rel_tol: quad.rel_tol.min(1e-13),
        abs_tol: quad.abs_tol.min(1e-300),
        max_subdivisions: quad.max_subdivisions.max(5000),
    };
    let (k, beta) = (consts.k, q.beta);
    let s = (k + beta).sqrt();
    let decay = gamma1 / rho;

    let kernel = integrate_semi_infinite(|y| (-decay * s * y).exp() / (1.0 + y * y), &cfg)?;
    let exponent = beta * lambda / s * kernel;
    let exponent_direct = lambda * integrate_semi_infinite(|y| beta / (k + beta + y * y) * (-decay * y).exp(), &cfg)?;

    let rel = rel_diff(exponent, exponent_direct);
    if rel > EXPONENT_IDENTITY_TOL {
        return Err(Error::IdentityMismatch {
            what: "coverage exponent change of variable",
            lhs: exponent,
            rhs: exponent_direct,
            rel,
        });
    }
    Ok(AnalyticCoverage {
        probability: (-exponent).exp(),
        exponent,
        exponent_direct,
    })
}

/// Default interferer window length `40 rho / g1` beyond the RIS.
pub fn interferer_window(rho: f64, mean_free: f64) -> f64 {
    40.0 * rho * mean_free
}

/// Settings for [`mc_coverage_h0`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct H0Settings {
    pub n_trials: u64,
    /// Intensity of the interferer process (see [`effective_intensity`]).
    pub intensity: f64,
    /// Interferers live on `[a, a + window]`; [`interferer_window`] when `None`.
    pub window: Option<f64>,
}

/// Monte-Carlo coverage probability under the independence model, one
/// estimate per threshold. Trials are shared across thresholds.
#[allow(clippy::too_many_arguments)]
pub fn mc_coverage_h0(
    x: f64,
    thetas: &[f64],
    a: f64,
    consts: &RadioConstants,
    gamma1: f64,
    rho: f64,
    settings: &H0Settings,
    streams: &Streams,
) -> Result<Vec<McEstimate>> {
    ensure(settings.n_trials >= 1, || "n_trials must be >= 1".into())?;
    ensure(thetas.iter().all(|t| *t > 0.0), || "thresholds must be > 0".into())?;
    ensure(settings.intensity >= 0.0, || "intensity must be >= 0".into())?;
    ensure(gamma1 > 0.0 && rho > 1.0, || "need gamma1 > 0 and rho > 1".into())?;
    let window = settings.window.unwrap_or_else(|| interferer_window(rho, 1.0 / gamma1));
    let mean_count = settings.intensity * window;
    let poisson = (mean_count > 0.0).then(|| Poisson::new(mean_count).expect("positive mean"));
    let tau = Exp::new(gamma1).expect("validated");
    let signal_gain = 1.0 / (consts.k + (x - a) * (x - a));

    let hits = run_batched(
        settings.n_trials,
        || vec![0u64; thetas.len()],
        |idx, hits| {
            let mut rng = streams.rng(Domain::SinrH0, idx);
            let count = poisson.as_ref().map_or(0, |p| p.sample(&mut rng) as u64);
            let mut interference = 0.0;
            for _ in 0..count {
                let y = a + window * rng.random::<f64>();
                let tau_y: f64 = tau.sample(&mut rng);
                let fading: f64 = Exp1.sample(&mut rng);
                if tau_y >= (y - a) / rho {
                    interference += received_power_active(y, fading, consts, a);
                }
            }
            let fading_x: f64 = Exp1.sample(&mut rng);
            let signal = consts.c * fading_x * signal_gain;
            tally(hits, thetas, signal, interference);
        },
        |total: &mut Vec<u64>, part| merge_hits(total, part),
    );
    Ok(hits.into_iter().map(|h| McEstimate::proportion(h, settings.n_trials)).collect())
}

fn tally(hits: &mut [u64], thetas: &[f64], signal: f64, interference: f64) {
    let sinr = if interference > 0.0 { signal / interference } else { f64::INFINITY };
    for (h, theta) in hits.iter_mut().zip(thetas) {
        if sinr >= *theta {
            *h += 1;
        }
    }
}

fn merge_hits(total: &mut [u64], part: Vec<u64>) {
    for (t, p) in total.iter_mut().zip(part) {
        *t += p;
    }
}

/// Settings for [`mc_coverage_dependent`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DependentSettings {
    pub n_configs: u64,
    /// Draw a fresh interferer field for every configuration instead of one
    /// fixed field.
    pub resample_phi: bool,
    /// Interferer window beyond `a`; [`interferer_window`] when `None`.
    pub window: Option<f64>,
    pub tau_boundary: TauBoundary,
}

impl DependentSettings {
    pub fn new(n_configs: u64) -> Self {
        Self {
            n_configs,
            resample_phi: false,
            window: None,
            tau_boundary: TauBoundary::Origin,
        }
    }
}

/// Coverage estimates conditioned on accepted configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependentEstimate {
    pub estimates: Vec<McEstimate>,
    pub accepted: u64,
    pub attempted: u64,
    pub acceptance_rate: f64,
}

/// Minimum acceptance rate for [`mc_coverage_dependent`].
pub const MIN_ACCEPTANCE_RATE: f64 = 1e-4;

/// Samples `Poisson(lambda * window)` sorted positions on `[a, a + window]`.
pub fn sample_interferers<R: Rng + ?Sized>(lambda: f64, a: f64, window: f64, rng: &mut R) -> Vec<f64> {
    let mean = lambda * window;
    if mean <= 0.0 {
        return Vec::new();
    }
    let n = Poisson::new(mean).expect("positive mean").sample(rng) as usize;
    let mut ys: Vec<f64> = (0..n).map(|_| a + window * rng.random::<f64>()).collect();
    ys.sort_by(f64::total_cmp);
    ys
}

/// Interference at the origin from the transmitters in `phi` that are in free
/// space of `env` and covered according to their actual `tau_y`. Fading is
/// drawn from `rng` for every contributing transmitter, in order.
pub fn dependent_interference<R: Rng + ?Sized>(
    phi: &[f64],
    env: &crate::street::Environment,
    geo: &StreetGeometry,
    consts: &RadioConstants,
    boundary: TauBoundary,
    rng: &mut R,
) -> f64 {
    let rho = geo.rho();
    let mut total = 0.0;
    for &y in phi {
        let Ok(tau) = env.tau_before(y, boundary) else { continue };
        if tau >= (y - geo.a) / rho {
            let fading: f64 = Exp1.sample(rng);
            total += received_power_active(y, fading, consts, geo.a);
        }
    }
    total
}

/// Monte-Carlo coverage probability with real obstacle environments.
///
/// The interferer field is drawn once and kept fixed (unless
/// `resample_phi`); each configuration samples an environment and is kept
/// only if `x` is in free space and covered (`tau_x >= (x - a)/rho`).
#[allow(clippy::too_many_arguments)]
pub fn mc_coverage_dependent<M: RenewalModel>(
    x: f64,
    thetas: &[f64],
    lambda: f64,
    consts: &RadioConstants,
    model: &M,
    geo: &StreetGeometry,
    settings: &DependentSettings,
    streams: &Streams,
) -> Result<DependentEstimate> {
    model.validate()?;
    geo.validate()?;
    ensure(settings.n_configs >= 1, || "n_configs must be >= 1".into())?;
    ensure(thetas.iter().all(|t| *t > 0.0), || "thresholds must be > 0".into())?;
    ensure(lambda >= 0.0, || "lambda must be >= 0".into())?;
    ensure(x >= 0.0, || format!("x must be >= 0, got {x}"))?;
    let (a, rho) = (geo.a, geo.rho());
    let window = settings.window.unwrap_or_else(|| interferer_window(rho, model.mean_free()));
    let env_window = (a + window).max(x) + 1.0;
    let fixed_phi = sample_interferers(lambda, a, window, &mut streams.rng(Domain::InterfererField, 0));
    let signal_gain = 1.0 / (consts.k + (x - a) * (x - a));

    let (accepted, hits) = run_batched(
        settings.n_configs,
        || (0u64, vec![0u64; thetas.len()]),
        |idx, (accepted, hits)| {
            let mut rng = streams.rng(Domain::SinrDependent, idx);
            let resampled;
            let phi = if settings.resample_phi {
                resampled = sample_interferers(lambda, a, window, &mut rng);
                &resampled
            } else {
                &fixed_phi
            };
            let env = sample_environment(model, env_window, &mut rng).expect("validated model");
            let covered = env
                .tau_before(x, settings.tau_boundary)
                .map(|tau| tau >= (x - a) / rho)
                .unwrap_or(false);
            if !covered {
                return;
            }
            *accepted += 1;
            let fading_x: f64 = Exp1.sample(&mut rng);
            let signal = consts.c * fading_x * signal_gain;
            let interference = dependent_interference(phi, &env, geo, consts, settings.tau_boundary, &mut rng);
            tally(hits, thetas, signal, interference);
        },
        |total, part| {
            total.0 += part.0;
            merge_hits(&mut total.1, part.1);
        },
    );

    let attempted = settings.n_configs;
    let rate = accepted as f64 / attempted as f64;
    if accepted == 0 || rate < MIN_ACCEPTANCE_RATE {
        return Err(Error::LowAcceptance { rate, accepted, attempted });
    }
    Ok(DependentEstimate {
        estimates: hits.into_iter().map(|h| McEstimate::proportion(h, accepted)).collect(),
        accepted,
        attempted,
        acceptance_rate: rate,
    })
}
