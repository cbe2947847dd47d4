//! Special functions and adaptive quadrature.
//!
//! Everything here is a pure function of its inputs. The quadrature is an
//! adaptive Gauss–Kronrod (10/21 point) scheme that bisects the panel with the
//! largest error estimate until the global estimate meets
//! `max(abs_tol, rel_tol * |result|)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::FRAC_PI_2;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

/// Error control for [`integrate`] and friends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_subdivisions: 2000,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        ensure(self.rel_tol > 0.0, || format!("rel_tol must be > 0, got {}", self.rel_tol))?;
        ensure(self.abs_tol > 0.0, || format!("abs_tol must be > 0, got {}", self.abs_tol))?;
        ensure(self.max_subdivisions >= 1, || "max_subdivisions must be >= 1".into())
    }

    /// Same subdivision budget with tighter tolerances.
    pub fn tight() -> Self {
        Self {
            rel_tol: 1e-13,
            abs_tol: 1e-300,
            max_subdivisions: 5000,
        }
    }
}

/// Truncation control for the `sum over i >= 1` series of the mean-length formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeriesConfig {
    pub term_tol: f64,
    pub consecutive_small: usize,
    pub i_max: usize,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        // i_max is sized for r close to 1 (large rho and alpha), where the
        // scenario-1 terms decay like r^i.
        Self {
            term_tol: 1e-10,
            consecutive_small: 3,
            i_max: 5000,
        }
    }
}

impl SeriesConfig {
    pub fn validate(&self) -> Result<()> {
        ensure(self.term_tol > 0.0, || format!("term_tol must be > 0, got {}", self.term_tol))?;
        ensure(self.consecutive_small >= 1, || "consecutive_small must be >= 1".into())?;
        ensure(self.i_max >= 1, || "i_max must be >= 1".into())
    }
}

// ---------------------------------------------------------------------------
// Log-factorials
// ---------------------------------------------------------------------------

const LN_FACTORIAL_TABLE: usize = 1 << 15;

fn ln_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = Vec::with_capacity(LN_FACTORIAL_TABLE);
        let mut acc = 0.0f64;
        table.push(0.0);
        for k in 1..LN_FACTORIAL_TABLE {
            acc += (k as f64).ln();
            table.push(acc);
        }
        table
    })
}

/// `ln(n!)`, tabulated for small `n`.
pub fn ln_factorial(n: usize) -> f64 {
    match ln_factorial_table().get(n) {
        Some(v) => *v,
        None => statrs::function::gamma::ln_gamma(n as f64 + 1.0),
    }
}

// ---------------------------------------------------------------------------
// Kummer's confluent hypergeometric function
// ---------------------------------------------------------------------------

const KUMMER_EPS: f64 = 1e-17;
const KUMMER_MAX_TERMS: usize = 2_000_000;
const RESCALE_AT: f64 = 1e280;

/// `ln M(a, b, z)`.
///
/// Negative arguments go through `M(a, b, z) = e^z M(b - a, b, -z)` so the power
/// series is only ever summed with non-negative terms.
pub fn ln_kummer_m(a: f64, b: f64, z: f64) -> Result<f64> {
    Ok(z.max(0.0) + ln_kummer_m_scaled(a, b, z)?)
}

/// `ln(e^(-max(z, 0)) M(a, b, z))`.
///
/// Avoids the cancellation of adding `z` and later subtracting a comparable
/// exponent, which matters once `|z|` is large.
pub fn ln_kummer_m_scaled(a: f64, b: f64, z: f64) -> Result<f64> {
    ensure(a.is_finite() && b.is_finite() && z.is_finite(), || {
        format!("Kummer M arguments must be finite, got ({a}, {b}, {z})")
    })?;
    ensure(a > 0.0 && b > a, || format!("Kummer M requires b > a > 0, got ({a}, {b})"))?;
    let (a_eff, z_eff) = if z < 0.0 { (b - a, -z) } else { (a, z) };
    let out = ln_asymptotic_scaled(a_eff, b, z_eff)
        .or_else(|| ln_series_nonnegative(a_eff, b, z_eff).map(|v| v - z_eff))
        .ok_or(Error::KummerEvaluation { a, b, z })?;
    if out.is_finite() {
        Ok(out)
    } else {
        Err(Error::KummerEvaluation { a, b, z })
    }
}

/// `M(a, b, z)`; errors if the value overflows.
pub fn kummer_m(a: f64, b: f64, z: f64) -> Result<f64> {
    let v = ln_kummer_m(a, b, z)?.exp();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::KummerEvaluation { a, b, z })
    }
}

const ASYMPTOTIC_MIN_Z: f64 = 700.0;

/// Large-`z` expansion
/// `M(a, b, z) ~ Gamma(b)/Gamma(a) e^z z^(a-b) sum_k (b-a)_k (1-a)_k / (k! z^k)`,
/// returned without the `e^z` factor.
///
/// Returns `None` when the neglected `e^-z` branch is not negligible or the
/// series starts to diverge before converging.
fn ln_asymptotic_scaled(a: f64, b: f64, z: f64) -> Option<f64> {
    use statrs::function::gamma::ln_gamma;
    if z < ASYMPTOTIC_MIN_Z {
        return None;
    }
    // relative size of the other branch: Gamma(a)/Gamma(b-a) e^-z z^(b-2a)
    if ln_gamma(a) - ln_gamma(b - a) - z + (b - 2.0 * a) * z.ln() > -45.0 {
        return None;
    }
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    for k in 0..10_000 {
        let kf = k as f64;
        let ratio = (b - a + kf) * (1.0 - a + kf) / ((kf + 1.0) * z);
        if ratio == 0.0 {
            break;
        }
        if ratio.abs() >= 1.0 {
            return None;
        }
        term *= ratio;
        sum += term;
        if term.abs() <= KUMMER_EPS * sum.abs() {
            break;
        }
    }
    (sum > 0.0).then(|| ln_gamma(b) - ln_gamma(a) + (a - b) * z.ln() + sum.ln())
}

/// Sums `sum_k (a)_k z^k / ((b)_k k!)` for `z >= 0` and returns its logarithm.
fn ln_series_nonnegative(a: f64, b: f64, z: f64) -> Option<f64> {
    if z == 0.0 {
        return Some(0.0);
    }
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut ln_scale = 0.0f64;
    for k in 0..KUMMER_MAX_TERMS {
        let kf = k as f64;
        let ratio = (a + kf) * z / ((b + kf) * (kf + 1.0));
        term *= ratio;
        sum += term;
        if sum > RESCALE_AT {
            sum /= RESCALE_AT;
            term /= RESCALE_AT;
            ln_scale += RESCALE_AT.ln();
        }
        // Terms are positive and, once the ratio drops below one, the tail is
        // bounded by a geometric series.
        if ratio < 1.0 && term / (1.0 - ratio) <= KUMMER_EPS * sum {
            return Some(sum.ln() + ln_scale);
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Adaptive Gauss–Kronrod quadrature
// ---------------------------------------------------------------------------

// 21-point Kronrod abscissae (non-negative half) with the embedded 10-point
// Gauss rule on the odd indices.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_22,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_725,
    0.054_755_896_574_351_995,
    0.075_039_674_810_919_96,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_84,
    0.134_709_217_311_473_34,
    0.142_775_938_577_060_09,
    0.147_739_104_901_338_49,
    0.149_445_554_002_916_9,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadEstimate {
    pub value: f64,
    pub error: f64,
    pub subdivisions: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod_21<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Panel {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    for j in 0..10 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Panel {
        lo,
        hi,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Adaptive integral of `f` over `[lo, hi]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, cfg: &QuadratureConfig) -> Result<f64> {
    integrate_with_breaks(f, lo, hi, &[], cfg).map(|e| e.value)
}

/// Adaptive integral of `f` over `[lo, hi]` with the initial panels split at
/// `breaks` (points outside `(lo, hi)` are ignored).
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    cfg: &QuadratureConfig,
) -> Result<QuadEstimate> {
    cfg.validate()?;
    ensure(lo.is_finite() && hi.is_finite(), || format!("integration bounds must be finite, got [{lo}, {hi}]"))?;
    ensure(lo <= hi, || format!("integration bounds reversed: [{lo}, {hi}]"))?;
    if lo == hi {
        return Ok(QuadEstimate { value: 0.0, error: 0.0, subdivisions: 0 });
    }

    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|b| *b > lo && *b < hi).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(lo);
    edges.extend(cuts);
    edges.push(hi);

    let mut heap = BinaryHeap::with_capacity(cfg.max_subdivisions + edges.len());
    for w in edges.windows(2) {
        heap.push(gauss_kronrod_21(&f, w[0], w[1]));
    }

    let mut subdivisions = 0usize;
    loop {
        let (value, error) = heap
            .iter()
            .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::NonFinite(format!("integrand on [{lo}, {hi}]")));
        }
        let target = cfg.abs_tol.max(cfg.rel_tol * value.abs());
        if error <= target {
            return Ok(QuadEstimate { value, error, subdivisions });
        }
        let not_converged = Error::QuadratureNotConverged {
            estimate: value,
            error_bound: error,
            subdivisions,
        };
        if subdivisions >= cfg.max_subdivisions {
            return Err(not_converged);
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // panel can no longer be split in floating point
            return Err(not_converged);
        }
        heap.push(gauss_kronrod_21(&f, worst.lo, mid));
        heap.push(gauss_kronrod_21(&f, mid, worst.hi));
        subdivisions += 1;
    }
}

/// `∫_0^∞ f(y) dy` through `y = tan(u)`, `u ∈ [0, π/2)`.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(f: F, cfg: &QuadratureConfig) -> Result<f64> {
    integrate_semi_infinite_scaled(f, 1.0, cfg)
}

/// `∫_0^∞ f(y) dy` through `y = scale * tan(u)`. A scale near the bulk of the
/// integrand keeps narrow peaks away from `u = π/2`.
pub fn integrate_semi_infinite_scaled<F: Fn(f64) -> f64>(f: F, scale: f64, cfg: &QuadratureConfig) -> Result<f64> {
    ensure(scale > 0.0 && scale.is_finite(), || format!("scale must be positive, got {scale}"))?;
    let mapped = |u: f64| {
        let (s, c) = u.sin_cos();
        if c <= 0.0 {
            return 0.0;
        }
        let y = scale * s / c;
        let fy = f(y);
        if fy == 0.0 {
            0.0
        } else {
            fy * scale / (c * c)
        }
    };
    const INITIAL_PANELS: usize = 8;
    let breaks: Vec<f64> = (1..INITIAL_PANELS)
        .map(|k| FRAC_PI_2 * k as f64 / INITIAL_PANELS as f64)
        .collect();
    integrate_with_breaks(mapped, 0.0, FRAC_PI_2, &breaks, cfg).map(|e| e.value)
}

/// Relative difference `|x - y| / max(|x|, |y|)`, zero when both vanish.
pub fn rel_diff(x: f64, y: f64) -> f64 {
    let scale = x.abs().max(y.abs());
    if scale == 0.0 {
        0.0
    } else {
        (x - y).abs() / scale
    }
}
