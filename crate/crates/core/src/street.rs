//! Street geometry and the alternating renewal obstacle process.
//!
//! Users stand on a line at distance `l` from a wall carrying the RIS. Between
//! the user line and the wall sit obstacles of depth `d`, modelled as a
//! stationary alternating renewal process on the positive half line: free
//! intervals of length `U_n` alternate with obstacles of length `W_n`, and the
//! typical user sits in free space at the origin. Obstacle `n` occupies
//! `[B_n, E_n]` with `E_n = sum_{k<=n} (U_k + W_k)` and `B_n = E_n - W_n`.
//!
//! The obstacle-length law is written `F_V`/`γ_V` in some presentations of this
//! model even though the variables are called `W_n`; here everything is named
//! after `W` (the `obstacle` distribution).

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma as GammaDist};
use serde::{Deserialize, Serialize};
use statrs::distribution::ContinuousCDF;

use crate::error::{ensure, Error, Result};
use crate::numerics::{ln_factorial, ln_kummer_m_scaled};

/// Scene geometry: user line, obstacle depth and the useful RIS segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreetGeometry {
    /// Distance from the user line to the wall (m).
    pub l: f64,
    /// Obstacle depth (m).
    pub d: f64,
    /// Left end of the RIS segment that must be visible (m).
    pub a: f64,
    /// Required visible RIS length (m).
    pub delta: f64,
}

impl StreetGeometry {
    pub fn new(l: f64, d: f64, a: f64, delta: f64) -> Result<Self> {
        let g = Self { l, d, a, delta };
        g.validate()?;
        Ok(g)
    }

    /// Geometry with the given `rho = l / d`, taking `l = 10`.
    pub fn with_rho(rho: f64, a: f64, delta: f64) -> Result<Self> {
        ensure(rho > 1.0 && rho.is_finite(), || format!("rho must be > 1, got {rho}"))?;
        Self::new(10.0, 10.0 / rho, a, delta)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.l.is_finite() && self.d.is_finite(), || "l and d must be finite".into())?;
        ensure(self.d > 0.0 && self.l > self.d, || {
            format!("need l > d > 0, got l = {}, d = {}", self.l, self.d)
        })?;
        ensure(self.a >= 0.0 && self.a.is_finite(), || format!("a must be >= 0, got {}", self.a))?;
        ensure(self.delta >= 0.0 && self.delta.is_finite(), || {
            format!("delta must be >= 0, got {}", self.delta)
        })
    }

    /// `rho = l / d > 1`.
    pub fn rho(&self) -> f64 {
        self.l / self.d
    }

    /// Right end `a + delta` of the RIS segment.
    pub fn ris_end(&self) -> f64 {
        self.a + self.delta
    }
}

/// Exponential free (`rate gamma1`) and obstacle (`rate gamma2`) lengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpoEnvParams {
    pub gamma1: f64,
    pub gamma2: f64,
}

impl ExpoEnvParams {
    pub fn new(gamma1: f64, gamma2: f64) -> Result<Self> {
        let p = Self { gamma1, gamma2 };
        p.validate()?;
        Ok(p)
    }

    /// Parameters with `gamma2 = alpha * gamma1`.
    pub fn from_alpha(gamma1: f64, alpha: f64) -> Result<Self> {
        Self::new(gamma1, alpha * gamma1)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.gamma1 > 0.0 && self.gamma1.is_finite(), || {
            format!("gamma1 must be > 0, got {}", self.gamma1)
        })?;
        ensure(self.gamma2 > 0.0 && self.gamma2.is_finite(), || {
            format!("gamma2 must be > 0, got {}", self.gamma2)
        })
    }

    /// `gamma2 / gamma1`: mean free length over mean obstacle length.
    pub fn alpha(&self) -> f64 {
        self.gamma2 / self.gamma1
    }

    /// Geometric ratio of the scenario-1 series,
    /// `r = 1 / ((1 + 1/(rho-1)) (1 + gamma1/(gamma2 (rho-1))))`.
    pub fn r(&self, rho: f64) -> f64 {
        1.0 / ((1.0 + 1.0 / (rho - 1.0)) * (1.0 + self.gamma1 / (self.gamma2 * (rho - 1.0))))
    }

    /// Long-run fraction of the line covered by obstacles.
    pub fn obstacle_fraction(&self) -> f64 {
        self.gamma1 / (self.gamma1 + self.gamma2)
    }

    /// Long-run fraction of the line in free space.
    pub fn free_fraction(&self) -> f64 {
        self.gamma2 / (self.gamma1 + self.gamma2)
    }

    /// Mean and standard deviation of `E_i`.
    pub fn end_moments(&self, i: usize) -> (f64, f64) {
        let n = i as f64;
        let mean = n * (1.0 / self.gamma1 + 1.0 / self.gamma2);
        let var = n * (1.0 / (self.gamma1 * self.gamma1) + 1.0 / (self.gamma2 * self.gamma2));
        (mean, var.sqrt())
    }
}

/// A positive length distribution usable in the renewal process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LengthDistribution {
    Exponential { rate: f64 },
    Uniform { lo: f64, hi: f64 },
    Gamma { shape: f64, rate: f64 },
    Deterministic { value: f64 },
}

impl LengthDistribution {
    pub fn validate(&self) -> Result<()> {
        use LengthDistribution::*;
        let ok = match *self {
            Exponential { rate } => rate > 0.0 && rate.is_finite(),
            Uniform { lo, hi } => lo >= 0.0 && hi > lo && hi.is_finite(),
            Gamma { shape, rate } => shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite(),
            Deterministic { value } => value > 0.0 && value.is_finite(),
        };
        ensure(ok, || format!("invalid length distribution {self:?}"))
    }

    pub fn mean(&self) -> f64 {
        use LengthDistribution::*;
        match *self {
            Exponential { rate } => 1.0 / rate,
            Uniform { lo, hi } => 0.5 * (lo + hi),
            Gamma { shape, rate } => shape / rate,
            Deterministic { value } => value,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        use LengthDistribution::*;
        if x <= 0.0 {
            return 0.0;
        }
        match *self {
            Exponential { rate } => 1.0 - (-rate * x).exp(),
            Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Gamma { shape, rate } => statrs::distribution::Gamma::new(shape, rate)
                .map(|g| g.cdf(x))
                .unwrap_or(f64::NAN),
            Deterministic { value } => {
                if x >= value {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        use LengthDistribution::*;
        match *self {
            Exponential { rate } => Exp::new(rate).expect("validated").sample(rng),
            Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            Gamma { shape, rate } => GammaDist::new(shape, 1.0 / rate).expect("validated").sample(rng),
            Deterministic { value } => value,
        }
    }

    /// Draw from the equilibrium law with density `(1 - F(x)) / mean`: a
    /// length-biased draw scaled by an independent uniform.
    pub fn sample_equilibrium<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        use LengthDistribution::*;
        match *self {
            Exponential { rate } => Exp::new(rate).expect("validated").sample(rng),
            _ => {
                let biased = match *self {
                    Uniform { lo, hi } => (lo * lo + rng.random::<f64>() * (hi * hi - lo * lo)).sqrt(),
                    Gamma { shape, rate } => GammaDist::new(shape + 1.0, 1.0 / rate).expect("validated").sample(rng),
                    Deterministic { value } => value,
                    Exponential { .. } => unreachable!(),
                };
                // (0, 1] keeps the first free interval strictly positive
                biased * (1.0 - rng.random::<f64>())
            }
        }
    }
}

/// Arbitrary free/obstacle length laws; simulation only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneralEnvParams {
    pub free: LengthDistribution,
    pub obstacle: LengthDistribution,
}

impl GeneralEnvParams {
    pub fn validate(&self) -> Result<()> {
        self.free.validate()?;
        self.obstacle.validate()
    }
}

/// Either parameterisation of the obstacle process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvParams {
    Exponential(ExpoEnvParams),
    General(GeneralEnvParams),
}

impl From<ExpoEnvParams> for EnvParams {
    fn from(p: ExpoEnvParams) -> Self {
        EnvParams::Exponential(p)
    }
}

impl From<GeneralEnvParams> for EnvParams {
    fn from(p: GeneralEnvParams) -> Self {
        EnvParams::General(p)
    }
}

/// Interval-length laws of an alternating renewal process started in free space.
pub trait RenewalModel: Sync {
    fn validate(&self) -> Result<()>;
    fn mean_free(&self) -> f64;
    fn mean_obstacle(&self) -> f64;
    /// First free interval `U_1`, drawn from the stationary residual law.
    fn sample_first_free<R: Rng + ?Sized>(&self, rng: &mut R) -> f64;
    fn sample_free<R: Rng + ?Sized>(&self, rng: &mut R) -> f64;
    fn sample_obstacle<R: Rng + ?Sized>(&self, rng: &mut R) -> f64;

    fn obstacle_fraction(&self) -> f64 {
        self.mean_obstacle() / (self.mean_free() + self.mean_obstacle())
    }
}

impl RenewalModel for ExpoEnvParams {
    fn validate(&self) -> Result<()> {
        ExpoEnvParams::validate(self)
    }
    fn mean_free(&self) -> f64 {
        1.0 / self.gamma1
    }
    fn mean_obstacle(&self) -> f64 {
        1.0 / self.gamma2
    }
    fn sample_first_free<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // memoryless: the residual law is the law itself
        self.sample_free(rng)
    }
    fn sample_free<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Exp::new(self.gamma1).expect("validated").sample(rng)
    }
    fn sample_obstacle<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Exp::new(self.gamma2).expect("validated").sample(rng)
    }
}

impl RenewalModel for GeneralEnvParams {
    fn validate(&self) -> Result<()> {
        GeneralEnvParams::validate(self)
    }
    fn mean_free(&self) -> f64 {
        self.free.mean()
    }
    fn mean_obstacle(&self) -> f64 {
        self.obstacle.mean()
    }
    fn sample_first_free<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.free.sample_equilibrium(rng)
    }
    fn sample_free<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.free.sample(rng)
    }
    fn sample_obstacle<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.obstacle.sample(rng)
    }
}

impl RenewalModel for EnvParams {
    fn validate(&self) -> Result<()> {
        match self {
            EnvParams::Exponential(p) => p.validate(),
            EnvParams::General(p) => p.validate(),
        }
    }
    fn mean_free(&self) -> f64 {
        match self {
            EnvParams::Exponential(p) => p.mean_free(),
            EnvParams::General(p) => p.mean_free(),
        }
    }
    fn mean_obstacle(&self) -> f64 {
        match self {
            EnvParams::Exponential(p) => p.mean_obstacle(),
            EnvParams::General(p) => p.mean_obstacle(),
        }
    }
    fn sample_first_free<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            EnvParams::Exponential(p) => p.sample_first_free(rng),
            EnvParams::General(p) => p.sample_first_free(rng),
        }
    }
    fn sample_free<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            EnvParams::Exponential(p) => p.sample_free(rng),
            EnvParams::General(p) => p.sample_free(rng),
        }
    }
    fn sample_obstacle<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            EnvParams::Exponential(p) => p.sample_obstacle(rng),
            EnvParams::General(p) => p.sample_obstacle(rng),
        }
    }
}

/// One obstacle `[begin, end]` on the street.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub begin: f64,
    pub end: f64,
}

/// Convention for `tau` when no obstacle precedes the point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauBoundary {
    /// Distance to the origin, where the typical user stands.
    #[default]
    Origin,
    Infinite,
}

/// A free interval between consecutive obstacles (or the window edges).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gap {
    /// 0 for the interval containing the origin, `i` for the one after obstacle `i`.
    pub index: usize,
    pub start: f64,
    pub end: f64,
    /// True when `end` is the window edge rather than an obstacle start.
    pub truncated: bool,
}

/// One realisation of the obstacle process on the window `(0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    window: f64,
    obstacles: Vec<Obstacle>,
}

impl Environment {
    /// Validates ordering: `0 < B_1 < E_1 < B_2 < ...` and `B_n <= T`.
    pub fn new(window: f64, obstacles: Vec<Obstacle>) -> Result<Self> {
        ensure(window > 0.0 && window.is_finite(), || format!("window must be > 0, got {window}"))?;
        let mut prev_end = 0.0;
        for (k, o) in obstacles.iter().enumerate() {
            ensure(o.begin > prev_end && o.end > o.begin && o.end.is_finite(), || {
                format!("obstacle {} = [{}, {}] breaks the ordering", k + 1, o.begin, o.end)
            })?;
            ensure(o.begin <= window, || format!("obstacle {} starts beyond the window", k + 1))?;
            prev_end = o.end;
        }
        Ok(Self { window, obstacles })
    }

    pub fn from_pairs(window: f64, pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(window, pairs.iter().map(|&(begin, end)| Obstacle { begin, end }).collect())
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    pub fn obstacles(&self) -> &[Obstacle] {
        &self.obstacles
    }

    /// Number of obstacles with `begin <= p`.
    fn count_started(&self, p: f64) -> usize {
        self.obstacles.partition_point(|o| o.begin <= p)
    }

    /// Index of the obstacle strictly containing `p`, if any.
    pub fn obstacle_containing(&self, p: f64) -> Option<usize> {
        let k = self.count_started(p);
        if k == 0 {
            return None;
        }
        let o = self.obstacles[k - 1];
        (p > o.begin && p < o.end).then_some(k - 1)
    }

    /// `X(p) == 0`. Obstacle boundaries count as free.
    pub fn is_free(&self, p: f64) -> bool {
        self.obstacle_containing(p).is_none()
    }

    /// Distance from `y` back to the end of the last obstacle before it.
    pub fn tau_before(&self, y: f64, boundary: TauBoundary) -> Result<f64> {
        if self.obstacle_containing(y).is_some() {
            return Err(Error::InsideObstacle(y));
        }
        let k = self.count_started(y);
        if k == 0 {
            return Ok(match boundary {
                TauBoundary::Origin => y,
                TauBoundary::Infinite => f64::INFINITY,
            });
        }
        Ok(y - self.obstacles[k - 1].end)
    }

    /// Free intervals inside the window, in order, starting with gap 0.
    pub fn gaps(&self) -> Vec<Gap> {
        let mut out = Vec::with_capacity(self.obstacles.len() + 1);
        let mut start = 0.0;
        for (k, o) in self.obstacles.iter().enumerate() {
            out.push(Gap { index: k, start, end: o.begin, truncated: false });
            start = o.end;
        }
        if start < self.window {
            out.push(Gap {
                index: self.obstacles.len(),
                start,
                end: self.window,
                truncated: true,
            });
        }
        out
    }

    /// Length of `(0, T]` covered by obstacles.
    pub fn occupied_length(&self) -> f64 {
        self.obstacles
            .iter()
            .map(|o| o.end.min(self.window) - o.begin)
            .sum()
    }

    /// Recovers `(U_i, W_i)` for every obstacle: `U_i = B_i - E_{i-1}`, `W_i = E_i - B_i`.
    pub fn renewal_lengths(&self) -> Vec<(f64, f64)> {
        let mut prev_end = 0.0;
        self.obstacles
            .iter()
            .map(|o| {
                let pair = (o.begin - prev_end, o.end - o.begin);
                prev_end = o.end;
                pair
            })
            .collect()
    }
}

/// Samples the obstacle process on `(0, window]`.
///
/// Draws `U_1` from the stationary first-interval law, then alternates `W`,
/// `U` draws until an obstacle ends past the window. Obstacles starting
/// beyond the window are dropped.
pub fn sample_environment<M: RenewalModel, R: Rng + ?Sized>(model: &M, window: f64, rng: &mut R) -> Result<Environment> {
    model.validate()?;
    ensure(window > 0.0 && window.is_finite(), || format!("window must be > 0, got {window}"))?;
    let mut obstacles = Vec::with_capacity((window / (model.mean_free() + model.mean_obstacle())) as usize + 4);
    let mut begin = model.sample_first_free(rng);
    while begin <= window {
        let end = begin + model.sample_obstacle(rng);
        obstacles.push(Obstacle { begin, end });
        if end > window {
            break;
        }
        begin = end + model.sample_free(rng);
    }
    Ok(Environment { window, obstacles })
}

/// `ln f_i(t)`, the log-density of `E_i` for exponential lengths:
/// `f_i(t) = (g1 g2)^i / (2i-1)! t^(2i-1) e^(-g2 t) M(i, 2i, (g2 - g1) t)`.
pub fn ln_density_f_i(i: usize, params: &ExpoEnvParams, t: f64) -> Result<f64> {
    ensure(i >= 1, || "f_i needs i >= 1".into())?;
    ensure(t >= 0.0 && t.is_finite(), || format!("f_i needs finite t >= 0, got {t}"))?;
    if t == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let n = i as f64;
    let (g1, g2) = (params.gamma1, params.gamma2);
    // e^(-g2 t) M(i, 2i, (g2 - g1) t) = e^(-min(g1, g2) t) [e^(-|z|) M(i, 2i, |z|)]
    let ln_m = ln_kummer_m_scaled(n, 2.0 * n, (g2 - g1) * t)?;
    Ok(n * (g1 * g2).ln() - ln_factorial(2 * i - 1) + (2.0 * n - 1.0) * t.ln() - g1.min(g2) * t + ln_m)
}

/// Density of `E_i` at `t` (see [`ln_density_f_i`]).
pub fn density_f_i(i: usize, params: &ExpoEnvParams, t: f64) -> Result<f64> {
    let v = ln_density_f_i(i, params, t)?.exp();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(format!("f_{i}({t})")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::{Domain, Streams};
    use crate::numerics::{integrate, rel_diff, QuadratureConfig};

    #[test]
    fn geometry_validation() {
        assert!(StreetGeometry::new(10.0, 0.5, 0.0, 0.0).is_ok());
        assert!(StreetGeometry::new(0.5, 0.5, 0.0, 0.0).is_err());
        assert!(StreetGeometry::new(10.0, 0.0, 0.0, 0.0).is_err());
        assert!(StreetGeometry::new(10.0, 0.5, -1.0, 0.0).is_err());
        assert!(StreetGeometry::new(10.0, 0.5, 0.0, -0.1).is_err());
        assert_eq!(StreetGeometry::new(10.0, 0.5, 0.0, 0.0).unwrap().rho(), 20.0);
    }

    #[test]
    fn tau_examples() {
        let env = Environment::from_pairs(20.0, &[(5.0, 7.0)]).unwrap();
        assert_eq!(env.tau_before(10.0, TauBoundary::Origin).unwrap(), 3.0);
        let empty = Environment::new(20.0, vec![]).unwrap();
        assert_eq!(empty.tau_before(4.0, TauBoundary::Origin).unwrap(), 4.0);
        assert_eq!(empty.tau_before(4.0, TauBoundary::Infinite).unwrap(), f64::INFINITY);
        let env = Environment::from_pairs(20.0, &[(1.0, 2.0), (4.0, 6.0)]).unwrap();
        assert_eq!(env.tau_before(6.5, TauBoundary::Origin).unwrap(), 0.5);
        assert_eq!(env.tau_before(5.0, TauBoundary::Origin), Err(Error::InsideObstacle(5.0)));
    }

    #[test]
    fn environment_rejects_bad_ordering() {
        assert!(Environment::from_pairs(10.0, &[(0.0, 1.0)]).is_err());
        assert!(Environment::from_pairs(10.0, &[(1.0, 3.0), (2.0, 4.0)]).is_err());
        assert!(Environment::from_pairs(10.0, &[(2.0, 2.0)]).is_err());
        assert!(Environment::from_pairs(10.0, &[(11.0, 12.0)]).is_err());
    }

    #[test]
    fn short_window_can_be_empty() {
        let params = ExpoEnvParams::new(1e-6, 1.0).unwrap();
        let streams = Streams::new(1);
        let env = sample_environment(&params, 1.0, &mut streams.rng(Domain::Environment, 0)).unwrap();
        assert!(env.obstacles().is_empty());
        assert_eq!(env.gaps().len(), 1);
        assert!(env.gaps()[0].truncated);
    }

    #[test]
    fn sampled_environment_invariants() {
        let params = ExpoEnvParams::new(1.0, 1.0).unwrap();
        let streams = Streams::new(5);
        for k in 0..200 {
            let env = sample_environment(&params, 100.0, &mut streams.rng(Domain::Environment, k)).unwrap();
            let rebuilt = Environment::new(env.window(), env.obstacles().to_vec());
            assert!(rebuilt.is_ok());
            assert!(env.obstacles()[0].begin > 0.0);
            let last = env.obstacles().last().unwrap();
            assert!(last.end > 100.0 || last.begin <= 100.0);
            let mut e_prev = 0.0;
            for ((u, w), o) in env.renewal_lengths().iter().zip(env.obstacles()) {
                assert_eq!(o.begin + w, o.end);
                assert!((e_prev + u - o.begin).abs() <= 1e-12 * o.begin.max(1.0));
                e_prev = o.end;
            }
        }
    }

    #[test]
    fn free_length_mean_law_of_large_numbers() {
        let params = ExpoEnvParams::new(1.0, 1.0).unwrap();
        let mut rng = Streams::new(99).rng(Domain::Environment, 0);
        let n = 100_000;
        let mean = (0..n).map(|_| params.sample_free(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "{mean}");
    }

    #[test]
    fn equilibrium_sampler_matches_residual_law() {
        // For Uniform[1, 3] the equilibrium law has mean E[U^2] / (2 E[U]) = (13/3) / 4.
        let dist = LengthDistribution::Uniform { lo: 1.0, hi: 3.0 };
        let mut rng = Streams::new(3).rng(Domain::Environment, 0);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| dist.sample_equilibrium(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!((mean - 13.0 / 12.0).abs() < 0.01, "{mean}");
        // P(U_1 <= 1) = ∫_0^1 (1 - F(x)) / 2 dx = 1/2
        let frac = xs.iter().filter(|x| **x <= 1.0).count() as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.005, "{frac}");

        let g = LengthDistribution::Gamma { shape: 2.0, rate: 1.0 };
        let mean = (0..n).map(|_| g.sample_equilibrium(&mut rng)).sum::<f64>() / n as f64;
        // E[U^2] / (2 E[U]) = 6 / 4
        assert!((mean - 1.5).abs() < 0.02, "{mean}");
    }

    #[test]
    fn length_distribution_validation_and_cdf() {
        assert!(LengthDistribution::Deterministic { value: 0.0 }.validate().is_err());
        assert!(LengthDistribution::Uniform { lo: 2.0, hi: 1.0 }.validate().is_err());
        assert!(LengthDistribution::Exponential { rate: -1.0 }.validate().is_err());
        let g = LengthDistribution::Gamma { shape: 1.0, rate: 2.0 };
        assert!((g.cdf(0.7) - (1.0 - (-1.4f64).exp())).abs() < 1e-12);
        assert_eq!(LengthDistribution::Deterministic { value: 2.0 }.cdf(1.0), 0.0);
    }

    #[test]
    fn f1_equal_rates_is_gamma_two() {
        let p = ExpoEnvParams::new(1.0, 1.0).unwrap();
        for &t in &[0.1f64, 0.5, 1.0, 3.0, 10.0] {
            let want = t * (-t).exp();
            assert!(rel_diff(density_f_i(1, &p, t).unwrap(), want) < 1e-14);
        }
        assert_eq!(density_f_i(1, &p, 0.0).unwrap(), 0.0);
        assert!(density_f_i(1, &p, -1.0).is_err());
    }

    #[test]
    fn f1_matches_convolution_oracle() {
        let p = ExpoEnvParams::new(1.0, 2.0).unwrap();
        let cfg = QuadratureConfig::default();
        let conv = integrate(|s: f64| (-s).exp() * 2.0 * (-2.0 * (1.0 - s)).exp(), 0.0, 1.0, &cfg).unwrap();
        assert!(rel_diff(density_f_i(1, &p, 1.0).unwrap(), conv) < 1e-10);
    }
}
