//! Per-realisation covered domain and Monte-Carlo estimation of its mean length.
//!
//! Two independent routes compute the covered domain of one environment:
//! [`covered_set_scenarios`] applies the per-gap scenario split, and
//! [`visible_set_scan`] evaluates the exact sight-line test [`is_visible`] on a
//! grid and bisects every visibility change.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::montecarlo::{run_batched, Domain, McEstimate, MeanAccumulator, Streams};
use crate::street::{sample_environment, Environment, Gap, RenewalModel, StreetGeometry};

/// Sorted, pairwise disjoint union of closed intervals.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CoveredSet {
    intervals: Vec<(f64, f64)>,
}

impl CoveredSet {
    /// Builds a set from intervals; empty ones are dropped, and the rest must be
    /// sorted and disjoint.
    pub fn from_intervals(intervals: Vec<(f64, f64)>) -> Result<Self> {
        let intervals: Vec<_> = intervals.into_iter().filter(|(lo, hi)| hi > lo).collect();
        for w in intervals.windows(2) {
            ensure(w[0].1 <= w[1].0, || format!("intervals {:?} and {:?} overlap", w[0], w[1]))?;
        }
        Ok(Self { intervals })
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn total_length(&self) -> f64 {
        self.intervals.iter().map(|(lo, hi)| hi - lo).sum()
    }

    pub fn contains(&self, p: f64) -> bool {
        let k = self.intervals.partition_point(|(lo, _)| *lo <= p);
        k > 0 && p <= self.intervals[k - 1].1
    }

    /// Length of the symmetric difference with `other`.
    pub fn symmetric_difference_length(&self, other: &CoveredSet) -> f64 {
        let mut cuts: Vec<f64> = self
            .intervals
            .iter()
            .chain(other.intervals.iter())
            .flat_map(|(lo, hi)| [*lo, *hi])
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        cuts.windows(2)
            .filter(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                self.contains(mid) != other.contains(mid)
            })
            .map(|w| w[1] - w[0])
            .sum()
    }
}

/// Exact visibility of the whole RIS segment `[a, a + delta]` from `p`.
///
/// The sight region from `(p, 0)` to the segment on the wall spans
/// `[p + (a - p) y / l, p + (a + delta - p) y / l]` at height `y`; `p` is
/// covered iff it lies in free space and no obstacle rectangle
/// `[B, E] x [0, d]` meets that region. Grazing contact does not block.
pub fn is_visible(p: f64, env: &Environment, geo: &StreetGeometry) -> bool {
    if p < 0.0 || !env.is_free(p) {
        return false;
    }
    let slope_left = (geo.a - p) / geo.l;
    let slope_right = (geo.ris_end() - p) / geo.l;
    let x_min = p.min(p + slope_left * geo.d);
    let x_max = p.max(p + slope_right * geo.d);

    let obstacles = env.obstacles();
    let first = obstacles.partition_point(|o| o.end <= x_min);
    obstacles[first..]
        .iter()
        .take_while(|o| o.begin < x_max)
        .all(|o| !sight_region_hits(p, slope_left, slope_right, o.begin, o.end, geo.d))
}

/// Open-interval bounds `(lo, hi)` of `{y : p + slope * y < bound}` (`below`)
/// or `{y : p + slope * y > bound}`.
fn linear_constraint(p: f64, slope: f64, bound: f64, below: bool) -> (f64, f64) {
    let inf = f64::INFINITY;
    if slope == 0.0 {
        let holds = if below { p < bound } else { p > bound };
        return if holds { (-inf, inf) } else { (inf, -inf) };
    }
    let y = (bound - p) / slope;
    match (below, slope > 0.0) {
        (true, true) | (false, false) => (-inf, y),
        (true, false) | (false, true) => (y, inf),
    }
}

fn sight_region_hits(p: f64, slope_left: f64, slope_right: f64, begin: f64, end: f64, depth: f64) -> bool {
    // left edge strictly left of the obstacle end and right edge strictly right
    // of its start, at some height in [0, d]
    let (lo1, hi1) = linear_constraint(p, slope_left, end, true);
    let (lo2, hi2) = linear_constraint(p, slope_right, begin, false);
    let lo = lo1.max(lo2);
    let hi = hi1.min(hi2);
    lo < hi && lo < depth && hi > 0.0
}

/// Which case of the per-gap split produced a gap's interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    /// Gap starts right of the RIS left end (`E_i >= a`).
    LeftShadow,
    /// RIS segment entirely above the gap's sky (`E_i < a`, `B_{i+1} >= a + delta`).
    FullGap,
    /// Gap starts left of `a` and the next obstacle begins before `a + delta`.
    RightShadow,
}

/// Covered part of one gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapCoverage {
    pub gap: Gap,
    pub scenario: Scenario,
    /// Empty intervals are reported as `None`.
    pub interval: Option<(f64, f64)>,
}

/// Applies the scenario split to every gap, gap 0 included (with `E_0 = 0`).
pub fn classify_gaps(env: &Environment, geo: &StreetGeometry) -> Vec<GapCoverage> {
    let rho = geo.rho();
    let a = geo.a;
    let ris_end = geo.ris_end();
    env.gaps()
        .into_iter()
        .map(|gap| {
            let (start, next) = (gap.start, gap.end);
            let (scenario, lo, hi) = if start >= a {
                let edge = start + (start - a) / (rho - 1.0);
                (Scenario::LeftShadow, edge.min(next), next)
            } else if next >= ris_end {
                (Scenario::FullGap, start, next)
            } else {
                let edge = (rho * next - ris_end) / (rho - 1.0);
                (Scenario::RightShadow, start, edge.max(start))
            };
            GapCoverage {
                gap,
                scenario,
                interval: (hi > lo).then_some((lo, hi)),
            }
        })
        .collect()
}

/// Covered domain of `env` according to the per-gap scenario split.
pub fn covered_set_scenarios(env: &Environment, geo: &StreetGeometry) -> CoveredSet {
    CoveredSet {
        intervals: classify_gaps(env, geo).into_iter().filter_map(|g| g.interval).collect(),
    }
}

/// Covered length with gap 0 optionally left out.
pub fn covered_length(env: &Environment, geo: &StreetGeometry, include_gap0: bool) -> f64 {
    classify_gaps(env, geo)
        .into_iter()
        .filter(|g| include_gap0 || g.gap.index > 0)
        .filter_map(|g| g.interval)
        .map(|(lo, hi)| hi - lo)
        .sum()
}

const BISECTION_STEPS: usize = 80;

/// Exact visible set on `[0, T]` from a grid scan of [`is_visible`].
///
/// The grid has the given `spacing`; every point in `hints` is also probed
/// along with ten points on either side at `spacing / 10`. Each visibility
/// change between neighbouring probes is bisected to machine precision.
pub fn visible_set_scan(env: &Environment, geo: &StreetGeometry, spacing: f64, hints: &[f64]) -> CoveredSet {
    let window = env.window();
    let n = (window / spacing).ceil() as usize;
    let mut probes: Vec<f64> = (0..=n).map(|k| (k as f64 * spacing).min(window)).collect();
    for &h in hints {
        for k in -10i32..=10 {
            let p = h + k as f64 * spacing / 10.0;
            if (0.0..=window).contains(&p) {
                probes.push(p);
            }
        }
    }
    probes.sort_by(f64::total_cmp);
    probes.dedup();

    let vis: Vec<bool> = probes.iter().map(|&p| is_visible(p, env, geo)).collect();
    let bisect = |mut inside: f64, mut outside: f64| {
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (inside + outside);
            if mid == inside || mid == outside {
                break;
            }
            if is_visible(mid, env, geo) {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    };

    let mut intervals = Vec::new();
    let mut open: Option<f64> = vis[0].then_some(probes[0]);
    for k in 1..probes.len() {
        match (vis[k - 1], vis[k]) {
            (false, true) => open = Some(bisect(probes[k], probes[k - 1])),
            (true, false) => {
                let lo = open.take().expect("interval opened");
                intervals.push((lo, bisect(probes[k - 1], probes[k])));
            }
            _ => {}
        }
    }
    if let Some(lo) = open {
        intervals.push((lo, *probes.last().expect("non-empty grid")));
    }
    intervals.retain(|(lo, hi)| hi > lo);
    CoveredSet { intervals }
}

/// Measure of disagreement between the scenario split and the exact scan.
pub fn scenario_discrepancy(env: &Environment, geo: &StreetGeometry, spacing: f64) -> f64 {
    let scenarios = covered_set_scenarios(env, geo);
    let hints: Vec<f64> = scenarios.intervals().iter().flat_map(|(lo, hi)| [*lo, *hi, 0.5 * (lo + hi)]).collect();
    let exact = visible_set_scan(env, geo, spacing, &hints);
    scenarios.symmetric_difference_length(&exact)
}

/// Length that exact geometry would clip from scenario-1 gaps whose next
/// obstacle starts before `a + delta` (the scenario split keeps the whole
/// right end of such gaps).
pub fn unclipped_right_measure(env: &Environment, geo: &StreetGeometry) -> f64 {
    let rho = geo.rho();
    let ris_end = geo.ris_end();
    classify_gaps(env, geo)
        .into_iter()
        .filter(|g| g.scenario == Scenario::LeftShadow && !g.gap.truncated && ris_end > g.gap.end)
        .filter_map(|g| g.interval)
        .map(|(lo, hi)| {
            let limit = (rho * hi - ris_end) / (rho - 1.0);
            (hi - limit.max(lo)).max(0.0)
        })
        .sum()
}

/// Default simulation window `a + delta + 50 rho * mean_free`.
pub fn default_window(geo: &StreetGeometry, mean_free: f64) -> f64 {
    geo.ris_end() + 50.0 * geo.rho() * mean_free
}

/// Settings for [`mc_mean_covered_length`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoveredLengthMc {
    pub n_trials: u64,
    /// Simulation window; [`default_window`] when `None`.
    pub window: Option<f64>,
    pub include_gap0: bool,
}

impl CoveredLengthMc {
    pub fn new(n_trials: u64) -> Self {
        Self { n_trials, window: None, include_gap0: true }
    }
}

/// Monte-Carlo mean of the covered length over independent environments.
pub fn mc_mean_covered_length<M: RenewalModel>(
    model: &M,
    geo: &StreetGeometry,
    opts: &CoveredLengthMc,
    streams: &Streams,
) -> Result<McEstimate> {
    model.validate()?;
    geo.validate()?;
    ensure(opts.n_trials >= 1, || "n_trials must be >= 1".into())?;
    let window = opts.window.unwrap_or_else(|| default_window(geo, model.mean_free()));
    ensure(window > 0.0, || format!("window must be > 0, got {window}"))?;
    let acc = run_batched(
        opts.n_trials,
        || Ok(MeanAccumulator::default()),
        |idx, acc: &mut Result<MeanAccumulator>| {
            let Ok(inner) = acc else { return };
            let mut rng = streams.rng(Domain::CoveredLength, idx);
            match sample_environment(model, window, &mut rng) {
                Ok(env) => inner.push(covered_length(&env, geo, opts.include_gap0)),
                Err(e) => *acc = Err(e),
            }
        },
        |total, part| match (total.as_mut(), part) {
            (Ok(t), Ok(p)) => t.merge(&p),
            (Ok(_), Err(e)) => *total = Err(e),
            (Err(_), _) => {}
        },
    )?;
    Ok(acc.estimate())
}

/// Mean number of users reachable from the origin, `mu * E[L]`.
pub fn mean_connectable_customers(mu: f64, mean_length: f64) -> Result<f64> {
    ensure(mu >= 0.0 && mu.is_finite(), || format!("mu must be >= 0, got {mu}"))?;
    Ok(mu * mean_length)
}

/// Number of users in one realisation: Poisson with mean `mu * |covered|`.
pub fn sample_connectable_customers<R: Rng + ?Sized>(mu: f64, covered: &CoveredSet, rng: &mut R) -> Result<u64> {
    let mean = mean_connectable_customers(mu, covered.total_length())?;
    if mean == 0.0 {
        return Ok(0);
    }
    let poisson = Poisson::new(mean).map_err(|e| crate::Error::InvalidParameter(e.to_string()))?;
    Ok(poisson.sample(rng) as u64)
}

/// Monte-Carlo mean of the number of reachable users.
pub fn mc_connectable_customers<M: RenewalModel>(
    model: &M,
    geo: &StreetGeometry,
    mu: f64,
    opts: &CoveredLengthMc,
    streams: &Streams,
) -> Result<McEstimate> {
    mean_connectable_customers(mu, 0.0)?;
    model.validate()?;
    let window = opts.window.unwrap_or_else(|| default_window(geo, model.mean_free()));
    let acc = run_batched(
        opts.n_trials,
        MeanAccumulator::default,
        |idx, acc| {
            let mut rng = streams.rng(Domain::Customers, idx);
            let env = sample_environment(model, window, &mut rng).expect("validated parameters");
            let covered = covered_set_scenarios(&env, geo);
            let count = sample_connectable_customers(mu, &covered, &mut rng).expect("validated mu");
            acc.push(count as f64);
        },
        |t, p| t.merge(&p),
    );
    Ok(acc.estimate())
}
