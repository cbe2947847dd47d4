//! Built-in numerical consistency checks.

use serde::{Deserialize, Serialize};

use crate::coverage_analytic::{mean_length_theorem1, mean_length_theorem2, verify_inner_expectations, InnerExpectations};
use crate::error::Result;
use crate::numerics::{integrate, ln_factorial, ln_kummer_m, rel_diff, QuadratureConfig, SeriesConfig};
use crate::sinr::{coverage_probability_analytic, radio_constants, RadioParams, SinrQuery};
use crate::street::{ExpoEnvParams, StreetGeometry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfTestCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SelfTestReport {
    pub checks: Vec<SelfTestCheck>,
}

impl SelfTestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn record(&mut self, name: &str, outcome: Result<String>) {
        let (passed, detail) = match outcome {
            Ok(detail) => (true, detail),
            Err(e) => (false, e.to_string()),
        };
        self.checks.push(SelfTestCheck { name: name.to_string(), passed, detail });
    }
}

/// `M(i, 2i, z)` through its Euler integral.
pub fn kummer_integral(i: usize, z: f64) -> Result<f64> {
    let ln_norm = ln_factorial(2 * i - 1) - 2.0 * ln_factorial(i - 1);
    let shift = z.max(0.0);
    let cfg = QuadratureConfig::tight();
    let body = integrate(
        |u| ((i - 1) as f64 * (u * (1.0 - u)).ln() + z * u - shift).exp(),
        0.0,
        1.0,
        &cfg,
    )?;
    Ok((ln_norm + shift).exp() * body)
}

fn kummer_check() -> Result<String> {
    let mut worst = 0.0f64;
    for &(i, z) in &[(1usize, 0.7), (2, -3.0), (3, 5.0), (5, -10.0), (10, 2.5), (4, 0.0)] {
        let series = ln_kummer_m(i as f64, 2.0 * i as f64, z)?.exp();
        let quad = kummer_integral(i, z)?;
        let rel = rel_diff(series, quad);
        if rel > 1e-10 {
            return Err(crate::Error::SelfTest(format!(
                "M({i}, {}, {z}): series {series} vs integral {quad}",
                2 * i
            )));
        }
        worst = worst.max(rel);
    }
    Ok(format!("max relative difference {worst:.2e}"))
}

fn coverage_identity_check() -> Result<String> {
    let geo = StreetGeometry::new(10.0, 0.5, 0.0, 0.0)?;
    let consts = radio_constants(&RadioParams::reference(), &geo)?;
    let quad = QuadratureConfig::default();
    let mut worst = 0.0f64;
    for &theta in &[0.1, 1.0, 25.0] {
        let q = SinrQuery::new(10.0, theta, &consts, 0.0)?;
        let v = coverage_probability_analytic(&q, 0.2, &consts, 0.5, geo.rho(), &quad)?;
        worst = worst.max(rel_diff(v.exponent, v.exponent_direct));
    }
    Ok(format!("max relative difference {worst:.2e}"))
}

fn mean_length_routes_check() -> Result<String> {
    let quad = QuadratureConfig::default();
    let series = SeriesConfig::default();
    let mut worst = 0.0f64;
    for &(rho, a, delta, g1, g2) in &[(20.0, 0.0, 0.0, 0.5, 0.5), (10.0, 1.0, 0.5, 0.5, 1.5), (5.0, 2.0, 0.0, 1.0, 0.5)] {
        let params = ExpoEnvParams::new(g1, g2)?;
        let geo = StreetGeometry::with_rho(rho, a, delta)?;
        let t1 = mean_length_theorem1(&params, &geo, &quad, &series)?.total;
        let t2 = mean_length_theorem2(&params, &geo, &quad, &series)?.total;
        let rel = rel_diff(t1, t2);
        if rel > 1e-6 {
            return Err(crate::Error::SelfTest(format!(
                "rho={rho} a={a} delta={delta}: {t1} vs {t2}"
            )));
        }
        worst = worst.max(rel);
    }
    Ok(format!("max relative difference {worst:.2e}"))
}

/// Runs every check; failures are reported, not raised.
pub fn run_selftest() -> SelfTestReport {
    let mut report = SelfTestReport::default();
    report.record("kummer series vs Euler integral", kummer_check());
    report.record(
        "inner expectations vs quadrature",
        verify_inner_expectations(&InnerExpectations::default()).map(|_| "ok".to_string()),
    );
    report.record("coverage exponent change of variable", coverage_identity_check());
    report.record("mean length integral vs closed form", mean_length_routes_check());
    report
}
