//! Subcommand implementations. Each returns the CSV document it produced.

use ris_coverage::coverage_sim::default_window;
use ris_coverage::montecarlo::Domain;
use ris_coverage::selftest::{run_selftest, SelfTestReport};
use ris_coverage::sinr::{effective_intensity, interferer_window};
use ris_coverage::street::{sample_environment, RenewalModel};
use ris_coverage::{
    coverage_probability_analytic, mc_coverage_dependent, mc_coverage_h0, mc_mean_covered_length, mean_length_corollary,
    mean_length_theorem1, mean_length_theorem2, radio_constants, CoveredLengthMc, DependentSettings, EnvParams,
    ExpoEnvParams, H0Settings, QuadratureConfig, SeriesConfig, SinrQuery, Streams,
};

use crate::config::{Resolved, SweepVariable, DEFAULT_GAMMA2, DEFAULT_L};
use crate::output::{format_f64, Csv};
use crate::CliError;

/// Threshold grid used when the config has no theta sweep.
pub const DEFAULT_THETAS: [f64; 8] = [0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 25.0];

fn provenance(command: &str, r: &Resolved) -> Csv {
    let mut csv = Csv::with_provenance(command, &r.config.canonical_json(), r.config.mc.seed);
    let g = &r.geometry;
    csv.meta(
        "geometry",
        &format!("l={} d={} a={} delta={} rho={}", g.l, g.d, g.a, g.delta, g.rho()),
    );
    if r.defaulted_l {
        csv.meta("artifact_default", &format!("l={DEFAULT_L}"));
    }
    if r.defaulted_gamma2 {
        csv.meta("artifact_default", &format!("gamma2={DEFAULT_GAMMA2}"));
    }
    csv
}

fn sweep_grid(r: &Resolved, variable: SweepVariable) -> Result<Option<Vec<f64>>, CliError> {
    match &r.config.sweep {
        None => Ok(None),
        Some(s) if s.variable == variable => Ok(Some(s.grid.clone())),
        Some(s) => Err(CliError::Config(format!("sweep variable {:?} is not supported here", s.variable))),
    }
}

/// `mean-length`: analytic routes and Monte Carlo, one row per method.
pub fn mean_length(r: &Resolved) -> Result<Csv, CliError> {
    let mc = &r.config.mc;
    let mut csv = provenance("mean-length", r);
    csv.meta("include_gap0", &mc.include_gap0.to_string());
    let window = mc.window.unwrap_or_else(|| default_window(&r.geometry, r.env.mean_free()));
    csv.meta("window", &format_f64(window));
    csv.header(&["alpha", "gamma1", "gamma2", "method", "mean_length", "stderr", "n_trials", "truncation_index", "r"]);

    let points: Vec<EnvParams> = match (sweep_grid(r, SweepVariable::Alpha)?, r.env) {
        (None, env) => vec![env],
        (Some(grid), EnvParams::Exponential(p)) => grid
            .iter()
            .map(|&alpha| ExpoEnvParams::from_alpha(p.gamma1, alpha).map(EnvParams::from))
            .collect::<Result<_, _>>()?,
        (Some(_), EnvParams::General(_)) => {
            return Err(CliError::Config("an alpha sweep needs an exponential environment".into()))
        }
    };

    let quad = QuadratureConfig::default();
    let series = SeriesConfig::default();
    let opts = CoveredLengthMc { n_trials: mc.n_trials, window: Some(window), include_gap0: mc.include_gap0 };
    for (k, env) in points.iter().enumerate() {
        let (g1, g2) = (1.0 / env.mean_free(), 1.0 / env.mean_obstacle());
        let alpha = g2 / g1;
        let row = |csv: &mut Csv, method: &str, value: f64, stderr: Option<f64>, n: Option<u64>, trunc: Option<usize>, rr: Option<f64>| {
            csv.row(vec![
                alpha.into(),
                g1.into(),
                g2.into(),
                method.into(),
                value.into(),
                stderr.into(),
                n.into(),
                trunc.into(),
                rr.into(),
            ]);
        };
        if let EnvParams::Exponential(p) = env {
            let t1 = mean_length_theorem1(p, &r.geometry, &quad, &series)?;
            let t2 = mean_length_theorem2(p, &r.geometry, &quad, &series)?;
            let cor = mean_length_corollary(p, &r.geometry);
            row(&mut csv, "theorem1", t1.total, None, None, Some(t1.truncation_index), Some(t1.r));
            row(&mut csv, "theorem2", t2.total, None, None, Some(t2.truncation_index), Some(t2.r));
            row(&mut csv, "exact_gap0", t1.exact_model_total(), None, None, Some(t1.truncation_index), Some(t1.r));
            row(&mut csv, "corollary", cor.via_r, None, None, None, Some(t1.r));
            eprintln!(
                "alpha={alpha:.6} theorem1={:.10} theorem2={:.10} corollary={:.10} (truncated at i={}, r={:.6})",
                t1.total, t2.total, cor.via_r, t1.truncation_index, t2.r
            );
        }
        let streams = Streams::new(mc.seed.wrapping_add(k as u64));
        let est = mc_mean_covered_length(env, &r.geometry, &opts, &streams)?;
        row(&mut csv, "mc", est.mean, Some(est.stderr), Some(est.n_trials), None, None);
        eprintln!("alpha={alpha:.6} mc={:.6} +/- {:.6} ({} trials)", est.mean, est.stderr, est.n_trials);
    }
    Ok(csv)
}

/// `sinr-sweep`: closed form, independence-model MC and dependent MC over a
/// threshold grid.
pub fn sinr_sweep(r: &Resolved) -> Result<Csv, CliError> {
    let params = r.exponential()?;
    let thetas = sweep_grid(r, SweepVariable::Theta)?.unwrap_or_else(|| DEFAULT_THETAS.to_vec());
    let cfg = &r.config;
    let geo = &r.geometry;
    let consts = radio_constants(&cfg.radio, geo)?;
    let (x, rho, lambda) = (cfg.sinr.x, geo.rho(), cfg.radio.lambda);
    let convention = cfg.sinr.intensity_convention;
    let intensity = effective_intensity(lambda, &params, convention);
    let window = cfg.mc.window.unwrap_or_else(|| interferer_window(rho, 1.0 / params.gamma1));
    let streams = Streams::new(cfg.mc.seed);

    let quad = QuadratureConfig::default();
    let analytic: Vec<f64> = thetas
        .iter()
        .map(|&theta| {
            let q = SinrQuery::new(x, theta, &consts, geo.a)?;
            Ok(coverage_probability_analytic(&q, lambda, &consts, params.gamma1, rho, &quad)?.probability)
        })
        .collect::<Result<_, CliError>>()?;
    let h0 = mc_coverage_h0(
        x,
        &thetas,
        geo.a,
        &consts,
        params.gamma1,
        rho,
        &H0Settings { n_trials: cfg.mc.n_trials, intensity, window: Some(window) },
        &streams,
    )?;
    let settings = DependentSettings {
        n_configs: cfg.mc.n_configs.unwrap_or(cfg.mc.n_trials),
        resample_phi: cfg.sinr.resample_phi,
        window: Some(window),
        tau_boundary: cfg.sinr.tau_boundary,
    };
    let dep = mc_coverage_dependent(x, &thetas, lambda, &consts, &params, geo, &settings, &streams)?;

    let mut csv = provenance("sinr-sweep", r);
    csv.meta("x", &format_f64(x));
    csv.meta("lambda", &format_f64(lambda));
    csv.meta("gamma1", &format_f64(params.gamma1));
    csv.meta("gamma2", &format_f64(params.gamma2));
    csv.meta("c", &format_f64(consts.c));
    csv.meta("K", &format_f64(consts.k));
    csv.meta("intensity_convention", &format!("{convention:?}").to_lowercase());
    csv.meta("h0_intensity", &format_f64(intensity));
    csv.meta("interferer_window", &format_f64(window));
    csv.meta("resample_phi", &settings.resample_phi.to_string());
    csv.meta("dependent_accepted", &format!("{} of {}", dep.accepted, dep.attempted));
    csv.header(&[
        "theta",
        "p_analytic",
        "p_mc_h0",
        "p_mc_h0_stderr",
        "p_mc_dep",
        "p_mc_dep_stderr",
        "acceptance_rate",
        "n_trials",
        "seed",
    ]);
    for (k, &theta) in thetas.iter().enumerate() {
        csv.row(vec![
            theta.into(),
            analytic[k].into(),
            h0[k].mean.into(),
            h0[k].stderr.into(),
            dep.estimates[k].mean.into(),
            dep.estimates[k].stderr.into(),
            dep.acceptance_rate.into(),
            cfg.mc.n_trials.into(),
            cfg.mc.seed.into(),
        ]);
    }
    eprintln!(
        "{} thresholds, {} H0 trials, dependent acceptance {}/{} ({:.4})",
        thetas.len(),
        cfg.mc.n_trials,
        dep.accepted,
        dep.attempted,
        dep.acceptance_rate
    );
    Ok(csv)
}

/// `env-sample`: one obstacle realisation as `B,E` rows.
pub fn env_sample(r: &Resolved) -> Result<Csv, CliError> {
    let window = r.config.mc.window.unwrap_or_else(|| default_window(&r.geometry, r.env.mean_free()));
    let mut rng = Streams::new(r.config.mc.seed).rng(Domain::Environment, 0);
    let env = sample_environment(&r.env, window, &mut rng)?;
    let mut csv = provenance("env-sample", r);
    csv.meta("window", &format_f64(window));
    csv.header(&["B", "E"]);
    for o in env.obstacles() {
        csv.row(vec![o.begin.into(), o.end.into()]);
    }
    eprintln!("{} obstacles on (0, {window}]", env.obstacles().len());
    Ok(csv)
}

/// `selftest`: the report as a CSV plus the pass flag.
pub fn selftest() -> (Csv, SelfTestReport) {
    let report = run_selftest();
    let mut csv = Csv::default();
    csv.meta("tool", &format!("ris-coverage {}", env!("CARGO_PKG_VERSION")));
    csv.meta("command", "selftest");
    csv.header(&["check", "passed", "detail"]);
    for c in &report.checks {
        csv.row(vec![
            c.name.as_str().into(),
            if c.passed { "true" } else { "false" }.into(),
            c.detail.replace(',', ";").as_str().into(),
        ]);
        eprintln!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    (csv, report)
}
