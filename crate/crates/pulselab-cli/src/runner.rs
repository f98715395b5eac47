//! Orchestration: load a config or preset, validate, run the experiment,
//! and emit CSV/JSON artifacts plus a manifest with content hashes.

use anyhow::{anyhow, Context};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::path::PathBuf;

use crate::config::{ExperimentConfig, RunKind};
use crate::presets;
use pulselab::dde::{self, IntegratorConfig};
use pulselab::models::EquilibriumMode;
use pulselab::{analysis, hopf, pulse, spectrum};
use pulselab::{EquilibriumKind, ExecMode, ModelInstance};

pub enum AppError {
    /// Bad configuration; exit code 2, nothing written.
    Validation(String),
    /// Numerical or I/O failure during the run; exit code 3.
    Run(anyhow::Error),
}

impl From<anyhow::Error> for AppError {
    fn from(e: anyhow::Error) -> Self {
        AppError::Run(e)
    }
}

pub struct Invocation {
    pub config: Option<PathBuf>,
    pub preset: Option<String>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub emit_plots: bool,
}

struct Emitter {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl Emitter {
    fn new(dir: PathBuf) -> anyhow::Result<Self> {
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Emitter { dir, files: Vec::new() })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> anyhow::Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        let digest = Sha256::digest(bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.files.push((name.to_string(), hex));
        Ok(())
    }

    fn finish(mut self, run: &str, model: &ModelInstance, summary: Value) -> anyhow::Result<()> {
        self.files.sort();
        let manifest = json!({
            "run": run,
            "model": model.id().as_str(),
            "parameters": model,
            "summary": summary,
            "files": self.files.iter().map(|(p, h)| json!({"path": p, "sha256": h})).collect::<Vec<_>>(),
        });
        let bytes = serde_json::to_vec_pretty(&manifest)?;
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

pub fn execute(inv: Invocation) -> Result<(), AppError> {
    let text: String = match (&inv.config, &inv.preset) {
        (Some(path), None) => std::fs::read_to_string(path)
            .map_err(|e| AppError::Validation(format!("cannot read config {}: {e}", path.display())))?,
        (None, Some(name)) => {
            if name == "list" {
                for n in presets::names() {
                    println!("{n}");
                }
                return Ok(());
            }
            presets::lookup(name)
                .ok_or_else(|| {
                    AppError::Validation(format!(
                        "unknown preset '{name}'; available: {}",
                        presets::names().join(", ")
                    ))
                })?
                .to_string()
        }
        _ => {
            return Err(AppError::Validation(
                "exactly one of --config PATH or --preset NAME is required".into(),
            ))
        }
    };

    let cfg = ExperimentConfig::parse(&text).map_err(AppError::Validation)?;
    let model = cfg.build_model().map_err(AppError::Validation)?;

    let out_dir = std::env::var_os("PULSELAB_OUT")
        .map(PathBuf::from)
        .or(inv.out)
        .or_else(|| cfg.options.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("pulselab-out"));

    let workers = inv.workers.or(cfg.workers);
    if workers == Some(0) {
        return Err(AppError::Validation("workers must be at least 1".into()));
    }

    let run = move || -> anyhow::Result<()> {
        let emitter = Emitter::new(out_dir)?;
        match cfg.run {
            RunKind::Simulate => run_simulate(&cfg, &model, emitter, inv.emit_plots),
            RunKind::Spectrum => run_spectrum(&cfg, &model, emitter, inv.emit_plots),
            RunKind::Cascade => run_cascade(&cfg, &model, emitter, inv.emit_plots),
            RunKind::Pulse => run_pulse(&cfg, &model, emitter, inv.emit_plots),
            RunKind::Scaling => run_scaling(&cfg, &model, emitter, inv.emit_plots),
        }
    };

    #[cfg(feature = "parallel")]
    {
        if let Some(n) = workers {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| AppError::Run(anyhow!("thread pool: {e}")))?;
            return pool.install(run).map_err(AppError::Run);
        }
    }
    let _ = workers;
    run().map_err(AppError::Run)
}

fn integrator_config(cfg: &ExperimentConfig, model: &ModelInstance) -> IntegratorConfig {
    let delay = dde::DelaySystem::delay(model);
    let mut c = IntegratorConfig::for_model(model);
    if let Some(tp) = cfg.options.transient_periods {
        c.transient = tp * delay;
    }
    if let Some(rp) = cfg.options.record_periods {
        c.record = rp * delay;
    }
    c
}

fn equilibria_json(model: &ModelInstance) -> Value {
    let zero = model.zero_a_equilibrium().ok();
    let positive = model.positive_equilibrium(EquilibriumMode::Exact).ok();
    let asymptotic = model.positive_equilibrium(EquilibriumMode::Asymptotic).ok();
    json!({
        "zero_a": zero,
        "positive_exact": positive,
        "positive_asymptotic": asymptotic,
        "other": model.other_equilibria(),
    })
}

fn run_simulate(
    cfg: &ExperimentConfig,
    model: &ModelInstance,
    mut em: Emitter,
    plots: bool,
) -> anyhow::Result<()> {
    let config = integrator_config(cfg, model);
    let traj = dde::integrate_pulsating(model, &config, true)?;

    let mut csv = Vec::new();
    traj.write_csv(&mut csv, model.component_names())?;
    em.write("trajectory.csv", &csv)?;

    let metrics = analysis::pulse_metrics(&traj, 0)?;
    let c_sim = pulse::c_parameter(model, pulse::CSource::Simulation(&traj))?;
    let mut summary = json!({
        "period": metrics.period,
        "amplitude": metrics.amplitude,
        "fwhm": metrics.fwhm,
        "floor": metrics.floor,
        "q_plateau": metrics.q_plateau,
        "q_collapse": metrics.q_collapse,
        "c": c_sim,
    });
    em.write("metrics.json", &serde_json::to_vec_pretty(&metrics)?)?;

    if let Some(n) = cfg.options.harmonics {
        let h = analysis::fourier_harmonics(&traj, 0, n)?;
        let mut buf = Vec::new();
        h.write_csv(&mut buf)?;
        em.write("harmonics.csv", &buf)?;
        if n >= 5 {
            let al = analysis::phase_alignment(&h)?;
            summary["max_phase_deviation"] = json!(al.max_phase_deviation);
        }
    }

    em.write("equilibria.json", &serde_json::to_vec_pretty(&equilibria_json(model))?)?;
    em.write("conditions.json", &serde_json::to_vec_pretty(&model.check_conditions()?)?)?;

    if plots {
        let gp = "set datafile separator ','\n\
                  set key autotitle columnhead\n\
                  set xlabel 't'\n\
                  plot 'trajectory.csv' using 1:2 with lines\n";
        em.write("trace.gp", gp.as_bytes())?;
    }
    em.finish("simulate", model, summary)
}

fn run_spectrum(
    cfg: &ExperimentConfig,
    model: &ModelInstance,
    mut em: Emitter,
    plots: bool,
) -> anyhow::Result<()> {
    let gamma = model.gamma();
    let bx = cfg.options.r#box.as_ref();
    let region = spectrum::RootBox {
        x_min: bx.map_or(-1.0, |b| b.x_min),
        x_max: bx.map_or(0.5, |b| b.x_max),
        omega_min: bx.map_or(0.0, |b| b.omega_min),
        omega_max: bx.map_or(2.0 * gamma, |b| b.omega_max),
    };
    let grid = spectrum::GridDensity {
        nx: bx.map_or(200, |b| b.nx),
        ny: bx.map_or(200, |b| b.ny),
    };

    let mut counts = serde_json::Map::new();
    let mut values = vec![model.bifurcation_parameter()];
    values.extend(cfg.options.g0_list.iter().copied());
    for (i, v) in values.iter().enumerate() {
        let m = model.with_bifurcation_parameter(*v);
        let tag = if i == 0 { String::new() } else { format!("_{i}") };
        for (kind, name) in [(EquilibriumKind::ZeroA, "zero"), (EquilibriumKind::Positive, "positive")] {
            match spectrum::find_roots_in_box(&m, kind, &region, grid, ExecMode::default()) {
                Ok(roots) => {
                    let mut buf = Vec::new();
                    spectrum::write_roots_csv(&mut buf, &roots)?;
                    em.write(&format!("roots_{name}{tag}.csv"), &buf)?;
                    counts.insert(format!("roots_{name}{tag}"), json!(roots.len()));
                }
                Err(pulselab::Error::NoEquilibrium(_)) => continue,
                Err(e) => return Err(e.into()),
            }
        }
        // Scaled-omega grid for the weak curves, plain omega for the strong.
        let weak_omegas: Vec<f64> = (0..=400).map(|j| region.omega_max / gamma * j as f64 / 400.0).collect();
        let strong_omegas: Vec<f64> = (0..=400).map(|j| 25.0 * j as f64 / 400.0).collect();
        if let Ok(curve) = spectrum::weak_curve(&m, EquilibriumKind::ZeroA, &weak_omegas) {
            let mut buf = Vec::new();
            curve.write_csv(&mut buf)?;
            em.write(&format!("weak_zero{tag}.csv"), &buf)?;
        }
        if let Ok(curve) = spectrum::weak_curve(&m, EquilibriumKind::Positive, &weak_omegas) {
            let mut buf = Vec::new();
            curve.write_csv(&mut buf)?;
            em.write(&format!("weak_positive{tag}.csv"), &buf)?;
        }
        if let Ok(curve) = spectrum::strong_curve(&m, &strong_omegas) {
            let mut buf = Vec::new();
            curve.write_csv(&mut buf)?;
            em.write(&format!("strong_positive{tag}.csv"), &buf)?;
        }
    }

    em.write("equilibria.json", &serde_json::to_vec_pretty(&equilibria_json(model))?)?;
    if plots {
        let gp = "set datafile separator ','\n\
                  set key autotitle columnhead\n\
                  set xlabel 'Re'\nset ylabel 'Im'\n\
                  plot 'roots_zero.csv' using 1:2 with points pt 7\n";
        em.write("spectrum.gp", gp.as_bytes())?;
    }
    em.finish("spectrum", model, Value::Object(counts))
}

fn run_cascade(
    cfg: &ExperimentConfig,
    model: &ModelInstance,
    mut em: Emitter,
    plots: bool,
) -> anyhow::Result<()> {
    let n_max = cfg.options.n_max.unwrap_or(5);
    let (zero, positive) = hopf::cascade_scan(model, None, n_max, ExecMode::default());
    let mut buf = Vec::new();
    zero.write_csv(&mut buf)?;
    em.write("cascade_zero.csv", &buf)?;
    let mut buf = Vec::new();
    positive.write_csv(&mut buf)?;
    em.write("cascade_positive.csv", &buf)?;
    em.write("conditions.json", &serde_json::to_vec_pretty(&model.check_conditions()?)?)?;

    let summary = json!({
        "n_max": n_max,
        "delta1_numeric": positive.rows.first().and_then(|r| r.delta_num),
        "omega1_numeric": positive.rows.first().and_then(|r| r.omega_num),
        "threshold": model.threshold()?,
    });
    if plots {
        let gp = "set datafile separator ','\n\
                  set key autotitle columnhead\n\
                  set logscale y\nset xlabel 'n'\n\
                  plot 'cascade_positive.csv' using 1:2 with linespoints, '' using 1:3 with points\n";
        em.write("cascade.gp", gp.as_bytes())?;
    }
    em.finish("cascade", model, summary)
}

fn run_pulse(
    cfg: &ExperimentConfig,
    model: &ModelInstance,
    mut em: Emitter,
    plots: bool,
) -> anyhow::Result<()> {
    let theory = pulse::PulseTheory::from_model(model)?;
    let config = integrator_config(cfg, model);
    let traj = dde::integrate_pulsating(model, &config, true)?;
    let c = pulse::c_parameter(model, pulse::CSource::Simulation(&traj))?;
    let span = cfg.options.theta_span.unwrap_or(200.0);
    let asym = pulse::analyze(&theory, c, span)?;

    let mut buf = Vec::new();
    asym.profile.write_csv(&mut buf)?;
    em.write("profile.csv", &buf)?;
    let rescaled = pulse::rescale_pulse(&asym.profile, model.gamma());
    let mut buf = Vec::new();
    rescaled.write_csv(&mut buf)?;
    em.write("pulse_rescaled.csv", &buf)?;

    // Overlay statistics against the simulated pulse.
    let peaks = dde::peak_train(&traj, 0);
    let (w0, w1) = (peaks[peaks.len() - 2].0, peaks[peaks.len() - 1].0);
    let sim_area = dde::integrate_component_over_period(&traj, 0, (w0, w1))?;
    let metrics = analysis::pulse_metrics(&traj, 0)?;

    let report = json!({
        "pstar": asym.pstar,
        "g_b": asym.g_b,
        "g_e": asym.g_e,
        "a": asym.a,
        "c": c,
        "lambda_plus": asym.lambda_plus,
        "zero_leading": [asym.zero_leading.re, asym.zero_leading.im],
        "ac_lt_one": asym.ac_lt_one,
        "contraction_lt_one": asym.contraction_lt_one,
        "sim_period": metrics.period,
        "sim_peak": metrics.amplitude,
        "sim_area": sim_area,
        "rescaled_peak": rescaled.peak(),
    });
    em.write("pulse.json", &serde_json::to_vec_pretty(&report)?)?;
    if plots {
        let gp = "set datafile separator ','\n\
                  set key autotitle columnhead\n\
                  set xlabel 't'\n\
                  plot 'pulse_rescaled.csv' using 1:2 with lines\n";
        em.write("pulse.gp", gp.as_bytes())?;
    }
    em.finish("pulse", model, report)
}

fn run_scaling(
    cfg: &ExperimentConfig,
    model: &ModelInstance,
    mut em: Emitter,
    plots: bool,
) -> anyhow::Result<()> {
    let defaults = analysis::SweepConfig::default();
    let sweep_cfg = analysis::SweepConfig {
        transient_periods: cfg.options.transient_periods.unwrap_or(defaults.transient_periods),
        record_periods: cfg.options.record_periods.unwrap_or(defaults.record_periods),
    };
    let points = analysis::gamma_sweep(model, &cfg.options.gammas, &sweep_cfg, ExecMode::default())?;
    let mut buf = Vec::new();
    analysis::write_sweep_csv(&mut buf, &points)?;
    em.write("sweep.csv", &buf)?;

    let fit_points: Vec<(f64, f64)> = points.iter().map(|p| (p.gamma, p.p)).collect();
    let fit = analysis::power_law_fit(&fit_points)?;
    em.write("fit.json", &serde_json::to_vec_pretty(&fit)?)?;

    let summary = json!({
        "pstar_hat": fit.pstar_hat,
        "b": fit.b,
        "beta": fit.beta,
        "residual": fit.residual,
    });
    if plots {
        let gp = "set datafile separator ','\n\
                  set key autotitle columnhead\n\
                  set logscale x\nset xlabel 'gamma'\n\
                  plot 'sweep.csv' using 1:2 with points pt 7\n";
        em.write("scaling.gp", gp.as_bytes())?;
    }
    em.finish("scaling", model, summary)
}
