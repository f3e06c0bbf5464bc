//! Subcommand implementations.
//!
//! Every command reads its sections from the shared config, writes CSV/JSON
//! data files through an [`OutputSink`], and closes with a `manifest.json`
//! listing each file with a content digest. All randomness flows through
//! counter-derived seed streams, so reruns of the same config and seed
//! reproduce every data file byte for byte (the manifest's timestamps are
//! the one exception).

use std::path::PathBuf;

use clap::Subcommand;
use serde::Serialize;

use wustat_core::contraction::{
    condition3_score, estimate_delta, estimate_gmc, estimate_theta, probe_concentration,
    Condition3Score, ThetaEstimate,
};
use wustat_core::harness::{build_report, evaluate_statistic, run_experiment, ExperimentConfig};
use wustat_core::longmem::{
    limit_variance, rate_exponent, wilcoxon_limit_variance, z_term_covariance, Condition27Report,
    LimitVariance, LongMemCase, LongMemExample, WeightMode,
};
use wustat_core::process::{covariance_fn, generate, ProcessSpec};
use wustat_core::rng::{derive_seed, replicate_seed};
use wustat_core::weights::normalizer;

use crate::config::{CliError, ConfigFile, ExperimentSection};
use crate::manifest::OutputSink;

#[derive(Clone, Debug, Subcommand)]
pub enum Command {
    /// Generate sample paths for the configured process
    Simulate,
    /// Evaluate the weighted pair statistic on one path per grid size
    Ustat,
    /// Estimate the geometric coupling-decay rate of the process
    Gmc,
    /// Estimate truncation (finite-memory) approximation distances
    Delta,
    /// Estimate projection norms of the centered kernel on a pair grid
    Theta,
    /// Probe interval concentration of increment laws
    Concentration,
    /// Tabulate the weight window and its root-mean-square normalizers
    Weights,
    /// Run the replicated limit experiment and its distribution checks
    Clt,
    /// Rate exponents, tail conditions, and limit-variance predictions
    Longmem,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Ustat => "ustat",
            Command::Gmc => "gmc",
            Command::Delta => "delta",
            Command::Theta => "theta",
            Command::Concentration => "concentration",
            Command::Weights => "weights",
            Command::Clt => "clt",
            Command::Longmem => "longmem",
        }
    }
}

pub struct RunContext {
    pub out_dir: PathBuf,
    pub seed_override: Option<u64>,
    /// Digest of the raw config file bytes.
    pub config_digest: String,
}

impl RunContext {
    fn seed(&self, configured: u64) -> u64 {
        self.seed_override.unwrap_or(configured)
    }
}

/// Core errors name bad inputs or unsupported combinations, so they exit as
/// validation failures; only I/O and encoding problems are runtime failures.
fn core_err(e: wustat_core::error::Error) -> CliError {
    CliError::Validation(vec![e.to_string()])
}

fn missing(sections: &[(&str, bool)], command: &str) -> Result<(), CliError> {
    let absent: Vec<String> = sections
        .iter()
        .filter(|(_, present)| !present)
        .map(|(name, _)| format!("`{command}` needs a [{name}] section"))
        .collect();
    if absent.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(absent))
    }
}

pub fn dispatch(cmd: &Command, cfg: &ConfigFile, ctx: &RunContext) -> Result<(), CliError> {
    let sink = OutputSink::create(&ctx.out_dir)?;
    let manifest = match cmd {
        Command::Simulate => simulate(cfg, ctx, sink)?,
        Command::Ustat => ustat(cfg, ctx, sink)?,
        Command::Gmc => gmc(cfg, ctx, sink)?,
        Command::Delta => delta(cfg, ctx, sink)?,
        Command::Theta => theta(cfg, ctx, sink)?,
        Command::Concentration => concentration(cfg, ctx, sink)?,
        Command::Weights => weights(cfg, ctx, sink)?,
        Command::Clt => clt(cfg, ctx, sink)?,
        Command::Longmem => longmem(cfg, ctx, sink)?,
    };
    println!(
        "{}: wrote {} data files to {}",
        cmd.name(),
        manifest.files.len(),
        ctx.out_dir.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct PathRow {
    n: usize,
    t: usize,
    value: f64,
}

/// One path per grid size, drawn from the same stream the experiment's
/// replicate 0 uses, so `simulate` shows exactly what `clt` measures first.
fn simulate(
    cfg: &ConfigFile,
    ctx: &RunContext,
    mut sink: OutputSink,
) -> Result<crate::manifest::RunManifest, CliError> {
    missing(
        &[
            ("process", cfg.process.is_some()),
            ("experiment", cfg.experiment.is_some()),
        ],
        "simulate",
    )?;
    let process = cfg.process.as_ref().unwrap();
    let exp = cfg.experiment.as_ref().unwrap();
    let seed = ctx.seed(exp.seed);
    let mut rows = Vec::new();
    for &n in &exp.n_grid {
        let path = generate(process, n, replicate_seed(seed, n as u64, 0)).map_err(core_err)?;
        for (i, v) in path.values.iter().enumerate() {
            rows.push(PathRow {
                n,
                t: i + 1,
                value: *v,
            });
        }
    }
    sink.write_csv("paths.csv", &rows)?;
    sink.finish("simulate", ctx.config_digest.clone(), Some(seed))
}

#[derive(Serialize)]
struct UStatRow {
    n: usize,
    value: f64,
    /// sqrt(n) * W_n, the exact window scale.
    scale: f64,
    scaled: f64,
    method: String,
    include_diagonal: bool,
}

fn ustat(
    cfg: &ConfigFile,
    ctx: &RunContext,
    mut sink: OutputSink,
) -> Result<crate::manifest::RunManifest, CliError> {
    missing(
        &[
            ("process", cfg.process.is_some()),
            ("kernel", cfg.kernel.is_some()),
            ("weights", cfg.weights.is_some()),
            ("experiment", cfg.experiment.is_some()),
        ],
        "ustat",
    )?;
    let process = cfg.process.as_ref().unwrap();
    let kernel = cfg.kernel.as_ref().unwrap();
    let w = cfg.weights.as_ref().unwrap();
    let exp = cfg.experiment.as_ref().unwrap();
    let seed = ctx.seed(exp.seed);
    let mut rows = Vec::new();
    for &n in &exp.n_grid {
        let path = generate(process, n, replicate_seed(seed, n as u64, 0)).map_err(core_err)?;
        let r = evaluate_statistic(&path, kernel, w, exp.include_diagonal).map_err(core_err)?;
        let scale = (n as f64).sqrt() * normalizer(w, n).map_err(core_err)?;
        rows.push(UStatRow {
            n,
            value: r.value,
            scale,
            scaled: r.value / scale,
            method: format!("{:?}", r.method),
            include_diagonal: r.include_diagonal,
        });
    }
    sink.write_csv("ustat.csv", &rows)?;
    sink.finish("ustat", ctx.config_digest.clone(), Some(seed))
}

#[derive(Serialize)]
struct MomentRow {
    horizon: usize,
    value: f64,
    stderr: f64,
}

fn gmc(
    cfg: &ConfigFile,
    ctx: &RunContext,
    mut sink: OutputSink,
) -> Result<crate::manifest::RunManifest, CliError> {
    let d = cfg.diagnostics.as_ref().and_then(|d| d.gmc.as_ref());
    missing(
        &[
            ("process", cfg.process.is_some()),
            ("diagnostics.gmc", d.is_some()),
        ],
        "gmc",
    )?;
    let map = match cfg.process.as_ref().unwrap() {
        ProcessSpec::Iterated(s) => s,
        ProcessSpec::Linear(_) => {
            return Err(CliError::invalid(
                "the coupling-decay estimate needs an iterated-map [process]; linear \
                 processes are probed through `delta` instead",
            ))
        }
    };
    let d = d.unwrap();
    let seed = ctx.seed(d.seed);
    let est = estimate_gmc(map, d.alpha, &d.horizons, d.reps, seed).map_err(core_err)?;
    let rows: Vec<MomentRow> = est
        .moment_curve
        .iter()
        .map(|p| MomentRow {
            horizon: p.horizon,
            value: p.value,
            stderr: p.stderr,
        })
        .collect();
    sink.write_csv("gmc.csv", &rows)?;
    sink.write_json("gmc.json", &est)?;
    sink.finish("gmc", ctx.config_digest.clone(), Some(seed))
}

#[derive(Serialize)]
struct DeltaRow {
    ell: usize,
    delta_hat: f64,
    stderr: f64,
    argmax_j: usize,
}

fn delta(
    cfg: &ConfigFile,
    ctx: &RunContext,
    mut sink: OutputSink,
) -> Result<crate::manifest::RunManifest, CliError> {
    let d = cfg.diagnostics.as_ref().and_then(|d| d.delta.as_ref());
    missing(
        &[
            ("process", cfg.process.is_some()),
            ("kernel", cfg.kernel.is_some()),
            ("diagnostics.delta", d.is_some()),
        ],
        "delta",
    )?;
    let process = cfg.process.as_ref().unwrap();
    let kernel = cfg.kernel.as_ref().unwrap();
    let d = d.unwrap();
    let seed = ctx.seed(d.seed);
    let curve =
        estimate_delta(process, kernel, &d.ells, &d.lags, d.reps, seed).map_err(core_err)?;
    let rows: Vec<DeltaRow> = curve
        .points
        .iter()
        .map(|p| DeltaRow {
            ell: p.ell,
            delta_hat: p.delta_hat,
            stderr: p.stderr,
            argmax_j: p.argmax_j,
        })
        .collect();
    sink.write_csv("delta.csv", &rows)?;
    sink.write_json("delta.json", &curve)?;
    sink.finish("delta", ctx.config_digest.clone(), Some(seed))
}

#[derive(Serialize)]
struct ThetaSummary {
    estimates: Vec<ThetaEstimate>,
    /// Weighted summability score over the probed grid; present when a
    /// [weights] section is configured.
    #[serde(skip_serializing_if = "Option::is_none")]
    condition_score: Option<Condition3Score>,
}

fn theta(
    cfg: &ConfigFile,
    ctx: &RunContext,
    mut sink: OutputSink,
) -> Result<crate::manifest::RunManifest, CliError> {
    let d = cfg.diagnostics.as_ref().and_then(|d| d.theta.as_ref());
    missing(
        &[
            ("process", cfg.process.is_some()),
            ("kernel", cfg.kernel.is_some()),
            ("diagnostics.theta", d.is_some()),
        ],
        "theta",
    )?;
    let process = cfg.process.as_ref().unwrap();
    let kernel = cfg.kernel.as_ref().unwrap();
    let d = d.unwrap();
    let seed = ctx.seed(d.seed);
    let mut estimates = Vec::with_capacity(d.i_values.len() * d.j_values.len());
    for &i in &d.i_values {
        for &j in &d.j_values {
            let cell_seed = derive_seed(&[seed, i as u64, j as u64]);
            estimates.push(
                estimate_theta(process, kernel, i, j, d.outer_reps, d.inner_reps, cell_seed)
                    .map_err(core_err)?,
            );
        }
    }
    let condition_score = match &cfg.weights {
        Some(w) => Some(condition3_score(w, &estimates).map_err(core_err)?),
        None => None,
    };
    sink.write_csv("theta.csv", &estimates)?;
    sink.write_json(
        "theta.json",
        &ThetaSummary {
            estimates,
            condition_score,
        },
    )?;
    sink.finish("theta", ctx.config_digest.clone(), Some(seed))
}

#[derive(Serialize)]
struct ConcentrationRow {
    tau: f64,
    sup_hat: f64,
    stderr: f64,
    argmax_j: usize,
}

fn concentration(
    cfg: &ConfigFile,
    ctx: &RunContext,
    mut sink: OutputSink,
) -> Result<crate::manifest::RunManifest, CliError> {
    let d = cfg
        .diagnostics
        .as_ref()
        .and_then(|d| d.concentration.as_ref());
    missing(
        &[
            ("process", cfg.process.is_some()),
            ("diagnostics.concentration", d.is_some()),
        ],
        "concentration",
    )?;
    let process = cfg.process.as_ref().unwrap();
    let d = d.unwrap();
    let seed = ctx.seed(d.seed);
    let probe = probe_concentration(process, &d.lags, &d.taus, d.x_points, d.reps, seed)
        .map_err(core_err)?;
    let rows: Vec<ConcentrationRow> = probe
        .points
        .iter()
        .map(|p| ConcentrationRow {
            tau: p.tau,
            sup_hat: p.sup_hat,
            stderr: p.stderr,
            argmax_j: p.argmax_j,
        })
        .collect();
    sink.write_csv("concentration.csv", &rows)?;
    sink.write_json("concentration.json", &probe)?;
    sink.finish("concentration", ctx.config_digest.clone(), Some(seed))
}

#[derive(Serialize)]
struct WindowRow {
    k: usize,
    weight: f64,
}

#[derive(Serialize)]
struct NormalizerRow {
    n: usize,
    /// Root-mean-square row sum W_n.
    w_n: f64,
    /// sqrt(n) * W_n.
    root_window_scale: f64,
}

fn weights(
    cfg: &ConfigFile,
    ctx: &RunContext,
    mut sink: OutputSink,
) -> Result<crate::manifest::RunManifest, CliError> {
    missing(&[("weights", cfg.weights.is_some())], "weights")?;
    let w = cfg.weights.as_ref().unwrap();
    let max_k = w.support_radius().unwrap_or(64);
    let window: Vec<WindowRow> = w
        .table(max_k)
        .into_iter()
        .enumerate()
        .map(|(k, weight)| WindowRow { k, weight })
        .collect();
    let n_grid: Vec<usize> = match &cfg.experiment {
        Some(exp) => exp.n_grid.clone(),
        None => vec![64, 256, 1024, 4096],
    };
    let mut norms = Vec::with_capacity(n_grid.len());
    for n in n_grid {
        let w_n = normalizer(w, n).map_err(core_err)?;
        norms.push(NormalizerRow {
            n,
            w_n,
            root_window_scale: (n as f64).sqrt() * w_n,
        });
    }
    sink.write_csv("window.csv", &window)?;
    sink.write_csv("normalizer.csv", &norms)?;
    sink.finish("weights", ctx.config_digest.clone(), None)
}

#[derive(Serialize)]
struct QqRow {
    theoretical: f64,
    observed: f64,
}

fn experiment_config(
    cfg: &ConfigFile,
    exp: &ExperimentSection,
    seed: u64,
) -> Result<ExperimentConfig, CliError> {
    let ec = ExperimentConfig {
        process: cfg.process.clone().unwrap(),
        kernel: *cfg.kernel.as_ref().unwrap(),
        weights: cfg.weights.clone().unwrap(),
        n_grid: exp.n_grid.clone(),
        replicates: exp.replicates,
        centering: exp.centering.clone(),
        scale: exp.scale.clone(),
        include_diagonal: exp.include_diagonal,
        seed,
    };
    ec.validate().map_err(core_err)?;
    Ok(ec)
}

fn clt(
    cfg: &ConfigFile,
    ctx: &RunContext,
    mut sink: OutputSink,
) -> Result<crate::manifest::RunManifest, CliError> {
    missing(
        &[
            ("process", cfg.process.is_some()),
            ("kernel", cfg.kernel.is_some()),
            ("weights", cfg.weights.is_some()),
            ("experiment", cfg.experiment.is_some()),
        ],
        "clt",
    )?;
    let exp = cfg.experiment.as_ref().unwrap();
    let seed = ctx.seed(exp.seed);
    let ec = experiment_config(cfg, exp, seed)?;
    let results = run_experiment(&ec).map_err(core_err)?;
    let report = build_report(&ec, &results).map_err(core_err)?;
    sink.write_csv("replicates.csv", &results)?;
    sink.write_json("report.json", &report)?;
    let qq: Vec<QqRow> = report
        .qq
        .iter()
        .map(|&(theoretical, observed)| QqRow {
            theoretical,
            observed,
        })
        .collect();
    sink.write_csv("qq.csv", &qq)?;
    sink.finish("clt", ctx.config_digest.clone(), Some(seed))
}

#[derive(Serialize)]
struct LongmemSummary {
    case: LongMemCase,
    /// Growth exponent of the statistic's standard deviation; absent when
    /// the case sits on a regime boundary.
    #[serde(skip_serializing_if = "Option::is_none")]
    sd_exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    variance_exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rate_note: Option<String>,
    tail_condition: Condition27Report,
    /// Predicted limit of Var(U_n) / n^variance_exponent; absent when the
    /// squared-norm integral diverges at this order.
    #[serde(skip_serializing_if = "Option::is_none")]
    limit_variance: Option<LimitVariance>,
    #[serde(skip_serializing_if = "Option::is_none")]
    limit_note: Option<String>,
}

#[derive(Serialize)]
struct ZTermRow {
    n: usize,
    rep: usize,
    value: f64,
    normalizer_exponent: f64,
}

fn longmem(
    cfg: &ConfigFile,
    ctx: &RunContext,
    mut sink: OutputSink,
) -> Result<crate::manifest::RunManifest, CliError> {
    let d = cfg.diagnostics.as_ref().and_then(|d| d.longmem.as_ref());
    missing(&[("diagnostics.longmem", d.is_some())], "longmem")?;
    let d = d.unwrap();
    let case = &d.case;
    let (sd_exponent, variance_exponent, rate_note) = match rate_exponent(&case.rate_case()) {
        Ok(e) => (Some(e), Some(2.0 * e), None),
        Err(e) => (None, None, Some(e.to_string())),
    };
    let tail_condition = case.tail_condition().map_err(core_err)?;
    let (limit, limit_note) = match case.example {
        LongMemExample::Wilcoxon => {
            // With a configured Gaussian linear process the marginal scale
            // is known, so use the full sign-pair prediction.
            let attempt = match &cfg.process {
                Some(ProcessSpec::Linear(s)) => covariance_fn(s, 0)
                    .and_then(|g0| wilcoxon_limit_variance(case.beta, g0)),
                _ => limit_variance(
                    case.beta,
                    1,
                    &WeightMode::ConstantOne {
                        c: d.weight_constant,
                    },
                ),
            };
            match attempt {
                Ok(lv) => (Some(lv), None),
                Err(e) => (None, Some(e.to_string())),
            }
        }
        LongMemExample::SampleCovariance { .. } => {
            match limit_variance(
                case.beta,
                case.expansion_order,
                &WeightMode::SummableConst {
                    c: d.weight_constant,
                },
            ) {
                Ok(lv) => (Some(lv), None),
                Err(e) => (None, Some(e.to_string())),
            }
        }
    };
    sink.write_json(
        "longmem.json",
        &LongmemSummary {
            case: case.clone(),
            sd_exponent,
            variance_exponent,
            rate_note,
            tail_condition,
            limit_variance: limit,
            limit_note,
        },
    )?;

    let mut seed_used = None;
    if let Some(lag) = d.zterm_lag {
        missing(
            &[
                ("process", cfg.process.is_some()),
                ("experiment", cfg.experiment.is_some()),
            ],
            "longmem (zterm_lag)",
        )?;
        let spec = match cfg.process.as_ref().unwrap() {
            ProcessSpec::Linear(s) => s.clone(),
            ProcessSpec::Iterated(_) => {
                return Err(CliError::invalid(
                    "the chaos-term evaluation needs a linear [process]",
                ))
            }
        };
        let exp = cfg.experiment.as_ref().unwrap();
        let seed = ctx.seed(exp.seed);
        seed_used = Some(seed);
        let mut rows = Vec::new();
        for &n in &exp.n_grid {
            for rep in 0..exp.replicates {
                let s = replicate_seed(seed, n as u64, rep as u64);
                let path =
                    generate(cfg.process.as_ref().unwrap(), n, s).map_err(core_err)?;
                let term = z_term_covariance(&spec, &path, lag).map_err(core_err)?;
                rows.push(ZTermRow {
                    n,
                    rep,
                    value: term.value,
                    normalizer_exponent: term.normalizer_exponent,
                });
            }
        }
        sink.write_csv("zterm.csv", &rows)?;
    }
    sink.finish("longmem", ctx.config_digest.clone(), seed_used)
}
