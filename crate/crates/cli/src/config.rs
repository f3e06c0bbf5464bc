//! The configuration document.
//!
//! One schema serves every subcommand; each command reads the sections it
//! needs and states which ones are missing. Unknown keys are rejected at
//! every nesting level, and semantic validation reports *all* problems in a
//! file, not just the first one it trips over.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wustat_core::harness::{Centering, ScaleRule};
use wustat_core::kernels::KernelSpec;
use wustat_core::longmem::LongMemCase;
use wustat_core::process::ProcessSpec;
use wustat_core::weights::WeightSpec;

/// Failures are split by exit code: bad input is `Validation` (exit 1),
/// anything that breaks after the inputs were accepted is `Runtime`
/// (exit 2).
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    Validation(Vec<String>),
    Runtime(String),
}

impl CliError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        CliError::Validation(vec![msg.into()])
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(msgs) => write!(f, "{}", msgs.join("\n")),
            CliError::Runtime(msg) => write!(f, "{msg}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub process: Option<ProcessSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<DiagnosticsSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub centering: Centering,
    pub scale: ScaleRule,
    #[serde(default)]
    pub include_diagonal: bool,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gmc: Option<GmcSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<DeltaSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<ThetaSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub concentration: Option<ConcentrationSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub longmem: Option<LongmemSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GmcSection {
    /// Moment order of the coupling distance.
    pub alpha: f64,
    /// Horizons the moment curve is probed at.
    pub horizons: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaSection {
    /// Memory horizons of the truncated comparison process.
    pub ells: Vec<usize>,
    /// Pair lags probed for the worst case.
    pub lags: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaSection {
    pub i_values: Vec<i64>,
    pub j_values: Vec<i64>,
    pub outer_reps: usize,
    pub inner_reps: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrationSection {
    pub lags: Vec<usize>,
    pub taus: Vec<f64>,
    /// Interval starts per lag, placed at pilot-sample quantiles.
    pub x_points: usize,
    pub reps: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LongmemSection {
    pub case: LongMemCase,
    /// Limiting weighted kernel-derivative constant entering the variance
    /// prediction.
    #[serde(default = "default_weight_constant")]
    pub weight_constant: f64,
    /// When set, also evaluate the second-order chaos term at this lag on
    /// replicate paths (needs [process] with a linear spec and
    /// [experiment]).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zterm_lag: Option<u32>,
}

fn default_weight_constant() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

impl ConfigFile {
    /// Every semantic problem in the document, one message per field.
    pub fn validation_errors(&self) -> Vec<String> {
        fn check(errs: &mut Vec<String>, section: &str, r: wustat_core::error::Result<()>) {
            if let Err(e) = r {
                errs.push(format!("[{section}] {e}"));
            }
        }
        let mut errs = Vec::new();
        if let Some(p) = &self.process {
            check(&mut errs, "process", p.validate());
        }
        if let Some(k) = &self.kernel {
            check(&mut errs, "kernel", k.validate());
        }
        if let Some(w) = &self.weights {
            check(&mut errs, "weights", w.validate());
        }
        if let Some(e) = &self.experiment {
            for msg in e.validation_errors() {
                errs.push(format!("[experiment] {msg}"));
            }
        }
        if let Some(d) = &self.diagnostics {
            if let Some(g) = &d.gmc {
                if !(g.alpha > 0.0) || !g.alpha.is_finite() {
                    errs.push(format!(
                        "[diagnostics.gmc] alpha must be positive and finite, got {}",
                        g.alpha
                    ));
                }
                if g.horizons.is_empty() {
                    errs.push("[diagnostics.gmc] horizons must not be empty".into());
                }
            }
            if let Some(l) = &d.longmem {
                check(&mut errs, "diagnostics.longmem", l.case.validate());
                if !l.weight_constant.is_finite() {
                    errs.push("[diagnostics.longmem] weight_constant must be finite".into());
                }
            }
            // The remaining diagnostics hand their grids straight to core
            // operations whose preconditions produce the field-level
            // messages; duplicating the checks here would let the two lists
            // drift apart.
        }
        errs
    }
}

impl ExperimentSection {
    fn validation_errors(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.n_grid.is_empty() {
            errs.push("n_grid must not be empty".into());
        } else {
            if self.n_grid[0] < 2 {
                errs.push("n_grid entries must be at least 2".into());
            }
            if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
                errs.push("n_grid must be strictly increasing".into());
            }
        }
        if self.replicates < 2 {
            errs.push("replicates must be at least 2".into());
        }
        if let Centering::MonteCarlo { center_reps } = self.centering {
            if center_reps < 10 * self.replicates {
                errs.push(format!(
                    "centering center_reps = {center_reps} must be at least 10 * replicates = {}",
                    10 * self.replicates
                ));
            }
        }
        if let ScaleRule::Fixed { exponent } = self.scale {
            if !exponent.is_finite() {
                errs.push("scale exponent must be finite".into());
            }
        }
        if let ScaleRule::Catalog { case } = &self.scale {
            if let Err(e) = wustat_core::longmem::rate_exponent(case) {
                errs.push(format!("scale catalog case: {e}"));
            }
        }
        errs
    }
}

/// Parse and validate a config file; the raw text is returned alongside so
/// the caller can digest exactly the bytes that were accepted.
pub fn parse_config(path: &Path) -> Result<(ConfigFile, String), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::invalid(format!("cannot read config {}: {e}", path.display()))
    })?;
    let cfg: ConfigFile = toml::from_str(&text)
        .map_err(|e| CliError::invalid(format!("config {}: {e}", path.display())))?;
    let errs = cfg.validation_errors();
    if errs.is_empty() {
        Ok((cfg, text))
    } else {
        Err(CliError::Validation(errs))
    }
}
