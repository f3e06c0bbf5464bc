//! Symmetric pair kernels K(x, y) and their expectations under a configured
//! process. The catalog covers the classical pairwise statistics: proximity
//! counting (indicator on |x - y|), products of transformed values (sample
//! covariance), the sign test on sums (Wilcoxon), and additive averages
//! (partial sums).

use crate::error::{Error, Result};
use crate::process::{covariance_fn, generate, InnovationLaw, MapKind, ProcessSpec};
use crate::rng::replicate_seed;
use crate::stats::{mean_and_standard_error, normal_cdf};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Transform {
    Identity,
    Square,
}

impl Transform {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Transform::Identity => x,
            Transform::Square => x * x,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub enum KernelSpec {
    /// K = 1 iff |x - y| < b (strict).
    IndicatorDistance { b: f64 },
    /// K = T(x) T(y).
    Product { transform: Transform },
    /// K = 1 iff x + y > 0 (strict; ties count as 0).
    Wilcoxon,
    /// K = (G(x) + G(y)) / 2.
    Additive { transform: Transform },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        if let KernelSpec::IndicatorDistance { b } = self {
            if !b.is_finite() || *b <= 0.0 {
                return Err(Error::InvalidSpec(format!(
                    "indicator distance needs b > 0, got {b}"
                )));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match *self {
            KernelSpec::IndicatorDistance { b } => {
                if (x - y).abs() < b {
                    1.0
                } else {
                    0.0
                }
            }
            KernelSpec::Product { transform } => transform.apply(x) * transform.apply(y),
            KernelSpec::Wilcoxon => {
                if x + y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            KernelSpec::Additive { transform } => (transform.apply(x) + transform.apply(y)) / 2.0,
        }
    }

    /// True for the {0,1}-valued kinds, whose pair sums are exact integer
    /// counts.
    pub fn is_indicator(&self) -> bool {
        matches!(
            self,
            KernelSpec::IndicatorDistance { .. } | KernelSpec::Wilcoxon
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub value: f64,
    pub stderr: f64,
    pub reps: usize,
}

/// Monte Carlo estimate of E K(X_1, X_{1+gap}) under the process, from
/// `reps` independent short paths.
pub fn mean_estimate(
    kernel: &KernelSpec,
    process: &ProcessSpec,
    gap: usize,
    reps: usize,
    seed: u64,
) -> Result<MeanEstimate> {
    kernel.validate()?;
    process.validate()?;
    if reps < 100 {
        return Err(Error::InvalidArgument(format!(
            "mean estimation needs reps >= 100, got {reps}"
        )));
    }
    let mut samples = Vec::with_capacity(reps);
    for rep in 0..reps {
        let path = generate(process, gap + 1, replicate_seed(seed, gap as u64, rep as u64))?;
        samples.push(kernel.eval(path.values[0], path.values[gap]));
    }
    let (value, stderr) = mean_and_standard_error(&samples);
    Ok(MeanEstimate {
        value,
        stderr,
        reps,
    })
}

fn innovation_symmetric_continuous(law: &InnovationLaw) -> bool {
    matches!(
        law,
        InnovationLaw::StandardNormal | InnovationLaw::UniformSymmetric | InnovationLaw::StudentT { .. }
    )
}

/// Whether the stationary pair (X_i, X_{i+gap}) is jointly Gaussian: linear
/// filters (and the AR(1) map, which is one) of Gaussian innovations.
fn is_jointly_gaussian(process: &ProcessSpec) -> bool {
    match process {
        ProcessSpec::Linear(s) => matches!(s.innovations.law, InnovationLaw::StandardNormal),
        ProcessSpec::Iterated(s) => {
            matches!(s.kind, MapKind::Ar1 { .. })
                && matches!(s.innovations.law, InnovationLaw::StandardNormal)
        }
    }
}

/// Whether (X_i, X_j) has the same joint law as (-X_i, -X_j) and a
/// continuous marginal, which pins P(X_i + X_j > 0) = 1/2.
fn is_jointly_sign_symmetric(process: &ProcessSpec) -> bool {
    match process {
        ProcessSpec::Linear(s) => innovation_symmetric_continuous(&s.innovations.law),
        ProcessSpec::Iterated(s) => {
            // Maps that commute with sign flips of the whole innovation
            // sequence: rho x + e and e sqrt(a0 + a1 x^2).
            let odd_map = matches!(s.kind, MapKind::Ar1 { .. } | MapKind::Arch1 { .. });
            odd_map && innovation_symmetric_continuous(&s.innovations.law)
        }
    }
}

fn process_mean(process: &ProcessSpec) -> Result<f64> {
    match process {
        ProcessSpec::Linear(s) => {
            let mu_eps = s.innovations.mean();
            if mu_eps == 0.0 {
                return Ok(0.0);
            }
            let sum: f64 = s.coefficient_vec().iter().sum();
            Ok(mu_eps * sum)
        }
        ProcessSpec::Iterated(s) => s.stationary_mean(),
    }
}

fn process_covariance(process: &ProcessSpec, lag: usize) -> Result<f64> {
    match process {
        ProcessSpec::Linear(s) => covariance_fn(s, lag),
        ProcessSpec::Iterated(s) => s.stationary_covariance(lag),
    }
}

/// Closed-form E K(X_1, X_{1+gap}) where the catalog knows one;
/// `Unsupported` otherwise (the caller falls back to [`mean_estimate`]).
pub fn mean_analytic(kernel: &KernelSpec, process: &ProcessSpec, gap: usize) -> Result<f64> {
    kernel.validate()?;
    process.validate()?;
    match kernel {
        KernelSpec::Additive { transform } => {
            let mu = process_mean(process)?;
            match transform {
                Transform::Identity => Ok(mu),
                Transform::Square => Ok(process_covariance(process, 0)? + mu * mu),
            }
        }
        KernelSpec::Product { transform } => {
            let mu = process_mean(process)?;
            match transform {
                Transform::Identity => Ok(process_covariance(process, gap)? + mu * mu),
                Transform::Square => {
                    // E[X_i^2 X_j^2] = G0^2 + 2 G(gap)^2 for centered jointly
                    // Gaussian pairs (Isserlis).
                    if !is_jointly_gaussian(process) {
                        return Err(Error::Unsupported(
                            "squared-product mean is only known in closed form for \
                             Gaussian processes"
                                .into(),
                        ));
                    }
                    let g0 = process_covariance(process, 0)?;
                    let gk = process_covariance(process, gap)?;
                    Ok(g0 * g0 + 2.0 * gk * gk)
                }
            }
        }
        KernelSpec::Wilcoxon => {
            if is_jointly_sign_symmetric(process) {
                Ok(0.5)
            } else {
                Err(Error::Unsupported(
                    "wilcoxon mean 1/2 needs a sign-symmetric continuous process".into(),
                ))
            }
        }
        KernelSpec::IndicatorDistance { b } => {
            if gap == 0 {
                return Ok(1.0); // |X - X| = 0 < b always
            }
            // An order-0 uniform linear process is an i.i.d. uniform
            // sequence, and the difference of two independent width-w
            // uniforms is triangular: P(|X - Y| < b) = 2u - u^2, u = b/w.
            if let ProcessSpec::Linear(s) = process {
                if s.truncation == 0
                    && matches!(s.innovations.law, InnovationLaw::UniformSymmetric)
                {
                    let width = 2.0 * (s.coefficient(0) * s.innovations.scale).abs();
                    if width == 0.0 {
                        return Ok(1.0); // point mass, every pair coincides
                    }
                    let u = (b / width).min(1.0);
                    return Ok(2.0 * u - u * u);
                }
            }
            if !is_jointly_gaussian(process) {
                return Err(Error::Unsupported(
                    "indicator-distance mean is only known in closed form for \
                     Gaussian processes"
                        .into(),
                ));
            }
            let g0 = process_covariance(process, 0)?;
            let gk = process_covariance(process, gap)?;
            let var_diff = 2.0 * (g0 - gk);
            if var_diff <= 0.0 {
                return Ok(1.0); // degenerate difference, concentrated at 0
            }
            let z = b / var_diff.sqrt();
            Ok(2.0 * normal_cdf(z) - 1.0)
        }
    }
}
