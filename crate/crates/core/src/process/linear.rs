//! Causal linear processes X_t = sum_{i=0}^{M} a_i eps_{t-i} with a finite
//! truncation horizon M. The coefficient sequence comes from a small rule
//! catalog (explicit list, geometric decay, regularly varying decay with an
//! optional slowly varying factor); the truncated process is an exact linear
//! process in its own right, so all downstream theory applies to it with the
//! truncated coefficients.

use super::{spec_fingerprint, InnovationSpec, SamplePath};
use crate::error::{Error, Result};
use crate::rng::{stream, StreamRole};
use crate::stats::Kahan;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};
use std::cell::RefCell;

/// Slowly varying factor L(j) applied on top of j^(-beta).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SlowlyVarying {
    One,
    /// L(j) = ln(e + j)
    Log,
    /// L(j) = 1 / ln(e + j)
    InvLog,
}

impl SlowlyVarying {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            SlowlyVarying::One => 1.0,
            SlowlyVarying::Log => (std::f64::consts::E + x).ln(),
            SlowlyVarying::InvLog => 1.0 / (std::f64::consts::E + x).ln(),
        }
    }
}

/// Coefficient rule for a linear process.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub enum CoeffRule {
    /// a_i = coeffs[i]; the truncation horizon is the last index.
    Explicit { coeffs: Vec<f64> },
    /// a_i = rho^i, |rho| < 1.
    Geometric { rho: f64 },
    /// a_0 = 0, a_i = i^(-beta) L(i) for i >= 1, with beta in (1/2, 1).
    /// Square-summable but not summable: the long-memory family.
    RegVar {
        beta: f64,
        slowly_varying: SlowlyVarying,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearProcessSpec {
    pub coeffs: CoeffRule,
    /// Truncation horizon M: coefficients beyond index M are dropped.
    pub truncation: usize,
    pub innovations: InnovationSpec,
}

impl LinearProcessSpec {
    pub fn geometric(rho: f64, truncation: usize, innovations: InnovationSpec) -> Self {
        Self {
            coeffs: CoeffRule::Geometric { rho },
            truncation,
            innovations,
        }
    }

    pub fn explicit(coeffs: Vec<f64>, innovations: InnovationSpec) -> Self {
        let truncation = coeffs.len().saturating_sub(1);
        Self {
            coeffs: CoeffRule::Explicit { coeffs },
            truncation,
            innovations,
        }
    }

    pub fn regvar(
        beta: f64,
        slowly_varying: SlowlyVarying,
        truncation: usize,
        innovations: InnovationSpec,
    ) -> Self {
        Self {
            coeffs: CoeffRule::RegVar {
                beta,
                slowly_varying,
            },
            truncation,
            innovations,
        }
    }

    /// Default truncation horizon per rule: long-memory coefficient tails
    /// near beta = 1/2 carry real variance, so they get a deep horizon.
    pub fn default_truncation(rule: &CoeffRule) -> usize {
        match rule {
            CoeffRule::Explicit { coeffs } => coeffs.len().saturating_sub(1),
            CoeffRule::Geometric { .. } => 1 << 10,
            CoeffRule::RegVar { beta, .. } => {
                if *beta < 0.75 {
                    1 << 14
                } else {
                    1 << 10
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.innovations.validate()?;
        // Linear combinations need a finite second moment.
        self.innovations.variance()?;
        match &self.coeffs {
            CoeffRule::Explicit { coeffs } => {
                if coeffs.is_empty() {
                    return Err(Error::InvalidSpec("explicit coeffs must be nonempty".into()));
                }
                if coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidSpec("explicit coeffs must be finite".into()));
                }
                if coeffs.iter().all(|&c| c == 0.0) {
                    return Err(Error::InvalidSpec("explicit coeffs must not all be zero".into()));
                }
                if self.truncation != coeffs.len() - 1 {
                    return Err(Error::InvalidSpec(format!(
                        "truncation {} disagrees with explicit coeff length {} (expect len - 1)",
                        self.truncation,
                        coeffs.len()
                    )));
                }
            }
            CoeffRule::Geometric { rho } => {
                if !rho.is_finite() || rho.abs() >= 1.0 {
                    return Err(Error::InvalidSpec(format!(
                        "geometric rho must satisfy |rho| < 1, got {rho}"
                    )));
                }
                if self.truncation == 0 {
                    return Err(Error::InvalidSpec("truncation must be >= 1".into()));
                }
            }
            CoeffRule::RegVar { beta, .. } => {
                if !beta.is_finite() || *beta <= 0.5 || *beta >= 1.0 {
                    return Err(Error::InvalidSpec(format!(
                        "regvar beta must lie in (1/2, 1), got {beta}"
                    )));
                }
                if self.truncation == 0 {
                    return Err(Error::InvalidSpec("truncation must be >= 1".into()));
                }
            }
        }
        Ok(())
    }

    /// Coefficient a_i (zero outside 0..=truncation).
    pub fn coefficient(&self, i: i64) -> f64 {
        if i < 0 || i as usize > self.truncation {
            return 0.0;
        }
        let i = i as usize;
        match &self.coeffs {
            CoeffRule::Explicit { coeffs } => coeffs.get(i).copied().unwrap_or(0.0),
            CoeffRule::Geometric { rho } => rho.powi(i as i32),
            CoeffRule::RegVar {
                beta,
                slowly_varying,
            } => {
                if i == 0 {
                    0.0
                } else {
                    (i as f64).powf(-beta) * slowly_varying.eval(i as f64)
                }
            }
        }
    }

    /// Materialized coefficients a_0..a_M.
    pub fn coefficient_vec(&self) -> Vec<f64> {
        (0..=self.truncation as i64).map(|i| self.coefficient(i)).collect()
    }

    pub fn fingerprint(&self) -> String {
        spec_fingerprint(self)
    }
}

/// Gamma(lag) = Cov(X_0, X_lag) = Var(eps) * sum_i a_i a_{i+lag}.
pub fn covariance_fn(spec: &LinearProcessSpec, lag: usize) -> Result<f64> {
    spec.validate()?;
    let var = spec.innovations.variance()?;
    let a = spec.coefficient_vec();
    if lag > spec.truncation {
        return Ok(0.0);
    }
    let mut acc = Kahan::new();
    for i in 0..=(spec.truncation - lag) {
        acc.add(a[i] * a[i + lag]);
    }
    Ok(var * acc.value())
}

/// Cov(X_0, X_lag) for all lags 0..=max_lag, sharing one coefficient pass.
pub fn covariance_all(spec: &LinearProcessSpec, max_lag: usize) -> Result<Vec<f64>> {
    spec.validate()?;
    let var = spec.innovations.variance()?;
    let a = spec.coefficient_vec();
    let m = spec.truncation;
    let mut out = Vec::with_capacity(max_lag + 1);
    for lag in 0..=max_lag {
        if lag > m {
            out.push(0.0);
            continue;
        }
        let mut acc = Kahan::new();
        for i in 0..=(m - lag) {
            acc.add(a[i] * a[i + lag]);
        }
        out.push(var * acc.value());
    }
    Ok(out)
}

/// The spec whose coefficients are a_i 1(i < ell): same rule, shorter
/// horizon. `ell` >= 1; for ell beyond the current horizon this is the
/// identity.
pub fn truncate_linear(spec: &LinearProcessSpec, ell: usize) -> Result<LinearProcessSpec> {
    spec.validate()?;
    if ell == 0 {
        return Err(Error::InvalidArgument(
            "truncation point ell must be >= 1 (ell = 0 would drop every coefficient)".into(),
        ));
    }
    let new_m = (ell - 1).min(spec.truncation);
    let mut out = spec.clone();
    if let CoeffRule::Explicit { coeffs } = &mut out.coeffs {
        coeffs.truncate(new_m + 1);
    }
    out.truncation = new_m;
    Ok(out)
}

/// Direct-vs-FFT switch: the direct convolution costs n * (M + 1) multiply
/// adds; past ~4M of those the transform wins comfortably.
fn use_fft(n: usize, m: usize) -> bool {
    n.saturating_mul(m + 1) > (1 << 22)
}

/// values[t-1] = sum_i a_i eps[(t - i) - start] for t = 1..n, where eps
/// covers times start..=n with start = 1 - M.
fn convolve_direct(a: &[f64], eps: &[f64], n: usize) -> Vec<f64> {
    let m = a.len() - 1;
    let mut values = Vec::with_capacity(n);
    for t in 1..=n {
        // eps index for time s is s - (1 - M) = s + M - 1.
        let base = t + m - 1;
        let mut sum = 0.0;
        for (i, &ai) in a.iter().enumerate() {
            sum += ai * eps[base - i];
        }
        values.push(sum);
    }
    values
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn convolve_fft(a: &[f64], eps: &[f64], n: usize) -> Vec<f64> {
    let m = a.len() - 1;
    let size = (eps.len() + a.len()).next_power_of_two();
    let mut fa: Vec<Complex<f64>> = vec![Complex::default(); size];
    let mut fe: Vec<Complex<f64>> = vec![Complex::default(); size];
    for (i, &v) in a.iter().enumerate() {
        fa[i].re = v;
    }
    for (i, &v) in eps.iter().enumerate() {
        fe[i].re = v;
    }
    PLANNER.with(|planner| {
        let mut planner = planner.borrow_mut();
        let fwd = planner.plan_fft_forward(size);
        let inv = planner.plan_fft_inverse(size);
        fwd.process(&mut fa);
        fwd.process(&mut fe);
        for (x, y) in fa.iter_mut().zip(&fe) {
            *x *= y;
        }
        inv.process(&mut fa);
    });
    let scale = 1.0 / size as f64;
    // Output position for time t is (t + M - 1) in the linear convolution.
    (1..=n).map(|t| fa[t + m - 1].re * scale).collect()
}

pub(super) fn values_from_innovations(
    spec: &LinearProcessSpec,
    eps: &[f64],
    n: usize,
) -> Result<Vec<f64>> {
    let m = spec.truncation;
    if eps.len() != n + m {
        return Err(Error::InvalidArgument(format!(
            "expected {} innovations for n = {n}, M = {m}, got {}",
            n + m,
            eps.len()
        )));
    }
    let a = spec.coefficient_vec();
    Ok(if use_fft(n, m) {
        convolve_fft(&a, eps, n)
    } else {
        convolve_direct(&a, eps, n)
    })
}

/// Generate X_1..X_n. History innovations (times 1-M..0) come from the
/// `History` stream and future innovations (times 1..n) from the `Future`
/// stream, so a coupled shadow path can redraw the history while sharing the
/// future.
pub fn generate_linear(spec: &LinearProcessSpec, n: usize, seed: u64) -> Result<SamplePath> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidArgument("path length n must be >= 1".into()));
    }
    let sampler = spec.innovations.sampler()?;
    let m = spec.truncation;
    let mut eps = Vec::with_capacity(n + m);
    let mut hist_rng = stream(seed, StreamRole::History);
    for _ in 0..m {
        eps.push(sampler.draw(&mut hist_rng));
    }
    let mut fut_rng = stream(seed, StreamRole::Future);
    for _ in 0..n {
        eps.push(sampler.draw(&mut fut_rng));
    }
    let values = values_from_innovations(spec, &eps, n)?;
    Ok(SamplePath {
        values,
        innovations: Some(eps),
        innovation_start: 1 - m as i64,
        seed,
        spec_fingerprint: spec.fingerprint(),
    })
}
