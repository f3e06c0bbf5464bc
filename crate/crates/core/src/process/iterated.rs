//! Iterated random maps X_t = F(X_{t-1}, eps_t). The chain is started from
//! state 0 and run through a burn-in window so the retained values are close
//! to stationarity; the burn-in innovations are kept so a path can be
//! reconstructed (or re-run from a perturbed start) exactly.

use super::{spec_fingerprint, InnovationLaw, InnovationSpec, SamplePath};
use crate::error::{Error, Result};
use crate::rng::{stream, StreamRole};
use serde::{Deserialize, Serialize};

pub const DEFAULT_BURN_IN: usize = 1000;

/// The update map F(x, eps).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub enum MapKind {
    /// x' = rho x + eps, |rho| < 1.
    Ar1 { rho: f64 },
    /// x' = (x + eps) / 2 with eps in {0, 1}. Contracts at rate 1/2 and has
    /// the uniform distribution on [0, 1] as stationary marginal (the state
    /// is the binary expansion fed by the innovations).
    HalvingBernoulli,
    /// Threshold autoregression x' = p_pos max(x, 0) + p_neg max(-x, 0) + eps;
    /// Lipschitz constant max(|p_pos|, |p_neg|) must be < 1.
    Tar1 { phi_pos: f64, phi_neg: f64 },
    /// Conditionally heteroscedastic recursion x' = eps sqrt(a0 + a1 x^2).
    /// Needs a0 > 0, a1 >= 0 and a1 E[eps^2] < 1 for a finite second moment,
    /// in which case E[X^2] = a0 E[eps^2] / (1 - a1 E[eps^2]).
    Arch1 { a0: f64, a1: f64 },
}

impl MapKind {
    /// One application of the map.
    #[inline]
    pub fn step(&self, x: f64, e: f64) -> f64 {
        match *self {
            MapKind::Ar1 { rho } => rho * x + e,
            MapKind::HalvingBernoulli => (x + e) / 2.0,
            MapKind::Tar1 { phi_pos, phi_neg } => {
                phi_pos * x.max(0.0) + phi_neg * (-x).max(0.0) + e
            }
            MapKind::Arch1 { a0, a1 } => e * (a0 + a1 * x * x).sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IteratedMapSpec {
    pub kind: MapKind,
    pub innovations: InnovationSpec,
    /// Steps run from state 0 before time 1.
    pub burn_in: usize,
}

impl IteratedMapSpec {
    pub fn ar1(rho: f64) -> Self {
        Self {
            kind: MapKind::Ar1 { rho },
            innovations: InnovationSpec::standard_normal(),
            burn_in: DEFAULT_BURN_IN,
        }
    }

    pub fn halving() -> Self {
        Self {
            kind: MapKind::HalvingBernoulli,
            innovations: InnovationSpec::bernoulli_half(),
            burn_in: DEFAULT_BURN_IN,
        }
    }

    pub fn tar1(phi_pos: f64, phi_neg: f64) -> Self {
        Self {
            kind: MapKind::Tar1 { phi_pos, phi_neg },
            innovations: InnovationSpec::standard_normal(),
            burn_in: DEFAULT_BURN_IN,
        }
    }

    pub fn arch1(a0: f64, a1: f64) -> Self {
        Self {
            kind: MapKind::Arch1 { a0, a1 },
            innovations: InnovationSpec::standard_normal(),
            burn_in: DEFAULT_BURN_IN,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.innovations.validate()?;
        match self.kind {
            MapKind::Ar1 { rho } => {
                if !rho.is_finite() || rho.abs() >= 1.0 {
                    return Err(Error::InvalidSpec(format!(
                        "ar1 rho must satisfy |rho| < 1, got {rho}"
                    )));
                }
            }
            MapKind::HalvingBernoulli => {
                let ok = matches!(self.innovations.law, InnovationLaw::BernoulliHalf)
                    && self.innovations.scale == 1.0;
                if !ok {
                    return Err(Error::InvalidSpec(
                        "halving_bernoulli requires bernoulli innovations with scale 1 \
                         (the state stays in [0, 1] only for eps in {0, 1})"
                            .into(),
                    ));
                }
            }
            MapKind::Tar1 { phi_pos, phi_neg } => {
                if !phi_pos.is_finite()
                    || !phi_neg.is_finite()
                    || phi_pos.abs().max(phi_neg.abs()) >= 1.0
                {
                    return Err(Error::InvalidSpec(format!(
                        "tar1 needs max(|phi_pos|, |phi_neg|) < 1, got ({phi_pos}, {phi_neg})"
                    )));
                }
            }
            MapKind::Arch1 { a0, a1 } => {
                if !a0.is_finite() || a0 <= 0.0 || !a1.is_finite() || a1 < 0.0 {
                    return Err(Error::InvalidSpec(format!(
                        "arch1 needs a0 > 0 and a1 >= 0, got ({a0}, {a1})"
                    )));
                }
                let m2 = self.innovations.second_moment()?;
                if a1 * m2 >= 1.0 {
                    return Err(Error::InvalidSpec(format!(
                        "arch1 needs a1 E[eps^2] < 1 for stationarity, got {}",
                        a1 * m2
                    )));
                }
            }
        }
        Ok(())
    }

    /// Stationary mean where a closed form exists.
    pub fn stationary_mean(&self) -> Result<f64> {
        self.validate()?;
        match self.kind {
            MapKind::Ar1 { rho } => Ok(self.innovations.mean() / (1.0 - rho)),
            MapKind::HalvingBernoulli => Ok(0.5),
            MapKind::Arch1 { .. } => {
                if self.innovations.mean() == 0.0 {
                    Ok(0.0)
                } else {
                    Err(Error::Domain(
                        "arch1 stationary mean is only known for mean-zero innovations".into(),
                    ))
                }
            }
            MapKind::Tar1 { .. } => Err(Error::Domain(
                "tar1 has no closed-form stationary mean".into(),
            )),
        }
    }

    /// Stationary variance where a closed form exists.
    pub fn stationary_variance(&self) -> Result<f64> {
        self.validate()?;
        match self.kind {
            MapKind::Ar1 { rho } => Ok(self.innovations.variance()? / (1.0 - rho * rho)),
            MapKind::HalvingBernoulli => Ok(1.0 / 12.0),
            MapKind::Arch1 { a0, a1 } => {
                if self.innovations.mean() != 0.0 {
                    return Err(Error::Domain(
                        "arch1 stationary variance is only known for mean-zero innovations".into(),
                    ));
                }
                let m2 = self.innovations.second_moment()?;
                Ok(a0 * m2 / (1.0 - a1 * m2))
            }
            MapKind::Tar1 { .. } => Err(Error::Domain(
                "tar1 has no closed-form stationary variance".into(),
            )),
        }
    }

    /// Lag-k autocovariance where a closed form exists.
    pub fn stationary_covariance(&self, lag: usize) -> Result<f64> {
        match self.kind {
            MapKind::Ar1 { rho } => Ok(self.stationary_variance()? * rho.powi(lag as i32)),
            MapKind::HalvingBernoulli => {
                // X_{t+k} = X_t / 2^k + independent innovations, so the
                // covariance scales by 2^(-k).
                Ok((1.0 / 12.0) * 0.5f64.powi(lag as i32))
            }
            MapKind::Arch1 { .. } => {
                if lag == 0 {
                    self.stationary_variance()
                } else {
                    // X_t is a martingale difference: eps_t is independent of
                    // the past and has mean zero.
                    if self.innovations.mean() == 0.0 {
                        Ok(0.0)
                    } else {
                        Err(Error::Domain(
                            "arch1 covariances are only known for mean-zero innovations".into(),
                        ))
                    }
                }
            }
            MapKind::Tar1 { .. } => Err(Error::Domain(
                "tar1 has no closed-form covariance".into(),
            )),
        }
    }

    pub fn fingerprint(&self) -> String {
        spec_fingerprint(self)
    }
}

/// Run the map from `x0` over the given innovations, returning every state
/// visited (one per innovation).
pub fn iterate_from(kind: &MapKind, x0: f64, eps: &[f64]) -> Vec<f64> {
    let mut x = x0;
    let mut out = Vec::with_capacity(eps.len());
    for &e in eps {
        x = kind.step(x, e);
        out.push(x);
    }
    out
}

pub(super) fn values_from_innovations(
    spec: &IteratedMapSpec,
    eps: &[f64],
    n: usize,
) -> Result<Vec<f64>> {
    if eps.len() != spec.burn_in + n {
        return Err(Error::InvalidArgument(format!(
            "expected {} innovations for n = {n}, burn_in = {}, got {}",
            spec.burn_in + n,
            spec.burn_in,
            eps.len()
        )));
    }
    let mut states = iterate_from(&spec.kind, 0.0, eps);
    Ok(states.split_off(spec.burn_in))
}

/// Generate X_1..X_n. Burn-in innovations (times 1-burn_in..0) come from the
/// `History` stream and the rest from the `Future` stream, mirroring the
/// linear generator so coupled runs can swap the history out.
pub fn generate_iterated(spec: &IteratedMapSpec, n: usize, seed: u64) -> Result<SamplePath> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidArgument("path length n must be >= 1".into()));
    }
    let sampler = spec.innovations.sampler()?;
    let mut eps = Vec::with_capacity(spec.burn_in + n);
    let mut hist_rng = stream(seed, StreamRole::History);
    for _ in 0..spec.burn_in {
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
        innovation_start: 1 - spec.burn_in as i64,
        seed,
        spec_fingerprint: spec.fingerprint(),
    })
}
