//! Stationary process catalog: causal linear processes with truncated
//! coefficient sequences, and a small family of iterated random maps. Both
//! produce [`SamplePath`] values that retain their innovations, so every path
//! can be reconstructed bit-for-bit and coupled against a shadow path that
//! shares its future randomness.

mod coupled;
mod iterated;
mod linear;

pub use coupled::{generate_coupled, CoupledPair, CouplingMode};
pub use iterated::{generate_iterated, IteratedMapSpec, MapKind};
pub use linear::{
    covariance_all, covariance_fn, generate_linear, truncate_linear, CoeffRule, LinearProcessSpec,
    SlowlyVarying,
};

use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

/// Innovation distribution. Scale multiplies the base law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub enum InnovationLaw {
    /// N(0, 1).
    StandardNormal,
    /// 0 or 1, each with probability 1/2. Mean 1/2, variance 1/4.
    BernoulliHalf,
    /// Uniform on (-1, 1). Variance 1/3.
    UniformSymmetric,
    /// Student t with `df` degrees of freedom. Finite variance only for
    /// df > 2; heavier tails are allowed for contraction probing but are
    /// rejected wherever a second moment is required.
    StudentT { df: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InnovationSpec {
    pub law: InnovationLaw,
    pub scale: f64,
}

impl InnovationSpec {
    pub fn standard_normal() -> Self {
        Self {
            law: InnovationLaw::StandardNormal,
            scale: 1.0,
        }
    }

    pub fn bernoulli_half() -> Self {
        Self {
            law: InnovationLaw::BernoulliHalf,
            scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.scale.is_finite() || self.scale <= 0.0 {
            return Err(Error::InvalidSpec(format!(
                "innovation scale must be finite and positive, got {}",
                self.scale
            )));
        }
        if let InnovationLaw::StudentT { df } = self.law {
            if !df.is_finite() || df <= 0.0 {
                return Err(Error::InvalidSpec(format!(
                    "student_t df must be positive, got {df}"
                )));
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match self.law {
            InnovationLaw::BernoulliHalf => 0.5 * self.scale,
            _ => 0.0,
        }
    }

    /// Variance of one innovation; `Domain` error when infinite.
    pub fn variance(&self) -> Result<f64> {
        let s2 = self.scale * self.scale;
        match self.law {
            InnovationLaw::StandardNormal => Ok(s2),
            InnovationLaw::BernoulliHalf => Ok(0.25 * s2),
            InnovationLaw::UniformSymmetric => Ok(s2 / 3.0),
            InnovationLaw::StudentT { df } => {
                if df > 2.0 {
                    Ok(s2 * df / (df - 2.0))
                } else {
                    Err(Error::Domain(format!(
                        "student_t with df = {df} has infinite variance"
                    )))
                }
            }
        }
    }

    /// Second moment E[eps^2]; infinite-variance laws error as in
    /// [`InnovationSpec::variance`].
    pub fn second_moment(&self) -> Result<f64> {
        let m = self.mean();
        Ok(self.variance()? + m * m)
    }

    pub fn sampler(&self) -> Result<InnovationSampler> {
        self.validate()?;
        Ok(match self.law {
            InnovationLaw::StandardNormal => InnovationSampler::Normal { scale: self.scale },
            InnovationLaw::BernoulliHalf => InnovationSampler::Bernoulli { scale: self.scale },
            InnovationLaw::UniformSymmetric => InnovationSampler::Uniform { scale: self.scale },
            InnovationLaw::StudentT { df } => InnovationSampler::Student {
                scale: self.scale,
                distr: StudentT::new(df).map_err(|e| Error::InvalidSpec(e.to_string()))?,
            },
        })
    }
}

/// Prebuilt sampler so hot loops avoid re-validating the law per draw.
#[derive(Clone, Debug)]
pub enum InnovationSampler {
    Normal { scale: f64 },
    Bernoulli { scale: f64 },
    Uniform { scale: f64 },
    Student { scale: f64, distr: StudentT<f64> },
}

impl InnovationSampler {
    #[inline]
    pub fn draw(&self, rng: &mut impl Rng) -> f64 {
        match self {
            InnovationSampler::Normal { scale } => {
                scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
            }
            InnovationSampler::Bernoulli { scale } => {
                if rng.random::<bool>() {
                    *scale
                } else {
                    0.0
                }
            }
            InnovationSampler::Uniform { scale } => scale * (2.0 * rng.random::<f64>() - 1.0),
            InnovationSampler::Student { scale, distr } => scale * distr.sample(rng),
        }
    }
}

/// Either process family, for operations that accept both.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub enum ProcessSpec {
    Linear(LinearProcessSpec),
    Iterated(IteratedMapSpec),
}

impl ProcessSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ProcessSpec::Linear(s) => s.validate(),
            ProcessSpec::Iterated(s) => s.validate(),
        }
    }

    pub fn innovations(&self) -> &InnovationSpec {
        match self {
            ProcessSpec::Linear(s) => &s.innovations,
            ProcessSpec::Iterated(s) => &s.innovations,
        }
    }

    pub fn fingerprint(&self) -> String {
        spec_fingerprint(self)
    }
}

pub fn generate(spec: &ProcessSpec, n: usize, seed: u64) -> Result<SamplePath> {
    match spec {
        ProcessSpec::Linear(s) => generate_linear(s, n, seed),
        ProcessSpec::Iterated(s) => generate_iterated(s, n, seed),
    }
}

/// One realization X_1..X_n together with the innovations that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    /// X_1, ..., X_n.
    pub values: Vec<f64>,
    /// Retained innovations in increasing time order, starting at time
    /// `innovation_start` and ending at time n. `None` for paths built from
    /// raw values (e.g. read from a file).
    pub innovations: Option<Vec<f64>>,
    /// Time index of `innovations[0]`; 1 - truncation for linear processes,
    /// 1 - burn_in for iterated maps.
    pub innovation_start: i64,
    /// Seed the path was generated from.
    pub seed: u64,
    /// Digest of the generating spec (empty for raw paths).
    pub spec_fingerprint: String,
}

impl SamplePath {
    /// Wrap raw values (no provenance, no innovations).
    pub fn from_values(values: Vec<f64>) -> Self {
        SamplePath {
            values,
            innovations: None,
            innovation_start: 0,
            seed: 0,
            spec_fingerprint: String::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// The innovation at time index `t`, if retained.
    pub fn innovation_at(&self, t: i64) -> Option<f64> {
        let inn = self.innovations.as_ref()?;
        let idx = t - self.innovation_start;
        if idx < 0 {
            return None;
        }
        inn.get(idx as usize).copied()
    }

    /// Recompute the values from the retained innovations. Generators are
    /// pure functions of the innovation sequence, so this must reproduce
    /// `self.values` exactly; tests rely on that.
    pub fn reconstruct(&self, spec: &ProcessSpec) -> Result<Vec<f64>> {
        let inn = self
            .innovations
            .as_ref()
            .ok_or_else(|| Error::MissingData("path has no retained innovations".into()))?;
        match spec {
            ProcessSpec::Linear(s) => linear::values_from_innovations(s, inn, self.n()),
            ProcessSpec::Iterated(s) => iterated::values_from_innovations(s, inn, self.n()),
        }
    }
}

/// Short stable digest of any serializable spec.
pub fn spec_fingerprint<T: Serialize>(spec: &T) -> String {
    use sha2::{Digest, Sha256};
    let json = serde_json::to_vec(spec).expect("specs serialize");
    let digest = Sha256::digest(&json);
    let mut out = String::with_capacity(16);
    for byte in digest.iter().take(8) {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn innovation_moments() {
        let b = InnovationSpec::bernoulli_half();
        assert_eq!(b.mean(), 0.5);
        assert_eq!(b.variance().unwrap(), 0.25);
        let t = InnovationSpec {
            law: InnovationLaw::StudentT { df: 4.0 },
            scale: 2.0,
        };
        assert!((t.variance().unwrap() - 8.0).abs() < 1e-12);
        let heavy = InnovationSpec {
            law: InnovationLaw::StudentT { df: 1.5 },
            scale: 1.0,
        };
        assert!(heavy.variance().is_err());
    }

    #[test]
    fn invalid_scale_rejected() {
        let spec = InnovationSpec {
            law: InnovationLaw::StandardNormal,
            scale: 0.0,
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn fingerprints_distinguish_specs() {
        let a = InnovationSpec::standard_normal();
        let b = InnovationSpec::bernoulli_half();
        assert_ne!(spec_fingerprint(&a), spec_fingerprint(&b));
        assert_eq!(spec_fingerprint(&a), spec_fingerprint(&a.clone()));
    }
}
