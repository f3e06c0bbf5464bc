//! Coupled path pairs for contraction diagnostics. The primary path is the
//! ordinary generator output; the shadow path replays the exact same future
//! innovations (times >= 1) on top of a different prehistory. How fast the
//! two paths merge measures how quickly the process forgets its past.

use super::{generate, iterated, linear, ProcessSpec, SamplePath};
use crate::error::{Error, Result};
use crate::rng::{stream, StreamRole};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum CouplingMode {
    /// The shadow draws a fresh, independent prehistory from its own stream.
    IidPrehistory,
    /// The shadow restarts from the fixed state z0 at time 0 (no prehistory
    /// innovations at all). Only meaningful for iterated maps, whose state is
    /// a single number; a linear process would need its whole innovation
    /// tail replaced, so this mode is unsupported there.
    FixedPrehistory { z0: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoupledPair {
    pub primary: SamplePath,
    pub shadow: SamplePath,
    /// Time index of the first innovation the two paths share.
    pub coupling_time: i64,
    pub mode: CouplingMode,
}

/// Generate a coupled pair. The primary path is bit-for-bit the output of
/// [`generate`] for the same spec and seed.
pub fn generate_coupled(
    spec: &ProcessSpec,
    n: usize,
    seed: u64,
    mode: CouplingMode,
) -> Result<CoupledPair> {
    if let (CouplingMode::FixedPrehistory { .. }, ProcessSpec::Linear(_)) = (&mode, spec) {
        return Err(Error::Unsupported(
            "fixed-prehistory coupling needs a finite-dimensional state; \
             use iid prehistory for linear processes"
                .into(),
        ));
    }
    if let CouplingMode::FixedPrehistory { z0 } = mode {
        if !z0.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "fixed prehistory state must be finite, got {z0}"
            )));
        }
    }
    let primary = generate(spec, n, seed)?;
    let primary_inn = primary
        .innovations
        .as_ref()
        .expect("generators retain innovations");
    let sampler = spec.innovations().sampler()?;

    let shadow = match (spec, mode) {
        (ProcessSpec::Linear(s), CouplingMode::IidPrehistory) => {
            let m = s.truncation;
            let mut eps = Vec::with_capacity(n + m);
            let mut rng = stream(seed, StreamRole::ShadowHistory);
            for _ in 0..m {
                eps.push(sampler.draw(&mut rng));
            }
            eps.extend_from_slice(&primary_inn[m..]);
            let values = linear::values_from_innovations(s, &eps, n)?;
            SamplePath {
                values,
                innovations: Some(eps),
                innovation_start: 1 - m as i64,
                seed,
                spec_fingerprint: s.fingerprint(),
            }
        }
        (ProcessSpec::Iterated(s), CouplingMode::IidPrehistory) => {
            let b = s.burn_in;
            let mut eps = Vec::with_capacity(n + b);
            let mut rng = stream(seed, StreamRole::ShadowHistory);
            for _ in 0..b {
                eps.push(sampler.draw(&mut rng));
            }
            eps.extend_from_slice(&primary_inn[b..]);
            let values = iterated::values_from_innovations(s, &eps, n)?;
            SamplePath {
                values,
                innovations: Some(eps),
                innovation_start: 1 - b as i64,
                seed,
                spec_fingerprint: s.fingerprint(),
            }
        }
        (ProcessSpec::Iterated(s), CouplingMode::FixedPrehistory { z0 }) => {
            let future = &primary_inn[s.burn_in..];
            let values = iterated::iterate_from(&s.kind, z0, future);
            SamplePath {
                values,
                innovations: Some(future.to_vec()),
                innovation_start: 1,
                seed,
                spec_fingerprint: s.fingerprint(),
            }
        }
        (ProcessSpec::Linear(_), CouplingMode::FixedPrehistory { .. }) => unreachable!(),
    };

    Ok(CoupledPair {
        primary,
        shadow,
        coupling_time: 1,
        mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::{IteratedMapSpec, LinearProcessSpec};

    fn linear_spec() -> ProcessSpec {
        ProcessSpec::Linear(LinearProcessSpec::geometric(
            0.5,
            64,
            crate::process::InnovationSpec::standard_normal(),
        ))
    }

    #[test]
    fn primary_is_plain_generator_output() {
        let spec = linear_spec();
        let pair = generate_coupled(&spec, 80, 3, CouplingMode::IidPrehistory).unwrap();
        let plain = generate(&spec, 80, 3).unwrap();
        assert_eq!(pair.primary, plain);
        assert_eq!(pair.coupling_time, 1);

        let ispec = ProcessSpec::Iterated(IteratedMapSpec::ar1(0.7));
        let pair = generate_coupled(&ispec, 80, 3, CouplingMode::IidPrehistory).unwrap();
        assert_eq!(pair.primary, generate(&ispec, 80, 3).unwrap());
    }

    #[test]
    fn shadow_shares_the_future_but_not_the_history() {
        let spec = linear_spec();
        let pair = generate_coupled(&spec, 50, 9, CouplingMode::IidPrehistory).unwrap();
        let p = pair.primary.innovations.as_ref().unwrap();
        let s = pair.shadow.innovations.as_ref().unwrap();
        assert_eq!(p[64..], s[64..]);
        assert_ne!(p[..64], s[..64]);
        assert_ne!(pair.primary.values[0], pair.shadow.values[0]);
    }

    #[test]
    fn contracting_map_merges_geometrically() {
        let spec = ProcessSpec::Iterated(IteratedMapSpec::ar1(0.5));
        let pair = generate_coupled(&spec, 60, 4, CouplingMode::IidPrehistory).unwrap();
        let gap: Vec<f64> = pair
            .primary
            .values
            .iter()
            .zip(&pair.shadow.values)
            .map(|(a, b)| (a - b).abs())
            .collect();
        // |X_t - X'_t| = 0.5^(t-1) |X_1 - X'_1| for the linear map.
        for t in 1..40 {
            assert!(
                (gap[t] - 0.5 * gap[t - 1]).abs() < 1e-12 * (1.0 + gap[t - 1]),
                "t = {t}: {} vs {}",
                gap[t],
                0.5 * gap[t - 1]
            );
        }
    }

    #[test]
    fn fixed_prehistory_restarts_from_z0() {
        let spec = ProcessSpec::Iterated(IteratedMapSpec::ar1(0.5));
        let pair =
            generate_coupled(&spec, 20, 8, CouplingMode::FixedPrehistory { z0: 2.0 }).unwrap();
        let e1 = pair.primary.innovation_at(1).unwrap();
        assert_eq!(pair.shadow.values[0], 0.5 * 2.0 + e1);
        assert_eq!(pair.shadow.innovation_start, 1);
    }

    #[test]
    fn fixed_prehistory_rejected_for_linear() {
        let err = generate_coupled(&linear_spec(), 20, 8, CouplingMode::FixedPrehistory { z0: 0.0 })
            .unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }
}
