//! Evaluation of U_n = sum_{1<=i,j<=n} w_{i-j} K(X_i, X_j). The dense double
//! loop is the reference; the banded route exploits finite weight support and
//! the sorting route exploits indicator kernels with constant weights. The
//! fast routes are tested to agree with the dense one — exactly for integer
//! counts, to tight relative tolerance for real-valued kernels.

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::process::SamplePath;
use crate::stats::Kahan;
use crate::weights::WeightSpec;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Dense,
    Banded,
    SortedIndicator,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UStatResult {
    pub value: f64,
    pub n: usize,
    pub include_diagonal: bool,
    pub path_fingerprint: String,
    pub method: Method,
}

/// Short digest of the raw path values (little-endian f64 bytes).
pub fn path_digest(values: &[f64]) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    for v in values {
        hasher.update(v.to_le_bytes());
    }
    let digest = hasher.finalize();
    let mut out = String::with_capacity(16);
    for byte in digest.iter().take(8) {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

const BLOCK_ROWS: usize = 256;

/// Off-diagonal upper-triangle sum for rows [lo, hi): compensated per block,
/// so the block values (and therefore the fixed-order combination below) do
/// not depend on how blocks are scheduled across threads.
fn dense_block(x: &[f64], lut: &[f64], kernel: &KernelSpec, lo: usize, hi: usize) -> f64 {
    let mut acc = Kahan::new();
    for i in lo..hi {
        let xi = x[i];
        let mut row = 0.0;
        for (j, &xj) in x.iter().enumerate().skip(i + 1) {
            row += lut[j - i] * kernel.eval(xi, xj);
        }
        acc.add(row);
    }
    acc.value()
}

fn diagonal_sum(x: &[f64], kernel: &KernelSpec) -> f64 {
    let mut acc = Kahan::new();
    for &xi in x {
        acc.add(kernel.eval(xi, xi));
    }
    acc.value()
}

/// The reference evaluator: full O(n^2) double sum.
pub fn compute_dense(
    path: &SamplePath,
    weights: &WeightSpec,
    kernel: &KernelSpec,
    include_diagonal: bool,
) -> Result<UStatResult> {
    weights.validate()?;
    kernel.validate()?;
    let x = &path.values;
    let n = x.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty path".into()));
    }
    let lut = weights.table(n.saturating_sub(1));
    let n_blocks = n.div_ceil(BLOCK_ROWS);
    let block = |b: usize| {
        let lo = b * BLOCK_ROWS;
        dense_block(x, &lut, kernel, lo, (lo + BLOCK_ROWS).min(n))
    };
    #[cfg(feature = "parallel")]
    let block_sums: Vec<f64> = {
        use rayon::prelude::*;
        (0..n_blocks).into_par_iter().map(block).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let block_sums: Vec<f64> = (0..n_blocks).map(block).collect();
    let mut upper = Kahan::new();
    for s in block_sums {
        upper.add(s);
    }
    let mut value = 2.0 * upper.value();
    if include_diagonal {
        let w0 = lut[0];
        if w0 != 0.0 {
            value += w0 * diagonal_sum(x, kernel);
        }
    }
    Ok(UStatResult {
        value,
        n,
        include_diagonal,
        path_fingerprint: path_digest(x),
        method: Method::Dense,
    })
}

/// O(n * support) evaluator for weights with finite support.
pub fn compute_banded(
    path: &SamplePath,
    weights: &WeightSpec,
    kernel: &KernelSpec,
    include_diagonal: bool,
) -> Result<UStatResult> {
    weights.validate()?;
    kernel.validate()?;
    let radius = weights.support_radius().ok_or_else(|| {
        Error::Unsupported("banded evaluation needs finite-support weights".into())
    })?;
    let x = &path.values;
    let n = x.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty path".into()));
    }
    let mut total = Kahan::new();
    for d in 1..=radius.min(n - 1) {
        let wd = weights.weight(d as i64);
        if wd == 0.0 {
            continue;
        }
        let mut band = Kahan::new();
        for i in 0..n - d {
            band.add(kernel.eval(x[i], x[i + d]));
        }
        total.add(2.0 * wd * band.value());
    }
    let mut value = total.value();
    if include_diagonal {
        let w0 = weights.weight(0);
        if w0 != 0.0 {
            value += w0 * diagonal_sum(x, kernel);
        }
    }
    Ok(UStatResult {
        value,
        n,
        include_diagonal,
        path_fingerprint: path_digest(x),
        method: Method::Banded,
    })
}

fn sorted_values(path: &SamplePath) -> Result<Vec<f64>> {
    if path.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "sorting-based evaluation needs finite values".into(),
        ));
    }
    let mut x = path.values.clone();
    x.sort_by(|a, b| a.partial_cmp(b).expect("finite values compare"));
    Ok(x)
}

/// Ordered-pair count with constant weights for the indicator kernels, via
/// sorting and a sliding window; equals `compute_dense` with `ConstantOne`
/// weights exactly (both are integer counts).
pub fn compute_sorted(
    path: &SamplePath,
    kernel: &KernelSpec,
    include_diagonal: bool,
) -> Result<UStatResult> {
    kernel.validate()?;
    let n = path.n();
    if n == 0 {
        return Err(Error::InvalidArgument("empty path".into()));
    }
    let (pairs, diag) = match kernel {
        KernelSpec::IndicatorDistance { b } => {
            let x = sorted_values(path)?;
            let mut pairs: u64 = 0;
            let mut lo = 0usize;
            for i in 0..n {
                while x[i] - x[lo] >= *b {
                    lo += 1;
                }
                pairs += (i - lo) as u64;
            }
            (pairs, n as u64) // |x - x| = 0 < b for every diagonal entry
        }
        KernelSpec::Wilcoxon => {
            let x = sorted_values(path)?;
            let mut pairs: u64 = 0;
            let (mut lo, mut hi) = (0usize, n - 1);
            while lo < hi {
                if x[lo] + x[hi] > 0.0 {
                    pairs += (hi - lo) as u64;
                    hi -= 1;
                } else {
                    lo += 1;
                }
            }
            let diag = x.iter().filter(|&&v| v > 0.0).count() as u64;
            (pairs, diag)
        }
        _ => {
            return Err(Error::Unsupported(
                "sorting-based evaluation covers only the indicator kernels".into(),
            ))
        }
    };
    let count = 2 * pairs + if include_diagonal { diag } else { 0 };
    Ok(UStatResult {
        value: count as f64,
        n,
        include_diagonal,
        path_fingerprint: path_digest(&path.values),
        method: Method::SortedIndicator,
    })
}

/// The proximity-pair count N_b: ordered pairs (diagonal included) within
/// strict distance b.
pub fn correlation_integral(path: &SamplePath, b: f64) -> Result<UStatResult> {
    compute_sorted(path, &KernelSpec::IndicatorDistance { b }, true)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignedRank {
    /// sum_i sign(X_i) * rank(|X_i|), an integer-valued statistic.
    pub value: f64,
    /// Ties among |X_i| were broken deterministically by original index.
    pub tie_flag: bool,
}

/// Signed-rank statistic. Sign of an exact zero is +1; ties in |X_i| are
/// ranked by original position and flagged.
pub fn signed_rank(path: &SamplePath) -> Result<SignedRank> {
    let x = &path.values;
    let n = x.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty path".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("signed ranks need finite values".into()));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        x[a].abs()
            .partial_cmp(&x[b].abs())
            .expect("finite values compare")
            .then(a.cmp(&b))
    });
    let tie_flag = idx.windows(2).any(|w| x[w[0]].abs() == x[w[1]].abs());
    let mut w: i64 = 0;
    for (rank0, &i) in idx.iter().enumerate() {
        let rank = rank0 as i64 + 1;
        if x[i] >= 0.0 {
            w += rank;
        } else {
            w -= rank;
        }
    }
    Ok(SignedRank {
        value: w as f64,
        tie_flag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Transform;
    use crate::rng::{stream, StreamRole};
    use proptest::prelude::*;
    use rand::Rng;

    fn product() -> KernelSpec {
        KernelSpec::Product {
            transform: Transform::Identity,
        }
    }

    fn random_path(n: usize, seed: u64) -> SamplePath {
        let mut rng = stream(seed, StreamRole::Auxiliary);
        SamplePath::from_values((0..n).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect())
    }

    /// Independent nested-loop evaluation of the full double sum.
    fn brute_force(
        x: &[f64],
        weights: &WeightSpec,
        kernel: &KernelSpec,
        include_diagonal: bool,
    ) -> f64 {
        let n = x.len();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i == j && !include_diagonal {
                    continue;
                }
                acc += weights.weight(i as i64 - j as i64) * kernel.eval(x[i], x[j]);
            }
        }
        acc
    }

    #[test]
    fn single_point_is_the_diagonal_term() {
        let path = SamplePath::from_values(vec![3.0]);
        let w = WeightSpec::Geometric { q: 0.5 };
        let r = compute_dense(&path, &w, &product(), true).unwrap();
        assert_eq!(r.value, 9.0);
        let r = compute_dense(&path, &w, &product(), false).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn delta0_additive_reduces_to_partial_sum() {
        let path = random_path(200, 1);
        let w = WeightSpec::Delta { k0: 0 };
        let k = KernelSpec::Additive {
            transform: Transform::Identity,
        };
        let r = compute_dense(&path, &w, &k, true).unwrap();
        let sum: f64 = path.values.iter().sum();
        assert!((r.value - sum).abs() < 1e-12 * sum.abs().max(1.0));
    }

    #[test]
    fn delta_k_product_reduces_to_lag_covariance_sum() {
        let path = random_path(100, 2);
        let w = WeightSpec::Delta { k0: 2 };
        let r = compute_banded(&path, &w, &product(), false).unwrap();
        let mut direct = 0.0;
        for i in 0..98 {
            direct += path.values[i] * path.values[i + 2];
        }
        assert!((r.value - 2.0 * direct).abs() < 1e-12 * direct.abs().max(1.0));
        // w_0 = 0 for this weight, so the diagonal flag changes nothing.
        let with_diag = compute_banded(&path, &w, &product(), true).unwrap();
        assert_eq!(r.value, with_diag.value);
    }

    #[test]
    fn dense_matches_brute_force_on_small_paths() {
        let kernels = [
            product(),
            KernelSpec::Product {
                transform: Transform::Square,
            },
            KernelSpec::Additive {
                transform: Transform::Square,
            },
            KernelSpec::Wilcoxon,
            KernelSpec::IndicatorDistance { b: 0.7 },
        ];
        let weights = [
            WeightSpec::ConstantOne,
            WeightSpec::Delta { k0: 1 },
            WeightSpec::Geometric { q: 0.6 },
            WeightSpec::Power { beta_w: 0.5, c: 1.0 },
        ];
        for seed in 0..5 {
            let path = random_path(5, seed);
            for k in &kernels {
                for w in &weights {
                    for diag in [true, false] {
                        let r = compute_dense(&path, w, k, diag).unwrap();
                        let oracle = brute_force(&path.values, w, k, diag);
                        assert!(
                            (r.value - oracle).abs() <= 1e-12 * oracle.abs().max(1.0),
                            "{w:?} {k:?} diag={diag}: {} vs {oracle}",
                            r.value
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn banded_agrees_with_dense() {
        let path = random_path(6, 9);
        let w = WeightSpec::Explicit {
            half: vec![1.0, 0.5],
        };
        for diag in [true, false] {
            let b = compute_banded(&path, &w, &product(), diag).unwrap();
            let d = compute_dense(&path, &w, &product(), diag).unwrap();
            assert!((b.value - d.value).abs() <= 1e-12 * d.value.abs().max(1.0));
        }
        assert!(matches!(
            compute_banded(&path, &WeightSpec::ConstantOne, &product(), true),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn sorted_indicator_equals_dense_exactly() {
        let path = random_path(300, 4);
        let r = correlation_integral(&path, 0.3).unwrap();
        let d = compute_dense(
            &path,
            &WeightSpec::ConstantOne,
            &KernelSpec::IndicatorDistance { b: 0.3 },
            true,
        )
        .unwrap();
        assert_eq!(r.value, d.value);
        assert_eq!(r.method, Method::SortedIndicator);

        let sw = compute_sorted(&path, &KernelSpec::Wilcoxon, true).unwrap();
        let dw = compute_dense(&path, &WeightSpec::ConstantOne, &KernelSpec::Wilcoxon, true)
            .unwrap();
        assert_eq!(sw.value, dw.value);
        let sw = compute_sorted(&path, &KernelSpec::Wilcoxon, false).unwrap();
        let dw = compute_dense(&path, &WeightSpec::ConstantOne, &KernelSpec::Wilcoxon, false)
            .unwrap();
        assert_eq!(sw.value, dw.value);
    }

    #[test]
    fn correlation_integral_degenerate_cases() {
        let same = SamplePath::from_values(vec![1.5; 7]);
        assert_eq!(correlation_integral(&same, 0.1).unwrap().value, 49.0);
        let far = SamplePath::from_values(vec![0.0, 10.0]);
        assert_eq!(correlation_integral(&far, 1.0).unwrap().value, 2.0);
    }

    #[test]
    fn correlation_integral_monotone_in_b() {
        let path = random_path(500, 6);
        let mut prev = 0.0;
        for b in [0.05, 0.1, 0.2, 0.4, 0.8, 1.6] {
            let v = correlation_integral(&path, b).unwrap().value;
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn correlation_integral_mean_on_iid_uniform() {
        // E N_b = n + n(n-1)(2b - b^2) for iid Uniform(0,1); average over
        // independent paths and compare within Monte Carlo error.
        let n = 2000;
        let b = 0.1;
        let reps = 24;
        let mut values = Vec::with_capacity(reps);
        for s in 0..reps as u64 {
            let mut rng = stream(s, StreamRole::Auxiliary);
            let path =
                SamplePath::from_values((0..n).map(|_| rng.random::<f64>()).collect());
            values.push(correlation_integral(&path, b).unwrap().value / (n * n) as f64);
        }
        let (mean, se) = crate::stats::mean_and_standard_error(&values);
        let nf = n as f64;
        let expect = (nf + nf * (nf - 1.0) * (2.0 * b - b * b)) / (nf * nf);
        assert!((mean - expect).abs() < 4.0 * se, "{mean} vs {expect} (se {se})");
    }

    #[test]
    fn constant_weights_are_permutation_invariant() {
        let path = random_path(64, 12);
        let mut shuffled = path.values.clone();
        // Deterministic Fisher-Yates.
        let mut rng = stream(99, StreamRole::Auxiliary);
        for i in (1..shuffled.len()).rev() {
            let j = rng.random_range(0..=i);
            shuffled.swap(i, j);
        }
        let perm = SamplePath::from_values(shuffled);
        let w = KernelSpec::Wilcoxon;
        let a = compute_dense(&path, &WeightSpec::ConstantOne, &w, true).unwrap();
        let b = compute_dense(&perm, &WeightSpec::ConstantOne, &w, true).unwrap();
        assert_eq!(a.value, b.value); // integer counts: exact
        let a = compute_dense(&path, &WeightSpec::ConstantOne, &product(), true).unwrap();
        let b = compute_dense(&perm, &WeightSpec::ConstantOne, &product(), true).unwrap();
        assert!((a.value - b.value).abs() <= 1e-12 * a.value.abs().max(1.0));
    }

    #[test]
    fn product_kernel_scales_quadratically() {
        let path = random_path(80, 3);
        let scaled =
            SamplePath::from_values(path.values.iter().map(|v| 3.0 * v).collect());
        let w = WeightSpec::Geometric { q: 0.8 };
        let a = compute_dense(&path, &w, &product(), true).unwrap();
        let b = compute_dense(&scaled, &w, &product(), true).unwrap();
        assert!((b.value - 9.0 * a.value).abs() <= 1e-12 * b.value.abs().max(1.0));
    }

    #[test]
    fn signed_rank_extremes_and_ties() {
        let pos = SamplePath::from_values(vec![0.5, 1.5, 2.5, 3.5]);
        assert_eq!(signed_rank(&pos).unwrap().value, 10.0);
        let neg = SamplePath::from_values(vec![-0.5, -1.5, -2.5, -3.5]);
        assert_eq!(signed_rank(&neg).unwrap().value, -10.0);
        let tied = SamplePath::from_values(vec![1.0, -1.0, 2.0]);
        let r = signed_rank(&tied).unwrap();
        assert!(r.tie_flag);
        // Tie broken by index: |1.0| ranks 1, |-1.0| ranks 2, 2.0 ranks 3.
        assert_eq!(r.value, 1.0 - 2.0 + 3.0);
    }

    #[test]
    fn signed_rank_matches_pair_count_identity() {
        // T+ = #{i <= j : X_i + X_j > 0} = (W + n(n+1)/2) / 2 for tie-free
        // data; T+ enumerated by brute force.
        for seed in 0..20 {
            let path = random_path(8, 100 + seed);
            let r = signed_rank(&path).unwrap();
            assert!(!r.tie_flag);
            let mut t_plus = 0i64;
            for i in 0..8 {
                for j in i..8 {
                    if path.values[i] + path.values[j] > 0.0 {
                        t_plus += 1;
                    }
                }
            }
            let n = 8i64;
            assert_eq!(2 * t_plus, r.value as i64 + n * (n + 1) / 2, "seed {seed}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn banded_equals_dense_for_delta_weights(
            values in prop::collection::vec(-10.0f64..10.0, 1..40),
            k0 in 0u32..5,
            diag in any::<bool>(),
        ) {
            let path = SamplePath::from_values(values);
            let w = WeightSpec::Delta { k0 };
            let b = compute_banded(&path, &w, &product(), diag).unwrap();
            let d = compute_dense(&path, &w, &product(), diag).unwrap();
            prop_assert!((b.value - d.value).abs() <= 1e-10 * d.value.abs().max(1.0));
        }

        #[test]
        fn sorted_equals_dense_for_random_paths(
            values in prop::collection::vec(-5.0f64..5.0, 1..60),
            b in 0.01f64..3.0,
        ) {
            let path = SamplePath::from_values(values);
            let s = correlation_integral(&path, b).unwrap();
            let d = compute_dense(
                &path,
                &WeightSpec::ConstantOne,
                &KernelSpec::IndicatorDistance { b },
                true,
            )
            .unwrap();
            prop_assert_eq!(s.value, d.value);
        }
    }
}
