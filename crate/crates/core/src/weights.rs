//! Symmetric lag weights w_k (= w_{-k}) and their row normalizers. The
//! statistic downstream is sum_{i,j} w_{i-j} K(X_i, X_j); everything here is
//! about the weight sequence alone: point evaluation, the row sums
//! W_n(i) = sum_{j=1}^n w_{i-j}, the root-mean-square normalizer
//! W_n = sqrt(sum_i W_n(i)^2 / n), and finite-grid trend diagnostics for the
//! summability-style side conditions that decide which limit theory applies.

use crate::error::{Error, Result};
use crate::stats::Kahan;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub enum WeightSpec {
    /// w_k = 1 iff |k| = k0.
    Delta { k0: u32 },
    /// w_k = 1 for every k.
    ConstantOne,
    /// w_k = c (1 + |k|)^(-beta_w), beta_w in [0, 1): heavy, nonsummable.
    Power { beta_w: f64, c: f64 },
    /// w_k = q^{|k|}, q in (0, 1).
    Geometric { q: f64 },
    /// w_k = half[|k|] for |k| < half.len(), zero beyond. The only kind that
    /// may carry negative entries.
    Explicit { half: Vec<f64> },
}

impl WeightSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            WeightSpec::Delta { .. } | WeightSpec::ConstantOne => Ok(()),
            WeightSpec::Power { beta_w, c } => {
                if !beta_w.is_finite() || !(0.0..1.0).contains(beta_w) {
                    return Err(Error::InvalidSpec(format!(
                        "power weight exponent must lie in [0, 1), got {beta_w}"
                    )));
                }
                if !c.is_finite() || *c <= 0.0 {
                    return Err(Error::InvalidSpec(format!(
                        "power weight scale must be positive, got {c}"
                    )));
                }
                Ok(())
            }
            WeightSpec::Geometric { q } => {
                if !q.is_finite() || *q <= 0.0 || *q >= 1.0 {
                    return Err(Error::InvalidSpec(format!(
                        "geometric weight ratio must lie in (0, 1), got {q}"
                    )));
                }
                Ok(())
            }
            WeightSpec::Explicit { half } => {
                if half.is_empty() {
                    return Err(Error::InvalidSpec("explicit weights must be nonempty".into()));
                }
                if half.iter().any(|w| !w.is_finite()) {
                    return Err(Error::InvalidSpec("explicit weights must be finite".into()));
                }
                Ok(())
            }
        }
    }

    /// w_k; symmetric in k by construction.
    pub fn weight(&self, k: i64) -> f64 {
        let a = k.unsigned_abs();
        match self {
            WeightSpec::Delta { k0 } => {
                if a == *k0 as u64 {
                    1.0
                } else {
                    0.0
                }
            }
            WeightSpec::ConstantOne => 1.0,
            WeightSpec::Power { beta_w, c } => c * (1.0 + a as f64).powf(-beta_w),
            WeightSpec::Geometric { q } => q.powi(a.min(i32::MAX as u64) as i32),
            WeightSpec::Explicit { half } => half.get(a as usize).copied().unwrap_or(0.0),
        }
    }

    /// Largest |k| with w_k possibly nonzero, when finite.
    pub fn support_radius(&self) -> Option<usize> {
        match self {
            WeightSpec::Delta { k0 } => Some(*k0 as usize),
            WeightSpec::Explicit { half } => Some(half.len() - 1),
            _ => None,
        }
    }

    /// Lookup table w_0..w_max_offset for engine inner loops.
    pub fn table(&self, max_offset: usize) -> Vec<f64> {
        (0..=max_offset as i64).map(|k| self.weight(k)).collect()
    }
}

/// Row sum W_n(i) = sum_{j=1}^n w_{i-j}, for 1 <= i <= n.
pub fn window_sum(spec: &WeightSpec, i: usize, n: usize) -> Result<f64> {
    if i < 1 || i > n {
        return Err(Error::InvalidArgument(format!(
            "row index must satisfy 1 <= i <= n, got i = {i}, n = {n}"
        )));
    }
    Ok(match spec {
        WeightSpec::ConstantOne => n as f64,
        WeightSpec::Delta { k0 } => {
            let k0 = *k0 as i64;
            let i = i as i64;
            let n = n as i64;
            let mut count = 0;
            if (1..=n).contains(&(i - k0)) {
                count += 1;
            }
            if k0 > 0 && (1..=n).contains(&(i + k0)) {
                count += 1;
            }
            count as f64
        }
        _ => {
            let mut sum = 0.0;
            for j in 1..=n {
                sum += spec.weight(i as i64 - j as i64);
            }
            sum
        }
    })
}

/// W_n = sqrt(sum_{i=1}^n W_n(i)^2 / n). Equals exactly n for constant
/// weights (every row sums to n).
pub fn normalizer(spec: &WeightSpec, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("normalizer needs n >= 1".into()));
    }
    if matches!(spec, WeightSpec::ConstantOne) {
        return Ok(n as f64);
    }
    let mut acc = Kahan::new();
    for i in 1..=n {
        let w = window_sum(spec, i, n)?;
        acc.add(w * w);
    }
    Ok((acc.value() / n as f64).sqrt())
}

/// One diagnostics grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub n: usize,
    /// sum_{|i| <= n} |w_i|.
    pub abs_sum: f64,
    /// W_n.
    pub normalizer: f64,
    /// sum_{k=0}^n (n - k) w_k^2 / (n W_n^2); must tend to 0 for the
    /// normalized statistic with nonsummable weights to be asymptotically
    /// normal.
    pub ratio_t3: f64,
    /// W_n / sum_{i=0}^n |w_i|; staying bounded away from 0 is the companion
    /// side condition in the truncation-approximation regime.
    pub liminf_proxy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightDiagnostics {
    pub rows: Vec<DiagnosticsRow>,
    /// Heuristic: the absolute partial sums look convergent on this grid.
    pub appears_summable: bool,
    /// Heuristic: ratio_t3 looks like it tends to 0.
    pub ratio_t3_trends_to_zero: bool,
    /// Heuristic: liminf_proxy looks bounded away from 0.
    pub liminf_appears_positive: bool,
}

/// Geometric grid 16, 32, ... capped by (and always including) n_max.
fn diagnostics_grid(n_max: usize) -> Vec<usize> {
    let mut grid = Vec::new();
    let mut n = 16;
    while n < n_max {
        grid.push(n);
        n *= 2;
    }
    grid.push(n_max);
    grid
}

/// Evaluate the side-condition curves on a geometric grid. The verdict flags
/// are finite-sample trend heuristics — useful signals, never proofs; the
/// conditions themselves are asymptotic statements.
pub fn diagnose(spec: &WeightSpec, n_max: usize) -> Result<WeightDiagnostics> {
    spec.validate()?;
    if n_max < 16 {
        return Err(Error::InvalidArgument(format!(
            "diagnostics need n_max >= 16, got {n_max}"
        )));
    }
    let grid = diagnostics_grid(n_max);
    let mut rows = Vec::with_capacity(grid.len());
    for &n in &grid {
        let mut abs_onesided = 0.0; // sum_{i=0}^n |w_i|
        let mut t3 = Kahan::new();
        for k in 0..=n {
            let w = spec.weight(k as i64);
            abs_onesided += w.abs();
            t3.add((n - k) as f64 * w * w);
        }
        // Two-sided absolute sum over |i| <= n: w_0 counted once.
        let abs_sum = 2.0 * abs_onesided - spec.weight(0).abs();
        let wn = normalizer(spec, n)?;
        let ratio_t3 = if wn > 0.0 {
            t3.value() / (n as f64 * wn * wn)
        } else {
            f64::INFINITY
        };
        let liminf_proxy = if abs_onesided > 0.0 {
            wn / abs_onesided
        } else {
            0.0
        };
        rows.push(DiagnosticsRow {
            n,
            abs_sum,
            normalizer: wn,
            ratio_t3,
            liminf_proxy,
        });
    }

    // Trend heuristics over the grid tail.
    let last = rows.last().expect("grid nonempty");
    let mid = &rows[rows.len() / 2];
    let appears_summable = last.abs_sum <= mid.abs_sum * 1.02;
    let monotone_tail = rows
        .windows(2)
        .rev()
        .take(2)
        .all(|w| w[1].ratio_t3 <= w[0].ratio_t3 * (1.0 + 1e-12));
    let ratio_t3_trends_to_zero =
        monotone_tail && last.ratio_t3 <= 0.25 * rows[0].ratio_t3 && last.ratio_t3 < 0.05;
    let max_proxy = rows.iter().map(|r| r.liminf_proxy).fold(0.0, f64::max);
    let liminf_appears_positive = last.liminf_proxy >= 0.25 * max_proxy && last.liminf_proxy > 0.0;

    Ok(WeightDiagnostics {
        rows,
        appears_summable,
        ratio_t3_trends_to_zero,
        liminf_appears_positive,
    })
}
