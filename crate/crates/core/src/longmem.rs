//! Long-range-dependence toolkit: which power of n normalizes a weighted
//! pair statistic, the dominant innovation-chaos term of the lag-k
//! squared-covariance statistic, numeric limit variances for the
//! non-central cases, and a convergence check for the tail-sum condition
//! that controls how many expansion orders are needed.

use crate::error::{Error, Result};
use crate::process::{covariance_fn, CoeffRule, LinearProcessSpec, SamplePath, SlowlyVarying};
use crate::quad::{adaptive_simpson, gl32_panels, halton};
use crate::stats::{normal_pdf, Kahan};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub enum LongMemExample {
    /// U_n = sum_i T(X_i) T(X_{i+k}) with T(x) = x^2 and lag k >= 2.
    SampleCovariance { lag: u32 },
    /// U_n = sum over pairs of 1(X_i + X_j > 0).
    Wilcoxon,
}

/// A worked long-memory configuration: which statistic, the coefficient
/// decay exponent, its slowly varying factor, and how many chaos orders the
/// expansion keeps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LongMemCase {
    pub example: LongMemExample,
    pub beta: f64,
    pub slowly_varying: SlowlyVarying,
    pub expansion_order: u32,
}

impl LongMemCase {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.5 && self.beta < 1.0) {
            return Err(Error::InvalidSpec(format!(
                "coefficient exponent beta must lie in (1/2, 1), got {}",
                self.beta
            )));
        }
        if let LongMemExample::SampleCovariance { lag } = self.example {
            if lag < 2 {
                return Err(Error::InvalidSpec(format!(
                    "the squared-covariance example needs lag >= 2, got {lag}"
                )));
            }
        }
        if self.expansion_order == 0 {
            return Err(Error::InvalidSpec(
                "expansion_order must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn rate_case(&self) -> RateCase {
        match self.example {
            LongMemExample::SampleCovariance { .. } => RateCase::SampleCovariance { beta: self.beta },
            LongMemExample::Wilcoxon => RateCase::Wilcoxon { beta: self.beta },
        }
    }

    /// Convergence check of the truncation-tail sum at this case's
    /// expansion order.
    pub fn tail_condition(&self) -> Result<Condition27Report> {
        condition27_check(self.beta, self.expansion_order, self.slowly_varying)
    }
}

/// The statistic whose standard-deviation growth exponent is requested.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub enum RateCase {
    /// Summable weights, projection-summable kernel: central limit scaling.
    SummableWeights,
    /// Flat unit weights with a bounded kernel.
    FlatWeightsBoundedKernel,
    /// Pair-proximity count with flat weights (a flat-weight instance kept
    /// for its role as a named special case).
    CorrelationIntegral,
    /// Lag-k squared-covariance statistic on coefficients j^(-beta) L(j).
    SampleCovariance { beta: f64 },
    /// Sign-pair statistic on Gaussian coefficients j^(-beta) L(j).
    Wilcoxon { beta: f64 },
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.5 && beta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "beta must lie in (1/2, 1), got {beta}"
        )))
    }
}

/// Growth exponent alpha such that SD(U_n - EU_n) ~ n^alpha (times slowly
/// varying factors). The squared-covariance case switches regimes at
/// beta = 3/4, where neither formula applies.
pub fn rate_exponent(case: &RateCase) -> Result<f64> {
    match *case {
        RateCase::SummableWeights => Ok(0.5),
        RateCase::FlatWeightsBoundedKernel => Ok(1.5),
        RateCase::CorrelationIntegral => Ok(1.5),
        RateCase::Wilcoxon { beta } => {
            check_beta(beta)?;
            Ok(2.5 - beta)
        }
        RateCase::SampleCovariance { beta } => {
            check_beta(beta)?;
            if beta == 0.75 {
                return Err(Error::Boundary(
                    "the squared-covariance rate switches regimes at beta = 3/4; neither the \
                     long-memory nor the square-root formula applies there"
                        .into(),
                ));
            }
            if beta < 0.75 {
                Ok(2.0 - 2.0 * beta)
            } else {
                Ok(0.5)
            }
        }
    }
}

/// Slope of the sign-pair kernel's smoothed conditional mean at the origin
/// for a standard Gaussian pair with correlation rho_t:
/// phi(0) / sqrt(2 (1 + rho_t)).
pub fn wilcoxon_derivative(rho_t: f64) -> Result<f64> {
    if !rho_t.is_finite() || rho_t <= -1.0 {
        return Err(Error::Domain(format!(
            "pair correlation must exceed -1, got {rho_t}"
        )));
    }
    Ok(normal_pdf(0.0) / (2.0 * (1.0 + rho_t)).sqrt())
}

/// One term of the innovation-chaos decomposition of a pair statistic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionTerm {
    /// Chaos order.
    pub r: u32,
    pub value: f64,
    /// SD of this term grows like n^normalizer_exponent (times slowly
    /// varying factors).
    pub normalizer_exponent: f64,
    pub description: String,
}

/// Second-order chaos term of U_n = sum_i X_i^2 X_{i+k}^2 on a linear
/// process: 8 E(X_1^2) * sum_{i=1}^{n-k} sum_{j1 > j2} a_{i-j1} a_{i+k-j2}
/// eps_{j1} eps_{j2}, evaluated over the truncated coefficient range from
/// the path's retained innovations. Small instances run the literal triple
/// loop in its natural order; large ones use an O(n M) prefix pass.
pub fn z_term_covariance(spec: &LinearProcessSpec, path: &SamplePath, k: u32) -> Result<DecompositionTerm> {
    spec.validate()?;
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "the squared-covariance chaos term needs lag k >= 2, got {k}"
        )));
    }
    let eps_all = path.innovations.as_ref().ok_or_else(|| {
        Error::MissingData("the chaos term needs the path's retained innovations".into())
    })?;
    if path.spec_fingerprint != spec.fingerprint() {
        return Err(Error::InvalidArgument(
            "path was generated from a different process specification".into(),
        ));
    }
    let n = path.n() as i64;
    let m = spec.truncation as i64;
    let start = path.innovation_start;
    if start != 1 - m || eps_all.len() as i64 != m + n {
        return Err(Error::InvalidArgument(
            "path innovations do not cover the full truncated history".into(),
        ));
    }
    let k = k as i64;
    let a = spec.coefficient_vec();
    let eps = |t: i64| eps_all[(t - start) as usize];
    let ex2 = covariance_fn(spec, 0)?;

    let mut total = 0.0;
    if n * (m + 1) * (m + 1) <= 1 << 18 {
        // Literal evaluation of the displayed double sum.
        for i in 1..=(n - k) {
            for j1 in (i - m)..=i {
                for j2 in (i + k - m)..j1 {
                    total += a[(i - j1) as usize] * a[(i + k - j2) as usize] * eps(j1) * eps(j2);
                }
            }
        }
    } else {
        let mut acc = Kahan::new();
        for i in 1..=(n - k) {
            // prefix = sum over j2 < j1 of a_{i+k-j2} eps_{j2}, grown as j1
            // advances.
            let mut prefix = 0.0;
            let mut next_j2 = i + k - m;
            let mut row = 0.0;
            for j1 in (i - m)..=i {
                while next_j2 < j1 {
                    prefix += a[(i + k - next_j2) as usize] * eps(next_j2);
                    next_j2 += 1;
                }
                row += a[(i - j1) as usize] * eps(j1) * prefix;
            }
            acc.add(row);
        }
        total = acc.value();
    }

    let normalizer_exponent = match spec.coeffs {
        CoeffRule::RegVar { beta, .. } => (2.0 - 2.0 * beta).max(0.5),
        _ => 0.5,
    };
    Ok(DecompositionTerm {
        r: 2,
        value: 8.0 * ex2 * total,
        normalizer_exponent,
        description: format!(
            "second-order innovation-chaos term of the lag-{} squared-covariance statistic",
            k
        ),
    })
}

/// How the pair weights enter the limit variance: `c` is the total limiting
/// kernel-derivative constant (including any both-argument multiplicity).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub enum WeightMode {
    /// Absolutely summable weights; the weighted derivative sum tends to c.
    SummableConst { c: f64 },
    /// Flat unit weights; the second pair index contributes a unit-length
    /// integral that collapses, leaving the same u-integral scaled by c.
    ConstantOne { c: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitVariance {
    pub case: String,
    pub value: f64,
    /// Combined quadrature error estimate (scheme disagreement plus
    /// tolerances).
    pub error: f64,
}

/// Inner x-integral of the order-r limit integrand at ordered offsets
/// `u[0] > u[1] > ...`, all below 1: int_0^1 prod_s (x - u_s)_+^(-beta) dx.
/// The integrable endpoint singularity at x = u[0] is removed by the
/// substitution v = (x - u[0])^(1-beta).
fn inner_x_integral(beta: f64, us: &[f64]) -> f64 {
    let umax = us[0];
    if umax >= 1.0 {
        return 0.0;
    }
    if umax >= 0.0 {
        let vmax = (1.0 - umax).powf(1.0 - beta);
        let f = |v: f64| {
            let y = v.powf(1.0 / (1.0 - beta));
            us[1..]
                .iter()
                .map(|&u| (umax + y - u).powf(-beta))
                .product::<f64>()
                / (1.0 - beta)
        };
        gl32_panels(f, 0.0, vmax, 3)
    } else {
        let f = |x: f64| us.iter().map(|&u| (x - u).powf(-beta)).product::<f64>();
        gl32_panels(f, 0.0, 1.0, 3)
    }
}

/// int_0^p y^(-beta) (y + gap)^(-beta) dy for p, gap > 0, accurate at any
/// gap/p ratio. When the window is long relative to the gap, rescale by the
/// gap and write it as the complete integral B(1-beta, 2*beta-1) minus a
/// desingularized tail; otherwise the gap factor is smooth and only the
/// y-singularity needs the power substitution.
fn pair_window_integral(beta: f64, p: f64, gap: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    let b1 = 2.0 * beta - 1.0;
    if p >= gap {
        let z = p / gap;
        let vmax = z.powf(-b1);
        let tail = gl32_panels(
            |v: f64| (1.0 + v.powf(1.0 / b1)).powf(-beta),
            0.0,
            vmax,
            2,
        ) / b1;
        gap.powf(1.0 - 2.0 * beta) * (crate::stats::beta_fn(1.0 - beta, b1) - tail)
    } else {
        let vmax = p.powf(1.0 - beta);
        gl32_panels(
            |v: f64| (v.powf(1.0 / (1.0 - beta)) + gap).powf(-beta),
            0.0,
            vmax,
            2,
        ) / (1.0 - beta)
    }
}

/// Order-2 inner integral at offsets u1 = 1 - p and u2 = u1 - gap.
fn order2_g(beta: f64, p: f64, gap: f64) -> f64 {
    if p <= 1.0 {
        // x ranges over (u1, 1], i.e. y = x - u1 over (0, p].
        pair_window_integral(beta, p, gap)
    } else if p - 1.0 >= 0.5 {
        // u1 < 0 and the window [p-1, p] sits away from the singularity.
        gl32_panels(
            |y: f64| y.powf(-beta) * (y + gap).powf(-beta),
            p - 1.0,
            p,
            2,
        )
    } else {
        pair_window_integral(beta, p, gap) - pair_window_integral(beta, p - 1.0, gap)
    }
}

/// Order-1 squared-norm integral int_{u<1} [int_0^1 (x-u)_+^(-beta) dx]^2 du
/// split into the u in [0,1] piece and the u < 0 tail, each desingularized.
/// Returns (adaptive value, rule-based cross-check value).
fn order1_integral(beta: f64) -> (f64, f64) {
    let a1 = 1.0 - beta;
    // u in [0, 1): g(u) = (1-u)^(1-beta) / (1-beta).
    let p1 = |u: f64| (1.0 - u).powf(2.0 * a1);
    // u = -t, t in (0, 1]: h(t) = (1+t)^(1-beta) - t^(1-beta).
    let pa = |t: f64| {
        let h = (1.0 + t).powf(a1) - t.powf(a1);
        h * h
    };
    // t in (1, inf): t = 1/s and then s = v^(1/(2 beta - 1)) flattens the
    // s -> 0 endpoint.
    let pb = |v: f64| {
        if v <= 0.0 {
            return a1 * a1 / (2.0 * beta - 1.0);
        }
        let s = v.powf(1.0 / (2.0 * beta - 1.0));
        // exp_m1/ln_1p keep (1+s)^a1 - 1 accurate when s underflows toward 0.
        let w = (a1 * s.ln_1p()).exp_m1();
        w * w / (s * s * (2.0 * beta - 1.0))
    };
    let adaptive = adaptive_simpson(p1, 0.0, 1.0, 1e-11)
        + adaptive_simpson(pa, 0.0, 1.0, 1e-11)
        + adaptive_simpson(pb, 0.0, 1.0, 1e-11);
    let ruled = gl32_panels(p1, 0.0, 1.0, 16)
        + gl32_panels(pa, 0.0, 1.0, 16)
        + gl32_panels(pb, 0.0, 1.0, 16);
    (adaptive / (a1 * a1), ruled / (a1 * a1))
}

/// Order-2 squared-norm integral over u1 > u2, parametrized by p = 1 - u1
/// and the gap u1 - u2. The gap map z -> z^q1 (1-z)^(-q2) flattens both the
/// diagonal singularity (q1 = 1/(3-4 beta)) and the far tail
/// (q2 = 1/(2 beta - 1)); p uses a rational map.
fn order2_integral(beta: f64) -> (f64, f64) {
    let q1 = 1.0 / (3.0 - 4.0 * beta);
    let q2 = 1.0 / (2.0 * beta - 1.0);
    let integrand = move |t: f64, z: f64| -> f64 {
        if t <= 0.0 || t >= 1.0 || z <= 0.0 || z >= 1.0 {
            return 0.0;
        }
        let p = t / (1.0 - t);
        let gap = z.powf(q1) * (1.0 - z).powf(-q2);
        let g = order2_g(beta, p, gap);
        let jac_p = 1.0 / ((1.0 - t) * (1.0 - t));
        let jac_gap = gap * (q1 / z + q2 / (1.0 - z));
        g * g * jac_p * jac_gap
    };
    // Both maps leave the inner integrand bounded with finite endpoint
    // limits, so a fixed rule suffices in z; adaptivity is only worth its
    // cost in t. The two schemes use different inner resolutions so that
    // inner-rule error shows up in their disagreement.
    let adaptive = adaptive_simpson(
        move |t: f64| gl32_panels(move |z: f64| integrand(t, z), 0.0, 1.0, 12),
        0.0,
        1.0,
        1e-8,
    );
    let ruled = gl32_panels(
        move |t: f64| gl32_panels(move |z: f64| integrand(t, z), 0.0, 1.0, 20),
        0.0,
        1.0,
        16,
    );
    (adaptive, ruled)
}

/// Order-r squared-norm integral by quasi-Monte Carlo over the ordered
/// offsets, parametrized by p = 1 - u_1 (rational map) and the r - 1
/// consecutive gaps. Each gap uses the z -> z^q1 (1-z)^(-q2) map from the
/// order-2 scheme: the inner x-integral blows up like d^(1-r*beta) when all
/// r offsets cluster a distance d apart inside the window, and
/// q1 = (r-1)/(r+1-2*r*beta) is exactly the power that makes the squared,
/// Jacobian-weighted integrand stay bounded there (it reduces to
/// 1/(3-4*beta) at r = 2); q2 = 1/(2*beta-1) flattens the far tail the same
/// way. Plain per-coordinate maps leave that clustering singularity in the
/// integrand and the point set never resolves it.
fn order_r_qmc(beta: f64, r: usize) -> (f64, f64) {
    let n: u64 = 1 << 14;
    let rf = r as f64;
    let q1 = (rf - 1.0) / (rf + 1.0 - 2.0 * rf * beta);
    let q2 = 1.0 / (2.0 * beta - 1.0);
    let mut acc = Kahan::new();
    let mut acc_half = Kahan::new();
    let mut us = vec![0.0f64; r];
    for idx in 1..=n {
        let t = halton(idx, 0).clamp(1e-12, 1.0 - 1e-12);
        let mut jac = 1.0 / ((1.0 - t) * (1.0 - t));
        us[0] = 1.0 - t / (1.0 - t);
        for dim in 1..r {
            let z = halton(idx, dim).clamp(1e-12, 1.0 - 1e-12);
            let gap = z.powf(q1) * (1.0 - z).powf(-q2);
            jac *= gap * (q1 / z + q2 / (1.0 - z));
            us[dim] = us[dim - 1] - gap;
        }
        let g = inner_x_integral(beta, &us);
        let f = g * g * jac;
        acc.add(f);
        if idx <= n / 2 {
            acc_half.add(f);
        }
    }
    let full = acc.value() / n as f64;
    let half = acc_half.value() / (n / 2) as f64;
    (full, half)
}

/// Squared-norm integral of the order-r limit against the weight-mode
/// constant: c^2 * int_{u_1 > ... > u_r} [int_0^1 prod (x-u_s)_+^(-beta) dx]^2 du.
/// Adaptive quadrature for r <= 2, quasi-Monte Carlo above; requires the
/// integrability condition r (2 beta - 1) < 1.
pub fn limit_variance(beta: f64, r: u32, mode: &WeightMode) -> Result<LimitVariance> {
    check_beta(beta)?;
    if r == 0 {
        return Err(Error::InvalidArgument("chaos order r must be >= 1".into()));
    }
    if r as f64 * (2.0 * beta - 1.0) >= 1.0 {
        return Err(Error::Domain(format!(
            "squared-norm integral diverges: r (2 beta - 1) = {} >= 1",
            r as f64 * (2.0 * beta - 1.0)
        )));
    }
    if r > 8 {
        return Err(Error::InvalidArgument(
            "chaos orders above 8 exceed the point-set dimension".into(),
        ));
    }
    let (c, mode_name) = match *mode {
        WeightMode::SummableConst { c } => (c, "summable weights"),
        WeightMode::ConstantOne { c } => (c, "flat weights"),
    };
    if !c.is_finite() {
        return Err(Error::InvalidArgument("weight constant must be finite".into()));
    }
    let (value, cross, tol) = match r {
        1 => {
            let (v, x) = order1_integral(beta);
            (v, x, 3e-11)
        }
        2 => {
            let (v, x) = order2_integral(beta);
            (v, x, 2e-5)
        }
        _ => {
            let (v, half) = order_r_qmc(beta, r as usize);
            // Coarse sequence-halving error for the equidistributed sum.
            (v, half, 0.0)
        }
    };
    let error = c * c * ((value - cross).abs() + tol);
    Ok(LimitVariance {
        case: format!("order-{r} chaos, beta = {beta}, {mode_name}"),
        value: c * c * value,
        error,
    })
}

/// Predicted variance of n^(beta - 5/2) (U_n - EU_n) for the sign-pair
/// statistic on a Gaussian linear process with lag-0 variance gamma0 and
/// coefficients j^(-beta) L(j): both-argument multiplicity doubles the
/// large-lag derivative constant, and the marginal scale enters through
/// 1/sqrt(gamma0).
pub fn wilcoxon_limit_variance(beta: f64, gamma0: f64) -> Result<LimitVariance> {
    if !(gamma0 > 0.0) || !gamma0.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "marginal variance must be positive, got {gamma0}"
        )));
    }
    let c = 2.0 * wilcoxon_derivative(0.0)? / gamma0.sqrt();
    let mut lv = limit_variance(beta, 1, &WeightMode::ConstantOne { c })?;
    lv.case = format!("sign-pair statistic, beta = {beta}, marginal variance {gamma0}");
    Ok(lv)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition27Report {
    /// Power of n in the tail-sum summand.
    pub exponent: f64,
    /// The exponent sits exactly at -1, where the slowly varying factor
    /// decides.
    pub boundary: bool,
    pub converges: bool,
    pub note: String,
}

/// Convergence check for sum_n n^(-beta (rho+1) + rho/2) |L(n)|^(rho+1):
/// strictly below the n^(-1) boundary the sum converges regardless of L; on
/// the boundary only a decaying L saves it.
pub fn condition27_check(beta: f64, rho: u32, l: SlowlyVarying) -> Result<Condition27Report> {
    check_beta(beta)?;
    if rho == 0 {
        return Err(Error::InvalidArgument("expansion order rho must be >= 1".into()));
    }
    let exponent = -beta * (rho + 1) as f64 + rho as f64 / 2.0;
    let boundary = (exponent + 1.0).abs() < 1e-12;
    let (converges, note) = if boundary {
        match l {
            SlowlyVarying::InvLog => (
                true,
                format!(
                    "boundary case: sum of 1/(n log^{}(n)) converges",
                    rho + 1
                ),
            ),
            SlowlyVarying::One => (
                false,
                "boundary case: the harmonic sum diverges".to_string(),
            ),
            SlowlyVarying::Log => (
                false,
                format!(
                    "boundary case: sum of log^{}(n)/n diverges",
                    rho + 1
                ),
            ),
        }
    } else if exponent < -1.0 {
        (true, format!("exponent {exponent} < -1: converges for any catalog L"))
    } else {
        (false, format!("exponent {exponent} > -1: diverges for any catalog L"))
    };
    Ok(Condition27Report {
        exponent,
        boundary,
        converges,
        note,
    })
}
