//! Small numeric toolbox: compensated summation, sample moments, weighted
//! least squares on log-log scales, and a Kolmogorov-Smirnov test against a
//! fitted normal. Nothing here knows about processes or kernels.

/// Compensated (Kahan-Neumaier) accumulator. Used wherever sums grow past a
/// few thousand terms so that pair sums over long paths do not lose digits.
#[derive(Clone, Copy, Debug, Default)]
pub struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.comp += (self.sum - t) + value;
        } else {
            self.comp += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn merge(&mut self, other: Kahan) {
        self.add(other.sum);
        self.comp += other.comp;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = Kahan::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// First four sample moments. Variance uses the n-1 divisor; skewness and
/// kurtosis are the usual g1 and excess g2 statistics.
#[derive(Clone, Copy, Debug)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

pub fn moments(values: &[f64]) -> Moments {
    let n = values.len();
    assert!(n >= 2, "moments need at least two values");
    let nf = n as f64;
    let mean = kahan_sum(values.iter().copied()) / nf;
    let mut m2 = Kahan::new();
    let mut m3 = Kahan::new();
    let mut m4 = Kahan::new();
    for &v in values {
        let d = v - mean;
        let d2 = d * d;
        m2.add(d2);
        m3.add(d2 * d);
        m4.add(d2 * d2);
    }
    let c2 = m2.value() / nf;
    let variance = m2.value() / (nf - 1.0);
    let (skewness, excess_kurtosis) = if c2 > 0.0 {
        (
            m3.value() / nf / c2.powf(1.5),
            m4.value() / nf / (c2 * c2) - 3.0,
        )
    } else {
        (0.0, 0.0)
    };
    Moments {
        count: n,
        mean,
        variance,
        skewness,
        excess_kurtosis,
    }
}

pub fn mean_and_standard_error(values: &[f64]) -> (f64, f64) {
    let m = moments(values);
    (m.mean, (m.variance / m.count as f64).sqrt())
}

/// Standard normal density.
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Complementary error function, Chebyshev fit; absolute error below 1.2e-7.
/// Plenty for distribution distances and p-values, which we only ever
/// compare against thresholds like 1e-3.
fn erfc_approx(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let ans = t * (-z * z - 1.26551223
        + t * (1.00002368
            + t * (0.37409196
                + t * (0.09678418
                    + t * (-0.18628806
                        + t * (0.27886807
                            + t * (-1.13520398
                                + t * (1.48851587
                                    + t * (-0.82215223 + t * 0.17087277)))))))))
        .exp();
    if x >= 0.0 {
        ans
    } else {
        2.0 - ans
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc_approx(-x / std::f64::consts::SQRT_2)
}

/// Gamma function for positive arguments, Lanczos approximation (g = 7,
/// 9 terms); relative error around 1e-13 on the ranges we use.
pub fn gamma_fn(x: f64) -> f64 {
    assert!(x > 0.0 && x.is_finite(), "gamma_fn needs a positive argument");
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection keeps the series argument away from the pole.
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma_fn(1.0 - x))
    } else {
        let z = x - 1.0;
        let mut acc = COEF[0];
        for (i, &c) in COEF.iter().enumerate().skip(1) {
            acc += c / (z + i as f64);
        }
        let t = z + G + 0.5;
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * acc
    }
}

/// Beta function B(a, b) for positive arguments.
pub fn beta_fn(a: f64, b: f64) -> f64 {
    gamma_fn(a) * gamma_fn(b) / gamma_fn(a + b)
}

/// Standard normal quantile (Acklam's rational approximation, relative error
/// about 1.15e-9 over (0, 1)).
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile needs p in (0,1)");
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -normal_quantile(1.0 - p)
    }
}

/// Kolmogorov-Smirnov distance between the empirical CDF of `values` and the
/// continuous CDF `cdf`.
pub fn ks_distance(values: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

/// Tail probability of the Kolmogorov distribution, Q(lambda) =
/// 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2), with the theta-function
/// form in the small-lambda regime where the alternating series converges
/// slowly. Same regime split as the widely used CERN ROOT implementation.
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    const FJ: [f64; 4] = [-2.0, -8.0, -18.0, -32.0];
    if lambda < 0.2 {
        return 1.0;
    }
    if lambda < 0.755 {
        let v = 1.0 / (lambda * lambda);
        let w = 2.50662827; // sqrt(2 pi)
        let c1 = -std::f64::consts::PI * std::f64::consts::PI / 8.0;
        let p = w / lambda * ((c1 * v).exp() + (9.0 * c1 * v).exp() + (25.0 * c1 * v).exp());
        return (1.0 - p).clamp(0.0, 1.0);
    }
    if lambda < 6.8116 {
        let v = lambda * lambda;
        let mut r = [0.0f64; 4];
        let terms = (3.0 / lambda).max(1.0).round() as usize;
        for (j, rj) in r.iter_mut().enumerate().take(terms.min(4)) {
            *rj = (FJ[j] * v).exp();
        }
        return (2.0 * (r[0] - r[1] + r[2] - r[3])).clamp(0.0, 1.0);
    }
    0.0
}

/// A straight-line fit y = intercept + slope * x by weighted least squares.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
}

/// Weighted least squares for (x, y, w) triples, with w proportional to
/// 1/Var(y). The slope standard error uses the given weights as exact
/// inverse variances, which is the convention we want when the y values are
/// log sample variances (Var(log s^2) ~ 2/(R-1)).
pub fn weighted_line_fit(points: &[(f64, f64, f64)]) -> LineFit {
    assert!(points.len() >= 2, "line fit needs at least two points");
    let sw: f64 = points.iter().map(|p| p.2).sum();
    assert!(sw > 0.0, "weights must be positive");
    let xbar: f64 = points.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let ybar: f64 = points.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = points.iter().map(|p| p.2 * (p.0 - xbar).powi(2)).sum();
    let sxy: f64 = points
        .iter()
        .map(|p| p.2 * (p.0 - xbar) * (p.1 - ybar))
        .sum();
    assert!(sxx > 0.0, "x values must not be constant");
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ss_tot: f64 = points.iter().map(|p| p.2 * (p.1 - ybar).powi(2)).sum();
    let ss_res: f64 = points
        .iter()
        .map(|p| p.2 * (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    LineFit {
        slope,
        intercept,
        slope_stderr: (1.0 / sxx).sqrt(),
        r_squared,
    }
}

/// Ordinary least squares; convenience wrapper with unit weights, stderr from
/// the residual variance as usual.
pub fn line_fit(points: &[(f64, f64)]) -> LineFit {
    let triples: Vec<(f64, f64, f64)> = points.iter().map(|&(x, y)| (x, y, 1.0)).collect();
    let mut fit = weighted_line_fit(&triples);
    // Replace the known-variance stderr with the residual-based estimate.
    let n = points.len() as f64;
    if points.len() > 2 {
        let xbar: f64 = points.iter().map(|p| p.0).sum::<f64>() / n;
        let sxx: f64 = points.iter().map(|p| (p.0 - xbar).powi(2)).sum();
        let ss_res: f64 = points
            .iter()
            .map(|p| (p.1 - fit.intercept - fit.slope * p.0).powi(2))
            .sum();
        fit.slope_stderr = (ss_res / (n - 2.0) / sxx).sqrt();
    }
    fit
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_recovers_small_terms() {
        let mut acc = Kahan::new();
        acc.add(1e16);
        for _ in 0..10_000 {
            acc.add(1.0);
        }
        acc.add(-1e16);
        assert_eq!(acc.value(), 10_000.0);
    }

    #[test]
    fn moments_match_hand_computation() {
        let m = moments(&[1.0, 2.0, 3.0, 4.0]);
        assert!((m.mean - 2.5).abs() < 1e-15);
        assert!((m.variance - 5.0 / 3.0).abs() < 1e-15);
        assert!(m.skewness.abs() < 1e-15);
    }

    #[test]
    fn gamma_matches_reference_values() {
        let cases = [
            (0.5, std::f64::consts::PI.sqrt()),
            (1.0, 1.0),
            (1.5, 0.886_226_925_452_758_0),
            (0.3, 2.991_568_987_687_590_4),
            (5.0, 24.0),
            (10.0, 362_880.0),
        ];
        for (x, want) in cases {
            let got = gamma_fn(x);
            assert!(
                ((got - want) / want).abs() < 1e-12,
                "gamma({x}) = {got}, want {want}"
            );
        }
        // B(a, b) = B(b, a) and B(1, b) = 1/b.
        assert!((beta_fn(0.4, 0.2) - beta_fn(0.2, 0.4)).abs() < 1e-12);
        assert!((beta_fn(1.0, 4.0) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn normal_cdf_quantile_roundtrip() {
        for &p in &[0.001, 0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 0.999] {
            let x = normal_quantile(p);
            assert!((normal_cdf(x) - p).abs() < 3e-7, "p={p}");
        }
        // The Chebyshev erfc fit is good to ~1.2e-7 in relative terms.
        assert!((normal_cdf(0.0) - 0.5).abs() < 2e-7);
        assert!((normal_cdf(1.96) - 0.9750021).abs() < 1e-5);
    }

    #[test]
    fn kolmogorov_tail_reference_values() {
        // Classical table: Q(0.828) ~ 0.50 (median), Q(1.36) ~ 0.049,
        // Q(1.63) ~ 0.010.
        assert!((kolmogorov_tail(0.8276) - 0.5).abs() < 5e-3);
        assert!((kolmogorov_tail(1.3581) - 0.049).abs() < 2e-3);
        assert!((kolmogorov_tail(1.6276) - 0.010).abs() < 1e-3);
        assert!(kolmogorov_tail(0.1) == 1.0);
        assert!(kolmogorov_tail(7.0) == 0.0);
    }

    #[test]
    fn ks_distance_on_exact_uniform_grid() {
        // Points at (i+0.5)/n under the U(0,1) CDF give D = 1/(2n).
        let n = 10;
        let vals: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_distance(&vals, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.05).abs() < 1e-12);
    }

    #[test]
    fn weighted_fit_recovers_exact_line() {
        let pts: Vec<(f64, f64, f64)> = (1..6)
            .map(|i| {
                let x = i as f64;
                (x, 3.0 * x - 1.0, 2.0)
            })
            .collect();
        let fit = weighted_line_fit(&pts);
        assert!((fit.slope - 3.0).abs() < 1e-12);
        assert!((fit.intercept + 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }
}
