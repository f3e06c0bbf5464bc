//! How fast does the process forget its past? Four estimators probe this
//! from different angles:
//!
//! * [`estimate_gmc`]: couple two copies of an iterated map that share all
//!   innovations from time 1 on but have independent prehistories, and fit
//!   the geometric decay rate of E|X_n - X'_n|^alpha.
//! * [`estimate_delta`]: compare the kernel evaluated on the process against
//!   the kernel evaluated on its finite-memory truncation (same innovations),
//!   reporting the L2 distance as a function of the memory length.
//! * [`estimate_theta`]: nested Monte Carlo for the projection norm
//!   ||E[K | info through time 0] - E[K | info through time -1]|| — the
//!   contribution of the single innovation at time 0 to a future kernel
//!   value.
//! * [`probe_concentration`]: empirical sup over x and lags of
//!   P(x < X_0 - X_j <= x + tau), which bounds how much probability the
//!   increment law can pack into a short interval.

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::process::{generate, generate_coupled, CouplingMode, IteratedMapSpec, ProcessSpec};
use crate::rng::{derive_seed, replicate_seed, stream, StreamRole};
use crate::stats::{line_fit, mean_and_standard_error, moments, weighted_line_fit};
use crate::weights::WeightSpec;
use serde::{Deserialize, Serialize};

/// Default lag grid for suprema over "all" lags: dense near 0, one far point.
pub const DEFAULT_J_GRID: &[usize] = &[1, 2, 4, 8, 16, 32, 128];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentPoint {
    pub horizon: usize,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmcEstimate {
    pub alpha: f64,
    pub moment_curve: Vec<MomentPoint>,
    /// Fitted per-step contraction ratio of E|X_n - X'_n|^alpha.
    pub r_hat: f64,
    /// Fitted constant: moment ~ c_hat * r_hat^n.
    pub c_hat: f64,
    /// All moment estimates were zero: the map forgets instantly (or the
    /// state does not move), and no decay rate can be fitted.
    pub degenerate: bool,
}

/// Couple independent-prehistory copies of the map and fit the geometric
/// decay of the alpha-th absolute coupling moment over the horizon grid.
pub fn estimate_gmc(
    spec: &IteratedMapSpec,
    alpha: f64,
    horizons: &[usize],
    reps: usize,
    seed: u64,
) -> Result<GmcEstimate> {
    spec.validate()?;
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "moment order alpha must be positive, got {alpha}"
        )));
    }
    if horizons.is_empty() || horizons.windows(2).any(|w| w[0] >= w[1]) || horizons[0] == 0 {
        return Err(Error::InvalidArgument(
            "horizons must be strictly increasing and start at >= 1".into(),
        ));
    }
    if reps < 1000 {
        return Err(Error::InvalidArgument(format!(
            "coupling-rate estimation needs reps >= 1000, got {reps}"
        )));
    }
    let process = ProcessSpec::Iterated(spec.clone());
    let mut moment_curve = Vec::with_capacity(horizons.len());
    for &h in horizons {
        let mut samples = Vec::with_capacity(reps);
        for rep in 0..reps {
            let pair_seed = replicate_seed(seed, h as u64, rep as u64);
            let pair = generate_coupled(&process, h, pair_seed, CouplingMode::IidPrehistory)?;
            let gap = (pair.primary.values[h - 1] - pair.shadow.values[h - 1]).abs();
            samples.push(gap.powf(alpha));
        }
        let (value, stderr) = mean_and_standard_error(&samples);
        moment_curve.push(MomentPoint {
            horizon: h,
            value,
            stderr,
        });
    }
    let pts: Vec<(f64, f64, f64)> = moment_curve
        .iter()
        .filter(|p| p.value > 0.0)
        .map(|p| {
            let w = if p.stderr > 0.0 {
                let rel = p.value / p.stderr;
                rel * rel
            } else {
                1e6
            };
            (p.horizon as f64, p.value.ln(), w)
        })
        .collect();
    if pts.len() < 2 {
        return Ok(GmcEstimate {
            alpha,
            moment_curve,
            r_hat: 0.0,
            c_hat: 0.0,
            degenerate: true,
        });
    }
    let fit = weighted_line_fit(&pts);
    Ok(GmcEstimate {
        alpha,
        moment_curve,
        r_hat: fit.slope.exp(),
        c_hat: fit.intercept.exp(),
        degenerate: false,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaPoint {
    pub ell: usize,
    /// max over the probed lag grid of the L2 truncation distance.
    pub delta_hat: f64,
    pub stderr: f64,
    /// Lag attaining the maximum.
    pub argmax_j: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaCurve {
    pub points: Vec<DeltaPoint>,
    pub j_grid: Vec<usize>,
    pub reps: usize,
}

/// Full and memory-ell values of the process at the requested time points,
/// driven by one shared innovation draw. `ells` must be sorted ascending.
fn truncation_pair_samples(
    process: &ProcessSpec,
    times: &[usize],
    ells: &[usize],
    rng: &mut impl rand::Rng,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let sampler = process.innovations().sampler()?;
    let max_t = *times.iter().max().expect("nonempty times");
    match process {
        ProcessSpec::Linear(s) => {
            let m = s.truncation;
            let a = s.coefficient_vec();
            // Innovations for times (1 - m)..=max_t, drawn in time order.
            let eps: Vec<f64> = (0..m + max_t).map(|_| sampler.draw(rng)).collect();
            let at = |t: i64| eps[(t + m as i64 - 1) as usize];
            let mut full = Vec::with_capacity(times.len());
            let mut trunc = vec![Vec::with_capacity(times.len()); ells.len()];
            for &t in times {
                let mut sum = 0.0;
                let mut next_ell = 0;
                for (idx, &coef) in a.iter().enumerate() {
                    // Record the partial sum with coefficients 0..ell before
                    // adding index ell itself.
                    while next_ell < ells.len() && ells[next_ell] == idx {
                        trunc[next_ell].push(sum);
                        next_ell += 1;
                    }
                    sum += coef * at(t as i64 - idx as i64);
                }
                while next_ell < ells.len() {
                    // Memory length at or beyond the full support: identical.
                    trunc[next_ell].push(sum);
                    next_ell += 1;
                }
                full.push(sum);
            }
            Ok((full, trunc))
        }
        ProcessSpec::Iterated(s) => {
            let b = s.burn_in;
            // Innovations for times (1 - b)..=max_t.
            let eps: Vec<f64> = (0..b + max_t).map(|_| sampler.draw(rng)).collect();
            let mut states = Vec::with_capacity(eps.len());
            let mut x = 0.0;
            for &e in &eps {
                x = s.kind.step(x, e);
                states.push(x);
            }
            let state_at = |t: usize| states[b + t - 1]; // t >= 1
            let mut full = Vec::with_capacity(times.len());
            let mut trunc = vec![Vec::with_capacity(times.len()); ells.len()];
            for &t in times {
                full.push(state_at(t));
                for (ei, &ell) in ells.iter().enumerate() {
                    // Memory-ell version: restart from state 0 at time t-ell,
                    // replaying the same ell innovations up to t.
                    let avail = b + t;
                    let steps = ell.min(avail);
                    let start = b + t - steps;
                    let mut y = 0.0;
                    for &e in &eps[start..b + t] {
                        y = s.kind.step(y, e);
                    }
                    trunc[ei].push(y);
                }
            }
            Ok((full, trunc))
        }
    }
}

/// L2 distance between the centered kernel on the process and on its
/// memory-ell truncation, maximized over a lag grid, per memory length.
/// The centering constants cancel inside the difference, so the distance is
/// the standard deviation of K(X_1, X_j) - K(X~_1, X~_j) under shared
/// innovations.
pub fn estimate_delta(
    process: &ProcessSpec,
    kernel: &KernelSpec,
    ell_grid: &[usize],
    j_grid: &[usize],
    reps: usize,
    seed: u64,
) -> Result<DeltaCurve> {
    process.validate()?;
    kernel.validate()?;
    if ell_grid.is_empty() || ell_grid.iter().any(|&l| l == 0) {
        return Err(Error::InvalidArgument(
            "memory grid must be nonempty with entries >= 1".into(),
        ));
    }
    if j_grid.is_empty() || j_grid.iter().any(|&j| j == 0) {
        return Err(Error::InvalidArgument(
            "lag grid must be nonempty with entries >= 1".into(),
        ));
    }
    if reps < 100 {
        return Err(Error::InvalidArgument(format!(
            "truncation-distance estimation needs reps >= 100, got {reps}"
        )));
    }
    let mut ells: Vec<usize> = ell_grid.to_vec();
    ells.sort_unstable();
    ells.dedup();
    let mut times: Vec<usize> = j_grid.to_vec();
    if !times.contains(&1) {
        times.push(1);
    }
    times.sort_unstable();
    times.dedup();
    let t_index = |t: usize| times.iter().position(|&u| u == t).expect("time probed");
    let i1 = t_index(1);

    // diffs[ell][j_idx][rep]
    let mut diffs: Vec<Vec<Vec<f64>>> =
        vec![vec![Vec::with_capacity(reps); j_grid.len()]; ells.len()];
    for rep in 0..reps {
        let mut rng = stream(replicate_seed(seed, 0x64656c74, rep as u64), StreamRole::Auxiliary);
        let (full, trunc) = truncation_pair_samples(process, &times, &ells, &mut rng)?;
        for (ei, tvals) in trunc.iter().enumerate() {
            for (ji, &j) in j_grid.iter().enumerate() {
                let jj = t_index(j);
                let k_full = kernel.eval(full[i1], full[jj]);
                let k_trunc = kernel.eval(tvals[i1], tvals[jj]);
                diffs[ei][ji].push(k_full - k_trunc);
            }
        }
    }

    let mut points = Vec::with_capacity(ells.len());
    for (ei, &ell) in ells.iter().enumerate() {
        let mut best = DeltaPoint {
            ell,
            delta_hat: -1.0,
            stderr: 0.0,
            argmax_j: j_grid[0],
        };
        for (ji, &j) in j_grid.iter().enumerate() {
            let d = &diffs[ei][ji];
            let m = moments(d);
            let var = m.variance.max(0.0);
            let delta = var.sqrt();
            // Standard error of the sample variance via the fourth moment,
            // then the delta method for the square root.
            let mu4 = (m.excess_kurtosis + 3.0) * var * var;
            let se_var = ((mu4 - var * var).max(0.0) / reps as f64).sqrt();
            let stderr = if se_var > 0.0 {
                se_var / (2.0 * delta.max(se_var.sqrt()))
            } else {
                0.0
            };
            if delta > best.delta_hat {
                best = DeltaPoint {
                    ell,
                    delta_hat: delta,
                    stderr,
                    argmax_j: j,
                };
            }
        }
        points.push(best);
    }
    Ok(DeltaCurve {
        points,
        j_grid: j_grid.to_vec(),
        reps,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaEstimate {
    pub i: i64,
    pub j: i64,
    pub theta_hat: f64,
    pub stderr: f64,
    pub outer_reps: usize,
    pub inner_reps: usize,
    /// The debiased squared norm came out negative and was clamped to 0.
    pub clamped: bool,
}

/// Nested Monte Carlo estimate of the projection norm
/// theta_{i,j} = || E[Y_{i,j} | Z_0] - E[Y_{i,j} | Z_{-1}] ||, where Z_t is
/// the innovation history through time t and Y is the centered kernel value
/// of the pair (X_i, X_j). Inner loops share future innovations between the
/// "epsilon_0 known" and "epsilon_0 integrated out" branches (common random
/// numbers); the inner-variance bias of the squared difference is subtracted
/// and the result clamped at zero.
pub fn estimate_theta(
    process: &ProcessSpec,
    kernel: &KernelSpec,
    i: i64,
    j: i64,
    outer_reps: usize,
    inner_reps: usize,
    seed: u64,
) -> Result<ThetaEstimate> {
    process.validate()?;
    kernel.validate()?;
    if inner_reps < 2 {
        return Err(Error::InvalidArgument(
            "inner_reps must be >= 2 (the bias correction needs an inner variance estimate)"
                .into(),
        ));
    }
    if outer_reps < 16 {
        return Err(Error::InvalidArgument(
            "outer_reps must be >= 16 for a usable standard error".into(),
        ));
    }
    let hi = i.max(j);
    if hi > 256 {
        return Err(Error::InvalidArgument(format!(
            "nested Monte Carlo is limited to max(i, j) <= 256, got {hi}"
        )));
    }
    if hi < 0 {
        // The pair is fully determined by information before time 0, so the
        // time-0 projection is exactly zero.
        return Ok(ThetaEstimate {
            i,
            j,
            theta_hat: 0.0,
            stderr: 0.0,
            outer_reps,
            inner_reps,
            clamped: false,
        });
    }

    let t_future = hi.max(0) as usize;
    let mut q_samples = Vec::with_capacity(outer_reps); // D_s^2 - inner bias
    let mut d2_sum = 0.0;
    let mut bias_sum = 0.0;
    let base = derive_seed(&[seed, i as u64, j as u64]);
    let sampler = process.innovations().sampler()?;

    for s in 0..outer_reps {
        let outer_seed = replicate_seed(base, 0x74686574, s as u64);
        let mut hist_rng = stream(outer_seed, StreamRole::History);
        let mut aux_rng = stream(outer_seed, StreamRole::Auxiliary);
        let mut fut_rng = stream(outer_seed, StreamRole::Future);
        let mut redraw_rng = stream(outer_seed, StreamRole::ShadowHistory);
        let eps0 = sampler.draw(&mut aux_rng);

        let mut ds = Vec::with_capacity(inner_reps);
        match process {
            ProcessSpec::Linear(spec) => {
                let m = spec.truncation as i64;
                let a = spec.coefficient_vec();
                let coef = |idx: i64| {
                    if (0..=m).contains(&idx) {
                        a[idx as usize]
                    } else {
                        0.0
                    }
                };
                // History innovations for times hist_lo..=-1.
                let hist_lo = i.min(j).min(0) - m;
                let hist: Vec<f64> = (hist_lo..0).map(|_| sampler.draw(&mut hist_rng)).collect();
                let hist_part = |t: i64| {
                    let mut sum = 0.0;
                    for (offset, &e) in hist.iter().enumerate() {
                        let time = hist_lo + offset as i64;
                        sum += coef(t - time) * e;
                    }
                    sum
                };
                let (h_i, h_j) = (hist_part(i), hist_part(j));
                let (a_i, a_j) = (coef(i), coef(j));
                for _ in 0..inner_reps {
                    let fut: Vec<f64> =
                        (0..t_future).map(|_| sampler.draw(&mut fut_rng)).collect();
                    let fut_part = |t: i64| {
                        let mut sum = 0.0;
                        for (offset, &e) in fut.iter().enumerate() {
                            let time = 1 + offset as i64;
                            sum += coef(t - time) * e;
                        }
                        sum
                    };
                    let (base_i, base_j) = (h_i + fut_part(i), h_j + fut_part(j));
                    let ka = kernel.eval(base_i + a_i * eps0, base_j + a_j * eps0);
                    let eps0_b = sampler.draw(&mut redraw_rng);
                    let kb = kernel.eval(base_i + a_i * eps0_b, base_j + a_j * eps0_b);
                    ds.push(ka - kb);
                }
            }
            ProcessSpec::Iterated(spec) => {
                let extra = (-i.min(j).min(0)) as usize;
                let depth = spec.burn_in.max(1) + extra;
                // States for times -depth..=-1, started from 0, so every
                // used time (>= -extra) has at least a full burn-in behind it.
                let mut state = 0.0;
                let mut hist_states = Vec::with_capacity(depth);
                for _ in 0..depth {
                    state = spec.kind.step(state, sampler.draw(&mut hist_rng));
                    hist_states.push(state);
                }
                let state_m1 = state;
                let hist_at = |t: i64| {
                    debug_assert!(t < 0);
                    hist_states[(t + depth as i64) as usize]
                };
                let s0_a = spec.kind.step(state_m1, eps0);
                for _ in 0..inner_reps {
                    let fut: Vec<f64> =
                        (0..t_future).map(|_| sampler.draw(&mut fut_rng)).collect();
                    let eps0_b = sampler.draw(&mut redraw_rng);
                    let s0_b = spec.kind.step(state_m1, eps0_b);
                    let run = |s0: f64| {
                        let mut x = s0;
                        let mut vals = Vec::with_capacity(t_future + 1);
                        vals.push(x); // time 0
                        for &e in &fut {
                            x = spec.kind.step(x, e);
                            vals.push(x);
                        }
                        vals
                    };
                    let (va, vb) = (run(s0_a), run(s0_b));
                    let at = |vals: &[f64], t: i64| {
                        if t < 0 {
                            hist_at(t)
                        } else {
                            vals[t as usize]
                        }
                    };
                    let ka = kernel.eval(at(&va, i), at(&va, j));
                    let kb = kernel.eval(at(&vb, i), at(&vb, j));
                    ds.push(ka - kb);
                }
            }
        }
        let dm = moments(&ds);
        let d_mean = dm.mean;
        let inner_bias = dm.variance / inner_reps as f64;
        d2_sum += d_mean * d_mean;
        bias_sum += inner_bias;
        q_samples.push(d_mean * d_mean - inner_bias);
    }

    let theta2 = d2_sum / outer_reps as f64 - bias_sum / outer_reps as f64;
    let (clamped, theta2) = if theta2 < 0.0 { (true, 0.0) } else { (false, theta2) };
    let (_, se2) = mean_and_standard_error(&q_samples);
    let theta_hat = theta2.sqrt();
    let stderr = if se2 > 0.0 {
        se2 / (2.0 * theta_hat.max(se2.sqrt()))
    } else {
        0.0
    };
    Ok(ThetaEstimate {
        i,
        j,
        theta_hat,
        stderr,
        outer_reps,
        inner_reps,
        clamped,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationPoint {
    pub tau: f64,
    /// max over lags and interval starts of P(x < X_0 - X_j <= x + tau).
    pub sup_hat: f64,
    /// Binomial standard error at the maximizing cell.
    pub stderr: f64,
    pub argmax_j: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationProbe {
    pub points: Vec<ConcentrationPoint>,
    pub j_grid: Vec<usize>,
    pub x_points: usize,
    pub reps: usize,
    /// Slope of ln sup_hat against ln ln(1/tau) is -2 kappa for laws whose
    /// concentration decays like log^(-2 kappa)(1/tau); None when the fit is
    /// impossible (fewer than two positive points).
    pub fitted_kappa: Option<f64>,
}

/// Empirical interval-concentration probe of the increment laws X_0 - X_j.
/// Interval starts are placed at pilot-sample quantiles, a separate draw so
/// the grid does not adapt to the measured sample.
pub fn probe_concentration(
    process: &ProcessSpec,
    j_grid: &[usize],
    tau_grid: &[f64],
    x_points: usize,
    reps: usize,
    seed: u64,
) -> Result<ConcentrationProbe> {
    process.validate()?;
    if j_grid.is_empty() || j_grid.iter().any(|&j| j == 0) {
        return Err(Error::InvalidArgument(
            "lag grid must be nonempty with entries >= 1".into(),
        ));
    }
    if tau_grid.is_empty() || tau_grid.iter().any(|&t| !(0.0..0.5).contains(&t) || t == 0.0) {
        return Err(Error::InvalidArgument(
            "interval lengths must lie in (0, 1/2)".into(),
        ));
    }
    if x_points < 16 {
        return Err(Error::InvalidArgument("x_points must be >= 16".into()));
    }
    if reps < 100 {
        return Err(Error::InvalidArgument(format!(
            "concentration probing needs reps >= 100, got {reps}"
        )));
    }
    let pilot_reps = reps.min(2048);
    let pilot_seed = derive_seed(&[seed, 0x70696c6f]);

    let mut best: Vec<ConcentrationPoint> = tau_grid
        .iter()
        .map(|&tau| ConcentrationPoint {
            tau,
            sup_hat: -1.0,
            stderr: 0.0,
            argmax_j: j_grid[0],
        })
        .collect();

    for &j in j_grid {
        let draw_diffs = |base_seed: u64, count: usize| -> Result<Vec<f64>> {
            let mut out = Vec::with_capacity(count);
            for rep in 0..count {
                let path = generate(process, j + 1, replicate_seed(base_seed, j as u64, rep as u64))?;
                out.push(path.values[0] - path.values[j]);
            }
            Ok(out)
        };
        let mut pilot = draw_diffs(pilot_seed, pilot_reps)?;
        pilot.sort_by(|a, b| a.partial_cmp(b).expect("finite diffs"));
        let xs: Vec<f64> = (0..x_points)
            .map(|k| {
                let q = (k as f64 + 0.5) / x_points as f64;
                pilot[((q * pilot_reps as f64) as usize).min(pilot_reps - 1)]
            })
            .collect();
        let mut diffs = draw_diffs(seed, reps)?;
        diffs.sort_by(|a, b| a.partial_cmp(b).expect("finite diffs"));
        let count_upto = |v: f64| diffs.partition_point(|&d| d <= v);
        for (pi, &tau) in tau_grid.iter().enumerate() {
            for &x in &xs {
                let count = count_upto(x + tau) - count_upto(x);
                let p = count as f64 / reps as f64;
                if p > best[pi].sup_hat {
                    best[pi] = ConcentrationPoint {
                        tau,
                        sup_hat: p,
                        stderr: (p * (1.0 - p) / reps as f64).sqrt(),
                        argmax_j: j,
                    };
                }
            }
        }
    }

    let fit_pts: Vec<(f64, f64)> = best
        .iter()
        .filter(|p| p.sup_hat > 0.0 && p.tau < 1.0)
        .map(|p| ((1.0 / p.tau).ln().ln(), p.sup_hat.ln()))
        .collect();
    let fitted_kappa = if fit_pts.len() >= 2 {
        Some(-line_fit(&fit_pts).slope / 2.0)
    } else {
        None
    };
    Ok(ConcentrationProbe {
        points: best,
        j_grid: j_grid.to_vec(),
        x_points,
        reps,
        fitted_kappa,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition3Score {
    /// Truncated double sum over the probed rectangle of |w_k| theta_{i,i-k}.
    pub score: f64,
    /// Per-offset partial sums (k, sum_i |w_k| theta_{i,i-k}).
    pub per_k: Vec<(u32, f64)>,
    pub tail_note: String,
}

/// Weighted double sum of projection norms over a probed (offset, index)
/// rectangle — the summability diagnostic that decides whether the
/// square-root-of-n normalization applies.
pub fn condition3_score(weights: &WeightSpec, thetas: &[ThetaEstimate]) -> Result<Condition3Score> {
    weights.validate()?;
    if thetas.is_empty() {
        return Err(Error::InvalidArgument("empty projection grid".into()));
    }
    let mut per_k: Vec<(u32, f64)> = Vec::new();
    for t in thetas {
        if t.i < 0 || t.j > t.i {
            return Err(Error::InvalidArgument(format!(
                "projection grid entries need i >= 0 and j = i - k <= i, got ({}, {})",
                t.i, t.j
            )));
        }
        let k = (t.i - t.j) as u32;
        let contribution = weights.weight(k as i64).abs() * t.theta_hat;
        match per_k.iter_mut().find(|(kk, _)| *kk == k) {
            Some((_, sum)) => *sum += contribution,
            None => per_k.push((k, contribution)),
        }
    }
    per_k.sort_by_key(|&(k, _)| k);
    let score: f64 = per_k.iter().map(|&(_, s)| s).sum();
    let max_contribution = per_k.iter().map(|&(_, s)| s).fold(0.0, f64::max);
    let last = per_k.last().expect("nonempty").1;
    let tail_note = if per_k.len() < 3 {
        "offset range too short for a trend read".to_string()
    } else if last <= 0.1 * max_contribution {
        "per-offset contributions decay across the probed range; the untruncated sum looks \
         convergent"
            .to_string()
    } else {
        "per-offset contributions stay substantial at the largest probed offset; the \
         untruncated sum may diverge"
            .to_string()
    };
    Ok(Condition3Score {
        score,
        per_k,
        tail_note,
    })
}
