//! Decay fitting and residual-oscillation analysis of fidelity curves.

use std::fmt;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Minimum number of points accepted by [`fit_decay`].
pub const MIN_FIT_POINTS: usize = 6;
const GRID_SIZE: usize = 64;
const GRID_DECADES_BELOW: f64 = 2.0;
const GRID_DECADES_ABOVE: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("need at least {min} points, got {got}")]
    TooFewPoints { got: usize, min: usize },
    #[error("time and fidelity arrays differ in length ({times} vs {values})")]
    LengthMismatch { times: usize, values: usize },
    #[error("times must be finite and strictly increasing")]
    BadTimes,
    #[error("sampling is not uniform: step {index} is {step} ns, expected {expected} ns")]
    NonUniform { index: usize, step: f64, expected: f64 },
}

/// Least-squares fit of `a + b·exp(−t/T_D)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub a: f64,
    pub b: f64,
    /// Decay time in µs (infinite for a degenerate fit).
    #[serde(rename = "T_D_us")]
    pub t_d_us: f64,
    pub rms_residual: f64,
    pub converged: bool,
}

impl DecayFit {
    /// Model value at `t_ns`.
    pub fn model(&self, t_ns: f64) -> f64 {
        if self.t_d_us.is_finite() {
            self.a + self.b * (-t_ns / (self.t_d_us * 1e3)).exp()
        } else {
            self.a + self.b
        }
    }
}

fn check_series(times: &[f64], values: &[f64], min: usize) -> Result<(), AnalysisError> {
    if times.len() != values.len() {
        return Err(AnalysisError::LengthMismatch {
            times: times.len(),
            values: values.len(),
        });
    }
    if times.len() < min {
        return Err(AnalysisError::TooFewPoints {
            got: times.len(),
            min,
        });
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(AnalysisError::BadTimes);
    }
    Ok(())
}

/// Best `(a, b)` and residual sum of squares for a fixed decay time, with
/// time measured in units of the fit scale.
fn linear_solve(s: &[f64], y: &[f64], tau: f64) -> (f64, f64, f64) {
    let n = s.len() as f64;
    let (mut se, mut see, mut sy, mut sey) = (0.0, 0.0, 0.0, 0.0);
    for (&si, &yi) in s.iter().zip(y) {
        let e = (-si / tau).exp();
        se += e;
        see += e * e;
        sy += yi;
        sey += e * yi;
    }
    let det = n * see - se * se;
    let (a, b) = if det.abs() <= 1e-14 * n * see.max(1e-300) {
        (sy / n, 0.0)
    } else {
        ((see * sy - se * sey) / det, (n * sey - se * sy) / det)
    };
    let sse = s
        .iter()
        .zip(y)
        .map(|(&si, &yi)| {
            let r = yi - a - b * (-si / tau).exp();
            r * r
        })
        .sum();
    (a, b, sse)
}

/// Fit `a + b·exp(−t/T_D)` to a curve sampled at `times_ns`.
///
/// Coarse search over 64 log-spaced decay times spanning
/// `[t_max/100, 100·t_max]`, then golden-section refinement in `log T_D`.
pub fn fit_decay(times_ns: &[f64], fidelities: &[f64]) -> Result<DecayFit, AnalysisError> {
    check_series(times_ns, fidelities, MIN_FIT_POINTS)?;
    let n = fidelities.len() as f64;
    let mean = fidelities.iter().sum::<f64>() / n;
    let spread = fidelities.iter().map(|y| (y - mean).abs()).fold(0.0, f64::max);
    if spread <= 1e-14 * mean.abs().max(1.0) {
        return Ok(DecayFit {
            a: mean,
            b: 0.0,
            t_d_us: f64::INFINITY,
            rms_residual: (fidelities.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n).sqrt(),
            converged: false,
        });
    }

    // Work in units of the largest time so the fit is scale-equivariant.
    let scale = times_ns[times_ns.len() - 1].abs().max(f64::MIN_POSITIVE);
    let s: Vec<f64> = times_ns.iter().map(|t| t / scale).collect();
    let cost = |log_tau: f64| linear_solve(&s, fidelities, log_tau.exp()).2;

    let lo = -GRID_DECADES_BELOW * std::f64::consts::LN_10;
    let hi = GRID_DECADES_ABOVE * std::f64::consts::LN_10;
    let step = (hi - lo) / (GRID_SIZE - 1) as f64;
    let grid: Vec<f64> = (0..GRID_SIZE).map(|i| lo + step * i as f64).collect();
    let best = grid
        .iter()
        .enumerate()
        .map(|(i, &g)| (i, cost(g)))
        .fold((0, f64::INFINITY), |acc, (i, c)| if c < acc.1 { (i, c) } else { acc });

    let mut left = grid[best.0.saturating_sub(1)];
    let mut right = grid[(best.0 + 1).min(GRID_SIZE - 1)];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = right - inv_phi * (right - left);
    let mut x2 = left + inv_phi * (right - left);
    let (mut f1, mut f2) = (cost(x1), cost(x2));
    let mut previous = best.1;
    let mut last_change = f64::INFINITY;
    for _ in 0..200 {
        if f1 < f2 {
            right = x2;
            x2 = x1;
            f2 = f1;
            x1 = right - inv_phi * (right - left);
            f1 = cost(x1);
        } else {
            left = x1;
            x1 = x2;
            f1 = f2;
            x2 = left + inv_phi * (right - left);
            f2 = cost(x2);
        }
        let current = f1.min(f2);
        last_change = (previous - current).abs();
        previous = current;
        if right - left < 1e-13 {
            break;
        }
    }
    let log_tau = if f1 < f2 { x1 } else { x2 };
    let (a, b, sse) = linear_solve(&s, fidelities, log_tau.exp());
    let at_edge = (log_tau - lo).abs() < step && best.0 == 0 || (hi - log_tau).abs() < step && best.0 == GRID_SIZE - 1;
    let rms = (sse / n).sqrt();
    // Changes below this are rounding in the residuals, not progress.
    let y_max = fidelities.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    let round_off = 64.0 * f64::EPSILON * n * rms * y_max;
    let converged = last_change <= 1e-10 * previous + round_off;
    Ok(DecayFit {
        a,
        b,
        t_d_us: log_tau.exp() * scale / 1e3,
        rms_residual: rms,
        converged: converged && !at_edge,
    })
}

/// Dominant periodic component left in the residuals of a fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillationMetric {
    pub amplitude: f64,
    pub period_ns: f64,
}

/// Spectral amplitude of `fidelity − fit` on a uniformly sampled curve.
///
/// `amplitude = max_k≠0 |X_k|·2/N` over the non-negative frequencies and
/// `period = N·Δt/k` of that bin.
pub fn oscillation_metric(
    times_ns: &[f64],
    fidelities: &[f64],
    fit: &DecayFit,
) -> Result<OscillationMetric, AnalysisError> {
    check_series(times_ns, fidelities, 2)?;
    let n = times_ns.len();
    let dt = times_ns[1] - times_ns[0];
    for (i, w) in times_ns.windows(2).enumerate() {
        let step = w[1] - w[0];
        if (step - dt).abs() > 1e-9 * dt.abs().max(1.0) {
            return Err(AnalysisError::NonUniform {
                index: i,
                step,
                expected: dt,
            });
        }
    }
    let mut buf: Vec<Complex64> = times_ns
        .iter()
        .zip(fidelities)
        .map(|(&t, &y)| Complex64::new(y - fit.model(t), 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let (k, mag) = (1..=n / 2)
        .map(|k| (k, buf[k].norm()))
        .fold((1, 0.0), |acc, (k, m)| if m > acc.1 { (k, m) } else { acc });
    Ok(OscillationMetric {
        amplitude: mag * 2.0 / n as f64,
        period_ns: n as f64 * dt / k as f64,
    })
}

/// [`oscillation_metric`] for shot-sampled data: amplitudes below the
/// binomial noise floor `3/√shots` are reported as zero.
pub fn oscillation_metric_sampled(
    times_ns: &[f64],
    fidelities: &[f64],
    fit: &DecayFit,
    shots: u64,
) -> Result<OscillationMetric, AnalysisError> {
    let mut m = oscillation_metric(times_ns, fidelities, fit)?;
    if shots > 0 && m.amplitude < 3.0 / (shots as f64).sqrt() {
        m.amplitude = 0.0;
    }
    Ok(m)
}

/// How often `first`'s decay time is at least `second`'s across an ensemble.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseOrdering {
    pub first: String,
    pub second: String,
    /// Ensemble members where both fits converged.
    pub compared: usize,
    pub at_least: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingReport {
    /// Labels in first-appearance order with their decay times (µs).
    pub decay_times: Vec<(String, Vec<f64>)>,
    pub pairs: Vec<PairwiseOrdering>,
}

/// Pairwise `T_D(first) ≥ T_D(second)` statistics.
///
/// Repeated labels form an ensemble; the `k`-th fit of one label is compared
/// with the `k`-th fit of another. Ties count as satisfying `≥`.
pub fn compare_decay_constants(fits: &[(String, DecayFit)]) -> OrderingReport {
    let mut groups: Vec<(String, Vec<DecayFit>)> = Vec::new();
    for (label, fit) in fits {
        match groups.iter_mut().find(|(l, _)| l == label) {
            Some((_, v)) => v.push(*fit),
            None => groups.push((label.clone(), vec![*fit])),
        }
    }
    let mut pairs = Vec::new();
    for (i, (la, fa)) in groups.iter().enumerate() {
        for (j, (lb, fb)) in groups.iter().enumerate() {
            if i == j {
                continue;
            }
            let (mut compared, mut at_least) = (0, 0);
            for (x, y) in fa.iter().zip(fb) {
                if x.converged && y.converged {
                    compared += 1;
                    if x.t_d_us >= y.t_d_us {
                        at_least += 1;
                    }
                }
            }
            pairs.push(PairwiseOrdering {
                first: la.clone(),
                second: lb.clone(),
                compared,
                at_least,
                fraction: if compared == 0 {
                    f64::NAN
                } else {
                    at_least as f64 / compared as f64
                },
            });
        }
    }
    OrderingReport {
        decay_times: groups
            .into_iter()
            .map(|(l, v)| (l, v.iter().map(|f| f.t_d_us).collect()))
            .collect(),
        pairs,
    }
}

impl fmt::Display for OrderingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<24} {:>6} {:>14}", "label", "fits", "mean T_D (us)")?;
        for (label, t) in &self.decay_times {
            let finite: Vec<f64> = t.iter().copied().filter(|x| x.is_finite()).collect();
            let mean = finite.iter().sum::<f64>() / finite.len().max(1) as f64;
            writeln!(f, "{:<24} {:>6} {:>14.4}", label, t.len(), mean)?;
        }
        for p in &self.pairs {
            writeln!(
                f,
                "T_D({}) >= T_D({}): {}/{} ({:.1}%)",
                p.first,
                p.second,
                p.at_least,
                p.compared,
                100.0 * p.fraction
            )?;
        }
        Ok(())
    }
}

/// One entry of the results sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub label: String,
    pub a: f64,
    pub b: f64,
    #[serde(rename = "T_D_us")]
    pub t_d_us: f64,
    pub rms_residual: f64,
    pub osc_amplitude: f64,
    pub osc_period_ns: f64,
}

impl FitSummary {
    pub fn new(label: impl Into<String>, fit: &DecayFit, osc: &OscillationMetric) -> Self {
        Self {
            label: label.into(),
            a: fit.a,
            b: fit.b,
            t_d_us: fit.t_d_us,
            rms_residual: fit.rms_residual,
            osc_amplitude: osc.amplitude,
            osc_period_ns: osc.period_ns,
        }
    }
}
