//! Lowering a folded schedule to a baseband drive field and Hamiltonian trace.
//!
//! The field is evaluated lazily. Integration steps are aligned with every
//! window boundary (pulse cores, tails, echoes), and the set of active windows
//! for a step is decided at the step midpoint. Piecewise-defined envelopes are
//! therefore smooth inside each step, and RK4 keeps its full order even across
//! the hard truncation edges of back-to-back pulses.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::PulseSchedule;
use crate::su2::ComplexMatrix2;

/// Alignment tolerance between timing parameters and the integration grid (ns).
pub const GRID_TOL_NS: f64 = 1e-6;
/// Minimum number of grid steps per Gaussian σ.
pub const MIN_SAMPLES_PER_SIGMA: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LoweringError {
    #[error("time step must be positive, got {0} ns")]
    InvalidStep(f64),
    #[error("pulse cores overlap: peaks at {first} ns and {second} ns are closer than the gate duration {gate} ns")]
    OverlappingPulses { first: f64, second: f64, gate: f64 },
    #[error("pulse duration {pulse} ns does not match the pulse shape's gate duration {shape} ns")]
    DurationMismatch { pulse: f64, shape: f64 },
    #[error("{what} = {value} ns is not a multiple of the time step {dt} ns")]
    OffGrid { what: &'static str, value: f64, dt: f64 },
    #[error("time step {dt} ns under-resolves the Gaussian (σ = {sigma} ns needs at least {min} samples per σ)")]
    UnderResolved { dt: f64, sigma: f64, min: f64 },
    #[error("invalid pulse shape: {0}")]
    InvalidShape(String),
    #[error("invalid interference model: {0}")]
    InvalidInterference(String),
}

/// Envelope family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Envelope {
    /// Gaussian with standard deviation `sigma_ns`, hard-truncated to a
    /// centred window of total width `window_ns`.
    Gaussian { sigma_ns: f64, window_ns: f64 },
    /// Raised cosine `(1 + cos(2πu/t_g))/2` over the gate duration.
    CosineRamp,
}

/// Pulse envelope with amplitude calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseShape {
    pub gate_duration_ns: f64,
    pub envelope: Envelope,
    /// Multiplies `θ · g(u)` so that the core integrates to `θ`.
    pub amplitude_scale: f64,
}

impl PulseShape {
    /// Gaussian with σ = t_g/4 truncated at ±t_g/2.
    pub fn gaussian(gate_duration_ns: f64) -> Result<Self, LoweringError> {
        Self::new(
            gate_duration_ns,
            Envelope::Gaussian {
                sigma_ns: gate_duration_ns / 4.0,
                window_ns: gate_duration_ns,
            },
        )
    }

    pub fn cosine(gate_duration_ns: f64) -> Result<Self, LoweringError> {
        Self::new(gate_duration_ns, Envelope::CosineRamp)
    }

    pub fn new(gate_duration_ns: f64, envelope: Envelope) -> Result<Self, LoweringError> {
        if !(gate_duration_ns > 0.0 && gate_duration_ns.is_finite()) {
            return Err(LoweringError::InvalidShape(format!(
                "gate duration must be positive, got {gate_duration_ns}"
            )));
        }
        if let Envelope::Gaussian { sigma_ns, window_ns } = envelope {
            if !(sigma_ns > 0.0) {
                return Err(LoweringError::InvalidShape(format!(
                    "sigma must be positive, got {sigma_ns}"
                )));
            }
            if !(window_ns > 0.0 && window_ns <= gate_duration_ns) {
                return Err(LoweringError::InvalidShape(format!(
                    "truncation window {window_ns} must lie in (0, {gate_duration_ns}]"
                )));
            }
        }
        let mut shape = Self {
            gate_duration_ns,
            envelope,
            amplitude_scale: 1.0,
        };
        shape.amplitude_scale = 1.0 / shape.core_area();
        Ok(shape)
    }

    /// Width of the core window.
    pub fn window(&self) -> f64 {
        match self.envelope {
            Envelope::Gaussian { window_ns, .. } => window_ns,
            Envelope::CosineRamp => self.gate_duration_ns,
        }
    }

    /// Unscaled envelope `g(u)`, `u` measured from the pulse peak.
    ///
    /// Gaussians are defined for all `u` (tails are used by the interference
    /// model); the cosine ramp vanishes outside its window.
    pub fn profile(&self, u: f64) -> f64 {
        match self.envelope {
            Envelope::Gaussian { sigma_ns, .. } => (-0.5 * (u / sigma_ns).powi(2)).exp(),
            Envelope::CosineRamp => {
                let half = self.gate_duration_ns / 2.0;
                if u.abs() > half {
                    0.0
                } else {
                    0.5 * (1.0 + (std::f64::consts::PI * u / half).cos())
                }
            }
        }
    }

    /// Calibrated envelope of a pulse of nominal angle `theta`, restricted to the core.
    pub fn calibrated(&self, theta: f64, u: f64) -> f64 {
        if u.abs() <= self.window() / 2.0 {
            theta * self.amplitude_scale * self.profile(u)
        } else {
            0.0
        }
    }

    /// `∫ g(u) du` over the core window (composite Simpson, 8192 panels).
    fn core_area(&self) -> f64 {
        let half = self.window() / 2.0;
        let n = 8192;
        let h = 2.0 * half / n as f64;
        let mut sum = self.profile(-half) + self.profile(half);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * self.profile(-half + i as f64 * h);
        }
        sum * h / 3.0
    }

    /// Mean drive amplitude `θ/t_g` of a π pulse (rad/ns).
    pub fn effective_pi_amplitude(&self) -> f64 {
        std::f64::consts::PI / self.gate_duration_ns
    }
}

/// Cross-talk between consecutive pulses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InterferenceModel {
    None,
    /// Each Gaussian continues for `extension_ns` past both window edges. A
    /// tail is driven only where it overlaps the extended support of another
    /// pulse, where it adds coherently at its own pulse's phase. An isolated
    /// pulse is unchanged.
    TailOverlap { extension_ns: f64 },
    /// A reflected copy of each core, delayed and phase-shifted.
    Echo {
        reflection_amplitude: f64,
        delay_ns: f64,
        phase_shift_rad: f64,
    },
}

impl InterferenceModel {
    pub fn tail_overlap_default(gate_duration_ns: f64) -> Self {
        InterferenceModel::TailOverlap {
            extension_ns: gate_duration_ns / 2.0,
        }
    }

    pub fn validate(&self) -> Result<(), LoweringError> {
        match *self {
            InterferenceModel::None => Ok(()),
            InterferenceModel::TailOverlap { extension_ns } => {
                if extension_ns >= 0.0 && extension_ns.is_finite() {
                    Ok(())
                } else {
                    Err(LoweringError::InvalidInterference(format!(
                        "extension must be non-negative, got {extension_ns}"
                    )))
                }
            }
            InterferenceModel::Echo {
                reflection_amplitude,
                delay_ns,
                phase_shift_rad,
            } => {
                if !(0.0..1.0).contains(&reflection_amplitude) {
                    Err(LoweringError::InvalidInterference(format!(
                        "reflection amplitude must lie in [0, 1), got {reflection_amplitude}"
                    )))
                } else if !(delay_ns >= 0.0 && delay_ns.is_finite()) {
                    Err(LoweringError::InvalidInterference(format!(
                        "echo delay must be non-negative, got {delay_ns}"
                    )))
                } else if !phase_shift_rad.is_finite() {
                    Err(LoweringError::InvalidInterference(
                        "echo phase shift must be finite".into(),
                    ))
                } else {
                    Ok(())
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct LoweredPulse {
    peak: f64,
    /// `θ · amplitude_scale`
    amplitude: f64,
    carrier: Complex64,
}

/// Field values at the three RK4 stages of one step, plus the drive axis of
/// the pulse core active during the step (if any).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDrive {
    pub values: [Complex64; 3],
    /// Unit vector `sign(θ)·e^{iφ}` of the active core.
    pub active_axis: Option<Complex64>,
}

/// Complex baseband drive `ε(t)e^{iφ(t)}` on a uniform grid `t_k = k·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveField {
    pulses: Vec<LoweredPulse>,
    shape: PulseShape,
    interference: InterferenceModel,
    dt: f64,
    n_steps: usize,
    reach: f64,
}

fn check_grid(what: &'static str, value: f64, dt: f64) -> Result<(), LoweringError> {
    let k = (value / dt).round();
    if (value - k * dt).abs() <= GRID_TOL_NS {
        Ok(())
    } else {
        Err(LoweringError::OffGrid { what, value, dt })
    }
}

/// Lower a folded schedule to a drive field.
pub fn lower(
    s: &PulseSchedule,
    shape: &PulseShape,
    interference: &InterferenceModel,
    dt: f64,
) -> Result<DriveField, LoweringError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(LoweringError::InvalidStep(dt));
    }
    interference.validate()?;
    if let Envelope::Gaussian { sigma_ns, .. } = shape.envelope {
        if sigma_ns / dt < MIN_SAMPLES_PER_SIGMA * (1.0 - 1e-12) {
            return Err(LoweringError::UnderResolved {
                dt,
                sigma: sigma_ns,
                min: MIN_SAMPLES_PER_SIGMA,
            });
        }
    }
    let half = shape.window() / 2.0;
    let gate = shape.gate_duration_ns;
    check_grid("total duration", s.total_duration, dt)?;

    let mut pulses = Vec::with_capacity(s.pulses.len());
    for (i, p) in s.pulses.iter().enumerate() {
        if (p.duration - gate).abs() > 1e-9 {
            return Err(LoweringError::DurationMismatch {
                pulse: p.duration,
                shape: gate,
            });
        }
        let peak = p.peak();
        if i > 0 {
            let prev = s.pulses[i - 1].peak();
            if peak - prev < gate - 1e-9 {
                return Err(LoweringError::OverlappingPulses {
                    first: prev,
                    second: peak,
                    gate,
                });
            }
        }
        check_grid("pulse window start", peak - half, dt)?;
        check_grid("pulse window end", peak + half, dt)?;
        match *interference {
            InterferenceModel::None => {}
            InterferenceModel::TailOverlap { extension_ns } => {
                check_grid("tail extent", peak - half - extension_ns, dt)?;
                check_grid("tail extent", peak + half + extension_ns, dt)?;
            }
            InterferenceModel::Echo { delay_ns, .. } => {
                check_grid("echo window", peak + delay_ns - half, dt)?;
                check_grid("echo window", peak + delay_ns + half, dt)?;
            }
        }
        pulses.push(LoweredPulse {
            peak,
            amplitude: p.angle * shape.amplitude_scale,
            carrier: Complex64::from_polar(1.0, p.phase),
        });
    }
    let reach = match *interference {
        InterferenceModel::None => half,
        InterferenceModel::TailOverlap { extension_ns } => half + extension_ns,
        InterferenceModel::Echo { delay_ns, .. } => half + delay_ns,
    };
    Ok(DriveField {
        pulses,
        shape: *shape,
        interference: *interference,
        dt,
        n_steps: (s.total_duration / dt).round() as usize,
        reach,
    })
}

impl DriveField {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn total_duration(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }

    pub fn shape(&self) -> &PulseShape {
        &self.shape
    }

    pub fn interference(&self) -> &InterferenceModel {
        &self.interference
    }

    /// Largest distance from a peak at which that pulse can drive.
    pub fn reach(&self) -> f64 {
        self.reach
    }

    pub fn pulse_count(&self) -> usize {
        self.pulses.len()
    }

    fn candidates(&self, t: f64) -> &[LoweredPulse] {
        let lo = self.pulses.partition_point(|p| p.peak < t - self.reach - self.dt);
        let hi = self.pulses.partition_point(|p| p.peak <= t + self.reach + self.dt);
        &self.pulses[lo..hi]
    }

    /// Evaluate the field at `points`, with window membership decided at `probe`.
    ///
    /// Window membership is half-open `[start, end)` in `probe`.
    fn evaluate<const N: usize>(&self, probe: f64, points: [f64; N]) -> ([Complex64; N], Option<Complex64>) {
        let half = self.shape.window() / 2.0;
        let cands = self.candidates(probe);
        let mut out = [Complex64::new(0.0, 0.0); N];
        let mut axis = None;
        let tail_gate = match self.interference {
            InterferenceModel::TailOverlap { extension_ns } => {
                let support = half + extension_ns;
                let overlapping = cands
                    .iter()
                    .filter(|p| {
                        let u = probe - p.peak;
                        u >= -support && u < support
                    })
                    .count();
                Some((extension_ns, overlapping >= 2))
            }
            _ => None,
        };
        for p in cands {
            let u = probe - p.peak;
            let in_core = u >= -half && u < half;
            let in_tail = match tail_gate {
                Some((ext, true)) => !in_core && u >= -half - ext && u < half + ext,
                _ => false,
            };
            if in_core || in_tail {
                let c = p.carrier * p.amplitude;
                for (o, &t) in out.iter_mut().zip(&points) {
                    *o += c * self.shape.profile(t - p.peak);
                }
            }
            if in_core && p.amplitude != 0.0 {
                axis = Some(p.carrier * p.amplitude.signum());
            }
            if let InterferenceModel::Echo {
                reflection_amplitude,
                delay_ns,
                phase_shift_rad,
            } = self.interference
            {
                let ue = u - delay_ns;
                if ue >= -half && ue < half {
                    let c = p.carrier
                        * Complex64::from_polar(reflection_amplitude * p.amplitude, phase_shift_rad);
                    for (o, &t) in out.iter_mut().zip(&points) {
                        *o += c * self.shape.profile(t - p.peak - delay_ns);
                    }
                }
            }
        }
        (out, axis)
    }

    /// Field at the start, midpoint and end of step `k`.
    pub fn step(&self, k: usize) -> StepDrive {
        let t0 = k as f64 * self.dt;
        let tm = t0 + 0.5 * self.dt;
        let t1 = t0 + self.dt;
        let (values, active_axis) = self.evaluate(tm, [t0, tm, t1]);
        StepDrive {
            values,
            active_axis,
        }
    }

    /// Field at an arbitrary time, windows taken half-open at `t`.
    pub fn value_at(&self, t: f64) -> Complex64 {
        self.evaluate(t, [t]).0[0]
    }

    /// `(t_ns, field)` on the grid, `n_steps + 1` samples.
    pub fn samples(&self) -> Vec<(f64, Complex64)> {
        (0..=self.n_steps)
            .map(|k| {
                let t = k as f64 * self.dt;
                (t, self.value_at(t))
            })
            .collect()
    }

    /// Integrated area `∫ ε(t) e^{iφ(t)} dt` over the grid, Simpson per step.
    pub fn integrated_area(&self) -> Complex64 {
        (0..self.n_steps)
            .map(|k| {
                let v = self.step(k).values;
                (v[0] + v[1] * 4.0 + v[2]) * (self.dt / 6.0)
            })
            .sum()
    }

    /// CSV `t_ns,re,im` with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_ns,re,im\n");
        for (t, v) in self.samples() {
            out.push_str(&format!("{t:.6},{:.9e},{:.9e}\n", v.re, v.im));
        }
        out
    }
}

/// `H = ½(ωx σx + ωy σy + δ σz)`, stored by its three real coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hamiltonian {
    pub omega_x: f64,
    pub omega_y: f64,
    pub delta: f64,
}

impl Hamiltonian {
    pub fn matrix(&self) -> ComplexMatrix2 {
        let half = 0.5;
        ComplexMatrix2::new(
            Complex64::new(half * self.delta, 0.0),
            Complex64::new(half * self.omega_x, -half * self.omega_y),
            Complex64::new(half * self.omega_x, half * self.omega_y),
            Complex64::new(-half * self.delta, 0.0),
        )
    }
}

/// Drive field plus coherent errors, sampled per integration step.
#[derive(Debug, Clone)]
pub struct HamiltonianTrace {
    field: Arc<DriveField>,
    eps_err: f64,
    del_err: f64,
}

/// Add the coherent error terms to a drive field.
///
/// The detuning `del_err·σz/2` acts at all times. The amplitude error
/// `eps_err/2` acts only inside a pulse core, along that pulse's drive axis
/// (for a phase-0 pulse this is `eps_err·σx/2`), so each pulse over-rotates by
/// `eps_err·t_g`.
pub fn inject_coherent_errors(field: Arc<DriveField>, eps_err: f64, del_err: f64) -> HamiltonianTrace {
    HamiltonianTrace {
        field,
        eps_err,
        del_err,
    }
}

impl HamiltonianTrace {
    pub fn field(&self) -> &Arc<DriveField> {
        &self.field
    }

    pub fn dt(&self) -> f64 {
        self.field.dt
    }

    pub fn n_steps(&self) -> usize {
        self.field.n_steps
    }

    pub fn eps_err(&self) -> f64 {
        self.eps_err
    }

    pub fn del_err(&self) -> f64 {
        self.del_err
    }

    /// Same drive with a different detuning.
    pub fn with_detuning(&self, del_err: f64) -> Self {
        Self {
            del_err,
            ..self.clone()
        }
    }

    /// Hamiltonians at the start, midpoint and end of step `k`.
    pub fn step(&self, k: usize) -> [Hamiltonian; 3] {
        let drive = self.field.step(k);
        let err = drive
            .active_axis
            .map(|a| a * self.eps_err)
            .unwrap_or_default();
        drive.values.map(|v| Hamiltonian {
            omega_x: v.re + err.re,
            omega_y: v.im + err.im,
            delta: self.del_err,
        })
    }
}
