//! Prepare, apply `n` cycles, measure fidelity against the ideal outcome.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::quadrature::normal_nodes;
use super::{DensityMatrix, Evolution, IntegrationError, NoiseModel};
use crate::frame::{fold, PulseSchedule, ScheduleConfig};
use crate::gate_ir::{ideal_unitary, Gate, GateSequence};
use crate::lowering::{inject_coherent_errors, lower, DriveField, LoweringError, PulseShape};
use crate::su2::rz_unitary;

/// Nodes used to average over the quasi-static detuning distribution.
pub const QUASISTATIC_NODES: usize = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error(transparent)]
    Lowering(#[from] LoweringError),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error("invalid noise model: {0}")]
    Noise(String),
    #[error("cycle counts must be strictly increasing, got {0:?}")]
    UnsortedCounts(Vec<usize>),
    #[error("unknown initial state `{0}` (expected plus_i, minus_i, plus or zero)")]
    UnknownInitialState(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// `(|0⟩ + i|1⟩)/√2`
    PlusI,
    /// `(|0⟩ − i|1⟩)/√2`
    MinusI,
    /// `(|0⟩ + |1⟩)/√2`
    Plus,
    /// `|0⟩`
    Zero,
}

impl InitialState {
    pub const ALL: [InitialState; 4] = [
        InitialState::PlusI,
        InitialState::MinusI,
        InitialState::Plus,
        InitialState::Zero,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            InitialState::PlusI => "plus_i",
            InitialState::MinusI => "minus_i",
            InitialState::Plus => "plus",
            InitialState::Zero => "zero",
        }
    }

    pub fn ket(&self) -> [Complex64; 2] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let c = Complex64::new;
        match self {
            InitialState::PlusI => [c(s, 0.0), c(0.0, s)],
            InitialState::MinusI => [c(s, 0.0), c(0.0, -s)],
            InitialState::Plus => [c(s, 0.0), c(s, 0.0)],
            InitialState::Zero => [c(1.0, 0.0), c(0.0, 0.0)],
        }
    }

    pub fn density(&self) -> DensityMatrix {
        let [a, b] = self.ket();
        DensityMatrix::pure(a, b)
    }

    /// Gates taking `|0⟩` to this state (up to global phase) with √X pulses.
    pub fn preparation(&self) -> GateSequence {
        use std::f64::consts::{FRAC_PI_2, PI};
        let gates = match self {
            InitialState::MinusI => vec![Gate::sx()],
            InitialState::PlusI => vec![Gate::vz(PI), Gate::sx(), Gate::vz(-PI)],
            InitialState::Plus => vec![Gate::vz(-FRAC_PI_2), Gate::sx(), Gate::vz(FRAC_PI_2)],
            InitialState::Zero => vec![],
        };
        GateSequence {
            name: format!("prep_{}", self.as_str()),
            gates,
        }
    }
}

impl fmt::Display for InitialState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InitialState {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        InitialState::ALL
            .into_iter()
            .find(|i| i.as_str() == s)
            .ok_or_else(|| ProtocolError::UnknownInitialState(s.to_string()))
    }
}

/// Numerical and hardware settings shared by every run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolSettings {
    pub timing: ScheduleConfig,
    pub shape: PulseShape,
    pub dt_ns: f64,
    /// Prepare from `|0⟩` with physical pulses and undo the preparation
    /// before measuring, instead of starting in the ideal state.
    pub physical_preparation: bool,
}

impl ProtocolSettings {
    pub fn new(tau_ns: f64, t_g_ns: f64, dt_ns: f64) -> Result<Self, ProtocolError> {
        let timing = ScheduleConfig::new(tau_ns, t_g_ns).map_err(|e| ProtocolError::Noise(e.to_string()))?;
        Ok(Self {
            timing,
            shape: PulseShape::gaussian(t_g_ns)?,
            dt_ns,
            physical_preparation: false,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolResult {
    pub fidelity_exact: f64,
    /// `None` when no shots were requested.
    pub fidelity_sampled: Option<f64>,
}

/// Simulate one point: `cycles` repetitions of `cycle` from `initial`.
pub fn run_protocol(
    initial: InitialState,
    cycle: &GateSequence,
    cycles: usize,
    noise: &NoiseModel,
    shots: u64,
    seed: u64,
    settings: &ProtocolSettings,
) -> Result<ProtocolResult, ProtocolError> {
    let f = simulate_curve(initial, cycle, &[cycles], noise, settings)?[0];
    Ok(ProtocolResult {
        fidelity_exact: f,
        fidelity_sampled: sample_fidelity(f, shots, seed),
    })
}

/// Binomial estimate of `fidelity` from `shots` single-shot measurements.
pub fn sample_fidelity(fidelity: f64, shots: u64, seed: u64) -> Option<f64> {
    if shots == 0 {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Binomial::new(shots, fidelity.clamp(0.0, 1.0)).expect("probability in [0, 1]");
    Some(dist.sample(&mut rng) as f64 / shots as f64)
}

struct Point {
    /// Grid step up to which this run's drive matches the longest run.
    fork_step: usize,
    field: Arc<DriveField>,
    residual_frame: f64,
    target: [Complex64; 2],
}

fn plan_point(
    prefix: &GateSequence,
    cycle: &GateSequence,
    n: usize,
    suffix: &GateSequence,
    initial_ket: [Complex64; 2],
    full: &PulseSchedule,
    settings: &ProtocolSettings,
    noise: &NoiseModel,
) -> Result<Point, ProtocolError> {
    let seq = prefix.clone().then(&cycle.repeat(n)).then(suffix);
    let schedule = fold(&seq, &settings.timing);
    let field = lower(&schedule, &settings.shape, &noise.interference, settings.dt_ns)?;

    let common = schedule
        .pulses
        .iter()
        .zip(&full.pulses)
        .take_while(|(a, b)| a == b)
        .count();
    let first_difference = [schedule.pulses.get(common), full.pulses.get(common)]
        .into_iter()
        .flatten()
        .map(|p| p.peak())
        .fold(f64::INFINITY, f64::min);
    let reach = field.reach() + settings.dt_ns;
    let diverge_ns = (first_difference - reach).min(schedule.total_duration).max(0.0);
    let fork_step = ((diverge_ns / settings.dt_ns).floor() as usize).min(field.n_steps());

    let u = ideal_unitary(&seq);
    let target = [
        u.get(0, 0) * initial_ket[0] + u.get(0, 1) * initial_ket[1],
        u.get(1, 0) * initial_ket[0] + u.get(1, 1) * initial_ket[1],
    ];
    Ok(Point {
        fork_step,
        field: Arc::new(field),
        residual_frame: schedule.residual_frame,
        target,
    })
}

/// Exact fidelities after each of `counts` cycles (strictly increasing).
///
/// All points share one integration of the longest run; each point forks
/// off where its own drive first differs. The result is identical to
/// simulating every point separately.
pub fn simulate_curve(
    initial: InitialState,
    cycle: &GateSequence,
    counts: &[usize],
    noise: &NoiseModel,
    settings: &ProtocolSettings,
) -> Result<Vec<f64>, ProtocolError> {
    noise.validate().map_err(ProtocolError::Noise)?;
    if counts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ProtocolError::UnsortedCounts(counts.to_vec()));
    }
    let Some(&max_count) = counts.last() else {
        return Ok(Vec::new());
    };

    let (prefix, suffix, rho0, initial_ket) = if settings.physical_preparation {
        let prep = initial.preparation();
        let zero = InitialState::Zero;
        (prep.clone(), prep.inverse(), zero.density(), zero.ket())
    } else {
        let none = GateSequence::empty("");
        (none.clone(), none, initial.density(), initial.ket())
    };

    let full_seq = prefix.clone().then(&cycle.repeat(max_count));
    let full = fold(&full_seq, &settings.timing);
    let full_field = Arc::new(lower(&full, &settings.shape, &noise.interference, settings.dt_ns)?);
    let points = counts
        .iter()
        .map(|&n| plan_point(&prefix, cycle, n, &suffix, initial_ket, &full, settings, noise))
        .collect::<Result<Vec<_>, _>>()?;

    let nodes = normal_nodes(noise.del_err, noise.quasistatic_sigma, QUASISTATIC_NODES);
    let per_node = nodes
        .par_iter()
        .map(|&(detuning, _)| {
            let trace = inject_coherent_errors(full_field.clone(), noise.eps_err, detuning);
            let mut main = Evolution::new(rho0, trace, noise);
            let mut out = Vec::with_capacity(points.len());
            for p in &points {
                let mut branch = if p.fork_step >= main.step_index() {
                    main.advance_to(p.fork_step);
                    main.clone()
                } else {
                    let trace = inject_coherent_errors(full_field.clone(), noise.eps_err, detuning);
                    let mut fresh = Evolution::new(rho0, trace, noise);
                    fresh.advance_to(p.fork_step);
                    fresh
                };
                branch.switch_trace(inject_coherent_errors(p.field.clone(), noise.eps_err, detuning));
                branch.run_to_end();
                let rho = branch.checked_state()?;
                let logical = rho.conjugate(&rz_unitary(p.residual_frame));
                out.push(logical.overlap(p.target));
            }
            Ok(out)
        })
        .collect::<Result<Vec<Vec<f64>>, IntegrationError>>()?;

    let mut fidelities = vec![0.0; points.len()];
    for ((_, weight), values) in nodes.iter().zip(&per_node) {
        for (acc, v) in fidelities.iter_mut().zip(values) {
            *acc += weight * v;
        }
    }
    Ok(fidelities.into_iter().map(|f| f.clamp(0.0, 1.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate_ir::{build_sequence, CompilationStrategy, SequenceName};
    use crate::lowering::InterferenceModel;
    use crate::lindblad::evolve;
    use crate::su2::{rotation_unitary, Rotation};

    const TAU: f64 = 56.8;

    fn settings() -> ProtocolSettings {
        ProtocolSettings::new(TAU, TAU, 0.1).unwrap()
    }

    /// Direct integration of one point without any sharing.
    fn standalone(initial: InitialState, cycle: &GateSequence, n: usize, noise: &NoiseModel, s: &ProtocolSettings) -> f64 {
        let (prefix, suffix, rho0, ket) = if s.physical_preparation {
            let p = initial.preparation();
            (p.clone(), p.inverse(), InitialState::Zero.density(), InitialState::Zero.ket())
        } else {
            (GateSequence::empty(""), GateSequence::empty(""), initial.density(), initial.ket())
        };
        let seq = prefix.then(&cycle.repeat(n)).then(&suffix);
        let sched = fold(&seq, &s.timing);
        let field = lower(&sched, &s.shape, &noise.interference, s.dt_ns).unwrap();
        let trace = inject_coherent_errors(Arc::new(field), noise.eps_err, noise.del_err);
        let rho = evolve(&rho0, &trace, noise).unwrap();
        let u = ideal_unitary(&seq);
        let target = [
            u.get(0, 0) * ket[0] + u.get(0, 1) * ket[1],
            u.get(1, 0) * ket[0] + u.get(1, 1) * ket[1],
        ];
        rho.conjugate(&rz_unitary(sched.residual_frame)).overlap(target)
    }

    #[test]
    fn preparations_reach_their_states() {
        for s in InitialState::ALL {
            let u = ideal_unitary(&s.preparation());
            let psi = [u.get(0, 0), u.get(1, 0)];
            let [a, b] = s.ket();
            let overlap = a.conj() * psi[0] + b.conj() * psi[1];
            assert!((overlap.norm() - 1.0).abs() < 1e-12, "{s}");
        }
    }

    #[test]
    fn initial_state_parsing() {
        assert_eq!("plus_i".parse::<InitialState>().unwrap(), InitialState::PlusI);
        assert!("up".parse::<InitialState>().is_err());
        assert_eq!(serde_json::to_string(&InitialState::MinusI).unwrap(), "\"minus_i\"");
    }

    #[test]
    fn noiseless_protocol_is_perfect() {
        let noise = NoiseModel::noiseless();
        for name in [SequenceName::XY4, SequenceName::UR4, SequenceName::YY] {
            let cycle = build_sequence(name, CompilationStrategy::Symmetric, TAU).unwrap();
            for init in InitialState::ALL {
                let r = run_protocol(init, &cycle, 3, &noise, 0, 0, &settings()).unwrap();
                assert!(r.fidelity_exact > 1.0 - 1e-8, "{name} {init}: {}", r.fidelity_exact);
                assert_eq!(r.fidelity_sampled, None);
            }
        }
    }

    #[test]
    fn curve_matches_standalone_runs() {
        let noise = NoiseModel {
            eps_err: 2e-4,
            del_err: 3e-4,
            ..NoiseModel::default_for_gate(TAU)
        };
        let noise = NoiseModel {
            quasistatic_sigma: 0.0,
            ..noise
        };
        let cycle = build_sequence(SequenceName::XY4, CompilationStrategy::Asymmetric, TAU).unwrap();
        for physical in [false, true] {
            let s = ProtocolSettings {
                physical_preparation: physical,
                ..settings()
            };
            let counts = [1, 2, 5, 6];
            let curve = simulate_curve(InitialState::PlusI, &cycle, &counts, &noise, &s).unwrap();
            for (&n, &f) in counts.iter().zip(&curve) {
                let direct = standalone(InitialState::PlusI, &cycle, n, &noise, &s);
                assert_eq!(f, direct.clamp(0.0, 1.0), "n = {n}, physical = {physical}");
            }
        }
    }

    #[test]
    fn echo_interference_curve_matches_standalone() {
        let noise = NoiseModel {
            interference: InterferenceModel::Echo {
                reflection_amplitude: 0.05,
                delay_ns: 10.0,
                phase_shift_rad: 0.4,
            },
            ..NoiseModel::noiseless()
        };
        let cycle = build_sequence(SequenceName::YY, CompilationStrategy::Asymmetric, TAU).unwrap();
        let counts = [1, 3, 4];
        let curve = simulate_curve(InitialState::Plus, &cycle, &counts, &noise, &settings()).unwrap();
        for (&n, &f) in counts.iter().zip(&curve) {
            assert_eq!(f, standalone(InitialState::Plus, &cycle, n, &noise, &settings()).clamp(0.0, 1.0));
        }
    }

    #[test]
    fn yy_asymmetric_passes_through_ground_from_minus_i() {
        // Folded phases [π, 0]: halfway through each pulse the state
        // starting at |−i⟩ sits at |0⟩.
        let y = build_sequence(SequenceName::YY, CompilationStrategy::Asymmetric, TAU).unwrap();
        let sched = fold(&y, &settings().timing);
        let mut psi = InitialState::MinusI.ket();
        for p in &sched.pulses {
            let half = rotation_unitary(Rotation::new(p.phase, p.angle / 2.0));
            let mid = [half.get(0, 0) * psi[0] + half.get(0, 1) * psi[1], half.get(1, 0) * psi[0] + half.get(1, 1) * psi[1]];
            assert!(mid[1].norm() < 1e-12, "{mid:?}");
            let u = rotation_unitary(p.rotation());
            psi = [u.get(0, 0) * psi[0] + u.get(0, 1) * psi[1], u.get(1, 0) * psi[0] + u.get(1, 1) * psi[1]];
        }
        let r = run_protocol(InitialState::MinusI, &y, 1, &NoiseModel::noiseless(), 0, 0, &settings()).unwrap();
        assert!(r.fidelity_exact > 1.0 - 1e-8);
    }

    #[test]
    fn sampling_is_reproducible_and_binomial() {
        let a = sample_fidelity(0.9, 800, 42).unwrap();
        assert_eq!(Some(a), sample_fidelity(0.9, 800, 42));
        assert!((a * 800.0).fract() == 0.0);
        assert!((a - 0.9).abs() < 0.06);
        assert_eq!(sample_fidelity(0.9, 0, 42), None);
        assert_eq!(sample_fidelity(1.0, 100, 1), Some(1.0));
    }

    #[test]
    fn rejects_unsorted_counts() {
        let cycle = build_sequence(SequenceName::YY, CompilationStrategy::Symmetric, TAU).unwrap();
        let err = simulate_curve(InitialState::Plus, &cycle, &[3, 2], &NoiseModel::noiseless(), &settings());
        assert!(matches!(err, Err(ProtocolError::UnsortedCounts(_))));
    }

    #[test]
    fn quasistatic_averaging_reduces_fidelity() {
        let cycle = GateSequence::new("idle", vec![Gate::free(TAU)]).unwrap();
        let base = NoiseModel::noiseless();
        let sigma = 1e-3;
        let noisy = NoiseModel {
            quasistatic_sigma: sigma,
            ..base
        };
        let n = 20;
        let f = simulate_curve(InitialState::Plus, &cycle, &[n], &noisy, &settings()).unwrap()[0];
        // Free precession: F = (1 + E[cos(δt)])/2 = (1 + e^{−σ²t²/2})/2
        let t = n as f64 * TAU;
        let expected = 0.5 * (1.0 + (-(sigma * t).powi(2) / 2.0).exp());
        assert!((f - expected).abs() < 1e-10, "{f} vs {expected}");
    }
}
