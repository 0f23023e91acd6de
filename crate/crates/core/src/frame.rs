//! Virtual-Z frame folding.
//!
//! Folding walks a [`GateSequence`] in time order with a frame accumulator
//! `c` (starting at 0):
//!
//! * `VirtualZ(α)` adds `α` to `c`;
//! * a physical pulse `R_φ(θ)` is emitted at drive phase `φ − c`;
//! * free evolution only advances the clock (virtual Z commutes with it).
//!
//! The sign follows from `R_φ(θ)·R_z(c) = R_z(c)·R_{φ−c}(θ)`, which is the
//! general form of `R_x(π)R_z(±π) = −R_z(∓π)R_x(−π)`: every frame update can
//! be pushed to the end of the sequence, leaving `R_z(c_final)` as a residual
//! frame. For XY4 with asymmetric Y gates this gives drive phases
//! `[0, π, π, 0]` and a residual of `−2π`, which is a global phase of `−1`.
//!
//! **Timing.** Free evolution preceding a pulse defines that pulse's slot; the
//! pulse peak sits at the centre of its slot. With `f(τ)` before every pulse
//! this puts peaks at `τ/2, 3τ/2, …`, i.e. peak-to-peak spacing `τ`. A pulse
//! without preceding free time gets a slot of `pulse_interval_ns`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gate_ir::{format_angle, Gate, GateSequence};
use crate::su2::{
    angle_distance, rotation_unitary, rz_unitary, wrap_angle, ComplexMatrix2, Rotation,
};

/// Default timing tolerance for schedule comparison, in ns.
pub const TIMING_TOL_NS: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("gate duration must be positive, got {0} ns")]
    NonPositiveGateDuration(f64),
    #[error("pulse interval ({interval} ns) is shorter than the gate duration ({gate} ns)")]
    IntervalShorterThanGate { interval: f64, gate: f64 },
}

/// Pulse timing used by [`fold`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    /// Slot length used for a pulse with no preceding free evolution (ns).
    pub pulse_interval_ns: f64,
    /// Duration of each physical pulse (ns).
    pub gate_duration_ns: f64,
}

impl ScheduleConfig {
    pub fn new(pulse_interval_ns: f64, gate_duration_ns: f64) -> Result<Self, FrameError> {
        if !(gate_duration_ns > 0.0) {
            return Err(FrameError::NonPositiveGateDuration(gate_duration_ns));
        }
        if pulse_interval_ns < gate_duration_ns {
            return Err(FrameError::IntervalShorterThanGate {
                interval: pulse_interval_ns,
                gate: gate_duration_ns,
            });
        }
        Ok(Self {
            pulse_interval_ns,
            gate_duration_ns,
        })
    }
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            pulse_interval_ns: 56.8,
            gate_duration_ns: 56.8,
        }
    }
}

/// A pulse as physically driven: absolute phase after folding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalPulse {
    #[serde(rename = "phase_rad")]
    pub phase: f64,
    #[serde(rename = "angle_rad")]
    pub angle: f64,
    #[serde(rename = "start_ns")]
    pub start: f64,
    #[serde(rename = "duration_ns")]
    pub duration: f64,
}

impl PhysicalPulse {
    pub fn peak(&self) -> f64 {
        self.start + self.duration / 2.0
    }

    pub fn end(&self) -> f64 {
        self.start + self.duration
    }

    pub fn rotation(&self) -> Rotation {
        Rotation::new(self.phase, self.angle)
    }
}

/// Canonical physically executed schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    pub pulses: Vec<PhysicalPulse>,
    #[serde(rename = "residual_frame_rad")]
    pub residual_frame: f64,
    #[serde(rename = "total_duration_ns")]
    pub total_duration: f64,
}

impl PulseSchedule {
    pub fn empty() -> Self {
        Self {
            pulses: Vec::new(),
            residual_frame: 0.0,
            total_duration: 0.0,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serialises")
    }

    /// Pure-physical sequence that folds back to this schedule.
    ///
    /// Each pulse's slot is reconstructed from its peak, then the residual
    /// frame is appended as a trailing virtual Z.
    pub fn to_sequence(&self, name: &str) -> GateSequence {
        let mut gates = Vec::with_capacity(2 * self.pulses.len() + 2);
        let mut slot_start = 0.0;
        for p in &self.pulses {
            let slot = 2.0 * (p.peak() - slot_start);
            gates.push(Gate::FreeEvolution(slot));
            gates.push(Gate::Physical(p.rotation()));
            slot_start += slot;
        }
        let trailing = self.total_duration - slot_start;
        if trailing > 0.0 {
            gates.push(Gate::FreeEvolution(trailing));
        }
        if self.residual_frame != 0.0 {
            gates.push(Gate::VirtualZ(self.residual_frame));
        }
        GateSequence {
            name: name.to_string(),
            gates,
        }
    }
}

impl fmt::Display for PulseSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>4}  {:>10}  {:>10}  {:>11}  {:>11}",
            "#", "phase", "angle", "start_ns", "duration_ns"
        )?;
        for (i, p) in self.pulses.iter().enumerate() {
            writeln!(
                f,
                "{:>4}  {:>10}  {:>10}  {:>11.3}  {:>11.3}",
                i,
                format_angle(p.phase),
                format_angle(p.angle),
                p.start,
                p.duration
            )?;
        }
        write!(
            f,
            "residual frame: Rz({})   total duration: {:.3} ns",
            format_angle(self.residual_frame),
            self.total_duration
        )
    }
}

/// Fold every virtual Z in `seq` into the phases of the physical pulses.
pub fn fold(seq: &GateSequence, timing: &ScheduleConfig) -> PulseSchedule {
    let mut frame = 0.0;
    let mut slot_start = 0.0;
    let mut pending_free = 0.0;
    let mut pulses = Vec::with_capacity(seq.pulse_count());
    for gate in &seq.gates {
        match *gate {
            Gate::VirtualZ(alpha) => frame = wrap_angle(frame + alpha),
            Gate::FreeEvolution(d) => pending_free += d,
            Gate::Physical(r) => {
                let slot = if pending_free > 0.0 {
                    pending_free.max(timing.gate_duration_ns)
                } else {
                    timing.pulse_interval_ns
                };
                let peak = slot_start + slot / 2.0;
                pulses.push(PhysicalPulse {
                    phase: wrap_angle(r.phi() - frame),
                    angle: r.theta(),
                    start: peak - timing.gate_duration_ns / 2.0,
                    duration: timing.gate_duration_ns,
                });
                slot_start += slot;
                pending_free = 0.0;
            }
        }
    }
    PulseSchedule {
        pulses,
        residual_frame: frame,
        total_duration: slot_start + pending_free,
    }
}

/// Noiseless oracle: product of pulse rotations, then the residual `R_z`.
pub fn schedule_unitary(s: &PulseSchedule) -> ComplexMatrix2 {
    let body = s
        .pulses
        .iter()
        .fold(ComplexMatrix2::identity(), |acc, p| {
            rotation_unitary(p.rotation()) * acc
        });
    rz_unitary(s.residual_frame) * body
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalenceOptions {
    /// Tolerance on phases, angles and the residual frame (rad).
    pub tol: f64,
    /// Tolerance on pulse start and duration (ns).
    pub timing_tol: f64,
    /// Treat `(φ, −θ)` as the same drive as `(φ + π, θ)`.
    pub allow_angle_sign_flip: bool,
}

impl Default for EquivalenceOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            timing_tol: TIMING_TOL_NS,
            allow_angle_sign_flip: false,
        }
    }
}

/// True iff the two schedules drive the same pulses and agree in residual frame.
pub fn physically_equivalent(a: &PulseSchedule, b: &PulseSchedule, tol: f64) -> bool {
    physically_equivalent_with(
        a,
        b,
        &EquivalenceOptions {
            tol,
            ..EquivalenceOptions::default()
        },
    )
}

pub fn physically_equivalent_with(
    a: &PulseSchedule,
    b: &PulseSchedule,
    opts: &EquivalenceOptions,
) -> bool {
    if a.pulses.len() != b.pulses.len() {
        return false;
    }
    let canonical = |p: &PhysicalPulse| {
        if opts.allow_angle_sign_flip && p.angle < 0.0 {
            (wrap_angle(p.phase + std::f64::consts::PI), -p.angle)
        } else {
            (p.phase, p.angle)
        }
    };
    let pulses_match = a.pulses.iter().zip(&b.pulses).all(|(p, q)| {
        let (pp, pa) = canonical(p);
        let (qp, qa) = canonical(q);
        angle_distance(pp, qp) <= opts.tol
            && (pa - qa).abs() <= opts.tol
            && (p.start - q.start).abs() <= opts.timing_tol
            && (p.duration - q.duration).abs() <= opts.timing_tol
    });
    pulses_match && angle_distance(a.residual_frame, b.residual_frame) <= opts.tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate_ir::{
        build_sequence, compile_xbar, compile_y, ideal_unitary, CompilationStrategy, SequenceName,
    };
    use crate::su2::{equal_up_to_global_phase, GLOBAL_PHASE_TOL};
    use proptest::prelude::*;
    use std::f64::consts::{PI, TAU};

    const T: f64 = 56.8;

    fn timing() -> ScheduleConfig {
        ScheduleConfig::new(T, T).unwrap()
    }

    fn phases(s: &PulseSchedule) -> Vec<f64> {
        s.pulses.iter().map(|p| p.phase).collect()
    }

    fn seq(name: SequenceName, strategy: CompilationStrategy) -> GateSequence {
        build_sequence(name, strategy, T).unwrap()
    }

    #[test]
    fn xy4_asym_folds_to_ur4() {
        let s = fold(&seq(SequenceName::XY4, CompilationStrategy::Asymmetric), &timing());
        assert_eq!(phases(&s), vec![0.0, PI, PI, 0.0]);
        assert!(s.pulses.iter().all(|p| p.angle == PI));
        assert_eq!(s.residual_frame, 0.0);
        let ur4 = fold(&seq(SequenceName::UR4, CompilationStrategy::Symmetric), &timing());
        assert!(physically_equivalent(&s, &ur4, 1e-12));
    }

    #[test]
    fn xy4_sym_folds_to_true_xy4() {
        let s = fold(&seq(SequenceName::XY4, CompilationStrategy::Symmetric), &timing());
        assert_eq!(phases(&s), vec![0.0, PI / 2.0, 0.0, PI / 2.0]);
        assert_eq!(s.residual_frame, 0.0);
        let ur4 = fold(&seq(SequenceName::UR4, CompilationStrategy::Symmetric), &timing());
        assert!(!physically_equivalent(&s, &ur4, 1e-9));
    }

    #[test]
    fn symmetric_y_is_a_physical_y_pulse() {
        let s = fold(&compile_y(CompilationStrategy::Symmetric), &timing());
        assert_eq!(phases(&s), vec![PI / 2.0]);
        assert_eq!(s.residual_frame, 0.0);
        let asym = fold(&compile_y(CompilationStrategy::Asymmetric), &timing());
        assert_eq!(phases(&asym), vec![PI]);
        assert_eq!(asym.residual_frame, PI);
        assert!(!physically_equivalent(&s, &asym, 1e-9));
    }

    #[test]
    fn xbar_folds_to_single_phase_pi_pulse() {
        let s = fold(&compile_xbar(), &timing());
        assert_eq!(phases(&s), vec![PI]);
        assert_eq!(s.residual_frame, 0.0);
        let target = rotation_unitary(Rotation::x(-PI));
        assert!(equal_up_to_global_phase(&schedule_unitary(&s), &target, GLOBAL_PHASE_TOL).unwrap());
    }

    #[test]
    fn empty_fold() {
        let s = fold(&GateSequence::empty("e"), &timing());
        assert_eq!(s, PulseSchedule::empty());
        let residual_only = PulseSchedule {
            residual_frame: 0.7,
            ..PulseSchedule::empty()
        };
        assert_eq!(schedule_unitary(&residual_only), rz_unitary(0.7));
    }

    #[test]
    fn yy_sym_schedule_is_identity() {
        let s = fold(&seq(SequenceName::YY, CompilationStrategy::Symmetric), &timing());
        assert!(equal_up_to_global_phase(
            &schedule_unitary(&s),
            &ComplexMatrix2::identity(),
            GLOBAL_PHASE_TOL
        )
        .unwrap());
    }

    #[test]
    fn peaks_sit_on_uniform_grid() {
        let s = fold(&seq(SequenceName::XY4, CompilationStrategy::Symmetric).repeat(3), &timing());
        for (k, p) in s.pulses.iter().enumerate() {
            assert!((p.peak() - (k as f64 + 0.5) * T).abs() < 1e-9);
            assert_eq!(p.duration, T);
        }
        assert!((s.total_duration - 12.0 * T).abs() < 1e-9);
    }

    #[test]
    fn pi_rotation_commutation_identities() {
        let x = rotation_unitary(Rotation::x(PI));
        let xbar = rotation_unitary(Rotation::x(-PI));
        for sign in [1.0, -1.0] {
            let lhs = x * rz_unitary(sign * PI);
            let rhs = -(rz_unitary(-sign * PI) * xbar);
            assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
        }
        let lhs = x * rz_unitary(-PI / 2.0);
        let rhs = rz_unitary(-PI / 2.0) * rotation_unitary(Rotation::y(PI));
        assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
    }

    #[test]
    fn virtual_z_commutes_with_free_evolution() {
        for alpha in [0.3, -PI, 2.0 * PI / 3.0] {
            let a = GateSequence::new("a", vec![Gate::vz(alpha), Gate::free(T), Gate::x()]).unwrap();
            let b = GateSequence::new("b", vec![Gate::free(T), Gate::vz(alpha), Gate::x()]).unwrap();
            assert_eq!(fold(&a, &timing()), fold(&b, &timing()));
        }
    }

    #[test]
    fn sign_flip_mode() {
        let mk = |phase, angle| PulseSchedule {
            pulses: vec![PhysicalPulse {
                phase,
                angle,
                start: 0.0,
                duration: T,
            }],
            residual_frame: 0.0,
            total_duration: T,
        };
        let a = mk(0.0, -PI);
        let b = mk(PI, PI);
        assert!(!physically_equivalent(&a, &b, 1e-9));
        let opts = EquivalenceOptions {
            allow_angle_sign_flip: true,
            ..EquivalenceOptions::default()
        };
        assert!(physically_equivalent_with(&a, &b, &opts));
    }

    #[test]
    fn residual_full_turn_counts_as_agreement() {
        let mut a = fold(&seq(SequenceName::UR4, CompilationStrategy::Symmetric), &timing());
        let b = a.clone();
        a.residual_frame = TAU - 1e-13;
        assert!(physically_equivalent(&a, &b, 1e-9));
    }

    #[test]
    fn json_shape() {
        let s = fold(&compile_xbar(), &timing());
        let v: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
        assert!(v["pulses"][0]["phase_rad"].is_number());
        assert!(v["pulses"][0]["angle_rad"].is_number());
        assert!(v["pulses"][0]["start_ns"].is_number());
        assert!(v["pulses"][0]["duration_ns"].is_number());
        assert!(v["residual_frame_rad"].is_number());
        assert!(v["total_duration_ns"].is_number());
    }

    fn arb_gate() -> impl Strategy<Value = Gate> {
        prop_oneof![
            (0.0..TAU, -7.0..7.0f64).prop_map(|(p, t)| Gate::Physical(Rotation::new(p, t))),
            (-7.0..7.0f64).prop_map(Gate::VirtualZ),
            (0.0..200.0f64).prop_map(Gate::FreeEvolution),
        ]
    }

    proptest! {
        #[test]
        fn folding_preserves_unitary(gates in prop::collection::vec(arb_gate(), 0..=20)) {
            let s = GateSequence::new("r", gates).unwrap();
            let folded = fold(&s, &timing());
            prop_assert!(equal_up_to_global_phase(&schedule_unitary(&folded), &ideal_unitary(&s), 1e-9).unwrap());
        }

        #[test]
        fn refolding_is_stable(gates in prop::collection::vec(arb_gate(), 0..=20)) {
            let s = GateSequence::new("r", gates).unwrap();
            let once = fold(&s, &timing());
            let twice = fold(&once.to_sequence("again"), &timing());
            prop_assert!(physically_equivalent(&once, &twice, 1e-9));
            prop_assert!((once.total_duration - twice.total_duration).abs() < 1e-6);
        }
    }
}
