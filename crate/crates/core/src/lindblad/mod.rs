//! Open-system evolution of a single qubit.
//!
//! ```text
//! dρ/dt = −i[H(t), ρ] + (1/T1)·D[σ−]ρ + (1/(2·Tphi))·D[σz]ρ
//! D[L]ρ = LρL† − ½{L†L, ρ}
//! ```
//!
//! `|0⟩` is the ground state (σz = +1) and `σ− = |0⟩⟨1|`. Times are in ns,
//! `T1`/`Tphi` in µs, Hamiltonian coefficients in rad/ns.

mod protocol;
mod quadrature;
mod sweep;

pub use protocol::{
    run_protocol, simulate_curve, InitialState, ProtocolError, ProtocolResult, ProtocolSettings,
};
pub use quadrature::gauss_hermite;
pub use sweep::{sweep, CurvePoint, FidelityCurve, SweepError};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lowering::{Hamiltonian, HamiltonianTrace, InterferenceModel};
use crate::su2::{bloch_of, BlochVector, ComplexMatrix2};

/// Largest tolerated trace drift before renormalisation is refused.
pub const MAX_TRACE_DRIFT: f64 = 1e-8;
/// Most negative tolerated eigenvalue.
pub const MAX_NEGATIVITY: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrationError {
    #[error("trace drifted by {drift:e} at t = {time_ns} ns; reduce the time step")]
    TraceDrift { drift: f64, time_ns: f64 },
    #[error("state lost positivity (eigenvalue {eigenvalue:e}) at t = {time_ns} ns; reduce the time step")]
    Negativity { eigenvalue: f64, time_ns: f64 },
    #[error("invalid initial state: {0}")]
    InvalidState(String),
}

/// 2×2 Hermitian, unit-trace, positive semidefinite state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    ground: f64,
    excited: f64,
    /// ρ₀₁
    coherence: Complex64,
}

impl DensityMatrix {
    pub fn ground() -> Self {
        Self {
            ground: 1.0,
            excited: 0.0,
            coherence: Complex64::new(0.0, 0.0),
        }
    }

    pub fn excited() -> Self {
        Self {
            ground: 0.0,
            excited: 1.0,
            coherence: Complex64::new(0.0, 0.0),
        }
    }

    /// `|ψ⟩⟨ψ|` for a normalised ket `(a, b)`.
    pub fn pure(a: Complex64, b: Complex64) -> Self {
        let n = a.norm_sqr() + b.norm_sqr();
        Self {
            ground: a.norm_sqr() / n,
            excited: b.norm_sqr() / n,
            coherence: a * b.conj() / n,
        }
    }

    pub fn from_matrix(m: &ComplexMatrix2) -> Result<Self, IntegrationError> {
        let herm = (m.get(0, 1) - m.get(1, 0).conj()).norm()
            + m.get(0, 0).im.abs()
            + m.get(1, 1).im.abs();
        if herm > 1e-10 {
            return Err(IntegrationError::InvalidState(format!(
                "not Hermitian (deviation {herm:e})"
            )));
        }
        let rho = Self {
            ground: m.get(0, 0).re,
            excited: m.get(1, 1).re,
            coherence: m.get(0, 1),
        };
        if (rho.trace() - 1.0).abs() > 1e-9 {
            return Err(IntegrationError::InvalidState(format!(
                "trace is {}",
                rho.trace()
            )));
        }
        if rho.min_eigenvalue() < -1e-9 {
            return Err(IntegrationError::InvalidState(format!(
                "negative eigenvalue {}",
                rho.min_eigenvalue()
            )));
        }
        Ok(rho)
    }

    pub fn matrix(&self) -> ComplexMatrix2 {
        ComplexMatrix2::new(
            Complex64::new(self.ground, 0.0),
            self.coherence,
            self.coherence.conj(),
            Complex64::new(self.excited, 0.0),
        )
    }

    pub fn trace(&self) -> f64 {
        self.ground + self.excited
    }

    pub fn excited_population(&self) -> f64 {
        self.excited
    }

    pub fn ground_population(&self) -> f64 {
        self.ground
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let mean = 0.5 * (self.ground + self.excited);
        let half_gap = (0.25 * (self.ground - self.excited).powi(2) + self.coherence.norm_sqr()).sqrt();
        mean - half_gap
    }

    pub fn bloch(&self) -> BlochVector {
        bloch_of(&self.matrix())
    }

    /// `U ρ U†`
    pub fn conjugate(&self, u: &ComplexMatrix2) -> Self {
        let m = *u * self.matrix() * u.dagger();
        Self {
            ground: m.get(0, 0).re,
            excited: m.get(1, 1).re,
            coherence: m.get(0, 1),
        }
    }

    /// `⟨ψ|ρ|ψ⟩` for a normalised ket.
    pub fn overlap(&self, ket: [Complex64; 2]) -> f64 {
        let [a, b] = ket;
        self.ground * a.norm_sqr()
            + self.excited * b.norm_sqr()
            + 2.0 * (a.conj() * self.coherence * b).re
    }

    fn axpy(&self, h: f64, k: &Derivative) -> Self {
        Self {
            ground: self.ground + h * k.ground,
            excited: self.excited - h * k.ground,
            coherence: self.coherence + k.coherence * h,
        }
    }
}

/// Dissipation and coherent-error parameters of a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Amplitude damping time in µs (`f64::INFINITY` disables).
    pub t1_us: f64,
    /// Pure dephasing time in µs (`f64::INFINITY` disables).
    pub tphi_us: f64,
    /// Drive amplitude error, rad/ns.
    pub eps_err: f64,
    /// Detuning error, rad/ns.
    pub del_err: f64,
    /// Standard deviation of the quasi-static detuning ensemble, rad/ns.
    pub quasistatic_sigma: f64,
    pub interference: InterferenceModel,
}

impl NoiseModel {
    /// Everything off.
    pub fn noiseless() -> Self {
        Self {
            t1_us: f64::INFINITY,
            tphi_us: f64::INFINITY,
            eps_err: 0.0,
            del_err: 0.0,
            quasistatic_sigma: 0.0,
            interference: InterferenceModel::None,
        }
    }

    /// Built-in defaults for a gate of duration `t_g` (none are device values):
    /// T1 = Tphi = 100 µs, δθ = 0.01 rad, δφ = 0.01 rad, quasi-static
    /// σ = 2π·5 kHz, tail-overlap interference with extension `t_g/2`.
    pub fn default_for_gate(t_g_ns: f64) -> Self {
        Self {
            t1_us: 100.0,
            tphi_us: 100.0,
            eps_err: eps_err_from_rotation_error(0.01, t_g_ns),
            del_err: del_err_from_phase_error(0.01, t_g_ns),
            quasistatic_sigma: DEFAULT_QUASISTATIC_SIGMA,
            interference: InterferenceModel::tail_overlap_default(t_g_ns),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.t1_us > 0.0) {
            return Err(format!("T1 must be positive or infinite, got {}", self.t1_us));
        }
        if !(self.tphi_us > 0.0) {
            return Err(format!("Tphi must be positive or infinite, got {}", self.tphi_us));
        }
        if !(self.quasistatic_sigma >= 0.0 && self.quasistatic_sigma.is_finite()) {
            return Err(format!(
                "quasi-static sigma must be non-negative, got {}",
                self.quasistatic_sigma
            ));
        }
        if !(self.eps_err.is_finite() && self.del_err.is_finite()) {
            return Err("coherent error parameters must be finite".into());
        }
        self.interference.validate().map_err(|e| e.to_string())
    }

    /// `(γ1, Γ2)` per ns: population decay and total coherence decay.
    pub fn rates(&self) -> DecayRates {
        let per_ns = |t_us: f64| {
            if t_us.is_infinite() {
                0.0
            } else {
                1.0 / (t_us * 1e3)
            }
        };
        let gamma1 = per_ns(self.t1_us);
        let gamma_phi = per_ns(self.tphi_us);
        DecayRates {
            gamma1,
            gamma2: 0.5 * gamma1 + gamma_phi,
        }
    }
}

/// 2π·5 kHz in rad/ns.
pub const DEFAULT_QUASISTATIC_SIGMA: f64 = 2.0 * std::f64::consts::PI * 5e-6;

/// `ε_err` giving over-rotation `δθ = ε_err·t_g`.
pub fn eps_err_from_rotation_error(delta_theta: f64, t_g_ns: f64) -> f64 {
    delta_theta / t_g_ns
}

/// `δ_err` giving phase error `δφ = δ_err/ε̄` with `ε̄ = π/t_g`.
pub fn del_err_from_phase_error(delta_phi: f64, t_g_ns: f64) -> f64 {
    delta_phi * std::f64::consts::PI / t_g_ns
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRates {
    pub gamma1: f64,
    pub gamma2: f64,
}

#[derive(Debug, Clone, Copy)]
struct Derivative {
    ground: f64,
    coherence: Complex64,
}

#[inline]
fn rhs(h: &Hamiltonian, rho: &DensityMatrix, rates: &DecayRates) -> Derivative {
    // H₀₁ = (ωx − iωy)/2
    let h01 = Complex64::new(0.5 * h.omega_x, -0.5 * h.omega_y);
    let c = rho.coherence;
    let ground = 2.0 * (h01 * c.conj()).im + rates.gamma1 * rho.excited;
    let commutator = c * h.delta + h01 * (rho.excited - rho.ground);
    let coherence = Complex64::new(commutator.im, -commutator.re) - c * rates.gamma2;
    Derivative { ground, coherence }
}

/// Full Lindblad generator built from matrix products.
///
/// Slow but structurally independent of the integrator's closed-form
/// right-hand side; kept as a reference implementation.
pub fn lindblad_generator(h: &ComplexMatrix2, rho: &ComplexMatrix2, noise: &NoiseModel) -> ComplexMatrix2 {
    let minus_i = Complex64::new(0.0, -1.0);
    let mut out = h.commutator(rho).scale(minus_i);
    let dissipator = |l: &ComplexMatrix2, rate: f64| {
        let ldl = l.dagger() * *l;
        let anti = ldl * *rho + *rho * ldl;
        (*l * *rho * l.dagger() - anti.scale(Complex64::new(0.5, 0.0))).scale(Complex64::new(rate, 0.0))
    };
    let rates = noise.rates();
    let lowering = ComplexMatrix2::new(
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
    );
    out = out + dissipator(&lowering, rates.gamma1);
    let gamma_phi = rates.gamma2 - 0.5 * rates.gamma1;
    out + dissipator(&ComplexMatrix2::sigma_z(), 0.5 * gamma_phi)
}

/// Fixed-step RK4 integration in progress over a Hamiltonian trace.
#[derive(Debug, Clone)]
pub struct Evolution {
    trace: HamiltonianTrace,
    rates: DecayRates,
    state: DensityMatrix,
    step: usize,
}

impl Evolution {
    pub fn new(rho0: DensityMatrix, trace: HamiltonianTrace, noise: &NoiseModel) -> Self {
        Self {
            trace,
            rates: noise.rates(),
            state: rho0,
            step: 0,
        }
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn time_ns(&self) -> f64 {
        self.step as f64 * self.trace.dt()
    }

    pub fn trace(&self) -> &HamiltonianTrace {
        &self.trace
    }

    /// Continue from the current state under a different trace sharing the same grid.
    pub fn switch_trace(&mut self, trace: HamiltonianTrace) {
        self.trace = trace;
    }

    fn rk4_step(&mut self) {
        let dt = self.trace.dt();
        let [h0, hm, h1] = self.trace.step(self.step);
        let rho = &self.state;
        let k1 = rhs(&h0, rho, &self.rates);
        let k2 = rhs(&hm, &rho.axpy(0.5 * dt, &k1), &self.rates);
        let k3 = rhs(&hm, &rho.axpy(0.5 * dt, &k2), &self.rates);
        let k4 = rhs(&h1, &rho.axpy(dt, &k3), &self.rates);
        let sum = Derivative {
            ground: k1.ground + 2.0 * k2.ground + 2.0 * k3.ground + k4.ground,
            coherence: k1.coherence + k2.coherence * 2.0 + k3.coherence * 2.0 + k4.coherence,
        };
        self.state = rho.axpy(dt / 6.0, &sum);
        self.step += 1;
    }

    /// Integrate up to grid step `target` (clamped to the end of the trace).
    pub fn advance_to(&mut self, target: usize) {
        let target = target.min(self.trace.n_steps());
        while self.step < target {
            self.rk4_step();
        }
    }

    pub fn run_to_end(&mut self) {
        self.advance_to(self.trace.n_steps());
    }

    /// Check trace and positivity, renormalising small drift.
    pub fn checked_state(&self) -> Result<DensityMatrix, IntegrationError> {
        check_state(&self.state, self.time_ns())
    }
}

fn check_state(rho: &DensityMatrix, time_ns: f64) -> Result<DensityMatrix, IntegrationError> {
    let tr = rho.trace();
    let drift = (tr - 1.0).abs();
    if !(drift <= MAX_TRACE_DRIFT) {
        return Err(IntegrationError::TraceDrift { drift, time_ns });
    }
    let eig = rho.min_eigenvalue();
    if !(eig >= -MAX_NEGATIVITY) {
        return Err(IntegrationError::Negativity {
            eigenvalue: eig,
            time_ns,
        });
    }
    Ok(DensityMatrix {
        ground: rho.ground / tr,
        excited: rho.excited / tr,
        coherence: rho.coherence / tr,
    })
}

/// Integrate the master equation across the whole trace.
pub fn evolve(
    rho0: &DensityMatrix,
    trace: &HamiltonianTrace,
    noise: &NoiseModel,
) -> Result<DensityMatrix, IntegrationError> {
    let mut ev = Evolution::new(*rho0, trace.clone(), noise);
    ev.run_to_end();
    ev.checked_state()
}

/// States every `stride` steps, including the initial and final state.
pub fn evolve_trajectory(
    rho0: &DensityMatrix,
    trace: &HamiltonianTrace,
    noise: &NoiseModel,
    stride: usize,
) -> Result<Vec<(f64, DensityMatrix)>, IntegrationError> {
    let stride = stride.max(1);
    let mut ev = Evolution::new(*rho0, trace.clone(), noise);
    let mut out = vec![(0.0, *rho0)];
    let n = trace.n_steps();
    while ev.step_index() < n {
        ev.advance_to(ev.step_index() + stride);
        out.push((ev.time_ns(), ev.checked_state()?));
    }
    Ok(out)
}
