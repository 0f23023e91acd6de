//! Python bindings: sequence construction, frame folding, simulation, sweeps and fits.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use ::vzsim::analysis::{self, FitSummary};
use ::vzsim::config::{self, ExperimentConfig as CoreConfig, RunManifest};
use ::vzsim::frame::{self, PulseSchedule as CoreSchedule, ScheduleConfig};
use ::vzsim::gate_ir::{self, CompilationStrategy, Gate, GateSequence as CoreSequence, SequenceOptions, SequenceSpec, XbarVariant};
use ::vzsim::lindblad::{self, FidelityCurve as CoreCurve, InitialState, NoiseModel as CoreNoise, ProtocolSettings};
use ::vzsim::lowering::PulseShape;

fn value_error(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_strategy(s: &str) -> PyResult<CompilationStrategy> {
    match s {
        "sym" => Ok(CompilationStrategy::Symmetric),
        "asym" => Ok(CompilationStrategy::Asymmetric),
        _ => Err(value_error(format!("unknown strategy `{s}` (expected sym or asym)"))),
    }
}

fn parse_xbar(s: &str) -> PyResult<XbarVariant> {
    match s {
        "plus_first" => Ok(XbarVariant::PlusFirst),
        "minus_first" => Ok(XbarVariant::MinusFirst),
        _ => Err(value_error(format!("unknown Xbar variant `{s}` (expected plus_first or minus_first)"))),
    }
}

fn timing(tau_ns: f64, t_g_ns: Option<f64>) -> PyResult<ScheduleConfig> {
    ScheduleConfig::new(tau_ns, t_g_ns.unwrap_or(tau_ns)).map_err(value_error)
}

/// Time-ordered list of gates.
#[pyclass(name = "GateSequence", module = "vzsim", frozen, skip_from_py_object)]
#[derive(Clone)]
struct GateSequence(CoreSequence);

#[pymethods]
impl GateSequence {
    /// Build one cycle from a spec such as `"XY4"`, `"YY:asym"` or `"UR4:sym@2"`.
    #[staticmethod]
    #[pyo3(signature = (spec, tau_ns = config::DEFAULT_TAU_NS, xbar_variant = "plus_first"))]
    fn build(spec: &str, tau_ns: f64, xbar_variant: &str) -> PyResult<Self> {
        let spec: SequenceSpec = spec.parse().map_err(value_error)?;
        let options = SequenceOptions {
            xbar: parse_xbar(xbar_variant)?,
        };
        spec.build(tau_ns, options).map(Self).map_err(value_error)
    }

    /// A single compiled gate: `X`, `SX`, `Y` or `Xbar`.
    #[staticmethod]
    #[pyo3(signature = (name, strategy = "sym", xbar_variant = "plus_first"))]
    fn gate(name: &str, strategy: &str, xbar_variant: &str) -> PyResult<Self> {
        let seq = match name {
            "X" => CoreSequence::new("X", vec![Gate::x()]).map_err(value_error)?,
            "SX" => CoreSequence::new("SX", vec![Gate::sx()]).map_err(value_error)?,
            "Y" => gate_ir::compile_y(parse_strategy(strategy)?),
            "Xbar" => gate_ir::compile_xbar_variant(parse_xbar(xbar_variant)?),
            _ => return Err(value_error(format!("unknown gate `{name}` (expected X, SX, Y or Xbar)"))),
        };
        Ok(Self(seq))
    }

    fn repeat(&self, n: usize) -> Self {
        Self(self.0.repeat(n))
    }

    fn inverse(&self) -> Self {
        Self(self.0.inverse())
    }

    /// Ideal 2x2 unitary as nested lists of complex numbers.
    fn unitary(&self) -> [[Complex64; 2]; 2] {
        gate_ir::ideal_unitary(&self.0).0
    }

    /// Fold virtual Z gates into pulse phases.
    #[pyo3(signature = (tau_ns = config::DEFAULT_TAU_NS, t_g_ns = None))]
    fn fold(&self, tau_ns: f64, t_g_ns: Option<f64>) -> PyResult<PulseSchedule> {
        Ok(PulseSchedule(frame::fold(&self.0, &timing(tau_ns, t_g_ns)?)))
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("GateSequence({})", self.0)
    }
}

/// Physical pulses with folded phases and the residual frame rotation.
#[pyclass(name = "PulseSchedule", module = "vzsim", frozen)]
struct PulseSchedule(CoreSchedule);

#[pymethods]
impl PulseSchedule {
    /// `(phase_rad, angle_rad, start_ns, duration_ns)` per pulse.
    #[getter]
    fn pulses(&self) -> Vec<(f64, f64, f64, f64)> {
        self.0.pulses.iter().map(|p| (p.phase, p.angle, p.start, p.duration)).collect()
    }

    #[getter]
    fn residual_frame(&self) -> f64 {
        self.0.residual_frame
    }

    #[getter]
    fn total_duration(&self) -> f64 {
        self.0.total_duration
    }

    #[pyo3(signature = (other, tol = 1e-9))]
    fn equivalent(&self, other: &PulseSchedule, tol: f64) -> bool {
        frame::physically_equivalent(&self.0, &other.0, tol)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }
}

/// Dissipation rates, coherent errors and pulse interference.
#[pyclass(name = "NoiseModel", module = "vzsim", frozen, from_py_object)]
#[derive(Clone)]
struct NoiseModel(CoreNoise);

#[pymethods]
impl NoiseModel {
    /// Unset arguments take the default for a pulse of length `t_g_ns`.
    #[new]
    #[pyo3(signature = (t_g_ns = config::DEFAULT_TAU_NS, t1_us = None, tphi_us = None, eps_err = None, del_err = None, quasistatic_sigma = None))]
    fn new(
        t_g_ns: f64,
        t1_us: Option<f64>,
        tphi_us: Option<f64>,
        eps_err: Option<f64>,
        del_err: Option<f64>,
        quasistatic_sigma: Option<f64>,
    ) -> PyResult<Self> {
        let base = CoreNoise::default_for_gate(t_g_ns);
        let noise = CoreNoise {
            t1_us: t1_us.unwrap_or(base.t1_us),
            tphi_us: tphi_us.unwrap_or(base.tphi_us),
            eps_err: eps_err.unwrap_or(base.eps_err),
            del_err: del_err.unwrap_or(base.del_err),
            quasistatic_sigma: quasistatic_sigma.unwrap_or(base.quasistatic_sigma),
            ..base
        };
        noise.validate().map_err(value_error)?;
        Ok(Self(noise))
    }

    #[staticmethod]
    fn noiseless() -> Self {
        Self(CoreNoise::noiseless())
    }

    #[getter]
    fn t1_us(&self) -> f64 {
        self.0.t1_us
    }

    #[getter]
    fn tphi_us(&self) -> f64 {
        self.0.tphi_us
    }

    #[getter]
    fn eps_err(&self) -> f64 {
        self.0.eps_err
    }

    #[getter]
    fn del_err(&self) -> f64 {
        self.0.del_err
    }

    #[getter]
    fn quasistatic_sigma(&self) -> f64 {
        self.0.quasistatic_sigma
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.0)
    }
}

/// Fit of `a + b·exp(−t/T_D)`.
#[pyclass(name = "DecayFit", module = "vzsim", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct DecayFit(analysis::DecayFit);

#[pymethods]
impl DecayFit {
    #[getter]
    fn a(&self) -> f64 {
        self.0.a
    }

    #[getter]
    fn b(&self) -> f64 {
        self.0.b
    }

    #[getter]
    fn t_d_us(&self) -> f64 {
        self.0.t_d_us
    }

    #[getter]
    fn rms_residual(&self) -> f64 {
        self.0.rms_residual
    }

    #[getter]
    fn converged(&self) -> bool {
        self.0.converged
    }

    /// Model value at `t_ns`.
    fn __call__(&self, t_ns: f64) -> f64 {
        self.0.model(t_ns)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.0)
    }
}

/// One simulated fidelity curve.
#[pyclass(name = "FidelityCurve", module = "vzsim", frozen)]
struct FidelityCurve(CoreCurve);

#[pymethods]
impl FidelityCurve {
    #[getter]
    fn label(&self) -> String {
        self.0.label()
    }

    #[getter]
    fn sequence(&self) -> String {
        self.0.sequence_column()
    }

    #[getter]
    fn strategy(&self) -> String {
        self.0.strategy.to_string()
    }

    #[getter]
    fn spacing_multiplier(&self) -> f64 {
        self.0.spacing_multiplier
    }

    #[getter]
    fn initial_state(&self) -> String {
        self.0.initial_state.to_string()
    }

    #[getter]
    fn cycles(&self) -> Vec<usize> {
        self.0.points.iter().map(|p| p.cycles).collect()
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.0.times()
    }

    #[getter]
    fn exact(&self) -> Vec<f64> {
        self.0.exact()
    }

    #[getter]
    fn sampled(&self) -> Vec<Option<f64>> {
        self.0.points.iter().map(|p| p.fidelity_sampled).collect()
    }

    #[getter]
    fn fit(&self) -> Option<DecayFit> {
        self.0.fit.map(DecayFit)
    }

    fn __repr__(&self) -> String {
        format!("FidelityCurve({}, {} points)", self.0.label(), self.0.points.len())
    }
}

/// Experiment description loaded from JSON.
#[pyclass(name = "ExperimentConfig", module = "vzsim", frozen)]
struct ExperimentConfig(CoreConfig);

#[pymethods]
impl ExperimentConfig {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        config::parse_config(text).map(Self).map_err(value_error)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        config::load_config(path).map(Self).map_err(value_error)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    fn save(&self, path: &str) -> PyResult<()> {
        config::save_config(&self.0, path).map_err(value_error)
    }
}

/// Whether two sequence specs fold to the same physical pulses.
#[pyfunction]
#[pyo3(signature = (a, b, tau_ns = config::DEFAULT_TAU_NS, t_g_ns = None, tol = 1e-9))]
fn equivalent(a: &str, b: &str, tau_ns: f64, t_g_ns: Option<f64>, tol: f64) -> PyResult<bool> {
    let fold = |s: &str| -> PyResult<CoreSchedule> {
        let spec: SequenceSpec = s.parse().map_err(value_error)?;
        let seq = spec.build(tau_ns, SequenceOptions::default()).map_err(value_error)?;
        Ok(frame::fold(&seq, &timing(tau_ns * spec.multiplier, t_g_ns)?))
    };
    Ok(frame::physically_equivalent(&fold(a)?, &fold(b)?, tol))
}

/// Run the prepare / decouple / measure protocol for one cycle count.
///
/// Returns `(fidelity_exact, fidelity_sampled)`; the sampled value is `None`
/// when `shots` is 0.
#[pyfunction]
#[pyo3(signature = (sequence, cycles, initial = "plus", noise = None, shots = config::DEFAULT_SHOTS, seed = 0, dt_ns = config::DEFAULT_DT_NS, physical_preparation = false, tau_ns = config::DEFAULT_TAU_NS, t_g_ns = None, spacing_multiplier = 1.0))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    sequence: &GateSequence,
    cycles: usize,
    initial: &str,
    noise: Option<NoiseModel>,
    shots: u64,
    seed: u64,
    dt_ns: f64,
    physical_preparation: bool,
    tau_ns: f64,
    t_g_ns: Option<f64>,
    spacing_multiplier: f64,
) -> PyResult<(f64, Option<f64>)> {
    let initial: InitialState = initial.parse().map_err(value_error)?;
    let t_g = t_g_ns.unwrap_or(tau_ns);
    let noise = noise.map_or_else(|| CoreNoise::default_for_gate(t_g), |n| n.0);
    let settings = ProtocolSettings {
        timing: timing(tau_ns * spacing_multiplier, Some(t_g))?,
        shape: PulseShape::gaussian(t_g).map_err(value_error)?,
        dt_ns,
        physical_preparation,
    };
    let cycle = sequence.0.clone();
    let r = py
        .detach(|| lindblad::run_protocol(initial, &cycle, cycles, &noise, shots, seed, &settings))
        .map_err(value_error)?;
    Ok((r.fidelity_exact, r.fidelity_sampled))
}

/// Simulate every curve described by `config`.
#[pyfunction]
fn sweep(py: Python<'_>, config: &ExperimentConfig) -> PyResult<Vec<FidelityCurve>> {
    let curves = py.detach(|| lindblad::sweep(&config.0)).map_err(value_error)?;
    Ok(curves.into_iter().map(FidelityCurve).collect())
}

/// Write the results CSV and its JSON sidecar.
#[pyfunction]
#[pyo3(signature = (config, curves, path, timestamp = None))]
fn write_results(config: &ExperimentConfig, curves: Vec<PyRef<'_, FidelityCurve>>, path: &str, timestamp: Option<u64>) -> PyResult<()> {
    let curves: Vec<CoreCurve> = curves.iter().map(|c| c.0.clone()).collect();
    let fits: Vec<FitSummary> = curves.iter().filter_map(CoreCurve::summary).collect();
    let manifest = RunManifest::new(&config.0, timestamp);
    config::write_results(&curves, &fits, &manifest, path).map_err(value_error)
}

#[pyfunction]
fn fit_decay(times_ns: Vec<f64>, fidelities: Vec<f64>) -> PyResult<DecayFit> {
    analysis::fit_decay(&times_ns, &fidelities).map(DecayFit).map_err(value_error)
}

/// Dominant residual oscillation as `(amplitude, period_ns)`.
#[pyfunction]
fn oscillation_metric(times_ns: Vec<f64>, fidelities: Vec<f64>, fit: &DecayFit) -> PyResult<(f64, f64)> {
    let m = analysis::oscillation_metric(&times_ns, &fidelities, &fit.0).map_err(value_error)?;
    Ok((m.amplitude, m.period_ns))
}

#[pymodule]
fn vzsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<GateSequence>()?;
    m.add_class::<PulseSchedule>()?;
    m.add_class::<NoiseModel>()?;
    m.add_class::<DecayFit>()?;
    m.add_class::<FidelityCurve>()?;
    m.add_class::<ExperimentConfig>()?;
    m.add_function(wrap_pyfunction!(equivalent, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(write_results, m)?)?;
    m.add_function(wrap_pyfunction!(fit_decay, m)?)?;
    m.add_function(wrap_pyfunction!(oscillation_metric, m)?)?;
    Ok(())
}
