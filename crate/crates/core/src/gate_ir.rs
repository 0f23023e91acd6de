//! Gate-level IR, Y / X̄ compilation strategies and the DD sequence library.
//!
//! **Ordering convention.** A [`GateSequence`] stores gates in *time order*:
//! index 0 is applied first. Operator products in the usual right-to-left
//! notation are therefore stored reversed, e.g. `Y f X f Y f X f` is stored as
//! `[f, X, f, Y, f, X, f, Y]`. Everything in this crate uses that convention.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::su2::{rotation_unitary, rz_unitary, ComplexMatrix2, Rotation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IrError {
    #[error("unknown sequence name `{0}` (expected XY4, UR4, YY, XXbar or Free)")]
    UnknownSequence(String),
    #[error("unknown compilation strategy `{0}` (expected sym or asym)")]
    UnknownStrategy(String),
    #[error("{0} contains X̄, which only has a symmetric compilation")]
    AsymmetricXbar(SequenceName),
    #[error("free evolution duration must be a finite non-negative number, got {0}")]
    NegativeDuration(f64),
    #[error("bad sequence spec `{spec}`: {reason} (expected NAME[:sym|asym][@multiplier])")]
    BadSpec { spec: String, reason: String },
}

/// One IR element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    /// A driven rotation in the equatorial plane.
    Physical(Rotation),
    /// Instantaneous frame update `R_z(α)`.
    VirtualZ(f64),
    /// Undriven interval in nanoseconds.
    FreeEvolution(f64),
}

impl Gate {
    pub fn x() -> Self {
        Gate::Physical(Rotation::x(PI))
    }

    pub fn sx() -> Self {
        Gate::Physical(Rotation::x(PI / 2.0))
    }

    pub fn vz(alpha: f64) -> Self {
        Gate::VirtualZ(alpha)
    }

    pub fn free(duration_ns: f64) -> Self {
        debug_assert!(duration_ns >= 0.0);
        Gate::FreeEvolution(duration_ns)
    }

    /// Closed-form unitary; free evolution is the identity in the noiseless frame.
    pub fn unitary(&self) -> ComplexMatrix2 {
        match *self {
            Gate::Physical(r) => rotation_unitary(r),
            Gate::VirtualZ(alpha) => rz_unitary(alpha),
            Gate::FreeEvolution(_) => ComplexMatrix2::identity(),
        }
    }

    pub fn is_physical(&self) -> bool {
        matches!(self, Gate::Physical(_))
    }
}

/// Render an angle as a small rational multiple of π where possible.
pub fn format_angle(angle: f64) -> String {
    if angle == 0.0 {
        return "0".into();
    }
    let ratio = angle / PI;
    for den in 1..=12i64 {
        let num = ratio * den as f64;
        let rounded = num.round();
        if (num - rounded).abs() < 1e-9 && rounded != 0.0 {
            let num = rounded as i64;
            let sign = if num < 0 { "-" } else { "" };
            let coef = match num.abs() {
                1 => String::new(),
                n => n.to_string(),
            };
            return if den == 1 {
                format!("{sign}{coef}pi")
            } else {
                format!("{sign}{coef}pi/{den}")
            };
        }
    }
    format!("{angle:.6}")
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::VirtualZ(alpha) => write!(f, "Rz({})", format_angle(alpha)),
            Gate::FreeEvolution(d) => write!(f, "f({d}ns)"),
            Gate::Physical(r) => {
                let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
                match (r.phi(), r.theta()) {
                    (p, t) if close(p, 0.0) && close(t, PI) => write!(f, "X"),
                    (p, t) if close(p, 0.0) && close(t, PI / 2.0) => write!(f, "SX"),
                    (p, t) if close(p, PI / 2.0) && close(t, PI) => write!(f, "Y"),
                    (p, t) => write!(f, "R({}, {})", format_angle(p), format_angle(t)),
                }
            }
        }
    }
}

/// Gates in time order plus a label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateSequence {
    pub name: String,
    pub gates: Vec<Gate>,
}

impl GateSequence {
    pub fn new(name: impl Into<String>, gates: Vec<Gate>) -> Result<Self, IrError> {
        for g in &gates {
            if let Gate::FreeEvolution(d) = *g {
                if !(d >= 0.0 && d.is_finite()) {
                    return Err(IrError::NegativeDuration(d));
                }
            }
        }
        Ok(Self {
            name: name.into(),
            gates,
        })
    }

    pub fn empty(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            gates: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn pulse_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_physical()).count()
    }

    /// `n` back-to-back copies of this sequence.
    pub fn repeat(&self, n: usize) -> Self {
        let mut gates = Vec::with_capacity(self.gates.len() * n);
        for _ in 0..n {
            gates.extend_from_slice(&self.gates);
        }
        Self {
            name: self.name.clone(),
            gates,
        }
    }

    pub fn then(mut self, other: &GateSequence) -> Self {
        self.gates.extend_from_slice(&other.gates);
        self
    }

    /// Time-reversed inverse: `ideal_unitary(s.inverse()) = ideal_unitary(s)†`.
    pub fn inverse(&self) -> Self {
        let gates = self
            .gates
            .iter()
            .rev()
            .map(|g| match *g {
                Gate::Physical(r) => Gate::Physical(Rotation::new(r.phi(), -r.theta())),
                Gate::VirtualZ(a) => Gate::VirtualZ(-a),
                f @ Gate::FreeEvolution(_) => f,
            })
            .collect();
        Self {
            name: format!("{}^-1", self.name),
            gates,
        }
    }
}

impl fmt::Display for GateSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.gates.iter().map(Gate::to_string).collect();
        write!(f, "{}", parts.join(", "))
    }
}

/// How a non-native gate is split around its physical X pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CompilationStrategy {
    #[serde(rename = "sym")]
    Symmetric,
    #[serde(rename = "asym")]
    Asymmetric,
}

impl CompilationStrategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            CompilationStrategy::Symmetric => "sym",
            CompilationStrategy::Asymmetric => "asym",
        }
    }
}

impl fmt::Display for CompilationStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CompilationStrategy {
    type Err = IrError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sym" | "symmetric" => Ok(CompilationStrategy::Symmetric),
            "asym" | "asymmetric" => Ok(CompilationStrategy::Asymmetric),
            other => Err(IrError::UnknownStrategy(other.to_string())),
        }
    }
}

/// Which of the two equivalent X̄ frame orderings to emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XbarVariant {
    /// `R_z(−π) X R_z(π)`: time order `[Rz(π), X, Rz(−π)]`.
    #[default]
    PlusFirst,
    /// `R_z(π) X R_z(−π)`: time order `[Rz(−π), X, Rz(π)]`.
    MinusFirst,
}

/// `Y` via virtual Z gates around a physical X.
///
/// Asymmetric: `X·R_z(−π)` → `[Rz(−π), X]`.
/// Symmetric: `R_z(π/2)·X·R_z(−π/2)` → `[Rz(−π/2), X, Rz(π/2)]`.
pub fn compile_y(strategy: CompilationStrategy) -> GateSequence {
    let gates = match strategy {
        CompilationStrategy::Asymmetric => vec![Gate::vz(-PI), Gate::x()],
        CompilationStrategy::Symmetric => vec![Gate::vz(-PI / 2.0), Gate::x(), Gate::vz(PI / 2.0)],
    };
    GateSequence {
        name: format!("Y:{strategy}"),
        gates,
    }
}

pub fn compile_xbar() -> GateSequence {
    compile_xbar_variant(XbarVariant::default())
}

pub fn compile_xbar_variant(variant: XbarVariant) -> GateSequence {
    let first = match variant {
        XbarVariant::PlusFirst => PI,
        XbarVariant::MinusFirst => -PI,
    };
    GateSequence {
        name: "Xbar".into(),
        gates: vec![Gate::vz(first), Gate::x(), Gate::vz(-first)],
    }
}

/// The DD sequences of the library, plus a pulse-free baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SequenceName {
    XY4,
    UR4,
    YY,
    XXbar,
    /// One idle slot per cycle; free-decay reference.
    Free,
}

impl SequenceName {
    pub const ALL: [SequenceName; 5] = [
        SequenceName::XY4,
        SequenceName::UR4,
        SequenceName::YY,
        SequenceName::XXbar,
        SequenceName::Free,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SequenceName::XY4 => "XY4",
            SequenceName::UR4 => "UR4",
            SequenceName::YY => "YY",
            SequenceName::XXbar => "XXbar",
            SequenceName::Free => "Free",
        }
    }

    /// Pulse slots (free-evolution intervals) per cycle.
    pub fn slots_per_cycle(&self) -> usize {
        match self {
            SequenceName::XY4 | SequenceName::UR4 => 4,
            SequenceName::YY | SequenceName::XXbar => 2,
            SequenceName::Free => 1,
        }
    }

    fn requires_symmetric(&self) -> bool {
        matches!(self, SequenceName::UR4 | SequenceName::XXbar)
    }
}

impl fmt::Display for SequenceName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SequenceName {
    type Err = IrError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SequenceName::ALL
            .into_iter()
            .find(|n| n.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| IrError::UnknownSequence(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SequenceOptions {
    pub xbar: XbarVariant,
}

/// One cycle of a library sequence, every pulse preceded by `f(tau)`.
pub fn build_sequence(
    name: SequenceName,
    strategy: CompilationStrategy,
    tau_ns: f64,
) -> Result<GateSequence, IrError> {
    build_sequence_with(name, strategy, tau_ns, SequenceOptions::default())
}

pub fn build_sequence_with(
    name: SequenceName,
    strategy: CompilationStrategy,
    tau_ns: f64,
    options: SequenceOptions,
) -> Result<GateSequence, IrError> {
    if !(tau_ns >= 0.0 && tau_ns.is_finite()) {
        return Err(IrError::NegativeDuration(tau_ns));
    }
    if name.requires_symmetric() && strategy == CompilationStrategy::Asymmetric {
        return Err(IrError::AsymmetricXbar(name));
    }
    let f = Gate::free(tau_ns);
    let x = GateSequence::new("X", vec![Gate::x()])?;
    let y = compile_y(strategy);
    let xbar = compile_xbar_variant(options.xbar);

    // Time-ordered pulse list; each pulse gets its own free-evolution slot.
    let pulses: Vec<&GateSequence> = match name {
        SequenceName::XY4 => vec![&x, &y, &x, &y],
        SequenceName::UR4 => vec![&x, &xbar, &xbar, &x],
        SequenceName::YY => vec![&y, &y],
        SequenceName::XXbar => vec![&x, &xbar],
        SequenceName::Free => vec![],
    };
    let mut gates = Vec::new();
    if pulses.is_empty() {
        gates.push(f);
    }
    for p in pulses {
        gates.push(f);
        gates.extend_from_slice(&p.gates);
    }
    let label = if name.requires_symmetric() || name == SequenceName::Free {
        name.to_string()
    } else {
        format!("{name}:{strategy}")
    };
    GateSequence::new(label, gates)
}

/// A sequence reference of the form `NAME[:strategy][@multiplier]`, e.g. `XY4:asym@2`.
///
/// The strategy defaults to `sym` and the spacing multiplier to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceSpec {
    pub name: SequenceName,
    pub strategy: CompilationStrategy,
    pub multiplier: f64,
}

impl SequenceSpec {
    /// One cycle with free evolution `multiplier · tau_ns` before each pulse.
    pub fn build(&self, tau_ns: f64, options: SequenceOptions) -> Result<GateSequence, IrError> {
        let mut seq = build_sequence_with(self.name, self.strategy, self.multiplier * tau_ns, options)?;
        seq.name = self.to_string();
        Ok(seq)
    }
}

impl fmt::Display for SequenceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.name, self.strategy)?;
        if self.multiplier != 1.0 {
            write!(f, "@{}", self.multiplier)?;
        }
        Ok(())
    }
}

impl FromStr for SequenceSpec {
    type Err = IrError;

    fn from_str(spec: &str) -> Result<Self, Self::Err> {
        let bad = |reason: String| IrError::BadSpec {
            spec: spec.to_string(),
            reason,
        };
        let (head, multiplier) = match spec.split_once('@') {
            Some((h, m)) => {
                let m: f64 = m.trim().parse().map_err(|_| bad(format!("`{m}` is not a number")))?;
                if !(m > 0.0 && m.is_finite()) {
                    return Err(bad(format!("multiplier must be positive, got {m}")));
                }
                (h, m)
            }
            None => (spec, 1.0),
        };
        let (name, strategy) = match head.split_once(':') {
            Some((n, s)) => (n, s.trim().parse().map_err(|e: IrError| bad(e.to_string()))?),
            None => (head, CompilationStrategy::Symmetric),
        };
        let name = name.trim().parse().map_err(|e: IrError| bad(e.to_string()))?;
        Ok(Self {
            name,
            strategy,
            multiplier,
        })
    }
}

/// Closed-system oracle: right-to-left product of the gate unitaries.
pub fn ideal_unitary(seq: &GateSequence) -> ComplexMatrix2 {
    seq.gates
        .iter()
        .fold(ComplexMatrix2::identity(), |acc, g| g.unitary() * acc)
}
