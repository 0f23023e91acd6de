//! Closed-form 2×2 algebra for single-qubit rotations.
//!
//! Every unitary here is built from half-angle formulas rather than a numerical
//! matrix exponential, so algebraic identities hold to rounding error.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default tolerance for [`equal_up_to_global_phase`].
pub const GLOBAL_PHASE_TOL: f64 = 1e-10;

const UNITARITY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Su2Error {
    #[error("matrix is not unitary (max |U†U - I| = {deviation:e})")]
    NotUnitary { deviation: f64 },
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Row-major 2×2 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexMatrix2(pub [[Complex64; 2]; 2]);

impl ComplexMatrix2 {
    pub const fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Self([[a, b], [c, d]])
    }

    pub const fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    pub const fn zero() -> Self {
        Self::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub const fn sigma_x() -> Self {
        Self::new(ZERO, ONE, ONE, ZERO)
    }

    pub const fn sigma_y() -> Self {
        Self::new(ZERO, Complex64::new(0.0, -1.0), I, ZERO)
    }

    pub const fn sigma_z() -> Self {
        Self::new(ONE, ZERO, ZERO, Complex64::new(-1.0, 0.0))
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[row][col]
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let m = &self.0;
        Self::new(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s)
    }

    pub fn dagger(&self) -> Self {
        let m = &self.0;
        Self::new(m[0][0].conj(), m[1][0].conj(), m[0][1].conj(), m[1][1].conj())
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> Complex64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise distance to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (*self - *other).max_abs()
    }

    /// max |U†U − I| over entries.
    pub fn unitarity_deviation(&self) -> f64 {
        (self.dagger() * *self - Self::identity()).max_abs()
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_deviation() <= tol
    }

    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut acc = Self::identity();
        let mut base = *self;
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            n >>= 1;
        }
        acc
    }
}

impl Mul for ComplexMatrix2 {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        let a = &self.0;
        let b = &rhs.0;
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

impl Add for ComplexMatrix2 {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        let a = &self.0;
        let b = &rhs.0;
        Self::new(
            a[0][0] + b[0][0],
            a[0][1] + b[0][1],
            a[1][0] + b[1][0],
            a[1][1] + b[1][1],
        )
    }
}

impl Sub for ComplexMatrix2 {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for ComplexMatrix2 {
    type Output = Self;

    fn neg(self) -> Self {
        self.scale(-ONE)
    }
}

impl fmt::Display for ComplexMatrix2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.0;
        write!(
            f,
            "[[{:.6}, {:.6}], [{:.6}, {:.6}]]",
            m[0][0], m[0][1], m[1][0], m[1][1]
        )
    }
}

/// Reduce an angle to `[0, 2π)`. Values within 1e-12 of 2π snap to 0.
pub fn wrap_angle(angle: f64) -> f64 {
    let r = angle.rem_euclid(TAU);
    if TAU - r <= 1e-12 {
        0.0
    } else {
        r
    }
}

/// Shortest distance between two angles on the circle.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// A rotation `R_φ(θ)` about an axis in the equatorial plane.
///
/// `phi` is kept in `[0, 2π)`; `theta` keeps its sign since `R_x(π)` and
/// `R_x(−π)` are different drives even though they agree up to global phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rotation {
    phi: f64,
    theta: f64,
}

impl Rotation {
    pub fn new(phi: f64, theta: f64) -> Self {
        Self {
            phi: wrap_angle(phi),
            theta,
        }
    }

    pub fn x(theta: f64) -> Self {
        Self::new(0.0, theta)
    }

    pub fn y(theta: f64) -> Self {
        Self::new(PI / 2.0, theta)
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// `exp[−i(θ/2)(cos φ σx + sin φ σy)]` in closed form.
pub fn rotation_unitary(r: Rotation) -> ComplexMatrix2 {
    let (s, c) = (r.theta / 2.0).sin_cos();
    let (sp, cp) = r.phi.sin_cos();
    // −i·s·(cos φ σx + sin φ σy) has off-diagonals −i·s·e^{∓iφ}.
    let upper = Complex64::new(-s * sp, -s * cp);
    let lower = Complex64::new(s * sp, -s * cp);
    ComplexMatrix2::new(Complex64::new(c, 0.0), upper, lower, Complex64::new(c, 0.0))
}

/// `diag(e^{−iα/2}, e^{+iα/2})`.
pub fn rz_unitary(alpha: f64) -> ComplexMatrix2 {
    let half = alpha / 2.0;
    ComplexMatrix2::new(
        Complex64::from_polar(1.0, -half),
        ZERO,
        ZERO,
        Complex64::from_polar(1.0, half),
    )
}

/// True iff `|Tr(u†v)| ≥ 2 − tol`.
pub fn equal_up_to_global_phase(
    u: &ComplexMatrix2,
    v: &ComplexMatrix2,
    tol: f64,
) -> Result<bool, Su2Error> {
    for m in [u, v] {
        let deviation = m.unitarity_deviation();
        if deviation > UNITARITY_TOL {
            return Err(Su2Error::NotUnitary { deviation });
        }
    }
    Ok((u.dagger() * *v).trace().norm() >= 2.0 - tol)
}

/// The unit scalar `g` minimising `‖v − g·u‖`, i.e. `Tr(u†v)/|Tr(u†v)|`.
///
/// Returns `None` when the overlap vanishes.
pub fn relative_phase(u: &ComplexMatrix2, v: &ComplexMatrix2) -> Option<Complex64> {
    let overlap = (u.dagger() * *v).trace();
    if overlap.norm() < 1e-12 {
        None
    } else {
        Some(overlap / overlap.norm())
    }
}

/// `1`, `-1`, `i`, `-i` when the unit scalar is one of those, else `exp(i*a)`.
pub fn format_phase(phase: Complex64) -> String {
    let close = |re: f64, im: f64| (phase - Complex64::new(re, im)).norm() < 1e-9;
    if close(1.0, 0.0) {
        "1".into()
    } else if close(-1.0, 0.0) {
        "-1".into()
    } else if close(0.0, 1.0) {
        "i".into()
    } else if close(0.0, -1.0) {
        "-i".into()
    } else {
        format!("exp(i*{:.6})", phase.arg())
    }
}

/// Bloch vector components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// Pauli expectations `Tr(ρ σ_α)` of a 2×2 density matrix.
pub fn bloch_of(rho: &ComplexMatrix2) -> BlochVector {
    let m = &rho.0;
    let coherence = m[1][0];
    BlochVector {
        x: 2.0 * coherence.re,
        y: 2.0 * coherence.im,
        z: (m[0][0] - m[1][1]).re,
    }
}
