//! Spin-1/2 primitives: unit directions, the spinors they label, and 2×2
//! Hermitian effects written in the Pauli basis as `α·I + β·σ`.
//!
//! Every complex-valued computation in the crate lives here. Downstream
//! modules only ever see the real Bloch data `(α, β)`, so positivity and
//! expectation values stay closed-form.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vectors shorter than this are rejected instead of normalized.
pub const MIN_DIRECTION_NORM: f64 = 1e-9;

/// A 2×2 complex matrix, row-major.
pub type Matrix2 = [[Complex64; 2]; 2];

/// A unit vector in three dimensions.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct Direction {
    v: [f64; 3],
}

impl Direction {
    pub const X: Direction = Direction { v: [1.0, 0.0, 0.0] };
    pub const Y: Direction = Direction { v: [0.0, 1.0, 0.0] };
    pub const Z: Direction = Direction { v: [0.0, 0.0, 1.0] };

    /// Normalizes `(x, y, z)`; fails with [`Error::ZeroVector`] below
    /// [`MIN_DIRECTION_NORM`].
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || norm < MIN_DIRECTION_NORM {
            return Err(Error::ZeroVector { norm });
        }
        Ok(Direction {
            v: [x / norm, y / norm, z / norm],
        })
    }

    pub fn from_array(v: [f64; 3]) -> Result<Self> {
        Self::new(v[0], v[1], v[2])
    }

    /// Direction with polar angle `theta` (from +z) and azimuth `phi`.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Direction {
            v: [st * cp, st * sp, ct],
        }
    }

    pub fn x(&self) -> f64 {
        self.v[0]
    }

    pub fn y(&self) -> f64 {
        self.v[1]
    }

    pub fn z(&self) -> f64 {
        self.v[2]
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.v
    }

    pub fn dot(&self, other: &Direction) -> f64 {
        dot3(&self.v, &other.v)
    }

    /// Euclidean distance between the two unit vectors.
    pub fn distance(&self, other: &Direction) -> f64 {
        let d = [
            self.v[0] - other.v[0],
            self.v[1] - other.v[1],
            self.v[2] - other.v[2],
        ];
        dot3(&d, &d).sqrt()
    }

    pub fn approx_eq(&self, other: &Direction, tol: f64) -> bool {
        self.distance(other) <= tol
    }

    /// Polar and azimuthal angles `(θ, φ)`; `φ = 0` on the z axis.
    pub fn angles(&self) -> (f64, f64) {
        let [x, y, z] = self.v;
        let rho = x.hypot(y);
        let theta = rho.atan2(z);
        let phi = if rho == 0.0 { 0.0 } else { y.atan2(x) };
        (theta, phi)
    }

    /// Some unit vector perpendicular to `self`.
    pub fn any_perpendicular(&self) -> Direction {
        let [x, y, z] = self.v;
        let (ax, ay, az) = (x.abs(), y.abs(), z.abs());
        let helper = if ax <= ay && ax <= az {
            [1.0, 0.0, 0.0]
        } else if ay <= az {
            [0.0, 1.0, 0.0]
        } else {
            [0.0, 0.0, 1.0]
        };
        let c = cross3(&self.v, &helper);
        Direction::from_array(c).expect("helper axis is never parallel")
    }
}

impl Neg for Direction {
    type Output = Direction;

    fn neg(self) -> Direction {
        Direction {
            v: [-self.v[0], -self.v[1], -self.v[2]],
        }
    }
}

impl TryFrom<[f64; 3]> for Direction {
    type Error = Error;

    fn try_from(v: [f64; 3]) -> Result<Self> {
        Direction::from_array(v)
    }
}

impl From<Direction> for [f64; 3] {
    fn from(d: Direction) -> [f64; 3] {
        d.v
    }
}

impl fmt::Debug for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Direction({}, {}, {})", self.v[0], self.v[1], self.v[2])
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({:+.4}, {:+.4}, {:+.4})",
            self.v[0], self.v[1], self.v[2]
        )
    }
}

/// The state `|n⟩` with spin pointing along `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spinor {
    pub a_up: Complex64,
    pub a_down: Complex64,
    pub source_direction: Direction,
}

impl Spinor {
    /// `(cos(θ/2), e^{iφ} sin(θ/2))`. The phase is fixed by making the up
    /// amplitude real and nonnegative; at the south pole `φ = 0`.
    pub fn from_direction(n: Direction) -> Spinor {
        let (theta, phi) = n.angles();
        let (s, c) = (0.5 * theta).sin_cos();
        Spinor {
            a_up: Complex64::new(c, 0.0),
            a_down: Complex64::from_polar(s, phi),
            source_direction: n,
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.a_up.norm_sqr() + self.a_down.norm_sqr()
    }

    /// `⟨s|σ|s⟩` componentwise.
    pub fn pauli_expectation(&self) -> [f64; 3] {
        let cross = self.a_up.conj() * self.a_down;
        [
            2.0 * cross.re,
            2.0 * cross.im,
            self.a_up.norm_sqr() - self.a_down.norm_sqr(),
        ]
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Spinor) -> Complex64 {
        self.a_up.conj() * other.a_up + self.a_down.conj() * other.a_down
    }

    /// `⟨s|M|s⟩` for an arbitrary 2×2 matrix.
    pub fn sandwich(&self, m: &Matrix2) -> Complex64 {
        let v = [self.a_up, self.a_down];
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                acc += v[i].conj() * m[i][j] * v[j];
            }
        }
        acc
    }
}

/// Pauli matrices `σ_x, σ_y, σ_z`.
pub fn pauli() -> [Matrix2; 3] {
    let o = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    [
        [[o, one], [one, o]],
        [[o, -i], [i, o]],
        [[one, o], [o, -one]],
    ]
}

/// A Hermitian 2×2 operator `α·I + β·σ`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Effect {
    pub alpha: f64,
    pub beta: [f64; 3],
}

impl Effect {
    pub const ZERO: Effect = Effect {
        alpha: 0.0,
        beta: [0.0; 3],
    };

    pub const IDENTITY: Effect = Effect {
        alpha: 1.0,
        beta: [0.0; 3],
    };

    pub fn new(alpha: f64, beta: [f64; 3]) -> Self {
        Effect { alpha, beta }
    }

    /// A spin-independent effect `w·I`.
    pub fn scalar(w: f64) -> Self {
        Effect {
            alpha: w,
            beta: [0.0; 3],
        }
    }

    /// Projector `|n⟩⟨n| = (I + n·σ)/2`.
    pub fn projector(n: Direction) -> Self {
        let v = n.as_array();
        Effect {
            alpha: 0.5,
            beta: [0.5 * v[0], 0.5 * v[1], 0.5 * v[2]],
        }
    }

    /// Pauli-basis expansion of a Hermitian matrix: `α = Tr(m)/2`,
    /// `β_k = Tr(m σ_k)/2`.
    pub fn from_matrix(m: &Matrix2) -> Result<Self> {
        const TOL: f64 = 1e-10;
        let off = (m[0][1] - m[1][0].conj()).norm();
        if off > TOL || m[0][0].im.abs() > TOL || m[1][1].im.abs() > TOL {
            return Err(Error::NonHermitianInput(format!(
                "off-diagonal mismatch {off:e}, diagonal imaginary parts {:e}, {:e}",
                m[0][0].im, m[1][1].im
            )));
        }
        let alpha = 0.5 * (m[0][0].re + m[1][1].re);
        let bx = 0.5 * (m[0][1].re + m[1][0].re);
        let by = 0.5 * (m[1][0].im - m[0][1].im);
        let bz = 0.5 * (m[0][0].re - m[1][1].re);
        Ok(Effect::new(alpha, [bx, by, bz]))
    }

    /// The matrix `α·I + β·σ`.
    pub fn matrix(&self) -> Matrix2 {
        let [bx, by, bz] = self.beta;
        [
            [
                Complex64::new(self.alpha + bz, 0.0),
                Complex64::new(bx, -by),
            ],
            [Complex64::new(bx, by), Complex64::new(self.alpha - bz, 0.0)],
        ]
    }

    pub fn beta_norm(&self) -> f64 {
        dot3(&self.beta, &self.beta).sqrt()
    }

    /// Eigenvalues `(α − ‖β‖, α + ‖β‖)`.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let b = self.beta_norm();
        (self.alpha - b, self.alpha + b)
    }

    /// `Tr(α·I + β·σ) = 2α`.
    pub fn trace(&self) -> f64 {
        2.0 * self.alpha
    }

    /// `⟨n|(α·I + β·σ)|n⟩ = α + β·n`.
    pub fn expectation(&self, n: &Direction) -> f64 {
        self.alpha + dot3(&self.beta, &n.as_array())
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.alpha >= self.beta_norm() - tol
    }

    /// How far the effect is from positivity: `‖β‖ − α` (negative when PSD).
    pub fn psd_slack(&self) -> f64 {
        self.beta_norm() - self.alpha
    }

    /// Closest point (Euclidean in `(α, β)`) of the cone `α ≥ ‖β‖`.
    pub fn project_psd(&self) -> Effect {
        let b = self.beta_norm();
        if self.alpha >= b {
            *self
        } else if self.alpha <= -b {
            Effect::ZERO
        } else {
            let a = 0.5 * (self.alpha + b);
            let s = a / b;
            Effect::new(a, [s * self.beta[0], s * self.beta[1], s * self.beta[2]])
        }
    }
}

impl Add for Effect {
    type Output = Effect;

    fn add(self, o: Effect) -> Effect {
        Effect::new(
            self.alpha + o.alpha,
            [
                self.beta[0] + o.beta[0],
                self.beta[1] + o.beta[1],
                self.beta[2] + o.beta[2],
            ],
        )
    }
}

impl Sub for Effect {
    type Output = Effect;

    fn sub(self, o: Effect) -> Effect {
        self + o * -1.0
    }
}

impl Mul<f64> for Effect {
    type Output = Effect;

    fn mul(self, s: f64) -> Effect {
        Effect::new(
            s * self.alpha,
            [s * self.beta[0], s * self.beta[1], s * self.beta[2]],
        )
    }
}

impl std::iter::Sum for Effect {
    fn sum<I: Iterator<Item = Effect>>(iter: I) -> Effect {
        iter.fold(Effect::ZERO, Add::add)
    }
}

pub(crate) fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}
