//! Freely evolving Gaussian wave packet and its spin-1/2 guidance field.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::{cross3, dot3, Direction};

/// Densities below this fraction of the current peak count as a node.
pub const NODE_GUARD: f64 = 1e-30;

/// Spin-1/2 particle in the product state `ψ ⊗ |n⟩`, with `ψ` a Gaussian of
/// width `initial_width` per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacketModel {
    pub mass: f64,
    #[serde(default = "one")]
    pub hbar: f64,
    pub initial_center: [f64; 3],
    pub initial_width: f64,
    pub initial_wavevector: [f64; 3],
    #[serde(default = "up")]
    pub spin_direction: Direction,
}

fn one() -> f64 {
    1.0
}

fn up() -> Direction {
    Direction::Z
}

impl PacketModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mass", self.mass),
            ("hbar", self.hbar),
            ("initial_width", self.initial_width),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self
            .initial_center
            .iter()
            .chain(&self.initial_wavevector)
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidModel(
                "center and wavevector must be finite".into(),
            ));
        }
        Ok(())
    }

    pub fn with_spin(mut self, n: Direction) -> Self {
        self.spin_direction = n;
        self
    }

    /// `σ₀(1 + iħt/(2mσ₀²))`.
    fn complex_width(&self, t: f64) -> Complex64 {
        let s0 = self.initial_width;
        Complex64::new(s0, self.hbar * t / (2.0 * self.mass * s0))
    }

    /// Group velocity `ħk/m`.
    pub fn group_velocity(&self) -> [f64; 3] {
        let s = self.hbar / self.mass;
        self.initial_wavevector.map(|k| s * k)
    }

    /// Packet center at time `t`.
    pub fn center(&self, t: f64) -> [f64; 3] {
        let v = self.group_velocity();
        [0, 1, 2].map(|i| self.initial_center[i] + v[i] * t)
    }

    /// `|ψ(t, center(t))|²`, the density maximum at time `t`.
    pub fn peak_density(&self, t: f64) -> f64 {
        let w = self.complex_width(t).norm_sqr();
        (2.0 * std::f64::consts::PI * w).powf(-1.5)
    }

    /// One-dimensional factor along axis `i`: `(ψ_i, ∂ψ_i/∂x_i)`.
    pub fn axis_factor(&self, i: usize, t: f64, x: f64) -> (Complex64, Complex64) {
        let st = self.complex_width(t);
        let k = self.initial_wavevector[i];
        let v = self.hbar * k / self.mass;
        let xi = x - self.initial_center[i] - v * t;
        let i_unit = Complex64::new(0.0, 1.0);
        let norm = (2.0 * std::f64::consts::PI).powf(-0.25) / st.sqrt();
        let exponent = -xi * xi / (4.0 * self.initial_width * st)
            + i_unit * k * (x - self.initial_center[i] - 0.5 * v * t);
        let value = norm * exponent.exp();
        let log_grad = -xi / (2.0 * self.initial_width * st) + i_unit * k;
        (value, value * log_grad)
    }

    /// `∇ψ/ψ`, finite everywhere because the packet has no nodes.
    pub fn log_gradient(&self, t: f64, x: &[f64; 3]) -> [Complex64; 3] {
        let st = self.complex_width(t);
        let i_unit = Complex64::new(0.0, 1.0);
        let c = self.center(t);
        [0, 1, 2].map(|i| {
            -(x[i] - c[i]) / (2.0 * self.initial_width * st) + i_unit * self.initial_wavevector[i]
        })
    }

    /// `|ψ(t, x)|² / peak_density(t)`.
    pub fn relative_density(&self, t: f64, x: &[f64; 3]) -> f64 {
        let st = self.complex_width(t);
        let c = self.center(t);
        let e: f64 = (0..3)
            .map(|i| {
                let xi = x[i] - c[i];
                (xi * xi / (2.0 * self.initial_width * st)).re
            })
            .sum();
        (-e).exp()
    }
}

/// `(ψ(t, x), ∇ψ(t, x))` of the freely evolved Gaussian.
pub fn wavefunction(model: &PacketModel, t: f64, x: &[f64; 3]) -> (Complex64, [Complex64; 3]) {
    let f = [0, 1, 2].map(|i| model.axis_factor(i, t, x[i]));
    let value = f[0].0 * f[1].0 * f[2].0;
    let grad = [
        f[0].1 * f[1].0 * f[2].0,
        f[0].0 * f[1].1 * f[2].0,
        f[0].0 * f[1].0 * f[2].1,
    ];
    (value, grad)
}

/// Raised when a trajectory enters a region where `|ψ|²` is below
/// [`NODE_GUARD`] times the peak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearNode {
    pub t: f64,
    pub x: [f64; 3],
    pub relative_density: f64,
}

/// Which parts of the guidance law are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GuidanceLaw {
    pub spin_term: bool,
}

impl Default for GuidanceLaw {
    fn default() -> Self {
        GuidanceLaw { spin_term: true }
    }
}

/// Pauli-current velocity for the product state `ψ ⊗ |n⟩`:
///
/// `v = (ħ/m) Im(∇ψ/ψ) + (ħ/2m) (∇|ψ|² × n) / |ψ|²`
///
/// The second term is the curl of the spin density and is the only place
/// the spin direction `n` enters.
pub fn guidance_velocity(
    model: &PacketModel,
    law: GuidanceLaw,
    t: f64,
    x: &[f64; 3],
) -> std::result::Result<[f64; 3], NearNode> {
    let rel = model.relative_density(t, x);
    if !(rel >= NODE_GUARD) {
        return Err(NearNode {
            t,
            x: *x,
            relative_density: rel,
        });
    }
    let lg = model.log_gradient(t, x);
    let s = model.hbar / model.mass;
    let mut v = lg.map(|g| s * g.im);
    if law.spin_term {
        // ∇|ψ|²/|ψ|² = 2 Re(∇ψ/ψ)
        let re = lg.map(|g| g.re);
        let spin = cross3(&re, &model.spin_direction.as_array());
        for k in 0..3 {
            v[k] += s * spin[k];
        }
    }
    Ok(v)
}

/// Plane `normal·x = offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrivalSurface {
    pub plane_normal: Direction,
    pub plane_offset: f64,
}

impl ArrivalSurface {
    pub fn signed_distance(&self, x: &[f64; 3]) -> f64 {
        dot3(&self.plane_normal.as_array(), x) - self.plane_offset
    }

    /// The packet must start strictly on the negative side.
    pub fn validate_against(&self, model: &PacketModel) -> Result<()> {
        if !self.plane_offset.is_finite() {
            return Err(Error::InvalidModel("plane_offset must be finite".into()));
        }
        let d = self.signed_distance(&model.initial_center);
        if !(d < 0.0) {
            return Err(Error::InvalidModel(format!(
                "packet center lies on the positive side of the surface (signed distance {d})"
            )));
        }
        Ok(())
    }
}
