//! Radial motion of an ion in an rf trap: the pseudopotential (secular)
//! frequency, its Floquet counterpart from the Mathieu equation, and the
//! splitting of the two radial modes by an axial magnetic field.

use std::f64::consts::PI;

use nalgebra::Matrix4;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::units::{Frequency, IonSpecies, ELEMENTARY_CHARGE};

/// Heuristic edge of the lowest stability region used for validation.
pub const MAX_Q: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct RfTrapParams {
    /// Ω_t
    pub drive: Frequency,
    pub a: f64,
    pub q: f64,
    pub species: IonSpecies,
}

impl RfTrapParams {
    pub fn new(species: IonSpecies, drive: Frequency, a: f64, q: f64) -> Result<Self> {
        let p = RfTrapParams {
            drive,
            a,
            q,
            species,
        };
        p.validate()?;
        Ok(p)
    }

    /// Ω_t > 0, a + q²/2 ≥ 0 and |q| < 0.9.
    pub fn validate(&self) -> Result<()> {
        let w = self.drive.angular();
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::Domain(format!("rf drive must be positive, got {w} rad/s")));
        }
        if !self.a.is_finite() || !self.q.is_finite() {
            return Err(Error::Domain("stability parameters must be finite".into()));
        }
        if self.a + 0.5 * self.q * self.q < 0.0 || self.q.abs() >= MAX_Q {
            return Err(Error::Unstable {
                a: self.a,
                q: self.q,
            });
        }
        Ok(())
    }
}

/// ω_r = (Ω_t/2)·√(a + q²/2), rad/s.
pub fn secular_frequency(p: &RfTrapParams) -> Result<f64> {
    p.validate()?;
    Ok(0.5 * p.drive.angular() * (p.a + 0.5 * p.q * p.q).sqrt())
}

/// Monodromy matrix of x'' + (a − 2q cos 2ξ) x = 0 over one period ξ ∈ [0, π],
/// as (x₁(π), x₁'(π), x₂(π), x₂'(π)) for x₁ = cos-like and x₂ = sin-like
/// initial data.
fn mathieu_monodromy(a: f64, q: f64, steps: usize) -> [f64; 4] {
    let f = |xi: f64, s: [f64; 2]| [s[1], -(a - 2.0 * q * (2.0 * xi).cos()) * s[0]];
    let h = PI / steps as f64;
    let mut out = [0.0; 4];
    for (k, init) in [[1.0, 0.0], [0.0, 1.0]].into_iter().enumerate() {
        let mut s = init;
        for n in 0..steps {
            let xi = n as f64 * h;
            let k1 = f(xi, s);
            let k2 = f(xi + 0.5 * h, [s[0] + 0.5 * h * k1[0], s[1] + 0.5 * h * k1[1]]);
            let k3 = f(xi + 0.5 * h, [s[0] + 0.5 * h * k2[0], s[1] + 0.5 * h * k2[1]]);
            let k4 = f(xi + h, [s[0] + h * k3[0], s[1] + h * k3[1]]);
            for c in 0..2 {
                s[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
            }
        }
        out[2 * k] = s[0];
        out[2 * k + 1] = s[1];
    }
    out
}

/// Characteristic exponent β ∈ (0, 1) of the Mathieu equation, from
/// cos(πβ) = ½·tr M of the one-period monodromy matrix.
pub fn mathieu_beta(a: f64, q: f64) -> Result<f64> {
    if !a.is_finite() || !q.is_finite() {
        return Err(Error::Domain("stability parameters must be finite".into()));
    }
    let m = mathieu_monodromy(a, q, 4000);
    let half_trace = 0.5 * (m[0] + m[3]);
    if !(half_trace.abs() < 1.0) {
        return Err(Error::Unstable { a, q });
    }
    Ok(half_trace.acos() / PI)
}

/// Secular frequency β·Ω_t/2 from the exact Floquet exponent, rad/s.
pub fn floquet_secular_frequency(p: &RfTrapParams) -> Result<f64> {
    p.validate()?;
    Ok(0.5 * p.drive.angular() * mathieu_beta(p.a, p.q)?)
}

/// ω_c = eB/m, rad/s.
pub fn cyclotron_frequency(species: &IonSpecies, field: f64) -> Result<f64> {
    if !(field >= 0.0) || !field.is_finite() {
        return Err(Error::Domain(format!("field must be non-negative, got {field} T")));
    }
    Ok(ELEMENTARY_CHARGE * field / species.mass)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftedModes {
    /// ω_r + ω_c/2, rad/s
    pub plus: f64,
    /// ω_r − ω_c/2, rad/s
    pub minus: f64,
    /// False when ω_r ≤ ω_c/2: the lower mode no longer confines.
    pub confined: bool,
}

/// Radial mode frequencies in an axial field; the axial mode is unaffected.
pub fn shifted_modes(omega_r: f64, omega_c: f64) -> ShiftedModes {
    ShiftedModes {
        plus: omega_r + 0.5 * omega_c,
        minus: omega_r - 0.5 * omega_c,
        confined: omega_r > 0.5 * omega_c,
    }
}

pub fn shifted_mode_frequencies(p: &RfTrapParams, field: f64) -> Result<ShiftedModes> {
    let wr = secular_frequency(p)?;
    let wc = cyclotron_frequency(&p.species, field)?;
    Ok(shifted_modes(wr, wc))
}

/// Linear equations of motion d/dt (x, y, p_x, p_y) = M·(x, y, p_x, p_y) of
/// the radial oscillator with the cyclotron coupling.
pub fn dynamical_matrix(mass: f64, omega_r: f64, omega_c: f64) -> Matrix4<f64> {
    let h = 0.5 * omega_c;
    let k = mass * omega_r * omega_r;
    Matrix4::new(
        0.0, h, 1.0 / mass, 0.0, //
        -h, 0.0, 0.0, 1.0 / mass, //
        -k, 0.0, 0.0, h, //
        0.0, -k, -h, 0.0,
    )
}

/// Positive eigenfrequencies (ascending) of [`dynamical_matrix`], computed on
/// the similar matrix in coordinates (m ω_r x, m ω_r y, p_x, p_y) so that all
/// entries are frequencies.
pub fn dynamical_eigenfrequencies(omega_r: f64, omega_c: f64) -> Result<[f64; 2]> {
    if !(omega_r > 0.0) || !omega_c.is_finite() || omega_c < 0.0 {
        return Err(Error::Domain("need ω_r > 0 and ω_c ≥ 0".into()));
    }
    let h = 0.5 * omega_c;
    let w = omega_r;
    let scaled = Matrix4::new(
        0.0, h, w, 0.0, //
        -h, 0.0, 0.0, w, //
        -w, 0.0, 0.0, h, //
        0.0, -w, -h, 0.0,
    );
    let eig = scaled.complex_eigenvalues();
    let mut pos: Vec<f64> = eig.iter().map(|z| z.im).filter(|&x| x > 0.0).collect();
    let largest_re = eig.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    if pos.len() != 2 || largest_re > 1e-9 * (w + h) {
        return Err(Error::Numerical(format!(
            "dynamical matrix is not purely oscillatory: {eig:?}"
        )));
    }
    pos.sort_by(f64::total_cmp);
    Ok([pos[0], pos[1]])
}
