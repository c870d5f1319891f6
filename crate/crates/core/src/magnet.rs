//! Central field of Halbach permanent-magnet arrangements: ideal and
//! segmented cylinders, finite-length cylinders and the Halbach sphere.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fractional change of remanence per kelvin for NdFeB-type material.
pub const REMANENCE_TEMPERATURE_COEFFICIENT: f64 = -1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Cylinder,
    Sphere,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Segments {
    /// Continuously rotating magnetisation.
    Ideal,
    /// Number of uniformly magnetised segments (≥ 4).
    Count(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Length {
    Infinite,
    /// Length parameter z0 of the finite cylinder, m.
    Finite(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalbachGeometry {
    /// T
    pub remanence: f64,
    /// m
    pub r_inner: f64,
    /// m
    pub r_outer: f64,
    pub segments: Segments,
    pub length: Length,
    pub shape: Shape,
}

impl HalbachGeometry {
    pub fn cylinder(remanence: f64, r_inner: f64, r_outer: f64) -> Result<Self> {
        let g = HalbachGeometry {
            remanence,
            r_inner,
            r_outer,
            segments: Segments::Ideal,
            length: Length::Infinite,
            shape: Shape::Cylinder,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn sphere(remanence: f64, r_inner: f64, r_outer: f64) -> Result<Self> {
        let g = HalbachGeometry {
            shape: Shape::Sphere,
            ..Self::cylinder(remanence, r_inner, r_outer)?
        };
        Ok(g)
    }

    pub fn with_segments(mut self, n: u32) -> Result<Self> {
        self.segments = Segments::Count(n);
        self.validate()?;
        Ok(self)
    }

    pub fn with_length(mut self, z0: f64) -> Result<Self> {
        self.length = Length::Finite(z0);
        self.validate()?;
        Ok(self)
    }

    /// Radii must satisfy 0 < r_i ≤ r_o (equal radii give zero field).
    pub fn validate(&self) -> Result<()> {
        if !self.remanence.is_finite() || self.remanence < 0.0 {
            return Err(Error::Geometry(format!(
                "remanence must be non-negative, got {} T",
                self.remanence
            )));
        }
        if !(self.r_inner > 0.0) || !self.r_outer.is_finite() || self.r_outer < self.r_inner {
            return Err(Error::Geometry(format!(
                "need 0 < r_inner ≤ r_outer, got r_inner = {} m, r_outer = {} m",
                self.r_inner, self.r_outer
            )));
        }
        if let Segments::Count(n) = self.segments {
            if n < 4 {
                return Err(Error::Geometry(format!("need at least 4 segments, got {n}")));
            }
        }
        if let Length::Finite(z0) = self.length {
            if !(z0 > 0.0) || !z0.is_finite() {
                return Err(Error::Geometry(format!("length must be positive, got {z0} m")));
            }
        }
        if self.shape == Shape::Sphere && self.length != Length::Infinite {
            return Err(Error::Geometry("a sphere has no length parameter".into()));
        }
        Ok(())
    }

    fn log_ratio(&self) -> f64 {
        (self.r_outer / self.r_inner).ln()
    }
}

fn require(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Geometry(what.into()))
    }
}

/// B_r·ln(r_o/r_i) for an ideal, infinitely long cylinder.
pub fn ideal_cylinder_field(g: &HalbachGeometry) -> Result<f64> {
    g.validate()?;
    require(
        g.shape == Shape::Cylinder && g.segments == Segments::Ideal && g.length == Length::Infinite,
        "ideal field needs an ideal, infinitely long cylinder",
    )?;
    Ok(g.remanence * g.log_ratio())
}

/// sin(2π/N)/(2π/N); 1 for ideal magnetisation.
pub fn segment_factor(segments: Segments) -> f64 {
    match segments {
        Segments::Ideal => 1.0,
        Segments::Count(n) => {
            let x = 2.0 * PI / n as f64;
            x.sin() / x
        }
    }
}

/// Infinitely long cylinder of N uniformly magnetised segments.
pub fn segmented_cylinder_field(g: &HalbachGeometry) -> Result<f64> {
    g.validate()?;
    require(
        g.shape == Shape::Cylinder
            && matches!(g.segments, Segments::Count(_))
            && g.length == Length::Infinite,
        "segmented field needs a segmented, infinitely long cylinder",
    )?;
    Ok(g.remanence * segment_factor(g.segments) * g.log_ratio())
}

/// Length reduction f(z0) of a finite cylinder:
/// z0/(2√(z0²+r_o²)) − z0/(2√(z0²+r_i²)) + ln((z0+√(z0²+r_o²))/(z0+√(z0²+r_i²))).
pub fn length_reduction(r_inner: f64, r_outer: f64, z0: f64) -> f64 {
    let so = z0.hypot(r_outer);
    let si = z0.hypot(r_inner);
    z0 / (2.0 * so) - z0 / (2.0 * si) + ((z0 + so) / (z0 + si)).ln()
}

/// B_r·[ln(r_o/r_i) − f(z0)], times the segment factor if segmented.
pub fn finite_length_field(g: &HalbachGeometry) -> Result<f64> {
    g.validate()?;
    let Length::Finite(z0) = g.length else {
        return Err(Error::Geometry("finite-length field needs a finite length".into()));
    };
    require(g.shape == Shape::Cylinder, "finite-length field needs a cylinder")?;
    let reduced = g.log_ratio() - length_reduction(g.r_inner, g.r_outer, z0);
    Ok(g.remanence * segment_factor(g.segments) * reduced.max(0.0))
}

/// (4/3)·B_r·ln(r_o/r_i).
pub fn sphere_field(g: &HalbachGeometry) -> Result<f64> {
    g.validate()?;
    require(g.shape == Shape::Sphere, "sphere field needs a sphere")?;
    Ok(4.0 / 3.0 * g.remanence * segment_factor(g.segments) * g.log_ratio())
}

/// Field of any valid geometry, dispatching on shape, segmentation and length.
pub fn field(g: &HalbachGeometry) -> Result<f64> {
    g.validate()?;
    match (g.shape, g.length) {
        (Shape::Sphere, _) => sphere_field(g),
        (Shape::Cylinder, Length::Finite(_)) => finite_length_field(g),
        (Shape::Cylinder, Length::Infinite) => {
            Ok(g.remanence * segment_factor(g.segments) * g.log_ratio())
        }
    }
}

/// Remanence after a temperature change `delta_t` (K) with a linear
/// coefficient (fraction per K).
pub fn remanence_at(remanence: f64, delta_t: f64, coefficient: f64) -> f64 {
    remanence * (1.0 + coefficient * delta_t)
}

/// Whether the design field reaches a user-supplied coercivity limit (T), at
/// which the inner segments risk demagnetisation. Not modelled beyond this flag.
pub fn exceeds_coercivity(field: f64, coercivity: f64) -> bool {
    field >= coercivity
}
