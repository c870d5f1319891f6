//! Physical constants, frequency units and ion species.
//!
//! Everything inside the crate is SI with angular frequencies (rad/s).
//! Ordinary frequencies (Hz, kHz, GHz) only appear through the [`Frequency`]
//! constructors and accessors, which the CLI uses at its boundary.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// CODATA 2018 values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// J·s
    pub reduced_planck: f64,
    /// J/T
    pub bohr_magneton: f64,
    /// C
    pub elementary_charge: f64,
    /// F/m
    pub vacuum_permittivity: f64,
    /// kg
    pub atomic_mass_unit: f64,
}

pub const CODATA: PhysicalConstants = PhysicalConstants {
    reduced_planck: 1.054_571_817e-34,
    bohr_magneton: 9.274_010_078_3e-24,
    elementary_charge: 1.602_176_634e-19,
    vacuum_permittivity: 8.854_187_812_8e-12,
    atomic_mass_unit: 1.660_539_066_60e-27,
};

pub const HBAR: f64 = CODATA.reduced_planck;
pub const ELEMENTARY_CHARGE: f64 = CODATA.elementary_charge;

/// An angular frequency in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Frequency(f64);

impl Frequency {
    pub const ZERO: Frequency = Frequency(0.0);

    pub const fn from_angular(rad_per_s: f64) -> Self {
        Frequency(rad_per_s)
    }

    pub fn from_hz(hz: f64) -> Self {
        Frequency(2.0 * PI * hz)
    }

    pub fn from_khz(khz: f64) -> Self {
        Self::from_hz(khz * 1e3)
    }

    pub fn from_mhz(mhz: f64) -> Self {
        Self::from_hz(mhz * 1e6)
    }

    pub fn from_ghz(ghz: f64) -> Self {
        Self::from_hz(ghz * 1e9)
    }

    /// rad/s
    pub const fn angular(self) -> f64 {
        self.0
    }

    pub fn hz(self) -> f64 {
        self.0 / (2.0 * PI)
    }

    pub fn khz(self) -> f64 {
        self.hz() * 1e-3
    }

    pub fn mhz(self) -> f64 {
        self.hz() * 1e-6
    }

    pub fn ghz(self) -> f64 {
        self.hz() * 1e-9
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hz = self.hz();
        let (value, unit) = match hz.abs() {
            x if x >= 1e9 => (hz * 1e-9, "GHz"),
            x if x >= 1e6 => (hz * 1e-6, "MHz"),
            x if x >= 1e3 => (hz * 1e-3, "kHz"),
            _ => (hz, "Hz"),
        };
        write!(f, "{value} {unit}")
    }
}

/// Per-isotope constants of a singly charged ion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IonSpecies {
    pub name: String,
    /// kg
    pub mass: f64,
    /// Electron gyromagnetic ratio, (rad/s)/T.
    pub gamma_s: f64,
    /// Nuclear gyromagnetic ratio, (rad/s)/T.
    pub gamma_i: f64,
    /// Hyperfine constant A, rad/s.
    pub hyperfine_a: f64,
    pub nuclear_spin: f64,
}

impl IonSpecies {
    pub fn new(
        name: impl Into<String>,
        mass: f64,
        gamma_s: f64,
        gamma_i: f64,
        hyperfine_a: f64,
        nuclear_spin: f64,
    ) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(Error::Domain(format!("ion mass must be positive, got {mass}")));
        }
        if hyperfine_a == 0.0 || !hyperfine_a.is_finite() {
            return Err(Error::Domain("hyperfine constant must be finite and non-zero".into()));
        }
        if ![0.5, 1.5, 2.5, 3.5].contains(&nuclear_spin) {
            return Err(Error::Domain(format!(
                "nuclear spin must be one of 1/2, 3/2, 5/2, 7/2, got {nuclear_spin}"
            )));
        }
        Ok(IonSpecies {
            name: name.into(),
            mass,
            gamma_s,
            gamma_i,
            hyperfine_a,
            nuclear_spin,
        })
    }

    /// Gate and hyperfine modules only handle I = 1/2.
    pub fn require_spin_half(&self) -> Result<()> {
        if self.nuclear_spin == 0.5 {
            Ok(())
        } else {
            Err(Error::UnsupportedSpecies {
                name: self.name.clone(),
                nuclear_spin: self.nuclear_spin,
            })
        }
    }

    /// Electron Larmor frequency Ω_S = γ_S B in rad/s.
    pub fn electron_larmor(&self, field: f64) -> f64 {
        self.gamma_s * field
    }

    /// Nuclear Larmor frequency Ω_I = γ_I B in rad/s.
    pub fn nuclear_larmor(&self, field: f64) -> f64 {
        self.gamma_i * field
    }
}

/// ¹⁷¹Yb⁺ with the rounded constants 28 GHz/T, −7.5 MHz/T and A = 12.645 GHz.
pub fn yb171() -> IonSpecies {
    IonSpecies {
        name: "171Yb+".to_string(),
        mass: 170.936 * CODATA.atomic_mass_unit,
        gamma_s: 2.0 * PI * 28e9,
        gamma_i: -2.0 * PI * 7.5e6,
        hyperfine_a: 2.0 * PI * 12.645e9,
        nuclear_spin: 0.5,
    }
}

/// Natural length scale ℓ = (e² / (4πε₀ m ω_z²))^(1/3) of an ion chain, in m.
pub fn ion_length_scale(species: &IonSpecies, nu_z: Frequency) -> Result<f64> {
    let omega = nu_z.angular();
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::Domain(format!(
            "axial frequency must be positive, got {omega} rad/s"
        )));
    }
    let c = CODATA;
    let coulomb = c.elementary_charge.powi(2) / (4.0 * PI * c.vacuum_permittivity);
    Ok((coulomb / (species.mass * omega * omega)).cbrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn yb171_constants() {
        let yb = yb171();
        assert_relative_eq!(yb.hyperfine_a / (2.0 * PI), 12.645e9, max_relative = 1e-15);
        assert_relative_eq!(yb.gamma_s / (2.0 * PI), 28e9, max_relative = 1e-15);
        assert_relative_eq!(yb.gamma_i / (2.0 * PI), -7.5e6, max_relative = 1e-15);
        assert_eq!(yb.nuclear_spin, 0.5);
        assert!(yb.require_spin_half().is_ok());
    }

    #[test]
    fn length_scale_yb_600khz() {
        // e²/(4πε₀ m ω²) evaluated by hand with CODATA 2018 and m = 170.936 u.
        let yb = yb171();
        let l = ion_length_scale(&yb, Frequency::from_khz(600.0)).unwrap();
        assert_relative_eq!(l, 3.852_764_295e-6, max_relative = 1e-8);
    }

    #[test]
    fn length_scale_power_laws() {
        let yb = yb171();
        let l600 = ion_length_scale(&yb, Frequency::from_khz(600.0)).unwrap();
        let l200 = ion_length_scale(&yb, Frequency::from_khz(200.0)).unwrap();
        assert_relative_eq!(l200 / l600, 3f64.powf(2.0 / 3.0), max_relative = 1e-12);
        let mut heavy = yb.clone();
        heavy.mass *= 2.0;
        let lh = ion_length_scale(&heavy, Frequency::from_khz(600.0)).unwrap();
        assert_relative_eq!(lh / l600, 2f64.powf(-1.0 / 3.0), max_relative = 1e-12);
    }

    #[test]
    fn length_scale_rejects_bad_frequency() {
        let yb = yb171();
        assert!(matches!(
            ion_length_scale(&yb, Frequency::ZERO),
            Err(Error::Domain(_))
        ));
        assert!(ion_length_scale(&yb, Frequency::from_hz(-5.0)).is_err());
    }

    #[test]
    fn species_validation() {
        assert!(IonSpecies::new("x", 0.0, 1.0, 1.0, 1.0, 0.5).is_err());
        assert!(IonSpecies::new("x", 1.0, 1.0, 1.0, 0.0, 0.5).is_err());
        assert!(IonSpecies::new("x", 1.0, 1.0, 1.0, 1.0, 1.0).is_err());
        let ca = IonSpecies::new("43Ca+", 1.0, 1.0, 1.0, 1.0, 3.5).unwrap();
        assert!(matches!(
            ca.require_spin_half(),
            Err(Error::UnsupportedSpecies { .. })
        ));
    }

    #[test]
    fn frequency_display() {
        assert_eq!(Frequency::from_khz(600.0).to_string(), "600 kHz");
    }

    proptest! {
        #[test]
        fn frequency_round_trip(hz in 1e-3f64..1e12) {
            let back = Frequency::from_hz(hz).hz();
            prop_assert!((back - hz).abs() <= 4.0 * f64::EPSILON * hz);
        }

        #[test]
        fn length_scale_scaling(mass_u in 1.0f64..300.0, khz in 10.0f64..5000.0, k in 0.1f64..10.0) {
            let mut sp = yb171();
            sp.mass = mass_u * CODATA.atomic_mass_unit;
            let l0 = ion_length_scale(&sp, Frequency::from_khz(khz)).unwrap();
            let l1 = ion_length_scale(&sp, Frequency::from_khz(khz * k)).unwrap();
            prop_assert!((l1 / l0 / k.powf(-2.0 / 3.0) - 1.0).abs() < 1e-12);
            sp.mass *= k;
            let l2 = ion_length_scale(&sp, Frequency::from_khz(khz)).unwrap();
            prop_assert!((l2 / l0 / k.powf(-1.0 / 3.0) - 1.0).abs() < 1e-12);
        }
    }
}
