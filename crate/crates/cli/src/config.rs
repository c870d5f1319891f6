//! TOML run configuration.
//!
//! Every section and key is optional; unknown keys are rejected. Quantities
//! may be written as strings with units (`nu_z = "600kHz"`) or as bare
//! numbers in canonical units (Hz, m, T, T/m). Command-line flags override
//! file values, which override the built-in ¹⁷¹Yb⁺ defaults.
//!
//! ```toml
//! [species]
//! name = "Yb171"
//!
//! [trap]
//! nu_z = "600kHz"
//! drive = "10MHz"
//! a = 0.0
//! q = 0.3
//!
//! [field]
//! b0 = "1T"
//! gradient = "500T/m"
//!
//! [chain]
//! n = 3
//! active = [2, 3]
//! passive = "up"
//!
//! [halbach]
//! remanence = "1.23T"
//! r_inner = "2.5cm"
//! r_outer = "25cm"
//!
//! [sweep]
//! parameter = "B"
//! start = "1T"
//! stop = "5T"
//! points = 9
//!
//! [output]
//! format = "json"
//! path = "out.json"
//! ```

use std::path::{Path, PathBuf};

use ionspin::magnet::Shape;
use ionspin::units::{yb171, IonSpecies, CODATA};
use serde::Deserialize;

use crate::error::CliError;
use crate::output::Format;
use crate::units::{parse_quantity, Dimension, Sweep};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Number(f64),
    Text(String),
}

impl Quantity {
    pub fn value(&self, dim: Dimension, key: &str) -> Result<f64, CliError> {
        match self {
            Quantity::Number(v) if v.is_finite() => Ok(*v),
            Quantity::Number(v) => Err(CliError::Validation(format!("{key} = {v} is not finite"))),
            Quantity::Text(s) => parse_quantity(s, dim).map_err(|e| CliError::Validation(format!("{key}: {e}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Polarization {
    Up,
    Down,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub species: Option<SpeciesSection>,
    #[serde(default)]
    pub trap: TrapSection,
    #[serde(default)]
    pub field: FieldSection,
    #[serde(default)]
    pub chain: ChainSection,
    #[serde(default)]
    pub halbach: HalbachSection,
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub output: OutputSection,
}

/// A built-in species by name, optionally with individual constants
/// overridden. Ratios are cyclic (Hz/T), the mass is in atomic mass units.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesSection {
    pub name: Option<String>,
    pub mass_u: Option<f64>,
    pub gamma_s_hz_per_t: Option<f64>,
    pub gamma_i_hz_per_t: Option<f64>,
    pub hyperfine_a: Option<Quantity>,
    pub nuclear_spin: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapSection {
    pub nu_z: Option<Quantity>,
    pub drive: Option<Quantity>,
    pub a: Option<f64>,
    pub q: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    pub b0: Option<Quantity>,
    pub gradient: Option<Quantity>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    pub n: Option<usize>,
    /// One-based ion numbers.
    pub active: Option<Vec<usize>>,
    pub passive: Option<Polarization>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalbachSection {
    pub shape: Option<Shape>,
    pub remanence: Option<Quantity>,
    pub r_inner: Option<Quantity>,
    pub r_outer: Option<Quantity>,
    pub segments: Option<u32>,
    pub z0: Option<Quantity>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: String,
    pub start: Quantity,
    pub stop: Quantity,
    pub points: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub format: Option<Format>,
    pub path: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Validation(format!("invalid config: {}", e.message())))
    }

    pub fn species(&self) -> Result<IonSpecies, CliError> {
        let base = yb171();
        let Some(s) = &self.species else {
            return Ok(base);
        };
        let builtin = match s.name.as_deref() {
            None => true,
            Some(n) => matches!(n.to_ascii_lowercase().as_str(), "yb171" | "171yb+" | "171yb" | "yb171+"),
        };
        if !builtin && (s.mass_u.is_none() || s.gamma_s_hz_per_t.is_none() || s.gamma_i_hz_per_t.is_none() || s.hyperfine_a.is_none()) {
            return Err(CliError::Validation(format!(
                "species {:?} is not built in; give mass_u, gamma_s_hz_per_t, gamma_i_hz_per_t and hyperfine_a",
                s.name.as_deref().unwrap_or_default()
            )));
        }
        let two_pi = 2.0 * std::f64::consts::PI;
        let hyperfine_a = match &s.hyperfine_a {
            Some(q) => two_pi * q.value(Dimension::Frequency, "species.hyperfine_a")?,
            None => base.hyperfine_a,
        };
        IonSpecies::new(
            s.name.clone().unwrap_or(base.name),
            s.mass_u.map_or(base.mass, |m| m * CODATA.atomic_mass_unit),
            s.gamma_s_hz_per_t.map_or(base.gamma_s, |g| two_pi * g),
            s.gamma_i_hz_per_t.map_or(base.gamma_i, |g| two_pi * g),
            hyperfine_a,
            s.nuclear_spin.unwrap_or(base.nuclear_spin),
        )
        .map_err(CliError::from)
    }

    /// The file's sweep, if it targets a parameter accepted by the command.
    pub fn sweep(&self, dimension_of: impl Fn(&str) -> Option<Dimension>) -> Result<Option<Sweep>, CliError> {
        let Some(s) = &self.sweep else {
            return Ok(None);
        };
        let dim = dimension_of(&s.parameter).ok_or_else(|| {
            CliError::Validation(format!("sweep parameter {:?} is not accepted by this command", s.parameter))
        })?;
        let start = s.start.value(dim, "sweep.start")?;
        let stop = s.stop.value(dim, "sweep.stop")?;
        Sweep::new(&s.parameter, start, stop, s.points)
            .map(Some)
            .map_err(|e| CliError::Validation(e.0))
    }
}

/// Flag, else file value, else default.
pub fn resolve<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Like [`resolve`] for a quantity stored in the file.
pub fn resolve_quantity(
    flag: Option<f64>,
    file: &Option<Quantity>,
    dim: Dimension,
    key: &str,
    default: f64,
) -> Result<f64, CliError> {
    if let Some(v) = flag {
        return Ok(v);
    }
    match file {
        Some(q) => q.value(dim, key),
        None => Ok(default),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_example_parses() {
        let text = include_str!("config.rs")
            .lines()
            .skip_while(|l| !l.starts_with("//! ```toml"))
            .skip(1)
            .take_while(|l| !l.starts_with("//! ```"))
            .map(|l| l.trim_start_matches("//!").trim_start())
            .collect::<Vec<_>>()
            .join("\n");
        let cfg = RunConfig::parse(&text).unwrap();
        assert_eq!(cfg.chain.n, Some(3));
        assert_eq!(cfg.chain.passive, Some(Polarization::Up));
        assert_eq!(cfg.output.format, Some(Format::Json));
        let nu = cfg.trap.nu_z.as_ref().unwrap().value(Dimension::Frequency, "nu_z").unwrap();
        assert_eq!(nu, 600e3);
        let sweep = cfg.sweep(|p| (p == "B").then_some(Dimension::Field)).unwrap().unwrap();
        assert_eq!(sweep.values().len(), 9);
        assert!(cfg.sweep(|_| None).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse("[trap]\nnu_x = 1").is_err());
        assert!(RunConfig::parse("[bogus]\n").is_err());
        assert!(RunConfig::parse("colour = 3").is_err());
    }

    #[test]
    fn bare_numbers_are_canonical() {
        let cfg = RunConfig::parse("[field]\nb0 = 2\ngradient = \"5T/cm\"").unwrap();
        assert_eq!(cfg.field.b0.as_ref().unwrap().value(Dimension::Field, "b0").unwrap(), 2.0);
        assert_eq!(cfg.field.gradient.as_ref().unwrap().value(Dimension::Gradient, "g").unwrap(), 500.0);
    }

    #[test]
    fn precedence_is_flag_then_file_then_default() {
        assert_eq!(resolve(Some(1), Some(2), 3), 1);
        assert_eq!(resolve(None, Some(2), 3), 2);
        assert_eq!(resolve(None, None, 3), 3);
        let file = Some(Quantity::Text("2kHz".into()));
        assert_eq!(resolve_quantity(None, &file, Dimension::Frequency, "f", 1.0).unwrap(), 2e3);
        assert_eq!(resolve_quantity(Some(5.0), &file, Dimension::Frequency, "f", 1.0).unwrap(), 5.0);
    }

    #[test]
    fn species_defaults_and_overrides() {
        let yb = RunConfig::default().species().unwrap();
        assert_eq!(yb, yb171());
        let heavier = RunConfig::parse("[species]\nmass_u = 172.0").unwrap().species().unwrap();
        assert!(heavier.mass > yb.mass);
        assert!(RunConfig::parse("[species]\nname = \"Be9\"").unwrap().species().is_err());
    }
}
