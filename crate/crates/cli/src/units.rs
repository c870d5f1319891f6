//! Quantities written with units, e.g. `600kHz`, `2.5cm`, `500T/m`.
//!
//! Values are returned in canonical units: Hz (cyclic) for frequencies, m,
//! T and T/m. A bare number is read in the canonical unit.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Frequency,
    Length,
    Field,
    Gradient,
    Dimensionless,
}

impl Dimension {
    /// Units with their factor to the canonical unit, longest suffix first.
    fn units(self) -> &'static [(&'static str, f64)] {
        match self {
            Dimension::Frequency => &[("GHz", 1e9), ("MHz", 1e6), ("kHz", 1e3), ("Hz", 1.0)],
            Dimension::Length => &[
                ("cm", 1e-2),
                ("mm", 1e-3),
                ("um", 1e-6),
                ("μm", 1e-6),
                ("µm", 1e-6),
                ("nm", 1e-9),
                ("m", 1.0),
            ],
            Dimension::Field => &[("mT", 1e-3), ("T", 1.0), ("G", 1e-4)],
            Dimension::Gradient => &[("mT/m", 1e-3), ("T/cm", 1e2), ("G/cm", 1e-2), ("T/m", 1.0)],
            Dimension::Dimensionless => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError(pub String);

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ParseError {}

/// Parses `text` as a finite quantity of `dim`, returning canonical units.
pub fn parse_quantity(text: &str, dim: Dimension) -> Result<f64, ParseError> {
    let s = text.trim();
    let (number, factor) = dim
        .units()
        .iter()
        .find_map(|&(unit, factor)| s.strip_suffix(unit).map(|n| (n.trim_end(), factor)))
        .unwrap_or((s, 1.0));
    let value: f64 = number.parse().map_err(|_| {
        let units: Vec<&str> = dim.units().iter().map(|u| u.0).collect();
        ParseError(if units.is_empty() {
            format!("cannot parse {text:?} as a number")
        } else {
            format!("cannot parse {text:?} as a quantity (expected a number with one of {})", units.join(", "))
        })
    })?;
    let value = value * factor;
    if !value.is_finite() {
        return Err(ParseError(format!("{text:?} is not finite")));
    }
    Ok(value)
}

pub fn frequency(text: &str) -> Result<f64, ParseError> {
    parse_quantity(text, Dimension::Frequency)
}

pub fn length(text: &str) -> Result<f64, ParseError> {
    parse_quantity(text, Dimension::Length)
}

pub fn field(text: &str) -> Result<f64, ParseError> {
    parse_quantity(text, Dimension::Field)
}

pub fn gradient(text: &str) -> Result<f64, ParseError> {
    parse_quantity(text, Dimension::Gradient)
}

pub fn number(text: &str) -> Result<f64, ParseError> {
    parse_quantity(text, Dimension::Dimensionless)
}

/// Inclusive grid `start:stop:points` for a named parameter, e.g. `B=1:5:9`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub parameter: String,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Sweep {
    pub fn new(parameter: &str, start: f64, stop: f64, points: usize) -> Result<Self, ParseError> {
        if points == 0 {
            return Err(ParseError("a sweep needs at least one point".into()));
        }
        if points == 1 && start != stop {
            return Err(ParseError("a one-point sweep needs start = stop".into()));
        }
        Ok(Sweep {
            parameter: parameter.to_string(),
            start,
            stop,
            points,
        })
    }

    /// Parses `name=start:stop:points`, reading the bounds with the
    /// dimension `dimension_of(name)` assigns to the parameter.
    pub fn parse(
        text: &str,
        dimension_of: impl Fn(&str) -> Option<Dimension>,
    ) -> Result<Self, ParseError> {
        let (name, range) = text
            .split_once('=')
            .ok_or_else(|| ParseError(format!("sweep {text:?} must look like name=start:stop:points")))?;
        let name = name.trim();
        let dim = dimension_of(name)
            .ok_or_else(|| ParseError(format!("parameter {name:?} cannot be swept here")))?;
        let parts: Vec<&str> = range.split(':').collect();
        let [start, stop, points] = parts[..] else {
            return Err(ParseError(format!("sweep range {range:?} must be start:stop:points")));
        };
        let points: usize = points
            .trim()
            .parse()
            .map_err(|_| ParseError(format!("sweep point count {points:?} is not a positive integer")))?;
        Sweep::new(name, parse_quantity(start, dim)?, parse_quantity(stop, dim)?, points)
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.points - 1) as f64;
        (0..self.points)
            .map(|k| if k + 1 == self.points { self.stop } else { self.start + k as f64 * step })
            .collect()
    }
}

/// Comma-separated list of one-based ion numbers, e.g. `2,3`.
pub fn ion_list(text: &str) -> Result<Vec<usize>, ParseError> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .ok()
                .filter(|&k| k >= 1)
                .ok_or_else(|| ParseError(format!("ion number {t:?} must be a positive integer")))
        })
        .collect()
}
