//! Unit-suffixed quantities such as `"45 GHz"` or `"1.73 ns"`.

use serde::{Deserialize, Serialize};

/// Physical dimension of a configuration value. Plain numbers are read in
/// the SI base unit of the dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dimension {
    Frequency,
    Time,
    Temperature,
    MagneticField,
    Angle,
    /// Angular rate, rad/s.
    AngularRate,
    /// Two-sided noise spectral density, rad²/s.
    SpectralDensity,
    Dimensionless,
}

impl Dimension {
    pub fn base_unit(self) -> &'static str {
        match self {
            Dimension::Frequency => "Hz",
            Dimension::Time => "s",
            Dimension::Temperature => "K",
            Dimension::MagneticField => "T",
            Dimension::Angle => "rad",
            Dimension::AngularRate => "rad/s",
            Dimension::SpectralDensity => "rad^2/s",
            Dimension::Dimensionless => "1",
        }
    }

    fn units(self) -> &'static [(&'static str, f64)] {
        match self {
            Dimension::Frequency => &[("Hz", 1.0), ("kHz", 1e3), ("MHz", 1e6), ("GHz", 1e9), ("THz", 1e12)],
            Dimension::Time => &[("s", 1.0), ("ms", 1e-3), ("us", 1e-6), ("µs", 1e-6), ("ns", 1e-9), ("ps", 1e-12)],
            Dimension::Temperature => &[("K", 1.0), ("mK", 1e-3)],
            Dimension::MagneticField => &[("T", 1.0), ("mT", 1e-3), ("G", 1e-4)],
            Dimension::Angle => &[("rad", 1.0), ("deg", std::f64::consts::PI / 180.0)],
            Dimension::AngularRate => &[("rad/s", 1.0), ("krad/s", 1e3), ("Mrad/s", 1e6)],
            Dimension::SpectralDensity => &[("rad^2/s", 1.0)],
            Dimension::Dimensionless => &[("", 1.0), ("%", 1e-2)],
        }
    }
}

/// Which dimension a unit string belongs to, if any.
fn dimension_of(unit: &str) -> Option<(Dimension, f64)> {
    use Dimension::*;
    [Frequency, Time, Temperature, MagneticField, Angle, AngularRate, SpectralDensity, Dimensionless]
        .into_iter()
        .find_map(|d| d.units().iter().find(|(u, _)| *u == unit).map(|&(_, f)| (d, f)))
}

/// Parses `"<number> <unit>"` into the base unit of `expected`.
pub fn parse_quantity(text: &str, expected: Dimension) -> Result<f64, String> {
    let text = text.trim();
    let split = text
        .char_indices()
        .find(|&(i, c)| {
            !(c.is_ascii_digit() || c == '.' || c == '+' || c == '-' || ((c == 'e' || c == 'E') && i > 0 && text[i + 1..].starts_with(|n: char| n.is_ascii_digit() || n == '-' || n == '+')))
        })
        .map_or(text.len(), |(i, _)| i);
    let (number, unit) = text.split_at(split);
    let value: f64 = number.trim().parse().map_err(|_| format!("'{text}' does not start with a number"))?;
    let unit = unit.trim();
    match dimension_of(unit) {
        Some((dim, factor)) if dim == expected => Ok(value * factor),
        Some((dim, _)) => Err(format!(
            "unit mismatch: '{unit}' is a {dim:?} unit but this key expects {expected:?} (e.g. {})",
            expected.units().iter().map(|(u, _)| *u).filter(|u| !u.is_empty()).collect::<Vec<_>>().join(", ")
        )),
        None => Err(format!("unknown unit '{unit}'")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_common_units() {
        assert_eq!(parse_quantity("45 GHz", Dimension::Frequency).unwrap(), 4.5e10);
        assert!((parse_quantity("1.73ns", Dimension::Time).unwrap() - 1.73e-9).abs() < 1e-24);
        assert_eq!(parse_quantity("260 mK", Dimension::Temperature).unwrap(), 0.26);
        assert_eq!(parse_quantity("5 mT", Dimension::MagneticField).unwrap(), 5e-3);
        assert_eq!(parse_quantity("2e-3 s", Dimension::Time).unwrap(), 2e-3);
        assert_eq!(parse_quantity("0.7", Dimension::Dimensionless).unwrap(), 0.7);
    }

    #[test]
    fn rejects_wrong_dimension() {
        let err = parse_quantity("39 ns", Dimension::Frequency).unwrap_err();
        assert!(err.contains("mismatch"), "{err}");
        assert!(parse_quantity("3 furlongs", Dimension::Time).is_err());
        assert!(parse_quantity("GHz", Dimension::Frequency).is_err());
    }
}
