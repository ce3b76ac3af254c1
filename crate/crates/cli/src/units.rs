//! SI-prefixed quantities.
//!
//! A quantity is a decimal number, an optional SI prefix and a unit symbol:
//! `100fA`, `821 fF`, `2.5kHz`, `1e-13A`. A bare number is read in the base
//! unit of the expected dimension. Parsing never consults the locale; the
//! decimal separator is always a dot.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dimension {
    Current,
    Capacitance,
    Time,
    Frequency,
    Voltage,
    Conductance,
    Charge,
    Power,
    Energy,
    Dimensionless,
}

impl Dimension {
    pub fn symbol(self) -> &'static str {
        match self {
            Dimension::Current => "A",
            Dimension::Capacitance => "F",
            Dimension::Time => "s",
            Dimension::Frequency => "Hz",
            Dimension::Voltage => "V",
            Dimension::Conductance => "S",
            Dimension::Charge => "C",
            Dimension::Power => "W",
            Dimension::Energy => "J",
            Dimension::Dimensionless => "",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Dimension::Current => "current",
            Dimension::Capacitance => "capacitance",
            Dimension::Time => "time",
            Dimension::Frequency => "frequency",
            Dimension::Voltage => "voltage",
            Dimension::Conductance => "conductance",
            Dimension::Charge => "charge",
            Dimension::Power => "power",
            Dimension::Energy => "energy",
            Dimension::Dimensionless => "dimensionless",
        }
    }

    fn from_symbol(s: &str) -> Option<Self> {
        // longest symbols first so "Hz" is not read as a prefix + "z"
        Some(match s {
            "Hz" => Dimension::Frequency,
            "A" => Dimension::Current,
            "F" => Dimension::Capacitance,
            "s" => Dimension::Time,
            "V" => Dimension::Voltage,
            "S" => Dimension::Conductance,
            "C" => Dimension::Charge,
            "W" => Dimension::Power,
            "J" => Dimension::Energy,
            _ => return None,
        })
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum UnitError {
    Malformed(String),
    UnknownUnit(String),
    Mismatch { expected: Dimension, found: Dimension },
}

impl fmt::Display for UnitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnitError::Malformed(s) => write!(f, "malformed number '{s}'"),
            UnitError::UnknownUnit(s) => write!(f, "unknown unit '{s}'"),
            UnitError::Mismatch { expected, found } => {
                write!(f, "expected a {expected} but found a {found}")
            }
        }
    }
}

fn prefix_exponent(c: char) -> Option<i32> {
    Some(match c {
        'f' => -15,
        'p' => -12,
        'n' => -9,
        'u' | 'µ' | 'μ' => -6,
        'm' => -3,
        'k' => 3,
        'M' => 6,
        'G' => 9,
        _ => return None,
    })
}

/// Parses `literal · 10^shift` with a single correctly rounded conversion,
/// so `100fA` is exactly the double nearest to 1e-13.
fn scaled(literal: &str, shift: i32) -> Option<f64> {
    if shift == 0 {
        return literal.parse().ok();
    }
    let (coeff, exp) = match literal.find(['e', 'E']) {
        Some(i) => (&literal[..i], literal[i + 1..].parse::<i32>().ok()?),
        None => (literal, 0),
    };
    format!("{coeff}e{}", exp + shift).parse().ok()
}

/// Length of the leading run of `s` that is a decimal floating-point literal.
fn numeric_prefix_len(s: &str) -> usize {
    let b = s.as_bytes();
    let mut i = 0;
    if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
        i += 1;
    }
    let int_start = i;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    let mut digits = i - int_start;
    if i < b.len() && b[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        digits += i - frac_start;
    }
    if digits == 0 {
        return 0;
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        let mut j = i + 1;
        if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
            j += 1;
        }
        let exp_start = j;
        while j < b.len() && b[j].is_ascii_digit() {
            j += 1;
        }
        if j > exp_start {
            i = j;
        }
    }
    i
}

/// Splits a quantity into its value in base units and its dimension.
pub fn parse_quantity(text: &str) -> Result<(f64, Dimension), UnitError> {
    let text = text.trim();
    let n = numeric_prefix_len(text);
    if n == 0 {
        return Err(UnitError::Malformed(text.to_string()));
    }
    let literal = &text[..n];
    let malformed = || UnitError::Malformed(text.to_string());
    let suffix = text[n..].trim_start();
    if suffix.is_empty() {
        return Ok((scaled(literal, 0).ok_or_else(malformed)?, Dimension::Dimensionless));
    }
    if let Some(d) = Dimension::from_symbol(suffix) {
        return Ok((scaled(literal, 0).ok_or_else(malformed)?, d));
    }
    let mut chars = suffix.chars();
    let first = chars.next().expect("non-empty suffix");
    match (prefix_exponent(first), Dimension::from_symbol(chars.as_str())) {
        (Some(k), Some(d)) => Ok((scaled(literal, k).ok_or_else(malformed)?, d)),
        _ => Err(UnitError::UnknownUnit(suffix.to_string())),
    }
}

/// Parses a quantity that must have dimension `expected`. A bare number is
/// taken in the base unit.
pub fn parse_as(text: &str, expected: Dimension) -> Result<f64, UnitError> {
    let (v, found) = parse_quantity(text)?;
    if found == expected || found == Dimension::Dimensionless {
        if !v.is_finite() {
            return Err(UnitError::Malformed(text.trim().to_string()));
        }
        Ok(v)
    } else {
        Err(UnitError::Mismatch { expected, found })
    }
}

/// Shortest exact rendering in base units; `parse_as` reads it back to the
/// same bits.
pub fn format_quantity(value: f64, dim: Dimension) -> String {
    format!("{value:e}{}", dim.symbol())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefixes() {
        assert_eq!(parse_as("100fA", Dimension::Current).unwrap(), 1e-13);
        assert_eq!(parse_as("821fF", Dimension::Capacitance).unwrap(), 8.21e-13);
        assert_eq!(parse_as("2.1kHz", Dimension::Frequency).unwrap(), 2100.0);
        assert_eq!(parse_as("10 ns", Dimension::Time).unwrap(), 1e-8);
        assert_eq!(parse_as("5µs", Dimension::Time).unwrap(), 5e-6);
        assert_eq!(parse_as("25mV", Dimension::Voltage).unwrap(), 0.025);
        assert_eq!(parse_as("16pJ", Dimension::Energy).unwrap(), 1.6e-11);
        assert_eq!(parse_as("1.5e3pA", Dimension::Current).unwrap(), 1.5e-9);
    }

    #[test]
    fn bare_numbers_and_exponents() {
        assert_eq!(parse_as("0.75", Dimension::Dimensionless).unwrap(), 0.75);
        assert_eq!(parse_as("1e-13", Dimension::Current).unwrap(), 1e-13);
        assert_eq!(parse_as("1e-13A", Dimension::Current).unwrap(), 1e-13);
        assert_eq!(parse_as("-7.06e-2V", Dimension::Voltage).unwrap(), -7.06e-2);
        assert_eq!(parse_as(".5s", Dimension::Time).unwrap(), 0.5);
    }

    #[test]
    fn dimension_mismatch() {
        assert_eq!(
            parse_as("100fF", Dimension::Current),
            Err(UnitError::Mismatch {
                expected: Dimension::Current,
                found: Dimension::Capacitance
            })
        );
        assert!(parse_as("3pA", Dimension::Dimensionless).is_err());
    }

    #[test]
    fn malformed() {
        for bad in ["", "abc", "1,5pA", "pA", "1e", "10xA", "1.2.3A", "nan"] {
            assert!(parse_quantity(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn exponent_without_digits_is_a_unit_error() {
        // "1e" parses as 1 with suffix "e", which is not a unit
        assert!(matches!(parse_quantity("1e"), Err(UnitError::UnknownUnit(_))));
    }

    #[test]
    fn format_round_trips() {
        for (v, d) in [(1e-13, Dimension::Current), (0.1 + 0.2, Dimension::Time), (-70.6e-3, Dimension::Voltage)] {
            assert_eq!(parse_as(&format_quantity(v, d), d).unwrap().to_bits(), v.to_bits());
        }
    }
}
