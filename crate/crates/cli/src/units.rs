//! Physical quantities on the command line always carry a unit suffix.

use std::fmt;
use std::str::FromStr;

use crate::error::CliError;

fn split_number(s: &str) -> Result<(f64, &str), CliError> {
    let s = s.trim();
    let end = s
        .char_indices()
        .find(|&(i, c)| {
            !(c.is_ascii_digit()
                || c == '.'
                || c == '+'
                || c == '-'
                || ((c == 'e' || c == 'E') && s[i + 1..].starts_with(|d: char| d.is_ascii_digit() || d == '-' || d == '+')))
        })
        .map_or(s.len(), |(i, _)| i);
    let (num, unit) = s.split_at(end);
    let value: f64 = num
        .parse()
        .map_err(|_| CliError::usage(format!("cannot read a number from {s:?}")))?;
    if !value.is_finite() {
        return Err(CliError::usage(format!("{s:?} is not finite")));
    }
    Ok((value, unit.trim()))
}

/// A length in metres, written with `m`, `cm`, `mm`, `um` or `nm`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Length(pub f64);

impl Length {
    pub fn metres(self) -> f64 {
        self.0
    }
}

impl FromStr for Length {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let (v, unit) = split_number(s)?;
        let scale = match unit {
            "m" => 1.0,
            "cm" => 1e-2,
            "mm" => 1e-3,
            "um" | "µm" => 1e-6,
            "nm" => 1e-9,
            "" => return Err(CliError::usage(format!("length {s:?} needs a unit (m, cm, mm, um, nm)"))),
            u => return Err(CliError::usage(format!("unknown length unit {u:?} in {s:?}"))),
        };
        Ok(Length(v * scale))
    }
}

impl fmt::Display for Length {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}m", self.0)
    }
}

/// Refractive-index structure constant in m^(-2/3), written with
/// `m^-2/3` or `mm^-2/3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cn2(pub f64);

impl FromStr for Cn2 {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let (v, unit) = split_number(s)?;
        let scale = match unit.replace(['(', ')'], "").as_str() {
            "m^-2/3" => 1.0,
            // (1e-3 m)^(-2/3) = 100 m^(-2/3)
            "mm^-2/3" => 100.0,
            "" => return Err(CliError::usage(format!("Cn2 {s:?} needs a unit (m^-2/3 or mm^-2/3)"))),
            u => return Err(CliError::usage(format!("unknown Cn2 unit {u:?} in {s:?}"))),
        };
        if v < 0.0 {
            return Err(CliError::usage(format!("Cn2 must be non-negative, got {s:?}")));
        }
        Ok(Cn2(v * scale))
    }
}

/// Inclusive charge range such as `1-3`, or a comma list `1,3,5`.
pub fn parse_ells(s: &str) -> Result<Vec<u32>, CliError> {
    let bad = || CliError::usage(format!("cannot read charges from {s:?}; use 1-3 or 1,2,5"));
    if let Some((a, b)) = s.split_once('-') {
        let (a, b): (u32, u32) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|p| p.trim().parse().map_err(|_| bad())).collect()
}

/// Distances as `start:stop:step` (inclusive of `stop`) or a comma list,
/// every entry with a length unit.
pub fn parse_zs(s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [a, b, step] => {
            let (a, b, step) = (Length::from_str(a)?.0, Length::from_str(b)?.0, Length::from_str(step)?.0);
            if step.is_nan() || step <= 0.0 || b < a {
                return Err(CliError::usage(format!("bad distance range {s:?}")));
            }
            let count = ((b - a) / step + 1e-9).floor() as usize;
            // round to the nanometre so 0.4 + 2 * 0.3 prints and matches as 1.0
            Ok((0..=count).map(|i| ((a + i as f64 * step) * 1e9).round() / 1e9).collect())
        }
        [_] => s.split(',').map(|p| Length::from_str(p).map(|l| l.0)).collect(),
        _ => Err(CliError::usage(format!("bad distance list {s:?}"))),
    }
}

/// `train/val/test` counts per class, e.g. `40/10/10`.
pub fn parse_counts(s: &str) -> Result<[usize; 3], CliError> {
    let v: Vec<usize> = s
        .split('/')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::usage(format!("bad per-class counts {s:?}; use train/val/test such as 40/10/10")))?;
    match v.as_slice() {
        &[a, b, c] => Ok([a, b, c]),
        _ => Err(CliError::usage(format!("per-class counts need three parts, got {s:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lengths() {
        assert_eq!("0.70m".parse::<Length>().unwrap().0, 0.7);
        assert!(("26mm".parse::<Length>().unwrap().0 - 0.026).abs() < 1e-15);
        assert!(("632.8nm".parse::<Length>().unwrap().0 - 632.8e-9).abs() < 1e-20);
        assert!(("2e-3m".parse::<Length>().unwrap().0 - 2e-3).abs() < 1e-18);
        assert!("0.7".parse::<Length>().is_err());
        assert!("0.7ft".parse::<Length>().is_err());
    }

    #[test]
    fn cn2_units() {
        assert!(("5e-10mm^-2/3".parse::<Cn2>().unwrap().0 - 5e-8).abs() < 1e-20);
        assert_eq!("5e-8m^-2/3".parse::<Cn2>().unwrap().0, 5e-8);
        assert!("5e-8".parse::<Cn2>().is_err());
    }

    #[test]
    fn lists() {
        assert_eq!(parse_ells("1-3").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_ells("2,5").unwrap(), vec![2, 5]);
        assert_eq!(parse_zs("0.40m:1.00m:0.30m").unwrap(), vec![0.4, 0.7, 1.0]);
        assert_eq!(parse_zs("0.40m:1.00m:0.05m").unwrap().len(), 13);
        assert_eq!(parse_zs("400mm,1m").unwrap(), vec![0.4, 1.0]);
        assert_eq!(parse_counts("40/10/10").unwrap(), [40, 10, 10]);
        assert!(parse_counts("40/10").is_err());
    }
}
