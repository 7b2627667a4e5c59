//! CSV and JSON writers. Floats are printed with 17 significant digits.

use crate::fail::Fallible;
use serde::Serialize;
use std::path::Path;

/// `x` with 17 significant digits, shortest form (like C's `%.17g`).
pub fn fmt17(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        trim(format!("{x:.decimals$}"))
    } else {
        format!("{}e{}{:02}", trim(mantissa.to_string()), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// A cell of a CSV row.
pub enum Cell {
    F(f64),
    U(u64),
    S(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::U(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::U(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::S(v)
    }
}

#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$($crate::output::Cell::from($x)),*] };
}

pub struct Table {
    w: csv::Writer<std::fs::File>,
}

impl Table {
    pub fn create(path: &Path, header: &[&str]) -> Fallible<Self> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_path(path)?;
        w.write_record(header)?;
        Ok(Self { w })
    }

    pub fn write(&mut self, row: Vec<Cell>) -> Fallible<()> {
        let rec: Vec<String> = row
            .into_iter()
            .map(|c| match c {
                Cell::F(v) => fmt17(v),
                Cell::U(v) => v.to_string(),
                Cell::S(s) => s,
            })
            .collect();
        self.w.write_record(&rec)?;
        Ok(())
    }

    pub fn finish(mut self) -> Fallible<()> {
        self.w.flush()?;
        Ok(())
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Fallible<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::fmt17;

    #[test]
    fn seventeen_digits_round_trip() {
        assert_eq!(fmt17(0.1), "0.10000000000000001");
        assert_eq!(fmt17(2.0), "2");
        assert_eq!(fmt17(-1.5), "-1.5");
        assert_eq!(fmt17(1e-7), "9.9999999999999995e-08");
        assert_eq!(fmt17(1e20), "1e+20");
        assert_eq!(fmt17(f64::NAN), "NaN");
        for x in [std::f64::consts::PI, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 123456.789] {
            assert_eq!(fmt17(x).parse::<f64>().unwrap(), x);
        }
    }
}
