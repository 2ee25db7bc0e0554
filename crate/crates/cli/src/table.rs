//! CSV tables with fixed column order and finite-only numeric fields.

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    /// Six significant digits, `%g` style.
    #[default]
    Short,
    /// Shortest representation that round-trips the `f64`.
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Text(String),
    Int(u64),
    Num(f64),
    Empty,
}

impl Field {
    pub fn text(s: impl ToString) -> Self {
        Field::Text(s.to_string())
    }

    /// `Num` when finite, `Empty` otherwise.
    pub fn finite_or_empty(x: f64) -> Self {
        if x.is_finite() {
            Field::Num(x)
        } else {
            Field::Empty
        }
    }
}

impl From<Option<u64>> for Field {
    fn from(v: Option<u64>) -> Self {
        v.map_or(Field::Empty, Field::Int)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Field>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Field>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| *h == name)
    }

    pub fn to_csv(&self, precision: Precision) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            let record = row
                .iter()
                .map(|f| match f {
                    Field::Text(s) => Ok(s.clone()),
                    Field::Int(n) => Ok(n.to_string()),
                    Field::Num(x) if x.is_finite() => Ok(format_number(*x, precision)),
                    Field::Num(x) => Err(CliError::Model(treerisk_core::Error::Inconsistent(format!(
                        "non-finite value {x} in a numeric column"
                    )))),
                    Field::Empty => Ok(String::new()),
                })
                .collect::<Result<Vec<_>, _>>()?;
            w.write_record(&record)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.into_error()))
    }
}

pub fn format_number(x: f64, precision: Precision) -> String {
    match precision {
        Precision::Full => format!("{x:?}"),
        Precision::Short => format_sig6(x),
    }
}

fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        trim_zeros(&format!("{x:.*}", (5 - exp) as usize)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        let cases = [
            (0.0, "0"),
            (-0.0, "0"),
            (1.0, "1"),
            (0.1742554, "0.174255"),
            (8.27713, "8.27713"),
            (12.4157, "12.4157"),
            (123456.7, "123457"),
            (1234567.0, "1.23457e+06"),
            (999999.7, "1e+06"),
            (0.0001, "0.0001"),
            (0.00001234567, "1.23457e-05"),
            (-2.5, "-2.5"),
            (1e-300, "1e-300"),
        ];
        for (x, want) in cases {
            assert_eq!(format_sig6(x), want, "{x}");
        }
    }

    #[test]
    fn full_precision_round_trips() {
        for x in [0.1742554, 1e-17, 12.41570001, 3.0] {
            assert_eq!(format_number(x, Precision::Full).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn non_finite_is_refused() {
        let mut t = Table::new(vec!["x"]);
        t.push(vec![Field::Num(f64::NAN)]);
        assert!(t.to_csv(Precision::Short).is_err());
        let mut t = Table::new(vec!["x", "y"]);
        t.push(vec![Field::finite_or_empty(f64::INFINITY), Field::text("a,b")]);
        assert_eq!(String::from_utf8(t.to_csv(Precision::Short).unwrap()).unwrap(), "x,y\n,\"a,b\"\n");
    }
}
