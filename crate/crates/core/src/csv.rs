//! Minimal CSV emission used by every dump format.
//!
//! Floats are written with 17 significant digits in scientific notation so a
//! value read back with any IEEE-754 parser is bit-identical. Lines end in LF.

use std::fmt::Write as _;

/// Formats `x` with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Accumulates CSV text in memory.
#[derive(Debug, Clone, Default)]
pub struct CsvBuffer {
    text: String,
}

impl CsvBuffer {
    pub fn with_header(columns: &[&str]) -> Self {
        let mut buf = Self::default();
        buf.push_row(columns.iter().copied());
        buf
    }

    pub fn push_row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut first = true;
        for field in fields {
            if !first {
                self.text.push(',');
            }
            first = false;
            self.text.push_str(field.as_ref());
        }
        self.text.push('\n');
    }

    pub fn push_floats(&mut self, values: &[f64]) {
        self.push_row(values.iter().map(|&v| fmt_f64(v)));
    }

    pub fn push_labelled(&mut self, label: &str, values: &[f64]) {
        let mut line = String::from(label);
        for v in values {
            let _ = write!(line, ",{}", fmt_f64(*v));
        }
        self.text.push_str(&line);
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn into_string(self) -> String {
        self.text
    }
}
