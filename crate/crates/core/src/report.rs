//! Fixed-precision formatting for printed reports.

use std::fmt::Write;

/// Formats `x` with three significant digits.
///
/// Magnitudes in `[1e-3, 1e6)` print in fixed notation (`1.50`, `0.385`,
/// `70000`); others in scientific (`1.23e9`).
pub fn sig3(x: f64) -> String {
    if x == 0.0 {
        return "0.00".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(mag - 2);
    let rounded = (x / scale).round() * scale;
    let mag = rounded.abs().log10().floor() as i32;
    if (-3..6).contains(&mag) {
        let decimals = (2 - mag).max(0) as usize;
        format!("{rounded:.decimals$}")
    } else {
        format!("{rounded:.2e}")
    }
}

/// Accumulates `key=value` lines for machine-readable output.
#[derive(Debug, Default)]
pub struct KeyValues {
    text: String,
}

impl KeyValues {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        writeln!(self.text, "{key}={value}").unwrap();
        self
    }

    pub fn num(&mut self, key: &str, value: f64) -> &mut Self {
        self.put(key, sig3(value))
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

/// Left-aligned first column, right-aligned rest.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut width: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in width.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &mut dyn Iterator<Item = &str>| {
        for (i, cell) in cells.enumerate().take(cols) {
            if i == 0 {
                write!(out, "{cell:<w$}", w = width[0]).unwrap();
            } else {
                write!(out, "  {cell:>w$}", w = width[i]).unwrap();
            }
        }
        out.push('\n');
    };
    line(&mut out, &mut header.iter().copied());
    for row in rows {
        line(&mut out, &mut row.iter().map(String::as_str));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_significant_digits() {
        assert_eq!(sig3(1.5), "1.50");
        assert_eq!(sig3(32.0), "32.0");
        assert_eq!(sig3(0.3846), "0.385");
        assert_eq!(sig3(2.5), "2.50");
        assert_eq!(sig3(70000.0), "70000");
        assert_eq!(sig3(9.996), "10.0");
        assert_eq!(sig3(-0.001234), "-0.00123");
        assert_eq!(sig3(1.234e9), "1.23e9");
        assert_eq!(sig3(0.0), "0.00");
        assert_eq!(sig3(f64::INFINITY), "inf");
    }

    #[test]
    fn key_values_and_table() {
        let mut kv = KeyValues::new();
        kv.put("codec", "zvc").num("ratio", 32.0);
        assert_eq!(kv.as_str(), "codec=zvc\nratio=32.0\n");
        let t = table(&["a", "bb"], &[vec!["x".into(), "1.00".into()]]);
        assert_eq!(t, "a    bb\nx  1.00\n");
    }
}
