//! Per-layer offload traces and their text file format.
//!
//! One layer per row, comma separated:
//!
//! ```text
//! # name, offload_bytes, density, fwd_ms, bwd_ms[, ratio]
//! conv0, 297369600, 0.5, 24.78, 49.56
//! ```
//!
//! Lines starting with `#` are comments. The optional sixth column pins the
//! layer's compression ratio and bypasses estimation from density.

use std::io::{Read, Write};

use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LayerTraceRecord {
    pub name: String,
    pub offload_bytes: u64,
    /// Fraction of nonzero activations in the offloaded maps.
    pub density: f64,
    /// Forward compute time in seconds.
    pub fwd_time: f64,
    /// Backward compute time in seconds.
    pub bwd_time: f64,
    /// Precomputed compression ratio, if the trace pins one.
    pub ratio: Option<f64>,
}

impl LayerTraceRecord {
    pub fn new(
        name: impl Into<String>,
        offload_bytes: u64,
        density: f64,
        fwd_time: f64,
        bwd_time: f64,
    ) -> Self {
        LayerTraceRecord {
            name: name.into(),
            offload_bytes,
            density,
            fwd_time,
            bwd_time,
            ratio: None,
        }
    }

    pub fn with_ratio(mut self, ratio: f64) -> Self {
        self.ratio = Some(ratio);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.offload_bytes == 0 {
            return Err(Error::input(format!(
                "layer `{}` offloads zero bytes",
                self.name
            )));
        }
        if !(0.0..=1.0).contains(&self.density) {
            return Err(Error::input(format!(
                "layer `{}` density {} is outside [0, 1]",
                self.name, self.density
            )));
        }
        for (what, t) in [("forward", self.fwd_time), ("backward", self.bwd_time)] {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::input(format!(
                    "layer `{}` {what} time {t}",
                    self.name
                )));
            }
        }
        if let Some(r) = self.ratio {
            if !(r.is_finite() && r >= 1.0) {
                return Err(Error::input(format!(
                    "layer `{}` ratio {r} is below 1",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct Row {
    name: String,
    offload_bytes: u64,
    density: f64,
    fwd_ms: f64,
    bwd_ms: f64,
    #[serde(default)]
    ratio: Option<f64>,
}

pub fn read_trace<R: Read>(reader: R) -> Result<Vec<LayerTraceRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::Io(std::io::Error::other(e.to_string())),
            _ => Error::corrupt(format!("trace row {}: {e}", i + 1)),
        })?;
        let rec = LayerTraceRecord {
            name: row.name,
            offload_bytes: row.offload_bytes,
            density: row.density,
            fwd_time: row.fwd_ms * 1e-3,
            bwd_time: row.bwd_ms * 1e-3,
            ratio: row.ratio,
        };
        rec.validate()
            .map_err(|e| Error::corrupt(format!("trace row {}: {e}", i + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn parse_trace(text: &str) -> Result<Vec<LayerTraceRecord>> {
    read_trace(text.as_bytes())
}

/// Renders a trace file. `comment` lines are emitted first, each prefixed `# `.
pub fn format_trace(records: &[LayerTraceRecord], comment: &[&str]) -> String {
    let mut out = String::new();
    for line in comment {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out.push_str("# name,offload_bytes,density,fwd_ms,bwd_ms[,ratio]\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{}",
            r.name,
            r.offload_bytes,
            r.density,
            r.fwd_time * 1e3,
            r.bwd_time * 1e3
        ));
        if let Some(ratio) = r.ratio {
            out.push_str(&format!(",{ratio}"));
        }
        out.push('\n');
    }
    out
}

pub fn write_trace<W: Write>(
    mut writer: W,
    records: &[LayerTraceRecord],
    comment: &[&str],
) -> Result<()> {
    writer.write_all(format_trace(records, comment).as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_optional_ratio() {
        let text = "# two layers\n\
                    a, 64000000, 0.25, 2, 2, 4\n\
                    \n\
                    # middle comment\n\
                    b,16000000,1.0,2.0,2.0\n";
        let t = parse_trace(text).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t[0].name, "a");
        assert_eq!(t[0].ratio, Some(4.0));
        assert_eq!(t[0].fwd_time, 2e-3);
        assert_eq!(t[1].ratio, None);
        assert_eq!(t[1].offload_bytes, 16_000_000);
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(parse_trace("a,0,0.5,1,1\n").is_err());
        assert!(parse_trace("a,10,1.5,1,1\n").is_err());
        assert!(parse_trace("a,10,0.5,-1,1\n").is_err());
        assert!(parse_trace("a,10,0.5,1,1,0.5\n").is_err());
        assert!(parse_trace("a,10,0.5\n").is_err());
        assert!(parse_trace("a,ten,0.5,1,1\n").is_err());
    }

    #[test]
    fn format_then_parse_is_identity() {
        let recs = vec![
            LayerTraceRecord::new("conv0", 1234, 0.506, 1.25e-3, 2.5e-3),
            LayerTraceRecord::new("fc1", 99, 0.1, 0.0, 3e-6).with_ratio(13.8),
        ];
        let text = format_trace(&recs, &["synthetic"]);
        assert!(text.starts_with("# synthetic\n"));
        let back = parse_trace(&text).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in recs.iter().zip(&back) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.offload_bytes, b.offload_bytes);
            assert_eq!(a.density, b.density);
            assert!((a.fwd_time - b.fwd_time).abs() <= 1e-15);
            assert!((a.bwd_time - b.bwd_time).abs() <= 1e-15);
            assert_eq!(a.ratio, b.ratio);
        }
    }
}
