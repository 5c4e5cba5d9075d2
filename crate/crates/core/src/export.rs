//! CSV and JSON writers.
//!
//! Every float is printed with 17 significant digits (`{:.16e}`) so outputs
//! round-trip exactly and compare byte for byte between runs. CSV files
//! start with `#` comment lines carrying the config hash and the parameters
//! needed to interpret the columns.

use std::io::{self, Write};

use num_complex::Complex64;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::analysis::FORMAT_VERSION;
use crate::domain::{constraint_weights, CanonicalState};
use crate::error::Result;
use crate::kernels::{KernelPoint, KernelSelector};
use crate::model::PhysicalConfig;
use crate::operators::OperatorMatrix;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// `# key: value` lines written at the top of a CSV file.
#[derive(Debug, Clone, Default)]
pub struct Header {
    lines: Vec<(String, String)>,
}

impl Header {
    pub fn new(config_hash: &str) -> Self {
        let mut h = Self::default();
        h.push("format_version", FORMAT_VERSION.to_string());
        h.push("config_sha256", config_hash);
        h
    }

    pub fn push(&mut self, key: &str, value: impl Into<String>) -> &mut Self {
        self.lines.push((key.to_string(), value.into()));
        self
    }

    pub fn physical(&mut self, cfg: &PhysicalConfig) -> &mut Self {
        self.push("gamma", fmt_f64(cfg.gamma))
            .push("l", fmt_f64(cfg.l))
            .push("mu", fmt_f64(cfg.mu))
            .push("hbar", fmt_f64(cfg.hbar))
    }

    fn write(&self, w: &mut impl Write) -> io::Result<()> {
        for (k, v) in &self.lines {
            writeln!(w, "# {k}: {v}")?;
        }
        Ok(())
    }
}

/// A header block, a column line and comma-separated rows.
pub fn write_table<W: Write>(w: &mut W, header: &Header, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
    header.write(w)?;
    writeln!(w, "{}", columns.join(","))?;
    for row in rows {
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_kernel_csv<W: Write>(
    w: &mut W,
    cfg: &PhysicalConfig,
    selector: KernelSelector,
    points: &[KernelPoint],
    config_hash: &str,
) -> Result<()> {
    let mut header = Header::new(config_hash);
    header
        .push("kernel", selector.name())
        .physical(cfg)
        .push("conventions", "H(0)=1/2, sgn(0)=0; row-major in q");
    if let KernelSelector::Series { n_terms } = selector {
        header.push("n_terms", n_terms.to_string());
    }
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| vec![fmt_f64(p.q), fmt_f64(p.q_prime), fmt_f64(p.value.re), fmt_f64(p.value.im)])
        .collect();
    write_table(w, &header, &["q", "q_prime", "re", "im"], &rows)
}

pub fn write_matrix_csv<W: Write>(w: &mut W, cfg: &PhysicalConfig, m: &OperatorMatrix, config_hash: &str) -> Result<()> {
    let mut header = Header::new(config_hash);
    header
        .push("label", m.label())
        .physical(cfg)
        .push("n_max", m.basis().n_max().to_string())
        .push("path", m.path().name());
    let idx = m.basis().indices();
    let mut rows = Vec::with_capacity(m.dim() * m.dim());
    for (i, &row) in idx.iter().enumerate() {
        for (j, &col) in idx.iter().enumerate() {
            let z: Complex64 = m.entries()[(i, j)];
            rows.push(vec![row.to_string(), col.to_string(), fmt_f64(z.re), fmt_f64(z.im)]);
        }
    }
    write_table(w, &header, &["row_index", "col_index", "re", "im"], &rows)
}

/// Pretty JSON with every float in `{:.16e}` form.
struct SciFormatter(PrettyFormatter<'static>);

impl Formatter for SciFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter(PrettyFormatter::new()));
    value
        .serialize(&mut ser)
        .map_err(|e| crate::Error::Io(e.to_string()))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    format_version: u32,
    config_sha256: &'a str,
    kind: &'a str,
    report: &'a T,
}

/// `{format_version, config_sha256, kind, report}`.
pub fn write_report_json<W: Write, T: Serialize>(w: &mut W, kind: &str, report: &T, config_hash: &str) -> Result<()> {
    let env = Envelope {
        format_version: FORMAT_VERSION,
        config_sha256: config_hash,
        kind,
        report,
    };
    w.write_all(to_json_string(&env)?.as_bytes())?;
    Ok(())
}

/// Serialized form of a domain state truncated to `n_max` span functions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CanonicalStateExport {
    pub gamma: f64,
    pub n_max: usize,
    pub seed: Option<u64>,
    pub s: Option<f64>,
    pub coeffs: Vec<[f64; 2]>,
    /// `|Σ_{n ≤ n_max} w_n c_n|` of the exported coefficients.
    pub constraint_residual: f64,
}

impl CanonicalStateExport {
    pub fn new(cfg: &PhysicalConfig, state: &CanonicalState, n_max: usize) -> Result<Self> {
        let kept: Vec<Complex64> = state.span_coeffs.iter().take(n_max).copied().collect();
        let w = constraint_weights(cfg, n_max.max(1))?;
        Ok(Self {
            gamma: state.gamma,
            n_max,
            seed: state.seed,
            s: state.decay,
            constraint_residual: w.apply(&kept).norm(),
            coeffs: kept.iter().map(|c| [c.re, c.im]).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BasisSpec;
    use crate::operators::toa_matrix_analytic;

    #[test]
    fn floats_keep_seventeen_digits() {
        let x = 0.1 + 0.2;
        let s = fmt_f64(x);
        assert_eq!(s, "3.0000000000000004e-1");
        assert_eq!(s.parse::<f64>().unwrap(), x);
        let json = to_json_string(&serde_json::json!({"a": [x, 1.0]})).unwrap();
        assert!(json.contains("3.0000000000000004e-1"));
        assert!(json.contains("1.0000000000000000e0"));
        let back: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(back["a"][0].as_f64().unwrap(), x);
    }

    #[test]
    fn matrix_csv_layout() {
        let cfg = PhysicalConfig::natural(0.5);
        let basis = BasisSpec::new(&cfg, 1).unwrap();
        let t = toa_matrix_analytic(&cfg, &basis).unwrap();
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, &cfg, &t, "abc").unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# format_version: 1");
        assert_eq!(lines[1], "# config_sha256: abc");
        let body: Vec<&str> = lines.iter().copied().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body[0], "row_index,col_index,re,im");
        assert_eq!(body.len(), 1 + 9);
        assert!(body[1].starts_with("-1,-1,"));
        // the entry at (−1, 1) parses back to the matrix value
        let f: Vec<&str> = body[3].split(',').collect();
        assert_eq!((f[0], f[1]), ("-1", "1"));
        let im: f64 = f[3].parse().unwrap();
        assert_eq!(im, t.element(-1, 1).unwrap().im);
    }

    #[test]
    fn state_export_residual() {
        let cfg = PhysicalConfig::natural(0.5);
        let state = crate::domain::TestStateFamily { decay: 4.0, reference_n: 512 }.state(&cfg, 3).unwrap();
        let full = CanonicalStateExport::new(&cfg, &state, 512).unwrap();
        assert!(full.constraint_residual < 1e-15);
        let cut = CanonicalStateExport::new(&cfg, &state, 8).unwrap();
        assert_eq!(cut.coeffs.len(), 8);
        assert!(cut.constraint_residual > 1e-6);
    }
}
