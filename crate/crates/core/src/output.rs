//! CSV writers and the C-style `%.12e` number format they share.

use std::io::{self, Write};

use crate::micromodes::ModeSet;
use crate::purcell::PurcellRecord;

/// Column header of the Purcell spectrum body.
pub const SPECTRUM_HEADER: &str =
    "omega_a,pf_sfa,pf_b,pf_m,pf_modified_ln,pf_original_ln,pf_modes,tec_residual";

/// Formats like C's `printf("%.12e", x)`: twelve mantissa digits, signed exponent
/// with at least two digits.
pub fn format_e12(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

fn optional(x: Option<f64>) -> String {
    x.map(format_e12).unwrap_or_default()
}

/// One body row of the spectrum CSV.
pub fn spectrum_row(r: &PurcellRecord) -> String {
    [
        format_e12(r.omega_a),
        optional(r.pf_sfa),
        optional(r.pf_b),
        optional(r.pf_m),
        optional(r.pf_modified_ln),
        optional(r.pf_original_ln),
        optional(r.pf_modes),
        optional(r.tec_residual),
    ]
    .join(",")
}

/// Sweep results plus the `#`-prefixed metadata lines written above them.
#[derive(Debug, Clone, PartialEq)]
pub struct PurcellSpectrum {
    pub metadata: Vec<String>,
    pub records: Vec<PurcellRecord>,
}

impl PurcellSpectrum {
    pub fn new(mut records: Vec<PurcellRecord>) -> Self {
        records.sort_by(|a, b| a.omega_a.total_cmp(&b.omega_a));
        Self {
            metadata: Vec::new(),
            records,
        }
    }

    /// Appends a metadata line; embedded newlines become separate lines.
    pub fn push_meta(&mut self, line: impl AsRef<str>) {
        self.metadata
            .extend(line.as_ref().lines().map(str::to_owned));
    }

    /// Header row and data rows only.
    pub fn write_body<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{SPECTRUM_HEADER}")?;
        for r in &self.records {
            writeln!(out, "{}", spectrum_row(r))?;
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for m in &self.metadata {
            if m.is_empty() {
                writeln!(out, "#")?;
            } else {
                writeln!(out, "# {m}")?;
            }
        }
        self.write_body(out)
    }

    pub fn body_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_body(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ASCII output")
    }
}

/// Lines of a CSV file that are not metadata comments.
pub fn strip_metadata(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect()
}

/// Metadata lines with the leading `# ` removed.
pub fn metadata_lines(text: &str) -> Vec<&str> {
    text.lines()
        .take_while(|l| l.starts_with('#'))
        .map(|l| l.strip_prefix("# ").unwrap_or(&l[1..]))
        .collect()
}

/// One row of the FEM-versus-oracle comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResidual {
    pub k: f64,
    pub direction: &'static str,
    pub r_error: f64,
    pub t_error: f64,
    pub field_error: f64,
    pub green_error: f64,
}

impl OracleResidual {
    pub fn worst(&self) -> f64 {
        self.r_error
            .max(self.t_error)
            .max(self.field_error)
            .max(self.green_error)
    }
}

pub fn write_oracle_csv<W: Write>(rows: &[OracleResidual], mut out: W) -> io::Result<()> {
    writeln!(out, "k,direction,r_error,t_error,field_error,green_error")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            format_e12(r.k),
            r.direction,
            format_e12(r.r_error),
            format_e12(r.t_error),
            format_e12(r.field_error),
            format_e12(r.green_error)
        )?;
    }
    Ok(())
}

/// Mode frequencies, with `Ẽ_m` at each requested position as extra columns.
pub fn write_modes_csv<W: Write>(
    modes: &ModeSet,
    probes: &[(String, f64)],
    mut out: W,
) -> io::Result<()> {
    write!(out, "index,omega")?;
    for (name, _) in probes {
        write!(out, ",e_{name}")?;
    }
    writeln!(out)?;
    for (m, &w) in modes.frequencies.iter().enumerate() {
        write!(out, "{},{}", m, format_e12(w))?;
        for (_, x) in probes {
            let e = modes.e_field_at(m, *x).unwrap_or(f64::NAN);
            write!(out, ",{}", format_e12(e))?;
        }
        writeln!(out)?;
    }
    Ok(())
}
