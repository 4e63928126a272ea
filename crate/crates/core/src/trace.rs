//! Trace CSV serialization and the post-run trace checker.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::TraceRecord;

pub const TRACE_HEADER: &str = "t,cum_first,cum_compound,regret,violation_perround,violation_eq4,lambda";

/// Formats like C's `%.12g`: 12 significant digits, trailing zeros removed,
/// scientific notation for exponents below -4 or at least 12.
pub fn format_sig12(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..12).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (11 - exp) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn render_trace(records: &[TraceRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.t,
            format_sig12(r.cum_first),
            format_sig12(r.cum_compound),
            format_sig12(r.regret),
            format_sig12(r.violation_perround),
            format_sig12(r.violation_eq4),
            format_sig12(r.lambda),
        );
    }
    out
}

pub fn write_trace(path: impl AsRef<Path>, records: &[TraceRecord]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_trace(records)).map_err(|e| Error::io(path, e))
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<Vec<TraceRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == TRACE_HEADER => {}
        Some(h) => {
            return Err(Error::parse(
                path,
                1,
                format!("expected header `{TRACE_HEADER}`, found `{h}`"),
            ))
        }
        None => return Err(Error::EmptyInput(format!("{} is empty", path.display()))),
    }
    let mut out = Vec::new();
    for (n, line) in lines.enumerate() {
        let lineno = n as u64 + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::parse(path, lineno, format!("expected 7 fields, found {}", fields.len())));
        }
        let t = fields[0]
            .parse::<u64>()
            .map_err(|e| Error::parse(path, lineno, format!("t: {e}")))?;
        let mut vals = [0.0f64; 6];
        for (slot, s) in vals.iter_mut().zip(&fields[1..]) {
            *slot = s
                .parse::<f64>()
                .map_err(|e| Error::parse(path, lineno, format!("`{s}`: {e}")))?;
        }
        out.push(TraceRecord {
            t,
            cum_first: vals[0],
            cum_compound: vals[1],
            regret: vals[2],
            violation_perround: vals[3],
            violation_eq4: vals[4],
            lambda: vals[5],
        });
    }
    Ok(out)
}

/// Problems found in a trace: `(row index, description)`.
pub fn check_records(records: &[TraceRecord]) -> Vec<(usize, String)> {
    let mut issues = Vec::new();
    for (i, r) in records.iter().enumerate() {
        if r.cum_first < 0.0 || r.cum_compound < 0.0 {
            issues.push((i, "negative cumulative reward".to_string()));
        }
        if r.cum_compound > r.cum_first * (1.0 + 1e-11) + 1e-9 {
            issues.push((i, "cum_compound exceeds cum_first".to_string()));
        }
        if r.violation_perround < 0.0 || r.violation_eq4 < 0.0 {
            issues.push((i, "negative violation".to_string()));
        }
        if r.violation_eq4 > r.violation_perround * (1.0 + 1e-11) + 1e-9 {
            issues.push((i, "violation_eq4 exceeds violation_perround".to_string()));
        }
        if r.lambda < 0.0 {
            issues.push((i, "negative lambda".to_string()));
        }
        if i > 0 {
            let p = &records[i - 1];
            if r.t <= p.t {
                issues.push((i, "t not increasing".to_string()));
            }
            if r.cum_first < p.cum_first {
                issues.push((i, "cum_first decreased".to_string()));
            }
            if r.cum_compound < p.cum_compound {
                issues.push((i, "cum_compound decreased".to_string()));
            }
            if r.violation_perround < p.violation_perround {
                issues.push((i, "violation_perround decreased".to_string()));
            }
        }
    }
    issues
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig12_formatting() {
        assert_eq!(format_sig12(0.0), "0");
        assert_eq!(format_sig12(1.0), "1");
        assert_eq!(format_sig12(0.5), "0.5");
        assert_eq!(format_sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_sig12(2.0 / 3.0 * 1000.0), "666.666666667");
        assert_eq!(format_sig12(123456789012.0), "123456789012");
        assert_eq!(format_sig12(1234567890123.0), "1.23456789012e+12");
        assert_eq!(format_sig12(0.0001), "0.0001");
        assert_eq!(format_sig12(0.0000349169467555), "3.49169467555e-05");
        assert_eq!(format_sig12(1.5e-7), "1.5e-07");
        assert_eq!(format_sig12(-2.25), "-2.25");
        assert_eq!(format_sig12(999999999999.9), "1e+12");
    }

    #[test]
    fn render_and_read_back() {
        let recs = vec![
            TraceRecord {
                t: 100,
                cum_first: 250.0,
                cum_compound: 61.25,
                regret: 3.5,
                violation_perround: 1.0 / 3.0,
                violation_eq4: 0.0,
                lambda: 0.01,
            },
            TraceRecord {
                t: 200,
                cum_first: 500.0,
                cum_compound: 120.0,
                regret: 4.0,
                violation_perround: 0.5,
                violation_eq4: 0.25,
                lambda: 0.0,
            },
        ];
        let text = render_trace(&recs);
        assert!(text.starts_with(TRACE_HEADER));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        std::fs::write(&p, &text).unwrap();
        let back = read_trace(&p).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].cum_first, 500.0);
        assert!((back[0].violation_perround - 1.0 / 3.0).abs() < 1e-12);
        assert!(check_records(&back).is_empty());
    }

    #[test]
    fn checker_flags_decreasing_columns() {
        let a = TraceRecord {
            t: 1,
            cum_first: 2.0,
            cum_compound: 1.0,
            regret: 0.0,
            violation_perround: 1.0,
            violation_eq4: 0.5,
            lambda: 0.0,
        };
        let b = TraceRecord {
            t: 1,
            cum_first: 1.0,
            ..a
        };
        let issues = check_records(&[a, b]);
        assert!(issues.iter().any(|(_, m)| m.contains("t not increasing")));
        assert!(issues.iter().any(|(_, m)| m.contains("cum_first decreased")));
    }
}
