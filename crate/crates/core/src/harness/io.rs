//! Record persistence: a fixed-column CSV for external tooling and
//! JSON-lines with full diagnostics.
//!
//! CSV column contract:
//! `n, lambda, realization, method, e0, e1, gap, entropy_bits, chi_eff,
//! degenerate_flag, error`. Floats are written with 12 significant digits;
//! the JSONL stream keeps full precision.

use std::io::{BufRead, Write};

use super::EnsembleRecord;
use crate::error::{Result, TsreError};

pub const CSV_HEADER: &[&str] = &[
    "n",
    "lambda",
    "realization",
    "method",
    "e0",
    "e1",
    "gap",
    "entropy_bits",
    "chi_eff",
    "degenerate_flag",
    "error",
];

/// 12 significant digits, empty for missing values.
pub fn fmt_g12(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.11e}"),
        None => String::new(),
    }
}

pub fn write_csv<W: Write>(records: &[EnsembleRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)
        .map_err(|e| TsreError::Domain(format!("csv: {e}")))?;
    for r in records {
        w.write_record(&[
            r.n.to_string(),
            fmt_g12(Some(r.lambda)),
            r.realization.to_string(),
            r.method.clone(),
            fmt_g12(r.e0),
            fmt_g12(r.e1),
            fmt_g12(r.gap),
            fmt_g12(r.entropy_bits),
            r.chi_eff.map(|c| c.to_string()).unwrap_or_default(),
            r.degenerate_flag.to_string(),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(|e| TsreError::Domain(format!("csv: {e}")))?;
    }
    w.flush().map_err(|e| TsreError::Domain(format!("csv: {e}")))?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<EnsembleRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr
        .headers()
        .map_err(|e| TsreError::Domain(format!("csv: {e}")))?
        .clone();
    let idx = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| TsreError::Domain(format!("csv missing column '{name}'")))
    };
    let (ni, li, ri, mi) = (idx("n")?, idx("lambda")?, idx("realization")?, idx("method")?);
    let (e0i, e1i, gi) = (idx("e0")?, idx("e1")?, idx("gap")?);
    let (si, ci, di, ei) = (
        idx("entropy_bits")?,
        idx("chi_eff")?,
        idx("degenerate_flag")?,
        idx("error")?,
    );
    let parse_opt = |s: &str| -> Option<f64> {
        if s.is_empty() {
            None
        } else {
            s.parse().ok()
        }
    };
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| TsreError::Domain(format!("csv: {e}")))?;
        out.push(EnsembleRecord {
            n: row[ni].parse().map_err(|e| TsreError::Domain(format!("csv n: {e}")))?,
            lambda: row[li]
                .parse()
                .map_err(|e| TsreError::Domain(format!("csv lambda: {e}")))?,
            realization: row[ri]
                .parse()
                .map_err(|e| TsreError::Domain(format!("csv realization: {e}")))?,
            method: row[mi].to_string(),
            e0: parse_opt(&row[e0i]),
            e1: parse_opt(&row[e1i]),
            gap: parse_opt(&row[gi]),
            entropy_bits: parse_opt(&row[si]),
            entropy_bits_excited: None,
            chi_eff: if row[ci].is_empty() {
                None
            } else {
                row[ci].parse().ok()
            },
            c_of_r: None,
            degenerate_flag: &row[di] == "true",
            iterations: 0,
            residual0: None,
            residual1: None,
            error: if row[ei].is_empty() {
                None
            } else {
                Some(row[ei].to_string())
            },
        });
    }
    Ok(out)
}

pub fn write_jsonl<W: Write>(records: &[EnsembleRecord], mut out: W) -> Result<()> {
    for r in records {
        let line =
            serde_json::to_string(r).map_err(|e| TsreError::Domain(format!("jsonl: {e}")))?;
        writeln!(out, "{line}").map_err(|e| TsreError::Domain(format!("jsonl: {e}")))?;
    }
    Ok(())
}

pub fn read_jsonl<R: std::io::Read>(input: R) -> Result<Vec<EnsembleRecord>> {
    let reader = std::io::BufReader::new(input);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(|e| TsreError::Domain(format!("jsonl: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| TsreError::Domain(format!("jsonl: {e}")))?,
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_record() -> EnsembleRecord {
        EnsembleRecord {
            n: 8,
            lambda: 0.5,
            realization: 3,
            method: "exact".into(),
            e0: Some(-2.345678901234567),
            e1: Some(-2.1),
            gap: Some(0.245678901234567),
            entropy_bits: Some(1.25),
            entropy_bits_excited: None,
            chi_eff: Some(5),
            c_of_r: Some(vec![0.1, 0.05]),
            degenerate_flag: false,
            iterations: 42,
            residual0: Some(1e-11),
            residual1: Some(2e-11),
            error: None,
        }
    }

    #[test]
    fn csv_round_trip_preserves_twelve_digits() {
        let records = vec![sample_record()];
        let mut buf = Vec::new();
        write_csv(&records, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("n,lambda,realization,method,e0,e1,gap"));
        let back = read_csv(&buf[..]).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].n, 8);
        let rel = (back[0].e0.unwrap() - records[0].e0.unwrap()).abs()
            / records[0].e0.unwrap().abs();
        assert!(rel < 1e-11);
        // c_of_r is a JSONL-only field
        assert!(back[0].c_of_r.is_none());
    }

    #[test]
    fn jsonl_round_trip_is_exact() {
        let records = vec![sample_record()];
        let mut buf = Vec::new();
        write_jsonl(&records, &mut buf).unwrap();
        let back = read_jsonl(&buf[..]).unwrap();
        assert_eq!(back[0].e0, records[0].e0);
        assert_eq!(back[0].c_of_r, records[0].c_of_r);
        assert_eq!(back[0].residual0, records[0].residual0);
    }

    #[test]
    fn read_csv_rejects_missing_columns() {
        let bad = "n,lambda\n4,1.0\n";
        assert!(read_csv(bad.as_bytes()).is_err());
    }
}
