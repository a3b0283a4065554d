//! Text formats: fixed-precision numbers, CSV records and structured reports.

use crate::error::{Error, Result};
use crate::models::ModelId;
use crate::scaling::SweepRecord;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

/// Decimal rendering with 12 significant digits, independent of locale.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0.00000000000e0".to_string();
    }
    format!("{x:.11e}")
}

/// Rounds to the precision of [`fmt_num`].
pub fn round_sig(x: f64) -> f64 {
    fmt_num(x).parse().unwrap_or(x)
}

pub const TIME_HEADER: [&str; 8] = ["model", "L", "d", "K", "seed", "t", "f", "cgp"];
pub const SWEEP_HEADER: [&str; 9] = ["model", "L", "d", "K", "seed", "n_times", "mean_f", "stderr_f", "mean_cgp"];
pub const MC_HEADER: [&str; 3] = ["decomposition", "sample", "cgp"];

/// One time sample of a long-time average run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeRow {
    pub model: ModelId,
    #[serde(rename = "L")]
    pub l: usize,
    pub d: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub seed: u64,
    pub t: f64,
    pub f: f64,
    pub cgp: f64,
}

/// One block-Haar sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McRow {
    pub decomposition: String,
    pub sample: usize,
    pub cgp: f64,
}

fn write_rows<W: Write>(out: W, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<T: for<'de> Deserialize<'de>, R: Read>(input: R, header: &[&str]) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(input);
    let found: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if found != header {
        return Err(Error::Invalid(format!("unexpected CSV header {found:?}, expected {header:?}")));
    }
    let rows = r.deserialize().collect::<std::result::Result<Vec<T>, _>>()?;
    Ok(rows)
}

pub fn write_time_rows<W: Write>(out: W, rows: &[TimeRow]) -> Result<()> {
    write_rows(
        out,
        &TIME_HEADER,
        rows.iter().map(|r| {
            vec![
                r.model.name().to_string(),
                r.l.to_string(),
                r.d.to_string(),
                r.k.to_string(),
                r.seed.to_string(),
                fmt_num(r.t),
                fmt_num(r.f),
                fmt_num(r.cgp),
            ]
        }),
    )
}

pub fn read_time_rows<R: Read>(input: R) -> Result<Vec<TimeRow>> {
    read_rows(input, &TIME_HEADER)
}

pub fn write_sweep<W: Write>(out: W, rows: &[SweepRecord]) -> Result<()> {
    write_rows(
        out,
        &SWEEP_HEADER,
        rows.iter().map(|r| {
            vec![
                r.model.name().to_string(),
                r.l.to_string(),
                r.d.to_string(),
                r.k.to_string(),
                r.seed.to_string(),
                r.n_times.to_string(),
                fmt_num(r.mean_f),
                fmt_num(r.stderr_f),
                fmt_num(r.mean_cgp),
            ]
        }),
    )
}

/// Parses a sweep CSV; an empty table is an error.
pub fn read_sweep<R: Read>(input: R) -> Result<Vec<SweepRecord>> {
    let rows: Vec<SweepRecord> = read_rows(input, &SWEEP_HEADER)?;
    if rows.is_empty() {
        return Err(Error::Invalid("sweep CSV has no records".into()));
    }
    Ok(rows)
}

pub fn write_mc_rows<W: Write>(out: W, rows: &[McRow]) -> Result<()> {
    write_rows(
        out,
        &MC_HEADER,
        rows.iter().map(|r| vec![r.decomposition.clone(), r.sample.to_string(), fmt_num(r.cgp)]),
    )
}

pub fn read_mc_rows<R: Read>(input: R) -> Result<Vec<McRow>> {
    read_rows(input, &MC_HEADER)
}

/// Generic CSV table with a given header; floats go through [`fmt_num`].
pub fn write_table<W: Write>(out: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    write_rows(out, header, rows.iter().cloned())
}

fn round_value(v: serde_json::Value) -> serde_json::Value {
    use serde_json::Value;
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().unwrap_or(f64::NAN));
            serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_value).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_value(v))).collect()),
        other => other,
    }
}

/// Structured-text report: pretty JSON with every float cut to 12 significant digits.
pub fn to_report<T: Serialize>(value: &T) -> Result<String> {
    let v = round_value(serde_json::to_value(value)?);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

pub fn write_report<W: Write, T: Serialize>(mut out: W, value: &T) -> Result<()> {
    out.write_all(to_report(value)?.as_bytes())?;
    Ok(())
}

fn write_columns(path: &Path, rows: &[(f64, f64)]) -> Result<()> {
    let mut s = String::new();
    for &(x, y) in rows {
        s.push_str(&fmt_num(x));
        s.push(' ');
        s.push_str(&fmt_num(y));
        s.push('\n');
    }
    std::fs::write(path, s)?;
    Ok(())
}

/// Writes `<model>_f.dat` (ln d, ln mean_f), `<model>_K.dat` (ln d, ln K) and
/// `<model>_cgp.dat` (ln d, mean_cgp), one line per record in size order.
pub fn export_plotdata(records: &[SweepRecord], dir: &Path) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(Error::Invalid("no sweep records to export".into()));
    }
    std::fs::create_dir_all(dir)?;
    let mut sorted: Vec<&SweepRecord> = records.iter().collect();
    sorted.sort_by_key(|r| (r.model.name(), r.l, r.seed));
    let mut written = Vec::new();
    let mut models: Vec<ModelId> = sorted.iter().map(|r| r.model).collect();
    models.dedup();
    for m in models {
        let rs: Vec<&&SweepRecord> = sorted.iter().filter(|r| r.model == m).collect();
        let ln_d = |r: &SweepRecord| (r.d as f64).ln();
        let files = [
            ("f", rs.iter().map(|r| (ln_d(r), r.mean_f.ln())).collect::<Vec<_>>()),
            ("K", rs.iter().map(|r| (ln_d(r), (r.k as f64).ln())).collect()),
            ("cgp", rs.iter().map(|r| (ln_d(r), r.mean_cgp)).collect()),
        ];
        for (suffix, rows) in files {
            let path = dir.join(format!("{}_{suffix}.dat", m.name()));
            write_columns(&path, &rows)?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Parses a two-column plot file back into pairs.
pub fn read_columns(text: &str) -> Result<Vec<(f64, f64)>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let mut it = l.split_whitespace().map(str::parse::<f64>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(x)), Some(Ok(y)), None) => Ok((x, y)),
                _ => Err(Error::Invalid(format!("malformed plot line {l:?}"))),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(l: usize, mean_f: f64) -> SweepRecord {
        SweepRecord {
            model: ModelId::Tjz,
            l,
            d: 3usize.pow(l as u32),
            k: (1 << (l + 1)) - 1,
            seed: 4,
            n_times: 200,
            mean_f,
            stderr_f: 0.012345678901234,
            mean_cgp: 1.0 / 3.0,
        }
    }

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(1.0 / 3.0), "3.33333333333e-1");
        assert_eq!(fmt_num(-1234.5), "-1.23450000000e3");
        assert_eq!(fmt_num(0.0), "0.00000000000e0");
        assert_eq!(round_sig(0.1234567890123456), 0.123456789012);
    }

    #[test]
    fn sweep_round_trip_is_byte_exact() {
        let rows = vec![rec(2, 7.5), rec(3, 16.25)];
        let mut a = Vec::new();
        write_sweep(&mut a, &rows).unwrap();
        let text = String::from_utf8(a.clone()).unwrap();
        assert!(text.starts_with("model,L,d,K,seed,n_times,mean_f,stderr_f,mean_cgp\n"));
        let back = read_sweep(a.as_slice()).unwrap();
        assert_eq!(back[1].mean_cgp, round_sig(1.0 / 3.0));
        let mut b = Vec::new();
        write_sweep(&mut b, &back).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_or_malformed_sweep_is_rejected() {
        assert!(read_sweep("model,L,d,K,seed,n_times,mean_f,stderr_f,mean_cgp\n".as_bytes()).is_err());
        assert!(read_sweep("".as_bytes()).is_err());
        assert!(read_sweep("a,b\n1,2\n".as_bytes()).is_err());
        assert!(read_sweep("model,L,d,K,seed,n_times,mean_f,stderr_f,mean_cgp\nxxz,2,4,3,0,2,x,0,0\n".as_bytes()).is_err());
    }

    #[test]
    fn time_and_mc_round_trip() {
        let t = vec![TimeRow { model: ModelId::Xxz, l: 2, d: 4, k: 3, seed: 0, t: 123.456, f: 3.2, cgp: 0.2 }];
        let mut a = Vec::new();
        write_time_rows(&mut a, &t).unwrap();
        assert_eq!(read_time_rows(a.as_slice()).unwrap(), t);
        let m = vec![McRow { decomposition: "xxz-L2".into(), sample: 0, cgp: 0.25 }];
        let mut b = Vec::new();
        write_mc_rows(&mut b, &m).unwrap();
        assert_eq!(read_mc_rows(b.as_slice()).unwrap(), m);
    }

    #[test]
    fn report_rounds_floats() {
        let s = to_report(&serde_json::json!({"x": 0.1234567890123456, "n": 3})).unwrap();
        assert!(s.contains("0.123456789012") && s.contains("\"n\": 3"));
    }

    #[test]
    fn plot_files_reparse() {
        let dir = std::env::temp_dir().join(format!("fragcgp-plot-{}", std::process::id()));
        let paths = export_plotdata(&[rec(3, 16.25), rec(2, 7.5)], &dir).unwrap();
        assert_eq!(paths.len(), 3);
        let k = read_columns(&std::fs::read_to_string(&paths[1]).unwrap()).unwrap();
        assert_eq!(k[0], (round_sig(9f64.ln()), round_sig(7f64.ln())));
        assert!(export_plotdata(&[], &dir).is_err());
        std::fs::remove_dir_all(dir).ok();
    }
}
