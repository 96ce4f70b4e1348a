//! File formats shared by the command-line stages.
//!
//! Point clouds and time series are headerless numeric CSV, one row per point
//! or time step. A packed stream is one CSV with header `frame,x0,x1,...` and
//! one row per point. Images are plain (P2) or binary (P5) PGM, or a numeric
//! CSV grid. Diagram streams are JSON arrays of diagrams, each a list of
//! `{birth, death, dim}` with `"inf"` for essential deaths. Floats are written
//! in shortest round-trip form, so reading back is bit-identical.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::cloud::{Grid, PointCloud};
use crate::detect::{StatTrace, TraceRecord};
use crate::error::{Error, Result};
use crate::experiment::CurvePoint;
use crate::tda::PersistenceDiagram;

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| Error::Parse(format!("line {line}: not a number: {field:?}")))
}

/// Headerless numeric CSV with rows of equal length.
pub fn read_matrix_csv<R: Read>(reader: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec.iter().map(|f| parse_f64(f, i + 1)).collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::DimensionMismatch { expected: first.len(), found: row.len() });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("CSV file"));
    }
    Ok(rows)
}

pub fn write_matrix_csv<W: Write>(writer: W, rows: impl IntoIterator<Item = impl AsRef<[f64]>>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    for row in rows {
        w.write_record(row.as_ref().iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_point_cloud(path: &Path) -> Result<PointCloud> {
    PointCloud::from_rows(&read_matrix_csv(File::open(path)?)?)
}

pub fn write_point_cloud(path: &Path, cloud: &PointCloud) -> Result<()> {
    write_matrix_csv(BufWriter::new(File::create(path)?), cloud.points())
}

/// Multivariate time series, one row per time step.
pub fn read_series(path: &Path) -> Result<Vec<Vec<f64>>> {
    read_matrix_csv(File::open(path)?)
}

pub fn write_stream<W: Write>(writer: W, frames: &[PointCloud]) -> Result<()> {
    let dim = frames.first().map(PointCloud::dim).ok_or(Error::EmptyInput("frames"))?;
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["frame".to_string()];
    header.extend((0..dim).map(|j| format!("x{j}")));
    w.write_record(&header)?;
    for (t, f) in frames.iter().enumerate() {
        if f.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: f.dim() });
        }
        for p in f.points() {
            w.write_record(std::iter::once(t.to_string()).chain(p.iter().map(|v| v.to_string())))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Packed stream; frame indices must run 0, 1, 2, ... without gaps.
pub fn read_stream<R: Read>(reader: R) -> Result<Vec<PointCloud>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.get(0) != Some("frame") || header.len() < 2 {
        return Err(Error::Parse("packed stream header must be frame,x0,x1,...".into()));
    }
    let dim = header.len() - 1;
    let mut frames: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let t: usize = rec[0].parse().map_err(|_| Error::Parse(format!("line {line}: bad frame index {:?}", &rec[0])))?;
        if t == frames.len() {
            frames.push(Vec::new());
        } else if t + 1 != frames.len() {
            return Err(Error::Parse(format!("line {line}: frame {t} out of order")));
        }
        let cur = frames.last_mut().expect("frame pushed above");
        for f in rec.iter().skip(1) {
            cur.push(parse_f64(f, line)?);
        }
    }
    if frames.is_empty() {
        return Err(Error::EmptyInput("stream file"));
    }
    frames.into_iter().map(|coords| PointCloud::new(dim, coords)).collect()
}

pub fn read_stream_file(path: &Path) -> Result<Vec<PointCloud>> {
    read_stream(BufReader::new(File::open(path)?))
}

pub fn write_stream_file(path: &Path, frames: &[PointCloud]) -> Result<()> {
    write_stream(BufWriter::new(File::create(path)?), frames)
}

/// PGM (`.pgm`) or numeric CSV grid, chosen by extension.
pub fn read_image(path: &Path) -> Result<Grid> {
    let is_pgm = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    if is_pgm {
        let mut bytes = Vec::new();
        File::open(path)?.read_to_end(&mut bytes)?;
        parse_pgm(&bytes)
    } else {
        Grid::from_rows(&read_matrix_csv(File::open(path)?)?)
    }
}

/// Plain (P2) or binary (P5, 8 or 16 bit) graymap; values are raw gray levels.
pub fn parse_pgm(bytes: &[u8]) -> Result<Grid> {
    let mut pos = 0;
    let mut token = || -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Parse("truncated PGM header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = token()?;
    let num = |s: String| s.parse::<usize>().map_err(|_| Error::Parse(format!("bad PGM header field {s:?}")));
    let cols = num(token()?)?;
    let rows = num(token()?)?;
    let maxval = num(token()?)?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Parse(format!("PGM maxval {maxval} out of range")));
    }
    let n = rows * cols;
    let values = match magic.as_str() {
        "P2" => (0..n).map(|_| token().and_then(|t| num(t)).map(|v| v as f64)).collect::<Result<Vec<_>>>()?,
        "P5" => {
            // One whitespace byte separates the header from the raster.
            let data = bytes.get(pos + 1..).unwrap_or(&[]);
            let width = if maxval < 256 { 1 } else { 2 };
            if data.len() < n * width {
                return Err(Error::Parse("truncated PGM raster".into()));
            }
            if width == 1 {
                data[..n].iter().map(|&b| f64::from(b)).collect()
            } else {
                data[..2 * n].chunks(2).map(|c| f64::from(u16::from_be_bytes([c[0], c[1]]))).collect()
            }
        }
        other => return Err(Error::Parse(format!("unsupported PGM magic {other:?}"))),
    };
    Grid::new(rows, cols, values)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_diagrams(path: &Path) -> Result<Vec<PersistenceDiagram>> {
    let d: Vec<PersistenceDiagram> = read_json(path)?;
    if d.is_empty() {
        return Err(Error::EmptyInput("diagram file"));
    }
    Ok(d)
}

pub fn write_diagrams(path: &Path, diagrams: &[PersistenceDiagram]) -> Result<()> {
    write_json(path, diagrams)
}

const TRACE_HEADER: [&str; 4] = ["t", "chi_max", "k_star", "alarm"];

/// CSV `t,chi_max,k_star,alarm`; `k_star` is empty when undefined and
/// `alarm` is 0 or 1.
pub fn write_trace<W: Write>(writer: W, trace: &StatTrace) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRACE_HEADER)?;
    for r in &trace.records {
        let k = r.k_star.map(|k| k.to_string()).unwrap_or_default();
        w.write_record([r.t.to_string(), r.chi_max.to_string(), k, u8::from(r.alarm).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace<R: Read>(reader: R) -> Result<StatTrace> {
    let mut rdr = csv::Reader::from_reader(reader);
    if rdr.headers()?.iter().ne(TRACE_HEADER) {
        return Err(Error::Parse("trace header must be t,chi_max,k_star,alarm".into()));
    }
    let mut records = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |what: &str| Error::Parse(format!("line {line}: bad {what}"));
        records.push(TraceRecord {
            t: rec[0].parse().map_err(|_| bad("t"))?,
            chi_max: parse_f64(&rec[1], line)?,
            k_star: if rec[2].is_empty() { None } else { Some(rec[2].parse().map_err(|_| bad("k_star"))?) },
            alarm: match &rec[3] {
                "0" => false,
                "1" => true,
                _ => return Err(bad("alarm flag")),
            },
        });
    }
    Ok(StatTrace { records })
}

pub fn write_trace_file(path: &Path, trace: &StatTrace) -> Result<()> {
    write_trace(BufWriter::new(File::create(path)?), trace)
}

/// CSV with columns `target_arl,threshold,ARL,log_ARL,EDD,censored,sequences`.
pub fn write_curve<W: Write>(writer: W, curve: &[CurvePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["target_arl", "threshold", "ARL", "log_ARL", "EDD", "censored", "sequences"])?;
    for p in curve {
        w.write_record([
            p.target_arl.to_string(),
            p.threshold.to_string(),
            p.arl.to_string(),
            p.arl.ln().to_string(),
            p.edd.to_string(),
            p.censored.to_string(),
            p.sequences.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
