//! CSV readers and writers for patterns, fit samples, Monte-Carlo dumps and
//! pipeline comparisons.

use std::io::{Read, Write};

use csv::{ReaderBuilder, StringRecord, WriterBuilder};

use crate::baseline::Comparison;
use crate::error::{Error, Result};
use crate::fixtures::Pattern;
use crate::montecarlo::McSample;
use crate::network::MAX_CODE;
use crate::variation::{SampleKind, SampleRow};

/// Column names of the sample file.
pub const SAMPLE_COLUMNS: [&str; 5] = ["phi1", "phi2", "code", "variant", "measured_weight"];

fn csv_err(e: csv::Error) -> Error {
    if e.is_io_error() {
        if let csv::ErrorKind::Io(io) = e.into_kind() {
            return Error::Io(io);
        }
        unreachable!("is_io_error implies an Io kind");
    }
    match e.position() {
        Some(p) => Error::Format(format!("line {}: {e}", p.line())),
        None => Error::Format(e.to_string()),
    }
}

fn line_of(r: &StringRecord) -> u64 {
    r.position().map_or(0, |p| p.line())
}

fn parse_f64(field: &str, line: u64, what: &str) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| Error::Format(format!("line {line}: {what} {field:?} is not a number")))?;
    if !v.is_finite() {
        return Err(Error::Format(format!("line {line}: {what} is not finite")));
    }
    Ok(v)
}

/// Reads patterns: one row per pattern, the label in the last column. A first
/// row that does not parse as numbers is taken as a header.
pub fn read_patterns(reader: impl Read) -> Result<Vec<Pattern>> {
    let mut rdr = ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    let mut width = None;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = line_of(&rec);
        if i == 0 && rec.iter().any(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        if rec.len() < 2 {
            return Err(Error::Format(format!("line {line}: need at least one input and a label")));
        }
        if *width.get_or_insert(rec.len()) != rec.len() {
            return Err(Error::Format(format!("line {line}: expected {} columns", width.unwrap())));
        }
        let x = rec
            .iter()
            .take(rec.len() - 1)
            .map(|f| parse_f64(f, line, "input"))
            .collect::<Result<Vec<_>>>()?;
        let lf = &rec[rec.len() - 1];
        let label: usize = lf
            .parse()
            .map_err(|_| Error::Format(format!("line {line}: label {lf:?} is not a class index")))?;
        out.push(Pattern { x, label });
    }
    Ok(out)
}

pub fn write_patterns(writer: impl Write, patterns: &[Pattern]) -> Result<()> {
    let mut w = WriterBuilder::new().from_writer(writer);
    if let Some(p) = patterns.first() {
        let mut header: Vec<String> = (0..p.x.len()).map(|i| format!("x{i}")).collect();
        header.push("label".into());
        w.write_record(&header).map_err(csv_err)?;
    }
    for p in patterns {
        let mut row: Vec<String> = p.x.iter().map(|v| v.to_string()).collect();
        row.push(p.label.to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads fit samples. The header must name the columns of
/// [`SAMPLE_COLUMNS`] in any order; extra columns are ignored.
pub fn read_samples(reader: impl Read) -> Result<Vec<SampleRow>> {
    let mut rdr = ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.is_empty() {
        return Ok(Vec::new());
    }
    let mut idx = [0usize; 5];
    for (k, name) in SAMPLE_COLUMNS.iter().enumerate() {
        idx[k] = header
            .iter()
            .position(|h| h == *name)
            .ok_or_else(|| Error::Format(format!("sample file has no {name} column")))?;
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = line_of(&rec);
        let phi1 = parse_f64(&rec[idx[0]], line, "phi1")?;
        let phi2 = parse_f64(&rec[idx[1]], line, "phi2")?;
        let code: i64 = rec[idx[2]]
            .parse()
            .map_err(|_| Error::Format(format!("line {line}: code {:?} is not an integer", &rec[idx[2]])))?;
        if !(0..=MAX_CODE as i64).contains(&code) {
            return Err(Error::Format(format!("line {line}: {}", Error::CodeOutOfRange(code))));
        }
        let kind: SampleKind = rec[idx[3]]
            .parse()
            .map_err(|e| Error::Format(format!("line {line}: {e}")))?;
        let measured = parse_f64(&rec[idx[4]], line, "measured_weight")?;
        out.push(SampleRow {
            phi1,
            phi2,
            code: code as u8,
            kind,
            measured,
        });
    }
    Ok(out)
}

pub fn write_samples(writer: impl Write, rows: &[SampleRow]) -> Result<()> {
    let mut w = WriterBuilder::new().from_writer(writer);
    w.write_record(SAMPLE_COLUMNS).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.phi1.to_string(),
            r.phi2.to_string(),
            r.code.to_string(),
            r.kind.to_string(),
            r.measured.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Monte-Carlo dump. Rows carry the pattern index, the sample seed, the
/// parameter draw and every output coordinate.
pub struct McDumpWriter<W: Write> {
    inner: csv::Writer<W>,
    outputs: Option<usize>,
}

impl<W: Write> McDumpWriter<W> {
    pub fn new(writer: W) -> Self {
        Self {
            inner: WriterBuilder::new().from_writer(writer),
            outputs: None,
        }
    }

    pub fn write(&mut self, pattern: usize, samples: &[McSample]) -> Result<()> {
        for s in samples {
            if self.outputs.is_none() {
                let mut header: Vec<String> = ["pattern", "seed", "d1", "d2", "d3"].map(String::from).to_vec();
                header.extend((0..s.output.len()).map(|i| format!("y{i}")));
                self.inner.write_record(&header).map_err(csv_err)?;
                self.outputs = Some(s.output.len());
            }
            let mut row = vec![
                pattern.to_string(),
                s.seed.to_string(),
                s.params.d1.to_string(),
                s.params.d2.to_string(),
                s.params.d3.to_string(),
            ];
            row.extend(s.output.iter().map(|v| v.to_string()));
            self.inner.write_record(&row).map_err(csv_err)?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

pub const COMPARE_COLUMNS: [&str; 10] = [
    "pattern",
    "output",
    "poly_lower",
    "poly_upper",
    "poly_width",
    "zono_lower",
    "zono_upper",
    "zono_width",
    "poly_verified",
    "zono_verified",
];

/// One row per pattern and output coordinate.
pub fn write_comparisons(writer: impl Write, rows: &[Comparison]) -> Result<()> {
    let mut w = WriterBuilder::new().from_writer(writer);
    w.write_record(COMPARE_COLUMNS).map_err(csv_err)?;
    for (p, c) in rows.iter().enumerate() {
        let (ph, zh) = (&c.polynomial.hull, &c.zonotope.hull);
        for i in 0..ph.dim() {
            w.write_record([
                p.to_string(),
                i.to_string(),
                ph.lower[i].to_string(),
                ph.upper[i].to_string(),
                ph.width(i).to_string(),
                zh.lower[i].to_string(),
                zh.upper[i].to_string(),
                zh.width(i).to_string(),
                c.polynomial.verified.to_string(),
                c.zonotope.verified.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::variation::Variant;

    #[test]
    fn patterns_with_and_without_header() {
        let a = read_patterns("x0,x1,label\n0.5,-1,2\n0,1e-3,0\n".as_bytes()).unwrap();
        let b = read_patterns("0.5,-1,2\n0,1e-3,0\n".as_bytes()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0], Pattern { x: vec![0.5, -1.0], label: 2 });
    }

    #[test]
    fn pattern_errors_name_the_line() {
        let e = read_patterns("1,2,0\n1,zz,0\n".as_bytes()).unwrap_err().to_string();
        assert!(e.contains("line 2"), "{e}");
        let e = read_patterns("1,2,0\n1,2,1.5\n".as_bytes()).unwrap_err().to_string();
        assert!(e.contains("label"), "{e}");
    }

    #[test]
    fn patterns_roundtrip() {
        let p = vec![
            Pattern { x: vec![0.1, 0.2], label: 1 },
            Pattern { x: vec![-0.3, 1.0 / 3.0], label: 0 },
        ];
        let mut buf = Vec::new();
        write_patterns(&mut buf, &p).unwrap();
        assert_eq!(read_patterns(buf.as_slice()).unwrap(), p);
    }

    #[test]
    fn samples_roundtrip_and_schema() {
        let rows = vec![
            SampleRow { phi1: 1.01, phi2: 0.97, code: 5, kind: SampleKind::Weight(Variant::FirstNeg), measured: -1.6 },
            SampleRow { phi1: 0.99, phi2: 1.02, code: 63, kind: SampleKind::Leak, measured: 1e-3 },
        ];
        let mut buf = Vec::new();
        write_samples(&mut buf, &rows).unwrap();
        assert_eq!(read_samples(buf.as_slice()).unwrap(), rows);

        let e = read_samples("phi1,phi2,code,measured_weight\n1,1,1,0\n".as_bytes()).unwrap_err();
        assert!(e.to_string().contains("no variant column"));
        let e = read_samples("phi1,phi2,code,variant,measured_weight\n1,1,64,hidden,0\n".as_bytes()).unwrap_err();
        assert!(e.to_string().contains("line 2"));
    }

    #[test]
    fn empty_sample_file_has_no_rows() {
        assert!(read_samples("phi1,phi2,code,variant,measured_weight\n".as_bytes()).unwrap().is_empty());
        assert!(read_samples("".as_bytes()).unwrap().is_empty());
    }
}
