//! CSV readers and writers for every file the pipeline exchanges.
//!
//! | file        | columns                               |
//! |-------------|---------------------------------------|
//! | signal      | `time,value`                          |
//! | truth       | `time`                                |
//! | detections  | `time,score,kind`                     |
//! | weights     | `index,w0,w1,...`                     |
//! | trace       | `index,time,d,e,v,v0,v1,...`          |
//!
//! Floats are written with Rust's shortest round-trip formatting, so output
//! is byte-stable and parses back to the same values.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::kernel::DiscreteDetector;
use crate::runtime::{DecisionTrace, Detection};

/// A uniformly sampled series as read from a signal CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl Series {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Self {
        debug_assert_eq!(times.len(), values.len());
        Self { times, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn t0(&self) -> f64 {
        self.times.first().copied().unwrap_or(0.0)
    }

    /// Sample period estimated from the time column.
    ///
    /// Fails if fewer than two samples, or if any step deviates from the mean
    /// step by more than 1e-6 relative.
    pub fn sample_period(&self) -> Result<f64> {
        let n = self.times.len();
        if n < 2 {
            return Err(Error::Parse("need at least two samples to infer dt".into()));
        }
        let h = (self.times[n - 1] - self.times[0]) / (n - 1) as f64;
        if !(h > 0.0) {
            return Err(Error::Parse("time column must increase".into()));
        }
        for (i, w) in self.times.windows(2).enumerate() {
            if ((w[1] - w[0]) - h).abs() > 1e-6 * h {
                return Err(Error::Parse(format!(
                    "non-uniform sampling at row {}: step {} vs mean {h}",
                    i + 1,
                    w[1] - w[0]
                )));
            }
        }
        Ok(h)
    }
}

fn check_header(rdr: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<()> {
    let got: Vec<String> = rdr.headers()?.iter().map(|s| s.trim().to_string()).collect();
    if got.len() < expected.len() || got.iter().zip(expected).any(|(g, e)| g != e) {
        return Err(Error::Parse(format!(
            "expected header `{}`, got `{}`",
            expected.join(","),
            got.join(",")
        )));
    }
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: u64) -> Result<T> {
    let raw = rec.get(i).ok_or_else(|| Error::Parse(format!("line {line}: missing column {i}")))?;
    raw.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: cannot parse `{raw}`")))
}

fn reader(r: impl Read) -> csv::Reader<impl Read> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r)
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

pub fn read_signal(r: impl Read) -> Result<Series> {
    let mut rdr = reader(r);
    check_header(&mut rdr, &["time", "value"])?;
    let (mut times, mut values) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        times.push(field(&rec, 0, line)?);
        values.push(field(&rec, 1, line)?);
    }
    Ok(Series { times, values })
}

pub fn write_signal(w: impl Write, times: &[f64], values: &[f64]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["time", "value"])?;
    for (t, x) in times.iter().zip(values) {
        wtr.write_record([t.to_string(), x.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_truth(r: impl Read) -> Result<Vec<f64>> {
    let mut rdr = reader(r);
    check_header(&mut rdr, &["time"])?;
    rdr.records().map(|rec| {
        let rec = rec?;
        field(&rec, 0, line_of(&rec))
    })
    .collect()
}

pub fn write_truth(w: impl Write, times: &[f64]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["time"])?;
    for t in times {
        wtr.write_record([t.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads `time,score,kind`; the window index is not stored and comes back as 0.
pub fn read_detections(r: impl Read) -> Result<Vec<Detection>> {
    let mut rdr = reader(r);
    check_header(&mut rdr, &["time", "score", "kind"])?;
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            let line = line_of(&rec);
            Ok(Detection {
                time: field(&rec, 0, line)?,
                score: field(&rec, 1, line)?,
                kind: field(&rec, 2, line)?,
                window_index: 0,
            })
        })
        .collect()
}

pub fn write_detections(w: impl Write, dets: &[Detection]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["time", "score", "kind"])?;
    for d in dets {
        wtr.write_record([d.time.to_string(), d.score.to_string(), d.kind.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_weights(w: impl Write, det: &DiscreteDetector) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let weights = det.weights();
    let mut header = vec!["index".to_string()];
    header.extend((0..weights.len()).map(|nu| format!("w{nu}")));
    wtr.write_record(&header)?;
    for i in 0..det.window() {
        let mut row = vec![i.to_string()];
        row.extend(weights.iter().map(|w| w[i].to_string()));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads the weight table back as `[nu][i]`.
pub fn read_weights(r: impl Read) -> Result<Vec<Vec<f64>>> {
    let mut rdr = reader(r);
    let headers = rdr.headers()?.clone();
    if headers.get(0).map(str::trim) != Some("index") || headers.len() < 2 {
        return Err(Error::Parse("expected header `index,w0,...`".into()));
    }
    let mut out = vec![Vec::new(); headers.len() - 1];
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        for (nu, col) in out.iter_mut().enumerate() {
            col.push(field(&rec, nu + 1, line)?);
        }
    }
    Ok(out)
}

pub fn write_trace(w: impl Write, trace: &DecisionTrace) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header: Vec<String> = ["index", "time", "d", "e", "v"].map(String::from).to_vec();
    header.extend((0..trace.v_nu.len()).map(|nu| format!("v{nu}")));
    wtr.write_record(&header)?;
    for k in 0..trace.len() {
        let mut row = vec![
            k.to_string(),
            trace.t_of(k).to_string(),
            trace.d[k].to_string(),
            trace.e[k].to_string(),
            trace.v[k].to_string(),
        ];
        row.extend(trace.v_nu.iter().map(|v| v[k].to_string()));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// `(time, d)` columns of a trace CSV, enough to plot the decision panel.
pub fn read_trace_decision(r: impl Read) -> Result<Series> {
    let mut rdr = reader(r);
    check_header(&mut rdr, &["index", "time", "d"])?;
    let (mut times, mut values) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        times.push(field(&rec, 1, line)?);
        values.push(field(&rec, 2, line)?);
    }
    Ok(Series { times, values })
}

/// Opens `path` for buffered writing, creating parent directories.
pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

pub fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signal_round_trip() {
        let times: Vec<f64> = (0..5).map(|i| i as f64 * 0.01).collect();
        let values = vec![1.0, -0.5, 1e-300, std::f64::consts::PI, -0.0];
        let mut buf = Vec::new();
        write_signal(&mut buf, &times, &values).unwrap();
        let s = read_signal(buf.as_slice()).unwrap();
        assert_eq!(s.times, times);
        assert_eq!(s.values, values);
        assert!((s.sample_period().unwrap() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn header_is_checked() {
        let err = read_signal("t,x\n0,1\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("time,value"), "{err}");
        assert!(read_signal("time,value\n0,abc\n".as_bytes()).is_err());
    }

    #[test]
    fn irregular_time_is_rejected() {
        let s = read_signal("time,value\n0,1\n0.01,1\n0.03,1\n".as_bytes()).unwrap();
        assert!(s.sample_period().is_err());
    }

    #[test]
    fn detections_round_trip() {
        let dets = vec![
            Detection { time: 2.5, kind: 0, score: 4.25, window_index: 0 },
            Detection { time: 7.125, kind: 1, score: 10.0, window_index: 0 },
        ];
        let mut buf = Vec::new();
        write_detections(&mut buf, &dets).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "time,score,kind\n2.5,4.25,0\n7.125,10,1\n"
        );
        assert_eq!(read_detections(buf.as_slice()).unwrap(), dets);
    }

    #[test]
    fn truth_round_trip() {
        let mut buf = Vec::new();
        write_truth(&mut buf, &[8.0, 15.5]).unwrap();
        assert_eq!(read_truth(buf.as_slice()).unwrap(), vec![8.0, 15.5]);
    }
}
