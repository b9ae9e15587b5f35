//! CSV formats for traces, labels and detections.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{CsiTrace, DetectionEvent, LabelSegment};
use crate::error::{invalid, Result};
use crate::Scalar;

#[derive(Serialize, Deserialize)]
struct SampleRow {
    sample_index: usize,
    subcarrier: usize,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct LabelRow {
    start_sample: usize,
    end_sample: usize,
    class_id: u32,
}

#[derive(Serialize, Deserialize)]
struct DetectionRow {
    onset_sample: usize,
    trigger_delta_power: f64,
}

/// Writes `sample_index,subcarrier,re,im` rows, sample-major.
pub fn write_trace<T: Scalar, W: Write>(trace: &CsiTrace<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for m in 0..trace.len() {
        for (n, sc) in trace.subcarriers.iter().enumerate() {
            w.serialize(SampleRow {
                sample_index: m,
                subcarrier: n,
                re: sc[m].re.to_f64_lossy(),
                im: sc[m].im.to_f64_lossy(),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a trace CSV; every `(sample_index, subcarrier)` pair must appear once.
pub fn read_trace<T: Scalar, R: Read>(input: R, sample_rate: T) -> Result<CsiTrace<T>> {
    let mut rows = Vec::new();
    for r in csv::Reader::from_reader(input).deserialize::<SampleRow>() {
        rows.push(r?);
    }
    let n_sub = rows.iter().map(|r| r.subcarrier + 1).max().unwrap_or(0);
    let len = rows.iter().map(|r| r.sample_index + 1).max().unwrap_or(0);
    if n_sub == 0 || len == 0 {
        return Err(invalid("trace file has no samples"));
    }
    if rows.len() != n_sub * len {
        return Err(invalid(format!(
            "trace file has {} rows, expected {len} samples x {n_sub} subcarriers",
            rows.len()
        )));
    }
    let mut seen = vec![false; n_sub * len];
    let mut subcarriers = vec![vec![Complex::new(T::zero(), T::zero()); len]; n_sub];
    for r in rows {
        let slot = r.subcarrier * len + r.sample_index;
        if std::mem::replace(&mut seen[slot], true) {
            return Err(invalid(format!(
                "duplicate sample {} on subcarrier {}",
                r.sample_index, r.subcarrier
            )));
        }
        subcarriers[r.subcarrier][r.sample_index] = Complex::new(T::lit(r.re), T::lit(r.im));
    }
    CsiTrace::new(subcarriers, sample_rate, Vec::new())
}

pub fn write_labels<W: Write>(labels: &[LabelSegment], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for l in labels {
        w.serialize(LabelRow {
            start_sample: l.start,
            end_sample: l.end,
            class_id: l.class_id,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_labels<R: Read>(input: R) -> Result<Vec<LabelSegment>> {
    csv::Reader::from_reader(input)
        .deserialize::<LabelRow>()
        .map(|r| {
            let r = r?;
            Ok(LabelSegment {
                start: r.start_sample,
                end: r.end_sample,
                class_id: r.class_id,
            })
        })
        .collect()
}

pub fn write_detections<T: Scalar, W: Write>(events: &[DetectionEvent<T>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for e in events {
        w.serialize(DetectionRow {
            onset_sample: e.onset_sample,
            trigger_delta_power: e.trigger_delta_power.to_f64_lossy(),
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Loads a trace and, if present, its label sidecar.
pub fn load_trace<T: Scalar>(path: &Path, labels: Option<&Path>, sample_rate: T) -> Result<CsiTrace<T>> {
    let mut trace = read_trace(std::fs::File::open(path)?, sample_rate)?;
    if let Some(l) = labels {
        trace.labels = read_labels(std::fs::File::open(l)?)?;
        trace.validate()?;
    }
    Ok(trace)
}
