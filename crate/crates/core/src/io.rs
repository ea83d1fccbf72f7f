//! File formats: rasters (JSON and CSV), distance matrices, diagrams, lick
//! times and reports.
//!
//! Every float written by this module goes through [`fmt_num`], which keeps
//! twelve significant digits so outputs diff cleanly across platforms.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::single_neuron::LickTimes;
use crate::types::{Bar, Dataset, DistanceMatrix, PersistenceDiagram, RasterFile, RawTrial};

/// Significant digits kept in numeric output.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Rounds to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().expect("formatted float parses")
}

/// Shortest decimal text of `x` rounded to twelve significant digits; `inf`
/// and `-inf` for infinities. Negative zero prints as `0`.
pub fn fmt_num(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = round_sig(x);
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

pub fn parse_num(s: &str) -> Result<f64> {
    match s.trim() {
        "inf" | "+inf" | "Inf" | "infinity" => Ok(f64::INFINITY),
        t => t.parse().map_err(|_| Error::Parse(format!("not a number: {t:?}"))),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Serializes to JSON with every float rounded to twelve significant digits.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    fn round(v: &mut serde_json::Value) {
        match v {
            serde_json::Value::Number(n) if n.is_f64() => {
                if let Some(x) = n.as_f64().and_then(|x| serde_json::Number::from_f64(round_sig(x))) {
                    *n = x;
                }
            }
            serde_json::Value::Array(a) => a.iter_mut().for_each(round),
            serde_json::Value::Object(o) => o.values_mut().for_each(round),
            _ => {}
        }
    }
    let mut v = serde_json::to_value(value)?;
    round(&mut v);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

// ---- rasters ----

pub fn parse_raster_json(text: &str) -> Result<Dataset> {
    let raw: RasterFile = serde_json::from_str(text)?;
    Dataset::from_raster(&raw)
}

pub fn raster_to_json(dataset: &Dataset) -> Result<String> {
    let mut s = serde_json::to_string(&dataset.to_raster())?;
    s.push('\n');
    Ok(s)
}

#[derive(Debug, Serialize, Deserialize)]
struct SpikeRow {
    trial_id: i64,
    neuron_index: usize,
    time: i64,
    stimulus: String,
}

/// Raster from one-row-per-spike CSV.
///
/// Trials and stimuli are ordered by first appearance. A trial or neuron
/// with no spikes cannot be represented in this format, so trains are
/// created up to the largest neuron index seen anywhere. `t_max` defaults to
/// the latest spike time.
pub fn parse_raster_csv(text: &str, t_max: Option<i64>) -> Result<Dataset> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut stimuli: Vec<String> = Vec::new();
    let mut order: Vec<i64> = Vec::new();
    let mut trials: BTreeMap<i64, (String, BTreeMap<usize, Vec<i64>>)> = BTreeMap::new();
    let mut neurons = 0;
    let mut latest = 0;
    for row in reader.deserialize() {
        let row: SpikeRow = row?;
        if !stimuli.contains(&row.stimulus) {
            stimuli.push(row.stimulus.clone());
        }
        let entry = trials.entry(row.trial_id).or_insert_with(|| {
            order.push(row.trial_id);
            (row.stimulus.clone(), BTreeMap::new())
        });
        if entry.0 != row.stimulus {
            return Err(Error::Parse(format!("trial {} has two stimuli", row.trial_id)));
        }
        entry.1.entry(row.neuron_index).or_default().push(row.time);
        neurons = neurons.max(row.neuron_index + 1);
        latest = latest.max(row.time);
    }
    let raw = RasterFile {
        t_max: t_max.unwrap_or(latest),
        stimuli,
        trials: order
            .iter()
            .map(|id| {
                let (stimulus, by_neuron) = &trials[id];
                let trains = (0..neurons)
                    .map(|n| {
                        let mut t = by_neuron.get(&n).cloned().unwrap_or_default();
                        t.sort_unstable();
                        t
                    })
                    .collect();
                RawTrial {
                    trial_id: *id,
                    stimulus: stimulus.clone(),
                    trains,
                }
            })
            .collect(),
    };
    Dataset::from_raster(&raw)
}

pub fn raster_to_csv(dataset: &Dataset) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for trial in dataset.trials() {
        for (n, train) in trial.ensemble.trains().iter().enumerate() {
            for &t in train.times() {
                w.serialize(SpikeRow {
                    trial_id: trial.trial_id,
                    neuron_index: n,
                    time: i64::from(t),
                    stimulus: trial.stimulus.clone(),
                })?;
            }
        }
    }
    finish_csv(w)
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

/// Reads a raster from `.json` or `.csv` by extension.
pub fn read_raster(path: &Path) -> Result<Dataset> {
    let text = read_text(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => parse_raster_csv(&text, None),
        _ => parse_raster_json(&text),
    }
}

// ---- distance matrices ----

/// A distance matrix with row keys and, for trial matrices, stimulus labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledMatrix {
    pub ids: Vec<i64>,
    pub labels: Option<Vec<String>>,
    pub matrix: DistanceMatrix,
}

/// CSV with header `trial_id,stimulus,<ids...>` when labels are present,
/// otherwise `id,<ids...>`.
pub fn matrix_to_csv(m: &LabeledMatrix) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = match m.labels {
        Some(_) => vec!["trial_id".into(), "stimulus".into()],
        None => vec!["id".into()],
    };
    header.extend(m.ids.iter().map(i64::to_string));
    w.write_record(&header)?;
    for (i, id) in m.ids.iter().enumerate() {
        let mut rec = vec![id.to_string()];
        if let Some(l) = &m.labels {
            rec.push(l[i].clone());
        }
        rec.extend(m.matrix.row(i).iter().map(|&x| fmt_num(x)));
        w.write_record(&rec)?;
    }
    finish_csv(w)
}

pub fn parse_matrix_csv(text: &str) -> Result<LabeledMatrix> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = records.next().ok_or_else(|| Error::Parse("empty matrix file".into()))??;
    let labeled = header.get(1) == Some("stimulus");
    let skip = if labeled { 2 } else { 1 };
    let n = header.len().saturating_sub(skip);
    let (mut ids, mut labels, mut data) = (Vec::new(), Vec::new(), Vec::with_capacity(n * n));
    for rec in records {
        let rec = rec?;
        if rec.len() != n + skip {
            return Err(Error::Parse(format!("row has {} fields, expected {}", rec.len(), n + skip)));
        }
        ids.push(rec[0].trim().parse::<i64>().map_err(|_| Error::Parse(format!("bad id {:?}", &rec[0])))?);
        if labeled {
            labels.push(rec[1].to_string());
        }
        for f in rec.iter().skip(skip) {
            data.push(parse_num(f)?);
        }
    }
    if ids.len() != n {
        return Err(Error::Parse(format!("{} rows for {n} columns", ids.len())));
    }
    Ok(LabeledMatrix {
        ids,
        labels: labeled.then_some(labels),
        matrix: DistanceMatrix::new(n, data)?,
    })
}

pub fn read_matrix(path: &Path) -> Result<LabeledMatrix> {
    parse_matrix_csv(&read_text(path)?)
}

// ---- diagrams ----

pub fn diagrams_to_csv(diagrams: &[PersistenceDiagram]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["degree", "birth", "death"])?;
    for d in diagrams {
        for b in d.bars() {
            w.write_record([d.degree().to_string(), fmt_num(b.birth), fmt_num(b.death)])?;
        }
    }
    finish_csv(w)
}

/// Diagrams of every degree present in the file, by ascending degree.
///
/// A degree with no bars leaves no rows, so it is absent from the result.
pub fn parse_diagrams_csv(text: &str) -> Result<Vec<PersistenceDiagram>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut by_degree: BTreeMap<usize, Vec<Bar>> = BTreeMap::new();
    for rec in reader.records() {
        let rec = rec?;
        if rec.len() != 3 {
            return Err(Error::Parse(format!("diagram row has {} fields", rec.len())));
        }
        let degree = rec[0].trim().parse().map_err(|_| Error::Parse(format!("bad degree {:?}", &rec[0])))?;
        by_degree.entry(degree).or_default().push(Bar::new(parse_num(&rec[1])?, parse_num(&rec[2])?));
    }
    by_degree.into_iter().map(|(d, bars)| PersistenceDiagram::new(d, bars)).collect()
}

/// The diagram of one degree from a file; empty if that degree has no rows.
pub fn read_diagram(path: &Path, degree: usize) -> Result<PersistenceDiagram> {
    let all = parse_diagrams_csv(&read_text(path)?)?;
    Ok(all.into_iter().find(|d| d.degree() == degree).unwrap_or_else(|| PersistenceDiagram::empty(degree)))
}

// ---- lick times ----

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LickFile {
    pub trials: Vec<LickTimes>,
}

pub fn parse_licks_json(text: &str) -> Result<Vec<LickTimes>> {
    Ok(serde_json::from_str::<LickFile>(text)?.trials)
}

pub fn read_licks(path: &Path) -> Result<Vec<LickTimes>> {
    parse_licks_json(&read_text(path)?)
}

// ---- tables ----

/// CSV from a header and rows of numbers.
pub fn numeric_table_csv(header: &[&str], rows: &[Vec<f64>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|&x| fmt_num(x)))?;
    }
    finish_csv(w)
}

/// `trial_id, x[, y[, z]], stimulus` rows for an embedding.
pub fn coords_to_csv(ids: &[i64], coords: &[Vec<f64>], labels: Option<&[String]>) -> Result<String> {
    let dim = coords.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["trial_id".to_string()];
    header.extend(["x", "y", "z"].iter().take(dim).map(|s| s.to_string()));
    header.push("stimulus".into());
    w.write_record(&header)?;
    for (i, c) in coords.iter().enumerate() {
        let mut rec = vec![ids[i].to_string()];
        rec.extend(c.iter().map(|&x| fmt_num(x)));
        rec.push(labels.map_or(String::new(), |l| l[i].clone()));
        w.write_record(&rec)?;
    }
    finish_csv(w)
}
