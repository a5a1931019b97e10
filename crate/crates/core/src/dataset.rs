//! Speed series ingestion, cleaning and Speed2Vec windowing.
//!
//! A window anchored at row `t` packs the `history` most recent speeds of
//! every station (`t - history + 1 ..= t`) into an `nodes × history` block,
//! and pairs it with the next `horizon` speeds (`t + 1 ..= t + horizon`).
//! Windows never span a gap in the timestamp grid, so a day dropped by
//! cleaning splits the series into independent runs.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SensorGraph;
use crate::tensor::Tensor;

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedSeries {
    pub node_ids: Vec<String>,
    pub step_minutes: i64,
    pub timestamps: Vec<NaiveDateTime>,
    /// `[rows × nodes]`, NaN marks a missing reading.
    pub values: Tensor,
}

impl SpeedSeries {
    pub fn new(
        node_ids: Vec<String>,
        step_minutes: i64,
        timestamps: Vec<NaiveDateTime>,
        values: Tensor,
    ) -> Result<Self> {
        if values.rank() != 2
            || values.rows() != timestamps.len()
            || values.cols() != node_ids.len()
        {
            return Err(Error::dim(format!(
                "values {:?} do not match {} timestamps x {} stations",
                values.shape(),
                timestamps.len(),
                node_ids.len()
            )));
        }
        if step_minutes <= 0 {
            return Err(Error::invalid("step must be positive"));
        }
        if timestamps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::data("timestamps must be strictly increasing"));
        }
        Ok(Self {
            node_ids,
            step_minutes,
            timestamps,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn num_nodes(&self) -> usize {
        self.node_ids.len()
    }

    pub fn missing_count(&self) -> usize {
        self.values.data().iter().filter(|v| !v.is_finite()).count()
    }

    /// Row ranges `[start, end)` whose consecutive timestamps are exactly one
    /// step apart.
    pub fn contiguous_runs(&self) -> Vec<(usize, usize)> {
        let step = chrono::Duration::minutes(self.step_minutes);
        let mut runs = Vec::new();
        let mut start = 0;
        for i in 1..=self.len() {
            if i == self.len() || self.timestamps[i] - self.timestamps[i - 1] != step {
                if i > start {
                    runs.push((start, i));
                }
                start = i;
            }
        }
        runs
    }

    fn select(&self, rows: &[usize], cols: &[usize]) -> Result<Self> {
        let n = self.num_nodes();
        let data = rows
            .iter()
            .flat_map(|&r| cols.iter().map(move |&c| (r, c)))
            .map(|(r, c)| self.values.data()[r * n + c])
            .collect();
        Ok(Self {
            node_ids: cols.iter().map(|&c| self.node_ids[c].clone()).collect(),
            step_minutes: self.step_minutes,
            timestamps: rows.iter().map(|&r| self.timestamps[r]).collect(),
            values: Tensor::new(vec![rows.len(), cols.len()], data)?,
        })
    }
}

fn parse_timestamp(raw: &str) -> Result<NaiveDateTime> {
    let raw = raw.trim();
    if let Ok(t) = raw.parse::<NaiveDateTime>() {
        return Ok(t);
    }
    if let Ok(t) = chrono::DateTime::parse_from_rfc3339(raw) {
        return Ok(t.naive_utc());
    }
    NaiveDateTime::parse_from_str(raw, "%Y-%m-%d %H:%M:%S")
        .map_err(|_| Error::data(format!("cannot parse timestamp '{raw}'")))
}

/// Reads `speeds.csv` and aligns its columns to the graph's node order.
/// Timestamps absent from the file but inside its span become rows of
/// missing readings.
pub fn load_series(path: &Path, graph: &SensorGraph) -> Result<SpeedSeries> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    let header = rdr.headers()?.clone();
    if header.get(0).map(str::trim) != Some("timestamp") {
        return Err(Error::data(format!(
            "{}: first column must be 'timestamp'",
            path.display()
        )));
    }
    let columns: Vec<usize> = graph
        .node_ids()
        .iter()
        .map(|id| {
            header
                .iter()
                .position(|h| h.trim() == id)
                .ok_or_else(|| Error::data(format!("speeds file has no column for station '{id}'")))
        })
        .collect::<Result<_>>()?;

    let mut stamps = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        stamps.push(parse_timestamp(&record[0])?);
        let row = columns
            .iter()
            .map(|&c| {
                let cell = record.get(c).unwrap_or("").trim();
                if cell.is_empty() {
                    Ok(f64::NAN)
                } else {
                    cell.parse::<f64>()
                        .map_err(|_| Error::data(format!("bad speed value '{cell}'")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if stamps.is_empty() {
        return Err(Error::data(format!("{} has no rows", path.display())));
    }
    if let Some(w) = stamps.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::data(format!(
            "timestamps not strictly increasing at {}",
            w[1].format(TIMESTAMP_FORMAT)
        )));
    }

    let step = stamps
        .windows(2)
        .map(|w| (w[1] - w[0]).num_minutes())
        .min()
        .unwrap_or(5);
    if step <= 0 {
        return Err(Error::data("timestamps must be at least one minute apart"));
    }
    let n = columns.len();
    let mut timestamps = vec![stamps[0]];
    let mut data = rows[0].clone();
    for (i, w) in stamps.windows(2).enumerate() {
        let gap = (w[1] - w[0]).num_minutes();
        if gap % step != 0 {
            return Err(Error::data(format!(
                "timestamp {} is off the {step}-minute grid",
                w[1].format(TIMESTAMP_FORMAT)
            )));
        }
        for k in 1..gap / step {
            timestamps.push(w[0] + chrono::Duration::minutes(k * step));
            data.extend(std::iter::repeat(f64::NAN).take(n));
        }
        timestamps.push(w[1]);
        data.extend_from_slice(&rows[i + 1]);
    }
    let values = Tensor::new(vec![timestamps.len(), n], data)?;
    SpeedSeries::new(graph.node_ids().to_vec(), step, timestamps, values)
}

pub fn write_series(path: &Path, series: &SpeedSeries) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    let mut header = vec!["timestamp".to_string()];
    header.extend(series.node_ids.iter().cloned());
    w.write_record(&header)?;
    for (r, ts) in series.timestamps.iter().enumerate() {
        let mut rec = vec![ts.format(TIMESTAMP_FORMAT).to_string()];
        rec.extend(series.values.row(r).iter().map(|v| {
            if v.is_finite() {
                v.to_string()
            } else {
                String::new()
            }
        }));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Two-pass cleaning: drop calendar days on which more than `day_threshold`
/// of the stations have a missing reading, then drop every station that is
/// still missing a reading on some retained day.
pub fn clean_series(raw: &SpeedSeries, day_threshold: f64) -> Result<SpeedSeries> {
    if !(day_threshold > 0.0 && day_threshold <= 1.0) {
        return Err(Error::invalid(format!(
            "day threshold {day_threshold} must be in (0, 1]"
        )));
    }
    let n = raw.num_nodes();
    let mut days: BTreeMap<NaiveDate, Vec<usize>> = BTreeMap::new();
    for (r, ts) in raw.timestamps.iter().enumerate() {
        days.entry(ts.date()).or_default().push(r);
    }
    let missing_on = |rows: &[usize], c: usize| rows.iter().any(|&r| !raw.values.at(r, c).is_finite());

    let mut kept_rows = Vec::new();
    let mut kept_days = Vec::new();
    for (day, rows) in &days {
        let missing = (0..n).filter(|&c| missing_on(rows, c)).count();
        if missing as f64 / n as f64 > day_threshold {
            log::info!("dropping {day}: {missing}/{n} stations incomplete");
        } else {
            kept_rows.extend_from_slice(rows);
            kept_days.push(rows.as_slice());
        }
    }
    let kept_cols: Vec<usize> = (0..n)
        .filter(|&c| !kept_days.iter().any(|rows| missing_on(rows, c)))
        .collect();
    if kept_cols.is_empty() || kept_rows.is_empty() {
        return Err(Error::data("no working stations remain"));
    }
    if kept_cols.len() < n {
        log::info!("dropping {} incomplete stations", n - kept_cols.len());
    }
    raw.select(&kept_rows, &kept_cols)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowedBatch {
    pub node_ids: Vec<String>,
    /// `[windows × nodes × history]`
    pub inputs: Tensor,
    /// `[windows × nodes × horizon]`
    pub targets: Tensor,
    pub history: usize,
    pub horizon: usize,
    /// Series row index of each window's most recent input step.
    pub anchors: Vec<usize>,
    pub anchor_times: Vec<NaiveDateTime>,
}

impl WindowedBatch {
    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn num_nodes(&self) -> usize {
        self.node_ids.len()
    }

    /// Input block `[nodes × history]` of window `s`.
    pub fn input(&self, s: usize) -> Tensor {
        let block = self.num_nodes() * self.history;
        let data = self.inputs.data()[s * block..(s + 1) * block].to_vec();
        Tensor::new(vec![self.num_nodes(), self.history], data).expect("window block shape")
    }

    /// Target block `[nodes × horizon]` of window `s`.
    pub fn target(&self, s: usize) -> Tensor {
        let block = self.num_nodes() * self.horizon;
        let data = self.targets.data()[s * block..(s + 1) * block].to_vec();
        Tensor::new(vec![self.num_nodes(), self.horizon], data).expect("window block shape")
    }

    fn slice(&self, start: usize, end: usize) -> Result<Self> {
        let n = self.num_nodes();
        let (bi, bt) = (n * self.history, n * self.horizon);
        Ok(Self {
            node_ids: self.node_ids.clone(),
            inputs: Tensor::new(
                vec![end - start, n, self.history],
                self.inputs.data()[start * bi..end * bi].to_vec(),
            )?,
            targets: Tensor::new(
                vec![end - start, n, self.horizon],
                self.targets.data()[start * bt..end * bt].to_vec(),
            )?,
            history: self.history,
            horizon: self.horizon,
            anchors: self.anchors[start..end].to_vec(),
            anchor_times: self.anchor_times[start..end].to_vec(),
        })
    }
}

/// Sliding Speed2Vec windows over every contiguous run of the series.
pub fn make_windows(
    series: &SpeedSeries,
    history: usize,
    horizon: usize,
    stride: usize,
) -> Result<WindowedBatch> {
    if history == 0 || horizon == 0 || stride == 0 {
        return Err(Error::invalid("history, horizon and stride must be >= 1"));
    }
    if series.missing_count() > 0 {
        return Err(Error::data("series has missing readings; clean it first"));
    }
    let n = series.num_nodes();
    let span = history + horizon;
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    let mut anchors = Vec::new();
    for (start, end) in series.contiguous_runs() {
        if end - start < span {
            continue;
        }
        let count = (end - start - span) / stride + 1;
        for s in 0..count {
            let first = start + s * stride;
            let anchor = first + history - 1;
            for node in 0..n {
                inputs.extend((first..=anchor).map(|r| series.values.at(r, node)));
                targets.extend((anchor + 1..=anchor + horizon).map(|r| series.values.at(r, node)));
            }
            anchors.push(anchor);
        }
    }
    if anchors.is_empty() {
        return Err(Error::data(format!(
            "series too short: need {span} contiguous steps for history {history} + horizon {horizon}"
        )));
    }
    let s = anchors.len();
    Ok(WindowedBatch {
        node_ids: series.node_ids.clone(),
        inputs: Tensor::new(vec![s, n, history], inputs)?,
        targets: Tensor::new(vec![s, n, horizon], targets)?,
        history,
        horizon,
        anchor_times: anchors.iter().map(|&a| series.timestamps[a]).collect(),
        anchors,
    })
}

/// Contiguous train/validation/test split in window (time) order.
pub fn split(batch: &WindowedBatch, ratios: (f64, f64, f64)) -> Result<(WindowedBatch, WindowedBatch, WindowedBatch)> {
    let (tr, va, te) = ratios;
    if [tr, va, te].iter().any(|r| !(*r >= 0.0)) || ((tr + va + te) - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "split ratios {ratios:?} must be non-negative and sum to 1"
        )));
    }
    let s = batch.len();
    let n_train = (s as f64 * tr).round() as usize;
    let n_val = ((s as f64 * va).round() as usize).min(s - n_train.min(s));
    let n_test = s.saturating_sub(n_train + n_val);
    for (name, size) in [("train", n_train), ("val", n_val), ("test", n_test)] {
        if size == 0 {
            return Err(Error::invalid(format!(
                "empty {name} split ({s} windows, ratios {ratios:?})"
            )));
        }
    }
    Ok((
        batch.slice(0, n_train)?,
        batch.slice(n_train, n_train + n_val)?,
        batch.slice(n_train + n_val, s)?,
    ))
}

/// Per-station z-score statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalizer {
    /// Fits on the input blocks of a (training) batch.
    pub fn fit(batch: &WindowedBatch) -> Self {
        let n = batch.num_nodes();
        let f = batch.history;
        let count = (batch.len() * f) as f64;
        let mut mean = vec![0.0; n];
        let mut sq = vec![0.0; n];
        for (i, chunk) in batch.inputs.data().chunks_exact(f).enumerate() {
            let node = i % n;
            for &v in chunk {
                mean[node] += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= count);
        for (i, chunk) in batch.inputs.data().chunks_exact(f).enumerate() {
            let node = i % n;
            for &v in chunk {
                sq[node] += (v - mean[node]).powi(2);
            }
        }
        let std = sq
            .iter()
            .map(|s| {
                let sd = (s / count).sqrt();
                if sd > 1e-8 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, std }
    }

    fn apply(&self, t: &Tensor, per_node: usize, f: impl Fn(f64, f64, f64) -> f64) -> Tensor {
        let n = self.mean.len();
        let mut out = t.clone();
        for (i, chunk) in out.data_mut().chunks_exact_mut(per_node).enumerate() {
            let node = i % n;
            for v in chunk {
                *v = f(*v, self.mean[node], self.std[node]);
            }
        }
        out
    }

    pub fn normalize(&self, batch: &WindowedBatch) -> WindowedBatch {
        let z = |v: f64, m: f64, s: f64| (v - m) / s;
        WindowedBatch {
            inputs: self.apply(&batch.inputs, batch.history, z),
            targets: self.apply(&batch.targets, batch.horizon, z),
            ..batch.clone()
        }
    }

    /// Maps a `[nodes × k]` block (or a stack of them) back to raw speeds.
    pub fn denormalize(&self, t: &Tensor) -> Tensor {
        self.apply(t, t.cols(), |v, m, s| v * s + m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, Station};

    fn t0() -> NaiveDateTime {
        "2021-03-01T00:00:00".parse().unwrap()
    }

    fn series(rows: usize, nodes: usize, f: impl Fn(usize, usize) -> f64) -> SpeedSeries {
        let ids = (0..nodes).map(|i| format!("s{i}")).collect();
        let stamps = (0..rows)
            .map(|r| t0() + chrono::Duration::minutes(5 * r as i64))
            .collect();
        let data = (0..rows).flat_map(|r| (0..nodes).map(move |c| (r, c))).map(|(r, c)| f(r, c)).collect();
        SpeedSeries::new(ids, 5, stamps, Tensor::new(vec![rows, nodes], data).unwrap()).unwrap()
    }

    fn graph(ids: &[&str]) -> SensorGraph {
        let st: Vec<Station> = ids
            .iter()
            .map(|id| Station { station_id: id.to_string(), latitude: 0.0, longitude: 0.0 })
            .collect();
        build_graph(&st, &[], 1.0).unwrap()
    }

    #[test]
    fn load_reorders_columns_to_graph() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("speeds.csv");
        let mut text = String::from("timestamp,c,a,b\n");
        for r in 0..10 {
            let ts = (t0() + chrono::Duration::minutes(5 * r)).format(TIMESTAMP_FORMAT);
            text.push_str(&format!("{ts},{},{},{}\n", 30 + r, 10 + r, 20 + r));
        }
        std::fs::write(&path, text).unwrap();
        let s = load_series(&path, &graph(&["a", "b", "c"])).unwrap();
        assert_eq!(s.values.shape(), &[10, 3]);
        assert_eq!(s.values.row(2), &[12.0, 22.0, 32.0]);
        assert_eq!(s.step_minutes, 5);

        let err = load_series(&path, &graph(&["a", "zz"])).unwrap_err();
        assert!(err.to_string().contains("zz"));
    }

    #[test]
    fn load_rejects_unsorted_and_fills_gaps() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("speeds.csv");
        std::fs::write(
            &path,
            "timestamp,a\n2021-03-01T00:05:00,1\n2021-03-01T00:00:00,2\n",
        )
        .unwrap();
        assert!(load_series(&path, &graph(&["a"])).is_err());
        std::fs::write(
            &path,
            "timestamp,a\n2021-03-01T00:00:00,1\n2021-03-01T00:00:00,2\n",
        )
        .unwrap();
        assert!(load_series(&path, &graph(&["a"])).is_err());
        std::fs::write(
            &path,
            "timestamp,a\n2021-03-01T00:00:00,1\n2021-03-01T00:05:00,\n2021-03-01T00:15:00,3\n",
        )
        .unwrap();
        let s = load_series(&path, &graph(&["a"])).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s.missing_count(), 2);
    }

    #[test]
    fn write_then_load_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("speeds.csv");
        let s = series(7, 2, |r, c| 60.0 + r as f64 * 0.1 + c as f64 / 3.0);
        write_series(&path, &s).unwrap();
        let back = load_series(&path, &graph(&["s0", "s1"])).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn cleaning_complete_input_is_identity() {
        let s = series(600, 3, |r, c| (r + c) as f64);
        assert_eq!(clean_series(&s, 0.5).unwrap(), s);
    }

    #[test]
    fn cleaning_drops_bad_day() {
        // 3 days of 288 steps, 5 stations; day 1 has 3/5 stations missing once.
        let s = series(288 * 3, 5, |r, c| if r == 300 && c < 3 { f64::NAN } else { 50.0 });
        let clean = clean_series(&s, 0.5).unwrap();
        assert_eq!(clean.len(), 288 * 2);
        assert_eq!(clean.num_nodes(), 5);
        assert_eq!(clean.contiguous_runs(), vec![(0, 288), (288, 576)]);
    }

    #[test]
    fn cleaning_drops_incomplete_station() {
        let s = series(288 * 2, 4, |r, c| if r == 10 && c == 2 { f64::NAN } else { 50.0 });
        let clean = clean_series(&s, 0.5).unwrap();
        assert_eq!(clean.len(), 288 * 2);
        assert_eq!(clean.node_ids, vec!["s0", "s1", "s3"]);
        assert_eq!(clean.missing_count(), 0);
    }

    #[test]
    fn cleaning_everything_missing_errors() {
        let s = series(10, 2, |_, _| f64::NAN);
        let err = clean_series(&s, 0.5).unwrap_err();
        assert!(err.to_string().contains("no working stations remain"));
        assert!(clean_series(&s, 0.0).is_err());
    }

    #[test]
    fn cleaning_is_idempotent() {
        let s = series(288 * 3, 6, |r, c| {
            if (r == 5 && c == 1) || (r > 400 && r < 410 && c < 4) {
                f64::NAN
            } else {
                40.0 + (r % 7) as f64
            }
        });
        let once = clean_series(&s, 0.5).unwrap();
        assert_eq!(clean_series(&once, 0.5).unwrap(), once);
    }

    #[test]
    fn window_count_and_layout() {
        let s = series(15, 2, |r, c| (r * 10 + c) as f64);
        let w = make_windows(&s, 12, 3, 1).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w.inputs.shape(), &[1, 2, 12]);
        assert_eq!(w.input(0).row(1)[0], 1.0);
        assert_eq!(w.target(0).row(0), &[120.0, 130.0, 140.0]);
        assert_eq!(w.anchors, vec![11]);

        let s = series(40, 3, |r, _| r as f64);
        for stride in 1..5 {
            let w = make_windows(&s, 12, 3, stride).unwrap();
            assert_eq!(w.len(), (40 - 15) / stride + 1);
            assert_eq!(w.inputs.shape(), &[w.len(), 3, 12]);
        }
        assert!(make_windows(&series(14, 1, |_, _| 1.0), 12, 3, 1).is_err());
    }

    #[test]
    fn constant_series_windows_are_constant() {
        let s = series(30, 3, |_, _| 55.5);
        let w = make_windows(&s, 12, 9, 1).unwrap();
        assert!(w.inputs.data().iter().chain(w.targets.data()).all(|&v| v == 55.5));
    }

    #[test]
    fn windows_do_not_cross_gaps() {
        let s = series(288 * 3, 2, |r, _| if r == 300 { f64::NAN } else { r as f64 });
        let clean = clean_series(&s, 0.4).unwrap();
        let w = make_windows(&clean, 12, 3, 1).unwrap();
        assert_eq!(w.len(), 2 * (288 - 15 + 1));
        for s in 0..w.len() {
            let inp = w.input(s);
            let tgt = w.target(s);
            let row: Vec<f64> = inp.row(0).iter().chain(tgt.row(0)).copied().collect();
            assert!(row.windows(2).all(|p| p[1] == p[0] + 1.0));
        }
    }

    #[test]
    fn unwindowing_reproduces_series() {
        let s = series(50, 3, |r, c| (r * 3 + c) as f64 * 0.5);
        let w = make_windows(&s, 6, 2, 1).unwrap();
        for k in 0..w.len() {
            let block = w.input(k);
            let first = w.anchors[k] + 1 - 6;
            for node in 0..3 {
                for f in 0..6 {
                    assert_eq!(block.at(node, f), s.values.at(first + f, node));
                }
            }
        }
    }

    #[test]
    fn split_sizes_and_order() {
        let s = series(24, 1, |r, _| r as f64);
        let w = make_windows(&s, 12, 3, 1).unwrap();
        assert_eq!(w.len(), 10);
        let (tr, va, te) = split(&w, (0.8, 0.1, 0.1)).unwrap();
        assert_eq!((tr.len(), va.len(), te.len()), (8, 1, 1));
        assert!(tr.anchors.iter().max() < te.anchors.iter().min());
        assert!(tr.anchor_times.last() < va.anchor_times.first());
        let err = split(&w, (1.0, 0.0, 0.0)).unwrap_err();
        assert!(err.to_string().contains("empty val"));
        assert!(split(&w, (0.5, 0.2, 0.2)).is_err());
    }

    #[test]
    fn normalizer_round_trips() {
        let s = series(60, 3, |r, c| 30.0 + (r as f64).sin() * (c + 1) as f64);
        let w = make_windows(&s, 6, 3, 1).unwrap();
        let norm = Normalizer::fit(&w);
        let z = norm.normalize(&w);
        let back = norm.denormalize(&z.target(4));
        assert!(back.max_abs_diff(&w.target(4)) < 1e-12);
    }
}
