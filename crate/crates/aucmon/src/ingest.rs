//! Prediction-log parsing and windowing.
//!
//! Input is CSV with header `timestamp,score,label[,subject_id]`. Rows are
//! validated individually; rejects are reported with their line number and
//! the whole parse aborts once the reject fraction crosses a threshold.
//! Windowing is either by calendar month of the timestamp, by fixed record
//! count, or by distinct timestamp key (one window per simulator step).

use std::collections::BTreeMap;
use std::io::Read;

use chrono::{Datelike, NaiveDate};
use thiserror::Error;

use crate::roc_metrics::ScoredBatch;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("log quality below threshold: {rejected} of {total} rows malformed")]
    QualityBelowThreshold { rejected: usize, total: usize },
    #[error("missing or malformed header: expected timestamp,score,label[,subject_id]")]
    BadHeader,
    #[error("timestamp {0:?} is not a calendar date (YYYY-MM-DD)")]
    NotADate(String),
    #[error("window size must be at least 2, got {0}")]
    WindowTooSmall(usize),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// One prediction: a score for a subject at a point in time, with the
/// eventual binary outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    /// Raw timestamp token. For calendar logs this is an ISO date; for
    /// simulator output it is the step index.
    pub timestamp: String,
    /// Parsed date when the timestamp is one.
    pub date: Option<NaiveDate>,
    pub score: f64,
    pub label: bool,
    pub subject_id: Option<String>,
}

/// A rejected input row: 1-based line number plus the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectedLine {
    pub line: usize,
    pub reason: String,
}

impl std::fmt::Display for RejectedLine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

#[derive(Debug, Default)]
pub struct ParseOutcome {
    pub records: Vec<PredictionRecord>,
    pub rejects: Vec<RejectedLine>,
}

/// One window's batch plus bookkeeping. `flag` distinguishes ordinary
/// windows from gaps, partial tails, and windows a monitor cannot score.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedBatch {
    pub window_id: String,
    pub batch: ScoredBatch,
    pub m: usize,
    pub n: usize,
    pub total: usize,
    pub gap: bool,
    pub partial: bool,
}

impl WindowedBatch {
    fn from_records(window_id: String, records: &[&PredictionRecord]) -> Self {
        let positives: Vec<f64> = records
            .iter()
            .filter(|r| r.label)
            .map(|r| r.score)
            .collect();
        let negatives: Vec<f64> = records
            .iter()
            .filter(|r| !r.label)
            .map(|r| r.score)
            .collect();
        let (m, n) = (positives.len(), negatives.len());
        WindowedBatch {
            window_id,
            batch: ScoredBatch::new(positives, negatives).expect("scores validated at parse"),
            m,
            n,
            total: m + n,
            gap: false,
            partial: false,
        }
    }

    /// True when AUC cannot be computed for this window.
    pub fn missing_class(&self) -> bool {
        self.m == 0 || self.n == 0
    }
}

/// Parses a prediction log, collecting per-line rejects. Aborts when more
/// than `max_reject_fraction` of the data rows are malformed.
pub fn parse_log<R: Read>(reader: R, max_reject_fraction: f64) -> Result<ParseOutcome, IngestError> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = csv_reader.headers()?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    let header_ok = matches!(
        cols.as_slice(),
        ["timestamp", "score", "label"] | ["timestamp", "score", "label", "subject_id"]
    );
    if !header_ok {
        return Err(IngestError::BadHeader);
    }

    let mut outcome = ParseOutcome::default();
    let mut total = 0usize;
    for (idx, row) in csv_reader.records().enumerate() {
        let line = idx + 2; // 1-based, after the header line
        total += 1;
        match row {
            Ok(record) => match parse_row(&record) {
                Ok(parsed) => outcome.records.push(parsed),
                Err(reason) => outcome.rejects.push(RejectedLine { line, reason }),
            },
            Err(e) => outcome.rejects.push(RejectedLine {
                line,
                reason: e.to_string(),
            }),
        }
    }
    if total > 0 && outcome.rejects.len() as f64 > max_reject_fraction * total as f64 {
        return Err(IngestError::QualityBelowThreshold {
            rejected: outcome.rejects.len(),
            total,
        });
    }
    Ok(outcome)
}

fn parse_row(record: &csv::StringRecord) -> Result<PredictionRecord, String> {
    if record.len() < 3 || record.len() > 4 {
        return Err(format!("expected 3 or 4 fields, got {}", record.len()));
    }
    let timestamp = record[0].to_string();
    if timestamp.is_empty() {
        return Err("empty timestamp".into());
    }
    let score: f64 = record[1]
        .parse()
        .map_err(|_| format!("unparseable score {:?}", &record[1]))?;
    if !score.is_finite() || !(0.0..=1.0).contains(&score) {
        return Err("score out of range".into());
    }
    let label = match &record[2] {
        "0" => false,
        "1" => true,
        other => return Err(format!("label must be 0 or 1, got {other:?}")),
    };
    let subject_id = record.get(3).filter(|s| !s.is_empty()).map(String::from);
    let date = NaiveDate::parse_from_str(&timestamp, "%Y-%m-%d").ok();
    Ok(PredictionRecord {
        timestamp,
        date,
        score,
        label,
        subject_id,
    })
}

/// Buckets records into calendar months (`window_id = "YYYY-MM"`), in
/// chronological order. Months inside the covered span with no records are
/// emitted as empty gap windows rather than silently skipped.
pub fn window_by_month(records: &[PredictionRecord]) -> Result<Vec<WindowedBatch>, IngestError> {
    let mut buckets: BTreeMap<(i32, u32), Vec<&PredictionRecord>> = BTreeMap::new();
    for record in records {
        let date = record
            .date
            .ok_or_else(|| IngestError::NotADate(record.timestamp.clone()))?;
        buckets
            .entry((date.year(), date.month()))
            .or_default()
            .push(record);
    }
    let Some((&first, _)) = buckets.iter().next() else {
        return Ok(Vec::new());
    };
    let (&last, _) = buckets.iter().next_back().unwrap();

    let mut windows = Vec::new();
    let mut month = first;
    loop {
        let window_id = format!("{:04}-{:02}", month.0, month.1);
        match buckets.get(&month) {
            Some(bucket) => windows.push(WindowedBatch::from_records(window_id, bucket)),
            None => windows.push(WindowedBatch {
                window_id,
                batch: ScoredBatch::new(Vec::new(), Vec::new()).unwrap(),
                m: 0,
                n: 0,
                total: 0,
                gap: true,
                partial: false,
            }),
        }
        if month == last {
            break;
        }
        month = if month.1 == 12 {
            (month.0 + 1, 1)
        } else {
            (month.0, month.1 + 1)
        };
    }
    Ok(windows)
}

/// Chunks records into consecutive windows of exactly `window_size`; a
/// final short chunk is emitted flagged as partial. Window ids are the
/// zero-based chunk index.
pub fn window_by_count(
    records: &[PredictionRecord],
    window_size: usize,
) -> Result<Vec<WindowedBatch>, IngestError> {
    if window_size < 2 {
        return Err(IngestError::WindowTooSmall(window_size));
    }
    Ok(records
        .chunks(window_size)
        .enumerate()
        .map(|(idx, chunk)| {
            let refs: Vec<&PredictionRecord> = chunk.iter().collect();
            let mut window = WindowedBatch::from_records(idx.to_string(), &refs);
            window.partial = chunk.len() < window_size;
            window
        })
        .collect())
}

/// Groups records by identical timestamp key, one window per key. Keys
/// that all parse as integers are ordered numerically (simulator steps),
/// otherwise lexically.
pub fn window_by_step(records: &[PredictionRecord]) -> Vec<WindowedBatch> {
    let mut buckets: BTreeMap<&str, Vec<&PredictionRecord>> = BTreeMap::new();
    for record in records {
        buckets.entry(&record.timestamp).or_default().push(record);
    }
    let mut keys: Vec<&str> = buckets.keys().copied().collect();
    if keys.iter().all(|k| k.parse::<u64>().is_ok()) {
        keys.sort_by_key(|k| k.parse::<u64>().unwrap());
    }
    keys.into_iter()
        .map(|key| WindowedBatch::from_records(key.to_string(), &buckets[key]))
        .collect()
}
