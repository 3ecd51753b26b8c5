//! Accuracy series, wall-clock timing and buffer memory accounting.

use std::io::Write;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::cil::ExpansionBuffer;
use crate::data::ClassId;
use crate::error::{Error, Result};
use crate::rolann::TrainStats;

/// Top-1 accuracy: fraction of exact matches.
pub fn task_accuracy(predictions: &[ClassId], truth: &[ClassId]) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(Error::input(format!("{} predictions for {} labels", predictions.len(), truth.len())));
    }
    if truth.is_empty() {
        return Err(Error::input("accuracy of an empty evaluation set is undefined"));
    }
    let hits = predictions.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Arithmetic mean of the per-task accuracies.
pub fn average_accuracy(series: &[f64]) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::input("average of an empty accuracy series"));
    }
    Ok(series.iter().sum::<f64>() / series.len() as f64)
}

/// Outcome of one seeded run.
///
/// Wall-clock times are kept out of the JSON document so that identical
/// configurations serialise to identical bytes; they go to the CSV instead.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub seed: u64,
    pub per_task_accuracy: Vec<f64>,
    pub average_accuracy: f64,
    pub final_accuracy: f64,
    pub buffer_bytes: u64,
    pub classes_seen: Vec<usize>,
    pub operations: TrainStats,
    pub config_echo: serde_json::Value,
    #[serde(skip)]
    pub per_task_wall_ms: Vec<u64>,
}

impl MetricsReport {
    pub fn new(
        seed: u64,
        per_task_accuracy: Vec<f64>,
        per_task_wall_ms: Vec<u64>,
        classes_seen: Vec<usize>,
        buffer_bytes: u64,
        operations: TrainStats,
        config_echo: serde_json::Value,
    ) -> Result<Self> {
        let average_accuracy = average_accuracy(&per_task_accuracy)?;
        let final_accuracy = *per_task_accuracy.last().expect("series is non-empty");
        Ok(Self {
            seed,
            per_task_accuracy,
            average_accuracy,
            final_accuracy,
            buffer_bytes,
            classes_seen,
            operations,
            config_echo,
            per_task_wall_ms,
        })
    }

    /// Checks the stored summary fields against the series.
    pub fn validate(&self) -> Result<()> {
        let recomputed = average_accuracy(&self.per_task_accuracy)?;
        if (recomputed - self.average_accuracy).abs() > 1e-12 {
            return Err(Error::state(format!(
                "stored average accuracy {} disagrees with series mean {recomputed}",
                self.average_accuracy
            )));
        }
        if self.per_task_accuracy.last() != Some(&self.final_accuracy) {
            return Err(Error::state("final accuracy is not the last entry of the series"));
        }
        if self.per_task_accuracy.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::state("accuracy outside [0, 1]"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: Self = serde_json::from_str(text).map_err(|e| Error::FormatLine {
            line: e.line() as u64,
            message: e.to_string(),
        })?;
        report.validate()?;
        Ok(report)
    }

    /// `task,accuracy,wall_ms` rows, tasks numbered from 1.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "task,accuracy,wall_ms")?;
        for (k, acc) in self.per_task_accuracy.iter().enumerate() {
            let wall = self.per_task_wall_ms.get(k).map(u64::to_string).unwrap_or_default();
            writeln!(out, "{},{acc},{wall}", k + 1)?;
        }
        Ok(())
    }
}

/// Memory held by an embedding buffer compared with storing raw images.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryReport {
    pub items: u64,
    pub embedding_bytes: u64,
    pub raw_equivalent_bytes: u64,
}

impl MemoryReport {
    /// `items` embeddings of `dim` float32 values against `items` raw images
    /// of shape `(h, w, c)` at `raw_dtype_bytes` per value (1 or 4).
    pub fn new(items: u64, dim: u64, raw_image_shape: (u64, u64, u64), raw_dtype_bytes: u64) -> Result<Self> {
        if raw_dtype_bytes != 1 && raw_dtype_bytes != 4 {
            return Err(Error::input(format!("raw dtype must be 1 or 4 bytes, got {raw_dtype_bytes}")));
        }
        let (h, w, c) = raw_image_shape;
        Ok(Self {
            items,
            embedding_bytes: items * dim * 4,
            raw_equivalent_bytes: items * h * w * c * raw_dtype_bytes,
        })
    }

    /// Raw bytes per embedding byte.
    pub fn ratio(&self) -> f64 {
        self.raw_equivalent_bytes as f64 / self.embedding_bytes as f64
    }

    pub fn embedding_mb(&self) -> String {
        format_decimal_mb(self.embedding_bytes)
    }

    pub fn raw_equivalent_mb(&self) -> String {
        format_decimal_mb(self.raw_equivalent_bytes)
    }
}

/// Memory report for the vectors currently held by `buffer`.
pub fn buffer_memory_report(
    buffer: &ExpansionBuffer,
    raw_image_shape: (u64, u64, u64),
    raw_dtype_bytes: u64,
) -> Result<MemoryReport> {
    MemoryReport::new(buffer.total_vectors() as u64, buffer.dim() as u64, raw_image_shape, raw_dtype_bytes)
}

/// Bytes as decimal megabytes (10⁶) with two decimals, rounded half up in
/// integer arithmetic.
pub fn format_decimal_mb(bytes: u64) -> String {
    let hundredths = (bytes + 5_000) / 10_000;
    format!("{}.{:02}", hundredths / 100, hundredths % 100)
}

/// Runs `f` and returns its result with the elapsed monotonic time.
pub fn time_scope<R>(f: impl FnOnce() -> R) -> (R, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

/// Collects per-task wall-clock durations.
#[derive(Debug)]
pub struct TaskTimer {
    started: Instant,
    per_task: Vec<Duration>,
}

impl Default for TaskTimer {
    fn default() -> Self {
        Self::new()
    }
}

impl TaskTimer {
    pub fn new() -> Self {
        Self { started: Instant::now(), per_task: Vec::new() }
    }

    pub fn time_task<R>(&mut self, f: impl FnOnce() -> R) -> R {
        let (out, elapsed) = time_scope(f);
        self.per_task.push(elapsed);
        out
    }

    pub fn per_task(&self) -> &[Duration] {
        &self.per_task
    }

    pub fn per_task_ms(&self) -> Vec<u64> {
        self.per_task.iter().map(|d| d.as_millis() as u64).collect()
    }

    /// Time since the timer was created.
    pub fn total(&self) -> Duration {
        self.started.elapsed()
    }
}
