use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::buffer::ExpansionBuffer;
use crate::data::{ClassId, EmbeddingDataset};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OversamplingMode {
    /// Replicate each buffered class `max(1, ⌊n_max / n_c'⌋)` times.
    #[default]
    Temporal,
    /// Replay every buffered sample exactly once.
    Off,
}

/// Buffered samples prepared for one task's training step.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplaySet {
    pub embeddings: EmbeddingDataset,
    pub replication_factors: IndexMap<ClassId, usize>,
}

impl ReplaySet {
    pub fn len(&self) -> usize {
        self.embeddings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.embeddings.is_empty()
    }
}

/// `⌊n_max / n_c⌋` clamped to at least one copy; `None` when the class has
/// no stored samples.
pub fn replication_factor(n_max: usize, n_c: usize) -> Option<usize> {
    if n_c == 0 {
        return None;
    }
    Some((n_max / n_c).max(1))
}

/// Temporal oversampling of the buffer against the current task.
pub fn oversample_buffer(task: &EmbeddingDataset, buffer: &ExpansionBuffer) -> Result<ReplaySet> {
    replay_set(task, buffer, OversamplingMode::Temporal)
}

/// Builds the replay set for `task` by whole-sample replication.
pub fn replay_set(task: &EmbeddingDataset, buffer: &ExpansionBuffer, mode: OversamplingMode) -> Result<ReplaySet> {
    if task.is_empty() {
        return Err(Error::input("task data is empty"));
    }
    if task.dim() != buffer.dim() {
        return Err(Error::input(format!("task dimension {} does not match buffer dimension {}", task.dim(), buffer.dim())));
    }
    let n_max = task.classes().map(|c| task.class_size(c)).max().unwrap_or(0);
    let mut embeddings = EmbeddingDataset::new(buffer.dim())?;
    let mut replication_factors = IndexMap::new();
    for class in buffer.classes() {
        let stored = buffer.class_len(class);
        let Some(r) = (match mode {
            OversamplingMode::Temporal => replication_factor(n_max, stored),
            OversamplingMode::Off => (stored > 0).then_some(1),
        }) else {
            continue;
        };
        for _ in 0..r {
            for v in buffer.vectors(class) {
                embeddings.push(v, class)?;
            }
        }
        replication_factors.insert(class, r);
    }
    Ok(ReplaySet { embeddings, replication_factors })
}
