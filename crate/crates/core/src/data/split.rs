use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ClassId, EmbeddingDataset};
use crate::error::{Error, Result};

/// Shuffled class order cut into consecutive groups, one per task.
///
/// Classes are renumbered densely by their position in the shuffled order,
/// so task `k` with increment `m` owns ids `k·m .. (k+1)·m`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSplit {
    /// Original class ids, shuffled.
    class_order: Vec<ClassId>,
    increment: usize,
    shuffle_seed: u64,
}

impl TaskSplit {
    /// Shuffles `classes` (sorted first, so the input order is irrelevant)
    /// and keeps at most `max_classes` of them.
    pub fn plan(classes: &[ClassId], increment: usize, seed: u64, max_classes: Option<usize>) -> Result<Self> {
        if increment == 0 {
            return Err(Error::input("increment must be positive"));
        }
        let mut class_order = classes.to_vec();
        class_order.sort_unstable();
        class_order.dedup();
        class_order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        if let Some(limit) = max_classes {
            class_order.truncate(limit);
        }
        if increment > class_order.len() {
            return Err(Error::input(format!(
                "increment {increment} exceeds the {} available classes",
                class_order.len()
            )));
        }
        Ok(Self { class_order, increment, shuffle_seed: seed })
    }

    pub fn increment(&self) -> usize {
        self.increment
    }

    pub fn shuffle_seed(&self) -> u64 {
        self.shuffle_seed
    }

    pub fn num_tasks(&self) -> usize {
        self.class_order.len().div_ceil(self.increment)
    }

    pub fn num_classes(&self) -> usize {
        self.class_order.len()
    }

    /// Dense class ids per task.
    pub fn groups(&self) -> Vec<Vec<ClassId>> {
        (0..self.class_order.len() as u32)
            .map(ClassId)
            .collect::<Vec<_>>()
            .chunks(self.increment)
            .map(<[ClassId]>::to_vec)
            .collect()
    }

    pub fn original_id(&self, dense: ClassId) -> Option<ClassId> {
        self.class_order.get(dense.0 as usize).copied()
    }

    pub fn dense_id(&self, original: ClassId) -> Option<ClassId> {
        self.class_order.iter().position(|&c| c == original).map(|p| ClassId(p as u32))
    }

    /// Per-task datasets with dense labels. Records of classes outside the
    /// split are dropped.
    pub fn partition(&self, dataset: &EmbeddingDataset) -> Vec<EmbeddingDataset> {
        self.groups()
            .iter()
            .map(|group| {
                let originals: Vec<ClassId> = group.iter().map(|&d| self.class_order[d.0 as usize]).collect();
                let selected = dataset.select_classes(&originals);
                selected.relabel(|c| self.dense_id(c))
            })
            .collect()
    }

    /// `dataset` restricted to the split's classes, relabeled densely.
    pub fn relabel(&self, dataset: &EmbeddingDataset) -> EmbeddingDataset {
        dataset.select_classes(&self.class_order).relabel(|c| self.dense_id(c))
    }
}

/// Shuffles the dataset's classes with `seed` and cuts them into tasks of
/// `increment` classes.
pub fn split_tasks(dataset: &EmbeddingDataset, increment: usize, seed: u64) -> Result<(TaskSplit, Vec<EmbeddingDataset>)> {
    let classes: Vec<ClassId> = dataset.classes().collect();
    let split = TaskSplit::plan(&classes, increment, seed, None)?;
    let tasks = split.partition(dataset);
    Ok((split, tasks))
}
