use indexmap::IndexMap;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{ClassId, EmbeddingDataset};
use crate::error::{Error, Result};

/// Per-class store of past embeddings.
///
/// Classes are added once, when their task finishes, and are never
/// resampled or evicted afterwards. Vectors stay `f32`.
#[derive(Clone, Debug)]
pub struct ExpansionBuffer {
    dim: usize,
    capacity_per_class: usize,
    rng_seed: u64,
    rng: ChaCha8Rng,
    per_class: IndexMap<ClassId, Vec<f32>>,
}

impl ExpansionBuffer {
    /// A capacity of zero yields a buffer that never stores anything.
    pub fn new(dim: usize, capacity_per_class: usize, rng_seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::input("buffer dimension must be positive"));
        }
        Ok(Self {
            dim,
            capacity_per_class,
            rng_seed,
            rng: ChaCha8Rng::seed_from_u64(rng_seed),
            per_class: IndexMap::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn capacity_per_class(&self) -> usize {
        self.capacity_per_class
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn classes(&self) -> impl Iterator<Item = ClassId> + '_ {
        self.per_class.keys().copied()
    }

    pub fn contains(&self, class: ClassId) -> bool {
        self.per_class.contains_key(&class)
    }

    pub fn class_len(&self, class: ClassId) -> usize {
        self.per_class.get(&class).map_or(0, |v| v.len() / self.dim)
    }

    /// Stored vectors of one class.
    pub fn vectors(&self, class: ClassId) -> impl Iterator<Item = &[f32]> + '_ {
        self.per_class.get(&class).map(Vec::as_slice).unwrap_or(&[]).chunks_exact(self.dim)
    }

    pub fn total_vectors(&self) -> usize {
        self.per_class.values().map(|v| v.len() / self.dim).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total_vectors() == 0
    }

    /// Bytes held by the stored `f32` vectors.
    pub fn bytes(&self) -> u64 {
        self.total_vectors() as u64 * self.dim as u64 * 4
    }

    /// Draws `min(capacity, available)` embeddings per class of `task`,
    /// uniformly without replacement.
    pub fn update(&mut self, task: &EmbeddingDataset) -> Result<()> {
        if task.dim() != self.dim {
            return Err(Error::input(format!("task dimension {} does not match buffer dimension {}", task.dim(), self.dim)));
        }
        if let Some(c) = task.classes().find(|c| self.per_class.contains_key(c)) {
            return Err(Error::input(format!("class {c} is already buffered")));
        }
        if self.capacity_per_class == 0 {
            return Ok(());
        }
        for class in task.classes() {
            let indices = task.class_indices(class);
            let take = self.capacity_per_class.min(indices.len());
            let mut picked = index::sample(&mut self.rng, indices.len(), take).into_vec();
            picked.sort_unstable();
            let mut stored = Vec::with_capacity(take * self.dim);
            for p in picked {
                stored.extend_from_slice(task.embedding(indices[p]));
            }
            self.per_class.insert(class, stored);
        }
        Ok(())
    }

    /// Buffer content as a dataset, classes in insertion order.
    pub fn to_dataset(&self) -> EmbeddingDataset {
        let mut ds = EmbeddingDataset::new(self.dim).expect("buffer dimension is positive");
        for (&class, values) in &self.per_class {
            for v in values.chunks_exact(self.dim) {
                ds.push(v, class).expect("same dimension");
            }
        }
        ds
    }
}
