//! Labeled embedding datasets, their file formats, task splitting and a
//! synthetic generator.

mod binary;
mod delimited;
mod split;
mod synthetic;

use std::fmt;
use std::path::Path;

use indexmap::IndexMap;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use binary::{read_binary, read_header, write_binary, EmbeddingHeader, HEADER_LEN, MAGIC, VERSION};
pub use delimited::{read_csv, write_csv};
pub use split::{split_tasks, TaskSplit};
pub use synthetic::{generate_synthetic, SyntheticSpec};

/// Class label. Ids are dense non-negative integers once a dataset has gone
/// through [`TaskSplit`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassId(pub u32);

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Binary,
    Csv,
}

impl DatasetFormat {
    /// `.csv` means CSV, everything else the binary format.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => DatasetFormat::Csv,
            _ => DatasetFormat::Binary,
        }
    }
}

/// Labeled `dim`-dimensional embeddings stored as `f32`, record-major.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingDataset {
    dim: usize,
    values: Vec<f32>,
    labels: Vec<ClassId>,
    /// Record indices per class, classes in order of first appearance.
    class_index: IndexMap<ClassId, Vec<usize>>,
}

impl EmbeddingDataset {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::input("embedding dimension must be positive"));
        }
        Ok(Self { dim, values: Vec::new(), labels: Vec::new(), class_index: IndexMap::new() })
    }

    /// Builds a dataset from flat record-major `values` (`labels.len() × dim`).
    pub fn from_parts(dim: usize, values: Vec<f32>, labels: Vec<ClassId>) -> Result<Self> {
        let mut ds = Self::new(dim)?;
        if values.len() != labels.len() * dim {
            return Err(Error::input(format!(
                "{} values do not form {} records of dimension {dim}",
                values.len(),
                labels.len()
            )));
        }
        for (i, &label) in labels.iter().enumerate() {
            ds.class_index.entry(label).or_default().push(i);
        }
        ds.values = values;
        ds.labels = labels;
        Ok(ds)
    }

    pub fn push(&mut self, embedding: &[f32], label: ClassId) -> Result<()> {
        if embedding.len() != self.dim {
            return Err(Error::input(format!("embedding has length {}, dataset dimension is {}", embedding.len(), self.dim)));
        }
        self.class_index.entry(label).or_default().push(self.labels.len());
        self.values.extend_from_slice(embedding);
        self.labels.push(label);
        Ok(())
    }

    /// Appends every record of `other`.
    pub fn extend_from(&mut self, other: &EmbeddingDataset) -> Result<()> {
        if other.dim != self.dim {
            return Err(Error::input(format!("cannot append dimension {} to dimension {}", other.dim, self.dim)));
        }
        for i in 0..other.len() {
            self.push(other.embedding(i), other.labels[i])?;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[ClassId] {
        &self.labels
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn embedding(&self, index: usize) -> &[f32] {
        &self.values[index * self.dim..(index + 1) * self.dim]
    }

    /// Classes in order of first appearance.
    pub fn classes(&self) -> impl Iterator<Item = ClassId> + '_ {
        self.class_index.keys().copied()
    }

    pub fn num_classes(&self) -> usize {
        self.class_index.len()
    }

    pub fn class_indices(&self, class: ClassId) -> &[usize] {
        self.class_index.get(&class).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn class_size(&self, class: ClassId) -> usize {
        self.class_indices(class).len()
    }

    /// Records of the given classes, grouped in the order the classes are listed.
    pub fn select_classes(&self, classes: &[ClassId]) -> Self {
        let mut out = Self { dim: self.dim, values: Vec::new(), labels: Vec::new(), class_index: IndexMap::new() };
        for &c in classes {
            for &i in self.class_indices(c) {
                out.push(self.embedding(i), c).expect("same dimension");
            }
        }
        out
    }

    /// Returns a copy with every label passed through `map`; records whose
    /// label maps to `None` are dropped.
    pub fn relabel(&self, mut map: impl FnMut(ClassId) -> Option<ClassId>) -> Self {
        let mut out = Self { dim: self.dim, values: Vec::new(), labels: Vec::new(), class_index: IndexMap::new() };
        for i in 0..self.len() {
            if let Some(label) = map(self.labels[i]) {
                out.push(self.embedding(i), label).expect("same dimension");
            }
        }
        out
    }

    /// `D×n` matrix, one column per record, promoted to `T`.
    pub fn to_matrix<T: Scalar>(&self) -> DMatrix<T> {
        DMatrix::from_iterator(self.dim, self.len(), self.values.iter().map(|&v| T::from_embedding(v)))
    }

    pub fn load(path: &Path, format: DatasetFormat) -> Result<Self> {
        match format {
            DatasetFormat::Binary => read_binary(path),
            DatasetFormat::Csv => read_csv(path),
        }
    }

    pub fn save(&self, path: &Path, format: DatasetFormat) -> Result<()> {
        match format {
            DatasetFormat::Binary => write_binary(self, path),
            DatasetFormat::Csv => write_csv(self, path),
        }
    }
}
