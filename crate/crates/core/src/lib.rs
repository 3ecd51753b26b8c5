//! Class-incremental learning with a closed-form, non-iterative one-layer
//! classifier trained over frozen feature embeddings.
//!
//! The crate is organised around four pieces:
//!
//! * [`rolann`]: the regularized one-layer learner. Each output neuron keeps
//!   a knowledge triple (moment vector plus economy-SVD factors) from which
//!   its weights are re-solved in closed form after every batch.
//! * [`cil`]: the class-incremental engine (classifier expansion, the
//!   expansion buffer and its temporal oversampling).
//! * [`data`]: embedding datasets, their on-disk formats, task splitting and
//!   a synthetic generator.
//! * [`metrics`]: accuracy series, timing and buffer memory accounting.
//!
//! All learner math is generic over [`Scalar`] (`f32` or `f64`). The
//! aliases below fix the scalar to `f64`, which is what the experiment
//! harness uses.

pub mod cil;
pub mod data;
pub mod error;
pub mod metrics;
pub mod rolann;
pub mod scalar;

pub use cil::{ExpansionBuffer, IncrementalSettings, OversamplingMode, ReplaySet};
pub use data::{ClassId, DatasetFormat, EmbeddingDataset, TaskSplit};
pub use error::{Error, Result};
pub use metrics::{MemoryReport, MetricsReport};
pub use rolann::{ActivationSpec, RolannClassifier, NeuronKnowledge, TrainStats};
pub use scalar::Scalar;

/// Classifier with 64-bit internal precision.
pub type Classifier = RolannClassifier<f64>;
/// Knowledge triple with 64-bit internal precision.
pub type Knowledge = NeuronKnowledge<f64>;
/// Single-precision classifier, mostly useful for memory-bound experiments.
pub type ClassifierF32 = RolannClassifier<f32>;
