//! Class-incremental training on top of the closed-form classifier.
//!
//! Each task adds one neuron per new class, replays the expansion buffer
//! (oversampled so every past class roughly matches the largest current
//! class), trains all neurons on the union and finally stores a random
//! subset of the task's embeddings in the buffer.

mod buffer;
mod engine;
mod replay;

pub use buffer::ExpansionBuffer;
pub use engine::{expand_classifier, incremental_train, mean_activation, IncrementalSettings, TaskOutcome};
pub use replay::{oversample_buffer, replay_set, replication_factor, OversamplingMode, ReplaySet};
