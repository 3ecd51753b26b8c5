//! Regularized one-layer neural network trained in closed form.
//!
//! Training minimises the squared error measured *before* the output
//! sigmoid. Each output neuron accumulates a knowledge triple: the moment
//! vector `M = X·(f'⊙f'⊙d̄)` and the economy SVD `(U, S)` of the
//! derivative-weighted design matrix `X·diag(f')`. Weights follow as
//! `w = U·(S² + λI)⁻¹·Uᵀ·M`. Two triples combine exactly by summing the
//! moments and re-factorising `[U₁S₁ ‖ U₂S₂]`, so sequential, sharded and
//! single-shot training all land on the same weights.

mod activation;
mod classifier;
mod knowledge;
mod svd;

pub use activation::{encode_targets, ActivationKind, ActivationSpec, EncodedTargets};
pub use classifier::{Neuron, Prediction, RolannClassifier, TrainStats};
pub use knowledge::{batch_moment, merge_knowledge, solve_weights, train_neuron, NeuronKnowledge};
pub use svd::{augment_bias, economy_svd, Basis, RANK_TOLERANCE};
