use std::collections::HashMap;
use std::ops::AddAssign;
use std::sync::Arc;

use indexmap::IndexMap;
use nalgebra::{DMatrix, DVector};
use num_traits::Float;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::activation::{encode_targets, ActivationSpec, EncodedTargets};
use super::knowledge::{batch_basis, batch_moment, check_batch, solve_weights, NeuronKnowledge};
use super::svd::{augment_bias, Basis};
use crate::data::ClassId;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One output unit: its accumulated knowledge and the weights solved from it.
/// `weights[0]` is the bias.
#[derive(Clone, Debug, PartialEq)]
pub struct Neuron<T: Scalar> {
    pub(crate) knowledge: NeuronKnowledge<T>,
    pub(crate) weights: DVector<T>,
}

impl<T: Scalar> Neuron<T> {
    pub fn knowledge(&self) -> &NeuronKnowledge<T> {
        &self.knowledge
    }

    pub fn weights(&self) -> &DVector<T> {
        &self.weights
    }
}

/// Operation counts accumulated while training.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainStats {
    pub svd_calls: u64,
    pub absorbed_samples: u64,
}

impl AddAssign for TrainStats {
    fn add_assign(&mut self, rhs: Self) {
        self.svd_calls += rhs.svd_calls;
        self.absorbed_samples += rhs.absorbed_samples;
    }
}

#[derive(Clone, Debug)]
pub struct Prediction<T: Scalar> {
    /// `C×n`, rows in class insertion order.
    pub probabilities: DMatrix<T>,
    pub labels: Vec<ClassId>,
}

/// Expandable one-layer classifier with one sigmoid neuron per class.
///
/// Neurons are kept in insertion order, which is also the output order and
/// the argmax tie-break order.
#[derive(Clone, Debug)]
pub struct RolannClassifier<T: Scalar> {
    input_dim: usize,
    lambda: T,
    activation: ActivationSpec,
    neurons: IndexMap<ClassId, Neuron<T>>,
}

impl<T: Scalar> RolannClassifier<T> {
    pub fn new(input_dim: usize, lambda: T, activation: ActivationSpec) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::input("input dimension must be positive"));
        }
        if !(lambda > T::zero()) || !Float::is_finite(lambda) {
            return Err(Error::input(format!("lambda must be positive and finite, got {lambda}")));
        }
        activation.validate()?;
        Ok(Self { input_dim, lambda, activation, neurons: IndexMap::new() })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn activation(&self) -> &ActivationSpec {
        &self.activation
    }

    pub fn num_classes(&self) -> usize {
        self.neurons.len()
    }

    pub fn classes(&self) -> impl Iterator<Item = ClassId> + '_ {
        self.neurons.keys().copied()
    }

    pub fn contains(&self, class: ClassId) -> bool {
        self.neurons.contains_key(&class)
    }

    pub fn neuron(&self, class: ClassId) -> Option<&Neuron<T>> {
        self.neurons.get(&class)
    }

    pub fn neurons(&self) -> impl Iterator<Item = (ClassId, &Neuron<T>)> + '_ {
        self.neurons.iter().map(|(c, n)| (*c, n))
    }

    /// Appends untrained neurons (empty knowledge, zero weights). Fails
    /// without modifying the classifier if any id is already present or
    /// repeated.
    pub fn add_classes(&mut self, classes: &[ClassId]) -> Result<()> {
        for (i, c) in classes.iter().enumerate() {
            if self.neurons.contains_key(c) || classes[..i].contains(c) {
                return Err(Error::input(format!("class {c} already exists in the classifier")));
            }
        }
        let aug = self.input_dim + 1;
        for &c in classes {
            self.neurons
                .insert(c, Neuron { knowledge: NeuronKnowledge::empty(aug), weights: DVector::zeros(aug) });
        }
        Ok(())
    }

    /// Drops every neuron after the first `len`.
    pub(crate) fn truncate_classes(&mut self, len: usize) {
        self.neurons.truncate(len);
    }

    /// Inserts a neuron whose weights are re-solved from `knowledge`.
    pub fn insert_trained(&mut self, class: ClassId, knowledge: NeuronKnowledge<T>) -> Result<()> {
        if self.neurons.contains_key(&class) {
            return Err(Error::input(format!("class {class} already exists in the classifier")));
        }
        if knowledge.aug_dim() != self.input_dim + 1 {
            return Err(Error::input("knowledge dimension does not match classifier"));
        }
        let weights = if knowledge.is_empty() { DVector::zeros(self.input_dim + 1) } else { solve_weights(&knowledge, self.lambda)? };
        self.neurons.insert(class, Neuron { knowledge, weights });
        Ok(())
    }

    /// Trains every output neuron on the batch `x` (`D×n`, one column per
    /// sample). Samples are positives for their own class and negatives for
    /// all others, so neurons of classes absent from `labels` are updated
    /// too. On error the classifier is left untouched.
    pub fn train(&mut self, x: &DMatrix<T>, labels: &[ClassId]) -> Result<TrainStats> {
        if x.nrows() != self.input_dim {
            return Err(Error::input(format!("batch has dimension {}, classifier expects {}", x.nrows(), self.input_dim)));
        }
        if x.ncols() != labels.len() {
            return Err(Error::input(format!("batch has {} samples but {} labels", x.ncols(), labels.len())));
        }
        if let Some(unknown) = labels.iter().find(|c| !self.neurons.contains_key(*c)) {
            return Err(Error::input(format!("label {unknown} is not a class of the classifier")));
        }
        let n = x.ncols();
        if n == 0 {
            return Ok(TrainStats::default());
        }

        let x_aug = augment_bias(x);
        let targets: Vec<EncodedTargets<T>> = self
            .neurons
            .keys()
            .map(|&c| encode_targets(labels, c, &self.activation))
            .collect::<Result<_>>()?;
        for t in &targets {
            check_batch(self.input_dim + 1, &x_aug, &t.d_bar, &t.f_prime)?;
        }

        // Neurons with identical derivative weights share the batch factorisation.
        let mut weightings: Vec<&DVector<T>> = Vec::new();
        let weighting_of: Vec<usize> = targets
            .iter()
            .map(|t| match weightings.iter().position(|w| **w == t.f_prime) {
                Some(i) => i,
                None => {
                    weightings.push(&t.f_prime);
                    weightings.len() - 1
                }
            })
            .collect();
        let batch_bases: Vec<Arc<Basis<T>>> = weightings
            .par_iter()
            .map(|f| batch_basis(&x_aug, f).map(Arc::new))
            .collect::<Result<_>>()?;
        let mut stats = TrainStats { svd_calls: batch_bases.len() as u64, absorbed_samples: n as u64 };

        // Likewise neurons sharing both their previous factors and the batch
        // weighting end up with the same merged factors.
        let mut merge_jobs: Vec<(Arc<Basis<T>>, usize)> = Vec::new();
        let mut job_index: HashMap<(usize, usize), usize> = HashMap::new();
        let job_of: Vec<usize> = self
            .neurons
            .values()
            .zip(&weighting_of)
            .map(|(neuron, &w)| {
                let prev = neuron.knowledge.shared_basis();
                let key = (Arc::as_ptr(prev) as usize, w);
                *job_index.entry(key).or_insert_with(|| {
                    merge_jobs.push((prev.clone(), w));
                    merge_jobs.len() - 1
                })
            })
            .collect();
        let merged: Vec<Arc<Basis<T>>> = merge_jobs
            .par_iter()
            .map(|(prev, w)| {
                let batch = &batch_bases[*w];
                if prev.rank() == 0 {
                    Ok(batch.clone())
                } else if batch.rank() == 0 {
                    Ok(prev.clone())
                } else {
                    prev.merge(batch).map(Arc::new)
                }
            })
            .collect::<Result<_>>()?;
        stats.svd_calls += merge_jobs
            .iter()
            .filter(|(prev, w)| prev.rank() > 0 && batch_bases[*w].rank() > 0)
            .count() as u64;

        let lambda = self.lambda;
        let updated: Vec<Neuron<T>> = (0..self.neurons.len())
            .into_par_iter()
            .map(|i| {
                let (_, neuron) = self.neurons.get_index(i).expect("index in range");
                let t = &targets[i];
                let knowledge = NeuronKnowledge::from_shared(
                    neuron.knowledge.moment() + batch_moment(&x_aug, &t.d_bar, &t.f_prime),
                    merged[job_of[i]].clone(),
                    neuron.knowledge.sample_count() + n as u64,
                );
                let weights = solve_weights(&knowledge, lambda)?;
                Ok(Neuron { knowledge, weights })
            })
            .collect::<Result<_>>()?;

        for (slot, neuron) in self.neurons.values_mut().zip(updated) {
            *slot = neuron;
        }
        Ok(stats)
    }

    /// Pre-activation outputs `W·[1; x]`, `C×n`.
    pub fn logits(&self, x: &DMatrix<T>) -> Result<DMatrix<T>> {
        if self.neurons.is_empty() {
            return Err(Error::state("classifier has no classes"));
        }
        if let Some((c, _)) = self.neurons.iter().find(|(_, n)| n.knowledge.is_empty()) {
            return Err(Error::state(format!("class {c} has not been trained")));
        }
        if x.nrows() != self.input_dim {
            return Err(Error::input(format!("input has dimension {}, classifier expects {}", x.nrows(), self.input_dim)));
        }
        let mut w = DMatrix::zeros(self.neurons.len(), self.input_dim + 1);
        for (i, neuron) in self.neurons.values().enumerate() {
            w.set_row(i, &neuron.weights.transpose());
        }
        Ok(w * augment_bias(x))
    }

    /// Sigmoid outputs per class and the argmax label per sample. Ties go to
    /// the earliest inserted class.
    pub fn predict(&self, x: &DMatrix<T>) -> Result<Prediction<T>> {
        let probabilities = self.logits(x)?.map(|z| self.activation.forward(z));
        let classes: Vec<ClassId> = self.classes().collect();
        let labels = probabilities
            .column_iter()
            .map(|col| {
                let mut best = 0;
                for (i, &p) in col.iter().enumerate().skip(1) {
                    if p > col[best] {
                        best = i;
                    }
                }
                classes[best]
            })
            .collect();
        Ok(Prediction { probabilities, labels })
    }

    /// Combines two classifiers trained on different data. Shared classes
    /// merge their knowledge and re-solve; classes present on one side only
    /// are copied. Class order is `a`'s followed by `b`-only classes.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        if self.input_dim != other.input_dim {
            return Err(Error::input(format!("input dimensions differ: {} vs {}", self.input_dim, other.input_dim)));
        }
        if self.lambda != other.lambda {
            return Err(Error::input(format!("lambda differs: {} vs {}", self.lambda, other.lambda)));
        }
        if self.activation != other.activation {
            return Err(Error::input("activation settings differ"));
        }
        let mut merged = self.clone();
        let mut cache: HashMap<(usize, usize), Arc<Basis<T>>> = HashMap::new();
        for (class, theirs) in &other.neurons {
            match merged.neurons.get_mut(class) {
                None => {
                    merged.neurons.insert(*class, theirs.clone());
                }
                Some(ours) => {
                    let a = ours.knowledge.shared_basis();
                    let b = theirs.knowledge.shared_basis();
                    let key = (Arc::as_ptr(a) as usize, Arc::as_ptr(b) as usize);
                    let basis = match cache.get(&key) {
                        Some(basis) => basis.clone(),
                        None => {
                            let basis = Arc::new(a.merge(b)?);
                            cache.insert(key, basis.clone());
                            basis
                        }
                    };
                    let knowledge = NeuronKnowledge::from_shared(
                        ours.knowledge.moment() + theirs.knowledge.moment(),
                        basis,
                        ours.knowledge.sample_count() + theirs.knowledge.sample_count(),
                    );
                    ours.weights = if knowledge.is_empty() {
                        DVector::zeros(self.input_dim + 1)
                    } else {
                        solve_weights(&knowledge, self.lambda)?
                    };
                    ours.knowledge = knowledge;
                }
            }
        }
        Ok(merged)
    }
}
