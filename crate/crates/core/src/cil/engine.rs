use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::buffer::ExpansionBuffer;
use super::replay::{replay_set, OversamplingMode};
use crate::data::{ClassId, EmbeddingDataset};
use crate::error::{Error, Result};
use crate::rolann::{RolannClassifier, TrainStats};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncrementalSettings {
    pub oversampling: OversamplingMode,
}

/// What one incremental step did.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskOutcome {
    pub new_classes: Vec<ClassId>,
    pub task_samples: usize,
    pub replayed_samples: usize,
    pub stats: TrainStats,
}

/// Adds an untrained output neuron per new class.
pub fn expand_classifier<T: Scalar>(classifier: &mut RolannClassifier<T>, new_classes: &[ClassId]) -> Result<()> {
    classifier.add_classes(new_classes)
}

/// One task of class-incremental training: expand, replay, train, buffer.
///
/// If training fails the classifier loses the neurons added for this task
/// and the buffer is not updated.
pub fn incremental_train<T: Scalar>(
    task: &EmbeddingDataset,
    classifier: &mut RolannClassifier<T>,
    buffer: &mut ExpansionBuffer,
    settings: &IncrementalSettings,
) -> Result<TaskOutcome> {
    if task.dim() != classifier.input_dim() {
        return Err(Error::input(format!(
            "task dimension {} does not match classifier dimension {}",
            task.dim(),
            classifier.input_dim()
        )));
    }
    let new_classes: Vec<ClassId> = task.classes().collect();
    let before = classifier.num_classes();
    expand_classifier(classifier, &new_classes)?;

    let mut step = || -> Result<(usize, TrainStats)> {
        let replay = if task.is_empty() {
            None
        } else {
            Some(replay_set(task, buffer, settings.oversampling)?)
        };
        let mut union = task.clone();
        if let Some(replay) = &replay {
            union.extend_from(&replay.embeddings)?;
        }
        let x: DMatrix<T> = union.to_matrix();
        let stats = classifier.train(&x, union.labels())?;
        Ok((replay.map_or(0, |r| r.len()), stats))
    };
    let (replayed_samples, stats) = match step() {
        Ok(done) => done,
        Err(err) => {
            classifier.truncate_classes(before);
            return Err(err);
        }
    };
    buffer.update(task)?;
    Ok(TaskOutcome { new_classes, task_samples: task.len(), replayed_samples, stats })
}

/// Mean sigmoid output of the `classes` neurons over all samples in `x`.
pub fn mean_activation<T: Scalar>(classifier: &RolannClassifier<T>, classes: &[ClassId], x: &DMatrix<T>) -> Result<T> {
    let order: Vec<ClassId> = classifier.classes().collect();
    let rows: Vec<usize> = classes
        .iter()
        .map(|c| order.iter().position(|o| o == c).ok_or_else(|| Error::input(format!("class {c} is not in the classifier"))))
        .collect::<Result<_>>()?;
    if rows.is_empty() || x.ncols() == 0 {
        return Err(Error::input("mean activation needs at least one class and one sample"));
    }
    let probs = classifier.predict(x)?.probabilities;
    let mut total = T::zero();
    for &r in &rows {
        total += probs.row(r).sum();
    }
    Ok(total / T::lit((rows.len() * x.ncols()) as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rolann::ActivationSpec;

    fn ids(v: &[u32]) -> Vec<ClassId> {
        v.iter().map(|&c| ClassId(c)).collect()
    }

    fn blob(classes: &[u32], per_class: usize) -> EmbeddingDataset {
        let mut ds = EmbeddingDataset::new(3).unwrap();
        for &c in classes {
            for i in 0..per_class {
                let jitter = (i as f32 * 0.37).sin() * 0.3;
                let mut v = [jitter, -jitter, jitter * 0.5];
                v[c as usize % 3] += 4.0 + c as f32;
                ds.push(&v, ClassId(c)).unwrap();
            }
        }
        ds
    }

    fn classifier() -> RolannClassifier<f64> {
        RolannClassifier::new(3, 0.01, ActivationSpec::default()).unwrap()
    }

    #[test]
    fn expand_adds_empty_neurons() {
        let mut clf = classifier();
        expand_classifier(&mut clf, &ids(&[0, 1])).unwrap();
        expand_classifier(&mut clf, &ids(&[2, 3])).unwrap();
        assert_eq!(clf.num_classes(), 4);
        assert_eq!(clf.neuron(ClassId(2)).unwrap().knowledge().sample_count(), 0);
        assert!(clf.neuron(ClassId(3)).unwrap().weights().iter().all(|&w| w == 0.0));
        expand_classifier(&mut clf, &[]).unwrap();
        assert_eq!(clf.num_classes(), 4);
        assert!(expand_classifier(&mut clf, &ids(&[1])).is_err());
    }

    #[test]
    fn first_task_is_plain_training() {
        let task = blob(&[0, 1], 30);
        let mut clf = classifier();
        let mut buffer = ExpansionBuffer::new(3, 5, 0).unwrap();
        let out = incremental_train(&task, &mut clf, &mut buffer, &IncrementalSettings::default()).unwrap();
        assert_eq!(out.replayed_samples, 0);

        let mut plain = classifier();
        plain.add_classes(&ids(&[0, 1])).unwrap();
        plain.train(&task.to_matrix(), task.labels()).unwrap();
        for ((_, a), (_, b)) in clf.neurons().zip(plain.neurons()) {
            assert_eq!(a.weights(), b.weights());
        }
        assert_eq!(buffer.total_vectors(), 10);
    }

    #[test]
    fn second_task_replays_oversampled_buffer() {
        let mut clf = classifier();
        let mut buffer = ExpansionBuffer::new(3, 5, 0).unwrap();
        let settings = IncrementalSettings::default();
        incremental_train(&blob(&[0, 1], 30), &mut clf, &mut buffer, &settings).unwrap();
        let out = incremental_train(&blob(&[2], 30), &mut clf, &mut buffer, &settings).unwrap();
        // Two buffered classes of 5, each replicated 30 / 5 = 6 times.
        assert_eq!(out.replayed_samples, 60);
        assert_eq!(clf.num_classes(), 3);
        assert_eq!(clf.neuron(ClassId(0)).unwrap().knowledge().sample_count(), 60 + 90);
        assert_eq!(clf.neuron(ClassId(2)).unwrap().knowledge().sample_count(), 90);
        let all = blob(&[0, 1, 2], 10);
        let pred = clf.predict(&all.to_matrix()).unwrap();
        assert_eq!(pred.labels, all.labels());
    }

    #[test]
    fn overlapping_task_rejected_without_side_effects() {
        let mut clf = classifier();
        let mut buffer = ExpansionBuffer::new(3, 5, 0).unwrap();
        let settings = IncrementalSettings::default();
        incremental_train(&blob(&[0, 1], 10), &mut clf, &mut buffer, &settings).unwrap();
        assert!(incremental_train(&blob(&[1, 2], 10), &mut clf, &mut buffer, &settings).is_err());
        assert_eq!(clf.num_classes(), 2);
        assert_eq!(buffer.total_vectors(), 10);
    }

    #[test]
    fn mean_activation_checks_classes() {
        let mut clf = classifier();
        let mut buffer = ExpansionBuffer::new(3, 5, 0).unwrap();
        incremental_train(&blob(&[0, 1], 10), &mut clf, &mut buffer, &IncrementalSettings::default()).unwrap();
        let x = blob(&[0], 5).to_matrix();
        let own = mean_activation(&clf, &ids(&[0]), &x).unwrap();
        let other = mean_activation(&clf, &ids(&[1]), &x).unwrap();
        assert!(own > other);
        assert!(mean_activation(&clf, &ids(&[9]), &x).is_err());
    }
}
