//! Class-incremental runs on the synthetic Gaussian generator.

use cil_core::cil::{incremental_train, mean_activation, ExpansionBuffer, IncrementalSettings};
use cil_core::data::{generate_synthetic, split_tasks, SyntheticSpec};
use cil_core::metrics::task_accuracy;
use cil_core::{ActivationSpec, Classifier, ClassId, EmbeddingDataset};

fn spec(separation: f64, seed: u64) -> SyntheticSpec {
    SyntheticSpec { num_classes: 10, dim: 16, per_class: 250, separation, seed }
}

struct Run {
    per_task: Vec<f64>,
    task2_on_task1: f64,
    classes_after: Vec<usize>,
    buffer: ExpansionBuffer,
}

fn run(separation: f64, seed: u64, capacity: usize) -> Run {
    let (train, test) = generate_synthetic(&spec(separation, seed)).unwrap();
    let (split, tasks) = split_tasks(&train, 2, seed).unwrap();
    let test_tasks = split.partition(&test);
    let mut clf = Classifier::new(16, 0.01, ActivationSpec::default()).unwrap();
    let mut buffer = ExpansionBuffer::new(16, capacity, seed).unwrap();
    let mut seen = EmbeddingDataset::new(16).unwrap();
    let mut per_task = Vec::new();
    let mut classes_after = Vec::new();
    let mut task2_on_task1 = f64::NAN;
    for (k, task) in tasks.iter().enumerate() {
        incremental_train(task, &mut clf, &mut buffer, &IncrementalSettings::default()).unwrap();
        classes_after.push(clf.num_classes());
        seen.extend_from(&test_tasks[k]).unwrap();
        let pred = clf.predict(&seen.to_matrix()).unwrap();
        per_task.push(task_accuracy(&pred.labels, seen.labels()).unwrap());
        if k == 1 {
            let task2: Vec<ClassId> = task.classes().collect();
            task2_on_task1 = mean_activation(&clf, &task2, &test_tasks[0].to_matrix()).unwrap();
        }
    }
    Run { per_task, task2_on_task1, classes_after, buffer }
}

#[test]
fn joint_training_separates_classes() {
    let (train, test) = generate_synthetic(&spec(8.0, 0)).unwrap();
    let mut clf = Classifier::new(16, 0.01, ActivationSpec::default()).unwrap();
    clf.add_classes(&train.classes().collect::<Vec<_>>()).unwrap();
    clf.train(&train.to_matrix(), train.labels()).unwrap();
    let pred = clf.predict(&test.to_matrix()).unwrap();
    assert!(task_accuracy(&pred.labels, test.labels()).unwrap() >= 0.99);
}

#[test]
fn chance_level_without_separation() {
    let mut total = 0.0;
    for seed in 0..3 {
        let (train, test) = generate_synthetic(&spec(0.0, seed)).unwrap();
        let mut clf = Classifier::new(16, 0.01, ActivationSpec::default()).unwrap();
        clf.add_classes(&train.classes().collect::<Vec<_>>()).unwrap();
        clf.train(&train.to_matrix(), train.labels()).unwrap();
        let pred = clf.predict(&test.to_matrix()).unwrap();
        total += task_accuracy(&pred.labels, test.labels()).unwrap();
    }
    let mean = total / 3.0;
    assert!((mean - 0.1).abs() <= 0.1, "mean accuracy {mean}");
}

#[test]
fn single_record_classes_still_flow() {
    let s = SyntheticSpec { per_class: 1, ..spec(8.0, 1) };
    let (train, _) = generate_synthetic(&s).unwrap();
    assert_eq!(train.len(), 10);
    let (_, tasks) = split_tasks(&train, 3, 0).unwrap();
    let mut clf = Classifier::new(16, 0.01, ActivationSpec::default()).unwrap();
    let mut buffer = ExpansionBuffer::new(16, 20, 0).unwrap();
    for t in &tasks {
        incremental_train(t, &mut clf, &mut buffer, &IncrementalSettings::default()).unwrap();
    }
    assert_eq!(clf.num_classes(), 10);
    assert_eq!(buffer.total_vectors(), 10);
}

#[test]
fn buffered_run_keeps_old_classes() {
    let r = run(8.0, 0, 20);
    assert_eq!(r.per_task.len(), 5);
    assert!(*r.per_task.last().unwrap() >= 0.95, "{:?}", r.per_task);
    assert_eq!(r.classes_after, vec![2, 4, 6, 8, 10]);
    assert!(r.buffer.total_vectors() <= 20 * 10);
    assert_eq!(r.buffer.bytes(), r.buffer.total_vectors() as u64 * 16 * 4);
}

#[test]
fn buffer_beats_no_buffer_and_calibrates() {
    for seed in 0..2 {
        let with = run(8.0, seed, 20);
        let without = run(8.0, seed, 0);
        assert!(with.per_task.last() > without.per_task.last());
        assert!(with.task2_on_task1 < without.task2_on_task1);
    }
}

#[test]
fn identical_seeds_identical_runs() {
    let a = run(8.0, 3, 20);
    let b = run(8.0, 3, 20);
    assert_eq!(a.per_task, b.per_task);
    assert_eq!(a.buffer.to_dataset(), b.buffer.to_dataset());
}
