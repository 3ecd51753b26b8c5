//! Closed-form solve against a dense oracle, and the incremental / sharded
//! equivalences of the knowledge merge.

use cil_core::rolann::{batch_moment, encode_targets, merge_knowledge, solve_weights, train_neuron, ActivationSpec, NeuronKnowledge};
use cil_core::{Classifier, ClassId};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel_err(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

/// `(X diag(f')² Xᵀ + λI)⁻¹ M` by LU on the dense normal matrix.
fn dense_oracle(x_aug: &DMatrix<f64>, f_prime: &DVector<f64>, moment: &DVector<f64>, lambda: f64) -> DVector<f64> {
    let f2 = f_prime.component_mul(f_prime);
    let mut weighted = x_aug.clone();
    for (j, mut col) in weighted.column_iter_mut().enumerate() {
        col *= f2[j];
    }
    let a = weighted * x_aug.transpose() + DMatrix::identity(x_aug.nrows(), x_aug.nrows()) * lambda;
    a.lu().solve(moment).expect("regularised normal matrix is invertible")
}

fn random_batch(rng: &mut ChaCha8Rng, dim: usize, n: usize, classes: u32) -> (DMatrix<f64>, Vec<ClassId>) {
    let x = DMatrix::from_fn(dim, n, |_, _| rng.random_range(-2.0..2.0));
    let labels = (0..n).map(|_| ClassId(rng.random_range(0..classes))).collect();
    (x, labels)
}

fn columns(x: &DMatrix<f64>, labels: &[ClassId], range: std::ops::Range<usize>) -> (DMatrix<f64>, Vec<ClassId>) {
    (x.columns(range.start, range.len()).into_owned(), labels[range].to_vec())
}

fn fresh(dim: usize, classes: u32) -> Classifier {
    let mut clf = Classifier::new(dim, 0.01, ActivationSpec::default()).unwrap();
    clf.add_classes(&(0..classes).map(ClassId).collect::<Vec<_>>()).unwrap();
    clf
}

fn assert_same_weights(a: &Classifier, b: &Classifier, tol: f64) {
    assert_eq!(a.num_classes(), b.num_classes());
    for ((ca, na), (cb, nb)) in a.neurons().zip(b.neurons()) {
        assert_eq!(ca, cb);
        let e = rel_err(na.weights(), nb.weights());
        assert!(e <= tol, "class {ca}: relative error {e:e}");
    }
}

#[test]
fn random_instances_match_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let act = ActivationSpec::default();
    for _ in 0..40 {
        let dim = 8;
        let n = 40;
        let (x, labels) = random_batch(&mut rng, dim, n, 3);
        let x_aug = cil_core::rolann::augment_bias(&x);
        for c in 0..3 {
            let t = encode_targets::<f64>(&labels, ClassId(c), &act).unwrap();
            let k = train_neuron(&NeuronKnowledge::empty(dim + 1), &x_aug, &t.d_bar, &t.f_prime).unwrap();
            let w = solve_weights(&k, 0.01).unwrap();
            let oracle = dense_oracle(&x_aug, &t.f_prime, &batch_moment(&x_aug, &t.d_bar, &t.f_prime), 0.01);
            assert!(rel_err(&w, &oracle) <= 1e-8);
        }
    }
}

#[test]
fn rank_deficient_batches_still_match_oracle() {
    // n < D + 1: U spans only part of the space but M lies inside it.
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (x, labels) = random_batch(&mut rng, 20, 5, 2);
    let x_aug = cil_core::rolann::augment_bias(&x);
    let t = encode_targets::<f64>(&labels, ClassId(0), &ActivationSpec::default()).unwrap();
    let k = train_neuron(&NeuronKnowledge::empty(21), &x_aug, &t.d_bar, &t.f_prime).unwrap();
    assert_eq!(k.rank(), 5);
    let w = solve_weights(&k, 1.0).unwrap();
    let oracle = dense_oracle(&x_aug, &t.f_prime, k.moment(), 1.0);
    assert!(rel_err(&w, &oracle) <= 1e-8);
}

#[test]
fn four_shards_fold_into_centralised_training() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (x, labels) = random_batch(&mut rng, 6, 120, 3);
    let mut central = fresh(6, 3);
    central.train(&x, &labels).unwrap();

    let mut merged: Option<Classifier> = None;
    for s in 0..4 {
        let (xs, ls) = columns(&x, &labels, s * 30..(s + 1) * 30);
        let mut shard = fresh(6, 3);
        shard.train(&xs, &ls).unwrap();
        merged = Some(match merged {
            None => shard,
            Some(acc) => acc.merge(&shard).unwrap(),
        });
    }
    assert_same_weights(&merged.unwrap(), &central, 1e-6);
}

#[test]
fn merging_with_empty_classifier_is_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (x, labels) = random_batch(&mut rng, 4, 30, 2);
    let mut clf = fresh(4, 2);
    clf.train(&x, &labels).unwrap();
    let empty = Classifier::new(4, 0.01, ActivationSpec::default()).unwrap();
    assert_same_weights(&clf.merge(&empty).unwrap(), &clf, 0.0);
    assert_same_weights(&empty.merge(&clf).unwrap(), &clf, 0.0);
}

#[test]
fn merge_copies_disjoint_classes() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (x, _) = random_batch(&mut rng, 3, 10, 1);
    let mut a = Classifier::new(3, 0.01, ActivationSpec::default()).unwrap();
    a.add_classes(&[ClassId(0)]).unwrap();
    a.train(&x, &[ClassId(0); 10]).unwrap();
    let mut b = Classifier::new(3, 0.01, ActivationSpec::default()).unwrap();
    b.add_classes(&[ClassId(1)]).unwrap();
    b.train(&x, &[ClassId(1); 10]).unwrap();
    let m = a.merge(&b).unwrap();
    assert_eq!(m.classes().collect::<Vec<_>>(), vec![ClassId(0), ClassId(1)]);
    assert_eq!(m.neuron(ClassId(1)).unwrap().weights(), b.neuron(ClassId(1)).unwrap().weights());
}

#[test]
fn orthonormality_survives_many_merges() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut clf = fresh(10, 3);
    for _ in 0..60 {
        let n = rng.random_range(1..15);
        let (x, labels) = random_batch(&mut rng, 10, n, 3);
        clf.train(&x, &labels).unwrap();
    }
    for (_, neuron) in clf.neurons() {
        let k = neuron.knowledge();
        assert!(k.basis().orthonormality_error() <= 1e-8);
        assert!(k.singular_values().as_slice().windows(2).all(|w| w[0] >= w[1]));
        assert!(k.rank() <= 11);
    }
}

#[test]
fn per_neuron_updates_commute() {
    // Interleave per-class updates in two different orders; each neuron only
    // depends on its own sequence of batches.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let act = ActivationSpec::default();
    let batches: Vec<_> = (0..3).map(|_| random_batch(&mut rng, 5, 20, 2)).collect();
    let run = |class_order: &[u32]| {
        let mut ks = [NeuronKnowledge::<f64>::empty(6), NeuronKnowledge::empty(6)];
        for (x, labels) in &batches {
            let x_aug = cil_core::rolann::augment_bias(x);
            for &c in class_order {
                let t = encode_targets::<f64>(labels, ClassId(c), &act).unwrap();
                ks[c as usize] = train_neuron(&ks[c as usize], &x_aug, &t.d_bar, &t.f_prime).unwrap();
            }
        }
        ks.iter().map(|k| solve_weights(k, 0.01).unwrap()).collect::<Vec<_>>()
    };
    let forward = run(&[0, 1]);
    let backward = run(&[1, 0]);
    assert_eq!(forward, backward);

    let mut clf = fresh(5, 2);
    for (x, labels) in &batches {
        clf.train(x, labels).unwrap();
    }
    for (i, (_, n)) in clf.neurons().enumerate() {
        assert!(rel_err(n.weights(), &forward[i]) <= 1e-12);
    }
}

#[test]
fn separated_gaussians_classify_held_out_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let normal = rand_distr::StandardNormal;
    let sample = |rng: &mut ChaCha8Rng, n: usize| {
        let mut x = DMatrix::zeros(4, 2 * n);
        let mut labels = Vec::new();
        for j in 0..2 * n {
            let class = (j % 2) as u32;
            for i in 0..4 {
                let z: f64 = rng.sample(normal);
                // Means at ±4·(1,1,1,1)/2 are 8σ apart.
                x[(i, j)] = z + if class == 0 { -2.0 } else { 2.0 };
            }
            labels.push(ClassId(class));
        }
        (x, labels)
    };
    let (train_x, train_y) = sample(&mut rng, 200);
    let (test_x, test_y) = sample(&mut rng, 100);
    let mut clf = fresh(4, 2);
    clf.train(&train_x, &train_y).unwrap();
    let pred = clf.predict(&test_x).unwrap();
    let acc = pred.labels.iter().zip(&test_y).filter(|(p, t)| p == t).count() as f64 / test_y.len() as f64;
    assert!(acc >= 0.99, "accuracy {acc}");
}

fn knowledge_strategy() -> impl Strategy<Value = (u64, usize, usize)> {
    (any::<u64>(), 2usize..10, 5usize..60)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn incremental_matches_single_batch((seed, dim, n) in knowledge_strategy(), parts in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, labels) = random_batch(&mut rng, dim, n, 3);
        let mut whole = fresh(dim, 3);
        whole.train(&x, &labels).unwrap();

        let bounds: Vec<usize> = (0..=parts).map(|p| p * n / parts).collect();
        let mut forward = fresh(dim, 3);
        for w in bounds.windows(2) {
            let (xs, ls) = columns(&x, &labels, w[0]..w[1]);
            forward.train(&xs, &ls).unwrap();
        }
        let mut backward = fresh(dim, 3);
        for w in bounds.windows(2).rev() {
            let (xs, ls) = columns(&x, &labels, w[0]..w[1]);
            backward.train(&xs, &ls).unwrap();
        }
        assert_same_weights(&forward, &whole, 1e-6);
        assert_same_weights(&backward, &forward, 1e-6);
    }

    #[test]
    fn merge_is_symmetric((seed, dim, n) in knowledge_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, labels) = random_batch(&mut rng, dim, n, 2);
        let half = n / 2;
        let (xa, la) = columns(&x, &labels, 0..half);
        let (xb, lb) = columns(&x, &labels, half..n);
        let mut a = fresh(dim, 2);
        a.train(&xa, &la).unwrap();
        let mut b = fresh(dim, 2);
        b.train(&xb, &lb).unwrap();
        assert_same_weights(&a.merge(&b).unwrap(), &b.merge(&a).unwrap(), 1e-6);
    }

    #[test]
    fn more_regularisation_never_grows_weights((seed, dim, n) in knowledge_strategy(), l1 in 1e-4f64..10.0, factor in 1.0f64..1e4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, labels) = random_batch(&mut rng, dim, n, 2);
        let x_aug = cil_core::rolann::augment_bias(&x);
        let t = encode_targets::<f64>(&labels, ClassId(0), &ActivationSpec::default()).unwrap();
        let k = train_neuron(&NeuronKnowledge::empty(dim + 1), &x_aug, &t.d_bar, &t.f_prime).unwrap();
        let w1 = solve_weights(&k, l1).unwrap().norm();
        let w2 = solve_weights(&k, l1 * factor).unwrap().norm();
        prop_assert!(w2 <= w1 * (1.0 + 1e-12));
    }

    #[test]
    fn knowledge_merge_matches_joint_training((seed, dim, n) in knowledge_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, labels) = random_batch(&mut rng, dim, n, 2);
        let x_aug = cil_core::rolann::augment_bias(&x);
        let t = encode_targets::<f64>(&labels, ClassId(1), &ActivationSpec::default()).unwrap();
        let half = n / 2;
        let part = |r: std::ops::Range<usize>| {
            let xa = x_aug.columns(r.start, r.len()).into_owned();
            let d = t.d_bar.rows(r.start, r.len()).into_owned();
            let f = t.f_prime.rows(r.start, r.len()).into_owned();
            train_neuron(&NeuronKnowledge::empty(dim + 1), &xa, &d, &f).unwrap()
        };
        let merged = merge_knowledge(&part(0..half), &part(half..n)).unwrap();
        let joint = train_neuron(&NeuronKnowledge::empty(dim + 1), &x_aug, &t.d_bar, &t.f_prime).unwrap();
        prop_assert_eq!(merged.sample_count(), joint.sample_count());
        let e = rel_err(&solve_weights(&merged, 0.01).unwrap(), &solve_weights(&joint, 0.01).unwrap());
        prop_assert!(e <= 1e-8, "relative error {}", e);
    }
}
