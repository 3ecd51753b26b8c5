use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_traits::Float;

use super::svd::{economy_svd, Basis};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Everything a neuron has learned: the moment vector `M`, the factor pair
/// `(U, S)` and how many samples went into them.
///
/// `(U, S)` sits behind an `Arc` because neurons that have absorbed the
/// same weighted samples share an identical factorisation. Sharing is purely
/// a storage detail; a neuron never observes another neuron's state.
#[derive(Clone, Debug)]
pub struct NeuronKnowledge<T: Scalar> {
    moment: DVector<T>,
    basis: Arc<Basis<T>>,
    sample_count: u64,
}

impl<T: Scalar> PartialEq for NeuronKnowledge<T> {
    fn eq(&self, other: &Self) -> bool {
        self.sample_count == other.sample_count
            && self.moment == other.moment
            && (Arc::ptr_eq(&self.basis, &other.basis) || self.basis == other.basis)
    }
}

impl<T: Scalar> NeuronKnowledge<T> {
    /// Initial state over a bias-augmented dimension `aug_dim = D + 1`.
    pub fn empty(aug_dim: usize) -> Self {
        Self { moment: DVector::zeros(aug_dim), basis: Arc::new(Basis::empty(aug_dim)), sample_count: 0 }
    }

    /// Rebuilds knowledge from stored parts, checking the triple's invariants.
    pub fn from_parts(moment: DVector<T>, u: DMatrix<T>, s: DVector<T>, sample_count: u64) -> Result<Self> {
        if u.nrows() != moment.len() {
            return Err(Error::input(format!("U has {} rows but M has {} entries", u.nrows(), moment.len())));
        }
        if u.ncols() != s.len() || s.len() > moment.len() {
            return Err(Error::input(format!(
                "U has {} columns, S has {} values, dimension {}",
                u.ncols(),
                s.len(),
                moment.len()
            )));
        }
        if s.iter().any(|v| !(*v >= T::zero())) || s.as_slice().windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::input("singular values must be non-negative and descending"));
        }
        let basis = Basis { u, s };
        if basis.rank() > 0 && basis.orthonormality_error() > T::lit(1e-6) {
            return Err(Error::input("U columns are not orthonormal"));
        }
        Ok(Self { moment, basis: Arc::new(basis), sample_count })
    }

    pub(crate) fn from_shared(moment: DVector<T>, basis: Arc<Basis<T>>, sample_count: u64) -> Self {
        Self { moment, basis, sample_count }
    }

    pub fn aug_dim(&self) -> usize {
        self.moment.len()
    }

    pub fn moment(&self) -> &DVector<T> {
        &self.moment
    }

    pub fn u(&self) -> &DMatrix<T> {
        &self.basis.u
    }

    pub fn singular_values(&self) -> &DVector<T> {
        &self.basis.s
    }

    pub fn rank(&self) -> usize {
        self.basis.rank()
    }

    pub fn sample_count(&self) -> u64 {
        self.sample_count
    }

    /// True until the neuron has absorbed at least one sample.
    pub fn is_empty(&self) -> bool {
        self.sample_count == 0
    }

    pub fn basis(&self) -> &Basis<T> {
        &self.basis
    }

    pub(crate) fn shared_basis(&self) -> &Arc<Basis<T>> {
        &self.basis
    }
}

/// `X_aug·(f'⊙f'⊙d̄)`.
pub fn batch_moment<T: Scalar>(x_aug: &DMatrix<T>, d_bar: &DVector<T>, f_prime: &DVector<T>) -> DVector<T> {
    let weights = f_prime.component_mul(f_prime).component_mul(d_bar);
    x_aug * weights
}

/// Factors `X_aug·diag(f')`.
pub(crate) fn batch_basis<T: Scalar>(x_aug: &DMatrix<T>, f_prime: &DVector<T>) -> Result<Basis<T>> {
    let mut weighted = x_aug.clone();
    for (j, mut col) in weighted.column_iter_mut().enumerate() {
        col *= f_prime[j];
    }
    economy_svd(weighted)
}

pub(crate) fn check_batch<T: Scalar>(
    aug_dim: usize,
    x_aug: &DMatrix<T>,
    d_bar: &DVector<T>,
    f_prime: &DVector<T>,
) -> Result<()> {
    if x_aug.nrows() != aug_dim {
        return Err(Error::input(format!("batch has {} rows, knowledge expects {aug_dim}", x_aug.nrows())));
    }
    if x_aug.ncols() != d_bar.len() || x_aug.ncols() != f_prime.len() {
        return Err(Error::input(format!(
            "batch has {} samples but {} targets and {} derivatives",
            x_aug.ncols(),
            d_bar.len(),
            f_prime.len()
        )));
    }
    if f_prime.iter().any(|v| !(*v > T::zero()) || !Float::is_finite(*v)) {
        return Err(Error::input("activation derivatives must be positive and finite"));
    }
    Ok(())
}

/// Absorbs one batch into a neuron's knowledge.
pub fn train_neuron<T: Scalar>(
    knowledge: &NeuronKnowledge<T>,
    x_aug: &DMatrix<T>,
    d_bar: &DVector<T>,
    f_prime: &DVector<T>,
) -> Result<NeuronKnowledge<T>> {
    check_batch(knowledge.aug_dim(), x_aug, d_bar, f_prime)?;
    if x_aug.ncols() == 0 {
        return Ok(knowledge.clone());
    }
    let batch = batch_basis(x_aug, f_prime)?;
    let basis = knowledge.basis.merge(&batch)?;
    Ok(NeuronKnowledge {
        moment: &knowledge.moment + batch_moment(x_aug, d_bar, f_prime),
        basis: Arc::new(basis),
        sample_count: knowledge.sample_count + x_aug.ncols() as u64,
    })
}

/// Combines two independently accumulated knowledge triples.
pub fn merge_knowledge<T: Scalar>(a: &NeuronKnowledge<T>, b: &NeuronKnowledge<T>) -> Result<NeuronKnowledge<T>> {
    if a.aug_dim() != b.aug_dim() {
        return Err(Error::input(format!("knowledge dimensions differ: {} vs {}", a.aug_dim(), b.aug_dim())));
    }
    let basis = if b.rank() == 0 {
        a.basis.clone()
    } else if a.rank() == 0 {
        b.basis.clone()
    } else {
        Arc::new(a.basis.merge(&b.basis)?)
    };
    Ok(NeuronKnowledge {
        moment: &a.moment + &b.moment,
        basis,
        sample_count: a.sample_count + b.sample_count,
    })
}

/// `w = U·(S² + λI)⁻¹·Uᵀ·M`, applying the inverse as a diagonal reciprocal.
pub fn solve_weights<T: Scalar>(knowledge: &NeuronKnowledge<T>, lambda: T) -> Result<DVector<T>> {
    if !(lambda > T::zero()) || !Float::is_finite(lambda) {
        return Err(Error::input(format!("lambda must be positive and finite, got {lambda}")));
    }
    if knowledge.is_empty() {
        return Err(Error::state("cannot solve weights for a neuron without knowledge"));
    }
    let u = &knowledge.basis.u;
    let s = &knowledge.basis.s;
    let mut projected = u.tr_mul(&knowledge.moment);
    for (k, v) in projected.iter_mut().enumerate() {
        *v /= s[k] * s[k] + lambda;
    }
    Ok(u * projected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn single_column_knowledge() -> NeuronKnowledge<f64> {
        let x = DMatrix::from_column_slice(2, 1, &[1.0, 2.0]);
        let d = DVector::from_vec(vec![1.0]);
        let f = DVector::from_vec(vec![0.5]);
        train_neuron(&NeuronKnowledge::empty(2), &x, &d, &f).unwrap()
    }

    #[test]
    fn single_column_triple() {
        let k = single_column_knowledge();
        assert_relative_eq!(k.moment()[0], 0.25);
        assert_relative_eq!(k.moment()[1], 0.5);
        assert_eq!(k.rank(), 1);
        assert_relative_eq!(k.singular_values()[0], 1.118_033_988_749_895, max_relative = 1e-14);
        let sign = k.u()[(0, 0)].signum();
        assert_relative_eq!(sign * k.u()[(0, 0)], 0.447_213_595_499_958, max_relative = 1e-14);
        assert_relative_eq!(sign * k.u()[(1, 0)], 0.894_427_190_999_916, max_relative = 1e-14);
        assert_eq!(k.sample_count(), 1);
    }

    #[test]
    fn single_column_weights() {
        let w = solve_weights(&single_column_knowledge(), 1.0).unwrap();
        // M / (‖[0.5, 1]‖² + 1) = M / 2.25
        assert_relative_eq!(w[0], 1.0 / 9.0, max_relative = 1e-14);
        assert_relative_eq!(w[1], 2.0 / 9.0, max_relative = 1e-14);

        // Dense oracle (X F² Xᵀ + I)⁻¹ M.
        let x = DMatrix::from_column_slice(2, 1, &[1.0, 2.0]);
        let a = &x * 0.25 * x.transpose() + DMatrix::identity(2, 2);
        let dense = a.lu().solve(&DVector::from_vec(vec![0.25, 0.5])).unwrap();
        assert_relative_eq!(w, dense, max_relative = 1e-14);
    }

    #[test]
    fn huge_lambda_shrinks_weights() {
        let k = single_column_knowledge();
        let lambda = 1e12;
        let w = solve_weights(&k, lambda).unwrap();
        assert!(w.norm() <= k.moment().norm() / lambda * (1.0 + 1e-6));
    }

    #[test]
    fn zero_batch_leaves_moment_and_rank() {
        let k = single_column_knowledge();
        let x = DMatrix::zeros(2, 3);
        let d = DVector::zeros(3);
        let f = DVector::from_element(3, 0.25);
        let k2 = train_neuron(&k, &x, &d, &f).unwrap();
        assert_eq!(k2.moment(), k.moment());
        assert_eq!(k2.rank(), 1);
        assert_relative_eq!(k2.singular_values()[0], k.singular_values()[0], max_relative = 1e-14);
        assert_eq!(k2.sample_count(), 4);
    }

    #[test]
    fn errors() {
        let empty = NeuronKnowledge::<f64>::empty(3);
        assert!(matches!(solve_weights(&empty, 1.0), Err(Error::State(_))));
        let k = single_column_knowledge();
        assert!(matches!(solve_weights(&k, 0.0), Err(Error::Input(_))));
        assert!(matches!(solve_weights(&k, -1.0), Err(Error::Input(_))));

        let x = DMatrix::zeros(3, 2);
        let ok = DVector::from_element(2, 0.1);
        assert!(matches!(train_neuron(&k, &x, &ok, &ok), Err(Error::Input(_))));
        let x = DMatrix::zeros(2, 2);
        let short = DVector::from_element(1, 0.1);
        assert!(matches!(train_neuron(&k, &x, &short, &ok), Err(Error::Input(_))));
        let zero = DVector::zeros(2);
        assert!(matches!(train_neuron(&k, &x, &ok, &zero), Err(Error::Input(_))));
    }

    #[test]
    fn from_parts_validates() {
        let k = single_column_knowledge();
        let rebuilt = NeuronKnowledge::from_parts(
            k.moment().clone(),
            k.u().clone(),
            k.singular_values().clone(),
            k.sample_count(),
        )
        .unwrap();
        assert_eq!(rebuilt, k);
        let bad = NeuronKnowledge::from_parts(
            DVector::zeros(2),
            DMatrix::from_element(2, 1, 1.0),
            DVector::from_vec(vec![1.0]),
            1,
        );
        assert!(bad.is_err());
    }
}
