use nalgebra::{DMatrix, DVector, SVD};
use num_traits::Float;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Singular values below `max(S)·RANK_TOLERANCE` are dropped together with
/// their left singular vectors.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Prepends the all-ones bias row: `D×n → (D+1)×n`.
pub fn augment_bias<T: Scalar>(x: &DMatrix<T>) -> DMatrix<T> {
    let (d, n) = x.shape();
    let mut out = DMatrix::from_element(d + 1, n, T::one());
    out.view_mut((1, 0), (d, n)).copy_from(x);
    out
}

/// Left singular vectors and singular values of a matrix, truncated to its
/// numerical rank and ordered by decreasing singular value.
#[derive(Clone, Debug, PartialEq)]
pub struct Basis<T: Scalar> {
    pub(crate) u: DMatrix<T>,
    pub(crate) s: DVector<T>,
}

impl<T: Scalar> Basis<T> {
    /// Rank-zero basis over `rows`-dimensional space.
    pub fn empty(rows: usize) -> Self {
        Self { u: DMatrix::zeros(rows, 0), s: DVector::zeros(0) }
    }

    pub fn rows(&self) -> usize {
        self.u.nrows()
    }

    pub fn rank(&self) -> usize {
        self.s.len()
    }

    pub fn u(&self) -> &DMatrix<T> {
        &self.u
    }

    pub fn singular_values(&self) -> &DVector<T> {
        &self.s
    }

    /// `U·diag(S)`.
    pub fn scaled(&self) -> DMatrix<T> {
        let mut m = self.u.clone();
        for (j, mut col) in m.column_iter_mut().enumerate() {
            col *= self.s[j];
        }
        m
    }

    /// Basis of the horizontal concatenation `[U₁S₁ ‖ U₂S₂]`.
    ///
    /// A rank-zero side contributes nothing, so the other side is returned
    /// without refactorising.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        if self.rows() != other.rows() {
            return Err(Error::input(format!(
                "cannot merge bases over {} and {} dimensions",
                self.rows(),
                other.rows()
            )));
        }
        if other.rank() == 0 {
            return Ok(self.clone());
        }
        if self.rank() == 0 {
            return Ok(other.clone());
        }
        let mut joined = DMatrix::zeros(self.rows(), self.rank() + other.rank());
        joined.columns_mut(0, self.rank()).copy_from(&self.scaled());
        joined.columns_mut(self.rank(), other.rank()).copy_from(&other.scaled());
        economy_svd(joined)
    }

    /// Largest entry of `|UᵀU − I|`.
    pub fn orthonormality_error(&self) -> T {
        let gram = self.u.transpose() * &self.u;
        let mut worst = T::zero();
        for i in 0..gram.nrows() {
            for j in 0..gram.ncols() {
                let target = if i == j { T::one() } else { T::zero() };
                worst = Float::max(worst, Float::abs(gram[(i, j)] - target));
            }
        }
        worst
    }
}

/// Economy SVD keeping only `U` and `S`.
pub fn economy_svd<T: Scalar>(a: DMatrix<T>) -> Result<Basis<T>> {
    let (rows, cols) = a.shape();
    if rows == 0 || cols == 0 {
        return Ok(Basis::empty(rows));
    }
    if a.iter().any(|v| !Float::is_finite(*v)) {
        return Err(Error::Numerical("SVD input contains non-finite entries".into()));
    }
    let max_iter = 1000 * rows.min(cols) + 1000;
    let svd = SVD::try_new(a, true, false, T::default_epsilon(), max_iter)
        .ok_or_else(|| Error::Numerical(format!("SVD of a {rows}x{cols} matrix did not converge")))?;
    let u = svd.u.expect("left singular vectors were requested");
    let s = svd.singular_values;

    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).expect("singular values are finite"));
    let largest = order.first().map(|&i| s[i]).unwrap_or_else(T::zero);
    let cutoff = largest * T::lit(RANK_TOLERANCE);
    let kept: Vec<usize> = order.into_iter().filter(|&i| s[i] > cutoff).collect();

    let mut u_kept = DMatrix::zeros(rows, kept.len());
    let mut s_kept = DVector::zeros(kept.len());
    for (dst, &src) in kept.iter().enumerate() {
        u_kept.set_column(dst, &u.column(src));
        s_kept[dst] = s[src];
    }
    Ok(Basis { u: u_kept, s: s_kept })
}
