use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{ClassId, EmbeddingDataset};
use crate::error::{Error, Result};

/// Isotropic unit-variance Gaussian classes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub num_classes: usize,
    pub dim: usize,
    /// Samples per class before the 80/20 train/test split.
    pub per_class: usize,
    /// Minimum distance between class means, in units of the within-class σ.
    pub separation: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Training samples per class: `⌈0.8·per_class⌉`.
    pub fn train_per_class(&self) -> usize {
        (4 * self.per_class).div_ceil(5)
    }
}

/// Draws class means from a standard normal and rescales them so the
/// closest pair sits exactly `separation` apart, then samples each class
/// around its mean.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(EmbeddingDataset, EmbeddingDataset)> {
    if spec.num_classes == 0 || spec.dim == 0 || spec.per_class == 0 {
        return Err(Error::input("synthetic dataset needs positive class count, dimension and size"));
    }
    if !(spec.separation >= 0.0) || !spec.separation.is_finite() {
        return Err(Error::input(format!("separation must be a finite non-negative number, got {}", spec.separation)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut gauss = || -> f64 { StandardNormal.sample(&mut rng) };

    let mut means: Vec<Vec<f64>> = (0..spec.num_classes).map(|_| (0..spec.dim).map(|_| gauss()).collect()).collect();
    let closest = if spec.num_classes == 1 {
        means[0].iter().map(|v| v * v).sum::<f64>().sqrt()
    } else {
        let mut best = f64::INFINITY;
        for a in 0..means.len() {
            for b in a + 1..means.len() {
                let d: f64 = means[a].iter().zip(&means[b]).map(|(x, y)| (x - y) * (x - y)).sum();
                best = best.min(d.sqrt());
            }
        }
        best
    };
    let scale = if closest > 0.0 { spec.separation / closest } else { 0.0 };
    for m in &mut means {
        m.iter_mut().for_each(|v| *v *= scale);
    }

    let n_train = spec.train_per_class();
    let mut train = EmbeddingDataset::new(spec.dim)?;
    let mut test = EmbeddingDataset::new(spec.dim)?;
    let mut row = vec![0f32; spec.dim];
    for (c, mean) in means.iter().enumerate() {
        for i in 0..spec.per_class {
            for (v, m) in row.iter_mut().zip(mean) {
                *v = (m + gauss()) as f32;
            }
            let target = if i < n_train { &mut train } else { &mut test };
            target.push(&row, ClassId(c as u32))?;
        }
    }
    Ok((train, test))
}
