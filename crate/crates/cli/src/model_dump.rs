//! Little-endian classifier dump: knowledge triples and weights in f64.
//!
//! ```text
//! magic "CROL" | version u32 | input_dim u32 | classes u64
//! lambda f64 | clamp_epsilon f64
//! per class: id u32 | sample_count u64 | rank u32
//!            moment[D+1] | s[rank] | U column-major[(D+1)*rank] | weights[D+1]
//! ```

use std::path::Path;

use cil_core::data::ClassId;
use cil_core::{ActivationSpec, Classifier, Knowledge};
use nalgebra::{DMatrix, DVector};

use crate::error::{CliError, CliResult};

pub const MAGIC: &[u8; 4] = b"CROL";
pub const VERSION: u32 = 1;

/// Relative tolerance between stored weights and weights re-solved on load.
pub const WEIGHT_TOLERANCE: f64 = 1e-9;

pub fn encode(classifier: &Classifier) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(classifier.input_dim() as u32).to_le_bytes());
    out.extend_from_slice(&(classifier.num_classes() as u64).to_le_bytes());
    out.extend_from_slice(&classifier.lambda().to_le_bytes());
    out.extend_from_slice(&classifier.activation().clamp_epsilon.to_le_bytes());
    let put = |out: &mut Vec<u8>, xs: &[f64]| xs.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes()));
    for (class, neuron) in classifier.neurons() {
        let k = neuron.knowledge();
        out.extend_from_slice(&class.0.to_le_bytes());
        out.extend_from_slice(&k.sample_count().to_le_bytes());
        out.extend_from_slice(&(k.rank() as u32).to_le_bytes());
        put(&mut out, k.moment().as_slice());
        put(&mut out, k.singular_values().as_slice());
        put(&mut out, k.u().as_slice());
        put(&mut out, neuron.weights().as_slice());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn fail(&self, message: impl Into<String>) -> CliError {
        CliError::Data(format!("model dump at byte {}: {}", self.pos, message.into()))
    }

    fn take(&mut self, n: usize) -> CliResult<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            self.fail(format!("truncated, expected {n} more bytes, found {}", self.bytes.len() - self.pos))
        })?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self) -> CliResult<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> CliResult<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> CliResult<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| self.fail("length overflow"))?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

/// Rebuilds a classifier, re-solving every neuron's weights and checking
/// them against the stored ones.
pub fn decode(bytes: &[u8]) -> CliResult<Classifier> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        r.pos = 0;
        return Err(r.fail("bad magic"));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(r.fail(format!("unsupported version {version}")));
    }
    let dim = r.u32()? as usize;
    let classes = r.u64()?;
    let lambda = f64::from_le_bytes(r.take(8)?.try_into().unwrap());
    let epsilon = f64::from_le_bytes(r.take(8)?.try_into().unwrap());
    let activation = ActivationSpec::logistic(epsilon).map_err(|e| r.fail(e.to_string()))?;
    let mut clf = Classifier::new(dim, lambda, activation).map_err(|e| r.fail(e.to_string()))?;
    let aug = dim + 1;
    for _ in 0..classes {
        let class = ClassId(r.u32()?);
        let samples = r.u64()?;
        let rank = r.u32()? as usize;
        if rank > aug {
            return Err(r.fail(format!("rank {rank} exceeds dimension {aug}")));
        }
        let moment = DVector::from_vec(r.f64s(aug)?);
        let s = DVector::from_vec(r.f64s(rank)?);
        let u = DMatrix::from_vec(aug, rank, r.f64s(aug * rank)?);
        let stored = DVector::from_vec(r.f64s(aug)?);
        let knowledge = Knowledge::from_parts(moment, u, s, samples).map_err(|e| r.fail(e.to_string()))?;
        clf.insert_trained(class, knowledge).map_err(|e| r.fail(e.to_string()))?;
        let solved = clf.neuron(class).expect("just inserted").weights();
        let scale = stored.norm().max(f64::MIN_POSITIVE);
        if (solved - &stored).norm() > WEIGHT_TOLERANCE * scale {
            return Err(r.fail(format!("weights of class {class} do not match their knowledge")));
        }
    }
    if r.pos != bytes.len() {
        return Err(r.fail(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(clf)
}

pub fn save(classifier: &Classifier, path: &Path) -> CliResult<()> {
    std::fs::write(path, encode(classifier)).map_err(|e| CliError::output(&path.display().to_string(), e))
}

pub fn load(path: &Path) -> CliResult<Classifier> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    decode(&bytes)
}
