//! Little-endian embedding container.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "CEMB"
//!      4     4  version (u32) = 1
//!      8     4  dim (u32)
//!     12     8  count (u64)
//!     20     4  label width (u32) = 4
//!     24     …  count × (label u32, dim × f32)
//! ```

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{ClassId, EmbeddingDataset};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"CEMB";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 24;
const LABEL_WIDTH: u32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EmbeddingHeader {
    pub version: u32,
    pub dim: u32,
    pub count: u64,
    pub label_width: u32,
}

impl EmbeddingHeader {
    pub fn record_len(&self) -> u64 {
        self.label_width as u64 + 4 * self.dim as u64
    }

    pub fn payload_len(&self) -> u64 {
        self.count * self.record_len()
    }

    fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::format(
                bytes.len() as u64,
                format!("file ends inside the {HEADER_LEN}-byte header ({} bytes present)", bytes.len()),
            ));
        }
        if &bytes[0..4] != MAGIC {
            return Err(Error::format(0, format!("bad magic {:?}, expected \"CEMB\"", String::from_utf8_lossy(&bytes[0..4]))));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(Error::format(4, format!("unsupported version {version}, expected {VERSION}")));
        }
        let dim = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if dim == 0 {
            return Err(Error::format(8, "dimension must be positive"));
        }
        let count = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
        let label_width = u32::from_le_bytes(bytes[20..24].try_into().unwrap());
        if label_width != LABEL_WIDTH {
            return Err(Error::format(20, format!("unsupported label width {label_width}, expected {LABEL_WIDTH}")));
        }
        Ok(Self { version, dim, count, label_width })
    }

    fn encode(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[0..4].copy_from_slice(MAGIC);
        out[4..8].copy_from_slice(&self.version.to_le_bytes());
        out[8..12].copy_from_slice(&self.dim.to_le_bytes());
        out[12..20].copy_from_slice(&self.count.to_le_bytes());
        out[20..24].copy_from_slice(&self.label_width.to_le_bytes());
        out
    }
}

/// Reads and validates just the header.
pub fn read_header(path: &Path) -> Result<EmbeddingHeader> {
    use std::io::Read;
    let mut buf = Vec::with_capacity(HEADER_LEN);
    fs::File::open(path)?.take(HEADER_LEN as u64).read_to_end(&mut buf)?;
    EmbeddingHeader::parse(&buf)
}

pub fn read_binary(path: &Path) -> Result<EmbeddingDataset> {
    decode(&fs::read(path)?)
}

pub(crate) fn decode(bytes: &[u8]) -> Result<EmbeddingDataset> {
    let header = EmbeddingHeader::parse(bytes)?;
    let payload = &bytes[HEADER_LEN..];
    let expected = header.payload_len();
    let actual = payload.len() as u64;
    if actual < expected {
        return Err(Error::format(
            bytes.len() as u64,
            format!("truncated payload: expected {expected} bytes for {} records, found {actual}", header.count),
        ));
    }
    if actual > expected {
        return Err(Error::format(
            HEADER_LEN as u64 + expected,
            format!("{} trailing bytes after {} records (payload expected {expected} bytes)", actual - expected, header.count),
        ));
    }
    let dim = header.dim as usize;
    let count = header.count as usize;
    let mut values = Vec::with_capacity(count * dim);
    let mut labels = Vec::with_capacity(count);
    for record in payload.chunks_exact(header.record_len() as usize) {
        labels.push(ClassId(u32::from_le_bytes(record[0..4].try_into().unwrap())));
        values.extend(record[4..].chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())));
    }
    EmbeddingDataset::from_parts(dim, values, labels)
}

pub fn write_binary(dataset: &EmbeddingDataset, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    out.write_all(&encode(dataset)?)?;
    out.flush()?;
    Ok(())
}

pub(crate) fn encode(dataset: &EmbeddingDataset) -> Result<Vec<u8>> {
    let dim = u32::try_from(dataset.dim()).map_err(|_| Error::input("dimension does not fit in u32"))?;
    let header = EmbeddingHeader { version: VERSION, dim, count: dataset.len() as u64, label_width: LABEL_WIDTH };
    let mut bytes = Vec::with_capacity(HEADER_LEN + header.payload_len() as usize);
    bytes.extend_from_slice(&header.encode());
    for (i, label) in dataset.labels().iter().enumerate() {
        bytes.extend_from_slice(&label.0.to_le_bytes());
        for v in dataset.embedding(i) {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(bytes)
}
