//! Binary index file.
//!
//! Layout, all integers little-endian:
//! `magic[8] = "IPLVIDX\0"`, `version: u32`, `dimension: u32`, `count: u64`,
//! then `count` entries of `id_len: u32, id, category_len: u32, category`,
//! then `count * dimension` `f32` values, row-major.

use std::io::{Read, Write};
use std::path::Path;

use super::{RetrievalError, VectorIndex};

pub const MAGIC: &[u8; 8] = b"IPLVIDX\0";
pub const FORMAT_VERSION: u32 = 1;

pub fn write_index<W: Write>(index: &VectorIndex, mut out: W) -> std::io::Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&(index.dimension() as u32).to_le_bytes())?;
    out.write_all(&(index.len() as u64).to_le_bytes())?;
    for (id, category, _) in index.rows() {
        for s in [id, category] {
            out.write_all(&(s.len() as u32).to_le_bytes())?;
            out.write_all(s.as_bytes())?;
        }
    }
    for (_, _, v) in index.rows() {
        for x in v {
            out.write_all(&x.to_le_bytes())?;
        }
    }
    out.flush()
}

pub fn read_index<R: Read>(mut input: R) -> Result<VectorIndex, RetrievalError> {
    let bad = |m: &str| RetrievalError::Format(m.to_string());
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
    if &magic != MAGIC {
        return Err(bad("bad magic"));
    }
    let version = read_u32(&mut input)?;
    if version != FORMAT_VERSION {
        return Err(RetrievalError::Format(format!("unsupported version {version}")));
    }
    let dimension = read_u32(&mut input)? as usize;
    let mut count_buf = [0u8; 8];
    input.read_exact(&mut count_buf).map_err(|_| bad("truncated header"))?;
    let count = u64::from_le_bytes(count_buf) as usize;
    let mut labels = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let id = read_string(&mut input)?;
        let category = read_string(&mut input)?;
        labels.push((id, category));
    }
    let mut index = VectorIndex::empty(dimension);
    let mut row = vec![0f32; dimension];
    let mut word = [0u8; 4];
    for (id, category) in labels {
        for x in row.iter_mut() {
            input.read_exact(&mut word).map_err(|_| bad("truncated vectors"))?;
            *x = f32::from_le_bytes(word);
        }
        index.push(&id, &category, &row)?;
    }
    Ok(index)
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32, RetrievalError> {
    let mut buf = [0u8; 4];
    input
        .read_exact(&mut buf)
        .map_err(|_| RetrievalError::Format("truncated file".into()))?;
    Ok(u32::from_le_bytes(buf))
}

fn read_string<R: Read>(input: &mut R) -> Result<String, RetrievalError> {
    let len = read_u32(input)? as usize;
    let mut buf = vec![0u8; len];
    input
        .read_exact(&mut buf)
        .map_err(|_| RetrievalError::Format("truncated label".into()))?;
    String::from_utf8(buf).map_err(|_| RetrievalError::Format("label is not UTF-8".into()))
}

pub fn save_index(index: &VectorIndex, path: impl AsRef<Path>) -> std::io::Result<()> {
    let file = std::fs::File::create(path)?;
    write_index(index, std::io::BufWriter::new(file))
}

pub fn load_index(path: impl AsRef<Path>) -> Result<VectorIndex, RetrievalError> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| RetrievalError::Format(format!("{}: {e}", path.as_ref().display())))?;
    read_index(std::io::BufReader::new(file))
}
