//! The binary embedding file format.
//!
//! Little-endian layout:
//!
//! ```text
//! magic "GAMAEMB1" (8 bytes)
//! dim:        u32
//! count:      u64
//! normalized: u8 (0 or 1)
//! count x [ id_len: u16, id: UTF-8 bytes, dim x f32 ]
//! ```
//!
//! Reads reject bad magic, truncated or oversized payloads, invalid UTF-8
//! ids, and non-finite floats.

use crate::error::{CliError, Result};
use crate::fsio;
use crossview_core::gallery::EmbeddingRecord;
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

pub const MAGIC: &[u8; 8] = b"GAMAEMB1";

/// Writes records atomically; `normalized` records whether vectors are
/// already unit length.
pub fn write_embeddings(records: &[EmbeddingRecord], normalized: bool, path: &Path) -> Result<()> {
    let dim = records.first().map_or(0, |r| r.vector.len());
    for rec in records {
        if rec.vector.len() != dim {
            return Err(CliError::Data(format!(
                "record {}: dimension {} differs from {}",
                rec.id,
                rec.vector.len(),
                dim
            )));
        }
        if rec.id.len() > u16::MAX as usize {
            return Err(CliError::Data(format!(
                "record id longer than {} bytes",
                u16::MAX
            )));
        }
        if rec.vector.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Data(format!("record {}: non-finite value", rec.id)));
        }
    }
    let dim_u32 = u32::try_from(dim)
        .map_err(|_| CliError::Data("embedding dimension exceeds u32".into()))?;

    fsio::atomic_write(path, |w| {
        w.write_all(MAGIC)?;
        w.write_all(&dim_u32.to_le_bytes())?;
        w.write_all(&(records.len() as u64).to_le_bytes())?;
        w.write_all(&[u8::from(normalized)])?;
        for rec in records {
            w.write_all(&(rec.id.len() as u16).to_le_bytes())?;
            w.write_all(rec.id.as_bytes())?;
            for &v in &rec.vector {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    })
}

/// Reads a whole embedding file; returns the records and the normalized flag.
pub fn read_embeddings(path: &Path) -> Result<(Vec<EmbeddingRecord>, bool)> {
    let file = File::open(path)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = BufReader::new(file);
    let ctx = path.display();

    let mut magic = [0u8; 8];
    reader
        .read_exact(&mut magic)
        .map_err(|_| CliError::Data(format!("{ctx}: bad magic (file too short)")))?;
    if &magic != MAGIC {
        return Err(CliError::Data(format!("{ctx}: bad magic")));
    }

    let mut buf4 = [0u8; 4];
    reader
        .read_exact(&mut buf4)
        .map_err(|_| CliError::Data(format!("{ctx}: truncated header")))?;
    let dim = u32::from_le_bytes(buf4) as usize;

    let mut buf8 = [0u8; 8];
    reader
        .read_exact(&mut buf8)
        .map_err(|_| CliError::Data(format!("{ctx}: truncated header")))?;
    let count = u64::from_le_bytes(buf8) as usize;

    let mut flag = [0u8; 1];
    reader
        .read_exact(&mut flag)
        .map_err(|_| CliError::Data(format!("{ctx}: truncated header")))?;
    let normalized = match flag[0] {
        0 => false,
        1 => true,
        other => {
            return Err(CliError::Data(format!(
                "{ctx}: invalid normalized flag {other}"
            )))
        }
    };

    let mut records = Vec::with_capacity(count.min(1 << 20));
    let mut float_buf = vec![0u8; dim * 4];
    for index in 0..count {
        let mut len_buf = [0u8; 2];
        reader.read_exact(&mut len_buf).map_err(|_| {
            CliError::Data(format!("{ctx}: count/size mismatch at record {index}"))
        })?;
        let id_len = u16::from_le_bytes(len_buf) as usize;
        let mut id_buf = vec![0u8; id_len];
        reader.read_exact(&mut id_buf).map_err(|_| {
            CliError::Data(format!("{ctx}: count/size mismatch at record {index}"))
        })?;
        let id = String::from_utf8(id_buf)
            .map_err(|_| CliError::Data(format!("{ctx}: record {index}: id is not UTF-8")))?;
        reader.read_exact(&mut float_buf).map_err(|_| {
            CliError::Data(format!("{ctx}: count/size mismatch at record {index}"))
        })?;
        let vector: Vec<f32> = float_buf
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Data(format!(
                "{ctx}: record {id}: non-finite value"
            )));
        }
        records.push(EmbeddingRecord::new(id, vector));
    }

    let mut trailer = [0u8; 1];
    if reader.read(&mut trailer)? != 0 {
        return Err(CliError::Data(format!(
            "{ctx}: count/size mismatch: trailing bytes after {count} records"
        )));
    }
    Ok((records, normalized))
}
