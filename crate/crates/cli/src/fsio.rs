//! File helpers: atomic writes and line readers.
//!
//! Outputs are written to a temporary file in the destination directory and
//! renamed into place, so failures never leave truncated files behind.

use crate::error::{CliError, Result};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

/// Writes `fill(writer)` to `path` atomically.
pub fn atomic_write<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<&mut tempfile::NamedTempFile>) -> Result<()>,
{
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            tempfile::NamedTempFile::new_in(dir)
        }
        None => tempfile::NamedTempFile::new_in("."),
    }
    .map_err(|e| CliError::Data(format!("cannot create temp file near {}: {e}", path.display())))?;

    {
        let mut writer = BufWriter::new(&mut tmp);
        fill(&mut writer)?;
        writer.flush()?;
    }
    tmp.persist(path)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

/// Iterates lines with 1-based numbering, surfacing IO errors with context.
pub fn read_lines(path: &Path) -> Result<impl Iterator<Item = Result<(usize, String)>>> {
    let file = File::open(path)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
    let reader = BufReader::new(file);
    Ok(reader.lines().enumerate().map(|(i, line)| {
        line.map(|l| (i + 1, l))
            .map_err(|e| CliError::Data(format!("read error at line {}: {e}", i + 1)))
    }))
}

/// Fails early when an input path does not exist.
pub fn require_exists(path: &Path, what: &str) -> Result<()> {
    if !path.exists() {
        return Err(CliError::Data(format!(
            "{what} not found: {}",
            path.display()
        )));
    }
    Ok(())
}
