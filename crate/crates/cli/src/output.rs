use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use compass_core::Table;

use crate::args::Format;

pub const OUT_DIR_ENV: &str = "COMPASS_OUT_DIR";

/// `out` under `$COMPASS_OUT_DIR` when that is set and `out` is relative.
pub fn resolve(out: Option<&Path>) -> Option<PathBuf> {
    let out = out?;
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if out.is_relative() => Some(PathBuf::from(dir).join(out)),
        _ => Some(out.to_path_buf()),
    }
}

/// Writes via a temporary file in the target directory and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, bytes),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

pub fn render(table: &Table, format: Format) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    match format {
        Format::Csv => table.write_csv(&mut buf)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut buf, &table.to_json())?;
            buf.push(b'\n');
        }
    }
    Ok(buf)
}
