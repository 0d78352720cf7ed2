//! On-disk cache of coefficient tables, one file per content key.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use subspec_core::counting::{read_table, write_table, CoefficientTable};

use crate::error::Result;

/// Environment variable overriding the cache root.
pub const CACHE_ENV: &str = "SUBSPEC_CACHE_DIR";
const EXTENSION: &str = "sspt";

/// `$SUBSPEC_CACHE_DIR`, or `.subspec-cache` in the working directory.
pub fn default_cache_root() -> PathBuf {
    std::env::var_os(CACHE_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(".subspec-cache"))
}

pub fn cache_path(root: &Path, key: &str) -> PathBuf {
    root.join(format!("{key}.{EXTENSION}"))
}

/// The cached table for `key`, if a readable file with a matching header key exists.
/// Unreadable or mismatched files are reported and treated as absent.
pub fn cache_lookup(root: &Path, key: &str) -> Option<CoefficientTable> {
    let path = cache_path(root, key);
    let file = fs::File::open(&path).ok()?;
    match read_table(BufReader::new(file)) {
        Ok((table, stored)) if stored == key => Some(table),
        Ok((_, stored)) => {
            log::warn!("cache entry {} has key {stored}, discarding", path.display());
            None
        }
        Err(e) => {
            log::warn!("cache entry {} is unusable ({e}), discarding", path.display());
            None
        }
    }
}

/// Writes through a temporary file so a concurrent reader never sees a partial table.
pub fn cache_store(root: &Path, key: &str, table: &CoefficientTable) -> Result<PathBuf> {
    fs::create_dir_all(root)?;
    let path = cache_path(root, key);
    let tmp = root.join(format!(".{key}.{}.tmp", std::process::id()));
    {
        let mut out = BufWriter::new(fs::File::create(&tmp)?);
        write_table(table, key, &mut out)?;
        out.flush()?;
    }
    fs::rename(&tmp, &path)?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CacheEntry {
    pub key: String,
    pub bytes: u64,
    /// `None` when the file does not parse.
    pub descriptor: Option<String>,
    pub lambda_max: Option<f64>,
}

pub fn cache_list(root: &Path) -> Result<Vec<CacheEntry>> {
    let mut out = Vec::new();
    let Ok(dir) = fs::read_dir(root) else {
        return Ok(out);
    };
    for entry in dir {
        let entry = entry?;
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) != Some(EXTENSION) {
            continue;
        }
        let key = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        let parsed = fs::File::open(&path)
            .ok()
            .and_then(|f| read_table(BufReader::new(f)).ok());
        out.push(CacheEntry {
            key,
            bytes: entry.metadata()?.len(),
            descriptor: parsed.as_ref().map(|(t, _)| t.descriptor.clone()),
            lambda_max: parsed.as_ref().map(|(t, _)| t.lambda_max),
        });
    }
    out.sort_by(|a, b| a.key.cmp(&b.key));
    Ok(out)
}

/// Removes every cached table; returns how many files were deleted.
pub fn cache_clear(root: &Path) -> Result<usize> {
    let mut removed = 0;
    let Ok(dir) = fs::read_dir(root) else {
        return Ok(0);
    };
    for entry in dir {
        let path = entry?.path();
        let name = path.file_name().unwrap_or_default().to_string_lossy();
        if path.extension().and_then(|e| e.to_str()) == Some(EXTENSION) || name.ends_with(".tmp") {
            fs::remove_file(&path)?;
            removed += 1;
        }
    }
    Ok(removed)
}
