//! Content-addressed kernel cache.
//!
//! Each entry is `<32 hex digits>.qkk` in the container format plus an
//! optional `<hex>.json` sidecar holding the provenance and caller metadata.
//! Writes go to a unique temporary name and are renamed into place, so
//! readers never observe a partial file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::container::{read_container, write_container};
use super::{KernelMatrix, Pathway, Provenance};
use crate::error::Result;
use crate::hash::ContentHash;
use crate::sim::NoiseModel;

/// Environment variable that overrides the cache directory.
pub const CACHE_DIR_ENV: &str = "QKBENCH_CACHE_DIR";

/// Every input that determines a kernel matrix, and nothing else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheKey {
    pub dataset: String,
    /// Fold identity, including the sample indices it covers.
    pub fold: Value,
    pub pipeline: Value,
    /// Feature-map spec (with θ) or classical kernel with fitted γ.
    pub kernel: Value,
    pub noise: Option<NoiseModel>,
    pub pathway: Pathway,
    /// Which block: "train" (train×train) or "test" (test×train).
    pub side: String,
}

impl CacheKey {
    pub fn hash(&self) -> Result<ContentHash> {
        ContentHash::of(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Sidecar {
    provenance: Provenance,
    #[serde(default)]
    extra: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CachedKernel {
    pub kernel: KernelMatrix,
    pub extra: Value,
}

#[derive(Debug, Clone)]
pub struct KernelCache {
    dir: PathBuf,
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

impl KernelCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    /// `$QKBENCH_CACHE_DIR` when set, otherwise `default`.
    pub fn from_env_or(default: impl Into<PathBuf>) -> Result<Self> {
        match std::env::var_os(CACHE_DIR_ENV) {
            Some(d) if !d.is_empty() => Self::new(PathBuf::from(d)),
            _ => Self::new(default),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn paths(&self, key: ContentHash) -> (PathBuf, PathBuf) {
        (self.dir.join(format!("{key}.qkk")), self.dir.join(format!("{key}.json")))
    }

    /// A hit requires a readable container; an unreadable sidecar only loses
    /// provenance. Corrupt entries are reported and treated as misses.
    pub fn get(&self, key: ContentHash) -> Option<CachedKernel> {
        let (bin, side) = self.paths(key);
        let bytes = fs::read(&bin).ok()?;
        let (header, values) = match read_container(&mut bytes.as_slice()) {
            Ok(v) => v,
            Err(e) => {
                log::warn!("ignoring corrupt cache entry {}: {e}", bin.display());
                return None;
            }
        };
        let sidecar = fs::read(&side).ok().and_then(|b| match serde_json::from_slice::<Sidecar>(&b) {
            Ok(s) => Some(s),
            Err(e) => {
                log::warn!("ignoring corrupt cache sidecar {}: {e}", side.display());
                None
            }
        });
        let (provenance, extra) = match sidecar {
            Some(s) => (s.provenance, s.extra),
            None => (Provenance::new(header.pathway, header.config_hash, None, 0.0), Value::Null),
        };
        Some(CachedKernel { kernel: KernelMatrix { values, provenance }, extra })
    }

    pub fn put(&self, key: ContentHash, kernel: &KernelMatrix, extra: Value) -> Result<()> {
        let (bin, side) = self.paths(key);
        let mut buf = Vec::with_capacity(super::HEADER_LEN + 8 * kernel.values.len());
        write_container(&mut buf, &kernel.values, kernel.provenance.pathway, key)?;
        let sidecar = serde_json::to_vec(&Sidecar { provenance: kernel.provenance.clone(), extra })?;
        self.write_atomic(&side, &sidecar)?;
        self.write_atomic(&bin, &buf)
    }

    fn write_atomic(&self, dest: &Path, bytes: &[u8]) -> Result<()> {
        let tmp = self.dir.join(format!(
            ".{}.{}.{}.tmp",
            dest.file_name().and_then(|n| n.to_str()).unwrap_or("entry"),
            std::process::id(),
            TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        drop(f);
        fs::rename(&tmp, dest)?;
        Ok(())
    }
}
