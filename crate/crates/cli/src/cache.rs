//! Content-addressed artifact cache.
//!
//! Every stage is keyed by the SHA-256 of its inputs: the upstream stage key
//! plus the settings and file digests it consumes. Artifacts are JSON files
//! written atomically, so an interrupted run leaves only complete entries.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nprox_core::textio::write_atomic;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{io_err, CliError};

pub fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        write!(s, "{b:02x}").expect("writing to a string");
    }
    s
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    Ok(sha256_hex(&bytes))
}

/// Key of a stage: digest of its name and canonical JSON inputs.
pub fn stage_key(stage: &str, inputs: &impl Serialize) -> String {
    let json = serde_json::to_string(inputs).expect("stage inputs serialize");
    sha256_hex(format!("{stage}\n{json}").as_bytes())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageStatus {
    pub stage: String,
    pub key: String,
    pub cached: bool,
}

#[derive(Debug, Clone)]
pub struct Cache {
    dir: Option<PathBuf>,
    log: Vec<StageStatus>,
}

impl Cache {
    pub fn new(dir: Option<PathBuf>) -> Self {
        Cache { dir, log: Vec::new() }
    }

    pub fn disabled() -> Self {
        Self::new(None)
    }

    pub fn statuses(&self) -> &[StageStatus] {
        &self.log
    }

    fn path(&self, stage: &str, key: &str) -> Option<PathBuf> {
        let file = format!("{}-{}.json", stage.replace('/', "_"), &key[..32]);
        self.dir.as_ref().map(|d| d.join(file))
    }

    /// Returns the cached artifact for `key`, or computes and stores it.
    pub fn get_or_compute<T, F>(&mut self, stage: &str, key: &str, compute: F) -> Result<T, CliError>
    where
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<T, CliError>,
    {
        let path = self.path(stage, key);
        if let Some(p) = path.as_ref().filter(|p| p.is_file()) {
            match std::fs::read(p).map(|b| serde_json::from_slice::<T>(&b)) {
                Ok(Ok(v)) => {
                    log::info!("{stage}: cache hit");
                    self.log.push(StageStatus {
                        stage: stage.into(),
                        key: key.into(),
                        cached: true,
                    });
                    return Ok(v);
                }
                _ => log::warn!("{stage}: unreadable cache entry {}, recomputing", p.display()),
            }
        }
        log::info!("{stage}: computing");
        let v = compute()?;
        if let Some(p) = path {
            let dir = p.parent().expect("cache file has a parent");
            std::fs::create_dir_all(dir).map_err(io_err(dir))?;
            let bytes = serde_json::to_vec(&v).expect("artifact serializes");
            write_atomic(&p, &bytes)?;
        }
        self.log.push(StageStatus {
            stage: stage.into(),
            key: key.into(),
            cached: false,
        });
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn second_lookup_hits() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = Cache::new(Some(dir.path().to_path_buf()));
        let key = stage_key("x", &1);
        let a: Vec<f64> = c.get_or_compute("x", &key, || Ok(vec![0.1, 1.0 / 3.0])).unwrap();
        let b: Vec<f64> = c
            .get_or_compute("x", &key, || panic!("should be cached"))
            .unwrap();
        assert_eq!(a, b);
        assert_eq!(
            c.statuses().iter().map(|s| s.cached).collect::<Vec<_>>(),
            vec![false, true]
        );
    }

    #[test]
    fn keys_depend_on_inputs() {
        assert_ne!(stage_key("x", &1), stage_key("x", &2));
        assert_ne!(stage_key("x", &1), stage_key("y", &1));
    }
}
