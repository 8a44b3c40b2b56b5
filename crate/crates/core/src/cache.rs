//! Content-addressed directory of activation vectors.
//!
//! Each surviving rule's activation is stored as an `AVF1` file named by the
//! SHA-256 of its condition's canonical string. Workers write their own
//! files and hand the entries back; only the coordinator touches
//! `manifest.csv`.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::activation::ActivationVector;
use crate::error::{Error, Result};
use crate::rule::Condition;

pub const MANIFEST: &str = "manifest.csv";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CacheEntry {
    pub condition: String,
    pub file: String,
}

#[derive(Debug, Clone)]
pub struct ActivationCache {
    dir: PathBuf,
}

pub fn file_name(canonical: &str) -> String {
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

impl ActivationCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(ActivationCache { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, cond: &Condition) -> PathBuf {
        self.dir.join(file_name(&cond.canonical()))
    }

    pub fn store(&self, cond: &Condition, act: &ActivationVector) -> Result<CacheEntry> {
        let canonical = cond.canonical();
        let file = file_name(&canonical);
        act.write_to(&self.dir.join(&file))?;
        Ok(CacheEntry {
            condition: canonical,
            file,
        })
    }

    pub fn load(&self, cond: &Condition) -> Result<ActivationVector> {
        let path = self.path_for(cond);
        if !path.exists() {
            return Err(Error::CacheMiss {
                condition: cond.canonical(),
                path,
            });
        }
        ActivationVector::read_from(&path)
    }

    pub fn write_manifest(&self, entries: &[CacheEntry]) -> Result<()> {
        let path = self.dir.join(MANIFEST);
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::csv(&path, e))?;
        w.write_record(["condition", "file"])
            .map_err(|e| Error::csv(&path, e))?;
        for e in entries {
            w.write_record([&e.condition, &e.file])
                .map_err(|e| Error::csv(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))
    }

    pub fn read_manifest(&self) -> Result<Vec<CacheEntry>> {
        let path = self.dir.join(MANIFEST);
        let mut r = csv::Reader::from_path(&path).map_err(|e| Error::csv(&path, e))?;
        let mut out = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::csv(&path, e))?;
            out.push(CacheEntry {
                condition: rec.get(0).unwrap_or_default().to_string(),
                file: rec.get(1).unwrap_or_default().to_string(),
            });
        }
        Ok(out)
    }

    /// Removes the listed files and the manifest, then the directory if empty.
    pub fn clear(&self, entries: &[CacheEntry]) -> Result<()> {
        for e in entries {
            let path = self.dir.join(&e.file);
            match fs::remove_file(&path) {
                Ok(()) => {}
                Err(err) if err.kind() == std::io::ErrorKind::NotFound => {}
                Err(err) => return Err(Error::io(path, err)),
            }
        }
        let manifest = self.dir.join(MANIFEST);
        if manifest.exists() {
            fs::remove_file(&manifest).map_err(|e| Error::io(&manifest, e))?;
        }
        let _ = fs::remove_dir(&self.dir);
        Ok(())
    }
}
