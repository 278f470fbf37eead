//! On-disk distance (`dist.vlpd`) and reference (`refs.vlpr`) caches.
//!
//! Both files carry the dataset hash. A cache that is missing, unreadable,
//! stale or built with other parameters is rebuilt and rewritten unless the
//! caller asks for strict reuse.

use std::fmt;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::data::{DistanceIndex, KnowledgeGraph};
use crate::error::{Error, Result};
use crate::vlp::ReferenceTable;

pub const DISTANCE_CACHE: &str = "dist.vlpd";
pub const REFERENCE_CACHE: &str = "refs.vlpr";
/// Overrides the directory caches are kept in (default: the dataset dir).
pub const CACHE_DIR_ENV: &str = "VLP_CACHE_DIR";

/// Cache directory for a dataset: `$VLP_CACHE_DIR` when set, else `dataset`.
pub fn cache_dir(dataset: &Path) -> PathBuf {
    match std::env::var_os(CACHE_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => dataset.to_path_buf(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CacheStatus {
    Hit,
    /// Written fresh; the string says why the old file was not used.
    Built(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheEvent {
    pub path: PathBuf,
    pub status: CacheStatus,
    pub dataset_hash: u64,
}

impl fmt::Display for CacheEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.status {
            CacheStatus::Hit => write!(
                f,
                "cache-hit {} (hash {:016x})",
                self.path.display(),
                self.dataset_hash
            ),
            CacheStatus::Built(why) => write!(
                f,
                "cache-built {} (hash {:016x}; {why})",
                self.path.display(),
                self.dataset_hash
            ),
        }
    }
}

fn write_atomic(
    path: &Path,
    write: impl FnOnce(&mut BufWriter<&fs::File>) -> Result<()>,
) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .map_err(|e| Error::io(format!("creating {}", parent.display()), e))?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let file =
        fs::File::create(&tmp).map_err(|e| Error::io(format!("creating {}", tmp.display()), e))?;
    let mut w = BufWriter::new(&file);
    write(&mut w)?;
    w.flush()
        .map_err(|e| Error::io(format!("writing {}", tmp.display()), e))?;
    drop(w);
    file.sync_all()
        .map_err(|e| Error::io(format!("syncing {}", tmp.display()), e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(format!("renaming to {}", path.display()), e))
}

fn open(path: &Path) -> std::result::Result<BufReader<fs::File>, String> {
    fs::File::open(path)
        .map(BufReader::new)
        .map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => "missing".to_string(),
            _ => format!("cannot open: {e}"),
        })
}

/// Loads `dir/dist.vlpd` if it matches `kg` and `cap`, otherwise computes
/// the index (and writes it back when `rebuild` is allowed).
pub fn load_or_build_distances(
    kg: &KnowledgeGraph,
    dir: &Path,
    cap: u8,
    rebuild: bool,
) -> Result<(DistanceIndex, CacheEvent)> {
    let path = dir.join(DISTANCE_CACHE);
    let hash = kg.dataset_hash();
    let attempt = open(&path).and_then(|r| {
        let (dist, stored) = DistanceIndex::read_from(r).map_err(|e| e.to_string())?;
        if stored != hash {
            Err(format!("stale: built for {stored:016x}"))
        } else if dist.cap() != cap {
            Err(format!("built with cap {}", dist.cap()))
        } else if dist.num_entities() != kg.num_entities() {
            Err("entity count differs".into())
        } else {
            Ok(dist)
        }
    });
    let reason = match attempt {
        Ok(dist) => {
            let event = CacheEvent {
                path,
                status: CacheStatus::Hit,
                dataset_hash: hash,
            };
            return Ok((dist, event));
        }
        Err(reason) => reason,
    };
    if !rebuild {
        return Err(Error::CacheUnavailable { path, reason });
    }
    let dist = DistanceIndex::compute(kg, cap);
    write_atomic(&path, |w| dist.write_to(w, hash))?;
    let event = CacheEvent {
        path,
        status: CacheStatus::Built(reason),
        dataset_hash: hash,
    };
    Ok((dist, event))
}

/// Same contract as [`load_or_build_distances`] for `dir/refs.vlpr`; a
/// cache built for another `n` or distance cap is rebuilt.
pub fn load_or_build_references(
    kg: &KnowledgeGraph,
    dist: &DistanceIndex,
    dir: &Path,
    n: usize,
    rebuild: bool,
) -> Result<(ReferenceTable, CacheEvent)> {
    let path = dir.join(REFERENCE_CACHE);
    let hash = kg.dataset_hash();
    let attempt = open(&path).and_then(|r| {
        let (table, stored, cap) = ReferenceTable::read_from(r).map_err(|e| e.to_string())?;
        if stored != hash {
            Err(format!("stale: built for {stored:016x}"))
        } else if cap != dist.cap() {
            Err(format!("built with cap {cap}"))
        } else if table.n() != n {
            Err(format!("built with N={}", table.n()))
        } else {
            Ok(table)
        }
    });
    let reason = match attempt {
        Ok(table) => {
            let event = CacheEvent {
                path,
                status: CacheStatus::Hit,
                dataset_hash: hash,
            };
            return Ok((table, event));
        }
        Err(reason) => reason,
    };
    if !rebuild {
        return Err(Error::CacheUnavailable { path, reason });
    }
    let table = ReferenceTable::select(kg, dist, n);
    write_atomic(&path, |w| table.write_to(w, hash, dist.cap()))?;
    let event = CacheEvent {
        path,
        status: CacheStatus::Built(reason),
        dataset_hash: hash,
    };
    Ok((table, event))
}
