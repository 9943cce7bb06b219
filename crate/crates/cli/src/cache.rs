//! On-disk memo of sectional decisions, one file per cospan.
//!
//! Files are named by the SHA-256 of the cospan's canonical encoding and
//! carry a checksum of their payload; anything unreadable is a miss.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use secat_core::instance::{encode_cospan, serialize_instance};
use secat_core::{BitSet, Cospan};

pub const CACHE_DIR_ENV: &str = "SECAT_CACHE_DIR";

#[derive(Serialize, Deserialize)]
struct Payload {
    key: String,
    /// `(members, sectional)` with members as element indices of `K`.
    entries: Vec<(Vec<usize>, bool)>,
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    checksum: String,
    payload: String,
}

fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub struct DiskCache {
    dir: PathBuf,
}

impl DiskCache {
    /// `$SECAT_CACHE_DIR`, or `secat-cache` under the system temp directory.
    pub fn open_default() -> io::Result<Self> {
        let dir = std::env::var_os(CACHE_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| std::env::temp_dir().join("secat-cache"));
        Self::at(dir)
    }

    pub fn at(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(DiskCache { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Content hash of the spaces and maps of `c`.
    pub fn key(c: &Cospan) -> String {
        digest(serialize_instance(&encode_cospan(c, false)).as_bytes())
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn load(&self, c: &Cospan) -> Vec<(BitSet, bool)> {
        let key = Self::key(c);
        let path = self.path(&key);
        let Ok(text) = fs::read_to_string(&path) else {
            return Vec::new();
        };
        match Self::decode(&text, &key, c.k.len()) {
            Some(entries) => {
                debug!("cache hit: {} entries from {}", entries.len(), path.display());
                entries
            }
            None => {
                warn!("ignoring corrupt cache file {}", path.display());
                Vec::new()
            }
        }
    }

    fn decode(text: &str, key: &str, n: usize) -> Option<Vec<(BitSet, bool)>> {
        let env: Envelope = serde_json::from_str(text).ok()?;
        if digest(env.payload.as_bytes()) != env.checksum {
            return None;
        }
        let payload: Payload = serde_json::from_str(&env.payload).ok()?;
        if payload.key != key || payload.entries.iter().any(|(m, _)| m.iter().any(|&i| i >= n)) {
            return None;
        }
        Some(
            payload
                .entries
                .into_iter()
                .map(|(m, b)| (BitSet::from_indices(n, m), b))
                .collect(),
        )
    }

    /// Atomically replaces the file for `c`.
    pub fn store(&self, c: &Cospan, entries: &[(BitSet, bool)]) -> io::Result<()> {
        let key = Self::key(c);
        let payload = serde_json::to_string(&Payload {
            key: key.clone(),
            entries: entries.iter().map(|(m, b)| (m.iter().collect(), *b)).collect(),
        })?;
        let env = Envelope {
            checksum: digest(payload.as_bytes()),
            payload,
        };
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(serde_json::to_string(&env)?.as_bytes())?;
        tmp.persist(self.path(&key)).map_err(|e| e.error)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use secat_core::{FiniteSpace, PosetMap};

    fn cospan() -> Cospan {
        let s = FiniteSpace::pseudocircle();
        Cospan::new(PosetMap::identity(&s), PosetMap::constant(&FiniteSpace::point(), &s, 0), "t").unwrap()
    }

    #[test]
    fn round_trip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let cache = DiskCache::at(dir.path()).unwrap();
        let c = cospan();
        assert!(cache.load(&c).is_empty());
        let entries = vec![(BitSet::from_indices(4, [0, 2]), true), (BitSet::full(4), false)];
        cache.store(&c, &entries).unwrap();
        assert_eq!(cache.load(&c), entries);

        let path = cache.path(&DiskCache::key(&c));
        let text = fs::read_to_string(&path).unwrap().replace("true", "fals");
        fs::write(&path, text).unwrap();
        assert!(cache.load(&c).is_empty());
    }

    #[test]
    fn key_ignores_labels() {
        let mut c = cospan();
        let k = DiskCache::key(&c);
        c.label = "other".into();
        assert_eq!(DiskCache::key(&c), k);
    }
}
