use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{IdMap, RankingDataset};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"ADVRDS\0\0";
pub const CACHE_VERSION: u32 = 1;

/// A compiled train/test split together with what it was built from.
///
/// File layout: 8-byte magic, little-endian u32 version, then the bincode
/// encoding of this struct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachedSplit {
    /// sha256 of the source file(s), hex.
    pub source_digest: String,
    pub seed: u64,
    pub train: RankingDataset,
    pub test: RankingDataset,
    pub ids: Option<IdMap>,
}

pub fn save_cache(split: &CachedSplit, path: &Path) -> Result<()> {
    let body = bincode::serialize(split).map_err(|e| Error::Data(format!("cache encode: {e}")))?;
    let mut bytes = Vec::with_capacity(body.len() + 12);
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    bytes.extend_from_slice(&body);
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes)?;
    Ok(())
}

/// Returns `None` for a missing, foreign or outdated cache file.
pub fn load_cache(path: &Path) -> Result<Option<CachedSplit>> {
    let Ok(bytes) = fs::read(path) else {
        return Ok(None);
    };
    if bytes.len() < 12 || &bytes[..8] != MAGIC {
        return Ok(None);
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != CACHE_VERSION {
        return Ok(None);
    }
    Ok(bincode::deserialize(&bytes[12..]).ok())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{DocStore, QueryPool};

    #[test]
    fn round_trip_and_rejection() {
        let ds = RankingDataset {
            docs: DocStore::Features {
                dim: 2,
                rows: vec![vec![0.1, -2.5]],
            },
            queries: vec![QueryPool::new("q", 0)],
        };
        let split = CachedSplit {
            source_digest: "abc".into(),
            seed: 3,
            train: ds.clone(),
            test: ds,
            ids: None,
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.bin");
        save_cache(&split, &p).unwrap();
        assert_eq!(load_cache(&p).unwrap(), Some(split));
        fs::write(&p, b"not a cache").unwrap();
        assert_eq!(load_cache(&p).unwrap(), None);
        assert_eq!(load_cache(&dir.path().join("nope")).unwrap(), None);
    }
}
