use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::schema::DatasetSchema;
use crate::error::{Error, Result};
use crate::hashing::sha256_hex;

const CACHE_FORMAT: &str = "treestack-dataset";
const CACHE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CacheFile {
    format: String,
    version: u32,
    schema_hash: String,
    dataset: Dataset,
}

/// Writes a self-describing JSON cache and returns its content hash.
pub fn write_cache(path: &Path, ds: &Dataset, schema: &DatasetSchema) -> Result<String> {
    let file = CacheFile {
        format: CACHE_FORMAT.into(),
        version: CACHE_VERSION,
        schema_hash: schema.hash(),
        dataset: ds.clone(),
    };
    let bytes = serde_json::to_vec(&file)?;
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, &bytes).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

pub fn read_cache(path: &Path, schema: &DatasetSchema) -> Result<Dataset> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let file: CacheFile = serde_json::from_slice(&bytes)?;
    if file.format != CACHE_FORMAT || file.version != CACHE_VERSION {
        return Err(Error::Schema(format!(
            "{}: unsupported cache {} v{}",
            path.display(),
            file.format,
            file.version
        )));
    }
    if file.schema_hash != schema.hash() {
        return Err(Error::Schema(format!(
            "{}: schema hash mismatch",
            path.display()
        )));
    }
    file.dataset.check()?;
    Ok(file.dataset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{AttackClass, Column, SplitTag};

    #[test]
    fn cache_round_trip_and_stable_hash() {
        let ds = Dataset::new(
            vec![Column::numeric("x", vec![0.1, 1.0 / 3.0, -2.5e-300])],
            vec![AttackClass::Normal, AttackClass::U2R, AttackClass::Probe],
            SplitTag::Train,
        )
        .unwrap();
        let schema = DatasetSchema::nsl_kdd();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c/train.json");
        let h1 = write_cache(&p, &ds, &schema).unwrap();
        let back = read_cache(&p, &schema).unwrap();
        assert_eq!(back, ds);
        let h2 = write_cache(&p, &back, &schema).unwrap();
        assert_eq!(h1, h2);

        let mut other = schema.clone();
        other.label_column = "y".into();
        assert!(read_cache(&p, &other).is_err());
    }
}
