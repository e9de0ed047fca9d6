use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Canonical JSON encoding: object keys sorted, shortest round-trip floats,
/// one trailing newline. Two semantically equal documents encode to the same
/// bytes, which is what makes "same config, same seed, same file" checkable.
pub fn canonical_json<T: Serialize>(value: &T) -> Result<String> {
    // Round-tripping through Value sorts the keys (the map is a BTreeMap).
    let v = serde_json::to_value(value)?;
    let mut s = serde_json::to_string(&v)?;
    s.push('\n');
    Ok(s)
}

/// Deserialize JSON, reporting the path of the offending node on failure
/// (e.g. `stages[2].threshold`).
pub fn from_json_str<T: DeserializeOwned>(s: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(s);
    serde_path_to_error::deserialize(de)
        .map_err(|e| Error::schema(e.path().to_string(), e.inner().to_string()))
}

/// Lowercase hex SHA-256, used to stamp models with the exact config and
/// manifest they were trained from.
pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    let mut s = String::with_capacity(out.len() * 2);
    for b in out {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

/// Write `bytes` to `path` atomically: stage in a temp file in the same
/// directory, then rename over the target. Readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let dir = dir.unwrap_or_else(|| Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    std::io::Write::write_all(&mut tmp, bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path)
        .map_err(|e| Error::io(path, e.error))
        .map(|_| ())
}
