//! Content-addressed response store.
//!
//! Responses are keyed by a digest of (prompt text, model, seed,
//! temperature) and written as one JSON file per key, so a completed run
//! can be replayed byte-exactly and interrupted runs resume without
//! re-querying. Writes go through a temp file and an atomic rename,
//! letting concurrent workers race safely (last write wins with
//! identical content).

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{QueryRequest, QueryResponse};

/// On-disk shape of one cached response. Latency is deliberately not
/// stored: cache files must be byte-identical across re-runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CachedResponse {
    pub raw_text: String,
    pub backend: String,
    pub model: String,
    pub seed: u64,
    pub temperature_bits: u64,
    pub environment: String,
    pub partition_id: String,
    pub phase: String,
    pub instruction_id: String,
}

/// A directory of content-addressed responses.
#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    /// Open (and create if needed) the cache directory.
    pub fn open(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Digest identifying one request's completion.
    pub fn key(request: &QueryRequest) -> String {
        let mut hasher = Sha256::new();
        for part in [
            request.prompt.text.as_bytes(),
            request.model.as_bytes(),
            &request.seed.to_le_bytes(),
            &request.temperature.to_bits().to_le_bytes(),
        ] {
            hasher.update((part.len() as u64).to_le_bytes());
            hasher.update(part);
        }
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn contains(&self, request: &QueryRequest) -> bool {
        self.path_for(&Self::key(request)).exists()
    }

    /// Look a request up; `Ok(None)` on a miss.
    pub fn load(&self, request: &QueryRequest) -> io::Result<Option<QueryResponse>> {
        let path = self.path_for(&Self::key(request));
        let text = match fs::read_to_string(&path) {
            Ok(text) => text,
            Err(err) if err.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(err) => return Err(err),
        };
        let cached: CachedResponse = serde_json::from_str(&text)
            .map_err(|err| io::Error::new(io::ErrorKind::InvalidData, err))?;
        Ok(Some(QueryResponse {
            raw_text: cached.raw_text,
            backend: cached.backend,
            model: cached.model,
            latency: std::time::Duration::ZERO,
            cached: true,
        }))
    }

    /// Persist one response under its request's key.
    pub fn store(&self, request: &QueryRequest, response: &QueryResponse) -> io::Result<()> {
        let key = Self::key(request);
        let record = CachedResponse {
            raw_text: response.raw_text.clone(),
            backend: response.backend.clone(),
            model: response.model.clone(),
            seed: request.seed,
            temperature_bits: request.temperature.to_bits(),
            environment: request.prompt.environment.clone(),
            partition_id: request.prompt.partition_id.clone(),
            phase: request.prompt.phase.to_string(),
            instruction_id: request.prompt.instruction_id.clone(),
        };
        let json = serde_json::to_string_pretty(&record)
            .map_err(|err| io::Error::new(io::ErrorKind::InvalidData, err))?;
        let tmp = self.dir.join(format!(".{key}.tmp"));
        fs::write(&tmp, json)?;
        fs::rename(&tmp, self.path_for(&key))
    }

    /// Number of stored responses.
    pub fn len(&self) -> io::Result<usize> {
        let mut count = 0;
        for entry in fs::read_dir(&self.dir)? {
            let entry = entry?;
            if entry.path().extension().is_some_and(|ext| ext == "json") {
                count += 1;
            }
        }
        Ok(count)
    }

    pub fn is_empty(&self) -> io::Result<bool> {
        Ok(self.len()? == 0)
    }
}
