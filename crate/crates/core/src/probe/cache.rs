use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::provider::TokenLogprobs;

/// One line of the append-only cache file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub key: String,
    pub model_id: String,
    pub prompt_hash: String,
    pub logprobs: TokenLogprobs,
    pub timestamp: u64,
}

impl CacheRecord {
    pub fn new(key: String, model_id: &str, prompt_hash: String, logprobs: TokenLogprobs) -> Self {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            key,
            model_id: model_id.to_string(),
            prompt_hash,
            logprobs,
            timestamp,
        }
    }
}

/// Digest of everything that determines a provider's answer.
pub fn cache_key(model_id: &str, prompt: &str, top_k: usize, params: &str) -> String {
    let canonical = serde_json::to_string(&(model_id, prompt, top_k, params)).expect("tuple serializes");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// Probe results keyed by [`cache_key`], optionally backed by a JSON-lines
/// file. Reads run concurrently; appends are serialized. A torn last line
/// from an interrupted run is skipped on load.
pub struct ProbeCache {
    path: Option<PathBuf>,
    entries: RwLock<HashMap<String, CacheRecord>>,
    file: Mutex<Option<File>>,
}

impl ProbeCache {
    pub fn in_memory() -> Self {
        Self {
            path: None,
            entries: RwLock::new(HashMap::new()),
            file: Mutex::new(None),
        }
    }

    pub fn open(path: impl AsRef<Path>) -> io::Result<Self> {
        let path = path.as_ref().to_path_buf();
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        let mut entries = HashMap::new();
        let mut needs_newline = false;
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for line in reader.lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<CacheRecord>(&line) {
                    Ok(rec) => {
                        entries.insert(rec.key.clone(), rec);
                        needs_newline = false;
                    }
                    Err(e) => {
                        log::warn!("{}: skipping unreadable cache line: {e}", path.display());
                        needs_newline = true;
                    }
                }
            }
            let bytes = std::fs::read(&path)?;
            needs_newline |= bytes.last().is_some_and(|b| *b != b'\n');
        }
        let mut file = OpenOptions::new().create(true).append(true).open(&path)?;
        if needs_newline {
            file.write_all(b"\n")?;
        }
        Ok(Self {
            path: Some(path),
            entries: RwLock::new(entries),
            file: Mutex::new(Some(file)),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn get(&self, key: &str) -> Option<CacheRecord> {
        self.entries.read().expect("cache lock").get(key).cloned()
    }

    /// Stores a record, appending it to the backing file first.
    pub fn put(&self, record: CacheRecord) -> io::Result<()> {
        let mut file = self.file.lock().expect("cache file lock");
        if let Some(f) = file.as_mut() {
            let mut line = serde_json::to_string(&record).map_err(io::Error::other)?;
            line.push('\n');
            f.write_all(line.as_bytes())?;
            f.flush()?;
        }
        self.entries
            .write()
            .expect("cache lock")
            .insert(record.key.clone(), record);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
