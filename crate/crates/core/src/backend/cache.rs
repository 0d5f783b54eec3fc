use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::LlmBackend;
use crate::error::{Error, Result};

/// One line of the response journal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JournalEntry {
    pub key: String,
    pub prompt: String,
    pub temperature: f64,
    pub seed: u64,
    pub raw: String,
}

/// Content-addressed store of raw completions, optionally backed by an
/// append-only JSON-lines journal that is replayed on open.
#[derive(Debug, Default)]
pub struct ResponseCache {
    entries: Mutex<HashMap<String, String>>,
    journal: Option<(PathBuf, Mutex<File>)>,
    live_calls: AtomicUsize,
    hits: AtomicUsize,
}

impl ResponseCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut entries = HashMap::new();
        if path.exists() {
            let f = File::open(path).map_err(|e| Error::io(path, e))?;
            for (i, line) in BufReader::new(f).lines().enumerate() {
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let e: JournalEntry =
                    serde_json::from_str(&line).map_err(|err| Error::Malformed {
                        path: path.to_path_buf(),
                        line: i + 1,
                        message: err.to_string(),
                    })?;
                entries.entry(e.key).or_insert(e.raw);
            }
        } else if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(ResponseCache {
            entries: Mutex::new(entries),
            journal: Some((path.to_path_buf(), Mutex::new(file))),
            ..Self::default()
        })
    }

    pub fn key(descriptor: &str, prompt: &str, temperature: f64, seed: u64) -> String {
        let mut h = Sha256::new();
        h.update(descriptor.as_bytes());
        h.update([0]);
        h.update(prompt.as_bytes());
        h.update([0]);
        h.update(temperature.to_bits().to_le_bytes());
        h.update(seed.to_le_bytes());
        hex::encode(h.finalize())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        self.entries.lock().expect("cache lock").get(key).cloned()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of completions fetched from the live backend through this cache.
    pub fn live_calls(&self) -> usize {
        self.live_calls.load(Ordering::Relaxed)
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    /// Insert entries and append the new ones to the journal, in order.
    pub fn commit(&self, batch: Vec<JournalEntry>) -> Result<()> {
        let mut entries = self.entries.lock().expect("cache lock");
        let mut lines = String::new();
        for e in batch {
            if entries.contains_key(&e.key) {
                continue;
            }
            if self.journal.is_some() {
                lines.push_str(&serde_json::to_string(&e).expect("journal entry serializes"));
                lines.push('\n');
            }
            entries.insert(e.key, e.raw);
        }
        if let Some((path, file)) = &self.journal {
            if !lines.is_empty() {
                let mut f = file.lock().expect("journal lock");
                f.write_all(lines.as_bytes())
                    .map_err(|e| Error::io(path, e))?;
                f.flush().map_err(|e| Error::io(path, e))?;
            }
        }
        Ok(())
    }

    fn lookup_or_call(
        &self,
        backend: &dyn LlmBackend,
        prompt: &str,
        temperature: f64,
        seed: u64,
    ) -> Result<(String, Option<JournalEntry>)> {
        let key = Self::key(&backend.descriptor(), prompt, temperature, seed);
        if let Some(raw) = self.get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok((raw, None));
        }
        self.live_calls.fetch_add(1, Ordering::Relaxed);
        let raw = backend.complete(prompt, temperature, seed)?;
        let entry = JournalEntry {
            key,
            prompt: prompt.to_string(),
            temperature,
            seed,
            raw: raw.clone(),
        };
        Ok((raw, Some(entry)))
    }
}

/// A backend view that consults a cache first. In deferred mode new entries
/// are held back until [`CachedBackend::into_pending`] so callers can commit
/// them in a deterministic order.
pub struct CachedBackend<'a> {
    inner: &'a dyn LlmBackend,
    cache: &'a ResponseCache,
    pending: Option<Mutex<Vec<JournalEntry>>>,
}

impl<'a> CachedBackend<'a> {
    pub fn new(inner: &'a dyn LlmBackend, cache: &'a ResponseCache) -> Self {
        CachedBackend {
            inner,
            cache,
            pending: None,
        }
    }

    pub fn deferred(inner: &'a dyn LlmBackend, cache: &'a ResponseCache) -> Self {
        CachedBackend {
            inner,
            cache,
            pending: Some(Mutex::new(Vec::new())),
        }
    }

    pub fn into_pending(self) -> Vec<JournalEntry> {
        self.pending
            .map(|p| p.into_inner().expect("pending lock"))
            .unwrap_or_default()
    }
}

impl LlmBackend for CachedBackend<'_> {
    fn complete(&self, prompt: &str, temperature: f64, seed: u64) -> Result<String> {
        if let Some(pending) = &self.pending {
            let key = ResponseCache::key(&self.inner.descriptor(), prompt, temperature, seed);
            if let Some(e) = pending
                .lock()
                .expect("pending lock")
                .iter()
                .find(|e| e.key == key)
            {
                return Ok(e.raw.clone());
            }
        }
        let (raw, entry) = self
            .cache
            .lookup_or_call(self.inner, prompt, temperature, seed)?;
        if let Some(entry) = entry {
            match &self.pending {
                Some(p) => p.lock().expect("pending lock").push(entry),
                None => self.cache.commit(vec![entry])?,
            }
        }
        Ok(raw)
    }

    fn descriptor(&self) -> String {
        self.inner.descriptor()
    }
}
