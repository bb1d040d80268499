//! Append-only key/value log with an in-memory cache.
//!
//! Every write appends one `{"key":..,"value":..}` JSON line and flushes.
//! Opening a log replays it; the last entry for a key wins. A torn final
//! line (a crash mid-append) is ignored on replay.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use parking_lot::{Mutex, RwLock};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("storage I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt store {path} at line {line}: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("failed to encode value: {0}")]
    Encode(#[from] serde_json::Error),
}

#[derive(Serialize, Deserialize)]
struct Entry<V> {
    key: String,
    value: V,
}

struct Sink {
    path: PathBuf,
    writer: BufWriter<File>,
}

pub struct KvLog<V> {
    cache: RwLock<BTreeMap<String, V>>,
    sink: Mutex<Option<Sink>>,
}

impl<V> KvLog<V>
where
    V: Serialize + DeserializeOwned + Clone,
{
    pub fn in_memory() -> Self {
        Self {
            cache: RwLock::new(BTreeMap::new()),
            sink: Mutex::new(None),
        }
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref().to_path_buf();
        let io_err = |source| StoreError::Io {
            path: path.clone(),
            source,
        };
        let mut cache = BTreeMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path).map_err(io_err)?);
            let lines: Vec<String> = reader.lines().collect::<Result<_, _>>().map_err(io_err)?;
            let last = lines.len();
            for (idx, line) in lines.iter().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<Entry<V>>(line) {
                    Ok(entry) => {
                        cache.insert(entry.key, entry.value);
                    }
                    Err(_) if idx + 1 == last => {}
                    Err(err) => {
                        return Err(StoreError::Corrupt {
                            path: path.clone(),
                            line: idx + 1,
                            message: err.to_string(),
                        })
                    }
                }
            }
        } else if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent).map_err(io_err)?;
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(io_err)?;
        Ok(Self {
            cache: RwLock::new(cache),
            sink: Mutex::new(Some(Sink {
                path,
                writer: BufWriter::new(file),
            })),
        })
    }

    pub fn get(&self, key: &str) -> Option<V> {
        self.cache.read().get(key).cloned()
    }

    pub fn contains(&self, key: &str) -> bool {
        self.cache.read().contains_key(key)
    }

    pub fn len(&self) -> usize {
        self.cache.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Snapshot of all values in key order.
    pub fn values(&self) -> Vec<V> {
        self.cache.read().values().cloned().collect()
    }

    pub fn put(&self, key: &str, value: V) -> Result<(), StoreError> {
        let mut sink = self.sink.lock();
        Self::append(&mut sink, key, &value)?;
        self.cache.write().insert(key.to_string(), value);
        Ok(())
    }

    /// Atomic read-modify-write. `f` sees the current value (if any) and
    /// returns the replacement; an `Err` from `f` leaves the store untouched.
    pub fn update<E, F>(&self, key: &str, f: F) -> Result<Result<V, E>, StoreError>
    where
        F: FnOnce(Option<&V>) -> Result<V, E>,
    {
        let mut sink = self.sink.lock();
        let current = self.cache.read().get(key).cloned();
        let next = match f(current.as_ref()) {
            Ok(next) => next,
            Err(err) => return Ok(Err(err)),
        };
        Self::append(&mut sink, key, &next)?;
        self.cache.write().insert(key.to_string(), next.clone());
        Ok(Ok(next))
    }

    fn append(sink: &mut Option<Sink>, key: &str, value: &V) -> Result<(), StoreError> {
        let Some(sink) = sink.as_mut() else {
            return Ok(());
        };
        let line = serde_json::to_string(&Entry {
            key: key.to_string(),
            value,
        })?;
        let io_err = |source| StoreError::Io {
            path: sink.path.clone(),
            source,
        };
        writeln!(sink.writer, "{line}").map_err(io_err)?;
        sink.writer.flush().map_err(io_err)
    }
}
