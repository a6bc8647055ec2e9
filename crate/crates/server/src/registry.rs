//! Named embeddings available to new sessions.

use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use vecdebias_core::{presets, Snapshot, TextFormat};

/// One `[[embedding]]` table of the registry file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingEntry {
    pub name: String,
    pub path: PathBuf,
    #[serde(default = "default_format")]
    pub format: TextFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<usize>,
}

fn default_format() -> TextFormat {
    TextFormat::GloveText
}

#[derive(Debug, Deserialize)]
struct RegistryFile {
    #[serde(default)]
    embedding: Vec<EmbeddingEntry>,
}

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("cannot read registry {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("malformed registry {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("duplicate embedding name `{0}`")]
    Duplicate(String),
}

struct Slot {
    entry: EmbeddingEntry,
    loaded: OnceLock<Arc<Snapshot>>,
}

/// Registered embeddings, loaded on first use and then shared.
#[derive(Default)]
pub struct Registry {
    slots: Vec<Slot>,
}

impl Registry {
    pub fn new(entries: Vec<EmbeddingEntry>) -> Result<Self, RegistryError> {
        let mut slots: Vec<Slot> = Vec::with_capacity(entries.len());
        for entry in entries {
            if slots.iter().any(|s| s.entry.name == entry.name) {
                return Err(RegistryError::Duplicate(entry.name));
            }
            slots.push(Slot {
                entry,
                loaded: OnceLock::new(),
            });
        }
        Ok(Self { slots })
    }

    /// Parses registry TOML; relative paths resolve against `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path, origin: &Path) -> Result<Self, RegistryError> {
        let file: RegistryFile = toml::from_str(text).map_err(|source| RegistryError::Parse {
            path: origin.to_path_buf(),
            source,
        })?;
        let entries = file
            .embedding
            .into_iter()
            .map(|mut e| {
                if e.path.is_relative() {
                    e.path = base_dir.join(&e.path);
                }
                e
            })
            .collect();
        Self::new(entries)
    }

    pub fn from_file(path: &Path) -> Result<Self, RegistryError> {
        let text = std::fs::read_to_string(path).map_err(|source| RegistryError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base, path)
    }

    /// The bundled news-vector subset, plus 50-d GloVe when `glove50` is given.
    pub fn builtin(glove50: Option<PathBuf>) -> Self {
        let mut entries = vec![EmbeddingEntry {
            name: "w2v-gnews-fixture".into(),
            path: presets::fixture_path(),
            format: TextFormat::GloveText,
            limit: None,
        }];
        if let Some(path) = glove50 {
            entries.push(EmbeddingEntry {
                name: "glove50-default".into(),
                path,
                format: TextFormat::GloveText,
                limit: Some(100_000),
            });
        }
        Self::new(entries).expect("builtin names are distinct")
    }

    pub fn entries(&self) -> impl Iterator<Item = &EmbeddingEntry> {
        self.slots.iter().map(|s| &s.entry)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.slots.iter().any(|s| s.entry.name == name)
    }

    /// Loads (once) and returns the named embedding; `None` for unknown names.
    pub fn get(&self, name: &str) -> Option<vecdebias_core::Result<Arc<Snapshot>>> {
        let slot = self.slots.iter().find(|s| s.entry.name == name)?;
        if let Some(s) = slot.loaded.get() {
            return Some(Ok(s.clone()));
        }
        let e = &slot.entry;
        let load = || -> vecdebias_core::Result<Snapshot> {
            let f = std::fs::File::open(&e.path)?;
            Snapshot::load(std::io::BufReader::new(f), e.format, e.limit)
        };
        Some(load().map(|s| {
            log::info!("loaded embedding `{}` ({} x {})", e.name, s.len(), s.dim());
            slot.loaded.get_or_init(|| Arc::new(s)).clone()
        }))
    }
}
