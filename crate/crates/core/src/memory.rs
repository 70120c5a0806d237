//! Scene memory: feature sets indexed by feature, cross-referenced by vote.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ast::Scene;

#[derive(Debug, Error)]
pub enum MemoryError {
    #[error("scene id {0:?} is already stored")]
    DuplicateId(String),
    #[error("scene {0:?} has no features")]
    NoFeatures(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

/// On-disk form of one entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredScene {
    pub id: String,
    pub features: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MemoryStore {
    entries: BTreeMap<String, BTreeSet<String>>,
    index: BTreeMap<String, BTreeSet<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Ranked {
    pub feature: String,
    pub votes: u64,
    /// Absent from the current input.
    pub future: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Prediction {
    pub ranked: Vec<Ranked>,
    pub legal: Option<BTreeSet<String>>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&BTreeSet<String>> {
        self.entries.get(id)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&String, &BTreeSet<String>)> {
        self.entries.iter()
    }

    pub fn store_scene<I, S>(&mut self, id: &str, features: I) -> Result<(), MemoryError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        if self.entries.contains_key(id) {
            return Err(MemoryError::DuplicateId(id.to_string()));
        }
        let features: BTreeSet<String> = features.into_iter().map(Into::into).collect();
        if features.is_empty() {
            return Err(MemoryError::NoFeatures(id.to_string()));
        }
        for f in &features {
            self.index
                .entry(f.clone())
                .or_default()
                .insert(id.to_string());
        }
        self.entries.insert(id.to_string(), features);
        Ok(())
    }

    /// Ids of the entries holding `feature`.
    pub fn retrieve(&self, feature: &str) -> impl Iterator<Item = &String> {
        self.index.get(feature).into_iter().flatten()
    }

    /// Each input feature pulls every entry containing it, and each pulled
    /// entry votes once for each of its features. An entry matched by two
    /// input features votes twice.
    pub fn cross_reference<S: AsRef<str>>(&self, input: &[S]) -> BTreeMap<String, u64> {
        let input: BTreeSet<&str> = input.iter().map(AsRef::as_ref).collect();
        let mut votes: BTreeMap<String, u64> = BTreeMap::new();
        for f in input {
            for id in self.retrieve(f) {
                for g in &self.entries[id] {
                    *votes.entry(g.clone()).or_default() += 1;
                }
            }
        }
        votes
    }

    /// Top `k` voted features outside the input, or within `legal` when
    /// given. Ties rank by name.
    pub fn predict<S: AsRef<str>>(
        &self,
        input: &[S],
        legal: Option<&BTreeSet<String>>,
        k: usize,
    ) -> Prediction {
        let present: BTreeSet<&str> = input.iter().map(AsRef::as_ref).collect();
        let mut ranked: Vec<Ranked> = self
            .cross_reference(input)
            .into_iter()
            .filter(|(f, _)| match legal {
                Some(l) => l.contains(f),
                None => !present.contains(f.as_str()),
            })
            .map(|(feature, votes)| Ranked {
                future: !present.contains(feature.as_str()),
                feature,
                votes,
            })
            .collect();
        ranked.sort_by(|a, b| {
            b.votes
                .cmp(&a.votes)
                .then_with(|| a.feature.cmp(&b.feature))
        });
        ranked.truncate(k);
        Prediction {
            ranked,
            legal: legal.cloned(),
        }
    }

    /// Read every `*.json` file in `dir`, in name order.
    pub fn load_dir(dir: &Path) -> Result<Self, MemoryError> {
        let io_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source| MemoryError::Io { path, source }
        };
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(io_err(dir))?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()
            .map_err(io_err(dir))?;
        paths.retain(|p| p.extension().is_some_and(|e| e == "json"));
        paths.sort();
        let mut store = MemoryStore::new();
        for path in paths {
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            let entry: StoredScene =
                serde_json::from_str(&text).map_err(|source| MemoryError::Json {
                    path: path.clone(),
                    source,
                })?;
            store.store_scene(&entry.id, entry.features)?;
        }
        Ok(store)
    }

    /// One `<id>.json` file per entry.
    pub fn save_dir(&self, dir: &Path) -> Result<(), MemoryError> {
        let io_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source| MemoryError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        for (id, features) in &self.entries {
            let path = dir.join(format!("{id}.json"));
            let entry = StoredScene {
                id: id.clone(),
                features: features.iter().cloned().collect(),
            };
            let text = serde_json::to_string_pretty(&entry).expect("entry serializes");
            fs::write(&path, text + "\n").map_err(io_err(&path))?;
        }
        Ok(())
    }
}

impl Prediction {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "format_version": 1,
            "ranked": self.ranked,
            "legal": self.legal,
        })
    }

    pub fn to_text(&self) -> String {
        self.ranked
            .iter()
            .map(|r| {
                let tag = if r.future { "" } else { " (present)" };
                format!("{} {}{tag}\n", r.feature, r.votes)
            })
            .collect()
    }
}

/// Concepts a scene's rules use, as memory features.
pub fn scene_features(scene: &Scene) -> Vec<String> {
    scene
        .rule_concepts()
        .into_iter()
        .map(|c| c.as_str().to_string())
        .collect()
}
