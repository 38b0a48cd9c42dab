//! Project persistence. The file store writes each project to its own JSON
//! file through a temporary file and a rename, so a crash never leaves a
//! half-written project behind.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use thiserror::Error;

use crate::project::Project;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("storage io: {0}")]
    Io(#[from] std::io::Error),
    #[error("stored project is corrupt: {0}")]
    Corrupt(#[from] serde_json::Error),
}

pub trait ProjectStore: Send + Sync {
    fn load(&self, id: &str) -> Result<Option<Project>, StoreError>;
    fn save(&self, project: &Project) -> Result<(), StoreError>;
    fn list(&self) -> Result<Vec<String>, StoreError>;
}

#[derive(Debug, Default)]
pub struct MemoryStore {
    projects: RwLock<HashMap<String, Project>>,
}

impl ProjectStore for MemoryStore {
    fn load(&self, id: &str) -> Result<Option<Project>, StoreError> {
        Ok(self.projects.read().unwrap().get(id).cloned())
    }

    fn save(&self, project: &Project) -> Result<(), StoreError> {
        self.projects.write().unwrap().insert(project.id.clone(), project.clone());
        Ok(())
    }

    fn list(&self) -> Result<Vec<String>, StoreError> {
        let mut ids: Vec<String> = self.projects.read().unwrap().keys().cloned().collect();
        ids.sort();
        Ok(ids)
    }
}

#[derive(Debug, Clone)]
pub struct FileStore {
    root: PathBuf,
}

impl FileStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        std::fs::create_dir_all(&root)?;
        Ok(FileStore { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path(&self, id: &str) -> Option<PathBuf> {
        // Ids are generated uuids; anything else cannot name a stored project.
        let safe = !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-');
        safe.then(|| self.root.join(format!("{id}.json")))
    }
}

impl ProjectStore for FileStore {
    fn load(&self, id: &str) -> Result<Option<Project>, StoreError> {
        let Some(path) = self.path(id) else { return Ok(None) };
        match std::fs::read(&path) {
            Ok(bytes) => Ok(Some(serde_json::from_slice(&bytes)?)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    fn save(&self, project: &Project) -> Result<(), StoreError> {
        let path = self
            .path(&project.id)
            .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidInput, "bad project id"))?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.root)?;
        serde_json::to_writer(&mut tmp, project)?;
        tmp.as_file_mut().flush()?;
        tmp.as_file().sync_all()?;
        tmp.persist(&path).map_err(|e| e.error)?;
        Ok(())
    }

    fn list(&self) -> Result<Vec<String>, StoreError> {
        let mut ids = Vec::new();
        for entry in std::fs::read_dir(&self.root)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "json") {
                if let Some(stem) = path.file_stem() {
                    ids.push(stem.to_string_lossy().into_owned());
                }
            }
        }
        ids.sort();
        Ok(ids)
    }
}
