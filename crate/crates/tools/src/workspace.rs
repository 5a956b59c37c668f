use std::collections::BTreeMap;
use std::io;
use std::path::{Component, Path, PathBuf};

use shapegpt_core::Dataset;

use crate::invoke::ExecError;

/// Named layers plus the directory all reads and writes are confined to.
#[derive(Debug)]
pub struct Workspace {
    sandbox: PathBuf,
    layers: BTreeMap<String, Dataset>,
    artifacts: Vec<PathBuf>,
    next_auto: usize,
}

impl Workspace {
    /// Creates the sandbox directory when needed.
    pub fn new(sandbox_dir: impl AsRef<Path>) -> io::Result<Workspace> {
        std::fs::create_dir_all(sandbox_dir.as_ref())?;
        Ok(Workspace {
            sandbox: sandbox_dir.as_ref().canonicalize()?,
            layers: BTreeMap::new(),
            artifacts: Vec::new(),
            next_auto: 1,
        })
    }

    pub fn sandbox_dir(&self) -> &Path {
        &self.sandbox
    }

    pub fn layers(&self) -> &BTreeMap<String, Dataset> {
        &self.layers
    }

    pub fn layer(&self, handle: &str) -> Result<&Dataset, ExecError> {
        self.layers.get(handle).ok_or_else(|| ExecError::UnknownLayer(handle.to_string()))
    }

    pub fn insert_layer(&mut self, handle: impl Into<String>, d: Dataset) {
        self.layers.insert(handle.into(), d);
    }

    /// Files written so far, in write order, as absolute paths.
    pub fn artifacts(&self) -> &[PathBuf] {
        &self.artifacts
    }

    pub(crate) fn record_artifact(&mut self, p: PathBuf) {
        if !self.artifacts.contains(&p) {
            self.artifacts.push(p);
        }
    }

    pub(crate) fn auto_handle(&mut self, prefix: &str) -> String {
        loop {
            let h = format!("{prefix}_{}", self.next_auto);
            self.next_auto += 1;
            if !self.layers.contains_key(&h) {
                return h;
            }
        }
    }

    /// Maps a user path onto the sandbox. Relative paths are taken from the
    /// sandbox root; absolute paths must already lie inside it. `..` may not
    /// climb above the root, and symlinks may not lead out of it.
    pub fn resolve(&self, user_path: &str) -> Result<PathBuf, ExecError> {
        let escape = || ExecError::Sandbox(user_path.to_string());
        let p = Path::new(user_path.trim());
        let rel = if p.is_absolute() { p.strip_prefix(&self.sandbox).map_err(|_| escape())? } else { p };
        let mut parts: Vec<&std::ffi::OsStr> = Vec::new();
        for c in rel.components() {
            match c {
                Component::Normal(s) => parts.push(s),
                Component::CurDir => {}
                Component::ParentDir => {
                    parts.pop().ok_or_else(escape)?;
                }
                Component::RootDir | Component::Prefix(_) => return Err(escape()),
            }
        }
        if parts.is_empty() {
            return Err(escape());
        }
        let mut out = self.sandbox.clone();
        out.extend(parts);
        // the deepest existing ancestor must canonicalize inside the sandbox
        let mut probe = out.as_path();
        loop {
            if probe.exists() {
                let real = probe.canonicalize().map_err(|_| escape())?;
                if !real.starts_with(&self.sandbox) {
                    return Err(escape());
                }
                break;
            }
            probe = probe.parent().ok_or_else(escape)?;
        }
        Ok(out)
    }
}
