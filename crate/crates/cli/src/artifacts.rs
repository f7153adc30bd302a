use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::RunError;

/// Marker left in a run directory until every artifact has been written.
pub const STALE_MARKER: &str = "STALE";
pub const ERROR_FILE: &str = "error.json";
pub const MANIFEST_FILE: &str = "manifest.json";

/// An output directory. Writes go through here so failures carry the file name.
#[derive(Debug, Clone)]
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    /// Creates the directory, clears a previous error report and marks it stale.
    pub fn create(root: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(root).map_err(|e| RunError::io("output", format!("cannot create {}: {e}", root.display())))?;
        let dir = Self { root: root.to_path_buf() };
        let old = root.join(ERROR_FILE);
        if old.exists() {
            fs::remove_file(&old).map_err(|e| RunError::io("output", format!("cannot remove {}: {e}", old.display())))?;
        }
        dir.write(STALE_MARKER, b"run in progress or failed; artifacts here may be partial\n")?;
        Ok(dir)
    }

    /// A per-point subdirectory; it shares the parent's stale marker.
    pub fn sub(&self, name: &str) -> Result<Self, RunError> {
        let root = self.root.join(name);
        fs::create_dir_all(&root).map_err(|e| RunError::io("output", format!("cannot create {}: {e}", root.display())))?;
        Ok(Self { root })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<(), RunError> {
        let p = self.root.join(name);
        fs::write(&p, bytes).map_err(|e| RunError::io("output", format!("cannot write {}: {e}", p.display())))
    }

    pub fn csv<F>(&self, name: &str, fill: F) -> Result<(), RunError>
    where
        F: FnOnce(&mut Vec<u8>) -> Result<(), csv::Error>,
    {
        let mut buf = Vec::new();
        fill(&mut buf).map_err(|e| RunError::io("output", format!("{name}: {e}")))?;
        self.write(name, &buf)
    }

    /// Serializes `rows` with the csv crate's default layout.
    pub fn rows<T: Serialize>(&self, name: &str, rows: &[T]) -> Result<(), RunError> {
        self.csv(name, |buf| {
            let mut w = csv::Writer::from_writer(buf);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
            Ok(())
        })
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), RunError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| RunError::io("output", format!("{name}: {e}")))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn finish(&self) -> Result<(), RunError> {
        let p = self.root.join(STALE_MARKER);
        fs::remove_file(&p).map_err(|e| RunError::io("output", format!("cannot remove {}: {e}", p.display())))
    }

    /// Leaves the stale marker in place and records why the run stopped.
    pub fn fail(&self, err: &RunError) {
        if let Err(e) = self.json(ERROR_FILE, err) {
            log::error!("{e}");
        }
    }
}
