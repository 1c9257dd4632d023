//! Output directories whose manifest is written last, so an interrupted run
//! is recognizable by its missing manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::json;

use crate::error::{io_error, CliError};

pub const MANIFEST: &str = "manifest.json";
pub const METADATA: &str = "metadata.json";

pub struct RunDir {
    root: PathBuf,
    files: Vec<String>,
    started: SystemTime,
    clock: Instant,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    status: &'a str,
    exit_code: u8,
    files: &'a [String],
}

fn unix_seconds(t: SystemTime) -> f64 {
    t.duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

impl RunDir {
    /// Creates the directory and removes any manifest left by an earlier run.
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root).map_err(io_error(format!("creating {}", root.display())))?;
        let stale = root.join(MANIFEST);
        if stale.exists() {
            std::fs::remove_file(&stale).map_err(io_error(format!("removing {}", stale.display())))?;
        }
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
            started: SystemTime::now(),
            clock: Instant::now(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, rel: &str, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
        self.write_with(rel, |out| out.write_all(contents.as_ref()).map_err(Into::into))
    }

    pub fn write_json(&mut self, rel: &str, value: &impl Serialize) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(obstacle_core::Error::from)?;
        text.push('\n');
        self.write(rel, text)
    }

    /// Streams a file through a buffered writer and records it.
    pub fn write_with(
        &mut self,
        rel: &str,
        fill: impl FnOnce(&mut BufWriter<File>) -> obstacle_core::Result<()>,
    ) -> Result<(), CliError> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(io_error(format!("creating {}", parent.display())))?;
        }
        let file = File::create(&path).map_err(io_error(format!("creating {}", path.display())))?;
        let mut out = BufWriter::new(file);
        fill(&mut out).map_err(|e| match e {
            obstacle_core::Error::Io(source) => CliError::Io {
                context: format!("writing {}", path.display()),
                source,
            },
            other => CliError::Core(other),
        })?;
        out.flush().map_err(io_error(format!("writing {}", path.display())))?;
        self.files.push(rel.to_string());
        Ok(())
    }

    /// Writes timestamps to the metadata file, then the manifest.
    pub fn seal(mut self, command: &str, status: &str, exit_code: u8, timings: serde_json::Value) -> Result<(), CliError> {
        let metadata = json!({
            "started_unix": unix_seconds(self.started),
            "finished_unix": unix_seconds(SystemTime::now()),
            "elapsed_seconds": self.clock.elapsed().as_secs_f64(),
            "timings": timings,
        });
        self.write_json(METADATA, &metadata)?;
        let manifest = Manifest {
            command,
            status,
            exit_code,
            files: &self.files,
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(obstacle_core::Error::from)?;
        text.push('\n');
        let path = self.root.join(MANIFEST);
        std::fs::write(&path, text).map_err(io_error(format!("writing {}", path.display())))
    }
}
