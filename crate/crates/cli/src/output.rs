use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::CliError;

/// Output directory plus the timestamp policy.
pub struct Output {
    dir: PathBuf,
    stamp: Option<u64>,
}

#[derive(Serialize)]
struct Envelope<'a, C: Serialize, R: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    generated_unix: Option<u64>,
    config: &'a C,
    result: &'a R,
}

pub fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

impl Output {
    pub fn new(dir: &Path, timestamp: bool) -> Self {
        let stamp = timestamp.then(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()));
        Self { dir: dir.to_path_buf(), stamp }
    }

    /// Writes through a temp file in the target directory, then renames it into place.
    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let io = |e: std::io::Error| CliError::Config(format!("cannot write {}: {e}", self.dir.join(name).display()));
        std::fs::create_dir_all(&self.dir).map_err(io)?;
        let mut tmp = NamedTempFile::new_in(&self.dir).map_err(io)?;
        tmp.write_all(bytes).map_err(io)?;
        tmp.flush().map_err(io)?;
        let path = self.dir.join(name);
        tmp.persist(&path).map_err(|e| io(e.error))?;
        Ok(path)
    }

    /// A report carrying the resolved config it was produced from.
    pub fn report<C: Serialize, R: Serialize>(&self, name: &str, command: &str, config: &C, result: &R) -> Result<PathBuf, CliError> {
        let env = Envelope {
            tool: "uatlab",
            version: env!("CARGO_PKG_VERSION"),
            command,
            generated_unix: self.stamp,
            config,
            result,
        };
        let mut s = serde_json::to_string_pretty(&env).map_err(|e| CliError::Config(e.to_string()))?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    /// Plain JSON artifact, e.g. a net that other commands read back.
    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    /// CSV with an optional `# generated_unix=` first line.
    pub fn csv(&self, name: &str, body: &str) -> Result<PathBuf, CliError> {
        let mut s = String::new();
        if let Some(t) = self.stamp {
            s.push_str(&format!("# generated_unix={t}\n"));
        }
        s.push_str(body);
        self.write(name, s.as_bytes())
    }
}
