//! Output directory with self-describing CSV and JSON files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

pub const VERSION: &str = env!("HOROLAB_VERSION");

pub struct Output {
    dir: PathBuf,
    config_hash: String,
    seed: u64,
}

impl Output {
    pub fn create(dir: &Path, config_hash: String, seed: u64) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), config_hash, seed })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// The provenance fields shared by every file.
    pub fn stamp(&self) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("version".into(), VERSION.into());
        m.insert("config_hash".into(), self.config_hash.clone().into());
        m.insert("seed".into(), self.seed.into());
        m
    }

    /// Writes `# <metadata>`, the column row, then one line per row.
    pub fn csv<I>(&self, name: &str, description: &str, columns: &str, rows: I) -> std::io::Result<PathBuf>
    where
        I: IntoIterator<Item = String>,
    {
        let mut text = format!(
            "# horolab {VERSION} config_hash={} seed={} {description}\n{columns}\n",
            self.config_hash, self.seed
        );
        for r in rows {
            let _ = writeln!(text, "{r}");
        }
        let path = self.dir.join(name);
        fs::write(&path, text)?;
        Ok(path)
    }

    /// Writes a JSON report with the provenance fields merged in front.
    pub fn json<T: Serialize>(&self, name: &str, body: &T) -> std::io::Result<PathBuf> {
        let mut m = self.stamp();
        match serde_json::to_value(body).map_err(std::io::Error::other)? {
            Value::Object(fields) => m.extend(fields),
            other => {
                m.insert("report".into(), other);
            }
        }
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(&Value::Object(m)).map_err(std::io::Error::other)?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }

    pub fn text(&self, name: &str, body: &str) -> std::io::Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, body)?;
        Ok(path)
    }
}
