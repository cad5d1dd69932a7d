use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::CliError;

/// An input file read whole, with the SHA-256 of its bytes.
pub struct Input {
    pub path: PathBuf,
    pub text: String,
    pub sha256: String,
}

impl Input {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::BadInput(format!("{}: {e}", path.display())))?;
        let sha256 = hex::encode(Sha256::digest(&bytes));
        let text = String::from_utf8(bytes).map_err(|_| CliError::BadInput(format!("{}: not valid UTF-8", path.display())))?;
        Ok(Self {
            path: path.to_path_buf(),
            text,
            sha256,
        })
    }

    /// Input name without directories or extensions: `data/seal.corpus.jsonl`
    /// gives `seal`.
    pub fn stem(&self) -> String {
        let name = self.path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        name.split('.').next().unwrap_or_default().to_string()
    }
}

/// The record embedded in every artifact: the command, its settings and
/// the digests of its inputs.
pub fn provenance(command: &str, config: &RunConfig, inputs: &[&Input]) -> Value {
    json!({
        "tool": concat!("glyphlearn ", env!("CARGO_PKG_VERSION")),
        "command": command,
        "config": config,
        "inputs": inputs
            .iter()
            .map(|i| json!({ "path": i.path.display().to_string(), "sha256": i.sha256 }))
            .collect::<Vec<_>>(),
    })
}

/// Pretty JSON object of `body` with a `provenance` field added.
pub fn json_document<T: Serialize>(provenance: &Value, body: &T) -> Result<String, CliError> {
    let mut value = serde_json::to_value(body).map_err(CliError::internal)?;
    let fields = value
        .as_object_mut()
        .ok_or_else(|| CliError::Internal("report is not a JSON object".into()))?;
    let mut doc = serde_json::Map::new();
    doc.insert("provenance".into(), provenance.clone());
    doc.append(fields);
    let mut text = serde_json::to_string_pretty(&Value::Object(doc)).map_err(CliError::internal)?;
    text.push('\n');
    Ok(text)
}

/// CSV text behind a `#` comment line holding the provenance record.
pub fn csv_document(provenance: &Value, csv: &str) -> String {
    format!("# provenance {provenance}\n{csv}")
}

pub fn write_csv<T: Serialize>(rows: &[T]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(CliError::internal)?;
    }
    String::from_utf8(w.into_inner().map_err(CliError::internal)?).map_err(CliError::internal)
}

/// Output files gathered during a stage and written together at its end.
pub struct Outputs {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl Outputs {
    pub fn new(config: &RunConfig) -> Self {
        Self {
            dir: config.out.clone(),
            files: Vec::new(),
        }
    }

    pub fn add(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }

    /// Writes each file through a temporary sibling and a rename, so a
    /// reader never sees a partial file.
    pub fn commit(self) -> Result<Vec<PathBuf>, CliError> {
        std::fs::create_dir_all(&self.dir).map_err(|e| CliError::Internal(format!("{}: {e}", self.dir.display())))?;
        let mut written = Vec::new();
        for (name, contents) in self.files {
            let target = self.dir.join(&name);
            let fail = |e: std::io::Error| CliError::Internal(format!("{}: {e}", target.display()));
            let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(fail)?;
            tmp.write_all(contents.as_bytes()).map_err(fail)?;
            tmp.persist(&target).map_err(|e| fail(e.error))?;
            written.push(target);
        }
        Ok(written)
    }
}
