use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use pentalab::io::Backend;
use pentalab::{Error, Result};

/// Everything that determines a run; echoed into every artifact.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub backend: Backend,
    pub precision: u32,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn echo(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    /// Writes `value` with `tag` and `config` fields added to every object.
    pub fn write_json(&self, name: &str, tag: &str, value: Value) -> Result<PathBuf> {
        let stamp = |v: Value| match v {
            Value::Object(mut m) => {
                m.insert("tag".into(), json!(tag));
                m.insert("config".into(), serde_json::to_value(self).expect("config serializes"));
                Value::Object(m)
            }
            other => json!({"tag": tag, "config": self, "value": other}),
        };
        let value = match value {
            Value::Array(items) => Value::Array(items.into_iter().map(stamp).collect()),
            other => stamp(other),
        };
        let mut text = serde_json::to_string_pretty(&value).map_err(|e| Error::Parse(e.to_string()))?;
        text.push('\n');
        self.write(name, &text)
    }

    /// Writes CSV with `# tag=` and `# config=` header lines.
    pub fn write_csv(&self, name: &str, tag: &str, body: &str) -> Result<PathBuf> {
        self.write(name, &format!("# tag={tag}\n# config={}\n{body}", self.echo()))
    }

    /// Temp file in the target directory, then rename.
    pub fn write(&self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.path(name);
        atomic_write(&path, text).map_err(|e| Error::Contract(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}

fn atomic_write(path: &Path, text: &str) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
