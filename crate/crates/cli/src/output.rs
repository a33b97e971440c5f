use std::io::Write;
use std::path::PathBuf;

use serde_json::Value;

use crate::CliError;

/// Where results go: files under `--out`, otherwise the primary table on
/// stdout. A summary goes to stdout as JSON with `--json`, as text otherwise.
pub struct Output {
    dir: Option<PathBuf>,
    json: bool,
}

impl Output {
    pub fn new(dir: Option<PathBuf>, json: bool) -> Result<Self, CliError> {
        if let Some(d) = &dir {
            std::fs::create_dir_all(d)
                .map_err(|e| CliError::Validation(format!("--out: cannot create {}: {e}", d.display())))?;
        }
        Ok(Self { dir, json })
    }

    /// Write a file under `--out`; without `--out` only the primary table
    /// is printed, and only when no JSON summary was requested.
    pub fn table(&self, name: &str, primary: bool, write: impl FnOnce(&mut dyn Write) -> spdc_core::Result<()>) -> Result<(), CliError> {
        let fail = |e: String| CliError::Validation(format!("writing {name}: {e}"));
        match &self.dir {
            Some(d) => {
                let path = d.join(name);
                let file = std::fs::File::create(&path).map_err(|e| fail(e.to_string()))?;
                let mut w = std::io::BufWriter::new(file);
                write(&mut w).map_err(|e| fail(e.to_string()))?;
                w.flush().map_err(|e| fail(e.to_string()))
            }
            None if primary && !self.json => {
                let stdout = std::io::stdout();
                let mut w = std::io::BufWriter::new(stdout.lock());
                // A closed pipe (`| head`) ends output quietly.
                match write(&mut w).and_then(|()| Ok(w.flush()?)) {
                    Err(spdc_core::Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                    r => r.map_err(|e| fail(e.to_string())),
                }
            }
            None => Ok(()),
        }
    }

    pub fn json_file(&self, name: &str, value: &Value) -> Result<(), CliError> {
        if self.dir.is_some() {
            self.table(name, false, |w| {
                serde_json::to_writer_pretty(&mut *w, value)?;
                writeln!(w)?;
                Ok(())
            })?;
        }
        Ok(())
    }

    /// Print the summary: JSON with `--json`, otherwise `key: value` lines,
    /// skipped when the primary table already went to stdout.
    pub fn summary(&self, value: &Value) {
        if self.json {
            emit(&serde_json::to_string_pretty(value).expect("summary serializes"));
        } else if self.dir.is_some() {
            print_text(value, "");
        }
    }

    /// Summary for commands whose only output is the summary itself.
    pub fn report(&self, value: &Value) {
        if self.json {
            emit(&serde_json::to_string_pretty(value).expect("summary serializes"));
        } else {
            print_text(value, "");
        }
    }
}

fn print_text(value: &Value, prefix: &str) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                match v {
                    Value::Object(_) => print_text(v, &key),
                    Value::Array(a) if a.iter().any(|x| x.is_array() || x.is_object()) => {
                        emit(&format!("{key}: {}", serde_json::to_string(v).expect("value serializes")))
                    }
                    _ => emit(&format!("{key}: {v}")),
                }
            }
        }
        other => emit(&other.to_string()),
    }
}

/// `println!` without the panic on a closed stdout.
fn emit(line: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}
