use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

use crate::commands::Outcome;
use crate::{Cli, Format};

/// The JSON envelope; `serde_json::Value` objects keep their keys sorted.
pub fn report(cli: &Cli, outcome: &Outcome) -> Value {
    let mut v = json!({
        "command": outcome.command,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cli.seed,
        "params": outcome.params,
        "result": outcome.result,
        "pass": outcome.pass,
    });
    if cli.timestamp {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        v["timestamp"] = json!(secs);
    }
    v
}

pub fn emit(cli: &Cli, outcome: &Outcome) -> std::io::Result<()> {
    let bytes = match cli.format {
        Format::Json => {
            let mut text = serde_json::to_string_pretty(&report(cli, outcome))?;
            text.push('\n');
            text.into_bytes()
        }
        Format::Csv => outcome.csv.clone().unwrap_or_default(),
    };
    match &cli.output {
        Some(path) => write_atomic(path, &bytes),
        None => std::io::stdout().write_all(&bytes),
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
