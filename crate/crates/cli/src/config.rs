//! Flag/config-file merging and the effective-config record.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

pub const CONFIG_DIR_ENV: &str = "TOKGRAFT_CONFIG_DIR";

/// Bad flags, missing inputs, unreadable config: exit code 2.
#[derive(Debug)]
pub struct UsageError(String);

impl UsageError {
    pub fn new(msg: impl Into<String>) -> Self {
        Self(msg.into())
    }
}

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn config_path(command: &str, explicit: Option<&Path>) -> Option<PathBuf> {
    if let Some(p) = explicit {
        return Some(p.to_path_buf());
    }
    let dir = std::env::var_os(CONFIG_DIR_ENV)?;
    let p = Path::new(&dir).join(format!("{command}.json"));
    p.is_file().then_some(p)
}

/// Overlays explicitly given flags on the config file's flat object.
pub fn resolve<T: Serialize + DeserializeOwned>(command: &str, flags: T, config: Option<&Path>) -> anyhow::Result<T> {
    let mut merged = match config_path(command, config) {
        Some(path) => {
            let text = fs::read_to_string(&path)
                .map_err(|e| UsageError::new(format!("cannot read config {}: {e}", path.display())))?;
            match serde_json::from_str::<Value>(&text) {
                Ok(Value::Object(m)) => m,
                Ok(_) => return Err(UsageError::new(format!("{}: config must be a JSON object", path.display())).into()),
                Err(e) => return Err(UsageError::new(format!("{}: {e}", path.display())).into()),
            }
        }
        None => Map::new(),
    };
    if let Value::Object(flags) = serde_json::to_value(&flags)? {
        for (k, v) in flags {
            if !v.is_null() {
                merged.insert(k, v);
            }
        }
    }
    let effective = serde_json::from_value(Value::Object(merged))
        .map_err(|e| UsageError::new(format!("invalid {command} configuration: {e}")))?;
    log::info!("effective {command} config: {}", serde_json::to_string(&effective)?);
    Ok(effective)
}

pub fn required<T: Clone>(value: &Option<T>, flag: &str) -> anyhow::Result<T> {
    value
        .clone()
        .ok_or_else(|| UsageError::new(format!("missing required --{flag}")).into())
}

pub fn input(path: &Path) -> anyhow::Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(UsageError::new(format!("input not found: {}", path.display())).into())
    }
}

/// Writes `<dir>/<command>.config.json`.
pub fn write_effective<T: Serialize>(command: &str, args: &T, dir: &Path) -> anyhow::Result<()> {
    let dir = if dir.as_os_str().is_empty() { Path::new(".") } else { dir };
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let record = serde_json::json!({
        "command": command,
        "version": tokgraft::VERSION,
        "args": args,
    });
    let path = dir.join(format!("{command}.config.json"));
    let mut text = serde_json::to_string_pretty(&record)?;
    text.push('\n');
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Directory holding a file output.
pub fn parent(path: &Path) -> &Path {
    path.parent().unwrap_or(Path::new("."))
}
