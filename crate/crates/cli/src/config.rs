//! Line-oriented `key = value` files.
//!
//! `#` starts a comment. `include = other.conf` splices another file in
//! place, resolved relative to the including file. Later assignments win.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::CliError;

/// Parsed assignments, in key order.
pub type Values = BTreeMap<String, String>;

pub fn load(path: &Path) -> Result<Values, CliError> {
    let mut values = Values::new();
    let mut stack = Vec::new();
    load_into(path, &mut values, &mut stack)?;
    Ok(values)
}

fn load_into(path: &Path, values: &mut Values, stack: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let canonical = fs::canonicalize(path).map_err(CliError::io(path))?;
    if stack.contains(&canonical) {
        return Err(CliError::ConfigParse {
            path: path.to_path_buf(),
            line: 0,
            reason: "include cycle".into(),
        });
    }
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    stack.push(canonical);
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| CliError::ConfigParse {
            path: path.to_path_buf(),
            line: idx + 1,
            reason: format!("expected `key = value`, got `{line}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(CliError::ConfigParse {
                path: path.to_path_buf(),
                line: idx + 1,
                reason: "empty key".into(),
            });
        }
        if key == "include" {
            let base = path.parent().unwrap_or(Path::new("."));
            load_into(&base.join(value), values, stack)?;
        } else {
            values.insert(key.to_string(), value.to_string());
        }
    }
    stack.pop();
    Ok(())
}

/// Parses `text` as a standalone file (includes are not allowed).
pub fn parse_str(text: &str) -> Result<Values, CliError> {
    let mut values = Values::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let err = |reason: &str| CliError::ConfigParse {
            path: PathBuf::from("<string>"),
            line: idx + 1,
            reason: reason.to_string(),
        };
        let (key, value) = line.split_once('=').ok_or_else(|| err("expected `key = value`"))?;
        if key.trim() == "include" {
            return Err(err("include needs a file"));
        }
        values.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(values)
}
