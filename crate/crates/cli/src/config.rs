//! Flat `key = value` config files merged underneath command-line flags.

use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigFile {
    pub entries: BTreeMap<String, String>,
}

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_config(text: &str) -> Result<ConfigFile, String> {
    let mut entries = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key = value", no + 1))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(format!("config line {}: empty key or value", no + 1));
        }
        let key = k.trim_start_matches("--").replace('_', "-");
        if entries.insert(key.clone(), v.to_string()).is_some() {
            return Err(format!("config line {}: duplicate key {key}", no + 1));
        }
    }
    Ok(ConfigFile { entries })
}

pub fn load_config(path: &Path) -> Result<ConfigFile, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    parse_config(&text)
}

/// Removes `--config <path>` / `--config=<path>` from `args`, returning the path.
pub fn take_config_flag(args: &mut Vec<String>) -> Result<Option<String>, String> {
    let mut found = None;
    let mut i = 0;
    while i < args.len() {
        if args[i] == "--config" {
            if i + 1 >= args.len() {
                return Err("--config needs a path".into());
            }
            found = Some(args.remove(i + 1));
            args.remove(i);
        } else if let Some(p) = args[i].strip_prefix("--config=") {
            found = Some(p.to_string());
            args.remove(i);
        } else {
            i += 1;
        }
    }
    Ok(found)
}

/// Builds the argument vector: subcommand, config-derived flags, then the
/// user's flags, which win because every flag overrides itself.
///
/// `accepts(sub, key)` reports whether a subcommand takes `--key`; `known(key)`
/// whether any subcommand does.
pub fn merge_args(
    user: &[String],
    config: Option<&ConfigFile>,
    subcommands: &[String],
    accepts: impl Fn(&str, &str) -> bool,
    known: impl Fn(&str) -> bool,
) -> Result<Vec<String>, String> {
    let Some(cfg) = config else { return Ok(user.to_vec()) };
    let mut rest: Vec<String> = user.to_vec();
    let sub = match rest.first() {
        Some(s) if subcommands.contains(s) => rest.remove(0),
        _ => match cfg.entries.get("command") {
            Some(c) => c.clone(),
            None => return Ok(user.to_vec()),
        },
    };
    let mut out = vec![sub.clone()];
    for (k, v) in &cfg.entries {
        if k == "command" {
            continue;
        }
        if !known(k) {
            return Err(format!("unknown config key {k}"));
        }
        if accepts(&sub, k) {
            out.push(format!("--{k}={v}"));
        }
    }
    out.extend(rest);
    Ok(out)
}
