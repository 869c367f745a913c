//! Flat key=value config files, merged into the argument list before
//! parsing. Keys are long flag names; a flag on the command line wins.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use clap::Command;

pub fn read_pairs(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("{}:{}: expected key=value", path.display(), i + 1))?;
        let key = k.trim().to_string();
        if pairs.iter().any(|(p, _): &(String, String)| *p == key) {
            bail!("{}:{}: duplicate key {key}", path.display(), i + 1);
        }
        pairs.push((key, v.trim().to_string()));
    }
    Ok(pairs)
}

/// Value of `--config` in raw arguments, if any.
pub fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(v.to_string());
        }
    }
    None
}

fn given(args: &[String], key: &str) -> bool {
    let flag = format!("--{key}");
    let prefixed = format!("--{key}=");
    args.iter().any(|a| *a == flag || a.starts_with(&prefixed))
}

/// Appends config entries to `args`. `command = <name>` selects the
/// subcommand when none is given on the command line.
pub fn merge(cmd: &Command, mut args: Vec<String>, pairs: &[(String, String)]) -> Result<Vec<String>> {
    let names: Vec<&str> = cmd.get_subcommands().map(|c| c.get_name()).collect();
    let mut sub = args.iter().skip(1).find(|a| names.contains(&a.as_str())).cloned();
    if let Some((_, v)) = pairs.iter().find(|(k, _)| k == "command") {
        match &sub {
            Some(s) if s != v => log::warn!("subcommand {s} given on the command line; config command={v} ignored"),
            Some(_) => {}
            None => {
                if !names.contains(&v.as_str()) {
                    bail!("config names unknown command {v}");
                }
                args.push(v.clone());
                sub = Some(v.clone());
            }
        }
    }
    let sub = sub.ok_or_else(|| anyhow!("no subcommand given"))?;
    let subcmd = cmd.find_subcommand(&sub).expect("listed subcommand");
    for (key, value) in pairs {
        if key == "command" || key == "config" {
            continue;
        }
        let arg = subcmd
            .get_arguments()
            .chain(cmd.get_arguments())
            .find(|a| a.get_long() == Some(key.as_str()))
            .ok_or_else(|| anyhow!("unknown config key {key} for command {sub}"))?;
        if given(&args, key) {
            log::warn!("--{key} given on the command line; config value {value} ignored");
            continue;
        }
        if arg.get_action().takes_values() {
            args.push(format!("--{key}={value}"));
        } else {
            match value.as_str() {
                "true" => args.push(format!("--{key}")),
                "false" => {}
                other => bail!("config key {key} expects true or false, got {other}"),
            }
        }
    }
    Ok(args)
}
