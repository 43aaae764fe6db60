//! Config files and manifests: flat `key=value` lines under `[section]`
//! headers, one key per long flag. A report's JSON parameter block is
//! accepted as well.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use clap::parser::ValueSource;
use clap::{ArgMatches, Command};

pub const GLOBAL: &str = "global";
/// Flags that steer a run without affecting its results.
pub const EXEC_ONLY: &[&str] = &["threads", "output", "csv", "manifest", "config"];
const NEVER: &[&str] = &["help", "version", "config"];

pub type Sections = BTreeMap<String, BTreeMap<String, String>>;

/// Dotted subcommand path of the parsed invocation, e.g. `verify.goldbach`.
pub fn leaf_path(matches: &ArgMatches) -> Vec<String> {
    let mut path = Vec::new();
    let mut m = matches;
    while let Some((name, sub)) = m.subcommand() {
        path.push(name.to_string());
        m = sub;
    }
    path
}

pub fn leaf_matches(matches: &ArgMatches) -> &ArgMatches {
    let mut m = matches;
    while let Some((_, sub)) = m.subcommand() {
        m = sub;
    }
    m
}

fn leaf_command<'a>(root: &'a Command, path: &[String]) -> Option<&'a Command> {
    let mut c = root;
    for p in path {
        c = c.find_subcommand(p)?;
    }
    Some(c)
}

/// (id, long name) of every configurable flag of a command.
fn keys(cmd: &Command, global: bool) -> Vec<(String, String)> {
    cmd.get_arguments()
        .filter(|a| a.is_global_set() == global)
        .filter_map(|a| a.get_long().map(|l| (a.get_id().to_string(), l.to_string())))
        .filter(|(_, l)| !NEVER.contains(&l.as_str()))
        .collect()
}

pub fn parse_text(text: &str) -> Result<Sections> {
    let mut out = Sections::new();
    let mut section = GLOBAL.to_string();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = name.trim().to_string();
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {}: expected key=value, got `{line}`", i + 1))?;
        let prev = out.entry(section.clone()).or_default().insert(k.trim().to_string(), v.trim().to_string());
        if prev.is_some() {
            bail!("config line {}: key `{}` given twice in [{section}]", i + 1, k.trim());
        }
    }
    Ok(out)
}

/// Sections recovered from the `cli.*` entries of a report's params.
pub fn parse_report_json(text: &str) -> Result<Sections> {
    let doc: serde_json::Value = serde_json::from_str(text).context("config json")?;
    let params = doc
        .get("params")
        .and_then(|p| p.as_object())
        .ok_or_else(|| anyhow!("config json has no params object"))?;
    let section = params
        .get("cli.command")
        .and_then(|v| v.as_str())
        .ok_or_else(|| anyhow!("config json has no cli.command entry"))?
        .to_string();
    let mut out = Sections::new();
    for (k, v) in params {
        let v = v.as_str().ok_or_else(|| anyhow!("param `{k}` is not a string"))?.to_string();
        if let Some(key) = k.strip_prefix("cli.global.") {
            out.entry(GLOBAL.into()).or_default().insert(key.into(), v);
        } else if let Some(key) = k.strip_prefix("cli.") {
            if key != "command" {
                out.entry(section.clone()).or_default().insert(key.into(), v);
            }
        }
    }
    Ok(out)
}

pub fn load(path: &Path) -> Result<Sections> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    if path.extension().is_some_and(|e| e == "json") {
        parse_report_json(&text)
    } else {
        parse_text(&text)
    }
}

/// Extra argv entries supplying file values for flags not given on the
/// command line. Unknown sections or keys are rejected.
pub fn file_args(root: &Command, matches: &ArgMatches, sections: &Sections) -> Result<Vec<OsString>> {
    let path = leaf_path(matches);
    let leaf_name = path.join(".");
    let leaf = leaf_matches(matches);
    let mut extra = Vec::new();
    for (section, entries) in sections {
        let (cmd_keys, m) = if section == GLOBAL {
            (keys(root, true), matches)
        } else {
            let parts: Vec<String> = section.split('.').map(String::from).collect();
            let cmd = leaf_command(root, &parts)
                .filter(|c| !c.has_subcommands())
                .ok_or_else(|| anyhow!("config: unknown section [{section}]"))?;
            (keys(cmd, false), leaf)
        };
        for (key, value) in entries {
            let Some((id, long)) = cmd_keys.iter().find(|(_, l)| l == key) else {
                bail!("config: unknown key `{key}` in [{section}]");
            };
            if section != GLOBAL && *section != leaf_name {
                continue;
            }
            if m.value_source(id) == Some(ValueSource::CommandLine) {
                continue;
            }
            let takes_value = root_arg_takes_value(root, &path, id, section == GLOBAL);
            if takes_value {
                extra.push(OsString::from(format!("--{long}={value}")));
            } else {
                match value.as_str() {
                    "true" => extra.push(OsString::from(format!("--{long}"))),
                    "false" => {}
                    _ => bail!("config: `{key}` is a switch, expected true or false"),
                }
            }
        }
    }
    Ok(extra)
}

fn root_arg_takes_value(root: &Command, path: &[String], id: &str, global: bool) -> bool {
    let cmd = if global { Some(root) } else { leaf_command(root, path) };
    cmd.and_then(|c| c.get_arguments().find(|a| a.get_id() == id))
        .map(|a| a.get_action().takes_values())
        .unwrap_or(true)
}

/// Every resolved flag value, defaults included, by section.
pub fn resolved(root: &Command, matches: &ArgMatches) -> Sections {
    let path = leaf_path(matches);
    let mut out = Sections::new();
    let collect = |cmd: &Command, m: &ArgMatches, global: bool| -> BTreeMap<String, String> {
        keys(cmd, global)
            .into_iter()
            .filter_map(|(id, long)| {
                let raw = m.get_raw(&id)?;
                let v: Vec<String> = raw.map(|s| s.to_string_lossy().into_owned()).collect();
                Some((long, v.join(",")))
            })
            .collect()
    };
    out.insert(GLOBAL.into(), collect(root, matches, true));
    if let Some(cmd) = leaf_command(root, &path) {
        out.insert(path.join("."), collect(cmd, leaf_matches(matches), false));
    }
    out
}

pub fn manifest_text(sections: &Sections) -> String {
    let mut s = String::from("# subbasis manifest\n");
    for name in std::iter::once(GLOBAL).chain(sections.keys().map(String::as_str).filter(|n| *n != GLOBAL)) {
        let Some(entries) = sections.get(name) else { continue };
        s.push_str(&format!("[{name}]\n"));
        for (k, v) in entries {
            s.push_str(&format!("{k}={v}\n"));
        }
    }
    s
}

/// Parameter entries embedded in reports: everything except execution-only
/// flags, prefixed `cli.`.
pub fn embedded(sections: &Sections, leaf: &str) -> Vec<(String, String)> {
    let mut out = vec![("cli.command".to_string(), leaf.to_string())];
    for (section, entries) in sections {
        for (k, v) in entries {
            if EXEC_ONLY.contains(&k.as_str()) {
                continue;
            }
            let key = if section == GLOBAL { format!("cli.global.{k}") } else { format!("cli.{k}") };
            out.push((key, v.clone()));
        }
    }
    out
}
