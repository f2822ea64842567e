//! Batch runs from an INI-style file.
//!
//! ```text
//! # comment
//! [lossless]
//! command = exponent
//! p = 0.7,0.3
//! alpha = 1
//! expect.value = 0.650508505098
//! ```
//!
//! Every key other than `command`, `format`, `output`, `bits`, `expect_tol`
//! and `expect.<column>` must be a long option of the subcommand. Flags take
//! `true` or `false`. Relative paths are taken from the config file's
//! directory. Expectations are checked against the first result row.

use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::{ArgAction, CommandFactory, Parser};

use crate::args::{Cli, Format};
use crate::output::{Cell, Report};
use crate::{EXIT_EXPECTATION, EXIT_NONCONVERGED, EXIT_OK, EXIT_USAGE};

pub const DEFAULT_EXPECT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub entries: Vec<(String, String, usize)>,
}

impl Section {
    fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _, _)| k == key)
            .map(|(_, v, _)| v.as_str())
    }
}

pub fn parse(text: &str) -> Result<Vec<Section>> {
    let mut sections: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .with_context(|| format!("line {lineno}: unterminated section header"))?
                .trim();
            if name.is_empty() {
                bail!("line {lineno}: empty section name");
            }
            if sections.iter().any(|s| s.name == name) {
                bail!("line {lineno}: duplicate section [{name}]");
            }
            sections.push(Section {
                name: name.to_string(),
                line: lineno,
                entries: Vec::new(),
            });
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .with_context(|| format!("line {lineno}: expected key = value"))?;
        let section = sections
            .last_mut()
            .with_context(|| format!("line {lineno}: key outside of any section"))?;
        let key = k.trim().to_string();
        if section.get(&key).is_some() {
            bail!("line {lineno}: duplicate key '{key}' in [{}]", section.name);
        }
        section.entries.push((key, v.trim().to_string(), lineno));
    }
    Ok(sections)
}

struct Plan {
    name: String,
    argv: Vec<String>,
    expects: Vec<(String, String)>,
    expect_tol: f64,
}

fn normalize(key: &str) -> String {
    key.replace('_', "-")
}

const PATH_KEYS: [&str; 5] = ["p-file", "table", "prior", "distortion", "output"];

fn plan(section: &Section, base: &Path, problems: &mut Vec<String>) -> Option<Plan> {
    let Some(command) = section.get("command") else {
        problems.push(format!("[{}] (line {}): missing 'command'", section.name, section.line));
        return None;
    };
    let root = Cli::command();
    let sub = root
        .get_subcommands()
        .find(|c| c.get_name() == command && c.get_name() != "config");
    let Some(sub) = sub else {
        problems.push(format!("[{}]: unknown command '{command}'", section.name));
        return None;
    };
    let mut argv = vec!["expmoment".to_string(), command.to_string()];
    let mut expects = Vec::new();
    let mut expect_tol = DEFAULT_EXPECT_TOL;
    let before = problems.len();
    for (key, value, line) in &section.entries {
        if key == "command" {
            continue;
        }
        if let Some(col) = key.strip_prefix("expect.") {
            expects.push((col.to_string(), value.clone()));
            continue;
        }
        if key == "expect_tol" {
            match value.parse::<f64>() {
                Ok(t) if t >= 0.0 => expect_tol = t,
                _ => problems.push(format!("[{}] line {line}: bad expect_tol '{value}'", section.name)),
            }
            continue;
        }
        let long = normalize(key);
        let global = root.get_arguments().find(|a| a.get_long() == Some(long.as_str()));
        let arg = global.or_else(|| sub.get_arguments().find(|a| a.get_long() == Some(long.as_str())));
        let Some(arg) = arg else {
            problems.push(format!(
                "[{}] line {line}: unknown key '{key}' for '{command}'",
                section.name
            ));
            continue;
        };
        if matches!(arg.get_action(), ArgAction::SetTrue) {
            match value.as_str() {
                "true" => argv.push(format!("--{long}")),
                "false" => {}
                _ => problems.push(format!("[{}] line {line}: '{key}' takes true or false", section.name)),
            }
        } else if PATH_KEYS.contains(&long.as_str()) && value != "-" {
            argv.push(format!("--{long}={}", base.join(value).display()));
        } else {
            argv.push(format!("--{long}={value}"));
        }
    }
    (problems.len() == before).then(|| Plan {
        name: section.name.clone(),
        argv,
        expects,
        expect_tol,
    })
}

fn check(report: &Report, expects: &[(String, String)], tol: f64) -> Vec<String> {
    let mut failures = Vec::new();
    for (col, want) in expects {
        let Some(cell) = report.table.get(0, col) else {
            failures.push(format!("expect.{col}: no such column in the first row"));
            continue;
        };
        let ok = match (cell, want.parse::<f64>()) {
            (Cell::Num(x), Ok(w)) => (x - w).abs() <= tol || (x.is_infinite() && *x == w),
            (Cell::Int(i), Ok(w)) => (*i as f64 - w).abs() <= tol,
            _ => cell.render() == *want,
        };
        if !ok {
            failures.push(format!("expect.{col}: wanted {want}, got {}", cell.render()));
        }
    }
    failures
}

fn severity(code: i32) -> u8 {
    match code {
        EXIT_USAGE => 3,
        EXIT_NONCONVERGED => 2,
        EXIT_EXPECTATION => 1,
        _ => 0,
    }
}

fn worse(a: i32, b: i32) -> i32 {
    if severity(b) > severity(a) {
        b
    } else {
        a
    }
}

/// Runs every section of a config file; returns the most severe exit code.
pub fn run_file(path: &Path, output: Option<&Path>) -> Result<i32> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let sections = parse(&text)?;
    let mut problems = Vec::new();
    let base = path.parent().unwrap_or(Path::new(""));
    let plans: Vec<Plan> = sections.iter().filter_map(|s| plan(s, base, &mut problems)).collect();
    if !problems.is_empty() {
        for p in &problems {
            eprintln!("error: {p}");
        }
        return Ok(EXIT_USAGE);
    }
    let mut fresh = std::collections::HashSet::new();
    let mut code = EXIT_OK;
    for plan in plans {
        let cli = match Cli::try_parse_from(&plan.argv) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: [{}]: {}", plan.name, e.render().to_string().trim_end());
                code = worse(code, EXIT_USAGE);
                continue;
            }
        };
        let report = match crate::commands::execute(&cli.command, cli.bits) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("error: [{}]: {e:#}", plan.name);
                code = worse(code, EXIT_USAGE);
                continue;
            }
        };
        let format: Format = cli.format;
        let target = cli.output.as_deref().or(output);
        if let Some(t) = target {
            if fresh.insert(t.to_path_buf()) {
                std::fs::write(t, "").with_context(|| format!("creating {}", t.display()))?;
            }
        }
        crate::emit(&report, format, target, Some(&plan.name))?;
        if report.nonconverged {
            code = worse(code, EXIT_NONCONVERGED);
        }
        let failures = check(&report, &plan.expects, plan.expect_tol);
        for f in &failures {
            eprintln!("FAIL [{}] {f}", plan.name);
        }
        if !failures.is_empty() {
            code = worse(code, EXIT_EXPECTATION);
        }
    }
    Ok(code)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_comments() {
        let s = parse("# top\n[a]\ncommand = rem\nR = 0.5\n\n[b]\ncommand=tilt\n").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].get("R"), Some("0.5"));
        assert_eq!(s[1].get("command"), Some("tilt"));
    }

    #[test]
    fn rejects_keys_outside_sections() {
        assert!(parse("command = rem\n").is_err());
        assert!(parse("[a]\nR = 1\nR = 2\n").is_err());
    }

    #[test]
    fn unknown_keys_are_all_reported() {
        let s = parse("[a]\ncommand = rem\nR = 0.5\nalpha = 1\nfoo = 1\nbar = 2\n").unwrap();
        let mut problems = Vec::new();
        assert!(plan(&s[0], Path::new(""), &mut problems).is_none());
        assert_eq!(problems.len(), 2);
    }

    #[test]
    fn flags_and_underscores() {
        let s = parse("[a]\ncommand = altmin\np_file = x\nmulti_start = true\nbits = false\n").unwrap();
        let mut problems = Vec::new();
        let p = plan(&s[0], Path::new(""), &mut problems).unwrap();
        assert_eq!(p.argv, ["expmoment", "altmin", "--p-file=x", "--multi-start"]);
    }

    #[test]
    fn nested_config_is_unknown() {
        let s = parse("[a]\ncommand = config\n").unwrap();
        let mut problems = Vec::new();
        assert!(plan(&s[0], Path::new(""), &mut problems).is_none());
    }

    #[test]
    fn severity_order() {
        assert_eq!(worse(EXIT_EXPECTATION, EXIT_NONCONVERGED), EXIT_NONCONVERGED);
        assert_eq!(worse(EXIT_USAGE, EXIT_NONCONVERGED), EXIT_USAGE);
        assert_eq!(worse(EXIT_OK, EXIT_EXPECTATION), EXIT_EXPECTATION);
    }
}
