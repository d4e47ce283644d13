//! Config files are flat TOML documents whose keys are flag names. They are
//! applied by splicing the equivalent flags in front of the user's own, so
//! the command line wins wherever both set the same flag.

use std::ffi::OsString;
use std::path::Path;

use clap::{CommandFactory, Parser};

use crate::args::Cli;
use crate::CliError;

const GLOBAL_KEYS: [&str; 2] = ["seed", "print-config"];

fn long_names(cmd: &clap::Command) -> Vec<String> {
    cmd.get_arguments()
        .filter_map(|a| a.get_long().map(str::to_string))
        .collect()
}

fn value_to_args(key: &str, value: &toml::Value) -> Result<Vec<OsString>, CliError> {
    let flag = OsString::from(format!("--{key}"));
    let scalar = |v: &toml::Value| -> Result<OsString, CliError> {
        Ok(match v {
            toml::Value::String(s) => s.into(),
            toml::Value::Integer(i) => i.to_string().into(),
            toml::Value::Float(f) => f.to_string().into(),
            other => {
                return Err(CliError::Usage(format!(
                    "config key `{key}`: unsupported value {other}"
                )))
            }
        })
    };
    Ok(match value {
        toml::Value::Boolean(true) => vec![flag],
        toml::Value::Boolean(false) => Vec::new(),
        toml::Value::Array(items) => items
            .iter()
            .map(|v| Ok([flag.clone(), scalar(v)?]))
            .collect::<Result<Vec<_>, CliError>>()?
            .into_iter()
            .flatten()
            .collect(),
        other => vec![flag, scalar(other)?],
    })
}

fn load_table(path: &Path) -> Result<toml::Table, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Data(format!("config {}: {e}", path.display())))
}

/// Position of the subcommand token in `argv`.
fn subcommand_index(argv: &[OsString], name: &str) -> Option<usize> {
    let mut skip_next = false;
    for (i, arg) in argv.iter().enumerate().skip(1) {
        if skip_next {
            skip_next = false;
            continue;
        }
        match arg.to_str() {
            Some("--config") | Some("--seed") => skip_next = true,
            Some(a) if a == name => return Some(i),
            _ => {}
        }
    }
    None
}

/// Parses `argv`, folding in the settings of `--config` if one is given.
pub fn parse(argv: Vec<OsString>) -> Result<Cli, CliError> {
    let first = Cli::try_parse_from(&argv)?;
    let Some(path) = first.config.clone() else {
        return Ok(first);
    };
    let table = load_table(&path)?;
    let root = Cli::command();
    let name = first.command.name();
    let sub = root.find_subcommand(name).expect("parsed subcommand exists");
    let own = long_names(sub);
    let others: Vec<String> = root
        .get_subcommands()
        .filter(|c| c.get_name() != name)
        .flat_map(long_names)
        .collect();

    let mut global = Vec::new();
    let mut local = Vec::new();
    for (key, value) in &table {
        if key == "command" {
            continue;
        }
        if key == "config" {
            return Err(CliError::Usage("config files cannot include other config files".into()));
        }
        if GLOBAL_KEYS.contains(&key.as_str()) {
            global.extend(value_to_args(key, value)?);
        } else if own.iter().any(|k| k == key) {
            local.extend(value_to_args(key, value)?);
        } else if others.iter().any(|k| k == key) {
            log::debug!("config key `{key}` does not apply to `{name}`");
        } else {
            return Err(CliError::Usage(format!("unknown config key `{key}`")));
        }
    }

    let at = subcommand_index(&argv, name)
        .ok_or_else(|| CliError::Usage(format!("cannot locate `{name}` in the arguments")))?;
    let mut merged = vec![argv[0].clone()];
    merged.extend(global);
    merged.extend_from_slice(&argv[1..at]);
    merged.push(argv[at].clone());
    merged.extend(local);
    merged.extend_from_slice(&argv[at + 1..]);
    log::debug!("effective arguments: {merged:?}");
    Ok(Cli::try_parse_from(merged)?)
}

/// The effective settings as a flat TOML document that `--config` accepts.
pub fn effective(cli: &Cli) -> String {
    use crate::args::Command::*;
    let sub = match &cli.command {
        Gen(a) => toml::Value::try_from(a),
        Train(a) => toml::Value::try_from(a),
        Eval(a) => toml::Value::try_from(a),
        Stream(a) => toml::Value::try_from(a),
        Decode(a) => toml::Value::try_from(a),
        Encode(a) => toml::Value::try_from(a),
        Fetch(a) => toml::Value::try_from(a),
    }
    .expect("arguments serialise");
    let mut table = toml::Table::new();
    table.insert("command".into(), cli.command.name().into());
    let seed = i64::try_from(cli.seed).map_or_else(|_| cli.seed.to_string().into(), toml::Value::Integer);
    table.insert("seed".into(), seed);
    if let toml::Value::Table(t) = sub {
        table.extend(t);
    }
    toml::to_string(&table).expect("table serialises")
}
