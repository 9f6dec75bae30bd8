//! `--config FILE`: a TOML file whose keys are long flag names of the chosen
//! subcommand (or the global flags). Keys may sit at the top level or in a
//! table named after the subcommand; tables for other subcommands are
//! ignored. The file's values are spliced into argv right after the
//! subcommand name, so flags given on the command line override them.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{ArgAction, Command};
use toml::Value;

use crate::error::{CliError, CliResult};

const GLOBAL_VALUED: &[&str] = &["--config", "--jobs"];

/// Path given to `--config`, if any. The last occurrence wins.
fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut found = None;
    let mut iter = args.iter().skip(1);
    while let Some(a) = iter.next() {
        let s = a.to_string_lossy();
        if s == "--" {
            break;
        }
        if s == "--config" {
            found = iter.next().map(PathBuf::from);
        } else if let Some(rest) = s.strip_prefix("--config=") {
            found = Some(PathBuf::from(rest));
        }
    }
    found
}

/// Index of the subcommand token in argv.
fn subcommand_position(args: &[OsString], cmd: &Command) -> Option<(usize, String)> {
    let mut i = 1;
    while i < args.len() {
        let s = args[i].to_string_lossy();
        if GLOBAL_VALUED.contains(&s.as_ref()) {
            i += 2;
            continue;
        }
        if s.starts_with('-') {
            i += 1;
            continue;
        }
        return cmd.find_subcommand(s.as_ref()).map(|c| (i, c.get_name().to_string()));
    }
    None
}

fn scalar(key: &str, v: &Value) -> CliResult<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Integer(i) => Ok(i.to_string()),
        Value::Float(f) => Ok(f.to_string()),
        Value::Boolean(b) => Ok(b.to_string()),
        _ => Err(CliError::Config(format!("config key `{key}`: expected a scalar or a list of scalars"))),
    }
}

fn tokens_for(cmd: &Command, key: &str, value: &Value) -> CliResult<Vec<OsString>> {
    let long = key.replace('_', "-");
    if long == "config" {
        return Err(CliError::Config("config files cannot nest `config`".into()));
    }
    let arg = cmd
        .get_arguments()
        .find(|a| a.get_long() == Some(long.as_str()))
        .ok_or_else(|| CliError::Config(format!("unknown config key `{key}` for `{}`", cmd.get_name())))?;
    let flag = format!("--{long}");
    let is_switch = matches!(arg.get_action(), ArgAction::SetTrue | ArgAction::SetFalse | ArgAction::Count);
    Ok(match value {
        Value::Boolean(b) if is_switch => if *b { vec![flag.into()] } else { vec![] },
        _ if is_switch => return Err(CliError::Config(format!("config key `{key}` must be true or false"))),
        Value::Array(items) => {
            let parts = items.iter().map(|v| scalar(key, v)).collect::<CliResult<Vec<_>>>()?;
            vec![format!("{flag}={}", parts.join(",")).into()]
        }
        v => vec![format!("{flag}={}", scalar(key, v)?).into()],
    })
}

/// Expands `--config` into explicit flags. Returns argv unchanged when no
/// config file is given.
pub fn expand(args: Vec<OsString>, cmd: &Command) -> CliResult<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let Some((pos, name)) = subcommand_position(&args, cmd) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let table: toml::Table = text.parse().map_err(|e| CliError::config(&path, e))?;

    let mut built = cmd.clone();
    built.build();
    let sub = built.find_subcommand(&name).expect("subcommand was just found");
    let subcommands: Vec<&str> = built.get_subcommands().map(|c| c.get_name()).collect();

    let mut injected = Vec::new();
    for (key, value) in &table {
        match value {
            Value::Table(inner) if key == &name => {
                for (k, v) in inner {
                    injected.extend(tokens_for(sub, k, v).map_err(|e| CliError::config(&path, e))?);
                }
            }
            Value::Table(_) if subcommands.contains(&key.as_str()) => {}
            v => injected.extend(tokens_for(sub, key, v).map_err(|e| CliError::config(&path, e))?),
        }
    }
    let mut out = args[..=pos].to_vec();
    out.extend(injected);
    out.extend_from_slice(&args[pos + 1..]);
    Ok(out)
}
