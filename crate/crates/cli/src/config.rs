//! `--config` files: `key = value` lines whose keys are long flag names.
//! They are spliced into the argument list ahead of the user's own flags, so
//! an explicit flag always overrides the file.

use std::ffi::OsString;
use std::path::Path;

use clap::{ArgAction, CommandFactory};

use crate::args::Cli;
use crate::Failure;

/// Parses config text into `(key, value)` pairs.
pub fn parse(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = value`", lineno + 1))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            return Err(format!("line {}: empty key", lineno + 1));
        }
        pairs.push((key, value.trim().to_string()));
    }
    Ok(pairs)
}

/// Returns the argument list with the config file's entries expanded after
/// the subcommand name. Arguments are returned unchanged when no `--config`
/// is present.
pub fn expand(args: Vec<OsString>) -> Result<Vec<OsString>, Failure> {
    let Some(sub) = args.get(1).and_then(|s| s.to_str()).map(str::to_owned) else {
        return Ok(args);
    };
    let mut path = None;
    let mut i = 2;
    while i < args.len() {
        let a = args[i].to_string_lossy();
        if a == "--" {
            break;
        }
        if a == "--config" {
            path = args.get(i + 1).cloned();
            break;
        }
        if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.into());
            break;
        }
        i += 1;
    }
    let Some(path) = path else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path)).map_err(|e| {
        Failure::Runtime(anyhow::anyhow!(
            "cannot read config file {}: {e}",
            Path::new(&path).display()
        ))
    })?;
    let pairs = parse(&text).map_err(|e| Failure::Usage(format!("config file: {e}")))?;

    let cmd = Cli::command();
    let Some(subcmd) = cmd.find_subcommand(&sub) else {
        // Let clap report the unknown subcommand.
        return Ok(args);
    };
    let mut injected: Vec<OsString> = Vec::new();
    for (key, value) in pairs {
        let arg = subcmd
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()))
            .filter(|_| key != "config" && key != "manifest")
            .ok_or_else(|| Failure::Usage(format!("config file: unknown key '{key}' for {sub}")))?;
        if matches!(arg.get_action(), ArgAction::SetTrue) {
            match value.as_str() {
                "true" => injected.push(format!("--{key}").into()),
                "false" => {}
                other => {
                    return Err(Failure::Usage(format!(
                        "config file: '{key}' expects true or false, got '{other}'"
                    )))
                }
            }
        } else {
            injected.push(format!("--{key}={value}").into());
        }
    }
    let mut out = args[..2].to_vec();
    out.extend(injected);
    out.extend_from_slice(&args[2..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_underscores() {
        let pairs = parse("# header\nnlm_patch = 4  # trailing\n\n no-fir=true\n").unwrap();
        assert_eq!(
            pairs,
            vec![("nlm-patch".into(), "4".into()), ("no-fir".into(), "true".into())]
        );
        assert!(parse("just words").is_err());
        assert!(parse(" = 3").is_err());
    }
}
