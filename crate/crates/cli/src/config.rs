//! `--config` files: `key = value` lines whose keys are the long flag names
//! of the chosen subcommand. They are spliced in front of the user's own
//! flags, so anything given on the command line wins.

use std::fs;

use clap::Command;

use crate::error::CliError;

pub fn parse_config(text: &str, path: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::new("config", format!("{path}:{}: expected key=value", i + 1)));
        };
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Rewrite `args` so that `--config <file>` is replaced by the flags it
/// holds, inserted right after the subcommand name.
pub fn expand(cmd: &Command, args: Vec<String>) -> Result<Vec<String>, CliError> {
    let mut rest = Vec::with_capacity(args.len());
    let mut config = None;
    let mut it = args.into_iter();
    rest.extend(it.next());
    while let Some(a) = it.next() {
        if a == "--config" {
            let p = it
                .next()
                .ok_or_else(|| CliError::new("config", "--config needs a path"))?;
            config = Some(p);
        } else if let Some(p) = a.strip_prefix("--config=") {
            config = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = config else {
        return Ok(rest);
    };
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::new("io", format!("{path}: {e}")))?;
    let entries = parse_config(&text, &path)?;

    let Some(pos) = rest.iter().skip(1).position(|a| !a.starts_with('-')).map(|p| p + 1) else {
        return Ok(rest);
    };
    let Some(sub) = cmd.find_subcommand(&rest[pos]) else {
        return Ok(rest);
    };
    let mut injected = Vec::new();
    for (key, value) in entries {
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()))
            .ok_or_else(|| {
                CliError::new("config", format!("{path}: unknown key {key:?} for `{}`", rest[pos]))
            })?;
        if arg.get_action().takes_values() {
            injected.push(format!("--{key}={value}"));
        } else {
            match value.as_str() {
                "true" | "1" | "yes" => injected.push(format!("--{key}")),
                "false" | "0" | "no" => {}
                _ => {
                    return Err(CliError::new(
                        "config",
                        format!("{path}: {key} expects true or false, got {value:?}"),
                    ))
                }
            }
        }
    }
    rest.splice(pos + 1..pos + 1, injected);
    Ok(rest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blanks_skipped() {
        let e = parse_config("# x\n\nframes = 4\nseed=2\n", "c").unwrap();
        assert_eq!(e, vec![("frames".into(), "4".into()), ("seed".into(), "2".into())]);
        assert!(parse_config("frames 4\n", "c").is_err());
    }
}
