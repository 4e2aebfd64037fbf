//! `--config file.json`: a flat JSON object whose keys are flag names.
//!
//! The file is expanded into `--key=value` tokens placed right after the
//! subcommand, so anything given on the command line wins. Keys may use
//! `snake_case` or `kebab-case`.

use std::fs;

use serde_json::Value;

use crate::error::CliError;

fn config_path(argv: &[String]) -> Result<Option<(usize, String)>, CliError> {
    for (k, a) in argv.iter().enumerate() {
        if a == "--config" {
            return match argv.get(k + 1) {
                Some(p) => Ok(Some((k, p.clone()))),
                None => Err(CliError::Usage("--config needs a file".into())),
            };
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Ok(Some((k, p.to_string())));
        }
    }
    Ok(None)
}

fn scalar(v: &Value, key: &str) -> Result<String, CliError> {
    match v {
        Value::Number(n) => Ok(n.to_string()),
        Value::String(s) => Ok(s.clone()),
        _ => Err(CliError::Usage(format!("config key {key}: expected a number or string"))),
    }
}

/// Tokens for one key. Booleans become bare switches, arrays repeat the flag.
fn tokens_for(key: &str, v: &Value) -> Result<Vec<String>, CliError> {
    let flag = format!("--{}", key.replace('_', "-"));
    Ok(match v {
        Value::Bool(true) => vec![flag],
        Value::Bool(false) | Value::Null => Vec::new(),
        Value::Array(items) => items
            .iter()
            .map(|x| Ok(format!("{flag}={}", scalar(x, key)?)))
            .collect::<Result<_, CliError>>()?,
        other => vec![format!("{flag}={}", scalar(other, key)?)],
    })
}

fn given_on_command_line(argv: &[String], flag: &str) -> bool {
    argv.iter()
        .any(|a| a == flag || a.strip_prefix(flag).is_some_and(|rest| rest.starts_with('=')))
}

/// Returns `argv` with the config file (if any) expanded in place.
pub fn expand(argv: Vec<String>) -> Result<Vec<String>, CliError> {
    let Some((_, path)) = config_path(&argv)? else {
        return Ok(argv);
    };
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::Usage(format!("cannot read config {path}: {e}")))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config {path}: {e}")))?;
    let Value::Object(map) = value else {
        return Err(CliError::Usage(format!("config {path}: expected a JSON object")));
    };
    let mut extra = Vec::new();
    for (key, v) in &map {
        if key == "config" {
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        if given_on_command_line(&argv, &flag) {
            continue;
        }
        extra.extend(tokens_for(key, v)?);
    }
    // argv[0] is the program, argv[1] the subcommand
    let at = argv.len().min(2);
    let mut out = argv[..at].to_vec();
    out.extend(extra);
    out.extend_from_slice(&argv[at..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn no_config_is_identity() {
        let a = s(&["opo", "spectra", "--sigma", "1"]);
        assert_eq!(expand(a.clone()).unwrap(), a);
    }

    #[test]
    fn command_line_wins() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, r#"{{"sigma": 2.0, "delta": 0.5, "mode": ["phi+pi/4"], "asymmetric": true}}"#).unwrap();
        let p = f.path().display().to_string();
        let out = expand(s(&["opo", "entanglement", "--config", &p, "--sigma", "1.1"])).unwrap();
        assert!(!out.iter().any(|a| a == "--sigma=2.0"));
        assert!(out.contains(&"--delta=0.5".to_string()));
        assert!(out.contains(&"--mode=phi+pi/4".to_string()));
        assert!(out.contains(&"--asymmetric".to_string()));
        assert_eq!(out[1], "entanglement");
    }

    #[test]
    fn rejects_non_object() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, "[1, 2]").unwrap();
        let p = f.path().display().to_string();
        assert!(matches!(expand(s(&["opo", "validate", "--config", &p])), Err(CliError::Usage(_))));
    }
}
