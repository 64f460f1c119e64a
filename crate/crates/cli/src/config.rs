//! Flat `key = value` configuration files, merged underneath command-line flags.

use std::path::Path;

/// Parse `key = value` lines. Blank lines and lines starting with `#` are
/// skipped.
pub fn parse(text: &str, origin: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("{origin}:{}: expected `key = value`, got `{line}`", n + 1))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(format!("{origin}:{}: bad key `{key}`", n + 1));
        }
        if key == "config" {
            return Err(format!("{origin}:{}: config files cannot include other config files", n + 1));
        }
        out.push((key.to_string(), value.to_string()));
    }
    Ok(out)
}

/// Render settings in the format read by [`parse`].
pub fn render(settings: &[(&str, String)]) -> String {
    settings.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

/// Locate `--config PATH` or `--config=PATH` after the subcommand.
fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter().skip(2);
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

/// Insert the config file's settings as flags directly after the subcommand,
/// so later flags from the command line override them.
pub fn expand(args: Vec<String>) -> Result<Vec<String>, String> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path)).map_err(|e| format!("config file {path}: {e}"))?;
    let settings = parse(&text, &path)?;
    let mut out: Vec<String> = args[..2].to_vec();
    for (k, v) in settings {
        out.push(format!("--{k}"));
        out.push(v);
    }
    out.extend(args[2..].iter().cloned());
    Ok(out)
}
