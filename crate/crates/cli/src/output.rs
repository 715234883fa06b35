use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::CliError;

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// `#`-prefixed header: tool version, command and the full configuration.
pub fn metadata(command: &str, config: &RunConfig, extra: &[(String, String)]) -> String {
    let mut out = format!(
        "# zenoscope {}\n# command = {command}\n",
        env!("CARGO_PKG_VERSION")
    );
    for (k, v) in extra {
        out.push_str(&format!("# {k} = {v}\n"));
    }
    out.push_str("# --- config ---\n");
    for line in config.for_record().to_toml().lines() {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out
}

/// Reassembles the configuration embedded in a file written by [`csv_document`].
pub fn embedded_config(text: &str) -> Result<RunConfig, CliError> {
    let body: String = text
        .lines()
        .skip_while(|l| *l != "# --- config ---")
        .skip(1)
        .take_while(|l| l.starts_with('#'))
        .map(|l| {
            format!(
                "{}\n",
                l.strip_prefix("# ").unwrap_or(l.trim_start_matches('#'))
            )
        })
        .collect();
    RunConfig::from_toml(&body)
}

/// Header block followed by a CSV table.
pub fn csv_document(
    header: &str,
    columns: &[&str],
    rows: &[Vec<String>],
) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(columns).map_err(CliError::output)?;
    for r in rows {
        w.write_record(r).map_err(CliError::output)?;
    }
    let data = w
        .into_inner()
        .map_err(|e| CliError::output(e.into_error()))?;
    Ok(format!(
        "{header}{}",
        String::from_utf8(data).expect("CSV of ASCII fields")
    ))
}

/// Where a command's primary output goes.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Stdout,
    File(PathBuf),
}

impl Target {
    pub fn new(path: Option<&Path>) -> Self {
        match path {
            Some(p) if p.as_os_str() != "-" => Target::File(p.to_path_buf()),
            _ => Target::Stdout,
        }
    }

    /// `<stem>_<suffix>.<ext>` next to the file, if this is a file.
    pub fn sibling(&self, suffix: &str, ext: &str) -> Option<PathBuf> {
        let Target::File(p) = self else { return None };
        let stem = p
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Some(p.with_file_name(format!("{stem}_{suffix}.{ext}")))
    }

    pub fn write(&self, text: &str) -> Result<Option<PathBuf>, CliError> {
        match self {
            Target::Stdout => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes()).map_err(CliError::output)?;
                out.flush().map_err(CliError::output)?;
                Ok(None)
            }
            Target::File(p) => {
                write_file(p, text)?;
                Ok(Some(p.clone()))
            }
        }
    }
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(CliError::output)?;
    }
    std::fs::write(path, text)
        .map_err(|e| CliError::Output(format!("cannot write {}: {e}", path.display())))
}

/// Compact label of a coupling strength for file names: `1`, `2.5`.
pub fn coupling_label(g: f64) -> String {
    format!("G{g}")
}
