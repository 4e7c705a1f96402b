use std::io::Write;
use std::path::Path;

use crate::error::CliError;

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Runtime(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Writes to `path`, or to stdout when there is none.
pub fn emit(path: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_atomic(p, contents),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes())
                .map_err(|e| CliError::Runtime(format!("stdout: {e}")))
        }
    }
}

/// Appends sweep rows, keeping the header of an existing table.
pub fn append_table(path: &Path, header: &str, rows: &str) -> Result<(), CliError> {
    let existing = match std::fs::read_to_string(path) {
        Ok(s) => Some(s),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(CliError::Runtime(format!("{}: {e}", path.display()))),
    };
    let text = match existing {
        Some(old) if !old.is_empty() => {
            if old.lines().next() != Some(header) {
                return Err(CliError::Runtime(format!(
                    "{}: existing table has a different header",
                    path.display()
                )));
            }
            let mut s = old;
            if !s.ends_with('\n') {
                s.push('\n');
            }
            s + rows
        }
        _ => format!("{header}\n{rows}"),
    };
    write_atomic(path, &text)
}
