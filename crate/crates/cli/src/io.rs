//! Input and output plumbing. `-` stands for stdin or stdout.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::CliError;

pub fn is_stdio(path: &Path) -> bool {
    path.as_os_str() == "-"
}

pub fn open(path: &Path) -> Result<Box<dyn BufRead>, CliError> {
    if is_stdio(path) {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(Box::new(BufReader::new(f)))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let origin = if is_stdio(path) { Path::new("<stdin>") } else { path };
    Ok(annotrack_core::jsonl::read(open(path)?, origin)?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let reader = open(path)?;
    serde_json::from_reader(reader).map_err(|e| CliError::Data(e.into()))
}

/// Write through a temp file in the target directory, then rename over the
/// target, so readers never see a half-written file.
pub fn write_atomic<F>(path: &Path, body: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> Result<(), CliError>,
{
    if is_stdio(path) {
        let stdout = io::stdout();
        let mut w = BufWriter::new(stdout.lock());
        body(&mut w)?;
        return w.flush().map_err(|e| CliError::io("<stdout>", e));
    }
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| CliError::io(&dir, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w)?;
        w.flush().map_err(|e| CliError::io(path, e))?;
    }
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), CliError> {
    write_atomic(path, |w| Ok(annotrack_core::jsonl::write(w, items)?))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(|e| CliError::Data(e.into()))?;
        w.write_all(b"\n").map_err(|e| CliError::io(path, e))
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    write_atomic(path, |w| w.write_all(text.as_bytes()).map_err(|e| CliError::io(path, e)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.jsonl");
        write_jsonl(&p, &[serde_json::json!({"a": 1}), serde_json::json!({"a": 0.1})]).unwrap();
        let back: Vec<serde_json::Value> = read_jsonl(&p).unwrap();
        assert_eq!(back[1]["a"], 0.1);
        // failed body leaves the previous file intact
        let err = write_atomic(&p, |_| Err(CliError::Usage("stop".into())));
        assert!(err.is_err());
        assert_eq!(read_jsonl::<serde_json::Value>(&p).unwrap().len(), 2);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
