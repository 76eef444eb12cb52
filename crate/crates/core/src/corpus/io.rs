use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::de::DeserializeOwned;
use serde::Serialize;

use super::CorpusError;

const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

/// Opens a file for line reading, transparently decompressing gzip input.
fn open_maybe_gzip(path: &Path) -> Result<Box<dyn BufRead>, CorpusError> {
    let mut file = BufReader::new(File::open(path)?);
    let head = file.fill_buf()?;
    if head.starts_with(&GZIP_MAGIC) {
        Ok(Box::new(BufReader::new(MultiGzDecoder::new(file))))
    } else {
        Ok(Box::new(file))
    }
}

/// Parses one JSON value per non-blank line. Errors carry 1-based line numbers.
pub fn read_jsonl_from<T: DeserializeOwned, R: Read>(reader: R) -> Result<Vec<T>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|source| CorpusError::Json { line: i + 1, source })?;
        out.push(item);
    }
    Ok(out)
}

pub fn read_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>, CorpusError> {
    read_jsonl_from(open_maybe_gzip(path.as_ref())?)
}

/// Writes one JSON value per line; a `.gz` extension selects gzip output.
pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, items: &[T]) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let file = BufWriter::new(File::create(path)?);
    if path.extension().is_some_and(|e| e == "gz") {
        let mut enc = GzEncoder::new(file, Compression::default());
        write_lines(&mut enc, items)?;
        enc.finish()?.flush()?;
    } else {
        let mut file = file;
        write_lines(&mut file, items)?;
        file.flush()?;
    }
    Ok(())
}

fn write_lines<T: Serialize, W: Write>(w: &mut W, items: &[T]) -> Result<(), CorpusError> {
    for item in items {
        serde_json::to_writer(&mut *w, item).map_err(|source| CorpusError::Json { line: 0, source })?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_and_gzip_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let items = vec![serde_json::json!({"a": 1}), serde_json::json!({"b": [2, 3]})];
        for name in ["x.jsonl", "x.jsonl.gz"] {
            let path = dir.path().join(name);
            write_jsonl(&path, &items).unwrap();
            let back: Vec<serde_json::Value> = read_jsonl(&path).unwrap();
            assert_eq!(back, items);
        }
        let raw = std::fs::read(dir.path().join("x.jsonl.gz")).unwrap();
        assert!(raw.starts_with(&GZIP_MAGIC));
    }

    #[test]
    fn bad_line_is_reported() {
        let text = "{\"a\":1}\n\n{oops}\n";
        let err = read_jsonl_from::<serde_json::Value, _>(text.as_bytes()).unwrap_err();
        assert!(matches!(err, CorpusError::Json { line: 3, .. }));
    }
}
