use std::borrow::Cow;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Cursor};
use std::path::{Path, PathBuf};

use flate2::read::MultiGzDecoder;

use super::ScanError;

/// Target size of one shard handed to a worker. Shards are extended to the
/// next newline so that no line, and therefore no sentence, is split.
pub const SHARD_BYTES: usize = 256 * 1024;

enum Pending {
    Path(PathBuf),
    Reader(String, Box<dyn BufRead + Send>),
}

/// Sequential reader over one or more text sources yielding line-aligned
/// shards of raw bytes.
///
/// Sources are plain text files (one document per line), `.gz` files
/// (decompressed transparently), directories (every `.txt`/`.gz` file below,
/// in sorted path order) or arbitrary readers.
pub struct SentenceStream {
    pending: std::collections::VecDeque<Pending>,
    current: Option<(String, Box<dyn BufRead + Send>)>,
    bytes_read: u64,
    files: Vec<String>,
}

impl SentenceStream {
    /// Opens a file or directory. Fails early if the path does not exist.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, ScanError> {
        let mut s = Self::empty();
        s.add_path(path)?;
        Ok(s)
    }

    pub fn empty() -> Self {
        SentenceStream { pending: Default::default(), current: None, bytes_read: 0, files: Vec::new() }
    }

    pub fn from_reader(name: impl Into<String>, reader: impl BufRead + Send + 'static) -> Self {
        let mut s = Self::empty();
        s.pending.push_back(Pending::Reader(name.into(), Box::new(reader)));
        s
    }

    pub fn from_text(text: impl Into<String>) -> Self {
        Self::from_reader("<memory>", Cursor::new(text.into().into_bytes()))
    }

    /// Appends an arbitrary reader to the sources.
    pub fn push_reader(&mut self, name: impl Into<String>, reader: impl BufRead + Send + 'static) {
        self.pending.push_back(Pending::Reader(name.into(), Box::new(reader)));
    }

    /// Appends a file or directory to the sources.
    pub fn add_path(&mut self, path: impl AsRef<Path>) -> Result<(), ScanError> {
        let path = path.as_ref();
        let meta = std::fs::metadata(path).map_err(|source| ScanError::Io { path: path.display().to_string(), source })?;
        if meta.is_dir() {
            let mut files: Vec<PathBuf> = walkdir::WalkDir::new(path)
                .sort_by_file_name()
                .into_iter()
                .collect::<Result<Vec<_>, _>>()
                .map_err(|err| ScanError::Io { path: path.display().to_string(), source: err.into() })?
                .into_iter()
                .filter(|e| e.file_type().is_file() && is_corpus_file(e.path()))
                .map(|e| e.into_path())
                .collect();
            files.sort();
            self.pending.extend(files.into_iter().map(Pending::Path));
        } else {
            self.pending.push_back(Pending::Path(path.to_path_buf()));
        }
        Ok(())
    }

    pub fn bytes_read(&self) -> u64 {
        self.bytes_read
    }

    /// Names of the sources opened so far.
    pub fn files(&self) -> &[String] {
        &self.files
    }

    /// Next shard: whole lines from a single source, at least
    /// [`SHARD_BYTES`] long unless the source ended. `None` when exhausted.
    pub fn next_shard(&mut self) -> Result<Option<Vec<u8>>, ScanError> {
        loop {
            if self.current.is_none() {
                match self.pending.pop_front() {
                    None => return Ok(None),
                    Some(Pending::Path(p)) => {
                        let name = p.display().to_string();
                        let reader = open_file(&p).map_err(|source| ScanError::Io { path: name.clone(), source })?;
                        self.files.push(name.clone());
                        self.current = Some((name, reader));
                    }
                    Some(Pending::Reader(name, r)) => {
                        self.files.push(name.clone());
                        self.current = Some((name, r));
                    }
                }
            }
            let (name, reader) = self.current.as_mut().expect("current source");
            let mut shard = Vec::with_capacity(SHARD_BYTES + 4096);
            while shard.len() < SHARD_BYTES {
                let n = reader
                    .read_until(b'\n', &mut shard)
                    .map_err(|source| ScanError::Io { path: name.clone(), source })?;
                if n == 0 {
                    self.current = None;
                    break;
                }
            }
            if !shard.is_empty() {
                self.bytes_read += shard.len() as u64;
                return Ok(Some(shard));
            }
        }
    }
}

fn is_corpus_file(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("txt") | Some("gz"))
}

fn open_file(path: &Path) -> io::Result<Box<dyn BufRead + Send>> {
    let file = File::open(path)?;
    if path.extension().and_then(|e| e.to_str()) == Some("gz") {
        Ok(Box::new(BufReader::with_capacity(1 << 16, MultiGzDecoder::new(file))))
    } else {
        Ok(Box::new(BufReader::with_capacity(1 << 16, file)))
    }
}

/// Decodes UTF-8, replacing each invalid sequence with U+FFFD. Returns the
/// text and the number of replacements made.
pub fn decode_lossy(bytes: &[u8]) -> (Cow<'_, str>, u64) {
    if let Ok(s) = std::str::from_utf8(bytes) {
        return (Cow::Borrowed(s), 0);
    }
    let mut out = String::with_capacity(bytes.len() + 16);
    let mut replaced = 0;
    for chunk in bytes.utf8_chunks() {
        out.push_str(chunk.valid());
        if !chunk.invalid().is_empty() {
            out.push('\u{FFFD}');
            replaced += 1;
        }
    }
    (Cow::Owned(out), replaced)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn shards_are_line_aligned() {
        let line = "x".repeat(1000) + "\n";
        let text = line.repeat(700);
        let mut s = SentenceStream::from_text(text.clone());
        let mut total = Vec::new();
        let mut n = 0;
        while let Some(shard) = s.next_shard().unwrap() {
            assert!(shard.ends_with(b"\n"));
            total.extend(shard);
            n += 1;
        }
        assert!(n >= 2);
        assert_eq!(total, text.as_bytes());
        assert_eq!(s.bytes_read(), text.len() as u64);
    }

    #[test]
    fn directory_and_gzip() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("b.txt"), "second\n").unwrap();
        std::fs::write(dir.path().join("a.txt"), "first").unwrap();
        std::fs::write(dir.path().join("skip.json"), "{}").unwrap();
        let gz = File::create(dir.path().join("c.gz")).unwrap();
        let mut enc = flate2::write::GzEncoder::new(gz, flate2::Compression::default());
        enc.write_all(b"third\n").unwrap();
        enc.finish().unwrap();

        let mut s = SentenceStream::open(dir.path()).unwrap();
        let mut shards = Vec::new();
        while let Some(shard) = s.next_shard().unwrap() {
            shards.push(String::from_utf8(shard).unwrap());
        }
        assert_eq!(shards, vec!["first", "second\n", "third\n"]);
        assert_eq!(s.files().len(), 3);
    }

    #[test]
    fn missing_path() {
        assert!(matches!(SentenceStream::open("/no/such/corpus"), Err(ScanError::Io { .. })));
    }

    #[test]
    fn lossy_decoding_counts() {
        let (s, n) = decode_lossy(b"ok \xff\xfe fine \xc3");
        assert_eq!(n, 3);
        assert_eq!(s, "ok \u{FFFD}\u{FFFD} fine \u{FFFD}");
        let (s, n) = decode_lossy("héllo".as_bytes());
        assert_eq!((s.as_ref(), n), ("héllo", 0));
    }
}
