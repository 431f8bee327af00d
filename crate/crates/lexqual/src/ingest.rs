//! Corpus ingestion: manifests, page text, and tokenization.
//!
//! A corpus is described by a TSV manifest (`doc_id<TAB>path<TAB>year[<TAB>language_tag]`)
//! pointing at plain UTF-8 text files. Tokenization extracts maximal runs of
//! Unicode letters, keeping a hyphen only when it sits between letters, and
//! preserves the original case. Digits and punctuation are dropped unless
//! `keep_digits` is set.

use std::collections::HashSet;
use std::collections::VecDeque;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read manifest {path}: {source}")]
    ManifestIo { path: PathBuf, source: io::Error },
    #[error("manifest line {line}: {reason}")]
    Manifest { line: usize, reason: String },
    #[error("document {doc_id}: cannot read {path}: {source}")]
    DocumentIo {
        doc_id: String,
        path: PathBuf,
        source: io::Error,
    },
    #[error("document {doc_id}: invalid UTF-8 at byte offset {offset}")]
    InvalidUtf8 { doc_id: String, offset: usize },
    #[error("token dump {path} line {line}: not a valid surface form: {text:?}")]
    BadSurface {
        path: PathBuf,
        line: usize,
        text: String,
    },
    #[error("cannot read token dump {path}: {source}")]
    DumpIo { path: PathBuf, source: io::Error },
}

/// One manifest entry: a document on disk with its publication year.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentMeta {
    pub doc_id: String,
    pub path: PathBuf,
    pub year: i32,
    pub language_tag: Option<String>,
}

/// A single word occurrence, tagged with its source document and year.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenRecord {
    pub surface: String,
    pub doc_id: Arc<str>,
    pub year: i32,
}

/// Inclusive publication-year filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct YearRange {
    pub lo: i32,
    pub hi: i32,
}

impl YearRange {
    pub fn new(lo: i32, hi: i32) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, year: i32) -> bool {
        self.lo <= year && year <= self.hi
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TokenizerOptions {
    /// Treat decimal digits as token characters instead of separators.
    pub keep_digits: bool,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IngestOptions {
    pub tokenizer: TokenizerOptions,
    /// Skip unreadable documents (still surfacing the error) instead of
    /// stopping at the first failure.
    pub continue_on_error: bool,
}

fn is_token_char(c: char, opts: &TokenizerOptions) -> bool {
    c.is_alphabetic() || (opts.keep_digits && c.is_ascii_digit())
}

/// Splits text into surface tokens: maximal letter runs, with a `-` kept only
/// when flanked by token characters on both sides. Order and case preserved.
pub fn tokenize<'a>(text: &'a str, opts: &TokenizerOptions) -> Tokens<'a> {
    Tokens {
        text,
        pos: 0,
        opts: *opts,
    }
}

pub struct Tokens<'a> {
    text: &'a str,
    pos: usize,
    opts: TokenizerOptions,
}

impl<'a> Iterator for Tokens<'a> {
    type Item = &'a str;

    fn next(&mut self) -> Option<&'a str> {
        let rest = &self.text[self.pos..];
        let mut chars = rest.char_indices().peekable();

        // skip to the next token character
        let start = loop {
            let (i, c) = chars.next()?;
            if is_token_char(c, &self.opts) {
                break i;
            }
        };

        let mut end = self.text.len() - self.pos;
        while let Some(&(i, c)) = chars.peek() {
            if is_token_char(c, &self.opts) {
                chars.next();
                continue;
            }
            if c == '-' {
                // look past the hyphen: keep it only between token chars
                let mut ahead = chars.clone();
                ahead.next();
                if let Some(&(_, next)) = ahead.peek() {
                    if is_token_char(next, &self.opts) {
                        chars.next();
                        continue;
                    }
                }
            }
            end = i;
            break;
        }

        let token = &rest[start..end];
        self.pos += end;
        Some(token)
    }
}

/// True when `s` could have been emitted by [`tokenize`]: non-empty, only
/// token characters plus internal hyphens, no leading/trailing/doubled `-`.
pub fn surface_is_valid(s: &str, opts: &TokenizerOptions) -> bool {
    if s.is_empty() || s.starts_with('-') || s.ends_with('-') || s.contains("--") {
        return false;
    }
    s.chars().all(|c| c == '-' || is_token_char(c, opts))
}

/// Parses a manifest file. Lines starting with `#` and blank lines are
/// skipped; relative document paths are resolved against the manifest's
/// directory.
pub fn load_manifest(path: &Path) -> Result<Vec<DocumentMeta>, IngestError> {
    let data = fs::read_to_string(path).map_err(|source| IngestError::ManifestIo {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));

    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for (idx, raw) in data.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 && fields.len() != 4 {
            return Err(IngestError::Manifest {
                line: line_no,
                reason: format!("expected 3 or 4 tab-separated fields, got {}", fields.len()),
            });
        }
        let doc_id = fields[0].to_string();
        if doc_id.is_empty() {
            return Err(IngestError::Manifest {
                line: line_no,
                reason: "empty doc_id".into(),
            });
        }
        if !seen.insert(doc_id.clone()) {
            return Err(IngestError::Manifest {
                line: line_no,
                reason: format!("duplicate doc_id {doc_id:?}"),
            });
        }
        if fields[1].is_empty() {
            return Err(IngestError::Manifest {
                line: line_no,
                reason: "empty path".into(),
            });
        }
        let year: i32 = fields[2].parse().map_err(|_| IngestError::Manifest {
            line: line_no,
            reason: format!("year is not an integer: {:?}", fields[2]),
        })?;
        if !(1000..=2100).contains(&year) {
            return Err(IngestError::Manifest {
                line: line_no,
                reason: format!("year {year} outside [1000, 2100]"),
            });
        }
        let raw_path = Path::new(fields[1]);
        let path = if raw_path.is_absolute() {
            raw_path.to_path_buf()
        } else {
            base.join(raw_path)
        };
        docs.push(DocumentMeta {
            doc_id,
            path,
            year,
            language_tag: fields.get(3).map(|s| s.to_string()),
        });
    }
    Ok(docs)
}

/// Reads a document as UTF-8, reporting the byte offset of the first invalid
/// sequence if decoding fails.
pub fn read_document(meta: &DocumentMeta) -> Result<String, IngestError> {
    let bytes = fs::read(&meta.path).map_err(|source| IngestError::DocumentIo {
        doc_id: meta.doc_id.clone(),
        path: meta.path.clone(),
        source,
    })?;
    String::from_utf8(bytes).map_err(|e| IngestError::InvalidUtf8 {
        doc_id: meta.doc_id.clone(),
        offset: e.utf8_error().valid_up_to(),
    })
}

/// Reads and tokenizes one document into year-tagged records.
pub fn tokenize_document(
    meta: &DocumentMeta,
    opts: &TokenizerOptions,
) -> Result<Vec<TokenRecord>, IngestError> {
    let text = read_document(meta)?;
    let doc_id: Arc<str> = Arc::from(meta.doc_id.as_str());
    Ok(tokenize(&text, opts)
        .map(|surface| TokenRecord {
            surface: surface.to_string(),
            doc_id: Arc::clone(&doc_id),
            year: meta.year,
        })
        .collect())
}

/// Streams `TokenRecord`s for every manifest document whose year falls in
/// `years`, in manifest order. Document read failures surface as `Err` items;
/// without `continue_on_error` the stream stops after the first one.
pub fn ingest_corpus<'a>(
    docs: &'a [DocumentMeta],
    years: Option<YearRange>,
    opts: &'a IngestOptions,
) -> CorpusTokens<'a> {
    CorpusTokens {
        docs,
        years,
        opts,
        next_doc: 0,
        buffer: VecDeque::new(),
        stopped: false,
    }
}

pub struct CorpusTokens<'a> {
    docs: &'a [DocumentMeta],
    years: Option<YearRange>,
    opts: &'a IngestOptions,
    next_doc: usize,
    buffer: VecDeque<TokenRecord>,
    stopped: bool,
}

impl Iterator for CorpusTokens<'_> {
    type Item = Result<TokenRecord, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if self.stopped {
                return None;
            }
            if let Some(tok) = self.buffer.pop_front() {
                return Some(Ok(tok));
            }
            let meta = self.docs.get(self.next_doc)?;
            self.next_doc += 1;
            if let Some(range) = self.years {
                if !range.contains(meta.year) {
                    continue;
                }
            }
            match tokenize_document(meta, &self.opts.tokenizer) {
                Ok(tokens) => self.buffer.extend(tokens),
                Err(e) => {
                    if !self.opts.continue_on_error {
                        self.stopped = true;
                    }
                    return Some(Err(e));
                }
            }
        }
    }
}

/// Writes a token dump: one surface form per line.
pub fn write_token_dump<'a, W: Write>(
    mut w: W,
    tokens: impl IntoIterator<Item = &'a TokenRecord>,
) -> io::Result<()> {
    for tok in tokens {
        writeln!(w, "{}", tok.surface)?;
    }
    Ok(())
}

/// Reads a token dump back into records, all tagged with the given document
/// id and year. Every line must be a valid surface form.
pub fn read_token_dump(
    path: &Path,
    doc_id: &str,
    year: i32,
    opts: &TokenizerOptions,
) -> Result<Vec<TokenRecord>, IngestError> {
    let file = fs::File::open(path).map_err(|source| IngestError::DumpIo {
        path: path.to_path_buf(),
        source,
    })?;
    let doc: Arc<str> = Arc::from(doc_id);
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| IngestError::DumpIo {
            path: path.to_path_buf(),
            source,
        })?;
        let surface = line.trim_end_matches('\r');
        if !surface_is_valid(surface, opts) {
            return Err(IngestError::BadSurface {
                path: path.to_path_buf(),
                line: idx + 1,
                text: surface.to_string(),
            });
        }
        out.push(TokenRecord {
            surface: surface.to_string(),
            doc_id: Arc::clone(&doc),
            year,
        });
    }
    Ok(out)
}
