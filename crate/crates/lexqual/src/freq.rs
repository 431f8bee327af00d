//! Frequency tables, frequency spectra, and band slicing.
//!
//! Counting is exact integer arithmetic throughout. Tables hold a canonical
//! ordering (count descending, then surface ascending) so that top-K cutoffs,
//! file output, and report rows are deterministic. Counting spills sorted
//! runs to temporary files once the in-memory map passes a threshold, and
//! merges the runs back deterministically, so corpora much larger than RAM
//! still count on a desk machine.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use tempfile::TempDir;
use thiserror::Error;

use crate::ingest::{
    tokenize_document, DocumentMeta, IngestError, IngestOptions, TokenRecord, YearRange,
};

/// Environment variable overriding where spill runs are written.
pub const TMPDIR_ENV: &str = "LEXQUAL_TMPDIR";

#[derive(Debug, Error)]
pub enum FreqError {
    #[error("i/o on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path} line {line}: {reason}")]
    Format {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("invalid band selector: {0}")]
    InvalidBand(String),
    #[error("cannot compute length statistics of an empty slice")]
    EmptySlice,
    #[error("verdict slice has {got} entries, band has {expected}")]
    VerdictLength { expected: usize, got: usize },
    #[error("surface contains tab or newline: {0:?}")]
    UnwritableSurface(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

/// Exact per-type counts over a token stream.
///
/// `entries` is kept in canonical order: count descending, surface ascending.
/// The invariants `n = Σ counts` and `v = entries.len()` hold by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyTable {
    entries: Vec<(String, u64)>,
    n: u64,
    label: Option<String>,
}

fn canonical_sort(entries: &mut [(String, u64)]) {
    entries.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
}

impl FrequencyTable {
    pub fn from_counts(counts: HashMap<String, u64>, label: Option<String>) -> Self {
        let mut entries: Vec<(String, u64)> = counts.into_iter().filter(|e| e.1 > 0).collect();
        canonical_sort(&mut entries);
        let n = entries.iter().map(|e| e.1).sum();
        Self { entries, n, label }
    }

    pub fn empty() -> Self {
        Self {
            entries: Vec::new(),
            n: 0,
            label: None,
        }
    }

    /// Total tokens.
    pub fn n(&self) -> u64 {
        self.n
    }

    /// Total distinct types.
    pub fn v(&self) -> u64 {
        self.entries.len() as u64
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn set_label(&mut self, label: Option<String>) {
        self.label = label;
    }

    /// Entries in canonical order.
    pub fn entries(&self) -> &[(String, u64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Writes the TSV form: a `#N=<n> V=<v>` header, then
    /// `surface<TAB>count` rows in canonical order.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<(), FreqError> {
        let io_err = |source| FreqError::Io {
            path: PathBuf::from("<writer>"),
            source,
        };
        writeln!(w, "#N={} V={}", self.n, self.v()).map_err(io_err)?;
        for (surface, count) in &self.entries {
            if surface.contains(['\t', '\n']) {
                return Err(FreqError::UnwritableSurface(surface.clone()));
            }
            writeln!(w, "{surface}\t{count}").map_err(io_err)?;
        }
        Ok(())
    }

    pub fn write_tsv_file(&self, path: &Path) -> Result<(), FreqError> {
        let file = fs::File::create(path).map_err(|source| FreqError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.write_tsv(BufWriter::new(file))
    }

    pub fn read_tsv_file(path: &Path) -> Result<Self, FreqError> {
        let file = fs::File::open(path).map_err(|source| FreqError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut lines = BufReader::new(file).lines().enumerate();
        let io_err = |source| FreqError::Io {
            path: path.to_path_buf(),
            source,
        };
        let fmt_err = |line: usize, reason: String| FreqError::Format {
            path: path.to_path_buf(),
            line,
            reason,
        };

        let header = match lines.next() {
            Some((_, line)) => line.map_err(io_err)?,
            None => return Err(fmt_err(1, "missing #N= V= header".into())),
        };
        let (want_n, want_v) =
            parse_table_header(header.trim_end_matches('\r')).ok_or_else(|| {
                fmt_err(
                    1,
                    format!("bad header {header:?}, expected #N=<int> V=<int>"),
                )
            })?;

        let mut entries = Vec::new();
        let mut n: u64 = 0;
        for (idx, line) in lines {
            let line = line.map_err(io_err)?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let (surface, count) = line
                .split_once('\t')
                .ok_or_else(|| fmt_err(idx + 1, "expected surface<TAB>count".into()))?;
            let count: u64 = count
                .parse()
                .map_err(|_| fmt_err(idx + 1, format!("bad count {count:?}")))?;
            if count == 0 || surface.is_empty() {
                return Err(fmt_err(idx + 1, "empty surface or zero count".into()));
            }
            n += count;
            entries.push((surface.to_string(), count));
        }
        if n != want_n || entries.len() as u64 != want_v {
            return Err(fmt_err(
                1,
                format!(
                    "header says N={want_n} V={want_v} but rows sum to N={n} V={}",
                    entries.len()
                ),
            ));
        }
        canonical_sort(&mut entries);
        Ok(Self {
            entries,
            n,
            label: None,
        })
    }
}

fn parse_table_header(line: &str) -> Option<(u64, u64)> {
    let rest = line.strip_prefix("#N=")?;
    let (n, v) = rest.split_once(" V=")?;
    Some((n.trim().parse().ok()?, v.trim().parse().ok()?))
}

/// Counting configuration. `spill_threshold` caps the distinct types held in
/// memory before a sorted run is flushed to `tmpdir` (or `LEXQUAL_TMPDIR`).
#[derive(Debug, Clone)]
pub struct CountOptions {
    pub spill_threshold: usize,
    pub fold_case: bool,
    pub tmpdir: Option<PathBuf>,
    pub label: Option<String>,
}

impl Default for CountOptions {
    fn default() -> Self {
        Self {
            spill_threshold: 4_000_000,
            fold_case: false,
            tmpdir: std::env::var_os(TMPDIR_ENV).map(PathBuf::from),
            label: None,
        }
    }
}

/// Incremental counter with spill-to-disk. Feed it surfaces or whole tables;
/// `finish` merges any spilled runs back into one table.
pub struct TokenCounter {
    map: HashMap<String, u64>,
    n: u64,
    runs: Vec<PathBuf>,
    tmp: Option<TempDir>,
    opts: CountOptions,
}

impl TokenCounter {
    pub fn new(opts: CountOptions) -> Self {
        Self {
            map: HashMap::new(),
            n: 0,
            runs: Vec::new(),
            tmp: None,
            opts,
        }
    }

    pub fn add(&mut self, surface: &str) -> Result<(), FreqError> {
        self.add_count_owned(
            if self.opts.fold_case {
                surface.to_lowercase()
            } else {
                surface.to_string()
            },
            1,
        )
    }

    pub fn add_record(&mut self, record: &TokenRecord) -> Result<(), FreqError> {
        self.add(&record.surface)
    }

    fn add_count_owned(&mut self, surface: String, count: u64) -> Result<(), FreqError> {
        *self.map.entry(surface).or_insert(0) += count;
        self.n += count;
        if self.map.len() >= self.opts.spill_threshold {
            self.spill()?;
        }
        Ok(())
    }

    /// Adds a whole table into the counter (case folding is not re-applied;
    /// tables are assumed to be counted under the same policy).
    pub fn absorb(&mut self, table: FrequencyTable) -> Result<(), FreqError> {
        for (surface, count) in table.entries {
            *self.map.entry(surface).or_insert(0) += count;
            self.n += count;
        }
        if self.map.len() >= self.opts.spill_threshold {
            self.spill()?;
        }
        Ok(())
    }

    fn spill_dir(&mut self) -> Result<&Path, FreqError> {
        if self.tmp.is_none() {
            let tmp = match &self.opts.tmpdir {
                Some(dir) => TempDir::new_in(dir),
                None => TempDir::new(),
            }
            .map_err(|source| FreqError::Io {
                path: self.opts.tmpdir.clone().unwrap_or_else(std::env::temp_dir),
                source,
            })?;
            self.tmp = Some(tmp);
        }
        Ok(self.tmp.as_ref().unwrap().path())
    }

    fn spill(&mut self) -> Result<(), FreqError> {
        if self.map.is_empty() {
            return Ok(());
        }
        let run_no = self.runs.len();
        let path = self.spill_dir()?.join(format!("run-{run_no:06}.tsv"));
        let io_err = |source| FreqError::Io {
            path: path.clone(),
            source,
        };
        let mut entries: Vec<(String, u64)> = self.map.drain().collect();
        entries.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let mut w = BufWriter::new(fs::File::create(&path).map_err(io_err)?);
        for (surface, count) in &entries {
            if surface.contains(['\t', '\n']) {
                return Err(FreqError::UnwritableSurface(surface.clone()));
            }
            writeln!(w, "{surface}\t{count}").map_err(io_err)?;
        }
        w.flush().map_err(io_err)?;
        self.runs.push(path);
        Ok(())
    }

    pub fn finish(mut self) -> Result<FrequencyTable, FreqError> {
        let label = self.opts.label.clone();
        if self.runs.is_empty() {
            let mut entries: Vec<(String, u64)> = self.map.drain().collect();
            canonical_sort(&mut entries);
            debug_assert_eq!(entries.iter().map(|e| e.1).sum::<u64>(), self.n);
            return Ok(FrequencyTable {
                entries,
                n: self.n,
                label,
            });
        }
        self.spill()?;
        let mut entries = merge_runs(&self.runs)?;
        canonical_sort(&mut entries);
        let merged_n: u64 = entries.iter().map(|e| e.1).sum();
        debug_assert_eq!(merged_n, self.n);
        Ok(FrequencyTable {
            entries,
            n: merged_n,
            label,
        })
    }
}

struct RunCursor {
    reader: BufReader<fs::File>,
    path: PathBuf,
    line: usize,
}

impl RunCursor {
    fn next(&mut self) -> Result<Option<(String, u64)>, FreqError> {
        let mut buf = String::new();
        let read = self
            .reader
            .read_line(&mut buf)
            .map_err(|source| FreqError::Io {
                path: self.path.clone(),
                source,
            })?;
        if read == 0 {
            return Ok(None);
        }
        self.line += 1;
        let trimmed = buf.trim_end_matches('\n');
        let (surface, count) = trimmed.split_once('\t').ok_or_else(|| FreqError::Format {
            path: self.path.clone(),
            line: self.line,
            reason: "bad spill row".into(),
        })?;
        let count = count.parse().map_err(|_| FreqError::Format {
            path: self.path.clone(),
            line: self.line,
            reason: "bad spill count".into(),
        })?;
        Ok(Some((surface.to_string(), count)))
    }
}

struct HeapItem {
    surface: String,
    count: u64,
    run: usize,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.surface == other.surface && self.run == other.run
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    // reversed so the BinaryHeap pops the smallest surface first
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .surface
            .cmp(&self.surface)
            .then_with(|| other.run.cmp(&self.run))
    }
}

fn merge_runs(runs: &[PathBuf]) -> Result<Vec<(String, u64)>, FreqError> {
    let mut cursors: Vec<RunCursor> = Vec::with_capacity(runs.len());
    for path in runs {
        let file = fs::File::open(path).map_err(|source| FreqError::Io {
            path: path.clone(),
            source,
        })?;
        cursors.push(RunCursor {
            reader: BufReader::new(file),
            path: path.clone(),
            line: 0,
        });
    }

    let mut heap = BinaryHeap::new();
    for (run, cursor) in cursors.iter_mut().enumerate() {
        if let Some((surface, count)) = cursor.next()? {
            heap.push(HeapItem {
                surface,
                count,
                run,
            });
        }
    }

    let mut out: Vec<(String, u64)> = Vec::new();
    while let Some(item) = heap.pop() {
        if let Some((surface, count)) = cursors[item.run].next()? {
            heap.push(HeapItem {
                surface,
                count,
                run: item.run,
            });
        }
        match out.last_mut() {
            Some(last) if last.0 == item.surface => last.1 += item.count,
            _ => out.push((item.surface, item.count)),
        }
    }
    Ok(out)
}

/// Counts a token stream into a table.
pub fn count_tokens(
    tokens: impl IntoIterator<Item = TokenRecord>,
    opts: CountOptions,
) -> Result<FrequencyTable, FreqError> {
    let mut counter = TokenCounter::new(opts);
    for token in tokens {
        counter.add(&token.surface)?;
    }
    counter.finish()
}

/// Merges shard tables into one. The merge is a commutative, associative
/// reduction, so any sharding of the input yields the identical table.
pub fn merge_tables(
    tables: impl IntoIterator<Item = FrequencyTable>,
    opts: CountOptions,
) -> Result<FrequencyTable, FreqError> {
    let mut counter = TokenCounter::new(opts);
    for table in tables {
        counter.absorb(table)?;
    }
    counter.finish()
}

/// Tokenizes and counts the manifest documents in `years`, in parallel over
/// documents, merging per-document tables in manifest order. With
/// `continue_on_error` set, unreadable documents are skipped and their errors
/// returned alongside the table.
pub fn count_corpus(
    docs: &[DocumentMeta],
    years: Option<YearRange>,
    ingest_opts: &IngestOptions,
    count_opts: CountOptions,
) -> Result<(FrequencyTable, Vec<IngestError>), FreqError> {
    let tables = count_corpus_by_decade(docs, years, ingest_opts, &count_opts)?;
    let mut counter = TokenCounter::new(count_opts);
    for (_, table) in tables.0 {
        counter.absorb(table)?;
    }
    Ok((counter.finish()?, tables.1))
}

/// Like [`count_corpus`] but keeps one table per publication decade
/// (`floor(year/10)*10`), so decade reports need no second ingest pass.
pub fn count_corpus_by_decade(
    docs: &[DocumentMeta],
    years: Option<YearRange>,
    ingest_opts: &IngestOptions,
    count_opts: &CountOptions,
) -> Result<(BTreeMap<i32, FrequencyTable>, Vec<IngestError>), FreqError> {
    let selected: Vec<&DocumentMeta> = docs
        .iter()
        .filter(|d| years.is_none_or(|r| r.contains(d.year)))
        .collect();

    // tokenize and pre-count per document in parallel; the reduction below
    // runs in manifest order so results do not depend on thread count
    let per_doc: Vec<Result<(i32, FrequencyTable), IngestError>> = selected
        .par_iter()
        .map(|meta| {
            let tokens = tokenize_document(meta, &ingest_opts.tokenizer)?;
            let mut counts: HashMap<String, u64> = HashMap::new();
            for tok in tokens {
                let key = if count_opts.fold_case {
                    tok.surface.to_lowercase()
                } else {
                    tok.surface
                };
                *counts.entry(key).or_insert(0) += 1;
            }
            Ok((
                decade_of(meta.year),
                FrequencyTable::from_counts(counts, None),
            ))
        })
        .collect();

    let mut counters: BTreeMap<i32, TokenCounter> = BTreeMap::new();
    let mut skipped = Vec::new();
    for result in per_doc {
        match result {
            Ok((decade, table)) => {
                counters
                    .entry(decade)
                    .or_insert_with(|| {
                        TokenCounter::new(CountOptions {
                            label: Some(decade.to_string()),
                            ..count_opts.clone()
                        })
                    })
                    .absorb(table)?;
            }
            Err(e) => {
                if ingest_opts.continue_on_error {
                    skipped.push(e);
                } else {
                    return Err(e.into());
                }
            }
        }
    }

    let mut tables = BTreeMap::new();
    for (decade, counter) in counters {
        tables.insert(decade, counter.finish()?);
    }
    Ok((tables, skipped))
}

pub fn decade_of(year: i32) -> i32 {
    year.div_euclid(10) * 10
}

/// The number of types occurring exactly `m` times, for every `m` present.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FrequencySpectrum {
    classes: BTreeMap<u64, u64>,
}

impl FrequencySpectrum {
    /// V(m, N) — zero for absent classes.
    pub fn class(&self, m: u64) -> u64 {
        self.classes.get(&m).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.classes.iter().map(|(&m, &v)| (m, v))
    }

    pub fn total_types(&self) -> u64 {
        self.classes.values().sum()
    }

    pub fn total_tokens(&self) -> u64 {
        self.classes.iter().map(|(&m, &v)| m * v).sum()
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (m, v) in self.iter() {
            writeln!(w, "{m}\t{v}")?;
        }
        Ok(())
    }

    pub fn write_tsv_file(&self, path: &Path) -> Result<(), FreqError> {
        let file = fs::File::create(path).map_err(|source| FreqError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut w = BufWriter::new(file);
        self.write_tsv(&mut w).map_err(|source| FreqError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn read_tsv_file(path: &Path) -> Result<Self, FreqError> {
        let file = fs::File::open(path).map_err(|source| FreqError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut classes = BTreeMap::new();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|source| FreqError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let err = |reason: &str| FreqError::Format {
                path: path.to_path_buf(),
                line: idx + 1,
                reason: reason.into(),
            };
            let (m, v) = line
                .split_once('\t')
                .ok_or_else(|| err("expected m<TAB>V_m"))?;
            let m: u64 = m.parse().map_err(|_| err("bad m"))?;
            let v: u64 = v.parse().map_err(|_| err("bad V_m"))?;
            if classes.insert(m, v).is_some() {
                return Err(err("duplicate m"));
            }
        }
        Ok(Self { classes })
    }
}

/// Computes V(m, N) for every count value in the table.
///
/// The identities `Σ_m V(m,N) = V` and `Σ_m m·V(m,N) = N` hold exactly.
pub fn spectrum(table: &FrequencyTable) -> FrequencySpectrum {
    let mut classes = BTreeMap::new();
    for (_, count) in table.entries() {
        *classes.entry(*count).or_insert(0) += 1;
    }
    FrequencySpectrum { classes }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandSelector {
    /// The K most frequent types; ties at the cutoff resolve lexicographically.
    TopK(usize),
    /// All types occurring exactly m times.
    ClassM(u64),
}

/// A contiguous view into a table's canonical ordering.
#[derive(Debug, Clone)]
pub struct BandSlice<'t> {
    pub selector: BandSelector,
    types: &'t [(String, u64)],
    /// index of the first slice element within the table's canonical order
    start: usize,
    token_mass: u64,
    table_n: u64,
}

impl<'t> BandSlice<'t> {
    pub fn types(&self) -> &'t [(String, u64)] {
        self.types
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    /// Offset of this slice inside the table's canonical entry order, for
    /// joining with per-type verdicts.
    pub fn table_offset(&self) -> usize {
        self.start
    }

    pub fn token_mass(&self) -> u64 {
        self.token_mass
    }

    pub fn coverage(&self) -> f64 {
        if self.table_n == 0 {
            0.0
        } else {
            self.token_mass as f64 / self.table_n as f64
        }
    }
}

/// Slices a table into a top-K band or an exact-frequency class.
pub fn select_band<'t>(
    table: &'t FrequencyTable,
    selector: BandSelector,
) -> Result<BandSlice<'t>, FreqError> {
    let entries = table.entries();
    let (start, end) = match selector {
        BandSelector::TopK(0) => {
            return Err(FreqError::InvalidBand("top-K requires K >= 1".into()))
        }
        BandSelector::TopK(k) => (0, k.min(entries.len())),
        BandSelector::ClassM(m) => {
            // canonical order is count-descending, so a class is contiguous
            let start = entries.partition_point(|e| e.1 > m);
            let end = entries.partition_point(|e| e.1 >= m);
            (start, end)
        }
    };
    let types = &entries[start..end];
    Ok(BandSlice {
        selector,
        types,
        start,
        token_mass: types.iter().map(|e| e.1).sum(),
        table_n: table.n(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LengthStats {
    /// Mean surface length in Unicode scalar values, unweighted by count.
    pub mean_len: f64,
    pub mean_recognized: Option<f64>,
    pub mean_unrecognized: Option<f64>,
}

/// Mean type length over a slice; with `recognized` supplied (aligned to the
/// slice), also per-verdict means.
pub fn length_stats(
    slice: &BandSlice<'_>,
    recognized: Option<&[bool]>,
) -> Result<LengthStats, FreqError> {
    if slice.is_empty() {
        return Err(FreqError::EmptySlice);
    }
    if let Some(flags) = recognized {
        if flags.len() != slice.len() {
            return Err(FreqError::VerdictLength {
                expected: slice.len(),
                got: flags.len(),
            });
        }
    }

    let mut total = 0u64;
    let mut rec = (0u64, 0u64); // (chars, types)
    let mut unrec = (0u64, 0u64);
    for (i, (surface, _)) in slice.types().iter().enumerate() {
        let len = surface.chars().count() as u64;
        total += len;
        if let Some(flags) = recognized {
            let bucket = if flags[i] { &mut rec } else { &mut unrec };
            bucket.0 += len;
            bucket.1 += 1;
        }
    }
    let mean = |chars: u64, types: u64| {
        if types == 0 {
            None
        } else {
            Some(chars as f64 / types as f64)
        }
    };
    Ok(LengthStats {
        mean_len: total as f64 / slice.len() as f64,
        mean_recognized: recognized.and(mean(rec.0, rec.1)),
        mean_unrecognized: recognized.and(mean(unrec.0, unrec.1)),
    })
}
