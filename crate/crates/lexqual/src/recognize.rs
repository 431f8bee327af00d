//! Word recognition: decides per type whether a recognizer "knows" the word.
//!
//! The chain tries stages in a fixed order — exact lexicon lookup, a
//! lowercase retry for initial-uppercase words, suffix-strip rules, then a
//! w→v normalization retry that re-enters the earlier stages — and records
//! which stage fired. An external analyzer can be plugged in behind a line
//! protocol; it is consulted last, in batches, for words the local stages
//! missed.

pub mod adapter;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::fingerprint::Fnv1a;
use crate::freq::FrequencyTable;
use adapter::{AdapterConfig, AdapterError};

#[derive(Debug, Error)]
pub enum RecognizeError {
    #[error("cannot read lexicon {path}: {source}")]
    LexiconIo { path: PathBuf, source: io::Error },
    #[error("lexicon {path} line {line}: {reason}")]
    LexiconEntry {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("bad lexicon entry {entry:?}: {reason}")]
    BadEntry { entry: String, reason: String },
    #[error("cannot read affix rules {path}: {source}")]
    AffixIo { path: PathBuf, source: io::Error },
    #[error("affix rule {at}: {reason}")]
    AffixRule { at: String, reason: String },
    #[error("i/o on {path}: {source}")]
    StatsIo { path: PathBuf, source: io::Error },
    #[error("{path} line {line}: {reason}")]
    StatsFormat {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error(transparent)]
    Adapter(#[from] AdapterError),
}

/// A plain set of known surface forms standing in for an analyzer lexicon.
#[derive(Debug, Clone)]
pub struct Lexicon {
    forms: HashSet<String>,
    source: String,
    fingerprint: u64,
}

impl Lexicon {
    pub fn new(
        forms: impl IntoIterator<Item = String>,
        source: &str,
    ) -> Result<Self, RecognizeError> {
        let mut set = HashSet::new();
        for form in forms {
            if form.is_empty() {
                return Err(RecognizeError::BadEntry {
                    entry: form,
                    reason: "empty form".into(),
                });
            }
            if form.chars().any(char::is_whitespace) {
                return Err(RecognizeError::BadEntry {
                    entry: form,
                    reason: "contains whitespace".into(),
                });
            }
            set.insert(form);
        }
        let fingerprint = Self::fingerprint_of(&set, source);
        Ok(Self {
            forms: set,
            source: source.to_string(),
            fingerprint,
        })
    }

    /// Loads one surface form per line; `#` comments and blank lines skipped.
    pub fn from_file(path: &Path) -> Result<Self, RecognizeError> {
        let file = fs::File::open(path).map_err(|source| RecognizeError::LexiconIo {
            path: path.to_path_buf(),
            source,
        })?;
        let mut forms = HashSet::new();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|source| RecognizeError::LexiconIo {
                path: path.to_path_buf(),
                source,
            })?;
            let entry = line.trim_end_matches('\r');
            if entry.is_empty() || entry.starts_with('#') {
                continue;
            }
            if entry.chars().any(char::is_whitespace) {
                return Err(RecognizeError::LexiconEntry {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    reason: format!("entry contains whitespace: {entry:?}"),
                });
            }
            forms.insert(entry.to_string());
        }
        let source = path.display().to_string();
        let fingerprint = Self::fingerprint_of(&forms, &source);
        Ok(Self {
            forms,
            source,
            fingerprint,
        })
    }

    fn fingerprint_of(forms: &HashSet<String>, source: &str) -> u64 {
        let mut sorted: Vec<&String> = forms.iter().collect();
        sorted.sort();
        let mut h = Fnv1a::new();
        h.update_str(source);
        h.update_u64(forms.len() as u64);
        for form in sorted {
            h.update_str(form);
        }
        h.finish()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.forms.contains(word)
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

/// One suffix replacement; an empty `add` plainly strips the suffix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffixRule {
    pub strip: String,
    pub add: String,
}

/// Ordered suffix rules, each applied at most `max_applications` times in
/// sequence, with every intermediate checked by exact lookup.
#[derive(Debug, Clone)]
pub struct AffixRuleSet {
    rules: Vec<AffixRule>,
    max_applications: usize,
}

impl AffixRuleSet {
    pub fn new(rules: Vec<AffixRule>, max_applications: usize) -> Result<Self, RecognizeError> {
        if max_applications == 0 {
            return Err(RecognizeError::AffixRule {
                at: "<config>".into(),
                reason: "max_applications must be >= 1".into(),
            });
        }
        for (i, rule) in rules.iter().enumerate() {
            if rule.strip.is_empty() {
                return Err(RecognizeError::AffixRule {
                    at: format!("#{}", i + 1),
                    reason: "empty strip suffix".into(),
                });
            }
            if rule.strip == rule.add {
                return Err(RecognizeError::AffixRule {
                    at: format!("#{}", i + 1),
                    reason: "rule maps a string to itself".into(),
                });
            }
        }
        Ok(Self {
            rules,
            max_applications,
        })
    }

    /// Loads TSV rules `strip<TAB>add`, applied in file order.
    pub fn from_file(path: &Path, max_applications: usize) -> Result<Self, RecognizeError> {
        let data = fs::read_to_string(path).map_err(|source| RecognizeError::AffixIo {
            path: path.to_path_buf(),
            source,
        })?;
        let mut rules = Vec::new();
        for (idx, raw) in data.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (strip, add) = line
                .split_once('\t')
                .ok_or_else(|| RecognizeError::AffixRule {
                    at: format!("{} line {}", path.display(), idx + 1),
                    reason: "expected strip<TAB>add".into(),
                })?;
            rules.push(AffixRule {
                strip: strip.to_string(),
                add: add.to_string(),
            });
        }
        Self::new(rules, max_applications)
    }

    pub fn rules(&self) -> &[AffixRule] {
        &self.rules
    }

    pub fn max_applications(&self) -> usize {
        self.max_applications
    }
}

/// Which chain stage recognized a word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Exact,
    CaseVariant,
    Affix,
    WvNormalized,
    External,
    None,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Exact,
        Stage::CaseVariant,
        Stage::Affix,
        Stage::WvNormalized,
        Stage::External,
        Stage::None,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::Exact => "exact",
            Stage::CaseVariant => "case_variant",
            Stage::Affix => "affix",
            Stage::WvNormalized => "wv_normalized",
            Stage::External => "external",
            Stage::None => "none",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Stage::ALL
            .iter()
            .copied()
            .find(|stage| stage.as_str() == s)
            .ok_or(())
    }
}

/// Per-type recognition outcome. `stage == None` iff unrecognized;
/// `normalized_form` is present iff the w→v retry fired.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub recognized: bool,
    pub stage: Stage,
    pub normalized_form: Option<String>,
}

impl Verdict {
    pub fn hit(stage: Stage) -> Self {
        debug_assert!(stage != Stage::None && stage != Stage::WvNormalized);
        Self {
            recognized: true,
            stage,
            normalized_form: None,
        }
    }

    pub fn wv(normalized: String) -> Self {
        Self {
            recognized: true,
            stage: Stage::WvNormalized,
            normalized_form: Some(normalized),
        }
    }

    pub fn miss() -> Self {
        Self {
            recognized: false,
            stage: Stage::None,
            normalized_form: None,
        }
    }
}

/// Replaces 19th-century `w`/`W` with modern `v`/`V`. Idempotent; all other
/// characters and the length are unchanged.
pub fn normalize_wv(word: &str) -> String {
    word.chars()
        .map(|c| match c {
            'w' => 'v',
            'W' => 'V',
            c => c,
        })
        .collect()
}

fn initial_uppercase_fold(word: &str) -> Option<String> {
    let first = word.chars().next()?;
    if !first.is_uppercase() {
        return None;
    }
    let lower = word.to_lowercase();
    (lower != word).then_some(lower)
}

/// The configured recognition chain. Stages run in a fixed order and the
/// first hit wins; recognition of a word is pure and deterministic.
#[derive(Debug, Clone)]
pub struct RecognizerChain {
    lexicon: Lexicon,
    affixes: Option<AffixRuleSet>,
    wv_enabled: bool,
    adapter: Option<AdapterConfig>,
}

impl RecognizerChain {
    pub fn new(lexicon: Lexicon) -> Self {
        Self {
            lexicon,
            affixes: None,
            wv_enabled: false,
            adapter: None,
        }
    }

    pub fn with_affixes(mut self, affixes: AffixRuleSet) -> Self {
        self.affixes = Some(affixes);
        self
    }

    pub fn with_wv(mut self, enabled: bool) -> Self {
        self.wv_enabled = enabled;
        self
    }

    pub fn with_adapter(mut self, adapter: AdapterConfig) -> Self {
        self.adapter = Some(adapter);
        self
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn wv_enabled(&self) -> bool {
        self.wv_enabled
    }

    pub fn adapter(&self) -> Option<&AdapterConfig> {
        self.adapter.as_ref()
    }

    /// Identifies the chain configuration (lexicon contents, rules, flags,
    /// adapter command) for comparisons between runs.
    pub fn fingerprint(&self) -> String {
        let mut h = Fnv1a::new();
        h.update_u64(self.lexicon.fingerprint);
        h.update_str("case:initial-upper-fold");
        if let Some(rules) = &self.affixes {
            h.update_u64(rules.max_applications as u64);
            for rule in &rules.rules {
                h.update_str(&rule.strip);
                h.update_str(&rule.add);
            }
        }
        h.update_u64(u64::from(self.wv_enabled));
        if let Some(adapter) = &self.adapter {
            h.update_str(&adapter.command);
        }
        h.finish_hex()
    }

    /// Runs the local stages (no external adapter).
    pub fn recognize_word(&self, word: &str) -> Verdict {
        if let Some(stage) = self.local_stages(word) {
            return Verdict::hit(stage);
        }
        if self.wv_enabled && word.contains(['w', 'W']) {
            let normalized = normalize_wv(word);
            if self.local_stages(&normalized).is_some() {
                return Verdict::wv(normalized);
            }
        }
        Verdict::miss()
    }

    fn local_stages(&self, word: &str) -> Option<Stage> {
        if self.lexicon.contains(word) {
            return Some(Stage::Exact);
        }
        if let Some(lower) = initial_uppercase_fold(word) {
            if self.lexicon.contains(&lower) {
                return Some(Stage::CaseVariant);
            }
        }
        if let Some(rules) = &self.affixes {
            for rule in &rules.rules {
                let mut current = word.to_string();
                for _ in 0..rules.max_applications {
                    match current.strip_suffix(&rule.strip) {
                        Some(stem) => {
                            current = format!("{stem}{}", rule.add);
                            if self.lexicon.contains(&current) {
                                return Some(Stage::Affix);
                            }
                        }
                        None => break,
                    }
                }
            }
        }
        None
    }
}

/// Per-type verdicts joined with counts, plus the aggregate rates.
///
/// `verdicts` is aligned with the classified table's canonical entry order.
/// Constructed from counts alone (for replaying published figures) the
/// verdict vector is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct RecognitionStats {
    verdicts: Vec<Verdict>,
    n: u64,
    v: u64,
    recognized_tokens: u64,
    recognized_types: u64,
    stage_types: BTreeMap<Stage, u64>,
    stage_tokens: BTreeMap<Stage, u64>,
}

impl RecognitionStats {
    pub fn from_verdicts(table: &FrequencyTable, verdicts: Vec<Verdict>) -> Self {
        assert_eq!(
            verdicts.len() as u64,
            table.v(),
            "verdicts must align with table"
        );
        let mut recognized_tokens = 0;
        let mut recognized_types = 0;
        let mut stage_types: BTreeMap<Stage, u64> = BTreeMap::new();
        let mut stage_tokens: BTreeMap<Stage, u64> = BTreeMap::new();
        for ((_, count), verdict) in table.entries().iter().zip(&verdicts) {
            if verdict.recognized {
                recognized_tokens += count;
                recognized_types += 1;
            }
            *stage_types.entry(verdict.stage).or_insert(0) += 1;
            *stage_tokens.entry(verdict.stage).or_insert(0) += count;
        }
        Self {
            verdicts,
            n: table.n(),
            v: table.v(),
            recognized_tokens,
            recognized_types,
            stage_types,
            stage_tokens,
        }
    }

    /// Builds aggregate-only stats (no per-type verdicts) from counts.
    pub fn from_counts(n: u64, v: u64, recognized_tokens: u64, recognized_types: u64) -> Self {
        assert!(recognized_tokens <= n && recognized_types <= v);
        Self {
            verdicts: Vec::new(),
            n,
            v,
            recognized_tokens,
            recognized_types,
            stage_types: BTreeMap::new(),
            stage_tokens: BTreeMap::new(),
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn v(&self) -> u64 {
        self.v
    }

    pub fn recognized_tokens(&self) -> u64 {
        self.recognized_tokens
    }

    pub fn recognized_types(&self) -> u64 {
        self.recognized_types
    }

    pub fn unrecognized_tokens(&self) -> u64 {
        self.n - self.recognized_tokens
    }

    pub fn unrecognized_types(&self) -> u64 {
        self.v - self.recognized_types
    }

    /// True when the classified table had no tokens; rates are then 0 by
    /// definition rather than a division error.
    pub fn is_empty_corpus(&self) -> bool {
        self.n == 0
    }

    pub fn token_rate(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.recognized_tokens as f64 / self.n as f64
        }
    }

    pub fn type_rate(&self) -> f64 {
        if self.v == 0 {
            0.0
        } else {
            self.recognized_types as f64 / self.v as f64
        }
    }

    pub fn verdicts(&self) -> &[Verdict] {
        &self.verdicts
    }

    pub fn has_verdicts(&self) -> bool {
        self.verdicts.len() as u64 == self.v && (self.v > 0 || self.verdicts.is_empty())
    }

    /// (stage, types, tokens) attribution; the recognized stages partition
    /// the recognized mass and `none` carries the remainder.
    pub fn stage_breakdown(&self) -> Vec<(Stage, u64, u64)> {
        Stage::ALL
            .iter()
            .filter_map(|stage| {
                let types = self.stage_types.get(stage).copied().unwrap_or(0);
                let tokens = self.stage_tokens.get(stage).copied().unwrap_or(0);
                (types > 0).then_some((*stage, types, tokens))
            })
            .collect()
    }
}

/// Classifies every type in the table through the chain. Local stages run in
/// parallel over types; words the local stages missed are then offered to the
/// external adapter, if configured, in deterministic batches.
pub fn classify_table(
    table: &FrequencyTable,
    chain: &RecognizerChain,
) -> Result<RecognitionStats, RecognizeError> {
    let mut verdicts: Vec<Verdict> = table
        .entries()
        .par_iter()
        .map(|(surface, _)| chain.recognize_word(surface))
        .collect();

    if let Some(cfg) = &chain.adapter {
        let misses: Vec<usize> = verdicts
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.recognized)
            .map(|(i, _)| i)
            .collect();
        if !misses.is_empty() {
            let words: Vec<String> = misses
                .iter()
                .map(|&i| table.entries()[i].0.clone())
                .collect();
            let replies = adapter::external_recognize_batch(&words, cfg)?;
            for (&i, (_, recognized)) in misses.iter().zip(&replies) {
                if *recognized {
                    verdicts[i] = Verdict::hit(Stage::External);
                }
            }
        }
    }

    Ok(RecognitionStats::from_verdicts(table, verdicts))
}

/// Writes the joined stats artifact: a header with the aggregates and chain
/// fingerprint, then `surface<TAB>count<TAB>0|1<TAB>stage[<TAB>normalized]`
/// rows in canonical table order.
pub fn write_stats<W: Write>(
    mut w: W,
    table: &FrequencyTable,
    stats: &RecognitionStats,
    chain_fingerprint: &str,
) -> Result<(), RecognizeError> {
    let io_err = |source| RecognizeError::StatsIo {
        path: PathBuf::from("<writer>"),
        source,
    };
    writeln!(
        w,
        "#N={} V={} R_TOK={} R_TYP={}",
        stats.n(),
        stats.v(),
        stats.recognized_tokens(),
        stats.recognized_types()
    )
    .map_err(io_err)?;
    writeln!(w, "#CHAIN={chain_fingerprint}").map_err(io_err)?;
    for ((surface, count), verdict) in table.entries().iter().zip(stats.verdicts()) {
        write!(
            w,
            "{surface}\t{count}\t{}\t{}",
            u8::from(verdict.recognized),
            verdict.stage
        )
        .map_err(io_err)?;
        match &verdict.normalized_form {
            Some(normalized) => writeln!(w, "\t{normalized}").map_err(io_err)?,
            None => writeln!(w).map_err(io_err)?,
        }
    }
    Ok(())
}

pub fn write_stats_file(
    path: &Path,
    table: &FrequencyTable,
    stats: &RecognitionStats,
    chain_fingerprint: &str,
) -> Result<(), RecognizeError> {
    let file = fs::File::create(path).map_err(|source| RecognizeError::StatsIo {
        path: path.to_path_buf(),
        source,
    })?;
    write_stats(BufWriter::new(file), table, stats, chain_fingerprint)
}

/// Reads a stats artifact back into the table, the stats, and the chain
/// fingerprint it was produced with.
pub fn read_stats_file(
    path: &Path,
) -> Result<(FrequencyTable, RecognitionStats, String), RecognizeError> {
    let file = fs::File::open(path).map_err(|source| RecognizeError::StatsIo {
        path: path.to_path_buf(),
        source,
    })?;
    let io_err = |source| RecognizeError::StatsIo {
        path: path.to_path_buf(),
        source,
    };
    let fmt_err = |line: usize, reason: String| RecognizeError::StatsFormat {
        path: path.to_path_buf(),
        line,
        reason,
    };

    let mut lines = BufReader::new(file).lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line.map_err(io_err)?,
        None => return Err(fmt_err(1, "missing header".into())),
    };
    let aggregates = parse_stats_header(header.trim_end_matches('\r'))
        .ok_or_else(|| fmt_err(1, format!("bad header {header:?}")))?;
    let chain_line = match lines.next() {
        Some((_, line)) => line.map_err(io_err)?,
        None => return Err(fmt_err(2, "missing #CHAIN= line".into())),
    };
    let chain = chain_line
        .trim_end_matches('\r')
        .strip_prefix("#CHAIN=")
        .ok_or_else(|| fmt_err(2, "missing #CHAIN= line".into()))?
        .to_string();

    let mut counts: HashMap<String, u64> = HashMap::new();
    let mut verdict_by_surface: HashMap<String, Verdict> = HashMap::new();
    for (idx, line) in lines {
        let line = line.map_err(io_err)?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 && fields.len() != 5 {
            return Err(fmt_err(idx + 1, "expected 4 or 5 fields".into()));
        }
        let surface = fields[0].to_string();
        let count: u64 = fields[1]
            .parse()
            .map_err(|_| fmt_err(idx + 1, format!("bad count {:?}", fields[1])))?;
        let recognized = match fields[2] {
            "0" => false,
            "1" => true,
            other => return Err(fmt_err(idx + 1, format!("bad flag {other:?}"))),
        };
        let stage = Stage::from_str(fields[3])
            .map_err(|()| fmt_err(idx + 1, format!("bad stage {:?}", fields[3])))?;
        let normalized_form = fields.get(4).map(|s| s.to_string());
        if recognized == (stage == Stage::None) {
            return Err(fmt_err(idx + 1, "flag and stage disagree".into()));
        }
        if normalized_form.is_some() != (stage == Stage::WvNormalized) {
            return Err(fmt_err(
                idx + 1,
                "normalized form must appear exactly for wv_normalized".into(),
            ));
        }
        if counts.insert(surface.clone(), count).is_some() {
            return Err(fmt_err(idx + 1, format!("duplicate surface {surface:?}")));
        }
        verdict_by_surface.insert(
            surface,
            Verdict {
                recognized,
                stage,
                normalized_form,
            },
        );
    }

    let table = FrequencyTable::from_counts(counts, None);
    let verdicts: Vec<Verdict> = table
        .entries()
        .iter()
        .map(|(surface, _)| verdict_by_surface.remove(surface).expect("aligned"))
        .collect();
    let stats = RecognitionStats::from_verdicts(&table, verdicts);
    let (n, v, r_tok, r_typ) = aggregates;
    if stats.n() != n
        || stats.v() != v
        || stats.recognized_tokens() != r_tok
        || stats.recognized_types() != r_typ
    {
        return Err(fmt_err(1, "header aggregates disagree with rows".into()));
    }
    Ok((table, stats, chain))
}

fn parse_stats_header(line: &str) -> Option<(u64, u64, u64, u64)> {
    let rest = line.strip_prefix("#N=")?;
    let (n, rest) = rest.split_once(" V=")?;
    let (v, rest) = rest.split_once(" R_TOK=")?;
    let (r_tok, r_typ) = rest.split_once(" R_TYP=")?;
    Some((
        n.parse().ok()?,
        v.parse().ok()?,
        r_tok.parse().ok()?,
        r_typ.parse().ok()?,
    ))
}
