//! Command-line front door for the corpus quality profiler.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 adapter
//! error.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use lexqual::freq::{self, CountOptions, FreqError, FrequencyTable};
use lexqual::ingest::{self, IngestError, IngestOptions, TokenizerOptions, YearRange};
use lexqual::profile::{
    self, calibrate_oov, HapaxThreshold, ImprovementThresholds, OovCalibration, ProfileError,
    QualityProfile,
};
use lexqual::recognize::adapter::AdapterConfig;
use lexqual::recognize::{
    classify_table, read_stats_file, write_stats_file, AffixRuleSet, Lexicon, RecognitionStats,
    RecognizeError, RecognizerChain,
};
use lexqual::report::{self, fmt_pct1, ReportError};
use lexqual::simulate::{self, NoiseModel, SimulateError};

const EXIT_CONFIG: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_ADAPTER: u8 = 4;

#[derive(Parser)]
#[command(
    name = "lexqual",
    version,
    about = "Lexical quality profiling for OCRed corpora"
)]
struct Cli {
    /// Worker threads (0 = one per core). Results are identical for any
    /// thread count.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tokenize manifest documents into a token dump.
    Ingest(IngestCmd),
    /// Count tokens into a frequency table and spectrum.
    Freq(FreqCmd),
    /// Classify a corpus through the recognition chain.
    Analyze(AnalyzeCmd),
    /// Derive the OOV interval from reference corpora.
    Calibrate(CalibrateCmd),
    /// Build the full quality profile.
    Profile(ProfileCmd),
    /// Compare two profiles against improvement thresholds.
    Compare(CompareCmd),
    /// Corrupt a clean corpus with a seeded confusion channel, or score a
    /// profile against recorded ground truth.
    Simulate(SimulateCmd),
    /// Re-render an existing profile document.
    Report(ReportCmd),
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.into(),
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::data(e.to_string())
    }
}

impl From<FreqError> for CliError {
    fn from(e: FreqError) -> Self {
        match e {
            FreqError::InvalidBand(_) => CliError::config(e.to_string()),
            _ => CliError::data(e.to_string()),
        }
    }
}

impl From<RecognizeError> for CliError {
    fn from(e: RecognizeError) -> Self {
        match e {
            RecognizeError::Adapter(_) => CliError {
                code: EXIT_ADAPTER,
                message: e.to_string(),
            },
            _ => CliError::data(e.to_string()),
        }
    }
}

impl From<ProfileError> for CliError {
    fn from(e: ProfileError) -> Self {
        match e {
            ProfileError::BandList(_) | ProfileError::Calibration(_) => {
                CliError::config(e.to_string())
            }
            ProfileError::Recognize(RecognizeError::Adapter(_)) => CliError {
                code: EXIT_ADAPTER,
                message: e.to_string(),
            },
            _ => CliError::data(e.to_string()),
        }
    }
}

impl From<SimulateError> for CliError {
    fn from(e: SimulateError) -> Self {
        match e {
            SimulateError::BadWer(_)
            | SimulateError::BadPair { .. }
            | SimulateError::BadMinMutations
            | SimulateError::EmptyConfusions
            | SimulateError::ModelIo { .. }
            | SimulateError::ModelFormat { .. } => CliError::config(e.to_string()),
            _ => CliError::data(e.to_string()),
        }
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        CliError::data(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        // fixed-shard merges keep results identical across pool sizes
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("lexqual: cannot configure {} threads: {e}", cli.threads);
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    let result = match cli.command {
        Command::Ingest(cmd) => run_ingest(cmd),
        Command::Freq(cmd) => run_freq(cmd),
        Command::Analyze(cmd) => run_analyze(cmd),
        Command::Calibrate(cmd) => run_calibrate(cmd),
        Command::Profile(cmd) => run_profile(cmd),
        Command::Compare(cmd) => run_compare(cmd),
        Command::Simulate(cmd) => run_simulate(cmd),
        Command::Report(cmd) => run_report(cmd),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lexqual: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

// ---- shared argument groups -------------------------------------------------

#[derive(Args)]
struct TokenizeArgs {
    /// Treat digits as token characters.
    #[arg(long)]
    keep_digits: bool,
}

impl TokenizeArgs {
    fn options(&self) -> TokenizerOptions {
        TokenizerOptions {
            keep_digits: self.keep_digits,
        }
    }
}

#[derive(Args)]
struct ChainArgs {
    /// Lexicon file: one surface form per line, `#` comments.
    #[arg(long)]
    lexicon: PathBuf,
    /// Affix rule file: `strip<TAB>add` per line, applied in order.
    #[arg(long)]
    affix: Option<PathBuf>,
    /// Maximum applications per affix rule.
    #[arg(long, default_value_t = 1)]
    affix_max: usize,
    /// w→v retry stage.
    #[arg(long, value_parser = parse_on_off, default_value = "off", action = clap::ArgAction::Set)]
    wv: bool,
    /// External analyzer command (line protocol on stdin/stdout).
    #[arg(long)]
    adapter: Option<String>,
    /// Words per adapter batch.
    #[arg(long, default_value_t = 10_000)]
    adapter_batch: usize,
    /// Adapter reply timeout per batch, in seconds.
    #[arg(long, default_value_t = 60)]
    adapter_timeout: u64,
}

impl ChainArgs {
    fn build(&self) -> Result<RecognizerChain, CliError> {
        require_input(&self.lexicon, "lexicon")?;
        let mut chain = RecognizerChain::new(Lexicon::from_file(&self.lexicon)?);
        if let Some(affix) = &self.affix {
            require_input(affix, "affix rule file")?;
            chain = chain.with_affixes(AffixRuleSet::from_file(affix, self.affix_max)?);
        }
        chain = chain.with_wv(self.wv);
        if let Some(command) = &self.adapter {
            chain = chain.with_adapter(AdapterConfig {
                command: command.clone(),
                batch_size: self.adapter_batch,
                timeout: Duration::from_secs(self.adapter_timeout),
            });
        }
        Ok(chain)
    }
}

#[derive(Args)]
struct CountArgs {
    /// Lowercase all surfaces before counting.
    #[arg(long)]
    fold_case: bool,
    /// Distinct types held in memory before spilling a sorted run.
    #[arg(long, default_value_t = 4_000_000)]
    spill_threshold: usize,
}

impl CountArgs {
    fn options(&self) -> CountOptions {
        CountOptions {
            spill_threshold: self.spill_threshold,
            fold_case: self.fold_case,
            ..CountOptions::default()
        }
    }
}

fn parse_on_off(s: &str) -> Result<bool, String> {
    match s {
        "on" => Ok(true),
        "off" => Ok(false),
        _ => Err("expected on or off".into()),
    }
}

fn parse_year_range(s: &str) -> Result<YearRange, String> {
    let (lo, hi) = s.split_once(':').ok_or("expected LO:HI")?;
    let lo: i32 = lo.parse().map_err(|_| "bad LO year")?;
    let hi: i32 = hi.parse().map_err(|_| "bad HI year")?;
    if lo > hi {
        return Err(format!("empty year range {lo}:{hi}"));
    }
    Ok(YearRange::new(lo, hi))
}

fn parse_oov(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or("expected LO:HI fractions")?;
    let lo: f64 = lo.parse().map_err(|_| "bad LO fraction")?;
    let hi: f64 = hi.parse().map_err(|_| "bad HI fraction")?;
    Ok((lo, hi))
}

fn parse_reference(s: &str) -> Result<(String, PathBuf), String> {
    let (name, path) = s.split_once('=').ok_or("expected NAME=PATH")?;
    if name.is_empty() {
        return Err("empty reference name".into());
    }
    Ok((name.to_string(), PathBuf::from(path)))
}

fn require_input(path: &Path, what: &str) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::config(format!(
            "{what} {} does not exist",
            path.display()
        )))
    }
}

fn ensure_out_dir(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| {
        CliError::config(format!(
            "cannot create output directory {}: {e}",
            out.display()
        ))
    })
}

fn default_bands() -> Vec<u64> {
    vec![1_000, 10_000, 100_000, 500_000, 1_000_000]
}

// ---- ingest -----------------------------------------------------------------

#[derive(Args)]
struct IngestCmd {
    /// Manifest TSV: doc_id<TAB>path<TAB>year[<TAB>language_tag].
    #[arg(long)]
    manifest: PathBuf,
    /// Inclusive publication-year filter LO:HI.
    #[arg(long, value_parser = parse_year_range)]
    years: Option<YearRange>,
    /// Skip unreadable documents instead of stopping.
    #[arg(long)]
    continue_on_error: bool,
    #[command(flatten)]
    tokenize: TokenizeArgs,
    /// Output directory (writes tokens.txt).
    #[arg(long)]
    out: PathBuf,
}

fn run_ingest(cmd: IngestCmd) -> Result<(), CliError> {
    require_input(&cmd.manifest, "manifest")?;
    ensure_out_dir(&cmd.out)?;
    let docs = ingest::load_manifest(&cmd.manifest)?;
    let opts = IngestOptions {
        tokenizer: cmd.tokenize.options(),
        continue_on_error: cmd.continue_on_error,
    };

    let path = cmd.out.join("tokens.txt");
    let file = fs::File::create(&path)
        .map_err(|e| CliError::data(format!("cannot create {}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    let mut tokens: u64 = 0;
    let mut skipped: u64 = 0;
    for item in ingest::ingest_corpus(&docs, cmd.years, &opts) {
        match item {
            Ok(record) => {
                writeln!(w, "{}", record.surface)
                    .map_err(|e| CliError::data(format!("write {}: {e}", path.display())))?;
                tokens += 1;
            }
            Err(e) if cmd.continue_on_error => {
                eprintln!("lexqual: skipping: {e}");
                skipped += 1;
            }
            Err(e) => return Err(e.into()),
        }
    }
    w.flush()
        .map_err(|e| CliError::data(format!("write {}: {e}", path.display())))?;
    println!(
        "ingested {} documents: {tokens} tokens -> {} (skipped {skipped})",
        docs.len(),
        path.display()
    );
    Ok(())
}

// ---- freq ---------------------------------------------------------------------

#[derive(Args)]
struct FreqCmd {
    #[arg(long, conflicts_with = "tokens")]
    manifest: Option<PathBuf>,
    /// Token dump input (one surface per line) instead of a manifest.
    #[arg(long)]
    tokens: Option<PathBuf>,
    /// Document id recorded for token-dump input.
    #[arg(long, default_value = "tokens")]
    doc_id: String,
    /// Publication year recorded for token-dump input.
    #[arg(long, default_value_t = 1900)]
    year: i32,
    #[arg(long, value_parser = parse_year_range)]
    years: Option<YearRange>,
    #[arg(long)]
    continue_on_error: bool,
    #[command(flatten)]
    tokenize: TokenizeArgs,
    #[command(flatten)]
    count: CountArgs,
    /// Output directory (writes freq.tsv and spectrum.tsv).
    #[arg(long)]
    out: PathBuf,
}

#[allow(clippy::too_many_arguments)]
fn load_input_table(
    manifest: Option<&Path>,
    tokens: Option<&Path>,
    doc_id: &str,
    year: i32,
    years: Option<YearRange>,
    continue_on_error: bool,
    tok_opts: TokenizerOptions,
    count_opts: CountOptions,
) -> Result<FrequencyTable, CliError> {
    match (manifest, tokens) {
        (Some(manifest), None) => {
            require_input(manifest, "manifest")?;
            let docs = ingest::load_manifest(manifest)?;
            let opts = IngestOptions {
                tokenizer: tok_opts,
                continue_on_error,
            };
            let (table, skipped) = freq::count_corpus(&docs, years, &opts, count_opts)?;
            for e in skipped {
                eprintln!("lexqual: skipping: {e}");
            }
            Ok(table)
        }
        (None, Some(tokens)) => {
            require_input(tokens, "token dump")?;
            let records = ingest::read_token_dump(tokens, doc_id, year, &tok_opts)?;
            Ok(freq::count_tokens(records, count_opts)?)
        }
        _ => Err(CliError::config(
            "exactly one of --manifest or --tokens is required",
        )),
    }
}

fn run_freq(cmd: FreqCmd) -> Result<(), CliError> {
    ensure_out_dir(&cmd.out)?;
    let table = load_input_table(
        cmd.manifest.as_deref(),
        cmd.tokens.as_deref(),
        &cmd.doc_id,
        cmd.year,
        cmd.years,
        cmd.continue_on_error,
        cmd.tokenize.options(),
        cmd.count.options(),
    )?;
    let freq_path = cmd.out.join("freq.tsv");
    table.write_tsv_file(&freq_path)?;
    let spectrum = freq::spectrum(&table);
    let spectrum_path = cmd.out.join("spectrum.tsv");
    spectrum.write_tsv_file(&spectrum_path)?;
    println!(
        "counted N={} V={} -> {}, {}",
        table.n(),
        table.v(),
        freq_path.display(),
        spectrum_path.display()
    );
    Ok(())
}

// ---- analyze ------------------------------------------------------------------

#[derive(Args)]
struct AnalyzeCmd {
    #[arg(long, conflicts_with_all = ["tokens", "freq"])]
    manifest: Option<PathBuf>,
    #[arg(long, conflicts_with = "freq")]
    tokens: Option<PathBuf>,
    /// Frequency table TSV input.
    #[arg(long)]
    freq: Option<PathBuf>,
    #[arg(long, default_value = "tokens")]
    doc_id: String,
    #[arg(long, default_value_t = 1900)]
    year: i32,
    #[arg(long, value_parser = parse_year_range)]
    years: Option<YearRange>,
    #[arg(long)]
    continue_on_error: bool,
    #[command(flatten)]
    tokenize: TokenizeArgs,
    #[command(flatten)]
    count: CountArgs,
    #[command(flatten)]
    chain: ChainArgs,
    /// Output directory (writes stats.tsv).
    #[arg(long)]
    out: PathBuf,
}

fn run_analyze(cmd: AnalyzeCmd) -> Result<(), CliError> {
    ensure_out_dir(&cmd.out)?;
    let table = match &cmd.freq {
        Some(path) => {
            require_input(path, "frequency table")?;
            FrequencyTable::read_tsv_file(path)?
        }
        None => load_input_table(
            cmd.manifest.as_deref(),
            cmd.tokens.as_deref(),
            &cmd.doc_id,
            cmd.year,
            cmd.years,
            cmd.continue_on_error,
            cmd.tokenize.options(),
            cmd.count.options(),
        )?,
    };
    let chain = cmd.chain.build()?;
    let stats = classify_table(&table, &chain)?;

    let path = cmd.out.join("stats.tsv");
    write_stats_file(&path, &table, &stats, &chain.fingerprint())?;

    println!("N={} V={}", stats.n(), stats.v());
    println!(
        "token rate: {}  type rate: {}",
        fmt_pct1(stats.recognized_tokens(), stats.n()),
        fmt_pct1(stats.recognized_types(), stats.v())
    );
    for (stage, types, tokens) in stats.stage_breakdown() {
        println!("  {stage}: {types} types, {tokens} tokens");
    }
    println!("stats -> {}", path.display());
    Ok(())
}

// ---- calibrate ----------------------------------------------------------------

#[derive(Args)]
struct CalibrateCmd {
    /// Reference corpus as NAME=FREQ_TSV; repeatable.
    #[arg(long = "reference", value_parser = parse_reference, required = true)]
    references: Vec<(String, PathBuf)>,
    #[command(flatten)]
    chain: ChainArgs,
    /// Output directory (writes calibration.json).
    #[arg(long)]
    out: PathBuf,
}

fn classify_references(
    references: &[(String, PathBuf)],
    chain: &RecognizerChain,
) -> Result<Vec<(String, RecognitionStats)>, CliError> {
    let mut out = Vec::with_capacity(references.len());
    for (name, path) in references {
        require_input(path, "reference frequency table")?;
        let table = FrequencyTable::read_tsv_file(path)?;
        out.push((name.clone(), classify_table(&table, chain)?));
    }
    Ok(out)
}

fn run_calibrate(cmd: CalibrateCmd) -> Result<(), CliError> {
    ensure_out_dir(&cmd.out)?;
    let chain = cmd.chain.build()?;
    let refs = classify_references(&cmd.references, &chain)?;
    let calibration = calibrate_oov(&refs, false)?;
    let path = cmd.out.join("calibration.json");
    report::write_calibration_json(&calibration, &path)?;
    println!(
        "OOV interval: {} - {} ({} references) -> {}",
        report::fmt_rate(calibration.low),
        report::fmt_rate(calibration.high),
        calibration.provenance.len(),
        path.display()
    );
    Ok(())
}

// ---- profile ------------------------------------------------------------------

#[derive(Args)]
struct ProfileCmd {
    #[arg(long, conflicts_with_all = ["tokens", "freq", "stats"])]
    manifest: Option<PathBuf>,
    #[arg(long, conflicts_with_all = ["freq", "stats"])]
    tokens: Option<PathBuf>,
    #[arg(long, conflicts_with = "stats")]
    freq: Option<PathBuf>,
    /// Stats artifact from `analyze` (skips re-classification).
    #[arg(long)]
    stats: Option<PathBuf>,
    #[arg(long, default_value = "tokens")]
    doc_id: String,
    #[arg(long, default_value_t = 1900)]
    year: i32,
    #[arg(long, value_parser = parse_year_range)]
    years: Option<YearRange>,
    #[arg(long)]
    continue_on_error: bool,
    #[command(flatten)]
    tokenize: TokenizeArgs,
    #[command(flatten)]
    count: CountArgs,
    #[command(flatten)]
    chain: ChainArgs,
    /// Top-K band sizes, comma separated and strictly increasing; the last
    /// one is the band for w/v recovery and the decomposition.
    #[arg(long, value_delimiter = ',', default_values_t = default_bands())]
    bands: Vec<u64>,
    /// Largest rare frequency class.
    #[arg(long, default_value_t = 10)]
    mmax: u64,
    /// Calibration file from `calibrate`.
    #[arg(long, conflicts_with = "oov")]
    calibration: Option<PathBuf>,
    /// Explicit OOV interval LO:HI (fractions).
    #[arg(long, value_parser = parse_oov)]
    oov: Option<(f64, f64)>,
    /// Reference corpus NAME=FREQ_TSV, classified with the same chain;
    /// repeatable.
    #[arg(long = "reference", value_parser = parse_reference)]
    references: Vec<(String, PathBuf)>,
    /// Fail instead of assuming the default OOV interval when no calibration
    /// source is given.
    #[arg(long)]
    no_default_oov: bool,
    /// Also write per-section CSV files.
    #[arg(long, value_parser = ["json", "csv"], default_value = "json")]
    format: String,
    /// Output directory (writes profile.json).
    #[arg(long)]
    out: PathBuf,
}

fn run_profile(cmd: ProfileCmd) -> Result<(), CliError> {
    ensure_out_dir(&cmd.out)?;
    let chain = cmd.chain.build()?;

    // table + stats + optional decades, depending on the input kind
    let mut decades: Vec<(i32, RecognitionStats)> = Vec::new();
    let (table, stats, corpus_fp) = if let Some(stats_path) = &cmd.stats {
        require_input(stats_path, "stats artifact")?;
        let (table, stats, stored_fp) = read_stats_file(stats_path)?;
        if stored_fp != chain.fingerprint() {
            eprintln!(
                "lexqual: warning: stats artifact was produced with a different chain config"
            );
        }
        let fp = profile::token_source_fingerprint(&cmd.doc_id, table.n());
        (table, stats, fp)
    } else if let Some(manifest) = &cmd.manifest {
        require_input(manifest, "manifest")?;
        let docs = ingest::load_manifest(manifest)?;
        let opts = IngestOptions {
            tokenizer: cmd.tokenize.options(),
            continue_on_error: cmd.continue_on_error,
        };
        let (by_decade, skipped) =
            freq::count_corpus_by_decade(&docs, cmd.years, &opts, &cmd.count.options())?;
        for e in skipped {
            eprintln!("lexqual: skipping: {e}");
        }
        let mut merger = freq::TokenCounter::new(cmd.count.options());
        for (decade, decade_table) in by_decade {
            decades.push((decade, classify_table(&decade_table, &chain)?));
            merger.absorb(decade_table).map_err(CliError::from)?;
        }
        let table = merger.finish()?;
        let selected: Vec<_> = docs
            .iter()
            .filter(|d| cmd.years.is_none_or(|r| r.contains(d.year)))
            .cloned()
            .collect();
        let fp = profile::manifest_fingerprint(&selected);
        let stats = classify_table(&table, &chain)?;
        (table, stats, fp)
    } else {
        let table = if let Some(freq_path) = &cmd.freq {
            require_input(freq_path, "frequency table")?;
            FrequencyTable::read_tsv_file(freq_path)?
        } else {
            load_input_table(
                None,
                cmd.tokens.as_deref(),
                &cmd.doc_id,
                cmd.year,
                cmd.years,
                cmd.continue_on_error,
                cmd.tokenize.options(),
                cmd.count.options(),
            )?
        };
        let fp = profile::token_source_fingerprint(&cmd.doc_id, table.n());
        let stats = classify_table(&table, &chain)?;
        (table, stats, fp)
    };

    let calibration = resolve_calibration(&cmd, &chain)?;

    let (quality, warnings) = profile::build_profile(
        &table,
        &stats,
        &chain,
        &decades,
        calibration,
        corpus_fp,
        &cmd.bands,
        cmd.mmax,
    )?;
    for w in &warnings {
        eprintln!("lexqual: warning: {w}");
    }

    let json_path = cmd.out.join("profile.json");
    quality.write_json(&json_path)?;
    let mut outputs = vec![json_path.display().to_string()];
    if cmd.format == "csv" {
        for path in report::write_csv_sections(&quality, &cmd.out)? {
            outputs.push(path.display().to_string());
        }
    }

    print_profile_summary(&quality);
    println!("artifacts: {}", outputs.join(", "));
    Ok(())
}

fn resolve_calibration(
    cmd: &ProfileCmd,
    chain: &RecognizerChain,
) -> Result<OovCalibration, CliError> {
    if let Some(path) = &cmd.calibration {
        require_input(path, "calibration file")?;
        return Ok(report::read_calibration_json(path)?);
    }
    if let Some((low, high)) = cmd.oov {
        return Ok(OovCalibration::from_fractions(low, high)?);
    }
    if !cmd.references.is_empty() {
        let refs = classify_references(&cmd.references, chain)?;
        return Ok(calibrate_oov(&refs, false)?);
    }
    Ok(calibrate_oov(&[], !cmd.no_default_oov)?)
}

fn print_profile_summary(profile: &QualityProfile) {
    let raw = &profile.raw;
    println!("N={} V={}", raw.n, raw.v);
    println!(
        "raw token rate: {}  raw type rate: {}",
        fmt_pct1(raw.recognized_tokens, raw.n),
        fmt_pct1(raw.recognized_types, raw.v)
    );
    let d = &profile.decomposition;
    println!(
        "w/v recovered tokens: {}  unrecognized: top {} / rare {} / mid {}",
        profile.wv.recovered_tokens(),
        d.u_top,
        d.u_rare,
        d.u_mid
    );
    println!(
        "approx rate interval: {} - {}",
        fmt_pct1(d.approx_tokens_low(), d.n),
        fmt_pct1(d.approx_tokens_high(), d.n)
    );
}

// ---- compare ------------------------------------------------------------------

#[derive(Args)]
struct CompareCmd {
    #[arg(long)]
    before: PathBuf,
    #[arg(long)]
    after: PathBuf,
    /// Minimum token-rate improvement in percentage points.
    #[arg(long, default_value_t = 3.0)]
    min_token_delta: f64,
    /// Minimum absolute drop in unrecognized hapax types.
    #[arg(
        long,
        conflicts_with = "min_hapax_drop_rel",
        default_value_t = 10_000_000
    )]
    min_hapax_drop: u64,
    /// Minimum relative drop in unrecognized hapax types (fraction of
    /// before).
    #[arg(long)]
    min_hapax_drop_rel: Option<f64>,
    /// Compare even when the corpus fingerprints differ.
    #[arg(long)]
    force: bool,
    /// Output directory (writes compare.json).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run_compare(cmd: CompareCmd) -> Result<(), CliError> {
    require_input(&cmd.before, "before profile")?;
    require_input(&cmd.after, "after profile")?;
    let before = QualityProfile::read_json(&cmd.before)?;
    let after = QualityProfile::read_json(&cmd.after)?;
    let thresholds = ImprovementThresholds {
        min_token_delta_pp: cmd.min_token_delta,
        hapax: match cmd.min_hapax_drop_rel {
            Some(frac) => HapaxThreshold::Relative(frac),
            None => HapaxThreshold::Absolute(cmd.min_hapax_drop),
        },
    };
    let report = profile::compare_profiles(&before, &after, &thresholds, cmd.force)?;
    for w in &report.warnings {
        eprintln!("lexqual: warning: {w}");
    }
    println!(
        "token rate delta: {:+.2} pp  type rate delta: {:+.2} pp",
        report.token_rate_delta_pp, report.type_rate_delta_pp
    );
    for band in &report.bands {
        println!(
            "  top-{}: unrec tokens {:+.2} pp{}",
            band.k,
            band.delta_pp,
            if band.focus { "  (focus range)" } else { "" }
        );
    }
    println!(
        "unrecognized hapax types: {} -> {} (drop {})",
        report.hapax_unrec_before, report.hapax_unrec_after, report.hapax_drop
    );
    println!(
        "thresholds: token {}  hapax {}  => {}",
        if report.token_threshold_met {
            "met"
        } else {
            "not met"
        },
        if report.hapax_threshold_met {
            "met"
        } else {
            "not met"
        },
        if report.passed { "PASSED" } else { "FAILED" }
    );
    if let Some(out) = &cmd.out {
        ensure_out_dir(out)?;
        let path = out.join("compare.json");
        report.write_json(&path)?;
        println!("report -> {}", path.display());
    }
    Ok(())
}

// ---- simulate -----------------------------------------------------------------

#[derive(Args)]
struct SimulateCmd {
    /// Clean token dump to corrupt.
    #[arg(long, required_unless_present = "profile")]
    tokens: Option<PathBuf>,
    /// Lexicon for collision counting (corrupt mode).
    #[arg(long, required_unless_present = "profile")]
    lexicon: Option<PathBuf>,
    /// Noise model TOML; defaults to the blackletter confusions at --wer.
    #[arg(long, conflicts_with = "wer")]
    noise: Option<PathBuf>,
    /// Target word error rate for the default confusion model.
    #[arg(long)]
    wer: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    min_mutations: usize,
    #[arg(long, default_value = "tokens")]
    doc_id: String,
    #[arg(long, default_value_t = 1900)]
    year: i32,
    #[command(flatten)]
    tokenize: TokenizeArgs,
    /// Score mode: profile of the noisy corpus to check against the truth.
    #[arg(long, requires = "truth")]
    profile: Option<PathBuf>,
    /// Score mode: ground truth file recorded by the corrupt mode.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Output directory (corrupt mode: noisy.txt and truth.txt).
    #[arg(long, required_unless_present = "profile")]
    out: Option<PathBuf>,
}

fn run_simulate(cmd: SimulateCmd) -> Result<(), CliError> {
    if let Some(profile_path) = &cmd.profile {
        let truth_path = cmd
            .truth
            .as_ref()
            .ok_or_else(|| CliError::config("--profile needs --truth"))?;
        require_input(profile_path, "profile")?;
        require_input(truth_path, "ground truth")?;
        let profile = QualityProfile::read_json(profile_path)?;
        let truth = simulate::GroundTruth::read_file(truth_path)?;
        let gaps = simulate::estimator_error(&profile, &truth)?;
        println!(
            "true WER: {:.4}  collisions: {}",
            truth.true_wer(),
            truth.collisions()
        );
        println!(
            "raw gap: {:+.4}  adjusted gap: {:+.4}",
            gaps.raw_gap, gaps.adjusted_gap
        );
        return Ok(());
    }

    let tokens_path = cmd.tokens.as_ref().expect("required by clap");
    let lexicon_path = cmd.lexicon.as_ref().expect("required by clap");
    let out = cmd.out.as_ref().expect("required by clap");
    require_input(tokens_path, "token dump")?;
    require_input(lexicon_path, "lexicon")?;
    ensure_out_dir(out)?;

    let model = match &cmd.noise {
        Some(path) => {
            require_input(path, "noise model")?;
            NoiseModel::from_file(path)?
        }
        None => {
            let wer = cmd
                .wer
                .ok_or_else(|| CliError::config("either --noise or --wer is required"))?;
            let mut model = NoiseModel::fraktur(wer, cmd.seed)?;
            model.min_mutations = cmd.min_mutations.max(1);
            model
        }
    };

    let clean =
        ingest::read_token_dump(tokens_path, &cmd.doc_id, cmd.year, &cmd.tokenize.options())?;
    let lexicon = Lexicon::from_file(lexicon_path)?;
    let (noisy, truth) = simulate::corrupt_corpus(&clean, &model, &lexicon)?;

    let noisy_path = out.join("noisy.txt");
    let file = fs::File::create(&noisy_path)
        .map_err(|e| CliError::data(format!("cannot create {}: {e}", noisy_path.display())))?;
    ingest::write_token_dump(BufWriter::new(file), &noisy)
        .map_err(|e| CliError::data(format!("write {}: {e}", noisy_path.display())))?;
    let truth_path = out.join("truth.txt");
    truth.write_file(&truth_path)?;

    println!(
        "corrupted {}/{} tokens (true WER {:.4}), {} collisions",
        truth.corrupted(),
        truth.n(),
        truth.true_wer(),
        truth.collisions()
    );
    println!(
        "artifacts: {}, {}",
        noisy_path.display(),
        truth_path.display()
    );
    Ok(())
}

// ---- report -------------------------------------------------------------------

#[derive(Args)]
struct ReportCmd {
    #[arg(long)]
    profile: PathBuf,
    #[arg(long, value_parser = ["json", "csv"], default_value = "csv")]
    format: String,
    #[arg(long)]
    out: PathBuf,
}

fn run_report(cmd: ReportCmd) -> Result<(), CliError> {
    require_input(&cmd.profile, "profile")?;
    ensure_out_dir(&cmd.out)?;
    let profile = QualityProfile::read_json(&cmd.profile)?;
    match cmd.format.as_str() {
        "csv" => {
            let written = report::write_csv_sections(&profile, &cmd.out)?;
            println!(
                "wrote {} sections: {}",
                written.len(),
                written
                    .iter()
                    .map(|p| p.display().to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            );
        }
        _ => {
            let path = cmd.out.join("profile.json");
            profile.write_json(&path)?;
            println!("profile -> {}", path.display());
        }
    }
    Ok(())
}
