//! Acceptance suite: one test per acceptance criterion, each printing a
//! PASS line (visible with `--nocapture`) and enforcing its runtime budget.
//!
//! Criteria:
//!   1. published-figure replay through the report arithmetic
//!   2. spectrum identities on 1,000 random tables
//!   3. sharded counting against a naive oracle at 10 M tokens
//!   4. noise-oracle estimation on a seeded corrupted corpus
//!   5. w→v recovery against an exact substitution oracle
//!   6. byte-identical artifacts across reruns and thread counts
//!   7. improvement detection against direct recomputation
//!   8. external adapter protocol conformance

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Zipf;

use lexqual::freq::{count_tokens, merge_tables, spectrum, CountOptions, FrequencyTable};
use lexqual::ingest::TokenRecord;
use lexqual::profile::{
    build_profile, compare_profiles, token_source_fingerprint, wv_recovery, BandRow, Decomposition,
    HapaxThreshold, ImprovementThresholds, OovCalibration, SpectrumRow, WvRecovery,
};
use lexqual::recognize::adapter::{AdapterConfig, AdapterError};
use lexqual::recognize::{
    classify_table, normalize_wv, Lexicon, RecognitionStats, RecognizeError, RecognizerChain, Stage,
};
use lexqual::simulate::{corrupt_corpus, estimator_error, NoiseModel};

const ALPHABET: [char; 12] = ['a', 'e', 'i', 'k', 'l', 'm', 'n', 'o', 's', 't', 'u', 'v'];

/// Distinct letter-only word per index (base-12 digits over the alphabet,
/// padded with 'a'; natural representations never end in 'a', so padding
/// cannot collide).
fn word_for(index: usize) -> String {
    let mut s = String::new();
    let mut x = index;
    loop {
        s.push(ALPHABET[x % ALPHABET.len()]);
        x /= ALPHABET.len();
        if x == 0 {
            break;
        }
    }
    while s.chars().count() < 4 {
        s.push('a');
    }
    s
}

fn record(surface: String) -> TokenRecord {
    TokenRecord {
        surface,
        doc_id: Arc::from("synthetic"),
        year: 1880,
    }
}

fn assert_close(got: f64, want: f64, tol: f64, what: &str) {
    assert!(
        (got - want).abs() <= tol,
        "{what}: got {got}, want {want} (tol {tol})"
    );
}

// ---- criterion 1 ------------------------------------------------------------

#[test]
fn criterion_1_published_figure_replay() {
    let t0 = Instant::now();

    const N: u64 = 2_385_349_514;
    const R_TOK: u64 = 1_652_668_099;

    // raw rates
    let stats = RecognitionStats::from_counts(N, 177_300_000, R_TOK, 6_737_400);
    let raw = lexqual::profile::raw_rates(&stats);
    assert_close(raw.token_rate() * 100.0, 69.3, 0.05, "raw token rate");

    // band rows
    let top_1k = BandRow::from_counts(1_000, 1_000, 120, 790_710_542, 61_170_210, N);
    assert_close(top_1k.coverage() * 100.0, 33.1, 0.05, "top-1K coverage");
    assert_close(
        top_1k.unrec_token_pct() * 100.0,
        7.7,
        0.05,
        "top-1K unrecognized tokens",
    );
    let top_1m = BandRow::from_counts(1_000_000, 1_000_000, 577_974, 2_043_976_151, 427_214_868, N);
    assert_close(
        top_1m.unrec_token_pct() * 100.0,
        20.9,
        0.05,
        "top-1M unrecognized tokens",
    );

    // spectrum rows, classes 1..10
    let rows: Vec<SpectrumRow> = [
        (1u64, 145_056_481u64, 142_221_709u64),
        (2, 13_432_504, 12_626_341),
        (3, 5_223_322, 4_808_344),
        (4, 2_820_741, 2_558_814),
        (5, 1_787_757, 1_599_055),
        (6, 1_240_895, 1_098_022),
        (7, 914_598, 804_520),
        (8, 704_610, 614_653),
        (9, 560_762, 485_741),
        (10, 458_734, 394_511),
    ]
    .into_iter()
    .map(|(m, types, unrec)| SpectrumRow::from_counts(m, types, unrec))
    .collect();
    assert_close(
        rows[0].unrec_type_pct() * 100.0,
        98.0,
        0.05,
        "hapax unrecognized share",
    );
    let sum_2_10: u64 = rows[1..].iter().map(|r| r.unrec_tokens()).sum();
    assert_close(
        sum_2_10 as f64 / 1e6,
        83.38,
        0.05,
        "unrecognized tokens in classes 2..10 (millions)",
    );

    // w/v recovery
    let recovery = WvRecovery::from_counts(
        1_000_000, 92_749, 78_438_010, 91_886, 76_450_673, 54_049, 24_016_996,
    );
    assert_eq!(recovery.recovered_tokens(), 52_433_677);

    // decomposition with the published 50–75 M OOV token interval
    let u_top = 427_214_868u64;
    let u_rare: u64 = rows.iter().map(|r| r.unrec_tokens()).sum();
    let residual = u_top - recovery.recovered_tokens();
    let calibration = OovCalibration::from_fractions(
        50_000_000.0 / residual as f64,
        75_000_000.0 / residual as f64,
    )
    .unwrap();
    let d = Decomposition::from_counts(
        N,
        R_TOK,
        u_top,
        u_rare,
        recovery.recovered_tokens(),
        &calibration,
        1_000_000,
        10,
    )
    .unwrap();
    assert_eq!(d.u_rare, 225_583_729, "hard-error bucket");
    assert_eq!(d.u_mid, 79_882_818, "mid bucket");
    assert_eq!(d.u_top + d.u_rare + d.u_mid, N - R_TOK);
    assert_eq!(d.oov_low, 50_000_000);
    assert_eq!(d.oov_high, 75_000_000);
    assert_close(d.approx_rate_low() * 100.0, 74.0, 1.0, "approx rate low");
    assert_close(d.approx_rate_high() * 100.0, 75.0, 1.0, "approx rate high");

    let elapsed = t0.elapsed();
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    println!("criterion 1 (published-figure replay): PASS in {elapsed:?}");
}

// ---- criterion 2 ------------------------------------------------------------

#[test]
fn criterion_2_spectrum_identities() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);

    for case in 0..1_000u32 {
        let tokens: Vec<TokenRecord> = if case % 2 == 0 {
            // Zipf-distributed draws
            let forms = rng.random_range(10..4000) as f64;
            let s = rng.random_range(1.05..2.0);
            let zipf = Zipf::new(forms, s).unwrap();
            let n = rng.random_range(100..2000);
            (0..n)
                .map(|_| {
                    let rank = zipf.sample(&mut rng) as usize;
                    record(word_for(rank))
                })
                .collect()
        } else {
            // uniform draws, including empty corpora
            let vocab = rng.random_range(1..500);
            let n = rng.random_range(0..2000);
            (0..n)
                .map(|_| record(word_for(rng.random_range(0..vocab))))
                .collect()
        };
        let table = count_tokens(tokens, CountOptions::default()).unwrap();
        let spec = spectrum(&table);
        assert_eq!(spec.total_types(), table.v(), "case {case}: Σ V(m) = V");
        assert_eq!(spec.total_tokens(), table.n(), "case {case}: Σ m·V(m) = N");
    }

    let elapsed = t0.elapsed();
    assert!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    println!("criterion 2 (spectrum identities, 1000 tables): PASS in {elapsed:?}");
}

// ---- criterion 3 ------------------------------------------------------------

#[test]
fn criterion_3_counting_oracle_and_pipeline_budget() {
    const TOKENS: usize = 10_000_000;
    const VOCAB: usize = 120_000;

    let vocab: Vec<String> = (0..VOCAB).map(word_for).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let zipf = Zipf::new(VOCAB as f64, 1.2).unwrap();
    let ranks: Vec<u32> = (0..TOKENS)
        .map(|_| (zipf.sample(&mut rng) as u32).saturating_sub(1))
        .collect();
    let stream = |range: std::ops::Range<usize>| {
        let vocab = &vocab;
        ranks[range]
            .iter()
            .map(move |&r| record(vocab[r as usize].clone()))
    };

    // naive single-pass oracle (counts ranks, then maps to surfaces)
    let mut rank_counts: HashMap<u32, u64> = HashMap::new();
    for &r in &ranks {
        *rank_counts.entry(r).or_insert(0) += 1;
    }
    let mut expected: Vec<(String, u64)> = rank_counts
        .iter()
        .map(|(&r, &c)| (vocab[r as usize].clone(), c))
        .collect();
    expected.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let expected_n: u64 = expected.iter().map(|e| e.1).sum();
    assert_eq!(expected_n, TOKENS as u64);

    // four shard configurations, one of them with forced spilling
    for (config, (shards, spill)) in [
        (1usize, usize::MAX),
        (2, usize::MAX),
        (7, usize::MAX),
        (16, 30_000),
    ]
    .into_iter()
    .enumerate()
    {
        let opts = || CountOptions {
            spill_threshold: spill,
            ..CountOptions::default()
        };
        let chunk = TOKENS.div_ceil(shards);
        let tables: Vec<FrequencyTable> = (0..shards)
            .map(|i| {
                let lo = i * chunk;
                let hi = ((i + 1) * chunk).min(TOKENS);
                count_tokens(stream(lo..hi), opts()).unwrap()
            })
            .collect();
        let merged = merge_tables(tables, opts()).unwrap();
        assert_eq!(merged.n(), expected_n, "config {config}");
        assert_eq!(merged.entries(), expected.as_slice(), "config {config}");
    }

    // end-to-end pipeline budget: count, classify, profile, write artifacts
    let dir = tempfile::tempdir().unwrap();
    let t0 = Instant::now();
    let table = count_tokens(stream(0..TOKENS), CountOptions::default()).unwrap();
    let lexicon = Lexicon::new((0..40_000).map(word_for), "synthetic").unwrap();
    let chain = RecognizerChain::new(lexicon);
    let stats = classify_table(&table, &chain).unwrap();
    let k_list = [1_000u64, 10_000];
    assert!(
        table.entries()[10_000 - 1].1 > 10,
        "fixture: band cutoff must clear m_max"
    );
    let (profile, _) = build_profile(
        &table,
        &stats,
        &chain,
        &[],
        OovCalibration::from_fractions(0.0, 0.0).unwrap(),
        token_source_fingerprint("criterion3", table.n()),
        &k_list,
        10,
    )
    .unwrap();
    profile
        .write_json(&dir.path().join("profile.json"))
        .unwrap();
    let elapsed = t0.elapsed();
    assert!(
        elapsed < Duration::from_secs(60),
        "10 M-token pipeline took {elapsed:?}"
    );
    assert_eq!(profile.raw.n, TOKENS as u64);
    println!("criterion 3 (counting oracle, 4 shard configs; 10 M pipeline in {elapsed:?}): PASS");
}

// ---- criteria 4 and 7 ---------------------------------------------------------

const SIM_VOCAB_FORMS: usize = 49_900;
const SIM_PLANTED_FORMS: usize = 100;
const SIM_TOKENS: usize = 100_000;
const SIM_SEED: u64 = 4242;

// Vocabulary spread sparsely through the 6-letter word space (step 53, a
// prime not dividing any single-character index shift), so a substitution of
// one vocabulary word never lands on another. Real-word collisions come only
// from explicitly planted variant forms, keeping them measurable but rare.
const SIM_SPACE_OFFSET: usize = 248_832; // 12^5: every stem gets 6 letters
const SIM_STEP: usize = 53;

/// The "nen" suffix guarantees a confusable character in every word, so the
/// injected error rate is actually reached; substitutions inside it produce
/// suffixes no vocabulary word has.
fn sim_word(i: usize) -> String {
    let mut word = word_for(SIM_SPACE_OFFSET + i * SIM_STEP);
    word.push_str("nen");
    word
}

fn sim_corpus() -> (Vec<TokenRecord>, Lexicon) {
    let vocab: Vec<String> = (0..SIM_VOCAB_FORMS).map(sim_word).collect();

    // plant i→l variants of frequent forms as collision targets
    let vocab_set: std::collections::HashSet<&str> = vocab.iter().map(String::as_str).collect();
    let mut planted: Vec<String> = Vec::new();
    for form in &vocab {
        if planted.len() == SIM_PLANTED_FORMS {
            break;
        }
        let variant = form.replace('i', "l");
        if variant != *form && !vocab_set.contains(variant.as_str()) && !planted.contains(&variant)
        {
            planted.push(variant);
        }
    }
    assert_eq!(
        planted.len(),
        SIM_PLANTED_FORMS,
        "fixture: planted variants"
    );

    let lexicon = Lexicon::new(vocab.iter().cloned().chain(planted), "synthetic").unwrap();
    assert_eq!(lexicon.len(), SIM_VOCAB_FORMS + SIM_PLANTED_FORMS);

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let zipf = Zipf::new(SIM_VOCAB_FORMS as f64, 1.3).unwrap();
    let tokens: Vec<TokenRecord> = (0..SIM_TOKENS)
        .map(|_| {
            let rank = (zipf.sample(&mut rng) as usize).saturating_sub(1);
            record(vocab[rank].clone())
        })
        .collect();
    (tokens, lexicon)
}

/// Profile settings that keep the top band clear of the rare classes for the
/// steep synthetic corpus.
const SIM_K_LIST: [u64; 2] = [10, 100];
const SIM_M_MAX: u64 = 5;

fn sim_profile(
    tokens: &[TokenRecord],
    lexicon: &Lexicon,
) -> (
    FrequencyTable,
    RecognitionStats,
    lexqual::profile::QualityProfile,
) {
    let table = count_tokens(tokens.iter().cloned(), CountOptions::default()).unwrap();
    let cutoff = table.entries()[(SIM_K_LIST[1] as usize).min(table.entries().len()) - 1].1;
    assert!(cutoff > SIM_M_MAX, "fixture: cutoff {cutoff} too low");
    let chain = RecognizerChain::new(lexicon.clone());
    let stats = classify_table(&table, &chain).unwrap();
    let (profile, _) = build_profile(
        &table,
        &stats,
        &chain,
        &[],
        OovCalibration::from_fractions(0.0, 0.0).unwrap(),
        token_source_fingerprint("sim", table.n()),
        &SIM_K_LIST,
        SIM_M_MAX,
    )
    .unwrap();
    (table, stats, profile)
}

#[test]
fn criterion_4_noise_oracle_estimation() {
    let (clean, lexicon) = sim_corpus();

    for wer in [0.05f64, 0.20] {
        let t0 = Instant::now();
        let model = NoiseModel::fraktur(wer, SIM_SEED).unwrap();
        let (noisy, truth) = corrupt_corpus(&clean, &model, &lexicon).unwrap();
        let (table, stats, profile) = sim_profile(&noisy, &lexicon);

        // unrecognized-token rate vs ground truth WER minus collisions
        let gaps = estimator_error(&profile, &truth).unwrap();
        assert!(
            gaps.adjusted_gap.abs() <= 0.005,
            "wer {wer}: adjusted gap {} exceeds 0.5 pp",
            gaps.adjusted_gap
        );

        // per-token verdicts equal corruption flags exactly, except collisions
        let verdict_of: HashMap<&str, bool> = table
            .entries()
            .iter()
            .zip(stats.verdicts())
            .map(|((surface, _), verdict)| (surface.as_str(), verdict.recognized))
            .collect();
        for (i, token) in noisy.iter().enumerate() {
            let recognized = verdict_of[token.surface.as_str()];
            let colliding = truth.flags()[i] && lexicon.contains(&token.surface);
            assert_eq!(
                recognized,
                !truth.flags()[i] || colliding,
                "token {i} ({:?})",
                token.surface
            );
        }

        let elapsed = t0.elapsed();
        assert!(
            elapsed < Duration::from_secs(5),
            "wer {wer} took {elapsed:?}"
        );
        println!(
            "criterion 4 (noise oracle, wer {wer}): PASS in {elapsed:?} \
             (true wer {:.4}, collisions {})",
            truth.true_wer(),
            truth.collisions()
        );
    }
}

#[test]
fn criterion_7_improvement_detection() {
    let (clean, lexicon) = sim_corpus();
    let model = NoiseModel::fraktur(0.20, SIM_SEED).unwrap();
    let (noisy, truth) = corrupt_corpus(&clean, &model, &lexicon).unwrap();

    // repair a known 30 % of corrupted tokens (every corrupted ordinal 0,1,2 mod 10)
    let repair = |share_of_ten: u64| {
        let mut repaired = noisy.clone();
        let mut ordinal = 0u64;
        for (i, &flag) in truth.flags().iter().enumerate() {
            if flag {
                if ordinal % 10 < share_of_ten {
                    repaired[i] = clean[i].clone();
                }
                ordinal += 1;
            }
        }
        repaired
    };
    let repaired = repair(3);

    let (_, _, before) = sim_profile(&noisy, &lexicon);
    let (_, _, after) = sim_profile(&repaired, &lexicon);
    let thresholds = ImprovementThresholds {
        min_token_delta_pp: 3.0,
        hapax: HapaxThreshold::Relative(0.05),
    };
    let report = compare_profiles(&before, &after, &thresholds, false).unwrap();

    // direct recomputation: plain per-token and per-type loops
    let direct_token_rate = |tokens: &[TokenRecord]| {
        let recognized = tokens
            .iter()
            .filter(|t| lexicon.contains(&t.surface))
            .count();
        recognized as f64 / tokens.len() as f64
    };
    let direct_type_rate = |tokens: &[TokenRecord]| {
        let types: std::collections::HashSet<&str> =
            tokens.iter().map(|t| t.surface.as_str()).collect();
        let recognized = types.iter().filter(|s| lexicon.contains(s)).count();
        recognized as f64 / types.len() as f64
    };
    let direct_hapax_unrec = |tokens: &[TokenRecord]| {
        let mut counts: HashMap<&str, u64> = HashMap::new();
        for t in tokens {
            *counts.entry(t.surface.as_str()).or_insert(0) += 1;
        }
        counts
            .iter()
            .filter(|(s, &c)| c == 1 && !lexicon.contains(s))
            .count() as u64
    };
    let direct_band_unrec_pct = |tokens: &[TokenRecord], k: usize| {
        let mut counts: HashMap<&str, u64> = HashMap::new();
        for t in tokens {
            *counts.entry(t.surface.as_str()).or_insert(0) += 1;
        }
        let mut entries: Vec<(&str, u64)> = counts.into_iter().collect();
        entries.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        entries.truncate(k);
        let band: u64 = entries.iter().map(|e| e.1).sum();
        let unrec: u64 = entries
            .iter()
            .filter(|(s, _)| !lexicon.contains(s))
            .map(|e| e.1)
            .sum();
        unrec as f64 / band as f64
    };

    let expected_token_delta = (direct_token_rate(&repaired) - direct_token_rate(&noisy)) * 100.0;
    let expected_type_delta = (direct_type_rate(&repaired) - direct_type_rate(&noisy)) * 100.0;
    assert_close(
        report.token_rate_delta_pp,
        expected_token_delta,
        1e-9,
        "token delta vs direct recomputation",
    );
    assert_close(
        report.type_rate_delta_pp,
        expected_type_delta,
        1e-9,
        "type delta vs direct recomputation",
    );
    assert_eq!(report.hapax_unrec_before, direct_hapax_unrec(&noisy));
    assert_eq!(report.hapax_unrec_after, direct_hapax_unrec(&repaired));
    let band100 = report.bands.iter().find(|b| b.k == 100).unwrap();
    assert_close(
        band100.delta_pp,
        (direct_band_unrec_pct(&repaired, 100) - direct_band_unrec_pct(&noisy, 100)) * 100.0,
        1e-9,
        "top-100 band delta vs direct recomputation",
    );

    // the 3 pp threshold fires iff the arithmetic delta clears it
    assert_eq!(
        report.token_threshold_met,
        report.token_rate_delta_pp >= 3.0
    );
    assert!(
        report.token_threshold_met,
        "repairing 30 % of a 20 % WER corpus must clear 3 pp (got {:+.2})",
        report.token_rate_delta_pp
    );

    // a token-level repair too small to clear the threshold must not fire
    let barely = repair(1);
    let (_, _, after_small) = sim_profile(&barely, &lexicon);
    let small = compare_profiles(&before, &after_small, &thresholds, false).unwrap();
    assert_eq!(small.token_threshold_met, small.token_rate_delta_pp >= 3.0);
    assert!(
        !small.token_threshold_met,
        "repairing 10 % of corrupted tokens should stay under 3 pp (got {:+.2})",
        small.token_rate_delta_pp
    );

    println!(
        "criterion 7 (improvement detection): PASS (delta {:+.2} pp fires, {:+.2} pp does not)",
        report.token_rate_delta_pp, small.token_rate_delta_pp
    );
}

// ---- criterion 5 ------------------------------------------------------------

#[test]
fn criterion_5_wv_recovery_oracle() {
    // lexicon of v-words and v-free fillers; no w anywhere
    let v_words = ["vesi", "vapaa", "voima", "talvi", "kivi", "savu", "virta"];
    let fillers = ["talo", "kala", "ranta", "koski", "lehti", "maa"];
    let lexicon = Lexicon::new(
        v_words.iter().chain(fillers.iter()).map(|s| s.to_string()),
        "synthetic",
    )
    .unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let clean: Vec<TokenRecord> = (0..5_000)
        .map(|_| {
            let all = [v_words.as_slice(), fillers.as_slice()].concat();
            record(all[rng.random_range(0..all.len())].to_string())
        })
        .collect();

    // substitute v→w in a known fraction of the v-carrying tokens
    let mut substituted_tokens = 0u64;
    let noisy: Vec<TokenRecord> = clean
        .iter()
        .enumerate()
        .map(|(i, token)| {
            if token.surface.contains('v') && i % 10 < 3 {
                substituted_tokens += 1;
                record(token.surface.replace('v', "w"))
            } else {
                token.clone()
            }
        })
        .collect();

    let table = count_tokens(noisy.iter().cloned(), CountOptions::default()).unwrap();
    let chain = RecognizerChain::new(lexicon);
    let stats = classify_table(&table, &chain).unwrap();
    let recovery = wv_recovery(&table, &stats, &chain, 1_000_000).unwrap();

    assert_eq!(
        recovery.recovered_tokens(),
        substituted_tokens,
        "recovered tokens must equal the substitution oracle exactly"
    );
    assert_eq!(recovery.unrec_after_tokens, 0);
    assert_eq!(recovery.w_tokens, substituted_tokens);

    // normalization properties on random strings
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let chars: Vec<char> = "abcdefghijklmnopqrstuvwxyzwwWVÄäöå".chars().collect();
    for _ in 0..2_000 {
        let len = rng.random_range(0..24);
        let word: String = (0..len)
            .map(|_| chars[rng.random_range(0..chars.len())])
            .collect();
        let normalized = normalize_wv(&word);
        assert_eq!(normalize_wv(&normalized), normalized, "idempotent");
        assert!(!normalized.contains(['w', 'W']), "no w remains");
        assert_eq!(
            normalized.chars().count(),
            word.chars().count(),
            "length preserved"
        );
        for (a, b) in word.chars().zip(normalized.chars()) {
            if a != 'w' && a != 'W' {
                assert_eq!(a, b, "non-w characters unchanged");
            }
        }
    }

    println!(
        "criterion 5 (w/v recovery oracle): PASS ({substituted_tokens} substituted tokens recovered exactly)"
    );
}

// ---- criterion 6 ------------------------------------------------------------

struct CliRun {
    stdout: String,
    stderr: String,
    code: i32,
}

fn run_cli(args: &[&str]) -> CliRun {
    let out = Command::new(env!("CARGO_BIN_EXE_lexqual"))
        .args(args)
        .output()
        .expect("binary runs");
    CliRun {
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
        code: out.status.code().unwrap_or(-1),
    }
}

fn expect_ok(args: &[&str]) -> CliRun {
    let run = run_cli(args);
    assert_eq!(
        run.code, 0,
        "command {args:?} failed:\n{}\n{}",
        run.stdout, run.stderr
    );
    run
}

/// Writes the shared synthetic inputs: documents, manifest, lexicon, affix
/// rules. Everything derives from one seed.
fn write_determinism_inputs(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let vocab: Vec<String> = (0..40_000).map(word_for).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let zipf = Zipf::new(40_000.0, 1.4).unwrap();

    let mut manifest = String::new();
    for (doc, (year, tokens)) in [(1867, 90_000), (1885, 60_000)].into_iter().enumerate() {
        let mut text = String::new();
        for i in 0..tokens {
            let rank = (zipf.sample(&mut rng) as usize).saturating_sub(1);
            text.push_str(&vocab[rank]);
            // sprinkle punctuation and line breaks the tokenizer must strip
            match i % 13 {
                0 => text.push_str(", "),
                5 => text.push_str(".\n"),
                _ => text.push(' '),
            }
        }
        let name = format!("doc{doc}.txt");
        std::fs::write(dir.join(&name), text).unwrap();
        manifest.push_str(&format!("doc{doc}\t{name}\t{year}\n"));
    }
    let manifest_path = dir.join("manifest.tsv");
    std::fs::write(&manifest_path, manifest).unwrap();

    let lexicon_path = dir.join("lexicon.txt");
    let mut lines = String::new();
    for form in &vocab[..25_000] {
        lines.push_str(form);
        lines.push('\n');
    }
    std::fs::write(&lexicon_path, lines).unwrap();

    let affix_path = dir.join("affix.tsv");
    std::fs::write(&affix_path, "ta\t\nssa\t\n").unwrap();

    (manifest_path, lexicon_path, affix_path)
}

fn pipeline_artifacts(
    inputs: &(PathBuf, PathBuf, PathBuf),
    out: &Path,
    threads: &str,
) -> Vec<(String, Vec<u8>)> {
    let (manifest, lexicon, affix) = inputs;
    let ingest_dir = out.join("ingest");
    let sim_dir = out.join("sim");
    let freq_dir = out.join("freq");
    let analyze_dir = out.join("analyze");
    let profile_dir = out.join("profile");

    expect_ok(&[
        "ingest",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        ingest_dir.to_str().unwrap(),
        "--threads",
        threads,
    ]);
    let tokens = ingest_dir.join("tokens.txt");
    expect_ok(&[
        "simulate",
        "--tokens",
        tokens.to_str().unwrap(),
        "--lexicon",
        lexicon.to_str().unwrap(),
        "--wer",
        "0.15",
        "--seed",
        "99",
        "--out",
        sim_dir.to_str().unwrap(),
        "--threads",
        threads,
    ]);
    expect_ok(&[
        "freq",
        "--tokens",
        sim_dir.join("noisy.txt").to_str().unwrap(),
        "--out",
        freq_dir.to_str().unwrap(),
        "--threads",
        threads,
    ]);
    expect_ok(&[
        "analyze",
        "--freq",
        freq_dir.join("freq.tsv").to_str().unwrap(),
        "--lexicon",
        lexicon.to_str().unwrap(),
        "--affix",
        affix.to_str().unwrap(),
        "--wv",
        "on",
        "--out",
        analyze_dir.to_str().unwrap(),
        "--threads",
        threads,
    ]);
    expect_ok(&[
        "profile",
        "--stats",
        analyze_dir.join("stats.tsv").to_str().unwrap(),
        "--lexicon",
        lexicon.to_str().unwrap(),
        "--affix",
        affix.to_str().unwrap(),
        "--wv",
        "on",
        "--bands",
        "10,50",
        "--mmax",
        "3",
        "--oov",
        "0.1:0.2",
        "--format",
        "csv",
        "--out",
        profile_dir.to_str().unwrap(),
        "--threads",
        threads,
    ]);

    let mut artifacts = Vec::new();
    for dir in [&ingest_dir, &sim_dir, &freq_dir, &analyze_dir, &profile_dir] {
        let mut names: Vec<PathBuf> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        names.sort();
        for path in names {
            let rel = format!(
                "{}/{}",
                dir.file_name().unwrap().to_str().unwrap(),
                path.file_name().unwrap().to_str().unwrap()
            );
            artifacts.push((rel, std::fs::read(&path).unwrap()));
        }
    }
    artifacts
}

#[test]
fn criterion_6_determinism_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = write_determinism_inputs(dir.path());

    let run_a = pipeline_artifacts(&inputs, &dir.path().join("run_a"), "1");
    let run_b = pipeline_artifacts(&inputs, &dir.path().join("run_b"), "4");
    let run_c = pipeline_artifacts(&inputs, &dir.path().join("run_c"), "4");

    assert_eq!(run_a.len(), run_b.len());
    assert!(run_a.len() >= 15, "expected the full artifact set");
    for ((name_a, bytes_a), (name_b, bytes_b)) in run_a.iter().zip(&run_b) {
        assert_eq!(name_a, name_b);
        assert_eq!(
            bytes_a, bytes_b,
            "{name_a} differs between --threads 1 and --threads 4"
        );
    }
    for ((name_b, bytes_b), (name_c, bytes_c)) in run_b.iter().zip(&run_c) {
        assert_eq!(name_b, name_c);
        assert_eq!(
            bytes_b, bytes_c,
            "{name_b} differs between identical reruns"
        );
    }

    println!(
        "criterion 6 (determinism): PASS ({} artifacts byte-identical across reruns and thread counts)",
        run_a.len()
    );
}

// ---- criterion 8 ------------------------------------------------------------

#[test]
fn criterion_8_adapter_protocol_conformance() {
    let words = ["talo", "wapaa", "qqqq", "zzzz", "kala", "vesi", "aapa"];
    let table = count_tokens(
        words.iter().map(|w| record(w.to_string())),
        CountOptions::default(),
    )
    .unwrap();
    let empty_lexicon = Lexicon::new(std::iter::empty::<String>(), "empty").unwrap();

    let adapter = |command: &str| AdapterConfig {
        command: command.into(),
        batch_size: 3, // force multi-batch framing over 7 words
        timeout: Duration::from_secs(10),
    };

    // identity adapter: everything recognized at the external stage, in order
    let identity = r#"while read w; do printf '%s\t1\n' "$w"; done"#;
    let chain = RecognizerChain::new(empty_lexicon.clone()).with_adapter(adapter(identity));
    let stats = classify_table(&table, &chain).unwrap();
    assert_eq!(stats.recognized_types(), table.v());
    assert_eq!(stats.recognized_tokens(), table.n());
    assert!(stats
        .verdicts()
        .iter()
        .all(|v| v.recognized && v.stage == Stage::External));

    // all-reject adapter: nothing recognized
    let reject = r#"while read w; do printf '%s\t0\n' "$w"; done"#;
    let chain = RecognizerChain::new(empty_lexicon.clone()).with_adapter(adapter(reject));
    let stats = classify_table(&table, &chain).unwrap();
    assert_eq!(stats.recognized_types(), 0);

    // local stages win first; only misses reach the adapter
    let lexicon = Lexicon::new(["talo".to_string()], "one").unwrap();
    let chain = RecognizerChain::new(lexicon).with_adapter(adapter(identity));
    let stats = classify_table(&table, &chain).unwrap();
    let by_stage: HashMap<Stage, u64> = stats
        .stage_breakdown()
        .into_iter()
        .map(|(stage, types, _)| (stage, types))
        .collect();
    assert_eq!(by_stage[&Stage::Exact], 1);
    assert_eq!(by_stage[&Stage::External], table.v() - 1);

    let expect_adapter_err = |cfg: AdapterConfig| -> AdapterError {
        let chain = RecognizerChain::new(empty_lexicon.clone()).with_adapter(cfg);
        match classify_table(&table, &chain) {
            Err(RecognizeError::Adapter(e)) => e,
            other => panic!("expected adapter error, got {other:?}"),
        }
    };

    // count mismatch: clean exit after too few replies
    let short =
        r#"n=0; while read w; do n=$((n+1)); [ $n -le 3 ] && printf '%s\t1\n' "$w"; done; exit 0"#;
    match expect_adapter_err(adapter(short)) {
        AdapterError::CountMismatch {
            expected: 7,
            got: 3,
        } => {}
        other => panic!("expected count mismatch, got {other:?}"),
    }

    // crash mid-protocol
    let crash = r#"read w; printf '%s\t1\n' "$w"; exit 9"#;
    match expect_adapter_err(adapter(crash)) {
        AdapterError::Crashed { got: 1, .. } => {}
        other => panic!("expected crash, got {other:?}"),
    }

    // malformed reply line
    let malformed = r#"while read w; do printf '%s\tmaybe\n' "$w"; done"#;
    match expect_adapter_err(adapter(malformed)) {
        AdapterError::MalformedReply { line: 1, .. } => {}
        other => panic!("expected malformed reply, got {other:?}"),
    }

    // ordering violation is a malformed reply as well
    let shuffled = r#"while read w; do printf 'aaaa\t1\n'; done"#;
    match expect_adapter_err(adapter(shuffled)) {
        AdapterError::MalformedReply { .. } => {}
        other => panic!("expected ordering violation, got {other:?}"),
    }

    // timeout
    let t0 = Instant::now();
    let sleepy = AdapterConfig {
        command: "sleep 60".into(),
        batch_size: 3,
        timeout: Duration::from_millis(200),
    };
    match expect_adapter_err(sleepy) {
        AdapterError::Timeout { batch: 0, .. } => {}
        other => panic!("expected timeout, got {other:?}"),
    }
    assert!(t0.elapsed() < Duration::from_secs(5));

    println!("criterion 8 (adapter protocol conformance): PASS");
}
