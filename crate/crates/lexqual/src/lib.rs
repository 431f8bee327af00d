//! Lexical quality profiling for large OCRed text corpora.
//!
//! The pipeline estimates how much of a digitized collection is garbled by
//! measuring what share of its words a recognizer knows, then adjusting the
//! raw rate for historical orthography (w→v) and for genuinely unknown
//! vocabulary:
//!
//! 1. [`ingest`] — tokenize manifest-described documents into year-tagged
//!    surface forms.
//! 2. [`freq`] — exact frequency tables, frequency spectra V(m,N), top-K
//!    bands, and length statistics, with spill-to-disk counting.
//! 3. [`recognize`] — a staged word recognizer: lexicon lookup, case fold,
//!    suffix rules, w→v retry, optional external analyzer subprocess.
//! 4. [`profile`] — raw rates, band/spectrum/decade/length reports, w→v
//!    recovery, OOV calibration, the unrecognized-token decomposition with
//!    its approximated-recognition-rate interval, and before/after
//!    comparison.
//! 5. [`simulate`] — a seeded character-confusion channel with exact ground
//!    truth for validating the estimator end to end.
//!
//! All counting is exact integer arithmetic; rates are rendered only at
//! report time ([`report`]).

pub mod freq;
pub mod ingest;
pub mod profile;
pub mod recognize;
pub mod report;
pub mod simulate;

mod fingerprint;

pub use freq::{
    count_corpus, count_tokens, merge_tables, select_band, spectrum, BandSelector, BandSlice,
    CountOptions, FreqError, FrequencySpectrum, FrequencyTable, TokenCounter,
};
pub use ingest::{
    ingest_corpus, load_manifest, tokenize, DocumentMeta, IngestError, IngestOptions, TokenRecord,
    TokenizerOptions, YearRange,
};
pub use profile::{
    band_report, build_profile, calibrate_oov, compare_profiles, decade_report,
    decompose_unrecognized, raw_rates, spectrum_report, wv_recovery, Decomposition,
    ImprovementReport, ImprovementThresholds, OovCalibration, ProfileError, QualityProfile,
    RawRates,
};
pub use recognize::{
    classify_table, normalize_wv, AffixRule, AffixRuleSet, Lexicon, RecognitionStats,
    RecognizeError, RecognizerChain, Stage, Verdict,
};
pub use report::ReportError;
pub use simulate::{
    corrupt_corpus, estimator_error, ConfusionPair, GroundTruth, NoiseModel, SimulateError,
};
