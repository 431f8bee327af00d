//! Quality profiling: raw rates, band and spectrum reports, w→v recovery,
//! OOV calibration, unrecognized-token decomposition, and before/after
//! comparison.
//!
//! All token quantities are exact integers; rates become decimals only when a
//! report is rendered. Every report row type has a `from_counts` constructor
//! so published figures can be replayed through the same arithmetic that the
//! live pipeline uses.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::fingerprint::Fnv1a;
use crate::freq::{
    length_stats, select_band, BandSelector, FreqError, FrequencyTable, LengthStats,
};
use crate::ingest::DocumentMeta;
use crate::recognize::{normalize_wv, RecognitionStats, RecognizeError, RecognizerChain};

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("bad band list: {0}")]
    BandList(String),
    #[error("recognition stats carry no per-type verdicts")]
    MissingVerdicts,
    #[error("top band cutoff frequency {cutoff} does not exceed m_max {m_max}; bands overlap")]
    PartitionOverlap { cutoff: u64, m_max: u64 },
    #[error("w/v recovery ({recovered} tokens) exceeds the unrecognized top band ({u_top})")]
    RecoveryExceedsBand { recovered: u64, u_top: u64 },
    #[error("inconsistent decomposition inputs: {0}")]
    InconsistentBuckets(String),
    #[error("calibration: {0}")]
    Calibration(String),
    #[error("reference corpus {0:?} is empty")]
    EmptyReference(String),
    #[error(
        "profiles come from different corpora ({before} vs {after}); pass force to compare anyway"
    )]
    CorpusMismatch { before: String, after: String },
    #[error(transparent)]
    Freq(#[from] FreqError),
    #[error(transparent)]
    Recognize(#[from] RecognizeError),
}

/// Overall token/type recognition, before any recovery or OOV adjustment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRates {
    pub n: u64,
    pub v: u64,
    pub recognized_tokens: u64,
    pub recognized_types: u64,
    /// Set when the corpus had no tokens; rates are then 0 by definition.
    pub empty: bool,
}

impl RawRates {
    pub fn from_counts(n: u64, v: u64, recognized_tokens: u64, recognized_types: u64) -> Self {
        assert!(recognized_tokens <= n && recognized_types <= v);
        Self {
            n,
            v,
            recognized_tokens,
            recognized_types,
            empty: n == 0,
        }
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

    pub fn unrecognized_tokens(&self) -> u64 {
        self.n - self.recognized_tokens
    }
}

pub fn raw_rates(stats: &RecognitionStats) -> RawRates {
    RawRates::from_counts(
        stats.n(),
        stats.v(),
        stats.recognized_tokens(),
        stats.recognized_types(),
    )
}

/// One top-K row: counts over the K most frequent types.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BandRow {
    /// Requested K (may exceed `band_types` when clamped to V).
    pub k: u64,
    pub band_types: u64,
    pub unrec_types: u64,
    pub band_tokens: u64,
    pub unrec_tokens: u64,
    pub table_n: u64,
}

impl BandRow {
    pub fn from_counts(
        k: u64,
        band_types: u64,
        unrec_types: u64,
        band_tokens: u64,
        unrec_tokens: u64,
        table_n: u64,
    ) -> Self {
        assert!(unrec_types <= band_types && unrec_tokens <= band_tokens);
        Self {
            k,
            band_types,
            unrec_types,
            band_tokens,
            unrec_tokens,
            table_n,
        }
    }

    /// Unrecognized share of the band's types.
    pub fn unrec_type_pct(&self) -> f64 {
        ratio(self.unrec_types, self.band_types)
    }

    /// Token share of the whole corpus covered by this band.
    pub fn coverage(&self) -> f64 {
        ratio(self.band_tokens, self.table_n)
    }

    /// Unrecognized share of the band's tokens.
    pub fn unrec_token_pct(&self) -> f64 {
        ratio(self.unrec_tokens, self.band_tokens)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Per-K rows over the table's canonical order; ties at each cutoff resolve
/// lexicographically by construction. K values beyond V are clamped, with a
/// warning returned alongside the rows.
pub fn band_report(
    table: &FrequencyTable,
    stats: &RecognitionStats,
    k_list: &[u64],
) -> Result<(Vec<BandRow>, Vec<String>), ProfileError> {
    if k_list.is_empty() {
        return Err(ProfileError::BandList("empty K list".into()));
    }
    if k_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ProfileError::BandList(format!(
            "K list must be strictly increasing, got {k_list:?}"
        )));
    }
    if k_list[0] == 0 {
        return Err(ProfileError::BandList("K must be >= 1".into()));
    }
    if !stats.has_verdicts() {
        return Err(ProfileError::MissingVerdicts);
    }

    let entries = table.entries();
    let verdicts = stats.verdicts();
    let mut warnings = Vec::new();
    let mut rows = Vec::with_capacity(k_list.len());

    let mut cum_tokens = 0u64;
    let mut cum_unrec_types = 0u64;
    let mut cum_unrec_tokens = 0u64;
    let mut next = 0usize; // next k_list index to emit
    for (i, (_, count)) in entries.iter().enumerate() {
        cum_tokens += count;
        if !verdicts[i].recognized {
            cum_unrec_types += 1;
            cum_unrec_tokens += count;
        }
        while next < k_list.len() && k_list[next] == (i + 1) as u64 {
            rows.push(BandRow::from_counts(
                k_list[next],
                (i + 1) as u64,
                cum_unrec_types,
                cum_tokens,
                cum_unrec_tokens,
                table.n(),
            ));
            next += 1;
        }
    }
    // whatever K values remain exceed V: clamp them to the whole table
    for &k in &k_list[next..] {
        warnings.push(format!("top-{k} clamped to V={}", table.v()));
        rows.push(BandRow::from_counts(
            k,
            table.v(),
            cum_unrec_types,
            cum_tokens,
            cum_unrec_tokens,
            table.n(),
        ));
    }
    Ok((rows, warnings))
}

/// One frequency-class row: types occurring exactly `m` times. The class's
/// token mass is exactly `m × types`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpectrumRow {
    pub m: u64,
    pub types: u64,
    pub unrec_types: u64,
}

impl SpectrumRow {
    pub fn from_counts(m: u64, types: u64, unrec_types: u64) -> Self {
        assert!(unrec_types <= types);
        Self {
            m,
            types,
            unrec_types,
        }
    }

    pub fn tokens(&self) -> u64 {
        self.m * self.types
    }

    pub fn unrec_tokens(&self) -> u64 {
        self.m * self.unrec_types
    }

    pub fn unrec_type_pct(&self) -> f64 {
        ratio(self.unrec_types, self.types)
    }
}

/// Rows for every class `m` in `1..=m_max`, including empty classes.
pub fn spectrum_report(
    table: &FrequencyTable,
    stats: &RecognitionStats,
    m_max: u64,
) -> Result<Vec<SpectrumRow>, ProfileError> {
    if !stats.has_verdicts() {
        return Err(ProfileError::MissingVerdicts);
    }
    let verdicts = stats.verdicts();
    let mut rows = Vec::with_capacity(m_max as usize);
    for m in 1..=m_max {
        let slice = select_band(table, BandSelector::ClassM(m))?;
        let offset = slice.table_offset();
        let unrec = (0..slice.len())
            .filter(|&i| !verdicts[offset + i].recognized)
            .count() as u64;
        rows.push(SpectrumRow::from_counts(m, slice.len() as u64, unrec));
    }
    Ok(rows)
}

/// Effect of the w→v retry over a top band: how many currently unrecognized
/// tokens become recognized when their `w`s are replaced with `v`s.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WvRecovery {
    pub band_k: u64,
    pub w_types: u64,
    pub w_tokens: u64,
    pub unrec_before_types: u64,
    pub unrec_before_tokens: u64,
    pub unrec_after_types: u64,
    pub unrec_after_tokens: u64,
}

impl WvRecovery {
    pub fn from_counts(
        band_k: u64,
        w_types: u64,
        w_tokens: u64,
        unrec_before_types: u64,
        unrec_before_tokens: u64,
        unrec_after_types: u64,
        unrec_after_tokens: u64,
    ) -> Self {
        assert!(unrec_after_types <= unrec_before_types);
        assert!(unrec_after_tokens <= unrec_before_tokens);
        assert!(unrec_before_types <= w_types && unrec_before_tokens <= w_tokens);
        Self {
            band_k,
            w_types,
            w_tokens,
            unrec_before_types,
            unrec_before_tokens,
            unrec_after_types,
            unrec_after_tokens,
        }
    }

    pub fn recovered_tokens(&self) -> u64 {
        self.unrec_before_tokens - self.unrec_after_tokens
    }

    pub fn recovered_types(&self) -> u64 {
        self.unrec_before_types - self.unrec_after_types
    }
}

/// Measures w→v recovery over the top-`band_k` band, relative to the stats'
/// verdicts: "before" counts the band's w-types the chain left unrecognized,
/// "after" those still unrecognized when their normalized form is re-run
/// through the chain's local stages. With the wv stage already enabled in the
/// chain the recovery is therefore zero — those tokens are in the raw rate.
pub fn wv_recovery(
    table: &FrequencyTable,
    stats: &RecognitionStats,
    chain: &RecognizerChain,
    band_k: u64,
) -> Result<WvRecovery, ProfileError> {
    if !stats.has_verdicts() {
        return Err(ProfileError::MissingVerdicts);
    }
    let verdicts = stats.verdicts();
    let band_len = (band_k as usize).min(table.entries().len());
    let mut w_types = 0;
    let mut w_tokens = 0;
    let mut before_types = 0;
    let mut before_tokens = 0;
    let mut after_types = 0;
    let mut after_tokens = 0;
    for (i, (surface, count)) in table.entries()[..band_len].iter().enumerate() {
        if !surface.contains(['w', 'W']) {
            continue;
        }
        w_types += 1;
        w_tokens += count;
        if verdicts[i].recognized {
            continue;
        }
        before_types += 1;
        before_tokens += count;
        if !chain.recognize_word(&normalize_wv(surface)).recognized {
            after_types += 1;
            after_tokens += count;
        }
    }
    Ok(WvRecovery::from_counts(
        band_k,
        w_types,
        w_tokens,
        before_types,
        before_tokens,
        after_types,
        after_tokens,
    ))
}

/// OOV token-share interval calibrated from edited reference corpora.
#[derive(Debug, Clone, PartialEq)]
pub struct OovCalibration {
    pub low: f64,
    pub high: f64,
    /// (reference name, measured token OOV rate) pairs the interval came from.
    pub provenance: Vec<(String, f64)>,
}

/// Fallback interval for late-19th-century edited material when no reference
/// corpora are supplied.
pub const DEFAULT_OOV_INTERVAL: (f64, f64) = (0.135, 0.20);

impl OovCalibration {
    pub fn from_fractions(low: f64, high: f64) -> Result<Self, ProfileError> {
        if !(0.0..=1.0).contains(&low) || !(0.0..=1.0).contains(&high) || low > high {
            return Err(ProfileError::Calibration(format!(
                "need 0 <= low <= high <= 1, got [{low}, {high}]"
            )));
        }
        Ok(Self {
            low,
            high,
            provenance: Vec::new(),
        })
    }

    pub fn default_interval() -> Self {
        Self {
            low: DEFAULT_OOV_INTERVAL.0,
            high: DEFAULT_OOV_INTERVAL.1,
            provenance: Vec::new(),
        }
    }
}

/// Derives the OOV interval from reference corpora analyzed with the same
/// chain: each contributes `1 − token recognition rate`, and the interval is
/// their min/max. With no references, falls back to the default interval
/// when `allow_default` is set and errors otherwise.
pub fn calibrate_oov(
    references: &[(String, RecognitionStats)],
    allow_default: bool,
) -> Result<OovCalibration, ProfileError> {
    if references.is_empty() {
        if allow_default {
            return Ok(OovCalibration::default_interval());
        }
        return Err(ProfileError::Calibration(
            "no reference corpora supplied and defaults disabled".into(),
        ));
    }
    let mut provenance = Vec::with_capacity(references.len());
    for (name, stats) in references {
        if stats.is_empty_corpus() {
            return Err(ProfileError::EmptyReference(name.clone()));
        }
        provenance.push((name.clone(), 1.0 - stats.token_rate()));
    }
    let low = provenance.iter().map(|(_, r)| *r).fold(f64::MAX, f64::min);
    let high = provenance.iter().map(|(_, r)| *r).fold(f64::MIN, f64::max);
    Ok(OovCalibration {
        low,
        high,
        provenance,
    })
}

/// Partition of the unrecognized token mass, with the OOV-adjusted
/// recognition-rate interval. All bucket arithmetic is exact integers.
///
/// `u_top + u_rare + u_mid = n − recognized_tokens` holds exactly. The OOV
/// estimate applies the calibration fractions to the post-recovery residual
/// of the top band (`u_top − w_recovered`); rare-class unrecognized tokens
/// count as hard errors wholesale.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub n: u64,
    pub recognized_tokens: u64,
    pub u_total: u64,
    pub u_top: u64,
    pub u_rare: u64,
    pub u_mid: u64,
    pub w_recovered: u64,
    pub oov_low: u64,
    pub oov_high: u64,
    pub easy_low: u64,
    pub easy_high: u64,
    pub band_k: u64,
    pub m_max: u64,
}

impl Decomposition {
    #[allow(clippy::too_many_arguments)]
    pub fn from_counts(
        n: u64,
        recognized_tokens: u64,
        u_top: u64,
        u_rare: u64,
        w_recovered: u64,
        calibration: &OovCalibration,
        band_k: u64,
        m_max: u64,
    ) -> Result<Self, ProfileError> {
        let u_total = n.checked_sub(recognized_tokens).ok_or_else(|| {
            ProfileError::InconsistentBuckets(format!(
                "recognized tokens {recognized_tokens} exceed N {n}"
            ))
        })?;
        let u_mid = u_total.checked_sub(u_top + u_rare).ok_or_else(|| {
            ProfileError::InconsistentBuckets(format!(
                "buckets u_top={u_top} + u_rare={u_rare} exceed total unrecognized {u_total}"
            ))
        })?;
        let residual = u_top
            .checked_sub(w_recovered)
            .ok_or(ProfileError::RecoveryExceedsBand {
                recovered: w_recovered,
                u_top,
            })?;
        let oov_low = ((calibration.low * residual as f64).round() as u64).min(residual);
        let oov_high = ((calibration.high * residual as f64).round() as u64).min(residual);
        Ok(Self {
            n,
            recognized_tokens,
            u_total,
            u_top,
            u_rare,
            u_mid,
            w_recovered,
            oov_low,
            oov_high,
            // a larger OOV share leaves fewer easy errors, so the bounds swap
            easy_low: residual - oov_high,
            easy_high: residual - oov_low,
            band_k,
            m_max,
        })
    }

    /// Hard-error range: the rare classes alone, up to rare plus the mass
    /// between the top band and the rare classes.
    pub fn hard_errors_low(&self) -> u64 {
        self.u_rare
    }

    pub fn hard_errors_high(&self) -> u64 {
        self.u_rare + self.u_mid
    }

    pub fn approx_tokens_low(&self) -> u64 {
        self.recognized_tokens + self.w_recovered + self.oov_low
    }

    pub fn approx_tokens_high(&self) -> u64 {
        self.recognized_tokens + self.w_recovered + self.oov_high
    }

    pub fn approx_rate_low(&self) -> f64 {
        ratio(self.approx_tokens_low(), self.n)
    }

    pub fn approx_rate_high(&self) -> f64 {
        ratio(self.approx_tokens_high(), self.n)
    }
}

/// Decomposes the unrecognized mass of a classified table. The top band and
/// the rare classes must not overlap: when anything is unrecognized, the
/// band's cutoff frequency has to exceed `m_max`.
pub fn decompose_unrecognized(
    table: &FrequencyTable,
    stats: &RecognitionStats,
    recovery: &WvRecovery,
    calibration: &OovCalibration,
    band_k: u64,
    m_max: u64,
) -> Result<Decomposition, ProfileError> {
    if !stats.has_verdicts() {
        return Err(ProfileError::MissingVerdicts);
    }
    let verdicts = stats.verdicts();
    let entries = table.entries();
    let band_len = (band_k as usize).min(entries.len());
    let u_total = stats.unrecognized_tokens();

    if u_total > 0 && band_len > 0 {
        let cutoff = entries[band_len - 1].1;
        if cutoff <= m_max {
            return Err(ProfileError::PartitionOverlap { cutoff, m_max });
        }
    }

    let mut u_top = 0;
    for (i, (_, count)) in entries[..band_len].iter().enumerate() {
        if !verdicts[i].recognized {
            u_top += count;
        }
    }
    let mut u_rare = 0;
    for (i, (_, count)) in entries.iter().enumerate() {
        if *count <= m_max && !verdicts[i].recognized {
            u_rare += count;
        }
    }
    Decomposition::from_counts(
        table.n(),
        stats.recognized_tokens(),
        u_top,
        u_rare,
        recovery.recovered_tokens(),
        calibration,
        band_k,
        m_max,
    )
}

/// Token recognition per publication decade.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecadeRow {
    pub decade: i32,
    pub n: u64,
    pub recognized_tokens: u64,
}

impl DecadeRow {
    pub fn token_rate(&self) -> f64 {
        ratio(self.recognized_tokens, self.n)
    }
}

/// One row per decade with tokens present, sorted by decade.
pub fn decade_report(per_decade: &[(i32, RecognitionStats)]) -> Vec<DecadeRow> {
    let mut rows: Vec<DecadeRow> = per_decade
        .iter()
        .filter(|(_, stats)| stats.n() > 0)
        .map(|(decade, stats)| DecadeRow {
            decade: *decade,
            n: stats.n(),
            recognized_tokens: stats.recognized_tokens(),
        })
        .collect();
    rows.sort_by_key(|r| r.decade);
    rows
}

/// Mean type lengths for one band or frequency class.
#[derive(Debug, Clone, PartialEq)]
pub struct LengthRow {
    pub selector: String,
    pub types: u64,
    pub mean_len: f64,
    pub mean_recognized: Option<f64>,
    pub mean_unrecognized: Option<f64>,
}

/// Length rows for every top-K band in `k_list` and every class up to
/// `m_max`; empty slices are skipped.
pub fn length_report(
    table: &FrequencyTable,
    stats: &RecognitionStats,
    k_list: &[u64],
    m_max: u64,
) -> Result<Vec<LengthRow>, ProfileError> {
    if !stats.has_verdicts() {
        return Err(ProfileError::MissingVerdicts);
    }
    let verdicts = stats.verdicts();
    let mut rows = Vec::new();
    let mut selectors: Vec<(String, BandSelector)> = k_list
        .iter()
        .map(|&k| (format!("top_{k}"), BandSelector::TopK(k as usize)))
        .collect();
    selectors.extend((1..=m_max).map(|m| (format!("freq_{m}"), BandSelector::ClassM(m))));

    for (name, selector) in selectors {
        let slice = select_band(table, selector)?;
        if slice.is_empty() {
            continue;
        }
        let offset = slice.table_offset();
        let flags: Vec<bool> = (0..slice.len())
            .map(|i| verdicts[offset + i].recognized)
            .collect();
        let LengthStats {
            mean_len,
            mean_recognized,
            mean_unrecognized,
        } = length_stats(&slice, Some(&flags))?;
        rows.push(LengthRow {
            selector: name,
            types: slice.len() as u64,
            mean_len,
            mean_recognized,
            mean_unrecognized,
        });
    }
    Ok(rows)
}

/// Identity of the chain configuration and the corpus a profile was built on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fingerprints {
    pub chain: String,
    pub corpus: String,
}

/// Corpus identity from manifest entries (doc ids and years).
pub fn manifest_fingerprint(docs: &[DocumentMeta]) -> String {
    let mut h = Fnv1a::new();
    for doc in docs {
        h.update_str(&doc.doc_id);
        h.update_u64(doc.year as u64);
    }
    h.finish_hex()
}

/// Corpus identity for a single token source (dump file, frequency table):
/// the source id plus the token count.
pub fn token_source_fingerprint(source_id: &str, n: u64) -> String {
    let mut h = Fnv1a::new();
    h.update_str(source_id);
    h.update_u64(n);
    h.finish_hex()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfileSettings {
    pub k_list: Vec<u64>,
    pub m_max: u64,
    pub band_k: u64,
}

/// The full report bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityProfile {
    pub raw: RawRates,
    pub bands: Vec<BandRow>,
    pub spectrum: Vec<SpectrumRow>,
    pub decades: Vec<DecadeRow>,
    pub lengths: Vec<LengthRow>,
    pub wv: WvRecovery,
    pub calibration: OovCalibration,
    pub decomposition: Decomposition,
    pub fingerprints: Fingerprints,
    pub settings: ProfileSettings,
}

/// Assembles the full profile from a classified table. `band_k` for the
/// recovery and decomposition is the last (largest) entry of `k_list`.
/// Returns the profile together with any clamp warnings.
#[allow(clippy::too_many_arguments)]
pub fn build_profile(
    table: &FrequencyTable,
    stats: &RecognitionStats,
    chain: &RecognizerChain,
    decades: &[(i32, RecognitionStats)],
    calibration: OovCalibration,
    corpus_fingerprint: String,
    k_list: &[u64],
    m_max: u64,
) -> Result<(QualityProfile, Vec<String>), ProfileError> {
    let (bands, warnings) = band_report(table, stats, k_list)?;
    let band_k = *k_list.last().expect("band_report validated k_list");
    let spectrum = spectrum_report(table, stats, m_max)?;
    let wv = wv_recovery(table, stats, chain, band_k)?;
    let decomposition = decompose_unrecognized(table, stats, &wv, &calibration, band_k, m_max)?;
    let lengths = length_report(table, stats, k_list, m_max)?;
    let profile = QualityProfile {
        raw: raw_rates(stats),
        bands,
        spectrum,
        decades: decade_report(decades),
        lengths,
        wv,
        calibration,
        decomposition,
        fingerprints: Fingerprints {
            chain: chain.fingerprint(),
            corpus: corpus_fingerprint,
        },
        settings: ProfileSettings {
            k_list: k_list.to_vec(),
            m_max,
            band_k,
        },
    };
    Ok((profile, warnings))
}

/// How to decide that the hapax-unrecognized drop is large enough.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HapaxThreshold {
    /// Absolute drop in unrecognized hapax types.
    Absolute(u64),
    /// Drop as a fraction of the before count.
    Relative(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImprovementThresholds {
    /// Minimum token-rate improvement, in percentage points.
    pub min_token_delta_pp: f64,
    pub hapax: HapaxThreshold,
}

impl Default for ImprovementThresholds {
    fn default() -> Self {
        Self {
            min_token_delta_pp: 3.0,
            hapax: HapaxThreshold::Absolute(10_000_000),
        }
    }
}

/// Per-band unrecognized-token-rate delta (after − before, in percentage
/// points; negative means fewer unrecognized tokens). `focus` marks the
/// 100 K – 1 M range where improvement matters most.
#[derive(Debug, Clone, PartialEq)]
pub struct BandDelta {
    pub k: u64,
    pub before_unrec_token_pct: f64,
    pub after_unrec_token_pct: f64,
    pub delta_pp: f64,
    pub focus: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImprovementReport {
    /// after − before, percentage points; positive is better.
    pub token_rate_delta_pp: f64,
    pub type_rate_delta_pp: f64,
    pub bands: Vec<BandDelta>,
    pub hapax_unrec_before: u64,
    pub hapax_unrec_after: u64,
    /// before − after; positive is better.
    pub hapax_drop: i64,
    pub token_threshold_met: bool,
    pub hapax_threshold_met: bool,
    pub passed: bool,
    pub warnings: Vec<String>,
}

const FOCUS_BAND_RANGE: (u64, u64) = (100_000, 1_000_000);

/// Compares two profiles of the same corpus. Different corpus fingerprints
/// are an error unless `force`; different chain fingerprints only add a
/// warning so that recognizer upgrades can still be assessed.
pub fn compare_profiles(
    before: &QualityProfile,
    after: &QualityProfile,
    thresholds: &ImprovementThresholds,
    force: bool,
) -> Result<ImprovementReport, ProfileError> {
    let mut warnings = Vec::new();
    if before.fingerprints.corpus != after.fingerprints.corpus {
        if !force {
            return Err(ProfileError::CorpusMismatch {
                before: before.fingerprints.corpus.clone(),
                after: after.fingerprints.corpus.clone(),
            });
        }
        warnings.push("corpus fingerprints differ; comparison forced".into());
    }
    if before.fingerprints.chain != after.fingerprints.chain {
        warnings.push("chain config fingerprints differ; rates are not directly comparable".into());
    }

    let token_rate_delta_pp = (after.raw.token_rate() - before.raw.token_rate()) * 100.0;
    let type_rate_delta_pp = (after.raw.type_rate() - before.raw.type_rate()) * 100.0;

    let after_bands: BTreeMap<u64, &BandRow> = after.bands.iter().map(|r| (r.k, r)).collect();
    let bands: Vec<BandDelta> = before
        .bands
        .iter()
        .filter_map(|b| {
            after_bands.get(&b.k).map(|a| BandDelta {
                k: b.k,
                before_unrec_token_pct: b.unrec_token_pct(),
                after_unrec_token_pct: a.unrec_token_pct(),
                delta_pp: (a.unrec_token_pct() - b.unrec_token_pct()) * 100.0,
                focus: b.k >= FOCUS_BAND_RANGE.0 && b.k <= FOCUS_BAND_RANGE.1,
            })
        })
        .collect();

    let hapax_unrec = |p: &QualityProfile| {
        p.spectrum
            .iter()
            .find(|r| r.m == 1)
            .map_or(0, |r| r.unrec_types)
    };
    let hapax_unrec_before = hapax_unrec(before);
    let hapax_unrec_after = hapax_unrec(after);
    let hapax_drop = hapax_unrec_before as i64 - hapax_unrec_after as i64;

    let token_threshold_met = token_rate_delta_pp >= thresholds.min_token_delta_pp;
    let hapax_threshold_met = match thresholds.hapax {
        HapaxThreshold::Absolute(min) => hapax_drop >= min as i64,
        HapaxThreshold::Relative(frac) => hapax_drop as f64 >= frac * hapax_unrec_before as f64,
    };

    Ok(ImprovementReport {
        token_rate_delta_pp,
        type_rate_delta_pp,
        bands,
        hapax_unrec_before,
        hapax_unrec_after,
        hapax_drop,
        token_threshold_met,
        hapax_threshold_met,
        passed: token_threshold_met && hapax_threshold_met,
        warnings,
    })
}
