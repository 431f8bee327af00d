//! Report rendering: the profile JSON document, per-section CSV export, and
//! the comparison report.
//!
//! Artifacts keep token quantities as exact integers; every rate is rendered
//! as a decimal string with 4 significant digits. Fields named `*_pct` hold
//! percentages, fields named `*_rate` hold fractions.

use std::fs;
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profile::{
    BandRow, DecadeRow, Decomposition, Fingerprints, ImprovementReport, LengthRow, OovCalibration,
    ProfileSettings, QualityProfile, RawRates, SpectrumRow, WvRecovery,
};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("i/o on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("json {path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("csv {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("invalid profile document: {0}")]
    Doc(String),
}

/// Renders a number with 4 significant digits (fixed notation).
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0.0000".into();
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (3 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Renders a fraction as a 4-significant-digit string.
pub fn fmt_rate(x: f64) -> String {
    fmt_sig(x)
}

/// Renders a percentage value with 4 significant digits.
pub fn fmt_pct(fraction: f64) -> String {
    fmt_sig(fraction * 100.0)
}

/// Renders `num/den` as a percentage with one decimal, rounded from the exact
/// integer ratio (the register of the human summary).
pub fn fmt_pct1(num: u64, den: u64) -> String {
    if den == 0 {
        return "0.0%".into();
    }
    let tenths = (u128::from(num) * 1000 + u128::from(den) / 2) / u128::from(den);
    format!("{}.{}%", tenths / 10, tenths % 10)
}

// ---- profile document -----------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
pub struct ProfileDoc {
    pub raw: RawDoc,
    pub bands: Vec<BandDoc>,
    pub spectrum: Vec<SpectrumDoc>,
    pub decades: Vec<DecadeDoc>,
    pub lengths: Vec<LengthDoc>,
    pub wv: WvDoc,
    pub calibration: CalibrationDoc,
    pub decomposition: DecompositionDoc,
    pub fingerprints: FingerprintsDoc,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RawDoc {
    pub n: u64,
    pub v: u64,
    pub recognized_tokens: u64,
    pub recognized_types: u64,
    pub empty: bool,
    pub token_rate: String,
    pub type_rate: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BandDoc {
    pub k: u64,
    pub band_types: u64,
    pub unrec_types: u64,
    pub unrec_type_pct: String,
    pub band_tokens: u64,
    pub coverage_pct: String,
    pub unrec_tokens: u64,
    pub unrec_token_pct: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SpectrumDoc {
    pub m: u64,
    pub v_m: u64,
    pub unrec_types: u64,
    pub unrec_type_pct: String,
    pub unrec_tokens: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DecadeDoc {
    pub decade: i32,
    pub n: u64,
    pub recognized_tokens: u64,
    pub token_rate: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LengthDoc {
    pub selector: String,
    pub types: u64,
    pub mean_type_length: f64,
    pub mean_recognized: Option<f64>,
    pub mean_unrecognized: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct WvDoc {
    pub band_k: u64,
    pub w_types: u64,
    pub w_tokens: u64,
    pub unrec_before_types: u64,
    pub unrec_before_tokens: u64,
    pub unrec_after_types: u64,
    pub unrec_after_tokens: u64,
    pub recovered_types: u64,
    pub recovered_tokens: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CalibrationDoc {
    pub oov_low: String,
    pub oov_high: String,
    pub provenance: Vec<ProvenanceDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ProvenanceDoc {
    pub name: String,
    pub oov_rate: String,
}

pub fn calibration_to_doc(cal: &OovCalibration) -> CalibrationDoc {
    CalibrationDoc {
        oov_low: fmt_rate(cal.low),
        oov_high: fmt_rate(cal.high),
        provenance: cal
            .provenance
            .iter()
            .map(|(name, rate)| ProvenanceDoc {
                name: name.clone(),
                oov_rate: fmt_rate(*rate),
            })
            .collect(),
    }
}

pub fn calibration_from_doc(doc: &CalibrationDoc) -> Result<OovCalibration, ReportError> {
    let parse = |s: &str, what: &str| {
        s.parse::<f64>()
            .map_err(|_| ReportError::Doc(format!("bad {what} rate {s:?}")))
    };
    let low = parse(&doc.oov_low, "calibration low")?;
    let high = parse(&doc.oov_high, "calibration high")?;
    if !(0.0..=1.0).contains(&low) || !(0.0..=1.0).contains(&high) || low > high {
        return Err(ReportError::Doc(format!(
            "calibration interval [{low}, {high}] out of order or range"
        )));
    }
    let mut provenance = Vec::with_capacity(doc.provenance.len());
    for p in &doc.provenance {
        provenance.push((p.name.clone(), parse(&p.oov_rate, "provenance")?));
    }
    Ok(OovCalibration {
        low,
        high,
        provenance,
    })
}

pub fn write_calibration_json(cal: &OovCalibration, path: &Path) -> Result<(), ReportError> {
    let file = fs::File::create(path).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &calibration_to_doc(cal)).map_err(|source| {
        ReportError::Json {
            path: path.to_path_buf(),
            source,
        }
    })?;
    use io::Write;
    writeln!(w).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_calibration_json(path: &Path) -> Result<OovCalibration, ReportError> {
    let data = fs::read_to_string(path).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let doc: CalibrationDoc = serde_json::from_str(&data).map_err(|source| ReportError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    calibration_from_doc(&doc)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DecompositionDoc {
    pub n: u64,
    pub recognized_tokens: u64,
    pub u_total: u64,
    pub u_top: u64,
    pub u_rare: u64,
    pub u_mid: u64,
    pub w_recovered: u64,
    pub oov_tokens_low: u64,
    pub oov_tokens_high: u64,
    pub easy_errors_low: u64,
    pub easy_errors_high: u64,
    pub hard_errors_low: u64,
    pub hard_errors_high: u64,
    pub approx_rate_low: String,
    pub approx_rate_high: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FingerprintsDoc {
    pub chain: String,
    pub corpus: String,
    pub settings: SettingsDoc,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SettingsDoc {
    pub k_list: Vec<u64>,
    pub m_max: u64,
    pub band_k: u64,
}

impl QualityProfile {
    pub fn to_doc(&self) -> ProfileDoc {
        ProfileDoc {
            raw: RawDoc {
                n: self.raw.n,
                v: self.raw.v,
                recognized_tokens: self.raw.recognized_tokens,
                recognized_types: self.raw.recognized_types,
                empty: self.raw.empty,
                token_rate: fmt_rate(self.raw.token_rate()),
                type_rate: fmt_rate(self.raw.type_rate()),
            },
            bands: self
                .bands
                .iter()
                .map(|b| BandDoc {
                    k: b.k,
                    band_types: b.band_types,
                    unrec_types: b.unrec_types,
                    unrec_type_pct: fmt_pct(b.unrec_type_pct()),
                    band_tokens: b.band_tokens,
                    coverage_pct: fmt_pct(b.coverage()),
                    unrec_tokens: b.unrec_tokens,
                    unrec_token_pct: fmt_pct(b.unrec_token_pct()),
                })
                .collect(),
            spectrum: self
                .spectrum
                .iter()
                .map(|r| SpectrumDoc {
                    m: r.m,
                    v_m: r.types,
                    unrec_types: r.unrec_types,
                    unrec_type_pct: fmt_pct(r.unrec_type_pct()),
                    unrec_tokens: r.unrec_tokens(),
                })
                .collect(),
            decades: self
                .decades
                .iter()
                .map(|d| DecadeDoc {
                    decade: d.decade,
                    n: d.n,
                    recognized_tokens: d.recognized_tokens,
                    token_rate: fmt_rate(d.token_rate()),
                })
                .collect(),
            lengths: self
                .lengths
                .iter()
                .map(|l| LengthDoc {
                    selector: l.selector.clone(),
                    types: l.types,
                    mean_type_length: l.mean_len,
                    mean_recognized: l.mean_recognized,
                    mean_unrecognized: l.mean_unrecognized,
                })
                .collect(),
            wv: WvDoc {
                band_k: self.wv.band_k,
                w_types: self.wv.w_types,
                w_tokens: self.wv.w_tokens,
                unrec_before_types: self.wv.unrec_before_types,
                unrec_before_tokens: self.wv.unrec_before_tokens,
                unrec_after_types: self.wv.unrec_after_types,
                unrec_after_tokens: self.wv.unrec_after_tokens,
                recovered_types: self.wv.recovered_types(),
                recovered_tokens: self.wv.recovered_tokens(),
            },
            calibration: calibration_to_doc(&self.calibration),
            decomposition: DecompositionDoc {
                n: self.decomposition.n,
                recognized_tokens: self.decomposition.recognized_tokens,
                u_total: self.decomposition.u_total,
                u_top: self.decomposition.u_top,
                u_rare: self.decomposition.u_rare,
                u_mid: self.decomposition.u_mid,
                w_recovered: self.decomposition.w_recovered,
                oov_tokens_low: self.decomposition.oov_low,
                oov_tokens_high: self.decomposition.oov_high,
                easy_errors_low: self.decomposition.easy_low,
                easy_errors_high: self.decomposition.easy_high,
                hard_errors_low: self.decomposition.hard_errors_low(),
                hard_errors_high: self.decomposition.hard_errors_high(),
                approx_rate_low: fmt_rate(self.decomposition.approx_rate_low()),
                approx_rate_high: fmt_rate(self.decomposition.approx_rate_high()),
            },
            fingerprints: FingerprintsDoc {
                chain: self.fingerprints.chain.clone(),
                corpus: self.fingerprints.corpus.clone(),
                settings: SettingsDoc {
                    k_list: self.settings.k_list.clone(),
                    m_max: self.settings.m_max,
                    band_k: self.settings.band_k,
                },
            },
        }
    }

    /// Rebuilds the integer-level profile from a document. Rate strings are
    /// derived values and are recomputed from the integers, except the
    /// calibration fractions which only exist as decimals.
    pub fn from_doc(doc: &ProfileDoc) -> Result<Self, ReportError> {
        let bad = |reason: &str| ReportError::Doc(reason.into());
        if doc.raw.recognized_tokens > doc.raw.n || doc.raw.recognized_types > doc.raw.v {
            return Err(bad("raw counts exceed totals"));
        }
        for b in &doc.bands {
            if b.unrec_types > b.band_types || b.unrec_tokens > b.band_tokens {
                return Err(bad("band unrecognized counts exceed band totals"));
            }
        }
        for s in &doc.spectrum {
            if s.unrec_types > s.v_m {
                return Err(bad("spectrum unrecognized types exceed class size"));
            }
        }
        let w = &doc.wv;
        if w.unrec_after_tokens > w.unrec_before_tokens
            || w.unrec_after_types > w.unrec_before_types
            || w.unrec_before_types > w.w_types
            || w.unrec_before_tokens > w.w_tokens
        {
            return Err(bad("wv recovery counts inconsistent"));
        }
        let d = &doc.decomposition;
        if d.u_top + d.u_rare + d.u_mid != d.u_total || d.recognized_tokens + d.u_total != d.n {
            return Err(bad(
                "decomposition buckets do not partition the unrecognized mass",
            ));
        }
        let calibration = calibration_from_doc(&doc.calibration)?;

        Ok(QualityProfile {
            raw: RawRates::from_counts(
                doc.raw.n,
                doc.raw.v,
                doc.raw.recognized_tokens,
                doc.raw.recognized_types,
            ),
            bands: doc
                .bands
                .iter()
                .map(|b| {
                    BandRow::from_counts(
                        b.k,
                        b.band_types,
                        b.unrec_types,
                        b.band_tokens,
                        b.unrec_tokens,
                        doc.raw.n,
                    )
                })
                .collect(),
            spectrum: doc
                .spectrum
                .iter()
                .map(|s| SpectrumRow::from_counts(s.m, s.v_m, s.unrec_types))
                .collect(),
            decades: doc
                .decades
                .iter()
                .map(|d| DecadeRow {
                    decade: d.decade,
                    n: d.n,
                    recognized_tokens: d.recognized_tokens,
                })
                .collect(),
            lengths: doc
                .lengths
                .iter()
                .map(|l| LengthRow {
                    selector: l.selector.clone(),
                    types: l.types,
                    mean_len: l.mean_type_length,
                    mean_recognized: l.mean_recognized,
                    mean_unrecognized: l.mean_unrecognized,
                })
                .collect(),
            wv: WvRecovery::from_counts(
                w.band_k,
                w.w_types,
                w.w_tokens,
                w.unrec_before_types,
                w.unrec_before_tokens,
                w.unrec_after_types,
                w.unrec_after_tokens,
            ),
            calibration,
            decomposition: Decomposition {
                n: d.n,
                recognized_tokens: d.recognized_tokens,
                u_total: d.u_total,
                u_top: d.u_top,
                u_rare: d.u_rare,
                u_mid: d.u_mid,
                w_recovered: d.w_recovered,
                oov_low: d.oov_tokens_low,
                oov_high: d.oov_tokens_high,
                easy_low: d.easy_errors_low,
                easy_high: d.easy_errors_high,
                band_k: doc.fingerprints.settings.band_k,
                m_max: doc.fingerprints.settings.m_max,
            },
            fingerprints: Fingerprints {
                chain: doc.fingerprints.chain.clone(),
                corpus: doc.fingerprints.corpus.clone(),
            },
            settings: ProfileSettings {
                k_list: doc.fingerprints.settings.k_list.clone(),
                m_max: doc.fingerprints.settings.m_max,
                band_k: doc.fingerprints.settings.band_k,
            },
        })
    }

    pub fn write_json(&self, path: &Path) -> Result<(), ReportError> {
        let file = fs::File::create(path).map_err(|source| ReportError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer_pretty(&mut w, &self.to_doc()).map_err(|source| {
            ReportError::Json {
                path: path.to_path_buf(),
                source,
            }
        })?;
        use io::Write;
        writeln!(w).map_err(|source| ReportError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn read_json(path: &Path) -> Result<Self, ReportError> {
        let data = fs::read_to_string(path).map_err(|source| ReportError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let doc: ProfileDoc = serde_json::from_str(&data).map_err(|source| ReportError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_doc(&doc)
    }
}

// ---- CSV export -------------------------------------------------------------

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, ReportError> {
    csv::Writer::from_path(path).map_err(|source| ReportError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes one CSV file per report section into `dir`, named
/// `profile_<section>.csv`. Returns the paths written.
pub fn write_csv_sections(
    profile: &QualityProfile,
    dir: &Path,
) -> Result<Vec<PathBuf>, ReportError> {
    let doc = profile.to_doc();
    let mut written = Vec::new();
    let err = |path: &Path| {
        let path = path.to_path_buf();
        move |source: csv::Error| ReportError::Csv {
            path: path.clone(),
            source,
        }
    };

    let path = dir.join("profile_raw.csv");
    let mut w = csv_writer(&path)?;
    w.write_record([
        "n",
        "v",
        "recognized_tokens",
        "recognized_types",
        "token_rate",
        "type_rate",
    ])
    .map_err(err(&path))?;
    w.write_record([
        doc.raw.n.to_string(),
        doc.raw.v.to_string(),
        doc.raw.recognized_tokens.to_string(),
        doc.raw.recognized_types.to_string(),
        doc.raw.token_rate.clone(),
        doc.raw.type_rate.clone(),
    ])
    .map_err(err(&path))?;
    w.flush().map_err(|source| ReportError::Io {
        path: path.clone(),
        source,
    })?;
    written.push(path);

    let path = dir.join("profile_bands.csv");
    let mut w = csv_writer(&path)?;
    w.write_record([
        "k",
        "band_types",
        "unrec_types",
        "unrec_type_pct",
        "band_tokens",
        "coverage_pct",
        "unrec_tokens",
        "unrec_token_pct",
    ])
    .map_err(err(&path))?;
    for b in &doc.bands {
        w.write_record([
            b.k.to_string(),
            b.band_types.to_string(),
            b.unrec_types.to_string(),
            b.unrec_type_pct.clone(),
            b.band_tokens.to_string(),
            b.coverage_pct.clone(),
            b.unrec_tokens.to_string(),
            b.unrec_token_pct.clone(),
        ])
        .map_err(err(&path))?;
    }
    w.flush().map_err(|source| ReportError::Io {
        path: path.clone(),
        source,
    })?;
    written.push(path);

    let path = dir.join("profile_spectrum.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["m", "v_m", "unrec_types", "unrec_type_pct", "unrec_tokens"])
        .map_err(err(&path))?;
    for s in &doc.spectrum {
        w.write_record([
            s.m.to_string(),
            s.v_m.to_string(),
            s.unrec_types.to_string(),
            s.unrec_type_pct.clone(),
            s.unrec_tokens.to_string(),
        ])
        .map_err(err(&path))?;
    }
    w.flush().map_err(|source| ReportError::Io {
        path: path.clone(),
        source,
    })?;
    written.push(path);

    let path = dir.join("profile_decades.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["decade", "n", "recognized_tokens", "token_rate"])
        .map_err(err(&path))?;
    for d in &doc.decades {
        w.write_record([
            d.decade.to_string(),
            d.n.to_string(),
            d.recognized_tokens.to_string(),
            d.token_rate.clone(),
        ])
        .map_err(err(&path))?;
    }
    w.flush().map_err(|source| ReportError::Io {
        path: path.clone(),
        source,
    })?;
    written.push(path);

    let path = dir.join("profile_lengths.csv");
    let mut w = csv_writer(&path)?;
    w.write_record([
        "selector",
        "types",
        "mean_type_length",
        "mean_recognized",
        "mean_unrecognized",
    ])
    .map_err(err(&path))?;
    for l in &doc.lengths {
        w.write_record([
            l.selector.clone(),
            l.types.to_string(),
            format!("{:.4}", l.mean_type_length),
            l.mean_recognized
                .map_or_else(String::new, |v| format!("{v:.4}")),
            l.mean_unrecognized
                .map_or_else(String::new, |v| format!("{v:.4}")),
        ])
        .map_err(err(&path))?;
    }
    w.flush().map_err(|source| ReportError::Io {
        path: path.clone(),
        source,
    })?;
    written.push(path);

    let path = dir.join("profile_wv.csv");
    let mut w = csv_writer(&path)?;
    w.write_record([
        "band_k",
        "w_types",
        "w_tokens",
        "unrec_before_types",
        "unrec_before_tokens",
        "unrec_after_types",
        "unrec_after_tokens",
        "recovered_types",
        "recovered_tokens",
    ])
    .map_err(err(&path))?;
    w.write_record([
        doc.wv.band_k.to_string(),
        doc.wv.w_types.to_string(),
        doc.wv.w_tokens.to_string(),
        doc.wv.unrec_before_types.to_string(),
        doc.wv.unrec_before_tokens.to_string(),
        doc.wv.unrec_after_types.to_string(),
        doc.wv.unrec_after_tokens.to_string(),
        doc.wv.recovered_types.to_string(),
        doc.wv.recovered_tokens.to_string(),
    ])
    .map_err(err(&path))?;
    w.flush().map_err(|source| ReportError::Io {
        path: path.clone(),
        source,
    })?;
    written.push(path);

    let path = dir.join("profile_calibration.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["kind", "name", "oov_rate"])
        .map_err(err(&path))?;
    w.write_record(["interval", "low", &doc.calibration.oov_low])
        .map_err(err(&path))?;
    w.write_record(["interval", "high", &doc.calibration.oov_high])
        .map_err(err(&path))?;
    for p in &doc.calibration.provenance {
        w.write_record(["reference", &p.name, &p.oov_rate])
            .map_err(err(&path))?;
    }
    w.flush().map_err(|source| ReportError::Io {
        path: path.clone(),
        source,
    })?;
    written.push(path);

    let path = dir.join("profile_decomposition.csv");
    let mut w = csv_writer(&path)?;
    let d = &doc.decomposition;
    w.write_record([
        "n",
        "recognized_tokens",
        "u_total",
        "u_top",
        "u_rare",
        "u_mid",
        "w_recovered",
        "oov_tokens_low",
        "oov_tokens_high",
        "easy_errors_low",
        "easy_errors_high",
        "hard_errors_low",
        "hard_errors_high",
        "approx_rate_low",
        "approx_rate_high",
    ])
    .map_err(err(&path))?;
    w.write_record([
        d.n.to_string(),
        d.recognized_tokens.to_string(),
        d.u_total.to_string(),
        d.u_top.to_string(),
        d.u_rare.to_string(),
        d.u_mid.to_string(),
        d.w_recovered.to_string(),
        d.oov_tokens_low.to_string(),
        d.oov_tokens_high.to_string(),
        d.easy_errors_low.to_string(),
        d.easy_errors_high.to_string(),
        d.hard_errors_low.to_string(),
        d.hard_errors_high.to_string(),
        d.approx_rate_low.clone(),
        d.approx_rate_high.clone(),
    ])
    .map_err(err(&path))?;
    w.flush().map_err(|source| ReportError::Io {
        path: path.clone(),
        source,
    })?;
    written.push(path);

    Ok(written)
}

// ---- comparison document ----------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
pub struct CompareDoc {
    pub token_rate_delta_pp: f64,
    pub type_rate_delta_pp: f64,
    pub bands: Vec<BandDeltaDoc>,
    pub hapax_unrec_before: u64,
    pub hapax_unrec_after: u64,
    pub hapax_drop: i64,
    pub token_threshold_met: bool,
    pub hapax_threshold_met: bool,
    pub passed: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BandDeltaDoc {
    pub k: u64,
    pub before_unrec_token_pct: String,
    pub after_unrec_token_pct: String,
    pub delta_pp: f64,
    pub focus: bool,
}

impl ImprovementReport {
    pub fn to_doc(&self) -> CompareDoc {
        CompareDoc {
            token_rate_delta_pp: self.token_rate_delta_pp,
            type_rate_delta_pp: self.type_rate_delta_pp,
            bands: self
                .bands
                .iter()
                .map(|b| BandDeltaDoc {
                    k: b.k,
                    before_unrec_token_pct: fmt_pct(b.before_unrec_token_pct),
                    after_unrec_token_pct: fmt_pct(b.after_unrec_token_pct),
                    delta_pp: b.delta_pp,
                    focus: b.focus,
                })
                .collect(),
            hapax_unrec_before: self.hapax_unrec_before,
            hapax_unrec_after: self.hapax_unrec_after,
            hapax_drop: self.hapax_drop,
            token_threshold_met: self.token_threshold_met,
            hapax_threshold_met: self.hapax_threshold_met,
            passed: self.passed,
            warnings: self.warnings.clone(),
        }
    }

    pub fn write_json(&self, path: &Path) -> Result<(), ReportError> {
        let file = fs::File::create(path).map_err(|source| ReportError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer_pretty(&mut w, &self.to_doc()).map_err(|source| {
            ReportError::Json {
                path: path.to_path_buf(),
                source,
            }
        })?;
        use io::Write;
        writeln!(w).map_err(|source| ReportError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}
