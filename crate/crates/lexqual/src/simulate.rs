//! Estimator validation: corrupt a clean, fully-in-lexicon corpus with a
//! seeded character-confusion channel, record per-token ground truth, and
//! score the profiler against it.
//!
//! Corruption decisions are counter-based: each token index gets its own
//! generator keyed by `(seed, index)`, so partitioned parallel runs produce
//! bit-identical output to serial ones.

use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::TokenRecord;
use crate::profile::QualityProfile;
use crate::recognize::Lexicon;

#[derive(Debug, Error)]
pub enum SimulateError {
    #[error("target word error rate {0} is not in [0, 1]")]
    BadWer(f64),
    #[error("confusion pair {from:?} -> {to:?}: {reason}")]
    BadPair {
        from: char,
        to: char,
        reason: String,
    },
    #[error("min_mutations must be >= 1")]
    BadMinMutations,
    #[error("target word error rate is positive but the confusion list is empty")]
    EmptyConfusions,
    #[error("cannot read noise model {path}: {source}")]
    ModelIo { path: PathBuf, source: io::Error },
    #[error("noise model {path}: {reason}")]
    ModelFormat { path: PathBuf, reason: String },
    #[error("i/o on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("ground truth {path} line {line}: {reason}")]
    TruthFormat {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("profile N={profile_n} does not match ground truth N={truth_n}")]
    SizeMismatch { profile_n: u64, truth_n: u64 },
}

/// One weighted character substitution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfusionPair {
    pub from: char,
    pub to: char,
    pub weight: f64,
}

/// Seeded corruption channel: each token is independently corrupted with
/// probability `target_wer`; corrupted tokens receive at least
/// `min_mutations` substitutions drawn from the confusion pairs by weight.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub target_wer: f64,
    pub pairs: Vec<ConfusionPair>,
    pub min_mutations: usize,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(
        target_wer: f64,
        pairs: Vec<ConfusionPair>,
        min_mutations: usize,
        seed: u64,
    ) -> Result<Self, SimulateError> {
        if !(0.0..=1.0).contains(&target_wer) || target_wer.is_nan() {
            return Err(SimulateError::BadWer(target_wer));
        }
        if min_mutations == 0 {
            return Err(SimulateError::BadMinMutations);
        }
        for p in &pairs {
            let bad = |reason: &str| SimulateError::BadPair {
                from: p.from,
                to: p.to,
                reason: reason.into(),
            };
            if !p.from.is_alphabetic() || !p.to.is_alphabetic() {
                return Err(bad("both characters must be letters"));
            }
            if p.from == p.to {
                return Err(bad("substitution must change the character"));
            }
            if !(p.weight > 0.0 && p.weight.is_finite()) {
                return Err(bad("weight must be positive and finite"));
            }
        }
        Ok(Self {
            target_wer,
            pairs,
            min_mutations,
            seed,
        })
    }

    /// Classic blackletter OCR confusions (w↔v, n↔u, i↔l, s↔f), both cases.
    pub fn fraktur(target_wer: f64, seed: u64) -> Result<Self, SimulateError> {
        let pairs = [
            ('w', 'v'),
            ('v', 'w'),
            ('n', 'u'),
            ('u', 'n'),
            ('i', 'l'),
            ('l', 'i'),
            ('s', 'f'),
            ('f', 's'),
            ('W', 'V'),
            ('V', 'W'),
            ('N', 'U'),
            ('U', 'N'),
            ('I', 'L'),
            ('L', 'I'),
            ('S', 'F'),
            ('F', 'S'),
        ]
        .into_iter()
        .map(|(from, to)| ConfusionPair {
            from,
            to,
            weight: 1.0,
        })
        .collect();
        Self::new(target_wer, pairs, 1, seed)
    }

    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self, SimulateError> {
        let file: NoiseModelFile =
            toml::from_str(text).map_err(|e| SimulateError::ModelFormat {
                path: origin.to_path_buf(),
                reason: e.to_string(),
            })?;
        let mut pairs = Vec::with_capacity(file.confusion.len());
        for pair in &file.confusion {
            let single = |s: &str| -> Result<char, SimulateError> {
                let mut chars = s.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) => Ok(c),
                    _ => Err(SimulateError::ModelFormat {
                        path: origin.to_path_buf(),
                        reason: format!("confusion field {s:?} must be a single character"),
                    }),
                }
            };
            pairs.push(ConfusionPair {
                from: single(&pair.from)?,
                to: single(&pair.to)?,
                weight: pair.weight,
            });
        }
        Self::new(file.target_wer, pairs, file.min_mutations, file.seed)
    }

    pub fn from_file(path: &Path) -> Result<Self, SimulateError> {
        let text = fs::read_to_string(path).map_err(|source| SimulateError::ModelIo {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text, path)
    }

    pub fn to_toml_string(&self) -> String {
        let file = NoiseModelFile {
            target_wer: self.target_wer,
            seed: self.seed,
            min_mutations: self.min_mutations,
            confusion: self
                .pairs
                .iter()
                .map(|p| ConfusionPairFile {
                    from: p.from.to_string(),
                    to: p.to.to_string(),
                    weight: p.weight,
                })
                .collect(),
        };
        toml::to_string(&file).expect("noise model serializes")
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct NoiseModelFile {
    target_wer: f64,
    seed: u64,
    #[serde(default = "default_min_mutations")]
    min_mutations: usize,
    #[serde(default)]
    confusion: Vec<ConfusionPairFile>,
}

fn default_min_mutations() -> usize {
    1
}

#[derive(Debug, Serialize, Deserialize)]
struct ConfusionPairFile {
    from: String,
    to: String,
    #[serde(default = "default_weight")]
    weight: f64,
}

fn default_weight() -> f64 {
    1.0
}

// ---- counter-based randomness ----------------------------------------------

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-token generator keyed by (seed, token index); pure integer ops, so the
/// stream is identical on every platform and under any partitioning.
struct TokenRng {
    state: u64,
}

impl TokenRng {
    fn new(seed: u64, index: u64) -> Self {
        let mut state = seed ^ index.wrapping_mul(GOLDEN).rotate_left(17);
        splitmix64(&mut state);
        Self { state }
    }

    fn next_u64(&mut self) -> u64 {
        splitmix64(&mut self.state)
    }

    /// Uniform in [0, 1) with 53-bit resolution.
    fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [0, n) by widening multiply.
    fn next_below(&mut self, n: u64) -> u64 {
        ((u128::from(self.next_u64()) * u128::from(n)) >> 64) as u64
    }
}

/// Per-token corruption flags with the exact corrupted and collision counts.
/// A collision is a corrupted token whose corrupted form is still in the
/// lexicon — invisible to recognition-based estimation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    flags: Vec<bool>,
    corrupted: u64,
    collisions: u64,
}

impl GroundTruth {
    pub fn n(&self) -> u64 {
        self.flags.len() as u64
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn corrupted(&self) -> u64 {
        self.corrupted
    }

    pub fn collisions(&self) -> u64 {
        self.collisions
    }

    pub fn true_wer(&self) -> f64 {
        if self.flags.is_empty() {
            0.0
        } else {
            self.corrupted as f64 / self.flags.len() as f64
        }
    }

    /// Writes the summary header and the flag bitmap (64 flags per line).
    pub fn write_file(&self, path: &Path) -> Result<(), SimulateError> {
        let io_err = |source| SimulateError::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = fs::File::create(path).map_err(io_err)?;
        let mut w = BufWriter::new(file);
        writeln!(
            w,
            "#N={} CORRUPTED={} COLLISIONS={} TRUE_WER={:.6}",
            self.n(),
            self.corrupted,
            self.collisions,
            self.true_wer()
        )
        .map_err(io_err)?;
        for chunk in self.flags.chunks(64) {
            let line: String = chunk.iter().map(|&f| if f { '1' } else { '0' }).collect();
            writeln!(w, "{line}").map_err(io_err)?;
        }
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Self, SimulateError> {
        let io_err = |source| SimulateError::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = fs::File::open(path).map_err(io_err)?;
        let mut lines = BufReader::new(file).lines().enumerate();
        let header = match lines.next() {
            Some((_, line)) => line.map_err(io_err)?,
            None => {
                return Err(SimulateError::TruthFormat {
                    path: path.to_path_buf(),
                    line: 1,
                    reason: "missing header".into(),
                })
            }
        };
        let (n, corrupted, collisions) = parse_truth_header(header.trim_end_matches('\r'))
            .ok_or_else(|| SimulateError::TruthFormat {
                path: path.to_path_buf(),
                line: 1,
                reason: format!("bad header {header:?}"),
            })?;
        let mut flags = Vec::with_capacity(n as usize);
        for (idx, line) in lines {
            let line = line.map_err(io_err)?;
            for c in line.trim_end_matches('\r').chars() {
                match c {
                    '0' => flags.push(false),
                    '1' => flags.push(true),
                    _ => {
                        return Err(SimulateError::TruthFormat {
                            path: path.to_path_buf(),
                            line: idx + 1,
                            reason: format!("bad flag character {c:?}"),
                        })
                    }
                }
            }
        }
        let counted = flags.iter().filter(|&&f| f).count() as u64;
        if flags.len() as u64 != n || counted != corrupted {
            return Err(SimulateError::TruthFormat {
                path: path.to_path_buf(),
                line: 1,
                reason: format!(
                    "header says N={n} CORRUPTED={corrupted}, bitmap has N={} CORRUPTED={counted}",
                    flags.len()
                ),
            });
        }
        Ok(Self {
            flags,
            corrupted,
            collisions,
        })
    }
}

fn parse_truth_header(line: &str) -> Option<(u64, u64, u64)> {
    let rest = line.strip_prefix("#N=")?;
    let (n, rest) = rest.split_once(" CORRUPTED=")?;
    let (corrupted, rest) = rest.split_once(" COLLISIONS=")?;
    let collisions = match rest.split_once(" TRUE_WER=") {
        Some((c, _)) => c,
        None => rest,
    };
    Some((
        n.parse().ok()?,
        corrupted.parse().ok()?,
        collisions.parse().ok()?,
    ))
}

fn mutate(surface: &str, model: &NoiseModel, rng: &mut TokenRng) -> String {
    let mut chars: Vec<char> = surface.chars().collect();
    for _ in 0..model.min_mutations {
        // pairs applicable to the current character content
        let applicable: Vec<&ConfusionPair> = model
            .pairs
            .iter()
            .filter(|p| chars.contains(&p.from))
            .collect();
        if applicable.is_empty() {
            break;
        }
        let total: f64 = applicable.iter().map(|p| p.weight).sum();
        let mut x = rng.next_f64() * total;
        let mut chosen = applicable[applicable.len() - 1];
        for pair in &applicable {
            if x < pair.weight {
                chosen = pair;
                break;
            }
            x -= pair.weight;
        }
        let positions: Vec<usize> = chars
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == chosen.from)
            .map(|(i, _)| i)
            .collect();
        let pos = positions[rng.next_below(positions.len() as u64) as usize];
        chars[pos] = chosen.to;
    }
    chars.into_iter().collect()
}

/// Corrupts the stream under the model and records exact ground truth.
/// Untouched tokens pass through byte-identical. A selected token that
/// contains none of the confusable characters stays clean and unflagged.
pub fn corrupt_corpus(
    tokens: &[TokenRecord],
    model: &NoiseModel,
    lexicon: &Lexicon,
) -> Result<(Vec<TokenRecord>, GroundTruth), SimulateError> {
    if model.target_wer > 0.0 && model.pairs.is_empty() {
        return Err(SimulateError::EmptyConfusions);
    }
    let noisy: Vec<(TokenRecord, bool)> = tokens
        .par_iter()
        .enumerate()
        .map(|(index, token)| {
            let mut rng = TokenRng::new(model.seed, index as u64);
            if rng.next_f64() < model.target_wer {
                let surface = mutate(&token.surface, model, &mut rng);
                let flagged = surface != token.surface;
                (
                    TokenRecord {
                        surface,
                        doc_id: token.doc_id.clone(),
                        year: token.year,
                    },
                    flagged,
                )
            } else {
                (token.clone(), false)
            }
        })
        .collect();

    let mut flags = Vec::with_capacity(noisy.len());
    let mut corrupted = 0;
    let mut collisions = 0;
    for (token, flagged) in &noisy {
        flags.push(*flagged);
        if *flagged {
            corrupted += 1;
            if lexicon.contains(&token.surface) {
                collisions += 1;
            }
        }
    }
    let stream = noisy.into_iter().map(|(token, _)| token).collect();
    Ok((
        stream,
        GroundTruth {
            flags,
            corrupted,
            collisions,
        },
    ))
}

/// Signed gaps between the profiler's estimate and the ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorGaps {
    /// (1 − raw token rate) − true WER.
    pub raw_gap: f64,
    /// Raw gap with lexicon collisions credited back to the estimator.
    pub adjusted_gap: f64,
}

pub fn estimator_error(
    profile: &QualityProfile,
    truth: &GroundTruth,
) -> Result<EstimatorGaps, SimulateError> {
    if profile.raw.n != truth.n() {
        return Err(SimulateError::SizeMismatch {
            profile_n: profile.raw.n,
            truth_n: truth.n(),
        });
    }
    let estimated_wer = 1.0 - profile.raw.token_rate();
    let raw_gap = estimated_wer - truth.true_wer();
    let collision_rate = if truth.n() == 0 {
        0.0
    } else {
        truth.collisions() as f64 / truth.n() as f64
    };
    Ok(EstimatorGaps {
        raw_gap,
        adjusted_gap: raw_gap + collision_rate,
    })
}
