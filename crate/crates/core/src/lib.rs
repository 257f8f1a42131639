//! Birkhoff-style aesthetic measure for symbolic homophonic scores.
//!
//! A score (melody voice plus block-chord accompaniment, with chord
//! annotations and a key) is reduced to eight basic features — interval
//! harmony, chord-progression harmony, self-similarity, pitch/rhythm
//! skewness, pitch/rhythm entropy, and a compressibility estimate. Four
//! logistic combiners fold those into order terms (harmony H, symmetry S)
//! and complexity terms (entropy E, compressibility K), and the final
//! measure is the Birkhoff quotient
//!
//! ```text
//! M = (w1*H + w2*S + t1) / (w3*E + w4*K + t2)
//! ```
//!
//! trained end-to-end against composer/AI labels. [`corpus`] generates
//! paired synthetic corpora, [`eval`] scores trained models, and
//! [`ingest`] reads Standard MIDI Files and the JSON score format.

pub mod complexity;
pub mod corpus;
pub mod eval;
pub mod harmony;
pub mod ingest;
pub mod model;
pub mod score;
pub mod symmetry;

pub use score::{Beat, ChordAnnotation, KeySignature, Label, NoteEvent, Pitch, Score};

/// Degenerate-input conditions shared by the feature extractors.
///
/// These mark scores a given feature is undefined on (no simultaneities, no
/// chord track, too short to segment). The model layer maps them to fallback
/// values with per-feature flags; callers using extractors directly get them
/// as errors.
#[derive(thiserror::Error, Clone, PartialEq, Eq, Debug)]
pub enum FeatureError {
    #[error("score has no notes")]
    EmptyScore,
    #[error("score has no multi-pitch sonorities")]
    NoSonorities,
    #[error("score has no chord annotations")]
    NoChords,
    #[error("score spans {frames} chroma frames, need at least 4")]
    ScoreTooShort { frames: usize },
    #[error("segment [{start}, {end}) is shorter than 2 frames")]
    SegmentTooShort { start: usize, end: usize },
    #[error("histogram is empty")]
    EmptyHistogram,
}
