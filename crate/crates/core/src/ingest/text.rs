//! The JSON score interchange format (`.score.json`) and its chord
//! sidecar. This is the only format that carries chord annotations, the
//! key, and class labels; beat positions are exact rationals written as
//! strings (`"3/2"`), with plain JSON numbers accepted on input when they
//! match a fraction with denominator ≤ 64.

use crate::ingest::{ParseDiagnostics, SourceFormat};
use crate::score::{
    beat, Beat, ChordAnnotation, ChordQuality, KeySignature, Label, Mode, NoteEvent, Pitch,
    PitchClass, Score, Voice,
};
use num_traits::Signed;
use serde::{Deserialize, Serialize};

#[derive(thiserror::Error, Clone, PartialEq, Eq, Debug)]
pub enum TextError {
    /// Structurally invalid document: bad JSON, missing or mistyped fields.
    #[error("schema: {0}")]
    Schema(String),
    /// A field value outside its legal range or not exactly representable.
    #[error("range: {0}")]
    Range(String),
    /// Chord annotations out of order.
    #[error("order: {0}")]
    Order(String),
}

/// A beat position or span as it appears in JSON: an exact fraction
/// string, or a plain number.
#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(untagged)]
enum BeatRepr {
    Text(String),
    Number(f64),
}

/// Largest denominator accepted when converting a decimal to a beat.
const MAX_DECIMAL_DENOMINATOR: i64 = 64;

fn beat_from_repr(repr: &BeatRepr, at: &str) -> Result<Beat, TextError> {
    match repr {
        BeatRepr::Text(s) => {
            let (num, den) = match s.split_once('/') {
                Some((n, d)) => (n, d),
                None => (s.as_str(), "1"),
            };
            let num: i64 = num
                .trim()
                .parse()
                .map_err(|_| TextError::Schema(format!("{at}: bad fraction '{s}'")))?;
            let den: i64 = den
                .trim()
                .parse()
                .map_err(|_| TextError::Schema(format!("{at}: bad fraction '{s}'")))?;
            if den <= 0 {
                return Err(TextError::Range(format!("{at}: denominator must be positive in '{s}'")));
            }
            Ok(beat(num, den))
        }
        BeatRepr::Number(x) => {
            if !x.is_finite() {
                return Err(TextError::Range(format!("{at}: non-finite number")));
            }
            for den in 1..=MAX_DECIMAL_DENOMINATOR {
                let scaled = x * den as f64;
                let num = scaled.round();
                if (scaled - num).abs() <= 1e-9 * scaled.abs().max(1.0)
                    && num.abs() < i64::MAX as f64
                {
                    return Ok(beat(num as i64, den));
                }
            }
            Err(TextError::Range(format!(
                "{at}: {x} is not a fraction with denominator <= {MAX_DECIMAL_DENOMINATOR}"
            )))
        }
    }
}

fn beat_to_repr(b: Beat) -> BeatRepr {
    if *b.denom() == 1 {
        BeatRepr::Text(b.numer().to_string())
    } else {
        BeatRepr::Text(format!("{}/{}", b.numer(), b.denom()))
    }
}

#[derive(Serialize, Deserialize)]
struct KeyDoc {
    tonic: u8,
    mode: Mode,
}

#[derive(Serialize, Deserialize)]
struct NoteDoc {
    onset: BeatRepr,
    duration: BeatRepr,
    pitch: u8,
    voice: u8,
}

#[derive(Serialize, Deserialize)]
struct ChordDoc {
    onset: BeatRepr,
    root: u8,
    quality: ChordQuality,
}

#[derive(Serialize, Deserialize)]
struct ScoreDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    key: KeyDoc,
    beats_per_bar: u32,
    notes: Vec<NoteDoc>,
    chords: Vec<ChordDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<Label>,
}

#[derive(Serialize, Deserialize)]
struct SidecarDoc {
    key: KeyDoc,
    chords: Vec<ChordDoc>,
}

fn key_from_doc(doc: &KeyDoc) -> Result<KeySignature, TextError> {
    let tonic = PitchClass::new(doc.tonic)
        .ok_or_else(|| TextError::Range(format!("key.tonic {} is not 0-11", doc.tonic)))?;
    Ok(KeySignature::new(tonic, doc.mode))
}

fn chords_from_docs(docs: &[ChordDoc], path: &str) -> Result<Vec<ChordAnnotation>, TextError> {
    let mut chords = Vec::with_capacity(docs.len());
    let mut prev: Option<Beat> = None;
    for (i, doc) in docs.iter().enumerate() {
        let at = format!("{path}[{i}]");
        let onset = beat_from_repr(&doc.onset, &format!("{at}.onset"))?;
        if onset.is_negative() {
            return Err(TextError::Range(format!("{at}.onset is negative")));
        }
        if let Some(p) = prev {
            if onset <= p {
                return Err(TextError::Order(format!(
                    "{at}.onset {onset} does not increase past {p}"
                )));
            }
        }
        prev = Some(onset);
        let root = PitchClass::new(doc.root)
            .ok_or_else(|| TextError::Range(format!("{at}.root {} is not 0-11", doc.root)))?;
        chords.push(ChordAnnotation { onset, root, quality: doc.quality });
    }
    Ok(chords)
}

fn score_from_doc(doc: &ScoreDoc) -> Result<Score, TextError> {
    let key = key_from_doc(&doc.key)?;
    if doc.beats_per_bar == 0 {
        return Err(TextError::Range("beats_per_bar must be positive".into()));
    }
    let mut notes = Vec::with_capacity(doc.notes.len());
    for (i, n) in doc.notes.iter().enumerate() {
        let at = format!("notes[{i}]");
        let onset = beat_from_repr(&n.onset, &format!("{at}.onset"))?;
        if onset.is_negative() {
            return Err(TextError::Range(format!("{at}.onset is negative")));
        }
        let duration = beat_from_repr(&n.duration, &format!("{at}.duration"))?;
        if !duration.is_positive() {
            return Err(TextError::Range(format!("{at}.duration must be positive")));
        }
        let pitch = Pitch::new(n.pitch)
            .ok_or_else(|| TextError::Range(format!("{at}.pitch {} is not 0-127", n.pitch)))?;
        let voice = match n.voice {
            0 => Voice::Melody,
            1 => Voice::Accompaniment,
            other => {
                return Err(TextError::Range(format!("{at}.voice {other} is not 0 or 1")))
            }
        };
        notes.push(NoteEvent { onset, duration, pitch, voice });
    }
    let chords = chords_from_docs(&doc.chords, "chords")?;
    Ok(Score::new(
        doc.id.clone().unwrap_or_default(),
        key,
        doc.beats_per_bar,
        notes,
        chords,
        doc.label,
    ))
}

fn doc_from_score(score: &Score) -> ScoreDoc {
    ScoreDoc {
        id: (!score.id.is_empty()).then(|| score.id.clone()),
        key: KeyDoc { tonic: score.key.tonic.value(), mode: score.key.mode },
        beats_per_bar: score.beats_per_bar,
        notes: score
            .notes
            .iter()
            .map(|n| NoteDoc {
                onset: beat_to_repr(n.onset),
                duration: beat_to_repr(n.duration),
                pitch: n.pitch.midi(),
                voice: n.voice as u8,
            })
            .collect(),
        chords: score
            .chords
            .iter()
            .map(|c| ChordDoc {
                onset: beat_to_repr(c.onset),
                root: c.root.value(),
                quality: c.quality,
            })
            .collect(),
        label: score.label,
    }
}

/// Parse one score interchange document.
pub fn parse_score_text(text: &str) -> Result<(Score, ParseDiagnostics), TextError> {
    let doc: ScoreDoc =
        serde_json::from_str(text).map_err(|e| TextError::Schema(e.to_string()))?;
    let score = score_from_doc(&doc)?;
    Ok((score, ParseDiagnostics::new(SourceFormat::ScoreText)))
}

/// Serialize a score to one compact interchange line (used for datasets).
pub fn serialize_score(score: &Score) -> String {
    serde_json::to_string(&doc_from_score(score)).expect("score documents always serialize")
}

/// Serialize a score as an indented document (used for single files).
pub fn serialize_score_pretty(score: &Score) -> String {
    serde_json::to_string_pretty(&doc_from_score(score))
        .expect("score documents always serialize")
}

/// Parse a chord sidecar (`<name>.chords.json`) carrying the key and the
/// chord track for a score ingested from a format without annotations.
pub fn parse_chord_sidecar(
    text: &str,
) -> Result<(KeySignature, Vec<ChordAnnotation>), TextError> {
    let doc: SidecarDoc =
        serde_json::from_str(text).map_err(|e| TextError::Schema(e.to_string()))?;
    let key = key_from_doc(&doc.key)?;
    let chords = chords_from_docs(&doc.chords, "chords")?;
    Ok((key, chords))
}

/// One broken score invariant, reported as data rather than an error.
#[derive(thiserror::Error, Clone, PartialEq, Eq, Debug)]
pub enum Violation {
    #[error("score has no notes")]
    EmptyScore,
    #[error("notes are not sorted by (onset, pitch, voice)")]
    NotesUnsorted,
    #[error("chord onsets are not strictly increasing")]
    ChordsUnsorted,
    #[error("note {index} has a non-positive duration")]
    NonPositiveDuration { index: usize },
    #[error("note {index} has a negative onset")]
    NegativeOnset { index: usize },
    #[error("chord {index} has a negative onset")]
    NegativeChordOnset { index: usize },
}

/// Check every score invariant, returning one violation per break.
pub fn validate_score(score: &Score) -> Vec<Violation> {
    let mut violations = Vec::new();
    if score.notes.is_empty() {
        violations.push(Violation::EmptyScore);
    }
    if score
        .notes
        .windows(2)
        .any(|w| (w[0].onset, w[0].pitch, w[0].voice) > (w[1].onset, w[1].pitch, w[1].voice))
    {
        violations.push(Violation::NotesUnsorted);
    }
    if score.chords.windows(2).any(|w| w[0].onset >= w[1].onset) {
        violations.push(Violation::ChordsUnsorted);
    }
    for (index, n) in score.notes.iter().enumerate() {
        if !n.duration.is_positive() {
            violations.push(Violation::NonPositiveDuration { index });
        }
        if n.onset.is_negative() {
            violations.push(Violation::NegativeOnset { index });
        }
    }
    for (index, c) in score.chords.iter().enumerate() {
        if c.onset.is_negative() {
            violations.push(Violation::NegativeChordOnset { index });
        }
    }
    violations
}
