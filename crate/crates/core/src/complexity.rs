//! Complexity features: pitch/rhythm histogram entropies and a
//! compression-based complexity estimate.
//!
//! The compression estimate plays the role of an (uncomputable) program-
//! length complexity: serialize the score to a canonical byte stream,
//! compress it with a pinned DEFLATE setting, and compare the compressed
//! size `K` against the zeroth-order entropy bound `N * H_m` of the stream
//! itself. Structure the byte-level model cannot see (repeated phrases)
//! pulls `K` below the bound and the feature toward 1.

use crate::score::{duration_histogram, pitch_class_histogram, Histogram, Score};
use crate::FeatureError;
use flate2::read::DeflateDecoder;
use flate2::write::DeflateEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

/// Shannon entropy in bits over the non-empty bins.
pub fn shannon_entropy(histogram: &Histogram) -> Result<f64, FeatureError> {
    let probs = histogram.probabilities().ok_or(FeatureError::EmptyHistogram)?;
    Ok(probs.iter().filter(|&&p| p > 0.0).map(|p| -p * p.log2()).sum())
}

/// Pitch-class entropy (PHE), at most log2(12) bits.
pub fn pitch_class_entropy(score: &Score) -> Result<f64, FeatureError> {
    shannon_entropy(&pitch_class_histogram(score))
}

/// Rhythm entropy (RHE) over the snapped duration bins, at most 3 bits.
pub fn rhythm_entropy(score: &Score) -> Result<f64, FeatureError> {
    shannon_entropy(&duration_histogram(score))
}

/// Linear combination weights for the entropy pair.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct EntropyWeights {
    pub eta_pitch: f64,
    pub eta_rhythm: f64,
    pub theta: f64,
}

impl Default for EntropyWeights {
    fn default() -> EntropyWeights {
        EntropyWeights { eta_pitch: 1.0, eta_rhythm: 1.0, theta: 0.0 }
    }
}

/// `eta_pitch * PHE + eta_rhythm * RHE + theta`.
pub fn entropy_feature(score: &Score, weights: &EntropyWeights) -> Result<f64, FeatureError> {
    Ok(weights.eta_pitch * pitch_class_entropy(score)?
        + weights.eta_rhythm * rhythm_entropy(score)?
        + weights.theta)
}

fn push_varint(out: &mut Vec<u8>, mut v: u64) {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            out.push(byte);
            break;
        }
        out.push(byte | 0x80);
    }
}

/// Canonical byte encoding of a score, the input to the compression
/// estimate and the determinism tests.
///
/// Layout: header (tonic, mode, beats-per-bar), then the note count and
/// delta-onset-coded notes (numerator/denominator varints for the onset
/// delta and duration, then pitch and voice bytes), then the chord section
/// in the same shape — omitted entirely when the score has no chords.
/// Notes are already in sorted order on a valid score, so equal scores
/// produce equal bytes.
pub fn canonical_bytes(score: &Score) -> Vec<u8> {
    let mut out = Vec::new();
    out.push(score.key.tonic.value());
    out.push(match score.key.mode {
        crate::score::Mode::Major => 0,
        crate::score::Mode::Minor => 1,
    });
    push_varint(&mut out, score.beats_per_bar as u64);

    push_varint(&mut out, score.notes.len() as u64);
    let mut prev = crate::score::Beat::from_integer(0);
    for note in &score.notes {
        let delta = note.onset - prev;
        prev = note.onset;
        push_varint(&mut out, *delta.numer() as u64);
        push_varint(&mut out, *delta.denom() as u64);
        push_varint(&mut out, *note.duration.numer() as u64);
        push_varint(&mut out, *note.duration.denom() as u64);
        out.push(note.pitch.midi());
        out.push(note.voice as u8);
    }

    if !score.chords.is_empty() {
        push_varint(&mut out, score.chords.len() as u64);
        let mut prev = crate::score::Beat::from_integer(0);
        for chord in &score.chords {
            let delta = chord.onset - prev;
            prev = chord.onset;
            push_varint(&mut out, *delta.numer() as u64);
            push_varint(&mut out, *delta.denom() as u64);
            out.push(chord.root.value());
            out.push(chord.quality as u8);
        }
    }
    out
}

/// The pinned compressor recorded in model files. The estimate is only
/// comparable between scores compressed with the same setting.
pub const COMPRESSOR_SETTING: &str = "deflate-6";

pub fn deflate_bytes(data: &[u8]) -> Vec<u8> {
    let mut encoder = DeflateEncoder::new(Vec::new(), Compression::new(6));
    encoder.write_all(data).expect("writing to a Vec cannot fail");
    encoder.finish().expect("finishing an in-memory deflate stream cannot fail")
}

pub fn inflate_bytes(data: &[u8]) -> std::io::Result<Vec<u8>> {
    let mut out = Vec::new();
    DeflateDecoder::new(data).read_to_end(&mut out)?;
    Ok(out)
}

/// Outcome of the compression estimate.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct CompressionOutcome {
    /// `(N*H_m - K) / (N*H_m)` clamped to `[-1, 1]`.
    pub value: f64,
    /// The stream had zero byte entropy, so the quotient is undefined and
    /// reported as 1 by convention.
    pub degenerate: bool,
    /// The raw quotient fell outside `[-1, 1]` (compressor overhead beats
    /// the entropy bound on tiny streams).
    pub clamped: bool,
}

/// Compression complexity of an arbitrary byte stream.
pub fn complexity_of_bytes(bytes: &[u8]) -> CompressionOutcome {
    let mut counts = vec![0u64; 256];
    for &b in bytes {
        counts[b as usize] += 1;
    }
    let histogram = Histogram { labels: Vec::new(), counts };
    let per_byte_entropy = match shannon_entropy(&histogram) {
        Ok(h) => h,
        Err(_) => 0.0,
    };
    let bound_bits = bytes.len() as f64 * per_byte_entropy;
    if bound_bits == 0.0 {
        return CompressionOutcome { value: 1.0, degenerate: true, clamped: false };
    }
    let compressed_bits = (8 * deflate_bytes(bytes).len()) as f64;
    let raw = (bound_bits - compressed_bits) / bound_bits;
    CompressionOutcome {
        value: raw.clamp(-1.0, 1.0),
        degenerate: false,
        clamped: !(-1.0..=1.0).contains(&raw),
    }
}

/// Compression complexity (KC) of a score's canonical bytes.
pub fn compression_complexity(score: &Score) -> CompressionOutcome {
    complexity_of_bytes(&canonical_bytes(score))
}
