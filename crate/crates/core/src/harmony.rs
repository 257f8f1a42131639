//! Harmony features: vertical consonance over the sonority sweep, and
//! tonal tension over the chord progression.
//!
//! Interval harmony weighs every simultaneous pitch pair by the consonance
//! of its interval class. Progression harmony scores each chord by six
//! tension terms — circle-of-fifths distances (to the previous chord, to
//! the key, and of the relative offset to the final chord's), chord-quality
//! dissonance, melodic mismatch, and harmonic function — and inverts the
//! mean so that 1 is maximally settled.

use crate::score::{
    beat_to_f64, interval_class, interval_semitones, sonorities, Beat, ChordQuality,
    IntervalClass, PitchClass, Score, Voice,
};
use crate::FeatureError;
use serde::{Deserialize, Serialize};

/// Consonance category of an interval class, after octave reduction.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum IntervalCategory {
    /// Unison/octave, fifth, fourth.
    Perfect,
    /// Thirds and sixths.
    Imperfect,
    /// Major seconds and minor sevenths.
    Mild,
    /// Minor seconds and major sevenths.
    Sharp,
    Tritone,
}

pub fn interval_category(class: IntervalClass) -> IntervalCategory {
    match class.value() {
        5 | 7 | 12 => IntervalCategory::Perfect,
        3 | 4 | 8 | 9 => IntervalCategory::Imperfect,
        2 | 10 => IntervalCategory::Mild,
        1 | 11 => IntervalCategory::Sharp,
        6 => IntervalCategory::Tritone,
        _ => unreachable!("interval classes are 1..=12"),
    }
}

/// Per-class weights for interval harmony. `alpha[i]` weighs class `i + 1`.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct IntervalWeights {
    pub alpha: [f64; 12],
    pub theta: f64,
}

impl Default for IntervalWeights {
    /// Category-shaped defaults: perfect 1.0, imperfect 0.8, mild 0.4,
    /// sharp 0.1, tritone 0.0.
    fn default() -> IntervalWeights {
        let mut alpha = [0.0; 12];
        for class in 1..=12u8 {
            alpha[class as usize - 1] = match interval_category(IntervalClass::new(class).unwrap())
            {
                IntervalCategory::Perfect => 1.0,
                IntervalCategory::Imperfect => 0.8,
                IntervalCategory::Mild => 0.4,
                IntervalCategory::Sharp => 0.1,
                IntervalCategory::Tritone => 0.0,
            };
        }
        IntervalWeights { alpha, theta: 0.0 }
    }
}

/// Relative frequency of each interval class over all simultaneous pitch
/// pairs, dotted with the class weights.
pub fn interval_harmony(score: &Score, weights: &IntervalWeights) -> Result<f64, FeatureError> {
    let mut counts = [0u64; 12];
    let mut total = 0u64;
    for son in sonorities(score) {
        for (i, &a) in son.pitches.iter().enumerate() {
            for &b in &son.pitches[i + 1..] {
                let class = interval_class(interval_semitones(a, b));
                counts[class.value() as usize - 1] += 1;
                total += 1;
            }
        }
    }
    if total == 0 {
        return Err(FeatureError::NoSonorities);
    }
    let mut ih = weights.theta;
    for (i, &c) in counts.iter().enumerate() {
        ih += weights.alpha[i] * (c as f64 / total as f64);
    }
    Ok(ih)
}

/// Minimum number of fifths separating two pitch classes on the circle of
/// fifths, always in `0..=6`.
pub fn circle_of_fifths_distance(a: PitchClass, b: PitchClass) -> u8 {
    // Multiplying by 7 maps semitone space onto fifth space (7 semitones
    // up = 1 fifth); the distance is then the shorter way round the cycle.
    let pa = (a.value() * 7) % 12;
    let pb = (b.value() * 7) % 12;
    let diff = (pa as i32 - pb as i32).rem_euclid(12) as u8;
    diff.min(12 - diff)
}

fn quality_dissonance(q: ChordQuality) -> f64 {
    match q {
        ChordQuality::Major | ChordQuality::Minor => 0.0,
        ChordQuality::Dominant7 => 0.4,
        ChordQuality::Minor7 | ChordQuality::Major7 => 0.5,
        ChordQuality::Diminished => 0.8,
        ChordQuality::Augmented => 1.0,
    }
}

/// The six per-chord tension terms, each in `[0, 1]`.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct TensionTerms {
    /// Circle-of-fifths distance to the previous chord (0 for the first).
    pub prev_distance: f64,
    /// Circle-of-fifths distance to the key tonic.
    pub key_distance: f64,
    /// Circle-of-fifths distance between this chord's offset-from-tonic and
    /// the final chord's.
    pub final_distance: f64,
    /// Intrinsic dissonance of the chord quality.
    pub quality_dissonance: f64,
    /// 1 minus the chord-tone share of the melody under this chord
    /// (overlap-duration weighted).
    pub melodic_mismatch: f64,
    /// Harmonic function: tonic degrees 0, subdominant 1/3, dominant 2/3,
    /// everything else (mediant included) 1.
    pub functional_tension: f64,
    /// True when no melody note overlaps the chord's span; mismatch is
    /// reported as 0 in that case.
    pub empty_span: bool,
}

impl TensionTerms {
    pub fn as_array(&self) -> [f64; 6] {
        [
            self.prev_distance,
            self.key_distance,
            self.final_distance,
            self.quality_dissonance,
            self.melodic_mismatch,
            self.functional_tension,
        ]
    }
}

/// Tension terms for `score.chords[index]`.
///
/// The chord's span runs to the next chord's onset (or the end of the
/// score); only melody-voice notes count toward melodic mismatch.
pub fn tension_terms(score: &Score, index: usize) -> TensionTerms {
    let chord = &score.chords[index];
    let tonic = score.key.tonic;

    let prev_distance = match index {
        0 => 0.0,
        i => circle_of_fifths_distance(chord.root, score.chords[i - 1].root) as f64 / 6.0,
    };
    let key_distance = circle_of_fifths_distance(chord.root, tonic) as f64 / 6.0;

    let last = score.chords.last().expect("indexed into non-empty chord list");
    let rel = PitchClass::new(chord.root.semitones_above(tonic)).unwrap();
    let rel_final = PitchClass::new(last.root.semitones_above(tonic)).unwrap();
    let final_distance = circle_of_fifths_distance(rel, rel_final) as f64 / 6.0;

    let span_end = score
        .chords
        .get(index + 1)
        .map(|c| c.onset)
        .unwrap_or_else(|| score.total_beats());
    let (melodic_mismatch, empty_span) = melodic_mismatch(score, chord.onset, span_end, index);

    let functional_tension = match score.key.degree_of(chord.root) {
        Some(1) | Some(6) => 0.0,
        Some(2) | Some(4) => 1.0 / 3.0,
        Some(5) | Some(7) => 2.0 / 3.0,
        _ => 1.0,
    };

    TensionTerms {
        prev_distance,
        key_distance,
        final_distance,
        quality_dissonance: quality_dissonance(chord.quality),
        melodic_mismatch,
        functional_tension,
        empty_span,
    }
}

fn melodic_mismatch(score: &Score, start: Beat, end: Beat, chord_index: usize) -> (f64, bool) {
    let tones = score.chords[chord_index].tone_classes();
    let mut covered = Beat::from_integer(0);
    let mut in_chord = Beat::from_integer(0);
    for note in score.notes.iter().filter(|n| n.voice == Voice::Melody) {
        let lo = note.onset.max(start);
        let hi = note.offset().min(end);
        if hi > lo {
            covered += hi - lo;
            if tones.contains(&note.pitch.class()) {
                in_chord += hi - lo;
            }
        }
    }
    if covered == Beat::from_integer(0) {
        return (0.0, true);
    }
    (1.0 - beat_to_f64(in_chord) / beat_to_f64(covered), false)
}

/// Weights for combining the six tension terms; default is a flat 1/6.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct TensionWeights {
    pub lambda: [f64; 6],
}

impl Default for TensionWeights {
    fn default() -> TensionWeights {
        TensionWeights { lambda: [1.0 / 6.0; 6] }
    }
}

/// One minus the mean combined tension over the whole progression.
///
/// The boolean is true when any chord span had no melody under it.
pub fn chord_progression_harmony(
    score: &Score,
    weights: &TensionWeights,
) -> Result<(f64, bool), FeatureError> {
    if score.chords.is_empty() {
        return Err(FeatureError::NoChords);
    }
    let mut total = 0.0;
    let mut any_empty = false;
    for index in 0..score.chords.len() {
        let terms = tension_terms(score, index);
        any_empty |= terms.empty_span;
        let combined: f64 = terms
            .as_array()
            .iter()
            .zip(&weights.lambda)
            .map(|(t, l)| t * l)
            .sum();
        total += combined;
    }
    Ok((1.0 - total / score.chords.len() as f64, any_empty))
}
