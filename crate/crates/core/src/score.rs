//! Score model: pitches, notes, chords, keys, and the exact-time primitives
//! (rational beats, fixed-bin histograms, the sonority sweep) the feature
//! extractors build on.
//!
//! Time is kept as exact rationals end to end. Onsets and durations coming
//! out of MIDI are tick/division quotients and the sweep in [`sonorities`]
//! relies on exact boundary comparisons, so floats would leak segmentation
//! errors into every downstream feature.

use num_rational::Ratio;
use num_traits::Signed;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

/// Musical time in beats (quarter notes), exact.
pub type Beat = Ratio<i64>;

/// Shorthand for `Ratio::new(num, den)`. Panics if `den == 0`, like `Ratio::new`.
pub fn beat(num: i64, den: i64) -> Beat {
    Ratio::new(num, den)
}

/// Lossy conversion for the float-domain feature math.
pub fn beat_to_f64(b: Beat) -> f64 {
    *b.numer() as f64 / *b.denom() as f64
}

/// A MIDI pitch, guaranteed `0..=127`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Pitch(u8);

impl Pitch {
    pub fn new(midi: u8) -> Option<Pitch> {
        (midi <= 127).then_some(Pitch(midi))
    }

    pub fn midi(self) -> u8 {
        self.0
    }

    pub fn class(self) -> PitchClass {
        PitchClass(self.0 % 12)
    }
}

impl TryFrom<u8> for Pitch {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, String> {
        Pitch::new(v).ok_or_else(|| format!("pitch {v} out of MIDI range 0..=127"))
    }
}

impl From<Pitch> for u8 {
    fn from(p: Pitch) -> u8 {
        p.0
    }
}

/// A pitch class `0..=11`, C = 0.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct PitchClass(u8);

impl PitchClass {
    pub fn new(pc: u8) -> Option<PitchClass> {
        (pc <= 11).then_some(PitchClass(pc))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// Transpose by any number of semitones, wrapping mod 12.
    pub fn transposed(self, semitones: i32) -> PitchClass {
        PitchClass(((self.0 as i32 + semitones).rem_euclid(12)) as u8)
    }

    /// Semitones from `other` up to `self`, in `0..=11`.
    pub fn semitones_above(self, other: PitchClass) -> u8 {
        ((self.0 as i32 - other.0 as i32).rem_euclid(12)) as u8
    }
}

impl TryFrom<u8> for PitchClass {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, String> {
        PitchClass::new(v).ok_or_else(|| format!("pitch class {v} out of range 0..=11"))
    }
}

impl From<PitchClass> for u8 {
    fn from(pc: PitchClass) -> u8 {
        pc.0
    }
}

/// Part index in the homophonic texture.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Voice {
    Melody = 0,
    Accompaniment = 1,
}

impl TryFrom<u8> for Voice {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            0 => Ok(Voice::Melody),
            1 => Ok(Voice::Accompaniment),
            other => Err(format!("voice {other} out of range 0..=1")),
        }
    }
}

impl From<Voice> for u8 {
    fn from(v: Voice) -> u8 {
        v as u8
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Major,
    Minor,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChordQuality {
    Major,
    Minor,
    Diminished,
    Augmented,
    Dominant7,
    Major7,
    Minor7,
}

impl ChordQuality {
    /// Chord-tone offsets from the root, in semitones.
    pub fn tone_offsets(self) -> &'static [u8] {
        match self {
            ChordQuality::Major => &[0, 4, 7],
            ChordQuality::Minor => &[0, 3, 7],
            ChordQuality::Diminished => &[0, 3, 6],
            ChordQuality::Augmented => &[0, 4, 8],
            ChordQuality::Dominant7 => &[0, 4, 7, 10],
            ChordQuality::Major7 => &[0, 4, 7, 11],
            ChordQuality::Minor7 => &[0, 3, 7, 10],
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Composer,
    Ai,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct KeySignature {
    pub tonic: PitchClass,
    pub mode: Mode,
}

impl KeySignature {
    pub fn new(tonic: PitchClass, mode: Mode) -> KeySignature {
        KeySignature { tonic, mode }
    }

    pub fn c_major() -> KeySignature {
        KeySignature { tonic: PitchClass(0), mode: Mode::Major }
    }

    /// The seven diatonic pitch classes, tonic first (natural minor for minor keys).
    pub fn scale(&self) -> [PitchClass; 7] {
        let steps: [i32; 7] = match self.mode {
            Mode::Major => [0, 2, 4, 5, 7, 9, 11],
            Mode::Minor => [0, 2, 3, 5, 7, 8, 10],
        };
        steps.map(|s| self.tonic.transposed(s))
    }

    /// Scale degree (1-based) of a pitch class, or `None` for non-diatonic classes.
    pub fn degree_of(&self, pc: PitchClass) -> Option<u8> {
        self.scale().iter().position(|&d| d == pc).map(|i| i as u8 + 1)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct NoteEvent {
    pub onset: Beat,
    pub duration: Beat,
    pub pitch: Pitch,
    pub voice: Voice,
}

impl NoteEvent {
    pub fn offset(&self) -> Beat {
        self.onset + self.duration
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct ChordAnnotation {
    pub onset: Beat,
    pub root: PitchClass,
    pub quality: ChordQuality,
}

impl ChordAnnotation {
    /// Pitch classes sounded by this chord.
    pub fn tone_classes(&self) -> Vec<PitchClass> {
        self.quality
            .tone_offsets()
            .iter()
            .map(|&o| self.root.transposed(o as i32))
            .collect()
    }
}

/// A symbolic homophonic score: a melody voice plus a block-chord
/// accompaniment, with chord annotations and a key.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Score {
    pub id: String,
    pub key: KeySignature,
    pub beats_per_bar: u32,
    pub notes: Vec<NoteEvent>,
    pub chords: Vec<ChordAnnotation>,
    pub label: Option<Label>,
}

impl Score {
    /// Build a score, sorting notes by (onset, pitch, voice) and chords by onset.
    pub fn new(
        id: impl Into<String>,
        key: KeySignature,
        beats_per_bar: u32,
        mut notes: Vec<NoteEvent>,
        mut chords: Vec<ChordAnnotation>,
        label: Option<Label>,
    ) -> Score {
        notes.sort_by_key(|n| (n.onset, n.pitch, n.voice));
        chords.sort_by_key(|c| c.onset);
        Score { id: id.into(), key, beats_per_bar, notes, chords, label }
    }

    /// End of the last sounding note, or 0 for an empty score.
    pub fn total_beats(&self) -> Beat {
        self.notes
            .iter()
            .map(NoteEvent::offset)
            .max()
            .unwrap_or_else(|| Beat::from_integer(0))
    }
}

/// Absolute distance between two pitches, in semitones.
pub fn interval_semitones(a: Pitch, b: Pitch) -> u8 {
    a.0.abs_diff(b.0)
}

/// Interval class `1..=12`: octave-reduced, with both unisons and octaves
/// mapped to class 12 so that class 12 always means "same pitch class".
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct IntervalClass(u8);

impl IntervalClass {
    pub fn new(class: u8) -> Option<IntervalClass> {
        (1..=12).contains(&class).then_some(IntervalClass(class))
    }

    pub fn value(self) -> u8 {
        self.0
    }
}

impl fmt::Display for IntervalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Reduce a semitone distance to its interval class.
pub fn interval_class(semitones: u8) -> IntervalClass {
    if semitones == 0 {
        IntervalClass(12)
    } else {
        IntervalClass((semitones - 1) % 12 + 1)
    }
}

/// Counts over labelled bins; probabilities are lazily derived.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Histogram {
    pub labels: Vec<String>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Per-bin probabilities, or `None` when the histogram is empty.
    pub fn probabilities(&self) -> Option<Vec<f64>> {
        let total = self.total();
        if total == 0 {
            return None;
        }
        Some(self.counts.iter().map(|&c| c as f64 / total as f64).collect())
    }
}

/// Every note counted once (both voices) by pitch class.
pub fn pitch_class_histogram(score: &Score) -> Histogram {
    let mut counts = vec![0u64; 12];
    for note in &score.notes {
        counts[note.pitch.class().value() as usize] += 1;
    }
    Histogram { labels: (0..12).map(|pc| pc.to_string()).collect(), counts }
}

/// The eight fixed duration bins, in beats.
pub fn duration_bins() -> [Beat; 8] {
    [
        beat(1, 4),
        beat(1, 2),
        beat(3, 4),
        beat(1, 1),
        beat(3, 2),
        beat(2, 1),
        beat(3, 1),
        beat(4, 1),
    ]
}

const DURATION_BIN_LABELS: [&str; 8] = ["1/4", "1/2", "3/4", "1", "3/2", "2", "3", "4"];

/// Index of the bin a duration snaps to: nearest bin, ties toward the
/// shorter bin, and anything past 4 beats lands in the 4-beat bin.
pub fn duration_bin_index(duration: Beat) -> usize {
    let bins = duration_bins();
    if duration >= bins[7] {
        return 7;
    }
    let mut best = 0;
    let mut best_dist = (duration - bins[0]).abs();
    for (i, &b) in bins.iter().enumerate().skip(1) {
        let dist = (duration - b).abs();
        if dist < best_dist {
            best = i;
            best_dist = dist;
        }
    }
    best
}

/// Every note counted once (both voices) by snapped duration bin.
pub fn duration_histogram(score: &Score) -> Histogram {
    let mut counts = vec![0u64; 8];
    for note in &score.notes {
        counts[duration_bin_index(note.duration)] += 1;
    }
    Histogram {
        labels: DURATION_BIN_LABELS.iter().map(|s| s.to_string()).collect(),
        counts,
    }
}

/// Simultaneously sounding pitches over one segment of the boundary sweep.
///
/// Pitches are kept as a sorted multiset: two voices on the same pitch are
/// two entries, which is what lets an all-unison texture register interval
/// class 12 instead of vanishing.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Sonority {
    pub onset: Beat,
    pub pitches: Vec<Pitch>,
}

/// Sweep note boundaries and collect every segment where at least two
/// notes sound at once. Single-pitch and silent segments are dropped.
pub fn sonorities(score: &Score) -> Vec<Sonority> {
    let mut bounds = BTreeSet::new();
    for note in &score.notes {
        bounds.insert(note.onset);
        bounds.insert(note.offset());
    }
    let bounds: Vec<Beat> = bounds.into_iter().collect();

    let mut out = Vec::new();
    for window in bounds.windows(2) {
        let start = window[0];
        let mut pitches: Vec<Pitch> = score
            .notes
            .iter()
            .filter(|n| n.onset <= start && n.offset() > start)
            .map(|n| n.pitch)
            .collect();
        if pitches.len() >= 2 {
            pitches.sort();
            out.push(Sonority { onset: start, pitches });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(midi: u8) -> Pitch {
        Pitch::new(midi).unwrap()
    }

    fn note(onset: Beat, duration: Beat, pitch: u8, voice: Voice) -> NoteEvent {
        NoteEvent { onset, duration, pitch: p(pitch), voice }
    }

    fn bare_score(notes: Vec<NoteEvent>) -> Score {
        Score::new("t", KeySignature::c_major(), 4, notes, vec![], None)
    }

    #[test]
    fn interval_is_absolute_distance() {
        assert_eq!(interval_semitones(p(60), p(67)), 7);
        assert_eq!(interval_semitones(p(67), p(60)), 7);
        assert_eq!(interval_semitones(p(60), p(60)), 0);
    }

    #[test]
    fn interval_class_reduction() {
        assert_eq!(interval_class(0).value(), 12, "unison shares class 12 with the octave");
        assert_eq!(interval_class(1).value(), 1);
        assert_eq!(interval_class(7).value(), 7);
        assert_eq!(interval_class(12).value(), 12);
        assert_eq!(interval_class(13).value(), 1);
        assert_eq!(interval_class(24).value(), 12);
    }

    #[test]
    fn duration_snapping() {
        // 5/4 sits exactly between the 1 and 3/2 bins: tie goes to the shorter.
        assert_eq!(duration_bin_index(beat(5, 4)), 3);
        assert_eq!(duration_bin_index(beat(7, 8)), 2, "7/8 ties between 3/4 and 1");
        assert_eq!(duration_bin_index(beat(9, 2)), 7, "overflow clamps to the 4 bin");
        assert_eq!(duration_bin_index(beat(1, 8)), 0);
        for (i, b) in duration_bins().iter().enumerate() {
            assert_eq!(duration_bin_index(*b), i, "bin values snap to themselves");
        }
    }

    #[test]
    fn motif_pitch_class_counts() {
        // C-C-G repeated four times: 8 C's and 4 G's, counted by hand.
        let mut notes = Vec::new();
        for rep in 0..4 {
            let base = Beat::from_integer(rep * 3);
            notes.push(note(base, beat(1, 1), 60, Voice::Melody));
            notes.push(note(base + beat(1, 1), beat(1, 1), 60, Voice::Melody));
            notes.push(note(base + beat(2, 1), beat(1, 1), 67, Voice::Melody));
        }
        let h = pitch_class_histogram(&bare_score(notes));
        assert_eq!(h.counts[0], 8);
        assert_eq!(h.counts[7], 4);
        assert_eq!(h.total(), 12);
    }

    #[test]
    fn empty_histogram_has_no_probabilities() {
        let h = pitch_class_histogram(&bare_score(vec![]));
        assert_eq!(h.total(), 0);
        assert!(h.probabilities().is_none());
    }

    /// Oracle: sample the midpoint of a segment and count notes sounding there.
    fn sounding_at(score: &Score, t: Beat) -> Vec<Pitch> {
        let mut v: Vec<Pitch> = score
            .notes
            .iter()
            .filter(|n| n.onset <= t && n.offset() > t)
            .map(|n| n.pitch)
            .collect();
        v.sort();
        v
    }

    #[test]
    fn half_overlapping_notes_make_one_sonority() {
        // [0,2) at 60 and [1,3) at 64: three sweep segments, only the middle
        // one is multi-pitch.
        let s = bare_score(vec![
            note(beat(0, 1), beat(2, 1), 60, Voice::Melody),
            note(beat(1, 1), beat(2, 1), 64, Voice::Accompaniment),
        ]);
        let sons = sonorities(&s);
        assert_eq!(sons.len(), 1);
        assert_eq!(sons[0].onset, beat(1, 1));
        assert_eq!(sons[0].pitches, vec![p(60), p(64)]);
        assert_eq!(sons[0].pitches, sounding_at(&s, beat(3, 2)), "matches midpoint sample");
    }

    #[test]
    fn melody_over_block_chord() {
        let mut notes = vec![note(beat(0, 1), beat(1, 1), 64, Voice::Melody)];
        for chord_pitch in [48, 52, 55] {
            notes.push(note(beat(0, 1), beat(1, 1), chord_pitch, Voice::Accompaniment));
        }
        let sons = sonorities(&bare_score(notes));
        assert_eq!(sons.len(), 1);
        assert_eq!(sons[0].pitches, vec![p(48), p(52), p(55), p(64)]);
    }

    #[test]
    fn lone_note_has_no_sonorities() {
        let s = bare_score(vec![note(beat(0, 1), beat(4, 1), 60, Voice::Melody)]);
        assert!(sonorities(&s).is_empty());
    }

    #[test]
    fn unison_voices_stay_a_multiset() {
        let s = bare_score(vec![
            note(beat(0, 1), beat(1, 1), 60, Voice::Melody),
            note(beat(0, 1), beat(1, 1), 60, Voice::Accompaniment),
        ]);
        let sons = sonorities(&s);
        assert_eq!(sons.len(), 1);
        assert_eq!(sons[0].pitches, vec![p(60), p(60)]);
    }

    #[test]
    fn scale_degrees() {
        let c = KeySignature::c_major();
        assert_eq!(c.degree_of(PitchClass::new(0).unwrap()), Some(1));
        assert_eq!(c.degree_of(PitchClass::new(7).unwrap()), Some(5));
        assert_eq!(c.degree_of(PitchClass::new(11).unwrap()), Some(7));
        assert_eq!(c.degree_of(PitchClass::new(6).unwrap()), None);

        let a_minor = KeySignature::new(PitchClass::new(9).unwrap(), Mode::Minor);
        assert_eq!(a_minor.degree_of(PitchClass::new(9).unwrap()), Some(1));
        assert_eq!(a_minor.degree_of(PitchClass::new(0).unwrap()), Some(3));
    }

    proptest! {
        #[test]
        fn interval_classes_stay_in_range(s in 0u8..=127) {
            let c = interval_class(s).value();
            prop_assert!((1..=12).contains(&c));
        }

        #[test]
        fn interval_class_is_octave_periodic(s in 0u8..=115) {
            prop_assert_eq!(interval_class(s).value(), interval_class(s + 12).value());
        }

        #[test]
        fn histograms_count_every_note(
            pitches in proptest::collection::vec(0u8..=127, 0..40),
        ) {
            let notes: Vec<NoteEvent> = pitches
                .iter()
                .enumerate()
                .map(|(i, &m)| note(Beat::from_integer(i as i64), beat(1, 2), m, Voice::Melody))
                .collect();
            let s = bare_score(notes);
            prop_assert_eq!(pitch_class_histogram(&s).total(), pitches.len() as u64);
            prop_assert_eq!(duration_histogram(&s).total(), pitches.len() as u64);
        }

        #[test]
        fn sonorities_ignore_input_order(
            seed in proptest::collection::vec((0i64..16, 1i64..=8, 40u8..=90), 2..24),
        ) {
            let notes: Vec<NoteEvent> = seed
                .iter()
                .map(|&(on, dur, m)| note(Beat::from_integer(on), beat(dur, 2), m, Voice::Melody))
                .collect();
            let mut reversed = notes.clone();
            reversed.reverse();
            let a = sonorities(&bare_score(notes));
            let b = sonorities(&bare_score(reversed));
            prop_assert_eq!(a, b);
        }

        #[test]
        fn every_sweep_segment_matches_midpoint_sampling(
            seed in proptest::collection::vec((0i64..12, 1i64..=6, 40u8..=90), 2..16),
        ) {
            let notes: Vec<NoteEvent> = seed
                .iter()
                .map(|&(on, dur, m)| note(Beat::from_integer(on), beat(dur, 2), m, Voice::Melody))
                .collect();
            let s = bare_score(notes);
            for son in sonorities(&s) {
                // Sample just inside the segment; boundaries are half-open.
                let probe = son.onset + beat(1, 1_000_000);
                prop_assert_eq!(son.pitches.clone(), sounding_at(&s, probe));
            }
        }
    }
}
