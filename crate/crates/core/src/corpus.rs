//! Seeded synthetic corpus: paired composer-like and AI-like scores that
//! share a chord progression, plus dataset splitting and JSONL persistence.
//!
//! Each pair index yields two scores over identical chords and block-chord
//! accompaniment. The composer-like melody is a four-bar motif of chord
//! tones and passing tones repeated in an AABA-like plan with a small
//! seeded cadence variation; the AI-like melody is a sticky, mean-reverting
//! random walk over scale degrees with irregular rests and a duration mix
//! dominated by repeated eighth-note pairs. The contrast is deliberate: the
//! two generators encode the regularity differences the classifier is
//! trained to pick up.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ingest::{parse_score_text, serialize_score, TextError};
use crate::score::{
    beat, Beat, ChordAnnotation, ChordQuality, KeySignature, Label, Mode, NoteEvent, Pitch,
    PitchClass, Score, Voice,
};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("invalid generation config: {0}")]
    InvalidConfig(String),
    #[error("line {line}: {source}")]
    Line {
        line: usize,
        #[source]
        source: TextError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("split would leave an empty train or test side")]
    EmptySplit,
}

/// One chord of a progression template, as an absolute root pitch class.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct ChordSpec {
    pub root: PitchClass,
    pub quality: ChordQuality,
}

/// A chord progression in a fixed key, cycled bar-by-bar over a score.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct ProgressionTemplate {
    pub key: KeySignature,
    pub chords: Vec<ChordSpec>,
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct GenConfig {
    pub seed: u64,
    pub n_pairs: usize,
    pub bars: u32,
    pub beats_per_bar: u32,
    pub progression_pool: Vec<ProgressionTemplate>,
}

impl Default for GenConfig {
    fn default() -> GenConfig {
        GenConfig {
            seed: 42,
            n_pairs: 100,
            bars: 16,
            beats_per_bar: 4,
            progression_pool: default_progression_pool(),
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.n_pairs < 1 {
            return Err(CorpusError::InvalidConfig("n_pairs must be at least 1".into()));
        }
        if self.bars < 4 {
            return Err(CorpusError::InvalidConfig("bars must be at least 4".into()));
        }
        if self.beats_per_bar < 1 {
            return Err(CorpusError::InvalidConfig("beats_per_bar must be at least 1".into()));
        }
        if self.progression_pool.is_empty() {
            return Err(CorpusError::InvalidConfig("progression_pool must not be empty".into()));
        }
        if self.progression_pool.iter().any(|t| t.chords.is_empty()) {
            return Err(CorpusError::InvalidConfig(
                "every progression template needs at least one chord".into(),
            ));
        }
        Ok(())
    }
}

/// The I-V-vi-IV shape in every major key.
pub fn default_progression_pool() -> Vec<ProgressionTemplate> {
    let degrees: [(i32, ChordQuality); 4] = [
        (0, ChordQuality::Major),
        (7, ChordQuality::Major),
        (9, ChordQuality::Minor),
        (5, ChordQuality::Major),
    ];
    (0u8..12)
        .map(|tonic| {
            let tonic = PitchClass::new(tonic).unwrap();
            ProgressionTemplate {
                key: KeySignature::new(tonic, Mode::Major),
                chords: degrees
                    .iter()
                    .map(|&(offset, quality)| ChordSpec { root: tonic.transposed(offset), quality })
                    .collect(),
            }
        })
        .collect()
}

const LANE_SHARED: u64 = 0;
const LANE_COMPOSER: u64 = 1;
const LANE_AI: u64 = 2;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent deterministic stream per (seed, pair index, lane).
fn stream_rng(seed: u64, index: u64, lane: u64) -> ChaCha8Rng {
    let mut s = mix64(seed ^ 0x6a09_e667_f3bc_c909);
    s = mix64(s ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    s = mix64(s ^ lane.wrapping_mul(0xd1b5_4a32_d192_ed03));
    ChaCha8Rng::seed_from_u64(s)
}

/// Melodies stay within this many semitones of the key anchor pitch.
const MELODY_SPAN: i32 = 14;
/// Lowest accompaniment pitch; chord tones sit at this base plus pitch class.
const ACCOMPANIMENT_BASE: i32 = 48;

const MOTIF_BARS: u32 = 4;
const PASSING_PROB: f64 = 0.35;
const CADENCE_NOTES: usize = 2;
const CADENCE_PROB: f64 = 0.5;

const AI_REST_PROB: f64 = 0.15;
const AI_STAY_PROB: f64 = 0.30;
const AI_INWARD_BASE: f64 = 0.60;
const AI_INWARD_SLOPE: f64 = 0.12;
const AI_INWARD_CAP: f64 = 0.95;
const AI_WIDE_STEP_PROB: f64 = 0.20;

/// Whole-beat rhythm cells for the AI-like melody; every note of a cell
/// repeats the current walk pitch, so cell boundaries stay on the beat grid
/// while the duration histogram still touches all eight bins.
const AI_CELLS: [(&[(i64, i64)], u32); 8] = [
    (&[(1, 1)], 7),
    (&[(1, 2), (1, 2)], 76),
    (&[(1, 4), (1, 4), (1, 4), (1, 4)], 2),
    (&[(3, 4), (1, 4)], 2),
    (&[(2, 1)], 3),
    (&[(3, 2), (1, 2)], 3),
    (&[(3, 1)], 2),
    (&[(4, 1)], 3),
];

/// Diatonic pitch lattice around a per-key anchor: index 0 is the tonic at
/// the anchor octave, +/-1 moves one scale degree.
struct DegreeLattice {
    anchor: i32,
    offsets: [i32; 7],
}

impl DegreeLattice {
    fn new(key: KeySignature) -> DegreeLattice {
        let tonic = key.tonic.value() as i32;
        let anchor = if tonic <= 6 { 60 + tonic } else { 48 + tonic };
        let scale = key.scale();
        let mut offsets = [0i32; 7];
        for (i, pc) in scale.iter().enumerate() {
            offsets[i] = pc.semitones_above(key.tonic) as i32;
        }
        DegreeLattice { anchor, offsets }
    }

    fn pitch(&self, k: i32) -> i32 {
        self.anchor + 12 * k.div_euclid(7) + self.offsets[k.rem_euclid(7) as usize]
    }

    fn in_span(&self, k: i32) -> bool {
        (self.pitch(k) - self.anchor).abs() <= MELODY_SPAN
    }

    /// One scale step from `k`, reflecting off the span boundary.
    fn step(&self, k: i32, dir: i32) -> i32 {
        let cand = k + dir;
        if self.in_span(cand) {
            cand
        } else {
            k - dir
        }
    }

    fn degrees_in_span(&self) -> Vec<i32> {
        (-16..=16).filter(|&k| self.in_span(k)).collect()
    }
}

fn pitch_at(lattice: &DegreeLattice, k: i32) -> Pitch {
    Pitch::new(lattice.pitch(k) as u8).expect("lattice pitch stays in midi range")
}

fn chord_at(template: &ProgressionTemplate, bar: usize) -> &ChordSpec {
    &template.chords[bar % template.chords.len()]
}

fn bar_index(t: Beat, beats_per_bar: u32) -> usize {
    (t / Beat::from_integer(beats_per_bar as i64)).floor().to_integer() as usize
}

/// Chord annotations cycling the template one chord per bar.
fn chord_track(template: &ProgressionTemplate, bars: u32, beats_per_bar: u32) -> Vec<ChordAnnotation> {
    (0..bars)
        .map(|bar| {
            let spec = chord_at(template, bar as usize);
            ChordAnnotation {
                onset: Beat::from_integer((bar * beats_per_bar) as i64),
                root: spec.root,
                quality: spec.quality,
            }
        })
        .collect()
}

/// One block chord per annotation, held until the next chord.
fn accompaniment(chords: &[ChordAnnotation], end: Beat) -> Vec<NoteEvent> {
    let mut notes = Vec::new();
    for (i, chord) in chords.iter().enumerate() {
        let until = chords.get(i + 1).map_or(end, |next| next.onset);
        let duration = until - chord.onset;
        if duration <= Beat::from_integer(0) {
            continue;
        }
        for pc in chord.tone_classes() {
            let midi = ACCOMPANIMENT_BASE + pc.value() as i32;
            notes.push(NoteEvent {
                onset: chord.onset,
                duration,
                pitch: Pitch::new(midi as u8).expect("accompaniment pitch in range"),
                voice: Voice::Accompaniment,
            });
        }
    }
    notes
}

/// A motif as (onset within motif, duration, lattice degree).
fn compose_motif(
    rng: &mut ChaCha8Rng,
    lattice: &DegreeLattice,
    template: &ProgressionTemplate,
    beats_per_bar: u32,
) -> Vec<(Beat, Beat, i32)> {
    let durations = [beat(1, 2), beat(1, 1), beat(2, 1)];
    let total = Beat::from_integer((MOTIF_BARS * beats_per_bar) as i64);
    let span = lattice.degrees_in_span();
    let mut out = Vec::new();
    let mut prev_k = 0i32;
    let mut t = Beat::from_integer(0);
    while t < total {
        let remaining = total - t;
        let options: Vec<Beat> = durations.iter().copied().filter(|d| *d <= remaining).collect();
        let duration = options[rng.gen_range(0..options.len())];
        let chord = chord_at(template, bar_index(t, beats_per_bar));
        let k = if t.is_integer() || rng.gen::<f64>() >= PASSING_PROB {
            nearest_chord_degree(rng, lattice, &span, chord, prev_k)
        } else {
            let dir = if rng.gen::<bool>() { 1 } else { -1 };
            lattice.step(prev_k, dir)
        };
        out.push((t, duration, k));
        prev_k = k;
        t += duration;
    }
    out
}

/// Pick uniformly among the few chord-tone degrees closest to `prev_k`.
fn nearest_chord_degree(
    rng: &mut ChaCha8Rng,
    lattice: &DegreeLattice,
    span: &[i32],
    chord: &ChordSpec,
    prev_k: i32,
) -> i32 {
    let tones: Vec<u8> = chord
        .quality
        .tone_offsets()
        .iter()
        .map(|&o| chord.root.transposed(o as i32).value())
        .collect();
    let prev_pitch = lattice.pitch(prev_k);
    let mut candidates: Vec<i32> = span
        .iter()
        .copied()
        .filter(|&k| tones.contains(&(lattice.pitch(k).rem_euclid(12) as u8)))
        .collect();
    candidates.sort_by_key(|&k| ((lattice.pitch(k) - prev_pitch).abs(), k));
    let take = candidates.len().min(3);
    candidates[rng.gen_range(0..take)]
}

/// Repeated-motif melody: sections of `MOTIF_BARS` bars follow an AABA-like
/// plan (the third section gets its own motif) and the final repeat may
/// shift its last notes by a scale step as a cadence variation.
fn composer_melody(
    rng: &mut ChaCha8Rng,
    lattice: &DegreeLattice,
    template: &ProgressionTemplate,
    bars: u32,
    beats_per_bar: u32,
) -> Vec<NoteEvent> {
    let motif_a = compose_motif(rng, lattice, template, beats_per_bar);
    let motif_b = compose_motif(rng, lattice, template, beats_per_bar);
    let cadence: Vec<Option<i32>> = (0..CADENCE_NOTES)
        .map(|_| {
            let shift = rng.gen::<f64>() < CADENCE_PROB;
            let dir = if rng.gen::<bool>() { 1 } else { -1 };
            shift.then_some(dir)
        })
        .collect();

    let end = Beat::from_integer((bars * beats_per_bar) as i64);
    let sections = (bars + MOTIF_BARS - 1) / MOTIF_BARS;
    let mut notes = Vec::new();
    for section in 0..sections {
        let motif = if section == 2 { &motif_b } else { &motif_a };
        let vary = section == sections - 1 && section != 2 && sections >= 2;
        let base = Beat::from_integer((section * MOTIF_BARS * beats_per_bar) as i64);
        let tail_start = motif.len().saturating_sub(CADENCE_NOTES);
        for (i, &(offset, duration, k)) in motif.iter().enumerate() {
            let onset = base + offset;
            if onset >= end {
                break;
            }
            let k = match cadence.get(i.wrapping_sub(tail_start)) {
                Some(&Some(dir)) if vary => lattice.step(k, dir),
                _ => k,
            };
            notes.push(NoteEvent {
                onset,
                duration: duration.min(end - onset),
                pitch: pitch_at(lattice, k),
                voice: Voice::Melody,
            });
        }
    }
    notes
}

/// Mean-reverting random walk over scale degrees, one pitch per rhythm
/// cell, with rests dropped cells.
fn ai_melody(
    rng: &mut ChaCha8Rng,
    lattice: &DegreeLattice,
    bars: u32,
    beats_per_bar: u32,
) -> Vec<NoteEvent> {
    let end = Beat::from_integer((bars * beats_per_bar) as i64);
    let weights = WeightedIndex::new(AI_CELLS.iter().map(|cell| cell.1)).expect("static weights");
    let mut notes = Vec::new();
    let mut degree = 0i32;
    let mut t = Beat::from_integer(0);
    while t < end {
        let rest = rng.gen::<f64>() < AI_REST_PROB;
        // Rests last a single beat so silence never blankets whole bars.
        let cell: &[(i64, i64)] = if rest { &[(1, 1)] } else { AI_CELLS[weights.sample(rng)].0 };
        if rng.gen::<f64>() >= AI_STAY_PROB {
            let dir = if degree == 0 {
                if rng.gen::<bool>() {
                    1
                } else {
                    -1
                }
            } else {
                let inward = (AI_INWARD_BASE + AI_INWARD_SLOPE * degree.abs() as f64)
                    .min(AI_INWARD_CAP);
                if rng.gen::<f64>() < inward {
                    -degree.signum()
                } else {
                    degree.signum()
                }
            };
            let magnitude = if rng.gen::<f64>() < AI_WIDE_STEP_PROB { 2 } else { 1 };
            let next = degree + dir * magnitude;
            if lattice.in_span(next) {
                degree = next;
            }
        }
        for &(n, d) in cell {
            if t >= end {
                break;
            }
            let duration = beat(n, d).min(end - t);
            if !rest {
                notes.push(NoteEvent {
                    onset: t,
                    duration,
                    pitch: pitch_at(lattice, degree),
                    voice: Voice::Melody,
                });
            }
            t += duration;
        }
    }
    notes
}

fn pick_template<'a>(cfg: &'a GenConfig, index: u64) -> &'a ProgressionTemplate {
    let mut shared = stream_rng(cfg.seed, index, LANE_SHARED);
    &cfg.progression_pool[shared.gen_range(0..cfg.progression_pool.len())]
}

/// Deterministic composer-like score for a pair index. Panics if `cfg` is
/// invalid; `gen_corpus` validates up front.
pub fn gen_composer_like(cfg: &GenConfig, index: u64) -> Score {
    cfg.validate().expect("generation config must be valid");
    let template = pick_template(cfg, index);
    let lattice = DegreeLattice::new(template.key);
    let mut rng = stream_rng(cfg.seed, index, LANE_COMPOSER);
    let chords = chord_track(template, cfg.bars, cfg.beats_per_bar);
    let end = Beat::from_integer((cfg.bars * cfg.beats_per_bar) as i64);
    let mut notes = composer_melody(&mut rng, &lattice, template, cfg.bars, cfg.beats_per_bar);
    notes.extend(accompaniment(&chords, end));
    Score::new(
        format!("pair-{index:04}-composer"),
        template.key,
        cfg.beats_per_bar,
        notes,
        chords,
        Some(Label::Composer),
    )
}

/// Deterministic AI-like score for a pair index: same chords, key, and
/// accompaniment as the paired composer-like score, different melody.
pub fn gen_ai_like(cfg: &GenConfig, index: u64) -> Score {
    cfg.validate().expect("generation config must be valid");
    let template = pick_template(cfg, index);
    let lattice = DegreeLattice::new(template.key);
    let mut rng = stream_rng(cfg.seed, index, LANE_AI);
    let chords = chord_track(template, cfg.bars, cfg.beats_per_bar);
    let end = Beat::from_integer((cfg.bars * cfg.beats_per_bar) as i64);
    let mut notes = ai_melody(&mut rng, &lattice, cfg.bars, cfg.beats_per_bar);
    notes.extend(accompaniment(&chords, end));
    Score::new(
        format!("pair-{index:04}-ai"),
        template.key,
        cfg.beats_per_bar,
        notes,
        chords,
        Some(Label::Ai),
    )
}

/// The full corpus, pairs interleaved: composer 0, ai 0, composer 1, ...
pub fn gen_corpus(cfg: &GenConfig) -> Result<Vec<Score>, CorpusError> {
    cfg.validate()?;
    let pairs: Vec<[Score; 2]> = (0..cfg.n_pairs as u64)
        .into_par_iter()
        .map(|i| [gen_composer_like(cfg, i), gen_ai_like(cfg, i)])
        .collect();
    Ok(pairs.into_iter().flatten().collect())
}

/// Group key that keeps paired scores on the same side of a split: the id
/// up to its last `-` segment.
fn pair_key(id: &str) -> &str {
    id.rsplit_once('-').map_or(id, |(head, _)| head)
}

/// Seeded shuffle of score pairs, then a split with at least
/// `ceil(ratio * n)` scores in train. Pairs never straddle the boundary,
/// so the two labels stay balanced on both sides.
pub fn split_dataset(
    scores: &[Score],
    ratio: f64,
    seed: u64,
) -> Result<(Vec<Score>, Vec<Score>), CorpusError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(CorpusError::InvalidConfig(format!(
            "split ratio must be strictly between 0 and 1, got {ratio}"
        )));
    }
    if scores.is_empty() {
        return Err(CorpusError::EmptySplit);
    }
    let mut order: Vec<&str> = Vec::new();
    let mut groups: HashMap<&str, Vec<&Score>> = HashMap::new();
    for score in scores {
        let key = pair_key(&score.id);
        groups.entry(key).or_insert_with(|| {
            order.push(key);
            Vec::new()
        });
        groups.get_mut(key).unwrap().push(score);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let target = (ratio * scores.len() as f64).ceil() as usize;
    let mut train = Vec::new();
    let mut test = Vec::new();
    for key in order {
        let bucket = &groups[key];
        if train.len() < target {
            train.extend(bucket.iter().map(|s| (*s).clone()));
        } else {
            test.extend(bucket.iter().map(|s| (*s).clone()));
        }
    }
    if train.is_empty() || test.is_empty() {
        return Err(CorpusError::EmptySplit);
    }
    Ok((train, test))
}

/// One score interchange document per line.
pub fn write_dataset(scores: &[Score], path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let mut text = String::new();
    for score in scores {
        text.push_str(&serialize_score(score));
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

/// Read a line-delimited dataset; blank lines are skipped, and parse
/// failures report their 1-based line number.
pub fn read_dataset(path: impl AsRef<Path>) -> Result<Vec<Score>, CorpusError> {
    let text = fs::read_to_string(path)?;
    let mut scores = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (score, _) = parse_score_text(line).map_err(|source| CorpusError::Line {
            line: i + 1,
            source,
        })?;
        scores.push(score);
    }
    Ok(scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::score::{beat_to_f64, duration_bins};
    use crate::symmetry::{rhythm_skewness, self_similarity_fitness, SsfConfig};

    fn small_config() -> GenConfig {
        GenConfig { n_pairs: 6, bars: 8, ..GenConfig::default() }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = GenConfig::default();
        assert_eq!(gen_composer_like(&cfg, 3), gen_composer_like(&cfg, 3));
        assert_eq!(gen_ai_like(&cfg, 3), gen_ai_like(&cfg, 3));
        assert_ne!(gen_composer_like(&cfg, 3), gen_composer_like(&cfg, 4));
    }

    #[test]
    fn pairs_share_chords_key_and_accompaniment() {
        let cfg = GenConfig::default();
        for index in 0..5 {
            let composer = gen_composer_like(&cfg, index);
            let ai = gen_ai_like(&cfg, index);
            assert_eq!(composer.key, ai.key);
            assert_eq!(composer.chords, ai.chords);
            assert_eq!(composer.total_beats(), ai.total_beats());
            let accomp = |s: &Score| -> Vec<NoteEvent> {
                s.notes.iter().copied().filter(|n| n.voice == Voice::Accompaniment).collect()
            };
            assert_eq!(accomp(&composer), accomp(&ai));
        }
    }

    #[test]
    fn corpus_is_balanced_and_interleaved() {
        let cfg = small_config();
        let corpus = gen_corpus(&cfg).unwrap();
        assert_eq!(corpus.len(), 12);
        let composers = corpus.iter().filter(|s| s.label == Some(Label::Composer)).count();
        assert_eq!(composers, 6);
        assert_eq!(corpus[0].id, "pair-0000-composer");
        assert_eq!(corpus[1].id, "pair-0000-ai");
        assert_eq!(corpus[10].id, "pair-0005-composer");
    }

    #[test]
    fn melodies_stay_diatonic_and_in_span() {
        let cfg = GenConfig::default();
        for index in 0..4 {
            for score in [gen_composer_like(&cfg, index), gen_ai_like(&cfg, index)] {
                let scale = score.key.scale();
                let lattice = DegreeLattice::new(score.key);
                for note in score.notes.iter().filter(|n| n.voice == Voice::Melody) {
                    assert!(scale.contains(&note.pitch.class()), "{}: {:?}", score.id, note);
                    let span = (note.pitch.midi() as i32 - lattice.anchor).abs();
                    assert!(span <= MELODY_SPAN, "{}: {} semitones from anchor", score.id, span);
                }
            }
        }
    }

    #[test]
    fn composer_melody_durations_come_from_the_motif_grid() {
        let cfg = small_config();
        let score = gen_composer_like(&cfg, 1);
        let allowed = [beat(1, 2), beat(1, 1), beat(2, 1)];
        for note in score.notes.iter().filter(|n| n.voice == Voice::Melody) {
            assert!(allowed.contains(&note.duration), "unexpected duration {:?}", note.duration);
        }
    }

    #[test]
    fn ai_melody_durations_come_from_the_standard_bins() {
        let cfg = GenConfig::default();
        let bins = duration_bins();
        for index in 0..4 {
            let score = gen_ai_like(&cfg, index);
            for note in score.notes.iter().filter(|n| n.voice == Voice::Melody) {
                assert!(bins.contains(&note.duration), "unexpected duration {:?}", note.duration);
            }
        }
    }

    #[test]
    fn ai_melody_has_rests() {
        let cfg = GenConfig::default();
        let score = gen_ai_like(&cfg, 0);
        let sounded: f64 = score
            .notes
            .iter()
            .filter(|n| n.voice == Voice::Melody)
            .map(|n| beat_to_f64(n.duration))
            .sum();
        let total = beat_to_f64(score.total_beats());
        assert!(sounded < total - 1.0, "melody fills {sounded} of {total} beats");
    }

    #[test]
    fn motif_repetition_separates_self_similarity() {
        let cfg = small_config();
        let ssf = SsfConfig::default();
        let mut wins = 0;
        for index in 0..cfg.n_pairs as u64 {
            let composer = self_similarity_fitness(&gen_composer_like(&cfg, index), &ssf).unwrap();
            let ai = self_similarity_fitness(&gen_ai_like(&cfg, index), &ssf).unwrap();
            if composer > ai {
                wins += 1;
            }
        }
        assert!(wins >= 5, "composer symmetry won only {wins}/6 pairs");
    }

    #[test]
    fn ai_rhythm_is_more_skewed_on_average() {
        let cfg = small_config();
        let mean = |gen: &dyn Fn(u64) -> Score| -> f64 {
            (0..cfg.n_pairs as u64).map(|i| rhythm_skewness(&gen(i)).0).sum::<f64>()
                / cfg.n_pairs as f64
        };
        let composer = mean(&|i| gen_composer_like(&cfg, i));
        let ai = mean(&|i| gen_ai_like(&cfg, i));
        assert!(ai > composer, "rhythm skewness: ai {ai} vs composer {composer}");
    }

    #[test]
    fn split_keeps_pairs_together_and_stratified() {
        let cfg = GenConfig { n_pairs: 10, ..small_config() };
        let corpus = gen_corpus(&cfg).unwrap();
        let (train, test) = split_dataset(&corpus, 0.7, 7).unwrap();
        assert_eq!(train.len(), 14);
        assert_eq!(test.len(), 6);
        let train_composers = train.iter().filter(|s| s.label == Some(Label::Composer)).count();
        assert_eq!(train_composers, 7);
        let train_keys: Vec<&str> = train.iter().map(|s| pair_key(&s.id)).collect();
        for score in &test {
            assert!(!train_keys.contains(&pair_key(&score.id)));
        }
        let (again, _) = split_dataset(&corpus, 0.7, 7).unwrap();
        assert_eq!(train, again);
    }

    #[test]
    fn split_rejects_degenerate_requests() {
        let cfg = GenConfig { n_pairs: 1, ..small_config() };
        let corpus = gen_corpus(&cfg).unwrap();
        assert!(matches!(split_dataset(&corpus, 0.7, 1), Err(CorpusError::EmptySplit)));
        assert!(matches!(
            split_dataset(&corpus, 1.5, 1),
            Err(CorpusError::InvalidConfig(_))
        ));
        assert!(matches!(split_dataset(&[], 0.7, 1), Err(CorpusError::EmptySplit)));
    }

    #[test]
    fn dataset_round_trips_through_disk() {
        let cfg = small_config();
        let corpus = gen_corpus(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        write_dataset(&corpus, &path).unwrap();
        let back = read_dataset(&path).unwrap();
        assert_eq!(corpus, back);
    }

    #[test]
    fn corrupted_line_reports_its_number() {
        let cfg = GenConfig { n_pairs: 2, ..small_config() };
        let corpus = gen_corpus(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        let mut lines: Vec<String> = corpus.iter().map(serialize_score).collect();
        lines[2] = "{\"oops\":".into();
        fs::write(&path, lines.join("\n")).unwrap();
        match read_dataset(&path) {
            Err(CorpusError::Line { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected a line error, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_reads_as_empty_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        fs::write(&path, "").unwrap();
        assert_eq!(read_dataset(&path).unwrap(), Vec::new());
    }

    #[test]
    fn config_serde_uses_exact_field_names() {
        let cfg = GenConfig { progression_pool: default_progression_pool()[..1].to_vec(), ..GenConfig::default() };
        let value = serde_json::to_value(&cfg).unwrap();
        let object = value.as_object().unwrap();
        for field in ["seed", "n_pairs", "bars", "beats_per_bar", "progression_pool"] {
            assert!(object.contains_key(field), "missing field {field}");
        }
        let back: GenConfig = serde_json::from_value(value).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        let mut cfg = GenConfig::default();
        cfg.n_pairs = 0;
        assert!(matches!(cfg.validate(), Err(CorpusError::InvalidConfig(_))));
        cfg = GenConfig::default();
        cfg.bars = 3;
        assert!(matches!(cfg.validate(), Err(CorpusError::InvalidConfig(_))));
        cfg = GenConfig::default();
        cfg.progression_pool.clear();
        assert!(matches!(cfg.validate(), Err(CorpusError::InvalidConfig(_))));
    }
}

