//! Symmetry features: structural self-similarity over a beat-level chroma
//! sequence, plus pitch/rhythm distribution skewness.
//!
//! The self-similarity side is a deliberately small take on path-family
//! structure analysis: one-beat chroma frames, cosine self-similarity, and
//! only strictly diagonal alignments as candidate paths. A segment's family
//! is the trivial self-match plus every non-overlapping diagonal whose mean
//! similarity clears the threshold; fitness is the harmonic mean of how
//! well those paths match and how much of the piece they cover.

use crate::score::{beat_to_f64, Beat, Score};
use crate::FeatureError;

use serde::{Deserialize, Serialize};

/// Duration-weighted pitch-class energy per one-beat frame, each frame
/// normalized to unit length (silent frames stay zero).
pub fn chroma_sequence(score: &Score) -> Vec<[f64; 12]> {
    let total = score.total_beats();
    let n = total.ceil().to_integer().max(0) as usize;
    let mut frames = vec![[0.0f64; 12]; n];
    for note in &score.notes {
        let pc = note.pitch.class().value() as usize;
        let first = note.onset.floor().to_integer().max(0) as usize;
        for (f, frame) in frames.iter_mut().enumerate().skip(first) {
            let lo = Beat::from_integer(f as i64);
            let hi = Beat::from_integer(f as i64 + 1);
            if note.onset >= hi {
                break;
            }
            let overlap = note.offset().min(hi) - note.onset.max(lo);
            if overlap > Beat::from_integer(0) {
                frame[pc] += beat_to_f64(overlap);
            }
        }
    }
    for frame in &mut frames {
        let norm = frame.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in frame.iter_mut() {
                *v /= norm;
            }
        }
    }
    frames
}

/// Frame-by-frame cosine similarities, row-major, diagonal pinned to 1.
#[derive(Clone, Debug)]
pub struct SelfSimilarityMatrix {
    n: usize,
    values: Vec<f64>,
}

impl SelfSimilarityMatrix {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }
}

pub fn self_similarity_matrix(chroma: &[[f64; 12]]) -> SelfSimilarityMatrix {
    let n = chroma.len();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            values[i * n + j] = if i == j {
                // Convention: a frame matches itself even when silent.
                1.0
            } else {
                chroma[i].iter().zip(&chroma[j]).map(|(a, b)| a * b).sum()
            };
        }
    }
    SelfSimilarityMatrix { n, values }
}

/// Half-open frame range `[start, end)`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// Fitness of one segment's diagonal path family.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct PathFamilyFitness {
    /// Mean similarity of the non-trivial family paths, 0 when the segment
    /// repeats nowhere.
    pub similarity: f64,
    /// Fraction of all frames covered by the family outside the segment itself.
    pub coverage: f64,
    /// Harmonic mean of the two, 0 when both vanish.
    pub fitness: f64,
}

/// Score a segment against every diagonal alignment of the matrix.
pub fn segment_fitness(
    ssm: &SelfSimilarityMatrix,
    segment: Segment,
    tau: f64,
) -> Result<PathFamilyFitness, FeatureError> {
    let n = ssm.size();
    assert!(segment.end <= n, "segment [{},{}) outside 0..{n}", segment.start, segment.end);
    let len = segment.end.saturating_sub(segment.start);
    if len < 2 {
        return Err(FeatureError::SegmentTooShort { start: segment.start, end: segment.end });
    }

    // Mean similarity along each diagonal alignment of the segment.
    let path_score = |s: usize| -> f64 {
        (0..len).map(|k| ssm.get(segment.start + k, s + k)).sum::<f64>() / len as f64
    };

    // The family always contains the trivial self-match; the rest is a
    // greedy pick of non-overlapping starts by score (ties to the left).
    let mut candidates: Vec<(usize, f64)> = (0..=n - len)
        .filter(|&s| s != segment.start)
        .map(|s| (s, path_score(s)))
        .filter(|&(_, sc)| sc >= tau)
        .collect();
    candidates.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));

    let mut taken: Vec<usize> = vec![segment.start];
    let mut total_score = 0.0;
    for (s, sc) in candidates {
        let overlaps = taken.iter().any(|&t| s < t + len && t < s + len);
        if !overlaps {
            taken.push(s);
            total_score += sc;
        }
    }

    let repeats = taken.len() - 1;
    let similarity = if repeats > 0 {
        (total_score / repeats as f64).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let coverage = (repeats * len) as f64 / n as f64;
    let fitness = if similarity + coverage > 0.0 {
        2.0 * similarity * coverage / (similarity + coverage)
    } else {
        0.0
    };
    Ok(PathFamilyFitness { similarity, coverage, fitness })
}

/// Knobs for the whole-score fitness search.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct SsfConfig {
    /// Minimum mean path similarity for family membership.
    pub tau: f64,
    /// Cap on enumerated segments; beyond it both segment length and start
    /// move on a stride so the scan stays bounded on long scores.
    pub max_candidates: usize,
}

impl Default for SsfConfig {
    fn default() -> SsfConfig {
        SsfConfig { tau: 0.85, max_candidates: 2000 }
    }
}

fn candidate_count(n: usize, stride: usize) -> usize {
    let mut count = 0;
    let mut len = 2;
    while len <= n / 2 {
        count += (n - len) / stride + 1;
        len += stride;
    }
    count
}

/// Best path-family fitness over all candidate segments (lengths 2 to n/2,
/// every start), enumerated on the smallest stride that fits the budget.
pub fn self_similarity_fitness(score: &Score, config: &SsfConfig) -> Result<f64, FeatureError> {
    let chroma = chroma_sequence(score);
    let n = chroma.len();
    if n < 4 {
        return Err(FeatureError::ScoreTooShort { frames: n });
    }
    let ssm = self_similarity_matrix(&chroma);

    let mut stride = 1;
    while candidate_count(n, stride) > config.max_candidates {
        stride += 1;
    }

    let mut best = 0.0f64;
    let mut len = 2;
    while len <= n / 2 {
        let mut start = 0;
        while start + len <= n {
            let fit = segment_fitness(&ssm, Segment { start, end: start + len }, config.tau)
                .expect("enumerated segments are at least 2 frames");
            best = best.max(fit.fitness);
            start += stride;
        }
        len += stride;
    }
    Ok(best)
}

/// Third standardized moment `m3 / m2^1.5` with biased (1/n) moments.
/// Returns `(0, true)` for degenerate samples: fewer than two values or
/// zero variance.
pub fn sample_skewness(values: &[f64]) -> (f64, bool) {
    let n = values.len();
    if n < 2 {
        return (0.0, true);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    for v in values {
        let d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n as f64;
    m3 /= n as f64;
    if m2 == 0.0 {
        return (0.0, true);
    }
    (m3 / m2.powf(1.5), false)
}

/// Absolute pitch skewness over all note pitches.
pub fn pitch_skewness(score: &Score) -> (f64, bool) {
    let pitches: Vec<f64> = score.notes.iter().map(|n| n.pitch.midi() as f64).collect();
    let (g1, degenerate) = sample_skewness(&pitches);
    (g1.abs(), degenerate)
}

/// Absolute rhythm skewness over all note durations, in beats (unsnapped).
pub fn rhythm_skewness(score: &Score) -> (f64, bool) {
    let durations: Vec<f64> = score.notes.iter().map(|n| beat_to_f64(n.duration)).collect();
    let (g1, degenerate) = sample_skewness(&durations);
    (g1.abs(), degenerate)
}

/// Linear combination weights for the skewness pair.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct SkewnessWeights {
    pub beta_pitch: f64,
    pub beta_rhythm: f64,
    pub theta: f64,
}

impl Default for SkewnessWeights {
    fn default() -> SkewnessWeights {
        SkewnessWeights { beta_pitch: 1.0, beta_rhythm: 1.0, theta: 0.0 }
    }
}

/// `beta_pitch * PS + beta_rhythm * RS + theta`, with the per-side
/// degenerate flags passed through.
pub fn skewness_feature(score: &Score, weights: &SkewnessWeights) -> (f64, bool, bool) {
    let (ps, ps_degenerate) = pitch_skewness(score);
    let (rs, rs_degenerate) = rhythm_skewness(score);
    (
        weights.beta_pitch * ps + weights.beta_rhythm * rs + weights.theta,
        ps_degenerate,
        rs_degenerate,
    )
}
