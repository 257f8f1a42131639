//! The aesthetic model: eight raw features, min-max normalization, four
//! logistic combiners, and the Birkhoff quotient on top.
//!
//! Training is deliberately plain full-batch gradient descent so that runs
//! are reproducible to the byte: fixed iteration count, fixed learning
//! rate, zero/unit initialization, no stochastic shuffling. The only
//! adaptive piece is a per-iteration backstop that halves a step (up to 30
//! times, else skips it) whenever it would increase the loss, which keeps
//! the empirical descent property without changing the nominal rate.
//!
//! The quotient's denominator weights live behind a softplus
//! reparameterization with a small additive floor on the constant term, so
//! `w3*E + w4*K + t2` stays above [`DENOMINATOR_FLOOR`] for any inputs in
//! the unit square no matter where training wanders.

use crate::complexity::{compression_complexity, EntropyWeights, COMPRESSOR_SETTING};
use crate::harmony::{chord_progression_harmony, interval_harmony, IntervalWeights, TensionWeights};
use crate::score::{Label, Score};
use crate::symmetry::{pitch_skewness, rhythm_skewness, self_similarity_fitness, SkewnessWeights, SsfConfig};
use crate::FeatureError;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

#[derive(thiserror::Error, Debug)]
pub enum ModelError {
    #[error("score '{id}': {source}")]
    Extraction { id: String, source: FeatureError },
    #[error("score '{id}' has no label")]
    UnlabeledScore { id: String },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("training set contains a single class")]
    SingleClassTraining,
    #[error("loss became non-finite at iteration {iteration}")]
    NonFiniteLoss { iteration: usize },
    #[error("quotient denominator {denominator} fell below {floor}")]
    DenominatorUnderflow { denominator: f64, floor: f64 },
    #[error("model file: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable `ln(1 + e^x)`.
pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

/// Inverse of [`softplus`] for positive arguments.
pub fn softplus_inverse(y: f64) -> f64 {
    (y.exp() - 1.0).ln()
}

/// Cross-entropy of a logit against a 0/1 label, in stable softplus form.
fn cross_entropy(logit: f64, label: f64) -> f64 {
    softplus(logit) - label * logit
}

/// Feature order used everywhere arrays stand in for named features.
pub const FEATURE_NAMES: [&str; 8] = ["ih", "cph", "ssf", "ps", "rs", "phe", "rhe", "kc"];

/// Per-feature degenerate-input markers.
#[derive(Clone, Copy, Default, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct FeatureFlags {
    pub ih: bool,
    pub cph: bool,
    pub ssf: bool,
    pub ps: bool,
    pub rs: bool,
    pub phe: bool,
    pub rhe: bool,
    pub kc: bool,
}

/// The eight raw basic features of one score.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct FeatureVector {
    pub ih: f64,
    pub cph: f64,
    pub ssf: f64,
    pub ps: f64,
    pub rs: f64,
    pub phe: f64,
    pub rhe: f64,
    pub kc: f64,
    pub flags: FeatureFlags,
}

impl FeatureVector {
    pub fn as_array(&self) -> [f64; 8] {
        [self.ih, self.cph, self.ssf, self.ps, self.rs, self.phe, self.rhe, self.kc]
    }
}

/// Weight/threshold settings for the raw feature extractors.
#[derive(Clone, PartialEq, Debug, Default, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub interval: IntervalWeights,
    pub tension: TensionWeights,
    pub entropy: EntropyWeights,
    pub skewness: SkewnessWeights,
    pub ssf: SsfConfig,
}

/// Run all eight extractors on one score.
///
/// Degenerate inputs for individual features (no simultaneities, no chord
/// track, too short to segment, zero variance, zero-entropy or
/// overhead-dominated byte stream) become fallback values with the
/// matching flag set: 0 for everything except the compression estimate,
/// which reports 1 on a zero-entropy stream. Only an empty score is a
/// hard error.
pub fn extract_features(score: &Score, config: &FeatureConfig) -> Result<FeatureVector, ModelError> {
    let fail = |source: FeatureError| ModelError::Extraction { id: score.id.clone(), source };
    if score.notes.is_empty() {
        return Err(fail(FeatureError::EmptyScore));
    }
    let mut flags = FeatureFlags::default();

    let ih = match interval_harmony(score, &config.interval) {
        Ok(v) => v,
        Err(FeatureError::NoSonorities) => {
            flags.ih = true;
            0.0
        }
        Err(e) => return Err(fail(e)),
    };

    let cph = match chord_progression_harmony(score, &config.tension) {
        Ok((v, _melody_gap)) => v,
        Err(FeatureError::NoChords) => {
            flags.cph = true;
            0.0
        }
        Err(e) => return Err(fail(e)),
    };

    let ssf = match self_similarity_fitness(score, &config.ssf) {
        Ok(v) => v,
        Err(FeatureError::ScoreTooShort { .. }) => {
            flags.ssf = true;
            0.0
        }
        Err(e) => return Err(fail(e)),
    };

    let (ps, ps_degenerate) = pitch_skewness(score);
    flags.ps = ps_degenerate;
    let (rs, rs_degenerate) = rhythm_skewness(score);
    flags.rs = rs_degenerate;

    let phe = crate::complexity::pitch_class_entropy(score).map_err(fail)?;
    let rhe = crate::complexity::rhythm_entropy(score).map_err(fail)?;

    let kc_outcome = compression_complexity(score);
    flags.kc = kc_outcome.degenerate || kc_outcome.clamped;

    Ok(FeatureVector { ih, cph, ssf, ps, rs, phe, rhe, kc: kc_outcome.value, flags })
}

/// Extract features for many scores in parallel, preserving input order.
pub fn extract_dataset(
    scores: &[Score],
    config: &FeatureConfig,
) -> Result<Vec<FeatureVector>, ModelError> {
    scores.par_iter().map(|s| extract_features(s, config)).collect()
}

/// Per-feature min-max scaler fitted on the training split.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct Normalizer {
    pub mins: [f64; 8],
    pub maxs: [f64; 8],
    /// Features that were constant when fitted; they map to 0.
    pub degenerate: [bool; 8],
}

impl Normalizer {
    pub fn fit(rows: &[[f64; 8]]) -> Result<Normalizer, ModelError> {
        if rows.is_empty() {
            return Err(ModelError::EmptyTrainingSet);
        }
        let mut mins = [f64::INFINITY; 8];
        let mut maxs = [f64::NEG_INFINITY; 8];
        for row in rows {
            for i in 0..8 {
                mins[i] = mins[i].min(row[i]);
                maxs[i] = maxs[i].max(row[i]);
            }
        }
        let mut degenerate = [false; 8];
        for i in 0..8 {
            if maxs[i] == mins[i] {
                degenerate[i] = true;
                maxs[i] = mins[i] + 1.0;
            }
        }
        Ok(Normalizer { mins, maxs, degenerate })
    }

    /// Scale into the unit interval, clamping values outside the fitted range.
    pub fn transform(&self, row: [f64; 8]) -> [f64; 8] {
        let mut out = [0.0; 8];
        for i in 0..8 {
            out[i] = ((row[i] - self.mins[i]) / (self.maxs[i] - self.mins[i])).clamp(0.0, 1.0);
        }
        out
    }
}

/// A plain logistic regression over a handful of inputs.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogisticModel {
    pub fn zeroed(dim: usize) -> LogisticModel {
        LogisticModel { weights: vec![0.0; dim], bias: 0.0 }
    }

    pub fn logit(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.weights.len());
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }
}

/// Shared gradient-descent settings.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub iterations: usize,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig { learning_rate: 0.01, iterations: 1000 }
    }
}

fn logistic_loss(model: &LogisticModel, rows: &[(Vec<f64>, f64)]) -> f64 {
    rows.iter().map(|(x, y)| cross_entropy(model.logit(x), *y)).sum::<f64>() / rows.len() as f64
}

fn logistic_loss_and_grad(
    model: &LogisticModel,
    rows: &[(Vec<f64>, f64)],
) -> (f64, Vec<f64>, f64) {
    let n = rows.len() as f64;
    let mut loss = 0.0;
    let mut grad_w = vec![0.0; model.weights.len()];
    let mut grad_b = 0.0;
    for (x, y) in rows {
        let z = model.logit(x);
        loss += cross_entropy(z, *y);
        let residual = sigmoid(z) - y;
        for (g, v) in grad_w.iter_mut().zip(x) {
            *g += residual * v;
        }
        grad_b += residual;
    }
    for g in &mut grad_w {
        *g /= n;
    }
    (loss / n, grad_w, grad_b / n)
}

fn check_labels(labels: impl Iterator<Item = f64> + Clone) -> Result<(), ModelError> {
    let mut any = false;
    let (mut pos, mut neg) = (false, false);
    for y in labels {
        any = true;
        if y > 0.5 {
            pos = true;
        } else {
            neg = true;
        }
    }
    if !any {
        return Err(ModelError::EmptyTrainingSet);
    }
    if !(pos && neg) {
        return Err(ModelError::SingleClassTraining);
    }
    Ok(())
}

/// Full-batch gradient descent from zero on mean cross-entropy.
pub fn train_logistic(
    rows: &[(Vec<f64>, f64)],
    dim: usize,
    config: &TrainConfig,
) -> Result<LogisticModel, ModelError> {
    check_labels(rows.iter().map(|(_, y)| *y))?;
    let mut model = LogisticModel::zeroed(dim);
    for iteration in 0..config.iterations {
        let (loss, grad_w, grad_b) = logistic_loss_and_grad(&model, rows);
        if !loss.is_finite() {
            return Err(ModelError::NonFiniteLoss { iteration });
        }
        let mut step = config.learning_rate;
        for _ in 0..30 {
            let mut candidate = model.clone();
            for (w, g) in candidate.weights.iter_mut().zip(&grad_w) {
                *w -= step * g;
            }
            candidate.bias -= step * grad_b;
            if logistic_loss(&candidate, rows) <= loss {
                model = candidate;
                break;
            }
            step /= 2.0;
        }
    }
    Ok(model)
}

/// The four logistic combiners mapping normalized features onto the
/// aesthetic vector (H, S, E, K).
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct GroupModels {
    /// (IH, CPH) -> H
    pub harmony: LogisticModel,
    /// (SSF, PS, RS) -> S
    pub symmetry: LogisticModel,
    /// (PHE, RHE) -> E
    pub entropy: LogisticModel,
    /// (KC) -> K
    pub complexity: LogisticModel,
}

/// Indices of each group's inputs within the 8-feature array.
pub const GROUP_SLICES: [&[usize]; 4] = [&[0, 1], &[2, 3, 4], &[5, 6], &[7]];

fn group_inputs(normalized: &[f64; 8], group: usize) -> Vec<f64> {
    GROUP_SLICES[group].iter().map(|&i| normalized[i]).collect()
}

/// Train the four combiners on the same labels with shared hyperparameters.
pub fn train_group_models(
    rows: &[([f64; 8], f64)],
    config: &TrainConfig,
) -> Result<GroupModels, ModelError> {
    let mut trained = Vec::with_capacity(4);
    for group in 0..4 {
        let group_rows: Vec<(Vec<f64>, f64)> =
            rows.iter().map(|(x, y)| (group_inputs(x, group), *y)).collect();
        trained.push(train_logistic(&group_rows, GROUP_SLICES[group].len(), config)?);
    }
    let mut it = trained.into_iter();
    Ok(GroupModels {
        harmony: it.next().unwrap(),
        symmetry: it.next().unwrap(),
        entropy: it.next().unwrap(),
        complexity: it.next().unwrap(),
    })
}

impl GroupModels {
    /// (H, S, E, K) for one normalized feature row.
    pub fn aesthetic_vector(&self, normalized: &[f64; 8]) -> [f64; 4] {
        [
            self.harmony.predict(&group_inputs(normalized, 0)),
            self.symmetry.predict(&group_inputs(normalized, 1)),
            self.entropy.predict(&group_inputs(normalized, 2)),
            self.complexity.predict(&group_inputs(normalized, 3)),
        ]
    }
}

/// Which aesthetic terms participate in the quotient; ablations switch
/// exactly one off.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct AestheticMask {
    pub harmony: bool,
    pub symmetry: bool,
    pub entropy: bool,
    pub complexity: bool,
}

impl AestheticMask {
    pub const FULL: AestheticMask =
        AestheticMask { harmony: true, symmetry: true, entropy: true, complexity: true };

    pub fn without(term: usize) -> AestheticMask {
        let mut mask = AestheticMask::FULL;
        match term {
            0 => mask.harmony = false,
            1 => mask.symmetry = false,
            2 => mask.entropy = false,
            3 => mask.complexity = false,
            _ => panic!("aesthetic terms are 0..=3"),
        }
        mask
    }
}

impl Default for AestheticMask {
    fn default() -> AestheticMask {
        AestheticMask::FULL
    }
}

/// Hard floor for the quotient denominator over the whole unit square.
pub const DENOMINATOR_FLOOR: f64 = 1e-3;

/// Weights of the final quotient `(w1*H + w2*S + t1) / (w3*E + w4*K + t2)`.
///
/// `rho3`/`rho4`/`rho_theta` are the raw trained parameters behind the
/// denominator: `w3 = softplus(rho3)`, `w4 = softplus(rho4)`,
/// `theta2 = softplus(rho_theta) + DENOMINATOR_FLOOR`. A term masked out
/// by an ablation stores weight 0 and no raw parameter.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct QuotientParams {
    pub w1: f64,
    pub w2: f64,
    pub theta1: f64,
    pub w3: f64,
    pub w4: f64,
    pub theta2: f64,
    pub rho3: Option<f64>,
    pub rho4: Option<f64>,
    pub rho_theta: f64,
    pub mask: AestheticMask,
}

impl QuotientParams {
    /// Smallest denominator reachable for aesthetic values in the unit square.
    pub fn denominator_floor(&self) -> f64 {
        self.theta2 + self.w3.min(0.0) + self.w4.min(0.0)
    }
}

/// Evaluate the quotient for one aesthetic vector.
pub fn birkhoff_measure(params: &QuotientParams, aesthetic: [f64; 4]) -> Result<f64, ModelError> {
    let [h, s, e, k] = aesthetic;
    let numerator = params.w1 * h + params.w2 * s + params.theta1;
    let denominator = params.w3 * e + params.w4 * k + params.theta2;
    if denominator < DENOMINATOR_FLOOR {
        return Err(ModelError::DenominatorUnderflow {
            denominator,
            floor: DENOMINATOR_FLOOR,
        });
    }
    Ok(numerator / denominator)
}

/// Trainable state of the quotient; masked terms hold no parameter.
#[derive(Clone, Copy, Debug)]
struct QuotientState {
    w1: f64,
    w2: f64,
    t1: f64,
    r3: f64,
    r4: f64,
    rt: f64,
}

impl QuotientState {
    fn initial() -> QuotientState {
        // Unit weights everywhere: softplus_inverse pulls the raw
        // denominator parameters to whatever makes w3 = w4 = 1, t2 = 1.
        QuotientState {
            w1: 1.0,
            w2: 1.0,
            t1: 0.0,
            r3: softplus_inverse(1.0),
            r4: softplus_inverse(1.0),
            rt: softplus_inverse(1.0 - DENOMINATOR_FLOOR),
        }
    }

    fn measure(&self, mask: AestheticMask, a: &[f64; 4]) -> f64 {
        let mut num = self.t1;
        if mask.harmony {
            num += self.w1 * a[0];
        }
        if mask.symmetry {
            num += self.w2 * a[1];
        }
        let mut den = softplus(self.rt) + DENOMINATOR_FLOOR;
        if mask.entropy {
            den += softplus(self.r3) * a[2];
        }
        if mask.complexity {
            den += softplus(self.r4) * a[3];
        }
        num / den
    }

    fn into_params(self, mask: AestheticMask) -> QuotientParams {
        QuotientParams {
            w1: if mask.harmony { self.w1 } else { 0.0 },
            w2: if mask.symmetry { self.w2 } else { 0.0 },
            theta1: self.t1,
            w3: if mask.entropy { softplus(self.r3) } else { 0.0 },
            w4: if mask.complexity { softplus(self.r4) } else { 0.0 },
            theta2: softplus(self.rt) + DENOMINATOR_FLOOR,
            rho3: mask.entropy.then_some(self.r3),
            rho4: mask.complexity.then_some(self.r4),
            rho_theta: self.rt,
            mask,
        }
    }
}

fn quotient_loss(state: &QuotientState, mask: AestheticMask, rows: &[([f64; 4], f64)]) -> f64 {
    rows.iter()
        .map(|(a, y)| cross_entropy(state.measure(mask, a), *y))
        .sum::<f64>()
        / rows.len() as f64
}

fn quotient_loss_and_grad(
    state: &QuotientState,
    mask: AestheticMask,
    rows: &[([f64; 4], f64)],
) -> (f64, QuotientState) {
    let n = rows.len() as f64;
    let mut loss = 0.0;
    let mut g = QuotientState { w1: 0.0, w2: 0.0, t1: 0.0, r3: 0.0, r4: 0.0, rt: 0.0 };
    for (a, y) in rows {
        let mut num = state.t1;
        if mask.harmony {
            num += state.w1 * a[0];
        }
        if mask.symmetry {
            num += state.w2 * a[1];
        }
        let mut den = softplus(state.rt) + DENOMINATOR_FLOOR;
        if mask.entropy {
            den += softplus(state.r3) * a[2];
        }
        if mask.complexity {
            den += softplus(state.r4) * a[3];
        }
        let z = num / den;
        loss += cross_entropy(z, *y);
        let residual = sigmoid(z) - y;

        if mask.harmony {
            g.w1 += residual * a[0] / den;
        }
        if mask.symmetry {
            g.w2 += residual * a[1] / den;
        }
        g.t1 += residual / den;
        let shared = -residual * num / (den * den);
        if mask.entropy {
            g.r3 += shared * a[2] * sigmoid(state.r3);
        }
        if mask.complexity {
            g.r4 += shared * a[3] * sigmoid(state.r4);
        }
        g.rt += shared * sigmoid(state.rt);
    }
    g.w1 /= n;
    g.w2 /= n;
    g.t1 /= n;
    g.r3 /= n;
    g.r4 /= n;
    g.rt /= n;
    (loss / n, g)
}

/// Train the final quotient on aesthetic vectors.
pub fn train_quotient(
    rows: &[([f64; 4], f64)],
    mask: AestheticMask,
    config: &TrainConfig,
) -> Result<QuotientParams, ModelError> {
    check_labels(rows.iter().map(|(_, y)| *y))?;
    let mut state = QuotientState::initial();
    for iteration in 0..config.iterations {
        let (loss, grad) = quotient_loss_and_grad(&state, mask, rows);
        if !loss.is_finite() {
            return Err(ModelError::NonFiniteLoss { iteration });
        }
        let mut step = config.learning_rate;
        for _ in 0..30 {
            let candidate = QuotientState {
                w1: state.w1 - step * grad.w1,
                w2: state.w2 - step * grad.w2,
                t1: state.t1 - step * grad.t1,
                r3: state.r3 - step * grad.r3,
                r4: state.r4 - step * grad.r4,
                rt: state.rt - step * grad.rt,
            };
            if quotient_loss(&candidate, mask, rows) <= loss {
                state = candidate;
                break;
            }
            step /= 2.0;
        }
    }
    Ok(state.into_params(mask))
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Everything needed to score a previously unseen piece.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct ModelParams {
    pub format_version: u32,
    pub features: FeatureConfig,
    pub normalizer: Normalizer,
    pub groups: GroupModels,
    pub quotient: QuotientParams,
    /// Compressor the complexity feature was computed with.
    pub compressor: String,
}

impl ModelParams {
    /// Serialize to pretty JSON and atomically replace `path` (write to a
    /// temp file in the same directory, then rename), so a failed save
    /// never leaves a truncated model behind.
    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| ModelError::InvalidModel(e.to_string()))?;
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(text.as_bytes())?;
        tmp.write_all(b"\n")?;
        tmp.persist(path).map_err(|e| ModelError::Io(e.error))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ModelParams, ModelError> {
        let text = std::fs::read_to_string(path)?;
        let params: ModelParams =
            serde_json::from_str(&text).map_err(|e| ModelError::InvalidModel(e.to_string()))?;
        params.validate()?;
        Ok(params)
    }

    /// Structural checks applied to loaded files: version, denominator
    /// positivity over the whole unit square, and omega/rho consistency.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(ModelError::InvalidModel(format!(
                "unsupported format version {} (expected {})",
                self.format_version, MODEL_FORMAT_VERSION
            )));
        }
        let floor = self.quotient.denominator_floor();
        if floor < DENOMINATOR_FLOOR - 1e-12 {
            return Err(ModelError::DenominatorUnderflow {
                denominator: floor,
                floor: DENOMINATOR_FLOOR,
            });
        }
        let consistent = |rho: Option<f64>, w: f64| match rho {
            Some(r) => (softplus(r) - w).abs() <= 1e-9 * (1.0 + w.abs()),
            None => w == 0.0,
        };
        if !consistent(self.quotient.rho3, self.quotient.w3)
            || !consistent(self.quotient.rho4, self.quotient.w4)
        {
            return Err(ModelError::InvalidModel(
                "denominator weights disagree with their raw parameters".into(),
            ));
        }
        let t2 = softplus(self.quotient.rho_theta) + DENOMINATOR_FLOOR;
        if (t2 - self.quotient.theta2).abs() > 1e-9 * (1.0 + t2.abs()) {
            return Err(ModelError::InvalidModel(
                "constant denominator term disagrees with its raw parameter".into(),
            ));
        }
        Ok(())
    }
}

/// One scored piece.
#[derive(Clone, Copy, PartialEq, Debug, Serialize)]
pub struct Prediction {
    pub measure: f64,
    pub probability: f64,
    pub label: Label,
}

/// Score one piece with a trained model.
pub fn predict(params: &ModelParams, score: &Score) -> Result<Prediction, ModelError> {
    let features = extract_features(score, &params.features)?;
    predict_from_features(params, &features)
}

/// Score a piece from already-extracted raw features.
pub fn predict_from_features(
    params: &ModelParams,
    features: &FeatureVector,
) -> Result<Prediction, ModelError> {
    let normalized = params.normalizer.transform(features.as_array());
    let aesthetic = params.groups.aesthetic_vector(&normalized);
    let measure = birkhoff_measure(&params.quotient, aesthetic)?;
    let probability = sigmoid(measure);
    let label = if probability >= 0.5 { Label::Composer } else { Label::Ai };
    Ok(Prediction { measure, probability, label })
}

/// 1 for composer, 0 for AI: the positive class is human work.
pub fn label01(label: Label) -> f64 {
    match label {
        Label::Composer => 1.0,
        Label::Ai => 0.0,
    }
}

/// End-to-end training configuration.
#[derive(Clone, PartialEq, Debug, Default, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub features: FeatureConfig,
    pub train: TrainConfig,
    pub mask: AestheticMask,
}

/// Fit normalizer, group combiners, and quotient on labeled raw features.
pub fn train_from_features(
    rows: &[(FeatureVector, Label)],
    config: &PipelineConfig,
) -> Result<ModelParams, ModelError> {
    let raw: Vec<[f64; 8]> = rows.iter().map(|(f, _)| f.as_array()).collect();
    let normalizer = Normalizer::fit(&raw)?;
    let normalized: Vec<([f64; 8], f64)> = rows
        .iter()
        .map(|(f, label)| (normalizer.transform(f.as_array()), label01(*label)))
        .collect();
    let groups = train_group_models(&normalized, &config.train)?;
    let aesthetic: Vec<([f64; 4], f64)> = normalized
        .iter()
        .map(|(x, y)| (groups.aesthetic_vector(x), *y))
        .collect();
    let quotient = train_quotient(&aesthetic, config.mask, &config.train)?;
    Ok(ModelParams {
        format_version: MODEL_FORMAT_VERSION,
        features: config.features.clone(),
        normalizer,
        groups,
        quotient,
        compressor: COMPRESSOR_SETTING.to_string(),
    })
}

/// Extract features for every score and train the whole pipeline.
pub fn train_pipeline(scores: &[Score], config: &PipelineConfig) -> Result<ModelParams, ModelError> {
    let mut rows = Vec::with_capacity(scores.len());
    let features = extract_dataset(scores, &config.features)?;
    for (score, feature) in scores.iter().zip(features) {
        let label = score
            .label
            .ok_or_else(|| ModelError::UnlabeledScore { id: score.id.clone() })?;
        rows.push((feature, label));
    }
    train_from_features(&rows, config)
}

/// One line of the feature dump: everything the pipeline computed for a
/// score, with the model-dependent stages present when a model was given.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub id: String,
    pub label: Option<Label>,
    pub raw: FeatureVector,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalized: Option<[f64; 8]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aesthetic: Option<[f64; 4]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measure: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probability: Option<f64>,
}

/// Build the dump record for one score.
pub fn feature_record(
    score: &Score,
    config: &FeatureConfig,
    params: Option<&ModelParams>,
) -> Result<FeatureRecord, ModelError> {
    let raw = extract_features(score, config)?;
    let mut record = FeatureRecord {
        id: score.id.clone(),
        label: score.label,
        raw,
        normalized: None,
        aesthetic: None,
        measure: None,
        probability: None,
    };
    if let Some(params) = params {
        let normalized = params.normalizer.transform(raw.as_array());
        let aesthetic = params.groups.aesthetic_vector(&normalized);
        let measure = birkhoff_measure(&params.quotient, aesthetic)?;
        record.normalized = Some(normalized);
        record.aesthetic = Some(aesthetic);
        record.measure = Some(measure);
        record.probability = Some(sigmoid(measure));
    }
    Ok(record)
}
