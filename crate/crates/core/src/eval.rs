//! Classifier evaluation: confusion counts, precision/recall/F1, ROC and
//! AUC, the four-term ablation study, and report files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::model::{
    predict, predict_from_features, train_from_features, AestheticMask, FeatureVector, ModelError,
    ModelParams, PipelineConfig,
};
use crate::score::{Label, Score};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("evaluation needs both labels present")]
    SingleClassEval,
    #[error("evaluation needs at least one labeled prediction")]
    EmptyEval,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Confusion counts with composer as the positive class.
#[derive(Clone, Copy, PartialEq, Eq, Default, Debug)]
pub struct Counts {
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
}

impl Counts {
    pub fn from_predictions(pairs: &[(Label, Label)]) -> Counts {
        let mut counts = Counts::default();
        for &(actual, predicted) in pairs {
            match (actual, predicted) {
                (Label::Composer, Label::Composer) => counts.true_positives += 1,
                (Label::Ai, Label::Composer) => counts.false_positives += 1,
                (Label::Ai, Label::Ai) => counts.true_negatives += 1,
                (Label::Composer, Label::Ai) => counts.false_negatives += 1,
            }
        }
        counts
    }

    pub fn total(&self) -> usize {
        self.true_positives + self.false_positives + self.true_negatives + self.false_negatives
    }

    pub fn precision_recall_f1(&self) -> PrfMetrics {
        let ratio = |num: usize, den: usize| if den == 0 { None } else { Some(num as f64 / den as f64) };
        let precision = ratio(self.true_positives, self.true_positives + self.false_positives);
        let recall = ratio(self.true_positives, self.true_positives + self.false_negatives);
        let f1 = match (precision, recall) {
            (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
            (Some(_), Some(_)) => None,
            _ => None,
        };
        PrfMetrics {
            precision: precision.unwrap_or(0.0),
            recall: recall.unwrap_or(0.0),
            f1: f1.unwrap_or(0.0),
            degenerate: precision.is_none() || recall.is_none() || f1.is_none(),
        }
    }
}

/// Precision, recall, and F1; zero-denominator cases report 0 and set the
/// degenerate flag.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct PrfMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub degenerate: bool,
}

/// Precision/recall/F1 over (actual, predicted) pairs.
pub fn precision_recall_f1(pairs: &[(Label, Label)]) -> PrfMetrics {
    Counts::from_predictions(pairs).precision_recall_f1()
}

#[derive(Clone, Copy, PartialEq, Debug)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub threshold: f64,
}

/// ROC by sweeping thresholds over the distinct probabilities, plus the
/// trapezoid AUC. The area is accumulated in integers, so it equals the
/// pairwise Mann-Whitney statistic (ties counted half) up to one final
/// division.
pub fn roc_auc(scored: &[(Label, f64)]) -> Result<(Vec<RocPoint>, f64), EvalError> {
    if scored.is_empty() {
        return Err(EvalError::EmptyEval);
    }
    let pos = scored.iter().filter(|(label, _)| *label == Label::Composer).count() as u64;
    let neg = scored.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(EvalError::SingleClassEval);
    }

    let mut sorted: Vec<(f64, Label)> = scored.iter().map(|&(l, p)| (p, l)).collect();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0, threshold: f64::INFINITY }];
    let mut area2: u128 = 0;
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < sorted.len() {
        let threshold = sorted[i].0;
        let (mut dp, mut dn) = (0u64, 0u64);
        while i < sorted.len() && sorted[i].0.total_cmp(&threshold).is_eq() {
            match sorted[i].1 {
                Label::Composer => dp += 1,
                Label::Ai => dn += 1,
            }
            i += 1;
        }
        area2 += dn as u128 * (2 * tp + dp) as u128;
        tp += dp;
        fp += dn;
        points.push(RocPoint {
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
            threshold,
        });
    }
    points.push(RocPoint { fpr: 1.0, tpr: 1.0, threshold: f64::NEG_INFINITY });
    let auc = area2 as f64 / (2 * pos * neg) as f64;
    Ok((points, auc))
}

/// Ablation model names, full model first.
pub const ABLATION_MODELS: [&str; 5] =
    ["full", "no_harmony", "no_symmetry", "no_entropy", "no_k_complexity"];

/// The aesthetic-term mask behind an ablation model name.
pub fn ablation_mask(name: &str) -> Option<AestheticMask> {
    match name {
        "full" => Some(AestheticMask::FULL),
        "no_harmony" => Some(AestheticMask::without(0)),
        "no_symmetry" => Some(AestheticMask::without(1)),
        "no_entropy" => Some(AestheticMask::without(2)),
        "no_k_complexity" => Some(AestheticMask::without(3)),
        _ => None,
    }
}

/// Retrain the pipeline once per ablation model (aesthetic term removed
/// from the quotient) and report each model's test AUC.
pub fn run_ablation(
    train: &[(FeatureVector, Label)],
    test: &[(FeatureVector, Label)],
    config: &PipelineConfig,
) -> Result<BTreeMap<String, f64>, EvalError> {
    let entries: Vec<(String, f64)> = ABLATION_MODELS
        .par_iter()
        .map(|name| {
            let mut cfg = config.clone();
            cfg.mask = ablation_mask(name).expect("known ablation name");
            let params = train_from_features(train, &cfg)?;
            let scored: Vec<(Label, f64)> = test
                .iter()
                .map(|(features, label)| {
                    Ok((*label, predict_from_features(&params, features)?.probability))
                })
                .collect::<Result<_, ModelError>>()?;
            let (_, auc) = roc_auc(&scored)?;
            Ok((name.to_string(), auc))
        })
        .collect::<Result<_, EvalError>>()?;
    Ok(entries.into_iter().collect())
}

#[derive(Clone, PartialEq, Debug)]
pub struct EvalReport {
    pub counts: Counts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub roc_points: Vec<RocPoint>,
    pub auc: f64,
    /// Ablation model name -> test AUC; empty when no ablation was run.
    pub ablation: BTreeMap<String, f64>,
    /// (actual label, measure) per test score, for the measure histogram.
    pub measures: Vec<(Label, f64)>,
}

/// Score a labeled test set with a trained model and collect the report.
/// The ablation map starts empty; `run_ablation` fills it separately.
pub fn evaluate_model(params: &ModelParams, test: &[Score]) -> Result<EvalReport, EvalError> {
    if test.is_empty() {
        return Err(EvalError::EmptyEval);
    }
    let rows: Vec<(Label, crate::model::Prediction)> = test
        .par_iter()
        .map(|score| {
            let label = score
                .label
                .ok_or_else(|| ModelError::UnlabeledScore { id: score.id.clone() })?;
            Ok((label, predict(params, score)?))
        })
        .collect::<Result<_, ModelError>>()?;

    let pairs: Vec<(Label, Label)> = rows.iter().map(|(l, p)| (*l, p.label)).collect();
    let counts = Counts::from_predictions(&pairs);
    let prf = counts.precision_recall_f1();
    let scored: Vec<(Label, f64)> = rows.iter().map(|(l, p)| (*l, p.probability)).collect();
    let (roc_points, auc) = roc_auc(&scored)?;
    Ok(EvalReport {
        counts,
        precision: prf.precision,
        recall: prf.recall,
        f1: prf.f1,
        roc_points,
        auc,
        ablation: BTreeMap::new(),
        measures: rows.iter().map(|(l, p)| (*l, p.measure)).collect(),
    })
}

/// Number of shared bins in the per-class measure histogram.
pub const MEASURE_HIST_BINS: usize = 20;

/// Shared-edge histogram rows (bin_lo, bin_hi, composer count, ai count).
pub fn measure_histogram(measures: &[(Label, f64)]) -> Vec<(f64, f64, usize, usize)> {
    if measures.is_empty() {
        return Vec::new();
    }
    let lo = measures.iter().map(|(_, m)| *m).fold(f64::INFINITY, f64::min);
    let hi = measures.iter().map(|(_, m)| *m).fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / MEASURE_HIST_BINS as f64 } else { 0.05 };
    let mut rows: Vec<(f64, f64, usize, usize)> = (0..MEASURE_HIST_BINS)
        .map(|i| (lo + i as f64 * width, lo + (i + 1) as f64 * width, 0, 0))
        .collect();
    for &(label, measure) in measures {
        let index = (((measure - lo) / width).floor() as usize).min(MEASURE_HIST_BINS - 1);
        match label {
            Label::Composer => rows[index].2 += 1,
            Label::Ai => rows[index].3 += 1,
        }
    }
    rows
}

/// Write `metrics.txt`, `roc.csv`, `measure_hist.csv`, and `ablation.csv`.
pub fn emit_report(report: &EvalReport, dir: impl AsRef<Path>) -> Result<(), EvalError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;

    let mut metrics = String::new();
    let _ = writeln!(metrics, "tp={}", report.counts.true_positives);
    let _ = writeln!(metrics, "fp={}", report.counts.false_positives);
    let _ = writeln!(metrics, "tn={}", report.counts.true_negatives);
    let _ = writeln!(metrics, "fn={}", report.counts.false_negatives);
    let _ = writeln!(metrics, "precision={:.4}", report.precision);
    let _ = writeln!(metrics, "recall={:.4}", report.recall);
    let _ = writeln!(metrics, "f1={:.4}", report.f1);
    let _ = writeln!(metrics, "auc={:.4}", report.auc);
    fs::write(dir.join("metrics.txt"), metrics)?;

    let mut roc = String::from("fpr,tpr,threshold\n");
    for point in &report.roc_points {
        let _ = writeln!(roc, "{},{},{}", point.fpr, point.tpr, point.threshold);
    }
    fs::write(dir.join("roc.csv"), roc)?;

    let mut hist = String::from("bin_lo,bin_hi,composer,ai\n");
    for (lo, hi, composer, ai) in measure_histogram(&report.measures) {
        let _ = writeln!(hist, "{lo},{hi},{composer},{ai}");
    }
    fs::write(dir.join("measure_hist.csv"), hist)?;

    let mut ablation = String::from("model,auc\n");
    for name in ABLATION_MODELS {
        if let Some(auc) = report.ablation.get(name) {
            let _ = writeln!(ablation, "{name},{auc:.4}");
        }
    }
    for (name, auc) in &report.ablation {
        if !ABLATION_MODELS.contains(&name.as_str()) {
            let _ = writeln!(ablation, "{name},{auc:.4}");
        }
    }
    fs::write(dir.join("ablation.csv"), ablation)?;
    Ok(())
}
