//! Classification metrics and the early-detection accuracy curve.

use serde::Serialize;
use thiserror::Error;

use crate::dataio::slice_by_deadline;
use crate::features::{featurize_event, Vocabulary};
use crate::graph::{build_adjacency, ClassLabel, LabelArity, PropagationEvent};
use crate::model::{predict, EventGraphs, ModelConfig, ModelError, ModelParams};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("predictions and truths differ in length: {predictions} vs {truths}")]
    LengthMismatch { predictions: usize, truths: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("label {0:?} is not in the evaluated class set")]
    UnknownLabel(ClassLabel),
    #[error("deadlines must be sorted ascending and nonnegative")]
    BadDeadlines,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassMetrics {
    pub label: char,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    /// Set when the precision denominator (predicted count) was zero.
    pub precision_undefined: bool,
    /// Set when the recall denominator (support) was zero.
    pub recall_undefined: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    /// `confusion[truth][prediction]` counts, classes in report order.
    pub confusion: Vec<Vec<usize>>,
    pub total: usize,
}

impl MetricsReport {
    /// Aligned plain-text table for terminal output.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "accuracy {:.4} over {} events\n",
            self.accuracy, self.total
        ));
        out.push_str("class  precision  recall     f1         support\n");
        for c in &self.per_class {
            let flag = if c.precision_undefined || c.recall_undefined {
                " *"
            } else {
                ""
            };
            out.push_str(&format!(
                "{:<6} {:<10.4} {:<10.4} {:<10.4} {}{}\n",
                c.label, c.precision, c.recall, c.f1, c.support, flag
            ));
        }
        if self
            .per_class
            .iter()
            .any(|c| c.precision_undefined || c.recall_undefined)
        {
            out.push_str("* zero denominator reported as 0\n");
        }
        out
    }
}

/// Standard accuracy / per-class precision / recall / F1 plus the confusion
/// matrix. Zero denominators are reported as 0 and flagged.
pub fn compute_metrics(
    predictions: &[ClassLabel],
    truths: &[ClassLabel],
    classes: &[ClassLabel],
) -> Result<MetricsReport, EvalError> {
    if predictions.len() != truths.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            truths: truths.len(),
        });
    }
    if predictions.is_empty() {
        return Err(EvalError::Empty);
    }
    let index_of = |label: ClassLabel| {
        classes
            .iter()
            .position(|&c| c == label)
            .ok_or(EvalError::UnknownLabel(label))
    };

    let k = classes.len();
    let mut confusion = vec![vec![0usize; k]; k];
    for (&pred, &truth) in predictions.iter().zip(truths) {
        confusion[index_of(truth)?][index_of(pred)?] += 1;
    }
    let total = predictions.len();
    let correct: usize = (0..k).map(|i| confusion[i][i]).sum();

    let per_class = classes
        .iter()
        .enumerate()
        .map(|(i, &label)| {
            let support: usize = confusion[i].iter().sum();
            let predicted: usize = (0..k).map(|t| confusion[t][i]).sum();
            let tp = confusion[i][i];
            let precision_undefined = predicted == 0;
            let recall_undefined = support == 0;
            let precision = if precision_undefined {
                0.0
            } else {
                tp as f64 / predicted as f64
            };
            let recall = if recall_undefined {
                0.0
            } else {
                tp as f64 / support as f64
            };
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassMetrics {
                label: label.code(),
                precision,
                recall,
                f1,
                support,
                precision_undefined,
                recall_undefined,
            }
        })
        .collect();

    Ok(MetricsReport {
        accuracy: correct as f64 / total as f64,
        per_class,
        confusion,
        total,
    })
}

/// One point of the early-detection curve.
#[derive(Debug, Clone, Serialize)]
pub struct CurvePoint {
    pub deadline_minutes: f64,
    pub accuracy: f64,
}

/// Accuracy as a function of detection deadline: every event is truncated to
/// the posts released by the deadline (ancestor-closed), re-featurized with
/// the same vocabulary, and classified with the trained parameters. An
/// infinite sentinel deadline is always appended, which by construction
/// equals full-corpus accuracy.
pub fn early_detection_curve(
    events: &[PropagationEvent],
    params: &ModelParams,
    vocab: &Vocabulary,
    config: &ModelConfig,
    arity: LabelArity,
    deadlines: &[f64],
) -> Result<Vec<CurvePoint>, EvalError> {
    if events.is_empty() {
        return Err(EvalError::Empty);
    }
    if deadlines.windows(2).any(|w| w[0] > w[1]) || deadlines.iter().any(|&d| d < 0.0) {
        return Err(EvalError::BadDeadlines);
    }
    let mut points = Vec::with_capacity(deadlines.len() + 1);
    for deadline in deadlines.iter().copied().chain([f64::INFINITY]) {
        let mut correct = 0usize;
        for event in events {
            let sliced = if deadline.is_finite() {
                slice_by_deadline(event, deadline)
            } else {
                event.clone()
            };
            let adjacency = build_adjacency(&sliced)?;
            let graphs = EventGraphs::prepare(&adjacency, config.variant)?;
            let x = featurize_event(&sliced, vocab);
            let class = predict(&graphs, &x, params, config)?;
            if arity.classes().get(class) == Some(&event.label) {
                correct += 1;
            }
        }
        points.push(CurvePoint {
            deadline_minutes: deadline,
            accuracy: correct as f64 / events.len() as f64,
        });
    }
    Ok(points)
}

/// Render the curve as `deadline_minutes,accuracy` CSV; the sentinel row
/// writes `inf`.
pub fn curve_to_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("deadline_minutes,accuracy\n");
    for p in points {
        if p.deadline_minutes.is_finite() {
            out.push_str(&format!("{},{:.6}\n", p.deadline_minutes, p.accuracy));
        } else {
            out.push_str(&format!("inf,{:.6}\n", p.accuracy));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ClassLabel::{FalseRumor as F, TrueRumor as T};

    #[test]
    fn perfect_predictions() {
        let truths = vec![F, T, F, T];
        let report = compute_metrics(&truths, &truths, LabelArity::Two.classes()).unwrap();
        assert_eq!(report.accuracy, 1.0);
        for c in &report.per_class {
            assert_eq!(c.f1, 1.0);
        }
    }

    #[test]
    fn all_false_predictions_hand_computed() {
        // Predict everything F on a half-F half-T truth set:
        // accuracy 0.5; F: precision 0.5, recall 1, F1 2/3; T: recall 0, F1 0.
        let predictions = vec![F, F, F, F];
        let truths = vec![F, F, T, T];
        let report = compute_metrics(&predictions, &truths, LabelArity::Two.classes()).unwrap();
        assert_eq!(report.accuracy, 0.5);
        let f = &report.per_class[0];
        assert_eq!(f.precision, 0.5);
        assert_eq!(f.recall, 1.0);
        assert!((f.f1 - 2.0 / 3.0).abs() < 1e-12);
        let t = &report.per_class[1];
        assert_eq!(t.recall, 0.0);
        assert_eq!(t.f1, 0.0);
        assert!(t.precision_undefined);
    }

    #[test]
    fn accuracy_is_trace_over_total() {
        let predictions = vec![F, T, T, F, T];
        let truths = vec![T, T, F, F, T];
        let report = compute_metrics(&predictions, &truths, LabelArity::Two.classes()).unwrap();
        let trace: usize = (0..2).map(|i| report.confusion[i][i]).sum();
        assert_eq!(report.accuracy, trace as f64 / report.total as f64);
        let sum: usize = report.confusion.iter().flatten().sum();
        assert_eq!(sum, report.total);
    }

    #[test]
    fn metrics_are_permutation_invariant() {
        let predictions = vec![F, T, T, F];
        let truths = vec![T, T, F, F];
        let a = compute_metrics(&predictions, &truths, LabelArity::Two.classes()).unwrap();
        let perm = [2usize, 0, 3, 1];
        let p2: Vec<ClassLabel> = perm.iter().map(|&i| predictions[i]).collect();
        let t2: Vec<ClassLabel> = perm.iter().map(|&i| truths[i]).collect();
        let b = compute_metrics(&p2, &t2, LabelArity::Two.classes()).unwrap();
        assert_eq!(a.accuracy, b.accuracy);
        assert_eq!(a.confusion, b.confusion);
    }

    #[test]
    fn macro_quantities_recomputable_from_confusion() {
        let predictions = vec![F, T, T, F, F];
        let truths = vec![T, T, F, F, T];
        let report = compute_metrics(&predictions, &truths, LabelArity::Two.classes()).unwrap();
        for (i, c) in report.per_class.iter().enumerate() {
            let support: usize = report.confusion[i].iter().sum();
            let predicted: usize = (0..2).map(|t| report.confusion[t][i]).sum();
            let tp = report.confusion[i][i];
            assert_eq!(c.support, support);
            if predicted > 0 {
                assert_eq!(c.precision, tp as f64 / predicted as f64);
            }
            if support > 0 {
                assert_eq!(c.recall, tp as f64 / support as f64);
            }
        }
    }

    #[test]
    fn mismatched_lengths_rejected() {
        assert!(matches!(
            compute_metrics(&[F], &[F, T], LabelArity::Two.classes()),
            Err(EvalError::LengthMismatch { .. })
        ));
        assert!(matches!(
            compute_metrics(&[], &[], LabelArity::Two.classes()),
            Err(EvalError::Empty)
        ));
    }

    #[test]
    fn table_renders_flag_note() {
        let report = compute_metrics(&[F, F], &[F, T], LabelArity::Two.classes()).unwrap();
        let table = report.to_table();
        assert!(table.contains("accuracy 0.5000"));
        assert!(table.contains("zero denominator"));
    }

    #[test]
    fn csv_writes_inf_sentinel() {
        let points = vec![
            CurvePoint {
                deadline_minutes: 0.0,
                accuracy: 0.25,
            },
            CurvePoint {
                deadline_minutes: f64::INFINITY,
                accuracy: 0.5,
            },
        ];
        assert_eq!(
            curve_to_csv(&points),
            "deadline_minutes,accuracy\n0,0.250000\ninf,0.500000\n"
        );
    }
}
