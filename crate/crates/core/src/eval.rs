//! Confusion matrices, accuracy and macro-averaged precision and recall.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::txcore::ClassLabel;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("confusion matrix has no samples")]
    EmptyMatrix,
}

/// Square count matrix indexed `[true][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(classes: usize) -> Self {
        ConfusionMatrix {
            counts: vec![vec![0; classes]; classes],
        }
    }

    /// Builds a matrix from raw counts; `None` unless the rows form a square.
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Option<Self> {
        let n = counts.len();
        counts.iter().all(|r| r.len() == n).then_some(ConfusionMatrix { counts })
    }

    pub fn from_pairs<I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (ClassLabel, ClassLabel)>,
    {
        let mut cm = ConfusionMatrix::zeros(ClassLabel::COUNT);
        for (t, p) in pairs {
            cm.record(t.index(), p.index());
        }
        cm
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth][predicted]
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes()).map(|i| self.counts[i][i]).sum()
    }

    /// Samples whose true class is `class`.
    pub fn support(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    /// Samples predicted as `class`.
    pub fn predicted(&self, class: usize) -> u64 {
        self.counts.iter().map(|r| r[class]).sum()
    }

    /// TP / (TP + FP); 0 when the class is never predicted.
    pub fn precision(&self, class: usize) -> f64 {
        ratio(self.counts[class][class], self.predicted(class))
    }

    /// TP / (TP + FN); 0 when the class never occurs.
    pub fn recall(&self, class: usize) -> f64 {
        ratio(self.counts[class][class], self.support(class))
    }

    /// Percentage of each true class landing in each predicted class.
    pub fn row_percentages(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let n: u64 = row.iter().sum();
                row.iter().map(|&c| 100.0 * ratio(c, n)).collect()
            })
            .collect()
    }

    fn ensure_nonempty(&self) -> Result<(), EvalError> {
        if self.total() == 0 {
            Err(EvalError::EmptyMatrix)
        } else {
            Ok(())
        }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn confusion_matrix<I>(pairs: I) -> ConfusionMatrix
where
    I: IntoIterator<Item = (ClassLabel, ClassLabel)>,
{
    ConfusionMatrix::from_pairs(pairs)
}

/// Correct predictions over all predictions.
pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64, EvalError> {
    cm.ensure_nonempty()?;
    Ok(cm.trace() as f64 / cm.total() as f64)
}

/// Unweighted mean of per-class precision over every class in the matrix.
pub fn macro_precision(cm: &ConfusionMatrix) -> Result<f64, EvalError> {
    cm.ensure_nonempty()?;
    let sum: f64 = (0..cm.classes()).map(|c| cm.precision(c)).sum();
    Ok(sum / cm.classes() as f64)
}

/// Unweighted mean of per-class recall over every class in the matrix.
pub fn macro_recall(cm: &ConfusionMatrix) -> Result<f64, EvalError> {
    cm.ensure_nonempty()?;
    let sum: f64 = (0..cm.classes()).map(|c| cm.recall(c)).sum();
    Ok(sum / cm.classes() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: ClassLabel,
    pub precision: f64,
    pub recall: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub per_class: Vec<ClassMetrics>,
    pub sample_count: u64,
    pub confusion: ConfusionMatrix,
}

impl MetricsReport {
    pub fn class(&self, label: ClassLabel) -> &ClassMetrics {
        &self.per_class[label.index()]
    }

    /// Row-normalised percentage table, one row per true class.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:>8}", "true\\pred");
        for l in ClassLabel::ALL {
            let _ = write!(out, "{:>9}", l.name());
        }
        out.push('\n');
        for (l, row) in ClassLabel::ALL.iter().zip(self.confusion.row_percentages()) {
            let _ = write!(out, "{:>9}", l.name());
            for pct in row {
                let _ = write!(out, "{:>8.2}%", pct);
            }
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "accuracy {:.4}  macro precision {:.4}  macro recall {:.4}  samples {}",
            self.accuracy, self.macro_precision, self.macro_recall, self.sample_count
        );
        out
    }

    /// Confusion counts as CSV: header of predicted classes, one row per true class.
    pub fn confusion_csv(&self) -> String {
        let mut out = String::from("true");
        for l in ClassLabel::ALL {
            out.push(',');
            out.push_str(l.name());
        }
        out.push('\n');
        for (l, row) in ClassLabel::ALL.iter().zip(self.confusion.counts()) {
            out.push_str(l.name());
            for c in row {
                let _ = write!(out, ",{c}");
            }
            out.push('\n');
        }
        out
    }
}

/// Summarises a seven-class confusion matrix.
pub fn report(cm: &ConfusionMatrix) -> Result<MetricsReport, EvalError> {
    assert_eq!(cm.classes(), ClassLabel::COUNT, "report expects one row per class label");
    Ok(MetricsReport {
        accuracy: accuracy(cm)?,
        macro_precision: macro_precision(cm)?,
        macro_recall: macro_recall(cm)?,
        per_class: ClassLabel::ALL
            .iter()
            .map(|&label| ClassMetrics {
                label,
                precision: cm.precision(label.index()),
                recall: cm.recall(label.index()),
                support: cm.support(label.index()),
            })
            .collect(),
        sample_count: cm.total(),
        confusion: cm.clone(),
    })
}
