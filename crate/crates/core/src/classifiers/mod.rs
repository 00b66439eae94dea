//! Trainable binary composability classifiers: a split-capped decision tree,
//! kernel SVMs solved by SMO, and a small feed-forward network.
//!
//! Every trained model carries its feature normalization statistics (fitted
//! on the training split only) and the feature-order hash, and serializes to
//! a self-describing JSON document that reloads byte-exactly.

pub mod mlp;
pub mod svm;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{feature_order_hash, Label, PairFeatureRow, FEATURE_NAMES, NUM_FEATURES};
use crate::metrics::{Counts, Metrics};
use crate::scalar::Real;

pub use mlp::{train_mlp, MlpConfig, MlpParams, Network};
pub use svm::{train_svm, SmoSolution, SvmConfig, SvmKernel, SvmParams};
pub use tree::{train_tree, TreeNode, TreeParams, DEFAULT_MAX_SPLITS};

/// Model file format version.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// The model menu.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Tree,
    SvmQuadratic,
    SvmCubic,
    SvmRbf,
    Mlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Tree,
        ModelKind::SvmQuadratic,
        ModelKind::SvmCubic,
        ModelKind::SvmRbf,
        ModelKind::Mlp,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Tree => "tree",
            ModelKind::SvmQuadratic => "svm-quadratic",
            ModelKind::SvmCubic => "svm-cubic",
            ModelKind::SvmRbf => "svm-rbf",
            ModelKind::Mlp => "mlp",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tree" => Ok(ModelKind::Tree),
            "svm-quadratic" => Ok(ModelKind::SvmQuadratic),
            "svm-cubic" => Ok(ModelKind::SvmCubic),
            "svm-rbf" => Ok(ModelKind::SvmRbf),
            "mlp" => Ok(ModelKind::Mlp),
            other => Err(Error::InvalidConfig(format!(
                "unknown model kind `{other}` (expected tree|svm-quadratic|svm-cubic|svm-rbf|mlp)"
            ))),
        }
    }
}

/// Per-feature standardization statistics, fitted on the training split only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler<T> {
    pub mean: Vec<T>,
    pub std: Vec<T>,
}

impl<T: Real> FeatureScaler<T> {
    pub fn fit(rows: &[PairFeatureRow<T>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InsufficientData {
                found: 0,
                required: 1,
            });
        }
        let n = T::from_usize(rows.len()).expect("row count");
        let mut mean = vec![T::zero(); NUM_FEATURES];
        for row in rows {
            for (m, v) in mean.iter_mut().zip(row.values()) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = vec![T::zero(); NUM_FEATURES];
        for row in rows {
            for ((v, m), x) in var.iter_mut().zip(&mean).zip(row.values()) {
                let d = x - *m;
                *v += d * d;
            }
        }
        let std: Vec<T> = var
            .iter()
            .map(|&v| {
                let s = (v / n).sqrt();
                // Constant features carry no signal; unit scale avoids 0/0.
                if s > T::zero() {
                    s
                } else {
                    T::one()
                }
            })
            .collect();
        if mean.iter().chain(&std).any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "non-finite feature statistics; check input rows".to_owned(),
            ));
        }
        Ok(Self { mean, std })
    }

    pub fn transform(&self, values: &[T; NUM_FEATURES]) -> Vec<T> {
        values
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&x, (&m, &s))| (x - m) / s)
            .collect()
    }

    pub fn transform_rows(&self, rows: &[PairFeatureRow<T>]) -> Vec<Vec<T>> {
        rows.iter().map(|r| self.transform(&r.values())).collect()
    }
}

/// Kind-specific trained parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ModelParams<T> {
    Tree(TreeParams<T>),
    Svm(SvmParams<T>),
    Mlp(MlpParams<T>),
}

/// A trained composability classifier plus everything needed to apply it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel<T> {
    pub format_version: u32,
    pub kind: ModelKind,
    pub feature_names: Vec<String>,
    pub feature_hash: String,
    pub scaler: FeatureScaler<T>,
    pub params: ModelParams<T>,
    /// Free-form training notes (e.g. single-class warnings).
    pub notes: Vec<String>,
}

/// A model's judgment for one row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction<T> {
    pub label: Label,
    /// Positive-class score in `[0, 1]`.
    pub score: T,
}

impl<T: Real> TrainedModel<T> {
    pub(crate) fn assemble(
        kind: ModelKind,
        scaler: FeatureScaler<T>,
        params: ModelParams<T>,
        notes: Vec<String>,
    ) -> Self {
        Self {
            format_version: MODEL_FORMAT_VERSION,
            kind,
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            feature_hash: feature_order_hash(),
            scaler,
            params,
            notes,
        }
    }

    /// Classifies one row. The row's feature count is fixed by construction;
    /// the scaler dimensions are checked to catch corrupted model files.
    pub fn predict(&self, row: &PairFeatureRow<T>) -> Result<Prediction<T>> {
        if self.scaler.mean.len() != NUM_FEATURES || self.scaler.std.len() != NUM_FEATURES {
            return Err(Error::ShapeMismatch {
                expected: NUM_FEATURES,
                got: self.scaler.mean.len(),
            });
        }
        let x = self.scaler.transform(&row.values());
        let (label, score) = match &self.params {
            ModelParams::Tree(tree) => tree::predict(tree, &x),
            ModelParams::Svm(svm) => svm::predict(svm, &x)?,
            ModelParams::Mlp(net) => mlp::predict(net, &x)?,
        };
        Ok(Prediction { label, score })
    }

    /// Serializes to the versioned JSON model document.
    pub fn to_json(&self) -> String
    where
        T: Serialize,
    {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    /// Parses and validates a model document.
    pub fn from_json(text: &str) -> Result<Self>
    where
        T: serde::de::DeserializeOwned,
    {
        let model: Self = serde_json::from_str(text)
            .map_err(|e| Error::ModelFormat(format!("parse failure: {e}")))?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "format version {} unsupported (expected {MODEL_FORMAT_VERSION})",
                model.format_version
            )));
        }
        if model.feature_hash != feature_order_hash() {
            return Err(Error::ModelFormat(
                "feature-order hash mismatch; model was trained under a different layout"
                    .to_owned(),
            ));
        }
        let consistent = matches!(
            (&model.kind, &model.params),
            (ModelKind::Tree, ModelParams::Tree(_))
                | (ModelKind::SvmQuadratic, ModelParams::Svm(_))
                | (ModelKind::SvmCubic, ModelParams::Svm(_))
                | (ModelKind::SvmRbf, ModelParams::Svm(_))
                | (ModelKind::Mlp, ModelParams::Mlp(_))
        );
        if !consistent {
            return Err(Error::ModelFormat(
                "kind tag does not match parameter family".to_owned(),
            ));
        }
        Ok(model)
    }
}

/// Pair-level precision/recall/F1 of a model over labeled rows.
pub fn evaluate<T: Real>(model: &TrainedModel<T>, rows: &[PairFeatureRow<T>]) -> Result<Metrics<T>> {
    if rows.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    let mut counts = Counts::default();
    for row in rows {
        let label = row.label.ok_or(Error::UnlabeledRow)?;
        let predicted = model.predict(row)?.label;
        match (predicted.is_positive(), label.is_positive()) {
            (true, true) => counts.tp += 1,
            (true, false) => counts.fp += 1,
            (false, true) => counts.fn_ += 1,
            (false, false) => counts.tn += 1,
        }
    }
    Ok(counts.metrics())
}

/// Extracts labels as +/-1 targets, failing on unlabeled rows.
pub(crate) fn signed_labels<T: Real>(rows: &[PairFeatureRow<T>]) -> Result<Vec<T>> {
    rows.iter()
        .map(|r| {
            r.label
                .map(|l| if l.is_positive() { T::one() } else { -T::one() })
                .ok_or(Error::UnlabeledRow)
        })
        .collect()
}

/// Logistic squashing used to map margins onto `[0, 1]` scores.
pub(crate) fn sigmoid<T: Real>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use rand::Rng;

    /// Rows with the given feature vectors/labels; non-feature fields are
    /// irrelevant to training and zeroed.
    pub fn rows_from(xs: &[Vec<f64>], ys: &[bool]) -> Vec<PairFeatureRow<f64>> {
        xs.iter()
            .zip(ys)
            .enumerate()
            .map(|(i, (x, &y))| {
                let mut padded = [0.0; NUM_FEATURES];
                padded[..x.len()].copy_from_slice(x);
                PairFeatureRow {
                    id_a: format!("a{i}").into(),
                    id_b: format!("b{i}").into(),
                    dist_m: padded[0],
                    dt_s: padded[1],
                    alpha_overlap_deg: padded[2],
                    overlap_ratio: padded[3],
                    relevance: padded[4],
                    dir_a_to_p_deg: padded[5],
                    dir_b_to_p_deg: padded[6],
                    visd_a_m: padded[7],
                    visd_b_m: padded[8],
                    alpha_a_deg: padded[9],
                    alpha_b_deg: padded[10],
                    dist_mid_to_p_m: padded[11],
                    label: Some(Label::from_bool(y)),
                }
            })
            .collect()
    }

    /// Three alternating concentric rings (inner/outer positive, middle
    /// negative): linearly inseparable and beyond a quadric boundary.
    pub fn ring_rows(n: usize, rng: &mut impl Rng) -> Vec<PairFeatureRow<f64>> {
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for i in 0..n {
            let ring = i % 3;
            let radius = match ring {
                0 => rng.random_range(0.0..0.8),
                1 => rng.random_range(1.4..2.2),
                _ => rng.random_range(2.8..3.6),
            };
            let angle = rng.random_range(0.0..std::f64::consts::TAU);
            xs.push(vec![radius * angle.cos(), radius * angle.sin()]);
            ys.push(ring != 1);
        }
        rows_from(&xs, &ys)
    }
}

#[cfg(test)]
mod tests {
    use super::testutil::rows_from;
    use super::*;

    #[test]
    fn scaler_uses_unit_std_for_constant_features() {
        let rows = rows_from(&[vec![1.0, 5.0], vec![3.0, 5.0]], &[true, false]);
        let scaler = FeatureScaler::fit(&rows).unwrap();
        assert_eq!(scaler.std[1], 1.0);
        assert!((scaler.mean[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn model_kind_round_trips_through_str() {
        for kind in ModelKind::ALL {
            assert_eq!(kind.as_str().parse::<ModelKind>().unwrap(), kind);
        }
        assert!("boost".parse::<ModelKind>().is_err());
    }

    #[test]
    fn evaluate_rejects_empty_and_unlabeled() {
        let rows = rows_from(&[vec![0.0], vec![1.0]], &[false, true]);
        let model = train_tree(&rows, DEFAULT_MAX_SPLITS).unwrap();
        assert!(matches!(evaluate(&model, &[]), Err(Error::EmptyEvaluation)));
        let mut unlabeled = rows;
        unlabeled[0].label = None;
        assert!(matches!(
            evaluate(&model, &unlabeled),
            Err(Error::UnlabeledRow)
        ));
    }

    #[test]
    fn model_json_round_trip_is_byte_exact() {
        let rows = rows_from(
            &[vec![0.0, 0.3], vec![1.0, -0.2], vec![0.1, 0.4], vec![0.9, 0.1]],
            &[false, true, false, true],
        );
        let model = train_tree(&rows, DEFAULT_MAX_SPLITS).unwrap();
        let json = model.to_json();
        let reloaded = TrainedModel::<f64>::from_json(&json).unwrap();
        assert_eq!(reloaded.to_json(), json);
        assert_eq!(reloaded, model);
    }

    #[test]
    fn corrupted_model_files_are_rejected() {
        let rows = rows_from(&[vec![0.0], vec![1.0]], &[false, true]);
        let model = train_tree(&rows, DEFAULT_MAX_SPLITS).unwrap();
        let json = model.to_json();
        let wrong_version = json.replace("\"format_version\": 1", "\"format_version\": 99");
        assert!(TrainedModel::<f64>::from_json(&wrong_version).is_err());
        let wrong_hash = json.replace(&model.feature_hash, "deadbeefdeadbeef");
        assert!(TrainedModel::<f64>::from_json(&wrong_hash).is_err());
    }
}
