//! Multi-task statement scorer: text in, 25 statement scores and a
//! 12-dimension profile out.

mod features;
#[cfg(feature = "heavy")]
mod heavy;
mod model;
mod train;

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::aggregate::{profile_from_statement_scores, PerceptionProfile};
use crate::catalog::{DimensionId, StatementCatalog};
use crate::corpus::{AnnotationRecord, NewsDocument};
use crate::stats::{mean, pearson};
use crate::{Error, Result};

pub use features::{BackendSpec, EncoderBackend, HashedNgramEncoder};
#[cfg(feature = "heavy")]
pub use heavy::TransformerEncoder;
pub use model::{load_model, save_model, ModelMetadata, ScorerModel, MODEL_FORMAT_VERSION};
pub use train::{train, EpochMetrics, Trainer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMetric {
    /// Mean Pearson r over the 12 dimensions on the validation split.
    #[default]
    MeanValidationPearson,
    ValidationLoss,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub split_ratios: [f64; 3],
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Characters kept from the head of `title + "\n" + body`.
    pub max_input_length: usize,
    pub seed: u64,
    pub selection_metric: SelectionMetric,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            split_ratios: [0.7, 0.1, 0.2],
            learning_rate: 0.02,
            batch_size: 8,
            max_input_length: 4000,
            seed: 0,
            selection_metric: SelectionMetric::MeanValidationPearson,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        validate_ratios(&self.split_ratios)?;
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig(format!("learning_rate {} must be positive", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
        }
        if self.max_input_length == 0 {
            return Err(Error::InvalidConfig("max_input_length must be at least 1".into()));
        }
        Ok(())
    }
}

fn validate_ratios(r: &[f64; 3]) -> Result<()> {
    if r.iter().any(|v| !v.is_finite() || *v < 0.0) || (r.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!("split ratios {r:?} must be non-negative and sum to 1")));
    }
    Ok(())
}

/// Mean raw rating per statement (catalog order); `mask[i]` is true when
/// statement `i` was rated at least once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatementLabels {
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
}

impl StatementLabels {
    pub fn observed(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    /// Label-derived profile, reverse coding applied.
    pub fn profile(&self, doc_id: &str, catalog: &StatementCatalog) -> Result<PerceptionProfile> {
        let scores = catalog
            .statements
            .iter()
            .zip(self.values.iter().zip(&self.mask))
            .filter(|(_, (_, m))| **m)
            .map(|(s, (v, _))| (s.id.as_str(), *v));
        profile_from_statement_scores(doc_id, scores, catalog, true)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDoc {
    pub doc: NewsDocument,
    pub labels: StatementLabels,
}

#[derive(Debug, Clone, Default)]
pub struct LabelSet {
    pub labels: BTreeMap<String, StatementLabels>,
    pub warnings: Vec<String>,
}

/// Per-document mean statement ratings, without reverse coding.
pub fn build_labels(records: &[AnnotationRecord], catalog: &StatementCatalog) -> Result<LabelSet> {
    let k = catalog.len();
    let mut sums: BTreeMap<&str, (Vec<f64>, Vec<usize>)> = BTreeMap::new();
    let mut warnings = Vec::new();
    for r in records {
        let entry = sums.entry(&r.doc_id).or_insert_with(|| (vec![0.0; k], vec![0; k]));
        for (id, &rating) in &r.ratings {
            let i = catalog.index_of(id).ok_or_else(|| Error::UnknownStatement(id.clone()))?;
            entry.0[i] += f64::from(rating);
            entry.1[i] += 1;
        }
    }
    let mut labels = BTreeMap::new();
    for (doc, (s, c)) in sums {
        if c.iter().all(|&n| n == 0) {
            warnings.push(format!("doc `{doc}` has no ratings; dropped"));
            continue;
        }
        let values = s.iter().zip(&c).map(|(s, &n)| if n > 0 { s / n as f64 } else { 0.0 }).collect();
        labels.insert(doc.to_string(), StatementLabels { values, mask: c.iter().map(|&n| n > 0).collect() });
    }
    Ok(LabelSet { labels, warnings })
}

/// Pairs documents with their labels; unlabeled documents are skipped.
pub fn label_documents(docs: &[NewsDocument], labels: &LabelSet) -> Vec<LabeledDoc> {
    docs.iter()
        .filter_map(|d| labels.labels.get(&d.doc_id).map(|l| LabeledDoc { doc: d.clone(), labels: l.clone() }))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<LabeledDoc>,
    pub validation: Vec<LabeledDoc>,
    pub test: Vec<LabeledDoc>,
}

impl DatasetSplit {
    pub fn sizes(&self) -> [usize; 3] {
        [self.train.len(), self.validation.len(), self.test.len()]
    }
}

pub const MIN_SPLIT_DOCUMENTS: usize = 10;

/// Shuffled partition by doc id. Train and validation sizes are rounded;
/// test takes the remainder.
pub fn split_dataset(docs: &[LabeledDoc], ratios: [f64; 3], seed: u64) -> Result<DatasetSplit> {
    validate_ratios(&ratios)?;
    let mut sorted: Vec<&LabeledDoc> = docs.iter().collect();
    sorted.sort_by(|a, b| a.doc.doc_id.cmp(&b.doc.doc_id));
    sorted.dedup_by(|a, b| a.doc.doc_id == b.doc.doc_id);
    let n = sorted.len();
    if n < MIN_SPLIT_DOCUMENTS {
        return Err(Error::TooFewDocuments { needed: MIN_SPLIT_DOCUMENTS, got: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sorted.shuffle(&mut rng);
    let n_train = ((ratios[0] * n as f64).round() as usize).min(n);
    let n_val = ((ratios[1] * n as f64).round() as usize).min(n - n_train);
    let owned = |s: &[&LabeledDoc]| s.iter().map(|d| (*d).clone()).collect::<Vec<_>>();
    Ok(DatasetSplit {
        train: owned(&sorted[..n_train]),
        validation: owned(&sorted[n_train..n_train + n_val]),
        test: owned(&sorted[n_train + n_val..]),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatementScores {
    pub doc_id: String,
    pub scores: BTreeMap<String, f64>,
}

/// Model input text: head-truncated to `max_chars` characters.
pub fn model_input(title: &str, body: &str, max_chars: usize) -> String {
    let doc_text = match (title.is_empty(), body.is_empty()) {
        (true, _) => body.to_string(),
        (false, true) => title.to_string(),
        (false, false) => format!("{title}\n{body}"),
    };
    match doc_text.char_indices().nth(max_chars) {
        Some((cut, _)) => doc_text[..cut].to_string(),
        None => doc_text,
    }
}

pub fn predict(model: &ScorerModel, doc: &NewsDocument, catalog: &StatementCatalog) -> Result<(StatementScores, PerceptionProfile)> {
    model.check_catalog(catalog)?;
    let text = model_input(&doc.title, &doc.body, model.metadata.config.max_input_length);
    predict_text(model, &doc.doc_id, &text, catalog)
}

/// Scores already-assembled input text.
pub fn predict_text(
    model: &ScorerModel,
    doc_id: &str,
    text: &str,
    catalog: &StatementCatalog,
) -> Result<(StatementScores, PerceptionProfile)> {
    model.check_catalog(catalog)?;
    if text.trim().is_empty() {
        return Err(Error::EmptyContent(format!("no text to score for `{doc_id}`")));
    }
    let text = model_input("", text, model.metadata.config.max_input_length);
    let raw = model.forward(&text)?;
    let scores: BTreeMap<String, f64> = catalog
        .statements
        .iter()
        .zip(raw)
        .map(|(s, v)| (s.id.clone(), v.clamp(1.0, 5.0)))
        .collect();
    let profile = profile_from_statement_scores(doc_id, scores.iter().map(|(k, v)| (k.as_str(), *v)), catalog, true)?;
    Ok((StatementScores { doc_id: doc_id.to_string(), scores }, profile))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionMetric {
    pub dimension: DimensionId,
    /// `None` when either side has zero variance.
    pub pearson_r: Option<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub dimensions: Vec<DimensionMetric>,
    /// Mean of the defined per-dimension correlations.
    pub overall: Option<f64>,
}

impl EvaluationReport {
    pub fn get(&self, dimension: DimensionId) -> Option<f64> {
        self.dimensions.iter().find(|m| m.dimension == dimension).and_then(|m| m.pearson_r)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["dimension", "pearson_r", "n"])?;
        for m in &self.dimensions {
            let r = m.pearson_r.map(|r| r.to_string()).unwrap_or_default();
            w.write_record([m.dimension.name().to_string(), r, m.n.to_string()])?;
        }
        w.write_record(["overall".to_string(), self.overall.map(|r| r.to_string()).unwrap_or_default(), String::new()])?;
        w.flush()?;
        Ok(())
    }
}

/// Per-dimension correlation between paired predicted and reference profiles.
pub fn evaluate_predictions(predicted: &[PerceptionProfile], reference: &[PerceptionProfile]) -> Result<EvaluationReport> {
    if predicted.len() != reference.len() {
        return Err(Error::InvalidParameter(format!(
            "{} predictions for {} references",
            predicted.len(),
            reference.len()
        )));
    }
    let dimensions: Vec<DimensionMetric> = DimensionId::ALL
        .iter()
        .map(|&d| {
            let (x, y): (Vec<f64>, Vec<f64>) = predicted
                .iter()
                .zip(reference)
                .filter_map(|(p, r)| Some((*p.scores.get(&d)?, *r.scores.get(&d)?)))
                .unzip();
            DimensionMetric { dimension: d, pearson_r: pearson(&x, &y), n: x.len() }
        })
        .collect();
    let defined: Vec<f64> = dimensions.iter().filter_map(|m| m.pearson_r).collect();
    let overall = (!defined.is_empty()).then(|| mean(&defined));
    Ok(EvaluationReport { dimensions, overall })
}

pub const MIN_EVAL_DOCUMENTS: usize = 3;

pub fn evaluate(model: &ScorerModel, docs: &[LabeledDoc], catalog: &StatementCatalog) -> Result<EvaluationReport> {
    if docs.len() < MIN_EVAL_DOCUMENTS {
        return Err(Error::TooFewDocuments { needed: MIN_EVAL_DOCUMENTS, got: docs.len() });
    }
    let mut predicted = Vec::with_capacity(docs.len());
    let mut reference = Vec::with_capacity(docs.len());
    for d in docs {
        predicted.push(predict(model, &d.doc, catalog)?.1);
        reference.push(d.labels.profile(&d.doc.doc_id, catalog)?);
    }
    evaluate_predictions(&predicted, &reference)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::default_catalog;
    use crate::corpus::OutletType;

    pub(crate) fn doc(id: &str, title: &str, body: &str) -> NewsDocument {
        NewsDocument {
            doc_id: id.into(),
            title: title.into(),
            body: body.into(),
            outlet_type: OutletType::General,
            science_domain: "Biology".into(),
            paper_id: format!("paper-{id}"),
            coverage_count: 1,
            extra: Default::default(),
        }
    }

    fn labeled(n: usize) -> Vec<LabeledDoc> {
        (0..n)
            .map(|i| LabeledDoc {
                doc: doc(&format!("d{i:03}"), "t", "b"),
                labels: StatementLabels { values: vec![3.0; 25], mask: vec![true; 25] },
            })
            .collect()
    }

    #[test]
    fn split_sizes() {
        assert_eq!(split_dataset(&labeled(100), [0.7, 0.1, 0.2], 1).unwrap().sizes(), [70, 10, 20]);
        assert_eq!(split_dataset(&labeled(10), [0.7, 0.1, 0.2], 1).unwrap().sizes(), [7, 1, 2]);
        assert!(matches!(
            split_dataset(&labeled(9), [0.7, 0.1, 0.2], 1),
            Err(Error::TooFewDocuments { needed: 10, got: 9 })
        ));
    }

    #[test]
    fn split_is_deterministic_and_order_free() {
        let docs = labeled(30);
        let a = split_dataset(&docs, [0.7, 0.1, 0.2], 5).unwrap();
        let mut rev = docs.clone();
        rev.reverse();
        let b = split_dataset(&rev, [0.7, 0.1, 0.2], 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn labels_average_raw_ratings() {
        let catalog = default_catalog();
        let rec = |a: &str, r: u8| AnnotationRecord {
            annotator_id: a.into(),
            doc_id: "d".into(),
            ratings: [("share_unlikely".to_string(), r)].into(),
            country: crate::corpus::Country::US,
            extra: Default::default(),
        };
        let set = build_labels(&[rec("a", 2), rec("b", 5)], &catalog).unwrap();
        let l = &set.labels["d"];
        let i = catalog.index_of("share_unlikely").unwrap();
        assert_eq!(l.values[i], 3.5);
        assert_eq!(l.observed(), 1);
        assert!(!l.mask[0]);
    }

    #[test]
    fn truncation_counts_characters() {
        assert_eq!(model_input("ab", "cdé", 5), "ab\ncd");
        assert_eq!(model_input("ab", "cdé", 6), "ab\ncdé");
        assert_eq!(model_input("", "xyz", 10), "xyz");
    }

    #[test]
    fn self_and_anti_correlation() {
        let catalog = default_catalog();
        let profiles: Vec<PerceptionProfile> = (0..5)
            .map(|i| {
                let v = 1.0 + i as f64 * 0.7;
                let l = StatementLabels { values: (0..25).map(|k| v + (k % 3) as f64 * 0.1).collect(), mask: vec![true; 25] };
                l.profile(&format!("d{i}"), &catalog).unwrap()
            })
            .collect();
        let same = evaluate_predictions(&profiles, &profiles).unwrap();
        assert!(same.dimensions.iter().all(|m| (m.pearson_r.unwrap() - 1.0).abs() < 1e-12));
        let flipped: Vec<PerceptionProfile> = profiles
            .iter()
            .map(|p| {
                let mut q = p.clone();
                q.scores.values_mut().for_each(|v| *v = 6.0 - 0.5 * *v);
                q
            })
            .collect();
        let anti = evaluate_predictions(&flipped, &profiles).unwrap();
        assert!((anti.overall.unwrap() + 1.0).abs() < 1e-12);
    }
}
