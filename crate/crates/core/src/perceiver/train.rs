use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::EncoderBackend;
use super::model::ScorerModel;
use super::{evaluate_predictions, model_input, DatasetSplit, LabeledDoc, SelectionMetric, StatementLabels, TrainConfig};
use crate::aggregate::{profile_from_statement_scores, PerceptionProfile};
use crate::catalog::StatementCatalog;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_loss: f64,
    pub validation_mean_r: Option<f64>,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

struct Example {
    /// Non-zero feature entries.
    features: Vec<(usize, f64)>,
    labels: StatementLabels,
}

fn encode_all(docs: &[LabeledDoc], encoder: &dyn EncoderBackend, max_chars: usize) -> Result<Vec<Example>> {
    docs.iter()
        .map(|d| {
            let x = encoder.encode(&model_input(&d.doc.title, &d.doc.body, max_chars))?;
            let features = x.into_iter().enumerate().filter(|(_, v)| *v != 0.0).collect();
            Ok(Example { features, labels: d.labels.clone() })
        })
        .collect()
}

struct Snapshot {
    epoch: usize,
    key: f64,
    weights: DMatrix<f64>,
    bias: DVector<f64>,
}

/// Epoch-at-a-time trainer for the linear head over frozen features.
pub struct Trainer {
    config: TrainConfig,
    catalog: StatementCatalog,
    encoder: Arc<dyn EncoderBackend>,
    train: Vec<Example>,
    validation: Vec<Example>,
    validation_profiles: Vec<PerceptionProfile>,
    weights: DMatrix<f64>,
    bias: DVector<f64>,
    m_w: DMatrix<f64>,
    v_w: DMatrix<f64>,
    m_b: DVector<f64>,
    v_b: DVector<f64>,
    step: i32,
    rng: ChaCha8Rng,
    epoch: usize,
    history: Vec<EpochMetrics>,
    best: Option<Snapshot>,
}

impl Trainer {
    pub fn new(
        split: &DatasetSplit,
        config: &TrainConfig,
        encoder: Arc<dyn EncoderBackend>,
        catalog: &StatementCatalog,
    ) -> Result<Self> {
        config.validate()?;
        if split.train.is_empty() || split.validation.is_empty() {
            return Err(Error::InsufficientData("training needs non-empty train and validation splits".into()));
        }
        let k = catalog.len();
        if let Some(d) = split.train.iter().chain(&split.validation).find(|d| d.labels.values.len() != k || d.labels.mask.len() != k) {
            return Err(Error::CatalogMismatch {
                expected: format!("{k} statements"),
                actual: format!("{} labels on `{}`", d.labels.values.len(), d.doc.doc_id),
            });
        }
        let train = encode_all(&split.train, encoder.as_ref(), config.max_input_length)?;
        let validation = encode_all(&split.validation, encoder.as_ref(), config.max_input_length)?;
        let validation_profiles = split
            .validation
            .iter()
            .map(|d| d.labels.profile(&d.doc.doc_id, catalog))
            .collect::<Result<Vec<_>>>()?;

        // Head bias starts at the per-statement training mean.
        let mut bias = DVector::from_element(k, 3.0);
        for s in 0..k {
            let observed: Vec<f64> =
                train.iter().filter(|e| e.labels.mask[s]).map(|e| e.labels.values[s]).collect();
            if !observed.is_empty() {
                bias[s] = observed.iter().sum::<f64>() / observed.len() as f64;
            }
        }
        let width = encoder.width();
        Ok(Self {
            config: config.clone(),
            catalog: catalog.clone(),
            encoder,
            train,
            validation,
            validation_profiles,
            weights: DMatrix::zeros(k, width),
            bias,
            m_w: DMatrix::zeros(k, width),
            v_w: DMatrix::zeros(k, width),
            m_b: DVector::zeros(k),
            v_b: DVector::zeros(k),
            step: 0,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            epoch: 0,
            history: Vec::new(),
            best: None,
        })
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn history(&self) -> &[EpochMetrics] {
        &self.history
    }

    fn outputs(&self, features: &[(usize, f64)]) -> DVector<f64> {
        let mut out = self.bias.clone();
        for &(j, x) in features {
            out.axpy(x, &self.weights.column(j), 1.0);
        }
        out
    }

    fn adam_step(&mut self, grad_w: &DMatrix<f64>, grad_b: &DVector<f64>) {
        self.step += 1;
        let lr = self.config.learning_rate;
        let c1 = 1.0 - ADAM_BETA1.powi(self.step);
        let c2 = 1.0 - ADAM_BETA2.powi(self.step);
        let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
        };
        for i in 0..grad_w.len() {
            update(&mut self.weights.as_mut_slice()[i], &mut self.m_w.as_mut_slice()[i], &mut self.v_w.as_mut_slice()[i], grad_w.as_slice()[i]);
        }
        for i in 0..grad_b.len() {
            update(&mut self.bias[i], &mut self.m_b[i], &mut self.v_b[i], grad_b[i]);
        }
    }

    /// One pass over the shuffled training split followed by validation.
    pub fn run_epoch(&mut self) -> Result<EpochMetrics> {
        self.epoch += 1;
        let epoch = self.epoch;
        let mut order: Vec<usize> = (0..self.train.len()).collect();
        order.shuffle(&mut self.rng);

        let (k, width) = (self.weights.nrows(), self.weights.ncols());
        let mut sse = 0.0;
        let mut count = 0usize;
        for batch in order.chunks(self.config.batch_size) {
            let mut grad_w = DMatrix::zeros(k, width);
            let mut grad_b = DVector::zeros(k);
            let mut batch_count = 0usize;
            for &i in batch {
                let ex = &self.train[i];
                let out = self.outputs(&ex.features);
                let mut g = DVector::zeros(k);
                for s in 0..k {
                    if ex.labels.mask[s] {
                        let err = out[s] - ex.labels.values[s];
                        sse += err * err;
                        g[s] = 2.0 * err;
                        batch_count += 1;
                    }
                }
                grad_b += &g;
                for &(j, x) in &ex.features {
                    grad_w.column_mut(j).axpy(x, &g, 1.0);
                }
            }
            if batch_count == 0 {
                continue;
            }
            count += batch_count;
            let scale = 1.0 / batch_count as f64;
            grad_w *= scale;
            grad_b *= scale;
            if !sse.is_finite() || grad_w.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence { epoch });
            }
            self.adam_step(&grad_w, &grad_b);
        }
        let train_loss = if count > 0 { sse / count as f64 } else { 0.0 };
        if !train_loss.is_finite() || self.weights.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { epoch });
        }

        let (validation_loss, validation_mean_r) = self.validate()?;
        let metrics = EpochMetrics { epoch, train_loss, validation_loss, validation_mean_r };
        let key = match self.config.selection_metric {
            SelectionMetric::MeanValidationPearson => validation_mean_r.unwrap_or(f64::NEG_INFINITY),
            SelectionMetric::ValidationLoss => -validation_loss,
        };
        if self.best.as_ref().map_or(true, |b| key > b.key) {
            self.best = Some(Snapshot { epoch, key, weights: self.weights.clone(), bias: self.bias.clone() });
        }
        self.history.push(metrics.clone());
        Ok(metrics)
    }

    fn validate(&self) -> Result<(f64, Option<f64>)> {
        let mut sse = 0.0;
        let mut count = 0usize;
        let mut predicted = Vec::with_capacity(self.validation.len());
        for (ex, reference) in self.validation.iter().zip(&self.validation_profiles) {
            let out = self.outputs(&ex.features);
            for s in 0..out.len() {
                if ex.labels.mask[s] {
                    sse += (out[s] - ex.labels.values[s]).powi(2);
                    count += 1;
                }
            }
            let scores = self.catalog.statements.iter().zip(out.iter()).map(|(st, v)| (st.id.as_str(), v.clamp(1.0, 5.0)));
            predicted.push(profile_from_statement_scores(&reference.doc_id, scores, &self.catalog, true)?);
        }
        let loss = if count > 0 { sse / count as f64 } else { 0.0 };
        let report = evaluate_predictions(&predicted, &self.validation_profiles)?;
        Ok((loss, report.overall))
    }

    /// Model at the current weights.
    pub fn snapshot(&self) -> ScorerModel {
        ScorerModel::from_parts(
            self.encoder.clone(),
            self.weights.clone(),
            self.bias.clone(),
            &self.catalog,
            self.config.clone(),
            self.epoch,
            self.history.clone(),
        )
    }

    /// Model at the best epoch seen so far.
    pub fn best(&self) -> Option<ScorerModel> {
        self.best.as_ref().map(|b| {
            ScorerModel::from_parts(
                self.encoder.clone(),
                b.weights.clone(),
                b.bias.clone(),
                &self.catalog,
                self.config.clone(),
                b.epoch,
                self.history.clone(),
            )
        })
    }
}

/// Trains for `config.epochs` epochs and returns the best-epoch snapshot.
pub fn train(
    split: &DatasetSplit,
    config: &TrainConfig,
    encoder: Arc<dyn EncoderBackend>,
    catalog: &StatementCatalog,
) -> Result<ScorerModel> {
    let mut trainer = Trainer::new(split, config, encoder, catalog)?;
    for _ in 0..config.epochs {
        trainer.run_epoch()?;
    }
    Ok(trainer.best().expect("at least one epoch ran"))
}
