//! Browser bindings. Every method takes and returns JSON strings so the page
//! needs no extra glue beyond `JSON.parse`.

use std::collections::{BTreeMap, BTreeSet};

use percept_core::analysis::{predict_engagement, EngagementPrediction, EngagementPredictor};
use percept_core::demo::demo_deployment;
use percept_core::perceiver::{predict_text, ScorerModel};
use percept_core::reliability::{krippendorff_alpha, Metric, ReliabilityMatrix};
use percept_core::stats::percent_change;
use percept_core::{default_catalog, DimensionId, StatementCatalog};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

/// Documents the in-browser scorer is trained on.
pub const DEMO_DOCS: usize = 160;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub statement_scores: BTreeMap<String, f64>,
    pub profile: BTreeMap<DimensionId, f64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Variant {
    pub label: String,
    pub text: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VariantResult {
    pub label: String,
    pub profile: BTreeMap<DimensionId, f64>,
    pub engagement: BTreeMap<String, EngagementPrediction>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EngagementDelta {
    pub delta: f64,
    pub percent_change: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeltaRow {
    pub label: String,
    pub baseline: String,
    pub dimensions: BTreeMap<DimensionId, f64>,
    pub engagement: BTreeMap<String, EngagementDelta>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub variants: Vec<VariantResult>,
    pub deltas: Vec<DeltaRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Agreement {
    pub interval: Option<f64>,
    pub ordinal: Option<f64>,
    pub pairable_values: usize,
}

/// Scorer and engagement predictors, usable from native Rust.
pub struct Studio {
    catalog: StatementCatalog,
    model: ScorerModel,
    predictors: Vec<EngagementPredictor>,
}

impl Studio {
    pub fn train(seed: u64) -> Result<Self, String> {
        let catalog = default_catalog();
        let demo = demo_deployment(DEMO_DOCS, seed, &catalog).map_err(|e| e.to_string())?;
        Ok(Self { catalog, model: demo.model, predictors: demo.predictors })
    }

    pub fn model_version(&self) -> &str {
        self.model.model_version()
    }

    pub fn score(&self, text: &str) -> Result<Scored, String> {
        let (scores, profile) = predict_text(&self.model, "input", text, &self.catalog).map_err(|e| e.to_string())?;
        Ok(Scored { statement_scores: scores.scores, profile: profile.scores })
    }

    /// Scores each variant and reports differences against the first one.
    pub fn compare(&self, variants: &[Variant]) -> Result<Comparison, String> {
        if variants.len() < 2 {
            return Err("compare needs at least 2 variants".into());
        }
        let mut seen = BTreeSet::new();
        if let Some(dup) = variants.iter().find(|v| !seen.insert(v.label.as_str())) {
            return Err(format!("label `{}` is used twice", dup.label));
        }
        let mut results = Vec::with_capacity(variants.len());
        for v in variants {
            let (_, profile) = predict_text(&self.model, &v.label, &v.text, &self.catalog).map_err(|e| e.to_string())?;
            let engagement = self
                .predictors
                .iter()
                .map(|p| predict_engagement(p, &profile).map(|e| (p.outcome.clone(), e)))
                .collect::<Result<BTreeMap<_, _>, _>>()
                .map_err(|e| e.to_string())?;
            results.push(VariantResult { label: v.label.clone(), profile: profile.scores, engagement });
        }
        let base = &results[0];
        let deltas = results[1..]
            .iter()
            .map(|v| DeltaRow {
                label: v.label.clone(),
                baseline: base.label.clone(),
                dimensions: v.profile.iter().map(|(k, x)| (*k, x - base.profile[k])).collect(),
                engagement: v
                    .engagement
                    .iter()
                    .map(|(o, e)| {
                        let delta = e.expected - base.engagement[o].expected;
                        (o.clone(), EngagementDelta { delta, percent_change: percent_change(delta) })
                    })
                    .collect(),
            })
            .collect();
        Ok(Comparison { variants: results, deltas })
    }
}

/// Krippendorff's alpha for a units x raters grid of 1-5 ratings.
pub fn agreement(grid: Vec<Vec<Option<u8>>>) -> Result<Agreement, String> {
    if let Some(v) = grid.iter().flatten().flatten().find(|v| !(1..=5).contains(*v)) {
        return Err(format!("rating {v} outside 1-5"));
    }
    let matrix = ReliabilityMatrix::from_grid(grid);
    let alpha = |metric| krippendorff_alpha(&matrix, metric).map_err(|e| e.to_string());
    Ok(Agreement { interval: alpha(Metric::Interval)?, ordinal: alpha(Metric::Ordinal)?, pairable_values: matrix.pairable_count() })
}

fn to_json<T: Serialize>(value: &T) -> Result<String, JsError> {
    serde_json::to_string(value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub struct StudioCore {
    inner: Studio,
}

#[wasm_bindgen]
impl StudioCore {
    /// Trains the demo scorer; takes a moment on first load.
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32) -> Result<StudioCore, JsError> {
        Studio::train(u64::from(seed)).map(|inner| StudioCore { inner }).map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(js_name = modelVersion)]
    pub fn model_version(&self) -> String {
        self.inner.model_version().to_string()
    }

    pub fn score(&self, text: &str) -> Result<String, JsError> {
        to_json(&self.inner.score(text).map_err(|e| JsError::new(&e))?)
    }

    /// `variants_json`: `[{"label": ..., "text": ...}, ...]`.
    pub fn compare(&self, variants_json: &str) -> Result<String, JsError> {
        let variants: Vec<Variant> = serde_json::from_str(variants_json).map_err(|e| JsError::new(&e.to_string()))?;
        to_json(&self.inner.compare(&variants).map_err(|e| JsError::new(&e))?)
    }
}

/// `grid_json`: rows of ratings with `null` for missing cells.
#[wasm_bindgen(js_name = agreement)]
pub fn agreement_json(grid_json: &str) -> Result<String, JsError> {
    let grid: Vec<Vec<Option<u8>>> = serde_json::from_str(grid_json).map_err(|e| JsError::new(&e.to_string()))?;
    to_json(&agreement(grid).map_err(|e| JsError::new(&e))?)
}

#[wasm_bindgen(js_name = catalog)]
pub fn catalog_json() -> String {
    default_catalog().to_json()
}
