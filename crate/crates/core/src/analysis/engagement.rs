use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::posts::{engagement_outcomes, SocialPost, UrlGroups, COMMENTS_TRANSFORM, SCORE_TRANSFORM};
use crate::aggregate::PerceptionProfile;
use crate::catalog::{DimensionId, StatementCatalog};
use crate::perceiver::{predict_text, ScorerModel};
use crate::stats::{
    collinear_columns, fit_random_intercept_lmm_with, mean, stepwise_vif_prune, DesignBuilder, DesignMatrix, LmmOptions,
    MixedModelResult, PruneOutcome,
};
use crate::{Error, Result};

pub const LOG_SCORE: &str = "log_score";
pub const LOG_COMMENTS: &str = "log_comments";
pub const OUTCOMES: [&str; 2] = [LOG_SCORE, LOG_COMMENTS];
pub const FIRST_SHARE: &str = "first_share";
pub const DEFAULT_VIF_THRESHOLD: f64 = 5.0;
/// Rows required per fixed-effect predictor.
pub const ROWS_PER_PREDICTOR: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngagementRow {
    pub post: SocialPost,
    pub url_domain: String,
    pub profile: PerceptionProfile,
    pub log_score: f64,
    pub log_comments: f64,
}

impl EngagementRow {
    pub fn outcome(&self, name: &str) -> Option<f64> {
        match name {
            LOG_SCORE => Some(self.log_score),
            LOG_COMMENTS => Some(self.log_comments),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMetadata {
    pub score_transform: String,
    pub comments_transform: String,
    pub perception_source: String,
    pub dropped_duplicates: usize,
    pub dropped_singleton_urls: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngagementDataset {
    pub rows: Vec<EngagementRow>,
    pub metadata: DatasetMetadata,
}

impl EngagementDataset {
    /// Attaches a perception profile to every grouped post.
    pub fn from_groups(
        groups: &UrlGroups,
        perception_source: &str,
        mut profile_of: impl FnMut(&SocialPost) -> Result<PerceptionProfile>,
    ) -> Result<Self> {
        let rows = groups
            .posts
            .iter()
            .map(|g| {
                let (log_score, log_comments) = engagement_outcomes(&g.post);
                Ok(EngagementRow {
                    profile: profile_of(&g.post)?,
                    post: g.post.clone(),
                    url_domain: g.url_domain.clone(),
                    log_score,
                    log_comments,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            rows,
            metadata: DatasetMetadata {
                score_transform: SCORE_TRANSFORM.into(),
                comments_transform: COMMENTS_TRANSFORM.into(),
                perception_source: perception_source.into(),
                dropped_duplicates: groups.dropped_duplicates,
                dropped_singleton_urls: groups.dropped_singleton_urls,
            },
        })
    }

    pub fn n_urls(&self) -> usize {
        self.rows.iter().map(|r| &r.post.url).collect::<BTreeSet<_>>().len()
    }
}

/// Profiles every post from its title text with the scorer.
pub fn score_posts(groups: &UrlGroups, model: &ScorerModel, catalog: &StatementCatalog) -> Result<EngagementDataset> {
    let source = format!("scorer {} on title_text", model.model_version());
    EngagementDataset::from_groups(groups, &source, |p| Ok(predict_text(model, &p.post_id, &p.title_text, catalog)?.1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngagementStudy {
    pub outcomes: BTreeMap<String, MixedModelResult>,
    pub retained: Vec<DimensionId>,
    pub pruning: PruneOutcome,
    pub prune_threshold: f64,
    /// Means of the retained dimensions over the fitted rows.
    pub dimension_means: BTreeMap<DimensionId, f64>,
    pub n_rows: usize,
    pub n_urls: usize,
    pub log: Vec<String>,
}

fn perception_matrix(rows: &[EngagementRow], dims: &[DimensionId]) -> Result<DesignMatrix> {
    let mut b = DesignBuilder::new(rows.len()).intercept();
    for &d in dims {
        let values = rows
            .iter()
            .map(|r| r.profile.scores.get(&d).copied().ok_or_else(|| Error::MissingDimension(format!("{d} on post `{}`", r.post.post_id))))
            .collect::<Result<Vec<_>>>()?;
        b = b.numeric(d.name(), values);
    }
    b.build()
}

/// VIF-prunes the 12 perception dimensions, then fits each outcome with a
/// url random intercept and subreddit, url domain and first-share controls.
pub fn engagement_study(dataset: &EngagementDataset, prune_threshold: f64) -> Result<EngagementStudy> {
    let rows = &dataset.rows;
    let mut log = Vec::new();
    let perception = perception_matrix(rows, &DimensionId::ALL)?;
    let pruning = stepwise_vif_prune(&perception, prune_threshold);
    for r in &pruning.removals {
        log.push(format!("vif step {}: removed {} (vif {:.3})", r.step, r.column, r.vif));
    }
    let retained: Vec<DimensionId> = pruning
        .retained
        .iter()
        .map(|name| name.parse())
        .collect::<Result<Vec<_>>>()?;

    let base = perception_matrix(rows, &retained)?;
    let mut builder = DesignBuilder::new(rows.len()).intercept();
    for (j, name) in base.names.iter().enumerate().skip(1) {
        builder = builder.numeric(name, base.data.column(j).iter().copied().collect());
    }
    builder = builder
        .categorical("subreddit", &rows.iter().map(|r| r.post.subreddit.as_str()).collect::<Vec<_>>())
        .categorical("url_domain", &rows.iter().map(|r| r.url_domain.as_str()).collect::<Vec<_>>())
        .numeric(FIRST_SHARE, rows.iter().map(|r| f64::from(u8::from(r.post.first_share_of_url_in_subreddit))).collect());
    log.extend(builder.log().iter().cloned());
    let mut design = builder.build()?;

    let perception_names: BTreeSet<&str> = retained.iter().map(|d| d.name()).collect();
    let collinear = collinear_columns(&design);
    if collinear.iter().any(|c| perception_names.contains(c.as_str())) {
        return Err(Error::RankDeficient(collinear));
    }
    if !collinear.is_empty() {
        for c in &collinear {
            log.push(format!("dropped control column {c}: collinear with earlier columns"));
        }
        let keep: Vec<String> = design.names.iter().filter(|n| !collinear.contains(n)).cloned().collect();
        design = design.select(&keep);
    }

    let predictors = design.ncols() - 1;
    if rows.len() < ROWS_PER_PREDICTOR * predictors.max(1) {
        return Err(Error::InsufficientData(format!(
            "{} rows for {predictors} predictors; need at least {ROWS_PER_PREDICTOR} per predictor",
            rows.len()
        )));
    }

    let groups: Vec<&str> = rows.iter().map(|r| r.post.url.as_str()).collect();
    let mut outcomes = BTreeMap::new();
    for name in OUTCOMES {
        let y: Vec<f64> = rows.iter().map(|r| r.outcome(name).expect("known outcome")).collect();
        let mut fit = fit_random_intercept_lmm_with(&design, &y, &groups, "url", &LmmOptions::default())?;
        fit.fixed.log.insert(0, format!("outcome: {name}"));
        outcomes.insert(name.to_string(), fit);
    }

    let dimension_means = retained
        .iter()
        .enumerate()
        .map(|(i, &d)| (d, mean(&base.data.column(i + 1).iter().copied().collect::<Vec<_>>())))
        .collect();
    Ok(EngagementStudy {
        outcomes,
        retained,
        pruning,
        prune_threshold,
        dimension_means,
        n_rows: rows.len(),
        n_urls: dataset.n_urls(),
        log,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngagementPredictor {
    pub outcome: String,
    /// Fitted intercept at the reference subreddit and domain, not a first share.
    pub intercept: f64,
    pub coefficients: BTreeMap<DimensionId, f64>,
    /// `sqrt(σ² + σ_u²)`.
    pub residual_scale: f64,
    pub fit_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngagementPrediction {
    pub outcome: String,
    pub expected: f64,
    pub lower: f64,
    pub upper: f64,
}

pub fn fit_engagement_predictor(study: &EngagementStudy, outcome: &str) -> Result<EngagementPredictor> {
    let fit = study
        .outcomes
        .get(outcome)
        .ok_or_else(|| Error::InvalidParameter(format!("study has no outcome `{outcome}`")))?;
    let intercept = fit
        .estimate(crate::stats::INTERCEPT)
        .ok_or_else(|| Error::InvalidParameter("fit has no intercept".into()))?;
    let coefficients = study
        .retained
        .iter()
        .map(|&d| {
            fit.estimate(d.name())
                .map(|b| (d, b))
                .ok_or_else(|| Error::MissingDimension(format!("{d} in the {outcome} fit")))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    let residual_scale = (fit.fixed.residual_variance + fit.random_intercept_variance).sqrt();
    let payload = serde_json::to_string(&(outcome, intercept, &coefficients, residual_scale))?;
    let fit_id = hex::encode(&Sha256::digest(payload.as_bytes())[..8]);
    Ok(EngagementPredictor { outcome: outcome.to_string(), intercept, coefficients, residual_scale, fit_id })
}

pub fn fit_engagement_predictors(study: &EngagementStudy) -> Result<Vec<EngagementPredictor>> {
    OUTCOMES.iter().map(|o| fit_engagement_predictor(study, o)).collect()
}

/// Linear prediction with a ±1.96 residual-scale interval.
pub fn predict_engagement(predictor: &EngagementPredictor, profile: &PerceptionProfile) -> Result<EngagementPrediction> {
    let mut expected = predictor.intercept;
    for (d, b) in &predictor.coefficients {
        let x = profile
            .scores
            .get(d)
            .ok_or_else(|| Error::MissingDimension(format!("{d} in profile `{}`", profile.doc_id)))?;
        expected += b * x;
    }
    let half = 1.96 * predictor.residual_scale;
    Ok(EngagementPrediction {
        outcome: predictor.outcome.clone(),
        expected,
        lower: expected - half,
        upper: expected + half,
    })
}
