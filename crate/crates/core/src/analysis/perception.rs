use std::collections::{BTreeMap, BTreeSet};

use crate::aggregate::annotator_profile;
use crate::catalog::{DimensionId, StatementCatalog};
use crate::corpus::{AnnotationRecord, NewsDocument, ParticipantProfile, PoliticalItem};
use crate::stats::{fit_random_intercept_lmm_with, DesignBuilder, LmmOptions, MixedModelResult};
use crate::{Error, Result};

pub const FREQUENCY_VARIABLE: &str = "science_news_frequency";

pub fn political_column(item: PoliticalItem) -> String {
    format!("political_{}", item.name())
}

/// Annotator-level rating of `dimension` regressed on the annotator's
/// background, with domain and outlet type as fixed effects and a random
/// intercept per document.
pub fn perception_outcome_study(
    records: &[AnnotationRecord],
    participants: &[ParticipantProfile],
    docs: &[NewsDocument],
    catalog: &StatementCatalog,
    dimension: DimensionId,
) -> Result<MixedModelResult> {
    let by_annotator: BTreeMap<&str, &ParticipantProfile> =
        participants.iter().map(|p| (p.annotator_id.as_str(), p)).collect();
    let missing: BTreeSet<String> = records
        .iter()
        .filter(|r| !by_annotator.contains_key(r.annotator_id.as_str()))
        .map(|r| r.annotator_id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingProfiles(missing.into_iter().collect()));
    }
    let by_doc: BTreeMap<&str, &NewsDocument> = docs.iter().map(|d| (d.doc_id.as_str(), d)).collect();

    let mut y = Vec::new();
    let mut groups = Vec::new();
    let mut people: Vec<&ParticipantProfile> = Vec::new();
    let mut articles: Vec<&NewsDocument> = Vec::new();
    for r in records {
        let profile = annotator_profile(r, catalog, true)?;
        let Some(&score) = profile.scores.get(&dimension) else { continue };
        let doc = by_doc
            .get(r.doc_id.as_str())
            .ok_or_else(|| Error::InvalidParameter(format!("record references unknown doc `{}`", r.doc_id)))?;
        y.push(score);
        groups.push(r.doc_id.clone());
        people.push(by_annotator[r.annotator_id.as_str()]);
        articles.push(doc);
    }
    if y.is_empty() {
        return Err(Error::InsufficientData(format!("no ratings of {dimension}")));
    }

    let n = y.len();
    let mut builder = DesignBuilder::new(n)
        .intercept()
        .categorical("gender", &people.iter().map(|p| p.gender.as_str()).collect::<Vec<_>>())
        .categorical("age_bracket", &people.iter().map(|p| p.age_bracket.as_str()).collect::<Vec<_>>())
        .categorical("education_level", &people.iter().map(|p| p.education_level.as_str()).collect::<Vec<_>>())
        .categorical(
            FREQUENCY_VARIABLE,
            &people.iter().map(|p| p.science_news_frequency.name()).collect::<Vec<_>>(),
        )
        .numeric("trust_in_science", people.iter().map(|p| f64::from(p.trust_in_science)).collect());
    for item in PoliticalItem::ALL {
        let values = people
            .iter()
            .map(|p| {
                p.political_attitudes.get(&item).map(|&v| f64::from(v)).ok_or_else(|| {
                    Error::InvalidParameter(format!("participant `{}` lacks political item {}", p.annotator_id, item.name()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        builder = builder.numeric(&political_column(item), values);
    }
    builder = builder
        .categorical("science_domain", &articles.iter().map(|d| d.science_domain.as_str()).collect::<Vec<_>>())
        .categorical("outlet_type", &articles.iter().map(|d| d.outlet_type.name()).collect::<Vec<_>>());
    let references = builder.log().to_vec();
    let design = builder.build()?;

    let mut result = fit_random_intercept_lmm_with(&design, &y, &groups, "doc_id", &LmmOptions::default())?;
    result.fixed.log.insert(0, format!("outcome: {dimension} rating per annotator"));
    result.fixed.log.extend(references);
    Ok(result)
}

/// Difference between two levels of a reference-coded categorical.
pub fn categorical_contrast(result: &MixedModelResult, variable: &str, level: &str, baseline: &str) -> Option<f64> {
    let effect = |l: &str| -> Option<f64> {
        match result.estimate(&format!("{variable}[{l}]")) {
            Some(b) => Some(b),
            // The reference level has no column of its own.
            None if result.fixed.log.iter().any(|m| m == &format!("{variable}: reference level `{l}`")) => Some(0.0),
            None => None,
        }
    };
    Some(effect(level)? - effect(baseline)?)
}
