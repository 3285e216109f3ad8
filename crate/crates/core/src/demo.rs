//! A small self-contained deployment trained on synthetic data.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::synth::{synthetic_engagement, EngagementSpec};
use crate::analysis::{engagement_study, fit_engagement_predictors, EngagementPredictor, DEFAULT_VIF_THRESHOLD};
use crate::catalog::StatementCatalog;
use crate::corpus::synth::{compose_text, draw_latent, DOMAINS};
use crate::corpus::{simulate_annotations, GeneratorParams, NewsDocument, OutletType};
use crate::perceiver::{
    build_labels, label_documents, split_dataset, train, HashedNgramEncoder, ScorerModel, TrainConfig,
};
use crate::Result;

#[derive(Debug, Clone)]
pub struct DemoDeployment {
    pub model: ScorerModel,
    pub predictors: Vec<EngagementPredictor>,
}

/// Documents with cue-word text drawn from latent profiles, plus generator
/// parameters that rate them around those profiles.
pub fn demo_corpus(n_docs: usize, seed: u64) -> (Vec<NewsDocument>, GeneratorParams) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = GeneratorParams::default();
    let docs = (0..n_docs)
        .map(|i| {
            let domain = i % DOMAINS.len();
            let latent = draw_latent(&mut rng, domain);
            let (title, body) = compose_text(&latent, domain, &mut rng, 4);
            let doc_id = format!("demo{i:05}");
            params.latent_means.insert(doc_id.clone(), latent);
            NewsDocument {
                doc_id,
                title,
                body,
                outlet_type: OutletType::ALL[i % 3],
                science_domain: DOMAINS[domain].to_string(),
                paper_id: format!("paper{i:05}"),
                coverage_count: 1,
                extra: Default::default(),
            }
        })
        .collect();
    (docs, params)
}

/// Trains a light-backend scorer on simulated annotations and fits the
/// engagement predictors on planted synthetic posts.
pub fn demo_deployment(n_docs: usize, seed: u64, catalog: &StatementCatalog) -> Result<DemoDeployment> {
    let (docs, params) = demo_corpus(n_docs, seed);
    let sim = simulate_annotations(&docs, catalog, 40, 3, &params, seed)?;
    let labels = build_labels(&sim.records, catalog)?;
    let split = split_dataset(&label_documents(&docs, &labels), [0.7, 0.1, 0.2], seed)?;
    let config = TrainConfig { seed, ..TrainConfig::default() };
    let model = train(&split, &config, Arc::new(HashedNgramEncoder::default()), catalog)?;

    let engagement = synthetic_engagement(&EngagementSpec::default(), seed);
    let study = engagement_study(&engagement.dataset()?, DEFAULT_VIF_THRESHOLD)?;
    let predictors = fit_engagement_predictors(&study)?;
    Ok(DemoDeployment { model, predictors })
}
