use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::BufWriter;
use std::net::SocketAddr;
use std::path::Path;

use anyhow::{bail, Context};
use percept_core::aggregate::{article_profiles, rank_scores, rating_rank_agreement, PerceptionProfile};
use percept_core::analysis::synth::synthetic_engagement;
use percept_core::analysis::{
    build_url_groups, categorical_contrast, engagement_study, fit_engagement_predictors, perception_outcome_study,
    score_posts, EngagementPredictor, SocialPost, FREQUENCY_VARIABLE, LOG_SCORE,
};
use percept_core::corpus::synth::{synthetic_pool, Latent};
use percept_core::corpus::{
    clean_document, load_jsonl, sample_batch, save_jsonl, simulate_annotations, AnnotationRecord, JsonlRecord,
    NewsDocument, ParticipantProfile, RawArticle, SampleOutcome, SimulatedAnnotations,
};
use percept_core::perceiver::{
    build_labels, evaluate, label_documents, load_model, predict, predict_text, save_model, split_dataset, train,
    DatasetSplit, EvaluationReport, LabeledDoc, ScorerModel,
};
use percept_core::reliability::{reliability_report, ReliabilityReport};
use percept_core::stats::percent_change;
use percept_core::{default_catalog, DimensionId, StatementCatalog};
use percept_service::{AppState, ServiceConfig, MODEL_ENV, PREDICTORS_FILE};
use serde::{Deserialize, Serialize};

use crate::Run;

pub const SPLIT_FILE: &str = "split.json";

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn csv_file(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn load_input<T: JsonlRecord>(run: &mut Run, path: &Path) -> anyhow::Result<Vec<T>> {
    run.input(path)?;
    Ok(load_jsonl(path)?)
}

fn catalog() -> StatementCatalog {
    default_catalog()
}

// ---- clean

fn clean(run: &mut Run, raw: &[RawArticle]) -> anyhow::Result<Vec<NewsDocument>> {
    let mut docs = Vec::with_capacity(raw.len());
    for article in raw {
        match clean_document(article) {
            Ok(d) => docs.push(d),
            Err(e) => run.warn(format!("clean: skipped {}: {e}", article.doc_id)),
        }
    }
    if docs.is_empty() {
        bail!("no document survived cleaning");
    }
    Ok(docs)
}

pub fn clean_cmd(run: &mut Run) -> anyhow::Result<()> {
    let path = run.config.require(&run.config.paths.raw, "raw")?;
    let raw: Vec<RawArticle> = load_input(run, &path)?;
    let docs = clean(run, &raw)?;
    save_jsonl(run.output("cleaned.jsonl")?, &docs)?;
    Ok(())
}

// ---- sample

fn sample(run: &mut Run, pool: &[NewsDocument], prefix: &str) -> anyhow::Result<SampleOutcome> {
    let outcome = sample_batch(pool, &run.config.sample)?;
    for w in &outcome.warnings {
        run.warn(format!("sample: {w}"));
    }
    save_jsonl(run.output(&format!("{prefix}sampled.jsonl"))?, &outcome.documents)?;
    write_json(&run.output(&format!("{prefix}sample_steps.json"))?, &outcome.steps)?;
    Ok(outcome)
}

pub fn sample_cmd(run: &mut Run) -> anyhow::Result<()> {
    let path = run.config.require(&run.config.paths.corpus, "corpus")?;
    let pool: Vec<NewsDocument> = load_input(run, &path)?;
    sample(run, &pool, "")?;
    Ok(())
}

// ---- simulate

fn simulate(
    run: &mut Run,
    docs: &[NewsDocument],
    latent: Option<&BTreeMap<String, Latent>>,
    prefix: &str,
) -> anyhow::Result<SimulatedAnnotations> {
    let s = &run.config.simulate;
    let mut params = s.params.clone();
    if let Some(latent) = latent {
        for d in docs {
            if let Some(l) = latent.get(&d.doc_id) {
                params.latent_means.entry(d.doc_id.clone()).or_insert(*l);
            }
        }
    }
    let sim = simulate_annotations(docs, &catalog(), s.participants, s.labels_per_doc, &params, run.config.seed)?;
    save_jsonl(run.output(&format!("{prefix}annotations.jsonl"))?, &sim.records)?;
    save_jsonl(run.output(&format!("{prefix}participants.jsonl"))?, &sim.participants)?;
    Ok(sim)
}

pub fn simulate_cmd(run: &mut Run) -> anyhow::Result<()> {
    let path = run.config.require(&run.config.paths.corpus, "corpus")?;
    let docs: Vec<NewsDocument> = load_input(run, &path)?;
    simulate(run, &docs, None, "")?;
    Ok(())
}

// ---- aggregate

fn aggregate(run: &mut Run, records: &[AnnotationRecord], prefix: &str) -> anyhow::Result<(Vec<PerceptionProfile>, Option<f64>)> {
    let catalog = catalog();
    let profiles = article_profiles(records, &catalog, true)?;
    save_jsonl(run.output(&format!("{prefix}profiles.jsonl"))?, &profiles)?;
    let mut tables = Vec::new();
    for d in DimensionId::ALL {
        match rank_scores(records, &catalog, d) {
            Ok(table) => {
                if !table.converged {
                    run.warn(format!("aggregate: rank scores for {d} did not converge"));
                }
                if !table.excluded.is_empty() {
                    run.warn(format!("aggregate: {} documents outside the comparison graph for {d}", table.excluded.len()));
                }
                table.write_csv(csv_file(&run.output(&format!("{prefix}rank/{}.csv", d.name()))?)?)?;
                tables.push(table);
            }
            Err(e) => run.warn(format!("aggregate: no rank scores for {d}: {e}")),
        }
    }
    let mut mean_r = None;
    if !tables.is_empty() {
        match rating_rank_agreement(&profiles, &tables) {
            Ok(agreement) => {
                let mut w = csv::Writer::from_writer(csv_file(&run.output(&format!("{prefix}rating_rank_agreement.csv"))?)?);
                w.write_record(["dimension", "pearson_r"])?;
                for (d, r) in &agreement {
                    w.write_record([d.name().to_string(), format!("{r}")])?;
                }
                w.flush()?;
                mean_r = Some(agreement.values().sum::<f64>() / agreement.len() as f64);
            }
            Err(e) => run.warn(format!("aggregate: rating-rank agreement unavailable: {e}")),
        }
    }
    Ok((profiles, mean_r))
}

pub fn aggregate_cmd(run: &mut Run) -> anyhow::Result<()> {
    let path = run.config.require(&run.config.paths.annotations, "annotations")?;
    let records: Vec<AnnotationRecord> = load_input(run, &path)?;
    aggregate(run, &records, "")?;
    Ok(())
}

// ---- reliability

fn reliability(run: &mut Run, records: &[AnnotationRecord], prefix: &str) -> anyhow::Result<ReliabilityReport> {
    let report = reliability_report(records, &catalog(), run.config.reliability_metric)?;
    report.write_csv(csv_file(&run.output(&format!("{prefix}reliability.csv"))?)?)?;
    write_json(&run.output(&format!("{prefix}reliability.json"))?, &report)?;
    Ok(report)
}

pub fn reliability_cmd(run: &mut Run) -> anyhow::Result<()> {
    let path = run.config.require(&run.config.paths.annotations, "annotations")?;
    let records: Vec<AnnotationRecord> = load_input(run, &path)?;
    reliability(run, &records, "")?;
    Ok(())
}

// ---- split

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitIds {
    pub seed: u64,
    pub ratios: [f64; 3],
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
}

fn labeled(run: &mut Run, docs: &[NewsDocument], records: &[AnnotationRecord]) -> anyhow::Result<Vec<LabeledDoc>> {
    let labels = build_labels(records, &catalog())?;
    for w in &labels.warnings {
        run.warn(format!("labels: {w}"));
    }
    Ok(label_documents(docs, &labels))
}

fn split(run: &mut Run, docs: &[LabeledDoc], prefix: &str) -> anyhow::Result<DatasetSplit> {
    let ratios = run.config.train.split_ratios;
    let split = split_dataset(docs, ratios, run.config.seed)?;
    let ids = |d: &[LabeledDoc]| d.iter().map(|l| l.doc.doc_id.clone()).collect();
    let record = SplitIds {
        seed: run.config.seed,
        ratios,
        train: ids(&split.train),
        validation: ids(&split.validation),
        test: ids(&split.test),
    };
    write_json(&run.output(&format!("{prefix}{SPLIT_FILE}"))?, &record)?;
    Ok(split)
}

fn labeled_inputs(run: &mut Run) -> anyhow::Result<Vec<LabeledDoc>> {
    let corpus = run.config.require(&run.config.paths.corpus, "corpus")?;
    let annotations = run.config.require(&run.config.paths.annotations, "annotations")?;
    let docs: Vec<NewsDocument> = load_input(run, &corpus)?;
    let records: Vec<AnnotationRecord> = load_input(run, &annotations)?;
    labeled(run, &docs, &records)
}

pub fn split_cmd(run: &mut Run) -> anyhow::Result<()> {
    let docs = labeled_inputs(run)?;
    split(run, &docs, "")?;
    Ok(())
}

// ---- train / evaluate

fn train_model(run: &mut Run, split: &DatasetSplit, prefix: &str) -> anyhow::Result<ScorerModel> {
    let encoder = run.config.backend_spec()?.instantiate()?;
    let model = train(split, &run.config.train, encoder, &catalog())?;
    save_model(&model, run.output(&format!("{prefix}model"))?)?;
    Ok(model)
}

pub fn train_cmd(run: &mut Run) -> anyhow::Result<()> {
    let docs = labeled_inputs(run)?;
    let split = split(run, &docs, "")?;
    train_model(run, &split, "")?;
    Ok(())
}

fn evaluation(run: &mut Run, model: &ScorerModel, docs: &[LabeledDoc], prefix: &str) -> anyhow::Result<EvaluationReport> {
    let report = evaluate(model, docs, &catalog())?;
    report.write_csv(csv_file(&run.output(&format!("{prefix}evaluation.csv"))?)?)?;
    Ok(report)
}

fn input_model(run: &mut Run) -> anyhow::Result<ScorerModel> {
    let dir = run.config.require(&run.config.paths.model_dir, "model_dir")?;
    run.input(&dir)?;
    Ok(load_model(&dir, &catalog())?)
}

pub fn evaluate_cmd(run: &mut Run) -> anyhow::Result<()> {
    let model = input_model(run)?;
    let mut docs = labeled_inputs(run)?;
    if let Some(path) = run.config.paths.split.clone() {
        run.input(&path)?;
        let ids: SplitIds = serde_json::from_str(&std::fs::read_to_string(&path)?)
            .with_context(|| format!("parsing {}", path.display()))?;
        let test: BTreeSet<String> = ids.test.into_iter().collect();
        docs.retain(|d| test.contains(&d.doc.doc_id));
    }
    evaluation(run, &model, &docs, "")?;
    Ok(())
}

// ---- score

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScoredDoc {
    doc_id: String,
    statement_scores: BTreeMap<String, f64>,
    profile: BTreeMap<DimensionId, f64>,
}

impl JsonlRecord for ScoredDoc {}

pub fn score_cmd(run: &mut Run, text: Option<&str>) -> anyhow::Result<()> {
    let model = input_model(run)?;
    let catalog = catalog();
    let scored = match text {
        Some(t) => {
            let (s, p) = predict_text(&model, "text", t, &catalog)?;
            vec![ScoredDoc { doc_id: s.doc_id, statement_scores: s.scores, profile: p.scores }]
        }
        None => {
            let corpus = run.config.require(&run.config.paths.corpus, "corpus")?;
            let docs: Vec<NewsDocument> = load_input(run, &corpus)?;
            docs.iter()
                .map(|d| {
                    let (s, p) = predict(&model, d, &catalog)?;
                    Ok(ScoredDoc { doc_id: s.doc_id, statement_scores: s.scores, profile: p.scores })
                })
                .collect::<percept_core::Result<Vec<_>>>()?
        }
    };
    save_jsonl(run.output("scores.jsonl")?, &scored)?;
    Ok(())
}

// ---- studies

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerceptionSummaryRow {
    pub dimension: DimensionId,
    pub n: usize,
    pub n_documents: usize,
    pub random_intercept_variance: f64,
    pub residual_variance: f64,
    pub log_likelihood: f64,
    pub converged: bool,
    pub daily_vs_never: Option<f64>,
    pub warnings: Vec<String>,
}

fn study_perception(
    run: &mut Run,
    records: &[AnnotationRecord],
    participants: &[ParticipantProfile],
    docs: &[NewsDocument],
    prefix: &str,
) -> anyhow::Result<Vec<PerceptionSummaryRow>> {
    let catalog = catalog();
    let mut rows = Vec::new();
    for d in run.config.study.dimensions.clone() {
        let fit = perception_outcome_study(records, participants, docs, &catalog, d)?;
        fit.write_csv(csv_file(&run.output(&format!("{prefix}perception/{}.csv", d.name()))?)?)?;
        rows.push(PerceptionSummaryRow {
            dimension: d,
            n: fit.fixed.n,
            n_documents: fit.n_groups,
            random_intercept_variance: fit.random_intercept_variance,
            residual_variance: fit.fixed.residual_variance,
            log_likelihood: fit.log_likelihood,
            converged: fit.converged,
            daily_vs_never: categorical_contrast(&fit, FREQUENCY_VARIABLE, "daily", "never"),
            warnings: fit.warnings.clone(),
        });
    }
    write_json(&run.output(&format!("{prefix}perception_summary.json"))?, &rows)?;
    Ok(rows)
}

pub fn study_perception_cmd(run: &mut Run) -> anyhow::Result<()> {
    let annotations = run.config.require(&run.config.paths.annotations, "annotations")?;
    let participants = run.config.require(&run.config.paths.participants, "participants")?;
    let corpus = run.config.require(&run.config.paths.corpus, "corpus")?;
    let records: Vec<AnnotationRecord> = load_input(run, &annotations)?;
    let people: Vec<ParticipantProfile> = load_input(run, &participants)?;
    let docs: Vec<NewsDocument> = load_input(run, &corpus)?;
    study_perception(run, &records, &people, &docs, "")?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EngagementSummary {
    pub retained: Vec<DimensionId>,
    pub removals: Vec<percept_core::stats::Removal>,
    pub prune_threshold: f64,
    pub n_rows: usize,
    pub n_urls: usize,
    pub dimension_means: BTreeMap<DimensionId, f64>,
    pub metadata: percept_core::analysis::DatasetMetadata,
    pub log: Vec<String>,
    /// `exp(β) - 1` per retained dimension, per outcome.
    pub percent_change: BTreeMap<String, BTreeMap<DimensionId, f64>>,
}

fn study_engagement(
    run: &mut Run,
    posts: &[SocialPost],
    model: &ScorerModel,
    prefix: &str,
) -> anyhow::Result<(EngagementSummary, Vec<EngagementPredictor>)> {
    let groups = build_url_groups(posts);
    let dataset = score_posts(&groups, model, &catalog())?;
    let study = engagement_study(&dataset, run.config.study.vif_threshold)?;
    for (outcome, fit) in &study.outcomes {
        fit.write_csv(csv_file(&run.output(&format!("{prefix}engagement/{outcome}.csv"))?)?)?;
        for w in &fit.warnings {
            run.warn(format!("study-engagement {outcome}: {w}"));
        }
    }
    let predictors = fit_engagement_predictors(&study)?;
    write_json(&run.output(&format!("{prefix}{PREDICTORS_FILE}"))?, &predictors)?;
    let summary = EngagementSummary {
        retained: study.retained.clone(),
        removals: study.pruning.removals.clone(),
        prune_threshold: study.prune_threshold,
        n_rows: study.n_rows,
        n_urls: study.n_urls,
        dimension_means: study.dimension_means.clone(),
        metadata: dataset.metadata.clone(),
        log: study.log.clone(),
        percent_change: study
            .outcomes
            .iter()
            .map(|(o, fit)| {
                let pc = study
                    .retained
                    .iter()
                    .filter_map(|d| fit.estimate(d.name()).map(|b| (*d, percent_change(b))))
                    .collect();
                (o.clone(), pc)
            })
            .collect(),
    };
    write_json(&run.output(&format!("{prefix}engagement_summary.json"))?, &summary)?;
    Ok((summary, predictors))
}

pub fn study_engagement_cmd(run: &mut Run) -> anyhow::Result<()> {
    let model = input_model(run)?;
    let path = run.config.require(&run.config.paths.posts, "posts")?;
    let posts: Vec<SocialPost> = load_input(run, &path)?;
    study_engagement(run, &posts, &model, "")?;
    Ok(())
}

// ---- pipeline

/// Headline numbers of a pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub cleaned: usize,
    pub sampled: usize,
    pub sample_steps: Vec<usize>,
    pub annotation_records: usize,
    pub mean_k_alpha: Option<f64>,
    pub mean_rating_rank_r: Option<f64>,
    pub split_sizes: [usize; 3],
    pub best_epoch: usize,
    pub test_mean_r: Option<f64>,
    pub model_version: String,
    pub engagement_retained: Vec<DimensionId>,
    pub importance_percent_change_log_score: Option<f64>,
}

pub fn pipeline(run: &mut Run, synthetic: bool) -> anyhow::Result<PipelineSummary> {
    let mut latent = None;
    let (raw, records, participants, posts) = if synthetic {
        let pool = synthetic_pool(&run.config.synthetic.pool, run.config.seed);
        save_jsonl(run.output("inputs/raw.jsonl")?, &pool.articles)?;
        let engagement = synthetic_engagement(&run.config.synthetic.engagement, run.config.seed);
        save_jsonl(run.output("inputs/posts.jsonl")?, &engagement.posts)?;
        latent = Some(pool.latent);
        (pool.articles, None, None, engagement.posts)
    } else {
        let raw_path = run.config.require(&run.config.paths.raw, "raw")?;
        let ann = run.config.require(&run.config.paths.annotations, "annotations")?;
        let ppl = run.config.require(&run.config.paths.participants, "participants")?;
        let posts_path = run.config.require(&run.config.paths.posts, "posts")?;
        let raw: Vec<RawArticle> = load_input(run, &raw_path)?;
        let records: Vec<AnnotationRecord> = load_input(run, &ann)?;
        let people: Vec<ParticipantProfile> = load_input(run, &ppl)?;
        let posts: Vec<SocialPost> = load_input(run, &posts_path)?;
        (raw, Some(records), Some(people), posts)
    };

    let cleaned = clean(run, &raw)?;
    save_jsonl(run.output("clean/cleaned.jsonl")?, &cleaned)?;
    let sampled = sample(run, &cleaned, "sample/")?;
    let docs = sampled.documents;

    let (records, participants) = match (records, participants) {
        (Some(r), Some(p)) => (r, p),
        _ => {
            let sim = simulate(run, &docs, latent.as_ref(), "simulate/")?;
            (sim.records, sim.participants)
        }
    };
    let (_, mean_rating_rank_r) = aggregate(run, &records, "aggregate/")?;
    let report = reliability(run, &records, "reliability/")?;
    let labeled_docs = labeled(run, &docs, &records)?;
    let split = split(run, &labeled_docs, "split/")?;
    let model = train_model(run, &split, "train/")?;
    let eval = evaluation(run, &model, &split.test, "evaluate/")?;
    study_perception(run, &records, &participants, &docs, "study/")?;
    let (engagement, predictors) = study_engagement(run, &posts, &model, "study/")?;
    // Served alongside the model by `serve --model <run>/train/model`.
    write_json(&run.output(&format!("train/model/{PREDICTORS_FILE}"))?, &predictors)?;

    let summary = PipelineSummary {
        cleaned: cleaned.len(),
        sampled: docs.len(),
        sample_steps: sampled.steps.iter().map(|s| s.taken).collect(),
        annotation_records: records.len(),
        mean_k_alpha: report.mean_k_alpha(),
        mean_rating_rank_r,
        split_sizes: split.sizes(),
        best_epoch: model.metadata.best_epoch,
        test_mean_r: eval.overall,
        model_version: model.model_version().to_string(),
        engagement_retained: engagement.retained.clone(),
        importance_percent_change_log_score: engagement
            .percent_change
            .get(LOG_SCORE)
            .and_then(|m| m.get(&DimensionId::Importance))
            .copied(),
    };
    write_json(&run.output("summary.json")?, &summary)?;
    Ok(summary)
}

// ---- serve

pub fn serve(config: &crate::config::RunConfig) -> anyhow::Result<()> {
    let service = ServiceConfig {
        max_body_bytes: config.service.max_body_bytes,
        max_text_bytes: config.service.max_text_bytes,
        ..ServiceConfig::default()
    };
    let state = AppState::new(service, catalog());
    let model_dir = config.paths.model_dir.clone().or_else(|| std::env::var_os(MODEL_ENV).map(Into::into));
    match &model_dir {
        Some(dir) => {
            state.load_from(dir, config.paths.predictors.as_deref())?;
            eprintln!("loaded model from {}", dir.display());
        }
        None => eprintln!("no model configured; /v1/score returns 503 until /v1/model/reload"),
    }
    let addr = SocketAddr::from(([0, 0, 0, 0], config.service.port));
    eprintln!("listening on http://{addr}");
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(percept_service::serve(addr, state))?;
    Ok(())
}
