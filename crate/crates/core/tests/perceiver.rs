use std::sync::Arc;

use percept_core::corpus::synth::{compose_text, draw_latent, DOMAINS};
use percept_core::corpus::{NewsDocument, OutletType};
use percept_core::perceiver::{
    evaluate, load_model, predict, save_model, split_dataset, train, DatasetSplit, EncoderBackend, HashedNgramEncoder,
    LabeledDoc, StatementLabels, TrainConfig, Trainer,
};
use percept_core::{default_catalog, DimensionId, Error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn news(id: String, title: String, body: String, domain: usize) -> NewsDocument {
    NewsDocument {
        doc_id: id.clone(),
        title,
        body,
        outlet_type: OutletType::General,
        science_domain: DOMAINS[domain % DOMAINS.len()].to_string(),
        paper_id: format!("paper-{id}"),
        coverage_count: 1,
        extra: Default::default(),
    }
}

fn synthetic_docs(n: usize, seed: u64) -> Vec<NewsDocument> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let domain = i % DOMAINS.len();
            let latent = draw_latent(&mut rng, domain);
            let (title, body) = compose_text(&latent, domain, &mut rng, 4);
            news(format!("doc{i:04}"), title, body, domain)
        })
        .collect()
}

/// Labels that are an exact linear function of the encoder output, scaled into [1.5, 4.5].
fn linear_labels(docs: &[NewsDocument], encoder: &HashedNgramEncoder, seed: u64) -> Vec<LabeledDoc> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = encoder.width();
    let maps: Vec<Vec<f64>> = (0..25).map(|_| (0..width).map(|_| rng.sample(StandardNormal)).collect()).collect();
    let feats: Vec<Vec<f64>> = docs.iter().map(|d| encoder.encode(&d.input_text()).unwrap()).collect();
    let raw: Vec<Vec<f64>> = feats
        .iter()
        .map(|x| maps.iter().map(|u| u.iter().zip(x).map(|(a, b)| a * b).sum()).collect())
        .collect();
    let scale: Vec<f64> = (0..25).map(|k| raw.iter().map(|r: &Vec<f64>| r[k].abs()).fold(0.0, f64::max)).collect();
    docs.iter()
        .zip(&raw)
        .map(|(d, r)| LabeledDoc {
            doc: d.clone(),
            labels: StatementLabels {
                values: (0..25).map(|k| 3.0 + 1.5 * r[k] / scale[k]).collect(),
                mask: vec![true; 25],
            },
        })
        .collect()
}

fn overfit_split() -> DatasetSplit {
    let encoder = HashedNgramEncoder::default();
    let docs = linear_labels(&synthetic_docs(16, 11), &encoder, 12);
    DatasetSplit { train: docs.clone(), validation: docs.clone(), test: docs }
}

#[test]
fn overfits_linear_labels() {
    let catalog = default_catalog();
    let split = overfit_split();
    let config = TrainConfig { seed: 3, ..TrainConfig::default() };
    let model = train(&split, &config, Arc::new(HashedNgramEncoder::default()), &catalog).unwrap();
    let report = evaluate(&model, &split.train, &catalog).unwrap();
    let overall = report.overall.unwrap();
    assert!(overall >= 0.95, "train mean r {overall}: {report:?}");
}

#[test]
fn training_is_deterministic_and_prefix_stable() {
    let catalog = default_catalog();
    let split = overfit_split();
    let config = TrainConfig { seed: 9, ..TrainConfig::default() };
    let enc = || -> Arc<dyn EncoderBackend> { Arc::new(HashedNgramEncoder::default()) };
    let a = train(&split, &config, enc(), &catalog).unwrap();
    let b = train(&split, &config, enc(), &catalog).unwrap();
    assert_eq!(a.metadata.weights_sha256, b.metadata.weights_sha256);

    let one = train(&split, &TrainConfig { epochs: 1, ..config.clone() }, enc(), &catalog).unwrap();
    let mut trainer = Trainer::new(&split, &config, enc(), &catalog).unwrap();
    trainer.run_epoch().unwrap();
    let epoch1 = trainer.snapshot();
    for _ in 1..10 {
        trainer.run_epoch().unwrap();
    }
    assert_eq!(one.metadata.weights_sha256, epoch1.metadata.weights_sha256);
}

#[test]
fn selection_prefers_later_improvement() {
    let catalog = default_catalog();
    let split = overfit_split();
    let config = TrainConfig { seed: 1, epochs: 2, ..TrainConfig::default() };
    let mut trainer = Trainer::new(&split, &config, Arc::new(HashedNgramEncoder::default()), &catalog).unwrap();
    let e1 = trainer.run_epoch().unwrap();
    let e2 = trainer.run_epoch().unwrap();
    let best = trainer.best().unwrap();
    if e2.validation_mean_r.unwrap() > e1.validation_mean_r.unwrap() {
        assert_eq!(best.metadata.best_epoch, 2);
    } else {
        assert_eq!(best.metadata.best_epoch, 1);
    }
}

#[test]
fn masked_labels_do_not_affect_training() {
    let catalog = default_catalog();
    let mut split = overfit_split();
    for d in split.train.iter_mut().chain(split.validation.iter_mut()).step_by(3) {
        d.labels.mask[4] = false;
        d.labels.mask[20] = false;
    }
    let config = TrainConfig { seed: 2, ..TrainConfig::default() };
    let a = train(&split, &config, Arc::new(HashedNgramEncoder::default()), &catalog).unwrap();
    for d in split.train.iter_mut().chain(split.validation.iter_mut()) {
        for k in [4, 20] {
            if !d.labels.mask[k] {
                d.labels.values[k] = 1.0e3;
            }
        }
    }
    let b = train(&split, &config, Arc::new(HashedNgramEncoder::default()), &catalog).unwrap();
    assert_eq!(a.metadata.weights_sha256, b.metadata.weights_sha256);
}

#[test]
fn predictions_are_clamped_and_repeatable() {
    let catalog = default_catalog();
    let mut split = overfit_split();
    // Push labels out of range so the head learns to overshoot.
    for d in &mut split.train {
        d.labels.values.iter_mut().for_each(|v| *v = 3.0 + (*v - 3.0) * 4.0);
    }
    let config = TrainConfig { seed: 4, learning_rate: 0.1, ..TrainConfig::default() };
    let model = train(&split, &config, Arc::new(HashedNgramEncoder::default()), &catalog).unwrap();
    let raw_max = split
        .train
        .iter()
        .flat_map(|d| model.forward(&d.doc.input_text()).unwrap())
        .fold(f64::MIN, f64::max);
    assert!(raw_max > 5.0, "expected some overshoot, max raw {raw_max}");
    for d in synthetic_docs(40, 99).iter().chain(split.train.iter().map(|d| &d.doc)) {
        let (s1, p1) = predict(&model, d, &catalog).unwrap();
        let (s2, p2) = predict(&model, d, &catalog).unwrap();
        assert_eq!((&s1, &p1), (&s2, &p2));
        assert_eq!(s1.scores.len(), 25);
        assert!(s1.scores.values().all(|v| (1.0..=5.0).contains(v)));
        assert_eq!(p1.scores.len(), 12);
    }
}

#[test]
fn save_load_round_trip() {
    let catalog = default_catalog();
    let split = overfit_split();
    let model = train(&split, &TrainConfig { epochs: 3, ..TrainConfig::default() }, Arc::new(HashedNgramEncoder::default()), &catalog).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_model(&model, dir.path()).unwrap();
    let loaded = load_model(dir.path(), &catalog).unwrap();
    assert_eq!(loaded.metadata, model.metadata);
    for d in synthetic_docs(20, 5) {
        let (a, _) = predict(&model, &d, &catalog).unwrap();
        let (b, _) = predict(&loaded, &d, &catalog).unwrap();
        for (x, y) in a.scores.values().zip(b.scores.values()) {
            assert!((x - y).abs() <= 1e-6);
        }
    }

    let mut other = catalog.clone();
    other.statements[0].text.push('!');
    assert!(matches!(load_model(dir.path(), &other), Err(Error::CatalogMismatch { .. })));

    let weights = dir.path().join("weights.bin");
    let mut bytes = std::fs::read(&weights).unwrap();
    bytes.truncate(bytes.len() / 2);
    std::fs::write(&weights, bytes).unwrap();
    assert!(matches!(load_model(dir.path(), &catalog), Err(Error::ModelFormat(_))));
}

#[test]
fn predict_rejects_empty_text_and_foreign_catalog() {
    let catalog = default_catalog();
    let model = train(&overfit_split(), &TrainConfig { epochs: 1, ..TrainConfig::default() }, Arc::new(HashedNgramEncoder::default()), &catalog).unwrap();
    let empty = news("e".into(), String::new(), "   ".into(), 0);
    assert!(matches!(predict(&model, &empty, &catalog), Err(Error::EmptyContent(_))));
    let mut other = catalog.clone();
    other.version = "2.0".into();
    let d = synthetic_docs(1, 1).remove(0);
    assert!(matches!(predict(&model, &d, &other), Err(Error::CatalogMismatch { .. })));
}

#[test]
fn learns_signal_from_synthetic_annotations() {
    use percept_core::corpus::{simulate_annotations, GeneratorParams};
    use percept_core::perceiver::{build_labels, label_documents};
    let catalog = default_catalog();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut docs = Vec::new();
    let mut params = GeneratorParams::default();
    for i in 0..300 {
        let domain = i % DOMAINS.len();
        let latent = draw_latent(&mut rng, domain);
        let (title, body) = compose_text(&latent, domain, &mut rng, 4);
        let d = news(format!("doc{i:04}"), title, body, domain);
        params.latent_means.insert(d.doc_id.clone(), latent);
        docs.push(d);
    }
    let sim = simulate_annotations(&docs, &catalog, 40, 3, &params, 8).unwrap();
    let labels = build_labels(&sim.records, &catalog).unwrap();
    let split = split_dataset(&label_documents(&docs, &labels), [0.7, 0.1, 0.2], 8).unwrap();
    let model = train(&split, &TrainConfig::default(), Arc::new(HashedNgramEncoder::default()), &catalog).unwrap();
    let report = evaluate(&model, &split.test, &catalog).unwrap();
    assert!(report.overall.unwrap() > 0.3, "{report:?}");
    assert!(report.get(DimensionId::Interestingness).is_some());
}
