use std::sync::OnceLock;

use percept_core::DimensionId;
use percept_wasm::{agreement, Studio, Variant};

fn studio() -> &'static Studio {
    static STUDIO: OnceLock<Studio> = OnceLock::new();
    STUDIO.get_or_init(|| Studio::train(4).unwrap())
}

fn variant(label: &str, text: &str) -> Variant {
    Variant { label: label.into(), text: text.into() }
}

#[test]
fn score_is_bounded_and_complete() {
    let s = studio().score("A surprising and important new vaccine study").unwrap();
    assert_eq!(s.statement_scores.len(), 25);
    assert_eq!(s.profile.len(), 12);
    assert!(s.profile.values().all(|v| (1.0..=5.0).contains(v)));
    assert!(studio().score("   ").is_err());
}

#[test]
fn training_is_reproducible() {
    let again = Studio::train(4).unwrap();
    assert_eq!(again.model_version(), studio().model_version());
}

#[test]
fn compare_reports_deltas_against_the_first_variant() {
    let out = studio()
        .compare(&[
            variant("plain", "Researchers report results of a study"),
            variant("framed", "A fun, surprising discovery could benefit millions"),
            variant("same", "Researchers report results of a study"),
        ])
        .unwrap();
    assert_eq!(out.variants.len(), 3);
    assert_eq!(out.deltas.len(), 2);
    assert!(out.deltas.iter().all(|d| d.baseline == "plain"));
    let same = &out.deltas[1];
    assert!(same.dimensions.values().all(|d| d.abs() < 1e-12));
    assert!(same.engagement.values().all(|e| e.delta.abs() < 1e-12));
    let framed = &out.deltas[0];
    assert_eq!(framed.dimensions.len(), 12);
    assert!(framed.dimensions.contains_key(&DimensionId::Fun));
    assert!(!framed.engagement.is_empty());

    assert!(studio().compare(&[variant("a", "x")]).is_err());
    assert!(studio().compare(&[variant("a", "x"), variant("a", "y")]).is_err());
}

#[test]
fn agreement_on_small_grids() {
    let perfect = agreement(vec![vec![Some(1), Some(1)], vec![Some(5), Some(5)]]).unwrap();
    assert_eq!(perfect.interval, Some(1.0));
    assert_eq!(perfect.pairable_values, 4);
    let constant = agreement(vec![vec![Some(3), Some(3)], vec![Some(3), None]]).unwrap();
    assert_eq!(constant.interval, None);
    assert!(agreement(vec![vec![Some(7), Some(1)]]).is_err());
    assert!(agreement(vec![vec![Some(1), None]]).is_err());
}
