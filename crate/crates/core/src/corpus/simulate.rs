//! Synthetic annotation corpora: latent document means plus annotator bias,
//! background effects and rating noise, rounded onto the 1-5 scale.

use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::synth::Latent;
use super::{AnnotationRecord, Country, NewsDocument, NewsFrequency, ParticipantProfile, PoliticalItem};
use crate::catalog::StatementCatalog;
use crate::{Error, Result};

pub const GENDERS: [&str; 2] = ["female", "male"];
pub const AGE_BRACKETS: [&str; 4] = ["18-29", "30-44", "45-59", "60+"];
pub const EDUCATION_LEVELS: [&str; 3] = ["high_school", "college", "graduate"];

/// Shifts applied to every rating of an annotator based on their background.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct BackgroundEffects {
    /// Daily-vs-never difference, spread linearly over the frequency ladder.
    pub frequency_contrast: f64,
    /// Per point of trust above 3.
    pub trust_slope: f64,
    /// Per point above 3 on each political item.
    pub political_slopes: BTreeMap<PoliticalItem, f64>,
}

impl BackgroundEffects {
    pub fn shift(&self, p: &ParticipantProfile) -> f64 {
        let freq = self.frequency_contrast * p.science_news_frequency.ordinal() as f64 / 4.0;
        let trust = self.trust_slope * (f64::from(p.trust_in_science) - 3.0);
        let political: f64 = self
            .political_slopes
            .iter()
            .map(|(item, slope)| slope * (f64::from(p.political_attitudes.get(item).copied().unwrap_or(3)) - 3.0))
            .sum();
        freq + trust + political
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorParams {
    /// Latent dimension means per document; documents not listed draw
    /// `default_mean + N(0, doc_spread)` per dimension.
    pub latent_means: BTreeMap<String, Latent>,
    pub default_mean: f64,
    pub doc_spread: f64,
    pub annotator_bias_sd: f64,
    pub noise_sd: f64,
    /// Probability that any single rating is left blank.
    pub missing_rate: f64,
    pub background: BackgroundEffects,
    /// Statements rated uniformly at random, ignoring the latent means.
    pub uniform_statements: Vec<String>,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            latent_means: BTreeMap::new(),
            default_mean: 3.0,
            doc_spread: 0.6,
            annotator_bias_sd: 0.3,
            noise_sd: 0.8,
            missing_rate: 0.0,
            background: BackgroundEffects::default(),
            uniform_statements: Vec::new(),
        }
    }
}

impl GeneratorParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("noise_sd", self.noise_sd),
            ("annotator_bias_sd", self.annotator_bias_sd),
            ("doc_spread", self.doc_spread),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter(format!("{name} must be a finite non-negative scale, got {v}")));
            }
        }
        if !(0.0..1.0).contains(&self.missing_rate) {
            return Err(Error::InvalidParameter(format!("missing_rate {} outside [0, 1)", self.missing_rate)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedAnnotations {
    pub records: Vec<AnnotationRecord>,
    pub participants: Vec<ParticipantProfile>,
}

fn draw_participant(id: String, country: Country, rng: &mut ChaCha8Rng) -> ParticipantProfile {
    let trust_weights = [1, 2, 4, 5, 3];
    let mut trust = 1;
    let mut pick = rng.random_range(0..trust_weights.iter().sum::<u32>());
    for (i, w) in trust_weights.iter().enumerate() {
        if pick < *w {
            trust = i as u8 + 1;
            break;
        }
        pick -= w;
    }
    ParticipantProfile {
        annotator_id: id,
        gender: GENDERS.choose(rng).expect("genders").to_string(),
        age_bracket: AGE_BRACKETS.choose(rng).expect("ages").to_string(),
        education_level: EDUCATION_LEVELS.choose(rng).expect("education").to_string(),
        science_news_frequency: *NewsFrequency::ALL.choose(rng).expect("frequencies"),
        trust_in_science: trust,
        political_attitudes: PoliticalItem::ALL.iter().map(|&item| (item, rng.random_range(1..=5))).collect(),
        country,
        extra: Default::default(),
    }
}

/// Generates `labels_per_doc` annotation records per country for every
/// document, deterministically for a given seed.
pub fn simulate_annotations(
    docs: &[NewsDocument],
    catalog: &StatementCatalog,
    participants: usize,
    labels_per_doc: usize,
    params: &GeneratorParams,
    seed: u64,
) -> Result<SimulatedAnnotations> {
    params.validate()?;
    if labels_per_doc == 0 {
        return Err(Error::InvalidParameter("labels_per_doc must be at least 1".into()));
    }
    let us_count = participants.div_ceil(2);
    let uk_count = participants / 2;
    if uk_count < labels_per_doc {
        return Err(Error::InvalidParameter(format!(
            "{participants} participants cannot supply {labels_per_doc} distinct labels per country"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut profiles = Vec::with_capacity(participants);
    for i in 0..participants {
        let country = if i < us_count { Country::US } else { Country::UK };
        profiles.push(draw_participant(format!("p{i:05}"), country, &mut rng));
    }
    let biases: Vec<f64> = profiles
        .iter()
        .map(|_| params.annotator_bias_sd * gauss(&mut rng))
        .collect();
    let shifts: Vec<f64> = profiles.iter().map(|p| params.background.shift(p)).collect();

    // Each country deals from a deck reshuffled whenever it runs out, so
    // workloads stay balanced and annotators overlap across documents.
    let mut decks: Vec<Vec<usize>> = vec![(0..us_count).collect(), (us_count..participants).collect()];
    for d in &mut decks {
        d.shuffle(&mut rng);
    }
    let mut cursors = [0usize; 2];

    let mut records = Vec::with_capacity(docs.len() * labels_per_doc * 2);
    for doc in docs {
        let latent: Latent = match params.latent_means.get(&doc.doc_id) {
            Some(l) => *l,
            None => {
                let mut l = [0.0; 12];
                for v in &mut l {
                    *v = params.default_mean + params.doc_spread * gauss(&mut rng);
                }
                l
            }
        };
        for qi in 0..decks.len() {
            let mut chosen: Vec<usize> = Vec::with_capacity(labels_per_doc);
            while chosen.len() < labels_per_doc {
                if cursors[qi] == decks[qi].len() {
                    decks[qi].shuffle(&mut rng);
                    cursors[qi] = 0;
                }
                let who = decks[qi][cursors[qi]];
                cursors[qi] += 1;
                if !chosen.contains(&who) {
                    chosen.push(who);
                }
            }
            for who in chosen {
                let mut ratings = BTreeMap::new();
                for s in &catalog.statements {
                    let rating = if params.uniform_statements.contains(&s.id) {
                        rng.random_range(1..=5u8)
                    } else {
                        let value =
                            latent[s.dimension.index()] + biases[who] + shifts[who] + params.noise_sd * gauss(&mut rng);
                        let r = value.round().clamp(1.0, 5.0) as u8;
                        if s.reverse_coded {
                            6 - r
                        } else {
                            r
                        }
                    };
                    let dropped = params.missing_rate > 0.0 && rng.random_bool(params.missing_rate);
                    if !dropped {
                        ratings.insert(s.id.clone(), rating);
                    }
                }
                if ratings.is_empty() {
                    ratings.insert(catalog.statements[0].id.clone(), 3);
                }
                records.push(AnnotationRecord {
                    annotator_id: profiles[who].annotator_id.clone(),
                    doc_id: doc.doc_id.clone(),
                    ratings,
                    country: profiles[who].country,
                    extra: Default::default(),
                });
            }
        }
    }

    Ok(SimulatedAnnotations { records, participants: profiles })
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}
