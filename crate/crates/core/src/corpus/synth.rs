//! Synthetic article pools with known latent perception profiles.
//!
//! Texts are assembled from dimension cue words whose frequency tracks the
//! latent profile, so a text model has real signal to learn.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{OutletType, RawArticle};
use crate::catalog::DimensionId;

/// Latent dimension means indexed by [`DimensionId::index`].
pub type Latent = [f64; 12];

pub const DOMAINS: [&str; 8] = [
    "Medicine",
    "Biology",
    "Physics",
    "Social Science",
    "Humanities",
    "Engineering",
    "Earth Science",
    "Psychology",
];

const OUTLETS: [(&str, OutletType); 9] = [
    ("Daily Chronicle", OutletType::General),
    ("Metro Tribune", OutletType::General),
    ("Evening Courier", OutletType::General),
    ("University Newsroom", OutletType::PressRelease),
    ("Institute Press Office", OutletType::PressRelease),
    ("Research Council Wire", OutletType::PressRelease),
    ("Lab Notes Blog", OutletType::SciTech),
    ("Frontier Science Weekly", OutletType::SciTech),
    ("Circuit and Cell", OutletType::SciTech),
];

const AUTHORS: [&str; 6] = ["Jordan Reyes", "Sam Okafor", "Priya Natarajan", "Lee Walsh", "Mina Cho", "Alex Brandt"];
const CITIES: [&str; 6] = ["Boston", "Leeds", "Chicago", "Bristol", "Denver", "Glasgow"];

/// Cue words raising (first) or lowering (second) each dimension.
pub(crate) fn cues(d: DimensionId) -> (&'static [&'static str], &'static [&'static str]) {
    use DimensionId::*;
    match d {
        Newsworthiness => (&["landmark", "announced", "milestone", "unveiled"], &["routine", "incremental"]),
        Understandability => (&["simply", "everyday", "clearly", "plainly"], &["convoluted", "opaque"]),
        Expertise => (&["spectroscopy", "eigenvalue", "phosphorylation", "heteroskedastic"], &["anyone", "familiar"]),
        Importance => (&["urgent", "crucial", "lifesaving", "critical"], &["trivial", "niche"]),
        Fun => (&["quirky", "playful", "delightful", "whimsical"], &["dry", "tedious"]),
        Surprisingness => (&["unexpected", "astonishing", "counterintuitive", "startling"], &["predictable", "expected"]),
        Controversy => (&["contested", "divisive", "disputed", "polarizing"], &["consensus", "uncontroversial"]),
        Exaggeration => (&["miracle", "revolutionary", "cure-all", "game-changer"], &["modest", "tentative"]),
        Interestingness => (&["fascinating", "intriguing", "captivating", "curious"], &["bland", "uneventful"]),
        Benefit => (&["helps", "improves", "affordable", "patients"], &["useless", "impractical"]),
        Sharing => (&["viral", "share-worthy", "talked-about", "buzz"], &["obscure", "forgettable"]),
        Reading => (&["readable", "engaging", "must-read", "gripping"], &["skimmable", "skippable"]),
    }
}

const TOPIC_WORDS: [&[&str]; 8] = [
    &["clinical", "trial", "vaccine", "dose", "hospital", "therapy"],
    &["gene", "cell", "species", "protein", "ecosystem", "enzyme"],
    &["particle", "quantum", "laser", "galaxy", "magnet", "orbit"],
    &["survey", "households", "policy", "voters", "community", "income"],
    &["archive", "manuscript", "history", "language", "literature", "museum"],
    &["bridge", "battery", "robot", "sensor", "turbine", "circuit"],
    &["climate", "glacier", "ocean", "rainfall", "soil", "volcano"],
    &["memory", "behavior", "stress", "sleep", "emotion", "attention"],
];

const FILLER: [&str; 12] = [
    "researchers", "study", "found", "team", "results", "data", "new", "report", "scientists", "analysis", "suggests",
    "paper",
];

/// Clamps into the Likert range with a small margin.
fn clamp_latent(x: f64) -> f64 {
    x.clamp(1.0, 5.0)
}

/// Draws a latent profile with correlated dimensions.
pub fn draw_latent(rng: &mut impl Rng, domain_index: usize) -> Latent {
    let z = Normal::new(0.0, 1.0).expect("unit normal");
    let appeal = 0.6 * z.sample(rng);
    let difficulty = 0.5 * z.sample(rng);
    let mut u = || z.sample(rng);
    let mut l = [3.0; 12];
    use DimensionId::*;
    l[Newsworthiness.index()] += 0.8 * appeal + 0.3 * u();
    l[Understandability.index()] += -0.6 * difficulty + 0.3 * u();
    l[Expertise.index()] += 0.7 * difficulty + 0.3 * u();
    l[Importance.index()] += 0.5 * appeal + 0.5 * u();
    l[Fun.index()] += 0.4 * appeal - 0.2 * difficulty + 0.5 * u();
    l[Surprisingness.index()] += 0.5 * u();
    l[Controversy.index()] += 0.5 * u();
    l[Exaggeration.index()] += 0.2 * appeal + 0.5 * u();
    l[Interestingness.index()] += 0.8 * appeal + 0.3 * u();
    l[Benefit.index()] += 0.6 * appeal + 0.4 * u();
    l[Sharing.index()] += 0.7 * appeal + 0.3 * u();
    l[Reading.index()] += 0.7 * appeal + 0.3 * u();
    // Domain flavor: applied fields read as more important, physical sciences as harder.
    match DOMAINS[domain_index % DOMAINS.len()] {
        "Medicine" => l[Importance.index()] += 0.3,
        "Physics" => l[Expertise.index()] += 0.3,
        "Humanities" => l[Fun.index()] += 0.2,
        _ => {}
    }
    l.map(clamp_latent)
}

/// Composes a title and body whose cue-word content tracks `latent`.
pub fn compose_text(latent: &Latent, domain_index: usize, rng: &mut impl Rng, sentences: usize) -> (String, String) {
    let topics = TOPIC_WORDS[domain_index % TOPIC_WORDS.len()];
    let mut words_by_sentence: Vec<Vec<&str>> = vec![Vec::new(); sentences.max(1)];
    for d in DimensionId::ALL {
        let (up, down) = cues(d);
        let level = latent[d.index()] - 3.0;
        let n_up = (1.2 * level + 1.2 + rng.random_range(-0.5..0.5)).round().max(0.0) as usize;
        let n_down = (-1.2 * level + rng.random_range(-0.5..0.5)).round().max(0.0) as usize;
        for _ in 0..n_up {
            let s = rng.random_range(0..words_by_sentence.len());
            words_by_sentence[s].push(up.choose(rng).expect("non-empty cues"));
        }
        for _ in 0..n_down {
            let s = rng.random_range(0..words_by_sentence.len());
            words_by_sentence[s].push(down.choose(rng).expect("non-empty cues"));
        }
    }
    let mut body = Vec::new();
    for mut words in words_by_sentence {
        for _ in 0..4 {
            words.push(topics.choose(rng).expect("topics"));
            words.push(FILLER.choose(rng).expect("filler"));
        }
        shuffle(&mut words, rng);
        let mut s = words.join(" ");
        if let Some(first) = s.get(0..1) {
            s.replace_range(0..1, &first.to_uppercase());
        }
        s.push('.');
        body.push(s);
    }

    // Title: the two most pronounced dimensions plus topic words.
    let mut ranked: Vec<DimensionId> = DimensionId::ALL.to_vec();
    ranked.sort_by(|a, b| {
        (latent[b.index()] - 3.0)
            .abs()
            .total_cmp(&(latent[a.index()] - 3.0).abs())
            .then(a.cmp(b))
    });
    let mut title_words: Vec<&str> = Vec::new();
    for d in ranked.iter().take(2) {
        let (up, down) = cues(*d);
        let pool = if latent[d.index()] >= 3.0 { up } else { down };
        title_words.push(pool.choose(rng).expect("cues"));
    }
    title_words.push(topics.choose(rng).expect("topics"));
    title_words.push(topics.choose(rng).expect("topics"));
    title_words.push(FILLER.choose(rng).expect("filler"));
    shuffle(&mut title_words, rng);
    let mut title = title_words.join(" ");
    if let Some(first) = title.get(0..1) {
        title.replace_range(0..1, &first.to_uppercase());
    }
    (title, body.join(" "))
}

fn shuffle<T>(items: &mut [T], rng: &mut impl Rng) {
    use rand::seq::SliceRandom;
    items.shuffle(rng);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PoolSpec {
    /// Papers in each of the three coverage settings.
    pub papers_per_setting: usize,
    /// Papers covered by a single outlet type only.
    pub single_type_papers: usize,
    /// Papers covered in every outlet type by many stories.
    pub popular_papers: usize,
    pub popular_articles: usize,
    pub max_articles_per_category: usize,
    pub sentences: usize,
}

impl Default for PoolSpec {
    fn default() -> Self {
        Self {
            papers_per_setting: 150,
            single_type_papers: 60,
            popular_papers: 3,
            popular_articles: 36,
            max_articles_per_category: 3,
            sentences: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticPool {
    pub articles: Vec<RawArticle>,
    /// Latent profile of every article, keyed by doc id.
    pub latent: BTreeMap<String, Latent>,
}

pub fn synthetic_pool(spec: &PoolSpec, seed: u64) -> SyntheticPool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let framing = Normal::new(0.0, 0.3).expect("framing noise");

    // (outlet types, article count per type) per paper
    let mut plans: Vec<Vec<(OutletType, usize)>> = Vec::new();
    let settings: [&[OutletType]; 3] = [
        &[OutletType::General, OutletType::PressRelease, OutletType::SciTech],
        &[OutletType::PressRelease, OutletType::SciTech],
        &[OutletType::PressRelease, OutletType::General],
    ];
    let max_per = spec.max_articles_per_category.max(1);
    for types in settings {
        for _ in 0..spec.papers_per_setting {
            plans.push(types.iter().map(|&t| (t, rng.random_range(1..=max_per))).collect());
        }
    }
    for i in 0..spec.single_type_papers {
        plans.push(vec![(OutletType::ALL[i % 3], rng.random_range(1..=max_per))]);
    }
    for _ in 0..spec.popular_papers {
        let per = spec.popular_articles.div_ceil(3);
        plans.push(OutletType::ALL.iter().map(|&t| (t, per)).collect());
    }

    let mut articles = Vec::new();
    let mut latent = BTreeMap::new();
    for (p, plan) in plans.iter().enumerate() {
        let paper_id = format!("paper-{p:05}");
        let domain_index = p % DOMAINS.len();
        let paper_latent = draw_latent(&mut rng, domain_index);
        let coverage: usize = plan.iter().map(|(_, n)| n).sum();
        for &(outlet_type, n) in plan {
            let outlets: Vec<&str> = OUTLETS.iter().filter(|(_, t)| *t == outlet_type).map(|(name, _)| *name).collect();
            for _ in 0..n {
                let doc_id = format!("doc-{:06}", articles.len());
                let doc_latent = paper_latent.map(|m| clamp_latent(m + framing.sample(&mut rng)));
                let (title, text) = compose_text(&doc_latent, domain_index, &mut rng, spec.sentences);
                let outlet = *outlets.choose(&mut rng).expect("outlets");
                let author = *AUTHORS.choose(&mut rng).expect("authors");
                let city = *CITIES.choose(&mut rng).expect("cities");
                let date = format!("2021-{:02}-{:02}", rng.random_range(1..=12), rng.random_range(1..=28));
                let url = format!("https://{}.example/{}", outlet.to_lowercase().replace(' ', "-"), doc_id);
                let body = format!("By {author}\n{} ({city}, {date}) - {text} Read more at {url}", outlet);
                articles.push(RawArticle {
                    doc_id: doc_id.clone(),
                    title,
                    body,
                    outlet_name: outlet.to_string(),
                    author: author.to_string(),
                    publish_date: date,
                    city: city.to_string(),
                    urls: vec![url],
                    outlet_type,
                    science_domain: DOMAINS[domain_index].to_string(),
                    paper_id: paper_id.clone(),
                    coverage_count: coverage as u32,
                    extra: Default::default(),
                });
                latent.insert(doc_id, doc_latent);
            }
        }
    }
    SyntheticPool { articles, latent }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pool_is_deterministic() {
        let spec = PoolSpec { papers_per_setting: 5, ..Default::default() };
        assert_eq!(synthetic_pool(&spec, 1), synthetic_pool(&spec, 1));
        assert_ne!(synthetic_pool(&spec, 1).articles, synthetic_pool(&spec, 2).articles);
    }

    #[test]
    fn cue_words_track_latent() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut high = [3.0; 12];
        high[DimensionId::Importance.index()] = 5.0;
        let mut low = [3.0; 12];
        low[DimensionId::Importance.index()] = 1.0;
        let count = |text: &str| cues(DimensionId::Importance).0.iter().map(|w| text.matches(w).count()).sum::<usize>();
        let mut hi_total = 0;
        let mut lo_total = 0;
        for _ in 0..20 {
            let (t, b) = compose_text(&high, 0, &mut rng, 3);
            hi_total += count(&t) + count(&b);
            let (t, b) = compose_text(&low, 0, &mut rng, 3);
            lo_total += count(&t) + count(&b);
        }
        assert!(hi_total > lo_total + 40, "{hi_total} vs {lo_total}");
    }
}
