//! Four-step balanced batch sampling: coverage settings, outlet types,
//! domain upsampling, popularity upsampling.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{NewsDocument, OutletType};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SampleConfig {
    pub papers_per_coverage_setting: usize,
    pub extra_per_outlet_type: usize,
    pub domain_upsample: BTreeMap<String, usize>,
    pub popularity_threshold: u32,
    pub popularity_upsample: usize,
    pub seed: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            papers_per_coverage_setting: 80,
            extra_per_outlet_type: 50,
            domain_upsample: BTreeMap::from([
                ("Social Science".to_string(), 50),
                ("Humanities".to_string(), 50),
                ("Engineering".to_string(), 100),
            ]),
            popularity_threshold: 30,
            popularity_upsample: 30,
            seed: 0,
        }
    }
}

impl SampleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.popularity_threshold < 1 {
            return Err(Error::InvalidConfig("popularity_threshold must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepCount {
    pub step: u8,
    pub name: String,
    pub requested: usize,
    pub taken: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub documents: Vec<NewsDocument>,
    pub steps: Vec<StepCount>,
    /// Quota deficits; sampling continues with whatever was available.
    pub warnings: Vec<String>,
}

/// Coverage settings in sampling order, with the outlet categories each one
/// draws an article from.
const COVERAGE_SETTINGS: [(&str, &[OutletType]); 3] = [
    ("all-three", &[OutletType::General, OutletType::PressRelease, OutletType::SciTech]),
    ("press-release+scitech", &[OutletType::PressRelease, OutletType::SciTech]),
    ("press-release+general", &[OutletType::PressRelease, OutletType::General]),
];

struct Selection<'a> {
    pool: &'a [NewsDocument],
    chosen: Vec<usize>,
    taken_ids: HashSet<&'a str>,
}

impl<'a> Selection<'a> {
    fn is_free(&self, i: usize) -> bool {
        !self.taken_ids.contains(self.pool[i].doc_id.as_str())
    }

    fn take(&mut self, i: usize) -> bool {
        if self.taken_ids.insert(self.pool[i].doc_id.as_str()) {
            self.chosen.push(i);
            true
        } else {
            false
        }
    }

    /// Draws up to `n` free documents matching `keep`; returns how many were taken.
    fn draw(&mut self, rng: &mut ChaCha8Rng, n: usize, keep: impl Fn(&NewsDocument) -> bool) -> usize {
        let mut seen = HashSet::new();
        let candidates: Vec<usize> = (0..self.pool.len())
            .filter(|&i| self.is_free(i) && keep(&self.pool[i]) && seen.insert(self.pool[i].doc_id.as_str()))
            .collect();
        let k = n.min(candidates.len());
        let mut taken = 0;
        for j in index::sample(rng, candidates.len(), k) {
            if self.take(candidates[j]) {
                taken += 1;
            }
        }
        taken
    }
}

pub fn sample_batch(pool: &[NewsDocument], config: &SampleConfig) -> Result<SampleOutcome> {
    config.validate()?;
    let domains: HashSet<&str> = pool.iter().map(|d| d.science_domain.as_str()).collect();
    for domain in config.domain_upsample.keys() {
        if !domains.contains(domain.as_str()) {
            return Err(Error::InvalidConfig(format!("domain `{domain}` is absent from the pool")));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut sel = Selection { pool, chosen: Vec::new(), taken_ids: HashSet::new() };
    let mut steps = Vec::new();
    let mut warnings = Vec::new();

    // Papers in first-appearance order with their articles per outlet type.
    let mut paper_order: Vec<&str> = Vec::new();
    let mut papers: HashMap<&str, BTreeMap<OutletType, Vec<usize>>> = HashMap::new();
    for (i, d) in pool.iter().enumerate() {
        let entry = papers.entry(d.paper_id.as_str()).or_insert_with(|| {
            paper_order.push(d.paper_id.as_str());
            BTreeMap::new()
        });
        entry.entry(d.outlet_type).or_default().push(i);
    }

    // Step 1: coverage settings.
    let mut step1_taken = 0;
    let mut step1_requested = 0;
    for (name, types) in COVERAGE_SETTINGS {
        let wanted: BTreeSet<OutletType> = types.iter().copied().collect();
        let eligible: Vec<&str> = paper_order
            .iter()
            .copied()
            .filter(|p| papers[p].keys().copied().collect::<BTreeSet<_>>() == wanted)
            .collect();
        step1_requested += config.papers_per_coverage_setting * types.len();
        let k = config.papers_per_coverage_setting.min(eligible.len());
        if k < config.papers_per_coverage_setting {
            warnings.push(format!(
                "step 1 ({name}): requested {} papers, pool has {}",
                config.papers_per_coverage_setting,
                eligible.len()
            ));
        }
        for j in index::sample(&mut rng, eligible.len(), k) {
            let by_type = &papers[eligible[j]];
            for t in types {
                let articles: Vec<usize> = by_type[t].iter().copied().filter(|&i| sel.is_free(i)).collect();
                if articles.is_empty() {
                    warnings.push(format!("step 1 ({name}): paper `{}` has no free {t} article", eligible[j]));
                    continue;
                }
                let pick = articles[index::sample(&mut rng, articles.len(), 1).index(0)];
                if sel.take(pick) {
                    step1_taken += 1;
                }
            }
        }
    }
    steps.push(StepCount {
        step: 1,
        name: "coverage settings".into(),
        requested: step1_requested,
        taken: step1_taken,
    });

    // Step 2: extra articles per outlet type.
    let mut step2_taken = 0;
    for t in OutletType::ALL {
        let taken = sel.draw(&mut rng, config.extra_per_outlet_type, |d| d.outlet_type == t);
        if taken < config.extra_per_outlet_type {
            warnings.push(format!(
                "step 2 ({t}): requested {}, took {taken}",
                config.extra_per_outlet_type
            ));
        }
        step2_taken += taken;
    }
    steps.push(StepCount {
        step: 2,
        name: "outlet types".into(),
        requested: config.extra_per_outlet_type * OutletType::ALL.len(),
        taken: step2_taken,
    });

    // Step 3: domain upsampling.
    let mut step3_taken = 0;
    for (domain, &n) in &config.domain_upsample {
        let taken = sel.draw(&mut rng, n, |d| &d.science_domain == domain);
        if taken < n {
            warnings.push(format!("step 3 ({domain}): requested {n}, took {taken}"));
        }
        step3_taken += taken;
    }
    steps.push(StepCount {
        step: 3,
        name: "domain upsampling".into(),
        requested: config.domain_upsample.values().sum(),
        taken: step3_taken,
    });

    // Step 4: popularity upsampling.
    let threshold = config.popularity_threshold;
    let step4_taken = sel.draw(&mut rng, config.popularity_upsample, |d| d.coverage_count > threshold);
    if step4_taken < config.popularity_upsample {
        warnings.push(format!(
            "step 4 (coverage > {threshold}): requested {}, took {step4_taken}",
            config.popularity_upsample
        ));
    }
    steps.push(StepCount {
        step: 4,
        name: "popularity upsampling".into(),
        requested: config.popularity_upsample,
        taken: step4_taken,
    });

    Ok(SampleOutcome {
        documents: sel.chosen.iter().map(|&i| pool[i].clone()).collect(),
        steps,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::synth::{synthetic_pool, PoolSpec};
    use crate::corpus::clean_document;

    fn pool(spec: &PoolSpec, seed: u64) -> Vec<NewsDocument> {
        synthetic_pool(spec, seed)
            .articles
            .iter()
            .map(|r| clean_document(r).unwrap())
            .collect()
    }

    #[test]
    fn default_counts_on_ample_pool() {
        let docs = pool(&PoolSpec::default(), 3);
        let out = sample_batch(&docs, &SampleConfig::default()).unwrap();
        let taken: Vec<usize> = out.steps.iter().map(|s| s.taken).collect();
        assert_eq!(taken, [560, 150, 200, 30]);
        assert!(out.warnings.is_empty(), "{:?}", out.warnings);
        assert_eq!(out.documents.len(), 940);
        let ids: HashSet<_> = out.documents.iter().map(|d| &d.doc_id).collect();
        assert_eq!(ids.len(), out.documents.len());
    }

    #[test]
    fn step_one_respects_setting_categories() {
        let docs = pool(&PoolSpec::default(), 4);
        let config = SampleConfig {
            extra_per_outlet_type: 0,
            domain_upsample: BTreeMap::new(),
            popularity_upsample: 0,
            ..SampleConfig::default()
        };
        let out = sample_batch(&docs, &config).unwrap();
        assert_eq!(out.documents.len(), 560);
        // every sampled paper contributes one article per category of its setting
        let mut by_paper: BTreeMap<&str, Vec<OutletType>> = BTreeMap::new();
        for d in &out.documents {
            by_paper.entry(&d.paper_id).or_default().push(d.outlet_type);
        }
        for types in by_paper.values() {
            let set: BTreeSet<_> = types.iter().copied().collect();
            assert_eq!(set.len(), types.len());
            assert!(set.contains(&OutletType::PressRelease) || set.len() == 3);
        }
        assert_eq!(by_paper.len(), 240);
    }

    #[test]
    fn deterministic_per_seed() {
        let docs = pool(&PoolSpec::default(), 5);
        let a = sample_batch(&docs, &SampleConfig { seed: 9, ..Default::default() }).unwrap();
        let b = sample_batch(&docs, &SampleConfig { seed: 9, ..Default::default() }).unwrap();
        let c = sample_batch(&docs, &SampleConfig { seed: 10, ..Default::default() }).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.documents, c.documents);
    }

    #[test]
    fn small_pool_reports_deficits() {
        let spec = PoolSpec { papers_per_setting: 10, single_type_papers: 5, popular_papers: 0, ..PoolSpec::default() };
        let docs = pool(&spec, 1);
        let out = sample_batch(&docs, &SampleConfig::default()).unwrap();
        assert!(!out.warnings.is_empty());
        assert!(out.steps[0].taken < 560);
    }

    #[test]
    fn absent_domain_is_config_error() {
        let docs = pool(&PoolSpec::default(), 1);
        let mut config = SampleConfig::default();
        config.domain_upsample.insert("Astrology".into(), 5);
        assert!(matches!(sample_batch(&docs, &config), Err(Error::InvalidConfig(_))));
    }
}
