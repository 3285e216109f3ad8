//! Synthetic Reddit-style posts with planted perception effects.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::engagement::EngagementDataset;
use super::posts::{build_url_groups, SocialPost};
use crate::aggregate::PerceptionProfile;
use crate::catalog::DimensionId;
use crate::corpus::synth::{compose_text, DOMAINS};
use crate::Result;

pub const SUBREDDITS: [&str; 6] = ["science", "EverythingScience", "technology", "health", "space", "Futurology"];
pub const HOSTS: [&str; 5] = ["sciencedaily.com", "phys.org", "nytimes.com", "theguardian.com", "eurekalert.org"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngagementSpec {
    pub urls: usize,
    pub posts_per_url: usize,
    /// Coefficients on each outcome, per point of the dimension.
    pub score_effects: BTreeMap<DimensionId, f64>,
    pub comment_effects: BTreeMap<DimensionId, f64>,
    pub score_intercept: f64,
    pub comment_intercept: f64,
    pub first_share_effect: f64,
    pub subreddit_sd: f64,
    pub url_sd: f64,
    pub noise_sd: f64,
}

impl Default for EngagementSpec {
    fn default() -> Self {
        use DimensionId::*;
        Self {
            urls: 400,
            posts_per_url: 5,
            score_effects: [(Importance, 0.519), (Surprisingness, 0.3), (Fun, 0.25), (Controversy, 0.1), (Expertise, -0.35)].into(),
            comment_effects: [(Importance, 0.4), (Surprisingness, 0.2), (Fun, 0.2), (Controversy, 0.25), (Expertise, -0.3)].into(),
            score_intercept: 4.5,
            comment_intercept: 3.0,
            first_share_effect: 0.3,
            subreddit_sd: 0.3,
            url_sd: 0.5,
            noise_sd: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticEngagement {
    pub posts: Vec<SocialPost>,
    /// True perception profile of every post, keyed by post id.
    pub profiles: BTreeMap<String, PerceptionProfile>,
}

impl SyntheticEngagement {
    /// Dataset built on the planted profiles.
    pub fn dataset(&self) -> Result<EngagementDataset> {
        let groups = build_url_groups(&self.posts);
        EngagementDataset::from_groups(&groups, "planted", |p| Ok(self.profiles[&p.post_id].clone()))
    }
}

fn post_profile(url_appeal: f64, url_difficulty: f64, rng: &mut ChaCha8Rng) -> [f64; 12] {
    let n = |sd: f64, rng: &mut ChaCha8Rng| -> f64 { Normal::new(0.0, sd).expect("sd").sample(rng) };
    let a = url_appeal + n(0.35, rng);
    let d = url_difficulty + n(0.2, rng);
    use DimensionId::*;
    let mut p = [3.0; 12];
    // A tight appeal cluster and an expertise/understandability pair give the pruner work.
    p[Newsworthiness.index()] += a + n(0.12, rng);
    p[Interestingness.index()] += a + n(0.12, rng);
    p[Sharing.index()] += 0.9 * a + n(0.12, rng);
    p[Reading.index()] += 0.9 * a + n(0.12, rng);
    p[Benefit.index()] += 0.8 * a + n(0.15, rng);
    p[Importance.index()] += 0.4 * a + n(0.45, rng);
    p[Fun.index()] += 0.3 * a - 0.2 * d + n(0.45, rng);
    p[Surprisingness.index()] += n(0.45, rng);
    p[Controversy.index()] += n(0.45, rng);
    p[Exaggeration.index()] += 0.5 * (p[Surprisingness.index()] - 3.0) + 0.5 * (p[Controversy.index()] - 3.0) + n(0.1, rng);
    p[Expertise.index()] += d + n(0.15, rng);
    p[Understandability.index()] += -d + 0.3 * a + n(0.1, rng);
    p.map(|v| v.clamp(1.0, 5.0))
}

pub fn synthetic_engagement(spec: &EngagementSpec, seed: u64) -> SyntheticEngagement {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let sub_effect: BTreeMap<&str, (f64, f64)> = SUBREDDITS
        .iter()
        .map(|&s| (s, (spec.subreddit_sd * unit.sample(&mut rng), spec.subreddit_sd * unit.sample(&mut rng))))
        .collect();

    let mut posts = Vec::with_capacity(spec.urls * spec.posts_per_url);
    let mut profiles = BTreeMap::new();
    let mut latent_of: BTreeMap<String, ([f64; 12], f64, f64)> = BTreeMap::new();
    for u in 0..spec.urls {
        let host = HOSTS[u % HOSTS.len()];
        let url = format!("{host}/news/{u:05}");
        let appeal = 0.5 * unit.sample(&mut rng);
        let difficulty = 0.45 * unit.sample(&mut rng);
        let url_effects = (spec.url_sd * unit.sample(&mut rng), spec.url_sd * unit.sample(&mut rng));
        let domain = rng.random_range(0..DOMAINS.len());
        let t0 = 1_600_000_000 + rng.random_range(0..30_000_000i64);
        for k in 0..spec.posts_per_url {
            let post_id = format!("t3_{u:05}{k:02}");
            let latent = post_profile(appeal, difficulty, &mut rng);
            let (title, body) = compose_text(&latent, domain, &mut rng, 1);
            posts.push(SocialPost {
                post_id: post_id.clone(),
                url: url.clone(),
                subreddit: SUBREDDITS.choose(&mut rng).expect("subreddits").to_string(),
                created_at: t0 + rng.random_range(0..2_000_000i64),
                score: 0,
                num_comments: 0,
                title_text: format!("{title}. {body}"),
                first_share_of_url_in_subreddit: false,
                extra: Default::default(),
            });
            profiles.insert(
                post_id.clone(),
                PerceptionProfile {
                    doc_id: post_id.clone(),
                    scores: DimensionId::ALL.iter().map(|&d| (d, latent[d.index()])).collect(),
                    n_annotators: 1,
                    per_dimension_counts: DimensionId::ALL.iter().map(|&d| (d, 1)).collect(),
                },
            );
            latent_of.insert(post_id, (latent, url_effects.0, url_effects.1));
        }
    }

    // Outcomes depend on first-share flags, which depend on posting order.
    let groups = build_url_groups(&posts);
    let flags: BTreeMap<&str, bool> =
        groups.posts.iter().map(|g| (g.post.post_id.as_str(), g.post.first_share_of_url_in_subreddit)).collect();
    let mut outcomes = BTreeMap::new();
    for p in &posts {
        let (latent, u_score, u_comments) = &latent_of[&p.post_id];
        let first = if flags[p.post_id.as_str()] { spec.first_share_effect } else { 0.0 };
        let (s_sub, c_sub) = sub_effect[p.subreddit.as_str()];
        let linear = |effects: &BTreeMap<DimensionId, f64>| -> f64 {
            effects.iter().map(|(d, b)| b * latent[d.index()]).sum()
        };
        let y_score = spec.score_intercept + linear(&spec.score_effects) + u_score + s_sub + first
            + spec.noise_sd * unit.sample(&mut rng);
        let y_comments = spec.comment_intercept + linear(&spec.comment_effects) + u_comments + c_sub + first
            + spec.noise_sd * unit.sample(&mut rng);
        outcomes.insert(p.post_id.clone(), (y_score, y_comments));
    }
    for p in &mut posts {
        let (ys, yc) = outcomes[&p.post_id];
        p.score = ys.exp_m1().round().max(0.0) as i64;
        p.num_comments = yc.exp_m1().round().max(0.0) as u64;
        p.first_share_of_url_in_subreddit = flags[p.post_id.as_str()];
    }
    SyntheticEngagement { posts, profiles }
}

