use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use url::Url;

use crate::corpus::{ExtraFields, JsonlRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocialPost {
    pub post_id: String,
    pub url: String,
    pub subreddit: String,
    /// Unix seconds.
    pub created_at: i64,
    /// Upvotes minus downvotes; may be negative.
    pub score: i64,
    pub num_comments: u64,
    pub title_text: String,
    /// Derived by [`build_url_groups`].
    #[serde(default)]
    pub first_share_of_url_in_subreddit: bool,
    #[serde(flatten)]
    pub extra: ExtraFields,
}

impl JsonlRecord for SocialPost {
    fn check(&self) -> Result<(), String> {
        if self.post_id.trim().is_empty() {
            return Err("post_id is empty".into());
        }
        if self.url.trim().is_empty() {
            return Err("url is empty".into());
        }
        Ok(())
    }
}

const TRACKING_PARAMS: [&str; 10] =
    ["fbclid", "gclid", "dclid", "msclkid", "mc_cid", "mc_eid", "igshid", "ref", "ref_src", "cmpid"];

fn is_tracking(key: &str) -> bool {
    let k = key.to_ascii_lowercase();
    k.starts_with("utm_") || TRACKING_PARAMS.contains(&k.as_str())
}

/// `host[:port]/path?query` with a lowercase host, no scheme, no fragment,
/// no trailing slash and no tracking parameters. Idempotent.
pub fn normalize_url(raw: &str) -> String {
    let trimmed = raw.trim();
    let with_scheme = if trimmed.contains("://") { trimmed.to_string() } else { format!("http://{trimmed}") };
    let Ok(parsed) = Url::parse(&with_scheme) else {
        return trimmed.trim_end_matches('/').to_lowercase();
    };
    let mut out = parsed.host_str().unwrap_or_default().to_lowercase();
    if let Some(port) = parsed.port() {
        out.push_str(&format!(":{port}"));
    }
    out.push_str(parsed.path().trim_end_matches('/'));
    let kept: Vec<String> = parsed
        .query_pairs()
        .filter(|(k, _)| !is_tracking(k))
        .map(|(k, v)| if v.is_empty() { k.into_owned() } else { format!("{k}={v}") })
        .collect();
    if !kept.is_empty() {
        out.push('?');
        out.push_str(&kept.join("&"));
    }
    out
}

/// Host part of a normalized url.
pub fn url_domain(normalized: &str) -> String {
    let end = normalized.find(['/', '?']).unwrap_or(normalized.len());
    let host = &normalized[..end];
    host.split(':').next().unwrap_or(host).to_string()
}

/// `(ln(1 + max(score, 0)), ln(1 + num_comments))`.
pub fn engagement_outcomes(post: &SocialPost) -> (f64, f64) {
    ((post.score.max(0) as f64).ln_1p(), (post.num_comments as f64).ln_1p())
}

pub const SCORE_TRANSFORM: &str = "ln(1 + max(score, 0))";
pub const COMMENTS_TRANSFORM: &str = "ln(1 + num_comments)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedPost {
    pub post: SocialPost,
    pub url_domain: String,
}

/// Posts on urls shared at least twice, ordered by post id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct UrlGroups {
    pub posts: Vec<GroupedPost>,
    pub dropped_duplicates: usize,
    pub dropped_singleton_urls: usize,
}

impl UrlGroups {
    pub fn n_urls(&self) -> usize {
        self.posts.iter().map(|p| &p.post.url).collect::<BTreeSet<_>>().len()
    }
}

pub fn build_url_groups(posts: &[SocialPost]) -> UrlGroups {
    let mut sorted: Vec<SocialPost> = posts
        .iter()
        .map(|p| SocialPost { url: normalize_url(&p.url), ..p.clone() })
        .collect();
    // Total order so duplicate resolution does not depend on input order.
    sorted.sort_by_cached_key(|p| (p.post_id.clone(), serde_json::to_string(p).unwrap_or_default()));
    let before = sorted.len();
    sorted.dedup_by(|a, b| a.post_id == b.post_id);
    let dropped_duplicates = before - sorted.len();

    let mut per_url: BTreeMap<String, usize> = BTreeMap::new();
    for p in &sorted {
        *per_url.entry(p.url.clone()).or_default() += 1;
    }
    let dropped_singleton_urls = per_url.values().filter(|&&n| n < 2).count();
    sorted.retain(|p| per_url[&p.url] >= 2);

    let mut first: BTreeMap<(&str, &str), (i64, &str)> = BTreeMap::new();
    for p in &sorted {
        let key = (p.url.as_str(), p.subreddit.as_str());
        let cand = (p.created_at, p.post_id.as_str());
        first.entry(key).and_modify(|best| *best = (*best).min(cand)).or_insert(cand);
    }
    let firsts: BTreeSet<String> = first.values().map(|(_, id)| id.to_string()).collect();
    let posts = sorted
        .iter()
        .map(|p| GroupedPost {
            post: SocialPost { first_share_of_url_in_subreddit: firsts.contains(&p.post_id), ..p.clone() },
            url_domain: url_domain(&p.url),
        })
        .collect();
    UrlGroups { posts, dropped_duplicates, dropped_singleton_urls }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn post(id: &str, url: &str, sub: &str, t: i64) -> SocialPost {
        SocialPost {
            post_id: id.into(),
            url: url.into(),
            subreddit: sub.into(),
            created_at: t,
            score: 10,
            num_comments: 2,
            title_text: "t".into(),
            first_share_of_url_in_subreddit: false,
            extra: Default::default(),
        }
    }

    #[test]
    fn normalizes_urls() {
        assert_eq!(
            normalize_url("HTTPS://WWW.Example.COM/Science/Story/?utm_source=x&id=3&fbclid=abc#top"),
            "www.example.com/Science/Story?id=3"
        );
        assert_eq!(normalize_url("example.com/a/"), "example.com/a");
        let once = normalize_url("http://Example.com:8080/a?b=1&utm_medium=y");
        assert_eq!(once, "example.com:8080/a?b=1");
        assert_eq!(normalize_url(&once), once);
        assert_eq!(url_domain(&once), "example.com");
    }

    #[test]
    fn outcome_transforms() {
        let mut p = post("a", "x.org", "s", 0);
        p.score = 0;
        p.num_comments = 0;
        assert_eq!(engagement_outcomes(&p), (0.0, 0.0));
        p.score = -5;
        assert_eq!(engagement_outcomes(&p).0, 0.0);
        p.num_comments = 99;
        assert!((engagement_outcomes(&p).1 - 100f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn singleton_urls_and_duplicates() {
        let posts = vec![
            post("1", "a.org/x", "s", 3),
            post("2", "a.org/x", "s", 1),
            post("3", "https://a.org/x/", "t", 2),
            post("4", "b.org/y", "s", 0),
            post("2", "a.org/x", "s", 1),
        ];
        let g = build_url_groups(&posts);
        assert_eq!(g.dropped_duplicates, 1);
        assert_eq!(g.dropped_singleton_urls, 1);
        let ids: Vec<&str> = g.posts.iter().map(|p| p.post.post_id.as_str()).collect();
        assert_eq!(ids, ["1", "2", "3"]);
        let flags: Vec<bool> = g.posts.iter().map(|p| p.post.first_share_of_url_in_subreddit).collect();
        assert_eq!(flags, [false, true, true]);
        assert!(g.posts.iter().all(|p| p.url_domain == "a.org"));
    }

    #[test]
    fn first_share_ties_break_on_post_id() {
        let g = build_url_groups(&[post("b", "u.org", "s", 5), post("a", "u.org", "s", 5)]);
        assert!(g.posts[0].post.first_share_of_url_in_subreddit);
        assert!(!g.posts[1].post.first_share_of_url_in_subreddit);
    }
}
