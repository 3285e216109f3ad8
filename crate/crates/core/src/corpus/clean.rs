use std::sync::OnceLock;

use regex::Regex;

use super::{NewsDocument, RawArticle};
use crate::{Error, Result};

fn url_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)(?:https?://|www\.)\S+").expect("valid url pattern"))
}

fn metadata_pattern(value: &str) -> Option<Regex> {
    let value = value.trim();
    if value.is_empty() {
        return None;
    }
    let escaped = regex::escape(value);
    let starts_word = value.chars().next().is_some_and(char::is_alphanumeric);
    let ends_word = value.chars().last().is_some_and(char::is_alphanumeric);
    let pattern = format!(
        "(?i){}{}{}",
        if starts_word { r"\b" } else { "" },
        escaped,
        if ends_word { r"\b" } else { "" }
    );
    Regex::new(&pattern).ok()
}

fn normalize_whitespace(text: &str) -> String {
    text.lines()
        .map(|line| line.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|line| !line.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

fn scrub(text: &str, patterns: &[Regex]) -> String {
    let mut current = text.to_string();
    // Removing one value can splice together a new occurrence; run to a fixpoint.
    loop {
        let mut next = url_pattern().replace_all(&current, "").into_owned();
        for p in patterns {
            next = p.replace_all(&next, "").into_owned();
        }
        let next = normalize_whitespace(&next);
        if next == current {
            return next;
        }
        current = next;
    }
}

/// Removes outlet, author, date, city and URL information from an article.
///
/// Metadata values are removed wherever they occur verbatim in the title or
/// body; URLs are removed by scheme prefix (`http://`, `https://`, `www.`).
pub fn clean_document(raw: &RawArticle) -> Result<NewsDocument> {
    if raw.title.trim().is_empty() && raw.body.trim().is_empty() {
        return Err(Error::EmptyContent(format!("document `{}` has no title or body", raw.doc_id)));
    }

    let mut values: Vec<&str> = vec![&raw.outlet_name, &raw.author, &raw.publish_date, &raw.city];
    values.extend(raw.urls.iter().map(String::as_str));
    // Longest first so a value containing another is removed whole.
    values.sort_by_key(|v| std::cmp::Reverse(v.len()));
    let patterns: Vec<Regex> = values.into_iter().filter_map(metadata_pattern).collect();

    let title = scrub(&raw.title, &patterns);
    let body = scrub(&raw.body, &patterns);
    if title.is_empty() || body.is_empty() {
        let which = if title.is_empty() { "title" } else { "body" };
        return Err(Error::EmptyContent(format!(
            "document `{}` has an empty {which} after cleaning",
            raw.doc_id
        )));
    }

    Ok(NewsDocument {
        doc_id: raw.doc_id.clone(),
        title,
        body,
        outlet_type: raw.outlet_type,
        science_domain: raw.science_domain.clone(),
        paper_id: raw.paper_id.clone(),
        coverage_count: raw.coverage_count,
        extra: raw.extra.clone(),
    })
}
