//! The perception framework: 12 dimensions measured by 25 Likert statements.
//!
//! Benefit and Reading items are rendered from their question stems as
//! standalone statements. Two statements are negatively phrased and flagged
//! `reverse_coded`; agreement with them indicates a lower dimension value.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

pub const CATALOG_VERSION: &str = "1.0";
pub const STATEMENT_COUNT: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DimensionId {
    Newsworthiness,
    Understandability,
    Expertise,
    Importance,
    Fun,
    Surprisingness,
    Controversy,
    Exaggeration,
    Interestingness,
    Benefit,
    Sharing,
    Reading,
}

impl DimensionId {
    pub const ALL: [DimensionId; 12] = [
        DimensionId::Newsworthiness,
        DimensionId::Understandability,
        DimensionId::Expertise,
        DimensionId::Importance,
        DimensionId::Fun,
        DimensionId::Surprisingness,
        DimensionId::Controversy,
        DimensionId::Exaggeration,
        DimensionId::Interestingness,
        DimensionId::Benefit,
        DimensionId::Sharing,
        DimensionId::Reading,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DimensionId::Newsworthiness => "Newsworthiness",
            DimensionId::Understandability => "Understandability",
            DimensionId::Expertise => "Expertise",
            DimensionId::Importance => "Importance",
            DimensionId::Fun => "Fun",
            DimensionId::Surprisingness => "Surprisingness",
            DimensionId::Controversy => "Controversy",
            DimensionId::Exaggeration => "Exaggeration",
            DimensionId::Interestingness => "Interestingness",
            DimensionId::Benefit => "Benefit",
            DimensionId::Sharing => "Sharing",
            DimensionId::Reading => "Reading",
        }
    }

    /// Position in [`DimensionId::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    /// Number of statements the default catalog assigns to this dimension.
    pub fn expected_statement_count(self) -> usize {
        match self {
            DimensionId::Interestingness => 2,
            DimensionId::Benefit | DimensionId::Reading => 6,
            DimensionId::Sharing => 3,
            _ => 1,
        }
    }
}

impl fmt::Display for DimensionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DimensionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DimensionId::ALL
            .iter()
            .copied()
            .find(|d| d.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown dimension `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Statement {
    pub id: String,
    pub text: String,
    pub dimension: DimensionId,
    pub reverse_coded: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementCatalog {
    pub version: String,
    pub statements: Vec<Statement>,
}

const READING_STEM_PREFIX: &str = "If I'm browsing news articles from ";
const READING_STEM_SUFFIX: &str = ", I would be likely to open and read the science news story above";

fn reading_item(venue: &str) -> String {
    format!("{READING_STEM_PREFIX}{venue}{READING_STEM_SUFFIX}")
}

/// The canonical 25-statement catalog.
pub fn default_catalog() -> StatementCatalog {
    use DimensionId::*;

    let rows: Vec<(&str, String, DimensionId, bool)> = vec![
        ("newsworthy_publish", "The science news story should be published in the news".into(), Newsworthiness, false),
        ("understand_story", "I can understand the science news story".into(), Understandability, false),
        ("expertise_required", "Understanding the science news story requires specialized knowledge".into(), Expertise, false),
        ("important_issue", "The science news story tackles an important issue".into(), Importance, false),
        ("fun_to_read", "The science news story is fun to read".into(), Fun, false),
        ("finding_surprising", "The scientific finding seems surprising to me".into(), Surprisingness, false),
        ("finding_controversial", "The scientific finding could be controversial".into(), Controversy, false),
        ("overstated", "This science news story is overstated or exaggerated".into(), Exaggeration, false),
        ("interesting_to_me", "The science news story sounds interesting to me".into(), Interestingness, false),
        ("interesting_to_public", "The science news story could be interesting to the general public".into(), Interestingness, false),
        ("benefit_general_public", "Could benefit the general public".into(), Benefit, false),
        ("benefit_public_segment", "Could benefit a segment of the public".into(), Benefit, false),
        ("benefit_policy_makers", "Could benefit policy makers".into(), Benefit, false),
        ("benefit_industry", "Could benefit companies in the related industries".into(), Benefit, false),
        ("learned_useful", "I learned something useful from the science news story".into(), Benefit, false),
        ("benefit_many_people", "Knowing about this science could benefit a lot of people".into(), Benefit, false),
        ("share_direct", "I would share this science news story with someone I know directly".into(), Sharing, false),
        ("share_forum", "I would share this science news story with a wider forum like a mailing list, Twitter, Reddit".into(), Sharing, false),
        ("share_unlikely", "I would be unlikely to share this science news story with anyone".into(), Sharing, true),
        ("read_general_news", reading_item("general news outlets (e.g. BBC, New York Times, Fox News)"), Reading, false),
        ("read_scitech_media", reading_item("science and technology media (e.g. Scientific American, National Geographic)"), Reading, false),
        ("read_print_media", reading_item("other popular printing media (e.g. Vogue, GQ, Elle)"), Reading, false),
        ("read_popular_media", reading_item("other popular media (e.g. TV and radio)"), Reading, false),
        ("read_social_feed", "Would be willing to read it in my social-media feed".into(), Reading, false),
        ("not_outside_science", "It should not be published in public media outside the science community".into(), Reading, true),
    ];

    StatementCatalog {
        version: CATALOG_VERSION.to_string(),
        statements: rows
            .into_iter()
            .map(|(id, text, dimension, reverse_coded)| Statement {
                id: id.to_string(),
                text,
                dimension,
                reverse_coded,
            })
            .collect(),
    }
}

impl StatementCatalog {
    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    pub fn get(&self, statement_id: &str) -> Option<&Statement> {
        self.statements.iter().find(|s| s.id == statement_id)
    }

    pub fn index_of(&self, statement_id: &str) -> Option<usize> {
        self.statements.iter().position(|s| s.id == statement_id)
    }

    pub fn statements_of(&self, dimension: DimensionId) -> impl Iterator<Item = &Statement> {
        self.statements.iter().filter(move |s| s.dimension == dimension)
    }

    /// Dimensions measured by more than one statement, in dimension order.
    pub fn multi_statement_dimensions(&self) -> Vec<DimensionId> {
        DimensionId::ALL
            .into_iter()
            .filter(|&d| self.statements_of(d).count() > 1)
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("catalog serialization is infallible")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    /// Hex SHA-256 of the compact JSON serialization.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

pub fn dimension_of(catalog: &StatementCatalog, statement_id: &str) -> Result<DimensionId> {
    catalog
        .get(statement_id)
        .map(|s| s.dimension)
        .ok_or_else(|| Error::UnknownStatement(statement_id.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    StatementCount,
    DimensionCount,
    DuplicateId,
    EmptyText,
    ReverseCodedCount,
}

/// Checks the catalog invariants; an empty report means the catalog is valid.
pub fn validate_catalog(catalog: &StatementCatalog) -> Vec<Violation> {
    let mut report = Vec::new();

    if catalog.len() != STATEMENT_COUNT {
        report.push(Violation {
            kind: ViolationKind::StatementCount,
            message: format!("statement count {} ≠ {STATEMENT_COUNT}", catalog.len()),
        });
    }

    let mut counts: BTreeMap<DimensionId, usize> = BTreeMap::new();
    for s in &catalog.statements {
        *counts.entry(s.dimension).or_default() += 1;
    }
    for d in DimensionId::ALL {
        let got = counts.get(&d).copied().unwrap_or(0);
        let want = d.expected_statement_count();
        if got != want {
            report.push(Violation {
                kind: ViolationKind::DimensionCount,
                message: format!("dimension {d} has {got} statements, expected {want}"),
            });
        }
    }

    let mut seen = HashSet::new();
    for s in &catalog.statements {
        if !seen.insert(s.id.as_str()) {
            report.push(Violation {
                kind: ViolationKind::DuplicateId,
                message: format!("duplicate id `{}`", s.id),
            });
        }
        if s.text.trim().is_empty() {
            report.push(Violation {
                kind: ViolationKind::EmptyText,
                message: format!("statement `{}` has empty text", s.id),
            });
        }
    }

    let reversed = catalog.statements.iter().filter(|s| s.reverse_coded).count();
    if reversed != 2 {
        report.push(Violation {
            kind: ViolationKind::ReverseCodedCount,
            message: format!("{reversed} reverse-coded statements, expected 2"),
        });
    }

    report
}
