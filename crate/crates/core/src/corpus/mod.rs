//! Science-media documents, annotation records, and participant profiles.

mod clean;
mod jsonl;
mod sample;
mod simulate;
pub mod synth;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use clean::clean_document;
pub use jsonl::{load_jsonl, save_jsonl, JsonlRecord};
pub use sample::{sample_batch, SampleConfig, SampleOutcome, StepCount};
pub use simulate::{simulate_annotations, BackgroundEffects, GeneratorParams, SimulatedAnnotations};

use crate::catalog::StatementCatalog;

/// Unrecognized JSON fields carried through a read/write cycle.
pub type ExtraFields = BTreeMap<String, Value>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OutletType {
    General,
    PressRelease,
    SciTech,
}

impl OutletType {
    pub const ALL: [OutletType; 3] = [OutletType::General, OutletType::PressRelease, OutletType::SciTech];

    pub fn name(self) -> &'static str {
        match self {
            OutletType::General => "General",
            OutletType::PressRelease => "PressRelease",
            OutletType::SciTech => "SciTech",
        }
    }
}

impl fmt::Display for OutletType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewsDocument {
    pub doc_id: String,
    pub title: String,
    pub body: String,
    pub outlet_type: OutletType,
    pub science_domain: String,
    pub paper_id: String,
    pub coverage_count: u32,
    #[serde(flatten)]
    pub extra: ExtraFields,
}

impl NewsDocument {
    /// Model input: title and body joined by a newline.
    pub fn input_text(&self) -> String {
        match (self.title.is_empty(), self.body.is_empty()) {
            (true, _) => self.body.clone(),
            (false, true) => self.title.clone(),
            (false, false) => format!("{}\n{}", self.title, self.body),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawArticle {
    pub doc_id: String,
    pub title: String,
    pub body: String,
    #[serde(default)]
    pub outlet_name: String,
    #[serde(default)]
    pub author: String,
    #[serde(default)]
    pub publish_date: String,
    #[serde(default)]
    pub city: String,
    #[serde(default)]
    pub urls: Vec<String>,
    pub outlet_type: OutletType,
    pub science_domain: String,
    pub paper_id: String,
    pub coverage_count: u32,
    #[serde(flatten)]
    pub extra: ExtraFields,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Country {
    US,
    UK,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub annotator_id: String,
    pub doc_id: String,
    pub ratings: BTreeMap<String, u8>,
    pub country: Country,
    #[serde(flatten)]
    pub extra: ExtraFields,
}

impl AnnotationRecord {
    /// Checks rating ranges and, when a catalog is given, statement ids.
    pub fn validate(&self, catalog: Option<&StatementCatalog>) -> Result<(), String> {
        for (id, &r) in &self.ratings {
            if !(1..=5).contains(&r) {
                return Err(format!("rating {r} for `{id}` outside 1-5"));
            }
            if let Some(c) = catalog {
                if c.get(id).is_none() {
                    return Err(format!("unknown statement id `{id}`"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NewsFrequency {
    Never,
    Rarely,
    Monthly,
    Weekly,
    Daily,
}

impl NewsFrequency {
    pub const ALL: [NewsFrequency; 5] = [
        NewsFrequency::Never,
        NewsFrequency::Rarely,
        NewsFrequency::Monthly,
        NewsFrequency::Weekly,
        NewsFrequency::Daily,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NewsFrequency::Never => "never",
            NewsFrequency::Rarely => "rarely",
            NewsFrequency::Monthly => "monthly",
            NewsFrequency::Weekly => "weekly",
            NewsFrequency::Daily => "daily",
        }
    }

    /// 0 for never through 4 for daily.
    pub fn ordinal(self) -> usize {
        self as usize
    }
}

/// The six political-attitude survey items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoliticalItem {
    ReproductiveRights,
    LegalizingDrugs,
    PublicServicesInvestment,
    GenderIdentityRights,
    TaxingTheRich,
    MarketIntervention,
}

impl PoliticalItem {
    pub const ALL: [PoliticalItem; 6] = [
        PoliticalItem::ReproductiveRights,
        PoliticalItem::LegalizingDrugs,
        PoliticalItem::PublicServicesInvestment,
        PoliticalItem::GenderIdentityRights,
        PoliticalItem::TaxingTheRich,
        PoliticalItem::MarketIntervention,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PoliticalItem::ReproductiveRights => "reproductive_rights",
            PoliticalItem::LegalizingDrugs => "legalizing_drugs",
            PoliticalItem::PublicServicesInvestment => "public_services_investment",
            PoliticalItem::GenderIdentityRights => "gender_identity_rights",
            PoliticalItem::TaxingTheRich => "taxing_the_rich",
            PoliticalItem::MarketIntervention => "market_intervention",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParticipantProfile {
    pub annotator_id: String,
    pub gender: String,
    pub age_bracket: String,
    pub education_level: String,
    pub science_news_frequency: NewsFrequency,
    pub trust_in_science: u8,
    pub political_attitudes: BTreeMap<PoliticalItem, u8>,
    pub country: Country,
    #[serde(flatten)]
    pub extra: ExtraFields,
}

impl ParticipantProfile {
    pub fn validate(&self) -> Result<(), String> {
        if !(1..=5).contains(&self.trust_in_science) {
            return Err(format!("trust_in_science {} outside 1-5", self.trust_in_science));
        }
        for (item, &v) in &self.political_attitudes {
            if !(1..=5).contains(&v) {
                return Err(format!("political attitude {} = {v} outside 1-5", item.name()));
            }
        }
        Ok(())
    }
}
