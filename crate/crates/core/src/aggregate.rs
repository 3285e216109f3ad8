//! Statement ratings to dimension profiles, and Likert-to-rank conversion.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::catalog::{DimensionId, StatementCatalog};
use crate::corpus::{AnnotationRecord, JsonlRecord};
use crate::stats::pearson;
use crate::{Error, Result};

pub type DimensionScores = BTreeMap<DimensionId, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceptionProfile {
    pub doc_id: String,
    pub scores: DimensionScores,
    pub n_annotators: usize,
    pub per_dimension_counts: BTreeMap<DimensionId, usize>,
}

impl JsonlRecord for PerceptionProfile {
    fn check(&self) -> Result<(), String> {
        if let Some((d, v)) = self.scores.iter().find(|(_, v)| !(1.0..=5.0).contains(*v)) {
            return Err(format!("{d} score {v} outside [1, 5]"));
        }
        if self.n_annotators == 0 {
            return Err("n_annotators must be at least 1".into());
        }
        Ok(())
    }
}

/// Reverse-coded statements map `r -> 6 - r`.
pub fn reverse(rating: f64) -> f64 {
    6.0 - rating
}

/// Averages statement-level scores into dimension scores.
///
/// This is the single rule shared by annotator profiles, label profiles, and
/// model predictions. Dimensions without any scored statement are absent.
pub fn profile_from_statement_scores<'a>(
    doc_id: &str,
    scores: impl IntoIterator<Item = (&'a str, f64)>,
    catalog: &StatementCatalog,
    reverse_code: bool,
) -> Result<PerceptionProfile> {
    let mut sums: BTreeMap<DimensionId, (f64, usize)> = BTreeMap::new();
    for (id, value) in scores {
        let statement = catalog.get(id).ok_or_else(|| Error::UnknownStatement(id.to_string()))?;
        let v = if reverse_code && statement.reverse_coded { reverse(value) } else { value };
        let e = sums.entry(statement.dimension).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    let scores: DimensionScores = sums.iter().map(|(&d, &(s, n))| (d, s / n as f64)).collect();
    let per_dimension_counts = scores.keys().map(|&d| (d, 1)).collect();
    Ok(PerceptionProfile { doc_id: doc_id.to_string(), scores, n_annotators: 1, per_dimension_counts })
}

pub fn annotator_profile(
    record: &AnnotationRecord,
    catalog: &StatementCatalog,
    reverse_code: bool,
) -> Result<PerceptionProfile> {
    if record.ratings.is_empty() {
        return Err(Error::EmptyRecord { annotator: record.annotator_id.clone(), doc: record.doc_id.clone() });
    }
    if let Some((id, r)) = record.ratings.iter().find(|(_, r)| !(1..=5).contains(*r)) {
        return Err(Error::InvalidParameter(format!("rating {r} for `{id}` outside 1-5")));
    }
    profile_from_statement_scores(
        &record.doc_id,
        record.ratings.iter().map(|(id, &r)| (id.as_str(), f64::from(r))),
        catalog,
        reverse_code,
    )
}

/// Per-dimension mean over the annotators that rated each dimension.
pub fn article_profile(profiles: &[PerceptionProfile]) -> Result<PerceptionProfile> {
    let first = profiles
        .first()
        .ok_or_else(|| Error::InsufficientData("article_profile needs at least one profile".into()))?;
    if let Some(other) = profiles.iter().find(|p| p.doc_id != first.doc_id) {
        return Err(Error::MixedDocuments(first.doc_id.clone(), other.doc_id.clone()));
    }
    let mut sums: BTreeMap<DimensionId, (f64, usize)> = BTreeMap::new();
    for p in profiles {
        for (&d, &v) in &p.scores {
            let e = sums.entry(d).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
        }
    }
    Ok(PerceptionProfile {
        doc_id: first.doc_id.clone(),
        scores: sums.iter().map(|(&d, &(s, n))| (d, s / n as f64)).collect(),
        n_annotators: profiles.len(),
        per_dimension_counts: sums.iter().map(|(&d, &(_, n))| (d, n)).collect(),
    })
}

/// Article profiles for every document in `records`, ordered by doc id.
pub fn article_profiles(
    records: &[AnnotationRecord],
    catalog: &StatementCatalog,
    reverse_code: bool,
) -> Result<Vec<PerceptionProfile>> {
    let mut by_doc: BTreeMap<&str, Vec<PerceptionProfile>> = BTreeMap::new();
    for r in records {
        by_doc.entry(&r.doc_id).or_default().push(annotator_profile(r, catalog, reverse_code)?);
    }
    by_doc.values().map(|ps| article_profile(ps)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankOptions {
    /// Virtual ties added per real comparison; keeps worths finite when one
    /// document never loses. Scales with the data, so duplicating every
    /// comparison leaves the fit unchanged.
    pub tie_smoothing: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for RankOptions {
    fn default() -> Self {
        Self { tie_smoothing: 0.01, tolerance: 1e-8, max_iterations: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankScoreTable {
    pub dimension: DimensionId,
    /// Worth per document; the mean log-worth is zero.
    pub scores: BTreeMap<String, f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Documents outside the largest connected comparison component.
    pub excluded: Vec<String>,
}

impl RankScoreTable {
    pub fn log_worth(&self, doc_id: &str) -> Option<f64> {
        self.scores.get(doc_id).map(|w| w.ln())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["doc_id", "worth", "log_worth"])?;
        for (doc, worth) in &self.scores {
            w.write_record([doc.clone(), format!("{worth}"), format!("{}", worth.ln())])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct PairStats {
    /// Wins of the lower-index document (ties count half).
    wins_lo: f64,
    wins_hi: f64,
    n: f64,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

pub fn rank_scores(records: &[AnnotationRecord], catalog: &StatementCatalog, dimension: DimensionId) -> Result<RankScoreTable> {
    rank_scores_with(records, catalog, dimension, &RankOptions::default())
}

/// Paired-comparison worth scores for one dimension.
///
/// Every annotator contributes one comparison per pair of documents they both
/// scored on `dimension`; worths are fit by the minorization-maximization
/// iteration for the Bradley-Terry model with ties as half-wins.
pub fn rank_scores_with(
    records: &[AnnotationRecord],
    catalog: &StatementCatalog,
    dimension: DimensionId,
    options: &RankOptions,
) -> Result<RankScoreTable> {
    // annotator -> doc -> (sum, count) of the annotator's dimension score
    let mut judged: BTreeMap<&str, BTreeMap<&str, (f64, usize)>> = BTreeMap::new();
    for r in records {
        let profile = annotator_profile(r, catalog, true)?;
        if let Some(&s) = profile.scores.get(&dimension) {
            let e = judged.entry(&r.annotator_id).or_default().entry(&r.doc_id).or_insert((0.0, 0));
            e.0 += s;
            e.1 += 1;
        }
    }

    let mut doc_index: BTreeMap<&str, usize> = BTreeMap::new();
    for docs in judged.values() {
        for d in docs.keys() {
            doc_index.entry(d).or_insert(0);
        }
    }
    for (i, v) in doc_index.values_mut().enumerate() {
        *v = i;
    }
    let doc_names: Vec<&str> = doc_index.keys().copied().collect();

    let mut pairs: BTreeMap<(usize, usize), PairStats> = BTreeMap::new();
    for docs in judged.values() {
        let scored: Vec<(usize, f64)> = docs.iter().map(|(d, (s, n))| (doc_index[d], s / *n as f64)).collect();
        for a in 0..scored.len() {
            for b in a + 1..scored.len() {
                let (i, si) = scored[a];
                let (j, sj) = scored[b];
                let (lo, hi, s_lo, s_hi) = if i < j { (i, j, si, sj) } else { (j, i, sj, si) };
                let e = pairs.entry((lo, hi)).or_default();
                e.n += 1.0;
                if s_lo > s_hi {
                    e.wins_lo += 1.0;
                } else if s_hi > s_lo {
                    e.wins_hi += 1.0;
                } else {
                    e.wins_lo += 0.5;
                    e.wins_hi += 0.5;
                }
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::InsufficientComparisons(format!("no document pairs share an annotator on {dimension}")));
    }

    // Largest connected component; ties go to the component holding the smallest doc id.
    let m = doc_names.len();
    let mut parent: Vec<usize> = (0..m).collect();
    for &(i, j) in pairs.keys() {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj {
            parent[ri.max(rj)] = ri.min(rj);
        }
    }
    let roots: Vec<usize> = (0..m).map(|i| find(&mut parent, i)).collect();
    let mut sizes: HashMap<usize, usize> = HashMap::new();
    for &r in &roots {
        *sizes.entry(r).or_default() += 1;
    }
    let best_root = (0..m)
        .filter(|&i| roots[i] == i)
        .max_by(|&a, &b| sizes[&a].cmp(&sizes[&b]).then(b.cmp(&a)))
        .expect("at least one document");
    let members: Vec<usize> = (0..m).filter(|&i| roots[i] == best_root).collect();
    let excluded: Vec<String> = (0..m).filter(|&i| roots[i] != best_root).map(|i| doc_names[i].to_string()).collect();
    let local: HashMap<usize, usize> = members.iter().enumerate().map(|(k, &i)| (i, k)).collect();

    let alpha = options.tie_smoothing.max(0.0);
    let k = members.len();
    let mut wins = vec![0.0; k];
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    for (&(i, j), p) in &pairs {
        let (Some(&a), Some(&b)) = (local.get(&i), local.get(&j)) else { continue };
        wins[a] += p.wins_lo + alpha * p.n / 2.0;
        wins[b] += p.wins_hi + alpha * p.n / 2.0;
        edges.push((a, b, p.n * (1.0 + alpha)));
    }

    let mut worth = vec![1.0; k];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < options.max_iterations {
        iterations += 1;
        let mut denom = vec![0.0; k];
        for &(a, b, n) in &edges {
            let t = n / (worth[a] + worth[b]);
            denom[a] += t;
            denom[b] += t;
        }
        let mut next: Vec<f64> = (0..k).map(|i| wins[i] / denom[i]).collect();
        let mean_log = next.iter().map(|w| w.ln()).sum::<f64>() / k as f64;
        for w in &mut next {
            *w /= mean_log.exp();
        }
        let change = next
            .iter()
            .zip(&worth)
            .map(|(a, b)| (a.ln() - b.ln()).abs())
            .fold(0.0, f64::max);
        worth = next;
        if change < options.tolerance {
            converged = true;
            break;
        }
    }

    Ok(RankScoreTable {
        dimension,
        scores: members.iter().enumerate().map(|(a, &i)| (doc_names[i].to_string(), worth[a])).collect(),
        iterations,
        converged,
        excluded,
    })
}

/// Pearson correlation between mean ratings and log-worths, per dimension.
pub fn rating_rank_agreement(
    profiles: &[PerceptionProfile],
    tables: &[RankScoreTable],
) -> Result<BTreeMap<DimensionId, f64>> {
    let by_doc: HashMap<&str, &PerceptionProfile> = profiles.iter().map(|p| (p.doc_id.as_str(), p)).collect();
    let mut out = BTreeMap::new();
    for table in tables {
        let mut ratings = Vec::new();
        let mut logs = Vec::new();
        for (doc, worth) in &table.scores {
            if let Some(score) = by_doc.get(doc.as_str()).and_then(|p| p.scores.get(&table.dimension)) {
                ratings.push(*score);
                logs.push(worth.ln());
            }
        }
        if ratings.len() < 3 {
            return Err(Error::InsufficientOverlap(format!(
                "{} documents shared on {}, need 3",
                ratings.len(),
                table.dimension
            )));
        }
        let r = pearson(&ratings, &logs)
            .ok_or_else(|| Error::UndefinedCorrelation(format!("zero variance on {}", table.dimension)))?;
        out.insert(table.dimension, r);
    }
    Ok(out)
}
