use std::fs;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::features::{BackendSpec, EncoderBackend};
use super::train::EpochMetrics;
use super::TrainConfig;
use crate::catalog::StatementCatalog;
use crate::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;
const WEIGHTS_MAGIC: &[u8; 8] = b"PRCPTW01";
const METADATA_FILE: &str = "metadata.json";
const WEIGHTS_FILE: &str = "weights.bin";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub format_version: u32,
    pub model_version: String,
    pub backend_name: String,
    pub backend: BackendSpec,
    pub catalog_version: String,
    pub catalog_hash: String,
    pub statement_ids: Vec<String>,
    pub input_width: usize,
    pub config: TrainConfig,
    pub best_epoch: usize,
    pub history: Vec<EpochMetrics>,
    pub weights_sha256: String,
}

/// Frozen encoder plus a linear head with one output per statement.
#[derive(Debug, Clone)]
pub struct ScorerModel {
    pub metadata: ModelMetadata,
    encoder: Arc<dyn EncoderBackend>,
    weights: DMatrix<f64>,
    bias: DVector<f64>,
}

impl ScorerModel {
    pub(crate) fn from_parts(
        encoder: Arc<dyn EncoderBackend>,
        weights: DMatrix<f64>,
        bias: DVector<f64>,
        catalog: &StatementCatalog,
        config: TrainConfig,
        best_epoch: usize,
        history: Vec<EpochMetrics>,
    ) -> Self {
        let digest = weights_digest(&weights, &bias);
        let metadata = ModelMetadata {
            format_version: MODEL_FORMAT_VERSION,
            model_version: format!("{}-{}", encoder.name(), &digest[..12]),
            backend_name: encoder.name().to_string(),
            backend: encoder.spec(),
            catalog_version: catalog.version.clone(),
            catalog_hash: catalog.hash(),
            statement_ids: catalog.statements.iter().map(|s| s.id.clone()).collect(),
            input_width: encoder.width(),
            config,
            best_epoch,
            history,
            weights_sha256: digest,
        };
        Self { metadata, encoder, weights, bias }
    }

    pub fn encoder(&self) -> &Arc<dyn EncoderBackend> {
        &self.encoder
    }

    pub fn outputs(&self) -> usize {
        self.bias.len()
    }

    pub fn model_version(&self) -> &str {
        &self.metadata.model_version
    }

    pub fn check_catalog(&self, catalog: &StatementCatalog) -> Result<()> {
        let actual = catalog.hash();
        if actual != self.metadata.catalog_hash {
            return Err(Error::CatalogMismatch { expected: self.metadata.catalog_hash.clone(), actual });
        }
        Ok(())
    }

    /// Unclamped head outputs in catalog order.
    pub fn forward(&self, text: &str) -> Result<Vec<f64>> {
        let x = DVector::from_vec(self.encoder.encode(text)?);
        Ok(self.forward_features(&x))
    }

    pub(crate) fn forward_features(&self, x: &DVector<f64>) -> Vec<f64> {
        (&self.weights * x + &self.bias).iter().copied().collect()
    }
}

fn weights_bytes(weights: &DMatrix<f64>, bias: &DVector<f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 8 * (weights.len() + bias.len()));
    out.extend_from_slice(WEIGHTS_MAGIC);
    out.extend_from_slice(&(weights.nrows() as u32).to_le_bytes());
    out.extend_from_slice(&(weights.ncols() as u32).to_le_bytes());
    // row-major
    for i in 0..weights.nrows() {
        for j in 0..weights.ncols() {
            out.extend_from_slice(&weights[(i, j)].to_le_bytes());
        }
    }
    for b in bias.iter() {
        out.extend_from_slice(&b.to_le_bytes());
    }
    out
}

fn weights_digest(weights: &DMatrix<f64>, bias: &DVector<f64>) -> String {
    hex::encode(Sha256::digest(weights_bytes(weights, bias)))
}

fn parse_weights(bytes: &[u8]) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let bad = |m: &str| Error::ModelFormat(m.to_string());
    if bytes.len() < 16 || &bytes[..8] != WEIGHTS_MAGIC {
        return Err(bad("weights blob has the wrong magic header"));
    }
    let rows = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let expected = 16 + 8 * (rows * cols + rows);
    if bytes.len() != expected {
        return Err(Error::ModelFormat(format!("weights blob is {} bytes, expected {expected}", bytes.len())));
    }
    let mut values = bytes[16..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let weights = DMatrix::from_row_iterator(rows, cols, values.by_ref().take(rows * cols));
    let bias = DVector::from_iterator(rows, values);
    if weights.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
        return Err(bad("weights contain non-finite values"));
    }
    Ok((weights, bias))
}

/// Writes `metadata.json` and `weights.bin` into `dir`.
pub fn save_model(model: &ScorerModel, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    fs::write(dir.join(WEIGHTS_FILE), weights_bytes(&model.weights, &model.bias))?;
    let mut json = serde_json::to_string_pretty(&model.metadata)?;
    json.push('\n');
    fs::write(dir.join(METADATA_FILE), json)?;
    Ok(())
}

pub fn load_model(dir: impl AsRef<Path>, catalog: &StatementCatalog) -> Result<ScorerModel> {
    let dir = dir.as_ref();
    let meta_text = fs::read_to_string(dir.join(METADATA_FILE))?;
    let metadata: ModelMetadata = serde_json::from_str(&meta_text)
        .map_err(|e| Error::ModelFormat(format!("{}: {e}", dir.join(METADATA_FILE).display())))?;
    if metadata.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::ModelFormat(format!(
            "model format version {} is not supported (expected {MODEL_FORMAT_VERSION})",
            metadata.format_version
        )));
    }
    let actual = catalog.hash();
    if metadata.catalog_hash != actual {
        return Err(Error::CatalogMismatch { expected: metadata.catalog_hash, actual });
    }
    let bytes = fs::read(dir.join(WEIGHTS_FILE))?;
    let digest = hex::encode(Sha256::digest(&bytes));
    if digest != metadata.weights_sha256 {
        return Err(Error::ModelFormat("weights checksum does not match metadata".into()));
    }
    let (weights, bias) = parse_weights(&bytes)?;
    if bias.len() != catalog.len() || bias.len() != metadata.statement_ids.len() {
        return Err(Error::ModelFormat(format!("head has {} outputs for {} statements", bias.len(), catalog.len())));
    }
    let encoder = metadata.backend.instantiate()?;
    if encoder.width() != weights.ncols() || metadata.input_width != weights.ncols() {
        return Err(Error::ModelFormat(format!(
            "encoder width {} does not match head input width {}",
            encoder.width(),
            weights.ncols()
        )));
    }
    Ok(ScorerModel { metadata, encoder, weights, bias })
}
