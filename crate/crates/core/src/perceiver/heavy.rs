//! Pretrained transformer encoder (BERT/RoBERTa-family checkpoints) with
//! masked mean pooling. Expects `config.json`, `tokenizer.json` and
//! `model.safetensors` in the model directory.

use std::path::{Path, PathBuf};

use candle_core::{DType, Device, Tensor};
use candle_nn::VarBuilder;
use candle_transformers::models::bert::{BertModel, Config};
use tokenizers::{Tokenizer, TruncationParams};

use super::features::{BackendSpec, EncoderBackend};
use crate::{Error, Result};

pub struct TransformerEncoder {
    model_dir: PathBuf,
    max_tokens: usize,
    width: usize,
    model: BertModel,
    tokenizer: Tokenizer,
    device: Device,
}

impl std::fmt::Debug for TransformerEncoder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TransformerEncoder")
            .field("model_dir", &self.model_dir)
            .field("max_tokens", &self.max_tokens)
            .field("width", &self.width)
            .finish()
    }
}

fn enc_err(e: impl std::fmt::Display) -> Error {
    Error::Encoder(e.to_string())
}

impl TransformerEncoder {
    pub fn load(model_dir: &Path, max_tokens: usize) -> Result<Self> {
        let device = Device::Cpu;
        let config: Config = serde_json::from_str(&std::fs::read_to_string(model_dir.join("config.json"))?)?;
        let width = config.hidden_size;
        let mut tokenizer = Tokenizer::from_file(model_dir.join("tokenizer.json")).map_err(enc_err)?;
        tokenizer
            .with_truncation(Some(TruncationParams { max_length: max_tokens, ..Default::default() }))
            .map_err(enc_err)?;
        let weights = model_dir.join("model.safetensors");
        // SAFETY: the checkpoint file is treated as read-only for the encoder's lifetime.
        let vb = unsafe { VarBuilder::from_mmaped_safetensors(&[weights], DType::F32, &device) }.map_err(enc_err)?;
        let model = BertModel::load(vb, &config).map_err(enc_err)?;
        Ok(Self { model_dir: model_dir.to_path_buf(), max_tokens, width, model, tokenizer, device })
    }

    fn embed(&self, text: &str) -> candle_core::Result<Vec<f32>> {
        let encoding = self.tokenizer.encode(text, true).map_err(candle_core::Error::wrap)?;
        let ids = Tensor::new(encoding.get_ids(), &self.device)?.unsqueeze(0)?;
        let type_ids = ids.zeros_like()?;
        let mask = Tensor::new(encoding.get_attention_mask(), &self.device)?.unsqueeze(0)?;
        let hidden = self.model.forward(&ids, &type_ids, Some(&mask))?;
        let mask = mask.to_dtype(DType::F32)?.unsqueeze(2)?;
        let summed = hidden.broadcast_mul(&mask)?.sum(1)?;
        let count = mask.sum(1)?;
        summed.broadcast_div(&count)?.squeeze(0)?.to_vec1::<f32>()
    }
}

impl EncoderBackend for TransformerEncoder {
    fn name(&self) -> &str {
        "transformer"
    }

    fn width(&self) -> usize {
        self.width
    }

    fn encode(&self, text: &str) -> Result<Vec<f64>> {
        if text.trim().is_empty() {
            return Ok(vec![0.0; self.width]);
        }
        Ok(self.embed(text).map_err(enc_err)?.into_iter().map(f64::from).collect())
    }

    fn spec(&self) -> BackendSpec {
        BackendSpec::Heavy { model_dir: self.model_dir.clone(), max_tokens: self.max_tokens }
    }
}
