//! Single-file checkpoints: a magic line, a little-endian u64 header length,
//! a JSON header naming every tensor with its shape, then the tensors' raw
//! little-endian f64 payloads in header order.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::config::TrainConfig;
use super::run::{LogRecord, TrainState};
use super::schedule::EarlyStopping;
use super::tasks::Evaluation;
use crate::autodiff::Tensor;
use crate::data::Vocabulary;
use crate::error::{Error, Result};
use crate::reader::{ModelParams, ReaderConfig};

const MAGIC: &[u8] = b"REFREADER-CHECKPOINT 1\n";

const PARAM: &str = "param/";
const STATE: &str = "state/";
const ADAM_M: &str = "adam.m/";
const ADAM_V: &str = "adam.v/";

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub reader: ReaderConfig,
    pub vocab: Vocabulary,
    /// Best parameters of the run.
    pub params: ModelParams,
    pub epoch: usize,
    pub best_metric: Option<f64>,
    pub seed: u64,
    pub regime: Option<String>,
    pub threshold: Option<f64>,
    pub train: Option<TrainConfig>,
    /// Present when the run can be continued.
    pub resume: Option<TrainState>,
}

#[derive(Serialize, Deserialize)]
struct ResumeMeta {
    epoch: usize,
    adam_t: u64,
    stopper: EarlyStopping,
    best_epoch: usize,
    best_eval: Option<Evaluation>,
    best_tau: f64,
    stopped: bool,
    log: Vec<LogRecord>,
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    reader: ReaderConfig,
    vocab: Vec<String>,
    epoch: usize,
    best_metric: Option<f64>,
    seed: u64,
    regime: Option<String>,
    threshold: Option<f64>,
    train: Option<TrainConfig>,
    frozen: Vec<String>,
    resume: Option<ResumeMeta>,
    tensors: Vec<TensorEntry>,
}

fn bad(detail: impl Into<String>) -> Error {
    Error::Checkpoint(detail.into())
}

fn vector_tensor(v: &[f64]) -> Tensor {
    Tensor::from_raw(vec![v.len()], v.to_vec())
}

impl Checkpoint {
    pub fn new(reader: ReaderConfig, vocab: Vocabulary, params: ModelParams) -> Self {
        Checkpoint {
            reader,
            vocab,
            params,
            epoch: 0,
            best_metric: None,
            seed: 0,
            regime: None,
            threshold: None,
            train: None,
            resume: None,
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut tensors: Vec<(String, &Tensor)> = Vec::new();
        for (k, t) in self.params.iter() {
            tensors.push((format!("{PARAM}{k}"), t));
        }
        let mut owned: Vec<(String, Tensor)> = Vec::new();
        let resume = self.resume.as_ref().map(|s| {
            for (k, t) in s.params.iter() {
                tensors.push((format!("{STATE}{k}"), t));
            }
            for (k, m) in &s.adam.m {
                owned.push((format!("{ADAM_M}{k}"), vector_tensor(m)));
            }
            for (k, v) in &s.adam.v {
                owned.push((format!("{ADAM_V}{k}"), vector_tensor(v)));
            }
            ResumeMeta {
                epoch: s.epoch,
                adam_t: s.adam.t,
                stopper: s.stopper.clone(),
                best_epoch: s.best_epoch,
                best_eval: s.best_eval.clone(),
                best_tau: s.best_tau,
                stopped: s.stopped,
                log: s.log.clone(),
            }
        });
        if let Some(s) = &self.resume {
            if s.best != self.params {
                return Err(bad("resume state's best parameters differ from the checkpoint parameters"));
            }
        }
        tensors.extend(owned.iter().map(|(k, t)| (k.clone(), t)));

        let header = Header {
            reader: self.reader.clone(),
            vocab: self.vocab.tokens().to_vec(),
            epoch: self.epoch,
            best_metric: self.best_metric,
            seed: self.seed,
            regime: self.regime.clone(),
            threshold: self.threshold,
            train: self.train.clone(),
            frozen: self.params.frozen().cloned().collect(),
            resume,
            tensors: tensors
                .iter()
                .map(|(name, t)| TensorEntry {
                    name: name.clone(),
                    shape: t.shape().to_vec(),
                })
                .collect(),
        };
        let json = serde_json::to_vec(&header).map_err(|e| bad(e.to_string()))?;
        let payload: usize = tensors.iter().map(|(_, t)| t.numel() * 8).sum();
        let mut out = Vec::with_capacity(MAGIC.len() + 8 + json.len() + payload);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for (_, t) in &tensors {
            for x in t.data() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let rest = bytes.strip_prefix(MAGIC).ok_or_else(|| bad("not a checkpoint file"))?;
        if rest.len() < 8 {
            return Err(bad("truncated header length"));
        }
        let (len, rest) = rest.split_at(8);
        let len = u64::from_le_bytes(len.try_into().expect("8 bytes")) as usize;
        if rest.len() < len {
            return Err(bad("truncated header"));
        }
        let (json, mut payload) = rest.split_at(len);
        let header: Header = serde_json::from_slice(json).map_err(|e| bad(format!("header: {e}")))?;

        let mut tensors: BTreeMap<String, Tensor> = BTreeMap::new();
        for entry in &header.tensors {
            let n: usize = entry.shape.iter().product();
            if payload.len() < n * 8 {
                return Err(bad(format!("payload of {} truncated", entry.name)));
            }
            let (chunk, tail) = payload.split_at(n * 8);
            payload = tail;
            let data = chunk
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            let t = Tensor::new(entry.shape.clone(), data).map_err(|e| bad(format!("{}: {e}", entry.name)))?;
            if tensors.insert(entry.name.clone(), t).is_some() {
                return Err(bad(format!("duplicate tensor {}", entry.name)));
            }
        }
        if !payload.is_empty() {
            return Err(bad(format!("{} trailing bytes", payload.len())));
        }

        let vocab = Vocabulary::from_text(&(header.vocab.join("\n") + "\n")).map_err(|e| bad(format!("vocabulary: {e}")))?;
        let mut take = |prefix: &str| -> BTreeMap<String, Tensor> {
            let keys: Vec<String> = tensors.keys().filter(|k| k.starts_with(prefix)).cloned().collect();
            keys.into_iter()
                .map(|k| {
                    let t = tensors.remove(&k).expect("listed key");
                    (k[prefix.len()..].to_string(), t)
                })
                .collect()
        };
        let build = |map: BTreeMap<String, Tensor>| -> Result<ModelParams> {
            let mut p = ModelParams::from_tensors(&header.reader, vocab.len(), map).map_err(|e| bad(e.to_string()))?;
            for name in &header.frozen {
                p.freeze(name);
            }
            Ok(p)
        };
        let params = build(take(PARAM))?;
        let state_params = take(STATE);
        let m = take(ADAM_M);
        let v = take(ADAM_V);
        if let Some(k) = tensors.keys().next() {
            return Err(bad(format!("unexpected tensor {k}")));
        }

        let resume = match header.resume {
            None => None,
            Some(r) => {
                let flat = |map: BTreeMap<String, Tensor>| map.into_iter().map(|(k, t)| (k, t.into_data())).collect();
                Some(TrainState {
                    epoch: r.epoch,
                    params: build(state_params)?,
                    adam: AdamState {
                        t: r.adam_t,
                        m: flat(m),
                        v: flat(v),
                    },
                    stopper: r.stopper,
                    best: params.clone(),
                    best_epoch: r.best_epoch,
                    best_eval: r.best_eval,
                    best_tau: r.best_tau,
                    stopped: r.stopped,
                    log: r.log,
                })
            }
        };
        Ok(Checkpoint {
            reader: header.reader,
            vocab,
            params,
            epoch: header.epoch,
            best_metric: header.best_metric,
            seed: header.seed,
            regime: header.regime,
            threshold: header.threshold,
            train: header.train,
            resume,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
