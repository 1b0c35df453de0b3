use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ReaderConfig;
use crate::autodiff::{Parameters, Tensor};
use crate::error::{Error, Result};

pub const EMBED: &str = "embed";
pub const OUTPUT: &str = "output";
pub const MEM_PROJ: &str = "mem_proj";

/// Names of the weights of one GRU, prefixed by `prefix.`
pub struct GruNames {
    pub wz: String,
    pub uz: String,
    pub bz: String,
    pub wr: String,
    pub ur: String,
    pub br: String,
    pub wn: String,
    pub un: String,
    pub bn: String,
    pub bhn: String,
}

impl GruNames {
    pub fn new(prefix: &str) -> Self {
        let n = |s: &str| format!("{prefix}.{s}");
        GruNames {
            wz: n("wz"),
            uz: n("uz"),
            bz: n("bz"),
            wr: n("wr"),
            ur: n("ur"),
            br: n("br"),
            wn: n("wn"),
            un: n("un"),
            bn: n("bn"),
            bhn: n("bhn"),
        }
    }
}

/// Every trainable tensor of the reader, addressed by name.
///
/// Frozen tensors still live here but are fed to the tape as constants.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    tensors: BTreeMap<String, Tensor>,
    frozen: BTreeSet<String>,
}

/// Expected shape of every named tensor for a configuration.
pub fn expected_shapes(config: &ReaderConfig, vocab_size: usize) -> BTreeMap<String, Vec<usize>> {
    let (dx, dk, dv, dh, dq) = (
        config.embed_dim,
        config.key_dim,
        config.value_dim,
        config.hidden_dim,
        config.query_hidden_dim,
    );
    let mut s: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let mut put = |name: &str, shape: Vec<usize>| {
        s.insert(name.to_string(), shape);
    };
    put(EMBED, vec![vocab_size, dx]);
    put("pre.w", vec![dh, dh]);
    put("pre.u", vec![dh, dx]);
    put("gate.phi_e", vec![dh]);
    put("gate.phi_r", vec![dh]);
    put("gate.w_c", vec![dh]);
    put("gate.b_c", vec![1]);
    put("query.w1", vec![dq, dh]);
    put("query.b1", vec![dq]);
    put("query.w2", vec![dk, dq]);
    put("query.b2", vec![dk]);
    put("attn.bias", vec![1]);
    put("key.w1", vec![dk, dh]);
    put("key.b1", vec![dk]);
    put("key.w2", vec![dk, dk]);
    put("key.b2", vec![dk]);
    put("value.w", vec![dv, dh]);
    put("value.b", vec![dv]);
    for (prefix, input, hidden) in [("gru", dx, dh), ("gru_k", dk, dk), ("gru_v", dv, dv)] {
        let g = GruNames::new(prefix);
        for w in [&g.wz, &g.wr, &g.wn] {
            put(w, vec![hidden, input]);
        }
        for u in [&g.uz, &g.ur, &g.un] {
            put(u, vec![hidden, hidden]);
        }
        for b in [&g.bz, &g.br, &g.bn, &g.bhn] {
            put(b, vec![hidden]);
        }
    }
    if dv != dh {
        put(MEM_PROJ, vec![dh, dv]);
    }
    put(OUTPUT, vec![vocab_size, dh]);
    s
}

impl ModelParams {
    /// Seeded initialization: weights uniform in `±1/sqrt(fan_in)`, biases
    /// likewise, the attention bias at zero.
    pub fn init(config: &ReaderConfig, vocab_size: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        if vocab_size == 0 {
            return Err(Error::Contract("vocabulary is empty".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tensors = BTreeMap::new();
        for (name, shape) in expected_shapes(config, vocab_size) {
            let numel: usize = shape.iter().product();
            let bound = if name == "attn.bias" {
                0.0
            } else if name == EMBED {
                0.5
            } else if shape.len() == 2 {
                1.0 / (shape[1] as f64).sqrt()
            } else {
                // vectors act on the hidden state; biases take the fan-in of their layer
                1.0 / (numel as f64).sqrt()
            };
            let data = (0..numel)
                .map(|_| if bound > 0.0 { rng.gen_range(-bound..bound) } else { 0.0 })
                .collect();
            tensors.insert(name, Tensor::new(shape, data)?);
        }
        Ok(ModelParams {
            tensors,
            frozen: BTreeSet::new(),
        })
    }

    /// Builds from explicit tensors, checking names and shapes against the config.
    pub fn from_tensors(config: &ReaderConfig, vocab_size: usize, tensors: BTreeMap<String, Tensor>) -> Result<Self> {
        let p = ModelParams {
            tensors,
            frozen: BTreeSet::new(),
        };
        p.check_shapes(config, vocab_size)?;
        Ok(p)
    }

    pub fn check_shapes(&self, config: &ReaderConfig, vocab_size: usize) -> Result<()> {
        let expected = expected_shapes(config, vocab_size);
        for (name, shape) in &expected {
            match self.tensors.get(name) {
                None => return Err(Error::Contract(format!("missing parameter {name}"))),
                Some(t) if t.shape() != shape.as_slice() => {
                    return Err(Error::dim(
                        "params",
                        format!("{name} has shape {:?}, expected {:?}", t.shape(), shape),
                    ))
                }
                _ => {}
            }
        }
        if let Some(extra) = self.tensors.keys().find(|k| !expected.contains_key(*k)) {
            return Err(Error::Contract(format!("unexpected parameter {extra}")));
        }
        Ok(())
    }

    pub fn vocab_size(&self) -> usize {
        self.tensors[EMBED].shape()[0]
    }

    pub fn get(&self, name: &str) -> &Tensor {
        self.tensors
            .get(name)
            .unwrap_or_else(|| panic!("no parameter named {name}"))
    }

    /// Replaces a tensor of the same shape.
    pub fn set(&mut self, name: &str, value: Tensor) -> Result<()> {
        let slot = self
            .tensors
            .get_mut(name)
            .ok_or_else(|| Error::Contract(format!("no parameter named {name}")))?;
        if slot.shape() != value.shape() {
            return Err(Error::dim(
                "params",
                format!("{name}: {:?} vs {:?}", slot.shape(), value.shape()),
            ));
        }
        *slot = value;
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor)> {
        self.tensors.iter()
    }

    pub fn tensors(&self) -> &BTreeMap<String, Tensor> {
        &self.tensors
    }

    pub fn into_tensors(self) -> BTreeMap<String, Tensor> {
        self.tensors
    }

    pub fn freeze(&mut self, name: &str) {
        self.frozen.insert(name.to_string());
    }

    pub fn unfreeze(&mut self, name: &str) {
        self.frozen.remove(name);
    }

    pub fn is_frozen(&self, name: &str) -> bool {
        self.frozen.contains(name)
    }

    pub fn frozen(&self) -> impl Iterator<Item = &String> {
        self.frozen.iter()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.values().all(Tensor::is_finite)
    }

    pub fn num_scalars(&self) -> usize {
        self.tensors.values().map(Tensor::numel).sum()
    }
}

impl Parameters for ModelParams {
    fn names(&self) -> Vec<String> {
        self.tensors.keys().filter(|k| !self.frozen.contains(*k)).cloned().collect()
    }

    fn tensor(&self, name: &str) -> Option<&Tensor> {
        self.tensors.get(name)
    }

    fn tensor_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.tensors.get_mut(name)
    }
}
