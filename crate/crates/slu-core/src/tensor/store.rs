//! Named parameter storage with Adam state and binary checkpoints.
//!
//! Checkpoints are a single JSON manifest line
//! `{"tensors": [{"name": ..., "rows": ..., "cols": ...}, ...], "meta": ...}`
//! followed by the raw little-endian `f64` values of every tensor in
//! manifest order. Save/load round-trips are bit-exact.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use super::Tensor;
use crate::error::{Error, Result};

/// Parameter initialization schemes.
#[derive(Debug, Clone, Copy)]
pub enum Init {
    Zeros,
    /// U(-a, a)
    Uniform(f64),
    /// U(-1/sqrt(rows), 1/sqrt(rows)); rows are the fan-in of `[in, out]`
    /// projection matrices
    FanIn,
}

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Debug, Clone)]
struct Slot {
    value: Tensor,
    grad: Tensor,
    m: Tensor,
    v: Tensor,
}

/// All trainable tensors of a model, keyed by name.
#[derive(Debug, Clone, Default)]
pub struct ParameterStore {
    slots: BTreeMap<String, Slot>,
    step: u64,
}

#[derive(Serialize, Deserialize)]
struct ManifestEntry {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    tensors: Vec<ManifestEntry>,
    meta: serde_json::Value,
}

impl ParameterStore {
    pub fn new() -> Self {
        ParameterStore::default()
    }

    /// Create a tensor if absent and return its name for chaining.
    pub fn init(&mut self, name: &str, rows: usize, cols: usize, init: Init, rng: &mut ChaCha12Rng) {
        if self.slots.contains_key(name) {
            return;
        }
        let mut value = Tensor::zeros(rows, cols);
        match init {
            Init::Zeros => {}
            Init::Uniform(a) => {
                for x in value.data.iter_mut() {
                    *x = rng.gen_range(-a..a);
                }
            }
            Init::FanIn => {
                let a = 1.0 / (rows as f64).sqrt();
                for x in value.data.iter_mut() {
                    *x = rng.gen_range(-a..a);
                }
            }
        }
        self.insert(name, value);
    }

    pub fn insert(&mut self, name: &str, value: Tensor) {
        let (r, c) = value.shape();
        self.slots.insert(
            name.to_string(),
            Slot {
                value,
                grad: Tensor::zeros(r, c),
                m: Tensor::zeros(r, c),
                v: Tensor::zeros(r, c),
            },
        );
    }

    pub fn value(&self, name: &str) -> Option<&Tensor> {
        self.slots.get(name).map(|s| &s.value)
    }

    pub fn value_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.slots.get_mut(name).map(|s| &mut s.value)
    }

    pub fn grad(&self, name: &str) -> Option<&Tensor> {
        self.slots.get(name).map(|s| &s.grad)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.slots.keys().map(String::as_str)
    }

    pub fn parameter_count(&self) -> usize {
        self.slots.values().map(|s| s.value.len()).sum()
    }

    pub(crate) fn add_grad(&mut self, name: &str, grad: &Tensor) {
        let slot = self.slots.get_mut(name).expect("gradient for unknown parameter");
        debug_assert_eq!(slot.value.shape(), grad.shape());
        for (g, d) in slot.grad.data.iter_mut().zip(&grad.data) {
            *g += d;
        }
    }

    pub fn zero_grads(&mut self) {
        for slot in self.slots.values_mut() {
            slot.grad.data.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    /// Scale all gradients so their global L2 norm is at most `max_norm`.
    pub fn clip_global_norm(&mut self, max_norm: f64) {
        let sq: f64 = self
            .slots
            .values()
            .map(|s| s.grad.data.iter().map(|g| g * g).sum::<f64>())
            .sum();
        let norm = sq.sqrt();
        if norm > max_norm && norm > 0.0 {
            let scale = max_norm / norm;
            for slot in self.slots.values_mut() {
                slot.grad.data.iter_mut().for_each(|g| *g *= scale);
            }
        }
    }

    /// One Adam update with bias correction, then gradients reset to zero.
    pub fn adam_step(&mut self, config: &AdamConfig) {
        self.step += 1;
        let t = self.step as f64;
        let bc1 = 1.0 - config.beta1.powf(t);
        let bc2 = 1.0 - config.beta2.powf(t);
        for slot in self.slots.values_mut() {
            for i in 0..slot.value.data.len() {
                let g = slot.grad.data[i];
                slot.m.data[i] = config.beta1 * slot.m.data[i] + (1.0 - config.beta1) * g;
                slot.v.data[i] = config.beta2 * slot.v.data[i] + (1.0 - config.beta2) * g * g;
                let m_hat = slot.m.data[i] / bc1;
                let v_hat = slot.v.data[i] / bc2;
                slot.value.data[i] -= config.lr * m_hat / (v_hat.sqrt() + config.eps);
            }
            slot.grad.data.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    /// Write a checkpoint: manifest line, then raw values.
    pub fn save(&self, meta: serde_json::Value, mut out: impl Write) -> Result<()> {
        let manifest = Manifest {
            tensors: self
                .slots
                .iter()
                .map(|(name, slot)| ManifestEntry {
                    name: name.clone(),
                    rows: slot.value.rows,
                    cols: slot.value.cols,
                })
                .collect(),
            meta,
        };
        serde_json::to_writer(&mut out, &manifest)?;
        out.write_all(b"\n")?;
        for slot in self.slots.values() {
            for x in &slot.value.data {
                out.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Read a checkpoint written by [`ParameterStore::save`]. Adam state
    /// and the step counter start fresh.
    pub fn load(mut reader: impl BufRead) -> Result<(Self, serde_json::Value)> {
        let mut manifest_line = String::new();
        reader.read_line(&mut manifest_line)?;
        let manifest: Manifest = serde_json::from_str(manifest_line.trim_end())?;
        let mut store = ParameterStore::new();
        for entry in &manifest.tensors {
            let len = entry.rows * entry.cols;
            let mut bytes = vec![0u8; len * 8];
            reader.read_exact(&mut bytes).map_err(|_| {
                Error::InvalidInput(format!(
                    "checkpoint truncated while reading tensor {:?}",
                    entry.name
                ))
            })?;
            let data: Vec<f64> = bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            store.insert(&entry.name, Tensor::new(entry.rows, entry.cols, data)?);
        }
        let mut trailing = Vec::new();
        reader.read_to_end(&mut trailing)?;
        if !trailing.is_empty() {
            return Err(Error::InvalidInput(format!(
                "checkpoint has {} unexpected trailing bytes",
                trailing.len()
            )));
        }
        Ok((store, manifest.meta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds::substream;
    use serde_json::json;

    #[test]
    fn first_adam_step_moves_by_learning_rate() {
        let mut store = ParameterStore::new();
        store.insert("w", Tensor::scalar(0.0));
        store.add_grad("w", &Tensor::scalar(1.0));
        store.adam_step(&AdamConfig { lr: 0.1, ..AdamConfig::default() });
        let w = store.value("w").unwrap().data[0];
        assert!(
            (w + 0.1).abs() < 1e-6,
            "bias-corrected first step should be -lr, got {w}"
        );
        // gradients cleared after the step
        assert_eq!(store.grad("w").unwrap().data[0], 0.0);
    }

    #[test]
    fn adam_is_deterministic() {
        let run = || {
            let mut rng = substream(3, "adam-test");
            let mut store = ParameterStore::new();
            store.init("w", 4, 4, Init::Uniform(0.5), &mut rng);
            for step in 0..25 {
                let grad = Tensor::new(
                    4,
                    4,
                    (0..16).map(|i| ((i + step) as f64 * 0.37).sin()).collect(),
                )
                .unwrap();
                store.add_grad("w", &grad);
                store.adam_step(&AdamConfig::default());
            }
            store.value("w").unwrap().data.clone()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn clip_rescales_to_max_norm() {
        let mut store = ParameterStore::new();
        store.insert("w", Tensor::zeros(1, 2));
        store.add_grad("w", &Tensor::row_vector(vec![3.0, 4.0]));
        store.clip_global_norm(1.0);
        let g = store.grad("w").unwrap();
        let norm = (g.data[0] * g.data[0] + g.data[1] * g.data[1]).sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
        // short gradients untouched
        store.zero_grads();
        store.add_grad("w", &Tensor::row_vector(vec![0.1, 0.2]));
        store.clip_global_norm(1.0);
        assert_eq!(store.grad("w").unwrap().data, vec![0.1, 0.2]);
    }

    #[test]
    fn init_is_seed_deterministic() {
        let build = |seed| {
            let mut rng = substream(seed, "init-test");
            let mut store = ParameterStore::new();
            store.init("a", 3, 5, Init::FanIn, &mut rng);
            store.init("b", 1, 5, Init::Zeros, &mut rng);
            store.value("a").unwrap().data.clone()
        };
        assert_eq!(build(11), build(11));
        assert_ne!(build(11), build(12));
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let mut rng = substream(5, "ckpt-test");
        let mut store = ParameterStore::new();
        store.init("layer.w", 7, 3, Init::Uniform(2.0), &mut rng);
        store.init("layer.b", 1, 3, Init::FanIn, &mut rng);
        let meta = json!({"model": "test", "vocab": ["a", "b"]});

        let mut buf = Vec::new();
        store.save(meta.clone(), &mut buf).unwrap();
        let (loaded, loaded_meta) = ParameterStore::load(buf.as_slice()).unwrap();
        assert_eq!(loaded_meta, meta);
        for name in ["layer.w", "layer.b"] {
            let a = store.value(name).unwrap();
            let b = loaded.value(name).unwrap();
            assert_eq!(a.shape(), b.shape());
            for (x, y) in a.data.iter().zip(&b.data) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        // saving the loaded store reproduces the bytes
        let mut buf2 = Vec::new();
        loaded.save(meta, &mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn truncated_checkpoint_rejected() {
        let mut rng = substream(5, "ckpt-test");
        let mut store = ParameterStore::new();
        store.init("w", 4, 4, Init::Uniform(1.0), &mut rng);
        let mut buf = Vec::new();
        store.save(serde_json::Value::Null, &mut buf).unwrap();
        let cut = buf.len() - 9;
        assert!(ParameterStore::load(&buf[..cut]).is_err());
        // trailing garbage also rejected
        buf.extend_from_slice(b"xx");
        assert!(ParameterStore::load(buf.as_slice()).is_err());
    }
}
