use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::huffman::{HuffmanTree, PathStep};
use super::EmbedError;
use crate::corpus::{Corpus, ServiceToken};

/// Skip-gram training hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct TrainConfig {
    pub window: usize,
    pub dim: usize,
    /// Zero is allowed and yields the initialized model.
    pub epochs: usize,
    pub initial_learning_rate: f64,
    pub final_learning_rate: f64,
    pub rng_seed: u64,
    /// Sequential updates in corpus order. When false, sequences are sharded
    /// across threads with unsynchronized updates.
    pub deterministic: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            window: 3,
            dim: 50,
            epochs: 5,
            initial_learning_rate: 0.025,
            final_learning_rate: 1e-4,
            rng_seed: 1,
            deterministic: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), EmbedError> {
        let bad = |m: &str| Err(EmbedError::Config(m.to_string()));
        if self.window < 1 {
            return bad("window must be at least 1");
        }
        if self.dim < 1 {
            return bad("dimension must be at least 1");
        }
        if !(self.initial_learning_rate > 0.0 && self.initial_learning_rate.is_finite()) {
            return bad("initial learning rate must be positive");
        }
        if self.final_learning_rate.is_nan() || self.final_learning_rate <= 0.0 {
            return bad("final learning rate must be positive");
        }
        if self.final_learning_rate >= self.initial_learning_rate {
            return bad("final learning rate must be below the initial learning rate");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabEntry {
    pub token: ServiceToken,
    pub count: u64,
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln σ(x)` without underflow for large negative `x`.
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Token vectors, internal-node vectors and the Huffman coding they were
/// trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    pub(crate) vocab: Vec<VocabEntry>,
    pub(crate) index: HashMap<String, usize>,
    pub(crate) dim: usize,
    /// Row-major `|T| × dim` input vectors.
    pub(crate) vectors: Vec<f64>,
    /// Row-major `(|T| - 1) × dim` internal-node vectors.
    pub(crate) node_vectors: Vec<f64>,
    pub(crate) tree: HuffmanTree,
    pub(crate) config: TrainConfig,
}

/// Gradient of `-ln p(target | context)` for one pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGradient {
    pub context: Vec<f64>,
    /// `(internal node, gradient)` for every node on the target's path.
    pub nodes: Vec<(usize, Vec<f64>)>,
}

impl EmbeddingModel {
    /// A freshly initialized model for `corpus`'s vocabulary: inputs uniform
    /// in `[-0.5/d, 0.5/d]`, internal nodes zero.
    pub fn initialize(corpus: &Corpus, config: &TrainConfig) -> Result<Self, EmbedError> {
        config.validate()?;
        let vocab: Vec<VocabEntry> = corpus
            .vocabulary()
            .iter()
            .map(|(t, &c)| VocabEntry {
                token: t.clone(),
                count: c,
            })
            .collect();
        Self::from_vocab(vocab, config)
    }

    pub(crate) fn from_vocab(
        vocab: Vec<VocabEntry>,
        config: &TrainConfig,
    ) -> Result<Self, EmbedError> {
        let counts: Vec<u64> = vocab.iter().map(|v| v.count).collect();
        let tree = HuffmanTree::build(&counts)?;
        let dim = config.dim;
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        let half = 0.5 / dim as f64;
        let vectors = (0..vocab.len() * dim)
            .map(|_| rng.random_range(-half..half))
            .collect();
        let node_vectors = vec![0.0; (vocab.len() - 1) * dim];
        let index = vocab
            .iter()
            .enumerate()
            .map(|(i, v)| (v.token.key().to_string(), i))
            .collect();
        Ok(EmbeddingModel {
            vocab,
            index,
            dim,
            vectors,
            node_vectors,
            tree,
            config: config.clone(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn vocab(&self) -> &[VocabEntry] {
        &self.vocab
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn tree(&self) -> &HuffmanTree {
        &self.tree
    }

    pub fn index_of(&self, key: &str) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn contains(&self, key: &str) -> bool {
        self.index.contains_key(key)
    }

    pub fn token(&self, i: usize) -> &ServiceToken {
        &self.vocab[i].token
    }

    fn lookup(&self, key: &str) -> Result<usize, EmbedError> {
        self.index_of(key)
            .ok_or_else(|| EmbedError::UnknownToken(key.to_string()))
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vector_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn node_vector(&self, n: usize) -> &[f64] {
        &self.node_vectors[n * self.dim..(n + 1) * self.dim]
    }

    pub fn node_vector_mut(&mut self, n: usize) -> &mut [f64] {
        &mut self.node_vectors[n * self.dim..(n + 1) * self.dim]
    }

    pub fn path(&self, target: usize) -> &[PathStep] {
        self.tree.path(target)
    }

    /// `p(target | context)`: product over the target's path of
    /// `σ((1 - 2·bit) · ⟨node, context⟩)`.
    pub fn leaf_probability_idx(&self, target: usize, context: usize) -> f64 {
        self.log_leaf_probability_idx(target, context).exp()
    }

    pub fn log_leaf_probability_idx(&self, target: usize, context: usize) -> f64 {
        let ctx = self.vector(context);
        self.path(target)
            .iter()
            .map(|step| {
                let sign = 1.0 - 2.0 * f64::from(step.bit);
                log_sigmoid(sign * dot(self.node_vector(step.node), ctx))
            })
            .sum()
    }

    pub fn leaf_probability(&self, target: &str, context: &str) -> Result<f64, EmbedError> {
        Ok(self.leaf_probability_idx(self.lookup(target)?, self.lookup(context)?))
    }

    /// Analytic gradient of `J = -ln p(target | context)`.
    pub fn pair_gradient(&self, target: usize, context: usize) -> PairGradient {
        let ctx = self.vector(context);
        let mut grad_ctx = vec![0.0; self.dim];
        let nodes = self
            .path(target)
            .iter()
            .map(|step| {
                let node = self.node_vector(step.node);
                let sign = 1.0 - 2.0 * f64::from(step.bit);
                // dJ/dx for x = ⟨node, ctx⟩
                let g = -sign * (1.0 - sigmoid(sign * dot(node, ctx)));
                for (gc, nv) in grad_ctx.iter_mut().zip(node) {
                    *gc += g * nv;
                }
                (step.node, ctx.iter().map(|c| g * c).collect())
            })
            .collect();
        PairGradient {
            context: grad_ctx,
            nodes,
        }
    }

    /// Cosine similarity of two token vectors; 0 when either has zero norm.
    pub fn similarity_idx(&self, a: usize, b: usize) -> f64 {
        cosine(self.vector(a), self.vector(b))
    }

    pub fn similarity(&self, a: &str, b: &str) -> Result<f64, EmbedError> {
        Ok(self.similarity_idx(self.lookup(a)?, self.lookup(b)?))
    }

    /// Mean of `ln p(t_j | t_i)` over all skip-gram pairs of `corpus` that
    /// are in this model's vocabulary, with the configured window.
    pub fn mean_log_likelihood(&self, corpus: &Corpus) -> f64 {
        let mut total = 0.0;
        let mut pairs = 0usize;
        for seq in corpus.sequences() {
            let ids: Vec<Option<usize>> = seq.keys().map(|k| self.index_of(k)).collect();
            for_each_pair(ids.len(), self.config.window, |i, j| {
                if let (Some(c), Some(t)) = (ids[i], ids[j]) {
                    total += self.log_leaf_probability_idx(t, c);
                    pairs += 1;
                }
            });
        }
        if pairs == 0 {
            0.0
        } else {
            total / pairs as f64
        }
    }

    pub fn all_finite(&self) -> bool {
        self.vectors
            .iter()
            .chain(&self.node_vectors)
            .all(|x| x.is_finite())
    }
}

/// Calls `f(i, j)` for every centre position `i` and context position `j`
/// within `window`, clipped to the sequence bounds.
pub(crate) fn for_each_pair(len: usize, window: usize, mut f: impl FnMut(usize, usize)) {
    for i in 0..len {
        let lo = i.saturating_sub(window);
        let hi = (i + window).min(len.saturating_sub(1));
        for j in lo..=hi {
            if j != i {
                f(i, j);
            }
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot(a, b) / (na * nb)).clamp(-1.0, 1.0)
}
