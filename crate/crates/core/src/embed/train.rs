use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};

use rayon::prelude::*;

use super::model::{for_each_pair, sigmoid, EmbeddingModel, TrainConfig};
use super::EmbedError;
use crate::corpus::Corpus;

/// Parameters as relaxed atomics. Sequential training sees plain
/// load/store semantics; sharded training gets lock-free racy updates.
struct SharedParams {
    dim: usize,
    vectors: Vec<AtomicU64>,
    nodes: Vec<AtomicU64>,
}

impl SharedParams {
    fn from_model(m: &EmbeddingModel) -> Self {
        let wrap = |v: &[f64]| v.iter().map(|x| AtomicU64::new(x.to_bits())).collect();
        SharedParams {
            dim: m.dim,
            vectors: wrap(&m.vectors),
            nodes: wrap(&m.node_vectors),
        }
    }

    fn into_model(self, m: &mut EmbeddingModel) {
        let unwrap = |v: Vec<AtomicU64>| {
            v.into_iter()
                .map(|a| f64::from_bits(a.into_inner()))
                .collect()
        };
        m.vectors = unwrap(self.vectors);
        m.node_vectors = unwrap(self.nodes);
    }

    fn read(store: &[AtomicU64], row: usize, dim: usize, out: &mut [f64]) {
        for (o, a) in out.iter_mut().zip(&store[row * dim..(row + 1) * dim]) {
            *o = f64::from_bits(a.load(Ordering::Relaxed));
        }
    }

    fn write(store: &[AtomicU64], row: usize, dim: usize, values: &[f64]) {
        for (v, a) in values.iter().zip(&store[row * dim..(row + 1) * dim]) {
            a.store(v.to_bits(), Ordering::Relaxed);
        }
    }
}

struct Scratch {
    ctx: Vec<f64>,
    node: Vec<f64>,
    grad_ctx: Vec<f64>,
}

/// One SGD step on `-ln p(target | context)`. Returns false if any updated
/// parameter became non-finite.
fn sgd_step(
    model: &EmbeddingModel,
    params: &SharedParams,
    target: usize,
    context: usize,
    lr: f64,
    s: &mut Scratch,
) -> bool {
    let dim = params.dim;
    SharedParams::read(&params.vectors, context, dim, &mut s.ctx);
    s.grad_ctx.iter_mut().for_each(|g| *g = 0.0);
    let mut finite = true;
    for step in model.path(target) {
        SharedParams::read(&params.nodes, step.node, dim, &mut s.node);
        let sign = 1.0 - 2.0 * f64::from(step.bit);
        let x: f64 = s.node.iter().zip(&s.ctx).map(|(a, b)| a * b).sum();
        let g = -sign * (1.0 - sigmoid(sign * x));
        for k in 0..dim {
            s.grad_ctx[k] += g * s.node[k];
            s.node[k] -= lr * g * s.ctx[k];
        }
        finite &= s.node.iter().all(|v| v.is_finite());
        SharedParams::write(&params.nodes, step.node, dim, &s.node);
    }
    for k in 0..dim {
        s.ctx[k] -= lr * s.grad_ctx[k];
    }
    finite &= s.ctx.iter().all(|v| v.is_finite());
    SharedParams::write(&params.vectors, context, dim, &s.ctx);
    finite
}

/// Applies one SGD step to `model` in place (exposed for gradient tests).
pub fn apply_sgd_step(model: &mut EmbeddingModel, target: usize, context: usize, lr: f64) {
    let params = SharedParams::from_model(model);
    let dim = model.dim;
    let mut scratch = Scratch {
        ctx: vec![0.0; dim],
        node: vec![0.0; dim],
        grad_ctx: vec![0.0; dim],
    };
    sgd_step(model, &params, target, context, lr, &mut scratch);
    params.into_model(model);
}

/// Trains skip-gram embeddings with hierarchical softmax.
///
/// For every sequence, every centre position `i` and every `j` within the
/// window (`j != i`, clipped to the sequence), one SGD step is taken on
/// `-ln p(t_j | t_i)`. The learning rate decays linearly per centre position
/// from the initial to the final rate over all epochs.
pub fn train(corpus: &Corpus, config: &TrainConfig) -> Result<EmbeddingModel, EmbedError> {
    if corpus.is_empty() {
        return Err(EmbedError::EmptyCorpus);
    }
    let mut model = EmbeddingModel::initialize(corpus, config)?;
    let encoded: Vec<Vec<usize>> = corpus
        .sequences()
        .iter()
        .map(|s| {
            s.keys()
                .map(|k| {
                    model
                        .index_of(k)
                        .expect("vocabulary is built from the corpus")
                })
                .collect()
        })
        .collect();
    let positions: usize = encoded.iter().map(Vec::len).sum();
    let total = (positions * config.epochs).max(1) as f64;
    let (lr0, lr1) = (config.initial_learning_rate, config.final_learning_rate);
    let params = SharedParams::from_model(&model);
    let processed = AtomicUsize::new(0);
    let failed = AtomicBool::new(false);
    let dim = config.dim;

    let run_sequence = |seq_idx: usize, seq: &[usize], scratch: &mut Scratch, epoch: usize| {
        let mut centre = usize::MAX;
        let mut lr = lr0;
        let mut result = Ok(());
        for_each_pair(seq.len(), config.window, |i, j| {
            if result.is_err() {
                return;
            }
            if i != centre {
                centre = i;
                let done = processed.fetch_add(1, Ordering::Relaxed) as f64;
                lr = (lr0 - (lr0 - lr1) * done / total).max(lr1);
            }
            if !sgd_step(&model, &params, seq[j], seq[i], lr, scratch) {
                failed.store(true, Ordering::Relaxed);
                result = Err(EmbedError::NonFinite {
                    epoch,
                    sequence: seq_idx,
                    position: i,
                });
            }
        });
        result
    };

    for epoch in 0..config.epochs {
        if config.deterministic {
            let mut scratch = Scratch {
                ctx: vec![0.0; dim],
                node: vec![0.0; dim],
                grad_ctx: vec![0.0; dim],
            };
            for (i, seq) in encoded.iter().enumerate() {
                run_sequence(i, seq, &mut scratch, epoch)?;
            }
        } else {
            let chunk = (encoded.len() / rayon::current_num_threads().max(1)).max(1);
            encoded
                .par_chunks(chunk)
                .enumerate()
                .try_for_each(|(c, seqs)| {
                    let mut scratch = Scratch {
                        ctx: vec![0.0; dim],
                        node: vec![0.0; dim],
                        grad_ctx: vec![0.0; dim],
                    };
                    for (k, seq) in seqs.iter().enumerate() {
                        if failed.load(Ordering::Relaxed) {
                            break;
                        }
                        run_sequence(c * chunk + k, seq, &mut scratch, epoch)?;
                    }
                    Ok::<(), EmbedError>(())
                })?;
        }
    }
    params.into_model(&mut model);
    Ok(model)
}
