//! Seeded synthetic repositories with planted sequential motifs.
//!
//! Services get a random global rank; every edge points from lower to higher
//! rank, so every generated workflow is acyclic. A motif is a chain of
//! services in rank order. Each workflow stitches together contiguous
//! segments of one or two motifs and a little noise.

use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ingest::{Repository, ServiceId, WorkflowGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct SyntheticConfig {
    pub workflows: usize,
    pub services: usize,
    pub motifs: usize,
    pub motif_length: usize,
    /// Probability of one extra random link per workflow.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            workflows: 200,
            services: 60,
            motifs: 10,
            motif_length: 6,
            noise: 0.3,
            seed: 2024,
        }
    }
}

pub fn service_name(i: usize) -> ServiceId {
    ServiceId::from(format!("svc{i:03}").as_str())
}

/// The planted motif chains, in rank order.
pub fn motifs(cfg: &SyntheticConfig) -> (Vec<usize>, Vec<Vec<usize>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rank: Vec<usize> = (0..cfg.services).collect();
    rank.shuffle(&mut rng);
    let pool: Vec<usize> = (0..cfg.services).collect();
    let chains = (0..cfg.motifs)
        .map(|_| {
            let mut chain: Vec<usize> = pool
                .choose_multiple(&mut rng, cfg.motif_length.min(cfg.services))
                .copied()
                .collect();
            chain.sort_by_key(|&s| rank[s]);
            chain
        })
        .collect();
    (rank, chains)
}

pub fn generate(cfg: &SyntheticConfig) -> Repository {
    assert!(
        cfg.services >= 2 && cfg.motif_length >= 3,
        "synthetic config too small"
    );
    let (rank, chains) = motifs(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let mut workflows = Vec::with_capacity(cfg.workflows);
    for w in 0..cfg.workflows {
        let mut links: BTreeSet<(usize, usize)> = BTreeSet::new();
        let parts = if rng.random_bool(0.3) { 2 } else { 1 };
        for _ in 0..parts {
            let chain = chains.choose(&mut rng).expect("at least one motif");
            let len = rng.random_range(3..=chain.len());
            let start = rng.random_range(0..=chain.len() - len);
            for pair in chain[start..start + len].windows(2) {
                links.insert((pair[0], pair[1]));
            }
        }
        if rng.random_bool(cfg.noise) {
            let a = rng.random_range(0..cfg.services);
            let b = rng.random_range(0..cfg.services);
            if rank[a] < rank[b] {
                links.insert((a, b));
            } else if rank[b] < rank[a] {
                links.insert((b, a));
            }
        }
        let services: BTreeSet<ServiceId> = links
            .iter()
            .flat_map(|&(a, b)| [service_name(a), service_name(b)])
            .collect();
        let g = WorkflowGraph::new(
            format!("wf{w:04}"),
            services,
            links
                .iter()
                .map(|&(a, b)| (service_name(a), service_name(b))),
        )
        .expect("rank-ordered links form a DAG");
        workflows.push(g);
    }
    Repository::from_workflows(workflows).expect("generated ids are unique")
}
