//! Offline evaluation: random workflow split, leave-last-service-out cases,
//! PRE@K / REC@K / F1@K / VMRR and sweeps over the walk parameters.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{self, Corpus, CorpusError, PwConfig, ServiceToken, Strategy};
use crate::embed::{self, EmbedError, EmbeddingModel, TrainConfig};
use crate::ingest::{IngestError, Repository, ServiceId};
use crate::recommend::{recommend_for_token, RecommendError};
use crate::wskg::Wskg;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("need at least 2 workflows to split, got {0}")]
    TooFewWorkflows(usize),
    #[error("invalid evaluation config: {0}")]
    Config(String),
    #[error("K must be at least 1")]
    InvalidK,
    #[error("ground truth is empty")]
    EmptyGroundTruth,
    #[error("{0} recommendations exceed K = {1}")]
    TooManyEntries(usize, usize),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Recommend(#[from] RecommendError),
}

/// How test linkages unseen in training are filtered out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum CaseFilter {
    /// Anchor token in the model vocabulary; ground truth restricted to
    /// services seen in the training corpus.
    #[default]
    Vocabulary,
    /// Additionally require each ground-truth service to follow the anchor
    /// somewhere in the training sequences.
    Linkage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct EvalConfig {
    pub train_fraction: f64,
    pub k_values: Vec<usize>,
    pub split_seed: u64,
    pub strategy: Strategy,
    pub dedupe: bool,
    pub pw: PwConfig,
    pub train: TrainConfig,
    pub max_paths_per_start: Option<usize>,
    pub case_filter: CaseFilter,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            train_fraction: 0.8,
            k_values: vec![3, 5, 10],
            split_seed: 7,
            strategy: Strategy::Pw,
            dedupe: true,
            pw: PwConfig::default(),
            train: TrainConfig::default(),
            max_paths_per_start: None,
            case_filter: CaseFilter::Vocabulary,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(EvalError::Config("train fraction must be in (0, 1)".into()));
        }
        if self.k_values.is_empty() || self.k_values.contains(&0) {
            return Err(EvalError::Config(
                "K values must be non-empty and positive".into(),
            ));
        }
        Ok(())
    }
}

/// Seeded uniform split by workflow id into (train, test).
pub fn split_repository(
    repo: &Repository,
    cfg: &EvalConfig,
) -> Result<(Repository, Repository), EvalError> {
    cfg.validate()?;
    let n = repo.len();
    if n < 2 {
        return Err(EvalError::TooFewWorkflows(n));
    }
    let mut ids: Vec<&str> = repo.workflows().map(|w| w.id()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.split_seed);
    ids.shuffle(&mut rng);
    let n_train = ((n as f64 * cfg.train_fraction).round() as usize).clamp(1, n - 1);
    let pick = |ids: &[&str]| {
        Repository::from_workflows(
            ids.iter()
                .map(|id| repo.get(id).expect("id from repo").clone()),
        )
    };
    Ok((pick(&ids[..n_train])?, pick(&ids[n_train..])?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EvalCase {
    pub workflow_id: String,
    pub anchor: ServiceToken,
    pub ground_truth: BTreeSet<ServiceId>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CaseSet {
    pub cases: Vec<EvalCase>,
    /// Anchor never seen as a training token.
    pub dropped_unseen_anchor: usize,
    /// No ground-truth service survives the training-data filter.
    pub dropped_unseen_truth: usize,
}

/// Leave-last-service-out cases: one per (terminal, direct predecessor)
/// pair in each test workflow. The anchor is the predecessor; the ground
/// truth is every terminal that directly follows it.
pub fn build_eval_cases(
    test_repo: &Repository,
    train_vocab: &BTreeSet<ServiceToken>,
    train_links: &BTreeSet<(ServiceId, ServiceId)>,
    filter: CaseFilter,
) -> CaseSet {
    let vocab_keys: HashSet<&str> = train_vocab.iter().map(ServiceToken::key).collect();
    let vocab_services: HashSet<&ServiceId> =
        train_vocab.iter().flat_map(|t| t.members()).collect();
    let mut out = CaseSet::default();
    for w in test_repo.workflows() {
        let terminals: BTreeSet<&ServiceId> = w.terminals().collect();
        for t in &terminals {
            for p in w.predecessors(t) {
                let anchor = ServiceToken::singleton(p.clone());
                if !vocab_keys.contains(anchor.key()) {
                    out.dropped_unseen_anchor += 1;
                    continue;
                }
                let truth: BTreeSet<ServiceId> = w
                    .successors(p)
                    .filter(|s| terminals.contains(s))
                    .filter(|s| vocab_services.contains(s))
                    .filter(|s| {
                        filter == CaseFilter::Vocabulary
                            || train_links.contains(&(p.clone(), (*s).clone()))
                    })
                    .cloned()
                    .collect();
                if truth.is_empty() {
                    out.dropped_unseen_truth += 1;
                    continue;
                }
                out.cases.push(EvalCase {
                    workflow_id: w.id().to_string(),
                    anchor,
                    ground_truth: truth,
                });
            }
        }
    }
    out
}

/// An entry hits when any of its services is in the ground truth.
pub fn hit(entry: &ServiceToken, truth: &BTreeSet<ServiceId>) -> bool {
    entry.members().iter().any(|s| truth.contains(s))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub pre: f64,
    pub rec: f64,
    pub f1: f64,
    pub vmrr: f64,
}

/// Metrics for one ranked list against one ground truth.
///
/// Precision counts hit entries over `|R|`; recall counts distinct
/// ground-truth services covered by hit entries over `|G|`; VMRR is
/// `1 - idx/K` for the 0-based index of the earliest hit.
pub fn compute_metrics(
    ranked: &[ServiceToken],
    truth: &BTreeSet<ServiceId>,
    k: usize,
) -> Result<Metrics, EvalError> {
    if k == 0 {
        return Err(EvalError::InvalidK);
    }
    if truth.is_empty() {
        return Err(EvalError::EmptyGroundTruth);
    }
    if ranked.len() > k {
        return Err(EvalError::TooManyEntries(ranked.len(), k));
    }
    let mut hits = 0usize;
    let mut first_hit = None;
    let mut covered: BTreeSet<&ServiceId> = BTreeSet::new();
    for (i, e) in ranked.iter().enumerate() {
        if hit(e, truth) {
            hits += 1;
            first_hit.get_or_insert(i);
            covered.extend(e.members().iter().filter(|s| truth.contains(*s)));
        }
    }
    let pre = if ranked.is_empty() {
        0.0
    } else {
        hits as f64 / ranked.len() as f64
    };
    let rec = covered.len() as f64 / truth.len() as f64;
    let f1 = if pre + rec == 0.0 {
        0.0
    } else {
        2.0 * pre * rec / (pre + rec)
    };
    let vmrr = first_hit.map_or(0.0, |i| 1.0 - i as f64 / k as f64);
    Ok(Metrics { pre, rec, f1, vmrr })
}

/// Which model the evaluation ranks with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    Trained,
    /// Initialized vectors only, no SGD updates.
    Untrained,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MetricsReport {
    pub config: EvalConfig,
    pub case_count: usize,
    pub dropped_cases: usize,
    pub dropped_unseen_anchor: usize,
    pub dropped_unseen_truth: usize,
    pub train_workflows: usize,
    pub test_workflows: usize,
    pub vocab_size: usize,
    pub corpus_sequences: usize,
    pub metrics: BTreeMap<usize, Metrics>,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "strategy={}{} cases={} dropped={} (unseen anchor {}, unseen truth {}) vocab={} sequences={}",
            self.config.strategy,
            if self.config.dedupe { "-DR" } else { "" },
            self.case_count,
            self.dropped_cases,
            self.dropped_unseen_anchor,
            self.dropped_unseen_truth,
            self.vocab_size,
            self.corpus_sequences,
        );
        let _ = writeln!(
            out,
            "{:>4}  {:>7}  {:>7}  {:>7}  {:>7}",
            "K", "PRE", "REC", "F1", "VMRR"
        );
        for (k, m) in &self.metrics {
            let _ = writeln!(
                out,
                "{k:>4}  {:>7.4}  {:>7.4}  {:>7.4}  {:>7.4}",
                m.pre, m.rec, m.f1, m.vmrr
            );
        }
        out
    }
}

/// Train/test repositories already split; everything downstream of the split.
pub fn evaluate_split(
    train_repo: &Repository,
    test_repo: &Repository,
    cfg: &EvalConfig,
    arm: Arm,
) -> Result<MetricsReport, EvalError> {
    cfg.validate()?;
    let graph = Wskg::build(train_repo);
    let corpus = corpus::generate(
        &graph,
        cfg.strategy,
        &cfg.pw,
        cfg.dedupe,
        cfg.max_paths_per_start,
    )?;
    let model = match arm {
        Arm::Trained => embed::train(&corpus, &cfg.train)?,
        Arm::Untrained => EmbeddingModel::initialize(&corpus, &cfg.train)?,
    };
    let vocab: BTreeSet<ServiceToken> = corpus.vocabulary().keys().cloned().collect();
    let cases = build_eval_cases(test_repo, &vocab, &corpus.covered_links(), cfg.case_filter);
    let metrics = score_cases(&model, &graph, &cases.cases, &cfg.k_values)?;
    if cases.cases.is_empty() {
        log::warn!("evaluation produced no cases");
    }
    Ok(MetricsReport {
        config: cfg.clone(),
        case_count: cases.cases.len(),
        dropped_cases: cases.dropped_unseen_anchor + cases.dropped_unseen_truth,
        dropped_unseen_anchor: cases.dropped_unseen_anchor,
        dropped_unseen_truth: cases.dropped_unseen_truth,
        train_workflows: train_repo.len(),
        test_workflows: test_repo.len(),
        vocab_size: model.len(),
        corpus_sequences: corpus.len(),
        metrics,
    })
}

/// Mean metrics per K. One ranking of length max(K) is computed per case and
/// cut to each K.
pub fn score_cases(
    model: &EmbeddingModel,
    graph: &Wskg,
    cases: &[EvalCase],
    k_values: &[usize],
) -> Result<BTreeMap<usize, Metrics>, EvalError> {
    let k_max = *k_values.iter().max().ok_or(EvalError::InvalidK)?;
    let per_case: Vec<Vec<Metrics>> = cases
        .par_iter()
        .map(|case| {
            let excluded = HashSet::from([case.anchor.key()]);
            let ranked: Vec<ServiceToken> =
                recommend_for_token(model, graph, &case.anchor, &excluded, k_max)?
                    .into_iter()
                    .map(|e| e.token)
                    .collect();
            k_values
                .iter()
                .map(|&k| compute_metrics(&ranked[..k.min(ranked.len())], &case.ground_truth, k))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    let n = per_case.len().max(1) as f64;
    Ok(k_values
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let mut sum = Metrics::default();
            for m in per_case.iter().map(|ms| ms[i]) {
                sum.pre += m.pre;
                sum.rec += m.rec;
                sum.f1 += m.f1;
                sum.vmrr += m.vmrr;
            }
            let mean = Metrics {
                pre: sum.pre / n,
                rec: sum.rec / n,
                f1: sum.f1 / n,
                vmrr: sum.vmrr / n,
            };
            (k, mean)
        })
        .collect())
}

/// Full pipeline: split, generate, (dedupe), train, build cases, rank, average.
pub fn run_evaluation(repo: &Repository, cfg: &EvalConfig) -> Result<MetricsReport, EvalError> {
    run_evaluation_arm(repo, cfg, Arm::Trained)
}

pub fn run_evaluation_arm(
    repo: &Repository,
    cfg: &EvalConfig,
    arm: Arm,
) -> Result<MetricsReport, EvalError> {
    let (train, test) = split_repository(repo, cfg)?;
    evaluate_split(&train, &test, cfg, arm)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub walk_length: usize,
    pub walks_per_vertex: usize,
    pub report: MetricsReport,
}

/// One PW-DR evaluation per `(l, θ)` cell, each fully re-run.
pub fn sweep_pw(
    repo: &Repository,
    walk_lengths: &[usize],
    walks_per_vertex: &[usize],
    base: &EvalConfig,
) -> Result<Vec<SweepCell>, EvalError> {
    if walk_lengths.is_empty() || walks_per_vertex.is_empty() {
        return Err(EvalError::Config("sweep grids must be non-empty".into()));
    }
    let grid: Vec<(usize, usize)> = walk_lengths
        .iter()
        .flat_map(|&l| walks_per_vertex.iter().map(move |&t| (l, t)))
        .collect();
    grid.into_par_iter()
        .map(|(l, theta)| {
            let cfg = EvalConfig {
                strategy: Strategy::Pw,
                dedupe: true,
                pw: PwConfig {
                    walk_length: l,
                    walks_per_vertex: theta,
                    ..base.pw
                },
                ..base.clone()
            };
            Ok(SweepCell {
                walk_length: l,
                walks_per_vertex: theta,
                report: run_evaluation(repo, &cfg)?,
            })
        })
        .collect()
}

/// `l,theta,K,pre,rec,f1,vmrr` rows.
pub fn sweep_csv(cells: &[SweepCell]) -> String {
    let mut out = String::from("l,theta,K,pre,rec,f1,vmrr\n");
    for c in cells {
        for (k, m) in &c.report.metrics {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                c.walk_length, c.walks_per_vertex, k, m.pre, m.rec, m.f1, m.vmrr
            );
        }
    }
    out
}

/// Re-exported for convenience in reports and tests.
pub fn corpus_for(repo: &Repository, cfg: &EvalConfig) -> Result<Corpus, EvalError> {
    let graph = Wskg::build(repo);
    Ok(corpus::generate(
        &graph,
        cfg.strategy,
        &cfg.pw,
        cfg.dedupe,
        cfg.max_paths_per_start,
    )?)
}
