//! Online ranking of next-service candidates and composition sessions.
//!
//! A candidate `t` following the last selected token `t_l` is scored as
//! `p_suc(t_l, t) × sim(t_l, t)`, where `p_suc` is a two-way softmax over how
//! often members of `t` appear directly after vs. before `t_l` in the graph,
//! and `sim` is the cosine similarity of the learned vectors.

use std::collections::{HashMap, HashSet};
use std::sync::Mutex;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use thiserror::Error;

use crate::corpus::ServiceToken;
use crate::embed::EmbeddingModel;
use crate::ingest::ServiceId;
use crate::wskg::{GraphError, Wskg};

#[derive(Debug, Error, PartialEq)]
pub enum RecommendError {
    #[error("empty session")]
    EmptySession,
    #[error("cold start: token `{0}` never appeared in the training corpus")]
    ColdStart(String),
    #[error("unknown candidate token `{0}`")]
    UnknownCandidate(String),
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("k must be at least 1")]
    InvalidK,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RecommendationEntry {
    pub token: ServiceToken,
    pub score: f64,
    pub p_suc: f64,
    pub sim: f64,
    pub rank: usize,
}

/// Numerically stable logistic function.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `exp(n_suc) / (exp(n_pre) + exp(n_suc))`, evaluated as
/// `logistic(n_suc - n_pre)`.
pub fn p_successor_from_counts(n_suc: usize, n_pre: usize) -> f64 {
    logistic(n_suc as f64 - n_pre as f64)
}

pub fn p_successor(g: &Wskg, anchor: &ServiceId, token: &ServiceToken) -> Result<f64, GraphError> {
    let (s, p) = g.successor_counts(anchor, token)?;
    Ok(p_successor_from_counts(s, p))
}

/// Like [`p_successor`] for a possibly bundled anchor: counts are summed over
/// the anchor's members.
pub fn p_successor_for_token(
    g: &Wskg,
    last: &ServiceToken,
    token: &ServiceToken,
) -> Result<f64, GraphError> {
    let (mut s, mut p) = (0, 0);
    for a in last.members() {
        let (ds, dp) = g.successor_counts(a, token)?;
        s += ds;
        p += dp;
    }
    Ok(p_successor_from_counts(s, p))
}

fn score_idx(
    m: &EmbeddingModel,
    g: &Wskg,
    last: usize,
    candidate: usize,
) -> Result<RecommendationEntry, RecommendError> {
    let p_suc = p_successor_for_token(g, m.token(last), m.token(candidate))?;
    let sim = m.similarity_idx(last, candidate);
    Ok(RecommendationEntry {
        token: m.token(candidate).clone(),
        score: p_suc * sim,
        p_suc,
        sim,
        rank: 0,
    })
}

/// Scores one candidate against the last selected token. The returned entry
/// has rank 0.
pub fn score_token(
    m: &EmbeddingModel,
    g: &Wskg,
    last: &ServiceToken,
    candidate: &ServiceToken,
) -> Result<RecommendationEntry, RecommendError> {
    let l = m
        .index_of(last.key())
        .ok_or_else(|| RecommendError::ColdStart(last.key().to_string()))?;
    let c = m
        .index_of(candidate.key())
        .ok_or_else(|| RecommendError::UnknownCandidate(candidate.key().to_string()))?;
    score_idx(m, g, l, c)
}

/// Sorting rule: score descending, then canonical key ascending.
pub fn rank_order(a: &RecommendationEntry, b: &RecommendationEntry) -> std::cmp::Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.token.key().cmp(b.token.key()))
}

/// Scores every vocabulary token not in `excluded` against `last` and returns
/// the best `k`, ranked from 0.
pub fn recommend_for_token(
    m: &EmbeddingModel,
    g: &Wskg,
    last: &ServiceToken,
    excluded: &HashSet<&str>,
    k: usize,
) -> Result<Vec<RecommendationEntry>, RecommendError> {
    if k == 0 {
        return Err(RecommendError::InvalidK);
    }
    let l = m
        .index_of(last.key())
        .ok_or_else(|| RecommendError::ColdStart(last.key().to_string()))?;
    let mut entries = (0..m.len())
        .filter(|&c| !excluded.contains(m.token(c).key()))
        .map(|c| score_idx(m, g, l, c))
        .collect::<Result<Vec<_>, _>>()?;
    if entries.len() > k {
        entries.select_nth_unstable_by(k - 1, rank_order);
        entries.truncate(k);
    }
    entries.sort_by(rank_order);
    for (i, e) in entries.iter_mut().enumerate() {
        e.rank = i;
    }
    Ok(entries)
}

/// Top-k candidates to follow the session's last selected token. Every
/// token already in the session is excluded.
pub fn recommend_top_k(
    m: &EmbeddingModel,
    g: &Wskg,
    session: &Session,
    k: usize,
) -> Result<Vec<RecommendationEntry>, RecommendError> {
    let last = session.last().ok_or(RecommendError::EmptySession)?;
    let excluded: HashSet<&str> = session.selected.iter().map(|s| s.token.key()).collect();
    recommend_for_token(m, g, &last.token, &excluded, k)
}

fn now_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectedToken {
    pub token: ServiceToken,
    /// False for free-form tokens outside the model vocabulary.
    pub known: bool,
}

/// A composition in progress: the ordered tokens chosen so far.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Session {
    pub id: String,
    pub selected: Vec<SelectedToken>,
    /// Milliseconds since the Unix epoch.
    pub created_at: u64,
    pub updated_at: u64,
}

impl Session {
    pub fn new(id: impl Into<String>) -> Self {
        let now = now_millis();
        Session {
            id: id.into(),
            selected: Vec::new(),
            created_at: now,
            updated_at: now,
        }
    }

    /// A session whose selections are already known to `m`.
    pub fn with_tokens(id: impl Into<String>, m: &EmbeddingModel, tokens: &[ServiceToken]) -> Self {
        let mut s = Session::new(id);
        for t in tokens {
            s.select(t.clone(), m);
        }
        s
    }

    /// Appends a selection, flagging it unknown if the model has never seen it.
    pub fn select(&mut self, token: ServiceToken, m: &EmbeddingModel) {
        let known = m.contains(token.key());
        self.selected.push(SelectedToken { token, known });
        self.updated_at = now_millis().max(self.updated_at);
    }

    pub fn last(&self) -> Option<&SelectedToken> {
        self.selected.last()
    }
}

/// In-memory sessions with idle-time eviction.
pub struct SessionStore {
    ttl: Duration,
    sessions: Mutex<HashMap<String, Session>>,
}

impl SessionStore {
    pub fn new(ttl: Duration) -> Self {
        SessionStore {
            ttl,
            sessions: Mutex::new(HashMap::new()),
        }
    }

    fn evict(&self, map: &mut HashMap<String, Session>) {
        let cutoff = now_millis().saturating_sub(self.ttl.as_millis() as u64);
        map.retain(|_, s| s.updated_at >= cutoff);
    }

    pub fn create(&self) -> Session {
        let s = Session::new(uuid::Uuid::new_v4().to_string());
        let mut map = self.sessions.lock().expect("session lock poisoned");
        self.evict(&mut map);
        map.insert(s.id.clone(), s.clone());
        s
    }

    pub fn get(&self, id: &str) -> Result<Session, RecommendError> {
        let mut map = self.sessions.lock().expect("session lock poisoned");
        self.evict(&mut map);
        map.get(id)
            .cloned()
            .ok_or_else(|| RecommendError::UnknownSession(id.to_string()))
    }

    pub fn select(
        &self,
        id: &str,
        token: ServiceToken,
        m: &EmbeddingModel,
    ) -> Result<Session, RecommendError> {
        let mut map = self.sessions.lock().expect("session lock poisoned");
        self.evict(&mut map);
        let s = map
            .get_mut(id)
            .ok_or_else(|| RecommendError::UnknownSession(id.to_string()))?;
        s.select(token, m);
        Ok(s.clone())
    }

    pub fn len(&self) -> usize {
        self.sessions.lock().expect("session lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Default for SessionStore {
    fn default() -> Self {
        SessionStore::new(Duration::from_secs(3600))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_suc_closed_form() {
        assert_eq!(p_successor_from_counts(3, 3), 0.5);
        assert!((p_successor_from_counts(4, 0) - 0.9820).abs() < 1e-4);
        assert!((p_successor_from_counts(0, 3) - 0.0474).abs() < 1e-4);
        let big = p_successor_from_counts(1_000_000, 0);
        assert!(big.is_finite() && big == 1.0);
        assert!(p_successor_from_counts(0, 1_000_000).is_finite());
    }

    #[test]
    fn p_suc_complement() {
        for (a, b) in [(0, 0), (1, 5), (7, 2), (20, 0)] {
            let s = p_successor_from_counts(a, b) + p_successor_from_counts(b, a);
            assert!((s - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn sessions_expire() {
        let store = SessionStore::new(Duration::from_millis(0));
        let s = store.create();
        std::thread::sleep(Duration::from_millis(5));
        assert!(matches!(
            store.get(&s.id),
            Err(RecommendError::UnknownSession(_))
        ));
    }
}
