//! Service-token sequence corpora generated from a [`Wskg`].
//!
//! Three strategies are provided: label-restricted depth-first paths,
//! label-restricted breadth-first levels (which may bundle several services
//! into one token), and probabilistic walks over the whole graph.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::ingest::ServiceId;
use crate::wskg::{GraphError, LabelView, Wskg};

/// A vocabulary element: a non-empty set of services. Singletons come from
/// DFS and PW; BFS may produce bundles.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ServiceToken {
    members: Vec<ServiceId>,
    key: String,
}

impl ServiceToken {
    pub fn singleton(service: ServiceId) -> Self {
        let key = service.to_string();
        ServiceToken {
            members: vec![service],
            key,
        }
    }

    /// Builds a token from any non-empty collection of services.
    pub fn from_members(members: impl IntoIterator<Item = ServiceId>) -> Result<Self, CorpusError> {
        let set: BTreeSet<ServiceId> = members.into_iter().collect();
        if set.is_empty() {
            return Err(CorpusError::EmptyToken);
        }
        let members: Vec<ServiceId> = set.into_iter().collect();
        let key = members
            .iter()
            .map(ServiceId::as_str)
            .collect::<Vec<_>>()
            .join("&");
        Ok(ServiceToken { members, key })
    }

    /// Parses a canonical key (`s6&s7`). Member order in the input does not
    /// matter.
    pub fn parse(key: &str) -> Result<Self, CorpusError> {
        let members = key
            .split('&')
            .map(|m| ServiceId::parse(m).map_err(|_| CorpusError::BadToken(key.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_members(members)
    }

    pub fn members(&self) -> &[ServiceId] {
        &self.members
    }

    pub fn key(&self) -> &str {
        &self.key
    }

    pub fn is_bundle(&self) -> bool {
        self.members.len() > 1
    }

    pub fn contains(&self, s: &ServiceId) -> bool {
        self.members.binary_search(s).is_ok()
    }
}

impl Ord for ServiceToken {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.cmp(&other.key)
    }
}

impl PartialOrd for ServiceToken {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ServiceToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key)
    }
}

impl Serialize for ServiceToken {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.key)
    }
}

impl<'de> Deserialize<'de> for ServiceToken {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        ServiceToken::parse(&raw).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CorpusError {
    #[error("empty service token")]
    EmptyToken,
    #[error("invalid token `{0}`")]
    BadToken(String),
    #[error("invalid walk config: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Dfs,
    Bfs,
    Pw,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Dfs => "dfs",
            Strategy::Bfs => "bfs",
            Strategy::Pw => "pw",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dfs" => Ok(Strategy::Dfs),
            "bfs" => Ok(Strategy::Bfs),
            "pw" => Ok(Strategy::Pw),
            other => Err(format!(
                "unknown strategy `{other}` (expected dfs, bfs or pw)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub strategy: Strategy,
    pub start: ServiceId,
    /// Workflow label for DFS/BFS, `"pw"` for walks.
    pub source: String,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    pub tokens: Vec<ServiceToken>,
    /// `None` for sequences read back from a corpus file.
    pub provenance: Option<Provenance>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(ServiceToken::key)
    }

    fn line(&self) -> String {
        self.keys().collect::<Vec<_>>().join(" ")
    }
}

/// Sequences plus token frequencies. The vocabulary is always recomputed from
/// the sequences, so the two cannot disagree.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    sequences: Vec<TokenSequence>,
    vocabulary: BTreeMap<ServiceToken, u64>,
}

impl Corpus {
    /// Builds a corpus, dropping sequences shorter than two tokens.
    pub fn new(sequences: Vec<TokenSequence>) -> Self {
        let sequences: Vec<TokenSequence> =
            sequences.into_iter().filter(|s| s.len() >= 2).collect();
        let mut vocabulary = BTreeMap::new();
        for seq in &sequences {
            for t in &seq.tokens {
                *vocabulary.entry(t.clone()).or_insert(0) += 1;
            }
        }
        Corpus {
            sequences,
            vocabulary,
        }
    }

    pub fn sequences(&self) -> &[TokenSequence] {
        &self.sequences
    }

    pub fn vocabulary(&self) -> &BTreeMap<ServiceToken, u64> {
        &self.vocabulary
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    /// Concatenates corpora, recomputing the vocabulary.
    pub fn extend(self, other: Corpus) -> Corpus {
        let mut seqs = self.sequences;
        seqs.extend(other.sequences);
        Corpus::new(seqs)
    }

    /// Distinct `(a, b)` service pairs covered by adjacent tokens.
    pub fn covered_links(&self) -> BTreeSet<(ServiceId, ServiceId)> {
        let mut out = BTreeSet::new();
        for seq in &self.sequences {
            for pair in seq.tokens.windows(2) {
                for a in pair[0].members() {
                    for b in pair[1].members() {
                        out.insert((a.clone(), b.clone()));
                    }
                }
            }
        }
        out
    }

    /// One sequence per line, tokens separated by a space, bundle members
    /// joined with `&`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.sequences {
            out.push_str(&s.line());
            out.push('\n');
        }
        out
    }

    /// Reads the corpus text format. `#` lines and blank lines are skipped.
    pub fn from_text(text: &str) -> Result<Self, CorpusError> {
        let mut seqs = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let tokens = line
                .split(' ')
                .filter(|t| !t.is_empty())
                .map(ServiceToken::parse)
                .collect::<Result<Vec<_>, _>>()?;
            seqs.push(TokenSequence {
                tokens,
                provenance: None,
            });
        }
        Ok(Corpus::new(seqs))
    }
}

/// Collapses sequences with identical token-key lists, keeping the first.
pub fn dedupe(corpus: &Corpus) -> Corpus {
    let mut seen: HashSet<Vec<&str>> = HashSet::new();
    let kept = corpus
        .sequences
        .iter()
        .filter(|s| seen.insert(s.keys().collect()))
        .cloned()
        .collect();
    Corpus::new(kept)
}

fn label_starts(g: &Wskg) -> Vec<(&String, &LabelView, &ServiceId)> {
    g.labels()
        .flat_map(|(label, view)| view.services.iter().map(move |s| (label, view, s)))
        .collect()
}

/// All maximal label-restricted paths from every service of every workflow.
pub fn generate_dfs(g: &Wskg) -> Corpus {
    generate_dfs_capped(g, None).0
}

/// As [`generate_dfs`], emitting at most `max_paths_per_start` paths from each
/// (label, start) pair. The second value counts the starts that hit the cap.
pub fn generate_dfs_capped(g: &Wskg, max_paths_per_start: Option<usize>) -> (Corpus, usize) {
    let per_start: Vec<(Vec<TokenSequence>, bool)> = label_starts(g)
        .into_par_iter()
        .map(|(label, view, start)| {
            let cap = max_paths_per_start.unwrap_or(usize::MAX);
            let mut paths = Vec::new();
            let mut current = vec![start.clone()];
            let truncated = !dfs_paths(view, &mut current, &mut paths, cap);
            let seqs = paths
                .into_iter()
                .enumerate()
                .map(|(index, p)| TokenSequence {
                    tokens: p.into_iter().map(ServiceToken::singleton).collect(),
                    provenance: Some(Provenance {
                        strategy: Strategy::Dfs,
                        start: start.clone(),
                        source: label.clone(),
                        index,
                    }),
                })
                .collect();
            (seqs, truncated)
        })
        .collect();
    let truncated = per_start.iter().filter(|(_, t)| *t).count();
    if truncated > 0 {
        log::warn!("DFS path cap reached for {truncated} start services");
    }
    let seqs = per_start.into_iter().flat_map(|(s, _)| s).collect();
    (Corpus::new(seqs), truncated)
}

/// Returns false when the cap stopped enumeration early.
fn dfs_paths(
    view: &LabelView,
    current: &mut Vec<ServiceId>,
    out: &mut Vec<Vec<ServiceId>>,
    cap: usize,
) -> bool {
    let last = current.last().expect("path is never empty").clone();
    let mut any = false;
    for next in view.successors_of(&last) {
        if current.contains(next) {
            continue;
        }
        any = true;
        current.push(next.clone());
        let complete = dfs_paths(view, current, out, cap);
        current.pop();
        if !complete {
            return false;
        }
    }
    if !any {
        if out.len() >= cap {
            return false;
        }
        out.push(current.clone());
    }
    true
}

/// Breadth-first level sequences: token k holds the services first reached at
/// depth k-1 from the start, within one workflow label.
pub fn generate_bfs(g: &Wskg) -> Corpus {
    let seqs: Vec<TokenSequence> = label_starts(g)
        .into_par_iter()
        .map(|(label, view, start)| {
            let mut visited: BTreeSet<&ServiceId> = BTreeSet::from([start]);
            let mut frontier: Vec<&ServiceId> = vec![start];
            let mut tokens = vec![ServiceToken::singleton(start.clone())];
            loop {
                let mut next: BTreeSet<&ServiceId> = BTreeSet::new();
                for u in &frontier {
                    for v in view.successors_of(u) {
                        if !visited.contains(v) {
                            next.insert(v);
                        }
                    }
                }
                if next.is_empty() {
                    break;
                }
                visited.extend(next.iter().copied());
                tokens.push(
                    ServiceToken::from_members(next.iter().map(|s| (*s).clone()))
                        .expect("level is non-empty"),
                );
                frontier = next.into_iter().collect();
            }
            TokenSequence {
                tokens,
                provenance: Some(Provenance {
                    strategy: Strategy::Bfs,
                    start: start.clone(),
                    source: label.clone(),
                    index: 0,
                }),
            }
        })
        .collect();
    Corpus::new(seqs)
}

/// Probabilistic-walk parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct PwConfig {
    /// Maximum tokens per walk.
    pub walk_length: usize,
    pub walks_per_vertex: usize,
    pub rng_seed: u64,
}

impl Default for PwConfig {
    fn default() -> Self {
        PwConfig {
            walk_length: 5,
            walks_per_vertex: 10,
            rng_seed: 42,
        }
    }
}

impl PwConfig {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.walk_length < 2 {
            return Err(CorpusError::Config("walk length must be at least 2".into()));
        }
        if self.walks_per_vertex < 1 {
            return Err(CorpusError::Config(
                "walks per vertex must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Softmax over normalized occurrence ratios `o(u,v) / o(u)` for the
/// out-neighbors of `u` not in `excluded`. `o(u)` is always the full
/// out-weight; only the normalizing sum is restricted. Entries are sorted by
/// service id.
pub fn transition_distribution(
    g: &Wskg,
    u: &ServiceId,
    excluded: &HashSet<ServiceId>,
) -> Result<Vec<(ServiceId, f64)>, GraphError> {
    let neighbors = g.out_neighbors(u)?;
    let total: usize = neighbors.iter().map(|(_, n)| n).sum();
    let weights: Vec<(ServiceId, f64)> = neighbors
        .into_iter()
        .filter(|(v, _)| !excluded.contains(*v))
        .map(|(v, n)| (v.clone(), (n as f64 / total as f64).exp()))
        .collect();
    let z: f64 = weights.iter().map(|(_, w)| w).sum();
    Ok(weights.into_iter().map(|(v, w)| (v, w / z)).collect())
}

/// FNV-1a, used to derive a per-start RNG stream that is stable across runs
/// and platforms.
fn stable_hash(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn walk_rng(seed: u64, start: &ServiceId) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stable_hash(start.as_str()));
    rng
}

fn sample<R: Rng>(dist: &[(ServiceId, f64)], rng: &mut R) -> Option<ServiceId> {
    let r: f64 = rng.random();
    let mut acc = 0.0;
    for (v, p) in dist {
        acc += p;
        if r < acc {
            return Some(v.clone());
        }
    }
    dist.last().map(|(v, _)| v.clone())
}

/// One acyclic probabilistic walk from `start`.
pub fn probabilistic_walk<R: Rng>(
    g: &Wskg,
    start: &ServiceId,
    walk_length: usize,
    rng: &mut R,
) -> Result<Vec<ServiceId>, GraphError> {
    let mut walk = vec![start.clone()];
    let mut visited: HashSet<ServiceId> = HashSet::from([start.clone()]);
    while walk.len() < walk_length {
        let current = walk.last().expect("walk is never empty");
        let dist = transition_distribution(g, current, &visited)?;
        match sample(&dist, rng) {
            Some(next) => {
                visited.insert(next.clone());
                walk.push(next);
            }
            None => break,
        }
    }
    Ok(walk)
}

/// `walks_per_vertex` walks from every service with at least one successor.
/// Each start owns an RNG stream derived from `(rng_seed, start)`, so the
/// output does not depend on thread scheduling.
pub fn generate_pw(g: &Wskg, cfg: &PwConfig) -> Result<Corpus, CorpusError> {
    cfg.validate()?;
    let starts: Vec<&ServiceId> = g
        .services()
        .iter()
        .filter(|s| g.out_weight(s).is_ok_and(|w| w > 0))
        .collect();
    let per_start: Vec<Vec<TokenSequence>> = starts
        .into_par_iter()
        .map(|start| {
            let mut rng = walk_rng(cfg.rng_seed, start);
            (0..cfg.walks_per_vertex)
                .map(|index| {
                    let walk = probabilistic_walk(g, start, cfg.walk_length, &mut rng)?;
                    Ok(TokenSequence {
                        tokens: walk.into_iter().map(ServiceToken::singleton).collect(),
                        provenance: Some(Provenance {
                            strategy: Strategy::Pw,
                            start: start.clone(),
                            source: "pw".into(),
                            index,
                        }),
                    })
                })
                .collect::<Result<Vec<_>, GraphError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Corpus::new(per_start.into_iter().flatten().collect()))
}

/// Dispatches to the chosen strategy and optionally removes duplicates.
pub fn generate(
    g: &Wskg,
    strategy: Strategy,
    pw: &PwConfig,
    dedup: bool,
    max_paths_per_start: Option<usize>,
) -> Result<Corpus, CorpusError> {
    let corpus = match strategy {
        Strategy::Dfs => generate_dfs_capped(g, max_paths_per_start).0,
        Strategy::Bfs => generate_bfs(g),
        Strategy::Pw => generate_pw(g, pw)?,
    };
    Ok(if dedup { dedupe(&corpus) } else { corpus })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Repository, WorkflowGraph};

    fn sid(s: &str) -> ServiceId {
        ServiceId::from(s)
    }

    fn graph(workflows: &[(&str, &[(&str, &str)])]) -> Wskg {
        let ws = workflows.iter().map(|(id, links)| {
            let services: BTreeSet<ServiceId> =
                links.iter().flat_map(|(a, b)| [sid(a), sid(b)]).collect();
            WorkflowGraph::new(*id, services, links.iter().map(|(a, b)| (sid(a), sid(b)))).unwrap()
        });
        Wskg::build(&Repository::from_workflows(ws).unwrap())
    }

    fn lines(c: &Corpus) -> Vec<String> {
        c.sequences().iter().map(|s| s.line()).collect()
    }

    #[test]
    fn token_keys_are_canonical() {
        let t = ServiceToken::parse("s7&s6").unwrap();
        assert_eq!(t.key(), "s6&s7");
        assert!(t.is_bundle());
        assert_eq!(
            ServiceToken::parse("").unwrap_err(),
            CorpusError::BadToken("".into())
        );
        assert!(ServiceToken::from_members(Vec::new()).is_err());
    }

    #[test]
    fn dfs_single_edge() {
        let g = graph(&[("w", &[("a", "b")])]);
        assert_eq!(lines(&generate_dfs(&g)), vec!["a b"]);
    }

    /// Brute-force oracle: every path to a sink, from every node.
    fn brute_paths(links: &[(&str, &str)]) -> BTreeSet<String> {
        let nodes: BTreeSet<&str> = links.iter().flat_map(|(a, b)| [*a, *b]).collect();
        let mut out = BTreeSet::new();
        fn rec(links: &[(&str, &str)], path: Vec<String>, out: &mut BTreeSet<String>) {
            let last = path.last().unwrap().clone();
            let next: Vec<&str> = links
                .iter()
                .filter(|(a, _)| *a == last)
                .map(|(_, b)| *b)
                .collect();
            if next.is_empty() {
                if path.len() >= 2 {
                    out.insert(path.join(" "));
                }
                return;
            }
            for n in next {
                let mut p = path.clone();
                p.push(n.to_string());
                rec(links, p, out);
            }
        }
        for n in nodes {
            rec(links, vec![n.to_string()], &mut out);
        }
        out
    }

    #[test]
    fn dfs_chain_matches_brute_force() {
        let links = [("a", "b"), ("b", "c")];
        let g = graph(&[("w", &links)]);
        let got: BTreeSet<String> = lines(&generate_dfs(&g)).into_iter().collect();
        assert_eq!(got, brute_paths(&links));
        assert_eq!(
            got,
            BTreeSet::from(["a b c".to_string(), "b c".to_string()])
        );
    }

    #[test]
    fn dfs_diamond_matches_brute_force() {
        let links = [
            ("a", "b"),
            ("a", "c"),
            ("b", "d"),
            ("c", "d"),
            ("d", "e"),
            ("a", "e"),
        ];
        let g = graph(&[("w", &links)]);
        let got: Vec<String> = lines(&generate_dfs(&g));
        let set: BTreeSet<String> = got.iter().cloned().collect();
        assert_eq!(got.len(), set.len());
        assert_eq!(set, brute_paths(&links));
    }

    #[test]
    fn dfs_cap_reports_truncation() {
        let links = [("a", "b"), ("a", "c"), ("a", "d")];
        let g = graph(&[("w", &links)]);
        let (c, truncated) = generate_dfs_capped(&g, Some(2));
        assert_eq!(truncated, 1);
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn bfs_levels() {
        let g = graph(&[("w", &[("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")])]);
        let got = lines(&generate_bfs(&g));
        assert_eq!(got, vec!["a b&c d", "b d", "c d"]);
    }

    #[test]
    fn transition_matches_formula() {
        let g = graph(&[
            ("1", &[("s7", "s10")]),
            ("2", &[("s7", "s10")]),
            ("3", &[("s7", "s10")]),
            ("4", &[("s7", "s10")]),
            ("5", &[("s7", "s9")]),
        ]);
        let d = transition_distribution(&g, &sid("s7"), &HashSet::new()).unwrap();
        let expected_s10 = 0.8f64.exp() / (0.8f64.exp() + 0.2f64.exp());
        assert_eq!(d[0].0, sid("s10"));
        assert!((d[0].1 - expected_s10).abs() < 1e-12);
        assert!((d[0].1 - 0.6457).abs() < 1e-4);
        assert!((d[1].1 - 0.3543).abs() < 1e-4);

        let only = transition_distribution(&g, &sid("s7"), &HashSet::from([sid("s10")])).unwrap();
        assert_eq!(only, vec![(sid("s9"), 1.0)]);
        assert!(transition_distribution(&g, &sid("s10"), &HashSet::new())
            .unwrap()
            .is_empty());
        assert!(transition_distribution(&g, &sid("zz"), &HashSet::new()).is_err());
    }

    #[test]
    fn transition_symmetric_counts() {
        let g = graph(&[("1", &[("a", "b"), ("a", "c")])]);
        let d = transition_distribution(&g, &sid("a"), &HashSet::new()).unwrap();
        assert_eq!(
            d.iter().map(|(_, p)| *p).collect::<Vec<_>>(),
            vec![0.5, 0.5]
        );
    }

    #[test]
    fn pw_chain_stops_at_sink() {
        let g = graph(&[("w", &[("a", "b"), ("b", "c")])]);
        let cfg = PwConfig {
            walk_length: 5,
            walks_per_vertex: 1,
            rng_seed: 7,
        };
        let c = generate_pw(&g, &cfg).unwrap();
        assert_eq!(lines(&c), vec!["a b c", "b c"]);
    }

    #[test]
    fn pw_never_revisits() {
        let g = graph(&[("w1", &[("a", "b")]), ("w2", &[("b", "a")])]);
        let cfg = PwConfig {
            walk_length: 10,
            walks_per_vertex: 3,
            rng_seed: 1,
        };
        let c = generate_pw(&g, &cfg).unwrap();
        assert!(lines(&c)
            .iter()
            .filter(|l| l.starts_with('a'))
            .all(|l| l == "a b"));
    }

    #[test]
    fn pw_config_validation() {
        let g = graph(&[("w", &[("a", "b")])]);
        let bad = PwConfig {
            walk_length: 1,
            ..PwConfig::default()
        };
        assert!(matches!(generate_pw(&g, &bad), Err(CorpusError::Config(_))));
    }

    #[test]
    fn dedupe_keeps_first() {
        let c = Corpus::from_text("a b\nb c\na b\n").unwrap();
        let d = dedupe(&c);
        assert_eq!(lines(&d), vec!["a b", "b c"]);
        assert_eq!(d.vocabulary()[&ServiceToken::parse("a").unwrap()], 1);
        assert_eq!(dedupe(&d), d);
    }

    #[test]
    fn text_format() {
        let c = Corpus::from_text("# comment\ns1 s2 s4 s7&s6\n\nlonely\n").unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.to_text(), "s1 s2 s4 s6&s7\n");
        assert!(Corpus::from_text("a b&&c").is_err());
    }
}
