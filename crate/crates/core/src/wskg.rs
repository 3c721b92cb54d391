//! The web-service knowledge graph: a directed multigraph whose edges are
//! `(upstream, downstream, workflow label)` triples.
//!
//! Edge triples are the only stored truth. Pair-level occurrence counts are
//! derived from the label sets kept in the adjacency index.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::corpus::ServiceToken;
use crate::ingest::{Repository, ServiceId, WorkflowGraph};

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("unknown service `{0}`")]
    UnknownService(String),
    #[error("empty service token")]
    EmptyToken,
    #[error("edge list line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("workflow label `{label}` would contain a cycle through `{service}`")]
    CyclicLabel { label: String, service: String },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub src: ServiceId,
    pub dst: ServiceId,
    pub workflow_label: String,
}

type LabelSets = BTreeMap<ServiceId, BTreeSet<String>>;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Wskg {
    services: BTreeSet<ServiceId>,
    edges: BTreeSet<Edge>,
    out: BTreeMap<ServiceId, LabelSets>,
    inc: BTreeMap<ServiceId, LabelSets>,
    /// Per-label services and successor lists, for label-restricted traversal.
    labels: BTreeMap<String, LabelView>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelView {
    pub services: BTreeSet<ServiceId>,
    pub successors: BTreeMap<ServiceId, BTreeSet<ServiceId>>,
}

impl LabelView {
    pub fn successors_of(&self, u: &ServiceId) -> impl Iterator<Item = &ServiceId> {
        self.successors.get(u).into_iter().flatten()
    }
}

impl Wskg {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn build(repo: &Repository) -> Self {
        let mut g = Self::new();
        for w in repo.workflows() {
            g.add_workflow(w);
        }
        g
    }

    /// Appends one workflow's links as labeled edges.
    pub fn add_workflow(&mut self, workflow: &WorkflowGraph) {
        let label = workflow.id().to_string();
        let view = self.labels.entry(label.clone()).or_default();
        for s in workflow.services() {
            self.services.insert(s.clone());
            view.services.insert(s.clone());
        }
        for (src, dst) in workflow.links() {
            self.insert_edge(src.clone(), dst.clone(), label.clone());
        }
    }

    fn insert_edge(&mut self, src: ServiceId, dst: ServiceId, label: String) {
        self.services.insert(src.clone());
        self.services.insert(dst.clone());
        let view = self.labels.entry(label.clone()).or_default();
        view.services.insert(src.clone());
        view.services.insert(dst.clone());
        view.successors
            .entry(src.clone())
            .or_default()
            .insert(dst.clone());
        self.out
            .entry(src.clone())
            .or_default()
            .entry(dst.clone())
            .or_default()
            .insert(label.clone());
        self.inc
            .entry(dst.clone())
            .or_default()
            .entry(src.clone())
            .or_default()
            .insert(label.clone());
        self.edges.insert(Edge {
            src,
            dst,
            workflow_label: label,
        });
    }

    pub fn services(&self) -> &BTreeSet<ServiceId> {
        &self.services
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn contains(&self, s: &ServiceId) -> bool {
        self.services.contains(s)
    }

    pub fn labels(&self) -> impl Iterator<Item = (&String, &LabelView)> {
        self.labels.iter()
    }

    pub fn label(&self, label: &str) -> Option<&LabelView> {
        self.labels.get(label)
    }

    fn check(&self, s: &ServiceId) -> Result<(), GraphError> {
        if self.services.contains(s) {
            Ok(())
        } else {
            Err(GraphError::UnknownService(s.to_string()))
        }
    }

    /// Number of distinct workflow labels on `u -> v` edges.
    pub fn occurrence(&self, u: &ServiceId, v: &ServiceId) -> Result<usize, GraphError> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.occurrence_unchecked(u, v))
    }

    fn occurrence_unchecked(&self, u: &ServiceId, v: &ServiceId) -> usize {
        self.out
            .get(u)
            .and_then(|m| m.get(v))
            .map_or(0, BTreeSet::len)
    }

    /// Out-neighbors of `u` with their occurrence counts, sorted by id.
    pub fn out_neighbors(&self, u: &ServiceId) -> Result<Vec<(&ServiceId, usize)>, GraphError> {
        self.check(u)?;
        Ok(self
            .out
            .get(u)
            .map(|m| m.iter().map(|(v, ls)| (v, ls.len())).collect())
            .unwrap_or_default())
    }

    /// Sum of occurrence counts over all out-neighbors of `u`.
    pub fn out_weight(&self, u: &ServiceId) -> Result<usize, GraphError> {
        Ok(self.out_neighbors(u)?.iter().map(|(_, n)| n).sum())
    }

    /// Direct-adjacency counts between `anchor` and the members of `token`:
    /// `(anchor -> member, member -> anchor)` summed over members. Members
    /// missing from the graph contribute zero.
    pub fn successor_counts(
        &self,
        anchor: &ServiceId,
        token: &ServiceToken,
    ) -> Result<(usize, usize), GraphError> {
        self.check(anchor)?;
        if token.members().is_empty() {
            return Err(GraphError::EmptyToken);
        }
        let (mut n_suc, mut n_pre) = (0, 0);
        for c in token.members() {
            n_suc += self.occurrence_unchecked(anchor, c);
            n_pre += self.occurrence_unchecked(c, anchor);
        }
        Ok((n_suc, n_pre))
    }

    /// Exports as `src<TAB>dst<TAB>label` lines, sorted lexicographically.
    pub fn to_edge_list(&self) -> String {
        let mut lines: Vec<String> = self
            .edges
            .iter()
            .map(|e| format!("{}\t{}\t{}", e.src, e.dst, e.workflow_label))
            .collect();
        lines.sort();
        let mut out = String::new();
        for l in lines {
            let _ = writeln!(out, "{l}");
        }
        out
    }

    /// Parses the edge-list format produced by [`Wskg::to_edge_list`]. Blank
    /// lines and `#` comments are ignored.
    pub fn from_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut g = Self::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split('\t').collect();
            let err = |message: String| GraphError::Parse {
                line: i + 1,
                message,
            };
            if parts.len() != 3 {
                return Err(err(format!(
                    "expected 3 tab-separated fields, got {}",
                    parts.len()
                )));
            }
            let src = ServiceId::parse(parts[0]).map_err(|e| err(e.to_string()))?;
            let dst = ServiceId::parse(parts[1]).map_err(|e| err(e.to_string()))?;
            let label = parts[2].trim();
            if label.is_empty() {
                return Err(err("empty workflow label".into()));
            }
            if src == dst {
                return Err(err(format!("self-loop on `{src}`")));
            }
            g.insert_edge(src, dst, label.to_string());
        }
        for (label, view) in &g.labels {
            if let Some(service) = find_cycle(view) {
                return Err(GraphError::CyclicLabel {
                    label: label.clone(),
                    service: service.to_string(),
                });
            }
        }
        Ok(g)
    }
}

fn find_cycle(view: &LabelView) -> Option<&ServiceId> {
    let mut indegree: BTreeMap<&ServiceId, usize> = view.services.iter().map(|s| (s, 0)).collect();
    for succs in view.successors.values() {
        for d in succs {
            *indegree.entry(d).or_default() += 1;
        }
    }
    let mut ready: Vec<&ServiceId> = indegree
        .iter()
        .filter(|(_, &n)| n == 0)
        .map(|(s, _)| *s)
        .collect();
    let mut seen = 0;
    while let Some(n) = ready.pop() {
        seen += 1;
        for d in view.successors_of(n) {
            let c = indegree.get_mut(d)?;
            *c -= 1;
            if *c == 0 {
                ready.push(d);
            }
        }
    }
    if seen == indegree.len() {
        None
    } else {
        indegree.into_iter().find(|(_, n)| *n > 0).map(|(s, _)| s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sid(s: &str) -> ServiceId {
        ServiceId::from(s)
    }

    fn wf(id: &str, links: &[(&str, &str)]) -> WorkflowGraph {
        let services: BTreeSet<ServiceId> =
            links.iter().flat_map(|(a, b)| [sid(a), sid(b)]).collect();
        WorkflowGraph::new(id, services, links.iter().map(|(a, b)| (sid(a), sid(b)))).unwrap()
    }

    fn s7_repo() -> Repository {
        let mut ws: Vec<WorkflowGraph> = ["3432", "245", "232", "231"]
            .iter()
            .map(|id| wf(id, &[("s7", "s10")]))
            .collect();
        ws.push(wf("957", &[("s7", "s9")]));
        Repository::from_workflows(ws).unwrap()
    }

    #[test]
    fn occurrence_counts_labels() {
        let g = Wskg::build(&s7_repo());
        assert_eq!(g.occurrence(&sid("s7"), &sid("s10")).unwrap(), 4);
        assert_eq!(g.occurrence(&sid("s7"), &sid("s9")).unwrap(), 1);
        assert_eq!(g.occurrence(&sid("s9"), &sid("s7")).unwrap(), 0);
        assert_eq!(
            g.occurrence(&sid("nope"), &sid("s7")),
            Err(GraphError::UnknownService("nope".into()))
        );
    }

    #[test]
    fn out_weight_sums_occurrences() {
        let g = Wskg::build(&s7_repo());
        // oracle: count edge triples with src == s7
        let by_edges = g.edges().iter().filter(|e| e.src == sid("s7")).count();
        assert_eq!(g.out_weight(&sid("s7")).unwrap(), by_edges);
        assert_eq!(by_edges, 5);
        assert_eq!(g.out_weight(&sid("s10")).unwrap(), 0);
    }

    #[test]
    fn successor_counts_direction() {
        let g = Wskg::build(&s7_repo());
        let t = ServiceToken::singleton(sid("s10"));
        assert_eq!(g.successor_counts(&sid("s7"), &t).unwrap(), (4, 0));
        assert_eq!(
            g.successor_counts(&sid("s10"), &ServiceToken::singleton(sid("s7")))
                .unwrap(),
            (0, 4)
        );
        let far = ServiceToken::singleton(sid("s9"));
        assert_eq!(g.successor_counts(&sid("s10"), &far).unwrap(), (0, 0));
    }

    #[test]
    fn empty_repo_is_empty_graph() {
        let g = Wskg::build(&Repository::new());
        assert!(g.services().is_empty());
        assert!(g.edges().is_empty());
    }

    #[test]
    fn edge_list_round_trip() {
        let g = Wskg::build(&s7_repo());
        let text = g.to_edge_list();
        assert!(text.starts_with("s7\ts10\t231\n"));
        let back = Wskg::from_edge_list(&text).unwrap();
        assert_eq!(back.edges(), g.edges());
        assert_eq!(back.to_edge_list(), text);
    }

    #[test]
    fn edge_list_rejects_bad_lines() {
        assert!(matches!(
            Wskg::from_edge_list("a\tb\n"),
            Err(GraphError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            Wskg::from_edge_list("a\tb\tw\nb\ta\tw\n"),
            Err(GraphError::CyclicLabel { .. })
        ));
        // the same reversed pair under different labels is fine
        assert!(Wskg::from_edge_list("a\tb\tw1\nb\ta\tw2\n").is_ok());
    }
}
