//! Workflow ingestion: Taverna-subset XML and canonical JSON into validated
//! [`WorkflowGraph`] values, plus on-disk repository loading.
//!
//! Service identity is the processor name, scoped across the whole
//! repository, so the same processor used in two workflows is one service.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Opaque, globally scoped service identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ServiceId(String);

impl ServiceId {
    /// Normalizes (trims) and validates a raw identifier.
    ///
    /// Identifiers must be non-empty and may not contain whitespace or `&`,
    /// since both are separators in the corpus and model file formats.
    pub fn parse(raw: &str) -> Result<Self, IngestError> {
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            return Err(IngestError::Validation("empty service identifier".into()));
        }
        if trimmed.chars().any(|c| c.is_whitespace() || c == '&') {
            return Err(IngestError::Validation(format!(
                "service identifier {trimmed:?} contains whitespace or '&'"
            )));
        }
        Ok(ServiceId(trimmed.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ServiceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ServiceId {
    /// Unchecked conversion for trusted identifiers (tests, fixtures,
    /// already-validated files).
    fn from(s: &str) -> Self {
        ServiceId(s.to_string())
    }
}

impl std::borrow::Borrow<str> for ServiceId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Service {
    pub id: ServiceId,
    pub name: String,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed XML at line {line}, column {column}: {message}")]
    Xml {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("link references undeclared processor `{0}`")]
    UndeclaredProcessor(String),
    #[error("self-loop link on `{0}`")]
    SelfLoop(String),
    #[error("workflow contains a cycle: {}", .0.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(" -> "))]
    Cycle(Vec<ServiceId>),
    #[error("workflow id `{id}` defined in both {} and {}", .first.display(), .second.display())]
    DuplicateWorkflow {
        id: String,
        first: PathBuf,
        second: PathBuf,
    },
    #[error("I/O error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// One workflow: its services and processor-level dependency links.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkflowGraph {
    id: String,
    services: BTreeSet<ServiceId>,
    links: BTreeSet<(ServiceId, ServiceId)>,
}

impl WorkflowGraph {
    /// Builds and validates a workflow. Duplicate links collapse to one.
    pub fn new<S, L>(id: impl Into<String>, services: S, links: L) -> Result<Self, IngestError>
    where
        S: IntoIterator<Item = ServiceId>,
        L: IntoIterator<Item = (ServiceId, ServiceId)>,
    {
        let id = id.into();
        if id.trim().is_empty() {
            return Err(IngestError::Validation("empty workflow id".into()));
        }
        let graph = WorkflowGraph {
            id: id.trim().to_string(),
            services: services.into_iter().collect(),
            links: links.into_iter().collect(),
        };
        graph.validate()?;
        Ok(graph)
    }

    fn validate(&self) -> Result<(), IngestError> {
        for (src, dst) in &self.links {
            for end in [src, dst] {
                if !self.services.contains(end) {
                    return Err(IngestError::UndeclaredProcessor(end.to_string()));
                }
            }
            if src == dst {
                return Err(IngestError::SelfLoop(src.to_string()));
            }
        }
        if let Some(cycle) = self.find_cycle() {
            return Err(IngestError::Cycle(cycle));
        }
        Ok(())
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn services(&self) -> &BTreeSet<ServiceId> {
        &self.services
    }

    pub fn links(&self) -> &BTreeSet<(ServiceId, ServiceId)> {
        &self.links
    }

    pub fn successors<'a>(&'a self, u: &'a ServiceId) -> impl Iterator<Item = &'a ServiceId> + 'a {
        self.links
            .range((u.clone(), ServiceId(String::new()))..)
            .take_while(move |(s, _)| s == u)
            .map(|(_, d)| d)
    }

    pub fn predecessors<'a>(
        &'a self,
        v: &'a ServiceId,
    ) -> impl Iterator<Item = &'a ServiceId> + 'a {
        self.links
            .iter()
            .filter(move |(_, d)| d == v)
            .map(|(s, _)| s)
    }

    /// Services with no outgoing link.
    pub fn terminals(&self) -> impl Iterator<Item = &ServiceId> {
        self.services
            .iter()
            .filter(move |s| self.successors(s).next().is_none())
    }

    /// Kahn's algorithm with lexicographic tie-breaking. `None` if cyclic.
    pub fn topological_order(&self) -> Option<Vec<ServiceId>> {
        let mut indegree: BTreeMap<&ServiceId, usize> =
            self.services.iter().map(|s| (s, 0)).collect();
        for (_, d) in &self.links {
            *indegree.get_mut(d)? += 1;
        }
        let mut ready: BTreeSet<&ServiceId> = indegree
            .iter()
            .filter(|(_, &n)| n == 0)
            .map(|(s, _)| *s)
            .collect();
        let mut order = Vec::with_capacity(self.services.len());
        while let Some(next) = ready.pop_first() {
            order.push(next.clone());
            for succ in self.successors(next) {
                let n = indegree.get_mut(succ)?;
                *n -= 1;
                if *n == 0 {
                    ready.insert(succ);
                }
            }
        }
        (order.len() == self.services.len()).then_some(order)
    }

    fn find_cycle(&self) -> Option<Vec<ServiceId>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Fresh,
            Active,
            Done,
        }
        let mut marks: BTreeMap<&ServiceId, Mark> =
            self.services.iter().map(|s| (s, Mark::Fresh)).collect();
        for root in &self.services {
            if marks[root] != Mark::Fresh {
                continue;
            }
            // Iterative DFS; `stack` holds the active path with pending successors.
            let mut stack: Vec<(&ServiceId, Vec<&ServiceId>)> =
                vec![(root, self.successors(root).collect())];
            marks.insert(root, Mark::Active);
            while let Some((node, pending)) = stack.last_mut() {
                let node = *node;
                match pending.pop() {
                    Some(next) => match marks[next] {
                        Mark::Fresh => {
                            marks.insert(next, Mark::Active);
                            stack.push((next, self.successors(next).collect()));
                        }
                        Mark::Active => {
                            let start = stack.iter().position(|(s, _)| *s == next)?;
                            let mut cycle: Vec<ServiceId> =
                                stack[start..].iter().map(|(s, _)| (*s).clone()).collect();
                            cycle.push(next.clone());
                            return Some(cycle);
                        }
                        Mark::Done => {}
                    },
                    None => {
                        marks.insert(node, Mark::Done);
                        stack.pop();
                    }
                }
            }
        }
        None
    }

    /// Serializes to the canonical JSON format.
    pub fn to_canonical_json(&self) -> String {
        let doc = CanonicalWorkflow {
            id: self.id.clone(),
            services: self.services.iter().map(|s| s.0.clone()).collect(),
            links: self
                .links
                .iter()
                .map(|(a, b)| (a.0.clone(), b.0.clone()))
                .collect(),
        };
        serde_json::to_string(&doc).expect("workflow serialization cannot fail")
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CanonicalWorkflow {
    id: String,
    services: Vec<String>,
    links: Vec<(String, String)>,
}

/// Parses the canonical JSON workflow format:
/// `{"id": string, "services": [string...], "links": [[string, string]...]}`.
pub fn parse_canonical_json(bytes: &[u8]) -> Result<WorkflowGraph, IngestError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let doc: CanonicalWorkflow =
        serde_path_to_error::deserialize(de).map_err(|e| IngestError::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
    let services = doc
        .services
        .iter()
        .enumerate()
        .map(|(i, s)| {
            ServiceId::parse(s).map_err(|e| IngestError::Schema {
                path: format!("services[{i}]"),
                message: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let links = doc
        .links
        .iter()
        .enumerate()
        .map(|(i, (a, b))| {
            let field = |s: &str, j: usize| {
                ServiceId::parse(s).map_err(|e| IngestError::Schema {
                    path: format!("links[{i}][{j}]"),
                    message: e.to_string(),
                })
            };
            Ok((field(a, 0)?, field(b, 1)?))
        })
        .collect::<Result<Vec<_>, IngestError>>()?;
    WorkflowGraph::new(doc.id, services, links)
}

/// Parses a Taverna-subset XML workflow.
///
/// Accepted shapes: a `<workflow id="...">` root with `<processor name="..."/>`
/// and `<datalink><source>A</source><sink>B</sink></datalink>` children; the
/// Taverna 2 `<dataflow>` layout where names and link ends are nested
/// `<name>`/`<processor>` elements; and Taverna 1 `<link source=".." sink=".."/>`.
/// Namespace prefixes are ignored. Only the outermost workflow/dataflow is
/// read. Link ends that refer to workflow-level ports (`type="dataflow"`)
/// are not service dependencies and are skipped.
pub fn parse_taverna_xml(bytes: &[u8]) -> Result<WorkflowGraph, IngestError> {
    parse_taverna_xml_inner(bytes, None)
}

/// As [`parse_taverna_xml`], using `fallback_id` when the document declares
/// no workflow id.
pub fn parse_taverna_xml_with_fallback_id(
    bytes: &[u8],
    fallback_id: &str,
) -> Result<WorkflowGraph, IngestError> {
    parse_taverna_xml_inner(bytes, Some(fallback_id))
}

#[derive(Default)]
struct LinkEnd {
    text: String,
    processor: Option<String>,
    is_port_only: bool,
}

impl LinkEnd {
    fn resolve(&self) -> Option<String> {
        if let Some(p) = &self.processor {
            return Some(p.clone());
        }
        if self.is_port_only {
            return None;
        }
        let t = self.text.trim();
        (!t.is_empty()).then(|| t.to_string())
    }
}

#[derive(Clone, Copy, PartialEq)]
enum EndKind {
    Source,
    Sink,
}

fn local_name(raw: &[u8]) -> String {
    let name = String::from_utf8_lossy(raw);
    match name.rsplit_once(':') {
        Some((_, local)) => local.to_string(),
        None => name.into_owned(),
    }
}

fn attr(e: &BytesStart<'_>, key: &str) -> Option<String> {
    e.attributes().flatten().find_map(|a| {
        (local_name(a.key.as_ref()) == key)
            .then(|| a.unescape_value().ok().map(|v| v.into_owned()))
            .flatten()
    })
}

fn line_col(bytes: &[u8], pos: usize) -> (usize, usize) {
    let upto = &bytes[..pos.min(bytes.len())];
    let line = upto.iter().filter(|&&b| b == b'\n').count() + 1;
    let col = upto.iter().rev().take_while(|&&b| b != b'\n').count() + 1;
    (line, col)
}

fn parse_taverna_xml_inner(
    bytes: &[u8],
    fallback_id: Option<&str>,
) -> Result<WorkflowGraph, IngestError> {
    let mut reader = Reader::from_reader(bytes);
    reader.config_mut().trim_text(true);
    reader.config_mut().check_end_names = true;

    let mut stack: Vec<String> = Vec::new();
    // Depth (in `stack`) of the outermost workflow/dataflow element.
    let mut root_depth: Option<usize> = None;
    let mut nested_flows = 0usize;
    let mut promoted = false;
    let mut finished = false;
    let mut workflow_id: Option<String> = None;
    let mut processors: Vec<String> = Vec::new();
    let mut raw_links: Vec<(String, String)> = Vec::new();

    let mut in_processor_name = false;
    let mut link: Option<(LinkEnd, LinkEnd)> = None;
    let mut current_end: Option<EndKind> = None;
    let mut buf = Vec::new();

    let xml_err = |reader: &Reader<&[u8]>, message: String| {
        let (line, column) = line_col(bytes, reader.error_position() as usize);
        IngestError::Xml {
            line,
            column,
            message,
        }
    };

    loop {
        let event = reader
            .read_event_into(&mut buf)
            .map_err(|e| xml_err(&reader, e.to_string()))?;
        match event {
            Event::Eof => {
                if let Some(open) = stack.last() {
                    let (line, column) = line_col(bytes, reader.buffer_position() as usize);
                    return Err(IngestError::Xml {
                        line,
                        column,
                        message: format!("unexpected end of input inside <{open}>"),
                    });
                }
                break;
            }
            Event::Start(ref e) | Event::Empty(ref e) => {
                let is_empty = matches!(event, Event::Empty(_));
                let name = local_name(e.name().as_ref());
                let parent = stack.last().cloned().unwrap_or_default();
                let depth = stack.len();
                let is_flow = name == "workflow" || name == "dataflow" || name == "scufl";
                if is_flow && !finished {
                    match root_depth {
                        None => {
                            root_depth = Some(depth);
                            workflow_id = attr(e, "id");
                        }
                        // t2flow: <workflow> wraps the top-level <dataflow>.
                        Some(d)
                            if !promoted
                                && name == "dataflow"
                                && depth == d + 1
                                && stack[d] == "workflow"
                                && nested_flows == 0
                                && processors.is_empty() =>
                        {
                            promoted = true;
                            root_depth = Some(depth);
                            workflow_id = attr(e, "id").or(workflow_id);
                        }
                        Some(_) => nested_flows += 1,
                    }
                }
                let active = root_depth.is_some() && !finished && nested_flows == 0;
                if active && !is_flow {
                    match name.as_str() {
                        "processor" if link.is_none() => {
                            if let Some(n) = attr(e, "name") {
                                processors.push(n);
                            } else if !is_empty {
                                // Taverna 2: name in a child <name> element.
                                in_processor_name = false;
                            }
                        }
                        "name" if parent == "processor" && link.is_none() => {
                            in_processor_name = true;
                        }
                        "datalink" | "link" => {
                            let mut ends = (LinkEnd::default(), LinkEnd::default());
                            if let Some(s) = attr(e, "source") {
                                ends.0.text = s;
                            }
                            if let Some(s) = attr(e, "sink") {
                                ends.1.text = s;
                            }
                            if is_empty {
                                push_link(&mut raw_links, &ends);
                            } else {
                                link = Some(ends);
                            }
                        }
                        "source" | "sink" if link.is_some() => {
                            let kind = if name == "source" {
                                EndKind::Source
                            } else {
                                EndKind::Sink
                            };
                            let port_only = attr(e, "type").as_deref() == Some("dataflow");
                            if let Some((src, snk)) = link.as_mut() {
                                let end = if kind == EndKind::Source { src } else { snk };
                                end.is_port_only = port_only;
                            }
                            current_end = (!is_empty).then_some(kind);
                        }
                        _ => {}
                    }
                }
                if !is_empty {
                    stack.push(name);
                } else if is_flow && root_depth == Some(depth) {
                    finished = true;
                } else if is_flow && !finished && root_depth.is_some() {
                    nested_flows -= 1;
                }
            }
            Event::Text(t) => {
                let text = t
                    .unescape()
                    .map_err(|e| xml_err(&reader, e.to_string()))?
                    .into_owned();
                let current = stack.last().map(String::as_str).unwrap_or("");
                let active = root_depth.is_some() && !finished && nested_flows == 0;
                if !active {
                    // ignore
                } else if in_processor_name && current == "name" {
                    processors.push(text);
                } else if let (Some(kind), Some((src, snk))) = (current_end, link.as_mut()) {
                    let end = if kind == EndKind::Source { src } else { snk };
                    match current {
                        "source" | "sink" => end.text.push_str(&text),
                        "processor" => end.processor = Some(text.trim().to_string()),
                        _ => {}
                    }
                } else if current == "name"
                    && stack.len() >= 2
                    && Some(stack.len() - 2) == root_depth
                    && workflow_id.is_none()
                {
                    // <dataflow><name>..</name> as a last-resort id.
                    workflow_id = Some(text);
                }
            }
            Event::End(_) => {
                let name = stack.pop().unwrap_or_default();
                let depth = stack.len();
                let is_flow = name == "workflow" || name == "dataflow" || name == "scufl";
                if is_flow && root_depth.is_some() && !finished {
                    if nested_flows > 0 {
                        nested_flows -= 1;
                    } else if root_depth == Some(depth) {
                        finished = true;
                    }
                }
                match name.as_str() {
                    "name" => in_processor_name = false,
                    "source" | "sink" => current_end = None,
                    "datalink" | "link" => {
                        if let Some(ends) = link.take() {
                            if nested_flows == 0 && !finished {
                                push_link(&mut raw_links, &ends);
                            }
                        }
                    }
                    _ => {}
                }
            }
            _ => {}
        }
        buf.clear();
    }

    if root_depth.is_none() {
        return Err(IngestError::Validation(
            "no <workflow> or <dataflow> element found".into(),
        ));
    }
    let id = workflow_id
        .or_else(|| fallback_id.map(str::to_string))
        .ok_or_else(|| IngestError::Validation("workflow id missing".into()))?;

    let services = processors
        .iter()
        .map(|p| ServiceId::parse(p))
        .collect::<Result<BTreeSet<_>, _>>()?;
    let links = raw_links
        .iter()
        .map(|(s, d)| {
            Ok((
                resolve_processor(s, &services)?,
                resolve_processor(d, &services)?,
            ))
        })
        .collect::<Result<Vec<_>, IngestError>>()?;
    WorkflowGraph::new(id, services, links)
}

fn push_link(out: &mut Vec<(String, String)>, ends: &(LinkEnd, LinkEnd)) {
    if let (Some(s), Some(d)) = (ends.0.resolve(), ends.1.resolve()) {
        out.push((s, d));
    }
}

/// Maps a link end to its owning processor, stripping a trailing `:port`
/// suffix unless the full text is itself a declared processor.
fn resolve_processor(raw: &str, declared: &BTreeSet<ServiceId>) -> Result<ServiceId, IngestError> {
    let trimmed = raw.trim();
    if declared.contains(trimmed) {
        return Ok(ServiceId::from(trimmed));
    }
    let owner = match trimmed.rsplit_once(':') {
        Some((owner, _port)) => owner.trim(),
        None => trimmed,
    };
    if declared.contains(owner) {
        Ok(ServiceId::from(owner))
    } else {
        Err(IngestError::UndeclaredProcessor(owner.to_string()))
    }
}

/// A set of validated workflows plus the service catalog they reference.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Repository {
    workflows: BTreeMap<String, WorkflowGraph>,
    catalog: BTreeMap<ServiceId, Service>,
}

impl Repository {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a workflow; its services join the catalog. Rejects duplicate ids.
    pub fn insert(&mut self, workflow: WorkflowGraph) -> Result<(), IngestError> {
        if self.workflows.contains_key(workflow.id()) {
            return Err(IngestError::Validation(format!(
                "duplicate workflow id `{}`",
                workflow.id()
            )));
        }
        for s in workflow.services() {
            self.catalog.entry(s.clone()).or_insert_with(|| Service {
                id: s.clone(),
                name: s.to_string(),
            });
        }
        self.workflows.insert(workflow.id().to_string(), workflow);
        Ok(())
    }

    pub fn from_workflows(
        workflows: impl IntoIterator<Item = WorkflowGraph>,
    ) -> Result<Self, IngestError> {
        let mut repo = Self::new();
        for w in workflows {
            repo.insert(w)?;
        }
        Ok(repo)
    }

    pub fn workflows(&self) -> impl Iterator<Item = &WorkflowGraph> {
        self.workflows.values()
    }

    pub fn get(&self, id: &str) -> Option<&WorkflowGraph> {
        self.workflows.get(id)
    }

    pub fn catalog(&self) -> &BTreeMap<ServiceId, Service> {
        &self.catalog
    }

    pub fn len(&self) -> usize {
        self.workflows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.workflows.is_empty()
    }

    pub fn total_links(&self) -> usize {
        self.workflows.values().map(|w| w.links().len()).sum()
    }
}

/// A file that was skipped during [`load_repository`].
#[derive(Debug, Clone)]
pub struct SkippedFile {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct LoadReport {
    pub repository: Repository,
    pub loaded: usize,
    pub skipped: Vec<SkippedFile>,
}

/// Parses one workflow file by extension (`.xml`, `.t2flow`, `.json`).
pub fn parse_workflow_file(path: &Path) -> Result<WorkflowGraph, IngestError> {
    let bytes = fs::read(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => parse_canonical_json(&bytes),
        _ => parse_taverna_xml_with_fallback_id(&bytes, &stem),
    }
}

/// Loads every `*.xml`, `*.t2flow` and `*.json` file directly under `dir`.
///
/// Files that fail to parse or validate are recorded in
/// [`LoadReport::skipped`]. A workflow id defined by two files is a hard
/// error naming both.
pub fn load_repository(dir: &Path) -> Result<LoadReport, IngestError> {
    let io_err = |source| IngestError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        let wanted = matches!(
            path.extension().and_then(|e| e.to_str()),
            Some("xml" | "json" | "t2flow")
        );
        if wanted && path.is_file() {
            paths.push(path);
        }
    }
    paths.sort();

    use rayon::prelude::*;
    let parsed: Vec<(PathBuf, Result<WorkflowGraph, IngestError>)> = paths
        .into_par_iter()
        .map(|p| {
            let r = parse_workflow_file(&p);
            (p, r)
        })
        .collect();

    let mut repository = Repository::new();
    let mut origin: BTreeMap<String, PathBuf> = BTreeMap::new();
    let mut skipped = Vec::new();
    for (path, result) in parsed {
        match result {
            Ok(w) => {
                if let Some(first) = origin.get(w.id()) {
                    return Err(IngestError::DuplicateWorkflow {
                        id: w.id().to_string(),
                        first: first.clone(),
                        second: path,
                    });
                }
                origin.insert(w.id().to_string(), path);
                repository.insert(w)?;
            }
            Err(IngestError::Io { path, source }) => {
                return Err(IngestError::Io { path, source });
            }
            Err(e) => {
                log::warn!("skipping {}: {e}", path.display());
                skipped.push(SkippedFile {
                    path,
                    reason: e.to_string(),
                })
            }
        }
    }
    Ok(LoadReport {
        loaded: repository.len(),
        repository,
        skipped,
    })
}
