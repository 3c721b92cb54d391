//! Text model format.
//!
//! ```text
//! flowrec-sg v1 <|T|> <d>
//! <key> <f1> ... <fd>          one row per token
//! #nodes
//! <f1> ... <fd>                one row per internal node
//! #codes
//! <key> <node>:<bit> ...       root-to-leaf path
//! #freqs
//! <key> <count>
//! #config <json>
//! ```
//!
//! Floats use Rust's shortest round-trip formatting, so save/load is exact.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::huffman::HuffmanTree;
use super::model::{EmbeddingModel, TrainConfig, VocabEntry};
use super::EmbedError;
use crate::corpus::ServiceToken;

const MAGIC: &str = "flowrec-sg";
const VERSION: &str = "v1";

fn row(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{v}");
    }
}

pub fn to_text(m: &EmbeddingModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {VERSION} {} {}", m.len(), m.dim());
    for i in 0..m.len() {
        out.push_str(m.token(i).key());
        out.push(' ');
        row(&mut out, m.vector(i));
        out.push('\n');
    }
    out.push_str("#nodes\n");
    for n in 0..m.tree().internal_nodes() {
        row(&mut out, m.node_vector(n));
        out.push('\n');
    }
    out.push_str("#codes\n");
    for i in 0..m.len() {
        out.push_str(m.token(i).key());
        for step in m.path(i) {
            let _ = write!(out, " {}:{}", step.node, step.bit);
        }
        out.push('\n');
    }
    out.push_str("#freqs\n");
    for v in m.vocab() {
        let _ = writeln!(out, "{} {}", v.token.key(), v.count);
    }
    let _ = writeln!(
        out,
        "#config {}",
        serde_json::to_string(m.config()).expect("config serializes")
    );
    out
}

pub fn save_model(m: &EmbeddingModel, path: &Path) -> Result<(), EmbedError> {
    fs::write(path, to_text(m)).map_err(|e| EmbedError::Io(path.display().to_string(), e))
}

pub fn load_model(path: &Path) -> Result<EmbeddingModel, EmbedError> {
    let text =
        fs::read_to_string(path).map_err(|e| EmbedError::Io(path.display().to_string(), e))?;
    from_text(&text)
}

fn fmt_err(line: usize, message: impl Into<String>) -> EmbedError {
    EmbedError::Format {
        line,
        message: message.into(),
    }
}

fn parse_floats(
    fields: &[&str],
    dim: usize,
    line: usize,
    what: &str,
) -> Result<Vec<f64>, EmbedError> {
    if fields.len() != dim {
        return Err(fmt_err(
            line,
            format!("{what}: expected {dim} values, found {}", fields.len()),
        ));
    }
    fields
        .iter()
        .map(|f| {
            let v: f64 = f
                .parse()
                .map_err(|_| fmt_err(line, format!("{what}: invalid number `{f}`")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(fmt_err(line, format!("{what}: non-finite value `{f}`")))
            }
        })
        .collect()
}

#[derive(PartialEq)]
enum Section {
    Vectors,
    Nodes,
    Codes,
    Freqs,
}

pub fn from_text(text: &str) -> Result<EmbeddingModel, EmbedError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let (_, header) = lines.next().ok_or_else(|| fmt_err(1, "empty file"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.first() != Some(&MAGIC) {
        return Err(fmt_err(1, "missing flowrec-sg header"));
    }
    if h.get(1) != Some(&VERSION) {
        return Err(EmbedError::Version(h.get(1).unwrap_or(&"").to_string()));
    }
    if h.len() != 4 {
        return Err(fmt_err(1, "header must be `flowrec-sg v1 <tokens> <dim>`"));
    }
    let n: usize = h[2].parse().map_err(|_| fmt_err(1, "bad token count"))?;
    let dim: usize = h[3].parse().map_err(|_| fmt_err(1, "bad dimension"))?;
    if n < 2 || dim == 0 {
        return Err(fmt_err(
            1,
            "need at least 2 tokens and a positive dimension",
        ));
    }

    let mut keys: Vec<String> = Vec::with_capacity(n);
    let mut vectors: Vec<f64> = Vec::with_capacity(n * dim);
    let mut nodes: Vec<f64> = Vec::new();
    let mut codes: HashMap<String, (usize, String)> = HashMap::new();
    let mut freqs: HashMap<String, u64> = HashMap::new();
    let mut config: Option<TrainConfig> = None;
    let mut section = Section::Vectors;

    for (ln, line) in lines {
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let (name, arg) = rest.split_once(' ').unwrap_or((rest, ""));
            section = match name {
                "nodes" => Section::Nodes,
                "codes" => Section::Codes,
                "freqs" => Section::Freqs,
                "config" => {
                    config = Some(
                        serde_json::from_str(arg)
                            .map_err(|e| fmt_err(ln, format!("bad config: {e}")))?,
                    );
                    continue;
                }
                other => return Err(fmt_err(ln, format!("unknown section `#{other}`"))),
            };
            if section != Section::Nodes && keys.len() < n {
                return Err(fmt_err(
                    ln,
                    format!("truncated: {} of {n} token rows", keys.len()),
                ));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(' ').collect();
        match section {
            Section::Vectors => {
                if keys.len() == n {
                    return Err(fmt_err(ln, "more token rows than declared"));
                }
                let key = fields[0];
                let what = format!("row {} (`{key}`)", keys.len());
                vectors.extend(parse_floats(&fields[1..], dim, ln, &what)?);
                keys.push(key.to_string());
            }
            Section::Nodes => {
                let what = format!("node row {}", nodes.len() / dim);
                nodes.extend(parse_floats(&fields, dim, ln, &what)?);
            }
            Section::Codes => {
                codes.insert(fields[0].to_string(), (ln, fields[1..].join(" ")));
            }
            Section::Freqs => {
                if fields.len() != 2 {
                    return Err(fmt_err(ln, "frequency rows are `<key> <count>`"));
                }
                let c: u64 = fields[1]
                    .parse()
                    .map_err(|_| fmt_err(ln, format!("bad count `{}`", fields[1])))?;
                freqs.insert(fields[0].to_string(), c);
            }
        }
    }
    if keys.len() < n {
        return Err(fmt_err(
            0,
            format!("truncated: {} of {n} token rows", keys.len()),
        ));
    }
    if nodes.len() != (n - 1) * dim {
        return Err(fmt_err(
            0,
            format!(
                "expected {} internal-node rows, found {}",
                n - 1,
                nodes.len() / dim
            ),
        ));
    }

    let vocab = keys
        .iter()
        .map(|k| {
            let token = ServiceToken::parse(k).map_err(|e| fmt_err(0, e.to_string()))?;
            let count = *freqs
                .get(k)
                .ok_or_else(|| fmt_err(0, format!("missing frequency for `{k}`")))?;
            Ok(VocabEntry { token, count })
        })
        .collect::<Result<Vec<_>, EmbedError>>()?;
    let counts: Vec<u64> = vocab.iter().map(|v| v.count).collect();
    let tree = HuffmanTree::build(&counts)?;
    for (i, k) in keys.iter().enumerate() {
        let expected: Vec<String> = tree
            .path(i)
            .iter()
            .map(|s| format!("{}:{}", s.node, s.bit))
            .collect();
        match codes.get(k) {
            Some((_, stored)) if *stored == expected.join(" ") => {}
            Some((ln, _)) => {
                return Err(fmt_err(
                    *ln,
                    format!("code for `{k}` does not match frequencies"),
                ))
            }
            None => return Err(fmt_err(0, format!("missing code for `{k}`"))),
        }
    }

    let config = config.unwrap_or_else(|| TrainConfig {
        dim,
        ..TrainConfig::default()
    });
    let index = keys
        .iter()
        .enumerate()
        .map(|(i, k)| (k.clone(), i))
        .collect();
    Ok(EmbeddingModel {
        vocab,
        index,
        dim,
        vectors,
        node_vectors: nodes,
        tree,
        config,
    })
}
