//! Canonical on-disk dataset directories.
//!
//! A dataset directory holds four UTF-8, LF-terminated files:
//!
//! * `nodes.tsv`: `<node_id>\t<label|-1>\t<idx:val,idx:val,...>`, one line per
//!   node in id order, feature indices 0-based and strictly increasing, values
//!   written as the shortest decimal that round-trips.
//! * `edges.tsv`: `<src>\t<dst>`, one undirected edge per line with `src < dst`.
//! * `splits.json`: integer arrays `train`, `val`, `test`.
//! * `meta.json`: `num_nodes`, `num_edges`, `feat_dim`, `num_classes`, `dataset_name`.
//!
//! Loading and validation share one parser: [`load_dataset`] fails on the first
//! violation, [`validate_dataset`] reports all of them.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Splits};
use crate::sparse::CsrMatrix;

pub const NODES_FILE: &str = "nodes.tsv";
pub const EDGES_FILE: &str = "edges.tsv";
pub const SPLITS_FILE: &str = "splits.json";
pub const META_FILE: &str = "meta.json";

/// Config hash and seed stamped into generated artifacts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    pub num_nodes: usize,
    pub num_edges: usize,
    pub feat_dim: usize,
    pub num_classes: usize,
    pub dataset_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: Graph,
    pub splits: Splits,
    pub meta: Meta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    MissingFile,
    Malformed,
    Range,
    Symmetry,
    SelfLoop,
    Count,
    Disjointness,
    UnlabeledTrain,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub file: String,
    /// 1-based line number, when the violation is tied to a line.
    pub line: Option<usize>,
    pub message: String,
    #[serde(skip)]
    counts: Option<(&'static str, usize, usize)>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

struct Parsed {
    meta: Meta,
    labels: Vec<Option<usize>>,
    rows: Vec<Vec<(usize, f64)>>,
    edges: Vec<(usize, usize)>,
    splits: Splits,
}

struct Collector {
    violations: Vec<Violation>,
}

impl Collector {
    fn push(&mut self, kind: ViolationKind, file: &str, line: Option<usize>, message: String) {
        self.violations.push(Violation {
            kind,
            file: file.to_string(),
            line,
            message,
            counts: None,
        });
    }

    fn count(&mut self, file: &str, field: &'static str, expected: usize, actual: usize) {
        self.violations.push(Violation {
            kind: ViolationKind::Count,
            file: file.to_string(),
            line: None,
            message: format!("meta {field} = {expected}, file has {actual} lines"),
            counts: Some((field, expected, actual)),
        });
    }
}

fn read_required(dir: &Path, name: &str, c: &mut Collector) -> Result<Option<String>> {
    let path = dir.join(name);
    match fs::read_to_string(&path) {
        Ok(s) => Ok(Some(s)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            c.push(
                ViolationKind::MissingFile,
                name,
                None,
                format!("{} not found", path.display()),
            );
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

fn parse_dir(dir: &Path) -> Result<(Option<Parsed>, Vec<Violation>)> {
    let mut c = Collector { violations: Vec::new() };
    let meta_s = read_required(dir, META_FILE, &mut c)?;
    let nodes_s = read_required(dir, NODES_FILE, &mut c)?;
    let edges_s = read_required(dir, EDGES_FILE, &mut c)?;
    let splits_s = read_required(dir, SPLITS_FILE, &mut c)?;

    let meta = meta_s.and_then(|s| match serde_json::from_str::<Meta>(&s) {
        Ok(m) => Some(m),
        Err(e) => {
            c.push(ViolationKind::Malformed, META_FILE, Some(e.line()), e.to_string());
            None
        }
    });
    let splits = splits_s.and_then(|s| match serde_json::from_str::<Splits>(&s) {
        Ok(sp) => Some(sp),
        Err(e) => {
            c.push(ViolationKind::Malformed, SPLITS_FILE, Some(e.line()), e.to_string());
            None
        }
    });

    let num_classes = meta.as_ref().map(|m| m.num_classes);
    let feat_dim = meta.as_ref().map(|m| m.feat_dim);
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    if let Some(text) = &nodes_s {
        for (i, line) in lines(text).enumerate() {
            let ln = i + 1;
            match parse_node_line(line, i, num_classes, feat_dim) {
                Ok((label, row)) => {
                    labels.push(label);
                    rows.push(row);
                }
                Err((kind, msg)) => {
                    c.push(kind, NODES_FILE, Some(ln), msg);
                    labels.push(None);
                    rows.push(Vec::new());
                }
            }
        }
    }
    let num_nodes = if nodes_s.is_some() {
        Some(rows.len())
    } else {
        meta.as_ref().map(|m| m.num_nodes)
    };

    let mut edges = Vec::new();
    if let Some(text) = &edges_s {
        let mut seen = HashSet::new();
        for (i, line) in lines(text).enumerate() {
            let ln = i + 1;
            let fields: Vec<&str> = line.split('\t').collect();
            let parsed = match fields.as_slice() {
                [a, b] => a.parse::<usize>().ok().zip(b.parse::<usize>().ok()),
                _ => None,
            };
            let Some((u, v)) = parsed else {
                c.push(
                    ViolationKind::Malformed,
                    EDGES_FILE,
                    Some(ln),
                    format!("expected `<src>\\t<dst>`, got {line:?}"),
                );
                continue;
            };
            if let Some(n) = num_nodes {
                if u >= n || v >= n {
                    c.push(
                        ViolationKind::Range,
                        EDGES_FILE,
                        Some(ln),
                        format!("edge ({u}, {v}) references a node outside 0..{n}"),
                    );
                    continue;
                }
            }
            if u == v {
                c.push(
                    ViolationKind::SelfLoop,
                    EDGES_FILE,
                    Some(ln),
                    format!("self-loop on {u}"),
                );
                continue;
            }
            if u > v {
                c.push(
                    ViolationKind::Symmetry,
                    EDGES_FILE,
                    Some(ln),
                    format!("edge ({u}, {v}) not in canonical src < dst order"),
                );
                continue;
            }
            if !seen.insert((u, v)) {
                c.push(
                    ViolationKind::Symmetry,
                    EDGES_FILE,
                    Some(ln),
                    format!("duplicate edge ({u}, {v})"),
                );
                continue;
            }
            edges.push((u, v));
        }
    }

    if let (Some(m), Some(text)) = (&meta, &nodes_s) {
        let count = lines(text).count();
        if count != m.num_nodes {
            c.count(NODES_FILE, "num_nodes", m.num_nodes, count);
        }
    }
    if let (Some(m), Some(text)) = (&meta, &edges_s) {
        let count = lines(text).count();
        if count != m.num_edges {
            c.count(EDGES_FILE, "num_edges", m.num_edges, count);
        }
    }
    if let (Some(sp), Some(n)) = (&splits, num_nodes) {
        for msg in sp.violations(n, &labels) {
            let kind = if msg.contains("out of range") {
                ViolationKind::Range
            } else if msg.contains("no label") {
                ViolationKind::UnlabeledTrain
            } else {
                ViolationKind::Disjointness
            };
            c.push(kind, SPLITS_FILE, None, msg);
        }
    }

    let parsed = match (meta, splits, nodes_s, edges_s) {
        (Some(meta), Some(splits), Some(_), Some(_)) if c.violations.is_empty() => Some(Parsed {
            meta,
            labels,
            rows,
            edges,
            splits,
        }),
        _ => None,
    };
    Ok((parsed, c.violations))
}

fn lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
}

type NodeLine = (Option<usize>, Vec<(usize, f64)>);

fn parse_node_line(
    line: &str,
    index: usize,
    num_classes: Option<usize>,
    feat_dim: Option<usize>,
) -> std::result::Result<NodeLine, (ViolationKind, String)> {
    let malformed = |m: String| (ViolationKind::Malformed, m);
    let fields: Vec<&str> = line.split('\t').collect();
    let [id, label, feats] = fields.as_slice() else {
        return Err(malformed(format!(
            "expected 3 tab-separated fields, got {}",
            fields.len()
        )));
    };
    let id: usize = id.parse().map_err(|_| malformed(format!("bad node id {id:?}")))?;
    if id != index {
        return Err(malformed(format!("node id {id} on the line reserved for node {index}")));
    }
    let label = match *label {
        "-1" => None,
        s => {
            let c: usize = s.parse().map_err(|_| malformed(format!("bad label {s:?}")))?;
            if let Some(k) = num_classes {
                if c >= k {
                    return Err((ViolationKind::Range, format!("label {c} outside 0..{k}")));
                }
            }
            Some(c)
        }
    };
    let mut row = Vec::new();
    if !feats.is_empty() {
        for entry in feats.split(',') {
            let (i, v) = entry
                .split_once(':')
                .ok_or_else(|| malformed(format!("bad feature entry {entry:?}")))?;
            let i: usize = i.parse().map_err(|_| malformed(format!("bad feature index {i:?}")))?;
            let v: f64 = v.parse().map_err(|_| malformed(format!("bad feature value {v:?}")))?;
            if !v.is_finite() || v < 0.0 {
                return Err(malformed(format!("feature {i} has invalid value {v}")));
            }
            if let Some(d) = feat_dim {
                if i >= d {
                    return Err((ViolationKind::Range, format!("feature index {i} outside 0..{d}")));
                }
            }
            if let Some(&(prev, _)) = row.last() {
                if i <= prev {
                    return Err(malformed(format!("feature indices not increasing at {i}")));
                }
            }
            row.push((i, v));
        }
    }
    Ok((label, row))
}

fn violation_to_error(v: Violation, dir: &Path) -> Error {
    match v.kind {
        ViolationKind::MissingFile => Error::MissingFile(dir.join(&v.file)),
        _ => Error::Malformed {
            file: v.file,
            line: v.line.unwrap_or(0),
            message: v.message,
        },
    }
}

/// Loads a canonical dataset directory. Node `i` is line `i + 1` of `nodes.tsv`.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Dataset> {
    let dir = dir.as_ref();
    let (parsed, violations) = parse_dir(dir)?;
    if let Some(v) = violations.into_iter().next() {
        if let Some((field, expected, actual)) = v.counts {
            return Err(Error::CountMismatch {
                field,
                expected,
                actual,
            });
        }
        return Err(violation_to_error(v, dir));
    }
    let p = parsed.expect("no violations implies a parsed dataset");
    let features = CsrMatrix::from_rows(p.meta.feat_dim, p.rows)?;
    let graph = Graph::build(&p.edges, features, Some(p.labels), p.meta.num_classes, true)?;
    Ok(Dataset {
        graph,
        splits: p.splits,
        meta: p.meta,
    })
}

/// Lists every violated invariant without stopping at the first one.
pub fn validate_dataset(dir: impl AsRef<Path>) -> Result<ValidationReport> {
    let (_, violations) = parse_dir(dir.as_ref())?;
    Ok(ValidationReport { violations })
}

/// Serialised `nodes.tsv` contents.
pub fn nodes_tsv(g: &Graph) -> String {
    let mut out = String::new();
    let x = g.features();
    for v in 0..g.num_nodes() {
        match g.label(v) {
            Some(c) => write!(out, "{v}\t{c}\t").unwrap(),
            None => write!(out, "{v}\t-1\t").unwrap(),
        }
        for (k, (i, val)) in x.row_iter(v).enumerate() {
            if k > 0 {
                out.push(',');
            }
            write!(out, "{i}:{val}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn edges_tsv(g: &Graph) -> String {
    let mut out = String::new();
    for (u, v) in g.edges() {
        writeln!(out, "{u}\t{v}").unwrap();
    }
    out
}

/// Writes `g` and `splits` as a canonical dataset directory, creating it if needed.
pub fn write_dataset(
    g: &Graph,
    splits: &Splits,
    dir: impl AsRef<Path>,
    dataset_name: &str,
    provenance: Option<Provenance>,
) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let meta = Meta {
        num_nodes: g.num_nodes(),
        num_edges: g.num_edges(),
        feat_dim: g.feat_dim(),
        num_classes: g.num_classes(),
        dataset_name: dataset_name.to_string(),
        provenance,
    };
    fs::write(dir.join(NODES_FILE), nodes_tsv(g))?;
    fs::write(dir.join(EDGES_FILE), edges_tsv(g))?;
    fs::write(dir.join(SPLITS_FILE), serde_json::to_string(splits)? + "\n")?;
    fs::write(dir.join(META_FILE), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(dir.to_path_buf())
}
