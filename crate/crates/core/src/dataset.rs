//! Training sample extraction from exhaustive proof trees.
//!
//! Every SAT split point of a problem's proof tree becomes one sample: the
//! parent formula's graph, one graph per child (verdict children as the
//! root-only graph) and the index of the preferred child. Samples are written
//! as JSON lines, one shard per arity, named `<name>.arity<n>.data`.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::format::Problem;
use crate::graph::{EquationGraph, GraphFile, Variant};
use crate::terms::SymbolTable;
use crate::tree::{
    build_proof_tree, NodeLabel, ProofTree, Status, DEFAULT_DEPTH_LIMIT, DEFAULT_NODE_CAP,
};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Parse {
        path: PathBuf,
        line: usize,
        source: serde_json::Error,
    },
    #[error("{path}:{line}: malformed sample: {msg}")]
    Invalid {
        path: PathBuf,
        line: usize,
        msg: String,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingSample {
    pub arity: usize,
    /// Index of the preferred child.
    pub label: usize,
    pub parent: GraphFile,
    pub children: Vec<GraphFile>,
    pub source: String,
    pub variant: Variant,
}

impl TrainingSample {
    pub fn one_hot(&self) -> Vec<u8> {
        (0..self.arity).map(|i| u8::from(i == self.label)).collect()
    }

    fn check(&self) -> Result<(), String> {
        if self.children.len() != self.arity {
            return Err(format!(
                "arity {} with {} children",
                self.arity,
                self.children.len()
            ));
        }
        if self.label >= self.arity {
            return Err(format!("label {} out of range", self.label));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CollectConfig {
    pub variant: Variant,
    pub depth_limit: usize,
    pub node_cap: usize,
}

impl Default for CollectConfig {
    fn default() -> Self {
        CollectConfig {
            variant: Variant::G5,
            depth_limit: DEFAULT_DEPTH_LIMIT,
            node_cap: DEFAULT_NODE_CAP,
        }
    }
}

fn node_graph(tree: &ProofTree, id: usize, variant: Variant, symbols: &SymbolTable) -> GraphFile {
    let g = match &tree.node(id).label {
        NodeLabel::Formula(f) | NodeLabel::Unknown(Some(f)) => EquationGraph::encode(f, variant),
        _ => EquationGraph::root_only(variant),
    };
    g.to_file(symbols)
}

/// Samples of one problem, or `None` when its tree has no SAT root.
pub fn collect_problem(
    source: &str,
    problem: &Problem,
    cfg: &CollectConfig,
) -> Option<Vec<TrainingSample>> {
    let mut symbols = problem.symbols.clone();
    let tree = build_proof_tree(
        &problem.formula,
        &mut symbols,
        cfg.depth_limit,
        cfg.node_cap,
    );
    let root = tree.status(tree.root());
    if root != Status::Sat {
        log::info!("skipping {source}: proof tree root is {root}");
        return None;
    }
    let samples = tree
        .extract_labels()
        .into_iter()
        .map(|l| {
            let children = tree.children(l.node);
            TrainingSample {
                arity: children.len(),
                label: l.index(),
                parent: node_graph(&tree, l.node, cfg.variant, &symbols),
                children: children
                    .iter()
                    .map(|&c| node_graph(&tree, c, cfg.variant, &symbols))
                    .collect(),
                source: source.to_string(),
                variant: cfg.variant,
            }
        })
        .collect();
    Some(samples)
}

/// Samples of all problems, in problem order.
pub fn collect_dataset(problems: &[(String, Problem)], cfg: &CollectConfig) -> Vec<TrainingSample> {
    problems
        .par_iter()
        .map(|(id, p)| collect_problem(id, p, cfg).unwrap_or_default())
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

pub fn shard_path(dir: &Path, name: &str, arity: usize) -> PathBuf {
    dir.join(format!("{name}.arity{arity}.data"))
}

/// Writes one shard per arity present; returns the paths written.
pub fn write_shards(
    samples: &[TrainingSample],
    dir: &Path,
    name: &str,
) -> Result<Vec<PathBuf>, DatasetError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| DatasetError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut arities: Vec<usize> = samples.iter().map(|s| s.arity).collect();
    arities.sort_unstable();
    arities.dedup();
    let mut written = Vec::new();
    for arity in arities {
        let path = shard_path(dir, name, arity);
        let file = fs::File::create(&path).map_err(io(&path))?;
        let mut out = BufWriter::new(file);
        for s in samples.iter().filter(|s| s.arity == arity) {
            let line = serde_json::to_string(s).expect("sample serializes");
            writeln!(out, "{line}").map_err(io(&path))?;
        }
        out.flush().map_err(io(&path))?;
        written.push(path);
    }
    Ok(written)
}

pub fn read_shard(path: &Path) -> Result<Vec<TrainingSample>, DatasetError> {
    let file = fs::File::open(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let s: TrainingSample =
            serde_json::from_str(&line).map_err(|source| DatasetError::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                source,
            })?;
        s.check().map_err(|msg| DatasetError::Invalid {
            path: path.to_path_buf(),
            line: i + 1,
            msg,
        })?;
        out.push(s);
    }
    Ok(out)
}
