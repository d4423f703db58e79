//! Batch evaluation over a directory of problem files.
//!
//! Problem files are the `*.eq` files of the directory, identified by file
//! stem and evaluated in parallel. The report is a tab-separated table in
//! id order (columns `id status splits wallMillis maxDepth error`) followed
//! by an aggregate block:
//!
//! ```text
//! [aggregates]
//! sat = 1
//! ...
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::format::Problem;
use crate::search::{solve_eqs, BranchScorer, SearchConfig};
use crate::tree::Status;

pub const PROBLEM_EXT: &str = "eq";

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("cannot list {path}: {source}")]
    Dir {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot build worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BatchRow {
    pub id: String,
    /// `None` when the problem could not be read or solved.
    pub status: Option<Status>,
    pub splits: u64,
    pub wall_millis: u64,
    pub max_depth: usize,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Aggregates {
    pub sat: usize,
    pub unsat: usize,
    pub unknown: usize,
    pub errors: usize,
    pub mean_wall_millis: f64,
    pub mean_splits: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BatchReport {
    pub rows: Vec<BatchRow>,
}

fn solved(r: &BatchRow) -> bool {
    matches!(r.status, Some(Status::Sat | Status::Unsat))
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

impl BatchReport {
    /// Means are over solved (SAT or UNSAT) rows.
    pub fn aggregates(&self) -> Aggregates {
        let count = |s: Status| self.rows.iter().filter(|r| r.status == Some(s)).count();
        Aggregates {
            sat: count(Status::Sat),
            unsat: count(Status::Unsat),
            unknown: count(Status::Unknown),
            errors: self.rows.iter().filter(|r| r.status.is_none()).count(),
            mean_wall_millis: mean(
                self.rows
                    .iter()
                    .filter(|r| solved(r))
                    .map(|r| r.wall_millis as f64),
            ),
            mean_splits: mean(
                self.rows
                    .iter()
                    .filter(|r| solved(r))
                    .map(|r| r.splits as f64),
            ),
        }
    }

    /// Mean splits over the problems solved by both reports, matched by id.
    pub fn common_mean_splits(&self, other: &BatchReport) -> (f64, f64) {
        let pairs: Vec<(&BatchRow, &BatchRow)> = self
            .rows
            .iter()
            .filter(|r| solved(r))
            .filter_map(|r| {
                other
                    .rows
                    .iter()
                    .find(|o| o.id == r.id && solved(o))
                    .map(|o| (r, o))
            })
            .collect();
        (
            mean(pairs.iter().map(|(a, _)| a.splits as f64)),
            mean(pairs.iter().map(|(_, b)| b.splits as f64)),
        )
    }

    /// Report text. With `timings` off, wall-clock columns print as `-` so
    /// the text depends only on the inputs.
    pub fn to_text(&self, timings: bool) -> String {
        let mut out = String::from("id\tstatus\tsplits\twallMillis\tmaxDepth\terror\n");
        for r in &self.rows {
            let wall = if timings {
                r.wall_millis.to_string()
            } else {
                "-".into()
            };
            match r.status {
                Some(s) => writeln!(
                    out,
                    "{}\t{s}\t{}\t{wall}\t{}\t-",
                    r.id, r.splits, r.max_depth
                ),
                None => writeln!(
                    out,
                    "{}\tERROR\t-\t-\t-\t{}",
                    r.id,
                    r.error.as_deref().unwrap_or("").replace(['\t', '\n'], " ")
                ),
            }
            .unwrap();
        }
        let a = self.aggregates();
        out.push_str("\n[aggregates]\n");
        writeln!(out, "problems = {}", self.rows.len()).unwrap();
        writeln!(out, "sat = {}", a.sat).unwrap();
        writeln!(out, "unsat = {}", a.unsat).unwrap();
        writeln!(out, "unknown = {}", a.unknown).unwrap();
        writeln!(out, "errors = {}", a.errors).unwrap();
        if timings {
            writeln!(out, "meanWallMillisSolved = {:.3}", a.mean_wall_millis).unwrap();
        }
        writeln!(out, "meanSplitsSolved = {:.3}", a.mean_splits).unwrap();
        out
    }
}

/// Problem files of `dir` sorted by id.
pub fn list_problems(dir: &Path) -> Result<Vec<(String, PathBuf)>, BatchError> {
    let err = |source| BatchError::Dir {
        path: dir.to_path_buf(),
        source,
    };
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(err)? {
        let path = entry.map_err(err)?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == PROBLEM_EXT) {
            let id = path.file_stem().unwrap().to_string_lossy().into_owned();
            out.push((id, path));
        }
    }
    out.sort();
    Ok(out)
}

fn eval_one(
    id: &str,
    path: &Path,
    cfg: &SearchConfig,
    scorer: Option<&dyn BranchScorer>,
) -> BatchRow {
    let failed = |e: String| BatchRow {
        id: id.to_string(),
        status: None,
        splits: 0,
        wall_millis: 0,
        max_depth: 0,
        error: Some(e),
    };
    let problem = match Problem::read(path) {
        Ok(p) => p,
        Err(e) => return failed(e.to_string()),
    };
    match solve_eqs(&problem.formula, &problem.symbols, cfg, scorer) {
        Ok(r) => BatchRow {
            id: id.to_string(),
            status: Some(r.status),
            splits: r.stats.splits,
            wall_millis: r.stats.wall_millis,
            max_depth: r.stats.max_depth,
            error: None,
        },
        Err(e) => failed(e.to_string()),
    }
}

pub fn batch_eval(
    dir: &Path,
    cfg: &SearchConfig,
    scorer: Option<&dyn BranchScorer>,
    jobs: usize,
) -> Result<BatchReport, BatchError> {
    let problems = list_problems(dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()?;
    let rows = pool.install(|| {
        problems
            .par_iter()
            .map(|(id, path)| eval_one(id, path, cfg, scorer))
            .collect()
    });
    Ok(BatchReport { rows })
}
