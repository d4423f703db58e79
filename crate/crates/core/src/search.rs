//! Depth-first proof search with branch ordering and three backtracking
//! strategies.
//!
//! * BT1 explores depth-first without any depth limit.
//! * BT2 cuts a path at a global depth budget; each cut raises the budget by
//!   a fixed step for the rest of the search.
//! * BT3 is iterative deepening: rounds with limits `l, 2l, 3l, ...` until a
//!   round finds SAT or explores the whole tree.
//!
//! Depth counts edges from the root. A node whose rule only yields verdicts
//! (R1, R4, R6) is resolved even at the depth limit. The search keeps an
//! explicit stack, so very deep paths do not consume call stack.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::gnn::ModelError;
use crate::rules::{apply_rule, match_rule, Branch, Conclusion, RuleApplication};
use crate::terms::{Assignment, Formula, Substitution, Symbol, SymbolTable, Term, Word};
use crate::tree::Status;

pub const DEFAULT_L_BT2: usize = 500;
pub const DEFAULT_L_BT2_STEP: usize = 250;
pub const DEFAULT_L_BT3: usize = 20;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(300);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Backtrack {
    Bt1,
    Bt2,
    Bt3,
}

impl FromStr for Backtrack {
    type Err = SearchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bt1" => Ok(Backtrack::Bt1),
            "bt2" => Ok(Backtrack::Bt2),
            "bt3" => Ok(Backtrack::Bt3),
            _ => Err(SearchError::Config(format!(
                "unknown backtrack strategy `{s}`"
            ))),
        }
    }
}

/// How the branches of a split are ordered before exploration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum BranchOrder {
    /// Presentation order of the rule.
    Fixed,
    /// Presentation order reversed.
    Reversed,
    Random,
    /// S1: model scores only.
    Gnn,
    /// S2: fair coin between the model and `Fixed`.
    GnnFixed,
    /// S3: fair coin between the model and `Random`.
    GnnRandom,
}

impl BranchOrder {
    pub fn needs_model(self) -> bool {
        matches!(
            self,
            BranchOrder::Gnn | BranchOrder::GnnFixed | BranchOrder::GnnRandom
        )
    }
}

impl FromStr for BranchOrder {
    type Err = SearchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fixed" => Ok(BranchOrder::Fixed),
            "reversed" => Ok(BranchOrder::Reversed),
            "random" => Ok(BranchOrder::Random),
            "gnn" | "s1" => Ok(BranchOrder::Gnn),
            "gnn-fixed" | "s2" => Ok(BranchOrder::GnnFixed),
            "gnn-random" | "s3" => Ok(BranchOrder::GnnRandom),
            _ => Err(SearchError::Config(format!("unknown branch order `{s}`"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub backtrack: Backtrack,
    pub l_bt2: usize,
    pub l_bt2_step: usize,
    pub l_bt3: usize,
    pub order: BranchOrder,
    pub seed: u64,
    pub timeout: Duration,
    /// Give up with UNKNOWN after this many rule applications.
    pub node_budget: Option<u64>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            backtrack: Backtrack::Bt2,
            l_bt2: DEFAULT_L_BT2,
            l_bt2_step: DEFAULT_L_BT2_STEP,
            l_bt3: DEFAULT_L_BT3,
            order: BranchOrder::Fixed,
            seed: 0,
            timeout: DEFAULT_TIMEOUT,
            node_budget: None,
        }
    }
}

impl SearchConfig {
    pub fn new(backtrack: Backtrack, order: BranchOrder) -> Self {
        SearchConfig {
            backtrack,
            order,
            ..SearchConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        if self.l_bt2_step == 0 {
            return Err(SearchError::Config("l_bt2_step must be positive".into()));
        }
        if self.l_bt3 == 0 {
            return Err(SearchError::Config("l_bt3 must be positive".into()));
        }
        if self.timeout.is_zero() {
            return Err(SearchError::Config("timeout must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("branch order {0:?} needs a model")]
    ModelRequired(BranchOrder),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("cannot write trace: {0}")]
    Trace(#[from] std::io::Error),
}

/// Scores the branches of a split; higher means explore earlier.
pub trait BranchScorer: Send + Sync {
    fn score(
        &self,
        parent: &Formula,
        children: &[Option<&Formula>],
    ) -> Result<Vec<f64>, ModelError>;
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    /// Rule applications with more than one branch.
    pub splits: u64,
    /// Rule applications.
    pub nodes: u64,
    /// Deepest node a rule was applied at.
    #[serde(rename = "maxDepth")]
    pub max_depth: usize,
    /// Depth limits of the BT3 rounds, in order.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub rounds: Vec<usize>,
    #[serde(rename = "wallMillis")]
    pub wall_millis: u64,
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub status: Status,
    /// Conditions along the SAT path, root first.
    pub witness: Option<Vec<Substitution>>,
    pub stats: SearchStats,
}

impl SearchResult {
    /// Letter values for the given variables, composed from the witness chain.
    pub fn assignment(&self, vars: &[Symbol]) -> Option<Assignment> {
        self.witness.as_ref().map(|w| compose_witness(w, vars))
    }

    /// Structured stats record.
    pub fn stats_record(&self) -> String {
        #[derive(Serialize)]
        struct Record<'a> {
            status: String,
            #[serde(flatten)]
            stats: &'a SearchStats,
        }
        serde_json::to_string(&Record {
            status: self.status.to_string(),
            stats: &self.stats,
        })
        .expect("stats serialize")
    }
}

/// Composes rule conditions (root first) into letter values. Variables never
/// bound, or bound to words mentioning unbound variables, get ε there.
pub fn compose_witness(chain: &[Substitution], vars: &[Symbol]) -> Assignment {
    let mut values: BTreeMap<Symbol, Word> = BTreeMap::new();
    for s in chain.iter().rev() {
        for (x, image) in s.iter() {
            let mut w = Vec::new();
            for &t in image {
                match t {
                    Term::Var(y) => w.extend(values.get(&y).into_iter().flatten().copied()),
                    Term::Letter(_) => w.push(t),
                }
            }
            values.insert(x, w);
        }
    }
    let mut a = Assignment::new();
    for &v in vars {
        a.set(v, values.get(&v).cloned().unwrap_or_default());
    }
    a
}

/// Permutation (indices into `app.branches`) in which to explore the branches.
pub fn order_branches<R: Rng>(
    parent: &Formula,
    app: &RuleApplication,
    order: BranchOrder,
    rng: &mut R,
    scorer: Option<&dyn BranchScorer>,
) -> Result<Vec<usize>, SearchError> {
    let n = app.branches.len();
    let identity: Vec<usize> = (0..n).collect();
    if n < 2 {
        return Ok(identity);
    }
    let model_order = |scorer: Option<&dyn BranchScorer>| -> Result<Vec<usize>, SearchError> {
        let scorer = scorer.ok_or(SearchError::ModelRequired(order))?;
        let children: Vec<Option<&Formula>> = app
            .branches
            .iter()
            .map(|b| b.conclusion.formula())
            .collect();
        let scores = scorer.score(parent, &children)?;
        let mut idx = identity.clone();
        idx.sort_by(|&a, &b| {
            scores[b]
                .partial_cmp(&scores[a])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        Ok(idx)
    };
    let random = |rng: &mut R| {
        let mut idx = identity.clone();
        idx.shuffle(rng);
        idx
    };
    match order {
        BranchOrder::Fixed => Ok(identity.clone()),
        BranchOrder::Reversed => Ok(identity.iter().rev().copied().collect()),
        BranchOrder::Random => Ok(random(rng)),
        BranchOrder::Gnn => model_order(scorer),
        BranchOrder::GnnFixed => {
            if rng.gen_bool(0.5) {
                model_order(scorer)
            } else {
                Ok(identity.clone())
            }
        }
        BranchOrder::GnnRandom => {
            if rng.gen_bool(0.5) {
                model_order(scorer)
            } else {
                Ok(random(rng))
            }
        }
    }
}

pub fn solve_eqs(
    phi: &Formula,
    symbols: &SymbolTable,
    cfg: &SearchConfig,
    scorer: Option<&dyn BranchScorer>,
) -> Result<SearchResult, SearchError> {
    Solver::new(cfg, scorer).solve(phi, symbols)
}

/// One search instance: configuration, rng, optional model and trace sink.
pub struct Solver<'a> {
    cfg: &'a SearchConfig,
    scorer: Option<&'a dyn BranchScorer>,
    trace: Option<&'a mut dyn Write>,
    rng: ChaCha8Rng,
    stats: SearchStats,
    deadline: Instant,
    bt2_limit: usize,
    hit_limit: bool,
}

enum Outcome {
    Done(Status, Option<Vec<Substitution>>),
    Aborted,
}

struct Frame {
    /// Remaining branches, next one last.
    pending: Vec<Branch>,
    /// Condition of the branch being explored.
    cond: Substitution,
    depth: usize,
    unknown: bool,
}

enum Step {
    Expand(Formula, usize),
    Verdict(Status),
}

fn step_for(b: &Branch, depth: usize) -> Step {
    match &b.conclusion {
        Conclusion::Formula(f) => Step::Expand(f.clone(), depth),
        Conclusion::Sat => Step::Verdict(Status::Sat),
        Conclusion::Unsat => Step::Verdict(Status::Unsat),
    }
}

impl<'a> Solver<'a> {
    pub fn new(cfg: &'a SearchConfig, scorer: Option<&'a dyn BranchScorer>) -> Self {
        Solver {
            cfg,
            scorer,
            trace: None,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            stats: SearchStats::default(),
            deadline: Instant::now(),
            bt2_limit: cfg.l_bt2,
            hit_limit: false,
        }
    }

    pub fn with_trace(mut self, sink: &'a mut dyn Write) -> Self {
        self.trace = Some(sink);
        self
    }

    pub fn solve(
        mut self,
        phi: &Formula,
        symbols: &SymbolTable,
    ) -> Result<SearchResult, SearchError> {
        self.cfg.validate()?;
        if self.cfg.order.needs_model() && self.scorer.is_none() {
            return Err(SearchError::ModelRequired(self.cfg.order));
        }
        let start = Instant::now();
        self.deadline = start + self.cfg.timeout;
        let outcome = match self.cfg.backtrack {
            Backtrack::Bt1 => self.run(phi, &mut symbols.clone(), None)?,
            Backtrack::Bt2 => self.run(phi, &mut symbols.clone(), Some(Limit::Global))?,
            Backtrack::Bt3 => {
                let mut limit = self.cfg.l_bt3;
                loop {
                    self.hit_limit = false;
                    self.stats.rounds.push(limit);
                    let out = self.run(phi, &mut symbols.clone(), Some(Limit::Round(limit)))?;
                    match out {
                        Outcome::Done(Status::Unknown, _) if self.hit_limit => {
                            limit += self.cfg.l_bt3;
                        }
                        other => break other,
                    }
                }
            }
        };
        self.stats.wall_millis = start.elapsed().as_millis() as u64;
        let (status, witness) = match outcome {
            Outcome::Done(s, w) => (s, w),
            Outcome::Aborted => (Status::Unknown, None),
        };
        Ok(SearchResult {
            status,
            witness,
            stats: self.stats,
        })
    }

    fn exhausted(&self) -> bool {
        if let Some(budget) = self.cfg.node_budget {
            if self.stats.nodes >= budget {
                return true;
            }
        }
        Instant::now() >= self.deadline
    }

    fn limit(&self, limit: Option<Limit>) -> usize {
        match limit {
            None => usize::MAX,
            Some(Limit::Global) => self.bt2_limit,
            Some(Limit::Round(l)) => l,
        }
    }

    fn run(
        &mut self,
        phi: &Formula,
        symbols: &mut SymbolTable,
        limit: Option<Limit>,
    ) -> Result<Outcome, SearchError> {
        let mut stack: Vec<Frame> = Vec::new();
        let mut next = Step::Expand(phi.clone(), 0);
        loop {
            let mut result = match next {
                Step::Verdict(s) => s,
                Step::Expand(f, depth) => {
                    if self.exhausted() {
                        return Ok(Outcome::Aborted);
                    }
                    let rule = match_rule(&f);
                    if !rule.base.is_terminal() && depth >= self.limit(limit) {
                        match limit {
                            Some(Limit::Global) => self.bt2_limit += self.cfg.l_bt2_step,
                            Some(Limit::Round(_)) => self.hit_limit = true,
                            None => unreachable!(),
                        }
                        Status::Unknown
                    } else {
                        let app = apply_rule(&f, symbols);
                        if let Some(sink) = self.trace.as_mut() {
                            writeln!(
                                sink,
                                "{} {} -> {} branches",
                                self.stats.nodes,
                                app.rule,
                                app.branches.len()
                            )?;
                        }
                        self.stats.nodes += 1;
                        self.stats.max_depth = self.stats.max_depth.max(depth);
                        if app.is_split() {
                            self.stats.splits += 1;
                        }
                        let order =
                            order_branches(&f, &app, self.cfg.order, &mut self.rng, self.scorer)?;
                        let mut slots: Vec<Option<Branch>> =
                            app.branches.into_iter().map(Some).collect();
                        let mut pending: Vec<Branch> = order
                            .iter()
                            .rev()
                            .map(|&i| slots[i].take().unwrap())
                            .collect();
                        let first = pending.pop().expect("rules have at least one branch");
                        next = step_for(&first, depth + 1);
                        stack.push(Frame {
                            pending,
                            cond: first.cond,
                            depth,
                            unknown: false,
                        });
                        continue;
                    }
                }
            };
            loop {
                let Some(top) = stack.last_mut() else {
                    return Ok(Outcome::Done(result, None));
                };
                match result {
                    Status::Sat => {
                        let chain = stack
                            .iter()
                            .map(|f| f.cond.clone())
                            .filter(|s| !s.is_empty())
                            .collect();
                        return Ok(Outcome::Done(Status::Sat, Some(chain)));
                    }
                    Status::Unknown => top.unknown = true,
                    Status::Unsat => {}
                }
                if let Some(b) = top.pending.pop() {
                    next = step_for(&b, top.depth + 1);
                    top.cond = b.cond;
                    break;
                }
                result = if top.unknown {
                    Status::Unknown
                } else {
                    Status::Unsat
                };
                stack.pop();
            }
        }
    }
}

#[derive(Clone, Copy)]
enum Limit {
    Global,
    Round(usize),
}

impl fmt::Display for Backtrack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backtrack::Bt1 => "bt1",
            Backtrack::Bt2 => "bt2",
            Backtrack::Bt3 => "bt3",
        })
    }
}
