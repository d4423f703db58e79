//! Word equation solving with split rules.
//!
//! Formulas are conjunctions of word equations over letters and variables.
//! The solver applies a fixed set of split rules depth-first, optionally
//! ordering branches with a graph convolutional network. The crate also
//! builds exhaustive proof trees, extracts labelled training samples, encodes
//! equations as graphs, and generates benchmark problems.

pub mod batch;
pub mod benchgen;
pub mod dataset;
pub mod format;
pub mod gnn;
pub mod graph;
pub mod oracle;
pub mod rules;
pub mod search;
pub mod terms;
pub mod tree;

pub use format::{parse_formula, FormatError, Problem};
pub use graph::{EquationGraph, Variant};
pub use rules::{apply_rule, match_rule, BaseRule, RuleId};
pub use search::{solve_eqs, Backtrack, BranchOrder, SearchConfig, SearchResult};
pub use terms::{Assignment, Equation, Formula, Substitution, Symbol, SymbolTable, Term};
pub use tree::{build_proof_tree, ProofTree, Status};

/// Model weights at inference precision.
pub type Weights = gnn::ModelWeights<f32>;
/// Model weights in double precision.
pub type Weights64 = gnn::ModelWeights<f64>;
/// Branch probabilities at inference precision.
pub type Scores = gnn::BranchScores<f32>;
pub type Model = gnn::GnnModel<f32>;
