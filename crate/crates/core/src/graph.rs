//! Graph encodings of word equations.
//!
//! A conjunction is first flattened to one equation by joining the sides with
//! the separator letter `#`. The `=` root (node 0) points at the first term of
//! each side and each side is a linked chain of term nodes. The variants add:
//!
//! * `G1`: nothing.
//! * `G2`: an edge from every term node back to the root.
//! * `G3`: one global node per distinct variable, linked to each occurrence.
//! * `G4`: one global node per distinct letter (including `#`), linked to each occurrence.
//! * `G5`: both.
//!
//! Edges are stored once, from the global node to each occurrence; message
//! passing treats every edge as undirected.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::terms::{Equation, Formula, SymbolTable, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    G1,
    G2,
    G3,
    G4,
    G5,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::G1,
        Variant::G2,
        Variant::G3,
        Variant::G4,
        Variant::G5,
    ];

    fn global_vars(self) -> bool {
        matches!(self, Variant::G3 | Variant::G5)
    }

    fn global_letters(self) -> bool {
        matches!(self, Variant::G4 | Variant::G5)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("cannot flatten the empty conjunction")]
    EmptyFormula,
    #[error("unknown graph variant `{0}`")]
    UnknownVariant(String),
}

impl FromStr for Variant {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "g1" | "1" => Ok(Variant::G1),
            "g2" | "2" => Ok(Variant::G2),
            "g3" | "3" => Ok(Variant::G3),
            "g4" | "4" => Ok(Variant::G4),
            "g5" | "5" => Ok(Variant::G5),
            _ => Err(GraphError::UnknownVariant(s.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeType {
    Variable,
    Letter,
    Equals,
    Sharp,
}

impl NodeType {
    pub const ALL: [NodeType; 4] = [
        NodeType::Variable,
        NodeType::Letter,
        NodeType::Equals,
        NodeType::Sharp,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    fn of(t: Term) -> NodeType {
        match t {
            Term::Var(_) => NodeType::Variable,
            Term::SHARP => NodeType::Sharp,
            Term::Letter(_) => NodeType::Letter,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphNode {
    pub kind: NodeType,
    /// `None` for the root.
    pub term: Option<Term>,
    /// Global (shared) node of G3/G4/G5.
    pub global: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquationGraph {
    pub variant: Variant,
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<(usize, usize)>,
}

/// `w1l # w2l # ... = w1r # w2r # ...`.
pub fn flatten_conjunction(phi: &Formula) -> Result<Equation, GraphError> {
    if phi.is_true() {
        return Err(GraphError::EmptyFormula);
    }
    let mut lhs = Vec::new();
    let mut rhs = Vec::new();
    for (i, eq) in phi.equations.iter().enumerate() {
        if i > 0 {
            lhs.push(Term::SHARP);
            rhs.push(Term::SHARP);
        }
        lhs.extend_from_slice(&eq.lhs);
        rhs.extend_from_slice(&eq.rhs);
    }
    Ok(Equation::new(lhs, rhs))
}

impl EquationGraph {
    /// Root-only graph, used for `true` and for verdict children.
    pub fn root_only(variant: Variant) -> Self {
        EquationGraph {
            variant,
            nodes: vec![GraphNode {
                kind: NodeType::Equals,
                term: None,
                global: false,
            }],
            edges: Vec::new(),
        }
    }

    pub fn encode(phi: &Formula, variant: Variant) -> Self {
        match flatten_conjunction(phi) {
            Ok(eq) => Self::encode_equation(&eq, variant),
            Err(_) => Self::root_only(variant),
        }
    }

    pub fn encode_equation(eq: &Equation, variant: Variant) -> Self {
        let mut g = Self::root_only(variant);
        let mut occurrences = Vec::with_capacity(eq.len());
        for side in [&eq.lhs, &eq.rhs] {
            let mut prev = 0;
            for &t in side.iter() {
                let id = g.nodes.len();
                g.nodes.push(GraphNode {
                    kind: NodeType::of(t),
                    term: Some(t),
                    global: false,
                });
                g.edges.push((prev, id));
                prev = id;
                occurrences.push((id, t));
            }
        }
        if variant == Variant::G2 {
            for &(id, _) in &occurrences {
                g.edges.push((id, 0));
            }
        }
        if variant.global_vars() || variant.global_letters() {
            let mut globals: Vec<(Term, usize)> = Vec::new();
            for &(_, t) in &occurrences {
                let wanted = if t.is_var() {
                    variant.global_vars()
                } else {
                    variant.global_letters()
                };
                if wanted && !globals.iter().any(|(u, _)| *u == t) {
                    let id = g.nodes.len();
                    g.nodes.push(GraphNode {
                        kind: NodeType::of(t),
                        term: Some(t),
                        global: true,
                    });
                    globals.push((t, id));
                }
            }
            for &(occ, t) in &occurrences {
                if let Some(&(_, gid)) = globals.iter().find(|(u, _)| *u == t) {
                    g.edges.push((gid, occ));
                }
            }
        }
        g
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Undirected neighbourhoods including the node itself, sorted and deduplicated.
    pub fn neighbourhoods(&self) -> Vec<Vec<usize>> {
        let mut nb: Vec<Vec<usize>> = (0..self.nodes.len()).map(|v| vec![v]).collect();
        for &(s, d) in &self.edges {
            nb[s].push(d);
            nb[d].push(s);
        }
        for list in &mut nb {
            list.sort_unstable();
            list.dedup();
        }
        nb
    }

    pub fn to_file(&self, symbols: &SymbolTable) -> GraphFile {
        GraphFile {
            variant: self.variant,
            nodes: self
                .nodes
                .iter()
                .enumerate()
                .map(|(idx, n)| GraphFileNode {
                    idx,
                    kind: n.kind,
                    symbol: match n.term {
                        None => "=".to_string(),
                        Some(t) => symbols.term_name(t).to_string(),
                    },
                })
                .collect(),
            edges: self.edges.iter().map(|&(s, d)| [s, d]).collect(),
        }
    }

    /// Serialized graph file text (one JSON object, deterministic).
    pub fn to_json(&self, symbols: &SymbolTable) -> String {
        serde_json::to_string(&self.to_file(symbols)).expect("graph serializes")
    }
}

/// Graph file layout shared with the training harness.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphFile {
    pub variant: Variant,
    pub nodes: Vec<GraphFileNode>,
    pub edges: Vec<[usize; 2]>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphFileNode {
    pub idx: usize,
    #[serde(rename = "type")]
    pub kind: NodeType,
    pub symbol: String,
}

impl GraphFile {
    /// Node types and edges only; symbols are not needed for scoring.
    pub fn to_graph(&self) -> EquationGraph {
        EquationGraph {
            variant: self.variant,
            nodes: self
                .nodes
                .iter()
                .map(|n| GraphNode {
                    kind: n.kind,
                    term: None,
                    global: false,
                })
                .collect(),
            edges: self.edges.iter().map(|e| (e[0], e[1])).collect(),
        }
    }
}
