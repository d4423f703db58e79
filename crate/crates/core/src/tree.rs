//! Proof trees: exhaustive construction, status propagation, sub-tree sizes
//! and branch labels for training.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::rules::{apply_rule, match_rule, Conclusion, RuleId};
use crate::terms::{Formula, SymbolTable};

pub type NodeId = usize;

pub const DEFAULT_DEPTH_LIMIT: usize = 12;
pub const DEFAULT_NODE_CAP: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Sat,
    Unsat,
    Unknown,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Sat => "SAT",
            Status::Unsat => "UNSAT",
            Status::Unknown => "UNKNOWN",
        })
    }
}

/// What a node is labelled with: a formula still to be rewritten, or a verdict.
/// `Unknown` nodes keep the formula that was cut off, if any.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeLabel {
    Formula(Formula),
    Sat,
    Unsat,
    Unknown(Option<Formula>),
}

impl NodeLabel {
    pub fn formula(&self) -> Option<&Formula> {
        match self {
            NodeLabel::Formula(f) | NodeLabel::Unknown(Some(f)) => Some(f),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Node {
    pub label: NodeLabel,
    pub depth: usize,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    /// Rule labelling the edge from the parent.
    pub rule: Option<RuleId>,
}

/// Rooted tree of rule applications. Node 0 is the root and every child has
/// a larger id than its parent.
#[derive(Clone, Debug)]
pub struct ProofTree {
    nodes: Vec<Node>,
}

impl ProofTree {
    pub fn new(root: NodeLabel) -> Self {
        ProofTree {
            nodes: vec![Node {
                label: root,
                depth: 0,
                parent: None,
                children: Vec::new(),
                rule: None,
            }],
        }
    }

    pub fn add_child(&mut self, parent: NodeId, rule: RuleId, label: NodeLabel) -> NodeId {
        let id = self.nodes.len();
        let depth = self.nodes[parent].depth + 1;
        self.nodes.push(Node {
            label,
            depth,
            parent: Some(parent),
            children: Vec::new(),
            rule: Some(rule),
        });
        self.nodes[parent].children.push(id);
        id
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id].children
    }

    /// σ for every node.
    pub fn statuses(&self) -> Vec<Status> {
        let mut sigma = vec![Status::Unknown; self.nodes.len()];
        for id in (0..self.nodes.len()).rev() {
            let n = &self.nodes[id];
            sigma[id] = match &n.label {
                NodeLabel::Sat => Status::Sat,
                NodeLabel::Unsat => Status::Unsat,
                NodeLabel::Unknown(_) => Status::Unknown,
                NodeLabel::Formula(_) if n.children.is_empty() => Status::Unknown,
                NodeLabel::Formula(_) => {
                    let kids = n.children.iter().map(|&c| sigma[c]);
                    let mut out = Status::Unsat;
                    for s in kids {
                        match s {
                            Status::Sat => {
                                out = Status::Sat;
                                break;
                            }
                            Status::Unknown => out = Status::Unknown,
                            Status::Unsat => {}
                        }
                    }
                    out
                }
            };
        }
        sigma
    }

    pub fn status(&self, v: NodeId) -> Status {
        self.statuses()[v]
    }

    /// Δ for every node.
    pub fn subtree_sizes(&self) -> Vec<usize> {
        let mut delta = vec![1; self.nodes.len()];
        for id in (0..self.nodes.len()).rev() {
            delta[id] = 1 + self.nodes[id]
                .children
                .iter()
                .map(|&c| delta[c])
                .sum::<usize>();
        }
        delta
    }

    pub fn subtree_size(&self, v: NodeId) -> usize {
        self.subtree_sizes()[v]
    }

    /// One-hot branch labels for every SAT split point.
    pub fn extract_labels(&self) -> Vec<SplitLabel> {
        let sigma = self.statuses();
        let delta = self.subtree_sizes();
        let mut out = Vec::new();
        for (id, n) in self.nodes.iter().enumerate() {
            if n.children.len() < 2 || sigma[id] != Status::Sat {
                continue;
            }
            let best = n
                .children
                .iter()
                .filter(|&&c| sigma[c] == Status::Sat)
                .map(|&c| delta[c])
                .min()
                .expect("a SAT node has a SAT child");
            let mut label: Vec<u8> = n
                .children
                .iter()
                .map(|&c| u8::from(sigma[c] == Status::Sat && delta[c] == best))
                .collect();
            // ties: keep the lowest index
            let first = label.iter().position(|&y| y == 1).unwrap();
            for y in label.iter_mut().skip(first + 1) {
                *y = 0;
            }
            out.push(SplitLabel { node: id, label });
        }
        out
    }

    /// Renumbers nodes in pre-order, keeping child order.
    fn into_preorder(self) -> ProofTree {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![0];
        while let Some(id) = stack.pop() {
            order.push(id);
            stack.extend(self.nodes[id].children.iter().rev());
        }
        let mut new_id = vec![0; self.nodes.len()];
        for (new, &old) in order.iter().enumerate() {
            new_id[old] = new;
        }
        let mut old_nodes: Vec<Option<Node>> = self.nodes.into_iter().map(Some).collect();
        let nodes = order
            .iter()
            .map(|&old| {
                let mut n = old_nodes[old].take().unwrap();
                n.parent = n.parent.map(|p| new_id[p]);
                for c in &mut n.children {
                    *c = new_id[*c];
                }
                n
            })
            .collect();
        ProofTree { nodes }
    }

    pub fn dump(&self, symbols: &SymbolTable) -> TreeDump {
        let sigma = self.statuses();
        let delta = self.subtree_sizes();
        let nodes = self
            .nodes
            .iter()
            .enumerate()
            .map(|(id, n)| DumpNode {
                id,
                depth: n.depth,
                label: match &n.label {
                    NodeLabel::Formula(f) => f.display(symbols).to_string(),
                    NodeLabel::Sat => "SAT".into(),
                    NodeLabel::Unsat => "UNSAT".into(),
                    NodeLabel::Unknown(_) => "UNKNOWN".into(),
                },
                formula: match &n.label {
                    NodeLabel::Unknown(Some(f)) => Some(f.display(symbols).to_string()),
                    _ => None,
                },
                status: sigma[id],
                size: delta[id],
            })
            .collect();
        let edges = self
            .nodes
            .iter()
            .enumerate()
            .filter_map(|(id, n)| {
                Some(DumpEdge {
                    parent: n.parent?,
                    child: id,
                    rule: n.rule?.to_string(),
                })
            })
            .collect();
        TreeDump { nodes, edges }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitLabel {
    pub node: NodeId,
    pub label: Vec<u8>,
}

impl SplitLabel {
    pub fn index(&self) -> usize {
        self.label.iter().position(|&y| y == 1).expect("one-hot")
    }
}

/// Serialized form of a proof tree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeDump {
    pub nodes: Vec<DumpNode>,
    pub edges: Vec<DumpEdge>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DumpNode {
    pub id: usize,
    pub depth: usize,
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub formula: Option<String>,
    pub status: Status,
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DumpEdge {
    pub parent: usize,
    pub child: usize,
    pub rule: String,
}

/// Expands `phi` breadth-first applying the unique matching rule at every
/// formula node.
///
/// A formula node at depth `depth_limit` is cut off and labelled UNKNOWN,
/// unless its rule only yields verdicts (R1, R4, R6), which are always
/// applied. Once the tree holds `node_cap` nodes the remaining frontier is
/// labelled UNKNOWN as well. Nodes are numbered in pre-order.
pub fn build_proof_tree(
    phi: &Formula,
    symbols: &mut SymbolTable,
    depth_limit: usize,
    node_cap: usize,
) -> ProofTree {
    let mut tree = ProofTree::new(NodeLabel::Formula(phi.clone()));
    let mut queue = VecDeque::from([0]);
    while let Some(id) = queue.pop_front() {
        let NodeLabel::Formula(f) = &tree.nodes[id].label else {
            continue;
        };
        let rule = match_rule(f);
        let cut = tree.nodes[id].depth >= depth_limit && !rule.base.is_terminal();
        if cut || tree.len() >= node_cap {
            let NodeLabel::Formula(f) =
                std::mem::replace(&mut tree.nodes[id].label, NodeLabel::Sat)
            else {
                unreachable!()
            };
            tree.nodes[id].label = NodeLabel::Unknown(Some(f));
            continue;
        }
        let app = apply_rule(f, symbols);
        for b in app.branches {
            let label = match b.conclusion {
                Conclusion::Formula(f) => NodeLabel::Formula(f),
                Conclusion::Sat => NodeLabel::Sat,
                Conclusion::Unsat => NodeLabel::Unsat,
            };
            let child = tree.add_child(id, app.rule, label);
            if matches!(tree.nodes[child].label, NodeLabel::Formula(_)) {
                queue.push_back(child);
            }
        }
    }
    tree.into_preorder()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_formula;
    use crate::rules::BaseRule;

    fn r7() -> RuleId {
        RuleId::direct(BaseRule::R7)
    }

    fn r8() -> RuleId {
        RuleId::direct(BaseRule::R8)
    }

    fn star(children: &[NodeLabel]) -> ProofTree {
        let mut t = ProofTree::new(NodeLabel::Formula(Formula::truth()));
        let rule = if children.len() == 3 { r8() } else { r7() };
        for c in children {
            t.add_child(0, rule, c.clone());
        }
        t
    }

    fn pad(t: &mut ProofTree, node: NodeId, extra: usize) {
        // hang `extra` UNSAT leaves under a SAT subtree to inflate Δ without changing σ
        for _ in 0..extra {
            t.add_child(node, r7(), NodeLabel::Unsat);
        }
    }

    #[test]
    fn epsilon_tree() {
        let (mut st, phi) = parse_formula("=").unwrap();
        let t = build_proof_tree(&phi, &mut st, 2, usize::MAX);
        assert_eq!(t.len(), 3);
        assert_eq!(t.node(1).label, NodeLabel::Formula(Formula::truth()));
        assert_eq!(t.node(2).label, NodeLabel::Sat);
        assert_eq!(t.node(2).depth, 2);
        assert_eq!(t.subtree_size(0), 3);
        assert_eq!(t.status(0), Status::Sat);
        assert_eq!(t.node(1).rule, Some(RuleId::direct(BaseRule::R2)));
        assert_eq!(t.node(2).rule, Some(RuleId::direct(BaseRule::R1)));
    }

    #[test]
    fn figure_tree_sat_within_four() {
        let (mut st, phi) = parse_formula("XbY=bXXZ").unwrap();
        let t = build_proof_tree(&phi, &mut st, 4, usize::MAX);
        assert_eq!(t.status(0), Status::Sat);
        let sigma = t.statuses();
        // first child is the ε-branch and carries the solution
        assert_eq!(sigma[t.children(0)[0]], Status::Sat);
        let sat_leaf = (0..t.len())
            .find(|&i| t.node(i).label == NodeLabel::Sat)
            .unwrap();
        let parent = t.node(sat_leaf).parent.unwrap();
        assert!(t.node(parent).depth <= 4);
    }

    #[test]
    fn figure_tree_right_path_cut_at_three() {
        let (mut st, phi) = parse_formula("XbY=bXXZ").unwrap();
        let t = build_proof_tree(&phi, &mut st, 3, usize::MAX);
        let mut v = 0;
        while let Some(&last) = t.children(v).last() {
            v = last;
        }
        assert_eq!(t.node(v).depth, 3);
        assert!(matches!(t.node(v).label, NodeLabel::Unknown(Some(_))));
    }

    #[test]
    fn node_cap_marks_frontier_unknown() {
        let (mut st, phi) = parse_formula("XbY=bXXZ").unwrap();
        let t = build_proof_tree(&phi, &mut st, 50, 10);
        assert!(t.len() <= 12);
        assert!(t
            .nodes()
            .iter()
            .any(|n| matches!(n.label, NodeLabel::Unknown(_))));
        for n in t.nodes() {
            if matches!(n.label, NodeLabel::Formula(_)) {
                assert!(!n.children.is_empty());
            }
        }
    }

    #[test]
    fn preorder_numbering() {
        let (mut st, phi) = parse_formula("Xab=YaZ").unwrap();
        let t = build_proof_tree(&phi, &mut st, 6, 500);
        let mut expect = 0;
        let mut stack = vec![0];
        while let Some(v) = stack.pop() {
            assert_eq!(v, expect);
            expect += 1;
            stack.extend(t.children(v).iter().rev());
        }
        for (id, n) in t.nodes().iter().enumerate() {
            if let Some(p) = n.parent {
                assert!(p < id);
                assert_eq!(n.depth, t.node(p).depth + 1);
            }
        }
    }

    #[test]
    fn sigma_cases() {
        assert_eq!(ProofTree::new(NodeLabel::Sat).status(0), Status::Sat);
        assert_eq!(ProofTree::new(NodeLabel::Unsat).status(0), Status::Unsat);
        assert_eq!(
            ProofTree::new(NodeLabel::Unknown(None)).status(0),
            Status::Unknown
        );
        assert_eq!(
            star(&[NodeLabel::Unsat, NodeLabel::Sat]).status(0),
            Status::Sat
        );
        assert_eq!(
            star(&[NodeLabel::Unsat, NodeLabel::Unknown(None)]).status(0),
            Status::Unknown
        );
        assert_eq!(
            star(&[NodeLabel::Unsat, NodeLabel::Unsat]).status(0),
            Status::Unsat
        );
        assert_eq!(
            star(&[NodeLabel::Unknown(None), NodeLabel::Sat]).status(0),
            Status::Sat
        );
    }

    #[test]
    fn delta_cases() {
        assert_eq!(ProofTree::new(NodeLabel::Sat).subtree_size(0), 1);
        assert_eq!(star(&[NodeLabel::Sat, NodeLabel::Unsat]).subtree_size(0), 3);
    }

    #[test]
    fn labels_pick_smallest_sat_child() {
        let f = || NodeLabel::Formula(Formula::truth());
        let mut t = star(&[f(), f(), NodeLabel::Unsat]);
        let (c1, c2) = (t.children(0)[0], t.children(0)[1]);
        // Δ(c1) = 5, Δ(c2) = 3
        let s1 = t.add_child(c1, r7(), NodeLabel::Sat);
        pad(&mut t, c1, 3);
        let _ = s1;
        t.add_child(c2, r7(), NodeLabel::Sat);
        t.add_child(c2, r7(), NodeLabel::Unsat);
        let d = t.subtree_sizes();
        assert_eq!((d[c1], d[c2]), (5, 3));
        let labels = t.extract_labels();
        let root = labels.iter().find(|l| l.node == 0).unwrap();
        assert_eq!(root.label, vec![0, 1, 0]);
        assert_eq!(root.index(), 1);
    }

    #[test]
    fn labels_break_ties_to_lowest_index() {
        let f = || NodeLabel::Formula(Formula::truth());
        let mut t = star(&[f(), f()]);
        for c in [1, 2] {
            t.add_child(c, r7(), NodeLabel::Sat);
            t.add_child(c, r7(), NodeLabel::Unsat);
        }
        let labels = t.extract_labels();
        assert_eq!(labels.len(), 3);
        assert_eq!(
            labels[0],
            SplitLabel {
                node: 0,
                label: vec![1, 0]
            }
        );
    }

    #[test]
    fn no_labels_without_sat() {
        assert!(star(&[NodeLabel::Unsat, NodeLabel::Unsat])
            .extract_labels()
            .is_empty());
        assert!(star(&[NodeLabel::Unknown(None), NodeLabel::Unsat])
            .extract_labels()
            .is_empty());
        // single-child nodes never produce a label
        let mut t = ProofTree::new(NodeLabel::Formula(Formula::truth()));
        t.add_child(0, RuleId::direct(BaseRule::R1), NodeLabel::Sat);
        assert!(t.extract_labels().is_empty());
    }

    #[test]
    fn unknown_sat_children_get_zero() {
        let mut t = star(&[NodeLabel::Unknown(None), NodeLabel::Sat, NodeLabel::Unsat]);
        assert_eq!(t.extract_labels()[0].label, vec![0, 1, 0]);
        t.add_child(1, r7(), NodeLabel::Sat);
        assert_eq!(t.extract_labels()[0].label, vec![0, 1, 0]);
    }

    #[test]
    fn dump_is_serializable() {
        let (mut st, phi) = parse_formula("=").unwrap();
        let t = build_proof_tree(&phi, &mut st, 2, 100);
        let d = t.dump(&st);
        let json = serde_json::to_string(&d).unwrap();
        assert!(json.contains("\"rule\":\"R2\""));
        let back: TreeDump = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d);
        assert_eq!(d.nodes[0].label, "ε=ε");
        assert_eq!(d.nodes[1].label, "true");
    }
}
