//! Shared helpers for the integration tests.

#![allow(dead_code)]

use rand::Rng;
use wordsplit::gnn::{Affine, ModelWeights};
use wordsplit::graph::{EquationGraph, NodeType};

/// Dense, loop-based forward pass used as an independent reference.
pub fn reference_embedding(g: &EquationGraph, w: &ModelWeights<f64>) -> Vec<f64> {
    let n = g.nodes.len();
    let mut adj = vec![vec![false; n]; n];
    for (i, row) in adj.iter_mut().enumerate() {
        row[i] = true;
    }
    for &(s, d) in &g.edges {
        adj[s][d] = true;
        adj[d][s] = true;
    }
    let type_index = |t: NodeType| match t {
        NodeType::Variable => 0,
        NodeType::Letter => 1,
        NodeType::Equals => 2,
        NodeType::Sharp => 3,
    };
    let mut h: Vec<Vec<f64>> = g
        .nodes
        .iter()
        .map(|v| w.type_embeddings[type_index(v.kind)].clone())
        .collect();
    for layer in &w.gcn {
        let mut next = Vec::with_capacity(n);
        for row in adj.iter() {
            let degree = row.iter().filter(|&&b| b).count() as f64;
            let width = h[0].len();
            let mut mean = vec![0.0; width];
            for (u, &linked) in row.iter().enumerate() {
                if linked {
                    for k in 0..width {
                        mean[k] += h[u][k] / degree;
                    }
                }
            }
            let out: Vec<f64> = dense(layer, &mean)
                .into_iter()
                .map(|x| if x > 0.0 { x } else { 0.0 })
                .collect();
            next.push(out);
        }
        h = next;
    }
    let mut pooled = vec![0.0; w.m];
    for v in &h {
        for k in 0..w.m {
            pooled[k] += v[k];
        }
    }
    pooled
}

pub fn dense(layer: &Affine<f64>, x: &[f64]) -> Vec<f64> {
    layer
        .weight
        .iter()
        .zip(&layer.b)
        .map(|(row, b)| row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + b)
        .collect()
}

pub fn reference_scores(
    parent: &EquationGraph,
    children: &[EquationGraph],
    w: &ModelWeights<f64>,
) -> Vec<f64> {
    let mut x = reference_embedding(parent, w);
    for c in children {
        x.extend(reference_embedding(c, w));
    }
    let head = &w.heads[&children.len()];
    for (i, layer) in head.iter().enumerate() {
        x = dense(layer, &x);
        if i + 1 < head.len() {
            x = x.into_iter().map(|v| v.max(0.0)).collect();
        }
    }
    let exps: Vec<f64> = x.iter().map(|z| z.exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|e| e / total).collect()
}

/// The same graph with its nodes renumbered by a random permutation.
pub fn permute<R: Rng>(g: &EquationGraph, rng: &mut R) -> EquationGraph {
    use rand::seq::SliceRandom;
    let mut perm: Vec<usize> = (0..g.nodes.len()).collect();
    perm.shuffle(rng);
    let mut nodes = g.nodes.clone();
    for (old, &new) in perm.iter().enumerate() {
        nodes[new] = g.nodes[old].clone();
    }
    EquationGraph {
        variant: g.variant,
        nodes,
        edges: g.edges.iter().map(|&(s, d)| (perm[s], perm[d])).collect(),
    }
}
