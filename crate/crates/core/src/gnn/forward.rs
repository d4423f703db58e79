use std::path::Path;

use super::{Affine, ModelError, ModelWeights, Scalar};
use crate::graph::{EquationGraph, Variant};
use crate::search::BranchScorer;
use crate::terms::Formula;

/// One message-passing step over precomputed neighbourhoods (each including
/// the node itself).
pub fn gcn_layer<F: Scalar>(
    h: &[Vec<F>],
    neighbourhoods: &[Vec<usize>],
    layer: &Affine<F>,
) -> Result<Vec<Vec<F>>, ModelError> {
    if h.len() != neighbourhoods.len() {
        return Err(ModelError::Dimension(format!(
            "{} node vectors for {} nodes",
            h.len(),
            neighbourhoods.len()
        )));
    }
    let dim = layer.input_dim();
    if let Some(bad) = h.iter().position(|v| v.len() != dim) {
        return Err(ModelError::Dimension(format!(
            "node {bad} has width {}, layer expects {dim}",
            h[bad].len()
        )));
    }
    let mut out = Vec::with_capacity(h.len());
    let mut mean = vec![F::zero(); dim];
    for nb in neighbourhoods {
        mean.iter_mut().for_each(|x| *x = F::zero());
        for &u in nb {
            for (acc, &x) in mean.iter_mut().zip(&h[u]) {
                *acc = *acc + x;
            }
        }
        let k = F::from_usize(nb.len()).unwrap();
        mean.iter_mut().for_each(|x| *x = *x / k);
        let mut y = layer.apply(&mean);
        y.iter_mut().for_each(|x| *x = x.max(F::zero()));
        out.push(y);
    }
    Ok(out)
}

/// Sum of the node vectors after `T` message-passing steps.
pub fn embed_graph<F: Scalar>(g: &EquationGraph, w: &ModelWeights<F>) -> Vec<F> {
    let nb = g.neighbourhoods();
    let mut h: Vec<Vec<F>> = g
        .nodes
        .iter()
        .map(|n| w.type_embeddings[n.kind.index()].clone())
        .collect();
    for layer in &w.gcn {
        h = gcn_layer(&h, &nb, layer).expect("validated weights");
    }
    let mut pooled = vec![F::zero(); w.m];
    for v in &h {
        for (acc, &x) in pooled.iter_mut().zip(v) {
            *acc = *acc + x;
        }
    }
    pooled
}

/// Numerically stable softmax.
pub fn softmax<F: Scalar>(logits: &[F]) -> Vec<F> {
    let max = logits.iter().copied().fold(F::neg_infinity(), F::max);
    let exps: Vec<F> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: F = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Probabilities over the branches of one split point.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchScores<F> {
    pub scores: Vec<F>,
}

impl<F: Scalar> BranchScores<F> {
    /// Branch indices by descending score; ties keep presentation order.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.scores.len()).collect();
        idx.sort_by(|&a, &b| {
            self.scores[b]
                .partial_cmp(&self.scores[a])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        idx
    }
}

pub fn score_graphs<F: Scalar>(
    parent: &EquationGraph,
    children: &[EquationGraph],
    w: &ModelWeights<F>,
) -> Result<BranchScores<F>, ModelError> {
    let head = w.head(children.len())?;
    let mut x = embed_graph(parent, w);
    for c in children {
        x.extend(embed_graph(c, w));
    }
    for (i, layer) in head.iter().enumerate() {
        x = layer.apply(&x);
        if i + 1 < head.len() {
            x.iter_mut().for_each(|v| *v = v.max(F::zero()));
        }
    }
    Ok(BranchScores {
        scores: softmax(&x),
    })
}

/// Scores the children of a split. Verdict children (`None`) and `true` are
/// encoded as the root-only graph.
pub fn score_branches<F: Scalar>(
    parent: &Formula,
    children: &[Option<&Formula>],
    variant: Variant,
    w: &ModelWeights<F>,
) -> Result<BranchScores<F>, ModelError> {
    let encode = |f: Option<&Formula>| match f {
        Some(f) => EquationGraph::encode(f, variant),
        None => EquationGraph::root_only(variant),
    };
    let graphs: Vec<EquationGraph> = children.iter().map(|&c| encode(c)).collect();
    score_graphs(&encode(Some(parent)), &graphs, w)
}

/// Loaded weights plus the graph encoding they were trained on.
#[derive(Clone, Debug)]
pub struct GnnModel<F> {
    pub weights: ModelWeights<F>,
    pub variant: Variant,
}

impl<F: Scalar> GnnModel<F> {
    pub fn new(weights: ModelWeights<F>, variant: Variant) -> Self {
        GnnModel { weights, variant }
    }

    pub fn load(path: &Path, variant: Variant) -> Result<Self, ModelError> {
        Ok(GnnModel::new(ModelWeights::load(path)?, variant))
    }
}

impl<F: Scalar> BranchScorer for GnnModel<F> {
    fn score(
        &self,
        parent: &Formula,
        children: &[Option<&Formula>],
    ) -> Result<Vec<f64>, ModelError> {
        let s = score_branches(parent, children, self.variant, &self.weights)?;
        Ok(s.scores.iter().map(|v| v.to_f64().unwrap()).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_formula;
    use crate::gnn::ModelWeights;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_node() -> Vec<Vec<usize>> {
        vec![vec![0, 1], vec![0, 1]]
    }

    #[test]
    fn isolated_node_zero_layer() {
        let layer = Affine::<f64>::zeros(3, 3);
        let out = gcn_layer(&[vec![1.0, -2.0, 5.0]], &[vec![0]], &layer).unwrap();
        assert_eq!(out, vec![vec![0.0; 3]]);
    }

    #[test]
    fn two_nodes_average() {
        let layer = Affine {
            weight: vec![vec![1.0f64]],
            b: vec![0.0],
        };
        let out = gcn_layer(&[vec![2.0], vec![4.0]], &two_node(), &layer).unwrap();
        assert_eq!(out, vec![vec![3.0], vec![3.0]]);
    }

    #[test]
    fn negative_bias_is_clipped() {
        let mut layer = Affine::<f32>::zeros(2, 2);
        layer.b = vec![-1.0, -1.0];
        let out = gcn_layer(&[vec![7.0, 8.0], vec![-3.0, 1.0]], &two_node(), &layer).unwrap();
        assert!(out.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn dimension_mismatch() {
        let layer = Affine::<f32>::zeros(2, 2);
        assert!(gcn_layer(&[vec![1.0]], &[vec![0]], &layer).is_err());
        assert!(gcn_layer(&[vec![1.0, 2.0]], &two_node(), &layer).is_err());
    }

    #[test]
    fn root_only_graph_with_zero_layers_embeds_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut w = ModelWeights::<f32>::random(4, 2, 3, &mut rng);
        for l in &mut w.gcn {
            *l = Affine::zeros(4, 4);
        }
        let e = embed_graph(&EquationGraph::root_only(Variant::G1), &w);
        assert_eq!(e, vec![0.0; 4]);
    }

    #[test]
    fn flat_head_gives_uniform_scores() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut w = ModelWeights::<f32>::random(8, 2, 16, &mut rng);
        let last = w.heads.get_mut(&2).unwrap().last_mut().unwrap();
        *last = Affine::zeros(last.input_dim(), 2);
        let (_, parent) = parse_formula("XbY=bXXZ").unwrap();
        let (_, child) = parse_formula("bY=bZ").unwrap();
        let s = score_branches(&parent, &[Some(&child), Some(&child)], Variant::G3, &w).unwrap();
        assert!((s.scores[0] - 0.5).abs() < 1e-6);
        assert!((s.scores[1] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn scores_are_probabilities() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let w = ModelWeights::<f32>::random(8, 2, 16, &mut rng);
        let (_, parent) = parse_formula("Xab=YaZ").unwrap();
        let (_, a) = parse_formula("ab=aZ").unwrap();
        let (_, b) = parse_formula("Xab=aZ").unwrap();
        let s = score_branches(&parent, &[Some(&a), Some(&b), None], Variant::G5, &w).unwrap();
        assert_eq!(s.scores.len(), 3);
        assert!(s.scores.iter().all(|&p| p > 0.0 && p < 1.0));
        assert!((s.scores.iter().sum::<f32>() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn missing_head() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut w = ModelWeights::<f32>::random(2, 1, 4, &mut rng);
        w.heads.remove(&3);
        let g = EquationGraph::root_only(Variant::G1);
        let r = score_graphs(&g, &[g.clone(), g.clone(), g.clone()], &w);
        assert!(matches!(r, Err(ModelError::MissingHead(3))));
    }

    #[test]
    fn ranking_prefers_higher_score() {
        let s = BranchScores {
            scores: vec![0.3f32, 0.7],
        };
        assert_eq!(s.ranking(), vec![1, 0]);
        let tie = BranchScores {
            scores: vec![0.25f64, 0.5, 0.25],
        };
        assert_eq!(tie.ranking(), vec![1, 0, 2]);
    }

    #[test]
    fn softmax_is_stable_for_large_logits() {
        let p = softmax(&[1000.0f32, 1000.0]);
        assert_eq!(p, vec![0.5, 0.5]);
    }
}
