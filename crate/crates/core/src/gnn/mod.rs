//! Graph-convolution branch scorer (inference only).
//!
//! Every node starts from the embedding of its type (variable, letter, `=`,
//! `#`). Each of the `T` layers replaces a node's vector with
//! `ReLU(W · mean(neighbours ∪ self) + b)`. A graph is summarised by the sum
//! of its node vectors, and the parent and child summaries are concatenated
//! and fed to the classifier head for that number of children, followed by a
//! softmax.
//!
//! All math is generic over [`Scalar`]; the solver uses `f32`.

mod forward;

use std::collections::BTreeMap;
use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::path::Path;

use num_traits::{Float, FromPrimitive};
use rand::Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use forward::{
    embed_graph, gcn_layer, score_branches, score_graphs, softmax, BranchScores, GnnModel,
};

/// Floating-point types the network can run in.
pub trait Scalar:
    Float + FromPrimitive + Sum + Debug + Display + Serialize + DeserializeOwned + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + Sum
        + Debug
        + Display
        + Serialize
        + DeserializeOwned
        + Send
        + Sync
        + 'static
{
}

pub const DEFAULT_EMBED_DIM: usize = 128;
pub const DEFAULT_STEPS: usize = 2;
pub const DEFAULT_HIDDEN: usize = 128;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot read weights: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse weights: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("no classifier head for {0} branches")]
    MissingHead(usize),
}

/// `y = W x + b` with `W` stored row-major as `out` rows of length `in`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Affine<F> {
    #[serde(rename = "W")]
    pub weight: Vec<Vec<F>>,
    pub b: Vec<F>,
}

impl<F: Scalar> Affine<F> {
    pub fn zeros(input: usize, output: usize) -> Self {
        Affine {
            weight: vec![vec![F::zero(); input]; output],
            b: vec![F::zero(); output],
        }
    }

    /// Uniform in ±1/√input.
    pub fn random<R: Rng>(input: usize, output: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (input.max(1) as f64).sqrt();
        let mut draw = || F::from_f64(rng.gen_range(-bound..=bound)).unwrap();
        Affine {
            weight: (0..output)
                .map(|_| (0..input).map(|_| draw()).collect())
                .collect(),
            b: (0..output).map(|_| draw()).collect(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.first().map_or(0, Vec::len)
    }

    pub fn output_dim(&self) -> usize {
        self.weight.len()
    }

    pub fn apply(&self, x: &[F]) -> Vec<F> {
        self.weight
            .iter()
            .zip(&self.b)
            .map(|(row, &b)| row.iter().zip(x).fold(b, |acc, (&w, &v)| acc + w * v))
            .collect()
    }

    fn check(&self, what: &str, input: usize, output: Option<usize>) -> Result<(), ModelError> {
        if self.weight.is_empty() {
            return Err(ModelError::Dimension(format!(
                "{what}: empty weight matrix"
            )));
        }
        if let Some(out) = output {
            if self.output_dim() != out {
                return Err(ModelError::Dimension(format!(
                    "{what}: expected {out} rows, found {}",
                    self.output_dim()
                )));
            }
        }
        if let Some(row) = self.weight.iter().position(|r| r.len() != input) {
            return Err(ModelError::Dimension(format!(
                "{what}: row {row} has length {}, expected {input}",
                self.weight[row].len()
            )));
        }
        if self.b.len() != self.output_dim() {
            return Err(ModelError::Dimension(format!(
                "{what}: bias has length {}, expected {}",
                self.b.len(),
                self.output_dim()
            )));
        }
        let finite = self
            .weight
            .iter()
            .flatten()
            .chain(&self.b)
            .all(|v| v.is_finite());
        if !finite {
            return Err(ModelError::NonFinite(what.to_string()));
        }
        Ok(())
    }
}

/// Learned parameters: type embeddings, one affine map per message-passing
/// step and a classifier head per branch count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelWeights<F> {
    pub m: usize,
    #[serde(rename = "T")]
    pub steps: usize,
    /// Indexed by [`crate::graph::NodeType::index`].
    #[serde(rename = "typeEmbeddings")]
    pub type_embeddings: Vec<Vec<F>>,
    pub gcn: Vec<Affine<F>>,
    /// Layers of the classifier for `n` branches, ReLU between layers.
    pub heads: BTreeMap<usize, Vec<Affine<F>>>,
}

impl<F: Scalar> ModelWeights<F> {
    pub fn random<R: Rng>(m: usize, steps: usize, hidden: usize, rng: &mut R) -> Self {
        let type_embeddings = (0..4)
            .map(|_| {
                (0..m)
                    .map(|_| F::from_f64(rng.gen_range(-1.0..=1.0)).unwrap())
                    .collect()
            })
            .collect();
        let gcn = (0..steps).map(|_| Affine::random(m, m, rng)).collect();
        let heads = [2, 3]
            .into_iter()
            .map(|n| {
                let layers = vec![
                    Affine::random((n + 1) * m, hidden, rng),
                    Affine::random(hidden, n, rng),
                ];
                (n, layers)
            })
            .collect();
        ModelWeights {
            m,
            steps,
            type_embeddings,
            gcn,
            heads,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let m = self.m;
        if m == 0 {
            return Err(ModelError::Dimension("m must be positive".into()));
        }
        if self.type_embeddings.len() != 4 {
            return Err(ModelError::Dimension(format!(
                "expected 4 type embeddings, found {}",
                self.type_embeddings.len()
            )));
        }
        for (i, e) in self.type_embeddings.iter().enumerate() {
            if e.len() != m {
                return Err(ModelError::Dimension(format!(
                    "type embedding {i} has length {}, expected {m}",
                    e.len()
                )));
            }
            if !e.iter().all(|v| v.is_finite()) {
                return Err(ModelError::NonFinite(format!("type embedding {i}")));
            }
        }
        if self.gcn.len() != self.steps {
            return Err(ModelError::Dimension(format!(
                "T = {} but {} gcn layers given",
                self.steps,
                self.gcn.len()
            )));
        }
        for (t, layer) in self.gcn.iter().enumerate() {
            layer.check(&format!("gcn[{t}]"), m, Some(m))?;
        }
        for (&n, layers) in &self.heads {
            if n < 2 {
                return Err(ModelError::Dimension(format!("head for {n} branches")));
            }
            if layers.is_empty() {
                return Err(ModelError::Dimension(format!("head {n} has no layers")));
            }
            let mut input = (n + 1) * m;
            for (i, layer) in layers.iter().enumerate() {
                let last = i + 1 == layers.len();
                layer.check(&format!("heads[{n}][{i}]"), input, last.then_some(n))?;
                input = layer.output_dim();
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let w: Self = serde_json::from_str(text)?;
        w.validate()?;
        Ok(w)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("weights serialize")
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn head(&self, n: usize) -> Result<&[Affine<F>], ModelError> {
        self.heads
            .get(&n)
            .map(Vec::as_slice)
            .ok_or(ModelError::MissingHead(n))
    }

    /// Converts every parameter to another scalar type.
    pub fn cast<G: Scalar>(&self) -> ModelWeights<G> {
        let c = |v: &F| G::from_f64(v.to_f64().unwrap()).unwrap();
        let affine = |a: &Affine<F>| Affine {
            weight: a.weight.iter().map(|r| r.iter().map(c).collect()).collect(),
            b: a.b.iter().map(c).collect(),
        };
        ModelWeights {
            m: self.m,
            steps: self.steps,
            type_embeddings: self
                .type_embeddings
                .iter()
                .map(|e| e.iter().map(c).collect())
                .collect(),
            gcn: self.gcn.iter().map(affine).collect(),
            heads: self
                .heads
                .iter()
                .map(|(&n, ls)| (n, ls.iter().map(affine).collect()))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn default_sized_weights_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w =
            ModelWeights::<f32>::random(DEFAULT_EMBED_DIM, DEFAULT_STEPS, DEFAULT_HIDDEN, &mut rng);
        w.validate().unwrap();
        let back = ModelWeights::<f32>::from_json(&w.to_json()).unwrap();
        assert_eq!(back.m, 128);
        assert_eq!(back.steps, 2);
        assert_eq!(back, w);
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let w = ModelWeights::<f32>::random(3, 2, 5, &mut rng);
            let text = w.to_json();
            let back = ModelWeights::<f32>::from_json(&text).unwrap();
            assert_eq!(back.to_json(), text);
            let bits = |w: &ModelWeights<f32>| -> Vec<u32> {
                w.gcn
                    .iter()
                    .flat_map(|a| a.weight.iter().flatten().chain(&a.b))
                    .map(|v| v.to_bits())
                    .collect()
            };
            assert_eq!(bits(&back), bits(&w));
        }
    }

    #[test]
    fn field_names_match_file_format() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = ModelWeights::<f64>::random(1, 1, 2, &mut rng);
        let v: serde_json::Value = serde_json::from_str(&w.to_json()).unwrap();
        for key in ["m", "T", "typeEmbeddings", "gcn", "heads"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert!(v["gcn"][0].get("W").is_some());
        assert!(v["heads"].get("2").is_some());
        assert!(v["heads"].get("3").is_some());
    }

    #[test]
    fn shape_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut w = ModelWeights::<f32>::random(2, 1, 3, &mut rng);
        w.gcn[0].weight[1].push(0.5);
        assert!(matches!(
            ModelWeights::<f32>::from_json(&w.to_json()),
            Err(ModelError::Dimension(_))
        ));

        let mut w = ModelWeights::<f32>::random(2, 1, 3, &mut rng);
        w.heads.get_mut(&2).unwrap()[1] = Affine::zeros(3, 3);
        assert!(matches!(w.validate(), Err(ModelError::Dimension(_))));

        let mut w = ModelWeights::<f32>::random(2, 2, 3, &mut rng);
        w.gcn.pop();
        assert!(matches!(w.validate(), Err(ModelError::Dimension(_))));

        let mut w = ModelWeights::<f32>::random(2, 1, 3, &mut rng);
        w.type_embeddings[2][0] = f32::NAN;
        assert!(matches!(w.validate(), Err(ModelError::NonFinite(_))));
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            ModelWeights::<f32>::from_json("{"),
            Err(ModelError::Parse(_))
        ));
        assert!(matches!(
            ModelWeights::<f32>::load(Path::new("/nonexistent/weights.json")),
            Err(ModelError::Io(_))
        ));
    }
}
