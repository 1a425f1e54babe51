//! Random forest of exact CART trees (Gini impurity, bootstrap rows, random
//! feature subsets per split).

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsp::Grid;
use super::serialize::{ModelContainer, ModelKind};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features tried per split; 0 means `sqrt(n_features)`.
    pub feature_subsample: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 50,
            max_depth: 16,
            min_leaf: 2,
            feature_subsample: 0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Leaf { prob: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// A binary tree stored as a node array rooted at index 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { prob } => return prob,
                Node::Split { feature, threshold, left, right } => {
                    i = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn rec(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + rec(nodes, left).max(rec(nodes, right)),
            }
        }
        rec(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub params: ForestParams,
    pub n_features: usize,
    pub trees: Vec<Tree>,
}

/// Gini impurity `1 − Σ p²` of a two-class node.
pub fn gini(n_neg: usize, n_pos: usize) -> f64 {
    let n = (n_neg + n_pos) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let (p, q) = (n_pos as f64 / n, n_neg as f64 / n);
    1.0 - p * p - q * q
}

struct Builder<'a> {
    x: &'a Grid,
    y: &'a [bool],
    params: &'a ForestParams,
    mtry: usize,
    nodes: Vec<Node>,
    rng: ChaCha8Rng,
}

impl Builder<'_> {
    fn leaf(&mut self, idx: &[usize]) -> usize {
        let pos = idx.iter().filter(|&&i| self.y[i]).count();
        self.nodes.push(Node::Leaf {
            prob: pos as f64 / idx.len() as f64,
        });
        self.nodes.len() - 1
    }

    /// Best `(feature, threshold, weighted impurity)` over a random feature subset.
    fn best_split(&mut self, idx: &[usize]) -> Option<(usize, f64)> {
        let n = idx.len();
        let total_pos = idx.iter().filter(|&&i| self.y[i]).count();
        let min_leaf = self.params.min_leaf.max(1);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut vals: Vec<(f64, bool)> = Vec::with_capacity(n);
        let features = sample(&mut self.rng, self.x.n_cols(), self.mtry);
        for f in features.iter() {
            vals.clear();
            vals.extend(idx.iter().map(|&i| (self.x.get(i, f), self.y[i])));
            vals.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_pos = 0usize;
            for k in 1..n {
                left_pos += vals[k - 1].1 as usize;
                if vals[k].0 == vals[k - 1].0 || k < min_leaf || n - k < min_leaf {
                    continue;
                }
                let right_pos = total_pos - left_pos;
                let score = k as f64 * gini(k - left_pos, left_pos)
                    + (n - k) as f64 * gini(n - k - right_pos, right_pos);
                if best.map_or(true, |(s, _, _)| score < s) {
                    let thr = 0.5 * (vals[k - 1].0 + vals[k].0);
                    // Midpoints of adjacent floats can round onto the upper value.
                    let thr = if thr >= vals[k].0 { vals[k - 1].0 } else { thr };
                    best = Some((score, f, thr));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn build(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let pos = idx.iter().filter(|&&i| self.y[i]).count();
        if pos == 0 || pos == idx.len() || depth >= self.params.max_depth || idx.len() < 2 * self.params.min_leaf.max(1) {
            return self.leaf(idx);
        }
        let Some((feature, threshold)) = self.best_split(idx) else {
            return self.leaf(idx);
        };
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf { prob: 0.0 });
        // Stable partition keeps the build independent of sort internals.
        let (mut l, mut r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.x.get(i, feature) <= threshold);
        let left = self.build(&mut l, depth + 1);
        let right = self.build(&mut r, depth + 1);
        self.nodes[slot] = Node::Split { feature, threshold, left, right };
        slot
    }
}

fn tree_rng(seed: u64, tree: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree as u64);
    rng
}

/// Trains the forest; trees are built in parallel but each depends only on `(seed, tree index)`.
pub fn forest_train(x: &Grid, y: &[bool], params: &ForestParams) -> Result<ForestModel> {
    if x.n_rows() == 0 || x.n_cols() == 0 {
        return Err(invalid("cannot train on an empty matrix"));
    }
    if x.n_rows() != y.len() {
        return Err(Error::ShapeMismatch(format!("{} rows, {} labels", x.n_rows(), y.len())));
    }
    let pos = y.iter().filter(|&&v| v).count();
    if pos == 0 || pos == y.len() {
        return Err(invalid("training data contains a single class"));
    }
    if !x.all_finite() {
        return Err(invalid("training rows contain non-finite values"));
    }
    if params.n_trees == 0 {
        return Err(invalid("n_trees must be positive"));
    }
    let mtry = match params.feature_subsample {
        0 => ((x.n_cols() as f64).sqrt().round() as usize).max(1),
        m => m.min(x.n_cols()),
    };
    let n = x.n_rows();
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = tree_rng(params.seed, t);
            let mut idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let mut b = Builder {
                x,
                y,
                params,
                mtry,
                nodes: Vec::new(),
                rng,
            };
            b.build(&mut idx, 0);
            Tree { nodes: b.nodes }
        })
        .collect();
    Ok(ForestModel {
        params: params.clone(),
        n_features: x.n_cols(),
        trees,
    })
}

impl ForestModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(row)).sum::<f64>() / self.trees.len() as f64
    }

    /// Nodes go into one blob as `[feature (−1 for a leaf), threshold or prob, left, right]`.
    pub fn to_container(&self) -> Result<ModelContainer> {
        let mut c = ModelContainer::new(
            ModelKind::Forest,
            serde_json::json!({ "params": self.params, "n_features": self.n_features }),
        );
        c.push("tree_sizes", self.trees.iter().map(|t| t.nodes.len() as f64).collect());
        let mut nodes = Vec::new();
        for t in &self.trees {
            for n in &t.nodes {
                match *n {
                    Node::Leaf { prob } => nodes.extend([-1.0, prob, 0.0, 0.0]),
                    Node::Split { feature, threshold, left, right } => {
                        nodes.extend([feature as f64, threshold, left as f64, right as f64])
                    }
                }
            }
        }
        c.push("nodes", nodes);
        Ok(c)
    }

    pub fn from_container(c: &ModelContainer) -> Result<Self> {
        c.expect_kind(ModelKind::Forest)?;
        let params: ForestParams = serde_json::from_value(c.hyperparams["params"].clone())?;
        let n_features = c.hyperparams["n_features"]
            .as_u64()
            .ok_or_else(|| Error::Format("forest n_features missing".into()))? as usize;
        let sizes = c.blob("tree_sizes")?;
        let total: usize = sizes.iter().map(|&s| s as usize).sum();
        let raw = c.blob_sized("nodes", 4 * total)?;
        let mut trees = Vec::with_capacity(sizes.len());
        let mut at = 0;
        for &size in sizes {
            let size = size as usize;
            let mut nodes = Vec::with_capacity(size);
            for k in 0..size {
                let q = &raw[4 * (at + k)..4 * (at + k + 1)];
                let node = if q[0] < 0.0 {
                    Node::Leaf { prob: q[1] }
                } else {
                    let (feature, left, right) = (q[0] as usize, q[2] as usize, q[3] as usize);
                    // Children always follow their parent, so every path terminates.
                    if feature >= n_features || left <= k || right <= k || left >= size || right >= size {
                        return Err(Error::Format("corrupt forest node".into()));
                    }
                    Node::Split { feature, threshold: q[1], left, right }
                };
                nodes.push(node);
            }
            if nodes.is_empty() {
                return Err(Error::Format("empty tree".into()));
            }
            trees.push(Tree { nodes });
            at += size;
        }
        if trees.is_empty() {
            return Err(Error::Format("forest has no trees".into()));
        }
        Ok(Self { params, n_features, trees })
    }
}

/// Mean leaf probability across trees for every row.
pub fn forest_predict(model: &ForestModel, rows: &Grid) -> Result<Vec<f64>> {
    if rows.n_cols() != model.n_features {
        return Err(Error::ShapeMismatch(format!(
            "model expects {} features, rows have {}",
            model.n_features,
            rows.n_cols()
        )));
    }
    Ok((0..rows.n_rows())
        .into_par_iter()
        .map(|r| model.predict_row(rows.row(r)))
        .collect())
}
