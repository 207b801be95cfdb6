//! Random forest of binary decision trees split by information gain
//! (entropy criterion).
//!
//! Each tree draws its own random stream from `(seed, tree index)`, so trees
//! can be grown in parallel and the result does not depend on scheduling.
//!
//! Candidate thresholds are midpoints between consecutive distinct values of
//! a feature within the node; a sample goes left when `x[f] <= threshold`.
//! Sparse absent entries read as `0.0`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::vectorize::SparseVector;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` grows trees until leaves are pure or too small.
    pub max_depth: Option<usize>,
    pub min_split: usize,
    /// Features sampled per node; `None` means `ceil(sqrt(K))`.
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: Some(40),
            min_split: 2,
            features_per_split: None,
            bootstrap: true,
            seed: 42,
        }
    }
}

impl ForestParams {
    /// Smaller profile for bounded desk-scale runs: 50 trees of depth 24.
    pub fn reduced() -> Self {
        ForestParams {
            n_trees: 50,
            max_depth: Some(24),
            ..ForestParams::default()
        }
    }

    fn features_for(&self, n_features: usize) -> usize {
        self.features_per_split
            .unwrap_or_else(|| (n_features as f64).sqrt().ceil() as usize)
            .clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Leaf {
        class: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Nodes in an arena; the root is node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &SparseVector) -> usize {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { class } => return class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x.get(feature) <= threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }

    /// Longest root-to-leaf path, counted in edges.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub n_features: usize,
    pub params: ForestParams,
}

impl ForestModel {
    pub fn votes(&self, x: &SparseVector) -> [usize; 2] {
        let mut votes = [0; 2];
        for tree in &self.trees {
            votes[tree.predict(x)] += 1;
        }
        votes
    }

    /// `(votes for 1 - votes for 0) / n_trees`
    pub fn vote_margin(&self, votes: [usize; 2]) -> f64 {
        (votes[1] as f64 - votes[0] as f64) / self.trees.len().max(1) as f64
    }
}

/// Majority vote; ties go to class 0.
pub fn predict_forest(model: &ForestModel, x: &SparseVector) -> usize {
    let [zeros, ones] = model.votes(x);
    usize::from(ones > zeros)
}

pub fn train_forest(data: &Dataset, params: &ForestParams) -> Result<ForestModel> {
    if params.n_trees == 0 {
        return Err(Error::Config("forest needs at least one tree".into()));
    }
    data.require_both_classes()?;
    let columns = Columns::new(data);
    let trees = crate::worker_pool().install(|| {
        (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
                rng.set_stream(t as u64);
                TreeBuilder::new(data, &columns, params, rng).build()
            })
            .collect()
    });
    Ok(ForestModel {
        trees,
        n_features: data.n_features(),
        params: *params,
    })
}

/// Column-major copy of the rows: per feature, `(row, value)` of nonzeros.
struct Columns {
    cols: Vec<Vec<(u32, f64)>>,
}

impl Columns {
    fn new(data: &Dataset) -> Self {
        let mut cols = vec![Vec::new(); data.n_features()];
        for (row, x) in data.x().iter().enumerate() {
            for (f, v) in x.iter() {
                cols[f].push((row as u32, v));
            }
        }
        Columns { cols }
    }
}

type Counts = [f64; 2];

fn entropy(c: Counts) -> f64 {
    let total = c[0] + c[1];
    if total <= 0.0 {
        return 0.0;
    }
    c.iter()
        .filter(|&&n| n > 0.0)
        .map(|&n| {
            let p = n / total;
            -p * p.log2()
        })
        .sum()
}

struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

const NO_SLOT: u32 = u32::MAX;

struct TreeBuilder<'a> {
    data: &'a Dataset,
    columns: &'a Columns,
    params: &'a ForestParams,
    rng: ChaCha8Rng,
    /// Bootstrap multiplicity of each row.
    weight: Vec<f64>,
    /// Marks rows of the node under evaluation.
    stamp: Vec<u32>,
    /// Candidate slot of each feature during row-wise gathering.
    slot: Vec<u32>,
    perm: Vec<usize>,
    batch: usize,
}

impl<'a> TreeBuilder<'a> {
    fn new(
        data: &'a Dataset,
        columns: &'a Columns,
        params: &'a ForestParams,
        rng: ChaCha8Rng,
    ) -> Self {
        let k = data.n_features();
        TreeBuilder {
            data,
            columns,
            params,
            rng,
            weight: vec![0.0; data.len()],
            stamp: vec![0; data.len()],
            slot: vec![NO_SLOT; k],
            perm: (0..k).collect(),
            batch: params.features_for(k),
        }
    }

    fn build(mut self) -> Tree {
        let n = self.data.len();
        if self.params.bootstrap {
            for _ in 0..n {
                let i = self.rng.gen_range(0..n);
                self.weight[i] += 1.0;
            }
        } else {
            self.weight.fill(1.0);
        }
        let root: Vec<u32> = (0..n as u32)
            .filter(|&i| self.weight[i as usize] > 0.0)
            .collect();

        let mut nodes = vec![Node::Leaf { class: 0 }];
        let mut stack = vec![(0usize, root, 0usize)];
        let mut token = 0u32;
        while let Some((at, rows, depth)) = stack.pop() {
            let counts = self.counts(&rows);
            let majority = usize::from(counts[1] > counts[0]);
            let stop = counts[0] == 0.0
                || counts[1] == 0.0
                || self.params.max_depth.is_some_and(|d| depth >= d)
                || counts[0] + counts[1] < self.params.min_split as f64;
            let best = if stop {
                None
            } else {
                token += 1;
                self.best_split(&rows, counts, token)
            };
            match best {
                None => nodes[at] = Node::Leaf { class: majority },
                Some(Candidate {
                    feature, threshold, ..
                }) => {
                    let (left_rows, right_rows): (Vec<u32>, Vec<u32>) = rows
                        .iter()
                        .partition(|&&r| self.data.x()[r as usize].get(feature) <= threshold);
                    let left = nodes.len();
                    let right = left + 1;
                    nodes.push(Node::Leaf { class: 0 });
                    nodes.push(Node::Leaf { class: 0 });
                    nodes[at] = Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    };
                    stack.push((right, right_rows, depth + 1));
                    stack.push((left, left_rows, depth + 1));
                }
            }
        }
        Tree { nodes }
    }

    fn counts(&self, rows: &[u32]) -> Counts {
        let mut c = [0.0; 2];
        for &r in rows {
            c[self.data.y()[r as usize]] += self.weight[r as usize];
        }
        c
    }

    /// Evaluates sampled features batch by batch; a further batch is drawn
    /// only when no sampled feature varies within the node.
    fn best_split(&mut self, rows: &[u32], counts: Counts, token: u32) -> Option<Candidate> {
        for &r in rows {
            self.stamp[r as usize] = token;
        }
        let k = self.perm.len();
        let mut drawn = 0;
        let mut best: Option<Candidate> = None;
        while best.is_none() && drawn < k {
            let end = (drawn + self.batch).min(k);
            for i in drawn..end {
                let j = self.rng.gen_range(i..k);
                self.perm.swap(i, j);
            }
            let features = self.perm[drawn..end].to_vec();
            drawn = end;
            let values = self.gather(rows, &features, token);
            for (feature, nonzero) in features.into_iter().zip(values) {
                if let Some((gain, threshold)) = best_threshold(nonzero, counts) {
                    if best.as_ref().is_none_or(|b| gain > b.gain) {
                        best = Some(Candidate {
                            gain,
                            feature,
                            threshold,
                        });
                    }
                }
            }
        }
        best
    }

    /// Nonzero `(value, class, weight)` triples of each feature within the node,
    /// scanning whichever of the node rows or the feature columns is smaller.
    fn gather(
        &mut self,
        rows: &[u32],
        features: &[usize],
        token: u32,
    ) -> Vec<Vec<(f64, usize, f64)>> {
        let x = self.data.x();
        let y = self.data.y();
        let mut out = vec![Vec::new(); features.len()];
        let row_cost: usize = rows.iter().map(|&r| x[r as usize].len()).sum();
        let col_cost: usize = features.iter().map(|&f| self.columns.cols[f].len()).sum();
        if col_cost <= row_cost {
            for (slot, &f) in features.iter().enumerate() {
                for &(r, v) in &self.columns.cols[f] {
                    let r = r as usize;
                    if self.stamp[r] == token {
                        out[slot].push((v, y[r], self.weight[r]));
                    }
                }
            }
        } else {
            for (slot, &f) in features.iter().enumerate() {
                self.slot[f] = slot as u32;
            }
            for &r in rows {
                let r = r as usize;
                for (f, v) in x[r].iter() {
                    let slot = self.slot[f];
                    if slot != NO_SLOT {
                        out[slot as usize].push((v, y[r], self.weight[r]));
                    }
                }
            }
            for &f in features {
                self.slot[f] = NO_SLOT;
            }
        }
        out
    }
}

/// Best `(gain, threshold)` for one feature, or `None` when the feature is
/// constant in the node. Implicit zeros form one aggregated value.
fn best_threshold(mut nonzero: Vec<(f64, usize, f64)>, counts: Counts) -> Option<(f64, f64)> {
    let mut zero = counts;
    for &(_, c, w) in &nonzero {
        zero[c] -= w;
    }
    let zero_mass = zero[0] + zero[1];
    // Guard against rounding residue from the subtraction above.
    if zero_mass > 0.5 {
        nonzero.push((0.0, 0, zero[0]));
        nonzero.push((0.0, 1, zero[1]));
    }
    nonzero.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut groups: Vec<(f64, Counts)> = Vec::new();
    for (v, c, w) in nonzero {
        match groups.last_mut() {
            Some((last, acc)) if *last == v => acc[c] += w,
            _ => {
                let mut acc = [0.0; 2];
                acc[c] += w;
                groups.push((v, acc));
            }
        }
    }
    if groups.len() < 2 {
        return None;
    }

    let total = counts[0] + counts[1];
    let parent = entropy(counts);
    let mut left = [0.0; 2];
    let mut best: Option<(f64, f64)> = None;
    for pair in groups.windows(2) {
        let (lo, acc) = pair[0];
        let hi = pair[1].0;
        left[0] += acc[0];
        left[1] += acc[1];
        let right = [counts[0] - left[0], counts[1] - left[1]];
        let nl = left[0] + left[1];
        let gain = parent - (nl / total) * entropy(left) - ((total - nl) / total) * entropy(right);
        let mut threshold = lo + (hi - lo) / 2.0;
        if threshold >= hi {
            threshold = lo;
        }
        if best.is_none_or(|(g, _)| gain > g) {
            best = Some((gain, threshold));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(entries: &[(usize, f64)]) -> SparseVector {
        SparseVector::new(entries.to_vec()).unwrap()
    }

    fn separable() -> Dataset {
        let x = vec![
            sv(&[(0, 1.0), (1, 0.3)]),
            sv(&[(0, 2.0)]),
            sv(&[(1, 0.5)]),
            sv(&[(1, 0.1)]),
            sv(&[(0, 0.5), (2, 1.0)]),
            sv(&[(2, 1.0)]),
        ];
        Dataset::new(x, vec![1, 1, 0, 0, 1, 0], 3).unwrap()
    }

    #[test]
    fn single_tree_depth_one_separates() {
        let params = ForestParams {
            n_trees: 1,
            max_depth: Some(1),
            features_per_split: Some(3),
            bootstrap: false,
            ..ForestParams::default()
        };
        let data = separable();
        let model = train_forest(&data, &params).unwrap();
        assert_eq!(model.trees[0].depth(), 1);
        for (x, &y) in data.x().iter().zip(data.y()) {
            assert_eq!(predict_forest(&model, x), y);
        }
    }

    #[test]
    fn depth_zero_is_majority_leaf() {
        let data = Dataset::new(
            vec![sv(&[(0, 1.0)]), sv(&[(0, 2.0)]), sv(&[(0, 3.0)])],
            vec![0, 1, 1],
            1,
        )
        .unwrap();
        let params = ForestParams {
            n_trees: 1,
            max_depth: Some(0),
            bootstrap: false,
            ..ForestParams::default()
        };
        let model = train_forest(&data, &params).unwrap();
        assert_eq!(model.trees[0].nodes, vec![Node::Leaf { class: 1 }]);
        assert_eq!(predict_forest(&model, &sv(&[(0, -9.0)])), 1);
    }

    #[test]
    fn single_class_rejected() {
        let data = Dataset::new(vec![sv(&[(0, 1.0)]); 3], vec![0, 0, 0], 1).unwrap();
        assert!(matches!(
            train_forest(&data, &ForestParams::default()),
            Err(Error::Training(_))
        ));
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let data = separable();
        let params = ForestParams {
            n_trees: 7,
            ..ForestParams::default()
        };
        let a = train_forest(&data, &params).unwrap();
        let b = train_forest(&data, &params).unwrap();
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let c = pool.install(|| train_forest(&data, &params).unwrap());
        assert_eq!(a, c);
    }

    #[test]
    fn vote_ties() {
        let leaf = |class| Tree {
            nodes: vec![Node::Leaf { class }],
        };
        let model = |trees| ForestModel {
            trees,
            n_features: 1,
            params: ForestParams::default(),
        };
        let x = SparseVector::default();
        assert_eq!(
            predict_forest(&model(vec![leaf(0), leaf(0), leaf(1)]), &x),
            0
        );
        assert_eq!(predict_forest(&model(vec![leaf(0), leaf(1)]), &x), 0);
        assert_eq!(predict_forest(&model(vec![leaf(1)]), &x), 1);
    }

    #[test]
    fn xor_is_fit_with_unbounded_depth() {
        let x = vec![
            sv(&[]),
            sv(&[(0, 1.0)]),
            sv(&[(1, 1.0)]),
            sv(&[(0, 1.0), (1, 1.0)]),
        ];
        let data = Dataset::new(x, vec![0, 1, 1, 0], 2).unwrap();
        let params = ForestParams {
            n_trees: 1,
            max_depth: None,
            bootstrap: false,
            features_per_split: Some(1),
            ..ForestParams::default()
        };
        let model = train_forest(&data, &params).unwrap();
        for (x, &y) in data.x().iter().zip(data.y()) {
            assert_eq!(predict_forest(&model, x), y);
        }
    }

    #[test]
    fn threshold_is_midpoint() {
        let rows = vec![(1.0, 0, 1.0), (3.0, 1, 1.0)];
        let (gain, threshold) = best_threshold(rows, [1.0, 1.0]).unwrap();
        assert_eq!(threshold, 2.0);
        assert!((gain - 1.0).abs() < 1e-12);
        assert!(best_threshold(vec![(1.0, 0, 1.0), (1.0, 1, 1.0)], [1.0, 1.0]).is_none());
    }
}
