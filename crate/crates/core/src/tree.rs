//! CART classification trees and bagged/randomized forests built from them.
//!
//! Trees split on `x[feature] <= threshold`. Sample index lists may repeat
//! rows (bootstrap draws), which acts as an integer sample weight.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::rng::stream_rng;

const IMPURITY_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Gini,
    Entropy,
}

impl Criterion {
    fn impurity(self, counts: &[usize], n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let n = n as f64;
        match self {
            Criterion::Gini => 1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>(),
            Criterion::Entropy => -counts
                .iter()
                .filter(|&&c| c > 0)
                .map(|&c| {
                    let p = c as f64 / n;
                    p * p.log2()
                })
                .sum::<f64>(),
        }
    }
}

/// `Best` scans every midpoint between distinct sorted values; `Random`
/// draws one threshold uniformly between the node's min and max.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Splitter {
    Best,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub criterion: Criterion,
    pub splitter: Splitter,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// Features examined per node; non-constant features count toward it.
    pub max_features: usize,
}

/// `ceil(sqrt(d))`, at least 1.
pub fn sqrt_features(d: usize) -> usize {
    ((d as f64).sqrt().ceil() as usize).max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        distribution: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationTree {
    nodes: Vec<Node>,
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    child_impurity: f64,
}

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [usize],
    n_classes: usize,
    params: &'a TreeParams,
    importance: Vec<f64>,
    nodes: Vec<Node>,
}

impl ClassificationTree {
    /// Grows a tree over `samples` and returns it with the raw (unnormalized)
    /// weighted impurity decrease per feature.
    pub fn fit(
        x: &Matrix,
        y: &[usize],
        n_classes: usize,
        samples: &[usize],
        params: &TreeParams,
        rng: &mut ChaCha8Rng,
    ) -> (Self, Vec<f64>) {
        let mut b = Builder {
            x,
            y,
            n_classes,
            params,
            importance: vec![0.0; x.cols()],
            nodes: Vec::new(),
        };
        b.grow(samples.to_vec(), 0, rng);
        (Self { nodes: b.nodes }, b.importance)
    }

    pub fn predict_distribution(&self, row: &[f64]) -> &[f64] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { distribution } => return distribution,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn root_feature(&self) -> Option<usize> {
        match self.nodes.first() {
            Some(Node::Split { feature, .. }) => Some(*feature),
            _ => None,
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }
}

impl Builder<'_> {
    fn counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.n_classes];
        for &i in idx {
            c[self.y[i]] += 1;
        }
        c
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let n = idx.len();
        let counts = self.counts(&idx);
        let impurity = self.params.criterion.impurity(&counts, n);
        let id = self.nodes.len();
        let leaf = Node::Leaf {
            distribution: counts.iter().map(|&c| c as f64 / n.max(1) as f64).collect(),
        };
        self.nodes.push(leaf);

        let p = self.params;
        let stop = p.max_depth.is_some_and(|m| depth >= m)
            || n < p.min_samples_split
            || n < 2 * p.min_samples_leaf
            || impurity <= IMPURITY_EPS;
        if stop {
            return id;
        }
        let Some(choice) = self.find_split(&idx, rng) else {
            return id;
        };
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.x.get(i, choice.feature) <= choice.threshold);
        self.importance[choice.feature] += n as f64 * impurity - choice.child_impurity;

        let left = self.grow(left_idx, depth + 1, rng);
        let right = self.grow(right_idx, depth + 1, rng);
        self.nodes[id] = Node::Split {
            feature: choice.feature,
            threshold: choice.threshold,
            left,
            right,
        };
        id
    }

    fn find_split(&self, idx: &[usize], rng: &mut ChaCha8Rng) -> Option<SplitChoice> {
        let d = self.x.cols();
        let mut features: Vec<usize> = (0..d).collect();
        features.shuffle(rng);
        let mut visited = 0;
        let mut best: Option<SplitChoice> = None;
        for f in features {
            if visited >= self.params.max_features {
                break;
            }
            let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                let v = self.x.get(i, f);
                (lo.min(v), hi.max(v))
            });
            if lo >= hi {
                continue;
            }
            visited += 1;
            let cand = match self.params.splitter {
                Splitter::Best => self.best_threshold(idx, f),
                Splitter::Random => {
                    let t = rng.gen_range(lo..hi);
                    self.evaluate_threshold(idx, f, t)
                }
            };
            if let Some(c) = cand {
                if best.as_ref().is_none_or(|b| c.child_impurity < b.child_impurity) {
                    best = Some(c);
                }
            }
        }
        best
    }

    /// Weighted child impurity `n_l * I(l) + n_r * I(r)` for one threshold.
    fn evaluate_threshold(&self, idx: &[usize], f: usize, t: f64) -> Option<SplitChoice> {
        let mut left = vec![0; self.n_classes];
        let mut right = vec![0; self.n_classes];
        for &i in idx {
            if self.x.get(i, f) <= t {
                left[self.y[i]] += 1;
            } else {
                right[self.y[i]] += 1;
            }
        }
        let nl: usize = left.iter().sum();
        let nr = idx.len() - nl;
        if nl < self.params.min_samples_leaf || nr < self.params.min_samples_leaf || nl == 0 || nr == 0 {
            return None;
        }
        let crit = self.params.criterion;
        Some(SplitChoice {
            feature: f,
            threshold: t,
            child_impurity: nl as f64 * crit.impurity(&left, nl) + nr as f64 * crit.impurity(&right, nr),
        })
    }

    fn best_threshold(&self, idx: &[usize], f: usize) -> Option<SplitChoice> {
        let mut vals: Vec<(f64, usize)> = idx.iter().map(|&i| (self.x.get(i, f), self.y[i])).collect();
        vals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = vals.len();
        let min_leaf = self.params.min_samples_leaf.max(1);
        let crit = self.params.criterion;
        let mut left = vec![0; self.n_classes];
        let mut right = vec![0; self.n_classes];
        for &(_, c) in &vals {
            right[c] += 1;
        }
        let mut best: Option<(f64, usize)> = None;
        for pos in 0..n - 1 {
            let c = vals[pos].1;
            left[c] += 1;
            right[c] -= 1;
            let nl = pos + 1;
            if vals[pos].0 == vals[pos + 1].0 || nl < min_leaf || n - nl < min_leaf {
                continue;
            }
            let score = nl as f64 * crit.impurity(&left, nl) + (n - nl) as f64 * crit.impurity(&right, n - nl);
            if best.is_none_or(|(s, _)| score < s) {
                best = Some((score, pos));
            }
        }
        best.map(|(score, pos)| {
            let (a, b) = (vals[pos].0, vals[pos + 1].0);
            let mid = a + (b - a) / 2.0;
            SplitChoice {
                feature: f,
                threshold: if mid < b { mid } else { a },
                child_impurity: score,
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub tree: TreeParams,
    pub bootstrap: bool,
}

/// Ensemble of classification trees. Tree `t` draws all of its randomness
/// from stream `t` of the forest seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<ClassificationTree>,
    pub n_classes: usize,
    pub seed: u64,
    pub n_train: usize,
    pub bootstrap: bool,
}

fn draw_samples(rng: &mut ChaCha8Rng, n: usize, bootstrap: bool) -> Vec<usize> {
    if bootstrap {
        (0..n).map(|_| rng.gen_range(0..n)).collect()
    } else {
        (0..n).collect()
    }
}

impl Forest {
    /// Fits the forest and returns it with the normalized mean-decrease-in-
    /// impurity importance (per-tree normalized, averaged in tree order, then
    /// renormalized; all zeros when no tree split).
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, params: &ForestParams, seed: u64) -> (Self, Vec<f64>) {
        let n = x.rows();
        let fitted: Vec<(ClassificationTree, Vec<f64>)> = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = stream_rng(seed, t as u64);
                let samples = draw_samples(&mut rng, n, params.bootstrap);
                ClassificationTree::fit(x, y, n_classes, &samples, &params.tree, &mut rng)
            })
            .collect();
        let mut importance = vec![0.0; x.cols()];
        let mut trees = Vec::with_capacity(fitted.len());
        for (tree, imp) in fitted {
            let total: f64 = imp.iter().sum();
            if total > 0.0 {
                for (acc, v) in importance.iter_mut().zip(&imp) {
                    *acc += v / total;
                }
            }
            trees.push(tree);
        }
        let total: f64 = importance.iter().sum();
        if total > 0.0 {
            importance.iter_mut().for_each(|v| *v /= total);
        }
        (
            Self {
                trees,
                n_classes,
                seed,
                n_train: n,
                bootstrap: params.bootstrap,
            },
            importance,
        )
    }

    /// Mean of the per-tree leaf class frequencies.
    pub fn predict_distribution(&self, row: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_classes];
        for t in &self.trees {
            for (o, p) in out.iter_mut().zip(t.predict_distribution(row)) {
                *o += p;
            }
        }
        let m = self.trees.len().max(1) as f64;
        out.iter_mut().for_each(|v| *v /= m);
        out
    }

    /// Training rows never drawn by tree `t`'s bootstrap sample.
    pub fn out_of_bag_rows(&self, t: usize) -> Vec<usize> {
        if !self.bootstrap {
            return Vec::new();
        }
        let mut rng = stream_rng(self.seed, t as u64);
        let mut in_bag = vec![false; self.n_train];
        for i in draw_samples(&mut rng, self.n_train, true) {
            in_bag[i] = true;
        }
        (0..self.n_train).filter(|&i| !in_bag[i]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn params(criterion: Criterion, splitter: Splitter) -> TreeParams {
        TreeParams {
            criterion,
            splitter,
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: 2,
        }
    }

    #[test]
    fn impurity_values() {
        assert!((Criterion::Gini.impurity(&[2, 2], 4) - 0.5).abs() < 1e-15);
        assert!((Criterion::Entropy.impurity(&[2, 2], 4) - 1.0).abs() < 1e-15);
        assert_eq!(Criterion::Gini.impurity(&[4, 0], 4), 0.0);
    }

    #[test]
    fn xor_tree_fits_exactly() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]).unwrap();
        let y = [0, 1, 1, 0];
        for splitter in [Splitter::Best, Splitter::Random] {
            let (tree, _) = ClassificationTree::fit(
                &x,
                &y,
                2,
                &[0, 1, 2, 3],
                &params(Criterion::Gini, splitter),
                &mut rng_from_seed(3),
            );
            for i in 0..4 {
                let d = tree.predict_distribution(x.row(i));
                assert_eq!(d[y[i]], 1.0);
            }
        }
    }

    #[test]
    fn max_depth_zero_is_a_prior_leaf() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0], [4.0]]).unwrap();
        let y = [0, 0, 0, 1, 1];
        let mut p = params(Criterion::Entropy, Splitter::Best);
        p.max_depth = Some(0);
        let (tree, imp) = ClassificationTree::fit(&x, &y, 2, &[0, 1, 2, 3, 4], &p, &mut rng_from_seed(0));
        assert_eq!(tree.predict_distribution(&[9.0]), &[0.6, 0.4]);
        assert_eq!(imp, vec![0.0]);
    }

    #[test]
    fn min_samples_leaf_is_respected() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0], [4.0], [5.0]]).unwrap();
        let y = [1, 0, 0, 0, 0, 0];
        let mut p = params(Criterion::Gini, Splitter::Best);
        p.min_samples_leaf = 3;
        let (tree, _) = ClassificationTree::fit(&x, &y, 2, &[0, 1, 2, 3, 4, 5], &p, &mut rng_from_seed(0));
        match &tree.nodes()[0] {
            Node::Split { threshold, .. } => assert_eq!(*threshold, 2.5),
            n => panic!("expected split, got {n:?}"),
        }
    }

    #[test]
    fn out_of_bag_rows_replay() {
        let x = Matrix::from_rows(&(0..20).map(|i| [i as f64]).collect::<Vec<_>>()).unwrap();
        let y: Vec<usize> = (0..20).map(|i| usize::from(i >= 10)).collect();
        let fp = ForestParams {
            n_trees: 5,
            tree: params(Criterion::Gini, Splitter::Best),
            bootstrap: true,
        };
        let (a, _) = Forest::fit(&x, &y, 2, &fp, 17);
        let (b, _) = Forest::fit(&x, &y, 2, &fp, 17);
        assert_eq!(a, b);
        for t in 0..5 {
            assert_eq!(a.out_of_bag_rows(t), b.out_of_bag_rows(t));
        }
        assert_ne!(a.out_of_bag_rows(0), a.out_of_bag_rows(1));
    }
}
