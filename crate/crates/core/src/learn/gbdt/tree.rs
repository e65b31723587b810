//! Regression trees grown leaf-wise on binned data.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::binning::BinnedMatrix;

/// Internal node: rows with `x[feature] ≤ threshold` go left. Child
/// references `>= 0` are node indices, negative values `c` denote leaf `!c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitNode {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
    pub left: i32,
    pub right: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<SplitNode>,
    pub leaves: Vec<f64>,
}

impl Tree {
    pub fn n_leaves(&self) -> usize {
        self.leaves.len()
    }

    pub fn leaf_index(&self, x: &[f64]) -> usize {
        if self.nodes.is_empty() {
            return 0;
        }
        let mut cur: i32 = 0;
        loop {
            let n = &self.nodes[cur as usize];
            let next = if x[n.feature] <= n.threshold { n.left } else { n.right };
            if next < 0 {
                return !next as usize;
            }
            cur = next;
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.leaves[self.leaf_index(x)]
    }
}

/// Settings for growing one tree.
#[derive(Debug, Clone, Copy)]
pub struct GrowParams {
    pub num_leaves: usize,
    pub min_data_in_leaf: usize,
    pub histogram_subtraction: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    /// Last bin on the left side.
    pub bin: usize,
    pub gain: f64,
}

/// Residual sums and counts per (feature, bin).
#[derive(Debug, Clone)]
struct Histogram {
    sum: Vec<f64>,
    count: Vec<u32>,
}

impl Histogram {
    fn build(data: &BinnedMatrix, rows: &[usize], residual: &[f64]) -> Histogram {
        let mut sum = vec![0.0; data.total_bins];
        let mut count = vec![0u32; data.total_bins];
        let d = data.n_features;
        for &r in rows {
            let g = residual[r];
            let row_bins = &data.bins[r * d..(r + 1) * d];
            for (j, &b) in row_bins.iter().enumerate() {
                let k = data.offsets[j] + b as usize;
                sum[k] += g;
                count[k] += 1;
            }
        }
        Histogram { sum, count }
    }

    fn minus(&self, other: &Histogram) -> Histogram {
        Histogram {
            sum: self.sum.iter().zip(&other.sum).map(|(a, b)| a - b).collect(),
            count: self.count.iter().zip(&other.count).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Variance-reduction gain of splitting a node with residual sum `s` over
/// `n` rows into (`sl`, `nl`) and the remainder.
pub fn split_gain(sl: f64, nl: usize, s: f64, n: usize) -> f64 {
    let (sr, nr) = (s - sl, n - nl);
    sl * sl / nl as f64 + sr * sr / nr as f64 - s * s / n as f64
}

fn best_split(data: &BinnedMatrix, h: &Histogram, s: f64, n: usize, min_leaf: usize) -> Option<SplitCandidate> {
    if n < 2 * min_leaf {
        return None;
    }
    let per_feature: Vec<Option<SplitCandidate>> = (0..data.n_features)
        .into_par_iter()
        .map(|j| {
            let off = data.offsets[j];
            let nb = data.mappers[j].n_bins();
            let mut best: Option<SplitCandidate> = None;
            let (mut sl, mut nl) = (0.0, 0usize);
            for b in 0..nb.saturating_sub(1) {
                sl += h.sum[off + b];
                nl += h.count[off + b] as usize;
                if nl < min_leaf {
                    continue;
                }
                if n - nl < min_leaf {
                    break;
                }
                let gain = split_gain(sl, nl, s, n);
                if gain > 0.0 && best.is_none_or(|c| gain > c.gain) {
                    best = Some(SplitCandidate { feature: j, bin: b, gain });
                }
            }
            best
        })
        .collect();
    // lowest feature wins ties because only a strictly larger gain replaces
    per_feature
        .into_iter()
        .flatten()
        .fold(None, |acc: Option<SplitCandidate>, c| match acc {
            Some(a) if c.gain <= a.gain => Some(a),
            _ => Some(c),
        })
}

struct Leaf {
    rows: Vec<usize>,
    sum: f64,
    hist: Histogram,
    split: Option<SplitCandidate>,
    /// Where this leaf hangs: (parent node, is_left), or None for the root.
    parent: Option<(usize, bool)>,
}

/// Grows one tree on `residual` (the negative gradient of squared loss).
/// Returns the tree and, for each leaf, the rows it holds; `None` when the
/// root cannot be split.
pub fn grow_tree(
    data: &BinnedMatrix,
    rows: &[usize],
    residual: &[f64],
    params: &GrowParams,
) -> Option<(Tree, Vec<Vec<usize>>)> {
    let min_leaf = params.min_data_in_leaf.max(1);
    let s: f64 = rows.iter().map(|&r| residual[r]).sum();
    let hist = Histogram::build(data, rows, residual);
    let split = best_split(data, &hist, s, rows.len(), min_leaf)?;
    let mut leaves = vec![Leaf {
        rows: rows.to_vec(),
        sum: s,
        hist,
        split: Some(split),
        parent: None,
    }];
    let mut nodes: Vec<SplitNode> = Vec::new();
    while leaves.len() < params.num_leaves.max(2) {
        // best leaf; earliest leaf wins ties
        let mut pick: Option<usize> = None;
        for (i, l) in leaves.iter().enumerate() {
            if let Some(c) = l.split {
                if pick.is_none_or(|p| c.gain > leaves[p].split.expect("candidate").gain) {
                    pick = Some(i);
                }
            }
        }
        let Some(li) = pick else { break };
        let leaf = &leaves[li];
        let c = leaf.split.expect("candidate");
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            leaf.rows.iter().partition(|&&r| data.bin(r, c.feature) <= c.bin);
        let sl: f64 = left_rows.iter().map(|&r| residual[r]).sum();
        let sr = leaf.sum - sl;
        let (small_rows, small_is_left) = if left_rows.len() <= right_rows.len() {
            (&left_rows, true)
        } else {
            (&right_rows, false)
        };
        let small = Histogram::build(data, small_rows, residual);
        let large = if params.histogram_subtraction {
            leaf.hist.minus(&small)
        } else {
            let other = if small_is_left { &right_rows } else { &left_rows };
            Histogram::build(data, other, residual)
        };
        let (hl, hr) = if small_is_left { (small, large) } else { (large, small) };

        let node_id = nodes.len();
        nodes.push(SplitNode {
            feature: c.feature,
            threshold: data.mappers[c.feature].upper_bounds[c.bin],
            gain: c.gain,
            left: 0,
            right: 0,
        });
        if let Some((p, is_left)) = leaf.parent {
            if is_left {
                nodes[p].left = node_id as i32;
            } else {
                nodes[p].right = node_id as i32;
            }
        }
        let left = Leaf {
            split: best_split(data, &hl, sl, left_rows.len(), min_leaf),
            rows: left_rows,
            sum: sl,
            hist: hl,
            parent: Some((node_id, true)),
        };
        let right = Leaf {
            split: best_split(data, &hr, sr, right_rows.len(), min_leaf),
            rows: right_rows,
            sum: sr,
            hist: hr,
            parent: Some((node_id, false)),
        };
        leaves[li] = left;
        leaves.push(right);
    }
    let mut values = Vec::with_capacity(leaves.len());
    let mut members = Vec::with_capacity(leaves.len());
    for (i, l) in leaves.into_iter().enumerate() {
        let (p, is_left) = l.parent.expect("root was split");
        let code = !(i as i32);
        if is_left {
            nodes[p].left = code;
        } else {
            nodes[p].right = code;
        }
        values.push(l.sum / l.rows.len() as f64);
        members.push(l.rows);
    }
    Some((Tree { nodes, leaves: values }, members))
}
