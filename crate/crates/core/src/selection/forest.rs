//! Random-forest classifier over 2D inputs with stratified k-fold
//! cross-validation. Trees are fully grown CART with Gini splits; instead
//! of re-sorting at every node, each node propagates pre-sorted
//! value/label arrays through stable partitions, which keeps construction
//! linear per level and the hot scans sequential.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::seeding::derive_seed;

const N_FEATURES: usize = 2;

enum Node {
    Leaf(u8),
    Split {
        feature: u8,
        threshold: f64,
        left: u32,
        right: u32,
    },
}

struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, point: &[f64; 2]) -> u8 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf(class) => return *class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if point[*feature as usize] < *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }
}

enum Slot {
    Root,
    Left(u32),
    Right(u32),
}

struct Segment {
    lo: usize,
    hi: usize,
    c0: usize,
    c1: usize,
    slot: Slot,
}

/// Per-feature bootstrap segment data: sample indices sorted by value, the
/// values themselves, and the labels, all kept aligned so node scans touch
/// memory sequentially.
struct TreeBuilder {
    /// recip[k] = 1/k for k up to the bootstrap size, shared across nodes
    recip: Vec<f64>,
    order: [Vec<u32>; N_FEATURES],
    vals: [Vec<f64>; N_FEATURES],
    labels: [Vec<u8>; N_FEATURES],
    scratch_idx: Vec<u32>,
    scratch_val: Vec<f64>,
    scratch_lab: Vec<u8>,
    /// per sample index: did it go left at the current split
    side: Vec<bool>,
    nodes: Vec<Node>,
    rng: ChaCha8Rng,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl TreeBuilder {
    /// Best Gini split of the segment on one feature; candidates sit
    /// between consecutive distinct values of the pre-sorted order.
    fn best_split_on(&self, feature: usize, seg: &Segment) -> Option<BestSplit> {
        let vals = &self.vals[feature][seg.lo..seg.hi];
        let labels = &self.labels[feature][seg.lo..seg.hi];
        let n = vals.len();
        let (c0, c1) = (seg.c0 as f64, seg.c1 as f64);
        let total = n as f64;
        let (mut l0, mut l1) = (0.0f64, 0.0f64);
        let mut best: Option<BestSplit> = None;
        for i in 0..n - 1 {
            if labels[i] == 1 {
                l1 += 1.0;
            } else {
                l0 += 1.0;
            }
            let v = vals[i];
            let v_next = vals[i + 1];
            if v_next <= v {
                continue;
            }
            let nl = l0 + l1;
            let nr = total - nl;
            let r0 = c0 - l0;
            let r1 = c1 - l1;
            let score = (nl - (l0 * l0 + l1 * l1) * self.recip[nl as usize])
                + (nr - (r0 * r0 + r1 * r1) * self.recip[nr as usize]);
            if best.as_ref().is_none_or(|b| score < b.score) {
                best = Some(BestSplit {
                    feature,
                    threshold: (v + v_next) / 2.0,
                    score,
                });
            }
        }
        best
    }

    fn leaf(&mut self, c0: usize, c1: usize) -> u32 {
        self.nodes.push(Node::Leaf(u8::from(c1 > c0)));
        (self.nodes.len() - 1) as u32
    }

    fn patch(&mut self, slot: Slot, child: u32) {
        match slot {
            Slot::Root => {}
            Slot::Left(parent) => {
                if let Node::Split { left, .. } = &mut self.nodes[parent as usize] {
                    *left = child;
                }
            }
            Slot::Right(parent) => {
                if let Node::Split { right, .. } = &mut self.nodes[parent as usize] {
                    *right = child;
                }
            }
        }
    }

    fn build(&mut self, total: usize, c0: usize, c1: usize) {
        let mut stack: Vec<Segment> = vec![Segment {
            lo: 0,
            hi: total,
            c0,
            c1,
            slot: Slot::Root,
        }];
        while let Some(seg) = stack.pop() {
            if seg.c0 == 0 || seg.c1 == 0 || seg.hi - seg.lo < 2 {
                let node = self.leaf(seg.c0, seg.c1);
                self.patch(seg.slot, node);
                continue;
            }
            // mtry = floor(sqrt(2)) = 1 random feature, fall back to the other
            let first = self.rng.gen_range(0..N_FEATURES);
            let best = self
                .best_split_on(first, &seg)
                .or_else(|| self.best_split_on(1 - first, &seg));
            let Some(split) = best else {
                let node = self.leaf(seg.c0, seg.c1);
                self.patch(seg.slot, node);
                continue;
            };

            // mark sides on the split feature, counting the left child; the
            // split feature's own arrays are already partitioned by order
            let (mut n_left, mut l0, mut l1) = (0usize, 0usize, 0usize);
            {
                let sf = split.feature;
                let idx = &self.order[sf][seg.lo..seg.hi];
                let vals = &self.vals[sf][seg.lo..seg.hi];
                let labels = &self.labels[sf][seg.lo..seg.hi];
                for ((&i, &v), &lab) in idx.iter().zip(vals).zip(labels) {
                    let goes_left = v < split.threshold;
                    self.side[i as usize] = goes_left;
                    if goes_left {
                        n_left += 1;
                        if lab == 1 {
                            l1 += 1;
                        } else {
                            l0 += 1;
                        }
                    }
                }
            }
            // stable partition of the other feature's segment
            {
                let f = 1 - split.feature;
                self.scratch_idx.clear();
                self.scratch_val.clear();
                self.scratch_lab.clear();
                let mut write = seg.lo;
                for read in seg.lo..seg.hi {
                    let i = self.order[f][read];
                    let v = self.vals[f][read];
                    let lab = self.labels[f][read];
                    if self.side[i as usize] {
                        self.order[f][write] = i;
                        self.vals[f][write] = v;
                        self.labels[f][write] = lab;
                        write += 1;
                    } else {
                        self.scratch_idx.push(i);
                        self.scratch_val.push(v);
                        self.scratch_lab.push(lab);
                    }
                }
                self.order[f][seg.lo + n_left..seg.hi].copy_from_slice(&self.scratch_idx);
                self.vals[f][seg.lo + n_left..seg.hi].copy_from_slice(&self.scratch_val);
                self.labels[f][seg.lo + n_left..seg.hi].copy_from_slice(&self.scratch_lab);
            }

            let node_at = self.nodes.len() as u32;
            self.nodes.push(Node::Split {
                feature: split.feature as u8,
                threshold: split.threshold,
                left: 0,
                right: 0,
            });
            self.patch(seg.slot, node_at);
            stack.push(Segment {
                lo: seg.lo + n_left,
                hi: seg.hi,
                c0: seg.c0 - l0,
                c1: seg.c1 - l1,
                slot: Slot::Right(node_at),
            });
            stack.push(Segment {
                lo: seg.lo,
                hi: seg.lo + n_left,
                c0: l0,
                c1: l1,
                slot: Slot::Left(node_at),
            });
        }
    }
}

/// Pre-sorted training data shared by every tree of one fold.
struct FoldData {
    sorted_idx: [Vec<u32>; N_FEATURES],
    sorted_val: [Vec<f64>; N_FEATURES],
    sorted_lab: [Vec<u8>; N_FEATURES],
}

/// Grow one tree on a bootstrap sample of the training indices.
fn build_tree(points: &[[f64; 2]], labels: &[u8], fold: &FoldData, seed: u64) -> Tree {
    let n = fold.sorted_idx[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw_count = vec![0u32; points.len()];
    let (mut c0, mut c1) = (0usize, 0usize);
    for _ in 0..n {
        let pick = fold.sorted_idx[0][rng.gen_range(0..n)] as usize;
        draw_count[pick] += 1;
        if labels[pick] == 1 {
            c1 += 1;
        } else {
            c0 += 1;
        }
    }
    // expand the shared sorted order into the bootstrap multiset, per feature
    let mut order: [Vec<u32>; N_FEATURES] = [Vec::with_capacity(n), Vec::with_capacity(n)];
    let mut vals: [Vec<f64>; N_FEATURES] = [Vec::with_capacity(n), Vec::with_capacity(n)];
    let mut labs: [Vec<u8>; N_FEATURES] = [Vec::with_capacity(n), Vec::with_capacity(n)];
    for f in 0..N_FEATURES {
        for ((&idx, &val), &lab) in fold.sorted_idx[f]
            .iter()
            .zip(&fold.sorted_val[f])
            .zip(&fold.sorted_lab[f])
        {
            for _ in 0..draw_count[idx as usize] {
                order[f].push(idx);
                vals[f].push(val);
                labs[f].push(lab);
            }
        }
    }
    let mut recip = vec![0.0f64; n + 1];
    for (k, r) in recip.iter_mut().enumerate().skip(1) {
        *r = 1.0 / k as f64;
    }
    let mut builder = TreeBuilder {
        recip,
        order,
        vals,
        labels: labs,
        scratch_idx: Vec::with_capacity(n),
        scratch_val: Vec::with_capacity(n),
        scratch_lab: Vec::with_capacity(n),
        side: vec![false; points.len()],
        nodes: Vec::new(),
        rng,
    };
    builder.build(n, c0, c1);
    Tree {
        nodes: builder.nodes,
    }
}

/// Majority vote with early exit once the outcome is decided.
fn forest_predict(trees: &[Tree], point: &[f64; 2]) -> u8 {
    let majority = trees.len() / 2;
    let mut ones = 0usize;
    for (done, tree) in trees.iter().enumerate() {
        ones += tree.predict(point) as usize;
        if 2 * ones > trees.len() {
            return 1;
        }
        let remaining = trees.len() - done - 1;
        if ones + remaining <= majority {
            return 0;
        }
    }
    u8::from(2 * ones > trees.len())
}

/// Stratified fold assignment: shuffle each class separately and deal
/// round-robin, so every fold mirrors the class balance.
fn stratified_folds(labels: &[u8], folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0usize; labels.len()];
    for class in [0u8, 1u8] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        for (pos, idx) in members.into_iter().enumerate() {
            fold_of[idx] = pos % folds;
        }
    }
    fold_of
}

/// Mean misclassification rate of a `trees`-tree forest under stratified
/// k-fold cross-validation.
pub(crate) fn cv_error(
    points: &[[f64; 2]],
    labels: &[u8],
    folds: usize,
    trees: usize,
    seed: u64,
) -> f64 {
    debug_assert!(folds >= 2);
    let fold_of = stratified_folds(labels, folds, derive_seed(seed, 0));
    let fold_errors: Vec<f64> = (0..folds)
        .map(|fold| {
            let train: Vec<u32> = (0..points.len() as u32)
                .filter(|&i| fold_of[i as usize] != fold)
                .collect();
            let test: Vec<u32> = (0..points.len() as u32)
                .filter(|&i| fold_of[i as usize] == fold)
                .collect();
            if test.is_empty() || train.is_empty() {
                return 0.0;
            }
            let mut fold_data = FoldData {
                sorted_idx: [Vec::new(), Vec::new()],
                sorted_val: [Vec::new(), Vec::new()],
                sorted_lab: [Vec::new(), Vec::new()],
            };
            for f in 0..N_FEATURES {
                let mut order = train.clone();
                order.sort_by(|&a, &b| {
                    points[a as usize][f]
                        .partial_cmp(&points[b as usize][f])
                        .unwrap()
                        .then(a.cmp(&b))
                });
                fold_data.sorted_val[f] = order.iter().map(|&i| points[i as usize][f]).collect();
                fold_data.sorted_lab[f] = order.iter().map(|&i| labels[i as usize]).collect();
                fold_data.sorted_idx[f] = order;
            }
            let forest: Vec<Tree> = (0..trees)
                .into_par_iter()
                .map(|t| {
                    build_tree(
                        points,
                        labels,
                        &fold_data,
                        derive_seed(seed, (fold * trees + t) as u64 + 1),
                    )
                })
                .collect();
            let miss = test
                .iter()
                .filter(|&&i| forest_predict(&forest, &points[i as usize]) != labels[i as usize])
                .count();
            miss as f64 / test.len() as f64
        })
        .collect();
    fold_errors.iter().sum::<f64>() / folds as f64
}
