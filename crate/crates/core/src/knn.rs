//! Exact k-nearest-neighbor search.
//!
//! Neighbors are ranked by `(distance, training index)` in lexicographic
//! order, so among equidistant training points the lowest index comes first.
//! [`knn_query`] is the exhaustive reference; [`KdIndex`] is a k-d tree that
//! returns exactly the same answer, ties included.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sample::{NormSpec, Sample};

const LEAF_SIZE: usize = 8;

/// One entry of a neighbor list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

/// For every evaluation point, its `k` nearest training indices and distances.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborTable {
    k: usize,
    m: usize,
    indices: Vec<usize>,
    distances: Vec<f64>,
}

impl NeighborTable {
    /// Builds a table from raw index rows, with all distances set to zero.
    ///
    /// Each row must hold `k` distinct indices below `m`.
    pub fn from_indices(k: usize, m: usize, rows: &[Vec<usize>]) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("k must be positive"));
        }
        if rows.is_empty() {
            return Err(Error::invalid("neighbor table needs at least one row"));
        }
        let mut indices = Vec::with_capacity(rows.len() * k);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::SizeMismatch {
                    what: "neighbor row length vs k",
                    left: row.len(),
                    right: k,
                });
            }
            for (a, &j) in row.iter().enumerate() {
                if j >= m {
                    return Err(Error::invalid(format!(
                        "row {i}: training index {j} out of range for m = {m}"
                    )));
                }
                if row[..a].contains(&j) {
                    return Err(Error::invalid(format!("row {i}: repeated index {j}")));
                }
            }
            indices.extend_from_slice(row);
        }
        let distances = vec![0.0; indices.len()];
        Ok(NeighborTable {
            k,
            m,
            indices,
            distances,
        })
    }

    fn from_rows(k: usize, m: usize, rows: Vec<Vec<Neighbor>>) -> Self {
        let mut indices = Vec::with_capacity(rows.len() * k);
        let mut distances = Vec::with_capacity(rows.len() * k);
        for row in rows {
            for nb in row {
                indices.push(nb.index);
                distances.push(nb.distance);
            }
        }
        NeighborTable {
            k,
            m,
            indices,
            distances,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Size of the training sample the indices refer to.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of evaluation points (rows).
    pub fn n(&self) -> usize {
        self.indices.len() / self.k
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.indices[i * self.k..(i + 1) * self.k]
    }

    pub fn row_distances(&self, i: usize) -> &[f64] {
        &self.distances[i * self.k..(i + 1) * self.k]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[usize]> + '_ {
        self.indices.chunks_exact(self.k)
    }

    pub fn all_indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn all_distances(&self) -> &[f64] {
        &self.distances
    }
}

fn check_k(k: usize, m: usize) -> Result<()> {
    if k == 0 || k > m {
        return Err(Error::invalid(format!(
            "k = {k} out of range: need 1 <= k <= {m}"
        )));
    }
    Ok(())
}

fn check_query_dim(query: &[f64], train: &Sample) -> Result<()> {
    if query.len() != train.dim() {
        return Err(Error::DimensionMismatch {
            expected: train.dim(),
            found: query.len(),
        });
    }
    Ok(())
}

#[inline]
fn precedes(a: (f64, usize), b: (f64, usize)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

/// Exhaustive k-NN query: sorts every training point by `(distance, index)`.
pub fn knn_query(
    query: &[f64],
    train: &Sample,
    k: usize,
    norm: NormSpec,
) -> Result<Vec<Neighbor>> {
    check_k(k, train.len())?;
    check_query_dim(query, train)?;
    let mut keyed: Vec<(f64, usize)> = train
        .points()
        .enumerate()
        .map(|(j, p)| (norm.key(query, p), j))
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(keyed
        .into_iter()
        .take(k)
        .map(|(key, index)| Neighbor {
            index,
            distance: norm.key_to_distance(key),
        })
        .collect())
}

/// Neighbor table computed by exhaustive search for every evaluation point.
pub fn neighbor_table_brute(
    eval: &Sample,
    train: &Sample,
    k: usize,
    norm: NormSpec,
) -> Result<NeighborTable> {
    eval.check_same_dim(train)?;
    check_k(k, train.len())?;
    let rows = eval
        .points()
        .map(|q| knn_query(q, train, k, norm))
        .collect::<Result<Vec<_>>>()?;
    Ok(NeighborTable::from_rows(k, train.len(), rows))
}

/// Neighbor table for `eval` against `train`, using a k-d tree.
///
/// Row `i` equals `knn_query(eval.point(i), train, k, norm)`. Rows are
/// computed in parallel; the result does not depend on scheduling.
pub fn neighbor_table(
    eval: &Sample,
    train: &Sample,
    k: usize,
    norm: NormSpec,
) -> Result<NeighborTable> {
    eval.check_same_dim(train)?;
    check_k(k, train.len())?;
    let index = KdIndex::build(train, norm);
    // runs of repeated evaluation points (atoms) are queried once
    let starts: Vec<usize> = (0..eval.len())
        .filter(|&i| i == 0 || eval.point(i) != eval.point(i - 1))
        .collect();
    let unique: Vec<Vec<Neighbor>> = starts
        .par_iter()
        .map(|&i| index.query_unchecked(eval.point(i), k))
        .collect();
    let mut rows = Vec::with_capacity(eval.len());
    for (r, &start) in starts.iter().enumerate() {
        let end = starts.get(r + 1).copied().unwrap_or(eval.len());
        rows.extend(std::iter::repeat_n(&unique[r], end - start).cloned());
    }
    Ok(NeighborTable::from_rows(k, train.len(), rows))
}

/// Builds the accelerated index over `train`.
pub fn build_index(train: &Sample, norm: NormSpec) -> KdIndex<'_> {
    KdIndex::build(train, norm)
}

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// k-d tree over a training sample.
///
/// Left subtrees hold points with coordinate `<= value` on the split axis and
/// right subtrees points with coordinate `>= value`. A subtree is skipped only
/// when its axis gap alone strictly exceeds the current k-th best distance,
/// so equidistant candidates are always examined and the tie rule holds.
#[derive(Debug, Clone)]
pub struct KdIndex<'a> {
    train: &'a Sample,
    norm: NormSpec,
    order: Vec<usize>,
    nodes: Vec<Node>,
    root: usize,
}

impl<'a> KdIndex<'a> {
    pub fn build(train: &'a Sample, norm: NormSpec) -> Self {
        let mut order: Vec<usize> = (0..train.len()).collect();
        let mut nodes = Vec::new();
        let root = build_node(train, &mut order, 0, train.len(), &mut nodes);
        KdIndex {
            train,
            norm,
            order,
            nodes,
            root,
        }
    }

    pub fn norm(&self) -> NormSpec {
        self.norm
    }

    pub fn len(&self) -> usize {
        self.train.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The `k` nearest training points to `query`, ordered by `(distance, index)`.
    pub fn query(&self, query: &[f64], k: usize) -> Result<Vec<Neighbor>> {
        check_k(k, self.train.len())?;
        check_query_dim(query, self.train)?;
        Ok(self.query_unchecked(query, k))
    }

    pub(crate) fn query_unchecked(&self, query: &[f64], k: usize) -> Vec<Neighbor> {
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        self.search(self.root, query, k, &mut best);
        best.into_iter()
            .map(|(key, index)| Neighbor {
                index,
                distance: self.norm.key_to_distance(key),
            })
            .collect()
    }

    fn search(&self, node: usize, query: &[f64], k: usize, best: &mut Vec<(f64, usize)>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &j in &self.order[start..end] {
                    let cand = (self.norm.key(query, self.train.point(j)), j);
                    if best.len() == k && !precedes(cand, best[k - 1]) {
                        continue;
                    }
                    let pos = best.partition_point(|&b| precedes(b, cand));
                    best.insert(pos, cand);
                    best.truncate(k);
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let q = query[axis];
                let (near, far, gap) = if q < value {
                    (left, right, value - q)
                } else {
                    (right, left, q - value)
                };
                self.search(near, query, k, best);
                if best.len() < k || self.norm.axis_key(gap) <= best[k - 1].0 {
                    self.search(far, query, k, best);
                }
            }
        }
    }
}

fn build_node(
    train: &Sample,
    order: &mut [usize],
    start: usize,
    end: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let len = end - start;
    let leaf = |nodes: &mut Vec<Node>| {
        nodes.push(Node::Leaf { start, end });
        nodes.len() - 1
    };
    if len <= LEAF_SIZE {
        return leaf(nodes);
    }
    let slice = &mut order[start..end];
    let dim = train.dim();
    let mut axis = 0;
    let mut spread = f64::NEG_INFINITY;
    for a in 0..dim {
        let (lo, hi) = slice.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &j| {
            let c = train.point(j)[a];
            (lo.min(c), hi.max(c))
        });
        if hi - lo > spread {
            spread = hi - lo;
            axis = a;
        }
    }
    if spread <= 0.0 {
        return leaf(nodes);
    }
    let mid = len / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| {
        train.point(a)[axis].total_cmp(&train.point(b)[axis])
    });
    let value = train.point(slice[mid])[axis];
    let left = build_node(train, order, start, start + mid, nodes);
    let right = build_node(train, order, start + mid, end, nodes);
    nodes.push(Node::Split {
        axis,
        value,
        left,
        right,
    });
    nodes.len() - 1
}
