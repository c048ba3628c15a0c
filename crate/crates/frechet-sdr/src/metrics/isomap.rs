//! Graph-geodesic distances in the style of Isomap.
//!
//! A symmetric k-nearest-neighbor graph is built over the rows of the input
//! (an edge exists when either endpoint lists the other among its k nearest,
//! weighted by Euclidean distance), and the returned matrix holds all-pairs
//! shortest-path distances. A disconnected graph is repaired by repeatedly
//! adding the single shortest Euclidean edge joining two components.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::{euclidean_pairwise, knn_indices, DistanceMatrix};

pub fn isomap_distances(y: &DMatrix<f64>, k: usize) -> Result<DistanceMatrix> {
    let n = y.nrows();
    if k < 1 {
        return Err(Error::Parameter("isomap neighbor count must be >= 1".into()));
    }
    if k >= n {
        return Err(Error::Parameter(format!(
            "isomap needs k < n, got k={k} with n={n}"
        )));
    }
    let euclid = euclidean_pairwise(y);
    let mut adj = vec![Vec::<(usize, f64)>::new(); n];
    let add_edge = |adj: &mut Vec<Vec<(usize, f64)>>, a: usize, b: usize, w: f64| {
        if !adj[a].iter().any(|&(t, _)| t == b) {
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
    };
    for (i, neighbors) in knn_indices(&euclid, k).iter().enumerate() {
        for &j in neighbors {
            add_edge(&mut adj, i, j, euclid[(i, j)]);
        }
    }

    // Bridge components with the shortest Euclidean edge until connected.
    loop {
        let comp = components(&adj);
        if comp.iter().max().copied().unwrap_or(0) == 0 {
            break;
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            for j in (i + 1)..n {
                if comp[i] != comp[j] {
                    let cand = (euclid[(i, j)], i, j);
                    if best.map_or(true, |b| {
                        cand.partial_cmp(&b).unwrap_or(Ordering::Equal) == Ordering::Less
                    }) {
                        best = Some(cand);
                    }
                }
            }
        }
        let (w, i, j) = best.expect("disconnected graph must have a bridging pair");
        add_edge(&mut adj, i, j, w);
    }

    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|src| dijkstra(&adj, src))
        .collect();
    // Path sums can differ in the last bit depending on traversal direction;
    // keep the upper triangle.
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = rows[i][j];
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    DistanceMatrix::new(d)
}

/// Component label per vertex (labels are arbitrary but stable).
fn components(adj: &[Vec<(usize, f64)>]) -> Vec<usize> {
    let n = adj.len();
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        label[start] = next;
        while let Some(v) = stack.pop() {
            for &(u, _) in &adj[v] {
                if label[u] == usize::MAX {
                    label[u] = next;
                    stack.push(u);
                }
            }
        }
        next += 1;
    }
    label
}

#[derive(PartialEq)]
struct HeapItem {
    dist: f64,
    node: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, deterministic index tiebreak
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(adj: &[Vec<(usize, f64)>], src: usize) -> Vec<f64> {
    let n = adj.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(HeapItem { dist: 0.0, node: src });
    while let Some(HeapItem { dist: d, node }) = heap.pop() {
        if done[node] {
            continue;
        }
        done[node] = true;
        for &(next, w) in &adj[node] {
            let nd = d + w;
            if nd < dist[next] {
                dist[next] = nd;
                heap.push(HeapItem { dist: nd, node: next });
            }
        }
    }
    dist
}
