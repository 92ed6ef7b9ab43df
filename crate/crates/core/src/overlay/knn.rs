use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{LatencyMatrix, OverlayGraph};
use crate::error::{Error, Result};

/// Draws `n` distinct indices of an `m`-node matrix, returned in ascending order.
pub fn sample_nodes(m: usize, n: usize, seed: u64) -> Result<Vec<usize>> {
    if n > m {
        return Err(Error::invalid(format!("cannot sample {n} nodes out of {m}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, m, n).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

/// Connects every sampled node to its `kappa` lowest-latency sampled peers.
///
/// Node `i` of the result stands for matrix index `sample[i]`. Latency ties
/// go to the smaller node id. Mutual selections produce a single edge, so the
/// minimum degree is exactly `kappa` while hubs may exceed it.
pub fn build_knn_overlay(
    matrix: &LatencyMatrix,
    sample: &[usize],
    kappa: usize,
) -> Result<OverlayGraph> {
    let n = sample.len();
    if kappa == 0 || kappa >= n {
        return Err(Error::invalid(format!(
            "kappa must lie in [1, {n}), got {kappa}"
        )));
    }
    if let Some(&bad) = sample.iter().find(|&&x| x >= matrix.size()) {
        return Err(Error::invalid(format!(
            "sample index {bad} outside matrix of size {}",
            matrix.size()
        )));
    }
    let mut seen = vec![false; matrix.size()];
    for &x in sample {
        if std::mem::replace(&mut seen[x], true) {
            return Err(Error::invalid(format!("sample index {x} repeated")));
        }
    }

    let mut graph = OverlayGraph::new(n);
    let mut order: Vec<usize> = Vec::with_capacity(n - 1);
    for (u, &row) in sample.iter().enumerate() {
        order.clear();
        order.extend((0..n).filter(|&v| v != u));
        order.sort_by(|&a, &b| {
            matrix
                .get(row, sample[a])
                .total_cmp(&matrix.get(row, sample[b]))
                .then(a.cmp(&b))
        });
        for &v in &order[..kappa] {
            graph.add_edge(u, v)?;
        }
    }
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[f64]) -> LatencyMatrix {
        LatencyMatrix::from_rows(
            points
                .iter()
                .map(|a| points.iter().map(|b| (a - b).abs()).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn collinear_nearest_neighbor() {
        // gaps 1, 2, 3
        let m = line(&[0.0, 1.0, 3.0, 6.0]);
        let g = build_knn_overlay(&m, &[0, 1, 2, 3], 1).unwrap();
        let edges: Vec<_> = g.edges().collect();
        assert_eq!(edges, vec![(0, 1), (1, 2), (2, 3)]);
        assert_eq!((0..4).map(|u| g.degree(u)).min(), Some(1));
    }

    #[test]
    fn equal_latencies_break_ties_by_index() {
        let n = 8;
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 5.0 }).collect())
            .collect();
        let m = LatencyMatrix::from_rows(rows).unwrap();
        let sample: Vec<usize> = (0..n).collect();
        let g = build_knn_overlay(&m, &sample, 2).unwrap();
        assert_eq!(g.neighbors(5), &[0, 1]);
    }

    #[test]
    fn min_degree_is_kappa() {
        let m = LatencyMatrix::synthetic(2500, 1).unwrap();
        let sample = sample_nodes(2500, 200, 2).unwrap();
        let g = build_knn_overlay(&m, &sample, 6).unwrap();
        g.validate().unwrap();
        assert!((0..200).all(|u| g.degree(u) >= 6));
        assert!((0..200).any(|u| g.degree(u) > 6));
    }

    #[test]
    fn parameter_errors() {
        let m = LatencyMatrix::synthetic(5, 0).unwrap();
        assert!(build_knn_overlay(&m, &[0, 1, 2], 3).is_err());
        assert!(build_knn_overlay(&m, &[0, 1, 7], 1).is_err());
        assert!(build_knn_overlay(&m, &[0, 1, 1], 1).is_err());
        assert!(build_knn_overlay(&m, &[0, 1, 2], 0).is_err());
        assert!(sample_nodes(5, 6, 0).is_err());
    }

    #[test]
    fn sampling_is_seeded() {
        let a = sample_nodes(2500, 100, 4).unwrap();
        assert_eq!(a, sample_nodes(2500, 100, 4).unwrap());
        assert!(a.windows(2).all(|w| w[0] < w[1]));
    }
}
