//! Silhouette widths, macro-averaged per cluster.
//!
//! For row i with own cluster A: `a(i)` is the mean distance to the other
//! members of A, `b(i)` the smallest mean distance to the members of any
//! other non-empty cluster, and `s(i) = (b - a) / max(a, b)`. Rows alone in
//! their cluster, and rows with `a = b = 0`, score 0. The summary is the
//! mean over non-empty clusters of each cluster's mean `s(i)`.

use ndarray::ArrayView2;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SilhouetteReport {
    pub per_user: Vec<f64>,
    /// `None` for clusters with no members.
    pub per_cluster: Vec<Option<f64>>,
    pub macro_average: f64,
}

pub fn silhouette(data: ArrayView2<'_, f64>, labels: &[usize], k: usize) -> Result<SilhouetteReport> {
    silhouette_from_distances(&pairwise_distances(data), data.nrows(), labels, k)
}

/// Row-major `n x n` Euclidean distances between the rows of `data`.
pub fn pairwise_distances(data: ArrayView2<'_, f64>) -> Vec<f64> {
    let (n, m) = data.dim();
    let data = data.as_standard_layout();
    let flat = data.as_slice().expect("standard layout");
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = flat[i * m..(i + 1) * m]
                .iter()
                .zip(&flat[j * m..(j + 1) * m])
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    dist
}

/// [`silhouette`] over a precomputed [`pairwise_distances`] matrix.
pub fn silhouette_from_distances(dist: &[f64], n: usize, labels: &[usize], k: usize) -> Result<SilhouetteReport> {
    if dist.len() != n * n {
        return Err(Error::DimensionMismatch(format!("{} distances for {n} rows", dist.len())));
    }
    if labels.len() != n {
        return Err(Error::DimensionMismatch(format!("{} labels for {n} rows", labels.len())));
    }
    if let Some(&l) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::DimensionMismatch(format!("label {l} out of range for k = {k}")));
    }
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    let non_empty = sizes.iter().filter(|&&s| s > 0).count();
    if non_empty < 2 {
        return Err(Error::TooFewClusters(non_empty));
    }

    let mut per_user = vec![0.0; n];
    let mut sums = vec![0.0; k];
    for i in 0..n {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for (j, &d) in dist[i * n..(i + 1) * n].iter().enumerate() {
            if i != j {
                sums[labels[j]] += d;
            }
        }
        let own = labels[i];
        if sizes[own] == 1 {
            continue;
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        per_user[i] = if denom > 0.0 { (b - a) / denom } else { 0.0 };
    }

    let mut cluster_sums = vec![0.0; k];
    for (s, &l) in per_user.iter().zip(labels) {
        cluster_sums[l] += s;
    }
    let per_cluster: Vec<Option<f64>> = (0..k)
        .map(|c| (sizes[c] > 0).then(|| cluster_sums[c] / sizes[c] as f64))
        .collect();
    let macro_average = per_cluster.iter().flatten().sum::<f64>() / non_empty as f64;
    Ok(SilhouetteReport {
        per_user,
        per_cluster,
        macro_average,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn separated_duplicates_score_one() {
        let data = array![[0.0, 0.0], [0.0, 0.0], [3.0, 4.0], [3.0, 4.0], [3.0, 4.0]];
        let rep = silhouette(data.view(), &[0, 0, 1, 1, 1], 2).unwrap();
        assert!(rep.per_user.iter().all(|&s| s == 1.0));
        assert_eq!(rep.macro_average, 1.0);
    }

    #[test]
    fn identical_points_score_zero() {
        let data = array![[1.0], [1.0], [1.0], [1.0]];
        let rep = silhouette(data.view(), &[0, 1, 0, 1], 2).unwrap();
        assert_eq!(rep.per_user, vec![0.0; 4]);
        assert_eq!(rep.macro_average, 0.0);
    }

    #[test]
    fn singletons_and_empty_clusters() {
        let data = array![[0.0], [1.0], [10.0]];
        let rep = silhouette(data.view(), &[0, 0, 2], 3).unwrap();
        assert_eq!(rep.per_user[2], 0.0);
        assert_eq!(rep.per_cluster[1], None);
        // row 0: a = 1, b = 10 -> 0.9; row 1: a = 1, b = 9 -> 8/9
        let c0 = (0.9 + 8.0 / 9.0) / 2.0;
        assert!((rep.per_cluster[0].unwrap() - c0).abs() < 1e-15);
        assert!((rep.macro_average - c0 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn needs_two_clusters() {
        let data = array![[0.0], [1.0]];
        assert!(matches!(silhouette(data.view(), &[1, 1], 2), Err(Error::TooFewClusters(1))));
    }
}
