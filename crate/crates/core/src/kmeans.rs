//! Damped K-means over user rows.
//!
//! Initial centroids are the first k rows of a seeded random permutation.
//! Each iteration assigns every row to its nearest centroid (Euclidean, ties
//! to the lower centroid index), then moves each centroid a fraction
//! `lambda` of the way toward the mean of its rows:
//!
//! `m_j <- (1 - lambda) * m_j + lambda * mean(rows in j)`
//!
//! so `lambda = 1` is plain Lloyd. A centroid that lost all its rows jumps
//! to the row farthest from its own centroid instead. Iteration stops when
//! no centroid moves more than `tol`, or after `max_iters` updates.

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kits::{select_kit_items, Kit};
use crate::model::{ItemCatalog, PreferenceMatrix, SelectionConstraint};
use crate::rng::{derive_seed, rng_from_seed};
use crate::silhouette::{pairwise_distances, silhouette_from_distances, SilhouetteReport};

/// Minimum number of kits a sweep may start from unless explicitly lowered.
pub const MIN_KITS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub lambda: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub tol: f64,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            lambda: 0.3,
            max_iters: 100,
            seed,
            tol: 1e-6,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn check(&self, n: usize) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(Error::InvalidConfig(format!("lambda {} not in (0, 1]", self.lambda)));
        }
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if self.k > n {
            return Err(Error::TooManyClusters { k: self.k, n });
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return Err(Error::InvalidConfig(format!("tol {} must be non-negative", self.tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansRun {
    pub centroids: Array2<f64>,
    pub idx: Vec<usize>,
    pub iterations_used: usize,
    pub converged: bool,
    /// Within-cluster sum of squares of each assignment step, plus the final
    /// assignment against the final centroids.
    pub wcss_trace: Vec<f64>,
}

impl KMeansRun {
    pub fn k(&self) -> usize {
        self.centroids.nrows()
    }

    pub fn wcss(&self) -> f64 {
        *self.wcss_trace.last().expect("trace is never empty")
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// First `k` rows of a seeded uniform permutation of the rows.
pub fn init_centroids(data: ArrayView2<'_, f64>, k: usize, seed: u64) -> Result<Array2<f64>> {
    let n = data.nrows();
    if k > n {
        return Err(Error::TooManyClusters { k, n });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng_from_seed(seed));
    Ok(data.select(Axis(0), &perm[..k]))
}

pub fn find_closest_centroids(data: ArrayView2<'_, f64>, centroids: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
    if centroids.nrows() == 0 {
        return Err(Error::EmptyCentroids);
    }
    if centroids.ncols() != data.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "centroids have width {}, data has {}",
            centroids.ncols(),
            data.ncols()
        )));
    }
    let m = data.ncols();
    if m == 0 {
        return Ok(vec![0; data.nrows()]);
    }
    let data = data.as_standard_layout();
    let centroids = centroids.as_standard_layout();
    let flat = centroids.as_slice().expect("standard layout");
    Ok(data
        .as_slice()
        .expect("standard layout")
        .chunks_exact(m)
        .map(|x| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (j, c) in flat.chunks_exact(m).enumerate() {
                let d = sq_dist(x, c);
                if d < best_d {
                    best = j;
                    best_d = d;
                }
            }
            best
        })
        .collect())
}

/// Damped centroid update; see the module docs for the rule.
pub fn compute_centroids(
    data: ArrayView2<'_, f64>,
    idx: &[usize],
    prev: ArrayView2<'_, f64>,
    lambda: f64,
) -> Result<Array2<f64>> {
    let k = prev.nrows();
    let m = data.ncols();
    if idx.len() != data.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} rows",
            idx.len(),
            data.nrows()
        )));
    }
    if let Some(&j) = idx.iter().find(|&&j| j >= k) {
        return Err(Error::DimensionMismatch(format!("label {j} out of range for k = {k}")));
    }
    let mut sums = Array2::<f64>::zeros((k, m));
    let mut counts = vec![0usize; k];
    for (x, &j) in data.rows().into_iter().zip(idx) {
        sums.row_mut(j).zip_mut_with(&x, |s, &v| *s += v);
        counts[j] += 1;
    }

    let mut next = prev.to_owned();
    for (j, &count) in counts.iter().enumerate() {
        if count > 0 {
            let inv = 1.0 / count as f64;
            next.row_mut(j)
                .zip_mut_with(&sums.row(j), |c, &s| *c = (1.0 - lambda) * *c + lambda * s * inv);
        }
    }

    if counts.contains(&0) {
        let mut dist: Vec<f64> = data
            .rows()
            .into_iter()
            .zip(idx)
            .map(|(x, &j)| sq_dist(&x.to_vec(), &prev.row(j).to_vec()))
            .collect();
        for j in (0..k).filter(|&j| counts[j] == 0) {
            let mut far = None;
            for (i, &d) in dist.iter().enumerate() {
                if d.is_finite() && far.is_none_or(|(_, fd)| d > fd) {
                    far = Some((i, d));
                }
            }
            // more empty clusters than rows can only happen with k > n
            if let Some((i, _)) = far {
                next.row_mut(j).assign(&data.row(i));
                dist[i] = f64::NEG_INFINITY;
            }
        }
    }
    Ok(next)
}

/// Sum of squared distances from each row to its assigned centroid.
pub fn wcss(data: ArrayView2<'_, f64>, idx: &[usize], centroids: ArrayView2<'_, f64>) -> f64 {
    let m = data.ncols();
    if m == 0 {
        return 0.0;
    }
    let data = data.as_standard_layout();
    let centroids = centroids.as_standard_layout();
    let flat = centroids.as_slice().expect("standard layout");
    data.as_slice()
        .expect("standard layout")
        .chunks_exact(m)
        .zip(idx)
        .map(|(x, &j)| sq_dist(x, &flat[j * m..(j + 1) * m]))
        .sum()
}

pub fn run_kmeans_on(data: ArrayView2<'_, f64>, config: &KMeansConfig) -> Result<KMeansRun> {
    config.check(data.nrows())?;
    let mut centroids = init_centroids(data, config.k, config.seed)?;
    let mut wcss_trace = Vec::new();
    let mut iterations_used = 0;
    let mut converged = false;
    for iter in 1..=config.max_iters {
        let idx = find_closest_centroids(data, centroids.view())?;
        wcss_trace.push(wcss(data, &idx, centroids.view()));
        let next = compute_centroids(data, &idx, centroids.view(), config.lambda)?;
        let shift = next
            .rows()
            .into_iter()
            .zip(centroids.rows())
            .map(|(a, b)| sq_dist(&a.to_vec(), &b.to_vec()).sqrt())
            .fold(0.0, f64::max);
        centroids = next;
        iterations_used = iter;
        if shift < config.tol {
            converged = true;
            break;
        }
    }
    let idx = find_closest_centroids(data, centroids.view())?;
    wcss_trace.push(wcss(data, &idx, centroids.view()));
    Ok(KMeansRun {
        centroids,
        idx,
        iterations_used,
        converged,
        wcss_trace,
    })
}

pub fn run_kmeans(prefs: &PreferenceMatrix, config: &KMeansConfig) -> Result<KMeansRun> {
    run_kmeans_on(prefs.to_f64().view(), config)
}

/// One kit per centroid: the items with the largest centroid coordinates.
pub fn best_centroid_kits(
    run: &KMeansRun,
    catalog: &ItemCatalog,
    c: &SelectionConstraint,
    constrained: bool,
) -> Result<Vec<Kit>> {
    if run.centroids.ncols() != catalog.len() {
        return Err(Error::DimensionMismatch(format!(
            "centroids have width {}, catalog has {} items",
            run.centroids.ncols(),
            catalog.len()
        )));
    }
    run.centroids
        .rows()
        .into_iter()
        .enumerate()
        .map(|(j, row)| Kit::new(j, select_kit_items(&row.to_vec(), catalog, c, constrained)?))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub trials: usize,
    pub seed: u64,
    pub lambda: f64,
    pub max_iters: usize,
    pub tol: f64,
    /// Lowest k the sweep accepts, [`MIN_KITS`] by default.
    pub k_floor: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            k_min: MIN_KITS,
            k_max: 15,
            trials: 3,
            seed: 0,
            lambda: 0.3,
            max_iters: 100,
            tol: 1e-6,
            k_floor: MIN_KITS,
        }
    }
}

impl SweepConfig {
    /// Seed of the run for cluster count `k`, trial `trial` (0-based).
    pub fn cell_seed(&self, k: usize, trial: usize) -> u64 {
        derive_seed(self.seed, "kmeans-sweep", &[k as u64, trial as u64])
    }
}

#[derive(Debug, Clone)]
pub struct SweepCell {
    pub k: usize,
    pub trial: usize,
    pub silhouette: SilhouetteReport,
    pub run: KMeansRun,
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub k_values: Vec<usize>,
    pub trials: usize,
    /// Row-major: `cells[(k - k_min) * trials + trial]`.
    pub cells: Vec<SweepCell>,
}

impl SweepTable {
    pub fn cell(&self, k: usize, trial: usize) -> &SweepCell {
        let row = k - self.k_values[0];
        &self.cells[row * self.trials + trial]
    }

    /// Macro-averaged silhouette per k row, one value per trial.
    pub fn values(&self) -> Vec<Vec<f64>> {
        self.cells
            .chunks(self.trials)
            .map(|row| row.iter().map(|c| c.silhouette.macro_average).collect())
            .collect()
    }
}

/// Independent seeded runs for every `(k, trial)`; cells may run in
/// parallel but the table is always in `(k, trial)` order.
pub fn sweep(prefs: &PreferenceMatrix, config: &SweepConfig) -> Result<SweepTable> {
    let n = prefs.n_users();
    if config.k_min < config.k_floor.max(1) {
        return Err(Error::InvalidConfig(format!(
            "k_min {} is below the floor of {}",
            config.k_min, config.k_floor
        )));
    }
    if config.k_min > config.k_max {
        return Err(Error::InvalidConfig(format!(
            "k_min {} exceeds k_max {}",
            config.k_min, config.k_max
        )));
    }
    if config.k_max > n {
        return Err(Error::TooManyClusters { k: config.k_max, n });
    }
    if config.trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    let data = prefs.to_f64();
    let dist = pairwise_distances(data.view());
    let grid: Vec<(usize, usize)> = (config.k_min..=config.k_max)
        .flat_map(|k| (0..config.trials).map(move |t| (k, t)))
        .collect();
    let cells = grid
        .par_iter()
        .map(|&(k, trial)| {
            let kc = KMeansConfig {
                k,
                lambda: config.lambda,
                max_iters: config.max_iters,
                seed: config.cell_seed(k, trial),
                tol: config.tol,
            };
            let run = run_kmeans_on(data.view(), &kc)?;
            let silhouette = silhouette_from_distances(&dist, n, &run.idx, k)?;
            Ok(SweepCell { k, trial, silhouette, run })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable {
        k_values: (config.k_min..=config.k_max).collect(),
        trials: config.trials,
        cells,
    })
}
