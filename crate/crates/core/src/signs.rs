//! Clustering by sign patterns of leading singular vectors.
//!
//! Each user (row of `u`) or item (column of `vt`) gets an r-bit code whose
//! bit j is 1 iff its coordinate on singular vector j is `>= 0`. Elements
//! with the same code form a cluster. Clusters are numbered by the first
//! element that carries their code.
//!
//! Adding a bit can only split clusters, so the clustering at rank r+1
//! refines the one at rank r. For an entrywise non-negative matrix the
//! leading left singular vector is non-negative under the canonical sign
//! of [`crate::svd`], so bit 1 is constant over users and at most
//! `2^(r-1)` user clusters appear.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::svd::{truncate, SvdFactors, TruncatedSvd};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Users,
    Items,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Users => "users",
            Axis::Items => "items",
        })
    }
}

/// Sign code of one element, bit 1 (leading singular vector) first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SignPattern(pub Vec<bool>);

impl fmt::Display for SignPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SignCluster {
    pub pattern: SignPattern,
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SignClustering {
    pub axis: Axis,
    pub r: usize,
    /// Per-element code.
    pub patterns: Vec<SignPattern>,
    /// Per-element cluster id.
    pub labels: Vec<usize>,
    pub clusters: Vec<SignCluster>,
}

impl SignClustering {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Member lists indexed by cluster id.
    pub fn member_lists(&self) -> Vec<Vec<usize>> {
        self.clusters.iter().map(|c| c.members.clone()).collect()
    }

    /// True iff every cluster of `self` lies inside one cluster of `coarser`.
    pub fn refines(&self, coarser: &SignClustering) -> bool {
        self.labels.len() == coarser.labels.len()
            && self
                .clusters
                .iter()
                .all(|c| c.members.iter().all(|&i| coarser.labels[i] == coarser.labels[c.members[0]]))
    }
}

fn group(axis: Axis, r: usize, patterns: Vec<SignPattern>) -> SignClustering {
    let mut ids: HashMap<SignPattern, usize> = HashMap::new();
    let mut clusters: Vec<SignCluster> = Vec::new();
    let mut labels = Vec::with_capacity(patterns.len());
    for (i, p) in patterns.iter().enumerate() {
        let id = *ids.entry(p.clone()).or_insert_with(|| {
            clusters.push(SignCluster {
                pattern: p.clone(),
                members: Vec::new(),
            });
            clusters.len() - 1
        });
        clusters[id].members.push(i);
        labels.push(id);
    }
    SignClustering {
        axis,
        r,
        patterns,
        labels,
        clusters,
    }
}

pub fn user_sign_clusters(t: &TruncatedSvd) -> SignClustering {
    let patterns = t
        .u
        .rows()
        .into_iter()
        .map(|row| SignPattern(row.iter().map(|&x| x >= 0.0).collect()))
        .collect();
    group(Axis::Users, t.rank(), patterns)
}

pub fn item_sign_clusters(t: &TruncatedSvd) -> SignClustering {
    let patterns = t
        .vt
        .columns()
        .into_iter()
        .map(|col| SignPattern(col.iter().map(|&x| x >= 0.0).collect()))
        .collect();
    group(Axis::Items, t.rank(), patterns)
}

pub fn sign_clusters(t: &TruncatedSvd, axis: Axis) -> SignClustering {
    match axis {
        Axis::Users => user_sign_clusters(t),
        Axis::Items => item_sign_clusters(t),
    }
}

/// `(r, cluster count)` for every rank in `r_min..=r_max`.
pub fn cluster_count_table(f: &SvdFactors, axis: Axis, r_min: usize, r_max: usize) -> Result<Vec<(usize, usize)>> {
    let p = f.rank_limit();
    if r_min == 0 || r_min > r_max || r_max > p {
        return Err(Error::RankOutOfRange {
            rank: if r_min == 0 { 0 } else { r_max },
            max: p,
        });
    }
    (r_min..=r_max)
        .map(|r| Ok((r, sign_clusters(&truncate(f, r)?, axis).len())))
        .collect()
}
