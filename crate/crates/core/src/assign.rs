//! Per-user dissatisfaction and loss-minimizing reassignment to kits.
//!
//! A user's loss against a kit is the Hamming distance between their 0/1
//! selection row and the kit's indicator vector. When both hold `total`
//! items this is `2 * (total - overlap)`.

use ndarray::ArrayView1;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kits::Kit;
use crate::model::PreferenceMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Initial,
    Reassigned,
}

/// Kit per user, as a position in the kit list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Assignment {
    pub kit_of_user: Vec<usize>,
    pub provenance: Provenance,
}

impl Assignment {
    pub fn initial(kit_of_user: Vec<usize>) -> Self {
        Self {
            kit_of_user,
            provenance: Provenance::Initial,
        }
    }

    /// Maps cluster labels to kit positions through each kit's id.
    pub fn from_cluster_labels(labels: &[usize], kits: &[Kit]) -> Result<Self> {
        let kit_of_user = labels
            .iter()
            .map(|&l| {
                kits.iter().position(|k| k.id == l).ok_or_else(|| {
                    Error::InvalidConfig(format!("no kit designed for cluster {l}"))
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self::initial(kit_of_user))
    }

    fn check(&self, n: usize, k: usize) -> Result<()> {
        if self.kit_of_user.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "assignment covers {} users, expected {n}",
                self.kit_of_user.len()
            )));
        }
        if let Some(&j) = self.kit_of_user.iter().find(|&&j| j >= k) {
            return Err(Error::DimensionMismatch(format!("kit index {j} out of range for {k} kits")));
        }
        Ok(())
    }
}

/// Mean loss and mean `e^loss` over each kit's population.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterLosses {
    pub population: Vec<usize>,
    /// 0 for kits nobody is assigned to.
    pub normal: Vec<f64>,
    /// 0 for kits nobody is assigned to.
    pub exponential: Vec<f64>,
}

impl ClusterLosses {
    pub fn is_empty_population(&self, kit: usize) -> bool {
        self.population[kit] == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossReport {
    pub per_user_loss: Vec<u32>,
    pub clusters: ClusterLosses,
    pub total_loss: u64,
}

impl LossReport {
    fn new(per_user_loss: Vec<u32>, assignment: &[usize], k: usize) -> Self {
        let clusters = cluster_losses(&per_user_loss, assignment, k);
        let total_loss = per_user_loss.iter().map(|&l| u64::from(l)).sum();
        Self {
            per_user_loss,
            clusters,
            total_loss,
        }
    }
}

pub fn user_loss(row: ArrayView1<'_, u8>, kit: &Kit) -> u32 {
    let outside = kit.items().iter().filter(|&&q| q >= row.len()).count() as u32;
    let mismatched = row
        .iter()
        .enumerate()
        .filter(|&(q, &v)| (v == 1) != kit.contains(q))
        .count() as u32;
    outside + mismatched
}

pub fn cluster_losses(per_user_loss: &[u32], assignment: &[usize], k: usize) -> ClusterLosses {
    let mut population = vec![0usize; k];
    let mut sum = vec![0.0; k];
    let mut sum_exp = vec![0.0; k];
    for (&l, &j) in per_user_loss.iter().zip(assignment) {
        population[j] += 1;
        sum[j] += f64::from(l);
        sum_exp[j] += f64::from(l).exp();
    }
    let mean = |s: &[f64]| -> Vec<f64> {
        s.iter()
            .zip(&population)
            .map(|(&x, &p)| if p == 0 { 0.0 } else { x / p as f64 })
            .collect()
    };
    ClusterLosses {
        normal: mean(&sum),
        exponential: mean(&sum_exp),
        population,
    }
}

/// Losses of every user under an assignment.
pub fn evaluate(prefs: &PreferenceMatrix, kits: &[Kit], assignment: &Assignment) -> Result<LossReport> {
    if kits.is_empty() {
        return Err(Error::NoKits);
    }
    assignment.check(prefs.n_users(), kits.len())?;
    let losses = assignment
        .kit_of_user
        .iter()
        .enumerate()
        .map(|(i, &j)| user_loss(prefs.row(i), &kits[j]))
        .collect();
    Ok(LossReport::new(losses, &assignment.kit_of_user, kits.len()))
}

/// Moves each user to the kit with the smallest loss (lowest kit position
/// on ties). Returns the new assignment and the loss reports before and after.
pub fn reassign(
    prefs: &PreferenceMatrix,
    kits: &[Kit],
    initial: &Assignment,
) -> Result<(Assignment, LossReport, LossReport)> {
    let before = evaluate(prefs, kits, initial)?;
    let mut kit_of_user = Vec::with_capacity(prefs.n_users());
    let mut losses = Vec::with_capacity(prefs.n_users());
    for i in 0..prefs.n_users() {
        let row = prefs.row(i);
        let (best, loss) = kits
            .iter()
            .map(|kit| user_loss(row, kit))
            .enumerate()
            .fold((0, u32::MAX), |acc, (j, l)| if l < acc.1 { (j, l) } else { acc });
        kit_of_user.push(best);
        losses.push(loss);
    }
    let after = LossReport::new(losses, &kit_of_user, kits.len());
    Ok((
        Assignment {
            kit_of_user,
            provenance: Provenance::Reassigned,
        },
        before,
        after,
    ))
}
