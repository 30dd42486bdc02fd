//! Kits and their construction from per-cluster item frequencies.

use ndarray::Axis;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Category, ItemCatalog, PreferenceMatrix, SelectionConstraint};

/// A fixed-size set of catalog items handed to one cluster of users.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Kit {
    pub id: usize,
    /// Item ids, ascending.
    items: Vec<usize>,
}

impl Kit {
    pub fn new(id: usize, items: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut items: Vec<usize> = items.into_iter().collect();
        items.sort_unstable();
        if items.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidKit(format!("kit {id} lists an item twice")));
        }
        Ok(Self { id, items })
    }

    pub fn items(&self) -> &[usize] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, item: usize) -> bool {
        self.items.binary_search(&item).is_ok()
    }

    /// 0/1 vector of width `m`.
    pub fn indicator(&self, m: usize) -> Vec<u8> {
        let mut v = vec![0u8; m];
        for &q in &self.items {
            v[q] = 1;
        }
        v
    }

    /// Checks size and item ids; in constrained mode also the category split.
    pub fn validate(&self, catalog: &ItemCatalog, c: &SelectionConstraint, constrained: bool) -> Result<()> {
        if self.items.len() != c.total {
            return Err(Error::InvalidKit(format!(
                "kit {} has {} items, expected {}",
                self.id,
                self.items.len(),
                c.total
            )));
        }
        if let Some(&q) = self.items.iter().find(|&&q| q >= catalog.len()) {
            return Err(Error::InvalidKit(format!(
                "kit {} references item {q} outside the catalog",
                self.id
            )));
        }
        if constrained {
            for cat in [Category::Expensive, Category::Cheap] {
                let n = self.items.iter().filter(|&&q| catalog.category(q) == cat).count();
                if n != c.quota(cat) {
                    return Err(Error::InvalidKit(format!(
                        "kit {} has {n} {cat} items, expected {}",
                        self.id,
                        c.quota(cat)
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn jaccard(&self, other: &Kit) -> f64 {
        let inter = self.items.iter().filter(|&&q| other.contains(q)).count();
        let union = self.items.len() + other.items.len() - inter;
        if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        }
    }
}

/// The `n` candidates with the highest score; ties go to the lower item id.
pub(crate) fn top_items(scores: &[f64], candidates: &[usize], n: usize) -> Vec<usize> {
    let mut ranked = candidates.to_vec();
    ranked.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    ranked.truncate(n);
    ranked
}

/// Picks `c.total` items from per-item scores: globally, or per category
/// when `constrained`.
pub(crate) fn select_kit_items(
    scores: &[f64],
    catalog: &ItemCatalog,
    c: &SelectionConstraint,
    constrained: bool,
) -> Result<Vec<usize>> {
    if constrained {
        c.check_per_category(catalog)?;
        let mut items = top_items(scores, &catalog.ids_in(Category::Expensive), c.expensive_quota);
        items.extend(top_items(scores, &catalog.ids_in(Category::Cheap), c.cheap_quota));
        Ok(items)
    } else {
        c.check(catalog)?;
        let all: Vec<usize> = (0..catalog.len()).collect();
        Ok(top_items(scores, &all, c.total))
    }
}

/// Item selection counts within one cluster.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FrequencyProfile {
    pub cluster_id: usize,
    pub counts: Vec<usize>,
    pub cluster_size: usize,
}

pub fn frequency_profile(prefs: &PreferenceMatrix, cluster_id: usize, members: &[usize]) -> Result<FrequencyProfile> {
    if members.is_empty() {
        return Err(Error::EmptyCluster);
    }
    if let Some(&i) = members.iter().find(|&&i| i >= prefs.n_users()) {
        return Err(Error::DimensionMismatch(format!(
            "member {i} out of range for {} users",
            prefs.n_users()
        )));
    }
    let counts = prefs
        .data()
        .select(Axis(0), members)
        .map_axis(Axis(0), |col| col.iter().map(|&v| usize::from(v)).sum());
    Ok(FrequencyProfile {
        cluster_id,
        counts: counts.to_vec(),
        cluster_size: members.len(),
    })
}

/// The most frequently chosen items of a cluster, ties to the lower item id.
pub fn design_kit(
    profile: &FrequencyProfile,
    catalog: &ItemCatalog,
    c: &SelectionConstraint,
    constrained: bool,
) -> Result<Kit> {
    if profile.counts.len() != catalog.len() {
        return Err(Error::DimensionMismatch(format!(
            "profile covers {} items, catalog has {}",
            profile.counts.len(),
            catalog.len()
        )));
    }
    let scores: Vec<f64> = profile.counts.iter().map(|&n| n as f64).collect();
    Kit::new(profile.cluster_id, select_kit_items(&scores, catalog, c, constrained)?)
}

/// One kit per non-empty cluster. `clusters[j]` lists the members of cluster
/// `j` and must partition the users; kit ids are the cluster ids.
pub fn design_all(
    prefs: &PreferenceMatrix,
    clusters: &[Vec<usize>],
    catalog: &ItemCatalog,
    c: &SelectionConstraint,
    constrained: bool,
) -> Result<Vec<Kit>> {
    let n = prefs.n_users();
    let mut seen = vec![false; n];
    for &i in clusters.iter().flatten() {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return Err(Error::InvalidConfig(format!(
                "clusters do not partition the {n} users (bad or repeated member {i})"
            )));
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::InvalidConfig(format!(
            "clusters do not cover all {n} users"
        )));
    }
    let kits = clusters
        .iter()
        .enumerate()
        .filter(|(_, members)| !members.is_empty())
        .map(|(j, members)| design_kit(&frequency_profile(prefs, j, members)?, catalog, c, constrained))
        .collect::<Result<Vec<_>>>()?;
    if kits.is_empty() {
        return Err(Error::EmptyPartition);
    }
    Ok(kits)
}

/// Groups element indices by label: `result[j]` lists elements labelled `j`.
pub fn clusters_from_labels(labels: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut clusters = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        clusters[l].push(i);
    }
    clusters
}
