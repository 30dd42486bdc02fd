//! Seeded synthetic survey populations with a planted partition.
//!
//! Generation rule, fixed for reproducibility: one [`ChaCha8Rng`] stream
//! seeded with `spec.seed`. For each user in order, draw the planted kit
//! index uniformly, then for each category (expensive first) draw
//! `noise_swaps` distinct selected items to drop and `noise_swaps` distinct
//! unselected items to add, each as a uniform sample without replacement
//! from the ascending id list. A noisy row therefore sits at Hamming
//! distance exactly `4 * noise_swaps` from its planted kit.
//!
//! [`ChaCha8Rng`]: rand_chacha::ChaCha8Rng

use ndarray::Array2;
use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::kits::Kit;
use crate::model::{Category, ItemCatalog, PreferenceMatrix, SelectionConstraint};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticSpec {
    pub n_users: usize,
    pub planted_kits: Vec<Kit>,
    pub noise_swaps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SyntheticPopulation {
    pub prefs: PreferenceMatrix,
    /// Planted-kit index (position in `planted_kits`) per user.
    pub ground_truth: Vec<usize>,
}

impl SyntheticSpec {
    pub fn check(&self, catalog: &ItemCatalog, c: &SelectionConstraint) -> Result<()> {
        if self.n_users == 0 {
            return Err(Error::InvalidSynthetic("n_users must be positive".into()));
        }
        if self.planted_kits.is_empty() {
            return Err(Error::InvalidSynthetic("no planted kits".into()));
        }
        c.check_per_category(catalog)?;
        for kit in &self.planted_kits {
            kit.validate(catalog, c, true)
                .map_err(|e| Error::InvalidSynthetic(e.to_string()))?;
        }
        for cat in [Category::Expensive, Category::Cheap] {
            let quota = c.quota(cat);
            let free = catalog.count_in(cat) - quota;
            if self.noise_swaps > quota.min(free) {
                return Err(Error::InvalidSynthetic(format!(
                    "noise_swaps {} exceeds what the {cat} category allows ({} selected, {} unselected)",
                    self.noise_swaps, quota, free
                )));
            }
        }
        Ok(())
    }
}

pub fn generate_synthetic(
    spec: &SyntheticSpec,
    catalog: &ItemCatalog,
    c: &SelectionConstraint,
) -> Result<SyntheticPopulation> {
    spec.check(catalog, c)?;
    let m = catalog.len();
    let mut rng = rng_from_seed(spec.seed);
    let mut data = Array2::<u8>::zeros((spec.n_users, m));
    let mut ground_truth = Vec::with_capacity(spec.n_users);

    for i in 0..spec.n_users {
        let g = rng.random_range(0..spec.planted_kits.len());
        ground_truth.push(g);
        let kit = &spec.planted_kits[g];
        let mut row = kit.indicator(m);
        if spec.noise_swaps > 0 {
            for cat in [Category::Expensive, Category::Cheap] {
                let ids = catalog.ids_in(cat);
                let (selected, unselected): (Vec<usize>, Vec<usize>) =
                    ids.into_iter().partition(|&q| kit.contains(q));
                let drop = sample(&mut rng, selected.len(), spec.noise_swaps);
                let add = sample(&mut rng, unselected.len(), spec.noise_swaps);
                for d in drop.iter() {
                    row[selected[d]] = 0;
                }
                for a in add.iter() {
                    row[unselected[a]] = 1;
                }
            }
        }
        data.row_mut(i).assign(&ndarray::ArrayView1::from(&row));
    }

    let width = spec.n_users.to_string().len();
    let user_ids = (0..spec.n_users).map(|i| format!("u{i:0width$}")).collect();
    Ok(SyntheticPopulation {
        prefs: PreferenceMatrix::new(user_ids, data, catalog)?,
        ground_truth,
    })
}

/// Draws `count` distinct constraint-valid kits whose pairwise Hamming
/// distance is at least `min_distance`, by rejection sampling.
pub fn random_kits(
    catalog: &ItemCatalog,
    c: &SelectionConstraint,
    count: usize,
    min_distance: usize,
    seed: u64,
) -> Result<Vec<Kit>> {
    c.check_per_category(catalog)?;
    let exp = catalog.ids_in(Category::Expensive);
    let cheap = catalog.ids_in(Category::Cheap);
    let mut rng = rng_from_seed(seed);
    let mut kits: Vec<Kit> = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while kits.len() < count {
        attempts += 1;
        if attempts > 100_000 {
            return Err(Error::InvalidSynthetic(format!(
                "could not place {count} kits at pairwise distance >= {min_distance}"
            )));
        }
        let pick_exp = sample(&mut rng, exp.len(), c.expensive_quota);
        let pick_cheap = sample(&mut rng, cheap.len(), c.cheap_quota);
        let items = pick_exp.iter().map(|i| exp[i]).chain(pick_cheap.iter().map(|i| cheap[i]));
        let kit = Kit::new(kits.len(), items)?;
        let far = kits.iter().all(|other| {
            let overlap = kit.items().iter().filter(|&&q| other.contains(q)).count();
            2 * (c.total - overlap) >= min_distance.max(1)
        });
        if far {
            kits.push(kit);
        }
    }
    Ok(kits)
}

/// Writes `user_id,planted_kit`.
pub fn write_ground_truth<W: std::io::Write>(pop: &SyntheticPopulation, w: W) -> Result<()> {
    let mut wtr = crate::model::csv_writer(w);
    wtr.write_record(["user_id", "planted_kit"])?;
    for (id, g) in pop.prefs.user_ids().iter().zip(&pop.ground_truth) {
        wtr.write_record([id.as_str(), &g.to_string()])?;
    }
    wtr.flush().map_err(|e| Error::io("<ground truth>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn catalog() -> ItemCatalog {
        ItemCatalog::new((0..20).map(|i| {
            let cat = if i < 10 { Category::Expensive } else { Category::Cheap };
            (format!("item{i}"), cat)
        }))
        .unwrap()
    }

    fn spec(noise: usize, seed: u64) -> SyntheticSpec {
        let c = SelectionConstraint::default();
        SyntheticSpec {
            n_users: 60,
            planted_kits: random_kits(&catalog(), &c, 3, 8, 11).unwrap(),
            noise_swaps: noise,
            seed,
        }
    }

    fn hamming(a: &[u8], b: &[u8]) -> usize {
        a.iter().zip(b).filter(|(x, y)| x != y).count()
    }

    #[test]
    fn no_noise_copies_planted_kits() {
        let cat = catalog();
        let c = SelectionConstraint::default();
        let s = spec(0, 3);
        let pop = generate_synthetic(&s, &cat, &c).unwrap();
        for (i, &g) in pop.ground_truth.iter().enumerate() {
            assert_eq!(pop.prefs.row(i).to_vec(), s.planted_kits[g].indicator(20));
        }
    }

    #[test]
    fn one_swap_per_category_moves_four_bits() {
        let cat = catalog();
        let c = SelectionConstraint::default();
        let s = spec(1, 5);
        let kit = &s.planted_kits[0];

        // Every (drop, add) choice in each category, combined: all distances.
        let base = kit.indicator(20);
        let mut outcomes = std::collections::BTreeSet::new();
        let per_cat: Vec<Vec<(usize, usize)>> = [Category::Expensive, Category::Cheap]
            .iter()
            .map(|&cat_| {
                let ids = cat.ids_in(cat_);
                let sel: Vec<_> = ids.iter().copied().filter(|&q| kit.contains(q)).collect();
                let uns: Vec<_> = ids.iter().copied().filter(|&q| !kit.contains(q)).collect();
                sel.iter().flat_map(|&d| uns.iter().map(move |&a| (d, a))).collect()
            })
            .collect();
        for &(d1, a1) in &per_cat[0] {
            for &(d2, a2) in &per_cat[1] {
                let mut row = base.clone();
                row[d1] = 0;
                row[a1] = 1;
                row[d2] = 0;
                row[a2] = 1;
                outcomes.insert(hamming(&row, &base));
            }
        }
        assert_eq!(outcomes.into_iter().collect::<Vec<_>>(), vec![4]);

        let pop = generate_synthetic(&s, &cat, &c).unwrap();
        let report = crate::model::validate_constraint(&pop.prefs, &cat, &c).unwrap();
        assert!(report.is_clean());
        for (i, &g) in pop.ground_truth.iter().enumerate() {
            let row = pop.prefs.row(i).to_vec();
            assert_eq!(hamming(&row, &s.planted_kits[g].indicator(20)), 4);
        }
    }

    #[test]
    fn same_seed_same_output() {
        let cat = catalog();
        let c = SelectionConstraint::default();
        let a = generate_synthetic(&spec(2, 9), &cat, &c).unwrap();
        let b = generate_synthetic(&spec(2, 9), &cat, &c).unwrap();
        assert_eq!(a.prefs, b.prefs);
        assert_eq!(a.ground_truth, b.ground_truth);
        let other = generate_synthetic(&spec(2, 10), &cat, &c).unwrap();
        assert_ne!(a.prefs, other.prefs);
    }

    #[test]
    fn rejects_bad_specs() {
        let cat = catalog();
        let c = SelectionConstraint::default();
        let mut s = spec(5, 1);
        assert!(generate_synthetic(&s, &cat, &c).is_err());
        s.noise_swaps = 0;
        s.planted_kits.push(Kit::new(9, 0..10).unwrap());
        assert!(matches!(generate_synthetic(&s, &cat, &c), Err(Error::InvalidSynthetic(_))));
    }

    #[test]
    fn random_kits_respect_distance() {
        let c = SelectionConstraint::default();
        let kits = random_kits(&catalog(), &c, 8, 8, 1).unwrap();
        assert_eq!(kits.len(), 8);
        for (a, ka) in kits.iter().enumerate() {
            ka.validate(&catalog(), &c, true).unwrap();
            for kb in &kits[a + 1..] {
                assert!(hamming(&ka.indicator(20), &kb.indicator(20)) >= 8);
            }
        }
    }
}
