//! Survey domain types and their CSV formats.
//!
//! Catalog file: header `item_id,name,category`, one item per line, ids
//! `0..m` in file order, category `expensive` or `cheap`.
//!
//! Preference file: header `user_id,<label>...` with one label per catalog
//! item (its name or its index), then one row per respondent with cells
//! strictly `0` or `1`.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1};
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Expensive,
    Cheap,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Expensive => "expensive",
            Category::Cheap => "cheap",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Category {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s {
            "expensive" => Ok(Category::Expensive),
            "cheap" => Ok(Category::Cheap),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Item {
    pub id: usize,
    pub name: String,
    pub category: Category,
}

/// The items a respondent chooses from. Item ids are their 0-based position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ItemCatalog {
    items: Vec<Item>,
}

impl ItemCatalog {
    /// Builds a catalog from `(name, category)` pairs in id order.
    pub fn new<S: Into<String>>(items: impl IntoIterator<Item = (S, Category)>) -> Result<Self> {
        let items: Vec<Item> = items
            .into_iter()
            .enumerate()
            .map(|(id, (name, category))| Item {
                id,
                name: name.into(),
                category,
            })
            .collect();
        Self::from_items(items)
    }

    fn from_items(items: Vec<Item>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::EmptyCatalog);
        }
        for cat in [Category::Expensive, Category::Cheap] {
            if !items.iter().any(|it| it.category == cat) {
                return Err(Error::EmptyCategory(cat));
            }
        }
        Ok(Self { items })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn category(&self, item: usize) -> Category {
        self.items[item].category
    }

    /// Item ids of one category, ascending.
    pub fn ids_in(&self, category: Category) -> Vec<usize> {
        self.items
            .iter()
            .filter(|it| it.category == category)
            .map(|it| it.id)
            .collect()
    }

    pub fn count_in(&self, category: Category) -> usize {
        self.items.iter().filter(|it| it.category == category).count()
    }
}

/// How many items each respondent must pick, split by category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SelectionConstraint {
    pub total: usize,
    pub expensive_quota: usize,
    pub cheap_quota: usize,
}

impl Default for SelectionConstraint {
    fn default() -> Self {
        Self {
            total: 10,
            expensive_quota: 6,
            cheap_quota: 4,
        }
    }
}

impl SelectionConstraint {
    pub fn new(expensive_quota: usize, cheap_quota: usize) -> Self {
        Self {
            total: expensive_quota + cheap_quota,
            expensive_quota,
            cheap_quota,
        }
    }

    pub fn quota(&self, category: Category) -> usize {
        match category {
            Category::Expensive => self.expensive_quota,
            Category::Cheap => self.cheap_quota,
        }
    }

    /// Checks the quota arithmetic and that the catalog can hold a full selection.
    pub fn check(&self, catalog: &ItemCatalog) -> Result<()> {
        if self.expensive_quota + self.cheap_quota != self.total {
            return Err(Error::InvalidConstraint(format!(
                "quotas {} + {} do not sum to total {}",
                self.expensive_quota, self.cheap_quota, self.total
            )));
        }
        if self.total > catalog.len() {
            return Err(Error::InvalidConstraint(format!(
                "total {} exceeds catalog size {}",
                self.total,
                catalog.len()
            )));
        }
        Ok(())
    }

    /// Like [`check`](Self::check), and additionally each category must hold its quota.
    pub fn check_per_category(&self, catalog: &ItemCatalog) -> Result<()> {
        self.check(catalog)?;
        for cat in [Category::Expensive, Category::Cheap] {
            if catalog.count_in(cat) < self.quota(cat) {
                return Err(Error::InvalidConstraint(format!(
                    "{} quota {} exceeds the {} {} items in the catalog",
                    cat,
                    self.quota(cat),
                    catalog.count_in(cat),
                    cat
                )));
            }
        }
        Ok(())
    }
}

/// n respondents by m items, entries 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreferenceMatrix {
    user_ids: Vec<String>,
    column_labels: Vec<String>,
    data: Array2<u8>,
}

impl PreferenceMatrix {
    /// Builds a matrix whose column labels are the catalog item names.
    pub fn new(user_ids: Vec<String>, data: Array2<u8>, catalog: &ItemCatalog) -> Result<Self> {
        let labels = catalog.items().iter().map(|it| it.name.clone()).collect();
        Self::with_labels(user_ids, labels, data)
    }

    pub fn with_labels(
        user_ids: Vec<String>,
        column_labels: Vec<String>,
        data: Array2<u8>,
    ) -> Result<Self> {
        if data.nrows() == 0 {
            return Err(Error::EmptyMatrix);
        }
        if user_ids.len() != data.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "{} user ids for {} rows",
                user_ids.len(),
                data.nrows()
            )));
        }
        if column_labels.len() != data.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} column labels for {} columns",
                column_labels.len(),
                data.ncols()
            )));
        }
        if let Some(((r, c), v)) = data.indexed_iter().find(|(_, &v)| v > 1) {
            return Err(Error::NonBinaryEntry {
                line: r as u64 + 2,
                column: c + 1,
                token: v.to_string(),
            });
        }
        let mut seen = HashSet::new();
        for (i, id) in user_ids.iter().enumerate() {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateUserId {
                    line: i as u64 + 2,
                    user_id: id.clone(),
                });
            }
        }
        Ok(Self {
            user_ids,
            column_labels,
            data,
        })
    }

    pub fn n_users(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_items(&self) -> usize {
        self.data.ncols()
    }

    pub fn user_ids(&self) -> &[String] {
        &self.user_ids
    }

    pub fn column_labels(&self) -> &[String] {
        &self.column_labels
    }

    pub fn data(&self) -> &Array2<u8> {
        &self.data
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, u8> {
        self.data.row(i)
    }

    pub fn to_f64(&self) -> Array2<f64> {
        self.data.mapv(f64::from)
    }

    /// Keeps the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let data = self.data.select(ndarray::Axis(0), rows);
        let ids = rows.iter().map(|&r| self.user_ids[r].clone()).collect();
        Self::with_labels(ids, self.column_labels.clone(), data)
    }
}

pub fn load_catalog(path: impl AsRef<Path>) -> Result<ItemCatalog> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_catalog(file)
}

pub fn read_catalog<R: Read>(reader: R) -> Result<ItemCatalog> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = records.next().ok_or(Error::EmptyCatalog)??;
    if header.iter().collect::<Vec<_>>() != ["item_id", "name", "category"] {
        return Err(Error::MalformedRow {
            line: 1,
            reason: "header must be item_id,name,category".into(),
        });
    }
    let mut items = Vec::new();
    let mut seen = HashSet::new();
    for record in records {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(Error::MalformedRow {
                line,
                reason: format!("expected 3 fields, found {}", record.len()),
            });
        }
        let id: usize = record[0].parse().map_err(|_| Error::MalformedRow {
            line,
            reason: format!("item_id {:?} is not a non-negative integer", &record[0]),
        })?;
        if !seen.insert(id) {
            return Err(Error::DuplicateItemId { line, id });
        }
        if id != items.len() {
            return Err(Error::NonContiguousItemId {
                line,
                expected: items.len(),
                found: id,
            });
        }
        let category = record[2].parse().map_err(|_| Error::UnknownCategory {
            line,
            label: record[2].to_string(),
        })?;
        items.push(Item {
            id,
            name: record[1].to_string(),
            category,
        });
    }
    ItemCatalog::from_items(items)
}

pub fn load_preferences(path: impl AsRef<Path>, catalog: &ItemCatalog) -> Result<PreferenceMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_preferences(file, catalog)
}

pub fn read_preferences<R: Read>(reader: R, catalog: &ItemCatalog) -> Result<PreferenceMatrix> {
    let m = catalog.len();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = records.next().ok_or(Error::EmptyMatrix)??;
    if header.len() != m + 1 {
        return Err(Error::WidthMismatch {
            line: 1,
            expected: m,
            found: header.len().saturating_sub(1),
        });
    }
    if &header[0] != "user_id" {
        return Err(Error::MalformedRow {
            line: 1,
            reason: "first header column must be user_id".into(),
        });
    }
    let mut labels = Vec::with_capacity(m);
    for (q, item) in catalog.items().iter().enumerate() {
        let found = &header[q + 1];
        if found != item.name && found != q.to_string() {
            return Err(Error::HeaderMismatch {
                column: q + 1,
                column_index: q,
                name: item.name.clone(),
                found: found.to_string(),
            });
        }
        labels.push(found.to_string());
    }

    let mut user_ids = Vec::new();
    let mut cells = Vec::new();
    let mut seen = HashSet::new();
    for record in records {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != m + 1 {
            return Err(Error::WidthMismatch {
                line,
                expected: m,
                found: record.len().saturating_sub(1),
            });
        }
        let user_id = record[0].to_string();
        if !seen.insert(user_id.clone()) {
            return Err(Error::DuplicateUserId { line, user_id });
        }
        for (c, token) in record.iter().skip(1).enumerate() {
            cells.push(match token {
                "0" => 0u8,
                "1" => 1u8,
                _ => {
                    return Err(Error::NonBinaryEntry {
                        line,
                        column: c + 1,
                        token: token.to_string(),
                    })
                }
            });
        }
        user_ids.push(user_id);
    }
    if user_ids.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    let data = Array2::from_shape_vec((user_ids.len(), m), cells)
        .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
    PreferenceMatrix::with_labels(user_ids, labels, data)
}

pub(crate) fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

pub fn write_preferences<W: Write>(prefs: &PreferenceMatrix, w: W) -> Result<()> {
    let mut wtr = csv_writer(w);
    let mut header = vec!["user_id"];
    header.extend(prefs.column_labels.iter().map(String::as_str));
    wtr.write_record(&header)?;
    for (id, row) in prefs.user_ids.iter().zip(prefs.data.rows()) {
        let mut rec = vec![id.as_str()];
        rec.extend(row.iter().map(|&v| if v == 1 { "1" } else { "0" }));
        wtr.write_record(&rec)?;
    }
    wtr.flush().map_err(|e| Error::io("<preferences>", e))?;
    Ok(())
}

/// One row that breaks the selection quotas.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub row: usize,
    pub user_id: String,
    pub expensive: usize,
    pub cheap: usize,
}

impl Violation {
    pub fn total(&self) -> usize {
        self.expensive + self.cheap
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Per-category selection counts of one row.
pub fn category_counts(row: ArrayView1<'_, u8>, catalog: &ItemCatalog) -> (usize, usize) {
    let mut exp = 0;
    let mut cheap = 0;
    for (q, &v) in row.iter().enumerate() {
        if v == 1 {
            match catalog.category(q) {
                Category::Expensive => exp += 1,
                Category::Cheap => cheap += 1,
            }
        }
    }
    (exp, cheap)
}

/// Lists every row whose selection does not match the quotas. Bad rows are
/// data, not errors; only mismatched dimensions fail.
pub fn validate_constraint(
    prefs: &PreferenceMatrix,
    catalog: &ItemCatalog,
    c: &SelectionConstraint,
) -> Result<ValidationReport> {
    if prefs.n_items() != catalog.len() {
        return Err(Error::DimensionMismatch(format!(
            "preferences have {} columns, catalog has {} items",
            prefs.n_items(),
            catalog.len()
        )));
    }
    let violations = prefs
        .data
        .rows()
        .into_iter()
        .enumerate()
        .filter_map(|(row, x)| {
            let (expensive, cheap) = category_counts(x, catalog);
            (expensive != c.expensive_quota || cheap != c.cheap_quota).then(|| Violation {
                row,
                user_id: prefs.user_ids[row].clone(),
                expensive,
                cheap,
            })
        })
        .collect();
    Ok(ValidationReport { violations })
}
