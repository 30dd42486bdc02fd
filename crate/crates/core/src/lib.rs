//! Preference clustering and kit design for binary choice surveys.
//!
//! A survey asks each respondent to pick a fixed number of items from a
//! catalog split into an expensive and a cheap category. The crate turns the
//! resulting 0/1 matrix into a handful of fixed-size kits through two routes:
//!
//! * damped K-means over user rows, scored by a macro-averaged silhouette
//!   ([`kmeans`], [`silhouette`]);
//! * sign patterns of the leading singular vectors ([`svd`], [`signs`]),
//!   with one kit per cluster built by item-frequency ranking ([`kits`]).
//!
//! Users can then be moved to the kit that mismatches their own selection
//! least, with per-kit losses reported before and after ([`assign`]).

pub mod assign;
pub mod cli;
pub mod error;
pub mod kits;
pub mod kmeans;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod signs;
pub mod silhouette;
pub mod svd;
pub mod synth;

pub use error::{Error, Result};
pub use model::{Category, Item, ItemCatalog, PreferenceMatrix, SelectionConstraint};
