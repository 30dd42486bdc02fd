//! C ABI over the `prefkit` library.
//!
//! Objects cross the boundary as opaque handles that the caller frees with
//! the matching `pk_*_free`. Every fallible call returns a [`PkStatus`];
//! on failure, [`pk_last_error`] describes what went wrong on the calling
//! thread. Output arrays are caller-allocated and paired with a capacity;
//! a short buffer yields `PK_STATUS_BUFFER_TOO_SMALL` without writing.
//!
//! The header `include/prefkit.h` is generated by cbindgen at build time.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ndarray::Array2;
use prefkit::assign::{reassign, Assignment};
use prefkit::kits::{clusters_from_labels, design_all, Kit};
use prefkit::kmeans::{run_kmeans, KMeansConfig};
use prefkit::model::{load_catalog, load_preferences, validate_constraint};
use prefkit::signs::{sign_clusters, Axis};
use prefkit::silhouette::silhouette;
use prefkit::svd::{svd, truncate, SvdFactors};
use prefkit::{Error, ItemCatalog, PreferenceMatrix, SelectionConstraint};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Numeric = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PkAxis {
    Users = 0,
    Items = 1,
}

pub struct PkCatalog(ItemCatalog);
pub struct PkPreferences(PreferenceMatrix);
pub struct PkSvd(SvdFactors);
pub struct PkKits(Vec<Kit>);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

struct Fail(PkStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io { .. } | Error::OutputExists(_) => PkStatus::Io,
            Error::Csv(_)
            | Error::MalformedRow { .. }
            | Error::DuplicateItemId { .. }
            | Error::NonContiguousItemId { .. }
            | Error::UnknownCategory { .. }
            | Error::HeaderMismatch { .. }
            | Error::WidthMismatch { .. }
            | Error::NonBinaryEntry { .. }
            | Error::DuplicateUserId { .. }
            | Error::EmptyMatrix
            | Error::EmptyCatalog
            | Error::EmptyCategory(_) => PkStatus::Parse,
            Error::NonFinite { .. } | Error::SvdNoConvergence { .. } => PkStatus::Numeric,
            _ => PkStatus::InvalidArgument,
        };
        Fail(status, e.to_string())
    }
}

fn null() -> Fail {
    Fail(PkStatus::NullPointer, "null pointer argument".into())
}

fn short(needed: usize, cap: usize) -> Fail {
    Fail(
        PkStatus::BufferTooSmall,
        format!("buffer holds {cap} elements, {needed} needed"),
    )
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PkStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PkStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(null)
}

unsafe fn path_arg(p: *const c_char) -> Result<String, Fail> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| Fail(PkStatus::InvalidArgument, "path is not valid UTF-8".into()))
}

unsafe fn out_slice<'a, T>(p: *mut T, cap: usize, needed: usize) -> Result<&'a mut [T], Fail> {
    if p.is_null() {
        return Err(null());
    }
    if cap < needed {
        return Err(short(needed, cap));
    }
    Ok(std::slice::from_raw_parts_mut(p, needed))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null());
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pk_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Static NUL-terminated version string.
#[no_mangle]
pub extern "C" fn pk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub unsafe extern "C" fn pk_catalog_load(path: *const c_char, out: *mut *mut PkCatalog) -> PkStatus {
    guard(|| {
        let path = path_arg(path)?;
        store(out, PkCatalog(load_catalog(path)?))
    })
}

#[no_mangle]
pub unsafe extern "C" fn pk_catalog_len(catalog: *const PkCatalog) -> usize {
    catalog.as_ref().map_or(0, |c| c.0.len())
}

#[no_mangle]
pub unsafe extern "C" fn pk_catalog_free(catalog: *mut PkCatalog) {
    if !catalog.is_null() {
        drop(Box::from_raw(catalog));
    }
}

#[no_mangle]
pub unsafe extern "C" fn pk_prefs_load(
    path: *const c_char,
    catalog: *const PkCatalog,
    out: *mut *mut PkPreferences,
) -> PkStatus {
    guard(|| {
        let path = path_arg(path)?;
        let catalog = as_ref(catalog)?;
        store(out, PkPreferences(load_preferences(path, &catalog.0)?))
    })
}

/// Builds a matrix from `n_users * n_items` row-major 0/1 bytes. Users are
/// named `u0`, `u1`, ...
#[no_mangle]
pub unsafe extern "C" fn pk_prefs_from_rows(
    catalog: *const PkCatalog,
    data: *const u8,
    n_users: usize,
    n_items: usize,
    out: *mut *mut PkPreferences,
) -> PkStatus {
    guard(|| {
        let catalog = as_ref(catalog)?;
        if data.is_null() {
            return Err(null());
        }
        if n_items != catalog.0.len() {
            return Err(Fail(
                PkStatus::InvalidArgument,
                format!("{n_items} columns for a catalog of {}", catalog.0.len()),
            ));
        }
        let cells = std::slice::from_raw_parts(data, n_users * n_items).to_vec();
        let matrix = Array2::from_shape_vec((n_users, n_items), cells)
            .map_err(|e| Fail(PkStatus::InvalidArgument, e.to_string()))?;
        let ids = (0..n_users).map(|i| format!("u{i}")).collect();
        store(out, PkPreferences(PreferenceMatrix::new(ids, matrix, &catalog.0)?))
    })
}

#[no_mangle]
pub unsafe extern "C" fn pk_prefs_dims(prefs: *const PkPreferences, n_users: *mut usize, n_items: *mut usize) -> PkStatus {
    guard(|| {
        let prefs = as_ref(prefs)?;
        if n_users.is_null() || n_items.is_null() {
            return Err(null());
        }
        *n_users = prefs.0.n_users();
        *n_items = prefs.0.n_items();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pk_prefs_free(prefs: *mut PkPreferences) {
    if !prefs.is_null() {
        drop(Box::from_raw(prefs));
    }
}

/// Counts rows that break the quotas; writes the count to `violations`.
#[no_mangle]
pub unsafe extern "C" fn pk_validate(
    prefs: *const PkPreferences,
    catalog: *const PkCatalog,
    expensive_quota: usize,
    cheap_quota: usize,
    violations: *mut usize,
) -> PkStatus {
    guard(|| {
        let (prefs, catalog) = (as_ref(prefs)?, as_ref(catalog)?);
        if violations.is_null() {
            return Err(null());
        }
        let c = SelectionConstraint::new(expensive_quota, cheap_quota);
        c.check(&catalog.0)?;
        *violations = validate_constraint(&prefs.0, &catalog.0, &c)?.violations.len();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pk_svd(prefs: *const PkPreferences, out: *mut *mut PkSvd) -> PkStatus {
    guard(|| {
        let prefs = as_ref(prefs)?;
        store(out, PkSvd(svd(&prefs.0.to_f64())?))
    })
}

/// Number of singular values, min(n_users, n_items).
#[no_mangle]
pub unsafe extern "C" fn pk_svd_len(f: *const PkSvd) -> usize {
    f.as_ref().map_or(0, |f| f.0.rank_limit())
}

#[no_mangle]
pub unsafe extern "C" fn pk_svd_sigma(f: *const PkSvd, out: *mut f64, cap: usize) -> PkStatus {
    guard(|| {
        let f = as_ref(f)?;
        let dst = out_slice(out, cap, f.0.rank_limit())?;
        dst.copy_from_slice(f.0.sigma.as_slice().expect("contiguous"));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pk_svd_free(f: *mut PkSvd) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Sign-pattern cluster label per user or item at truncation rank `rank`.
#[no_mangle]
pub unsafe extern "C" fn pk_sign_clusters(
    f: *const PkSvd,
    rank: usize,
    axis: PkAxis,
    labels: *mut usize,
    cap: usize,
    n_clusters: *mut usize,
) -> PkStatus {
    guard(|| {
        let f = as_ref(f)?;
        let t = truncate(&f.0, rank)?;
        let axis = match axis {
            PkAxis::Users => Axis::Users,
            PkAxis::Items => Axis::Items,
        };
        let c = sign_clusters(&t, axis);
        if n_clusters.is_null() {
            return Err(null());
        }
        out_slice(labels, cap, c.labels.len())?.copy_from_slice(&c.labels);
        *n_clusters = c.len();
        Ok(())
    })
}

/// Damped K-means. Writes a label per user; when `silhouette` is non-NULL
/// also the macro-averaged silhouette.
#[no_mangle]
pub unsafe extern "C" fn pk_kmeans(
    prefs: *const PkPreferences,
    k: usize,
    lambda: f64,
    max_iters: usize,
    seed: u64,
    labels: *mut usize,
    cap: usize,
    silhouette_out: *mut f64,
) -> PkStatus {
    guard(|| {
        let prefs = as_ref(prefs)?;
        let dst = out_slice(labels, cap, prefs.0.n_users())?;
        let config = KMeansConfig::new(k, seed).with_lambda(lambda).with_max_iters(max_iters);
        let run = run_kmeans(&prefs.0, &config)?;
        if !silhouette_out.is_null() {
            *silhouette_out = silhouette(prefs.0.to_f64().view(), &run.idx, k)?.macro_average;
        }
        dst.copy_from_slice(&run.idx);
        Ok(())
    })
}

/// One kit per non-empty cluster, where `labels[i] < n_clusters` is the
/// cluster of user i. Kit ids are cluster ids.
#[no_mangle]
pub unsafe extern "C" fn pk_design_kits(
    prefs: *const PkPreferences,
    catalog: *const PkCatalog,
    labels: *const usize,
    n_labels: usize,
    n_clusters: usize,
    expensive_quota: usize,
    cheap_quota: usize,
    constrained: bool,
    out: *mut *mut PkKits,
) -> PkStatus {
    guard(|| {
        let (prefs, catalog) = (as_ref(prefs)?, as_ref(catalog)?);
        if labels.is_null() {
            return Err(null());
        }
        let labels = std::slice::from_raw_parts(labels, n_labels);
        if let Some(&l) = labels.iter().find(|&&l| l >= n_clusters) {
            return Err(Fail(PkStatus::InvalidArgument, format!("label {l} >= n_clusters")));
        }
        let c = SelectionConstraint::new(expensive_quota, cheap_quota);
        let kits = design_all(&prefs.0, &clusters_from_labels(labels, n_clusters), &catalog.0, &c, constrained)?;
        store(out, PkKits(kits))
    })
}

#[no_mangle]
pub unsafe extern "C" fn pk_kits_count(kits: *const PkKits) -> usize {
    kits.as_ref().map_or(0, |k| k.0.len())
}

/// Id and items of the kit at position `index`; `len` receives the item count.
#[no_mangle]
pub unsafe extern "C" fn pk_kit_items(
    kits: *const PkKits,
    index: usize,
    kit_id: *mut usize,
    items: *mut usize,
    cap: usize,
    len: *mut usize,
) -> PkStatus {
    guard(|| {
        let kits = as_ref(kits)?;
        let kit = kits
            .0
            .get(index)
            .ok_or_else(|| Fail(PkStatus::InvalidArgument, format!("no kit at position {index}")))?;
        if kit_id.is_null() || len.is_null() {
            return Err(null());
        }
        out_slice(items, cap, kit.len())?.copy_from_slice(kit.items());
        *kit_id = kit.id;
        *len = kit.len();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pk_kits_free(kits: *mut PkKits) {
    if !kits.is_null() {
        drop(Box::from_raw(kits));
    }
}

/// Moves each user to its least-mismatched kit. `initial[i]` and
/// `after[i]` are kit positions; the loss arrays receive per-user Hamming
/// losses before and after.
#[no_mangle]
pub unsafe extern "C" fn pk_reassign(
    prefs: *const PkPreferences,
    kits: *const PkKits,
    initial: *const usize,
    n: usize,
    after: *mut usize,
    loss_before: *mut u32,
    loss_after: *mut u32,
) -> PkStatus {
    guard(|| {
        let (prefs, kits) = (as_ref(prefs)?, as_ref(kits)?);
        if initial.is_null() {
            return Err(null());
        }
        if n != prefs.0.n_users() {
            return Err(Fail(
                PkStatus::InvalidArgument,
                format!("{n} entries for {} users", prefs.0.n_users()),
            ));
        }
        let (after, loss_before, loss_after) =
            (out_slice(after, n, n)?, out_slice(loss_before, n, n)?, out_slice(loss_after, n, n)?);
        let init = Assignment::initial(std::slice::from_raw_parts(initial, n).to_vec());
        let (moved, before, after_rep) = reassign(&prefs.0, &kits.0, &init)?;
        after.copy_from_slice(&moved.kit_of_user);
        loss_before.copy_from_slice(&before.per_user_loss);
        loss_after.copy_from_slice(&after_rep.per_user_loss);
        Ok(())
    })
}
