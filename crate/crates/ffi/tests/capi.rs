use std::ffi::{CStr, CString};
use std::ptr;

use prefkit_ffi::*;

const CATALOG: &str = include_str!("../../../data/catalog.csv");

fn last_error() -> String {
    let p = pk_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

struct Session {
    _dir: tempfile::TempDir,
    catalog: *mut PkCatalog,
    prefs: *mut PkPreferences,
}

impl Drop for Session {
    fn drop(&mut self) {
        unsafe {
            pk_prefs_free(self.prefs);
            pk_catalog_free(self.catalog);
        }
    }
}

/// Two groups of users: the first ten take kit A, the rest kit B, with one
/// user of each group swapping a single cheap item.
fn rows() -> Vec<u8> {
    let a = [0, 1, 2, 3, 4, 5, 10, 11, 12, 13];
    let b = [4, 5, 6, 7, 8, 9, 16, 17, 18, 19];
    let mut data = vec![0u8; 20 * 20];
    for i in 0..20 {
        let kit = if i < 10 { &a } else { &b };
        for &q in kit {
            data[i * 20 + q] = 1;
        }
    }
    // user 0: 13 -> 14, user 10: 19 -> 15
    data[13] = 0;
    data[14] = 1;
    data[10 * 20 + 19] = 0;
    data[10 * 20 + 15] = 1;
    data
}

fn session() -> Session {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("catalog.csv");
    std::fs::write(&path, CATALOG).unwrap();
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    let mut catalog = ptr::null_mut();
    let mut prefs = ptr::null_mut();
    unsafe {
        assert_eq!(pk_catalog_load(cpath.as_ptr(), &mut catalog), PkStatus::Ok);
        assert_eq!(pk_catalog_len(catalog), 20);
        let data = rows();
        assert_eq!(pk_prefs_from_rows(catalog, data.as_ptr(), 20, 20, &mut prefs), PkStatus::Ok);
    }
    Session { _dir: dir, catalog, prefs }
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(pk_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn end_to_end_through_the_c_abi() {
    let s = session();
    unsafe {
        let (mut n, mut m) = (0, 0);
        assert_eq!(pk_prefs_dims(s.prefs, &mut n, &mut m), PkStatus::Ok);
        assert_eq!((n, m), (20, 20));

        let mut violations = 99;
        assert_eq!(pk_validate(s.prefs, s.catalog, 6, 4, &mut violations), PkStatus::Ok);
        assert_eq!(violations, 0);

        let mut f = ptr::null_mut();
        assert_eq!(pk_svd(s.prefs, &mut f), PkStatus::Ok);
        assert_eq!(pk_svd_len(f), 20);
        let mut sigma = vec![0.0; 20];
        assert_eq!(pk_svd_sigma(f, sigma.as_mut_ptr(), sigma.len()), PkStatus::Ok);
        assert!(sigma.windows(2).all(|w| w[0] >= w[1]));

        let mut labels = vec![0usize; 20];
        let mut n_clusters = 0;
        assert_eq!(
            pk_sign_clusters(f, 1, PkAxis::Users, labels.as_mut_ptr(), 20, &mut n_clusters),
            PkStatus::Ok
        );
        assert_eq!(n_clusters, 1);
        let mut item_labels = vec![0usize; 20];
        assert_eq!(
            pk_sign_clusters(f, 2, PkAxis::Items, item_labels.as_mut_ptr(), 20, &mut n_clusters),
            PkStatus::Ok
        );
        assert!((1..=4).contains(&n_clusters));
        pk_svd_free(f);

        let mut sil = f64::NAN;
        assert_eq!(
            pk_kmeans(s.prefs, 2, 1.0, 100, 7, labels.as_mut_ptr(), 20, &mut sil),
            PkStatus::Ok
        );
        assert!(labels[..10].iter().all(|&l| l == labels[0]));
        assert!(labels[10..].iter().all(|&l| l == labels[10]));
        assert_ne!(labels[0], labels[10]);
        assert!(sil > 0.5 && sil <= 1.0, "{sil}");

        let mut kits = ptr::null_mut();
        assert_eq!(
            pk_design_kits(s.prefs, s.catalog, labels.as_ptr(), 20, 2, 6, 4, false, &mut kits),
            PkStatus::Ok
        );
        assert_eq!(pk_kits_count(kits), 2);
        let (mut id, mut len) = (0, 0);
        let mut items = [0usize; 10];
        assert_eq!(pk_kit_items(kits, 0, &mut id, items.as_mut_ptr(), 10, &mut len), PkStatus::Ok);
        assert_eq!(len, 10);
        let a = [0, 1, 2, 3, 4, 5, 10, 11, 12, 13];
        let b = [4, 5, 6, 7, 8, 9, 16, 17, 18, 19];
        assert_eq!(items, if id == labels[0] { a } else { b });

        // start everyone on kit position 0 and let reassignment fix it
        let initial = [0usize; 20];
        let mut after = vec![9usize; 20];
        let mut before_loss = vec![0u32; 20];
        let mut after_loss = vec![0u32; 20];
        assert_eq!(
            pk_reassign(
                s.prefs,
                kits,
                initial.as_ptr(),
                20,
                after.as_mut_ptr(),
                before_loss.as_mut_ptr(),
                after_loss.as_mut_ptr()
            ),
            PkStatus::Ok
        );
        assert!(after_loss.iter().zip(&before_loss).all(|(a, b)| a <= b));
        assert_eq!(after_loss.iter().sum::<u32>(), 4);
        assert!(after[..10].iter().all(|&p| p == after[0]));
        assert!(after[10..].iter().all(|&p| p == after[10]));
        pk_kits_free(kits);
    }
}

#[test]
fn null_pointers_are_reported() {
    let s = session();
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(pk_catalog_load(ptr::null(), &mut out), PkStatus::NullPointer);
        assert!(last_error().contains("null"));
        assert_eq!(pk_svd(ptr::null(), &mut out.cast()), PkStatus::NullPointer);
        assert_eq!(pk_svd(s.prefs, ptr::null_mut()), PkStatus::NullPointer);
        assert_eq!(pk_prefs_dims(s.prefs, ptr::null_mut(), ptr::null_mut()), PkStatus::NullPointer);
        assert_eq!(pk_catalog_len(ptr::null()), 0);
        assert_eq!(pk_kits_count(ptr::null()), 0);
        // freeing NULL is a no-op
        pk_catalog_free(ptr::null_mut());
        pk_prefs_free(ptr::null_mut());
        pk_svd_free(ptr::null_mut());
        pk_kits_free(ptr::null_mut());
    }
}

#[test]
fn short_buffers_are_not_written() {
    let s = session();
    unsafe {
        let mut f = ptr::null_mut();
        assert_eq!(pk_svd(s.prefs, &mut f), PkStatus::Ok);
        let mut sigma = [-1.0; 5];
        assert_eq!(pk_svd_sigma(f, sigma.as_mut_ptr(), 5), PkStatus::BufferTooSmall);
        assert_eq!(sigma, [-1.0; 5]);
        assert!(last_error().contains("20"));
        pk_svd_free(f);

        let mut labels = [7usize; 20];
        let initial = [0usize; 20];
        let mut kits = ptr::null_mut();
        assert_eq!(
            pk_design_kits(s.prefs, s.catalog, initial.as_ptr(), 20, 1, 6, 4, true, &mut kits),
            PkStatus::Ok
        );
        let mut loss = [0u32; 20];
        assert_eq!(
            pk_reassign(s.prefs, kits, initial.as_ptr(), 20, labels.as_mut_ptr(), loss.as_mut_ptr(), ptr::null_mut()),
            PkStatus::NullPointer
        );
        assert_eq!(labels, [7; 20]);
        pk_kits_free(kits);
    }
}

#[test]
fn bad_arguments_map_to_status_codes() {
    let s = session();
    unsafe {
        let mut labels = [0usize; 20];
        assert_eq!(
            pk_kmeans(s.prefs, 0, 0.3, 100, 1, labels.as_mut_ptr(), 20, ptr::null_mut()),
            PkStatus::InvalidArgument
        );
        assert_eq!(
            pk_kmeans(s.prefs, 21, 0.3, 100, 1, labels.as_mut_ptr(), 20, ptr::null_mut()),
            PkStatus::InvalidArgument
        );
        let mut f = ptr::null_mut();
        pk_svd(s.prefs, &mut f);
        let mut n = 0;
        assert_eq!(
            pk_sign_clusters(f, 0, PkAxis::Users, labels.as_mut_ptr(), 20, &mut n),
            PkStatus::InvalidArgument
        );
        assert!(last_error().contains('0'));
        pk_svd_free(f);

        let mut kits = ptr::null_mut();
        assert_eq!(
            pk_design_kits(s.prefs, s.catalog, labels.as_ptr(), 20, 0, 6, 4, false, &mut kits),
            PkStatus::InvalidArgument
        );

        let missing = CString::new("/definitely/not/here.csv").unwrap();
        let mut cat = ptr::null_mut();
        assert_eq!(pk_catalog_load(missing.as_ptr(), &mut cat), PkStatus::Io);
        assert!(cat.is_null());

        let bad = [2u8; 400];
        let mut p = ptr::null_mut();
        assert_eq!(pk_prefs_from_rows(s.catalog, bad.as_ptr(), 20, 20, &mut p), PkStatus::Parse);
        assert_eq!(pk_prefs_from_rows(s.catalog, bad.as_ptr(), 20, 19, &mut p), PkStatus::InvalidArgument);
    }
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/prefkit.h");
    for name in [
        "pk_last_error",
        "pk_version",
        "pk_catalog_load",
        "pk_catalog_len",
        "pk_catalog_free",
        "pk_prefs_load",
        "pk_prefs_from_rows",
        "pk_prefs_dims",
        "pk_prefs_free",
        "pk_validate",
        "pk_svd",
        "pk_svd_len",
        "pk_svd_sigma",
        "pk_svd_free",
        "pk_sign_clusters",
        "pk_kmeans",
        "pk_design_kits",
        "pk_kits_count",
        "pk_kit_items",
        "pk_kits_free",
        "pk_reassign",
        "PK_STATUS_BUFFER_TOO_SMALL",
        "PK_AXIS_ITEMS",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

#[test]
fn header_parses_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/prefkit.h");
    let Ok(out) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", header])
        .output()
    else {
        eprintln!("no C compiler on PATH; skipping");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
