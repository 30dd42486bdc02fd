//! Shared fixtures and independent oracles for the integration tests.
//!
//! Nothing here calls into the library's numeric code; each oracle is a
//! separate, deliberately naive implementation.

#![allow(dead_code)]

use ndarray::Array2;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use prefkit::{Category, ItemCatalog, PreferenceMatrix, SelectionConstraint};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CATALOG_CSV: &str = include_str!("../../../../data/catalog.csv");

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn catalog() -> ItemCatalog {
    prefkit::model::read_catalog(CATALOG_CSV.as_bytes()).unwrap()
}

/// `m` items, the first `expensive` of them expensive.
pub fn split_catalog(m: usize, expensive: usize) -> ItemCatalog {
    ItemCatalog::new((0..m).map(|i| {
        let cat = if i < expensive { Category::Expensive } else { Category::Cheap };
        (format!("item{i}"), cat)
    }))
    .unwrap()
}

pub fn user_ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("u{i}")).collect()
}

/// Survey-valid rows: each user picks the quota of each category uniformly.
pub fn survey(n: usize, catalog: &ItemCatalog, c: &SelectionConstraint, seed: u64) -> PreferenceMatrix {
    let mut r = rng(seed);
    let mut data = Array2::<u8>::zeros((n, catalog.len()));
    for i in 0..n {
        for cat in [Category::Expensive, Category::Cheap] {
            let ids = catalog.ids_in(cat);
            for q in sample(&mut r, ids.len(), c.quota(cat)).iter() {
                data[[i, ids[q]]] = 1;
            }
        }
    }
    PreferenceMatrix::new(user_ids(n), data, catalog).unwrap()
}

pub fn random_binary(n: usize, m: usize, p: f64, r: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_fn((n, m), |_| if r.random_bool(p) { 1.0 } else { 0.0 })
}

pub fn random_real(n: usize, m: usize, lo: f64, hi: f64, r: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_fn((n, m), |_| r.random_range(lo..hi))
}

// ---------------------------------------------------------------------------
// Silhouette: full distance matrix, clusters as explicit member lists.

pub fn silhouette_oracle(data: &Array2<f64>, labels: &[usize], k: usize) -> f64 {
    let n = data.nrows();
    let mut dist = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for q in 0..data.ncols() {
                let d = data[[i, q]] - data[[j, q]];
                s += d * d;
            }
            dist[i][j] = s.sqrt();
        }
    }
    let members: Vec<Vec<usize>> = (0..k)
        .map(|c| (0..n).filter(|&i| labels[i] == c).collect())
        .collect();
    let mut per_cluster = Vec::new();
    for (c, own) in members.iter().enumerate() {
        if own.is_empty() {
            continue;
        }
        let mut total = 0.0;
        for &i in own {
            if own.len() == 1 {
                continue;
            }
            let a = own.iter().filter(|&&j| j != i).map(|&j| dist[i][j]).sum::<f64>() / (own.len() - 1) as f64;
            let mut b = f64::INFINITY;
            for (c2, other) in members.iter().enumerate() {
                if c2 == c || other.is_empty() {
                    continue;
                }
                let mean = other.iter().map(|&j| dist[i][j]).sum::<f64>() / other.len() as f64;
                b = b.min(mean);
            }
            let m = a.max(b);
            if m > 0.0 {
                total += (b - a) / m;
            }
        }
        per_cluster.push(total / own.len() as f64);
    }
    per_cluster.iter().sum::<f64>() / per_cluster.len() as f64
}

// ---------------------------------------------------------------------------
// Eigenvalues of a small integer symmetric matrix: exact characteristic
// polynomial, square-free split, then real-root isolation by bisection.

type Q = BigRational;
/// Coefficients, lowest degree first.
type Poly = Vec<Q>;

fn q(x: i128) -> Q {
    BigRational::from_integer(BigInt::from(x))
}

fn trim(mut p: Poly) -> Poly {
    while p.len() > 1 && p.last().unwrap().is_zero() {
        p.pop();
    }
    p
}

fn deg(p: &Poly) -> usize {
    p.len() - 1
}

fn is_zero(p: &Poly) -> bool {
    p.len() == 1 && p[0].is_zero()
}

fn deriv(p: &Poly) -> Poly {
    if p.len() == 1 {
        return vec![q(0)];
    }
    trim((1..p.len()).map(|i| &p[i] * q(i as i128)).collect())
}

fn divrem(a: &Poly, b: &Poly) -> (Poly, Poly) {
    let mut r = a.clone();
    if deg(a) < deg(b) {
        return (vec![q(0)], r);
    }
    let mut quo = vec![q(0); deg(a) - deg(b) + 1];
    let lead = b.last().unwrap().clone();
    while !is_zero(&r) && r.len() >= b.len() {
        let shift = r.len() - b.len();
        let f = r.last().unwrap() / &lead;
        for (i, bc) in b.iter().enumerate() {
            r[i + shift] -= &f * bc;
        }
        quo[shift] = f;
        r.pop();
        r = trim(if r.is_empty() { vec![q(0)] } else { r });
    }
    (trim(quo), r)
}

fn monic(p: Poly) -> Poly {
    let lead = p.last().unwrap().clone();
    p.into_iter().map(|c| c / &lead).collect()
}

fn gcd(a: &Poly, b: &Poly) -> Poly {
    let (mut a, mut b) = (a.clone(), b.clone());
    while !is_zero(&b) {
        let (_, r) = divrem(&a, &b);
        a = b;
        b = r;
    }
    monic(a)
}

fn sub(a: &Poly, b: &Poly) -> Poly {
    let len = a.len().max(b.len());
    trim((0..len)
        .map(|j| a.get(j).cloned().unwrap_or_else(|| q(0)) - b.get(j).cloned().unwrap_or_else(|| q(0)))
        .collect())
}

/// Square-free factors `(f_i, i)` with `p = prod f_i^i` up to a constant.
fn yun(p: &Poly) -> Vec<(Poly, usize)> {
    let dp = deriv(p);
    let a = gcd(p, &dp);
    let mut b = divrem(p, &a).0;
    let c = divrem(&dp, &a).0;
    let mut d = sub(&c, &deriv(&b));
    let mut out = Vec::new();
    let mut i = 1;
    while deg(&b) > 0 {
        let a = gcd(&b, &d);
        if deg(&a) > 0 {
            out.push((a.clone(), i));
        }
        b = divrem(&b, &a).0;
        let c = divrem(&d, &a).0;
        d = sub(&c, &deriv(&b));
        i += 1;
    }
    out
}

fn to_f64(p: &Poly) -> Vec<f64> {
    p.iter().map(|c| c.to_f64().expect("finite coefficient")).collect()
}

fn eval(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// All real roots of a square-free polynomial, ascending.
fn real_roots(p: &[f64]) -> Vec<f64> {
    let n = p.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![-p[0] / p[1]];
    }
    let bound = 1.0 + p[..n].iter().map(|c| (c / p[n]).abs()).fold(0.0, f64::max);
    let dp: Vec<f64> = (1..=n).map(|i| p[i] * i as f64).collect();
    let mut marks = vec![-bound];
    marks.extend(real_roots(&dp).into_iter().filter(|x| x.abs() < bound));
    marks.push(bound);
    let mut roots = Vec::new();
    for w in marks.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        let (flo, fhi) = (eval(p, lo), eval(p, hi));
        if flo == 0.0 {
            roots.push(lo);
            continue;
        }
        if flo.signum() == fhi.signum() {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let fm = eval(p, mid);
            if fm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if fm.signum() == flo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
    roots
}

/// Characteristic polynomial `det(xI - B)` by Faddeev-LeVerrier.
fn char_poly(b: &[Vec<i128>]) -> Poly {
    let n = b.len();
    let bq: Vec<Vec<Q>> = b.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect();
    let mul = |x: &Vec<Vec<Q>>, y: &Vec<Vec<Q>>| -> Vec<Vec<Q>> {
        (0..n)
            .map(|i| (0..n).map(|j| (0..n).fold(q(0), |s, t| s + &x[i][t] * &y[t][j])).collect())
            .collect()
    };
    // coeffs[k] is the coefficient of x^(n-k)
    let mut coeffs = vec![q(1)];
    let mut m: Vec<Vec<Q>> = vec![vec![q(0); n]; n];
    for k in 1..=n {
        let mut next = mul(&bq, &m);
        for (i, row) in next.iter_mut().enumerate() {
            row[i] += &coeffs[k - 1];
        }
        m = next;
        let bm = mul(&bq, &m);
        let tr = (0..n).fold(q(0), |s, i| s + &bm[i][i]);
        coeffs.push(-tr / q(k as i128));
    }
    coeffs.reverse();
    trim(coeffs)
}

/// Eigenvalues of `A^T A` with multiplicity, descending.
pub fn gram_eigenvalues(a: &[Vec<i64>]) -> Vec<f64> {
    let m = a[0].len();
    let b: Vec<Vec<i128>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| a.iter().map(|row| i128::from(row[i]) * i128::from(row[j])).sum())
                .collect()
        })
        .collect();
    let p = char_poly(&b);
    let mut eig = Vec::new();
    for (f, mult) in yun(&p) {
        for r in real_roots(&to_f64(&f)) {
            eig.extend(std::iter::repeat_n(r, mult));
        }
    }
    eig.sort_by(|x, y| y.partial_cmp(x).unwrap());
    eig
}

/// Singular values predicted by the eigen-oracle (sqrt of the leading
/// `min(n, m)` eigenvalues of `A^T A`).
pub fn oracle_sigma(a: &[Vec<i64>]) -> Vec<f64> {
    let p = a.len().min(a[0].len());
    gram_eigenvalues(a).into_iter().take(p).map(|l| l.max(0.0).sqrt()).collect()
}

// ---------------------------------------------------------------------------
// Small matrix checks.

pub fn frobenius(a: &Array2<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Largest entrywise deviation of `x x^T` from the identity.
pub fn orthonormality_error(x: &Array2<f64>) -> f64 {
    let g = x.dot(&x.t());
    let mut worst: f64 = 0.0;
    for ((i, j), v) in g.indexed_iter() {
        let target = if i == j { 1.0 } else { 0.0 };
        worst = worst.max((v - target).abs());
    }
    worst
}

pub fn hamming(a: &[u8], b: &[u8]) -> u32 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as u32
}
