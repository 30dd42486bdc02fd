//! Dense singular value decomposition by one-sided (Hestenes) Jacobi.
//!
//! Columns of the working matrix are rotated pairwise until every pair is
//! numerically orthogonal; the column norms are then the singular values and
//! the accumulated rotations the right singular vectors. Wide inputs are
//! handled through the transpose.
//!
//! Output is canonicalized so repeated calls are bit-identical and unique
//! whenever the singular values are distinct:
//! * singular values are sorted non-increasing;
//! * for every column of `u`, the entry of largest magnitude (lowest row on
//!   ties) is non-negative, and the matching row of `vt` flips with it;
//! * columns belonging to zero singular values are completed to an
//!   orthonormal basis from the standard basis vectors.
//!
//! A singular value counts as zero when it is at most
//! `max(rows, cols) * eps * ||a||_F`.

use ndarray::{s, Array1, Array2};

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;

#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    /// n x p, orthonormal columns.
    pub u: Array2<f64>,
    /// Length p, non-increasing, non-negative.
    pub sigma: Array1<f64>,
    /// p x m, orthonormal rows.
    pub vt: Array2<f64>,
}

impl SvdFactors {
    pub fn rank_limit(&self) -> usize {
        self.sigma.len()
    }

    pub fn reconstruct(&self) -> Array2<f64> {
        reconstruct(&self.u, &self.sigma, &self.vt)
    }
}

/// Leading `r` singular triplets of a [`SvdFactors`].
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSvd {
    pub u: Array2<f64>,
    pub sigma: Array1<f64>,
    pub vt: Array2<f64>,
}

impl TruncatedSvd {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// Best rank-r approximation of the original matrix.
    pub fn reconstruct(&self) -> Array2<f64> {
        reconstruct(&self.u, &self.sigma, &self.vt)
    }
}

fn reconstruct(u: &Array2<f64>, sigma: &Array1<f64>, vt: &Array2<f64>) -> Array2<f64> {
    let mut us = u.clone();
    for (mut col, &s) in us.columns_mut().into_iter().zip(sigma) {
        col *= s;
    }
    us.dot(vt)
}

pub fn svd(a: &Array2<f64>) -> Result<SvdFactors> {
    let (n, m) = a.dim();
    if n == 0 || m == 0 {
        return Err(Error::DimensionMismatch(format!("cannot factor a {n} x {m} matrix")));
    }
    if let Some(((row, col), _)) = a.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite { row, col });
    }

    let (mut u, sigma, mut vt) = if n >= m {
        let (u, sigma, v) = jacobi_tall(a)?;
        (u, sigma, v.reversed_axes())
    } else {
        // a^T = U' S V'^T  =>  a = V' S U'^T
        let (u_t, sigma, v_t) = jacobi_tall(&a.t().to_owned())?;
        (v_t, sigma, u_t.reversed_axes())
    };

    for j in 0..sigma.len() {
        let col = u.column(j);
        let mut best = 0;
        for i in 1..col.len() {
            if col[i].abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            u.column_mut(j).mapv_inplace(|x| -x);
            vt.row_mut(j).mapv_inplace(|x| -x);
        }
    }

    Ok(SvdFactors { u, sigma, vt })
}

/// One-sided Jacobi on a matrix with at least as many rows as columns.
/// Returns `(u, sigma, v)` with u: r x c, v: c x c.
fn jacobi_tall(b: &Array2<f64>) -> Result<(Array2<f64>, Array1<f64>, Array2<f64>)> {
    let (rows, cols) = b.dim();
    let mut w: Vec<Vec<f64>> = b.columns().into_iter().map(|c| c.to_vec()).collect();
    let mut v: Vec<Vec<f64>> = (0..cols)
        .map(|j| {
            let mut e = vec![0.0; cols];
            e[j] = 1.0;
            e
        })
        .collect();
    let tol = rows as f64 * f64::EPSILON;
    // Columns below this norm are numerically zero; rotating them only
    // shuffles rounding noise and never settles.
    let frob = w.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    let negligible = frob * rows.max(cols) as f64 * f64::EPSILON;
    let negligible_sq = negligible * negligible;

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let (alpha, beta, gamma) = {
                    let (wp, wq) = (&w[p], &w[q]);
                    let mut alpha = 0.0;
                    let mut beta = 0.0;
                    let mut gamma = 0.0;
                    for (x, y) in wp.iter().zip(wq) {
                        alpha += x * x;
                        beta += y * y;
                        gamma += x * y;
                    }
                    (alpha, beta, gamma)
                };
                if gamma == 0.0
                    || alpha <= negligible_sq
                    || beta <= negligible_sq
                    || gamma.abs() <= tol * (alpha * beta).sqrt()
                {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SvdNoConvergence { sweeps: MAX_SWEEPS });
    }

    let norms: Vec<f64> = w.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));


    let mut u = Array2::<f64>::zeros((rows, cols));
    let mut sigma = Array1::<f64>::zeros(cols);
    let mut vmat = Array2::<f64>::zeros((cols, cols));
    let mut filler = Vec::new();
    for (k, &j) in order.iter().enumerate() {
        for (i, &x) in v[j].iter().enumerate() {
            vmat[[i, k]] = x;
        }
        if norms[j] > negligible {
            sigma[k] = norms[j];
            for (i, &x) in w[j].iter().enumerate() {
                u[[i, k]] = x / norms[j];
            }
        } else {
            filler.push(k);
        }
    }
    complete_basis(&mut u, &filler);
    Ok((u, sigma, vmat))
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = cols.split_at_mut(q);
    let (cp, cq) = (&mut head[p], &mut tail[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Fills the listed columns of `u` with unit vectors orthogonal to all other
/// columns. Each new column starts from the standard basis vector with the
/// largest residual after projection (lowest index on ties) and is
/// orthogonalized twice.
fn complete_basis(u: &mut Array2<f64>, missing: &[usize]) {
    let rows = u.nrows();
    let mut filled: Vec<bool> = vec![true; u.ncols()];
    for &k in missing {
        filled[k] = false;
    }
    for &k in missing {
        let basis: Vec<usize> = (0..u.ncols()).filter(|&j| filled[j]).collect();
        let mut best: Option<(f64, Array1<f64>)> = None;
        for e in 0..rows {
            let mut x = Array1::<f64>::zeros(rows);
            x[e] = 1.0;
            for _ in 0..2 {
                for &j in &basis {
                    let col = u.column(j);
                    let d = col.dot(&x);
                    x.scaled_add(-d, &col);
                }
            }
            let norm = x.dot(&x).sqrt();
            if best.as_ref().is_none_or(|(bn, _)| norm > *bn) {
                best = Some((norm, x));
            }
        }
        let (norm, x) = best.expect("rows > 0");
        u.column_mut(k).assign(&(x / norm));
        filled[k] = true;
    }
}

pub fn truncate(f: &SvdFactors, r: usize) -> Result<TruncatedSvd> {
    let p = f.rank_limit();
    if r == 0 || r > p {
        return Err(Error::RankOutOfRange { rank: r, max: p });
    }
    Ok(TruncatedSvd {
        u: f.u.slice(s![.., ..r]).to_owned(),
        sigma: f.sigma.slice(s![..r]).to_owned(),
        vt: f.vt.slice(s![..r, ..]).to_owned(),
    })
}

/// `(rank, sigma)` pairs, rank starting at 1.
pub fn scree(f: &SvdFactors) -> Vec<(usize, f64)> {
    f.sigma.iter().enumerate().map(|(i, &s)| (i + 1, s)).collect()
}
