//! Compressed-sparse-row symmetric matrices and a Jacobi-preconditioned
//! conjugate-gradient solver.
//!
//! The assembled operators are symmetric positive definite once Dirichlet
//! rows are removed, so CG with a diagonal preconditioner is sufficient;
//! everything runs sequentially in a fixed order and is deterministic for
//! fixed inputs.

use crate::error::{Error, Result};

/// Symmetric sparse matrix in CSR layout. Both triangles are stored.
#[derive(Debug, Clone)]
pub struct SparseSymmetricMatrix {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymmetricMatrix {
    /// Builds from (row, col, value) triplets; duplicate entries are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        // Counting sort by row, then an insertion sort of each (short) row.
        let mut counts = vec![0usize; n + 1];
        for &(i, _, _) in triplets {
            debug_assert!(i < n);
            counts[i + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0f64; triplets.len()];
        let mut cursor = counts.clone();
        for &(i, j, v) in triplets {
            let at = cursor[i];
            cols[at] = j;
            vals[at] = v;
            cursor[i] += 1;
        }

        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for i in 0..n {
            let lo = counts[i];
            let hi = counts[i + 1];
            let row = &mut cols[lo..hi];
            let val = &mut vals[lo..hi];
            // insertion sort keeping values aligned
            for k in 1..row.len() {
                let mut p = k;
                while p > 0 && row[p - 1] > row[p] {
                    row.swap(p - 1, p);
                    val.swap(p - 1, p);
                    p -= 1;
                }
            }
            let mut k = 0;
            while k < row.len() {
                let j = row[k];
                let mut sum = val[k];
                k += 1;
                while k < row.len() && row[k] == j {
                    sum += val[k];
                    k += 1;
                }
                col_indices.push(j);
                values.push(sum);
            }
            row_offsets.push(col_indices.len());
        }

        SparseSymmetricMatrix {
            n,
            row_offsets,
            col_indices,
            values,
        }
    }

    /// Identity of dimension `n`.
    pub fn identity(n: usize) -> Self {
        SparseSymmetricMatrix {
            n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let lo = self.row_offsets[i];
        let hi = self.row_offsets[i + 1];
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    /// Entry (i, j), zero when not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// Position of entry (i, j) in the value array, if present.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let lo = self.row_offsets[i];
        let (cols, _) = self.row(i);
        cols.binary_search(&j).ok().map(|k| lo + k)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// y = A x.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let lo = self.row_offsets[i];
            let hi = self.row_offsets[i + 1];
            let mut acc = 0.0;
            for k in lo..hi {
                acc += self.values[k] * x[self.col_indices[k]];
            }
            y[i] = acc;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// Entrywise sum; the result's pattern is the union of both patterns.
    pub fn add(&self, other: &SparseSymmetricMatrix) -> Result<SparseSymmetricMatrix> {
        if self.n != other.n {
            return Err(Error::invalid(format!(
                "dimension mismatch in matrix add: {} vs {}",
                self.n, other.n
            )));
        }
        let mut row_offsets = Vec::with_capacity(self.n + 1);
        let mut col_indices = Vec::with_capacity(self.nnz().max(other.nnz()));
        let mut values = Vec::with_capacity(col_indices.capacity());
        row_offsets.push(0);
        for i in 0..self.n {
            let (ca, va) = self.row(i);
            let (cb, vb) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ca.len() || q < cb.len() {
                let ja = ca.get(p).copied().unwrap_or(usize::MAX);
                let jb = cb.get(q).copied().unwrap_or(usize::MAX);
                if ja == jb {
                    col_indices.push(ja);
                    values.push(va[p] + vb[q]);
                    p += 1;
                    q += 1;
                } else if ja < jb {
                    col_indices.push(ja);
                    values.push(va[p]);
                    p += 1;
                } else {
                    col_indices.push(jb);
                    values.push(vb[q]);
                    q += 1;
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(SparseSymmetricMatrix {
            n: self.n,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Restricts the matrix to the rows/columns flagged in `keep`,
    /// returning the submatrix and the kept indices in ascending order.
    pub fn restrict(&self, keep: &[bool]) -> (SparseSymmetricMatrix, Vec<usize>) {
        assert_eq!(keep.len(), self.n);
        let kept: Vec<usize> = (0..self.n).filter(|&i| keep[i]).collect();
        let mut new_index = vec![usize::MAX; self.n];
        for (new, &old) in kept.iter().enumerate() {
            new_index[old] = new;
        }
        let mut row_offsets = Vec::with_capacity(kept.len() + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for &old_i in &kept {
            let (cols, vals) = self.row(old_i);
            for (k, &j) in cols.iter().enumerate() {
                if keep[j] {
                    col_indices.push(new_index[j]);
                    values.push(vals[k]);
                }
            }
            row_offsets.push(col_indices.len());
        }
        (
            SparseSymmetricMatrix {
                n: kept.len(),
                row_offsets,
                col_indices,
                values,
            },
            kept,
        )
    }

    /// Largest asymmetry |A(i,j) − A(j,i)| over stored entries.
    pub fn symmetry_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (k, &j) in cols.iter().enumerate() {
                worst = worst.max((vals[k] - self.get(j, i)).abs());
            }
        }
        worst
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves A x = b for symmetric positive definite `A` with conjugate
/// gradients and a diagonal (Jacobi) preconditioner, starting from zero.
///
/// On success the true residual satisfies `‖Ax − b‖ ≤ tol·‖b‖`. The
/// iteration cap is `20·n`; running past it reports the final residual.
pub fn solve_spd(a: &SparseSymmetricMatrix, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    solve_spd_from(a, b, None, tol)
}

/// As [`solve_spd`] but warm-started from `x0` when provided.
pub fn solve_spd_from(
    a: &SparseSymmetricMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
) -> Result<Vec<f64>> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::invalid(format!(
            "rhs length {} does not match matrix dimension {n}",
            b.len()
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("solver tolerance must be positive, got {tol}")));
    }
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok(vec![0.0; n]);
    }

    let diag = a.diagonal();
    if diag.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::invalid(
            "matrix has a non-positive diagonal entry; not SPD".to_string(),
        ));
    }
    let inv_diag: Vec<f64> = diag.iter().map(|&d| 1.0 / d).collect();

    let mut x = match x0 {
        Some(x0) if x0.len() == n => x0.to_vec(),
        Some(x0) => {
            return Err(Error::invalid(format!(
                "initial guess length {} does not match dimension {n}",
                x0.len()
            )))
        }
        None => vec![0.0; n],
    };

    let mut r = vec![0.0; n];
    a.matvec(&x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];

    let cap = 20 * n;
    let target = tol * b_norm;
    let mut final_res = norm(&r);
    if final_res <= target {
        return Ok(x);
    }

    for _ in 0..cap {
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::invalid(
                "conjugate gradients hit a non-positive curvature direction; matrix not SPD"
                    .to_string(),
            ));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let res = norm(&r);
        final_res = res;
        if res <= target {
            // Recurrence residuals drift; confirm against the true residual
            // and keep iterating on a refreshed residual if it disagrees.
            let mut true_r = vec![0.0; n];
            a.matvec(&x, &mut true_r);
            for i in 0..n {
                true_r[i] = b[i] - true_r[i];
            }
            let true_norm = norm(&true_r);
            if true_norm <= target {
                return Ok(x);
            }
            r = true_r;
            final_res = true_norm;
            z = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
            p = z.clone();
            rz = dot(&r, &z);
            continue;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }

    Err(Error::SolverFailure {
        residual: final_res / b_norm,
        iterations: cap,
    })
}
