//! Sparse symmetric positive definite solves for the Newton systems.

use crate::exec::Exec;

/// Compressed sparse row matrix with a fixed sparsity pattern.
#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
    diag: Vec<usize>,
}

impl Csr {
    /// Pattern from per-row sorted column lists; every row must contain its
    /// diagonal.
    pub fn from_pattern(rows: Vec<Vec<usize>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut diag = Vec::with_capacity(n);
        row_ptr.push(0);
        for (i, mut r) in rows.into_iter().enumerate() {
            r.sort_unstable();
            r.dedup();
            let d = r.binary_search(&i).expect("pattern rows must contain the diagonal");
            diag.push(cols.len() + d);
            cols.extend(r);
            row_ptr.push(cols.len());
        }
        let nnz = cols.len();
        Csr { n, row_ptr, cols, vals: vec![0.0; nnz], diag }
    }

    /// Position of entry `(i, j)` in `vals`.
    pub fn position(&self, i: usize, j: usize) -> usize {
        let r = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
        self.row_ptr[i] + r.binary_search(&j).expect("entry outside the sparsity pattern")
    }

    pub fn clear(&mut self) {
        self.vals.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.diag.iter().map(|&p| self.vals[p]).collect()
    }

    pub fn mul_into(&self, x: &[f64], y: &mut [f64], exec: Exec) {
        let out = exec.map_range(self.n, |i| {
            let mut s = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[p] * x[self.cols[p]];
            }
            s
        });
        y.copy_from_slice(&out);
    }

    /// True when every row couples only to its immediate neighbours.
    pub fn is_tridiagonal(&self) -> bool {
        (0..self.n).all(|i| self.cols[self.row_ptr[i]..self.row_ptr[i + 1]].iter().all(|&j| j + 1 >= i && j <= i + 1))
    }
}

/// Thomas algorithm for a symmetric tridiagonal system stored as CSR.
pub fn solve_tridiagonal(a: &Csr, rhs: &[f64]) -> Vec<f64> {
    let n = a.n;
    let mut diag = a.diagonal();
    let mut off = vec![0.0; n];
    for (i, o) in off.iter_mut().enumerate().take(n.saturating_sub(1)) {
        *o = a.vals[a.position(i, i + 1)];
    }
    let mut x = rhs.to_vec();
    for i in 1..n {
        let w = off[i - 1] / diag[i - 1];
        diag[i] -= w * off[i - 1];
        x[i] -= w * x[i - 1];
    }
    x[n - 1] /= diag[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = (x[i] - off[i] * x[i + 1]) / diag[i];
    }
    x
}

/// Incomplete Cholesky factor with the sparsity of the lower triangle.
struct IncompleteCholesky {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl IncompleteCholesky {
    fn new(a: &Csr) -> Option<Self> {
        let n = a.n;
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for i in 0..n {
            for p in a.row_ptr[i]..a.row_ptr[i + 1] {
                if a.cols[p] <= i {
                    cols.push(a.cols[p]);
                    vals.push(a.vals[p]);
                }
            }
            row_ptr.push(cols.len());
        }
        let find = |cols: &[usize], row_ptr: &[usize], i: usize, j: usize| -> Option<usize> {
            let r = &cols[row_ptr[i]..row_ptr[i + 1]];
            r.binary_search(&j).ok().map(|k| row_ptr[i] + k)
        };
        for i in 0..n {
            let (start, end) = (row_ptr[i], row_ptr[i + 1]);
            for p in start..end {
                let j = cols[p];
                let mut s = vals[p];
                // subtract Σ_{k<j} L_ik L_jk over the shared pattern
                for q in start..p {
                    let k = cols[q];
                    if let Some(r) = find(&cols, &row_ptr, j, k) {
                        s -= vals[q] * vals[r];
                    }
                }
                if j == i {
                    if s <= 0.0 {
                        return None;
                    }
                    vals[p] = s.sqrt();
                } else {
                    let d = vals[row_ptr[j + 1] - 1];
                    vals[p] = s / d;
                }
            }
        }
        Some(IncompleteCholesky { row_ptr, cols, vals })
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = r.len();
        // forward: L y = r
        for i in 0..n {
            let mut s = r[i];
            let (start, end) = (self.row_ptr[i], self.row_ptr[i + 1]);
            for p in start..end - 1 {
                s -= self.vals[p] * z[self.cols[p]];
            }
            z[i] = s / self.vals[end - 1];
        }
        // backward: Lᵀ x = y, column-oriented
        for i in (0..n).rev() {
            let (start, end) = (self.row_ptr[i], self.row_ptr[i + 1]);
            z[i] /= self.vals[end - 1];
            let zi = z[i];
            for p in start..end - 1 {
                z[self.cols[p]] -= self.vals[p] * zi;
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CgOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Preconditioned conjugate gradients, with incomplete Cholesky when the
/// factorisation exists and Jacobi otherwise.
pub fn pcg(a: &Csr, b: &[f64], x: &mut [f64], rel_tol: f64, max_iter: usize, exec: Exec) -> CgOutcome {
    let n = a.n;
    let dot = |u: &[f64], v: &[f64]| exec.sum(n, |i| u[i] * v[i]);
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return CgOutcome { iterations: 0, relative_residual: 0.0 };
    }
    let ic = IncompleteCholesky::new(a);
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|d| 1.0 / d).collect();
    let precondition = |r: &[f64], z: &mut [f64]| match &ic {
        Some(f) => f.apply(r, z),
        None => z.iter_mut().zip(r).zip(&inv_diag).for_each(|((z, r), d)| *z = r * d),
    };
    let mut r = vec![0.0; n];
    a.mul_into(x, &mut r, exec);
    r.iter_mut().zip(b).for_each(|(r, b)| *r = b - *r);
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut res = dot(&r, &r).sqrt() / bnorm;
    let mut it = 0;
    while it < max_iter && res > rel_tol {
        a.mul_into(&p, &mut ap, exec);
        let alpha = rz / dot(&p, &ap);
        x.iter_mut().zip(&p).for_each(|(x, p)| *x += alpha * p);
        r.iter_mut().zip(&ap).for_each(|(r, ap)| *r -= alpha * ap);
        res = dot(&r, &r).sqrt() / bnorm;
        it += 1;
        if res <= rel_tol {
            break;
        }
        precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(p, z)| *p = z + beta * *p);
    }
    CgOutcome { iterations: it, relative_residual: res }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_2d(m: usize) -> Csr {
        let idx = |i: usize, j: usize| i + m * j;
        let mut rows = vec![Vec::new(); m * m];
        for j in 0..m {
            for i in 0..m {
                let r = &mut rows[idx(i, j)];
                r.push(idx(i, j));
                if i > 0 {
                    r.push(idx(i - 1, j));
                }
                if i + 1 < m {
                    r.push(idx(i + 1, j));
                }
                if j > 0 {
                    r.push(idx(i, j - 1));
                }
                if j + 1 < m {
                    r.push(idx(i, j + 1));
                }
            }
        }
        let mut a = Csr::from_pattern(rows);
        for i in 0..m * m {
            for p in a.row_ptr[i]..a.row_ptr[i + 1] {
                a.vals[p] = if a.cols[p] == i { 4.0 } else { -1.0 };
            }
        }
        a
    }

    #[test]
    fn pcg_solves_poisson() {
        let a = laplacian_2d(20);
        let x_true: Vec<f64> = (0..400).map(|i| ((i * 7) % 13) as f64 - 6.0).collect();
        let mut b = vec![0.0; 400];
        a.mul_into(&x_true, &mut b, Exec::Sequential);
        let mut x = vec![0.0; 400];
        let out = pcg(&a, &b, &mut x, 1e-13, 1000, Exec::Sequential);
        assert!(out.relative_residual <= 1e-13);
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn thomas_matches_direct() {
        let n = 6;
        let rows = (0..n).map(|i: usize| (i.saturating_sub(1)..=(i + 1).min(n - 1)).collect()).collect();
        let mut a = Csr::from_pattern(rows);
        for i in 0..n {
            for p in a.row_ptr[i]..a.row_ptr[i + 1] {
                a.vals[p] = if a.cols[p] == i { 2.5 } else { -1.0 };
            }
        }
        assert!(a.is_tridiagonal());
        let x_true = [1.0, -2.0, 0.5, 3.0, 0.0, 1.5];
        let mut b = vec![0.0; n];
        a.mul_into(&x_true, &mut b, Exec::Sequential);
        let x = solve_tridiagonal(&a, &b);
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-12);
        }
    }
}
