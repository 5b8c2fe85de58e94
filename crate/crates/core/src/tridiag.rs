//! Symmetric-or-not tridiagonal systems by the Thomas algorithm.
use crate::error::{Error, Result};

/// A tridiagonal matrix with sub-diagonal `lower`, diagonal `diag` and
/// super-diagonal `upper` (`lower[0]` and `upper[n-1]` are ignored).
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.upper[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// LU factorization without pivoting.
    pub fn factor(&self) -> Result<Factored> {
        let n = self.len();
        if n == 0 {
            return Err(Error::LinearSolve("empty system".into()));
        }
        let mut c = vec![0.0; n];
        let mut inv = vec![0.0; n];
        let scale = self.diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        let mut pivot = self.diag[0];
        for i in 0..n {
            if i > 0 {
                pivot = self.diag[i] - self.lower[i] * c[i - 1];
            }
            if !(pivot.abs() > 1e-300 * scale.max(1e-300)) || !pivot.is_finite() {
                return Err(Error::LinearSolve(format!("zero pivot at row {i}")));
            }
            inv[i] = 1.0 / pivot;
            if i + 1 < n {
                c[i] = self.upper[i] * inv[i];
            }
        }
        Ok(Factored { matrix: self.clone(), c, inv })
    }
}

/// A prefactored tridiagonal system, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct Factored {
    matrix: Tridiagonal,
    c: Vec<f64>,
    inv: Vec<f64>,
}

impl Factored {
    fn sweep(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.c.len();
        let lower = &self.matrix.lower;
        let mut x = vec![0.0; n];
        x[0] = rhs[0] * self.inv[0];
        for i in 1..n {
            x[i] = (rhs[i] - lower[i] * x[i - 1]) * self.inv[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= self.c[i] * x[i + 1];
        }
        x
    }

    /// Solves `A x = rhs`, with one step of iterative refinement when the
    /// relative residual exceeds `tol`.
    pub fn solve(&self, rhs: &[f64], tol: f64) -> Result<Vec<f64>> {
        let mut x = self.sweep(rhs);
        let rhs_norm = norm_inf(rhs);
        if rhs_norm == 0.0 {
            return Ok(x);
        }
        let residual = |x: &[f64]| -> Vec<f64> {
            self.matrix.mul(x).iter().zip(rhs).map(|(ax, b)| b - ax).collect()
        };
        let r = residual(&x);
        if norm_inf(&r) <= tol * rhs_norm {
            return Ok(x);
        }
        let dx = self.sweep(&r);
        x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
        let rel = norm_inf(&residual(&x)) / rhs_norm;
        if rel > tol || !rel.is_finite() {
            return Err(Error::LinearSolve(format!(
                "relative residual {rel:.3e} above tolerance {tol:.1e}"
            )));
        }
        Ok(x)
    }
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
