//! Graded meshes `x_i = (i/n)^p` and the discrete inner products of the
//! weighted spaces `L^2_{1/sigma}`, `H^1_{1/sigma}` and the energy space
//! `H_0 = H^1_{1/sigma} x L^2_{1/sigma}`.
//!
//! The `L^2_{1/sigma}` product is lumped at the nodes: node `i` carries the mass
//! `m_i = d_i / sigma(x_i)` with `d_i` its dual-cell width. With this mass the
//! flux-form generator is exactly self-adjoint, so the discrete energy is an
//! exact invariant of the midpoint scheme. At `x = 0`, where `1/sigma` may be
//! singular, the half cell is sampled at its own midpoint `h_0 / 4`.
use crate::coefficients::WeightPair;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GradedMesh {
    pub n_cells: usize,
    pub grading_p: f64,
    pub nodes: Vec<f64>,
    pub midpoints: Vec<f64>,
    pub cell_widths: Vec<f64>,
}

impl GradedMesh {
    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    /// `(h_{i-1} + h_i) / 2` for interior nodes, half cells at the ends.
    pub fn dual_widths(&self) -> Vec<f64> {
        let h = &self.cell_widths;
        let n = self.n_cells;
        (0..=n)
            .map(|i| match i {
                0 => 0.5 * h[0],
                i if i == n => 0.5 * h[n - 1],
                i => 0.5 * (h[i - 1] + h[i]),
            })
            .collect()
    }

    /// Samples `f` at the nodes.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> WeightedVector {
        WeightedVector::new(self.nodes.iter().map(|&x| f(x)).collect())
    }
}

/// Nodes `x_i = (i/n)^p`, `i = 0..=n`.
pub fn build_mesh(n_cells: usize, grading_p: f64) -> Result<GradedMesh> {
    if n_cells < 2 {
        return Err(Error::InvalidMesh(format!("need at least 2 cells, got {n_cells}")));
    }
    if !(1.0..=4.0).contains(&grading_p) {
        return Err(Error::InvalidMesh(format!("grading p must lie in [1, 4], got {grading_p}")));
    }
    let n = n_cells as f64;
    let mut nodes: Vec<f64> = (0..=n_cells).map(|i| (i as f64 / n).powf(grading_p)).collect();
    nodes[n_cells] = 1.0;
    let cell_widths: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
    let midpoints = nodes.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    Ok(GradedMesh { n_cells, grading_p, nodes, midpoints, cell_widths })
}

/// Largest grading for which `sqrt(x^K) / h` does not decrease away from
/// `x = 0`. Steeper grading traps high-frequency packets in the fine cells,
/// where they bounce off the coarser cells and never reach `x = 1`.
pub fn untrapped_grading(k: f64) -> f64 {
    if k >= 2.0 {
        4.0
    } else {
        (2.0 / (2.0 - k.max(0.0))).min(4.0)
    }
}

/// Nodal values of a discrete field, one per mesh node.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedVector {
    pub values: Vec<f64>,
}

impl WeightedVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(n_nodes: usize) -> Self {
        Self { values: vec![0.0; n_nodes] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn left(&self) -> f64 {
        self.values[0]
    }

    pub fn right(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::new(self.values.iter().map(|v| v * s).collect())
    }
}

impl From<Vec<f64>> for WeightedVector {
    fn from(values: Vec<f64>) -> Self {
        Self::new(values)
    }
}

/// Quadrature weights of the weighted products on one mesh.
#[derive(Debug, Clone)]
pub struct InnerProductSet {
    /// `h_i / sigma(midpoint_i)`.
    pub w_sigma_mid: Vec<f64>,
    /// `eta(midpoint_i) h_i`.
    pub w_eta_mid: Vec<f64>,
    /// `h_i`.
    pub w_plain: Vec<f64>,
    /// Lumped nodal masses of `L^2_{1/sigma}`.
    pub mass: Vec<f64>,
    /// `eta(midpoint_i)`.
    pub eta_mid: Vec<f64>,
    /// `sigma(x_i)` at the nodes, with the boundary-cell sample at node 0.
    pub sigma_nodes: Vec<f64>,
    pub eta_at_1: f64,
}

impl InnerProductSet {
    pub fn new(mesh: &GradedMesh, weights: &WeightPair) -> Result<Self> {
        let h = &mesh.cell_widths;
        let n = mesh.n_cells;
        let eta_mid: Vec<f64> = mesh.midpoints.iter().map(|&x| weights.eta(x)).collect();
        let w_sigma_mid: Vec<f64> =
            mesh.midpoints.iter().zip(h).map(|(&x, &hi)| hi / weights.sigma(x)).collect();
        let w_eta_mid: Vec<f64> = eta_mid.iter().zip(h).map(|(e, hi)| e * hi).collect();
        let mut sigma_nodes: Vec<f64> = mesh.nodes.iter().map(|&x| weights.sigma(x)).collect();
        sigma_nodes[0] = weights.sigma(0.25 * h[0]);
        let mass: Vec<f64> =
            mesh.dual_widths().iter().zip(&sigma_nodes).map(|(d, s)| d / s).collect();
        let set = Self {
            w_sigma_mid,
            w_eta_mid,
            w_plain: h.clone(),
            mass,
            eta_mid,
            sigma_nodes,
            eta_at_1: weights.eta_at_1,
        };
        let all = set.w_sigma_mid.iter().chain(&set.w_eta_mid).chain(&set.mass);
        if all.clone().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidMesh(format!(
                "non-finite or non-positive quadrature weight on a mesh with {n} cells"
            )));
        }
        Ok(set)
    }

    pub fn n_nodes(&self) -> usize {
        self.mass.len()
    }

    fn check(&self, v: &WeightedVector) -> Result<()> {
        if v.len() != self.n_nodes() {
            return Err(Error::MeshMismatch { expected: self.n_nodes(), found: v.len() });
        }
        Ok(())
    }

    fn check_dirichlet(&self, v: &WeightedVector) -> Result<()> {
        self.check(v)?;
        let last = v.len() - 1;
        for node in [0, last] {
            if v.values[node] != 0.0 {
                return Err(Error::BoundaryViolation { node, value: v.values[node] });
            }
        }
        Ok(())
    }

    /// Lumped `sum_i m_i u_i v_i`.
    pub fn l2(&self, u: &[f64], v: &[f64]) -> f64 {
        self.mass.iter().zip(u).zip(v).map(|((m, a), b)| m * a * b).sum()
    }

    /// `sum_i eta_{i+1/2} h_i (du_i/h_i)(dv_i/h_i)`.
    pub fn eta_product(&self, u: &[f64], v: &[f64]) -> f64 {
        self.w_eta_mid
            .iter()
            .zip(&self.w_plain)
            .enumerate()
            .map(|(i, (w, h))| w * (u[i + 1] - u[i]) * (v[i + 1] - v[i]) / (h * h))
            .sum()
    }

    /// `sum_i h_i (du_i/h_i)^2`.
    pub fn plain_seminorm_sq(&self, u: &[f64]) -> f64 {
        self.w_plain
            .iter()
            .enumerate()
            .map(|(i, h)| (u[i + 1] - u[i]).powi(2) / h)
            .sum()
    }

    /// Energy-space product of `(u, v)` and `(p, q)` without boundary checks.
    pub fn h0(&self, u: &[f64], v: &[f64], p: &[f64], q: &[f64]) -> f64 {
        self.eta_product(u, p) + self.l2(v, q)
    }

    pub fn ip_l2_sigma(&self, u: &WeightedVector, v: &WeightedVector) -> Result<f64> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.l2(&u.values, &v.values))
    }

    pub fn ip_h0(
        &self,
        u: (&WeightedVector, &WeightedVector),
        v: (&WeightedVector, &WeightedVector),
    ) -> Result<f64> {
        self.check_dirichlet(u.0)?;
        self.check_dirichlet(v.0)?;
        self.check(u.1)?;
        self.check(v.1)?;
        Ok(self.h0(&u.0.values, &u.1.values, &v.0.values, &v.1.values))
    }

    /// `||v||^2_{1/sigma} / ||v'||^2_{L^2}`.
    pub fn hardy_quotient(&self, v: &WeightedVector) -> Result<f64> {
        self.check_dirichlet(v)?;
        let den = self.plain_seminorm_sq(&v.values);
        if den == 0.0 {
            return Err(Error::Degenerate("Hardy quotient of a constant field".into()));
        }
        Ok(self.l2(&v.values, &v.values) / den)
    }

    /// `||v||^2_{1/sigma} / ||sqrt(eta) v'||^2_{L^2}`.
    pub fn hardy_quotient_eta(&self, v: &WeightedVector) -> Result<f64> {
        self.check_dirichlet(v)?;
        let den = self.eta_product(&v.values, &v.values);
        if den == 0.0 {
            return Err(Error::Degenerate("Hardy quotient of a constant field".into()));
        }
        Ok(self.l2(&v.values, &v.values) / den)
    }
}
