//! The generator `A y = sigma (eta y_x)_x` in flux form, the boundary trace
//! `y_x(1)` and the Dirichlet lifting at `x = 1`.
use crate::coefficients::WeightPair;
use crate::error::{Error, Result};
use crate::mesh::{GradedMesh, InnerProductSet, WeightedVector};
use crate::tridiag::Tridiagonal;

/// `A` on a mesh, with homogeneous Dirichlet rows at the flagged endpoints.
///
/// At interior node `i`,
/// `(A y)_i = [kappa_i (y_{i+1} - y_i) - kappa_{i-1} (y_i - y_{i-1})] / m_i`
/// with `kappa_i = eta_{i+1/2} / h_i` and `m_i` the lumped `1/sigma` mass.
#[derive(Debug, Clone)]
pub struct DiscreteGenerator {
    pub mesh: GradedMesh,
    pub ips: InnerProductSet,
    /// `eta_{i+1/2} / h_i`, one per cell.
    pub kappa: Vec<f64>,
    pub dirichlet_left: bool,
    pub dirichlet_right: bool,
}

impl DiscreteGenerator {
    pub fn new(mesh: &GradedMesh, weights: &WeightPair) -> Result<Self> {
        let ips = InnerProductSet::new(mesh, weights)?;
        Ok(Self::from_parts(mesh.clone(), ips))
    }

    pub fn from_parts(mesh: GradedMesh, ips: InnerProductSet) -> Self {
        let kappa = ips.eta_mid.iter().zip(&mesh.cell_widths).map(|(e, h)| e / h).collect();
        Self { mesh, ips, kappa, dirichlet_left: true, dirichlet_right: true }
    }

    pub fn n_nodes(&self) -> usize {
        self.mesh.n_nodes()
    }

    /// Interior stiffness matrix `K` (nodes `1..n-1`), with
    /// `y^T K y = sum_i kappa_i (y_{i+1} - y_i)^2` for boundary-vanishing `y`.
    pub fn stiffness(&self) -> Tridiagonal {
        let n = self.mesh.n_cells;
        let m = n - 1;
        let k = &self.kappa;
        let diag = (1..n).map(|i| k[i - 1] + k[i]).collect();
        let lower = (1..n).map(|i| if i == 1 { 0.0 } else { -k[i - 1] }).collect();
        let upper = (1..n).map(|i| if i == n - 1 { 0.0 } else { -k[i] }).collect();
        let t = Tridiagonal { lower, diag, upper };
        debug_assert_eq!(t.len(), m);
        t
    }

    /// Interior lumped masses (nodes `1..n-1`).
    pub fn interior_mass(&self) -> &[f64] {
        &self.ips.mass[1..self.mesh.n_cells]
    }

    /// `A y` without checking the boundary values; boundary rows are zero.
    pub fn apply_raw(&self, y: &[f64]) -> Vec<f64> {
        let n = self.mesh.n_cells;
        let k = &self.kappa;
        let m = &self.ips.mass;
        let mut out = vec![0.0; n + 1];
        for i in 1..n {
            out[i] = (k[i] * (y[i + 1] - y[i]) - k[i - 1] * (y[i] - y[i - 1])) / m[i];
        }
        out
    }

    pub fn apply_a(&self, y: &WeightedVector) -> Result<WeightedVector> {
        if y.len() != self.n_nodes() {
            return Err(Error::MeshMismatch { expected: self.n_nodes(), found: y.len() });
        }
        let last = y.len() - 1;
        for (flag, node) in [(self.dirichlet_left, 0), (self.dirichlet_right, last)] {
            if flag && y.values[node] != 0.0 {
                return Err(Error::BoundaryViolation { node, value: y.values[node] });
            }
        }
        Ok(WeightedVector::new(self.apply_raw(&y.values)))
    }

    /// Contribution of the boundary value `y_n = f_value` to `A y` at node `n-1`.
    pub fn lift_dirichlet(&self, f_value: f64) -> WeightedVector {
        let n = self.mesh.n_cells;
        let mut out = vec![0.0; n + 1];
        out[n - 1] = self.kappa[n - 1] * f_value / self.ips.mass[n - 1];
        WeightedVector::new(out)
    }

    /// `kappa_{n-1} (y_n - y_{n-1})`: the discrete `eta(1) y_x(1)` that is
    /// exactly dual to [`lift_dirichlet`](Self::lift_dirichlet).
    pub fn flux_trace(&self, y: &[f64]) -> f64 {
        let n = self.mesh.n_cells;
        self.kappa[n - 1] * (y[n] - y[n - 1])
    }
}

/// One-sided three-node derivative at `x = 1`, exact on quadratics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceExtractor {
    /// Coefficients of `y_n`, `y_{n-1}`, `y_{n-2}`.
    pub coeffs: [f64; 3],
}

impl TraceExtractor {
    pub fn new(mesh: &GradedMesh) -> Self {
        let n = mesh.n_cells;
        let x = &mesh.nodes;
        let h1 = x[n] - x[n - 1];
        let h2 = x[n - 1] - x[n - 2];
        Self {
            coeffs: [
                (2.0 * h1 + h2) / (h1 * (h1 + h2)),
                -(h1 + h2) / (h1 * h2),
                h1 / (h2 * (h1 + h2)),
            ],
        }
    }

    pub fn trace(&self, y: &[f64]) -> f64 {
        let n = y.len() - 1;
        self.coeffs[0] * y[n] + self.coeffs[1] * y[n - 1] + self.coeffs[2] * y[n - 2]
    }

    pub fn boundary_trace(&self, y: &WeightedVector) -> f64 {
        self.trace(&y.values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{build_weights, CoefficientProfile};
    use crate::mesh::build_mesh;
    use std::f64::consts::PI;

    fn generator(k: f64, h: f64, c: f64, n: usize, p: f64) -> DiscreteGenerator {
        let prof = CoefficientProfile::power_law(k, h, c).unwrap();
        let w = build_weights(&prof, 128).unwrap();
        DiscreteGenerator::new(&build_mesh(n, p).unwrap(), &w).unwrap()
    }

    #[test]
    fn laplacian_on_sine() {
        let g = generator(0.0, 0.0, 0.0, 200, 1.0);
        let mut y = g.mesh.sample(|x| (PI * x).sin());
        y.values[200] = 0.0;
        y.values[0] = 0.0;
        let ay = g.apply_a(&y).unwrap();
        for i in 1..200 {
            let exact = -PI * PI * (PI * g.mesh.nodes[i]).sin();
            assert!((ay.values[i] - exact).abs() < 1e-3);
        }
        // three-point stencil on a uniform grid
        let h = 1.0 / 200.0;
        let i = 77;
        let stencil = (y.values[i + 1] - 2.0 * y.values[i] + y.values[i - 1]) / (h * h);
        assert!((ay.values[i] - stencil).abs() < 1e-9 * stencil.abs());
    }

    #[test]
    fn non_divergence_form_agrees() {
        // a = x, b = sqrt(x): a y'' + b y' = -2x + sqrt(x)(1 - 2x) for y = x(1-x)
        let g = generator(1.0, 0.5, 1.0, 400, 1.0);
        let y = g.mesh.sample(|x| x * (1.0 - x));
        let ay = g.apply_a(&y).unwrap();
        for i in (20..400).step_by(20) {
            let x = g.mesh.nodes[i];
            assert!((ay.values[i] - (-2.0 * x + x.sqrt() * (1.0 - 2.0 * x))).abs() < 1e-3, "x = {x}");
        }
    }

    #[test]
    fn trace_stencil_exact_on_quadratics() {
        for p in [1.0, 2.0, 3.3] {
            let m = build_mesh(17, p).unwrap();
            let tr = TraceExtractor::new(&m);
            assert!((tr.boundary_trace(&m.sample(|x| x * x)) - 2.0).abs() < 1e-11);
            assert!((tr.boundary_trace(&m.sample(|x| 3.0 - x)) + 1.0).abs() < 1e-11);
        }
        let m = build_mesh(400, 2.0).unwrap();
        let tr = TraceExtractor::new(&m);
        assert!((tr.boundary_trace(&m.sample(|x| (PI * x).sin())) + PI).abs() < 1e-3);
    }

    #[test]
    fn lifting_reproduces_harmonic_solution() {
        let g = generator(0.0, 0.0, 0.0, 40, 2.0);
        // -A u = lift(1) on the interior, with the masses cancelled
        let k = g.stiffness();
        let lift = g.lift_dirichlet(1.0);
        let rhs: Vec<f64> =
            (1..40).map(|i| lift.values[i] * g.ips.mass[i]).collect();
        let u = k.factor().unwrap().solve(&rhs, 1e-14).unwrap();
        for (i, ui) in u.iter().enumerate() {
            assert!((ui - g.mesh.nodes[i + 1]).abs() < 1e-13);
        }
        assert_eq!(g.lift_dirichlet(0.0).values, vec![0.0; 41]);
    }

    #[test]
    fn flux_trace_approximates_weighted_derivative() {
        let g = generator(0.5, 0.5, 0.3, 800, 2.0);
        let y = g.mesh.sample(|x| (PI * x).sin());
        let eta1 = g.ips.eta_at_1;
        assert!((g.flux_trace(&y.values) + PI * eta1).abs() < 1e-2);
    }
}
