//! Boundary null control by the Hilbert Uniqueness Method, discretized first
//! and optimized second.
//!
//! On interior nodes the scheme is the midpoint rule for
//! `M y'' = -K y + kappa f e_{n-1}`. It is symplectic, so the time-`T` state of
//! the controlled solve pairs exactly with a backward homogeneous solve from
//! final data `V`:
//!
//! ```text
//!     u(T)^T M V1 - u_t(T)^T M V0 = sum_k w_k f_k Fv_k
//! ```
//!
//! where `Fv` is the flux trace of the backward solution averaged `(1,2,1)/4`
//! over neighboring steps and `w_k` are trapezoid weights. The Gramian
//! `G V = (-K^{-1} M u_t(T), u(T))`, with `u` driven by `f = Fv / eta(1)` from
//! rest, is therefore symmetric in the energy product
//! `<(a,b),(c,d)> = a^T K c + b^T M d`, and conjugate gradient applies to it.
use log::{debug, warn};

use crate::coefficients::{classify_degeneracy, observability_time, WeightPair};
use crate::error::{Error, Result};
use crate::evolution::{embed, interior, solve_controlled, time_grid, Integrator, SolveSettings, Trajectory};
use crate::mesh::{InnerProductSet, WeightedVector};
use crate::operator::DiscreteGenerator;
use crate::tridiag::{Factored, Tridiagonal};

/// A pair `(v0, v1)` of final data with `v0` vanishing at both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct FinalData {
    pub v0: WeightedVector,
    pub v1: WeightedVector,
}

impl FinalData {
    pub fn zeros(n_nodes: usize) -> Self {
        Self { v0: WeightedVector::zeros(n_nodes), v1: WeightedVector::zeros(n_nodes) }
    }

    fn from_interior(p: &Pair) -> Self {
        Self {
            v0: WeightedVector::new(embed(&p.0, 0.0)),
            v1: WeightedVector::new(embed(&p.1, 0.0)),
        }
    }

    fn to_interior(&self) -> Pair {
        Pair(interior(&self.v0.values), interior(&self.v1.values))
    }
}

#[derive(Debug, Clone)]
struct Pair(Vec<f64>, Vec<f64>);

impl Pair {
    fn zeros(m: usize) -> Self {
        Self(vec![0.0; m], vec![0.0; m])
    }

    fn axpy(&mut self, alpha: f64, other: &Pair) {
        self.0.iter_mut().zip(&other.0).for_each(|(a, b)| *a += alpha * b);
        self.1.iter_mut().zip(&other.1).for_each(|(a, b)| *a += alpha * b);
    }

    fn scale_add(&mut self, beta: f64, other: &Pair) {
        // self <- other + beta * self
        self.0.iter_mut().zip(&other.0).for_each(|(a, b)| *a = b + beta * *a);
        self.1.iter_mut().zip(&other.1).for_each(|(a, b)| *a = b + beta * *a);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgSettings {
    /// Tolerance on the energy-norm residual relative to the right-hand side.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CgSettings {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 400 }
    }
}

/// Observation and control maps on a fixed time grid.
pub struct HumOperator<'a> {
    gen: &'a DiscreteGenerator,
    integ: Integrator<'a>,
    stiffness: Factored,
    n_steps: usize,
    dt: f64,
    settings: SolveSettings,
    k_matrix: Tridiagonal,
}

impl<'a> HumOperator<'a> {
    pub fn new(gen: &'a DiscreteGenerator, t: f64, settings: &SolveSettings) -> Result<Self> {
        let (n_steps, dt) = time_grid(t, settings.dt)?;
        Ok(Self {
            gen,
            integ: Integrator::new(gen, dt, settings.linear_tol)?,
            stiffness: gen.stiffness().factor()?,
            n_steps,
            dt,
            settings: *settings,
            k_matrix: gen.stiffness(),
        })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn mass(&self) -> &[f64] {
        self.gen.interior_mass()
    }

    fn h_product(&self, a: &Pair, b: &Pair) -> f64 {
        let ka = self.k_matrix.mul(&a.0);
        let pos: f64 = ka.iter().zip(&b.0).map(|(x, y)| x * y).sum();
        let vel: f64 = self.mass().iter().zip(&a.1).zip(&b.1).map(|((m, x), y)| m * x * y).sum();
        pos + vel
    }

    /// `(1,2,1)/4`-averaged flux trace of the backward solution from `v`.
    fn observe(&self, v: &Pair) -> Result<Vec<f64>> {
        // time reversal: integrate forward from (v0, -v1), then reverse
        let v1: Vec<f64> = v.1.iter().map(|x| -x).collect();
        let (_, _, mut flux) = self.integ.run(v.0.clone(), v1, self.n_steps, None)?;
        flux.reverse();
        let n = self.n_steps;
        Ok((0..=n)
            .map(|k| match k {
                0 => 0.5 * (flux[0] + flux[1]),
                k if k == n => 0.5 * (flux[n - 1] + flux[n]),
                k => 0.25 * (flux[k - 1] + 2.0 * flux[k] + flux[k + 1]),
            })
            .collect())
    }

    /// Control samples `f = Fv / eta(1)` for final data `v`.
    pub fn control_for(&self, v: &FinalData) -> Result<Vec<f64>> {
        let scale = 1.0 / self.gen.ips.eta_at_1;
        Ok(self.observe(&v.to_interior())?.into_iter().map(|x| x * scale).collect())
    }

    /// Interior time-`T` state of the controlled solve.
    fn terminal(&self, u0: Vec<f64>, u1: Vec<f64>, f: Option<&[f64]>) -> Result<Pair> {
        let (y, v, _) = self.integ.run(u0, u1, self.n_steps, f)?;
        Ok(Pair(y, v))
    }

    fn riesz_inverse(&self, mv: &[f64]) -> Result<Vec<f64>> {
        self.stiffness.solve(mv, self.settings.linear_tol)
    }

    fn gramian(&self, v: &Pair) -> Result<Pair> {
        let scale = 1.0 / self.gen.ips.eta_at_1;
        let f: Vec<f64> = self.observe(v)?.into_iter().map(|x| x * scale).collect();
        let m = v.0.len();
        let end = self.terminal(vec![0.0; m], vec![0.0; m], Some(&f))?;
        let mut mut_ = end.1;
        mut_.iter_mut().zip(self.mass()).for_each(|(x, w)| *x *= w);
        let pos = self.riesz_inverse(&mut_)?.into_iter().map(|x| -x).collect();
        Ok(Pair(pos, end.0))
    }

    fn rhs(&self, u0: &[f64], u1: &[f64]) -> Result<Pair> {
        let end = self.terminal(u0.to_vec(), u1.to_vec(), None)?;
        let mut mut_ = end.1;
        mut_.iter_mut().zip(self.mass()).for_each(|(x, w)| *x *= w);
        let pos = self.riesz_inverse(&mut_)?;
        Ok(Pair(pos, end.0.into_iter().map(|x| -x).collect()))
    }

    pub fn apply(&self, v: &FinalData) -> Result<FinalData> {
        self.check(v)?;
        Ok(FinalData::from_interior(&self.gramian(&v.to_interior())?))
    }

    pub fn rhs_functional(&self, u0: &WeightedVector, u1: &WeightedVector) -> Result<FinalData> {
        let n = self.gen.n_nodes();
        for u in [u0, u1] {
            if u.len() != n {
                return Err(Error::MeshMismatch { expected: n, found: u.len() });
            }
        }
        Ok(FinalData::from_interior(&self.rhs(&interior(&u0.values), &interior(&u1.values))?))
    }

    fn check(&self, v: &FinalData) -> Result<()> {
        let n = self.gen.n_nodes();
        for w in [&v.v0, &v.v1] {
            if w.len() != n {
                return Err(Error::MeshMismatch { expected: n, found: w.len() });
            }
        }
        for node in [0, n - 1] {
            if v.v0.values[node] != 0.0 {
                return Err(Error::BoundaryViolation { node, value: v.v0.values[node] });
            }
        }
        Ok(())
    }

    /// Conjugate gradient on `G V = b` in the energy product.
    fn conjugate_gradient(&self, b: &Pair, cg: &CgSettings) -> Result<(Pair, usize, f64, Vec<f64>)> {
        let m = b.0.len();
        let b_norm = self.h_product(b, b).sqrt();
        if b_norm == 0.0 {
            return Ok((Pair::zeros(m), 0, 0.0, vec![]));
        }
        let mut x = Pair::zeros(m);
        let mut r = b.clone();
        let mut p = r.clone();
        let mut rr = b_norm * b_norm;
        let mut history = vec![1.0];
        for it in 1..=cg.max_iter {
            let gp = self.gramian(&p)?;
            let pgp = self.h_product(&p, &gp);
            if !(pgp > 0.0) {
                return Err(Error::CgStagnation {
                    iterations: it,
                    residual: *history.last().unwrap(),
                    history,
                });
            }
            let alpha = rr / pgp;
            x.axpy(alpha, &p);
            r.axpy(-alpha, &gp);
            let rr_new = self.h_product(&r, &r);
            let rel = rr_new.sqrt() / b_norm;
            history.push(rel);
            debug!("cg iteration {it}: relative residual {rel:.3e}");
            if rel <= cg.tol {
                return Ok((x, it, rel, history));
            }
            p.scale_add(rr_new / rr, &r);
            rr = rr_new;
        }
        Err(Error::CgStagnation {
            iterations: cg.max_iter,
            residual: *history.last().unwrap(),
            history,
        })
    }
}

/// `G V`, the energy-space representative of `W -> Lambda(V, W)`.
pub fn apply_gramian(
    v: &FinalData,
    t: f64,
    gen: &DiscreteGenerator,
    settings: &SolveSettings,
) -> Result<FinalData> {
    HumOperator::new(gen, t, settings)?.apply(v)
}

/// Energy-space representative of
/// `W -> <u1, w(0)>_{1/sigma} - <u0, w_t(0)>_{1/sigma}`, `w` the backward solution from `W`.
pub fn rhs_functional(
    u0: &WeightedVector,
    u1: &WeightedVector,
    t: f64,
    gen: &DiscreteGenerator,
    settings: &SolveSettings,
) -> Result<FinalData> {
    HumOperator::new(gen, t, settings)?.rhs_functional(u0, u1)
}

#[derive(Debug, Clone)]
pub struct HumSolution {
    /// Control samples at every step time.
    pub f: Vec<f64>,
    pub v_bar: FinalData,
    pub cg_iterations: usize,
    pub cg_rel_residual: f64,
    pub residual_history: Vec<f64>,
    /// `||u(T)||_{1/sigma}` over interior nodes.
    pub final_u_norm: f64,
    /// `(u_t(T)^T M K^{-1} M u_t(T))^{1/2}`.
    pub final_ut_norm: f64,
    /// `(int f^2 dt)^{1/2}`.
    pub control_l2_norm: f64,
    /// The controlled solve.
    pub trajectory: Trajectory,
}

/// Lumped `L^2_{1/sigma}` norm over interior nodes.
fn interior_l2(ips: &InnerProductSet, u: &[f64]) -> f64 {
    let n = u.len() - 1;
    (1..n).map(|i| ips.mass[i] * u[i] * u[i]).sum::<f64>().sqrt()
}

/// Dual norm `(w^T M K^{-1} M w)^{1/2}` over interior nodes.
pub fn negative_norm(gen: &DiscreteGenerator, w: &[f64], tol: f64) -> Result<f64> {
    let mw: Vec<f64> = interior(w).iter().zip(gen.interior_mass()).map(|(x, m)| x * m).collect();
    let z = gen.stiffness().factor()?.solve(&mw, tol)?;
    Ok(z.iter().zip(&mw).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt())
}

/// Computes the HUM control driving `(u0, u1)` to rest at time `t` and runs
/// the controlled solve.
pub fn solve_hum(
    u0: &WeightedVector,
    u1: &WeightedVector,
    t: f64,
    cg: &CgSettings,
    gen: &DiscreteGenerator,
    weights: &WeightPair,
    settings: &SolveSettings,
) -> Result<HumSolution> {
    let report = classify_degeneracy(weights.profile(), 512);
    let bound = observability_time(&report, weights, weights.profile().a(1.0));
    if t <= bound.t0 {
        warn!("horizon T = {t} does not exceed the sufficient time T0 = {:.6}; CG may stagnate", bound.t0);
    }
    let op = HumOperator::new(gen, t, settings)?;
    let b = op.rhs(&interior(&u0.values), &interior(&u1.values))?;
    let (x, iterations, rel, history) = op.conjugate_gradient(&b, cg)?;
    let v_bar = FinalData::from_interior(&x);
    let f = op.control_for(&v_bar)?;
    let mut start = u0.clone();
    let last = start.len() - 1;
    start.values[last] = f[0];
    let trajectory = solve_controlled(&start, u1, &f, t, gen, settings)?;
    let fin = trajectory.final_state();
    Ok(HumSolution {
        final_u_norm: interior_l2(&gen.ips, &fin.y.values),
        final_ut_norm: negative_norm(gen, &fin.v.values, settings.linear_tol)?,
        control_l2_norm: crate::diagnostics::trapezoid(
            &f.iter().map(|x| x * x).collect::<Vec<_>>(),
            op.dt(),
        )
        .sqrt(),
        f,
        v_bar,
        cg_iterations: iterations,
        cg_rel_residual: rel,
        residual_history: history,
        trajectory,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullControlReport {
    pub final_u_norm: f64,
    pub final_ut_norm: f64,
    pub control_l2_norm: f64,
    /// `||f||^2 / (||u0||^2_{1/sigma} + ||u1||^2_{-1})`.
    pub cost_ratio: f64,
    pub u_ratio: f64,
    pub ut_ratio: f64,
    pub passes: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullControlGates {
    /// Bound on `||u(T)|| / ||u0||`.
    pub u: f64,
    /// Bound on `||u_t(T)||_{-1} / ||u0||`.
    pub ut: f64,
}

impl Default for NullControlGates {
    fn default() -> Self {
        Self { u: 1e-3, ut: 1e-2 }
    }
}

/// Recomputes the terminal norms of the controlled solve and compares them,
/// relative to `||u0||_{1/sigma}`, against the gates. The zero problem passes.
pub fn verify_null_control(
    sol: &HumSolution,
    traj: &Trajectory,
    gen: &DiscreteGenerator,
    tol: f64,
    gates: &NullControlGates,
) -> Result<NullControlReport> {
    let start = traj.initial_state();
    let fin = traj.final_state();
    let final_u_norm = interior_l2(&gen.ips, &fin.y.values);
    let final_ut_norm = negative_norm(gen, &fin.v.values, tol)?;
    let squares: Vec<f64> = sol.f.iter().map(|x| x * x).collect();
    let control_l2_norm = crate::diagnostics::trapezoid(&squares, traj.dt).sqrt();
    let u0_norm = interior_l2(&gen.ips, &start.y.values);
    let initial = u0_norm.powi(2) + negative_norm(gen, &start.v.values, tol)?.powi(2);
    let ratio = |x: f64| if u0_norm > 0.0 { x / u0_norm } else { x };
    let (u_ratio, ut_ratio) = (ratio(final_u_norm), ratio(final_ut_norm));
    Ok(NullControlReport {
        final_u_norm,
        final_ut_norm,
        control_l2_norm,
        cost_ratio: if initial > 0.0 { control_l2_norm.powi(2) / initial } else { 0.0 },
        u_ratio,
        ut_ratio,
        passes: u_ratio < gates.u && ut_ratio < gates.ut,
    })
}
