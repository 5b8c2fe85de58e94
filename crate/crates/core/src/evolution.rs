//! Implicit midpoint integration of `y_tt = A y` as the first-order system
//! `(y, v)`, for the homogeneous problem and for the problem driven by a
//! Dirichlet value at `x = 1`.
//!
//! With lumped mass `M` and stiffness `K`, one step solves
//!
//! ```text
//!     (M + dt^2/4 K) y+ = (M - dt^2/4 K) y + dt M v + dt^2/2 kappa f_half e_{n-1},
//!     v+ = 2 (y+ - y)/dt - v,
//! ```
//!
//! which conserves `1/2 (v^T M v + y^T K y)` exactly in the homogeneous case.
use crate::error::{Error, Result};
use crate::mesh::WeightedVector;
use crate::operator::{DiscreteGenerator, TraceExtractor};
use crate::tridiag::{Factored, Tridiagonal};

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub y: WeightedVector,
    pub v: WeightedVector,
    pub t: f64,
}

impl State {
    pub fn new(y: WeightedVector, v: WeightedVector) -> Self {
        Self { y, v, t: 0.0 }
    }

    pub fn zeros(n_nodes: usize) -> Self {
        Self::new(WeightedVector::zeros(n_nodes), WeightedVector::zeros(n_nodes))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveSettings {
    /// Requested step; the effective step divides the horizon evenly.
    pub dt: f64,
    pub linear_tol: f64,
    /// Keep every `store_every`-th state; 0 picks a stride giving about 256
    /// stored intervals. The final state is always kept.
    pub store_every: usize,
}

impl SolveSettings {
    /// `dt = T / 2048`, tolerance `1e-10`, automatic storage stride.
    pub fn for_horizon(t: f64) -> Self {
        Self { dt: t / 2048.0, linear_tol: 1e-10, store_every: 0 }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_store_every(mut self, store_every: usize) -> Self {
        self.store_every = store_every;
        self
    }

    fn stride(&self, n_steps: usize) -> usize {
        if self.store_every > 0 {
            self.store_every
        } else {
            n_steps.div_ceil(256).max(1)
        }
    }
}

/// Number of steps and effective step for the horizon `t`.
pub fn time_grid(t: f64, dt: f64) -> Result<(usize, f64)> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::TimeGrid(format!("horizon must be positive, got {t}")));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::TimeGrid(format!("time step must be positive, got {dt}")));
    }
    let n = (t / dt - 1e-9).ceil().max(1.0) as usize;
    Ok((n, t / n as f64))
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// All step times `k dt`, `k = 0..=n_steps`.
    pub times: Vec<f64>,
    /// Stored states, in increasing time.
    pub states: Vec<State>,
    /// Step index of each stored state.
    pub state_steps: Vec<usize>,
    /// Three-node one-sided `y_x(t_k, 1)` at every step.
    pub trace_series: Vec<f64>,
    /// `kappa_{n-1} (y_n - y_{n-1})`, the discrete `eta(1) y_x(t_k, 1)`, at every step.
    pub flux_series: Vec<f64>,
    pub dt: f64,
}

impl Trajectory {
    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn final_state(&self) -> &State {
        self.states.last().expect("trajectory always stores its final state")
    }

    pub fn initial_state(&self) -> &State {
        &self.states[0]
    }
}

/// Prefactored midpoint stepper on the interior nodes.
pub(crate) struct Integrator<'a> {
    gen: &'a DiscreteGenerator,
    stiffness: Tridiagonal,
    factor: Factored,
    dt: f64,
    tol: f64,
}

impl<'a> Integrator<'a> {
    pub(crate) fn new(gen: &'a DiscreteGenerator, dt: f64, tol: f64) -> Result<Self> {
        let stiffness = gen.stiffness();
        let mass = gen.interior_mass();
        let q = 0.25 * dt * dt;
        let system = Tridiagonal {
            lower: stiffness.lower.iter().map(|l| q * l).collect(),
            diag: stiffness.diag.iter().zip(mass).map(|(d, m)| m + q * d).collect(),
            upper: stiffness.upper.iter().map(|u| q * u).collect(),
        };
        let factor = system.factor()?;
        Ok(Self { gen, stiffness, factor, dt, tol })
    }

    /// Advances interior `(y, v)` by one step with boundary value `f_half` at
    /// the midpoint of the step.
    pub(crate) fn step(&self, y: &mut [f64], v: &mut [f64], f_half: f64) -> Result<()> {
        let mass = self.gen.interior_mass();
        let q = 0.25 * self.dt * self.dt;
        let ky = self.stiffness.mul(y);
        let mut rhs: Vec<f64> = (0..y.len())
            .map(|j| mass[j] * (y[j] + self.dt * v[j]) - q * ky[j])
            .collect();
        let last = rhs.len() - 1;
        rhs[last] += 0.5 * self.dt * self.dt * self.gen.kappa[self.gen.mesh.n_cells - 1] * f_half;
        let y_new = self.factor.solve(&rhs, self.tol)?;
        for j in 0..y.len() {
            v[j] = 2.0 * (y_new[j] - y[j]) / self.dt - v[j];
        }
        y.copy_from_slice(&y_new);
        Ok(())
    }

    /// `kappa_{n-1} (f - y_{n-1})` from interior values.
    pub(crate) fn flux(&self, y: &[f64], f: f64) -> f64 {
        self.gen.kappa[self.gen.mesh.n_cells - 1] * (f - y[y.len() - 1])
    }

    /// Runs `n_steps` from interior data; returns the final interior pair and
    /// the flux series at every step.
    pub(crate) fn run(
        &self,
        mut y: Vec<f64>,
        mut v: Vec<f64>,
        n_steps: usize,
        control: Option<&[f64]>,
    ) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let f = |k: usize| control.map_or(0.0, |c| c[k]);
        let mut flux = Vec::with_capacity(n_steps + 1);
        flux.push(self.flux(&y, f(0)));
        for k in 0..n_steps {
            self.step(&mut y, &mut v, 0.5 * (f(k) + f(k + 1)))?;
            flux.push(self.flux(&y, f(k + 1)));
        }
        Ok((y, v, flux))
    }
}

pub(crate) fn interior(v: &[f64]) -> Vec<f64> {
    v[1..v.len() - 1].to_vec()
}

pub(crate) fn embed(inner: &[f64], right: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(inner.len() + 2);
    out.push(0.0);
    out.extend_from_slice(inner);
    out.push(right);
    out
}

fn check_state(state: &State, gen: &DiscreteGenerator, homogeneous: bool) -> Result<()> {
    let n = gen.n_nodes();
    for v in [&state.y, &state.v] {
        if v.len() != n {
            return Err(Error::MeshMismatch { expected: n, found: v.len() });
        }
    }
    let right = if homogeneous { vec![0, n - 1] } else { vec![0] };
    for node in right {
        if state.y.values[node] != 0.0 {
            return Err(Error::BoundaryViolation { node, value: state.y.values[node] });
        }
    }
    Ok(())
}

/// One homogeneous midpoint step.
pub fn step_midpoint(state: &State, gen: &DiscreteGenerator, settings: &SolveSettings) -> Result<State> {
    check_state(state, gen, true)?;
    let integ = Integrator::new(gen, settings.dt, settings.linear_tol)?;
    let mut y = interior(&state.y.values);
    let mut v = interior(&state.v.values);
    integ.step(&mut y, &mut v, 0.0)?;
    Ok(State {
        y: WeightedVector::new(embed(&y, 0.0)),
        v: WeightedVector::new(embed(&v, 0.0)),
        t: state.t + settings.dt,
    })
}

struct Recorder {
    stride: usize,
    n_steps: usize,
    trace: TraceExtractor,
    states: Vec<State>,
    state_steps: Vec<usize>,
    trace_series: Vec<f64>,
    flux_series: Vec<f64>,
}

impl Recorder {
    fn new(gen: &DiscreteGenerator, n_steps: usize, settings: &SolveSettings) -> Self {
        Self {
            stride: settings.stride(n_steps),
            n_steps,
            trace: TraceExtractor::new(&gen.mesh),
            states: vec![],
            state_steps: vec![],
            trace_series: Vec::with_capacity(n_steps + 1),
            flux_series: Vec::with_capacity(n_steps + 1),
        }
    }

    fn record(&mut self, k: usize, y: Vec<f64>, v: Vec<f64>, flux: f64, dt: f64) {
        self.trace_series.push(self.trace.trace(&y));
        self.flux_series.push(flux);
        if k.is_multiple_of(self.stride) || k == self.n_steps {
            self.states.push(State {
                y: WeightedVector::new(y),
                v: WeightedVector::new(v),
                t: k as f64 * dt,
            });
            self.state_steps.push(k);
        }
    }

    fn finish(self, dt: f64) -> Trajectory {
        Trajectory {
            times: (0..=self.n_steps).map(|k| k as f64 * dt).collect(),
            states: self.states,
            state_steps: self.state_steps,
            trace_series: self.trace_series,
            flux_series: self.flux_series,
            dt,
        }
    }
}

/// Integrates the homogeneous problem over `[0, T]`.
///
/// `Forward` takes `y0` as the state at `t = 0`. `Backward` takes it as the
/// state at `t = T` and integrates the time-reversed system, so the returned
/// trajectory is still indexed by increasing `t`.
pub fn solve_homogeneous(
    y0: &State,
    t: f64,
    direction: Direction,
    gen: &DiscreteGenerator,
    settings: &SolveSettings,
) -> Result<Trajectory> {
    check_state(y0, gen, true)?;
    let (n_steps, dt) = time_grid(t, settings.dt)?;
    let integ = Integrator::new(gen, dt, settings.linear_tol)?;
    let sign = match direction {
        Direction::Forward => 1.0,
        Direction::Backward => -1.0,
    };
    let mut y = interior(&y0.y.values);
    let mut v: Vec<f64> = interior(&y0.v.values).iter().map(|x| sign * x).collect();

    // record in integration order, then reverse for backward solves
    let mut rec = Recorder::new(gen, n_steps, settings);
    let full = |y: &[f64], v: &[f64]| (embed(y, 0.0), embed(&v.iter().map(|x| sign * x).collect::<Vec<_>>(), 0.0));
    let stored_at = |k: usize| match direction {
        Direction::Forward => k,
        Direction::Backward => n_steps - k,
    };
    // storing stride is applied in physical step indices
    let push = |rec: &mut Recorder, k: usize, y: &[f64], v: &[f64]| {
        let (fy, fv) = full(y, v);
        let flux = integ.flux(y, 0.0);
        rec.record(stored_at(k), fy, fv, flux, dt);
    };
    push(&mut rec, 0, &y, &v);
    for k in 0..n_steps {
        integ.step(&mut y, &mut v, 0.0)?;
        push(&mut rec, k + 1, &y, &v);
    }
    if direction == Direction::Backward {
        rec.trace_series.reverse();
        rec.flux_series.reverse();
        rec.states.reverse();
        rec.state_steps.reverse();
    }
    Ok(rec.finish(dt))
}

/// Integrates the problem with `u(t, 0) = 0`, `u(t, 1) = f(t)` from `(u0, u1)`.
///
/// `f` holds one sample per step time. The right boundary value of `u0` is
/// replaced by `f[0]`.
pub fn solve_controlled(
    u0: &WeightedVector,
    u1: &WeightedVector,
    f: &[f64],
    t: f64,
    gen: &DiscreteGenerator,
    settings: &SolveSettings,
) -> Result<Trajectory> {
    let start = State::new(u0.clone(), u1.clone());
    check_state(&start, gen, false)?;
    let (n_steps, dt) = time_grid(t, settings.dt)?;
    if f.len() != n_steps + 1 {
        return Err(Error::ControlLength { expected: n_steps + 1, found: f.len() });
    }
    let integ = Integrator::new(gen, dt, settings.linear_tol)?;
    let boundary_velocity = |k: usize| -> f64 {
        if n_steps == 0 {
            0.0
        } else if k == 0 {
            (f[1] - f[0]) / dt
        } else if k == n_steps {
            (f[k] - f[k - 1]) / dt
        } else {
            (f[k + 1] - f[k - 1]) / (2.0 * dt)
        }
    };
    let mut y = interior(&u0.values);
    let mut v = interior(&u1.values);
    let mut rec = Recorder::new(gen, n_steps, settings);
    rec.record(0, embed(&y, f[0]), embed(&v, boundary_velocity(0)), integ.flux(&y, f[0]), dt);
    for k in 0..n_steps {
        integ.step(&mut y, &mut v, 0.5 * (f[k] + f[k + 1]))?;
        let flux = integ.flux(&y, f[k + 1]);
        rec.record(k + 1, embed(&y, f[k + 1]), embed(&v, boundary_velocity(k + 1)), flux, dt);
    }
    Ok(rec.finish(dt))
}
