//! Reproducible random data: a 64-bit linear congruential generator and
//! smoothed Gaussian fields normalized in the energy space.
use crate::evolution::State;
use crate::mesh::WeightedVector;
use crate::operator::DiscreteGenerator;

/// `x <- a x + c mod 2^64` with Knuth's MMIX constants. Uniform samples use the
/// top 53 bits; Gaussian samples use the cosine branch of Box-Muller.
#[derive(Debug, Clone)]
pub struct Lcg {
    state: u64,
}

impl Lcg {
    const MUL: u64 = 6_364_136_223_846_793_005;
    const INC: u64 = 1_442_695_040_888_963_407;

    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_mul(Self::MUL).wrapping_add(Self::INC);
        self.state
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn gaussian(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

const SMOOTHING_SWEEPS: usize = 5;

/// Nodal Gaussian field smoothed by `(1,2,1)/4` sweeps, zero at both ends.
pub fn smooth_field(rng: &mut Lcg, n_nodes: usize) -> Vec<f64> {
    let mut u: Vec<f64> = (0..n_nodes).map(|_| rng.gaussian()).collect();
    u[0] = 0.0;
    u[n_nodes - 1] = 0.0;
    for _ in 0..SMOOTHING_SWEEPS {
        let prev = u.clone();
        for i in 1..n_nodes - 1 {
            u[i] = 0.25 * (prev[i - 1] + 2.0 * prev[i] + prev[i + 1]);
        }
    }
    u
}

/// Random boundary-vanishing `(y0, y1)` with unit energy norm
/// `||y0'||^2_eta + ||y1||^2_{1/sigma} = 1`.
pub fn random_state(gen: &DiscreteGenerator, seed: u64) -> State {
    let n = gen.n_nodes();
    let mut rng = Lcg::new(seed);
    let mut y = smooth_field(&mut rng, n);
    let mut v = smooth_field(&mut rng, n);
    v[n - 1] = 0.0;
    let norm = gen.ips.h0(&y, &v, &y, &v).sqrt();
    y.iter_mut().chain(v.iter_mut()).for_each(|x| *x /= norm);
    State::new(WeightedVector::new(y), WeightedVector::new(v))
}
