//! Degenerate coefficients `(a, b)`, the Feller weight `eta`, the rescaling
//! `sigma = a / eta`, and the explicit constants of the observability theory.
//!
//! The weight is
//!
//! ```text
//!     eta(x) = exp( int_{1/2}^{x} b(s)/a(s) ds ),      sigma(x) = a(x) / eta(x),
//! ```
//!
//! so that `a y_xx + b y_x = sigma (eta y_x)_x`. The integral is evaluated in the
//! logarithmic variable `s = -ln x`, which turns an algebraic endpoint singularity
//! `x^alpha` (alpha > -1) into the smooth decaying integrand `exp(-(1+alpha) s)`.
//! A uniform composite Gauss-Legendre rule in `s` is therefore a grid graded
//! geometrically toward `x = 0`.
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

/// Upper end of the logarithmic quadrature range, `x = exp(-S_MAX) ~ 1e-304`.
const S_MAX: f64 = 700.0;
/// Width of the window at the end of the range used to detect a divergent tail.
const TAIL_WINDOW: f64 = 10.0;
const TAIL_TOL: f64 = 1e-12;

const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Tabulated coefficient samples `(x, a, b, a')` on `(0, 1]`.
///
/// Between samples all three columns are interpolated linearly. Below the first
/// sample `a` continues as the power law `a_0 (x/x_0)^k0` with
/// `k0 = x_0 a'_0 / a_0`, and `b` as a power law with the log-log slope of its
/// first two samples (or linearly to zero when that slope is undefined).
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    x: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    a_prime: Vec<f64>,
}

impl CoefficientTable {
    pub fn new(x: Vec<f64>, a: Vec<f64>, b: Vec<f64>, a_prime: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || a.len() != n || b.len() != n || a_prime.len() != n {
            return Err(Error::InvalidProfile(
                "table needs at least two rows with equal column lengths".into(),
            ));
        }
        if x[0] <= 0.0 {
            return Err(Error::InvalidProfile("table must start at x > 0".into()));
        }
        if (x[n - 1] - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidProfile("table must end at x = 1".into()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidProfile("table abscissae must increase strictly".into()));
        }
        if a.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::InvalidProfile("a must be positive on (0,1]".into()));
        }
        if b.iter().chain(a_prime.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidProfile("non-finite b or a' sample".into()));
        }
        Ok(Self { x, a, b, a_prime })
    }

    /// Reads a CSV with header columns `x,a,b,aprime`.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
        let headers = reader.headers()?.clone();
        let col = |name: &str| -> Result<usize> {
            headers.iter().position(|h| h == name).ok_or_else(|| {
                Error::InvalidProfile(format!("table is missing column '{name}'"))
            })
        };
        let (ix, ia, ib, iap) = (col("x")?, col("a")?, col("b")?, col("aprime")?);
        let (mut x, mut a, mut b, mut ap) = (vec![], vec![], vec![], vec![]);
        for record in reader.records() {
            let record = record?;
            let parse = |i: usize| -> Result<f64> {
                record
                    .get(i)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidProfile(format!("bad number in row {record:?}")))
            };
            x.push(parse(ix)?);
            a.push(parse(ia)?);
            b.push(parse(ib)?);
            ap.push(parse(iap)?);
        }
        Self::new(x, a, b, ap)
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let i = match self.x.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.x.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.x.len() - 2),
        };
        let t = (x - self.x[i]) / (self.x[i + 1] - self.x[i]);
        (i, t)
    }

    fn lerp(col: &[f64], i: usize, t: f64) -> f64 {
        col[i] + t * (col[i + 1] - col[i])
    }

    fn head_exponent_a(&self) -> f64 {
        (self.x[0] * self.a_prime[0] / self.a[0]).max(0.0)
    }

    fn head_exponent_b(&self) -> Option<f64> {
        let (b0, b1) = (self.b[0], self.b[1]);
        if b0 != 0.0 && b1 != 0.0 && b0.signum() == b1.signum() {
            Some((b1 / b0).ln() / (self.x[1] / self.x[0]).ln())
        } else {
            None
        }
    }

    fn a(&self, x: f64) -> f64 {
        if x < self.x[0] {
            return self.a[0] * (x / self.x[0]).powf(self.head_exponent_a());
        }
        let (i, t) = self.locate(x);
        Self::lerp(&self.a, i, t)
    }

    fn a_prime(&self, x: f64) -> f64 {
        if x < self.x[0] {
            let k0 = self.head_exponent_a();
            return k0 * self.a(x) / x;
        }
        let (i, t) = self.locate(x);
        Self::lerp(&self.a_prime, i, t)
    }

    fn b(&self, x: f64) -> f64 {
        if x < self.x[0] {
            return match self.head_exponent_b() {
                Some(hb) => self.b[0] * (x / self.x[0]).powf(hb),
                None => self.b[0] * x / self.x[0],
            };
        }
        let (i, t) = self.locate(x);
        Self::lerp(&self.b, i, t)
    }

    fn b_over_a(&self, x: f64) -> f64 {
        if x < self.x[0] {
            // ratio of the two head power laws, evaluated without underflow
            let r = x / self.x[0];
            let ka = self.head_exponent_a();
            let b0a0 = self.b[0] / self.a[0];
            return match self.head_exponent_b() {
                Some(hb) => b0a0 * r.powf(hb - ka),
                None => b0a0 * r.powf(1.0 - ka),
            };
        }
        self.b(x) / self.a(x)
    }
}

/// The degenerate coefficient pair `(a, b)`.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientProfile {
    /// `a(x) = x^k`, `b(x) = c x^h`.
    PowerLaw { k: f64, h: f64, c: f64 },
    Tabulated(CoefficientTable),
}

impl CoefficientProfile {
    /// Prototype family `a = x^k`, `b = c x^h`.
    ///
    /// Integrability of `b/a` (`h - k > -1`) is deliberately not checked here; the
    /// weight quadrature detects it.
    pub fn power_law(k: f64, h: f64, c: f64) -> Result<Self> {
        if !(k >= 0.0) || !k.is_finite() {
            return Err(Error::InvalidProfile(format!("exponent K must be >= 0, got {k}")));
        }
        if !h.is_finite() || !c.is_finite() {
            return Err(Error::InvalidProfile("non-finite drift parameters".into()));
        }
        if c != 0.0 && h < 0.0 {
            return Err(Error::InvalidProfile(format!(
                "b = c x^h must be continuous on [0,1], got h = {h}"
            )));
        }
        Ok(Self::PowerLaw { k, h, c })
    }

    pub fn tabulated(table: CoefficientTable) -> Self {
        Self::Tabulated(table)
    }

    pub fn a(&self, x: f64) -> f64 {
        match self {
            Self::PowerLaw { k, .. } => {
                if *k == 0.0 {
                    1.0
                } else {
                    x.powf(*k)
                }
            }
            Self::Tabulated(t) => t.a(x),
        }
    }

    pub fn a_prime(&self, x: f64) -> f64 {
        match self {
            Self::PowerLaw { k, .. } => {
                if *k == 0.0 {
                    0.0
                } else {
                    k * x.powf(k - 1.0)
                }
            }
            Self::Tabulated(t) => t.a_prime(x),
        }
    }

    pub fn b(&self, x: f64) -> f64 {
        match self {
            Self::PowerLaw { h, c, .. } => {
                if *c == 0.0 {
                    0.0
                } else if *h == 0.0 {
                    *c
                } else {
                    c * x.powf(*h)
                }
            }
            Self::Tabulated(t) => t.b(x),
        }
    }

    /// `b/a`, evaluated as a single power for the prototype so that it stays
    /// finite where `a` alone underflows.
    pub fn b_over_a(&self, x: f64) -> f64 {
        match self {
            Self::PowerLaw { k, h, c } => {
                if *c == 0.0 {
                    0.0
                } else {
                    c * x.powf(h - k)
                }
            }
            Self::Tabulated(t) => t.b_over_a(x),
        }
    }

    /// `x b / a`.
    pub fn x_b_over_a(&self, x: f64) -> f64 {
        match self {
            Self::PowerLaw { k, h, c } => {
                if *c == 0.0 {
                    0.0
                } else {
                    c * x.powf(h - k + 1.0)
                }
            }
            Self::Tabulated(t) => x * t.b_over_a(x),
        }
    }

    /// `x |a'| / a`, constant and equal to `K` for the prototype.
    pub fn degeneracy_quotient(&self, x: f64) -> f64 {
        match self {
            Self::PowerLaw { k, .. } => *k,
            Self::Tabulated(t) => x * t.a_prime(x).abs() / t.a(x),
        }
    }
}

/// Composite 5-point Gauss-Legendre integral of `f` over `[lo, hi]`.
fn gauss5(f: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    GL5_NODES
        .iter()
        .zip(GL5_WEIGHTS.iter())
        .map(|(&t, &w)| w * f(mid + half * t))
        .sum::<f64>()
        * half
}

/// The sampled weights `eta` and `sigma` for one profile.
#[derive(Debug, Clone)]
pub struct WeightPair {
    profile: CoefficientProfile,
    step: f64,
    /// `J(s_k) = int_{exp(-s_k)}^{1} b/a dx` at `s_k = k * step`.
    cumulative: Vec<f64>,
    j_half: f64,
    j_inf: f64,
    pub eta_at_1: f64,
    pub eta_at_0: f64,
    pub eta_min: f64,
    pub eta_max: f64,
}

impl WeightPair {
    pub fn profile(&self) -> &CoefficientProfile {
        &self.profile
    }

    fn integrand(&self) -> impl Fn(f64) -> f64 + '_ {
        move |s: f64| {
            let x = (-s).exp();
            self.profile.b_over_a(x) * x
        }
    }

    fn j_of_s(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let k = (s / self.step).floor() as usize;
        if k + 1 >= self.cumulative.len() {
            return self.j_inf;
        }
        let s_k = k as f64 * self.step;
        self.cumulative[k] + gauss5(&self.integrand(), s_k, s)
    }

    /// `eta(x)` for `x` in `[0, 1]`.
    pub fn eta(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return self.eta_at_0;
        }
        let s = -x.min(1.0).ln();
        (self.j_half - self.j_of_s(s)).exp()
    }

    /// `sigma(x) = a(x) / eta(x)` for `x` in `(0, 1]`.
    pub fn sigma(&self, x: f64) -> f64 {
        self.profile.a(x) / self.eta(x)
    }

    pub fn eta_ratio(&self) -> f64 {
        self.eta_max / self.eta_min
    }
}

/// Computes `eta` by quadrature of `b/a` and packages `eta`, `sigma` and their
/// extreme values.
///
/// `n_quad` sets the panel density: panels of width `8 / n_quad` in `s = -ln x`.
/// Fails with [`Error::DriftNotIntegrable`] when the tail of the integral toward
/// `x = 0` does not settle.
pub fn build_weights(profile: &CoefficientProfile, n_quad: usize) -> Result<WeightPair> {
    if n_quad < 64 {
        return Err(Error::InvalidProfile(format!("n_quad must be >= 64, got {n_quad}")));
    }
    let step = 8.0 / n_quad as f64;
    let n_panels = (S_MAX / step).ceil() as usize;
    let f = |s: f64| {
        let x = (-s).exp();
        profile.b_over_a(x) * x
    };
    let mut cumulative = Vec::with_capacity(n_panels + 1);
    cumulative.push(0.0);
    let mut acc = 0.0;
    for k in 0..n_panels {
        let lo = k as f64 * step;
        acc += gauss5(&f, lo, lo + step);
        cumulative.push(acc);
    }
    let j_inf = acc;
    let window = (TAIL_WINDOW / step).round() as usize;
    let tail = (j_inf - cumulative[n_panels - window]).abs();
    if !j_inf.is_finite() || tail > TAIL_TOL * j_inf.abs().max(1.0) {
        return Err(Error::DriftNotIntegrable { tail });
    }

    let mut weights = WeightPair {
        profile: profile.clone(),
        step,
        cumulative,
        j_half: 0.0,
        j_inf,
        eta_at_1: 1.0,
        eta_at_0: 1.0,
        eta_min: 1.0,
        eta_max: 1.0,
    };
    weights.j_half = weights.j_of_s(std::f64::consts::LN_2);
    weights.eta_at_1 = weights.j_half.exp();
    weights.eta_at_0 = (weights.j_half - j_inf).exp();
    let (lo, hi) = weights
        .cumulative
        .iter()
        .map(|j| (weights.j_half - j).exp())
        .fold((weights.eta_at_0, weights.eta_at_0), |(lo, hi), e| (lo.min(e), hi.max(e)));
    weights.eta_min = lo;
    weights.eta_max = hi;
    Ok(weights)
}

/// Whether `b/a` is integrable near zero, by the same tail test as
/// [`build_weights`].
pub fn drift_integrable(profile: &CoefficientProfile) -> bool {
    build_weights(profile, 64).is_ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    /// `K = 0`: no degeneracy (e.g. `a = 1`).
    None,
    /// Weakly degenerate, `K` in `(0, 1)`.
    Weak,
    /// Strongly degenerate, `K` in `[1, 2)`.
    Strong,
    /// `K >= 2`: outside the observable range.
    Supercritical,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::Weak => "WD",
            Self::Strong => "SD",
            Self::Supercritical => "supercritical",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegeneracyReport {
    pub k_measured: f64,
    pub classification: Classification,
    /// `||b||_inf / a(1)`.
    pub m: f64,
    /// `||x b / a||_inf`.
    pub m_inf: f64,
    pub hyp_b_over_a_l1: bool,
    pub hyp_xk_over_a_monotone: bool,
    pub hyp_xb_over_a_linf: bool,
    pub n_probe: usize,
}

const SNAP: f64 = 1e-12;

fn snap_k(k: f64) -> f64 {
    for target in [0.0, 1.0, 2.0] {
        if (k - target).abs() <= SNAP {
            return target;
        }
    }
    k
}

/// Probes `x |a'|/a`, `|b|` and `|x b/a|` on the grid `x_i = (i/n)^2`.
pub fn classify_degeneracy(profile: &CoefficientProfile, n_probe: usize) -> DegeneracyReport {
    let n = n_probe.max(128);
    let probes: Vec<f64> = (1..=n).map(|i| (i as f64 / n as f64).powi(2)).collect();

    let k_measured = snap_k(
        probes
            .iter()
            .map(|&x| profile.degeneracy_quotient(x))
            .fold(0.0, f64::max),
    );
    let classification = if k_measured <= 0.0 {
        Classification::None
    } else if k_measured < 1.0 {
        Classification::Weak
    } else if k_measured < 2.0 {
        Classification::Strong
    } else {
        Classification::Supercritical
    };

    let a1 = profile.a(1.0);
    let b_sup = probes.iter().map(|&x| profile.b(x).abs()).fold(0.0, f64::max);
    let m = b_sup / a1;
    let xba: Vec<f64> = probes.iter().map(|&x| profile.x_b_over_a(x).abs()).collect();
    let m_inf = xba.iter().copied().fold(0.0, f64::max);

    let monotone = probes.windows(2).all(|w| {
        let q0 = w[0].powf(k_measured) / profile.a(w[0]);
        let q1 = w[1].powf(k_measured) / profile.a(w[1]);
        q1 >= q0 * (1.0 - 1e-10)
    });
    let deep_bounded = [1e-8, 1e-12]
        .iter()
        .map(|&x| profile.x_b_over_a(x).abs())
        .all(|v| v.is_finite() && v <= m_inf * (1.0 + 1e-6) + 1e-300);

    DegeneracyReport {
        k_measured,
        classification,
        m,
        m_inf,
        hyp_b_over_a_l1: drift_integrable(profile),
        hyp_xk_over_a_monotone: monotone,
        hyp_xb_over_a_linf: m_inf.is_finite() && deep_bounded,
        n_probe: n,
    }
}

/// Which drift constant enters the observability threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Weakly degenerate or `K = 1`: uses `M`.
    WeakOrK1,
    /// Strongly degenerate with `K > 1`: uses `M_inf`.
    StrongKAbove1,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::WeakOrK1 => "WD_or_K1",
            Self::StrongKAbove1 => "SD_Kgt1",
        })
    }
}

impl DegeneracyReport {
    pub fn regime(&self) -> Regime {
        if self.k_measured > 1.0 {
            Regime::StrongKAbove1
        } else {
            Regime::WeakOrK1
        }
    }

    /// `M` or `M_inf`, whichever the regime uses.
    pub fn drift_constant(&self) -> f64 {
        match self.regime() {
            Regime::WeakOrK1 => self.m,
            Regime::StrongKAbove1 => self.m_inf,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlTimeBound {
    /// Sufficient observation/control horizon; `+inf` when `gap <= 0`.
    pub t0: f64,
    pub regime: Regime,
    /// `2 - K - 2M` or `2 - K - 2M_inf`.
    pub gap: f64,
}

/// `max{1, 1/a(1), K eta_max / (a(1) eta_min)}`.
pub fn boundary_term_factor(k: f64, a_at_1: f64, eta_ratio: f64) -> f64 {
    1.0f64.max(1.0 / a_at_1).max(k * eta_ratio / a_at_1)
}

/// Constant of the direct inequality: `2(2+K+M)T + 4 max{1/a(1), 1}`.
pub fn direct_constant(k: f64, m: f64, t: f64, a_at_1: f64) -> f64 {
    2.0 * (2.0 + k + m) * t + 4.0 * (1.0 / a_at_1).max(1.0)
}

/// Constant of the observability inequality: `T (2 - K - 2 m) - 8 max{...}`,
/// with `m` either `M` or `M_inf`. May be non-positive.
pub fn observability_constant(k: f64, m: f64, t: f64, a_at_1: f64, eta_ratio: f64) -> f64 {
    t * (2.0 - k - 2.0 * m) - 8.0 * boundary_term_factor(k, a_at_1, eta_ratio)
}

pub fn observability_time(
    report: &DegeneracyReport,
    weights: &WeightPair,
    a_at_1: f64,
) -> ControlTimeBound {
    let regime = report.regime();
    let k = report.k_measured;
    let gap = 2.0 - k - 2.0 * report.drift_constant();
    let t0 = if gap > 0.0 {
        8.0 * boundary_term_factor(k, a_at_1, weights.eta_ratio()) / gap
    } else {
        f64::INFINITY
    };
    ControlTimeBound { t0, regime, gap }
}
