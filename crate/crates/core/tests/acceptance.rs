//! End-to-end acceptance run: every criterion at its stated tolerance, one
//! PASS/FAIL line each, then a single assertion over all of them.
use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use degwave::cli::sine_state;
use degwave::coefficients::observability_constant;
use degwave::diagnostics::{
    energy, multiplier_residual, observability_check, sweep_observability, Multiplier, SweepSettings,
};
use degwave::evolution::{solve_homogeneous, Direction, SolveSettings};
use degwave::hum::{solve_hum, verify_null_control, CgSettings, FinalData, HumOperator, NullControlGates};
use degwave::random::{random_state, smooth_field, Lcg};
use degwave::{
    build_mesh, build_weights, untrapped_grading, classify_degeneracy, CoefficientProfile, DiscreteGenerator, WeightPair,
    WeightedVector,
};

struct Line {
    id: usize,
    passed: bool,
    detail: String,
}

fn setup(k: f64, c: f64, n: usize, p: f64) -> (WeightPair, DiscreteGenerator) {
    let prof = CoefficientProfile::power_law(k, k, c).unwrap();
    let w = build_weights(&prof, 256).unwrap();
    let g = DiscreteGenerator::new(&build_mesh(n, p).unwrap(), &w).unwrap();
    (w, g)
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn energy_conservation() -> Line {
    let mut passed = true;
    let mut parts = vec![];
    for (j, k) in [0.5, 1.0, 1.5].into_iter().enumerate() {
        let start = Instant::now();
        let (_, g) = setup(k, 0.1, 200, 2.0);
        let data = random_state(&g, 1000 + j as u64);
        let set = SolveSettings::for_horizon(10.0).with_store_every(1);
        let traj = solve_homogeneous(&data, 10.0, Direction::Forward, &g, &set).unwrap();
        let drift = energy(&traj, &g.ips).max_rel_drift;
        let el = start.elapsed();
        passed &= drift < 1e-7 && within(el, 5.0);
        parts.push(format!("K={k}: drift {drift:.2e} in {:.2}s", el.as_secs_f64()));
    }
    Line { id: 1, passed, detail: parts.join("; ") }
}

fn nondegenerate_oracle() -> Line {
    let start = Instant::now();
    let (w, g) = setup(0.0, 0.0, 400, 1.0);
    let data = sine_state(&g);
    let set = SolveSettings::for_horizon(2.0).with_dt(2.0 / 4096.0);
    let traj = solve_homogeneous(&data, 2.0, Direction::Forward, &g, &set).unwrap();
    let report = classify_degeneracy(w.profile(), 512);
    let c = observability_check(&traj, &g.ips, &report, &w, 2.0).unwrap();
    let e_exact = PI * PI / 4.0;
    let e_err = (c.e0 - e_exact).abs() / e_exact;
    let r_err = (c.ratio - 4.0).abs() / 4.0;
    let el = start.elapsed();
    Line {
        id: 2,
        passed: e_err < 0.01 && r_err < 0.02 && c.passes_upper && within(el, 10.0),
        detail: format!(
            "E0 {:.6} (rel err {e_err:.2e}), ratio {:.6} (rel err {r_err:.2e}), upper {:.1}, {:.2}s",
            c.e0, c.ratio, c.upper_const, el.as_secs_f64()
        ),
    }
}

fn ensemble_checks(k: f64, c: f64, members: u64) -> Vec<degwave::diagnostics::ObservabilityCheck> {
    let (w, g) = setup(k, c, 200, 2.0f64.min(untrapped_grading(k)));
    let report = classify_degeneracy(w.profile(), 512);
    let set = SolveSettings::for_horizon(8.0);
    (0..members)
        .map(|j| {
            let data = random_state(&g, 1 + j);
            let traj = solve_homogeneous(&data, 8.0, Direction::Forward, &g, &set).unwrap();
            observability_check(&traj, &g.ips, &report, &w, 8.0).unwrap()
        })
        .collect()
}

fn direct_inequality() -> Line {
    let start = Instant::now();
    let mut passed = true;
    let mut parts = vec![];
    for k in [0.5, 1.5] {
        let checks = ensemble_checks(k, 0.1, 50);
        let ok = checks.iter().filter(|c| c.passes_upper).count();
        let worst = checks.iter().map(|c| c.ratio).fold(0.0, f64::max);
        // 2(2 + K + M) T + 4 max(1/a(1), 1) with M = 0.1, T = 8, a(1) = 1
        let expected_upper = 16.0 * (2.1 + k) + 4.0;
        passed &= ok == 50 && (checks[0].upper_const - expected_upper).abs() < 1e-9;
        parts.push(format!("K={k}: {ok}/50, max ratio {worst:.4} <= {:.2}", checks[0].upper_const));
    }
    let el = start.elapsed();
    passed &= within(el, 120.0);
    Line { id: 3, passed, detail: format!("{}; {:.1}s", parts.join("; "), el.as_secs_f64()) }
}

fn observability_lower_bound() -> Line {
    let start = Instant::now();
    let checks = ensemble_checks(0.5, 0.1, 50);
    let lower = checks[0].lower_const;
    // T (2 - K - 2M) - 8 max{1, 1/a(1), K eta_max/(a(1) eta_min)} = 8 * 1.3 - 8
    let lower_ok = (lower - 2.4).abs() < 1e-9
        && (observability_constant(0.5, 0.1, 8.0, 1.0, 0.1f64.exp()) - 2.4).abs() < 1e-12;
    let ok = checks.iter().filter(|c| c.ratio >= 0.95 * 2.4).count();
    let min = checks.iter().map(|c| c.ratio).fold(f64::INFINITY, f64::min);
    let el = start.elapsed();
    Line {
        id: 4,
        passed: lower_ok && ok == 50 && within(el, 120.0),
        detail: format!("{ok}/50 with ratio >= 2.28, min ratio {min:.4}, lower const {lower:.4}, {:.1}s", el.as_secs_f64()),
    }
}

fn identity_residuals(n: usize, steps: f64) -> [f64; 2] {
    let t = 2.0;
    let (w, g) = setup(0.5, 0.0, n, 2.0);
    let data = sine_state(&g);
    let set = SolveSettings::for_horizon(t).with_dt(t / steps).with_store_every(1);
    let traj = solve_homogeneous(&data, t, Direction::Forward, &g, &set).unwrap();
    [Multiplier::XSquared, Multiplier::X]
        .map(|m| multiplier_residual(&traj, m, &w, &g.mesh, &g.ips).unwrap().relative_residual)
}

fn multiplier_identities() -> Line {
    let start = Instant::now();
    let coarse = identity_residuals(200, 2048.0);
    let fine = identity_residuals(400, 4096.0);
    let el = start.elapsed();
    let passed = (0..2).all(|i| fine[i] < 0.02 && coarse[i] / fine[i] >= 1.8) && within(el, 60.0);
    Line {
        id: 5,
        passed,
        detail: format!(
            "x^2: {:.3e} -> {:.3e} (x{:.2}); x: {:.3e} -> {:.3e} (x{:.2}); {:.1}s",
            coarse[0],
            fine[0],
            coarse[0] / fine[0],
            coarse[1],
            fine[1],
            coarse[1] / fine[1],
            el.as_secs_f64()
        ),
    }
}

fn hum_null_control() -> Line {
    let start = Instant::now();
    let (w, g) = setup(0.5, 0.0, 200, 1.0);
    let data = sine_state(&g);
    let set = SolveSettings::for_horizon(8.0).with_dt(8.0 / 4096.0);
    let cg = CgSettings { tol: 1e-8, max_iter: 400 };
    let sol = solve_hum(&data.y, &data.v, 8.0, &cg, &g, &w, &set).unwrap();
    let rep = verify_null_control(&sol, &sol.trajectory, &g, set.linear_tol, &NullControlGates::default()).unwrap();
    let el = start.elapsed();
    Line {
        id: 6,
        passed: rep.u_ratio < 1e-3 && rep.ut_ratio < 1e-2 && sol.cg_iterations <= 200 && within(el, 180.0),
        detail: format!(
            "|u(T)|/|u0| {:.2e}, |u_t(T)|/|u0| {:.2e}, {} CG iterations, |f| {:.4}, {:.1}s",
            rep.u_ratio,
            rep.ut_ratio,
            sol.cg_iterations,
            rep.control_l2_norm,
            el.as_secs_f64()
        ),
    }
}

fn gramian_structure() -> Line {
    let start = Instant::now();
    let (_, g) = setup(0.5, 0.0, 200, 1.0);
    let op = HumOperator::new(&g, 8.0, &SolveSettings::for_horizon(8.0)).unwrap();
    let h0 = |a: &FinalData, b: &FinalData| g.ips.ip_h0((&a.v0, &a.v1), (&b.v0, &b.v1)).unwrap();
    let random = |seed| {
        let s = random_state(&g, seed);
        FinalData { v0: s.y, v1: s.v }
    };
    let mut worst: f64 = 0.0;
    let mut min_pos = f64::INFINITY;
    for j in 0..10 {
        let v = random(500 + j);
        let w = random(600 + j);
        let gv = op.apply(&v).unwrap();
        let gw = op.apply(&w).unwrap();
        let (vv, ww) = (h0(&gv, &v), h0(&gw, &w));
        min_pos = min_pos.min(vv);
        worst = worst.max((h0(&gv, &w) - h0(&v, &gw)).abs() / (vv * ww).sqrt());
    }
    let el = start.elapsed();
    Line {
        id: 7,
        passed: worst < 1e-8 && min_pos > 0.0 && within(el, 120.0),
        detail: format!("max symmetry defect {worst:.2e}, min <GV,V> {min_pos:.4e}, {:.1}s", el.as_secs_f64()),
    }
}

fn failure_trend() -> Line {
    let start = Instant::now();
    let settings = SweepSettings {
        n_cells: 200,
        grading_p: 2.0,
        solve: SolveSettings::for_horizon(8.0),
        base_seed: 1,
    };
    let grid = [0.5, 1.0, 1.5, 1.9, 2.2];
    let rows = sweep_observability(&grid, 8.0, 20, &settings).unwrap();
    let c: Vec<f64> = rows.iter().map(|r| r.c_est).collect();
    let decreasing = c.windows(2).all(|w| w[1] < w[0]);
    let el = start.elapsed();
    Line {
        id: 8,
        passed: decreasing && c[4] < 0.1 * c[0] && within(el, 600.0),
        detail: format!(
            "C_est {}; C(2.2)/C(0.5) = {:.3e}; {:.1}s",
            c.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>().join(" > "),
            c[4] / c[0],
            el.as_secs_f64()
        ),
    }
}

fn hardy_poincare() -> Line {
    let start = Instant::now();
    let (_, g) = setup(0.5, 0.0, 800, 2.0);
    let v = g.mesh.sample(|x| x * (1.0 - x));
    // B(2.5, 3) / (1/3)
    let exact = 0.050_793_650_793_650_79 * 3.0;
    let q = g.ips.hardy_quotient(&v).unwrap();
    let rel = (q - exact).abs() / exact;
    let max_q = (0..100)
        .map(|j| {
            let f = WeightedVector::new(smooth_field(&mut Lcg::new(10_000 + j), 801));
            g.ips.hardy_quotient(&f).unwrap()
        })
        .fold(0.0, f64::max);
    let el = start.elapsed();
    // a = x^0.5 and eta = 1 give 1/sigma <= 1/x^2, so the classical Hardy constant 4 bounds the quotient
    Line {
        id: 9,
        passed: rel < 0.02 && max_q.is_finite() && max_q <= 4.0 && within(el, 30.0),
        detail: format!("quotient {q:.6} (rel err {rel:.2e}), ensemble max {max_q:.4e}, {:.2}s", el.as_secs_f64()),
    }
}

// runs without the libtest harness so the PASS/FAIL lines are never captured
fn main() -> ExitCode {
    let lines = vec![
        energy_conservation(),
        nondegenerate_oracle(),
        direct_inequality(),
        observability_lower_bound(),
        multiplier_identities(),
        hum_null_control(),
        gramian_structure(),
        failure_trend(),
        hardy_poincare(),
    ];
    for l in &lines {
        println!("criterion {}: {} | {}", l.id, if l.passed { "PASS" } else { "FAIL" }, l.detail);
    }
    let failed: Vec<usize> = lines.iter().filter(|l| !l.passed).map(|l| l.id).collect();
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
