use degwave::evolution::{solve_controlled, solve_homogeneous, Direction, SolveSettings, State};
use degwave::hum::{apply_gramian, rhs_functional, solve_hum, verify_null_control, CgSettings, FinalData, HumOperator, NullControlGates};
use degwave::random::random_state;
use degwave::{build_mesh, build_weights, CoefficientProfile, DiscreteGenerator, WeightPair, WeightedVector};

fn setup(k: f64, c: f64, n: usize) -> (WeightPair, DiscreteGenerator) {
    let prof = CoefficientProfile::power_law(k, k, c).unwrap();
    let w = build_weights(&prof, 256).unwrap();
    let g = DiscreteGenerator::new(&build_mesh(n, 1.0).unwrap(), &w).unwrap();
    (w, g)
}

fn random_final(g: &DiscreteGenerator, seed: u64) -> FinalData {
    let s = random_state(g, seed);
    FinalData { v0: s.y, v1: s.v }
}

fn h0(g: &DiscreteGenerator, a: &FinalData, b: &FinalData) -> f64 {
    g.ips.ip_h0((&a.v0, &a.v1), (&b.v0, &b.v1)).unwrap()
}

/// `<u1, w(0)> - <u0, w_t(0)>` with `w` the backward solution from `W`.
fn direct_functional(g: &DiscreteGenerator, u0: &WeightedVector, u1: &WeightedVector, w: &FinalData, t: f64, set: &SolveSettings) -> f64 {
    let traj = solve_homogeneous(&State::new(w.v0.clone(), w.v1.clone()), t, Direction::Backward, g, set).unwrap();
    let s0 = traj.initial_state();
    g.ips.l2(&u1.values, &s0.y.values) - g.ips.l2(&u0.values, &s0.v.values)
}

#[test]
fn gramian_is_symmetric_and_positive() {
    let (_, g) = setup(0.5, 0.0, 60);
    let t = 6.0;
    let set = SolveSettings::for_horizon(t);
    let op = HumOperator::new(&g, t, &set).unwrap();
    for seed in 0..4 {
        let v = random_final(&g, 100 + seed);
        let w = random_final(&g, 200 + seed);
        let gv = op.apply(&v).unwrap();
        let gw = op.apply(&w).unwrap();
        let (a, b) = (h0(&g, &gv, &w), h0(&g, &v, &gw));
        let scale = (h0(&g, &gv, &v) * h0(&g, &gw, &w)).sqrt();
        assert!((a - b).abs() < 1e-10 * scale, "asymmetry {a} vs {b}");
        assert!(h0(&g, &gv, &v) > 0.0);
    }
}

#[test]
fn zero_final_data_maps_to_zero() {
    let (_, g) = setup(1.5, 0.2, 20);
    let set = SolveSettings::for_horizon(2.0);
    let z = FinalData::zeros(21);
    let gz = apply_gramian(&z, 2.0, &g, &set).unwrap();
    assert!(gz.v0.values.iter().chain(&gz.v1.values).all(|&x| x == 0.0));
}

#[test]
fn rhs_matches_direct_functional() {
    let (_, g) = setup(0.5, 0.1, 50);
    let t = 3.0;
    let set = SolveSettings::for_horizon(t);
    let data = random_state(&g, 7);
    let rhs = rhs_functional(&data.y, &data.v, t, &g, &set).unwrap();
    for seed in 0..10 {
        let w = random_final(&g, 30 + seed);
        let expected = direct_functional(&g, &data.y, &data.v, &w, t, &set);
        let got = h0(&g, &rhs, &w);
        assert!((got - expected).abs() < 1e-8 * expected.abs().max(1e-3), "{got} vs {expected}");
    }
}

#[test]
fn observation_and_lifting_are_adjoint() {
    let (_, g) = setup(1.2, 0.3, 40);
    let t = 2.0;
    let set = SolveSettings::for_horizon(t);
    let op = HumOperator::new(&g, t, &set).unwrap();
    let v = random_final(&g, 5);
    // arbitrary control f
    let f: Vec<f64> = (0..=op.n_steps()).map(|k| (0.01 * k as f64).sin() + 0.3).collect();
    let obs = op.control_for(&v).unwrap();
    let dt = op.dt();
    let n = op.n_steps();
    let pairing: f64 = (0..=n)
        .map(|k| {
            let w = if k == 0 || k == n { 0.5 * dt } else { dt };
            w * f[k] * obs[k]
        })
        .sum();
    let z = WeightedVector::zeros(41);
    let mut u0 = z.clone();
    u0.values[40] = f[0];
    let traj = solve_controlled(&u0, &z, &f, t, &g, &set).unwrap();
    let fin = traj.final_state();
    let lhs = g.ips.l2(&fin.y.values[..40], &v.v1.values[..40])
        - g.ips.l2(&fin.v.values[..40], &v.v0.values[..40]);
    let eta1 = g.ips.eta_at_1;
    assert!((lhs - eta1 * pairing).abs() < 1e-9 * lhs.abs().max(1e-6), "{lhs} vs {}", eta1 * pairing);
}

#[test]
fn hum_is_linear_and_zero_problem_is_trivial() {
    let (w, g) = setup(0.5, 0.0, 40);
    let t = 7.0;
    let set = SolveSettings::for_horizon(t);
    let cg = CgSettings::default();
    let z = WeightedVector::zeros(41);
    let sol = solve_hum(&z, &z, t, &cg, &g, &w, &set).unwrap();
    assert_eq!(sol.cg_iterations, 0);
    assert!(sol.f.iter().all(|&x| x == 0.0));
    let rep = verify_null_control(&sol, &sol.trajectory, &g, 1e-10, &NullControlGates::default()).unwrap();
    assert!(rep.passes && rep.final_u_norm == 0.0);

    let data = random_state(&g, 11);
    let one = solve_hum(&data.y, &data.v, t, &cg, &g, &w, &set).unwrap();
    let two = solve_hum(&data.y.scaled(2.0), &data.v.scaled(2.0), t, &cg, &g, &w, &set).unwrap();
    let fmax = one.f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for (a, b) in one.f.iter().zip(&two.f) {
        assert!((2.0 * a - b).abs() < 1e-6 * fmax);
    }
    let rep = verify_null_control(&one, &one.trajectory, &g, 1e-10, &NullControlGates::default()).unwrap();
    assert!(rep.passes, "{rep:?}");
}
