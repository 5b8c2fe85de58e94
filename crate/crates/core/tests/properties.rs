use degwave::evolution::{solve_homogeneous, Direction, SolveSettings, State};
use degwave::random::{random_state, smooth_field, Lcg};
use degwave::{build_mesh, build_weights, untrapped_grading, CoefficientProfile, DiscreteGenerator, WeightedVector};
use degwave::diagnostics::state_energy;
use proptest::prelude::*;

fn generator(k: f64, c: f64, n: usize, p: f64) -> DiscreteGenerator {
    let prof = CoefficientProfile::power_law(k, k, c).unwrap();
    let w = build_weights(&prof, 128).unwrap();
    DiscreteGenerator::new(&build_mesh(n, p).unwrap(), &w).unwrap()
}

fn field(seed: u64, n: usize) -> Vec<f64> {
    let mut f = smooth_field(&mut Lcg::new(seed), n);
    f[0] = 0.0;
    f[n - 1] = 0.0;
    f
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

fn coeffs() -> impl Strategy<Value = (f64, f64, usize, f64)> {
    (0.0..2.4f64, 0.0..0.5f64, 8usize..80, 1.0..3.0f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn energy_product_is_symmetric_and_positive((k, c, n, p) in coeffs(), s1 in 0u64..1000, s2 in 0u64..1000) {
        let g = generator(k, c, n, p);
        let (y1, v1, y2, v2) = (field(s1, n + 1), field(s1 + 7, n + 1), field(s2, n + 1), field(s2 + 7, n + 1));
        let ab = g.ips.h0(&y1, &v1, &y2, &v2);
        let ba = g.ips.h0(&y2, &v2, &y1, &v1);
        prop_assert!(close(ab, ba, 1e-13));
        prop_assert!(g.ips.h0(&y1, &v1, &y1, &v1) > 0.0);
    }

    #[test]
    fn generator_is_self_adjoint_and_dissipative((k, c, n, p) in coeffs(), s1 in 0u64..1000, s2 in 0u64..1000) {
        let g = generator(k, c, n, p);
        let (y, z) = (field(s1, n + 1), field(s2, n + 1));
        let (ay, az) = (g.apply_raw(&y), g.apply_raw(&z));
        prop_assert!(close(g.ips.l2(&ay, &z), g.ips.l2(&y, &az), 1e-10));
        // summation by parts: <A y, y> = -sum kappa (y_{i+1} - y_i)^2
        let sbp: f64 = g.kappa.iter().zip(y.windows(2)).map(|(k, w)| k * (w[1] - w[0]).powi(2)).sum();
        prop_assert!(close(g.ips.l2(&ay, &y), -sbp, 1e-10));
        prop_assert!(g.ips.l2(&ay, &y) < 0.0);
    }

    #[test]
    fn hardy_quotient_ignores_scale((k, c, n, p) in coeffs(), seed in 0u64..1000, s in -50.0..50.0f64) {
        prop_assume!(s.abs() > 1e-3);
        let g = generator(k, c, n, p);
        let v = WeightedVector::new(field(seed, n + 1));
        let q = g.ips.hardy_quotient(&v).unwrap();
        prop_assert!(close(q, g.ips.hardy_quotient(&v.scaled(s)).unwrap(), 1e-12));
        prop_assert!(q >= 0.0);
    }

    #[test]
    fn evolution_is_linear_and_conservative((k, c, n, p) in coeffs(), s1 in 0u64..1000, s2 in 0u64..1000, alpha in -3.0..3.0f64) {
        let g = generator(k, c, n, p);
        let set = SolveSettings::for_horizon(1.0).with_dt(1.0 / 128.0);
        let (d1, d2) = (random_state(&g, s1), random_state(&g, s2));
        let comb = |a: &[f64], b: &[f64]| WeightedVector::new(a.iter().zip(b).map(|(x, y)| alpha * x + y).collect());
        let d3 = State::new(comb(&d1.y.values, &d2.y.values), comb(&d1.v.values, &d2.v.values));
        let run = |d: &State| solve_homogeneous(d, 1.0, Direction::Forward, &g, &set).unwrap();
        let (t1, t2, t3) = (run(&d1), run(&d2), run(&d3));
        let (f1, f2, f3) = (t1.final_state(), t2.final_state(), t3.final_state());
        let scale = 1.0 + alpha.abs();
        for i in 0..=n {
            prop_assert!((alpha * f1.y.values[i] + f2.y.values[i] - f3.y.values[i]).abs() < 1e-9 * scale);
        }
        let (e0, e1) = (state_energy(&d3, &g.ips), state_energy(f3, &g.ips));
        prop_assert!(close(e0, e1, 1e-9));
    }

    #[test]
    fn backward_solve_undoes_forward((k, c, n, p) in coeffs(), seed in 0u64..1000) {
        let g = generator(k, c, n, p);
        let set = SolveSettings::for_horizon(0.5).with_dt(0.5 / 64.0);
        let data = random_state(&g, seed);
        let fwd = solve_homogeneous(&data, 0.5, Direction::Forward, &g, &set).unwrap();
        let back = solve_homogeneous(fwd.final_state(), 0.5, Direction::Backward, &g, &set).unwrap();
        let s0 = back.initial_state();
        for i in 0..=n {
            prop_assert!((s0.y.values[i] - data.y.values[i]).abs() < 1e-9);
            prop_assert!((s0.v.values[i] - data.v.values[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn random_data_is_reproducible_and_normalized((k, c, n, p) in coeffs(), seed in any::<u64>()) {
        let g = generator(k, c, n, p);
        let (a, b) = (random_state(&g, seed), random_state(&g, seed));
        prop_assert_eq!(&a, &b);
        prop_assert!(close(g.ips.h0(&a.y.values, &a.v.values, &a.y.values, &a.v.values), 1.0, 1e-12));
        prop_assert_eq!(a.y.left(), 0.0);
        prop_assert_eq!(a.y.right(), 0.0);
    }

    #[test]
    fn mesh_nodes_are_increasing_and_pinned(n in 2usize..500, p in 1.0..4.0f64) {
        let m = build_mesh(n, p).unwrap();
        prop_assert_eq!(m.nodes[0], 0.0);
        prop_assert_eq!(m.nodes[n], 1.0);
        prop_assert!(m.cell_widths.iter().all(|&h| h > 0.0));
        prop_assert!(close(m.cell_widths.iter().sum::<f64>(), 1.0, 1e-14));
    }

    #[test]
    fn capped_grading_keeps_local_frequency_nondecreasing(k in 0.0..2.5f64, n in 10usize..400) {
        let p = untrapped_grading(k);
        let m = build_mesh(n, p).unwrap();
        let freq: Vec<f64> = m.midpoints.iter().zip(&m.cell_widths).map(|(x, h)| x.powf(0.5 * k) / h).collect();
        // no outward drop beyond a few percent once cells follow the power-law
        // scaling (the first few carry O(p^2 / i^2) corrections); the cap itself is the flat case
        let mut floor = f64::INFINITY;
        for w in freq[n / 4..].iter().rev() {
            prop_assert!(*w <= 1.05 * floor, "p = {}", p);
            floor = floor.min(*w);
        }
    }
}
