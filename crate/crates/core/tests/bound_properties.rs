use proptest::prelude::*;
use selfnorm::bounds::*;

fn eval(kind: BoundKind, params: RateInputs) -> f64 {
    evaluate_bound(&BoundSpec::new(kind, params).unwrap()).unwrap()
}

fn freedman(x: f64, l: f64, a: f64) -> f64 {
    eval(BoundKind::Freedman, RateInputs { x: Some(x), l: Some(l), a: Some(a), ..Default::default() })
}

fn dvz(x: f64, l: f64, a: f64) -> f64 {
    eval(BoundKind::Dvz, RateInputs { x: Some(x), l: Some(l), a: Some(a), ..Default::default() })
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

proptest! {
    #[test]
    fn f_is_quadratic_times_psi(x in 1e-3f64..20.0, y in 0.0f64..10.0) {
        let f = f_rate(x, y).unwrap();
        let via_psi = x * x * psi(x * y).unwrap() / 2.0;
        prop_assert!(close(f, via_psi, 1e-10), "{f} vs {via_psi}");
    }

    #[test]
    fn psi_dominates_bernstein_factor(x in 0.0f64..1e3) {
        prop_assert!(psi(x).unwrap() >= 1.0 / (1.0 + x / 3.0) * (1.0 - 1e-14));
    }

    #[test]
    fn psi_decreasing(x in 0.0f64..100.0, dx in 1e-3f64..10.0) {
        prop_assert!(psi(x + dx).unwrap() <= psi(x).unwrap());
    }

    #[test]
    fn f_dominates_bernstein_rate(x in 0.0f64..50.0, y in 0.0f64..10.0) {
        prop_assert!(f_rate(x, y).unwrap() >= bernstein_rate(x, y) * (1.0 - 1e-14));
    }

    #[test]
    fn lambda_star_maximizes(x in 1e-2f64..10.0, y in 0.0f64..5.0, h in -0.5f64..0.5) {
        let g = |l: f64| l * x - exp_compensator(l, y);
        let ls = optimal_lambda(x, y).unwrap();
        prop_assert!(close(g(ls), f_rate(x, y).unwrap(), 1e-9));
        let other = (ls * (1.0 + h)).max(0.0);
        prop_assert!(g(other) <= g(ls) + 1e-12 * g(ls).abs());
    }

    #[test]
    fn beta_lambda_maximizes(x in 1e-2f64..10.0, beta in 1.05f64..1.95, h in -0.5f64..0.5) {
        let g = |l: f64| l * x - l.powf(beta);
        let ls = optimal_lambda_beta(x, beta).unwrap();
        prop_assert!(close(g(ls), beta_rate(x, beta).unwrap(), 1e-9));
        prop_assert!(g(ls * (1.0 + h)) <= g(ls) + 1e-12 * g(ls).abs());
    }

    #[test]
    fn dvz_sharper_than_freedman(x in 0.0f64..20.0, l in 1e-2f64..20.0, a in 0.0f64..5.0) {
        prop_assert!(dvz(x, l, a) <= freedman(x, l, a) * (1.0 + 1e-12));
    }

    #[test]
    fn plain_bounds_decrease_in_x(x in 0.0f64..10.0, dx in 1e-3f64..5.0, y in 0.0f64..3.0, z in 0.1f64..10.0) {
        let x2 = x + dx;
        prop_assert!(freedman(x2, z, y) <= freedman(x, z, y));
        prop_assert!(dvz(x2, z, y) <= dvz(x, z, y));
        let t21 = |x: f64| eval(BoundKind::Thm21Point, RateInputs { x: Some(x), y: Some(y), z: Some(z), ..Default::default() });
        prop_assert!(t21(x2) <= t21(x));
        let dlp = |x: f64| eval(BoundKind::DlpPoint, RateInputs { x: Some(x), y: Some(z), ..Default::default() });
        prop_assert!(dlp(x2) <= dlp(x));
        let del = |x: f64| eval(BoundKind::Delyon, RateInputs { x: Some(x), y: Some(z), ..Default::default() });
        prop_assert!(del(x2) <= del(x));
        let bt = |x: f64| eval(BoundKind::BercuTouati, RateInputs { x: Some(x), a: Some(y), b: Some(z), y: Some(y), ..Default::default() });
        prop_assert!(bt(x2) <= bt(x));
    }

    // The peeling prefactor grows with x, so these bounds only decrease once
    // the Gaussian factor dominates: from x = 0 when M = 1, or from x >= 1.
    #[test]
    fn peeling_bounds_decrease_in_x(x in 1.0f64..10.0, dx in 1e-3f64..5.0, m in 1.0f64..50.0, y in 0.0f64..1.0, b in 1.0f64..5.0) {
        let x2 = x + dx;
        let t22 = |x: f64| eval(BoundKind::Thm22Peeling, RateInputs { x: Some(x), y: Some(y), b: Some(b), m: Some(m), ..Default::default() });
        prop_assert!(t22(x2) <= t22(x));
        let c22 = |x: f64| eval(BoundKind::Cor22Peeling, RateInputs { x: Some(x), m: Some(m), ..Default::default() });
        prop_assert!(c22(x2) <= c22(x));
        let t22_one = |x: f64| eval(BoundKind::Thm22Peeling, RateInputs { x: Some(x), y: Some(y), b: Some(b), m: Some(1.0), ..Default::default() });
        prop_assert!(t22_one(x2 - 1.0) <= t22_one(x - 1.0));
    }

    #[test]
    fn beta_peeling_decreases_in_x(x in 2.0f64..10.0, dx in 1e-3f64..5.0, m in 1.0f64..50.0, beta in 1.05f64..1.95) {
        let t24 = |x: f64| eval(BoundKind::Thm24Peeling, RateInputs { x: Some(x), beta: Some(beta), m: Some(m), ..Default::default() });
        prop_assert!(t24(x + dx) <= t24(x));
    }

    #[test]
    fn tstat_bound_is_transformed_peeling(x in 1e-2f64..5.0, n in 2u64..500, m in 1.0f64..20.0) {
        let t31 = eval(BoundKind::Thm31Tstat, RateInputs { x: Some(x), n: Some(n), m: Some(m), ..Default::default() });
        let nf = n as f64;
        let xt = x * (nf / (nf + x * x - 1.0)).sqrt();
        let t25 = eval(BoundKind::Thm25Peeling, RateInputs { x: Some(xt), m: Some(m), ..Default::default() });
        prop_assert!(close(t31, t25, 1e-12), "{t31} vs {t25}");
    }

    #[test]
    fn peeling_reduces_to_corollary(x in 0.0f64..10.0, m in 1.0f64..20.0, b in 0.1f64..5.0) {
        let t22 = eval(BoundKind::Thm22Peeling, RateInputs { x: Some(x), y: Some(0.0), b: Some(b), m: Some(m), ..Default::default() });
        let c22 = eval(BoundKind::Cor22Peeling, RateInputs { x: Some(x), m: Some(m), ..Default::default() });
        prop_assert!(close(t22, c22, 1e-14));
    }

    #[test]
    fn dvz_without_truncation_is_freedman(x in 0.0f64..20.0, l in 1e-2f64..20.0) {
        prop_assert!(close(dvz(x, l, 0.0), freedman(x, l, 0.0), 1e-12));
    }
}
