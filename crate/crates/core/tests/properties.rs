use harvest_core::diagram::relative_distance;
use harvest_core::grid::{build_grid, DiscreteField};
use harvest_core::model::Nonlinearity;
use harvest_core::solver::Problem;
use proptest::prelude::*;

fn field(coef: &[f64]) -> DiscreteField {
    let d = build_grid(63, 1.0).unwrap();
    d.sample(|x| {
        coef.iter()
            .enumerate()
            .map(|(k, c)| c * ((k + 1) as f64 * std::f64::consts::PI * x).sin())
            .sum()
    })
}

proptest! {
    #[test]
    fn ramp_is_convex_and_vanishes_below_threshold(m in 0.0..1.0_f64, p in 3u32..6, u in -3.0..3.0_f64) {
        let nl = Nonlinearity::new(m, p).unwrap();
        let (f, f1, f2) = nl.eval(u);
        prop_assert!(f >= 0.0 && f1 >= 0.0 && f2 >= 0.0);
        if u <= m {
            prop_assert_eq!((f, f1, f2), (0.0, 0.0, 0.0));
        }
        // F(u) is the antiderivative of f
        let e = 1e-6;
        let fd = (nl.antiderivative(u + e) - nl.antiderivative(u - e)) / (2.0 * e);
        prop_assert!((fd - f).abs() <= 1e-6 * f.abs().max(1.0));
    }

    #[test]
    fn laplacian_is_symmetric_and_negative(a in prop::collection::vec(-1.0..1.0_f64, 5), b in prop::collection::vec(-1.0..1.0_f64, 5)) {
        let d = build_grid(63, 1.0).unwrap();
        let lap = d.assemble_laplacian();
        let (u, v) = (field(&a), field(&b));
        let (lu, lv) = (lap.apply(&u), lap.apply(&v));
        let x = d.dot(&lu, &v);
        let y = d.dot(&u, &lv);
        prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
        prop_assert!(d.dot(&lu, &u) <= 0.0);
    }

    #[test]
    fn relative_distance_is_a_symmetric_premetric(a in prop::collection::vec(-2.0..2.0_f64, 4), b in prop::collection::vec(-2.0..2.0_f64, 4)) {
        let p = Problem::new(build_grid(63, 1.0).unwrap(), Nonlinearity::new(0.2, 3).unwrap(), Default::default()).unwrap();
        let (u, v) = (field(&a), field(&b));
        prop_assert_eq!(relative_distance(&p, &u, &u), 0.0);
        let x = relative_distance(&p, &u, &v);
        prop_assert!((x - relative_distance(&p, &v, &u)).abs() < 1e-15);
        prop_assert!(x >= 0.0);
    }
}
