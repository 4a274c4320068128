use gsicast_core::models::{adjusted_r2, mse, r2};
use gsicast_core::Error;
use proptest::prelude::*;

#[test]
fn hand_computed_values() {
    assert!((adjusted_r2(0.9, 101, 10).unwrap() - 0.888_888_888_888_888_9).abs() < 1e-12);
    assert!((adjusted_r2(0.5, 11, 1).unwrap() - 0.444_444_444_444_444_4).abs() < 1e-12);
    assert!((adjusted_r2(1.0, 20, 5).unwrap() - 1.0).abs() < 1e-12);

    let a = [1.0, 2.0, 3.0, 4.0];
    assert!((r2(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    // Predicting the mean scores zero.
    assert!(r2(&a, &[2.5; 4]).unwrap().abs() < 1e-12);
    // SSE = 1, SST = 5.
    assert!((r2(&a, &[1.0, 2.0, 3.0, 5.0]).unwrap() - 0.8).abs() < 1e-12);
    assert!((mse(&a, &[1.0, 2.0, 3.0, 5.0]) - 0.25).abs() < 1e-12);
}

#[test]
fn undefined_cases_are_errors() {
    assert!(matches!(adjusted_r2(0.9, 11, 10), Err(Error::UndefinedMetric(_))));
    assert!(matches!(r2(&[3.0, 3.0, 3.0], &[1.0, 2.0, 3.0]), Err(Error::UndefinedMetric(_))));
    assert!(matches!(r2(&[1.0], &[1.0]), Err(Error::UndefinedMetric(_))));
    assert!(matches!(r2(&[1.0, 2.0], &[1.0]), Err(Error::Shape(_))));
}

proptest! {
    #[test]
    fn adjustment_never_raises_the_score(r in -5.0f64..1.0, p in 1usize..50, extra in 2usize..500) {
        prop_assume!(r < 1.0);
        let n = p + extra;
        let adj = adjusted_r2(r, n, p).unwrap();
        prop_assert!(adj <= r);
    }

    #[test]
    fn r2_is_at_most_one(v in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 2..40)) {
        let (a, p): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
        prop_assume!(a.iter().any(|x| (x - a[0]).abs() > 1e-6));
        prop_assert!(r2(&a, &p).unwrap() <= 1.0 + 1e-12);
    }
}
