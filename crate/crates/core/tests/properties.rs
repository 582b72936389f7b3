mod common;

use bregman_dlnn::kernel::BregmanKernel;
use bregman_dlnn::model::{self, soft_threshold, Regularizer};
use bregman_dlnn::optim::{closed_form_gamma, inertia::closed_form_gamma_n2};
use bregman_dlnn::prox::{self, radius_equation_residual, solve_radius};
use ndarray::Array2;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bregman_distance_non_negative(seed in any::<u64>(), n in 2usize..=5, radius in 0.01f64..5.0) {
        let mut rng = common::rng(seed);
        let (data, dims) = common::random_problem(&mut rng, n, 1.0);
        let k = BregmanKernel::build(n, &data, 1.0).unwrap();
        let x = common::random_stack(&mut rng, &dims, -radius, radius);
        let y = common::random_stack(&mut rng, &dims, -radius, radius);
        let d = k.bregman_distance(&x, &y);
        prop_assert!(d >= 0.0);
        prop_assert!(d > 0.0 || x == y);
        prop_assert_eq!(k.bregman_distance(&y, &y), 0.0);
    }

    #[test]
    fn loss_is_non_negative_and_zero_at_fit(seed in any::<u64>(), n in 2usize..=5) {
        let mut rng = common::rng(seed);
        let (data, dims) = common::random_problem(&mut rng, n, 1.0);
        let w = common::random_stack(&mut rng, &dims, -1.0, 1.0);
        prop_assert!(model::loss(&w, &data).unwrap() >= 0.0);
        // Fit Y exactly to the network output: loss and gradient vanish.
        let out = w.layers().iter().fold(None::<Array2<f64>>, |acc, l| Some(match acc {
            None => l.clone(),
            Some(a) => a.dot(l),
        })).unwrap().dot(data.x());
        let fitted = bregman_dlnn::Dataset::new(data.x().clone(), out).unwrap();
        let e = model::evaluate(&w, &fitted).unwrap();
        prop_assert!(e.loss <= 1e-24);
        prop_assert!(e.gradient.norm() <= 1e-12);
    }

    #[test]
    fn soft_threshold_shrinks(values in prop::collection::vec(-10.0f64..10.0, 1..20), theta in 0.0f64..5.0) {
        let x = Array2::from_shape_vec((1, values.len()), values).unwrap();
        let s = soft_threshold(&x, theta);
        for (a, b) in x.iter().zip(s.iter()) {
            prop_assert!(b.abs() <= a.abs());
            prop_assert!(*b == 0.0 || b.signum() == a.signum());
            prop_assert!((a.abs() - b.abs() - theta.min(a.abs())).abs() <= 1e-12);
        }
        prop_assert_eq!(soft_threshold(&x, 0.0), x);
    }

    #[test]
    fn radius_root_solves_equation(c1 in 0.01f64..100.0, mid in 0.0f64..20.0, n in 2usize..=5,
                                   shift in 0.0f64..2.0, log_q in -6.0f64..6.0) {
        let k = BregmanKernel::from_coefficients(n, c1, mid, 1.0).unwrap();
        let q = 10f64.powf(log_q);
        let r = solve_radius(&k, shift, q).unwrap();
        prop_assert!(r > 0.0);
        prop_assert!(radius_equation_residual(&k, shift, r, q).abs() <= 1e-12 * q.max(1.0));
    }

    #[test]
    fn update_blocks_are_scaled_directions(seed in any::<u64>(), n in 2usize..=5, step in 0.05f64..0.99) {
        let mut rng = common::rng(seed);
        let (data, dims) = common::random_problem(&mut rng, n, 1.0);
        let k = BregmanKernel::build(n, &data, 1.0).unwrap();
        let w = common::random_stack(&mut rng, &dims, -1.0, 1.0);
        let u = prox::bpg_update(&w, &data, &k, &Regularizer::None, step).unwrap();
        let dir = k.gradient(&w).add_scaled(-step, &model::loss_gradient(&w, &data).unwrap());
        prop_assume!(dir.norm() > 0.0);
        let t = u.norm() / dir.norm();
        prop_assert!(u.dist_sq(&dir.scale(t)).sqrt() <= 1e-12 * u.norm().max(1e-300));
    }

    #[test]
    fn closed_form_gamma_in_unit_interval(seed in any::<u64>(), n in 2usize..=5, kappa in 1e-6f64..10.0) {
        let mut rng = common::rng(seed);
        let (data, dims) = common::random_problem(&mut rng, n, 1.0);
        let k = BregmanKernel::build(n, &data, 1.0).unwrap();
        let a = common::random_stack(&mut rng, &dims, -2.0, 2.0);
        let b = common::random_stack(&mut rng, &dims, -2.0, 2.0);
        prop_assume!(a != b);
        let g = closed_form_gamma(&a, &b, &k, kappa).unwrap();
        prop_assert!(g > 0.0 && g <= 1.0);
        if n == 2 {
            let g2 = closed_form_gamma_n2(&a, &b, &k, kappa).unwrap();
            prop_assert!(g2 >= g && g2 <= 1.0);
        }
    }
}
