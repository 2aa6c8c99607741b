use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

use altproj::algorithms::{run_alternating, run_averaged, RunConfig};
use altproj::diagnostics::{self, check_sandwich, msd, msd_gradient};
use altproj::experiments::{self, ExperimentConfig};
use altproj::numkernel::seeded_rng;
use altproj::regularity::{
    cbar_pair, cbar_pair_sampled, cond_modulus, cond_modulus_sampled, Sampling,
};
use altproj::sets::{ConeKind, NormalCone};
use altproj::{Point, ProjectableSet};

fn p(v: &[f64]) -> Point {
    Point::from_column_slice(v)
}

fn gaussian_point<R: Rng>(rng: &mut R, n: usize) -> Point {
    Point::from_fn(n, |_, _| rng.sample(StandardNormal))
}

fn subspace_system(seed: u64, n: usize, normal_dims: &[usize]) -> (Vec<ProjectableSet>, Point) {
    let mut rng = seeded_rng(seed);
    let anchor = gaussian_point(&mut rng, n);
    let sets = normal_dims
        .iter()
        .map(|&nd| {
            let dirs: Vec<Point> = (0..n - nd).map(|_| gaussian_point(&mut rng, n)).collect();
            ProjectableSet::affine(anchor.clone(), &dirs).unwrap()
        })
        .collect();
    (sets, anchor)
}

fn line_circle() -> Vec<ProjectableSet> {
    vec![
        ProjectableSet::sphere(p(&[0.0, 0.0]), 1.0).unwrap(),
        ProjectableSet::line(p(&[1.0, 0.0]), p(&[0.5, 1.0])).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn averaged_step_is_unit_gradient_step(seed in 0u64..1000, m in 2usize..5) {
        let n = 2 * m + 1;
        let (sets, anchor) = subspace_system(seed, n, &vec![2; m]);
        let x0 = &anchor + gaussian_point(&mut seeded_rng(seed + 1), n);
        let cfg = RunConfig { max_iter: 30, ..RunConfig::default() };
        let t = run_averaged(&sets, &x0, &cfg).unwrap();
        for w in t.iterates.windows(2) {
            let g = msd_gradient(&sets, &w[0]).unwrap();
            prop_assert!((&w[1] - (&w[0] - g)).amax() <= 1e-10);
        }
    }

    #[test]
    fn alternating_limit_stays_within_the_start_bound(
        phi in 0.2f64..1.5, a in -1.0f64..1.0, b in -1.0f64..1.0,
    ) {
        // two planes of R³ meeting along the x-axis at angle phi
        let e1 = p(&[1.0, 0.0, 0.0]);
        let f = ProjectableSet::affine(Point::zeros(3), &[e1.clone(), p(&[0.0, 1.0, 0.0])]).unwrap();
        let tilt = p(&[0.0, phi.cos(), phi.sin()]);
        let c = ProjectableSet::affine(Point::zeros(3), &[e1, tilt.clone()]).unwrap();
        let xbar = Point::zeros(3);
        let x0 = p(&[0.1 * a, 0.0, 0.0]) + tilt * (0.1 * b);
        let t = run_alternating(&f, &c, &x0, &RunConfig::default()).unwrap();
        let xhat = t.last_iterate().unwrap();
        let rate_c = phi.cos() + 1e-6;
        let bound = (1.0 + rate_c) / (1.0 - rate_c) * (&x0 - &xbar).norm();
        prop_assert!((xhat - &x0).norm() <= bound + 1e-12);
        for w in t.step_norms.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn gradient_is_one_lipschitz_near_the_intersection(
        a in -1.0f64..1.0, b in -1.0f64..1.0, da in -1.0f64..1.0, db in -1.0f64..1.0,
    ) {
        let sets = line_circle();
        let x = p(&[1.0 + 0.1 * a, 0.1 * b]);
        let y = &x + p(&[0.01 * da, 0.01 * db]);
        let gx = msd_gradient(&sets, &x).unwrap();
        let gy = msd_gradient(&sets, &y).unwrap();
        prop_assert!((gx - gy).norm() <= (1.0 + 1e-6) * (&x - &y).norm());
    }

    #[test]
    fn averaged_step_decreases_f_by_half_gradient_norm(seed in 0u64..1000) {
        let (sets, anchor) = subspace_system(seed, 6, &[1, 2, 2]);
        let x = &anchor + gaussian_point(&mut seeded_rng(seed + 7), 6) * 0.05;
        let g = msd_gradient(&sets, &x).unwrap();
        let next = &x - &g;
        let drop = msd(&sets, &next).unwrap() - msd(&sets, &x).unwrap();
        prop_assert!(drop <= -0.5 * g.norm_squared() + 1e-14);
    }

    #[test]
    fn sandwich_lower_bound_holds_anywhere(seed in 0u64..1000, scale in 0.1f64..10.0) {
        let mut rng = seeded_rng(seed);
        let x = gaussian_point(&mut rng, 2) * scale;
        prop_assert!(check_sandwich(&line_circle(), &x, 1.0).unwrap().lower_holds);
        let cs = experiments::cs_problem(
            &ExperimentConfig { n: 5, m_dict: 8, d_rows: 2, ..ExperimentConfig::default() },
            seed,
        ).unwrap().0;
        let u = gaussian_point(&mut rng, 16) * scale;
        prop_assert!(check_sandwich(&cs, &u, 1.0).unwrap().lower_holds);
    }

    #[test]
    fn sampled_estimates_are_lower_bounds(seed in 0u64..1000) {
        let (sets, anchor) = subspace_system(seed, 5, &[1, 2]);
        let cones: Vec<_> = sets.iter().map(|s| s.normal_cone(&anchor).unwrap()).collect();
        let s = Sampling { samples: 128, ..Sampling::default() };
        let exact = cbar_pair(&cones[0], &cones[1]).unwrap().value;
        let sampled = cbar_pair_sampled(&cones[0], &cones[1], &s).unwrap().value;
        prop_assert!(sampled <= exact + 1e-12);
        let k = cond_modulus(&cones).unwrap().value().unwrap();
        let ks = cond_modulus_sampled(&cones, &s).unwrap().value().unwrap();
        prop_assert!(ks <= k * (1.0 + 1e-12));
    }

    #[test]
    fn enlarging_a_normal_space_never_decreases_cond(seed in 0u64..1000) {
        let mut rng = seeded_rng(seed);
        let n = 6;
        let anchor = Point::zeros(n);
        let basis = |vs: Vec<Point>| {
            NormalCone::new(
                ConeKind::Subspace {
                    dim: n,
                    basis: altproj::numkernel::orthonormal_basis(&vs, 1e-12).unwrap(),
                },
                anchor.clone(),
            )
        };
        let a: Vec<Point> = (0..2).map(|_| gaussian_point(&mut rng, n)).collect();
        let b: Vec<Point> = (0..2).map(|_| gaussian_point(&mut rng, n)).collect();
        let extra = gaussian_point(&mut rng, n);
        let small = [basis(a.clone()), basis(b.clone())];
        let mut a2 = a;
        a2.push(extra);
        let large = [basis(a2), basis(b)];
        let k_small = cond_modulus(&small).unwrap().value().unwrap();
        let k_large = cond_modulus(&large).unwrap().value().unwrap();
        prop_assert!(k_large >= k_small * (1.0 - 1e-12));
    }

    #[test]
    fn averaged_f_is_monotone_on_small_cs(seed in 0u64..200) {
        let cfg = ExperimentConfig { n: 8, m_dict: 16, d_rows: 3, seed, max_iter: 60, ..ExperimentConfig::default() };
        let out = experiments::experiment_cs(&cfg).unwrap();
        prop_assert!(out.summary.monotone);
    }
}

#[test]
fn qlinear_ratios_stop_at_the_floor() {
    let f = [1.0, 0.5, 1e-27, 1e-28];
    assert_eq!(diagnostics::qlinear_ratios(&f), vec![0.5]);
}
