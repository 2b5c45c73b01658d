use cusp_lab::covering::{verify_cover, vitali_select, Ball, MaskSet};
use cusp_lab::harness::{harnack, holder};
use cusp_lab::lattice::{gradient, hessian, restrict_measure};
use cusp_lab::pucci::{check_subsolution, check_supersolution};
use cusp_lab::regularize::{inf_convolve, semi_concavity_certificate};
use cusp_lab::{config::Section, EllipticityParams, GridFunction, Lattice, Region};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_values(lat: &Lattice, seed: u64, lo: f64, hi: f64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vals = (0..lat.len()).map(|_| rng.gen_range(lo..hi)).collect();
    GridFunction::new(lat.clone(), vals).unwrap()
}

fn smooth(lat: &Lattice, c: &[f64]) -> GridFunction {
    GridFunction::from_fn(lat, |x| {
        c[0] + c[1] * x[0] + c[2] * (2.0 * x[1]).sin() + c[3] * x[0] * x[1] + c[4] * (x[0] - x[1]).cos()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quadratics_are_differentiated_exactly(c in prop::collection::vec(-5.0..5.0f64, 10), inv_h in 4u32..40, i in 1usize..6, j in 1usize..6, k in 1usize..6) {
        let h = 1.0 / inv_h as f64;
        let lat = Lattice::centered(3, 7, h).unwrap();
        let u = GridFunction::from_fn(&lat, |x| {
            c[0] + c[1] * x[0] + c[2] * x[1] + c[3] * x[2]
                + c[4] * x[0] * x[0] + c[5] * x[1] * x[1] + c[6] * x[2] * x[2]
                + c[7] * x[0] * x[1] + c[8] * x[0] * x[2] + c[9] * x[1] * x[2]
        })
        .unwrap();
        let idx = [i, j, k];
        let x = lat.point(&idx);
        let g = gradient(&u, &idx).unwrap();
        let exact_g = [
            c[1] + 2.0 * c[4] * x[0] + c[7] * x[1] + c[8] * x[2],
            c[2] + 2.0 * c[5] * x[1] + c[7] * x[0] + c[9] * x[2],
            c[3] + 2.0 * c[6] * x[2] + c[8] * x[0] + c[9] * x[1],
        ];
        let exact_h = [[2.0 * c[4], c[7], c[8]], [c[7], 2.0 * c[5], c[9]], [c[8], c[9], 2.0 * c[6]]];
        let hs = hessian(&u, &idx).unwrap();
        // rounding of the sampled values is amplified by 1/h and 1/h^2
        let scale = 1.0 + c.iter().map(|v| v.abs()).sum::<f64>();
        for a in 0..3 {
            prop_assert!((g[a] - exact_g[a]).abs() <= 1e-12 * scale / h, "{a}: {} vs {}", g[a], exact_g[a]);
            for b in 0..3 {
                prop_assert!((hs[(a, b)] - exact_h[a][b]).abs() <= 1e-11 * scale / (h * h));
            }
        }
    }

    #[test]
    fn restricted_measure_is_monotone(seed in 0u64..10_000, t1 in -1.0..1.0f64, dt in 0.0..1.0f64, r in 0.2..1.0f64) {
        let lat = Lattice::covering_ball(2, 41, 1.0).unwrap();
        let u = random_values(&lat, seed, -1.0, 1.0);
        let ball = Region::centered_ball(2, r);
        let t2 = t1 - dt;
        prop_assert!(restrict_measure(&u, |v| v > t1, &ball) <= restrict_measure(&u, |v| v > t2, &ball));
        prop_assert!(restrict_measure(&u, |v| v > t1, &Region::centered_ball(2, r * 0.5)) <= restrict_measure(&u, |v| v > t1, &ball));
    }

    #[test]
    fn reports_are_sign_symmetric(c in prop::collection::vec(-2.0..2.0f64, 5), lambda in 0.2..1.0f64, spread in 1.0..5.0f64, gamma in 0.0..1.0f64, level in 0.0..3.0f64) {
        let lat = Lattice::covering_ball(2, 33, 1.0).unwrap();
        let u = smooth(&lat, &c);
        let neg = u.map(|v| -v).unwrap();
        let p = EllipticityParams::new(lambda, lambda * spread, gamma).unwrap();
        let b = Region::centered_ball(2, 0.9);
        let sup = check_supersolution(&u, level, &p, &b, 0.01).unwrap();
        let sub = check_subsolution(&neg, level, &p, &b, 0.01).unwrap();
        prop_assert_eq!(sup.max_super_residual.to_bits(), sub.max_sub_residual.to_bits());
        prop_assert_eq!((sup.checked_nodes, sup.active_nodes, sup.band_nodes, sup.pass), (sub.checked_nodes, sub.active_nodes, sub.band_nodes, sub.pass));
    }

    #[test]
    fn envelopes_are_semiconcave(seed in 0u64..10_000, eps in 0.005..0.5f64) {
        let lat = Lattice::covering_ball(2, 33, 1.0).unwrap();
        let h = lat.spacing();
        let v = random_values(&lat, seed, 0.0, 1.0);
        let r = inf_convolve(&v, eps).unwrap();
        let sc = semi_concavity_certificate(&r.smoothed, 1.0 / eps, 4.0 * h / eps);
        prop_assert!(sc.pass, "worst {} against {}", sc.worst, 1.0 / eps);
    }

    #[test]
    fn vitali_cover_and_super_additivity(seed in 0u64..10_000, k in 1usize..80, mask_seed in 0u64..1000) {
        let lat = Lattice::covering_ball(2, 81, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let balls: Vec<Ball> = (0..k)
            .map(|_| Ball::new(vec![rng.gen_range(-0.7..0.7), rng.gen_range(-0.7..0.7)], rng.gen_range(0.02..0.3)))
            .collect();
        let cover = vitali_select(&balls).unwrap();
        prop_assert!(cover.disjoint);
        prop_assert!(verify_cover(&lat, &balls, &cover));
        let mut mrng = ChaCha8Rng::seed_from_u64(mask_seed);
        let x = MaskSet::new(lat.clone(), (0..lat.len()).map(|_| mrng.gen_bool(0.4)).collect()).unwrap();
        let sum: usize = cover.balls.iter().map(|b| MaskSet::from_balls(&lat, std::slice::from_ref(b)).intersection_count(&x).unwrap()).sum();
        prop_assert!(sum <= x.count());
    }

    #[test]
    fn dyadic_bounds_are_monotone(c in prop::collection::vec(-2.0..2.0f64, 5), seed in 0u64..1000, noise in 0.0..0.5f64, gamma in 0.0..1.0f64) {
        let lat = Lattice::covering_ball(2, 257, 1.0).unwrap();
        let base = smooth(&lat, &c);
        let jitter = random_values(&lat, seed, -1.0, 1.0);
        let u = base.zip_with(&jitter, |a, b| a + noise * b).unwrap();
        let dy = holder::dyadic(&u, 1.0, gamma, &Section::default()).unwrap();
        prop_assert!(dy.monotone());
        for s in &dy.steps {
            prop_assert!(s.b - s.a >= 0.0);
        }
    }

    #[test]
    fn harnack_ratio_never_grows_with_c0(seed in 0u64..10_000, c0 in 0.01..10.0f64, dc in 0.0..10.0f64) {
        let lat = Lattice::covering_ball(2, 33, 1.0).unwrap();
        let u = random_values(&lat, seed, 0.0, 5.0);
        prop_assert!(harnack::ratio(&u, c0 + dc) <= harnack::ratio(&u, c0));
    }
}
