//! Randomized algebraic properties of the T-product, the square-root solvers,
//! the TBW distance and the image pipelines.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fourier::{dft_mode3, idft_mode3};
use crate::imaging::transfer::color_transfer;
use crate::imaging::whiten::t_whiten;
use crate::imaging::{channel_covariance, ImageTensor};
use crate::oracle::bcirc_product;
use crate::solver::{db_tsqrt, make_conditioned_spd_tensor, newton_tsqrt};
use crate::tbw::tbw_distance;
use crate::tensor::{
    frobenius_norm, identity_tensor, relative_error, t_inverse, t_product, t_sqrt_direct,
    t_transpose,
};
use crate::{IterationConfig, Tensor3};

fn random_tensor(n: usize, m: usize, p: usize, seed: u64) -> Tensor3 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor3::new(n, m, p, (0..n * m * p).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn dims() -> impl Strategy<Value = (usize, usize, usize, usize, u64)> {
    (1usize..4, 1usize..4, 1usize..4, 1usize..6, any::<u64>())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn product_matches_block_circulant((n, m, k, p, seed) in dims()) {
        let a = random_tensor(n, m, p, seed);
        let b = random_tensor(m, k, p, seed ^ 1);
        let fast = t_product(&a, &b).unwrap();
        let slow = bcirc_product(&a, &b);
        prop_assert!(fast.sub(&slow).unwrap().max_abs() <= 1e-12 * (1.0 + slow.max_abs()));
    }

    #[test]
    fn product_is_associative((n, m, k, p, seed) in dims()) {
        let a = random_tensor(n, m, p, seed);
        let b = random_tensor(m, k, p, seed ^ 2);
        let c = random_tensor(k, n, p, seed ^ 3);
        let left = t_product(&t_product(&a, &b).unwrap(), &c).unwrap();
        let right = t_product(&a, &t_product(&b, &c).unwrap()).unwrap();
        prop_assert!(left.sub(&right).unwrap().max_abs() <= 1e-11 * (1.0 + left.max_abs()));
    }

    #[test]
    fn identity_and_transpose((n, m, k, p, seed) in dims()) {
        let a = random_tensor(n, m, p, seed);
        let b = random_tensor(m, k, p, seed ^ 4);
        let left = t_product(&identity_tensor(n, p), &a).unwrap();
        prop_assert!(left.sub(&a).unwrap().max_abs() < 1e-14);
        let right = t_product(&a, &identity_tensor(m, p)).unwrap();
        prop_assert!(right.sub(&a).unwrap().max_abs() < 1e-14);
        prop_assert_eq!(t_transpose(&t_transpose(&a)), a.clone());
        let ab_t = t_transpose(&t_product(&a, &b).unwrap());
        let bt_at = t_product(&t_transpose(&b), &t_transpose(&a)).unwrap();
        prop_assert!(ab_t.sub(&bt_at).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn fourier_roundtrip_and_parseval((n, m, _k, p, seed) in dims()) {
        let a = random_tensor(n, m, p, seed);
        let spectrum = dft_mode3(&a);
        let back = idft_mode3(&spectrum).unwrap();
        prop_assert!(back.sub(&a).unwrap().max_abs() < 1e-13);
        let lhs = frobenius_norm(&a).powi(2);
        let rhs = spectrum.frobenius_norm().powi(2) / p as f64;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs));
    }

    #[test]
    fn inverse_roundtrip(n in 2usize..5, p in 1usize..5, seed in any::<u64>()) {
        let a = make_conditioned_spd_tensor(n, p, 20.0, seed).unwrap();
        let inv = t_inverse(&a).unwrap();
        let prod = t_product(&a, &inv).unwrap();
        prop_assert!(prod.sub(&identity_tensor(n, p)).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn solvers_agree_with_direct(n in 2usize..5, p in 1usize..5, seed in any::<u64>(), kappa in 1.0f64..100.0) {
        let a = make_conditioned_spd_tensor(n, p, kappa, seed).unwrap();
        let direct = t_sqrt_direct(&a).unwrap();
        let cfg = IterationConfig::default();
        let newton = newton_tsqrt(&a, &cfg).unwrap();
        let db = db_tsqrt(&a, &cfg).unwrap();
        prop_assert!(relative_error(&newton.sqrt, &direct).unwrap() < 1e-10);
        prop_assert!(relative_error(&db.sqrt, &direct).unwrap() < 1e-10);
        let sq = t_product(&direct, &direct).unwrap();
        prop_assert!(relative_error(&sq, &a).unwrap() < 1e-12);
        // The coupled iterate converges to the inverse root.
        let y = db.inv_sqrt.unwrap();
        let xy = t_product(&db.sqrt, &y).unwrap();
        prop_assert!(xy.sub(&identity_tensor(n, p)).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn tbw_metric_axioms(seed in any::<u64>()) {
        let a = make_conditioned_spd_tensor(3, 3, 10.0, seed).unwrap();
        let b = make_conditioned_spd_tensor(3, 3, 10.0, seed.wrapping_add(1)).unwrap();
        let c = make_conditioned_spd_tensor(3, 3, 10.0, seed.wrapping_add(2)).unwrap();
        let (ab, ba) = (tbw_distance(&a, &b).unwrap(), tbw_distance(&b, &a).unwrap());
        prop_assert!((ab - ba).abs() < 1e-10);
        prop_assert!(tbw_distance(&a, &a).unwrap() <= 1e-9);
        let (bc, ac) = (tbw_distance(&b, &c).unwrap(), tbw_distance(&a, &c).unwrap());
        prop_assert!(ac <= ab + bc + 1e-9);
    }

    #[test]
    fn whitened_covariance_is_identity(n in 1usize..4, p in 1usize..4, seed in any::<u64>()) {
        let m = 16 * n;
        let mut x = random_tensor(n, m, p, seed);
        for k in 0..p {
            let mu = x.frontal(k).iter().sum::<f64>() / (n * m) as f64;
            x.frontal_mut(k).iter_mut().for_each(|v| *v -= mu);
        }
        let w = t_whiten(&x).unwrap();
        let c = t_product(&w, &t_transpose(&w)).unwrap().scale(1.0 / m as f64);
        prop_assert!(frobenius_norm(&c.sub(&identity_tensor(n, p)).unwrap()) < 1e-8);
    }

    #[test]
    fn transfer_pushes_covariance_forward(seed in any::<u64>()) {
        let s = ImageTensor::new(random_tensor(8, 8, 3, seed).map(|v| 0.5 + 0.2 * v));
        let t = ImageTensor::new(random_tensor(6, 10, 3, seed ^ 9).map(|v| 0.4 + 0.1 * v * v));
        let out = color_transfer(&s, &t).unwrap();
        let (co, ct) = (channel_covariance(&out.raw), channel_covariance(&t));
        prop_assert!((co - &ct).norm() <= 1e-6 * ct.norm());
    }
}
