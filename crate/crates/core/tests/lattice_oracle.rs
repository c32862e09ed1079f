use ffdyn::ffield::{Fe, FieldSpec, LaurentSeries, Poly};
use ffdyn::lattice::{
    enumerate_short_vectors, min_norm_by_enumeration, random_unimodular, weak_popov, LatticeBasis,
    DEFAULT_NODE_CAP,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn reduction_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for &(p, r) in &[(2, 2), (3, 2), (2, 3), (3, 3)] {
        let f = FieldSpec::prime(p).unwrap();
        for _ in 0..40 {
            let b = random_unimodular(&f, r, 4, &mut rng);
            let delta = b.delta().unwrap();
            assert!(delta.certified);
            let oracle = -min_norm_by_enumeration(&b, DEFAULT_NODE_CAP).unwrap();
            assert_eq!(delta.value, oracle, "{b:?}");
            assert_eq!(b.successive_minima().unwrap().iter().sum::<i64>(), 0);
        }
    }
}

/// A = X^{-1}, m = n = 1, t = 1: g_1 Λ_A has basis (X, 0), (1, X^{-1}).
#[test]
fn flowed_rational_lattice() {
    let f = FieldSpec::prime(2).unwrap();
    let b = LatticeBasis::from_rows(
        &f,
        vec![
            vec![LaurentSeries::x_pow(1), LaurentSeries::one()],
            vec![LaurentSeries::zero(), LaurentSeries::x_pow(-1)],
        ],
    )
    .unwrap();
    assert_eq!(b.delta().unwrap().value, 0);
    // exhaustive over q of degree ≤ 3 confirms nothing shorter than 1
    let found = enumerate_short_vectors(&b, -1, DEFAULT_NODE_CAP).unwrap();
    assert!(found.is_empty());
}

#[test]
fn weak_popov_is_idempotent() {
    let f = FieldSpec::prime(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let cols: Vec<Vec<Poly>> = (0..3)
            .map(|_| {
                (0..3)
                    .map(|_| Poly::from_coeffs((0..4).map(|_| Fe(rng.gen_range(0..3))).collect()))
                    .collect()
            })
            .collect();
        let Ok(red) = weak_popov(&f, &cols) else { continue };
        let again = weak_popov(&f, &red.columns).unwrap();
        assert_eq!(again.columns, red.columns);
        assert_eq!(again.degrees, red.degrees);
    }
}

fn random_poly_unimodular(f: &FieldSpec, r: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<Poly>> {
    let mut u: Vec<Vec<Poly>> = (0..r)
        .map(|j| (0..r).map(|i| if i == j { Poly::one() } else { Poly::zero() }).collect())
        .collect();
    for _ in 0..4 {
        let i = rng.gen_range(0..r);
        let j = (i + rng.gen_range(1..r)) % r;
        let c = Fe(rng.gen_range(1..f.size()) as u16);
        let k = rng.gen_range(0..3);
        let src = u[j].clone();
        for (d, s) in u[i].iter_mut().zip(&src) {
            d.add_scaled_shifted(c, k, s, f);
        }
    }
    u
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scaling_shifts_delta(seed in any::<u64>(), c in -5i64..5) {
        let f = FieldSpec::prime(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = random_unimodular(&f, 2, 3, &mut rng);
        let d = b.delta().unwrap().value;
        prop_assert_eq!(b.scale(c).delta().unwrap().value, d - c);
    }

    #[test]
    fn basis_change_invariance(seed in any::<u64>(), r in 2usize..4) {
        let f = FieldSpec::prime(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = random_unimodular(&f, r, 3, &mut rng);
        let u = random_poly_unimodular(&f, r, &mut rng);
        let b2 = b.right_mul(&u);
        prop_assert_eq!(b.delta().unwrap(), b2.delta().unwrap());
        prop_assert_eq!(b.successive_minima().unwrap(), b2.successive_minima().unwrap());
    }

    #[test]
    fn windowed_and_polynomial_routes_agree(seed in any::<u64>()) {
        let f = FieldSpec::prime(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = random_unimodular(&f, 3, 4, &mut rng);
        let (_, deg) = b.reduce_in_window().unwrap();
        prop_assert_eq!(-deg.iter().min().unwrap(), b.delta().unwrap().value);
    }
}
