use ffdyn::ffield::{Fe, FieldSpec, LaurentSeries};
use ffdyn::spectral::*;
use ffdyn::Rational;
use num_bigint::BigInt;
use num_traits::One;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn f(p: u32) -> FieldSpec {
    FieldSpec::prime(p).unwrap()
}

fn lower(c: LaurentSeries) -> Mat2 {
    [[LaurentSeries::one(), LaurentSeries::zero()], [c, LaurentSeries::one()]]
}

fn upper(b: LaurentSeries) -> Mat2 {
    [[LaurentSeries::one(), b], [LaurentSeries::zero(), LaurentSeries::one()]]
}

fn weyl(fl: &FieldSpec) -> Mat2 {
    [[LaurentSeries::zero(), LaurentSeries::one()], [LaurentSeries::one().neg(fl), LaurentSeries::zero()]]
}

fn torus(a: Fe, fl: &FieldSpec) -> Mat2 {
    let inv = fl.inv(a).unwrap();
    [[LaurentSeries::monomial(a, 0), LaurentSeries::zero()], [LaurentSeries::zero(), LaurentSeries::monomial(inv, 0)]]
}

fn closed_form(q: i64, t: i64) -> Rational {
    let t = t.abs();
    Rational::new(BigInt::from((q + 1) + 2 * t * (q - 1)), BigInt::from((q + 1) * q.pow(t as u32)))
}

#[test]
fn bi_invariance_under_exact_k() {
    for p in [2u32, 3] {
        let fl = f(p);
        let c = LaurentSeries::from_coeffs(0, vec![Fe(1), Fe(0), Fe(1)], None);
        let b = LaurentSeries::from_coeffs(1, vec![Fe(1), Fe(1)], None);
        let ks = [lower(c), upper(b), weyl(&fl), torus(fl.nonzero_elements().last().unwrap(), &fl)];
        for t in 0..=3 {
            let g = diagonal(t);
            let base = xi_exact(&g, &fl, 20).unwrap().value;
            for k1 in &ks {
                for k2 in &ks {
                    let h = mat_mul(&mat_mul(k1, &g, &fl), k2, &fl);
                    let x = xi_exact(&h, &fl, 20).unwrap();
                    assert!(x.stabilized);
                    assert_eq!(x.value, base, "q = {p}, t = {t}");
                }
            }
        }
    }
}

#[test]
fn symmetric_under_inverse() {
    for p in [2u32, 3] {
        for t in 1..=4 {
            let a = xi_exact(&diagonal(t), &f(p), 20).unwrap().value;
            let b = xi_exact(&diagonal(-t), &f(p), 20).unwrap().value;
            assert_eq!(a, b);
        }
    }
}

#[test]
fn exact_values_stabilize_and_match_closed_form() {
    for p in [2u32, 3] {
        let table = xi_diagonal_table(&f(p), 0..=6, 30).unwrap();
        for (t, x) in &table {
            assert!(x.stabilized);
            assert!(x.value > Rational::from_integer(0.into()) && x.value <= Rational::one());
            assert_eq!(x.value, closed_form(p as i64, *t));
        }
        let last = table[6].1.to_f64() / table[5].1.to_f64();
        let s = 1.0 / p as f64;
        assert!((last - s).abs() < 0.25 * s, "ratio {last}");
    }
}

#[test]
fn monte_carlo_within_three_standard_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for p in [2u32, 3] {
        for t in 0..=4 {
            let exact = xi_exact(&diagonal(t), &f(p), 20).unwrap().to_f64();
            let (mean, se) = xi_monte_carlo(&diagonal(t), &f(p), 20_000, &mut rng).unwrap();
            assert!((mean - exact).abs() <= 3.0 * se.max(1e-12), "q = {p}, t = {t}: {mean} ± {se} vs {exact}");
        }
    }
}

#[test]
fn decay_bound_holds_with_sigma_two() {
    for p in [2u32, 3] {
        let vals: Vec<(i64, f64, usize)> = xi_diagonal_table(&f(p), 0..=8, 30)
            .unwrap()
            .into_iter()
            .map(|(t, x)| (t, x.to_f64(), x.depth))
            .collect();
        let fit = decay_check(&vals, p);
        assert_eq!(fit.sigma, 2);
        assert!(fit.varsigma >= 1.0);
        assert!(fit.rows.iter().all(|r| r.residual >= -1e-12));
        assert!(fit.xi_times_norm_grows);
        let last = fit.rows.last().unwrap();
        assert!(last.xi_times_norm <= 2.0 * last.t as f64);
        assert!(fit.to_json().starts_with("{\"schema\":\"ffdyn-xi-fit v1\""));
    }
}
