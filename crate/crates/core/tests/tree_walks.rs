use ffdyn::ffield::FieldSpec;
use ffdyn::treegeo::*;
use ffdyn::Rational;
use num_traits::One;

fn ray(q: u32) -> QuotientRay {
    quotient_ray(&FieldSpec::prime(q).unwrap(), 30, 4).unwrap()
}

#[test]
fn oracle_matches_closed_form() {
    for p in [2u32, 3] {
        let f = FieldSpec::prime(p).unwrap();
        for j in 0..=6 {
            let count = stabilizer_order_oracle(&f, j, j).unwrap();
            assert!(count.certified);
            assert_eq!(count.order, closed_form_order(p as u64, j), "q = {p}, j = {j}");
        }
    }
}

#[test]
fn ray_invariants() {
    for q in [2, 3] {
        let r = ray(q);
        assert_eq!(r.total_mass(), Rational::one());
        for j in 0..=r.j_max {
            assert_eq!(r.up[j] + r.down[j], q + 1);
        }
        assert_eq!(r.up[0], q + 1);
        for j in 1..r.j_max {
            assert!(r.masses[j + 1] < r.masses[j]);
        }
        assert!((r.l_y - 1.0).abs() < 1e-9);
    }
}

/// Reference run for q = 2, seed 42, T = 10.
#[test]
fn golden_trace() {
    let tr = simulate_geodesic(&ray(2), 10, 42);
    let golden = include_str!("golden/geodesic_q2_seed42_t10.csv");
    assert_eq!(tr.to_csv(), golden);
}

#[test]
fn traces_are_unit_steps() {
    for seed in 0..20 {
        let tr = simulate_geodesic(&ray(3), 2000, seed);
        let mut prev = 0i64;
        for &d in &tr.positions {
            assert_eq!((d as i64 - prev).abs(), 1);
            prev = d as i64;
        }
    }
}

#[test]
fn occupation_converges_to_masses() {
    let tv = occupation_distance(&ray(2), 1_000_000, 7);
    println!("total variation at T = 1e6: {tv:.5}");
    assert!(tv < 0.02);
}

#[test]
fn excursion_heights_decay_at_rate_l_y() {
    let r = ray(2);
    let st = loglaw_experiment(&r, 20, 100_000, 11);
    println!("excursions {} rate {:.4}", st.excursions, st.excursion_tail_rate);
    assert!(st.excursions >= 10_000);
    assert!((st.excursion_tail_rate - r.l_y).abs() <= 0.1 * r.l_y);
}

#[test]
fn logarithm_law_and_ladders() {
    for q in [2, 3] {
        let r = ray(q);
        let st = loglaw_experiment(&r, 200, 100_000, 5);
        println!("q = {q}: median {:.4} quartiles {:?}", st.median_ratio, st.quartiles);
        assert!((st.median_ratio * r.l_y - 1.0).abs() <= 0.15);
        let div = ladder_experiment(&r, Ladder { factor: 1.0, rounding: Rounding::Floor }, 200, 100_000, 6);
        let conv = ladder_experiment(&r, Ladder { factor: 1.5, rounding: Rounding::Ceil }, 200, 100_000, 6);
        println!("q = {q}: divergent late {:.3}, convergent late {:.3}", div.late_fraction, conv.late_fraction);
        assert!(div.agrees());
        assert!(conv.agrees());
        assert!(conv.late_fraction <= 0.1);
    }
}
