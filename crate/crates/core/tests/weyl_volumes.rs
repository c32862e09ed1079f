use ffdyn::ffield::FieldSpec;
use ffdyn::treegeo::quotient_ray;
use ffdyn::weylvol::*;
use num_traits::ToPrimitive;

fn a(r: usize) -> RootSystemSpec {
    RootSystemSpec::new(r).unwrap()
}

#[test]
fn hyperplane_count_matches_word_length() {
    for (r, depth) in [(1, 30), (2, 14), (3, 9)] {
        let table = bfs_lengths(&a(r), depth, 5_000_000).unwrap();
        for l in 0..=depth {
            for lam in dominant_cocharacters(&a(r), l) {
                let el = AffineWeylElement::translation(lam.coords().to_vec());
                assert_eq!(bfs_length_of(&table, &el), Some(l), "r = {r}, λ = {:?}", lam.coords());
            }
        }
        for (image, &len) in &table {
            assert_eq!(length_of_image(image), len);
        }
    }
}

#[test]
fn translation_length_is_rho_pairing_up_to_60() {
    for r in 1..=3 {
        for l in 0..=60 {
            for lam in dominant_cocharacters(&a(r), l) {
                assert_eq!(rho_pairing(lam.coords()), l);
                assert_eq!(affine_length(&AffineWeylElement::translation(lam.coords().to_vec())), l);
            }
        }
    }
}

/// Counts live on even `l`; on that support `count(l)/l^{r−1}` stays in a band.
#[test]
fn dominant_count_grows_like_power() {
    for (r, band) in [(1usize, 1.0), (2, 2.0), (3, 5.0)] {
        let ratios: Vec<f64> = (10..=60)
            .filter(|l| l % 2 == 0)
            .map(|l| dominant_count(&a(r), l) as f64 / (l as f64).powi(r as i32 - 1))
            .collect();
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        println!("r = {r}: count band {:.4} .. {:.4}", lo, hi);
        assert!(lo > 0.0 && hi / lo <= band);
        assert!((1..60).step_by(2).all(|l| dominant_count(&a(r), l) == 0));
    }
}

/// The ratio oscillates because `⟨ρ, λ⟩` only takes values on a sparse
/// support; the late band is as wide as the full one, so it stays bounded.
#[test]
fn cusp_tail_ratio_is_bounded() {
    for r in 1..=3 {
        for q in [2, 3, 4] {
            let (lo, hi) = ratio_band(&a(r), q, 2..=40).unwrap();
            let (lo_late, hi_late) = ratio_band(&a(r), q, 20..=60).unwrap();
            println!("r = {r}, q = {q}: band {:.4}, late band {:.4}", hi / lo, hi_late / lo_late);
            assert!(hi_late / lo_late <= hi / lo * 1.01);
            assert!(hi / lo <= (q as f64).powi(r as i32 + 1));
        }
    }
    let (lo, hi) = ratio_band(&a(2), 2, 2..=40).unwrap();
    assert!(hi / lo <= 4.0);
}

#[test]
fn cusp_tail_is_certified_and_monotone() {
    let mut prev = f64::INFINITY;
    for t in 1..=80 {
        let c = cusp_tail(t, &a(3), 2).unwrap();
        assert!(c.remainder_bound <= 1e-12 * c.tail);
        assert!(c.tail <= prev);
        prev = c.tail;
    }
}

#[test]
fn fiber_lengths_stay_near_rho_pairing() {
    for r in 1..=3 {
        let spec = a(r);
        let mut vols = Vec::new();
        for l in (0..=24).step_by(2) {
            for lam in dominant_cocharacters(&spec, l) {
                let rep = fiber_report(&spec, &lam);
                assert!(rep.max_deviation() <= 2 * spec.longest_length());
                vols.push(rep.relative_volume(2.0));
            }
        }
        let hi = vols.iter().cloned().fold(0.0, f64::max);
        let lo = vols.iter().cloned().fold(f64::INFINITY, f64::min);
        println!("r = {r}: relative fiber volume in [{lo:.4}, {hi:.4}]");
        assert!(lo >= 1.0);
        assert!(hi <= (spec.weyl_order() as f64).powi(2) * 2f64.powi(2 * spec.longest_length() as i32));
    }
}

/// The `SL_2` translations move `v_0` to even vertices, so `S(T)` is
/// proportional to the even-vertex tail of the ray.
#[test]
fn rank_one_matches_tree_masses() {
    for q in [2u32, 3, 4] {
        let f = FieldSpec::new(if q == 4 { 2 } else { q }, if q == 4 { 2 } else { 1 }).unwrap();
        let ray = quotient_ray(&f, 25, 3).unwrap();
        let mut constant = None;
        for t in 1..=40i64 {
            let even_tail: f64 = (t as usize..=120).filter(|j| j % 2 == 0).map(|j| ray.mass(j).to_f64().unwrap()).sum();
            let s = cusp_tail(t, &a(1), q).unwrap().tail;
            let c = even_tail / s;
            let c0 = *constant.get_or_insert(c);
            assert!((c / c0 - 1.0).abs() < 1e-9, "q = {q}, T = {t}");
        }
    }
}
