use proptest::prelude::*;

use formsieve::experiment::{run_experiment_with, ExperimentConfig, Int, Threshold};
use formsieve::forms::{worked_system, FormSystem, QuadraticForm};
use formsieve::localdensity::{self, ModulusVector};
use formsieve::numutil;
use formsieve::region::{Region, Shape};
use formsieve::sievebound::{density_product, minimize_r, r_bound, solve_ff, SieveParams};

fn sum_of_squares() -> FormSystem {
    FormSystem::build(vec![QuadraticForm::new(1, 0, 1)], true).unwrap()
}

fn mv(d: &[u64]) -> ModulusVector {
    ModulusVector::new(d.to_vec()).unwrap()
}

fn config(x: i64, shape: Shape) -> ExperimentConfig {
    ExperimentConfig {
        forms: vec![[Int(1), Int(0), Int(1)], [Int(1), Int(0), Int(-2)]],
        region: shape,
        x: Int(x),
        gamma: 0.25,
        r: Some(5),
        strict_mode: true,
        z: None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rho_is_multiplicative_over_coprime_moduli(
        d1 in 1u64..40, d2 in 1u64..40, e1 in 1u64..40, e2 in 1u64..40,
    ) {
        let a = d1 * d2;
        let b = e1 * e2;
        prop_assume!(numutil::gcd(a as u128, b as u128) == 1);
        let f = mv(&[d1 * e1, d2 * e2]);
        prop_assume!(f.lcm().unwrap() <= 10_000);
        let w = worked_system();
        let whole = localdensity::density(&w, &f).unwrap();
        let left = localdensity::density(&w, &mv(&[d1, d2])).unwrap();
        let right = localdensity::density(&w, &mv(&[e1, e2])).unwrap();
        prop_assert_eq!(whole.rho, left.rho * right.rho);
        prop_assert_eq!(whole.rho_star, left.rho_star * right.rho_star);
    }

    #[test]
    fn composed_density_matches_direct_count(d1 in 1u64..90, d2 in 1u64..90) {
        let w = worked_system();
        let d = mv(&[d1, d2]);
        prop_assume!(d.lcm().unwrap() <= 10_000);
        prop_assert_eq!(
            localdensity::density(&w, &d).unwrap(),
            localdensity::density_multiplicative(&w, &d).unwrap()
        );
    }

    #[test]
    fn transition_formula_holds(d1 in 1u64..60, d2 in 1u64..60) {
        let w = worked_system();
        let d = mv(&[d1, d2]);
        prop_assume!(d.product().unwrap() <= 10_000);
        prop_assert_eq!(
            localdensity::rho(&w, &d).unwrap(),
            localdensity::rho_via_transition(&w, &d).unwrap()
        );
    }

    #[test]
    fn omega_stays_in_range(k in 0usize..200) {
        let w = worked_system();
        let p = numutil::primes_below(2000)[k + 2] as u128;
        let om = localdensity::omega_closed(&w, p).unwrap();
        let v = num_traits::ToPrimitive::to_f64(&om).unwrap();
        prop_assert!(v >= 0.0 && v < p as f64 && v < 4.0 + 1.0 / p as f64);
    }

    #[test]
    fn inclusion_exclusion_matches_direct_count(
        idx in 0usize..60, x in 20.0f64..120.0, cx in -0.5f64..0.5,
    ) {
        // a dense system, so that the counts are far from zero
        let s = sum_of_squares();
        let d = (1..400u128)
            .filter(|&d| {
                let f = numutil::factorize(d).unwrap();
                f.is_squarefree() && f.primes().all(|p| s.is_sifting_prime(p))
            })
            .nth(idx)
            .unwrap();
        let region = Region::new(Shape::Disk { center: [cx, 0.0], radius: 1.0 }, x).unwrap();
        let c = localdensity::count_ad(&s, d, &region).unwrap();
        prop_assert_eq!(c.direct as i128, c.inclusion_exclusion);
    }

    #[test]
    fn density_product_decreases_with_gamma(g1 in 0.05f64..0.9, g2 in 0.05f64..0.9) {
        let w = worked_system();
        let (lo, hi) = if g1 < g2 { (g1, g2) } else { (g2, g1) };
        let a = density_product(&w, 1e5, lo).unwrap();
        let b = density_product(&w, 1e5, hi).unwrap();
        prop_assert!(b <= a + 1e-15 && b > 0.0 && a <= 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn histogram_totals_and_threshold(x in 50i64..600, kind in 0u8..2) {
        let shape = if kind == 0 {
            Shape::Box { min: [-1.0, -1.0], max: [1.0, 1.0] }
        } else {
            Shape::Disk { center: [0.2, -0.1], radius: 1.0 }
        };
        let cfg = config(x, shape);
        let rep = run_experiment_with(&cfg, Threshold::Configured).unwrap();
        prop_assert_eq!(rep.histogram.values().sum::<u64>(), rep.total_points);
        prop_assert_eq!(rep.histogram.range(..=5).map(|(_, c)| *c).sum::<u64>(), rep.p_r_count);
        let all = run_experiment_with(&cfg, Threshold::All).unwrap();
        prop_assert_eq!(all.p_r_count, all.total_points);
        prop_assert_eq!(&all.histogram, &rep.histogram);
    }
}

#[test]
fn doubling_x_quadruples_the_point_count() {
    let square = Shape::Box {
        min: [-1.0, -1.0],
        max: [1.0, 1.0],
    };
    for x in [500i64, 1000, 2000] {
        let small = run_experiment_with(&config(x, square.clone()), Threshold::All).unwrap();
        let big = run_experiment_with(&config(2 * x, square.clone()), Threshold::All).unwrap();
        let (n1, n2) = (small.total_points as f64, big.total_points as f64);
        // one residue class mod 216: boundary error at most a few rows
        let slack = 4.0 * (2.0 * 2.0 * x as f64 / 216.0 + 2.0);
        assert!((n2 - 4.0 * n1).abs() <= slack, "X = {x}: {n1} -> {n2}");
    }
}

#[test]
fn bound_is_continuous_near_the_minimizer() {
    for kappa in [2, 5, 10] {
        let params = SieveParams::tabulated(kappa).unwrap();
        let opt = minimize_r(&params).unwrap();
        let table = solve_ff(&params, 61.0, 1e-3).unwrap();
        for (du, dv) in [(1e-6, 0.0), (0.0, 1e-6), (-1e-6, 1e-6), (1e-6, -1e-6)] {
            let r = r_bound(&params, opt.u + du, opt.v + dv, &table).unwrap();
            assert!((r - opt.bound).abs() < 1e-4, "kappa {kappa}: {r} vs {}", opt.bound);
        }
    }
}
