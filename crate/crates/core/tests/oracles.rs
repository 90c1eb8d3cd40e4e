//! Library routines against brute-force reimplementations.

use cantorlab_core::empirical::{
    kolmogorov, star_discrepancy, wasserstein1, EmpiricalCdf, Uniform,
};
use cantorlab_core::qadditive::{eval_range, LevelTables};
use cantorlab_core::{BaseRule, CantorBase, DigitMap, DigitTable};
use num_bigint::BigUint;
use proptest::prelude::*;

/// `sup_x |#{p <= x}/N - x|` and the left limits, scanning every candidate
/// jump with a full count each time.
fn brute_star(points: &[f64]) -> f64 {
    let n = points.len() as f64;
    let mut worst = 0.0f64;
    let mut cands: Vec<f64> = points.to_vec();
    cands.push(0.0);
    cands.push(1.0);
    for &x in &cands {
        let le = points.iter().filter(|&&p| p <= x).count() as f64 / n;
        let lt = points.iter().filter(|&&p| p < x).count() as f64 / n;
        worst = worst.max((le - x).abs()).max((lt - x).abs());
    }
    worst
}

/// `int_0^1 |Q(u) - u| du` with the empirical quantile `Q`.
fn quantile_w1(points: &[f64]) -> f64 {
    let mut p = points.to_vec();
    p.sort_by(f64::total_cmp);
    let n = p.len() as f64;
    let seg = |x: f64, a: f64, b: f64| -> f64 {
        // int_a^b |x - u| du
        let f = |u: f64| {
            if u <= x {
                x * u - u * u / 2.0
            } else {
                x * x - (x * u - u * u / 2.0)
            }
        };
        f(b) - f(a)
    };
    p.iter()
        .enumerate()
        .map(|(i, &x)| seg(x, i as f64 / n, (i + 1) as f64 / n))
        .sum()
}

fn digits_by_division(mut n: u64, radices: impl Fn(usize) -> u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut j = 0;
    while n > 0 {
        let a = radices(j);
        out.push(n % a);
        n /= a;
        j += 1;
    }
    out
}

proptest! {
    #[test]
    fn star_discrepancy_matches_scan(pts in prop::collection::vec(0.0f64..1.0, 1..60)) {
        let d = star_discrepancy(&pts).unwrap();
        prop_assert!((d - brute_star(&pts)).abs() < 1e-15);
        let e = EmpiricalCdf::from_samples(pts.clone()).unwrap();
        let k = kolmogorov(&e, &Uniform::unit());
        prop_assert_eq!(k.hi, d);
        prop_assert_eq!(k.lo, d);
    }

    #[test]
    fn wasserstein_matches_quantile_form(pts in prop::collection::vec(0.0f64..1.0, 1..60)) {
        let e = EmpiricalCdf::from_samples(pts.clone()).unwrap();
        let w = wasserstein1(&e, &Uniform::unit());
        prop_assert!((w.value - quantile_w1(&pts)).abs() <= 1e-12 + w.tol);
    }

    #[test]
    fn expansion_matches_repeated_division(n in any::<u64>(), pattern in prop::collection::vec(2u64..40, 1..5)) {
        let base = CantorBase::new(BaseRule::Periodic { pattern: pattern.clone() }).unwrap();
        let p = pattern.clone();
        let expect = digits_by_division(n, |j| p[j % p.len()]);
        let got = base.expand(n);
        prop_assert_eq!(got.digits(), &expect[..]);
        prop_assert_eq!(base.compress(&expect).unwrap(), BigUint::from(n));
    }

    #[test]
    fn range_evaluation_is_bit_identical(start in 0u64..1_000_000, len in 1usize..300) {
        let base = CantorBase::factorial();
        let map = DigitMap::Polynomial { alpha: 1.25, g: DigitTable::Identity };
        let top = base.length(start + len as u64) + 1;
        let tables = LevelTables::new(&map, &base, top).unwrap();
        let mut out = vec![0.0; len];
        eval_range(&base, &tables, start, &mut out);
        for (i, v) in out.iter().enumerate() {
            prop_assert_eq!(v.to_bits(), map.eval(&base, start + i as u64).to_bits());
        }
    }
}

#[test]
fn evaluation_matches_digit_sum() {
    let base = CantorBase::new(BaseRule::Periodic {
        pattern: vec![2, 3],
    })
    .unwrap();
    let m = DigitMap::RadicalInverse;
    for n in 0..5000u64 {
        let ds = digits_by_division(n, |j| if j % 2 == 0 { 2 } else { 3 });
        // q_{j+1} built by multiplication.
        let mut q = 1u64;
        let mut terms = Vec::new();
        for (j, &d) in ds.iter().enumerate() {
            q *= if j % 2 == 0 { 2 } else { 3 };
            terms.push(d as f64 / q as f64);
        }
        let direct: f64 = terms.iter().rev().sum();
        assert_eq!(m.eval(&base, n), direct, "n={n}");
    }
}
