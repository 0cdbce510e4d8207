mod common;

use std::f64::consts::PI;

use common::{random_cheb, rng};
use hypercube_sos::jackson::{
    apriori_gap_bound, jackson_coefficient, product_kernel, smooth, univariate_kernel_value,
    GapBound,
};
use hypercube_sos::{Basis, MultiIndex};
use rand::Rng;

#[test]
fn univariate_kernel_is_nonnegative() {
    for r in 1..=12 {
        let mut min = f64::INFINITY;
        for i in 0..101 {
            for j in 0..101 {
                let x = -1.0 + 0.02 * i as f64;
                let y = -1.0 + 0.02 * j as f64;
                min = min.min(univariate_kernel_value(r, x, y));
            }
        }
        assert!(min >= -1e-9, "r = {r}: min {min}");
    }
}

#[test]
fn coefficient_bounds() {
    for r in 1..=50u32 {
        assert_eq!(jackson_coefficient(0, r).unwrap(), 1.0);
        for k in 1..=r {
            let l = jackson_coefficient(i64::from(k), r).unwrap();
            assert!(l > 0.0 && l <= 1.0, "λ_{k}^{r} = {l}");
            let bound = PI * PI * f64::from(k * k) / f64::from((r + 2) * (r + 2));
            assert!(1.0 - l <= bound + 1e-15);
        }
    }
}

#[test]
fn coefficient_matches_closed_form_oracle() {
    // λ_1^r = cos(π/(r+2)), the largest eigenvalue of the path Laplacian.
    for r in 1..=30u32 {
        let l = jackson_coefficient(1, r).unwrap();
        assert!((l - (PI / f64::from(r + 2)).cos()).abs() < 1e-14);
    }
}

#[test]
fn bernoulli_bound_exhaustive() {
    for n in 1..=3usize {
        for d in 1..=4u32 {
            for r in 1..=20u32 {
                if PI * f64::from(d) >= f64::from(r + 2) {
                    continue;
                }
                let k = product_kernel(n, r, d).unwrap();
                let bound = PI * PI * f64::from(d * d) / f64::from((r + 2) * (r + 2));
                for alpha in MultiIndex::up_to_degree(n, d) {
                    let l = k.lambda(&alpha).expect("|α| ≤ d < r + 2 keeps α_i ≤ r");
                    assert!(
                        (1.0 - l).abs() <= bound + 1e-15,
                        "n={n} d={d} r={r} α={alpha}"
                    );
                }
                assert!(k.max_deviation(d) <= bound + 1e-15);
            }
        }
    }
}

#[test]
fn smoothing_error_bound() {
    let mut g = rng(21);
    for _ in 0..100 {
        let n = g.gen_range(1..=3);
        let deg = g.gen_range(1..=4);
        let r = g.gen_range(deg..=8);
        let f = random_cheb(&mut g, n, deg);
        let k = product_kernel(n, r, deg).unwrap();
        let s = smooth(&f, &k).unwrap();
        let err = s.sub(&f).unwrap().coeff_one_norm(Basis::Chebyshev);
        let bound = k.max_deviation(deg) * f.coeff_one_norm(Basis::Chebyshev);
        assert!(err <= bound + 1e-12);
        // linear and constant-preserving
        let s2 = smooth(&f.scale(2.0).add_constant(3.0), &k).unwrap();
        let lin = s.scale(2.0).add_constant(3.0);
        assert!(s2.max_abs_diff(&lin).unwrap() < 1e-12);
    }
}

#[test]
fn product_kernel_entries() {
    let k = product_kernel(3, 5, 6).unwrap();
    for (alpha, l) in k.iter() {
        let expected: f64 = alpha
            .as_slice()
            .iter()
            .map(|&a| jackson_coefficient(i64::from(a), 5).unwrap())
            .product();
        assert!((l - expected).abs() < 1e-15);
        assert!(l > 0.0 && l <= 1.0);
    }
    assert_eq!(k.lambda(&MultiIndex::zeros(3)), Some(1.0));
}

#[test]
fn apriori_bound_regimes() {
    match apriori_gap_bound(2, 1, 4, 1.0) {
        GapBound::Certified(v) => assert!((v - PI * PI / 36.0).abs() < 1e-15),
        GapBound::Vacuous => panic!("π < 6"),
    }
    assert_eq!(apriori_gap_bound(1, 2, 4, 2.0), GapBound::Vacuous);
    assert_eq!(apriori_gap_bound(1, 4, 10, 0.0).value(), Some(0.0));
}
