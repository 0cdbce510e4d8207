mod common;

use common::{eval, random_cheb, random_sparse, rng};
use hypercube_sos::certificates::{decompose_multi, decompose_univariate, norm_gap_certificate};
use hypercube_sos::kernel_lift::{
    back_map, kappa, lift_certificate, lift_polynomial, split, LiftSpace,
};
use hypercube_sos::{Basis, MultiIndex, Poly};
use rand::Rng;

fn cheb_t(k: u32, x: f64) -> f64 {
    (f64::from(k) * x.clamp(-1.0, 1.0).acos()).cos()
}

#[test]
fn product_to_sum_identity() {
    let mut g = rng(41);
    for k in 0..=8u32 {
        for _ in 0..50 {
            let x: f64 = g.gen_range(-1.0..1.0);
            let y: f64 = g.gen_range(-1.0..1.0);
            let s = ((1.0 - x * x) * (1.0 - y * y)).sqrt();
            let lhs = cheb_t(k, x) * cheb_t(k, y);
            let rhs = 0.5 * (cheb_t(k, x * y + s) + cheb_t(k, x * y - s));
            assert!((lhs - rhs).abs() < 1e-10, "k={k}");
        }
    }
}

#[test]
fn lift_coefficients_are_diagonal() {
    let mut g = rng(42);
    for _ in 0..100 {
        let n = g.gen_range(1..=2);
        let deg = g.gen_range(0..=6);
        let p = random_cheb(&mut g, n, deg);
        let k = lift_polynomial(&p).to_basis(Basis::Chebyshev);
        assert_eq!(k.nvars(), 2 * n);
        for (idx, c) in k.iter() {
            let (a, b) = idx.as_slice().split_at(n);
            if a == b {
                assert!((c - p.coeff(&MultiIndex::new(a.to_vec()))).abs() < 1e-10);
            } else {
                assert!(c.abs() < 1e-10, "off-pair {idx}: {c}");
            }
        }
        for (a, c) in p.iter() {
            let mut pair = a.as_slice().to_vec();
            pair.extend_from_slice(a.as_slice());
            assert!((k.coeff(&MultiIndex::new(pair)) - c).abs() < 1e-10);
        }
        assert!(back_map(&k).max_abs_diff(&p).unwrap() < 1e-10);
    }
}

#[test]
fn split_reconstructs_substitution() {
    let mut g = rng(43);
    for _ in 0..40 {
        let n = g.gen_range(1..=2);
        let sp = LiftSpace::new(n);
        let q = random_sparse(&mut g, sp.total(), 5, 6, Basis::Monomial).with_group("uxy");
        let i = g.gen_range(0..n);
        let r = split(&sp, &q, i);
        assert_eq!(r.q0.degree_in(&[sp.u(i)]), 0);
        assert_eq!(r.q1.degree_in(&[sp.u(i)]), 0);
        let ux: Vec<usize> = (0..n)
            .map(|j| sp.u(j))
            .chain((0..n).map(|j| sp.x(j)))
            .collect();
        let uy: Vec<usize> = (0..n)
            .map(|j| sp.u(j))
            .chain((0..n).map(|j| sp.y(j)))
            .collect();
        assert!(r.q0.degree_in(&ux) <= q.degree_in(&ux));
        assert!(r.q0.degree_in(&uy) <= q.degree_in(&uy));
        if !r.q1.is_zero() {
            assert!(r.q1.degree_in(&ux) < q.degree_in(&ux));
            assert!(r.q1.degree_in(&uy) < q.degree_in(&uy));
        }
        for _ in 0..20 {
            let mut pt: Vec<f64> = (0..sp.total()).map(|_| g.gen_range(-1.0..1.0)).collect();
            let (x, y) = (pt[sp.x(i)], pt[sp.y(i)]);
            let s = ((1.0 - x * x) * (1.0 - y * y)).sqrt();
            let q0 = eval(&r.q0, &pt);
            let q1 = eval(&r.q1, &pt);
            for sign in [1.0, -1.0] {
                pt[sp.u(i)] = x * y + sign * s;
                let v = eval(&q, &pt);
                assert!((v - (q0 + sign * s * q1)).abs() < 1e-9 * (1.0 + v.abs()));
            }
        }
    }
}

#[test]
fn kappa_is_multiplicative_over_free_factors() {
    let mut g = rng(44);
    let sp = LiftSpace::new(2);
    for _ in 0..20 {
        let q1 = random_sparse(&mut g, sp.total(), 4, 4, Basis::Monomial).with_group("uxy");
        // q2 without u_0
        let q2 = random_sparse(&mut g, sp.total(), 3, 3, Basis::Monomial)
            .substitute(&[(sp.u(0), 1.0)])
            .embed(sp.total(), &(1..sp.total()).collect::<Vec<_>>())
            .with_group("uxy");
        let lhs = kappa(&sp, &q1.mul(&q2).unwrap(), 0);
        let rhs = kappa(&sp, &q1, 0).mul(&q2).unwrap();
        assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-9);
        let sum = kappa(&sp, &q1.add(&q2).unwrap(), 0);
        let parts = kappa(&sp, &q1, 0).add(&kappa(&sp, &q2, 0)).unwrap();
        assert!(sum.max_abs_diff(&parts).unwrap() < 1e-10);
    }
}

#[test]
fn kappa_of_t2() {
    let sp = LiftSpace::new(1);
    let t2 = Poly::term(Basis::Chebyshev, MultiIndex::new(vec![2]), 1.0);
    let k = kappa(&sp, &sp.embed_u(&t2), 0);
    let expected = Poly::term(Basis::Chebyshev, MultiIndex::new(vec![0, 2, 2]), 1.0);
    assert!(k.max_abs_diff(&expected).unwrap() < 1e-14);
}

fn check_lift(cert: &hypercube_sos::certificates::Certificate) {
    let lifted = lift_certificate(cert).unwrap();
    assert!(lifted.verify() < 1e-9, "residual {}", lifted.verify());
    lifted.check_structure().unwrap();
    let direct = lift_polynomial(cert.target());
    assert!(lifted.expand().max_abs_diff(&direct).unwrap() < 1e-9);
    let r = cert.degree_cap();
    assert!(lifted.degrees().iter().all(|&d| d <= r));
}

#[test]
fn lifted_certificates_verify() {
    let mut g = rng(45);
    for k in 1..=6 {
        for sign in [1i8, -1] {
            check_lift(&decompose_univariate(k, sign).unwrap());
        }
    }
    for _ in 0..30 {
        let n = g.gen_range(1..=2);
        let mut a = vec![0u32; n];
        for _ in 0..g.gen_range(1..=5) {
            a[g.gen_range(0..n)] += 1;
        }
        let sign = if g.gen_bool(0.5) { 1 } else { -1 };
        check_lift(&decompose_multi(&MultiIndex::new(a), sign).unwrap());
    }
    for _ in 0..20 {
        let n = g.gen_range(1..=2);
        let deg = g.gen_range(1..=4);
        let p = random_cheb(&mut g, n, deg);
        check_lift(&norm_gap_certificate(&p).unwrap());
    }
}
