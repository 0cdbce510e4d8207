//! The lift `p(u) ↦ K_p(x, y)` into doubled variables and its action on
//! pre-ordering certificates.
//!
//! Working polynomials live in a `3n`-variate space laid out as
//! `(u_1..u_n, x_1..x_n, y_1..y_n)` (see [`LiftSpace`]). The operator `κ^i`
//! substitutes `u_i ↦ x_i y_i ± s` with `s² = (1 − x_i²)(1 − y_i²)` and averages
//! the two signs, which keeps exactly the `s`-even part. Applying `κ^1 … κ^n`
//! eliminates every `u` and yields `K_p = Σ p_α T_α(x) T_α(y)`.

use std::collections::BTreeMap;

use crate::certificates::{
    Certificate, CertificateError, DegreeGroup, Generator, Summand, WeightedSquare,
};
use crate::poly::{binomial, Basis, MultiIndex, Poly};

/// Index layout of the `(u, x, y)` working space for `n` original variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LiftSpace {
    pub n: usize,
}

impl LiftSpace {
    pub fn new(n: usize) -> Self {
        LiftSpace { n }
    }

    pub fn total(&self) -> usize {
        3 * self.n
    }

    pub fn u(&self, i: usize) -> usize {
        i
    }

    pub fn x(&self, i: usize) -> usize {
        self.n + i
    }

    pub fn y(&self, i: usize) -> usize {
        2 * self.n + i
    }

    /// Embeds a polynomial in `u` into the working space.
    pub fn embed_u(&self, p: &Poly) -> Poly {
        let positions: Vec<usize> = (0..self.n).map(|i| self.u(i)).collect();
        p.to_basis(Basis::Monomial)
            .embed(self.total(), &positions)
            .with_group("uxy")
    }

    /// Drops the (absent) `u` block, giving a `2n`-variate polynomial in `(x, y)`.
    pub fn project_xy(&self, p: &Poly) -> Option<Poly> {
        let keep: Vec<usize> = (self.n..3 * self.n).collect();
        p.project(&keep).map(|q| q.with_group("xy"))
    }

    fn var(&self, i: usize, basis: Basis) -> Poly {
        Poly::variable(self.total(), basis, i).with_group("uxy")
    }

    fn constant(&self, c: f64) -> Poly {
        Poly::constant(self.total(), Basis::Monomial, c).with_group("uxy")
    }

    /// `(1 − x_i²)(1 − y_i²)`.
    fn radical_square(&self, i: usize) -> Poly {
        let x = self.var(self.x(i), Basis::Monomial);
        let y = self.var(self.y(i), Basis::Monomial);
        let one = self.constant(1.0);
        let a = one.sub(&x.mul(&x).unwrap()).unwrap();
        let b = one.sub(&y.mul(&y).unwrap()).unwrap();
        a.mul(&b).unwrap()
    }
}

/// `q(…, x_i y_i ± s, …) = q0 ± s·q1` with `s² = (1 − x_i²)(1 − y_i²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    pub q0: Poly,
    pub q1: Poly,
}

/// Substitutes `u_i ↦ x_i y_i + s`, reduces `s²`, and separates the parts even
/// and odd in `s`.
pub fn split(space: &LiftSpace, q: &Poly, i: usize) -> SplitResult {
    assert_eq!(
        q.nvars(),
        space.total(),
        "polynomial must live in the lift space"
    );
    let q = q.to_basis(Basis::Monomial).with_group("uxy");
    let ui = space.u(i);
    let max_k = q.terms().keys().map(|a| a[ui]).max().unwrap_or(0);

    let xy = space
        .var(space.x(i), Basis::Monomial)
        .mul(&space.var(space.y(i), Basis::Monomial))
        .unwrap();
    let s2 = space.radical_square(i);
    let xy_pows = powers(&xy, max_k, space);
    let s2_pows = powers(&s2, max_k / 2 + 1, space);

    // (x y + s)^k = Σ_j C(k, j) (x y)^{k−j} s^j, collected once per k.
    let expansions: Vec<(Poly, Poly)> = (0..=max_k)
        .map(|k| {
            let mut even = space.constant(0.0);
            let mut odd = space.constant(0.0);
            for j in 0..=k {
                let c = binomial(k, j);
                let part = xy_pows[(k - j) as usize]
                    .mul(&s2_pows[(j / 2) as usize])
                    .unwrap()
                    .scale(c);
                if j % 2 == 0 {
                    even = even.add(&part).unwrap();
                } else {
                    odd = odd.add(&part).unwrap();
                }
            }
            (even, odd)
        })
        .collect();

    let mut q0 = space.constant(0.0);
    let mut q1 = space.constant(0.0);
    for (alpha, c) in q.iter() {
        let k = alpha[ui];
        let mut rest = alpha.as_slice().to_vec();
        rest[ui] = 0;
        let mono = Poly::term(Basis::Monomial, MultiIndex::new(rest), c).with_group("uxy");
        if k == 0 {
            q0 = q0.add(&mono).unwrap();
            continue;
        }
        let (even, odd) = &expansions[k as usize];
        q0 = q0.add(&mono.mul(even).unwrap()).unwrap();
        q1 = q1.add(&mono.mul(odd).unwrap()).unwrap();
    }
    SplitResult { q0, q1 }
}

fn powers(base: &Poly, max: u32, space: &LiftSpace) -> Vec<Poly> {
    let mut out = Vec::with_capacity(max as usize + 1);
    let mut acc = space.constant(1.0);
    for _ in 0..=max {
        out.push(acc.clone());
        acc = acc.mul(base).unwrap();
    }
    out
}

/// `κ^i(q) = ½(q|_{u_i = x_i y_i + s} + q|_{u_i = x_i y_i − s})`, the `s`-even part.
pub fn kappa(space: &LiftSpace, q: &Poly, i: usize) -> Poly {
    split(space, q, i).q0
}

/// `K_p(x, y)` as a `2n`-variate monomial-basis polynomial, variables ordered
/// `(x_1..x_n, y_1..y_n)`.
pub fn lift_polynomial(p: &Poly) -> Poly {
    let space = LiftSpace::new(p.nvars());
    let mut acc = space.embed_u(p);
    for i in 0..space.n {
        acc = kappa(&space, &acc, i);
    }
    space
        .project_xy(&acc)
        .expect("every u variable is eliminated")
}

/// `p_K(t) = K(t, 1)`: sets every `y_i = 1` in a lifted polynomial.
pub fn back_map(k: &Poly) -> Poly {
    let n = k.nvars() / 2;
    let assign: Vec<(usize, f64)> = (n..2 * n).map(|j| (j, 1.0)).collect();
    k.substitute(&assign).with_group("x")
}

/// Lifts a certificate of `p ∈ T(1 ± u)_r` to one of
/// `K_p ∈ T(1 ± x; 1 ± y)_{r,r}`.
///
/// Variables are processed one at a time; each summand is classified by
/// which of `1 − u_i`, `1 + u_i` it carries and rewritten with the matching
/// identity, the other generators riding along as constants.
pub fn lift_certificate(cert: &Certificate) -> Result<Certificate, CertificateError> {
    let residual = cert.verify();
    if residual >= 1e-9 {
        return Err(CertificateError::InvalidInput { residual });
    }
    let n = cert.nvars();
    let space = LiftSpace::new(n);
    let positions: Vec<usize> = (0..n).map(|i| space.u(i)).collect();

    let mut work: BTreeMap<Vec<Generator>, Vec<WeightedSquare>> = BTreeMap::new();
    for s in cert.summands() {
        let entry = work.entry(s.generators().to_vec()).or_default();
        for ws in &s.sos {
            entry.push(WeightedSquare {
                weight: ws.weight,
                q: ws
                    .q
                    .to_basis(Basis::Monomial)
                    .embed(space.total(), &positions)
                    .with_group("uxy"),
            });
        }
    }

    for i in 0..n {
        let mut next: BTreeMap<Vec<Generator>, Vec<WeightedSquare>> = BTreeMap::new();
        for (gens, squares) in work {
            lift_step(&space, i, &gens, &squares, &mut next);
        }
        work = next;
    }

    let target = lift_polynomial(cert.target());
    let summands: Vec<Summand> = work
        .into_iter()
        .map(|(gens, squares)| {
            let gens = gens
                .into_iter()
                .map(|g| Generator {
                    var: g.var - n,
                    sign: g.sign,
                })
                .collect();
            let squares = squares
                .into_iter()
                .map(|ws| WeightedSquare {
                    weight: ws.weight,
                    q: space.project_xy(&ws.q).expect("u eliminated"),
                })
                .collect();
            Summand::new(gens, squares)
        })
        .collect();
    let r = cert.degree_cap();
    Ok(Certificate::with_groups(
        target,
        summands,
        vec![
            DegreeGroup { vars: 0..n, cap: r },
            DegreeGroup {
                vars: n..2 * n,
                cap: r,
            },
        ],
    ))
}

fn push(
    out: &mut BTreeMap<Vec<Generator>, Vec<WeightedSquare>>,
    rest: &[Generator],
    extra: &[Generator],
    weight: f64,
    q: Poly,
) {
    if q.is_zero() || weight == 0.0 {
        return;
    }
    let mut gens: Vec<Generator> = rest.iter().chain(extra).copied().collect();
    gens.sort();
    gens.dedup();
    out.entry(gens)
        .or_default()
        .push(WeightedSquare { weight, q });
}

fn lift_step(
    space: &LiftSpace,
    i: usize,
    gens: &[Generator],
    squares: &[WeightedSquare],
    out: &mut BTreeMap<Vec<Generator>, Vec<WeightedSquare>>,
) {
    let ui = space.u(i);
    let has_minus = gens.contains(&Generator::minus(ui));
    let has_plus = gens.contains(&Generator::plus(ui));
    let rest: Vec<Generator> = gens.iter().copied().filter(|g| g.var != ui).collect();

    let (xi, yi) = (space.x(i), space.y(i));
    let x = space.var(xi, Basis::Monomial);
    let y = space.var(yi, Basis::Monomial);
    let one = space.constant(1.0);
    let x_minus = one.sub(&x).unwrap();
    let x_plus = one.add(&x).unwrap();
    let y_minus = one.sub(&y).unwrap();
    let y_plus = one.add(&y).unwrap();

    for ws in squares {
        let SplitResult { q0, q1 } = split(space, &ws.q, i);
        let w = ws.weight;
        match (has_minus, has_plus) {
            (false, false) => {
                // κ(q²) = q0² + (1 − x²)(1 − y²) q1²
                push(out, &rest, &[], w, q0);
                push(
                    out,
                    &rest,
                    &[
                        Generator::minus(xi),
                        Generator::plus(xi),
                        Generator::minus(yi),
                        Generator::plus(yi),
                    ],
                    w,
                    q1,
                );
            }
            (true, false) => {
                let a = q0
                    .sub(&x_plus.mul(&y_minus).unwrap().mul(&q1).unwrap())
                    .unwrap();
                let b = q0
                    .sub(&x_minus.mul(&y_plus).unwrap().mul(&q1).unwrap())
                    .unwrap();
                push(
                    out,
                    &rest,
                    &[Generator::minus(xi), Generator::plus(yi)],
                    0.5 * w,
                    a,
                );
                push(
                    out,
                    &rest,
                    &[Generator::plus(xi), Generator::minus(yi)],
                    0.5 * w,
                    b,
                );
            }
            (false, true) => {
                let a = q0
                    .add(&x_minus.mul(&y_minus).unwrap().mul(&q1).unwrap())
                    .unwrap();
                let b = q0
                    .add(&x_plus.mul(&y_plus).unwrap().mul(&q1).unwrap())
                    .unwrap();
                push(
                    out,
                    &rest,
                    &[Generator::plus(xi), Generator::plus(yi)],
                    0.5 * w,
                    a,
                );
                push(
                    out,
                    &rest,
                    &[Generator::minus(xi), Generator::minus(yi)],
                    0.5 * w,
                    b,
                );
            }
            (true, true) => {
                let one_x2 = one.sub(&x.mul(&x).unwrap()).unwrap();
                let one_y2 = one.sub(&y.mul(&y).unwrap()).unwrap();
                let a = x
                    .mul(&q0)
                    .unwrap()
                    .sub(&y.mul(&one_x2).unwrap().mul(&q1).unwrap())
                    .unwrap();
                let b = y
                    .mul(&q0)
                    .unwrap()
                    .sub(&x.mul(&one_y2).unwrap().mul(&q1).unwrap())
                    .unwrap();
                push(
                    out,
                    &rest,
                    &[Generator::minus(yi), Generator::plus(yi)],
                    w,
                    a,
                );
                push(
                    out,
                    &rest,
                    &[Generator::minus(xi), Generator::plus(xi)],
                    w,
                    b,
                );
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificates::{decompose_univariate, norm_gap_certificate};

    fn u_space_poly(space: &LiftSpace, terms: &[(Vec<u32>, f64)]) -> Poly {
        Poly::from_terms(
            space.total(),
            Basis::Monomial,
            terms.iter().map(|(a, c)| (MultiIndex::new(a.clone()), *c)),
        )
        .unwrap()
        .with_group("uxy")
    }

    #[test]
    fn split_examples() {
        let sp = LiftSpace::new(1);
        // q = u → q0 = xy, q1 = 1
        let r = split(&sp, &u_space_poly(&sp, &[(vec![1, 0, 0], 1.0)]), 0);
        assert_eq!(r.q0, u_space_poly(&sp, &[(vec![0, 1, 1], 1.0)]));
        assert_eq!(r.q1, u_space_poly(&sp, &[(vec![0, 0, 0], 1.0)]));
        // q = u² → q0 = x²y² + (1−x²)(1−y²), q1 = 2xy
        let r = split(&sp, &u_space_poly(&sp, &[(vec![2, 0, 0], 1.0)]), 0);
        let expected = u_space_poly(
            &sp,
            &[
                (vec![0, 2, 2], 2.0),
                (vec![0, 0, 0], 1.0),
                (vec![0, 2, 0], -1.0),
                (vec![0, 0, 2], -1.0),
            ],
        );
        assert_eq!(r.q0, expected);
        assert_eq!(r.q1, u_space_poly(&sp, &[(vec![0, 1, 1], 2.0)]));
        // independent of u
        let q = u_space_poly(&sp, &[(vec![0, 3, 1], 0.5)]);
        let r = split(&sp, &q, 0);
        assert_eq!(r.q0, q);
        assert!(r.q1.is_zero());
    }

    #[test]
    fn kappa_examples() {
        let sp = LiftSpace::new(1);
        let t2 = Poly::term(Basis::Chebyshev, MultiIndex::new(vec![2]), 1.0);
        let k = kappa(&sp, &sp.embed_u(&t2), 0);
        let expected = Poly::term(Basis::Chebyshev, MultiIndex::new(vec![0, 2, 2]), 1.0);
        assert!(k.max_abs_diff(&expected).unwrap() < 1e-14);
        let c = sp.constant(3.0);
        assert_eq!(kappa(&sp, &c, 0), c);
        let t1 = Poly::term(Basis::Chebyshev, MultiIndex::new(vec![1]), 1.0);
        let k = kappa(&sp, &sp.embed_u(&t1), 0);
        assert_eq!(k, u_space_poly(&sp, &[(vec![0, 1, 1], 1.0)]));
    }

    #[test]
    fn lift_examples() {
        let t = |a: Vec<u32>, c: f64| Poly::term(Basis::Chebyshev, MultiIndex::new(a), c);
        let k = lift_polynomial(&t(vec![1], 1.0));
        assert!(k.max_abs_diff(&t(vec![1, 1], 1.0)).unwrap() < 1e-14);
        let p = t(vec![0], 1.0).add(&t(vec![2], 2.0)).unwrap();
        let expected = t(vec![0, 0], 1.0).add(&t(vec![2, 2], 2.0)).unwrap();
        assert!(lift_polynomial(&p).max_abs_diff(&expected).unwrap() < 1e-13);
        let k = lift_polynomial(&t(vec![1, 1], 1.0));
        assert!(k.max_abs_diff(&t(vec![1, 1, 1, 1], 1.0)).unwrap() < 1e-14);
    }

    #[test]
    fn lift_generator_certificate() {
        // 1 + u ↦ ½(1+x)(1+y) + ½(1−x)(1−y) = 1 + xy
        let cert = decompose_univariate(1, 1).unwrap();
        let lifted = lift_certificate(&cert).unwrap();
        assert_eq!(lifted.summands().len(), 2);
        for s in lifted.summands() {
            assert_eq!(s.sos.len(), 1);
            assert_eq!(s.sos[0].weight, 0.5);
            assert_eq!(
                s.sos[0].q,
                Poly::constant(2, Basis::Monomial, 1.0).with_group("xy")
            );
        }
        let gens: Vec<_> = lifted
            .summands()
            .iter()
            .map(|s| s.generators().to_vec())
            .collect();
        assert!(gens.contains(&vec![Generator::plus(0), Generator::plus(1)]));
        assert!(gens.contains(&vec![Generator::minus(0), Generator::minus(1)]));
        assert!(lifted.verify() < 1e-14);
        lifted.check_structure().unwrap();
    }

    #[test]
    fn lift_square_and_both_sign_certificates() {
        // u² = ½(1 + T_2)
        let cert = decompose_univariate(2, 1).unwrap().scaled(0.5);
        let lifted = lift_certificate(&cert).unwrap();
        assert!(lifted.verify() < 1e-12);
        assert_eq!(lifted.summands().len(), 2);
        lifted.check_structure().unwrap();
        // 2(1 − u²) = 1 − T_2
        let cert = decompose_univariate(2, -1).unwrap();
        let lifted = lift_certificate(&cert).unwrap();
        assert!(lifted.verify() < 1e-9);
        lifted.check_structure().unwrap();
        assert_eq!(lifted.degrees(), vec![2, 2]);
    }

    #[test]
    fn lift_rejects_invalid_input() {
        let mut cert = decompose_univariate(3, 1).unwrap();
        cert = Certificate::new(
            cert.target().add_constant(0.5),
            cert.summands().to_vec(),
            cert.degree_cap(),
        );
        assert!(matches!(
            lift_certificate(&cert),
            Err(CertificateError::InvalidInput { .. })
        ));
    }

    #[test]
    fn back_map_recovers_polynomial() {
        let p = Poly::from_terms(
            2,
            Basis::Chebyshev,
            vec![
                (MultiIndex::new(vec![0, 0]), 0.5),
                (MultiIndex::new(vec![2, 1]), -1.25),
                (MultiIndex::new(vec![0, 3]), 2.0),
            ],
        )
        .unwrap();
        let k = lift_polynomial(&p);
        assert!(back_map(&k).max_abs_diff(&p).unwrap() < 1e-13);
    }

    #[test]
    fn lift_of_norm_gap_in_two_variables() {
        let p = Poly::from_terms(
            2,
            Basis::Chebyshev,
            vec![
                (MultiIndex::new(vec![1, 1]), 0.7),
                (MultiIndex::new(vec![2, 0]), -0.4),
                (MultiIndex::new(vec![0, 3]), 0.2),
            ],
        )
        .unwrap();
        let cert = norm_gap_certificate(&p).unwrap();
        let lifted = lift_certificate(&cert).unwrap();
        assert!(lifted.verify() < 1e-9, "{}", lifted.verify());
        lifted.check_structure().unwrap();
        let direct = lift_polynomial(cert.target());
        assert!(lifted.expand().max_abs_diff(&direct).unwrap() < 1e-9);
    }
}
