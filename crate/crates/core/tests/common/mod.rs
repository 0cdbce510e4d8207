//! Shared oracles and generators for the integration tests.
#![allow(dead_code)]

use hypercube_sos::{Basis, MultiIndex, Poly};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dense random polynomial in the Chebyshev basis, coefficients uniform in [-1, 1].
pub fn random_cheb(rng: &mut ChaCha8Rng, n: usize, deg: u32) -> Poly {
    let terms: Vec<(MultiIndex, f64)> = MultiIndex::up_to_degree(n, deg)
        .map(|a| (a, rng.gen_range(-1.0..1.0)))
        .collect();
    Poly::from_terms(n, Basis::Chebyshev, terms).unwrap()
}

/// Random polynomial with a few terms, any basis.
pub fn random_sparse(rng: &mut ChaCha8Rng, n: usize, deg: u32, terms: usize, basis: Basis) -> Poly {
    let mut p = Poly::zero(n, basis);
    for _ in 0..terms {
        let mut alpha = vec![0u32; n];
        let total = rng.gen_range(0..=deg);
        for _ in 0..total {
            alpha[rng.gen_range(0..n)] += 1;
        }
        p.add_term(MultiIndex::new(alpha), rng.gen_range(-2.0..2.0));
    }
    p
}

/// `T_k(x) = cos(k·arccos x)`, evaluated without the library.
fn cheb_t(k: u32, x: f64) -> f64 {
    (f64::from(k) * x.clamp(-1.0, 1.0).acos()).cos()
}

/// Evaluates with the trigonometric form for Chebyshev input and plain powers
/// for monomial input.
pub fn eval(p: &Poly, x: &[f64]) -> f64 {
    p.iter()
        .map(|(a, c)| {
            let prod: f64 = a
                .as_slice()
                .iter()
                .zip(x)
                .map(|(&k, &xi)| match p.basis() {
                    Basis::Monomial => xi.powi(k as i32),
                    Basis::Chebyshev => cheb_t(k, xi),
                    Basis::NormalizedChebyshev => {
                        if k == 0 {
                            1.0
                        } else {
                            std::f64::consts::SQRT_2 * cheb_t(k, xi)
                        }
                    }
                })
                .product();
            c * prod
        })
        .sum()
}

/// Golden-section minimum of `g` on `[lo, hi]`.
fn golden(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - phi * (hi - lo);
    let mut b = lo + phi * (hi - lo);
    let (mut fa, mut fb) = (g(a), g(b));
    for _ in 0..80 {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - phi * (hi - lo);
            fa = g(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + phi * (hi - lo);
            fb = g(b);
        }
    }
    let mid = 0.5 * (lo + hi);
    [(lo, g(lo)), (mid, g(mid)), (hi, g(hi))]
        .into_iter()
        .fold(
            (mid, f64::INFINITY),
            |best, c| if c.1 < best.1 { c } else { best },
        )
}

/// `min_{[-1,1]^n} p`: a grid of `points^n` nodes, then coordinate-wise
/// golden-section refinement around the best nodes.
pub fn grid_min_with(p: &Poly, points: usize) -> f64 {
    let n = p.nvars();
    let h = 2.0 / (points - 1) as f64;
    let mut best: Vec<(f64, Vec<f64>)> = Vec::new();
    let total = points.pow(n as u32);
    let mut x = vec![0.0; n];
    for idx in 0..total {
        let mut rem = idx;
        for xi in x.iter_mut() {
            *xi = -1.0 + h * (rem % points) as f64;
            rem /= points;
        }
        let v = eval(p, &x);
        best.push((v, x.clone()));
        if best.len() > 64 {
            best.sort_by(|a, b| a.0.total_cmp(&b.0));
            best.truncate(8);
        }
    }
    best.sort_by(|a, b| a.0.total_cmp(&b.0));
    best.truncate(8);
    let mut out = best[0].0;
    for (_, start) in best {
        let mut x = start;
        let mut radius = h;
        for _ in 0..30 {
            for i in 0..n {
                let lo = (x[i] - radius).max(-1.0);
                let hi = (x[i] + radius).min(1.0);
                let g = |t: f64| {
                    let mut y = x.clone();
                    y[i] = t;
                    eval(p, &y)
                };
                let (t, _) = golden(g, lo, hi);
                if eval(p, &{
                    let mut y = x.clone();
                    y[i] = t;
                    y
                }) <= eval(p, &x)
                {
                    x[i] = t;
                }
            }
            radius *= 0.7;
        }
        out = out.min(eval(p, &x));
    }
    out
}

pub fn grid_min(p: &Poly) -> f64 {
    let points = match p.nvars() {
        1 => 2001,
        2 => 201,
        _ => 41,
    };
    grid_min_with(p, points)
}

/// `x1^4 x2^2 + x1^2 x2^4 − x1^2 x2^2 + 1/27`, minimum 0 at `|x_i| = 1/√3`.
pub fn motzkin() -> Poly {
    hypercube_sos::poly::parse_expression("x1^4*x2^2 + x1^2*x2^4 - x1^2*x2^2 + 1/27", None).unwrap()
}

pub fn cheb_one_norm(p: &Poly) -> f64 {
    p.to_basis(Basis::Chebyshev)
        .coeff_one_norm(Basis::Chebyshev)
}
