//! Compilers from polynomial bounds to [`SdpProblem`]s.
//!
//! Every program matches coefficients in the Chebyshev basis. A Gram block
//! `G_I` over the basis `(T_a)_{|a| ≤ k}` with multiplier `g_I` contributes
//! `Σ_{a,b} G_ab T_a T_b g_I`; the coefficient of `T_γ` in that sum is one
//! row of the equality system.

use std::collections::BTreeMap;

use crate::certificates::Generator;
use crate::poly::{power_in_chebyshev, Basis, MultiIndex, Poly};
use crate::sdp::{
    self, Constraint, Entry, SdpError, SdpProblem, SolveReport, SolveStatus, SolverOptions,
};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SosError {
    #[error("polynomial degree {degree} exceeds the cap {cap}")]
    DegreeViolation { degree: u32, cap: u32 },
    #[error("invalid arguments: {0}")]
    InvalidArguments(String),
    #[error("coefficient of T_{0} cannot be matched by any Gram block")]
    Unrepresentable(MultiIndex),
    #[error("solver stopped with status {status:?}")]
    Solver { status: SolveStatus },
    #[error(transparent)]
    Sdp(#[from] SdpError),
}

pub type Result<T> = std::result::Result<T, SosError>;

/// Generators of the truncated pre-ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PreorderingScheme {
    /// `1 − x_i, 1 + x_i`, each of degree 1.
    PlusMinus,
    /// `1 − x_i²`, each of degree 2.
    Squares,
}

impl PreorderingScheme {
    fn generator_degree(self) -> u32 {
        match self {
            PreorderingScheme::PlusMinus => 1,
            PreorderingScheme::Squares => 2,
        }
    }
}

/// One `σ_I Π_{i ∈ I} g_i` term of a pre-ordering membership.
#[derive(Debug, Clone, PartialEq)]
pub struct GramBlock {
    pub label: String,
    pub basis: Vec<MultiIndex>,
    /// `Π_{i ∈ I} g_i` in the Chebyshev basis.
    pub multiplier: Poly,
}

/// The Gram blocks of `T(g)_r` in `n` variables: one per subset `I` with
/// `deg Π g_I ≤ r`, over Chebyshev indices of degree `≤ ⌊(r − deg I)/2⌋`.
///
/// Subsets come in order of size, then lexicographically by generator index
/// (`1 − x_1, 1 + x_1, 1 − x_2, …` for [`PreorderingScheme::PlusMinus`]).
pub fn gram_blocks(n: usize, r: u32, scheme: PreorderingScheme) -> Vec<GramBlock> {
    let per_var = match scheme {
        PreorderingScheme::PlusMinus => 2,
        PreorderingScheme::Squares => 1,
    };
    let m = per_var * n;
    let gdeg = scheme.generator_degree();
    let mut subsets: Vec<Vec<usize>> = (0u64..(1u64 << m))
        .map(|mask| (0..m).filter(|&i| mask >> i & 1 == 1).collect::<Vec<_>>())
        .filter(|s| s.len() as u32 * gdeg <= r)
        .collect();
    subsets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));

    let one = Poly::constant(n, Basis::Chebyshev, 1.0);
    subsets
        .into_iter()
        .map(|subset| {
            let mut multiplier = one.clone();
            let mut label = String::new();
            for &g in &subset {
                let (factor, text) = match scheme {
                    PreorderingScheme::PlusMinus => {
                        let var = g / 2;
                        let gen = if g % 2 == 0 {
                            Generator::minus(var)
                        } else {
                            Generator::plus(var)
                        };
                        let sign = if gen.sign < 0 { '-' } else { '+' };
                        (
                            gen.poly(n, Basis::Chebyshev),
                            format!("(1{sign}x{})", var + 1),
                        )
                    }
                    PreorderingScheme::Squares => {
                        // 1 − x² = ½(1 − T_2)
                        let p = Poly::from_terms(
                            n,
                            Basis::Chebyshev,
                            [
                                (MultiIndex::zeros(n), 0.5),
                                (MultiIndex::unit(n, g, 2), -0.5),
                            ],
                        )
                        .expect("consistent dimension");
                        (p, format!("(1-x{}^2)", g + 1))
                    }
                };
                multiplier = multiplier.mul(&factor).expect("same basis");
                label.push_str(&text);
            }
            if label.is_empty() {
                label.push('1');
            }
            let k = (r - subset.len() as u32 * gdeg) / 2;
            GramBlock {
                label,
                basis: MultiIndex::up_to_degree(n, k).collect(),
                multiplier,
            }
        })
        .collect()
}

/// `T_a T_b = Π_i ½(T_{a_i + b_i} + T_{|a_i − b_i|})`.
fn cheb_product(a: &MultiIndex, b: &MultiIndex) -> Vec<(MultiIndex, f64)> {
    let mut out = vec![(Vec::with_capacity(a.len()), 1.0)];
    for (&ai, &bi) in a.as_slice().iter().zip(b.as_slice()) {
        if ai == 0 || bi == 0 {
            for (idx, _) in &mut out {
                idx.push(ai + bi);
            }
            continue;
        }
        let mut next = Vec::with_capacity(out.len() * 2);
        for (idx, c) in out {
            let mut hi = idx.clone();
            hi.push(ai + bi);
            let mut lo = idx;
            lo.push(ai.abs_diff(bi));
            next.push((hi, 0.5 * c));
            next.push((lo, 0.5 * c));
        }
        out = next;
    }
    out.into_iter()
        .map(|(i, c)| (MultiIndex::new(i), c))
        .collect()
}

/// Adds the blocks to `problem` and their coefficient contributions to `rows`.
fn add_gram_blocks(
    problem: &mut SdpProblem,
    blocks: &[GramBlock],
    rows: &mut BTreeMap<MultiIndex, Vec<Entry>>,
) -> Vec<usize> {
    let mut ids = Vec::with_capacity(blocks.len());
    for gb in blocks {
        let id = problem.add_block(gb.label.clone(), gb.basis.len());
        ids.push(id);
        for (i, a) in gb.basis.iter().enumerate() {
            for (j, b) in gb.basis.iter().enumerate().skip(i) {
                let mut acc: BTreeMap<MultiIndex, f64> = BTreeMap::new();
                for (ab, c) in cheb_product(a, b) {
                    for (g, cg) in gb.multiplier.iter() {
                        for (gamma, cc) in cheb_product(&ab, g) {
                            *acc.entry(gamma).or_insert(0.0) += c * cg * cc;
                        }
                    }
                }
                for (gamma, v) in acc {
                    if v.abs() > 1e-15 {
                        rows.entry(gamma).or_default().push(Entry::new(id, i, j, v));
                    }
                }
            }
        }
    }
    ids
}

/// `Σ_I Σ_{a,b} X_I[a,b] T_a T_b g_I` for a solved set of Gram blocks.
pub fn gram_expansion(n: usize, blocks: &[GramBlock], x: &[nalgebra::DMatrix<f64>]) -> Poly {
    let mut out = Poly::zero(n, Basis::Chebyshev);
    for (gb, xb) in blocks.iter().zip(x) {
        for (i, a) in gb.basis.iter().enumerate() {
            for (j, b) in gb.basis.iter().enumerate() {
                let w = xb[(i, j)];
                if w == 0.0 {
                    continue;
                }
                for (ab, c) in cheb_product(a, b) {
                    for (g, cg) in gb.multiplier.iter() {
                        for (gamma, cc) in cheb_product(&ab, g) {
                            out.add_term(gamma, w * c * cg * cc);
                        }
                    }
                }
            }
        }
    }
    out
}

fn require_optimal(report: &SolveReport) -> Result<()> {
    if report.is_optimal() {
        Ok(())
    } else {
        Err(SosError::Solver {
            status: report.status,
        })
    }
}

#[derive(Debug, Clone)]
pub struct LowerBound {
    /// The largest `λ` with `f − λ` in the truncated pre-ordering.
    pub value: f64,
    pub blocks: Vec<GramBlock>,
    pub report: SolveReport,
}

/// Tolerances used by [`lower_bound`], tight enough that bounds from
/// nested pre-orderings compare within 1e-7.
pub fn bound_solver_options() -> SolverOptions {
    SolverOptions {
        feasibility_tol: 1e-9,
        gap_tol: 1e-9,
        ..SolverOptions::default()
    }
}

pub fn lower_bound(f: &Poly, r: u32, scheme: PreorderingScheme) -> Result<LowerBound> {
    lower_bound_with(f, r, scheme, &bound_solver_options())
}

/// `sup λ` s.t. `f − λ ∈ T(g)_r`, with `λ` a free variable.
pub fn lower_bound_with(
    f: &Poly,
    r: u32,
    scheme: PreorderingScheme,
    options: &SolverOptions,
) -> Result<LowerBound> {
    let fc = f.to_basis(Basis::Chebyshev);
    if fc.degree() > r {
        return Err(SosError::DegreeViolation {
            degree: fc.degree(),
            cap: r,
        });
    }
    let n = f.nvars();
    let blocks = gram_blocks(n, r, scheme);
    let mut problem = SdpProblem::new();
    let mut rows = BTreeMap::new();
    add_gram_blocks(&mut problem, &blocks, &mut rows);
    for (gamma, _) in fc.iter() {
        if !rows.contains_key(gamma) && !gamma.is_zero() {
            return Err(SosError::Unrepresentable(gamma.clone()));
        }
    }
    // λ only enters the constant row, so λ = f_0 − ⟨A_0, G⟩ and maximizing
    // λ is minimizing ⟨A_0, G⟩ over the remaining rows
    let zero = MultiIndex::zeros(n);
    let f0 = fc.coeff(&zero);
    for (gamma, entries) in rows {
        if gamma == zero {
            problem.objective = entries;
            continue;
        }
        let mut con = Constraint::new(fc.coeff(&gamma));
        con.entries = entries;
        problem.add_constraint(con);
    }
    if problem.constraints.is_empty() {
        // f is constant and every block is 1×1 of degree 0
        return Err(SosError::InvalidArguments(
            "nothing to certify for a constant at degree 0".into(),
        ));
    }
    let report = sdp::solve(&problem, options)?;
    require_optimal(&report)?;
    Ok(LowerBound {
        value: f0 - report.primal_objective,
        blocks,
        report,
    })
}

#[derive(Debug, Clone)]
pub struct ThetaResult {
    pub n: usize,
    pub d: u32,
    pub r: u32,
    /// Optimal `t`, an upper bound on `Θ^r_{n,d}`.
    pub bound: f64,
    /// Recovered `p_α` for `|α| ≤ r`, graded order.
    pub kernel_coefficients: Vec<(MultiIndex, f64)>,
    pub report: SolveReport,
}

pub fn theta_upper_bound(n: usize, d: u32, r: u32) -> Result<ThetaResult> {
    theta_upper_bound_with(n, d, r, &SolverOptions::default())
}

/// `min t` s.t. `|1 − p_α| ≤ t` for `0 < |α| ≤ d` and
/// `1 + Σ_{0<|α|≤r} 2^{ω(α)} p_α T_α ∈ T(1 ± x)_r`.
///
/// The `p_α` are read off the Gram expansion rather than carried as
/// variables: `p_α = [T_α](Σ Gram) / 2^{ω(α)}`, so the rows with `|α| > d`
/// are unconstrained and dropped, and each `|α| ≤ d` gives two slack rows.
pub fn theta_upper_bound_with(
    n: usize,
    d: u32,
    r: u32,
    options: &SolverOptions,
) -> Result<ThetaResult> {
    if n == 0 || d == 0 || d > r {
        return Err(SosError::InvalidArguments(format!(
            "need n ≥ 1 and 1 ≤ d ≤ r, got n = {n}, d = {d}, r = {r}"
        )));
    }
    let blocks = gram_blocks(n, r, PreorderingScheme::PlusMinus);
    let mut problem = SdpProblem::new();
    let mut rows = BTreeMap::new();
    add_gram_blocks(&mut problem, &blocks, &mut rows);
    let t = problem.add_free(1.0);

    for (gamma, entries) in rows {
        let deg = gamma.degree();
        if gamma.is_zero() {
            let mut con = Constraint::new(1.0);
            con.entries = entries;
            problem.add_constraint(con);
            continue;
        }
        if deg > d {
            continue;
        }
        let w = 0.5f64.powi(gamma.support_count() as i32);
        let scaled: Vec<Entry> = entries
            .iter()
            .map(|e| Entry {
                value: w * e.value,
                ..*e
            })
            .collect();
        for sign in [1.0, -1.0] {
            let slack =
                problem.add_block(format!("s{}{gamma}", if sign > 0.0 { '+' } else { '-' }), 1);
            let mut con = Constraint::new(sign)
                .free_var(t, 1.0)
                .entry(slack, 0, 0, -1.0);
            con.entries.extend(scaled.iter().map(|e| Entry {
                value: sign * e.value,
                ..*e
            }));
            problem.add_constraint(con);
        }
    }
    let report = sdp::solve(&problem, options)?;
    require_optimal(&report)?;
    let q = gram_expansion(n, &blocks, &report.x[..blocks.len()]);
    let kernel_coefficients = MultiIndex::up_to_degree(n, r)
        .map(|a| {
            let w = 0.5f64.powi(a.support_count() as i32);
            let c = q.coeff(&a) * w;
            (a, c)
        })
        .collect();
    Ok(ThetaResult {
        n,
        d,
        r,
        bound: report.z[t],
        kernel_coefficients,
        report,
    })
}

#[derive(Debug, Clone)]
pub struct RhoResult {
    pub d: u32,
    pub rho: f64,
    /// `(λ_0, λ_1, …, λ_n)`.
    pub lambda_star: Vec<f64>,
    pub report: SolveReport,
}

/// Tolerances used by [`rho`]: the weights can be far smaller than the
/// default gap tolerance.
pub fn rho_solver_options() -> SolverOptions {
    SolverOptions {
        feasibility_tol: 1e-10,
        gap_tol: 1e-10,
        ..SolverOptions::default()
    }
}

pub fn rho(f: &Poly, d: u32) -> Result<RhoResult> {
    rho_with(f, d, &rho_solver_options())
}

/// `min Σ λ_i` s.t. `f + λ_0 + Σ λ_i x_i^{2d}` is a sum of squares of
/// degree-`d` polynomials, `λ ≥ 0`.
pub fn rho_with(f: &Poly, d: u32, options: &SolverOptions) -> Result<RhoResult> {
    if d == 0 {
        return Err(SosError::InvalidArguments("d must be at least 1".into()));
    }
    let fc = f.to_basis(Basis::Chebyshev);
    if fc.degree() > 2 * d {
        return Err(SosError::DegreeViolation {
            degree: fc.degree(),
            cap: 2 * d,
        });
    }
    let n = f.nvars();
    let blocks = vec![GramBlock {
        label: "sos".into(),
        basis: MultiIndex::up_to_degree(n, d).collect(),
        multiplier: Poly::constant(n, Basis::Chebyshev, 1.0),
    }];
    let mut problem = SdpProblem::new();
    let mut rows = BTreeMap::new();
    add_gram_blocks(&mut problem, &blocks, &mut rows);
    let lambda: Vec<usize> = (0..=n)
        .map(|i| {
            let b = problem.add_block(format!("lambda{i}"), 1);
            problem.add_objective_entry(b, 0, 0, 1.0);
            b
        })
        .collect();
    rows.entry(MultiIndex::zeros(n))
        .or_default()
        .push(Entry::new(lambda[0], 0, 0, -1.0));
    let power = power_in_chebyshev(2 * d);
    for i in 0..n {
        for &(k, c) in &power {
            rows.entry(MultiIndex::unit(n, i, k))
                .or_default()
                .push(Entry::new(lambda[i + 1], 0, 0, -c));
        }
    }
    for (gamma, entries) in rows {
        let mut con = Constraint::new(fc.coeff(&gamma));
        con.entries = entries;
        problem.add_constraint(con);
    }
    let report = sdp::solve(&problem, options)?;
    require_optimal(&report)?;
    let lambda_star: Vec<f64> = lambda.iter().map(|&b| report.x[b][(0, 0)]).collect();
    Ok(RhoResult {
        d,
        rho: lambda_star.iter().sum(),
        lambda_star,
        report,
    })
}

/// `−ρ_d`, a lower bound on `min_{[-1,1]^n} f`.
pub fn corollary_lower_bound(f: &Poly, d: u32) -> Result<f64> {
    Ok(-rho(f, d)?.rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_expression;

    #[test]
    fn block_counts() {
        assert_eq!(gram_blocks(2, 4, PreorderingScheme::PlusMinus).len(), 16);
        assert_eq!(gram_blocks(2, 3, PreorderingScheme::PlusMinus).len(), 15);
        assert_eq!(gram_blocks(3, 6, PreorderingScheme::Squares).len(), 8);
        assert_eq!(gram_blocks(3, 3, PreorderingScheme::Squares).len(), 4);
        let b = gram_blocks(1, 2, PreorderingScheme::PlusMinus);
        let labels: Vec<&str> = b.iter().map(|g| g.label.as_str()).collect();
        assert_eq!(labels, ["1", "(1-x1)", "(1+x1)", "(1-x1)(1+x1)"]);
        assert_eq!(b[0].basis.len(), 2);
        assert_eq!(b[3].basis.len(), 1);
    }

    #[test]
    fn cheb_product_rule() {
        let p = cheb_product(&MultiIndex::new(vec![2, 0]), &MultiIndex::new(vec![1, 3]));
        assert_eq!(
            p,
            vec![
                (MultiIndex::new(vec![3, 3]), 0.5),
                (MultiIndex::new(vec![1, 3]), 0.5)
            ]
        );
    }

    #[test]
    fn linear_lower_bound() {
        let f = parse_expression("x", None).unwrap();
        let lb = lower_bound(&f, 1, PreorderingScheme::PlusMinus).unwrap();
        assert!((lb.value + 1.0).abs() < 1e-6, "{}", lb.value);
        assert!(matches!(
            lower_bound(&f, 0, PreorderingScheme::PlusMinus),
            Err(SosError::DegreeViolation { .. })
        ));
    }

    #[test]
    fn quadratic_lower_bound() {
        let f = parse_expression("1 - x^2", None).unwrap();
        let lb = lower_bound(&f, 2, PreorderingScheme::PlusMinus).unwrap();
        assert!(lb.value.abs() < 1e-6, "{}", lb.value);
        let lb = lower_bound(&f, 2, PreorderingScheme::Squares).unwrap();
        assert!(lb.value.abs() < 1e-6, "{}", lb.value);
    }

    #[test]
    fn theta_smallest() {
        let t = theta_upper_bound(1, 1, 1).unwrap();
        assert!((t.bound - 0.5).abs() < 1e-6, "{}", t.bound);
        assert!(theta_upper_bound(1, 2, 1).is_err());
    }

    #[test]
    fn rho_trivial() {
        let f = parse_expression("x1^2", None).unwrap();
        assert!(rho(&f, 1).unwrap().rho.abs() < 1e-7);
        let f = parse_expression("-x1^2", None).unwrap();
        let r = rho(&f, 1).unwrap();
        assert!((r.rho - 1.0).abs() < 1e-6);
        assert!(r.lambda_star[0].abs() < 1e-6);
        assert!((r.lambda_star[1] - 1.0).abs() < 1e-6);
    }
}
