//! Jackson kernel coefficients and the coefficientwise smoothing operator.
//!
//! The univariate Jackson kernel of degree `r` is
//! `K_r(x, y) = 1 + Σ_{k=1}^r λ_k^r T̂_k(x) T̂_k(y)` with
//!
//! ```text
//! λ_k^r = ((r+2-k) cos(kθ) + sin(kθ) cot(θ)) / (r+2),   θ = π/(r+2).
//! ```
//!
//! Multivariate kernels are products of univariate ones, so `λ_α = Π λ_{α_i}`.
//! Convolving a polynomial `f = Σ f_α T_α` with such a kernel multiplies each
//! Chebyshev coefficient by `λ_α`.

use std::f64::consts::PI;

use crate::poly::{Basis, MultiIndex, Poly};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum JacksonError {
    #[error("Jackson coefficient index k = {k} outside 0..={r}")]
    IndexOutOfRange { k: i64, r: u32 },
    #[error("kernel degree r must be at least 1")]
    ZeroDegree,
    #[error("term {alpha} lies outside the kernel support")]
    OutsideSupport { alpha: MultiIndex },
    #[error("kernel has {kernel} variables, polynomial has {poly}")]
    DimensionMismatch { kernel: usize, poly: usize },
}

/// `λ_k^r` for `0 ≤ k ≤ r`.
pub fn jackson_coefficient(k: i64, r: u32) -> Result<f64, JacksonError> {
    if r == 0 {
        return Err(JacksonError::ZeroDegree);
    }
    if k < 0 || k > i64::from(r) {
        return Err(JacksonError::IndexOutOfRange { k, r });
    }
    Ok(jackson_unchecked(k as u32, r))
}

fn jackson_unchecked(k: u32, r: u32) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let r2 = f64::from(r + 2);
    let theta = PI / r2;
    let kf = f64::from(k);
    ((r2 - kf) * (kf * theta).cos() + (kf * theta).sin() / theta.sin() * theta.cos()) / r2
}

/// Coefficients `λ_α` of a product kernel in `nvars` variables.
///
/// Only the univariate table `λ_0^r, …, λ_r^r` is stored; `λ_α` is formed on
/// demand. Multi-indices with `|α| > degree_cap` or any `α_i > r` are outside
/// the stored support.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelCoefficients {
    nvars: usize,
    per_variable_degree: u32,
    degree_cap: u32,
    univariate: Vec<f64>,
}

impl KernelCoefficients {
    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Per-variable degree `r` of the univariate factors.
    pub fn per_variable_degree(&self) -> u32 {
        self.per_variable_degree
    }

    /// Largest total degree `|α|` for which `λ_α` is available.
    pub fn degree_cap(&self) -> u32 {
        self.degree_cap
    }

    pub fn in_support(&self, alpha: &MultiIndex) -> bool {
        alpha.len() == self.nvars
            && alpha.degree() <= self.degree_cap
            && alpha
                .as_slice()
                .iter()
                .all(|&a| a <= self.per_variable_degree)
    }

    /// `λ_α`, or `None` outside the support.
    pub fn lambda(&self, alpha: &MultiIndex) -> Option<f64> {
        if !self.in_support(alpha) {
            return None;
        }
        Some(
            alpha
                .as_slice()
                .iter()
                .map(|&a| self.univariate[a as usize])
                .product(),
        )
    }

    /// Every `(α, λ_α)` in the support, graded order.
    pub fn iter(&self) -> impl Iterator<Item = (MultiIndex, f64)> + '_ {
        MultiIndex::up_to_degree(self.nvars, self.degree_cap).filter_map(move |a| {
            let l = self.lambda(&a)?;
            Some((a, l))
        })
    }

    /// `max |1 − λ_α|` over `0 < |α| ≤ d`, with `λ_α = 0` whenever some
    /// `α_i > r` (the kernel has no such term).
    pub fn max_deviation(&self, d: u32) -> f64 {
        MultiIndex::up_to_degree(self.nvars, d)
            .map(|a| {
                if a.as_slice().iter().any(|&ai| ai > self.per_variable_degree) {
                    return 1.0;
                }
                let l: f64 = a
                    .as_slice()
                    .iter()
                    .map(|&ai| self.univariate[ai as usize])
                    .product();
                (1.0 - l).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Product of `n` univariate Jackson kernels of degree `r`, storing
/// coefficients up to total degree `degree_cap`.
pub fn product_kernel(
    n: usize,
    r: u32,
    degree_cap: u32,
) -> Result<KernelCoefficients, JacksonError> {
    if r == 0 {
        return Err(JacksonError::ZeroDegree);
    }
    Ok(KernelCoefficients {
        nvars: n,
        per_variable_degree: r,
        degree_cap,
        univariate: (0..=r).map(|k| jackson_unchecked(k, r)).collect(),
    })
}

/// Applies the convolution operator: `Σ f_α T_α ↦ Σ λ_α f_α T_α`.
///
/// Monomial input is converted to the Chebyshev basis first; the result is
/// always in the Chebyshev basis.
pub fn smooth(f: &Poly, kernel: &KernelCoefficients) -> Result<Poly, JacksonError> {
    if f.nvars() != kernel.nvars {
        return Err(JacksonError::DimensionMismatch {
            kernel: kernel.nvars,
            poly: f.nvars(),
        });
    }
    let cheb = f.to_basis(Basis::Chebyshev);
    let mut out = Poly::zero(f.nvars(), Basis::Chebyshev).with_group(f.group());
    for (alpha, c) in cheb.iter() {
        let l = kernel
            .lambda(alpha)
            .ok_or_else(|| JacksonError::OutsideSupport {
                alpha: alpha.clone(),
            })?;
        out.add_term(alpha.clone(), l * c);
    }
    Ok(out)
}

/// Outcome of the a-priori error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GapBound {
    /// `f_min − f̂_(rn) ≤ value`.
    Certified(f64),
    /// `π d ≥ r + 2`; the estimate says nothing.
    Vacuous,
}

impl GapBound {
    pub fn value(self) -> Option<f64> {
        match self {
            GapBound::Certified(v) => Some(v),
            GapBound::Vacuous => None,
        }
    }
}

/// `π² d² / (r+2)² · ‖f‖₁,T`, valid for the degree-`n·r` bound when `π d < r + 2`.
///
/// `n` does not enter the value; it is accepted so call sites read like the
/// bound they certify (`f̂_(n·r)`).
pub fn apriori_gap_bound(_n: usize, d: u32, r: u32, norm_one_t: f64) -> GapBound {
    let r2 = f64::from(r) + 2.0;
    let d = f64::from(d);
    if norm_one_t == 0.0 {
        return GapBound::Certified(0.0);
    }
    if PI * d >= r2 {
        return GapBound::Vacuous;
    }
    GapBound::Certified(PI * PI * d * d / (r2 * r2) * norm_one_t)
}

/// `K_r^{ja}(x, y)` evaluated directly from its Chebyshev expansion.
pub fn univariate_kernel_value(r: u32, x: f64, y: f64) -> f64 {
    let tx = crate::poly::chebyshev_values(x, r as usize);
    let ty = crate::poly::chebyshev_values(y, r as usize);
    1.0 + (1..=r)
        .map(|k| 2.0 * jackson_unchecked(k, r) * tx[k as usize] * ty[k as usize])
        .sum::<f64>()
}
