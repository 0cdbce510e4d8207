//! Sparse multivariate polynomials over the monomial and Chebyshev bases.
//!
//! A [`Poly`] is a map from [`MultiIndex`] to `f64` tagged with the basis the
//! coefficients refer to. Terms whose magnitude falls below [`DEDUPE_EPS`] are
//! dropped after every arithmetic operation, so two equal polynomials always
//! have identical term maps and iterate in the same lexicographic order.

mod format;
mod multi_index;

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

pub use format::{parse_expression, PolyJson, TermJson};
pub use multi_index::{MultiIndex, MultiIndexIter};

/// Coefficients with absolute value below this are removed from term maps.
pub const DEDUPE_EPS: f64 = 1e-13;

/// Errors raised by polynomial arithmetic and I/O.
#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("basis mismatch: expected {expected}, found {found}")]
    BasisMismatch { expected: Basis, found: Basis },
    #[error("dimension mismatch: {left} vs {right} variables")]
    DimensionMismatch { left: usize, right: usize },
    #[error("variable group mismatch: {left:?} vs {right:?}")]
    GroupMismatch { left: String, right: String },
    #[error("point has {found} coordinates, polynomial has {expected} variables")]
    PointLength { expected: usize, found: usize },
    #[error("multi-index of length {found} in a {expected}-variate polynomial")]
    IndexLength { expected: usize, found: usize },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, PolyError>;

/// Which family of basis polynomials the coefficients multiply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Basis {
    /// `x^α`
    Monomial,
    /// `T_α(x) = Π T_{α_i}(x_i)`
    Chebyshev,
    /// `T̂_α = √2^{ω(α)} T_α`, orthonormal for the product Chebyshev measure.
    NormalizedChebyshev,
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Basis::Monomial => "monomial",
            Basis::Chebyshev => "chebyshev",
            Basis::NormalizedChebyshev => "normalized_chebyshev",
        };
        f.write_str(s)
    }
}

/// A sparse polynomial in `nvars` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    nvars: usize,
    basis: Basis,
    group: String,
    terms: BTreeMap<MultiIndex, f64>,
}

impl Poly {
    pub fn zero(nvars: usize, basis: Basis) -> Self {
        Poly {
            nvars,
            basis,
            group: "x".to_string(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, basis: Basis, c: f64) -> Self {
        let mut p = Poly::zero(nvars, basis);
        p.add_term(MultiIndex::zeros(nvars), c);
        p
    }

    /// The single basis element `c·B_α`.
    pub fn term(basis: Basis, alpha: MultiIndex, c: f64) -> Self {
        let mut p = Poly::zero(alpha.len(), basis);
        p.add_term(alpha, c);
        p
    }

    /// The variable `x_i` (which is `T_1(x_i)` in either first-kind basis).
    pub fn variable(nvars: usize, basis: Basis, i: usize) -> Self {
        let c = if basis == Basis::NormalizedChebyshev {
            std::f64::consts::FRAC_1_SQRT_2
        } else {
            1.0
        };
        Poly::term(basis, MultiIndex::unit(nvars, i, 1), c)
    }

    /// Builds a polynomial from `(α, c)` pairs, summing duplicates.
    pub fn from_terms<I>(nvars: usize, basis: Basis, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, f64)>,
    {
        let mut p = Poly::zero(nvars, basis);
        for (alpha, c) in terms {
            if alpha.len() != nvars {
                return Err(PolyError::IndexLength {
                    expected: nvars,
                    found: alpha.len(),
                });
            }
            p.add_term(alpha, c);
        }
        Ok(p)
    }

    pub fn with_group(mut self, group: impl Into<String>) -> Self {
        self.group = group.into();
        self
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn group(&self) -> &str {
        &self.group
    }

    pub fn terms(&self) -> &BTreeMap<MultiIndex, f64> {
        &self.terms
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.terms.iter().map(|(a, &c)| (a, c))
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of the basis element `B_α` (zero when absent).
    pub fn coeff(&self, alpha: &MultiIndex) -> f64 {
        self.terms.get(alpha).copied().unwrap_or(0.0)
    }

    /// Total degree, `max |α|` over stored terms; zero for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(MultiIndex::degree).max().unwrap_or(0)
    }

    /// Degree when only the variables in `vars` are counted.
    pub fn degree_in(&self, vars: &[usize]) -> u32 {
        self.terms
            .keys()
            .map(|a| a.degree_in(vars))
            .max()
            .unwrap_or(0)
    }

    /// Total degree restricted to the variable range `vars`.
    pub fn degree_in_range(&self, vars: std::ops::Range<usize>) -> u32 {
        self.terms
            .keys()
            .map(|a| vars.clone().map(|i| a[i]).sum())
            .max()
            .unwrap_or(0)
    }

    /// Adds `c` to the coefficient of `α`, keeping the map canonical.
    pub fn add_term(&mut self, alpha: MultiIndex, c: f64) {
        debug_assert_eq!(alpha.len(), self.nvars);
        match self.terms.entry(alpha) {
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().abs() < DEDUPE_EPS {
                    e.remove();
                }
            }
            Entry::Vacant(e) => {
                if c.abs() >= DEDUPE_EPS {
                    e.insert(c);
                }
            }
        }
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| c.abs() >= DEDUPE_EPS);
    }

    fn check_compatible(&self, other: &Poly) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(PolyError::DimensionMismatch {
                left: self.nvars,
                right: other.nvars,
            });
        }
        if self.basis != other.basis {
            return Err(PolyError::BasisMismatch {
                expected: self.basis,
                found: other.basis,
            });
        }
        if self.group != other.group {
            return Err(PolyError::GroupMismatch {
                left: self.group.clone(),
                right: other.group.clone(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Poly) -> Result<Poly> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (a, &c) in &other.terms {
            *out.terms.entry(a.clone()).or_insert(0.0) += c;
        }
        out.prune();
        Ok(out)
    }

    pub fn sub(&self, other: &Poly) -> Result<Poly> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Poly {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c *= s;
        }
        out.prune();
        out
    }

    /// `self + c`, with `c` interpreted as a constant function.
    pub fn add_constant(&self, c: f64) -> Poly {
        let mut out = self.clone();
        out.add_term(MultiIndex::zeros(self.nvars), c);
        out
    }

    /// Product in the common basis of both operands.
    pub fn mul(&self, other: &Poly) -> Result<Poly> {
        self.check_compatible(other)?;
        match self.basis {
            Basis::Monomial => Ok(self.mono_mul_unchecked(other)),
            Basis::Chebyshev => Ok(self.cheb_mul_unchecked(other)),
            Basis::NormalizedChebyshev => {
                let a = self.to_basis(Basis::Chebyshev);
                let b = other.to_basis(Basis::Chebyshev);
                Ok(a.cheb_mul_unchecked(&b)
                    .to_basis(Basis::NormalizedChebyshev))
            }
        }
    }

    /// Product of two Chebyshev-basis polynomials through the linearization
    /// `T_j T_k = (T_{j+k} + T_{|j-k|}) / 2` applied in every variable.
    pub fn cheb_mul(&self, other: &Poly) -> Result<Poly> {
        if self.basis != Basis::Chebyshev {
            return Err(PolyError::BasisMismatch {
                expected: Basis::Chebyshev,
                found: self.basis,
            });
        }
        self.check_compatible(other)?;
        Ok(self.cheb_mul_unchecked(other))
    }

    fn mono_mul_unchecked(&self, other: &Poly) -> Poly {
        let mut acc: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        for (a, &ca) in &self.terms {
            for (b, &cb) in &other.terms {
                *acc.entry(a.add(b)).or_insert(0.0) += ca * cb;
            }
        }
        let mut out = Poly {
            nvars: self.nvars,
            basis: self.basis,
            group: self.group.clone(),
            terms: acc,
        };
        out.prune();
        out
    }

    fn cheb_mul_unchecked(&self, other: &Poly) -> Poly {
        let n = self.nvars;
        let mut acc: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        let mut scratch: Vec<(Vec<u32>, f64)> = Vec::new();
        for (a, &ca) in &self.terms {
            for (b, &cb) in &other.terms {
                scratch.clear();
                scratch.push((Vec::with_capacity(n), ca * cb));
                for i in 0..n {
                    let (j, k) = (a[i], b[i]);
                    if j == 0 || k == 0 {
                        for (idx, _) in scratch.iter_mut() {
                            idx.push(j + k);
                        }
                    } else {
                        let len = scratch.len();
                        for t in 0..len {
                            let (mut idx, c) = scratch[t].clone();
                            let half = 0.5 * c;
                            scratch[t].0.push(j + k);
                            scratch[t].1 = half;
                            idx.push(j.abs_diff(k));
                            scratch.push((idx, half));
                        }
                    }
                }
                for (idx, c) in scratch.drain(..) {
                    *acc.entry(MultiIndex::new(idx)).or_insert(0.0) += c;
                }
            }
        }
        let mut out = Poly {
            nvars: n,
            basis: Basis::Chebyshev,
            group: self.group.clone(),
            terms: acc,
        };
        out.prune();
        out
    }

    /// `self^k` in the polynomial's own basis.
    pub fn pow(&self, k: u32) -> Poly {
        let mut out = Poly::constant(self.nvars, self.basis, 1.0).with_group(self.group.clone());
        if self.basis == Basis::NormalizedChebyshev {
            out = out.to_basis(Basis::NormalizedChebyshev);
        }
        for _ in 0..k {
            out = out.mul(self).expect("same shape");
        }
        out
    }

    /// Re-expresses the polynomial in `target`; the function is unchanged.
    pub fn to_basis(&self, target: Basis) -> Poly {
        if self.basis == target {
            return self.clone();
        }
        let cheb = match self.basis {
            Basis::Chebyshev => self.clone(),
            Basis::Monomial => self.monomial_to_chebyshev_unchecked(),
            Basis::NormalizedChebyshev => self.rescale_normalized(false),
        };
        match target {
            Basis::Chebyshev => cheb,
            Basis::Monomial => cheb.chebyshev_to_monomial_unchecked(),
            Basis::NormalizedChebyshev => cheb.rescale_normalized(true),
        }
    }

    /// Monomial → Chebyshev conversion through the univariate expansion of
    /// `x^k` into `T_j`, applied independently per variable.
    pub fn monomial_to_chebyshev(&self) -> Result<Poly> {
        if self.basis != Basis::Monomial {
            return Err(PolyError::BasisMismatch {
                expected: Basis::Monomial,
                found: self.basis,
            });
        }
        Ok(self.monomial_to_chebyshev_unchecked())
    }

    /// Chebyshev → monomial conversion via `T_{k+1} = 2t T_k − T_{k−1}`.
    pub fn chebyshev_to_monomial(&self) -> Result<Poly> {
        if self.basis != Basis::Chebyshev {
            return Err(PolyError::BasisMismatch {
                expected: Basis::Chebyshev,
                found: self.basis,
            });
        }
        Ok(self.chebyshev_to_monomial_unchecked())
    }

    fn monomial_to_chebyshev_unchecked(&self) -> Poly {
        let max_deg = self.max_var_degree();
        let table: Vec<Vec<(u32, f64)>> = (0..=max_deg).map(power_in_chebyshev).collect();
        self.tensor_convert(&table, Basis::Chebyshev)
    }

    fn chebyshev_to_monomial_unchecked(&self) -> Poly {
        let max_deg = self.max_var_degree();
        let table: Vec<Vec<(u32, f64)>> = (0..=max_deg)
            .map(|k| {
                chebyshev_t_monomial(k)
                    .into_iter()
                    .enumerate()
                    .filter(|(_, c)| *c != 0.0)
                    .map(|(j, c)| (j as u32, c))
                    .collect()
            })
            .collect();
        self.tensor_convert(&table, Basis::Monomial)
    }

    fn max_var_degree(&self) -> u32 {
        self.terms
            .keys()
            .flat_map(|a| a.as_slice().iter().copied())
            .max()
            .unwrap_or(0)
    }

    /// Applies a univariate change of basis `B_k = Σ_j table[k][j]·B'_j` to
    /// every variable of every term.
    fn tensor_convert(&self, table: &[Vec<(u32, f64)>], target: Basis) -> Poly {
        let mut acc: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        for (alpha, &c) in &self.terms {
            let mut partial: Vec<(Vec<u32>, f64)> = vec![(Vec::with_capacity(self.nvars), c)];
            for &k in alpha.as_slice() {
                let expansion = &table[k as usize];
                let mut next = Vec::with_capacity(partial.len() * expansion.len());
                for (idx, pc) in &partial {
                    for &(j, ec) in expansion {
                        let mut idx = idx.clone();
                        idx.push(j);
                        next.push((idx, pc * ec));
                    }
                }
                partial = next;
            }
            for (idx, pc) in partial {
                *acc.entry(MultiIndex::new(idx)).or_insert(0.0) += pc;
            }
        }
        let mut out = Poly {
            nvars: self.nvars,
            basis: target,
            group: self.group.clone(),
            terms: acc,
        };
        out.prune();
        out
    }

    /// Chebyshev ↔ normalized Chebyshev: `c_T̂ = c_T / √2^ω`.
    fn rescale_normalized(&self, to_normalized: bool) -> Poly {
        let mut out = self.clone();
        for (a, c) in out.terms.iter_mut() {
            let f = 2f64.powf(0.5 * a.support_count() as f64);
            if to_normalized {
                *c /= f;
            } else {
                *c *= f;
            }
        }
        out.basis = if to_normalized {
            Basis::NormalizedChebyshev
        } else {
            Basis::Chebyshev
        };
        out.prune();
        out
    }

    /// Value at `point`. Chebyshev factors come from the three-term recurrence.
    pub fn evaluate(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.nvars {
            return Err(PolyError::PointLength {
                expected: self.nvars,
                found: point.len(),
            });
        }
        let max_deg = self.max_var_degree() as usize;
        let tables: Vec<Vec<f64>> = point
            .iter()
            .map(|&x| match self.basis {
                Basis::Monomial => {
                    let mut v = Vec::with_capacity(max_deg + 1);
                    let mut acc = 1.0;
                    for _ in 0..=max_deg {
                        v.push(acc);
                        acc *= x;
                    }
                    v
                }
                Basis::Chebyshev | Basis::NormalizedChebyshev => chebyshev_values(x, max_deg),
            })
            .collect();
        let mut total = 0.0;
        for (alpha, &c) in &self.terms {
            let mut v = c;
            for (i, &k) in alpha.as_slice().iter().enumerate() {
                v *= tables[i][k as usize];
            }
            if self.basis == Basis::NormalizedChebyshev {
                v *= 2f64.powf(0.5 * alpha.support_count() as f64);
            }
            total += v;
        }
        Ok(total)
    }

    /// `Σ|c_α|` with coefficients taken in `basis` (converting first if needed).
    pub fn coeff_one_norm(&self, basis: Basis) -> f64 {
        self.to_basis(basis).terms.values().map(|c| c.abs()).sum()
    }

    /// Maximum absolute coefficient difference, both sides in Chebyshev basis.
    pub fn max_abs_diff(&self, other: &Poly) -> Result<f64> {
        if self.nvars != other.nvars {
            return Err(PolyError::DimensionMismatch {
                left: self.nvars,
                right: other.nvars,
            });
        }
        let a = self.to_basis(Basis::Chebyshev);
        let b = other.to_basis(Basis::Chebyshev);
        let mut worst: f64 = 0.0;
        for (k, &c) in &a.terms {
            worst = worst.max((c - b.coeff(k)).abs());
        }
        for (k, &c) in &b.terms {
            if !a.terms.contains_key(k) {
                worst = worst.max(c.abs());
            }
        }
        Ok(worst)
    }

    /// Embeds into `total` variables, sending variable `i` to `positions[i]`.
    pub fn embed(&self, total: usize, positions: &[usize]) -> Poly {
        assert_eq!(positions.len(), self.nvars, "one position per variable");
        let mut out = Poly::zero(total, self.basis).with_group(self.group.clone());
        for (a, &c) in &self.terms {
            let mut idx = vec![0u32; total];
            for (i, &p) in positions.iter().enumerate() {
                idx[p] = a[i];
            }
            out.terms.insert(MultiIndex::new(idx), c);
        }
        out
    }

    /// Keeps the listed variables, which must carry every nonzero exponent.
    pub fn project(&self, keep: &[usize]) -> Option<Poly> {
        let mut out = Poly::zero(keep.len(), self.basis).with_group(self.group.clone());
        for (a, &c) in &self.terms {
            let dropped: u32 = (0..self.nvars)
                .filter(|i| !keep.contains(i))
                .map(|i| a[i])
                .sum();
            if dropped != 0 {
                return None;
            }
            let idx: Vec<u32> = keep.iter().map(|&i| a[i]).collect();
            out.add_term(MultiIndex::new(idx), c);
        }
        Some(out)
    }

    /// Fixes the variables in `assign` to constants and removes them.
    pub fn substitute(&self, assign: &[(usize, f64)]) -> Poly {
        let keep: Vec<usize> = (0..self.nvars)
            .filter(|i| !assign.iter().any(|(j, _)| j == i))
            .collect();
        let mut out = Poly::zero(keep.len(), self.basis).with_group(self.group.clone());
        for (a, &c) in &self.terms {
            let mut v = c;
            for &(j, x) in assign {
                let k = a[j] as usize;
                v *= match self.basis {
                    Basis::Monomial => x.powi(k as i32),
                    Basis::Chebyshev => chebyshev_values(x, k)[k],
                    Basis::NormalizedChebyshev => {
                        let s = if k > 0 { std::f64::consts::SQRT_2 } else { 1.0 };
                        s * chebyshev_values(x, k)[k]
                    }
                };
            }
            let idx: Vec<u32> = keep.iter().map(|&i| a[i]).collect();
            out.add_term(MultiIndex::new(idx), v);
        }
        out
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let sym = match self.basis {
            Basis::Monomial => None,
            Basis::Chebyshev => Some("T"),
            Basis::NormalizedChebyshev => Some("That"),
        };
        for (n, (a, &c)) in self.terms.iter().enumerate() {
            let sign = if c < 0.0 { "-" } else { "+" };
            if n == 0 {
                if c < 0.0 {
                    f.write_str("-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            write!(f, "{}", c.abs())?;
            match sym {
                Some(s) if !a.is_zero() => write!(f, "*{s}{a}")?,
                Some(_) => {}
                None => {
                    for (i, &k) in a.as_slice().iter().enumerate() {
                        match k {
                            0 => {}
                            1 => write!(f, "*{}{}", self.group_prefix(), i + 1)?,
                            _ => write!(f, "*{}{}^{}", self.group_prefix(), i + 1, k)?,
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

impl Poly {
    fn group_prefix(&self) -> &str {
        self.group.get(..1).unwrap_or("x")
    }
}

/// `T_0(x), …, T_max(x)` by the three-term recurrence.
pub fn chebyshev_values(x: f64, max: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(max + 1);
    v.push(1.0);
    if max >= 1 {
        v.push(x);
    }
    for k in 2..=max {
        let next = 2.0 * x * v[k - 1] - v[k - 2];
        v.push(next);
    }
    v
}

/// Monomial coefficients of `T_k`, lowest power first.
pub fn chebyshev_t_monomial(k: u32) -> Vec<f64> {
    let k = k as usize;
    let mut prev = vec![1.0];
    if k == 0 {
        return prev;
    }
    let mut cur = vec![0.0, 1.0];
    for _ in 1..k {
        let mut next = vec![0.0; cur.len() + 1];
        for (j, &c) in cur.iter().enumerate() {
            next[j + 1] += 2.0 * c;
        }
        for (j, &c) in prev.iter().enumerate() {
            next[j] -= c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// Chebyshev expansion of `x^k`:
/// `x^k = 2^{1-k} Σ'_{j ≡ k (mod 2)} C(k, (k-j)/2) T_j`, the `j = 0` term halved.
pub fn power_in_chebyshev(k: u32) -> Vec<(u32, f64)> {
    if k == 0 {
        return vec![(0, 1.0)];
    }
    let scale = 2f64.powi(1 - k as i32);
    let mut out = Vec::new();
    let mut j = k % 2;
    while j <= k {
        let mut c = scale * binomial(k, (k - j) / 2);
        if j == 0 {
            c *= 0.5;
        }
        out.push((j, c));
        j += 2;
    }
    out
}

pub(crate) fn binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * f64::from(n - i) / f64::from(i + 1);
    }
    acc.round()
}
