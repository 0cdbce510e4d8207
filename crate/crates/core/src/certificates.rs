//! Explicit memberships in the truncated pre-ordering `T(1 ± x_1, …, 1 ± x_n)_r`.
//!
//! A [`Certificate`] records `target = Σ_I (Σ_j w_j q_j²) Π_{g ∈ I} g` with
//! generators `g = 1 ± x_i`. Squared polynomials are kept in the monomial
//! basis; [`Certificate::verify`] expands every summand in the Chebyshev basis
//! and reports the largest coefficient deviation from the target.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::poly::{Basis, MultiIndex, Poly, PolyError, PolyJson};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum CertificateError {
    #[error("1 ± T_α needs α ≠ 0")]
    ZeroIndex,
    #[error("degree {needed} exceeds the certificate cap {cap}")]
    DegreeViolation { needed: u32, cap: u32 },
    #[error("input certificate does not verify (residual {residual:.3e})")]
    InvalidInput { residual: f64 },
    #[error("negative SOS weight {0}")]
    NegativeWeight(f64),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("malformed certificate: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, CertificateError>;

/// The generator `1 + sign·x_var`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Generator {
    #[serde(rename = "i")]
    pub var: usize,
    pub sign: i8,
}

impl Generator {
    pub fn plus(var: usize) -> Self {
        Generator { var, sign: 1 }
    }

    pub fn minus(var: usize) -> Self {
        Generator { var, sign: -1 }
    }

    pub fn poly(&self, nvars: usize, basis: Basis) -> Poly {
        Poly::variable(nvars, basis, self.var)
            .scale(f64::from(self.sign))
            .add_constant(1.0)
    }
}

/// One weighted square `w·q²`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSquare {
    pub weight: f64,
    pub q: Poly,
}

/// `(Σ w_j q_j²) · Π_{g ∈ generators} g`.
#[derive(Debug, Clone, PartialEq)]
pub struct Summand {
    generators: Vec<Generator>,
    pub sos: Vec<WeightedSquare>,
}

impl Summand {
    /// Generators are stored sorted and deduplicated.
    pub fn new(mut generators: Vec<Generator>, sos: Vec<WeightedSquare>) -> Self {
        generators.sort();
        generators.dedup();
        Summand { generators, sos }
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    /// Expansion in the Chebyshev basis.
    pub fn expand(&self, nvars: usize, group: &str) -> Poly {
        let mut sigma = Poly::zero(nvars, Basis::Chebyshev).with_group(group);
        for ws in &self.sos {
            let q = ws.q.to_basis(Basis::Chebyshev).with_group(group);
            let sq = q.cheb_mul(&q).expect("same shape");
            sigma = sigma.add(&sq.scale(ws.weight)).expect("same shape");
        }
        for g in &self.generators {
            let gp = g.poly(nvars, Basis::Chebyshev).with_group(group);
            sigma = sigma.cheb_mul(&gp).expect("same shape");
        }
        sigma
    }

    /// `|I ∩ vars| + 2·max deg_vars(q)`.
    pub fn degree_in(&self, vars: &Range<usize>) -> u32 {
        let gens = self
            .generators
            .iter()
            .filter(|g| vars.contains(&g.var))
            .count() as u32;
        let sq = self
            .sos
            .iter()
            .map(|ws| ws.q.degree_in_range(vars.clone()))
            .max()
            .unwrap_or(0);
        gens + 2 * sq
    }
}

/// A degree budget on a contiguous block of variables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeGroup {
    pub vars: Range<usize>,
    pub cap: u32,
}

/// `target ∈ T(1 ± x)_caps`, witnessed by its summands.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    target: Poly,
    summands: Vec<Summand>,
    groups: Vec<DegreeGroup>,
}

impl Certificate {
    /// Certificate with one total-degree cap over all variables.
    pub fn new(target: Poly, summands: Vec<Summand>, cap: u32) -> Self {
        let n = target.nvars();
        Certificate {
            target,
            summands,
            groups: vec![DegreeGroup { vars: 0..n, cap }],
        }
    }

    /// Certificate with separate caps per variable block.
    pub fn with_groups(target: Poly, summands: Vec<Summand>, groups: Vec<DegreeGroup>) -> Self {
        Certificate {
            target,
            summands,
            groups,
        }
    }

    /// The empty certificate for the zero polynomial.
    pub fn empty(nvars: usize, cap: u32) -> Self {
        Certificate::new(Poly::zero(nvars, Basis::Chebyshev), Vec::new(), cap)
    }

    pub fn target(&self) -> &Poly {
        &self.target
    }

    pub fn summands(&self) -> &[Summand] {
        &self.summands
    }

    pub fn groups(&self) -> &[DegreeGroup] {
        &self.groups
    }

    pub fn nvars(&self) -> usize {
        self.target.nvars()
    }

    /// The cap of the first (for single-group certificates, the only) group.
    pub fn degree_cap(&self) -> u32 {
        self.groups.first().map(|g| g.cap).unwrap_or(0)
    }

    /// Largest bookkept degree `|I| + 2 deg q` over summands, per group.
    pub fn degrees(&self) -> Vec<u32> {
        self.groups
            .iter()
            .map(|g| {
                self.summands
                    .iter()
                    .map(|s| s.degree_in(&g.vars))
                    .max()
                    .unwrap_or(0)
            })
            .collect()
    }

    /// `Σ_I σ_I Π g` in the Chebyshev basis.
    pub fn expand(&self) -> Poly {
        let n = self.nvars();
        let group = self.target.group().to_string();
        self.summands.iter().map(|s| s.expand(n, &group)).fold(
            Poly::zero(n, Basis::Chebyshev).with_group(group.clone()),
            |acc, p| acc.add(&p).expect("same shape"),
        )
    }

    /// Max-abs Chebyshev coefficient deviation between expansion and target.
    pub fn verify(&self) -> f64 {
        self.expand()
            .max_abs_diff(&self.target)
            .expect("expansion has the target's shape")
    }

    /// Checks weights are nonnegative and every summand respects its caps.
    pub fn check_structure(&self) -> Result<()> {
        for s in &self.summands {
            for ws in &s.sos {
                if ws.weight < 0.0 {
                    return Err(CertificateError::NegativeWeight(ws.weight));
                }
            }
            for g in &self.groups {
                let needed = s.degree_in(&g.vars);
                if needed > g.cap {
                    return Err(CertificateError::DegreeViolation { needed, cap: g.cap });
                }
            }
        }
        Ok(())
    }

    /// Sum of two certificates over the same variables; caps must agree.
    pub fn combine(&self, other: &Certificate) -> Result<Certificate> {
        let target = self
            .target
            .to_basis(Basis::Chebyshev)
            .add(&other.target.to_basis(Basis::Chebyshev))?;
        let mut summands = self.summands.clone();
        summands.extend(other.summands.iter().cloned());
        Ok(Certificate {
            target,
            summands,
            groups: self.groups.clone(),
        })
    }

    /// Multiplies target and every weight by `s ≥ 0`.
    pub fn scaled(&self, s: f64) -> Certificate {
        let summands = self
            .summands
            .iter()
            .map(|sm| Summand {
                generators: sm.generators.clone(),
                sos: sm
                    .sos
                    .iter()
                    .map(|ws| WeightedSquare {
                        weight: ws.weight * s,
                        q: ws.q.clone(),
                    })
                    .collect(),
            })
            .collect();
        Certificate {
            target: self.target.scale(s),
            summands,
            groups: self.groups.clone(),
        }
    }

    /// Product of certificates in disjoint (or shared) variables.
    ///
    /// `(Σ_I σ_I g_I)(Σ_J τ_J g_J) = Σ_{I,J} σ_I τ_J g_I g_J`, with
    /// `σ_I τ_J = Σ w v (q p)²`. Generators must not repeat across factors.
    fn product(&self, other: &Certificate) -> Result<Certificate> {
        let target = self
            .target
            .to_basis(Basis::Chebyshev)
            .cheb_mul(&other.target.to_basis(Basis::Chebyshev))?;
        let mut summands = Vec::with_capacity(self.summands.len() * other.summands.len());
        for a in &self.summands {
            for b in &other.summands {
                let mut gens = a.generators.clone();
                gens.extend(b.generators.iter().copied());
                let mut sos = Vec::with_capacity(a.sos.len() * b.sos.len());
                for wa in &a.sos {
                    for wb in &b.sos {
                        sos.push(WeightedSquare {
                            weight: wa.weight * wb.weight,
                            q: wa.q.mul(&wb.q)?,
                        });
                    }
                }
                summands.push(Summand::new(gens, sos));
            }
        }
        let cap = self.degree_cap() + other.degree_cap();
        Ok(Certificate::new(target, summands, cap))
    }
}

/// Chebyshev-type family `P_0 = 1, P_1 = 2x + b, P_{k+1} = 2x P_k − P_{k−1}` in
/// variable `var`; `b = 0` gives `U`, `b = −1` gives `V`, `b = 1` gives `W`.
fn recurrence_family(nvars: usize, var: usize, shift: f64, m: u32) -> Poly {
    let x = Poly::variable(nvars, Basis::Monomial, var);
    let mut prev = Poly::constant(nvars, Basis::Monomial, 1.0);
    if m == 0 {
        return prev;
    }
    let mut cur = x.scale(2.0).add_constant(shift);
    for _ in 1..m {
        let next = x
            .mul(&cur)
            .map(|p| p.scale(2.0))
            .and_then(|p| p.sub(&prev))
            .expect("same shape");
        prev = cur;
        cur = next;
    }
    cur
}

fn cheb_t_in(nvars: usize, var: usize, k: u32) -> Poly {
    Poly::term(Basis::Chebyshev, MultiIndex::unit(nvars, var, k), 1.0)
}

/// `1 + sign·T_k(x_var)` inside an `nvars`-variate space.
fn univariate_in(nvars: usize, var: usize, k: u32, sign: i8) -> Certificate {
    let target = cheb_t_in(nvars, var, k)
        .scale(f64::from(sign))
        .add_constant(1.0);
    let m = k / 2;
    let (gens, weight, q) = if k.is_multiple_of(2) {
        if sign < 0 {
            // 1 − T_{2m} = 2(1 − x²) U_{m−1}²
            (
                vec![Generator::minus(var), Generator::plus(var)],
                2.0,
                recurrence_family(nvars, var, 0.0, m - 1),
            )
        } else {
            // 1 + T_{2m} = 2 T_m²
            (
                Vec::new(),
                2.0,
                cheb_t_in(nvars, var, m).to_basis(Basis::Monomial),
            )
        }
    } else if sign < 0 {
        // 1 − T_{2m+1} = (1 − x) W_m²
        (
            vec![Generator::minus(var)],
            1.0,
            recurrence_family(nvars, var, 1.0, m),
        )
    } else {
        // 1 + T_{2m+1} = (1 + x) V_m²
        (
            vec![Generator::plus(var)],
            1.0,
            recurrence_family(nvars, var, -1.0, m),
        )
    };
    Certificate::new(
        target,
        vec![Summand::new(gens, vec![WeightedSquare { weight, q }])],
        k,
    )
}

/// Certificate for `1 + sign·T_k(t)` of degree exactly `k`.
pub fn decompose_univariate(k: u32, sign: i8) -> Result<Certificate> {
    if k == 0 {
        return Err(CertificateError::ZeroIndex);
    }
    Ok(univariate_in(1, 0, k, sign_of(sign)))
}

fn sign_of(s: i8) -> i8 {
    if s < 0 {
        -1
    } else {
        1
    }
}

/// Certificate for `1 + sign·T_α(x)` in `T(1 ± x)_{|α|}`.
///
/// Variables are peeled lowest index first with
/// `1 + ab = ½[(1+a)(1+b) + (1−a)(1−b)]` and
/// `1 − ab = ½[(1−a)(1+b) + (1+a)(1−b)]`.
pub fn decompose_multi(alpha: &MultiIndex, sign: i8) -> Result<Certificate> {
    let support: Vec<usize> = (0..alpha.len()).filter(|&i| alpha[i] != 0).collect();
    if support.is_empty() {
        return Err(CertificateError::ZeroIndex);
    }
    decompose_support(alpha, &support, sign_of(sign))
}

fn decompose_support(alpha: &MultiIndex, support: &[usize], sign: i8) -> Result<Certificate> {
    let n = alpha.len();
    let head = support[0];
    if support.len() == 1 {
        return Ok(univariate_in(n, head, alpha[head], sign));
    }
    let mut acc: Option<Certificate> = None;
    for head_sign in [-1i8, 1] {
        let tail_sign = sign * head_sign;
        let a = univariate_in(n, head, alpha[head], head_sign);
        let b = decompose_support(alpha, &support[1..], tail_sign)?;
        let branch = a.product(&b)?.scaled(0.5);
        acc = Some(match acc {
            None => branch,
            Some(prev) => prev.combine(&branch)?,
        });
    }
    let mut cert = acc.expect("two branches");
    cert.groups[0].cap = alpha.degree();
    Ok(cert)
}

/// Certificate for `‖p‖₁,T − p ∈ T(1 ± x)_{deg p}`, built from
/// `Σ_α |p_α| (1 − sign(p_α) T_α)`.
///
/// A negative constant coefficient contributes the square `2|p_0|·1²`.
pub fn norm_gap_certificate(p: &Poly) -> Result<Certificate> {
    let cheb = p.to_basis(Basis::Chebyshev);
    let n = cheb.nvars();
    let cap = cheb.degree();
    let group = cheb.group().to_string();
    let norm = cheb.coeff_one_norm(Basis::Chebyshev);
    let target = cheb.scale(-1.0).add_constant(norm);
    let mut summands = Vec::new();
    for (alpha, c) in cheb.iter() {
        if alpha.is_zero() {
            if c < 0.0 {
                summands.push(Summand::new(
                    Vec::new(),
                    vec![WeightedSquare {
                        weight: 2.0 * c.abs(),
                        q: Poly::constant(n, Basis::Monomial, 1.0).with_group(group.clone()),
                    }],
                ));
            }
            continue;
        }
        let sign = if c > 0.0 { -1 } else { 1 };
        let branch = decompose_multi(alpha, sign)?.scaled(c.abs());
        summands.extend(branch.summands.into_iter().map(|s| regroup(s, &group)));
    }
    Ok(Certificate::new(target, summands, cap))
}

fn regroup(s: Summand, group: &str) -> Summand {
    Summand {
        generators: s.generators,
        sos: s
            .sos
            .into_iter()
            .map(|ws| WeightedSquare {
                weight: ws.weight,
                q: ws.q.with_group(group),
            })
            .collect(),
    }
}

/// Certificate for `f + ‖p − f‖₁,T`, given a certificate that `p ∈ T(1 ± x)_d`
/// with `d ≥ deg f`.
pub fn shift_certificate(f: &Poly, p: &Poly, cert_p: &Certificate) -> Result<Certificate> {
    let cap = cert_p.degree_cap();
    let deg = f.degree().max(p.degree());
    if deg > cap {
        return Err(CertificateError::DegreeViolation { needed: deg, cap });
    }
    let diff = p
        .to_basis(Basis::Chebyshev)
        .sub(&f.to_basis(Basis::Chebyshev))?;
    let gap = norm_gap_certificate(&diff)?;
    let target = f
        .to_basis(Basis::Chebyshev)
        .add_constant(diff.coeff_one_norm(Basis::Chebyshev));
    let mut summands = cert_p.summands.clone();
    summands.extend(gap.summands);
    Ok(Certificate::new(target, summands, cap))
}

#[derive(Serialize, Deserialize)]
struct SquareJson {
    w: f64,
    q: PolyJson,
}

#[derive(Serialize, Deserialize)]
struct SummandJson {
    #[serde(rename = "I")]
    generators: Vec<Generator>,
    sos: Vec<SquareJson>,
}

#[derive(Serialize, Deserialize)]
struct CertificateJson {
    target: PolyJson,
    summands: Vec<SummandJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    degree_groups: Option<Vec<DegreeGroup>>,
}

impl Certificate {
    pub fn to_json(&self) -> String {
        let wire = CertificateJson {
            target: PolyJson::from(&self.target),
            summands: self
                .summands
                .iter()
                .map(|s| SummandJson {
                    generators: s.generators.clone(),
                    sos: s
                        .sos
                        .iter()
                        .map(|ws| SquareJson {
                            w: ws.weight,
                            q: PolyJson::from(&ws.q),
                        })
                        .collect(),
                })
                .collect(),
            degree_groups: Some(self.groups.clone()),
        };
        serde_json::to_string_pretty(&wire).expect("plain data serializes")
    }

    pub fn from_json(s: &str) -> Result<Certificate> {
        let wire: CertificateJson =
            serde_json::from_str(s).map_err(|e| CertificateError::Format(e.to_string()))?;
        let target = wire.target.into_poly()?;
        let n = target.nvars();
        let mut summands = Vec::with_capacity(wire.summands.len());
        for s in wire.summands {
            if let Some(g) = s
                .generators
                .iter()
                .find(|g| g.var >= n || g.sign.abs() != 1)
            {
                return Err(CertificateError::Format(format!(
                    "bad generator (i = {}, sign = {})",
                    g.var, g.sign
                )));
            }
            let mut sos = Vec::with_capacity(s.sos.len());
            for sq in s.sos {
                let q = sq.q.into_poly()?;
                if q.nvars() != n {
                    return Err(CertificateError::Format(format!(
                        "square in {} variables, target in {n}",
                        q.nvars()
                    )));
                }
                sos.push(WeightedSquare {
                    weight: sq.w,
                    q: q.to_basis(Basis::Monomial),
                });
            }
            summands.push(Summand::new(s.generators, sos));
        }
        let groups = match wire.degree_groups {
            Some(g) => g,
            None => {
                let probe = Certificate::new(target.clone(), summands.clone(), 0);
                let cap = probe.degrees()[0].max(target.degree());
                vec![DegreeGroup { vars: 0..n, cap }]
            }
        };
        Ok(Certificate {
            target,
            summands,
            groups,
        })
    }
}
