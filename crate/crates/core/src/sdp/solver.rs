//! Infeasible-start primal-dual interior-point method (HKM direction with
//! Mehrotra predictor-corrector).

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use super::{Residuals, SdpError, SdpProblem, SolveReport, SolveStatus, SolverOptions};

/// Beyond this the iterates are treated as diverging.
const DIVERGENCE: f64 = 1e12;
const BACKTRACK: usize = 20;
const REFINEMENT: usize = 3;
/// Accepted slack in `p ≥ d` at an optimal point.
const WEAK_DUALITY: f64 = 1e-9;
const REGULARIZATION: [f64; 3] = [1e-12, 1e-10, 1e-8];

type Blocks = Vec<DMatrix<f64>>;

/// `(constraint, [(row, col, value)])` pairs of one block.
type BlockEntries = Vec<(usize, Vec<(usize, usize, f64)>)>;

/// Constraint data regrouped by block with both triangles expanded.
struct Operator {
    m: usize,
    dims: Vec<usize>,
    by_block: Vec<BlockEntries>,
    f: DMatrix<f64>,
    b: DVector<f64>,
    c: Blocks,
    c_free: DVector<f64>,
}

impl Operator {
    fn new(p: &SdpProblem) -> Self {
        let m = p.num_constraints();
        let k = p.num_free();
        let dims: Vec<usize> = p.blocks.iter().map(|b| b.dim).collect();
        let mut by_block: Vec<BlockEntries> = vec![Vec::new(); dims.len()];
        let mut f = DMatrix::zeros(m, k);
        for (j, con) in p.constraints.iter().enumerate() {
            let mut grouped: BTreeMap<usize, Vec<(usize, usize, f64)>> = BTreeMap::new();
            for e in &con.entries {
                let list = grouped.entry(e.block).or_default();
                list.push((e.row, e.col, e.value));
                if e.row != e.col {
                    list.push((e.col, e.row, e.value));
                }
            }
            for (blk, list) in grouped {
                by_block[blk].push((j, list));
            }
            for &(var, v) in &con.free {
                f[(j, var)] += v;
            }
        }
        Operator {
            m,
            dims,
            by_block,
            f,
            b: DVector::from_iterator(m, p.constraints.iter().map(|c| c.rhs)),
            c: p.objective_blocks(),
            c_free: DVector::from_vec(p.free_cost.clone()),
        }
    }

    /// `A(X)` without the free part; `X` need not be symmetric.
    fn apply(&self, x: &[DMatrix<f64>]) -> DVector<f64> {
        let mut out = DVector::zeros(self.m);
        for (blk, list) in self.by_block.iter().enumerate() {
            for (j, ents) in list {
                out[*j] += ents
                    .iter()
                    .map(|&(r, s, a)| a * x[blk][(r, s)])
                    .sum::<f64>();
            }
        }
        out
    }

    fn adjoint(&self, y: &DVector<f64>) -> Blocks {
        let mut out: Blocks = self.dims.iter().map(|&d| DMatrix::zeros(d, d)).collect();
        for (blk, list) in self.by_block.iter().enumerate() {
            for (j, ents) in list {
                for &(r, s, a) in ents {
                    out[blk][(r, s)] += y[*j] * a;
                }
            }
        }
        out
    }

    /// `M_ij = tr(A_i X A_j S⁻¹)`.
    fn schur(&self, x: &[DMatrix<f64>], sinv: &[DMatrix<f64>]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.m, self.m);
        for (blk, list) in self.by_block.iter().enumerate() {
            let d = self.dims[blk];
            for (pj, (j, ents_j)) in list.iter().enumerate() {
                // X A_j, then times S⁻¹
                let mut xa = DMatrix::zeros(d, d);
                for &(u, v, beta) in ents_j {
                    let mut col = xa.column_mut(v);
                    col.axpy(beta, &x[blk].column(u), 1.0);
                }
                let w = xa * &sinv[blk];
                for (i, ents_i) in &list[pj..] {
                    let val: f64 = ents_i.iter().map(|&(r, s, a)| a * w[(s, r)]).sum();
                    m[(*i, *j)] += val;
                    if i != j {
                        m[(*j, *i)] += val;
                    }
                }
            }
        }
        m
    }
}

fn inner(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn frob(a: &[DMatrix<f64>]) -> f64 {
    a.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt()
}

fn symmetrize(a: &mut DMatrix<f64>) {
    let t = a.transpose();
    *a += t;
    *a *= 0.5;
}

/// Cholesky with diagonal regularization retries.
fn factor_spd(m: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    if let Some(c) = Cholesky::new(m.clone()) {
        return Some(c);
    }
    let scale = m.diagonal().amax().max(1.0);
    for delta in REGULARIZATION {
        let mut reg = m.clone();
        for i in 0..reg.nrows() {
            reg[(i, i)] += delta * scale;
        }
        if let Some(c) = Cholesky::new(reg) {
            return Some(c);
        }
    }
    None
}

/// A factorization of `mat`, possibly of a regularized copy; solves are
/// refined against `mat` itself to undo the regularization error.
struct Factored {
    mat: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl Factored {
    fn new(mat: DMatrix<f64>) -> Option<Self> {
        let chol = factor_spd(&mat)?;
        Some(Factored { mat, chol })
    }

    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let mut x = self.chol.solve(rhs);
        let mut best = (rhs - &self.mat * &x).norm();
        for _ in 0..REFINEMENT {
            if best == 0.0 {
                break;
            }
            let cand = &x + self.chol.solve(&(rhs - &self.mat * &x));
            let err = (rhs - &self.mat * &cand).norm();
            if err >= best {
                break;
            }
            x = cand;
            best = err;
        }
        x
    }

    fn solve_columns(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(rhs.nrows(), rhs.ncols());
        for j in 0..rhs.ncols() {
            out.set_column(j, &self.solve(&rhs.column(j).into_owned()));
        }
        out
    }
}

/// Largest `α` with `X + αD ⪰ 0` given `X = LLᵀ`.
fn max_step(l: &DMatrix<f64>, d: &DMatrix<f64>) -> f64 {
    if d.nrows() == 0 {
        return f64::INFINITY;
    }
    let a = l.solve_lower_triangular(d).expect("L is nonsingular");
    let mut y = l
        .solve_lower_triangular(&a.transpose())
        .expect("L is nonsingular");
    symmetrize(&mut y);
    let min = SymmetricEigen::new(y).eigenvalues.min();
    if min >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / min
    }
}

struct Residual {
    rp: DVector<f64>,
    rd: Blocks,
    rf: DVector<f64>,
    scaled: Residuals,
    pobj: f64,
    dobj: f64,
}

fn residual(op: &Operator, x: &Blocks, y: &DVector<f64>, s: &Blocks, z: &DVector<f64>) -> Residual {
    let rp = &op.b - op.apply(x) - &op.f * z;
    let ay = op.adjoint(y);
    let rd: Blocks =
        op.c.iter()
            .zip(&ay)
            .zip(s)
            .map(|((c, a), s)| c - a - s)
            .collect();
    let rf = &op.c_free - op.f.transpose() * y;
    let pobj = inner(&op.c, x) + op.c_free.dot(z);
    let dobj = op.b.dot(y);
    let scaled = Residuals {
        primal: rp.norm() / (1.0 + op.b.norm()),
        dual: (frob(&rd) + rf.norm()) / (1.0 + frob(&op.c) + op.c_free.norm()),
        gap: (pobj - dobj).abs() / (1.0 + pobj.abs()),
    };
    Residual {
        rp,
        rd,
        rf,
        scaled,
        pobj,
        dobj,
    }
}

struct Newton<'a> {
    op: &'a Operator,
    x: &'a Blocks,
    sinv: &'a Blocks,
    res: &'a Residual,
    m: &'a Factored,
    minv_f: DMatrix<f64>,
    reduced: Option<Factored>,
}

struct Step {
    dx: Blocks,
    dy: DVector<f64>,
    ds: Blocks,
    dz: DVector<f64>,
}

impl Newton<'_> {
    /// Solves `M dy + F dz = h`, `Fᵀ dy = rf`.
    fn saddle(&self, h: &DVector<f64>, rf: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let minv_h = self.m.solve(h);
        match &self.reduced {
            Some(red) => {
                let rhs = self.op.f.transpose() * &minv_h - rf;
                let dz = red.solve(&rhs);
                (minv_h - &self.minv_f * &dz, dz)
            }
            None => (minv_h, DVector::zeros(0)),
        }
    }

    /// `dS = R_d − Aᵀdy`, `dX = sym(G − X dS S⁻¹)`.
    fn recover(&self, g: &[DMatrix<f64>], dy: &DVector<f64>) -> (Blocks, Blocks) {
        let aty = self.op.adjoint(dy);
        let ds: Blocks = self.res.rd.iter().zip(&aty).map(|(r, a)| r - a).collect();
        let dx: Blocks = (0..self.op.dims.len())
            .map(|b| {
                let mut dx = &g[b] - &self.x[b] * &ds[b] * &self.sinv[b];
                symmetrize(&mut dx);
                dx
            })
            .collect();
        (ds, dx)
    }

    fn direction(&self, sigma_mu: f64, corr: Option<&Blocks>) -> Step {
        let op = self.op;
        // G = σμS⁻¹ − X − Corr·S⁻¹,  H = G − X R_d S⁻¹
        let g: Blocks = (0..op.dims.len())
            .map(|b| {
                let mut g = &self.sinv[b] * sigma_mu - &self.x[b];
                if let Some(c) = corr {
                    g -= &c[b] * &self.sinv[b];
                }
                g
            })
            .collect();
        let h_mat: Blocks = (0..op.dims.len())
            .map(|b| &g[b] - &self.x[b] * &self.res.rd[b] * &self.sinv[b])
            .collect();
        let h = &self.res.rp - op.apply(&h_mat);
        let (mut dy, mut dz) = self.saddle(&h, &self.res.rf);
        let (mut ds, mut dx) = self.recover(&g, &dy);
        // the Schur matrix is only an approximation of the operator once X
        // and S are ill-conditioned; correct against the true residual
        let residual = |dx: &Blocks, dy: &DVector<f64>, dz: &DVector<f64>| {
            let ep = &self.res.rp - op.apply(dx) - &op.f * dz;
            let ef = &self.res.rf - op.f.transpose() * dy;
            let size = ep.norm_squared() + ef.norm_squared();
            (ep, ef, size)
        };
        let (mut ep, mut ef, mut size) = residual(&dx, &dy, &dz);
        for _ in 0..REFINEMENT {
            let (cy, cz) = self.saddle(&ep, &ef);
            let (ny, nz) = (&dy + cy, &dz + cz);
            let (nds, ndx) = self.recover(&g, &ny);
            let (nep, nef, nsize) = residual(&ndx, &ny, &nz);
            if nsize >= size {
                break;
            }
            (dy, dz, ds, dx) = (ny, nz, nds, ndx);
            (ep, ef, size) = (nep, nef, nsize);
        }
        Step { dx, dy, ds, dz }
    }
}

fn block_steps(chol: &[DMatrix<f64>], d: &[DMatrix<f64>]) -> f64 {
    chol.iter()
        .zip(d)
        .map(|(l, d)| max_step(l, d))
        .fold(f64::INFINITY, f64::min)
}

fn axpy_blocks(a: &[DMatrix<f64>], alpha: f64, d: &[DMatrix<f64>]) -> Blocks {
    a.iter().zip(d).map(|(a, d)| a + d * alpha).collect()
}

/// Solves the problem from a scaled identity starting point.
pub fn solve(problem: &SdpProblem, options: &SolverOptions) -> Result<SolveReport, SdpError> {
    problem.validate()?;
    let start = Instant::now();
    let op = Operator::new(problem);
    let n_total = op.dims.iter().sum::<usize>().max(1) as f64;
    let k = problem.num_free();

    let a_norms: Vec<f64> = {
        let mut acc = vec![0.0; op.m];
        for list in &op.by_block {
            for (j, ents) in list {
                acc[*j] += ents.iter().map(|e| e.2 * e.2).sum::<f64>();
            }
        }
        acc.into_iter().map(f64::sqrt).collect()
    };
    let xi = (0..op.m)
        .map(|j| n_total.sqrt() * (1.0 + op.b[j].abs()) / (1.0 + a_norms[j]))
        .fold(10f64.max(n_total.sqrt()), f64::max);
    let eta = a_norms
        .iter()
        .copied()
        .fold(frob(&op.c), f64::max)
        .max(10f64.max(n_total.sqrt()));

    let mut x: Blocks = op
        .dims
        .iter()
        .map(|&d| DMatrix::identity(d, d) * xi)
        .collect();
    let mut s: Blocks = op
        .dims
        .iter()
        .map(|&d| DMatrix::identity(d, d) * eta)
        .collect();
    let mut y = DVector::zeros(op.m);
    let mut z = DVector::zeros(k);

    let mut iterations = 0;
    let status = loop {
        let res = residual(&op, &x, &y, &s, &z);
        let r = res.scaled;
        if r.primal <= options.feasibility_tol
            && r.dual <= options.feasibility_tol
            && r.gap <= options.gap_tol
            && res.pobj - res.dobj >= -WEAK_DUALITY * (1.0 + res.pobj.abs())
        {
            break SolveStatus::Optimal;
        }
        if res.dobj > DIVERGENCE && r.dual <= options.feasibility_tol.sqrt()
            || res.pobj < -DIVERGENCE && r.primal <= options.feasibility_tol.sqrt()
        {
            break SolveStatus::Infeasible;
        }
        if iterations >= options.max_iterations {
            break SolveStatus::MaxIterations;
        }
        if options.time_limit.is_some_and(|t| start.elapsed() >= t) {
            break SolveStatus::TimeLimit;
        }

        let chol_x: Option<Blocks> = x
            .iter()
            .map(|b| Cholesky::new(b.clone()).map(|c| c.l()))
            .collect();
        let chol_s: Option<Vec<Cholesky<f64, Dyn>>> =
            s.iter().map(|b| Cholesky::new(b.clone())).collect();
        let (Some(lx), Some(chol_s)) = (chol_x, chol_s) else {
            break SolveStatus::NumericalFailure;
        };
        let ls: Blocks = chol_s.iter().map(|c| c.l()).collect();
        let sinv: Blocks = chol_s.iter().map(|c| c.inverse()).collect();

        let schur = op.schur(&x, &sinv);
        let Some(m_chol) = Factored::new(schur) else {
            break SolveStatus::NumericalFailure;
        };
        let (minv_f, reduced) = if k > 0 {
            let minv_f = m_chol.solve_columns(&op.f);
            let red = op.f.transpose() * &minv_f;
            let red = (&red + red.transpose()) * 0.5;
            match Factored::new(red) {
                Some(c) => (minv_f, Some(c)),
                None => break SolveStatus::NumericalFailure,
            }
        } else {
            (DMatrix::zeros(op.m, 0), None)
        };
        let newton = Newton {
            op: &op,
            x: &x,
            sinv: &sinv,
            res: &res,
            m: &m_chol,
            minv_f,
            reduced,
        };

        let mu = inner(&x, &s) / n_total;
        let aff = newton.direction(0.0, None);
        let ap = block_steps(&lx, &aff.dx).min(1.0);
        let ad = block_steps(&ls, &aff.ds).min(1.0);
        let mu_aff = inner(&axpy_blocks(&x, ap, &aff.dx), &axpy_blocks(&s, ad, &aff.ds)) / n_total;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        let corr: Blocks = aff.dx.iter().zip(&aff.ds).map(|(a, b)| a * b).collect();
        let step = newton.direction(sigma * mu, Some(&corr));

        let ap = (options.step_fraction * block_steps(&lx, &step.dx)).min(1.0);
        let ad = (options.step_fraction * block_steps(&ls, &step.ds)).min(1.0);
        if !(ap.is_finite() && ad.is_finite()) || ap <= 0.0 && ad <= 0.0 {
            break SolveStatus::NumericalFailure;
        }
        // rounding can push a boundary step out of the cone; shrink until
        // both iterates factor
        let (mut ap, mut ad) = (ap, ad);
        let mut accepted = None;
        for _ in 0..BACKTRACK {
            let xn = axpy_blocks(&x, ap, &step.dx);
            let sn = axpy_blocks(&s, ad, &step.ds);
            if xn
                .iter()
                .chain(&sn)
                .all(|b| Cholesky::new(b.clone()).is_some())
            {
                accepted = Some((xn, sn));
                break;
            }
            ap *= 0.8;
            ad *= 0.8;
        }
        let Some((xn, sn)) = accepted else {
            break SolveStatus::NumericalFailure;
        };
        x = xn;
        s = sn;
        z += &step.dz * ap;
        y += &step.dy * ad;
        iterations += 1;
    };

    let res = residual(&op, &x, &y, &s, &z);
    Ok(SolveReport {
        status,
        primal_objective: res.pobj,
        dual_objective: res.dobj,
        x,
        y: y.iter().copied().collect(),
        s,
        z: z.iter().copied().collect(),
        residuals: res.scaled,
        iterations,
    })
}

/// Recomputes the scaled residuals of a reported point from the problem data.
pub fn check_solution(problem: &SdpProblem, report: &SolveReport) -> Residuals {
    let ax = problem.apply(&report.x, &report.z);
    let b: Vec<f64> = problem.constraints.iter().map(|c| c.rhs).collect();
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let rp: Vec<f64> = ax.iter().zip(&b).map(|(a, b)| a - b).collect();

    let c = problem.objective_blocks();
    let aty = problem.adjoint(&report.y);
    let rd: Blocks = c
        .iter()
        .zip(&aty)
        .zip(&report.s)
        .map(|((c, a), s)| c - a - s)
        .collect();
    let mut fty = vec![0.0; problem.num_free()];
    for (con, yj) in problem.constraints.iter().zip(&report.y) {
        for &(k, v) in &con.free {
            fty[k] += v * yj;
        }
    }
    let rf: Vec<f64> = problem
        .free_cost
        .iter()
        .zip(&fty)
        .map(|(c, f)| c - f)
        .collect();

    let pobj = problem.primal_objective(&report.x, &report.z);
    let dobj: f64 = b.iter().zip(&report.y).map(|(b, y)| b * y).sum();
    Residuals {
        primal: norm(&rp) / (1.0 + norm(&b)),
        dual: (frob(&rd) + norm(&rf)) / (1.0 + frob(&c) + norm(&problem.free_cost)),
        gap: (pobj - dobj).abs() / (1.0 + pobj.abs()),
    }
}
