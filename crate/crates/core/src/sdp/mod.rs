//! Small dense block-diagonal semidefinite programs.
//!
//! Primal form:
//!
//! ```text
//! min  ⟨C, X⟩ + cᵀz
//! s.t. ⟨A_j, X⟩ + f_jᵀz = b_j,   j = 1..m
//!      X = diag(X_1, …, X_B) ⪰ 0,  z free
//! ```
//!
//! with dual `max bᵀy` s.t. `Σ y_j A_j + S = C`, `Σ y_j f_j = c`, `S ⪰ 0`.
//! Symmetric matrices are given by their upper-triangle entries: an [`Entry`]
//! at `(row, col)` with `row ≠ col` stands for the value at both `(row, col)`
//! and `(col, row)`.

mod export;
mod solver;

pub use export::write_sparse;
pub use solver::{check_solution, solve};

use nalgebra::DMatrix;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SdpError {
    #[error("problem has no constraints")]
    NoConstraints,
    #[error("problem has no blocks")]
    NoBlocks,
    #[error("block {block} does not exist")]
    BlockIndex { block: usize },
    #[error("entry ({row}, {col}) outside block {block} of dimension {dim}")]
    EntryIndex {
        block: usize,
        row: usize,
        col: usize,
        dim: usize,
    },
    #[error("free variable {0} does not exist")]
    FreeIndex(usize),
    #[error("matrix for block {block} is not symmetric (deviation {deviation:.3e})")]
    NotSymmetric { block: usize, deviation: f64 },
    #[error("non-finite data in {0}")]
    NonFinite(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSpec {
    pub label: String,
    pub dim: usize,
}

/// One upper-triangle entry of a block-diagonal symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

impl Entry {
    /// Stores `(min, max)` of the two indices.
    pub fn new(block: usize, row: usize, col: usize, value: f64) -> Self {
        Entry {
            block,
            row: row.min(col),
            col: row.max(col),
            value,
        }
    }

    /// Contribution to `⟨A, X⟩` per unit value, counting both triangles.
    fn multiplicity(&self) -> f64 {
        if self.row == self.col {
            1.0
        } else {
            2.0
        }
    }
}

/// `⟨A_j, X⟩ + f_jᵀz = b_j`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Constraint {
    pub entries: Vec<Entry>,
    pub free: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(rhs: f64) -> Self {
        Constraint {
            entries: Vec::new(),
            free: Vec::new(),
            rhs,
        }
    }

    pub fn entry(mut self, block: usize, row: usize, col: usize, value: f64) -> Self {
        self.entries.push(Entry::new(block, row, col, value));
        self
    }

    pub fn free_var(mut self, var: usize, coeff: f64) -> Self {
        self.free.push((var, coeff));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SdpProblem {
    pub blocks: Vec<BlockSpec>,
    pub objective: Vec<Entry>,
    pub free_cost: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

impl SdpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_block(&mut self, label: impl Into<String>, dim: usize) -> usize {
        self.blocks.push(BlockSpec {
            label: label.into(),
            dim,
        });
        self.blocks.len() - 1
    }

    /// Adds a free scalar with linear cost; returns its index.
    pub fn add_free(&mut self, cost: f64) -> usize {
        self.free_cost.push(cost);
        self.free_cost.len() - 1
    }

    pub fn add_objective_entry(&mut self, block: usize, row: usize, col: usize, value: f64) {
        self.objective.push(Entry::new(block, row, col, value));
    }

    /// Adds a dense symmetric objective block, rejecting asymmetry above 1e-14.
    pub fn add_objective_dense(&mut self, block: usize, c: &DMatrix<f64>) -> Result<(), SdpError> {
        self.objective.extend(dense_entries(block, c)?);
        Ok(())
    }

    pub fn add_constraint(&mut self, c: Constraint) -> usize {
        self.constraints.push(c);
        self.constraints.len() - 1
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn num_free(&self) -> usize {
        self.free_cost.len()
    }

    /// Sum of block dimensions.
    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim).sum()
    }

    pub fn validate(&self) -> Result<(), SdpError> {
        if self.blocks.is_empty() {
            return Err(SdpError::NoBlocks);
        }
        if self.constraints.is_empty() {
            return Err(SdpError::NoConstraints);
        }
        let check = |e: &Entry| -> Result<(), SdpError> {
            let spec = self
                .blocks
                .get(e.block)
                .ok_or(SdpError::BlockIndex { block: e.block })?;
            if e.col >= spec.dim {
                return Err(SdpError::EntryIndex {
                    block: e.block,
                    row: e.row,
                    col: e.col,
                    dim: spec.dim,
                });
            }
            if !e.value.is_finite() {
                return Err(SdpError::NonFinite(format!("entry of block {}", e.block)));
            }
            Ok(())
        };
        for e in &self.objective {
            check(e)?;
        }
        if self.free_cost.iter().any(|c| !c.is_finite()) {
            return Err(SdpError::NonFinite("free variable cost".into()));
        }
        for (j, c) in self.constraints.iter().enumerate() {
            for e in &c.entries {
                check(e)?;
            }
            for &(k, v) in &c.free {
                if k >= self.free_cost.len() {
                    return Err(SdpError::FreeIndex(k));
                }
                if !v.is_finite() {
                    return Err(SdpError::NonFinite(format!("constraint {j}")));
                }
            }
            if !c.rhs.is_finite() {
                return Err(SdpError::NonFinite(format!("rhs of constraint {j}")));
            }
        }
        Ok(())
    }

    /// `⟨A_j, X⟩ + f_jᵀz` for every constraint, by direct summation.
    pub fn apply(&self, x: &[DMatrix<f64>], z: &[f64]) -> Vec<f64> {
        self.constraints
            .iter()
            .map(|c| {
                let mat: f64 = c
                    .entries
                    .iter()
                    .map(|e| e.multiplicity() * e.value * x[e.block][(e.row, e.col)])
                    .sum();
                let free: f64 = c.free.iter().map(|&(k, v)| v * z[k]).sum();
                mat + free
            })
            .collect()
    }

    /// `⟨C, X⟩ + cᵀz`.
    pub fn primal_objective(&self, x: &[DMatrix<f64>], z: &[f64]) -> f64 {
        let mat: f64 = self
            .objective
            .iter()
            .map(|e| e.multiplicity() * e.value * x[e.block][(e.row, e.col)])
            .sum();
        mat + self
            .free_cost
            .iter()
            .zip(z)
            .map(|(c, v)| c * v)
            .sum::<f64>()
    }

    /// Dense objective blocks.
    pub fn objective_blocks(&self) -> Vec<DMatrix<f64>> {
        let mut out = self.zero_blocks();
        scatter(&mut out, &self.objective, 1.0);
        out
    }

    /// `Σ_j y_j A_j` as dense blocks.
    pub fn adjoint(&self, y: &[f64]) -> Vec<DMatrix<f64>> {
        let mut out = self.zero_blocks();
        for (c, &yj) in self.constraints.iter().zip(y) {
            scatter(&mut out, &c.entries, yj);
        }
        out
    }

    pub fn zero_blocks(&self) -> Vec<DMatrix<f64>> {
        self.blocks
            .iter()
            .map(|b| DMatrix::zeros(b.dim, b.dim))
            .collect()
    }
}

fn scatter(out: &mut [DMatrix<f64>], entries: &[Entry], scale: f64) {
    for e in entries {
        let v = scale * e.value;
        out[e.block][(e.row, e.col)] += v;
        if e.row != e.col {
            out[e.block][(e.col, e.row)] += v;
        }
    }
}

/// Upper-triangle entries of a dense symmetric matrix.
pub fn dense_entries(block: usize, m: &DMatrix<f64>) -> Result<Vec<Entry>, SdpError> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(SdpError::NotSymmetric {
            block,
            deviation: f64::INFINITY,
        });
    }
    let deviation = (m - m.transpose()).amax();
    if deviation > 1e-14 {
        return Err(SdpError::NotSymmetric { block, deviation });
    }
    let mut out = Vec::new();
    for i in 0..n {
        for j in i..n {
            if m[(i, j)] != 0.0 {
                out.push(Entry::new(block, i, j, m[(i, j)]));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    MaxIterations,
    NumericalFailure,
    /// The configured wall-clock limit ran out.
    TimeLimit,
}

/// Scaled residuals of a primal-dual point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    /// `‖A(X) + Fz − b‖₂ / (1 + ‖b‖₂)`
    pub primal: f64,
    /// `(‖C − Aᵀy − S‖_F + ‖c − Fᵀy‖₂) / (1 + ‖C‖_F + ‖c‖₂)`
    pub dual: f64,
    /// `|p − d| / (1 + |p|)` with `p`, `d` the primal and dual objectives
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub feasibility_tol: f64,
    pub gap_tol: f64,
    pub max_iterations: usize,
    pub step_fraction: f64,
    pub time_limit: Option<std::time::Duration>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            feasibility_tol: 1e-8,
            gap_tol: 1e-7,
            max_iterations: 200,
            step_fraction: 0.98,
            time_limit: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub x: Vec<DMatrix<f64>>,
    pub y: Vec<f64>,
    pub s: Vec<DMatrix<f64>>,
    pub z: Vec<f64>,
    pub residuals: Residuals,
    pub iterations: usize,
}

impl SolveReport {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}
