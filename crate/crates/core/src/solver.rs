//! Conic backend contract and the Clarabel implementation.
//!
//! A backend receives a [`ConicProgram`] (free variables, equalities,
//! nonnegative rows, PSD blocks) and reports a status plus a primal point.
//! Only clear-cut terminations map to `Solved`/`PrimalInfeasible`/
//! `DualInfeasible`; everything else is `Other` carrying the backend's own
//! status string.

use std::time::{Duration, Instant};

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use serde::{Deserialize, Serialize};
// Links the system OpenBLAS/LAPACK used by the PSD cone.
use openblas_src as _;

use crate::error::{Error, Result};
use crate::program::ConicProgram;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Gap and feasibility tolerance handed to the backend.
    pub tolerance: f64,
    pub max_iter: u32,
    pub verbose: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iter: 200,
            verbose: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BackendStatus {
    Solved,
    PrimalInfeasible,
    DualInfeasible,
    /// Anything else (reduced accuracy, iteration limit, numerical trouble).
    Other(String),
}

#[derive(Clone, Debug)]
pub struct BackendSolution {
    pub status: BackendStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: u32,
    pub elapsed: Duration,
}

pub trait ConicBackend: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, program: &ConicProgram, options: &SolverOptions) -> Result<BackendSolution>;
}

/// Interior-point backend built on Clarabel. Each call constructs its own
/// solver instance, so a shared `ClarabelBackend` is safe across threads.
#[derive(Clone, Copy, Debug, Default)]
pub struct ClarabelBackend;

const SQRT2: f64 = std::f64::consts::SQRT_2;

impl ConicBackend for ClarabelBackend {
    fn name(&self) -> &'static str {
        "clarabel"
    }

    fn solve(&self, program: &ConicProgram, options: &SolverOptions) -> Result<BackendSolution> {
        let start = Instant::now();
        let n = program.num_vars;
        if n == 0 {
            // nothing to optimise: the constants either satisfy everything or not
            let ok = program.worst_violation(&[]) <= options.tolerance;
            return Ok(BackendSolution {
                status: if ok {
                    BackendStatus::Solved
                } else {
                    BackendStatus::PrimalInfeasible
                },
                x: Vec::new(),
                objective: program.objective.constant,
                iterations: 0,
                elapsed: start.elapsed(),
            });
        }

        // Clarabel form: A x + s = b, s ∈ K. For an affine row e(x) = c + gᵀx
        // that must lie in K we set A-row = -g, b = c.
        let mut rows_i = Vec::new();
        let mut cols_j = Vec::new();
        let mut vals = Vec::new();
        let mut b = Vec::new();
        let mut cones = Vec::new();
        let mut push_row = |e: &crate::expr::LinExpr, scale: f64, b: &mut Vec<f64>| {
            let r = b.len();
            for &(v, c) in e.terms() {
                rows_i.push(r);
                cols_j.push(v);
                vals.push(-c * scale);
            }
            b.push(e.constant * scale);
        };

        if !program.equalities.is_empty() {
            for e in &program.equalities {
                push_row(e, 1.0, &mut b);
            }
            cones.push(SupportedConeT::ZeroConeT(program.equalities.len()));
        }
        if !program.nonneg.is_empty() {
            for e in &program.nonneg {
                push_row(e, 1.0, &mut b);
            }
            cones.push(SupportedConeT::NonnegativeConeT(program.nonneg.len()));
        }
        for m in &program.psd {
            let d = m.nrows();
            if d == 0 {
                continue;
            }
            if d == 1 {
                push_row(m.get(0, 0), 1.0, &mut b);
                cones.push(SupportedConeT::NonnegativeConeT(1));
                continue;
            }
            // upper triangle, column-major, off-diagonals scaled by √2
            for j in 0..d {
                for i in 0..=j {
                    let e = m.get(i, j).add(m.get(j, i)).scale(0.5);
                    push_row(&e, if i == j { 1.0 } else { SQRT2 }, &mut b);
                }
            }
            cones.push(SupportedConeT::PSDTriangleConeT(d));
        }

        let m_rows = b.len();
        let a = CscMatrix::new_from_triplets(m_rows, n, rows_i, cols_j, vals);
        let p = CscMatrix::zeros((n, n));
        let mut q = vec![0.0; n];
        for &(v, c) in program.objective.terms() {
            q[v] += c;
        }

        let settings = DefaultSettingsBuilder::default()
            .verbose(options.verbose)
            .max_iter(options.max_iter)
            .tol_gap_abs(options.tolerance)
            .tol_gap_rel(options.tolerance)
            .tol_feas(options.tolerance)
            .build()
            .map_err(|e| Error::Solver(format!("invalid settings: {e:?}")))?;
        let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings)
            .map_err(|e| Error::Solver(format!("problem rejected by clarabel: {e:?}")))?;
        solver.solve();

        let status = match solver.solution.status {
            SolverStatus::Solved => BackendStatus::Solved,
            SolverStatus::PrimalInfeasible => BackendStatus::PrimalInfeasible,
            SolverStatus::DualInfeasible => BackendStatus::DualInfeasible,
            other => BackendStatus::Other(format!("{other:?}")),
        };
        Ok(BackendSolution {
            status,
            x: solver.solution.x.clone(),
            objective: solver.solution.obj_val + program.objective.constant,
            iterations: solver.solution.iterations,
            elapsed: start.elapsed(),
        })
    }
}
