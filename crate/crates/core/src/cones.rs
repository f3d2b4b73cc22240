//! Membership tests for the PSD, nonnegative, PSD+NN and copositive cones.
//!
//! Copositivity is co-NP complete in general, so [`copositivity_verdict`] is
//! three-valued: it only answers `Copositive` when a sufficient certificate
//! holds and only answers `NotCopositive` with an explicit witness.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{LinExpr, MatExpr};
use crate::linalg;
use crate::program::{BlockShape, ConeTag, ConstraintSystem, LinearConstraint, PsdConstraint};
use crate::solver::{BackendStatus, ClarabelBackend, ConicBackend, SolverOptions};

pub const DEFAULT_EIG_TOL: f64 = 1e-9;
pub const DEFAULT_ENTRY_TOL: f64 = 1e-12;
pub const DEFAULT_FEAS_TOL: f64 = 1e-8;

/// Grid sizes past this many points stop the simplex refinement.
const MAX_GRID_POINTS: u64 = 5_000_000;

/// A real symmetric matrix; the upper triangle is authoritative.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Mirrors the upper triangle of `m` onto the lower one.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension(format!(
                "symmetric matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        Ok(Self(DMatrix::from_fn(n, n, |i, j| {
            if i <= j {
                m[(i, j)]
            } else {
                m[(j, i)]
            }
        })))
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("rows must form a square matrix".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn quad_form(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.0 * x))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CopositivityStatus {
    Copositive,
    NotCopositive,
    Unknown,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CopositivityVerdict {
    pub status: CopositivityStatus,
    /// Nonnegative `x` with `xᵀAx < 0`; present iff `NotCopositive`.
    pub witness: Option<DVector<f64>>,
}

impl CopositivityVerdict {
    fn copositive() -> Self {
        Self {
            status: CopositivityStatus::Copositive,
            witness: None,
        }
    }

    fn unknown() -> Self {
        Self {
            status: CopositivityStatus::Unknown,
            witness: None,
        }
    }

    fn refuted(mut x: DVector<f64>) -> Self {
        let top = x.max();
        if top > 0.0 {
            x /= top;
        }
        Self {
            status: CopositivityStatus::NotCopositive,
            witness: Some(x),
        }
    }
}

pub fn is_psd(a: &SymMatrix, tol: f64) -> bool {
    linalg::min_eigenvalue(a.as_matrix()) >= -tol
}

pub fn is_entrywise_nonneg(a: &SymMatrix, tol: f64) -> bool {
    a.as_matrix().iter().all(|&v| v >= -tol)
}

/// Three-valued copositivity test.
///
/// Cheap sufficient conditions (nonnegative entries, PSD, the exact 2×2
/// criterion) are tried first. Otherwise `xᵀAx` is evaluated on the simplex
/// grid `{k/N : Σk = N}` for `N = 1, 2, 4, …, 2^depth`; any negative value
/// refutes copositivity. If the grid finds nothing, a PSD+NN decomposition
/// is attempted as a final sufficient certificate.
pub fn copositivity_verdict(a: &SymMatrix, depth: u32) -> CopositivityVerdict {
    let m = a.as_matrix();
    let n = a.dim();
    if n == 0 || is_entrywise_nonneg(a, 0.0) {
        return CopositivityVerdict::copositive();
    }
    if let Some(i) = (0..n).find(|&i| m[(i, i)] < 0.0) {
        let mut x = DVector::zeros(n);
        x[i] = 1.0;
        return CopositivityVerdict::refuted(x);
    }
    if n == 2 {
        return two_by_two(m);
    }
    if linalg::min_eigenvalue(m) >= 0.0 {
        return CopositivityVerdict::copositive();
    }
    for d in 0..=depth.min(62) {
        let grid = 1u64 << d;
        if grid_size(n, grid) > MAX_GRID_POINTS {
            break;
        }
        if let Some(x) = simplex_grid_negative(m, grid) {
            return CopositivityVerdict::refuted(x);
        }
    }
    match psd_plus_nn_membership(a) {
        Ok(true) => CopositivityVerdict::copositive(),
        _ => CopositivityVerdict::unknown(),
    }
}

/// `[[a, b], [b, c]]` with `a, c ≥ 0` is copositive iff `b ≥ −√(ac)`.
fn two_by_two(m: &DMatrix<f64>) -> CopositivityVerdict {
    let (a, b, c) = (m[(0, 0)], m[(0, 1)], m[(1, 1)]);
    if b >= 0.0 || b * b <= a * c {
        return CopositivityVerdict::copositive();
    }
    // minimise q(λ) = a λ² + 2bλ(1−λ) + c(1−λ)² on [0, 1]
    let curvature = a - 2.0 * b + c;
    let lam = if curvature > 0.0 {
        ((c - b) / curvature).clamp(0.0, 1.0)
    } else {
        0.5
    };
    CopositivityVerdict::refuted(DVector::from_vec(vec![lam, 1.0 - lam]))
}

fn grid_size(n: usize, grid: u64) -> u64 {
    // C(grid + n - 1, n - 1), saturating
    let mut acc: u128 = 1;
    let k = (n - 1) as u128;
    for i in 1..=k {
        acc = acc * (grid as u128 + i) / i;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Enumerates integer compositions `k` of `grid` into `n` parts and returns
/// the first with `kᵀAk` clearly negative.
fn simplex_grid_negative(m: &DMatrix<f64>, grid: u64) -> Option<DVector<f64>> {
    let n = m.nrows();
    let abs = m.abs();
    let mut k = vec![0u64; n];
    k[n - 1] = grid;
    loop {
        let x = DVector::from_iterator(n, k.iter().map(|&v| v as f64));
        let val = x.dot(&(m * &x));
        let mag = x.dot(&(&abs * &x));
        if val < -1e-12 * mag {
            return Some(x);
        }
        if !next_composition(&mut k) {
            return None;
        }
    }
}

/// Advances to the next composition in reverse-lexicographic order.
fn next_composition(k: &mut [u64]) -> bool {
    let n = k.len();
    // find the rightmost position (excluding the last) that can take one
    // unit from the tail
    let tail = k[n - 1];
    if tail > 0 {
        // move one unit from the last slot to the one before it
        if n < 2 {
            return false;
        }
        k[n - 2] += 1;
        k[n - 1] = tail - 1;
        return true;
    }
    // tail empty: find rightmost nonzero among 0..n-1, carry left
    let mut i = n - 1;
    loop {
        if i == 0 {
            return false;
        }
        i -= 1;
        if k[i] > 0 {
            break;
        }
    }
    if i == 0 {
        return false;
    }
    let moved = k[i];
    k[i] = 0;
    k[i - 1] += 1;
    k[n - 1] = moved - 1;
    true
}

/// Decides `A ∈ PSD + NN` by maximising `t` subject to `Q₁ − tI ⪰ 0`,
/// `Q₂ ≥ 0` entrywise, `Q₁ + Q₂ = A`; the cone contains `A` iff the optimal
/// `t` is nonnegative (within the feasibility tolerance).
pub fn psd_plus_nn_membership(a: &SymMatrix) -> Result<bool> {
    psd_plus_nn_membership_with(a, &ClarabelBackend, &SolverOptions::default(), DEFAULT_FEAS_TOL)
}

pub fn psd_plus_nn_membership_with(
    a: &SymMatrix,
    backend: &dyn ConicBackend,
    options: &SolverOptions,
    feas_tol: f64,
) -> Result<bool> {
    let n = a.dim();
    if n == 0 {
        return Ok(true);
    }
    let am = a.as_matrix();
    let mut sys = ConstraintSystem::new();
    let q1 = sys.add_block("Q1", BlockShape::Sym(n), ConeTag::Free);
    let q2 = sys.add_block("Q2", BlockShape::Sym(n), ConeTag::NonNeg);
    let t = sys.add_block("t", BlockShape::Scalar, ConeTag::Free);
    let q1e = q1.expr();
    let shifted = MatExpr::from_fn(n, n, |i, j| {
        let e = q1e.get(i, j).clone();
        if i == j {
            e.axpy(-1.0, &LinExpr::var(t.offset))
        } else {
            e
        }
    });
    sys.psd.push(PsdConstraint::new("Q1 - tI", shifted));
    for j in 0..n {
        for i in 0..=j {
            let e = LinExpr::from_terms(
                -am[(i, j)],
                [
                    (q1.index_of(i, j).unwrap(), 1.0),
                    (q2.index_of(i, j).unwrap(), 1.0),
                ],
            );
            sys.linear.push(LinearConstraint::eq(format!("sum[{i},{j}]"), e));
        }
    }
    let mut prog = sys.lower();
    prog.nonneg.push(LinExpr::from_terms(1.0, [(t.offset, -1.0)]));
    prog.objective = LinExpr::from_terms(0.0, [(t.offset, -1.0)]);
    let sol = backend.solve(&prog, options)?;
    match sol.status {
        BackendStatus::Solved => {
            let scale = linalg::max_abs(am).max(1.0);
            Ok(sol.x[t.offset] >= -feas_tol * scale)
        }
        BackendStatus::PrimalInfeasible => Ok(false),
        other => Err(Error::Solver(format!("{other:?}"))),
    }
}
