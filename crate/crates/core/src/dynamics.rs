//! The recurrent network, its ReLU nonlinearity, simulation and norms.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::MatExpr;
use crate::linalg;
use crate::program::{BlockShape, ConeTag, ConstraintSystem, PsdConstraint};
use crate::solver::{BackendStatus, ClarabelBackend, ConicBackend, SolverOptions};

/// Spectral radius must stay below `1 - SCHUR_TOL`.
pub const SCHUR_TOL: f64 = 1e-10;

/// Points on the upper half of the unit circle used to bracket the H∞ norm.
pub const FREQUENCY_GRID: usize = 1024;

/// `x(k+1) = Λ x(k) + W_in w(k) + v(k)`, `z(k) = W_out x(k)`,
/// `w(k) = relu(z(k) + s(k))` with `n` states and `m` neurons.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelData", into = "ModelData")]
pub struct RnnModel {
    lambda: DMatrix<f64>,
    win: DMatrix<f64>,
    wout: DMatrix<f64>,
}

/// Row-list form used for (de)serialisation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelData {
    pub lambda: Vec<Vec<f64>>,
    pub win: Vec<Vec<f64>>,
    pub wout: Vec<Vec<f64>>,
}

/// Recurrent weights of the six-neuron benchmark network; entries (1,3) and
/// (3,2) (1-based) receive the sweep parameters `a` and `b`.
pub const PAPER_WIN: [[f64; 6]; 6] = [
    [0.29, -0.04, 0.02, -0.35, -0.05, -0.12],
    [-0.29, -0.24, -0.01, 0.12, -0.13, 0.18],
    [-0.50, 0.0, 0.23, 0.40, -0.28, -0.08],
    [0.14, -0.27, -0.15, 0.13, -0.47, -0.28],
    [-0.10, -0.10, 0.08, 0.14, -0.22, 0.50],
    [-0.11, -0.28, -0.21, -0.14, -0.09, 0.20],
];

/// 0-based position in `W_in` receiving `a`.
pub const PAPER_A_ENTRY: (usize, usize) = (0, 2);
/// 0-based position in `W_in` receiving `b`.
pub const PAPER_B_ENTRY: (usize, usize) = (2, 1);

pub(crate) fn rows_to_matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != nc) {
        return Err(Error::Dimension(format!("{what}: rows have unequal lengths")));
    }
    Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

pub(crate) fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

impl TryFrom<ModelData> for RnnModel {
    type Error = Error;

    fn try_from(d: ModelData) -> Result<Self> {
        RnnModel::new(
            rows_to_matrix(&d.lambda, "lambda")?,
            rows_to_matrix(&d.win, "win")?,
            rows_to_matrix(&d.wout, "wout")?,
        )
    }
}

impl From<RnnModel> for ModelData {
    fn from(m: RnnModel) -> Self {
        ModelData {
            lambda: matrix_to_rows(&m.lambda),
            win: matrix_to_rows(&m.win),
            wout: matrix_to_rows(&m.wout),
        }
    }
}

impl RnnModel {
    pub fn new(lambda: DMatrix<f64>, win: DMatrix<f64>, wout: DMatrix<f64>) -> Result<Self> {
        let n = lambda.nrows();
        if lambda.ncols() != n {
            return Err(Error::Dimension(format!(
                "lambda is {}x{}, expected square",
                n,
                lambda.ncols()
            )));
        }
        let m = win.ncols();
        if win.nrows() != n {
            return Err(Error::Dimension(format!(
                "win has {} rows, expected {n}",
                win.nrows()
            )));
        }
        if wout.shape() != (m, n) {
            return Err(Error::Dimension(format!(
                "wout is {}x{}, expected {m}x{n}",
                wout.nrows(),
                wout.ncols()
            )));
        }
        if lambda.iter().chain(win.iter()).chain(wout.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("model has non-finite entries".into()));
        }
        let rho = linalg::spectral_radius(&lambda);
        if rho >= 1.0 - SCHUR_TOL {
            return Err(Error::Unstable(rho));
        }
        Ok(Self { lambda, win, wout })
    }

    /// The six-neuron benchmark: `Λ = 0`, `W_out = I`, `W_in` from
    /// [`PAPER_WIN`] with `a` added at (1,3) and `b` at (3,2).
    pub fn paper_example(a: f64, b: f64) -> Self {
        let mut win = DMatrix::from_fn(6, 6, |i, j| PAPER_WIN[i][j]);
        win[PAPER_A_ENTRY] += a;
        win[PAPER_B_ENTRY] += b;
        Self::new(DMatrix::zeros(6, 6), win, DMatrix::identity(6, 6))
            .expect("benchmark model is well formed")
    }

    pub fn lambda(&self) -> &DMatrix<f64> {
        &self.lambda
    }

    pub fn win(&self) -> &DMatrix<f64> {
        &self.win
    }

    pub fn wout(&self) -> &DMatrix<f64> {
        &self.wout
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.lambda.nrows()
    }

    /// Number of neurons.
    pub fn m(&self) -> usize {
        self.win.ncols()
    }

    /// Largest absolute entry over all three matrices.
    pub fn data_scale(&self) -> f64 {
        linalg::max_abs(&self.lambda)
            .max(linalg::max_abs(&self.win))
            .max(linalg::max_abs(&self.wout))
    }

    /// Realisation `(Λ, W_in D⁻¹, D W_out)` of `D G₀ D⁻¹` for a positive
    /// diagonal `D = diag(d)`.
    pub fn diagonally_scaled(&self, d: &[f64]) -> Result<Self> {
        if d.len() != self.m() {
            return Err(Error::Dimension(format!(
                "scaling has {} entries, expected {}",
                d.len(),
                self.m()
            )));
        }
        if d.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::InvalidParameter("scaling must be positive".into()));
        }
        let dv = DVector::from_column_slice(d);
        let win = DMatrix::from_fn(self.n(), self.m(), |i, j| self.win[(i, j)] / dv[j]);
        let wout = DMatrix::from_fn(self.m(), self.n(), |i, j| dv[i] * self.wout[(i, j)]);
        Self::new(self.lambda.clone(), win, wout)
    }

    /// `W_out (e^{jθ} I − Λ)⁻¹ W_in`
    pub fn frequency_response(&self, theta: f64) -> DMatrix<Complex64> {
        let n = self.n();
        let z = Complex64::from_polar(1.0, theta);
        let zi_minus_a = DMatrix::from_fn(n, n, |i, j| {
            let d = if i == j { z } else { Complex64::new(0.0, 0.0) };
            d - Complex64::new(self.lambda[(i, j)], 0.0)
        });
        let b = self.win.map(|v| Complex64::new(v, 0.0));
        let c = self.wout.map(|v| Complex64::new(v, 0.0));
        let x = zi_minus_a
            .lu()
            .solve(&b)
            .expect("resolvent is invertible on the unit circle for a Schur-stable Λ");
        c * x
    }

    fn gain_at(&self, theta: f64) -> f64 {
        let g = self.frequency_response(theta);
        if g.is_empty() {
            return 0.0;
        }
        g.singular_values().iter().copied().fold(0.0, f64::max)
    }

    fn transfer_is_zero(&self) -> bool {
        let scale = 1.0 + self.data_scale();
        let mut ak_b = self.win.clone();
        for _ in 0..self.n().max(1) {
            if linalg::max_abs(&(&self.wout * &ak_b)) > 1e-14 * scale {
                return false;
            }
            ak_b = &self.lambda * ak_b;
        }
        true
    }
}

/// A finite sequence of equally sized real vectors indexed from `k = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal {
    dim: usize,
    samples: Vec<DVector<f64>>,
}

impl Signal {
    pub fn new(dim: usize, samples: Vec<DVector<f64>>) -> Result<Self> {
        if let Some(k) = samples.iter().position(|s| s.len() != dim) {
            return Err(Error::Dimension(format!(
                "sample {k} has dimension {}, expected {dim}",
                samples[k].len()
            )));
        }
        Ok(Self { dim, samples })
    }

    pub fn zeros(dim: usize, len: usize) -> Self {
        Self {
            dim,
            samples: vec![DVector::zeros(dim); len],
        }
    }

    /// `e_index` at time 0, zero afterwards.
    pub fn impulse(dim: usize, index: usize, len: usize) -> Self {
        let mut s = Self::zeros(dim, len);
        if len > 0 {
            s.samples[0][index] = 1.0;
        }
        s
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[DVector<f64>] {
        &self.samples
    }

    pub fn at(&self, k: usize) -> &DVector<f64> {
        &self.samples[k]
    }

    /// Stacks two signals of equal length sample by sample.
    pub fn stack(&self, other: &Signal) -> Result<Signal> {
        if self.len() != other.len() {
            return Err(Error::Dimension(format!(
                "cannot stack signals of length {} and {}",
                self.len(),
                other.len()
            )));
        }
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| {
                let mut v = DVector::zeros(a.len() + b.len());
                v.rows_mut(0, a.len()).copy_from(a);
                v.rows_mut(a.len(), b.len()).copy_from(b);
                v
            })
            .collect();
        Signal::new(self.dim + other.dim, samples)
    }
}

/// State, output and activation signals of one simulation.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub x: Signal,
    pub z: Signal,
    pub w: Signal,
}

pub fn relu(xi: &DVector<f64>) -> DVector<f64> {
    xi.map(|v| v.max(0.0))
}

/// Checks `ζ(ζ − ξ) = 0, ζ ≥ 0, ζ − ξ ≥ 0` entrywise up to `tol`; the three
/// relations hold exactly when `ζ = relu(ξ)`.
pub fn relu_triple_satisfied(xi: &DVector<f64>, zeta: &DVector<f64>, tol: f64) -> Result<bool> {
    if xi.len() != zeta.len() {
        return Err(Error::Dimension(format!(
            "xi has {} entries, zeta has {}",
            xi.len(),
            zeta.len()
        )));
    }
    Ok(xi.iter().zip(zeta.iter()).all(|(&x, &z)| {
        (z * (z - x)).abs() <= tol && z >= -tol && z - x >= -tol
    }))
}

/// Runs the network from `x(0) = 0` for `horizon` steps, producing
/// `x(k), z(k), w(k)` for `k = 0..horizon`.
pub fn simulate(model: &RnnModel, s: &Signal, v: &Signal, horizon: usize) -> Result<Trajectory> {
    let (n, m) = (model.n(), model.m());
    if s.dim() != m {
        return Err(Error::Dimension(format!("s has dimension {}, expected {m}", s.dim())));
    }
    if v.dim() != n {
        return Err(Error::Dimension(format!("v has dimension {}, expected {n}", v.dim())));
    }
    if s.len() < horizon || v.len() < horizon {
        return Err(Error::Dimension(format!(
            "inputs cover {} and {} steps, horizon is {horizon}",
            s.len(),
            v.len()
        )));
    }
    let mut xs = Vec::with_capacity(horizon);
    let mut zs = Vec::with_capacity(horizon);
    let mut ws = Vec::with_capacity(horizon);
    let mut x = DVector::zeros(n);
    for k in 0..horizon {
        let z = model.wout() * &x;
        let w = relu(&(&z + s.at(k)));
        let next = model.lambda() * &x + model.win() * &w + v.at(k);
        xs.push(std::mem::replace(&mut x, next));
        zs.push(z);
        ws.push(w);
    }
    Ok(Trajectory {
        x: Signal { dim: n, samples: xs },
        z: Signal { dim: m, samples: zs },
        w: Signal { dim: m, samples: ws },
    })
}

pub fn l2_norm(w: &Signal) -> f64 {
    w.samples()
        .iter()
        .map(|s| s.norm_squared())
        .sum::<f64>()
        .sqrt()
}

/// Peak of `σ_max(G₀(e^{jθ}))` over `points` evenly spaced θ ∈ [0, π],
/// refined by golden-section search around the best grid point. Always a
/// lower bound on the H∞ norm.
pub fn frequency_peak(model: &RnnModel, points: usize) -> (f64, f64) {
    let points = points.max(2);
    let step = std::f64::consts::PI / (points - 1) as f64;
    let (best_k, best) = (0..points)
        .map(|k| (k, model.gain_at(k as f64 * step)))
        .fold((0, f64::NEG_INFINITY), |acc, (k, g)| if g > acc.1 { (k, g) } else { acc });
    let mut lo = (best_k as f64 - 1.0).max(0.0) * step;
    let mut hi = (best_k as f64 + 1.0).min((points - 1) as f64) * step;
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - ratio * (hi - lo);
    let mut d = lo + ratio * (hi - lo);
    let (mut fc, mut fd) = (model.gain_at(c), model.gain_at(d));
    for _ in 0..60 {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - ratio * (hi - lo);
            fc = model.gain_at(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + ratio * (hi - lo);
            fd = model.gain_at(d);
        }
    }
    let theta = 0.5 * (lo + hi);
    let refined = model.gain_at(theta);
    if refined > best {
        (refined, theta)
    } else {
        (best, best_k as f64 * step)
    }
}

/// Whether the bounded-real LMI certifies `‖G₀‖ < gamma`:
/// there is `P ⪰ 0` with
/// `[[ΛᵀPΛ − P + W_outᵀW_out/γ², ΛᵀPW_in], [W_inᵀPΛ, W_inᵀPW_in − I]] ≺ 0`.
fn bounded_real_feasible(
    model: &RnnModel,
    gamma: f64,
    backend: &dyn ConicBackend,
    options: &SolverOptions,
) -> Result<bool> {
    let (n, m) = (model.n(), model.m());
    let mut sys = ConstraintSystem::new();
    let p = sys.add_block("P", BlockShape::Sym(n), ConeTag::Psd).expr();
    let t = sys.add_block("t", BlockShape::Scalar, ConeTag::Free);
    let a = model.lambda();
    let b = model.win();
    let c = model.wout();
    let ctc = c.transpose() * c / (gamma * gamma);
    let top_left = p
        .congruence(a)
        .sub(&p)
        .add(&MatExpr::from_const(&ctc));
    let top_right = MatExpr::lmul(&a.transpose(), &MatExpr::rmul(&p, b));
    let bottom_left = top_right.transpose();
    let bottom_right = p.congruence(b).sub(&MatExpr::identity(m, 1.0));
    let lmi = MatExpr::blocks(&[
        vec![Some(&top_left), Some(&top_right)],
        vec![Some(&bottom_left), Some(&bottom_right)],
    ]);
    // −lmi − t I ⪰ 0, maximise t ≤ 1
    let tid = t.offset;
    let shifted = MatExpr::from_fn(n + m, n + m, |i, j| {
        let e = lmi.get(i, j).scale(-1.0);
        if i == j {
            e.axpy(-1.0, &crate::expr::LinExpr::var(tid))
        } else {
            e
        }
    });
    sys.psd.push(PsdConstraint::new("brl", shifted));
    let mut prog = sys.lower();
    prog.nonneg
        .push(crate::expr::LinExpr::from_terms(1.0, [(tid, -1.0)]));
    prog.objective = crate::expr::LinExpr::from_terms(0.0, [(tid, -1.0)]);
    let sol = backend.solve(&prog, options)?;
    match sol.status {
        BackendStatus::Solved => Ok(sol.x[tid] > 1e-9),
        // reduced-accuracy answers near the boundary count as "not certified"
        _ => Ok(false),
    }
}

/// l2-induced (H∞) norm of `G₀ = (Λ, W_in, W_out, 0)` to absolute accuracy
/// `tol`: a frequency grid gives a lower bracket, bounded-real LMI
/// feasibility gives the upper one, and bisection closes the gap.
pub fn hinf_norm(model: &RnnModel, tol: f64) -> Result<f64> {
    hinf_norm_with(model, tol, &ClarabelBackend, &SolverOptions::default())
}

pub fn hinf_norm_with(
    model: &RnnModel,
    tol: f64,
    backend: &dyn ConicBackend,
    options: &SolverOptions,
) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    if model.transfer_is_zero() {
        return Ok(0.0);
    }
    let (peak, _) = frequency_peak(model, FREQUENCY_GRID);
    let mut lo = peak;
    let mut hi = peak * (1.0 + 1e-3) + tol;
    let mut expansions = 0;
    while !bounded_real_feasible(model, hi, backend, options)? {
        lo = hi;
        hi *= 2.0;
        expansions += 1;
        if expansions > 60 {
            return Err(Error::Bisection(expansions));
        }
    }
    const MAX_ITER: usize = 200;
    let mut iter = 0;
    while hi - lo > tol {
        iter += 1;
        if iter > MAX_ITER {
            return Err(Error::Bisection(MAX_ITER));
        }
        let mid = 0.5 * (lo + hi);
        if bounded_real_feasible(model, mid, backend, options)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Largest observed `‖[z; w]‖₂ / ‖[s; v]‖₂` over random input pairs. Even
/// trials draw i.i.d. standard normal samples, odd trials their absolute
/// values. Deterministic for a given seed.
pub fn empirical_gain_lower_bound(
    model: &RnnModel,
    trials: usize,
    horizon: usize,
    seed: u64,
) -> Result<f64> {
    if trials == 0 || horizon == 0 {
        return Err(Error::InvalidParameter(
            "trials and horizon must be positive".into(),
        ));
    }
    let (n, m) = (model.n(), model.m());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0_f64;
    for trial in 0..trials {
        let nonneg = trial % 2 == 1;
        let (s, v) = loop {
            let mut draw = |dim: usize| -> Signal {
                let samples = (0..horizon)
                    .map(|_| {
                        DVector::from_fn(dim, |_, _| {
                            let x: f64 = rng.sample(StandardNormal);
                            if nonneg {
                                x.abs()
                            } else {
                                x
                            }
                        })
                    })
                    .collect();
                Signal { dim, samples }
            };
            let s = draw(m);
            let v = draw(n);
            if l2_norm(&s) > 0.0 || l2_norm(&v) > 0.0 {
                break (s, v);
            }
        };
        let traj = simulate(model, &s, &v, horizon)?;
        let out = l2_norm(&traj.z.stack(&traj.w)?);
        let inp = l2_norm(&s.stack(&v)?);
        best = best.max(out / inp);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(l: f64, b: f64, c: f64) -> RnnModel {
        RnnModel::new(
            DMatrix::from_element(1, 1, l),
            DMatrix::from_element(1, 1, b),
            DMatrix::from_element(1, 1, c),
        )
        .unwrap()
    }

    #[test]
    fn relu_cases() {
        let v = DVector::from_vec(vec![-1.0, 2.0, 0.0]);
        assert_eq!(relu(&v), DVector::from_vec(vec![0.0, 2.0, 0.0]));
        let neg = DVector::from_vec(vec![-0.1, -5.0]);
        assert_eq!(relu(&neg), DVector::zeros(2));
        let pos = DVector::from_vec(vec![0.3, 4.0]);
        assert_eq!(relu(&pos), pos);
    }

    #[test]
    fn triple_cases() {
        let v = |x: f64| DVector::from_element(1, x);
        assert!(relu_triple_satisfied(&v(-1.0), &v(0.0), 0.0).unwrap());
        assert!(relu_triple_satisfied(&v(2.0), &v(2.0), 0.0).unwrap());
        assert!(!relu_triple_satisfied(&v(1.0), &v(0.5), 1e-9).unwrap());
        assert!(relu_triple_satisfied(&v(1.0), &DVector::zeros(2), 0.0).is_err());
    }

    #[test]
    fn rejects_unstable_and_misshaped() {
        let unstable = RnnModel::new(
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
        );
        assert!(matches!(unstable, Err(Error::Unstable(_))));
        let bad = RnnModel::new(DMatrix::zeros(2, 2), DMatrix::zeros(2, 1), DMatrix::zeros(2, 2));
        assert!(matches!(bad, Err(Error::Dimension(_))));
    }

    #[test]
    fn paper_model_first_row() {
        let m = RnnModel::paper_example(0.0, 0.0);
        let row: Vec<f64> = m.win().row(0).iter().copied().collect();
        assert_eq!(row, vec![0.29, -0.04, 0.02, -0.35, -0.05, -0.12]);
        let shifted = RnnModel::paper_example(1.0, 1.4);
        assert_eq!(shifted.win()[(0, 2)], 0.02 + 1.0);
        assert_eq!(shifted.win()[(2, 1)], 1.4);
    }

    #[test]
    fn decoupled_chain_impulse() {
        let model = RnnModel::new(DMatrix::zeros(2, 2), DMatrix::zeros(2, 2), DMatrix::identity(2, 2)).unwrap();
        let v = Signal::impulse(2, 0, 3);
        let s = Signal::zeros(2, 3);
        let t = simulate(&model, &s, &v, 3).unwrap();
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        assert_eq!(t.x.at(0), &DVector::zeros(2));
        assert_eq!(t.x.at(1), &e1);
        assert_eq!(t.z.at(1), &e1);
        assert_eq!(t.w.at(1), &e1);
    }

    #[test]
    fn negative_bias_stays_at_rest() {
        let model = scalar(0.0, 1.0, 1.0);
        let s = Signal::new(1, vec![DVector::from_element(1, -1.0), DVector::zeros(1), DVector::zeros(1)]).unwrap();
        let v = Signal::zeros(1, 3);
        let t = simulate(&model, &s, &v, 3).unwrap();
        assert!(t.x.samples().iter().chain(t.w.samples()).all(|x| x[0] == 0.0));
    }

    #[test]
    fn simulate_rejects_bad_inputs() {
        let model = scalar(0.0, 1.0, 1.0);
        assert!(simulate(&model, &Signal::zeros(2, 3), &Signal::zeros(1, 3), 3).is_err());
        assert!(simulate(&model, &Signal::zeros(1, 2), &Signal::zeros(1, 3), 3).is_err());
    }

    #[test]
    fn l2_norm_cases() {
        assert_eq!(l2_norm(&Signal::impulse(3, 1, 4)), 1.0);
        let s = Signal::new(1, vec![DVector::from_element(1, 3.0), DVector::from_element(1, 4.0)]).unwrap();
        assert_eq!(l2_norm(&s), 5.0);
        let scaled = Signal::new(1, s.samples().iter().map(|x| x * -2.5).collect()).unwrap();
        assert!((l2_norm(&scaled) - 12.5).abs() < 1e-12);
        assert_eq!(l2_norm(&Signal::zeros(2, 5)), 0.0);
    }

    #[test]
    fn hinf_scalar_first_order() {
        let g = hinf_norm(&scalar(0.5, 1.0, 1.0), 1e-6).unwrap();
        assert!((g - 2.0).abs() < 1e-5, "{g}");
    }

    #[test]
    fn hinf_zero_input_matrix() {
        let model = RnnModel::new(DMatrix::from_element(2, 2, 0.1), DMatrix::zeros(2, 3), DMatrix::from_element(3, 2, 1.0)).unwrap();
        assert_eq!(hinf_norm(&model, 1e-6).unwrap(), 0.0);
    }

    #[test]
    fn hinf_rejects_bad_tol() {
        assert!(hinf_norm(&scalar(0.5, 1.0, 1.0), 0.0).is_err());
    }

    #[test]
    fn empirical_gain_determinism() {
        let model = RnnModel::paper_example(0.0, 0.0);
        let a = empirical_gain_lower_bound(&model, 6, 30, 7).unwrap();
        let b = empirical_gain_lower_bound(&model, 6, 30, 7).unwrap();
        assert_eq!(a, b);
        assert!(a > 0.0);
        assert!(empirical_gain_lower_bound(&model, 0, 30, 7).is_err());
    }

    #[test]
    fn empirical_gain_without_feedback() {
        // W_in = W_out = 0: z ≡ 0 and w = relu(s), so the gain is at most 1
        let model = RnnModel::new(DMatrix::zeros(2, 2), DMatrix::zeros(2, 2), DMatrix::zeros(2, 2)).unwrap();
        let g = empirical_gain_lower_bound(&model, 10, 20, 1).unwrap();
        assert!((0.0..=1.0).contains(&g));
    }
}
