//! Assembly, solution and independent verification of the stability LMI
//!
//! ```text
//! blockdiag(−P, −S) + Aᵀ blockdiag(P, S) A + Cᵀ Π C ≺ 0,
//! A = [[Λ, W_in], [W_out, 0]],   C = [[W_out, 0], [0, I]],
//! ```
//!
//! with `P ⪰ 0`, `S` positive diagonal and `Π` from a multiplier family.
//! Feasibility certifies finite-gain l2 stability of the network from
//! `[s; v]` to `[z; w]`.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::RnnModel;
use crate::error::{Error, Result};
use crate::expr::{LinExpr, MatExpr};
use crate::linalg;
use crate::multipliers::{
    cop0_family, copositive_family, family_sum, polytopic_family_with, zames_falb_family,
    MultiplierFamily, DEFAULT_VERTEX_CAP,
};
use crate::program::{BlockShape, ConeTag, ConstraintSystem, VarBlock};
use crate::solver::{BackendStatus, ClarabelBackend, ConicBackend, SolverOptions};

pub const DEFAULT_S_MIN: f64 = 1e-6;
pub const DEFAULT_VERIFY_TOL: f64 = 1e-8;

/// Strictness margin used when none is configured:
/// `1e-6 · (1 + largest absolute model entry)`.
pub fn default_eps(model: &RnnModel) -> f64 {
    1e-6 * (1.0 + model.data_scale())
}

#[allow(non_camel_case_types)]
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TestId {
    /// Small gain: `Π = 0`, `S = I`.
    SG,
    /// Test I, scaled small gain: `Π = 0`.
    SSG,
    /// Test II, l2+ scaled small gain: `Π` from the `cop0` class.
    L2P_SSG,
    /// Test III: Zames-Falb plus polytopic bounding.
    SSG_ZF_POL,
    /// Test IV: Zames-Falb plus polytopic bounding plus copositive.
    SSG_ZF_POL_COP,
}

impl TestId {
    pub const ALL: [TestId; 5] = [
        TestId::SG,
        TestId::SSG,
        TestId::L2P_SSG,
        TestId::SSG_ZF_POL,
        TestId::SSG_ZF_POL_COP,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestId::SG => "SG",
            TestId::SSG => "SSG",
            TestId::L2P_SSG => "L2P_SSG",
            TestId::SSG_ZF_POL => "SSG_ZF_POL",
            TestId::SSG_ZF_POL_COP => "SSG_ZF_POL_COP",
        }
    }

    /// Roman-numeral label used on the command line (`SG` has none).
    pub fn short(self) -> &'static str {
        match self {
            TestId::SG => "SG",
            TestId::SSG => "I",
            TestId::L2P_SSG => "II",
            TestId::SSG_ZF_POL => "III",
            TestId::SSG_ZF_POL_COP => "IV",
        }
    }

    /// Whether `S` is frozen to the identity.
    pub fn fixed_scaling(self) -> bool {
        self == TestId::SG
    }

    pub fn family(self, m: usize) -> Result<MultiplierFamily> {
        self.family_with(m, 0.0, DEFAULT_VERTEX_CAP)
    }

    pub fn family_with(self, m: usize, vertex_margin: f64, vertex_cap: usize) -> Result<MultiplierFamily> {
        match self {
            TestId::SG | TestId::SSG => Ok(MultiplierFamily::zero(m)),
            TestId::L2P_SSG => cop0_family(m),
            TestId::SSG_ZF_POL => family_sum(&[
                zames_falb_family(m, 0.0, 1.0)?,
                polytopic_family_with(m, 0.0, 1.0, vertex_margin, vertex_cap)?,
            ]),
            TestId::SSG_ZF_POL_COP => family_sum(&[
                zames_falb_family(m, 0.0, 1.0)?,
                polytopic_family_with(m, 0.0, 1.0, vertex_margin, vertex_cap)?,
                copositive_family(m)?,
            ]),
        }
    }

    /// Pairs `(weaker, stronger)` where feasibility of the first implies
    /// feasibility of the second.
    pub const INCLUSIONS: [(TestId, TestId); 3] = [
        (TestId::SSG, TestId::L2P_SSG),
        (TestId::SSG, TestId::SSG_ZF_POL),
        (TestId::SSG_ZF_POL, TestId::SSG_ZF_POL_COP),
    ];
}

impl fmt::Display for TestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        TestId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(t) || id.short().eq_ignore_ascii_case(t))
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown test `{t}` (expected SG, I, II, III, IV or SSG, L2P_SSG, SSG_ZF_POL, SSG_ZF_POL_COP)"
                ))
            })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyOptions {
    /// Strictness margin; `None` uses [`default_eps`].
    pub eps: Option<f64>,
    pub s_min: f64,
    pub solver: SolverOptions,
    pub verify_tol: f64,
    /// Inner margin on the polytopic vertex LMIs.
    pub vertex_margin: f64,
    pub vertex_cap: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            eps: None,
            s_min: DEFAULT_S_MIN,
            solver: SolverOptions::default(),
            verify_tol: DEFAULT_VERIFY_TOL,
            vertex_margin: 0.0,
            vertex_cap: DEFAULT_VERTEX_CAP,
        }
    }
}

impl CertifyOptions {
    pub fn eps_for(&self, model: &RnnModel) -> f64 {
        self.eps.unwrap_or_else(|| default_eps(model))
    }
}

/// How `S` enters the problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Scaling {
    /// Decision variable with `S_ii ≥ s_min`.
    Free { s_min: f64 },
    /// Frozen to the identity (plain small gain).
    Identity,
}

/// An assembled instance: `P`, optionally `S`, the family blocks, and the
/// LMI map that must satisfy `lmi(x) ⪯ −eps·I`.
#[derive(Clone, Debug)]
pub struct FeasibilityProblem {
    pub n: usize,
    pub m: usize,
    pub system: ConstraintSystem,
    pub lmi: MatExpr,
    pub eps: f64,
    pub scaling: Scaling,
    pub p_block: VarBlock,
    pub s_block: Option<VarBlock>,
    /// Index of the first family variable in the problem vector.
    pub family_offset: usize,
    pub family_vars: usize,
}

impl FeasibilityProblem {
    pub fn num_vars(&self) -> usize {
        self.system.num_vars()
    }

    /// Decision variables other than `P` and `S`.
    pub fn family_assignment<'a>(&self, x: &'a [f64]) -> &'a [f64] {
        &x[self.family_offset..self.family_offset + self.family_vars]
    }
}

fn lmi_constant_factors(model: &RnnModel) -> (DMatrix<f64>, DMatrix<f64>) {
    let (n, m) = (model.n(), model.m());
    let mut a = DMatrix::zeros(n + m, n + m);
    a.view_mut((0, 0), (n, n)).copy_from(model.lambda());
    a.view_mut((0, n), (n, m)).copy_from(model.win());
    a.view_mut((n, 0), (m, n)).copy_from(model.wout());
    let mut c = DMatrix::zeros(2 * m, n + m);
    c.view_mut((0, 0), (m, n)).copy_from(model.wout());
    c.view_mut((m, n), (m, m)).copy_from(&DMatrix::identity(m, m));
    (a, c)
}

/// Builds the problem with `S` free and `S_ii ≥ s_min`.
pub fn assemble(model: &RnnModel, family: &MultiplierFamily, eps: f64, s_min: f64) -> Result<FeasibilityProblem> {
    assemble_with(model, family, eps, Scaling::Free { s_min })
}

pub fn assemble_with(
    model: &RnnModel,
    family: &MultiplierFamily,
    eps: f64,
    scaling: Scaling,
) -> Result<FeasibilityProblem> {
    let (n, m) = (model.n(), model.m());
    if family.m != m {
        return Err(Error::Dimension(format!(
            "family is for m = {}, model has m = {m}",
            family.m
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    if let Scaling::Free { s_min } = scaling {
        if !(s_min > 0.0 && s_min < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "s_min must lie in (0, 1), got {s_min}"
            )));
        }
    }
    let mut sys = ConstraintSystem::new();
    let p_block = sys.add_block("P", BlockShape::Sym(n), ConeTag::Psd);
    let (s_block, s_expr) = match scaling {
        Scaling::Free { s_min } => {
            let b = sys.add_block("S", BlockShape::Diag(m), ConeTag::DiagPositive { floor: s_min });
            let e = b.expr();
            (Some(b), e)
        }
        Scaling::Identity => (None, MatExpr::identity(m, 1.0)),
    };
    let family_offset = sys.absorb(&family.system, "");
    let pi = family.pi.shift(family_offset);

    let (a, c) = lmi_constant_factors(model);
    let p = p_block.expr();
    let ps = MatExpr::block_diag(&[&p, &s_expr]);
    let lmi = ps
        .congruence(&a)
        .sub(&ps)
        .add(&pi.congruence(&c))
        .sym_part();
    Ok(FeasibilityProblem {
        n,
        m,
        system: sys,
        lmi,
        eps,
        scaling,
        p_block,
        s_block,
        family_offset,
        family_vars: family.num_vars(),
    })
}

/// Row-major dense matrix as stored in certificate files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl From<&DMatrix<f64>> for DenseMatrix {
    fn from(m: &DMatrix<f64>) -> Self {
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data: (0..m.nrows())
                .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
                .map(|(i, j)| m[(i, j)])
                .collect(),
        }
    }
}

impl TryFrom<&DenseMatrix> for DMatrix<f64> {
    type Error = Error;

    fn try_from(d: &DenseMatrix) -> Result<Self> {
        if d.data.len() != d.rows * d.cols {
            return Err(Error::Dimension(format!(
                "matrix declares {}x{} but holds {} entries",
                d.rows,
                d.cols,
                d.data.len()
            )));
        }
        Ok(DMatrix::from_row_slice(d.rows, d.cols, &d.data))
    }
}

mod dense_serde {
    use super::DenseMatrix;
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        DenseMatrix::from(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let dm = DenseMatrix::deserialize(d)?;
        DMatrix::try_from(&dm).map_err(serde::de::Error::custom)
    }
}

/// Numeric solution of a [`FeasibilityProblem`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    #[serde(with = "dense_serde")]
    pub p: DMatrix<f64>,
    /// Diagonal of `S`.
    pub s: Vec<f64>,
    /// Flat values of the family's decision variables.
    pub multiplier_assignment: Vec<f64>,
    /// Block names of the family, for traceability.
    pub multiplier_blocks: Vec<String>,
    #[serde(with = "dense_serde")]
    pub pi: DMatrix<f64>,
    /// `−λ_max` of the assembled LMI.
    pub margin: f64,
    pub eps: f64,
    /// `None` when `S` was frozen to the identity.
    pub s_min: Option<f64>,
    pub solve_ms: f64,
}

impl Certificate {
    pub fn s_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.s))
    }
}

/// Self-contained certificate file: the model and test it was issued for
/// plus the numeric certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoredCertificate {
    pub test: TestId,
    pub model: RnnModel,
    pub certificate: Certificate,
}

impl StoredCertificate {
    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Json {
            path: path.into(),
            source: e,
        })?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.into(),
            source: e,
        })
    }

    /// Rebuilds the family from `test` and re-runs [`verify_certificate`].
    pub fn verify(&self, tol: f64) -> Result<VerificationReport> {
        let family = self.test.family(self.model.m())?;
        let report = verify_certificate(&self.model, &family, &self.certificate, tol)?;
        // Π stored in the file must match the one implied by the assignment
        let pi = family.pi_value(&self.certificate.multiplier_assignment);
        if pi.shape() != self.certificate.pi.shape() || (pi - &self.certificate.pi).amax() > tol {
            return Ok(VerificationReport {
                verified: false,
                ..report
            });
        }
        Ok(report)
    }
}

#[derive(Clone, Debug)]
pub enum Outcome {
    Feasible(Box<Certificate>),
    Infeasible {
        /// Best achievable margin `t` in `lmi ⪯ −t·I`, below `eps`.
        best_margin: f64,
    },
    SolverFailure(String),
}

/// Numeric LMI `blockdiag(−P,−S) + Aᵀ blockdiag(P,S) A + Cᵀ Π C`.
pub fn lmi_value(model: &RnnModel, p: &DMatrix<f64>, s: &DMatrix<f64>, pi: &DMatrix<f64>) -> DMatrix<f64> {
    let (a, c) = lmi_constant_factors(model);
    let ps = linalg::block_diag(&[p, s]);
    let val = a.transpose() * &ps * &a - &ps + c.transpose() * pi * &c;
    linalg::symmetrize(&val)
}

pub fn solve(problem: &FeasibilityProblem, options: &SolverOptions) -> Result<Outcome> {
    solve_with(problem, options, &ClarabelBackend)
}

/// Maximises `t` subject to `lmi ⪯ −t·I`, `t ≤ 1` and, when `S` is free,
/// `S_ii ≤ 1`. The problem is homogeneous in `(P, S, Π)`, so the upper bound
/// on `S` only fixes the scale of the margin. `t* ≥ eps` yields a
/// certificate, a solved `t* < eps` is reported infeasible, and any other
/// backend termination is a solver failure.
pub fn solve_with(problem: &FeasibilityProblem, options: &SolverOptions, backend: &dyn ConicBackend) -> Result<Outcome> {
    let d = problem.n + problem.m;
    let mut prog = problem.system.lower();
    let t = prog.add_var();
    let neg = MatExpr::from_fn(d, d, |i, j| {
        let e = problem.lmi.get(i, j).scale(-1.0);
        if i == j {
            e.axpy(-1.0, &LinExpr::var(t))
        } else {
            e
        }
    });
    prog.psd.push(neg);
    prog.nonneg.push(LinExpr::from_terms(1.0, [(t, -1.0)]));
    if let Some(sb) = &problem.s_block {
        for i in 0..problem.m {
            let k = sb.index_of(i, i).expect("diagonal index");
            prog.nonneg.push(LinExpr::from_terms(1.0, [(k, -1.0)]));
        }
    }
    prog.objective = LinExpr::from_terms(0.0, [(t, -1.0)]);

    let sol = match backend.solve(&prog, options) {
        Ok(sol) => sol,
        Err(Error::Solver(msg)) => return Ok(Outcome::SolverFailure(msg)),
        Err(e) => return Err(e),
    };
    match sol.status {
        BackendStatus::Solved => {
            let t_star = sol.x[t];
            if t_star < problem.eps {
                return Ok(Outcome::Infeasible { best_margin: t_star });
            }
            let x = &sol.x[..problem.num_vars()];
            let p = problem.p_block.value(x);
            let s_diag: Vec<f64> = match &problem.s_block {
                Some(b) => (0..problem.m).map(|i| x[b.index_of(i, i).unwrap()]).collect(),
                None => vec![1.0; problem.m],
            };
            let lmi = problem.lmi.eval(x);
            let margin = -linalg::max_eigenvalue(&lmi);
            let fam: Vec<String> = problem
                .system
                .blocks
                .iter()
                .filter(|b| b.offset >= problem.family_offset)
                .map(|b| b.name.clone())
                .collect();
            let pi_x = problem.family_assignment(x).to_vec();
            let s_min = match problem.scaling {
                Scaling::Free { s_min } => Some(s_min),
                Scaling::Identity => None,
            };
            // Π is left empty here; callers holding the family fill it in.
            Ok(Outcome::Feasible(Box::new(Certificate {
                p,
                s: s_diag,
                multiplier_assignment: pi_x,
                multiplier_blocks: fam,
                pi: DMatrix::zeros(0, 0),
                margin,
                eps: problem.eps,
                s_min,
                solve_ms: sol.elapsed.as_secs_f64() * 1e3,
            })))
        }
        BackendStatus::PrimalInfeasible => Ok(Outcome::Infeasible {
            best_margin: f64::NEG_INFINITY,
        }),
        BackendStatus::DualInfeasible => Ok(Outcome::SolverFailure("DualInfeasible".into())),
        BackendStatus::Other(s) => Ok(Outcome::SolverFailure(s)),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub verified: bool,
    pub lmi_max_eig: f64,
    pub worst_constraint_violation: f64,
}

/// Re-checks a certificate against the model and family with plain
/// eigenvalue computations: `λ_max(lmi) ≤ −eps/2`, `P ⪰ −tol`,
/// `S_ii ≥ s_min − tol`, and every family block cone and constraint within
/// `tol`.
pub fn verify_certificate(
    model: &RnnModel,
    family: &MultiplierFamily,
    cert: &Certificate,
    tol: f64,
) -> Result<VerificationReport> {
    let (n, m) = (model.n(), model.m());
    if cert.p.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "P is {}x{}, model has n = {n}",
            cert.p.nrows(),
            cert.p.ncols()
        )));
    }
    if cert.s.len() != m || family.m != m {
        return Err(Error::Dimension(format!(
            "S has {} entries and family m = {}, model has m = {m}",
            cert.s.len(),
            family.m
        )));
    }
    if cert.multiplier_assignment.len() != family.num_vars() {
        return Err(Error::Dimension(format!(
            "assignment has {} values, family {} declares {}",
            cert.multiplier_assignment.len(),
            family.name,
            family.num_vars()
        )));
    }
    let pi = family.pi_value(&cert.multiplier_assignment);
    let lmi = lmi_value(model, &cert.p, &cert.s_matrix(), &pi);
    let lmi_max_eig = linalg::max_eigenvalue(&lmi);

    let p_viol = (-linalg::min_eigenvalue(&linalg::symmetrize(&cert.p))).max(0.0);
    let s_viol = match cert.s_min {
        Some(s_min) => cert.s.iter().fold(0.0_f64, |acc, &v| acc.max(s_min - v)),
        None => cert.s.iter().fold(0.0_f64, |acc, &v| acc.max((v - 1.0).abs())),
    };
    let fam_viol = family.worst_violation(&cert.multiplier_assignment);
    let worst = p_viol.max(s_viol).max(fam_viol);
    let finite = lmi_max_eig.is_finite() && worst.is_finite();
    Ok(VerificationReport {
        verified: finite && lmi_max_eig <= -cert.eps / 2.0 && worst <= tol,
        lmi_max_eig,
        worst_constraint_violation: worst,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Feasible,
    Infeasible,
    SolverFailure,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Feasible => "Feasible",
            Status::Infeasible => "Infeasible",
            Status::SolverFailure => "SolverFailure",
        }
    }
}

impl FromStr for Status {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Feasible" => Ok(Status::Feasible),
            "Infeasible" => Ok(Status::Infeasible),
            "SolverFailure" => Ok(Status::SolverFailure),
            other => Err(Error::InvalidParameter(format!("unknown status `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TestResult {
    pub test: TestId,
    pub outcome: Status,
    pub verified: bool,
    /// Present iff `outcome` is `Feasible`.
    pub margin: Option<f64>,
    #[serde(with = "duration_ms")]
    pub solve_time: Duration,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(skip)]
    pub certificate: Option<Certificate>,
    #[serde(skip)]
    pub report: Option<VerificationReport>,
}

mod duration_ms {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64() * 1e3)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let ms = f64::deserialize(d)?;
        Ok(Duration::from_secs_f64(ms.max(0.0) / 1e3))
    }
}

/// Builds the family for `test`, assembles, solves and verifies. A result is
/// `Feasible` only when the certificate passes [`verify_certificate`].
pub fn run_test(model: &RnnModel, test: TestId, options: &CertifyOptions) -> Result<TestResult> {
    run_test_with(model, test, options, &ClarabelBackend)
}

pub fn run_test_with(
    model: &RnnModel,
    test: TestId,
    options: &CertifyOptions,
    backend: &dyn ConicBackend,
) -> Result<TestResult> {
    let start = std::time::Instant::now();
    let family = test.family_with(model.m(), options.vertex_margin, options.vertex_cap)?;
    let eps = options.eps_for(model);
    let scaling = if test.fixed_scaling() {
        Scaling::Identity
    } else {
        Scaling::Free {
            s_min: options.s_min,
        }
    };
    let problem = assemble_with(model, &family, eps, scaling)?;
    let outcome = solve_with(&problem, &options.solver, backend)?;
    let mut result = TestResult {
        test,
        outcome: Status::SolverFailure,
        verified: false,
        margin: None,
        solve_time: Duration::ZERO,
        detail: None,
        certificate: None,
        report: None,
    };
    match outcome {
        Outcome::Feasible(cert) => {
            let mut cert = *cert;
            cert.pi = family.pi_value(&cert.multiplier_assignment);
            let report = verify_certificate(model, &family, &cert, options.verify_tol)?;
            if report.verified {
                result.outcome = Status::Feasible;
                result.verified = true;
                result.margin = Some(cert.margin);
            } else {
                result.detail = Some(format!(
                    "certificate failed verification (lmi max eig {:.3e}, worst violation {:.3e})",
                    report.lmi_max_eig, report.worst_constraint_violation
                ));
            }
            result.report = Some(report);
            result.certificate = Some(cert);
        }
        Outcome::Infeasible { best_margin } => {
            result.outcome = Status::Infeasible;
            result.detail = Some(format!("best margin {best_margin:.3e} < eps {eps:.3e}"));
        }
        Outcome::SolverFailure(msg) => {
            result.detail = Some(msg);
        }
    }
    result.solve_time = start.elapsed();
    Ok(result)
}

/// Closed-loop gain bound `γ = sqrt(ν²/ε² + 2)` from a certificate.
///
/// With `(P, S, Π)` fixed, the matrix `M(ε, ν)` over `(x, w, v, s)` is
/// negative definite iff `L + ε²E ≺ 0` (with `L` the stability LMI and
/// `E = W_outᵀW_out` on the state block) and `ν²` exceeds the top eigenvalue
/// of the Schur complement in the `(v, s)` block. The admissible `ε²` range is
/// found by bisection and `ν/ε` is minimised over it by a log-spaced scan
/// followed by golden-section refinement.
pub fn certificate_gain_bound(cert: &Certificate, model: &RnnModel) -> Result<f64> {
    let (n, m) = (model.n(), model.m());
    if cert.p.shape() != (n, n) || cert.s.len() != m || cert.pi.shape() != (2 * m, 2 * m) {
        return Err(Error::Dimension("certificate does not match the model".into()));
    }
    let s = cert.s_matrix();
    let lmi = lmi_value(model, &cert.p, &s, &cert.pi);
    let lmax = linalg::max_eigenvalue(&lmi);
    if !(lmax < 0.0) {
        return Err(Error::Unverified(format!("LMI max eigenvalue {lmax:.3e} is not negative")));
    }
    if linalg::min_eigenvalue(&linalg::symmetrize(&cert.p)) < -DEFAULT_VERIFY_TOL {
        return Err(Error::Unverified("P is not positive semidefinite".into()));
    }
    if cert.s.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Unverified("S is not positive".into()));
    }

    let big = gain_matrix(model, &cert.p, &s, &cert.pi);
    let d1 = n + m;
    let d2 = n + m;
    let l = big.view((0, 0), (d1, d1)).into_owned();
    let k = big.view((0, d1), (d1, d2)).into_owned();
    let h = big.view((d1, d1), (d2, d2)).into_owned();
    let mut e = DMatrix::zeros(d1, d1);
    e.view_mut((0, 0), (n, n))
        .copy_from(&(model.wout().transpose() * model.wout()));

    let neg_def = |e2: f64| linalg::max_eigenvalue(&(&l + &e * e2)) < 0.0;
    // ν²(ε²): top eigenvalue of H + Kᵀ(−(L + ε²E))⁻¹K
    let nu_sq = |e2: f64| -> Option<f64> {
        let a = -(&l + &e * e2);
        let chol = a.cholesky()?;
        let sol = chol.solve(&k);
        let schur = &h + k.transpose() * sol;
        Some(linalg::max_eigenvalue(&schur))
    };

    const E2_CAP: f64 = 1e12;
    let e2_max = if neg_def(E2_CAP) {
        E2_CAP
    } else {
        let (mut lo, mut hi) = (0.0, 1.0);
        while neg_def(hi) {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if neg_def(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        lo
    };
    if !(e2_max > 0.0) {
        return Err(Error::Unverified("no admissible ε".into()));
    }

    // ratio²(ε²) = ν²/ε², with ν² floored at a tiny positive value
    let floor = 1e-14 * (1.0 + linalg::max_abs(&h));
    let ratio_sq = |e2: f64| -> f64 {
        match nu_sq(e2) {
            Some(v) => v.max(floor) / e2,
            None => f64::INFINITY,
        }
    };
    let log_hi = (e2_max * (1.0 - 1e-9)).ln();
    let log_lo = log_hi - 60.0;
    let samples = 241;
    let (mut best_i, mut best) = (0, f64::INFINITY);
    for i in 0..samples {
        let le = log_lo + (log_hi - log_lo) * i as f64 / (samples - 1) as f64;
        let r = ratio_sq(le.exp());
        if r < best {
            best = r;
            best_i = i;
        }
    }
    let step = (log_hi - log_lo) / (samples - 1) as f64;
    let mut a = log_lo + step * (best_i as f64 - 1.0).max(0.0);
    let mut b = (log_lo + step * (best_i as f64 + 1.0)).min(log_hi);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if ratio_sq(c.exp()) < ratio_sq(d.exp()) {
            b = d;
        } else {
            a = c;
        }
    }
    let le = 0.5 * (a + b);
    let (e2, mut nu2) = {
        let cand = le.exp();
        if ratio_sq(cand) <= best {
            (cand, nu_sq(cand).unwrap_or(f64::INFINITY).max(floor))
        } else {
            let e2 = (log_lo + step * best_i as f64).exp();
            (e2, nu_sq(e2).unwrap_or(f64::INFINITY).max(floor))
        }
    };
    if !nu2.is_finite() {
        return Err(Error::Unverified("gain bound search failed".into()));
    }
    // inflate ν until M(ε, ν) is numerically negative definite
    let eps = e2.sqrt();
    nu2 = nu2 * (1.0 + 1e-9) + floor;
    for _ in 0..200 {
        if gain_matrix_is_negative(&big, &e, n, m, eps, nu2.sqrt()) {
            return Ok((nu2 / e2 + 2.0).sqrt());
        }
        nu2 *= 1.0 + 1e-6;
    }
    Err(Error::Unverified("could not confirm M(ε, ν) ≺ 0".into()))
}

/// `M(0, 0)` over `(x, w, v, s)`.
fn gain_matrix(model: &RnnModel, p: &DMatrix<f64>, s: &DMatrix<f64>, pi: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, m) = (model.n(), model.m());
    let d = 2 * (n + m);
    let mut a = DMatrix::zeros(n + m, d);
    a.view_mut((0, 0), (n, n)).copy_from(model.lambda());
    a.view_mut((0, n), (n, m)).copy_from(model.win());
    a.view_mut((0, n + m), (n, n)).copy_from(&DMatrix::identity(n, n));
    a.view_mut((n, 0), (m, n)).copy_from(model.wout());
    a.view_mut((n, 2 * n + m), (m, m)).copy_from(&DMatrix::identity(m, m));
    let mut c = DMatrix::zeros(2 * m, d);
    c.view_mut((0, 0), (m, n)).copy_from(model.wout());
    c.view_mut((0, 2 * n + m), (m, m)).copy_from(&DMatrix::identity(m, m));
    c.view_mut((m, n), (m, m)).copy_from(&DMatrix::identity(m, m));
    let ps = linalg::block_diag(&[p, s]);
    let mut base = DMatrix::zeros(d, d);
    base.view_mut((0, 0), (n, n)).copy_from(&(-p));
    base.view_mut((n, n), (m, m)).copy_from(&(-s));
    linalg::symmetrize(&(base + a.transpose() * ps * &a + c.transpose() * pi * &c))
}

fn gain_matrix_is_negative(big: &DMatrix<f64>, e: &DMatrix<f64>, n: usize, m: usize, eps: f64, nu: f64) -> bool {
    let d1 = n + m;
    let mut mm = big.clone();
    {
        let mut tl = mm.view_mut((0, 0), (d1, d1));
        tl += e * (eps * eps);
    }
    for i in d1..mm.nrows() {
        mm[(i, i)] -= nu * nu;
    }
    linalg::max_eigenvalue(&mm) < 0.0
}
