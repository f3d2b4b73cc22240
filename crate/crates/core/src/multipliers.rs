//! Static IQC multiplier families for the entrywise ReLU.
//!
//! A family is a set of declared decision blocks, constraints over them, and
//! an affine map `pi` from the blocks to a symmetric `2m × 2m` multiplier
//! `Π`. Every assignment that satisfies the constraints gives a `Π` with
//! `[ξ; relu(ξ)]ᵀ Π [ξ; relu(ξ)] ≥ 0` for all `ξ`, which is what lets the
//! family be added to the stability LMI.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::relu;
use crate::error::{Error, Result};
use crate::expr::{LinExpr, MatExpr};
use crate::program::{BlockShape, ConeTag, ConstraintSystem, LinearConstraint, PsdConstraint};

/// Default cap on `m` for the polytopic family (2^12 = 4096 vertex LMIs).
pub const DEFAULT_VERTEX_CAP: usize = 12;

/// Lower bound imposed on the diagonal-sector scaling `D`.
pub const DIAG_SECTOR_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct MultiplierFamily {
    pub name: String,
    pub m: usize,
    pub system: ConstraintSystem,
    pub pi: MatExpr,
}

impl MultiplierFamily {
    /// The family containing only `Π = 0`.
    pub fn zero(m: usize) -> Self {
        Self {
            name: "zero".into(),
            m,
            system: ConstraintSystem::new(),
            pi: MatExpr::zeros(2 * m, 2 * m),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.system.num_vars()
    }

    pub fn num_blocks(&self) -> usize {
        self.system.blocks.len()
    }

    pub fn pi_value(&self, assignment: &[f64]) -> DMatrix<f64> {
        self.pi.eval(assignment)
    }

    /// Largest violation of any block cone or constraint of the family.
    pub fn worst_violation(&self, assignment: &[f64]) -> f64 {
        self.system.worst_violation(assignment)
    }

    /// Builds a flat assignment from named block values; unnamed blocks are
    /// zero.
    pub fn assignment(&self, values: &[(&str, DMatrix<f64>)]) -> Result<Vec<f64>> {
        let mut x = vec![0.0; self.num_vars()];
        for (name, value) in values {
            let block = self
                .system
                .block(name)
                .ok_or_else(|| Error::InvalidParameter(format!("no block named {name}")))?;
            let side = block.shape.side();
            if value.shape() != (side, side) {
                return Err(Error::Dimension(format!(
                    "block {name} is {side}x{side}, got {}x{}",
                    value.nrows(),
                    value.ncols()
                )));
            }
            block.store(value, &mut x);
        }
        Ok(x)
    }
}

fn check_m(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidParameter("multiplier dimension m must be positive".into()));
    }
    Ok(())
}

fn check_interval(lo: f64, hi: f64, what: &str) -> Result<()> {
    if !(lo <= 0.0 && 0.0 <= hi) {
        return Err(Error::InvalidParameter(format!(
            "{what} requires lower ≤ 0 ≤ upper, got [{lo}, {hi}]"
        )));
    }
    Ok(())
}

fn eye(m: usize) -> DMatrix<f64> {
    DMatrix::identity(m, m)
}

/// `[[a, b], [c, d]]` from four `m × m` blocks.
fn block2(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, d: &DMatrix<f64>) -> DMatrix<f64> {
    let m = a.nrows();
    let mut out = DMatrix::zeros(2 * m, 2 * m);
    out.view_mut((0, 0), (m, m)).copy_from(a);
    out.view_mut((0, m), (m, m)).copy_from(b);
    out.view_mut((m, 0), (m, m)).copy_from(c);
    out.view_mut((m, m), (m, m)).copy_from(d);
    out
}

/// Static Zames-Falb multipliers for `slope(mu, nu)` nonlinearities:
/// `Π = Tᵀ [[0, Mᵀ], [M, 0]] T`, `T = [[νI, −I], [−μI, I]]`, with `M`
/// doubly hyperdominant (nonpositive off-diagonal, nonnegative row and
/// column sums).
pub fn zames_falb_family(m: usize, mu: f64, nu: f64) -> Result<MultiplierFamily> {
    check_m(m)?;
    check_interval(mu, nu, "slope restriction")?;
    let mut sys = ConstraintSystem::new();
    let mb = sys.add_block("M", BlockShape::Square(m), ConeTag::Free);
    for i in 0..m {
        for j in 0..m {
            if i != j {
                let k = mb.index_of(i, j).unwrap();
                sys.linear.push(LinearConstraint::geq(
                    format!("M[{i},{j}] <= 0"),
                    LinExpr::from_terms(0.0, [(k, -1.0)]),
                ));
            }
        }
    }
    for i in 0..m {
        let row = (0..m).map(|j| (mb.index_of(i, j).unwrap(), 1.0));
        sys.linear.push(LinearConstraint::geq(
            format!("row {i} sum >= 0"),
            LinExpr::from_terms(0.0, row),
        ));
        let col = (0..m).map(|j| (mb.index_of(j, i).unwrap(), 1.0));
        sys.linear.push(LinearConstraint::geq(
            format!("col {i} sum >= 0"),
            LinExpr::from_terms(0.0, col),
        ));
    }
    let me = mb.expr();
    let zero = MatExpr::zeros(m, m);
    let mt = me.transpose();
    let core = MatExpr::blocks(&[vec![Some(&zero), Some(&mt)], vec![Some(&me), Some(&zero)]]);
    let t = block2(&(eye(m) * nu), &(-eye(m)), &(eye(m) * -mu), &eye(m));
    Ok(MultiplierFamily {
        name: "zames_falb".into(),
        m,
        system: sys,
        pi: core.congruence(&t),
    })
}

/// Diagonal vertex matrices of the box `[alpha, beta]^m`; bit `i` of the
/// index selects `beta` for entry `i`.
pub fn box_vertices(m: usize, alpha: f64, beta: f64) -> impl Iterator<Item = DMatrix<f64>> {
    (0..(1usize << m)).map(move |mask| {
        DMatrix::from_fn(m, m, |i, j| {
            if i != j {
                0.0
            } else if mask >> i & 1 == 1 {
                beta
            } else {
                alpha
            }
        })
    })
}

pub fn polytopic_family(m: usize, alpha: f64, beta: f64) -> Result<MultiplierFamily> {
    polytopic_family_with(m, alpha, beta, 0.0, DEFAULT_VERTEX_CAP)
}

/// Polytopic bounding multipliers `Π = [[X, Y], [Yᵀ, Z]]` with
/// `X + YΔ + ΔYᵀ + ΔZΔ ⪰ margin·I` at every vertex `Δ` of
/// `[alpha, beta]^m` and `Z_ii ≤ 0`.
pub fn polytopic_family_with(
    m: usize,
    alpha: f64,
    beta: f64,
    margin: f64,
    vertex_cap: usize,
) -> Result<MultiplierFamily> {
    check_m(m)?;
    check_interval(alpha, beta, "sector")?;
    if m > vertex_cap {
        return Err(Error::VertexBudget { m, cap: vertex_cap });
    }
    let mut sys = ConstraintSystem::new();
    let x = sys.add_block("X", BlockShape::Sym(m), ConeTag::Free).expr();
    let y = sys.add_block("Y", BlockShape::Square(m), ConeTag::Free).expr();
    let zb = sys.add_block("Z", BlockShape::Sym(m), ConeTag::Free);
    let z = zb.expr();
    for (k, delta) in box_vertices(m, alpha, beta).enumerate() {
        let yd = MatExpr::rmul(&y, &delta);
        let form = x
            .add(&yd)
            .add(&yd.transpose())
            .add(&z.congruence(&delta))
            .sub(&MatExpr::identity(m, margin));
        sys.psd.push(PsdConstraint::new(format!("vertex {k}"), form));
    }
    for i in 0..m {
        let k = zb.index_of(i, i).unwrap();
        sys.linear.push(LinearConstraint::geq(
            format!("Z[{i},{i}] <= 0"),
            LinExpr::from_terms(0.0, [(k, -1.0)]),
        ));
    }
    let yt = y.transpose();
    let pi = MatExpr::blocks(&[vec![Some(&x), Some(&y)], vec![Some(&yt), Some(&z)]]);
    Ok(MultiplierFamily {
        name: "polytopic".into(),
        m,
        system: sys,
        pi,
    })
}

/// Diagonally structured sector multipliers
/// `Π = [[−αβD, (α+β)/2·D], [(α+β)/2·D, −D]]`, `D` positive diagonal.
pub fn diag_sector_family(m: usize, alpha: f64, beta: f64) -> Result<MultiplierFamily> {
    check_m(m)?;
    check_interval(alpha, beta, "sector")?;
    let mut sys = ConstraintSystem::new();
    let d = sys
        .add_block(
            "D",
            BlockShape::Diag(m),
            ConeTag::DiagPositive {
                floor: DIAG_SECTOR_FLOOR,
            },
        )
        .expr();
    let mid = d.scale(0.5 * (alpha + beta));
    let pi = MatExpr::blocks(&[
        vec![Some(&d.scale(-alpha * beta)), Some(&mid)],
        vec![Some(&mid), Some(&d.scale(-1.0))],
    ]);
    Ok(MultiplierFamily {
        name: "diag_sector".into(),
        m,
        system: sys,
        pi,
    })
}

/// `R = [[−I, I], [0, I]]`, mapping `[ξ; ζ]` to `[ζ − ξ; ζ]`.
pub fn relu_cone_map(m: usize) -> DMatrix<f64> {
    block2(&(-eye(m)), &eye(m), &DMatrix::zeros(m, m), &eye(m))
}

/// Copositive multipliers with the PSD+NN inner approximation:
/// `Π = Rᵀ (Q₁ + Q₂) R`, `Q₁ ⪰ 0`, `Q₂ ≥ 0` entrywise.
pub fn copositive_family(m: usize) -> Result<MultiplierFamily> {
    check_m(m)?;
    let mut sys = ConstraintSystem::new();
    let q1 = sys.add_block("Q1", BlockShape::Sym(2 * m), ConeTag::Psd).expr();
    let q2 = sys.add_block("Q2", BlockShape::Sym(2 * m), ConeTag::NonNeg).expr();
    Ok(MultiplierFamily {
        name: "copositive".into(),
        m,
        system: sys,
        pi: q1.add(&q2).congruence(&relu_cone_map(m)),
    })
}

/// The l2+ special class: `Q = blockdiag(0, Q̂₁ + Q̂₂)`, which gives
/// `Π = [[0, 0], [0, Q̂₁ + Q̂₂]]`.
pub fn cop0_family(m: usize) -> Result<MultiplierFamily> {
    check_m(m)?;
    let mut sys = ConstraintSystem::new();
    let q1 = sys.add_block("Qhat1", BlockShape::Sym(m), ConeTag::Psd).expr();
    let q2 = sys.add_block("Qhat2", BlockShape::Sym(m), ConeTag::NonNeg).expr();
    let qhat = q1.add(&q2);
    let zero = MatExpr::zeros(m, m);
    let q = MatExpr::blocks(&[vec![Some(&zero), None], vec![None, Some(&qhat)]]);
    Ok(MultiplierFamily {
        name: "cop0".into(),
        m,
        system: sys,
        pi: q.congruence(&relu_cone_map(m)),
    })
}

/// Minkowski sum: variables are concatenated (block names prefixed with the
/// member index, `f0.`, `f1.`, …) and the maps are added.
pub fn family_sum(families: &[MultiplierFamily]) -> Result<MultiplierFamily> {
    let first = families
        .first()
        .ok_or_else(|| Error::InvalidParameter("family_sum needs at least one family".into()))?;
    let m = first.m;
    if let Some(f) = families.iter().find(|f| f.m != m) {
        return Err(Error::Dimension(format!(
            "family {} has m = {}, expected {m}",
            f.name, f.m
        )));
    }
    let mut sys = ConstraintSystem::new();
    let mut pi = MatExpr::zeros(2 * m, 2 * m);
    let mut names = Vec::with_capacity(families.len());
    for (i, f) in families.iter().enumerate() {
        let offset = sys.absorb(&f.system, &format!("f{i}."));
        pi = pi.add(&f.pi.shift(offset));
        names.push(f.name.as_str());
    }
    Ok(MultiplierFamily {
        name: names.join("+"),
        m,
        system: sys,
        pi,
    })
}

/// `[ξ; relu(ξ)]ᵀ Π [ξ; relu(ξ)]`
pub fn pointwise_iqc_value(pi: &DMatrix<f64>, xi: &DVector<f64>) -> Result<f64> {
    let m = xi.len();
    if pi.shape() != (2 * m, 2 * m) {
        return Err(Error::Dimension(format!(
            "Π is {}x{}, expected {}x{}",
            pi.nrows(),
            pi.ncols(),
            2 * m,
            2 * m
        )));
    }
    let mut v = DVector::zeros(2 * m);
    v.rows_mut(0, m).copy_from(xi);
    v.rows_mut(m, m).copy_from(&relu(xi));
    Ok(v.dot(&(pi * &v)))
}
