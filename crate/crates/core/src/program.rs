//! Declared decision blocks, their cone tags, and the flat conic program a
//! backend consumes.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::expr::{LinExpr, MatExpr};
use crate::linalg;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockShape {
    /// Symmetric n×n, stored as the packed upper triangle.
    Sym(usize),
    /// General n×n, row-major.
    Square(usize),
    /// Diagonal n×n.
    Diag(usize),
    Scalar,
}

impl BlockShape {
    pub fn len(&self) -> usize {
        match *self {
            BlockShape::Sym(n) => n * (n + 1) / 2,
            BlockShape::Square(n) => n * n,
            BlockShape::Diag(n) => n,
            BlockShape::Scalar => 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn side(&self) -> usize {
        match *self {
            BlockShape::Sym(n) | BlockShape::Square(n) | BlockShape::Diag(n) => n,
            BlockShape::Scalar => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ConeTag {
    Free,
    /// Positive semidefinite (symmetric blocks only).
    Psd,
    /// Entrywise nonnegative.
    NonNeg,
    /// Diagonal with every entry at least `floor` (> 0).
    DiagPositive { floor: f64 },
}

/// A named decision block occupying `shape.len()` consecutive variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarBlock {
    pub name: String,
    pub shape: BlockShape,
    pub tag: ConeTag,
    pub offset: usize,
}

impl VarBlock {
    pub fn len(&self) -> usize {
        self.shape.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shape.is_empty()
    }

    /// Variable index of matrix entry (i, j), if that entry is a variable.
    pub fn index_of(&self, i: usize, j: usize) -> Option<usize> {
        let n = self.shape.side();
        if i >= n || j >= n {
            return None;
        }
        match self.shape {
            BlockShape::Sym(_) => {
                let (r, c) = if i <= j { (i, j) } else { (j, i) };
                // packed upper triangle, column by column
                Some(self.offset + c * (c + 1) / 2 + r)
            }
            BlockShape::Square(n) => Some(self.offset + i * n + j),
            BlockShape::Diag(_) => (i == j).then_some(self.offset + i),
            BlockShape::Scalar => Some(self.offset),
        }
    }

    pub fn expr(&self) -> MatExpr {
        let n = self.shape.side();
        MatExpr::from_fn(n, n, |i, j| {
            self.index_of(i, j).map(LinExpr::var).unwrap_or_default()
        })
    }

    pub fn value(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.shape.side();
        DMatrix::from_fn(n, n, |i, j| self.index_of(i, j).map_or(0.0, |k| x[k]))
    }

    /// Writes matrix `m` into the slots of `x` owned by this block. Symmetric
    /// blocks read the upper triangle.
    pub fn store(&self, m: &DMatrix<f64>, x: &mut [f64]) {
        let n = self.shape.side();
        assert_eq!(m.shape(), (n, n), "block {} expects {n}x{n}", self.name);
        for i in 0..n {
            for j in 0..n {
                let owned = match self.shape {
                    BlockShape::Sym(_) => i <= j,
                    BlockShape::Diag(_) => i == j,
                    _ => true,
                };
                if owned {
                    if let Some(k) = self.index_of(i, j) {
                        x[k] = m[(i, j)];
                    }
                }
            }
        }
    }

    /// How far the block's value is outside its cone (0 when inside).
    pub fn cone_violation(&self, x: &[f64]) -> f64 {
        let v = self.value(x);
        match self.tag {
            ConeTag::Free => 0.0,
            ConeTag::Psd => (-linalg::min_eigenvalue(&v)).max(0.0),
            ConeTag::NonNeg => v.iter().fold(0.0_f64, |acc, &e| acc.max(-e)),
            ConeTag::DiagPositive { floor } => {
                let worst = (0..v.nrows()).fold(0.0_f64, |acc, i| acc.max(floor - v[(i, i)]));
                worst.max(0.0)
            }
        }
    }

    fn shifted(&self, offset: usize) -> Self {
        Self {
            offset: self.offset + offset,
            ..self.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    /// `expr = 0`
    Eq,
    /// `expr ≥ 0`
    Geq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearConstraint {
    pub label: String,
    pub expr: LinExpr,
    pub sense: Sense,
}

impl LinearConstraint {
    pub fn geq(label: impl Into<String>, expr: LinExpr) -> Self {
        Self {
            label: label.into(),
            expr,
            sense: Sense::Geq,
        }
    }

    pub fn eq(label: impl Into<String>, expr: LinExpr) -> Self {
        Self {
            label: label.into(),
            expr,
            sense: Sense::Eq,
        }
    }

    pub fn violation(&self, x: &[f64]) -> f64 {
        let v = self.expr.eval(x);
        match self.sense {
            Sense::Eq => v.abs(),
            Sense::Geq => (-v).max(0.0),
        }
    }
}

/// `expr ⪰ 0`
#[derive(Clone, Debug, PartialEq)]
pub struct PsdConstraint {
    pub label: String,
    pub expr: MatExpr,
}

impl PsdConstraint {
    pub fn new(label: impl Into<String>, expr: MatExpr) -> Self {
        Self {
            label: label.into(),
            expr,
        }
    }

    pub fn violation(&self, x: &[f64]) -> f64 {
        (-linalg::min_eigenvalue(&self.expr.eval(x))).max(0.0)
    }
}

/// Decision blocks plus the constraints stated over them.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConstraintSystem {
    pub blocks: Vec<VarBlock>,
    pub linear: Vec<LinearConstraint>,
    pub psd: Vec<PsdConstraint>,
    num_vars: usize,
}

impl ConstraintSystem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn add_block(&mut self, name: impl Into<String>, shape: BlockShape, tag: ConeTag) -> VarBlock {
        let block = VarBlock {
            name: name.into(),
            shape,
            tag,
            offset: self.num_vars,
        };
        self.num_vars += shape.len();
        self.blocks.push(block.clone());
        block
    }

    pub fn block(&self, name: &str) -> Option<&VarBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }

    /// Appends `other` with its variables renumbered after ours and its block
    /// names prefixed. Returns the offset applied.
    pub fn absorb(&mut self, other: &ConstraintSystem, prefix: &str) -> usize {
        let offset = self.num_vars;
        for b in &other.blocks {
            let mut nb = b.shifted(offset);
            nb.name = format!("{prefix}{}", b.name);
            self.blocks.push(nb);
        }
        for c in &other.linear {
            self.linear.push(LinearConstraint {
                label: format!("{prefix}{}", c.label),
                expr: c.expr.shift(offset),
                sense: c.sense,
            });
        }
        for c in &other.psd {
            self.psd.push(PsdConstraint {
                label: format!("{prefix}{}", c.label),
                expr: c.expr.shift(offset),
            });
        }
        self.num_vars += other.num_vars;
        offset
    }

    /// Largest violation over block cones, linear and PSD constraints.
    pub fn worst_violation(&self, x: &[f64]) -> f64 {
        let blocks = self.blocks.iter().map(|b| b.cone_violation(x));
        let lin = self.linear.iter().map(|c| c.violation(x));
        let psd = self.psd.iter().map(|c| c.violation(x));
        blocks.chain(lin).chain(psd).fold(0.0, f64::max)
    }

    /// Lowers block tags into explicit cone constraints.
    pub fn lower(&self) -> ConicProgram {
        let mut prog = ConicProgram::new(self.num_vars);
        for b in &self.blocks {
            let n = b.shape.side();
            match b.tag {
                ConeTag::Free => {}
                ConeTag::Psd => match b.shape {
                    BlockShape::Scalar => prog.nonneg.push(LinExpr::var(b.offset)),
                    BlockShape::Diag(_) => {
                        (0..n).for_each(|i| prog.nonneg.push(LinExpr::var(b.offset + i)))
                    }
                    _ => prog.psd.push(b.expr().sym_part()),
                },
                ConeTag::NonNeg => {
                    (b.offset..b.offset + b.len()).for_each(|k| prog.nonneg.push(LinExpr::var(k)))
                }
                ConeTag::DiagPositive { floor } => {
                    for i in 0..n {
                        let k = b.index_of(i, i).expect("diagonal entry");
                        prog.nonneg.push(LinExpr::from_terms(-floor, [(k, 1.0)]));
                    }
                }
            }
        }
        for c in &self.linear {
            match c.sense {
                Sense::Eq => prog.equalities.push(c.expr.clone()),
                Sense::Geq => prog.nonneg.push(c.expr.clone()),
            }
        }
        for c in &self.psd {
            prog.psd.push(c.expr.clone());
        }
        prog
    }
}

/// minimize `objective(x)` subject to
/// `equalities(x) = 0`, `nonneg(x) ≥ 0`, and every `psd(x) ⪰ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConicProgram {
    pub num_vars: usize,
    pub objective: LinExpr,
    pub equalities: Vec<LinExpr>,
    pub nonneg: Vec<LinExpr>,
    pub psd: Vec<MatExpr>,
}

impl ConicProgram {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            objective: LinExpr::zero(),
            equalities: Vec::new(),
            nonneg: Vec::new(),
            psd: Vec::new(),
        }
    }

    /// Adds a fresh variable and returns its index.
    pub fn add_var(&mut self) -> usize {
        self.num_vars += 1;
        self.num_vars - 1
    }

    pub fn worst_violation(&self, x: &[f64]) -> f64 {
        let eq = self.equalities.iter().map(|e| e.eval(x).abs());
        let nn = self.nonneg.iter().map(|e| (-e.eval(x)).max(0.0));
        let psd = self
            .psd
            .iter()
            .map(|m| (-linalg::min_eigenvalue(&m.eval(x))).max(0.0));
        eq.chain(nn).chain(psd).fold(0.0, f64::max)
    }
}
