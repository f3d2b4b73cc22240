//! Affine expressions over a flat vector of decision variables.
//!
//! Every multiplier family, LMI and cone constraint in this crate is built from
//! [`LinExpr`] (an affine scalar) and [`MatExpr`] (a dense matrix of affine
//! scalars). The same objects are evaluated numerically when a certificate is
//! checked and lowered to sparse rows when a problem is handed to a solver.

use nalgebra::DMatrix;

/// `constant + Σ coeff·x[var]`. Terms are kept sorted by variable index with
/// no duplicates and no explicit zeros.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinExpr {
    pub constant: f64,
    terms: Vec<(usize, f64)>,
}

impl LinExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self {
            constant: c,
            terms: Vec::new(),
        }
    }

    pub fn var(index: usize) -> Self {
        Self {
            constant: 0.0,
            terms: vec![(index, 1.0)],
        }
    }

    /// Builds an expression from arbitrary (possibly repeated) terms.
    pub fn from_terms(constant: f64, terms: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut terms: Vec<(usize, f64)> = terms.into_iter().collect();
        terms.sort_by_key(|t| t.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (v, c) in terms {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += c,
                _ => merged.push((v, c)),
            }
        }
        merged.retain(|t| t.1 != 0.0);
        Self {
            constant,
            terms: merged,
        }
    }

    pub fn terms(&self) -> &[(usize, f64)] {
        &self.terms
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, var: usize) -> f64 {
        self.terms
            .binary_search_by_key(&var, |t| t.0)
            .map(|i| self.terms[i].1)
            .unwrap_or(0.0)
    }

    pub fn scale(&self, s: f64) -> Self {
        if s == 0.0 {
            return Self::zero();
        }
        Self {
            constant: self.constant * s,
            terms: self.terms.iter().map(|&(v, c)| (v, c * s)).collect(),
        }
    }

    /// `self + s·other`
    pub fn axpy(&self, s: f64, other: &LinExpr) -> Self {
        if s == 0.0 {
            return self.clone();
        }
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() || j < other.terms.len() {
            let next = match (self.terms.get(i), other.terms.get(j)) {
                (Some(&(va, ca)), Some(&(vb, cb))) if va == vb => {
                    i += 1;
                    j += 1;
                    (va, ca + s * cb)
                }
                (Some(&(va, ca)), Some(&(vb, _))) if va < vb => {
                    i += 1;
                    (va, ca)
                }
                (Some(_), Some(&(vb, cb))) => {
                    j += 1;
                    (vb, s * cb)
                }
                (Some(&(va, ca)), None) => {
                    i += 1;
                    (va, ca)
                }
                (None, Some(&(vb, cb))) => {
                    j += 1;
                    (vb, s * cb)
                }
                (None, None) => unreachable!(),
            };
            if next.1 != 0.0 {
                out.push(next);
            }
        }
        Self {
            constant: self.constant + s * other.constant,
            terms: out,
        }
    }

    pub fn add(&self, other: &LinExpr) -> Self {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &LinExpr) -> Self {
        self.axpy(-1.0, other)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .fold(self.constant, |acc, &(v, c)| acc + c * x[v])
    }

    /// Renumbers every variable by `offset`.
    pub fn shift(&self, offset: usize) -> Self {
        Self {
            constant: self.constant,
            terms: self.terms.iter().map(|&(v, c)| (v + offset, c)).collect(),
        }
    }

    pub fn max_var(&self) -> Option<usize> {
        self.terms.last().map(|t| t.0)
    }
}

/// Dense row-major matrix of affine expressions.
#[derive(Clone, Debug, PartialEq)]
pub struct MatExpr {
    rows: usize,
    cols: usize,
    data: Vec<LinExpr>,
}

impl MatExpr {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![LinExpr::zero(); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> LinExpr) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_const(m: &DMatrix<f64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| LinExpr::constant(m[(i, j)]))
    }

    pub fn identity(n: usize, scale: f64) -> Self {
        Self::from_fn(n, n, |i, j| {
            if i == j {
                LinExpr::constant(scale)
            } else {
                LinExpr::zero()
            }
        })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> &LinExpr {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, e: LinExpr) {
        self.data[i * self.cols + j] = e;
    }

    pub fn entries(&self) -> impl Iterator<Item = &LinExpr> {
        self.data.iter()
    }

    pub fn add(&self, other: &MatExpr) -> Self {
        assert_eq!(self.shape(), other.shape(), "MatExpr::add shape mismatch");
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, other: &MatExpr) -> Self {
        assert_eq!(self.shape(), other.shape(), "MatExpr::sub shape mismatch");
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|e| e.scale(s)).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    /// `(self + selfᵀ) / 2`
    pub fn sym_part(&self) -> Self {
        assert_eq!(self.rows, self.cols);
        Self::from_fn(self.rows, self.cols, |i, j| {
            self.get(i, j).add(self.get(j, i)).scale(0.5)
        })
    }

    /// `a · self` for a constant matrix `a`.
    pub fn lmul(a: &DMatrix<f64>, e: &MatExpr) -> MatExpr {
        assert_eq!(a.ncols(), e.rows, "lmul shape mismatch");
        MatExpr::from_fn(a.nrows(), e.cols, |i, j| {
            let mut constant = 0.0;
            let mut terms = Vec::new();
            for k in 0..e.rows {
                let c = a[(i, k)];
                if c == 0.0 {
                    continue;
                }
                let entry = e.get(k, j);
                constant += c * entry.constant;
                terms.extend(entry.terms().iter().map(|&(v, t)| (v, c * t)));
            }
            LinExpr::from_terms(constant, terms)
        })
    }

    /// `self · b` for a constant matrix `b`.
    pub fn rmul(e: &MatExpr, b: &DMatrix<f64>) -> MatExpr {
        assert_eq!(e.cols, b.nrows(), "rmul shape mismatch");
        MatExpr::from_fn(e.rows, b.ncols(), |i, j| {
            let mut constant = 0.0;
            let mut terms = Vec::new();
            for k in 0..e.cols {
                let c = b[(k, j)];
                if c == 0.0 {
                    continue;
                }
                let entry = e.get(i, k);
                constant += c * entry.constant;
                terms.extend(entry.terms().iter().map(|&(v, t)| (v, c * t)));
            }
            LinExpr::from_terms(constant, terms)
        })
    }

    /// `tᵀ · self · t`
    pub fn congruence(&self, t: &DMatrix<f64>) -> MatExpr {
        MatExpr::lmul(&t.transpose(), &MatExpr::rmul(self, t))
    }

    /// Assembles a block matrix; `None` entries are zero blocks. Row heights
    /// and column widths are inferred from the present blocks.
    pub fn blocks(grid: &[Vec<Option<&MatExpr>>]) -> MatExpr {
        let nbr = grid.len();
        let nbc = grid.first().map_or(0, |r| r.len());
        let mut heights = vec![None; nbr];
        let mut widths = vec![None; nbc];
        for (bi, row) in grid.iter().enumerate() {
            assert_eq!(row.len(), nbc, "ragged block grid");
            for (bj, blk) in row.iter().enumerate() {
                if let Some(b) = blk {
                    for (slot, val) in [(&mut heights[bi], b.rows), (&mut widths[bj], b.cols)] {
                        match slot {
                            Some(prev) => assert_eq!(*prev, val, "inconsistent block sizes"),
                            None => *slot = Some(val),
                        }
                    }
                }
            }
        }
        let heights: Vec<usize> = heights
            .into_iter()
            .map(|h| h.expect("block row with no sized block"))
            .collect();
        let widths: Vec<usize> = widths
            .into_iter()
            .map(|w| w.expect("block column with no sized block"))
            .collect();
        let rows = heights.iter().sum();
        let cols = widths.iter().sum();
        let mut out = MatExpr::zeros(rows, cols);
        let mut r0 = 0;
        for (bi, row) in grid.iter().enumerate() {
            let mut c0 = 0;
            for (bj, blk) in row.iter().enumerate() {
                if let Some(b) = blk {
                    for i in 0..b.rows {
                        for j in 0..b.cols {
                            out.set(r0 + i, c0 + j, b.get(i, j).clone());
                        }
                    }
                }
                c0 += widths[bj];
            }
            r0 += heights[bi];
        }
        out
    }

    pub fn block_diag(parts: &[&MatExpr]) -> MatExpr {
        let grid: Vec<Vec<Option<&MatExpr>>> = (0..parts.len())
            .map(|i| {
                (0..parts.len())
                    .map(|j| if i == j { Some(parts[i]) } else { None })
                    .collect()
            })
            .collect();
        MatExpr::blocks(&grid)
    }

    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).eval(x))
    }

    pub fn shift(&self, offset: usize) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|e| e.shift(offset)).collect(),
        }
    }

    /// Structural symmetry: entry (i, j) and (j, i) are the same expression
    /// up to `tol` in every coefficient.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let d = self.get(i, j).sub(self.get(j, i));
                if d.constant.abs() > tol || d.terms().iter().any(|t| t.1.abs() > tol) {
                    return false;
                }
            }
        }
        true
    }

    pub fn max_var(&self) -> Option<usize> {
        self.data.iter().filter_map(|e| e.max_var()).max()
    }
}
