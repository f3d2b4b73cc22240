//! Random generators for models, cone members and feasible multiplier
//! assignments. Used by property tests, the acceptance suite and benches.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{StandardNormal, Uniform};

use crate::certify::{lmi_value, Certificate};
use crate::cones::SymMatrix;
use crate::dynamics::RnnModel;
use crate::error::Result;
use crate::linalg;
use crate::multipliers::{
    box_vertices, cop0_family, copositive_family, diag_sector_family, polytopic_family,
    zames_falb_family, MultiplierFamily,
};

/// The five multiplier families, each on the ReLU sector/slope `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyKind {
    ZamesFalb,
    Polytopic,
    DiagSector,
    Copositive,
    Cop0,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 5] = [
        FamilyKind::ZamesFalb,
        FamilyKind::Polytopic,
        FamilyKind::DiagSector,
        FamilyKind::Copositive,
        FamilyKind::Cop0,
    ];

    pub fn build(self, m: usize) -> Result<MultiplierFamily> {
        match self {
            FamilyKind::ZamesFalb => zames_falb_family(m, 0.0, 1.0),
            FamilyKind::Polytopic => polytopic_family(m, 0.0, 1.0),
            FamilyKind::DiagSector => diag_sector_family(m, 0.0, 1.0),
            FamilyKind::Copositive => copositive_family(m),
            FamilyKind::Cop0 => cop0_family(m),
        }
    }
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// `B Bᵀ` with Gaussian `B` (`n × n`).
pub fn random_psd<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let b = gaussian_matrix(n, n, rng);
    linalg::symmetrize(&(&b * b.transpose()))
}

/// Symmetric with i.i.d. `U[0, 1)` entries.
pub fn random_nonneg_sym<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let u = Uniform::new(0.0, 1.0);
    let mut a = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let v = rng.sample(u);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    a
}

/// Completely positive `B Bᵀ` with entrywise nonnegative `B` (`n × k`).
pub fn random_cp<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SymMatrix {
    let k = rng.gen_range(1..=n + 2);
    let u = Uniform::new(0.0, 1.0);
    let b = DMatrix::from_fn(n, k, |_, _| rng.sample(u));
    SymMatrix::new(&b * b.transpose()).expect("square")
}

/// Doubly hyperdominant: nonpositive off-diagonal, diagonal large enough
/// for nonnegative row and column sums (plus a random slack).
pub fn random_dhd<R: Rng + ?Sized>(m: usize, rng: &mut R) -> DMatrix<f64> {
    let u = Uniform::new(0.0, 1.0);
    let mut a = DMatrix::from_fn(m, m, |i, j| if i == j { 0.0 } else { -rng.sample(u) });
    for i in 0..m {
        let row: f64 = (0..m).map(|j| -a[(i, j)]).sum();
        let col: f64 = (0..m).map(|j| -a[(j, i)]).sum();
        // some draws sit exactly on the boundary
        let slack = if rng.gen_bool(0.3) { 0.0 } else { rng.sample(u) };
        a[(i, i)] = row.max(col) + slack;
    }
    a
}

/// Stable model with Schur-stable `Λ` (spectral radius at most `rho`).
pub fn random_model<R: Rng + ?Sized>(n: usize, m: usize, rho: f64, rng: &mut R) -> RnnModel {
    let l = gaussian_matrix(n, n, rng);
    let r = linalg::spectral_radius(&l);
    let lambda = if r > 0.0 { l * (rho * rng.gen_range(0.0..1.0) / r) } else { l };
    let win = gaussian_matrix(n, m, rng) * 0.5;
    let wout = gaussian_matrix(m, n, rng) * 0.5;
    RnnModel::new(lambda, win, wout).expect("scaled to be stable")
}

/// A family together with a random assignment satisfying all of its
/// constraints.
pub fn random_feasible_assignment<R: Rng + ?Sized>(
    kind: FamilyKind,
    m: usize,
    rng: &mut R,
) -> Result<(MultiplierFamily, Vec<f64>)> {
    let fam = kind.build(m)?;
    let x = match kind {
        FamilyKind::ZamesFalb => fam.assignment(&[("M", random_dhd(m, rng))])?,
        FamilyKind::Polytopic => {
            let y = gaussian_matrix(m, m, rng);
            let mut z = gaussian_matrix(m, m, rng) * 0.5;
            z = linalg::symmetrize(&z);
            for i in 0..m {
                z[(i, i)] = -z[(i, i)].abs();
            }
            // smallest X = c·I meeting every vertex, plus slack
            let c = box_vertices(m, 0.0, 1.0)
                .map(|d| {
                    let yd = &y * &d;
                    let form = &yd + yd.transpose() + &d * &z * &d;
                    -linalg::min_eigenvalue(&form)
                })
                .fold(f64::NEG_INFINITY, f64::max)
                .max(0.0);
            let slack = if rng.gen_bool(0.3) { 1e-9 } else { rng.gen_range(0.0..1.0) };
            let x = DMatrix::identity(m, m) * (c + slack);
            fam.assignment(&[("X", x), ("Y", y), ("Z", z)])?
        }
        FamilyKind::DiagSector => {
            let d = DMatrix::from_diagonal(&DVector::from_fn(m, |_, _| rng.gen_range(1e-6..2.0)));
            fam.assignment(&[("D", d)])?
        }
        FamilyKind::Copositive => fam.assignment(&[
            ("Q1", random_psd(2 * m, rng)),
            ("Q2", random_nonneg_sym(2 * m, rng)),
        ])?,
        FamilyKind::Cop0 => fam.assignment(&[
            ("Qhat1", random_psd(m, rng)),
            ("Qhat2", random_nonneg_sym(m, rng)),
        ])?,
    };
    Ok((fam, x))
}

/// Which certificate entry a mutation touched.
#[derive(Clone, Debug, PartialEq)]
pub enum CertEntry {
    /// Symmetric pair `(i, j)` / `(j, i)` of `P`.
    P(usize, usize),
    S(usize),
    Multiplier(usize),
}

/// Moves the single certificate entry with the largest first-order effect on
/// `λ_max` of the LMI by `amount` in the increasing direction. Because the
/// LMI is affine in the certificate and `λ_max` is convex, the new `λ_max`
/// is at least the old one plus `amount · |g|`, with `g` the returned slope.
pub fn mutate_certificate(
    model: &RnnModel,
    family: &MultiplierFamily,
    cert: &Certificate,
    amount: f64,
) -> (Certificate, CertEntry, f64) {
    let (n, m) = (model.n(), model.m());
    let lmi = lmi_value(model, &cert.p, &cert.s_matrix(), &family.pi_value(&cert.multiplier_assignment));
    let (_, u) = linalg::top_eigenpair(&lmi);
    let slope = |dp: &DMatrix<f64>, ds: &DMatrix<f64>, dpi: &DMatrix<f64>| {
        let d = lmi_value(model, dp, ds, dpi);
        u.dot(&(&d * &u))
    };
    let (zp, zs, zpi) = (DMatrix::zeros(n, n), DMatrix::zeros(m, m), DMatrix::zeros(2 * m, 2 * m));
    let mut best = (CertEntry::S(0), 0.0_f64);
    let mut consider = |e: CertEntry, g: f64| {
        if g.abs() > best.1.abs() {
            best = (e, g);
        }
    };
    for j in 0..n {
        for i in 0..=j {
            let mut dp = zp.clone();
            dp[(i, j)] = 1.0;
            dp[(j, i)] = 1.0;
            consider(CertEntry::P(i, j), slope(&dp, &zs, &zpi));
        }
    }
    for i in 0..m {
        let mut ds = zs.clone();
        ds[(i, i)] = 1.0;
        consider(CertEntry::S(i), slope(&zp, &ds, &zpi));
    }
    let base = family.pi_value(&vec![0.0; family.num_vars()]);
    for k in 0..family.num_vars() {
        let mut e = vec![0.0; family.num_vars()];
        e[k] = 1.0;
        let dpi = family.pi_value(&e) - &base;
        consider(CertEntry::Multiplier(k), slope(&zp, &zs, &dpi));
    }
    let (entry, g) = best;
    let step = amount * g.signum();
    let mut out = cert.clone();
    match entry {
        CertEntry::P(i, j) => {
            out.p[(i, j)] += step;
            if i != j {
                out.p[(j, i)] += step;
            }
        }
        CertEntry::S(i) => out.s[i] += step,
        CertEntry::Multiplier(k) => {
            out.multiplier_assignment[k] += step;
            out.pi = family.pi_value(&out.multiplier_assignment);
        }
    }
    (out, entry, g)
}

/// The 5×5 Horn matrix: copositive but outside PSD+NN.
pub fn horn_matrix() -> SymMatrix {
    SymMatrix::from_rows(&[
        &[1.0, -1.0, 1.0, 1.0, -1.0],
        &[-1.0, 1.0, -1.0, 1.0, 1.0],
        &[1.0, -1.0, 1.0, -1.0, 1.0],
        &[1.0, 1.0, -1.0, 1.0, -1.0],
        &[-1.0, 1.0, 1.0, -1.0, 1.0],
    ])
    .expect("square")
}
