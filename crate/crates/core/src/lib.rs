//! Finite-gain l2 stability certificates for discrete-time recurrent
//! networks with ReLU activations.
//!
//! The network `x(k+1) = Λx(k) + W_in w(k) + v(k)`, `z(k) = W_out x(k)`,
//! `w(k) = relu(z(k) + s(k))` is certified by a linear matrix inequality in
//! `P ⪰ 0`, a positive diagonal `S`, and a static multiplier `Π` drawn from
//! one or more multiplier families (Zames-Falb, polytopic bounding, diagonal
//! sector, copositive). Everything is solved through a pluggable conic
//! backend and every returned certificate is re-checked with independent
//! eigenvalue computations before it is trusted.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod cones;
pub mod dynamics;
pub mod error;
pub mod expr;
pub mod linalg;
pub mod multipliers;
pub mod program;
pub mod sampling;
pub mod solver;
pub mod sweep;

pub use certify::{
    assemble, certificate_gain_bound, run_test, solve, verify_certificate, Certificate,
    CertifyOptions, FeasibilityProblem, Outcome, Status, StoredCertificate, TestId, TestResult,
    VerificationReport,
};
pub use cones::{copositivity_verdict, is_entrywise_nonneg, is_psd, psd_plus_nn_membership, CopositivityStatus, CopositivityVerdict, SymMatrix};
pub use dynamics::{
    empirical_gain_lower_bound, hinf_norm, l2_norm, relu, relu_triple_satisfied, simulate,
    RnnModel, Signal, Trajectory,
};
pub use error::{Error, Result};
pub use multipliers::{
    cop0_family, copositive_family, diag_sector_family, family_sum, pointwise_iqc_value,
    polytopic_family, zames_falb_family, MultiplierFamily,
};
pub use solver::{ClarabelBackend, ConicBackend, SolverOptions};
pub use sweep::{
    compare_regions, emit_outputs, inclusion_audit, load_config, run_sweep, RegionClass, RegionMap,
    SweepConfig, SweepRecord,
};
