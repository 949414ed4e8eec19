//! Dual certificates for `ℓ₁` recovery.
//!
//! [`golfing_scheme`] builds `v = A*w` batch by batch so that `v_T` closes in
//! on `sgn(x_T)` while `v_{T^c}` stays small; batches failing either
//! acceptance test are discarded and redrawn. The `verify_*` functions check
//! the exact and inexact duality conditions and report a margin for each.

mod duality;
mod golfing;

pub use duality::{
    certificate_w_norm_check, gram_inverse_norm, least_squares_certificate, tighten_to_exact, verify_exact_duality,
    verify_inexact_duality, Condition, ExactDualityReport, InexactDualityReport, WNormCheck, DEFAULT_C0, EXACT_TOL,
    RANK_TOL,
};
pub use golfing::{golfing_on_matrix, golfing_scheme, BatchRecord, DualCertificate, GolfingConfig, DEFAULT_PREFACTOR};

#[cfg(test)]
mod tests;
