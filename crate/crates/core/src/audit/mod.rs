//! Privacy-loss auditing: empirical worst-case loss curves, closed-form
//! expiration bounds, an executable check of the shift coupling, and a
//! consistency check against the error/expiration lower bound.

mod baseline;
mod coupling;
mod curve;
mod expiration;
mod lower_bound;

pub use baseline::{audit_baseline, empirical_loss_baseline, BaselineAudit, BaselineLossTerms};
pub use coupling::{coupling_shift, verify_coupling, CouplingReport, ShiftReport};
pub use curve::{CurvePoint, PrivacyLossCurve};
pub use expiration::{
    audit_alg3, bounded_search_alg3, curve_alg3, empirical_loss_alg3, exact_g_sum, level_cost,
    position_search_bound, published_theoretical_g, theoretical_g, worst_position_alg3, AuditRow,
    WorstPosition,
};
pub use lower_bound::{lower_bound_check, LogBase, LowerBoundReport};

use thiserror::Error;

use crate::dyadic::DyadicError;
use crate::mechanisms::MechanismError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AuditError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("streams are not neighbouring: {0}")]
    NotNeighboring(String),
    #[error("curve has no point at d = {0}")]
    CurveTooShort(u64),
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
    #[error(transparent)]
    Dyadic(#[from] DyadicError),
}
