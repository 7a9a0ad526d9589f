//! Consistency check against the lower bound linking a counter's additive
//! error `C` to its expiration function `g`: any mechanism with error at
//! most `C` (with probability 2/3) over horizon `T` must satisfy
//! `Σ_{j<2C} g(j) ≥ ln(T/6C)/ε`.

use super::curve::PrivacyLossCurve;
use super::AuditError;

/// Logarithm used for the right-hand side. The inequality is derived through
/// `e^{ε Σ g}`, so natural log is the default; base 2 is offered for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    #[default]
    Natural,
    Two,
}

impl LogBase {
    fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Two => x.log2(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBoundReport {
    /// `Σ_{j=0}^{2C−1} envelope(j)`.
    pub envelope_sum: f64,
    /// `log(T/6C)/ε`.
    pub required_sum: f64,
    /// `2C · envelope(2C−1)`.
    pub corner_value: f64,
    /// `log(T/6C)/(2ε)`.
    pub required_corner: f64,
    pub holds: bool,
    pub corner_holds: bool,
}

/// Evaluates both forms of the bound on the envelope of `g_curve`, a curve of
/// expiration-function values (privacy loss divided by `epsilon`). `holds`
/// refers to the summed form.
pub fn lower_bound_check(
    horizon: u64,
    error: u64,
    epsilon: f64,
    g_curve: &PrivacyLossCurve,
    base: LogBase,
) -> Result<LowerBoundReport, AuditError> {
    if error == 0 || 2 * error as u128 >= horizon as u128 {
        return Err(AuditError::Domain(format!(
            "need 0 < C < T/2, got C = {error}, T = {horizon}"
        )));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(AuditError::Domain(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let last = 2 * error - 1;
    let mut envelope_sum = 0.0;
    for j in 0..=last {
        envelope_sum += g_curve.envelope(j).ok_or(AuditError::CurveTooShort(j))?;
    }
    let corner = g_curve
        .envelope(last)
        .ok_or(AuditError::CurveTooShort(last))?;
    let log_term = base.log(horizon as f64 / (6.0 * error as f64));
    let required_sum = log_term / epsilon;
    let required_corner = log_term / (2.0 * epsilon);
    let corner_value = 2.0 * error as f64 * corner;
    Ok(LowerBoundReport {
        envelope_sum,
        required_sum,
        corner_value,
        required_corner,
        holds: envelope_sum >= required_sum,
        corner_holds: corner_value >= required_corner,
    })
}
