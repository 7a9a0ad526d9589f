//! Turns command-line flags into validated mechanism parameters.

use gradual_expiry::calibration::{
    analytic_mse_simple, calibrate_baseline, calibrate_epsilon, optimal_ratio,
};
use gradual_expiry::mechanisms::{BaselineParams, MechanismParams};

use crate::{CliError, Mechanism, MechanismArgs};

pub const DEFAULT_RATIO: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Resolved {
    Simple { epsilon: f64 },
    Expiration(MechanismParams),
    Baseline(BaselineParams),
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn horizon_for_mse(args: &MechanismArgs, fallback: Option<u64>) -> Result<u64, CliError> {
    args.t_max
        .or(fallback)
        .ok_or_else(|| usage("--mse needs a horizon: pass --t-max"))
}

fn expiration_params(
    args: &MechanismArgs,
    fallback: Option<u64>,
) -> Result<MechanismParams, CliError> {
    let (lambda, delay) = match args.mechanism {
        Mechanism::Log => (1.0, 0),
        _ => (args.lambda, args.delay),
    };
    match (args.epsilon, args.mse) {
        (Some(eps), _) => {
            MechanismParams::new(eps, lambda, delay).map_err(|e| usage(e.to_string()))
        }
        (None, Some(mse)) => {
            let t = horizon_for_mse(args, fallback)?;
            calibrate_epsilon(mse, t, lambda, delay)
                .map(|r| r.params)
                .map_err(|e| usage(e.to_string()))
        }
        (None, None) => Err(usage("pass --epsilon or --mse")),
    }
}

/// Baseline parameters from explicit budgets or calibrated to `--mse`.
pub fn baseline_params(
    args: &MechanismArgs,
    fallback: Option<u64>,
) -> Result<BaselineParams, CliError> {
    let window = args
        .window
        .ok_or_else(|| usage("the baseline needs --window"))?;
    let err = |e: String| usage(e);
    if let Some(eps_cur) = args.eps_cur {
        let eps_past = match (args.eps_past, args.ratio) {
            (Some(p), None) => p,
            (None, Some(r)) => r * eps_cur,
            (None, None) => DEFAULT_RATIO * eps_cur,
            (Some(_), Some(_)) => return Err(usage("pass only one of --eps-past and --ratio")),
        };
        return BaselineParams::new(window, eps_cur, eps_past).map_err(|e| err(e.to_string()));
    }
    let mse = args
        .mse
        .ok_or_else(|| usage("the baseline needs --eps-cur or --mse"))?;
    let t = horizon_for_mse(args, fallback)?;
    if args.optimal_ratio {
        return optimal_ratio(mse, t, window)
            .map(|(_, r)| r.params)
            .map_err(|e| err(e.to_string()));
    }
    let ratio = args.ratio.unwrap_or(DEFAULT_RATIO);
    calibrate_baseline(mse, t, window, ratio)
        .map(|r| r.params)
        .map_err(|e| err(e.to_string()))
}

/// Resolves the selected mechanism. `fallback` is the horizon used for
/// `--mse` when `--t-max` is absent.
pub fn resolve(args: &MechanismArgs, fallback: Option<u64>) -> Result<Resolved, CliError> {
    match args.mechanism {
        Mechanism::Simple => {
            let epsilon = match (args.epsilon, args.mse) {
                (Some(eps), _) => eps,
                (None, Some(mse)) if mse > 0.0 => {
                    let t = horizon_for_mse(args, fallback)?;
                    (analytic_mse_simple(1.0, t) / mse).sqrt()
                }
                (None, Some(mse)) => {
                    return Err(usage(format!("--mse must be positive, got {mse}")))
                }
                (None, None) => return Err(usage("pass --epsilon or --mse")),
            };
            if !(epsilon.is_finite() && epsilon > 0.0) {
                return Err(usage(format!("epsilon must be positive, got {epsilon}")));
            }
            Ok(Resolved::Simple { epsilon })
        }
        Mechanism::Log | Mechanism::Expiration => {
            expiration_params(args, fallback).map(Resolved::Expiration)
        }
        Mechanism::Baseline => baseline_params(args, fallback).map(Resolved::Baseline),
    }
}
