use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use gradual_expiry::audit::{audit_alg3, audit_baseline, AuditRow};
use gradual_expiry::calibration::{
    analytic_mse_alg3, analytic_mse_baseline, analytic_mse_simple, calibrate_baseline,
    calibrate_epsilon, optimal_ratio,
};
use gradual_expiry::mechanisms::{
    BaselineMechanism, ContinualCounter, ExpirationMechanism, SimpleMechanism,
};
use gradual_expiry::noise::KeyedNoise;

use crate::input::{read_stream, Generator};
use crate::params::{resolve, Resolved, DEFAULT_RATIO};
use crate::{CliError, Mechanism, MechanismArgs};

pub fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            CliError::Input(format!("cannot create {}: {e}", p.display()))
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn io_error(e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("write failed: {e}"))
}

/// Formats `v` with four significant digits.
pub fn sig4(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return v.to_string();
    }
    let decimals = (3 - v.abs().log10().floor() as i32).max(0) as usize;
    format!("{v:.decimals$}")
}

pub fn run(
    args: &MechanismArgs,
    seed: u64,
    input: Option<&Path>,
    generator: Option<Generator>,
    output: Option<&Path>,
) -> Result<(), CliError> {
    let stream = match (input, generator) {
        (Some(path), _) => read_stream(path, args.t_max)?,
        (None, Some(g)) => {
            let len = args
                .t_max
                .ok_or_else(|| CliError::Usage("a generator needs --t-max".into()))?;
            g.generate(len, seed)
        }
        (None, None) => return Err(CliError::Usage("pass --input or --generator".into())),
    };
    let noise = KeyedNoise::new(seed);
    let mut counter: Box<dyn ContinualCounter> = match resolve(args, Some(stream.len() as u64))? {
        Resolved::Simple { epsilon } => Box::new(
            SimpleMechanism::new(epsilon, noise).map_err(|e| CliError::Usage(e.to_string()))?,
        ),
        Resolved::Expiration(p) => Box::new(ExpirationMechanism::new(p, noise)),
        Resolved::Baseline(p) => Box::new(BaselineMechanism::new(p, noise)),
    };
    let mut out = csv::Writer::from_writer(open_output(output)?);
    out.write_record(["t", "true_sum", "released", "abs_error"])
        .map_err(io_error)?;
    let mut truth = 0.0;
    for (i, &x) in stream.iter().enumerate() {
        let t = i + 1;
        let released = counter
            .step(x)
            .map_err(|e| CliError::Input(format!("line {t}: {e}")))?;
        truth += x;
        let err = (released - truth).abs();
        out.write_record([
            t.to_string(),
            truth.to_string(),
            released.to_string(),
            err.to_string(),
        ])
        .map_err(io_error)?;
    }
    out.flush().map_err(io_error)
}

pub fn write_audit_rows(rows: &[AuditRow], output: Option<&Path>) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(open_output(output)?);
    out.write_record(["d", "loss_empirical", "loss_envelope", "loss_theoretical"])
        .map_err(io_error)?;
    for r in rows {
        out.write_record([
            r.d.to_string(),
            r.loss_empirical.to_string(),
            r.loss_envelope.to_string(),
            r.loss_theoretical
                .map(|v| v.to_string())
                .unwrap_or_default(),
        ])
        .map_err(io_error)?;
    }
    out.flush().map_err(io_error)
}

pub fn audit(args: &MechanismArgs, d_max: u64, output: Option<&Path>) -> Result<(), CliError> {
    let horizon = args.t_max.unwrap_or(u64::MAX);
    let rows = match resolve(args, Some(d_max + 1))? {
        Resolved::Expiration(p) => audit_alg3(&p, d_max, horizon),
        Resolved::Baseline(p) => audit_baseline(&p, d_max, horizon),
        Resolved::Simple { .. } => {
            return Err(CliError::Usage(
                "audit supports the log, expiration and baseline mechanisms".into(),
            ))
        }
    };
    write_audit_rows(&rows, output)
}

pub fn calibrate(args: &MechanismArgs) -> Result<(), CliError> {
    let usage = |e: String| CliError::Usage(e);
    let mse = args
        .mse
        .ok_or_else(|| CliError::Usage("calibrate needs --mse".into()))?;
    let horizon = args
        .t_max
        .ok_or_else(|| CliError::Usage("calibrate needs --t-max".into()))?;
    let mut lines = vec![format!("horizon: {horizon}"), format!("target_mse: {mse}")];
    let achieved = match args.mechanism {
        Mechanism::Simple => {
            if !(mse.is_finite() && mse > 0.0) {
                return Err(usage(format!("--mse must be positive, got {mse}")));
            }
            let eps = (analytic_mse_simple(1.0, horizon) / mse).sqrt();
            lines.push(format!("epsilon: {} ({eps})", sig4(eps)));
            analytic_mse_simple(eps, horizon)
        }
        Mechanism::Log | Mechanism::Expiration => {
            let (lambda, delay) = if args.mechanism == Mechanism::Log {
                (1.0, 0)
            } else {
                (args.lambda, args.delay)
            };
            let r =
                calibrate_epsilon(mse, horizon, lambda, delay).map_err(|e| usage(e.to_string()))?;
            let eps = r.params.epsilon();
            lines.push(format!("lambda: {lambda}"));
            lines.push(format!("delay: {delay}"));
            lines.push(format!("epsilon: {} ({eps})", sig4(eps)));
            analytic_mse_alg3(&r.params, horizon)
        }
        Mechanism::Baseline => {
            let window = args
                .window
                .ok_or_else(|| CliError::Usage("the baseline needs --window".into()))?;
            let (ratio, r) = if args.optimal_ratio {
                optimal_ratio(mse, horizon, window).map_err(|e| usage(e.to_string()))?
            } else {
                let ratio = args.ratio.unwrap_or(DEFAULT_RATIO);
                (
                    ratio,
                    calibrate_baseline(mse, horizon, window, ratio)
                        .map_err(|e| usage(e.to_string()))?,
                )
            };
            lines.push(format!("window: {window}"));
            lines.push(format!("ratio: {} ({ratio})", sig4(ratio)));
            lines.push(format!(
                "eps_cur: {} ({})",
                sig4(r.params.eps_cur()),
                r.params.eps_cur()
            ));
            lines.push(format!(
                "eps_past: {} ({})",
                sig4(r.params.eps_past()),
                r.params.eps_past()
            ));
            analytic_mse_baseline(&r.params, horizon)
        }
    };
    lines.push(format!("achieved_mse: {achieved}"));
    let mut out = io::stdout().lock();
    for line in lines {
        writeln!(out, "{line}").map_err(io_error)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_significant_digits() {
        assert_eq!(sig4(0.134072), "0.1341");
        assert_eq!(sig4(1.09577), "1.096");
        assert_eq!(sig4(0.0554213), "0.05542");
        assert_eq!(sig4(1234.6), "1235");
        assert_eq!(sig4(0.0), "0");
    }
}
