//! CSV series for each figure, with every mechanism calibrated to MSE 1000
//! over the figure's horizon.

use std::fs;
use std::path::Path;

use gradual_expiry::audit::{
    curve_alg3, exact_g_sum, published_theoretical_g, BaselineAudit, PrivacyLossCurve,
};
use gradual_expiry::calibration::{calibrate_baseline, calibrate_epsilon, optimal_ratio};
use gradual_expiry::mechanisms::BaselineParams;

use crate::commands::io_error;
use crate::params::DEFAULT_RATIO;
use crate::{CliError, FigureId};

const TARGET_MSE: f64 = 1000.0;
const SHORT: u64 = 1_000;
const LONG: u64 = 1_000_000;

enum Ratio {
    Fixed,
    Optimal,
}

struct Series {
    name: String,
    points: Vec<(u64, f64)>,
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn alg3_series(lambda: f64, horizon: u64, d_max: u64) -> Result<Series, CliError> {
    let params = calibrate_epsilon(TARGET_MSE, horizon, lambda, 0)
        .map_err(usage)?
        .params;
    let curve = curve_alg3(&params, d_max, horizon);
    Ok(Series {
        name: format!("alg3_lambda{lambda}"),
        points: curve.points().iter().map(|p| (p.d, p.loss)).collect(),
    })
}

fn baseline_series(
    window: u64,
    horizon: u64,
    d_max: u64,
    ratio: &Ratio,
) -> Result<Series, CliError> {
    let params: BaselineParams = match ratio {
        Ratio::Fixed => {
            calibrate_baseline(TARGET_MSE, horizon, window, DEFAULT_RATIO)
                .map_err(usage)?
                .params
        }
        Ratio::Optimal => {
            optimal_ratio(TARGET_MSE, horizon, window)
                .map_err(usage)?
                .1
                .params
        }
    };
    let curve: PrivacyLossCurve = BaselineAudit::new(params, horizon).curve(d_max);
    Ok(Series {
        name: format!("baseline_w{window}"),
        points: curve.points().iter().map(|p| (p.d, p.loss)).collect(),
    })
}

fn series_for(id: FigureId, d_max: Option<u64>) -> Result<(&'static str, Vec<Series>), CliError> {
    let horizon = match id {
        FigureId::Fig4 | FigureId::Fig5b => LONG,
        _ => SHORT,
    };
    let d_max = d_max.unwrap_or(horizon - 1);
    let comparison = |ratio: Ratio| -> Result<Vec<Series>, CliError> {
        let mut out = Vec::new();
        for lambda in [1.0, 2.0, 3.0] {
            out.push(alg3_series(lambda, horizon, d_max)?);
        }
        for w in [127, 1023] {
            out.push(baseline_series(w, horizon, d_max, &ratio)?);
        }
        Ok(out)
    };
    let windows = |ratio: Ratio| -> Result<Vec<Series>, CliError> {
        [31, 63, 127]
            .into_iter()
            .map(|w| baseline_series(w, horizon, d_max, &ratio))
            .collect()
    };
    Ok(match id {
        FigureId::Fig2a => {
            let params = calibrate_epsilon(TARGET_MSE, horizon, 2.0, 0)
                .map_err(usage)?
                .params;
            let mut empirical = alg3_series(2.0, horizon, d_max)?;
            empirical.name = "alg3_lambda2_empirical".into();
            let theoretical = Series {
                name: "alg3_lambda2_theoretical".into(),
                points: (0..=d_max)
                    .map(|d| (d, published_theoretical_g(d, &params)))
                    .collect(),
            };
            let exact = Series {
                name: "alg3_lambda2_exact_sum".into(),
                points: (0..=d_max).map(|d| (d, exact_g_sum(d, &params))).collect(),
            };
            ("2a", vec![empirical, theoretical, exact])
        }
        FigureId::Fig2b => (
            "2b",
            [1.0, 2.0, 3.0]
                .into_iter()
                .map(|l| alg3_series(l, horizon, d_max))
                .collect::<Result<_, _>>()?,
        ),
        FigureId::Fig3 => ("3", windows(Ratio::Fixed)?),
        FigureId::Fig4 => ("4", comparison(Ratio::Fixed)?),
        FigureId::Fig5a => ("5a", windows(Ratio::Optimal)?),
        FigureId::Fig5b => ("5b", comparison(Ratio::Optimal)?),
    })
}

/// Writes `fig<id>_<series>.csv` files with header `d,loss` into `dir`.
pub fn write_figure(id: FigureId, dir: &Path, d_max: Option<u64>) -> Result<(), CliError> {
    let (label, series) = series_for(id, d_max)?;
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))?;
    for s in series {
        let path = dir.join(format!("fig{label}_{}.csv", s.name));
        let mut out = csv::Writer::from_path(&path)
            .map_err(|e| CliError::Input(format!("cannot create {}: {e}", path.display())))?;
        out.write_record(["d", "loss"]).map_err(io_error)?;
        for (d, loss) in s.points {
            out.write_record([d.to_string(), loss.to_string()])
                .map_err(io_error)?;
        }
        out.flush().map_err(io_error)?;
        println!("{}", path.display());
    }
    Ok(())
}
