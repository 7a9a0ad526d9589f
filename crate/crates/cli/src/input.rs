use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::CliError;

/// Synthetic input streams.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Generator {
    Zeros,
    Ones,
    Bernoulli(f64),
}

impl FromStr for Generator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "zeros" => Ok(Generator::Zeros),
            "ones" => Ok(Generator::Ones),
            other => {
                let p = other
                    .strip_prefix("bernoulli(")
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| {
                        format!("unknown generator `{other}`; expected zeros, ones or bernoulli(p)")
                    })?;
                let p: f64 = p
                    .trim()
                    .parse()
                    .map_err(|_| format!("bad probability in `{other}`"))?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(format!("probability must lie in [0, 1], got {p}"));
                }
                Ok(Generator::Bernoulli(p))
            }
        }
    }
}

impl Generator {
    /// `len` values; Bernoulli draws come from their own stream keyed by `seed`.
    pub fn generate(self, len: u64, seed: u64) -> Vec<f64> {
        match self {
            Generator::Zeros => vec![0.0; len as usize],
            Generator::Ones => vec![1.0; len as usize],
            Generator::Bernoulli(p) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5851_f42d_4c95_7f2d);
                (0..len)
                    .map(|_| if rng.random_bool(p) { 1.0 } else { 0.0 })
                    .collect()
            }
        }
    }
}

/// Reads one value per line. Blank lines are skipped; anything that is not a
/// number in `[0, 1]` is reported with its 1-based line number.
pub fn read_stream(path: &Path, limit: Option<u64>) -> Result<Vec<f64>, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::Input(format!("cannot open {}: {e}", path.display())))?;
    let mut values = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        if limit.is_some_and(|l| values.len() as u64 >= l) {
            break;
        }
        let line_no = i + 1;
        let line =
            line.map_err(|e| CliError::Input(format!("{}:{line_no}: {e}", path.display())))?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let value: f64 = text.parse().map_err(|_| {
            CliError::Input(format!(
                "{}:{line_no}: not a number: `{text}`",
                path.display()
            ))
        })?;
        if !(0.0..=1.0).contains(&value) {
            return Err(CliError::Input(format!(
                "{}:{line_no}: value {value} outside [0, 1]",
                path.display()
            )));
        }
        values.push(value);
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_generators() {
        assert_eq!("zeros".parse::<Generator>(), Ok(Generator::Zeros));
        assert_eq!(
            "bernoulli(0.25)".parse::<Generator>(),
            Ok(Generator::Bernoulli(0.25))
        );
        assert!("bernoulli(2)".parse::<Generator>().is_err());
        assert!("poisson(1)".parse::<Generator>().is_err());
    }

    #[test]
    fn bernoulli_is_seeded() {
        let g = Generator::Bernoulli(0.5);
        assert_eq!(g.generate(100, 3), g.generate(100, 3));
        assert_ne!(g.generate(100, 3), g.generate(100, 4));
        assert!(Generator::Bernoulli(1.0)
            .generate(10, 0)
            .iter()
            .all(|&x| x == 1.0));
    }
}
