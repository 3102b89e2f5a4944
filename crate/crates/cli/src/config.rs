use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use triwell::secular::Recipe;
use triwell::{CouplingParams, Sigma, DEFAULT_TOL};

use crate::CliError;

pub const PRECISION_ENV: &str = "TRIWELL_PRECISION";
pub const DEFAULT_PRECISION: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Spectrum,
    Critical,
    Domain,
    Curves,
    Verify,
    Wavefunction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecipeArg {
    #[default]
    Corrected,
    Printed,
}

impl From<RecipeArg> for Recipe {
    fn from(r: RecipeArg) -> Recipe {
        match r {
            RecipeArg::Corrected => Recipe::Corrected,
            RecipeArg::Printed => Recipe::Printed,
        }
    }
}

/// Command-line flags. Everything except the command may also come from a
/// TOML file given by `--config`.
#[derive(Debug, Clone, Default, Parser)]
#[command(name = "triwell", version, about = "Bound states of the three-channel imaginary square well")]
#[command(allow_negative_numbers = true)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Option<CommandKind>,
    /// Inter-channel coupling.
    #[arg(long = "Y")]
    pub y: Option<f64>,
    /// Diagonal coupling.
    #[arg(long = "Z")]
    pub z: Option<f64>,
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub grid_n: Option<usize>,
    /// Points per curve or wavefunction.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Largest table row N for `critical`.
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub y_min: Option<f64>,
    #[arg(long)]
    pub y_max: Option<f64>,
    #[arg(long)]
    pub z_min: Option<f64>,
    #[arg(long)]
    pub z_max: Option<f64>,
    /// Grid points per axis for `domain`.
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Right end of the s axis for `curves`.
    #[arg(long)]
    pub s_max: Option<f64>,
    /// Level index for `wavefunction`.
    #[arg(long)]
    pub n: Option<usize>,
    /// Branch 1, 2 or 3 for `wavefunction`.
    #[arg(long)]
    pub sigma: Option<u8>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Significant digits in the output (6 to 17).
    #[arg(long)]
    pub precision: Option<usize>,
    /// Overrides the computed critical coupling.
    #[arg(long)]
    pub z_crit: Option<f64>,
    #[arg(long, value_enum)]
    pub recipe: Option<RecipeArg>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Same keys as the flags, all optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<CommandKind>,
    #[serde(alias = "Y")]
    pub y: Option<f64>,
    #[serde(alias = "Z")]
    pub z: Option<f64>,
    pub n_max: Option<usize>,
    pub grid_n: Option<usize>,
    pub samples: Option<usize>,
    pub iterations: Option<usize>,
    pub y_min: Option<f64>,
    pub y_max: Option<f64>,
    pub z_min: Option<f64>,
    pub z_max: Option<f64>,
    pub resolution: Option<usize>,
    pub s_max: Option<f64>,
    pub n: Option<usize>,
    pub sigma: Option<u8>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub precision: Option<usize>,
    pub z_crit: Option<f64>,
    pub recipe: Option<RecipeArg>,
    pub tol: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ranges {
    pub y_min: f64,
    pub y_max: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub resolution: usize,
}

impl Ranges {
    pub fn y_at(&self, i: usize) -> f64 {
        lerp(self.y_min, self.y_max, i, self.resolution)
    }

    pub fn z_at(&self, j: usize) -> f64 {
        lerp(self.z_min, self.z_max, j, self.resolution)
    }
}

fn lerp(lo: f64, hi: f64, i: usize, count: usize) -> f64 {
    if i + 1 == count {
        hi
    } else {
        lo + (hi - lo) * i as f64 / (count - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub y: f64,
    pub z: f64,
    pub n_max: usize,
    pub grid_n: usize,
    pub samples: usize,
    pub iterations: usize,
    pub ranges: Ranges,
    pub s_max: f64,
    pub n: usize,
    pub sigma: u8,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub precision: usize,
    pub z_crit: Option<f64>,
    pub recipe: RecipeArg,
    pub tol: f64,
}

impl RunConfig {
    /// Merges flags over the file over the defaults. Precision additionally
    /// falls back to `env_precision` before its default.
    pub fn resolve(cli: Cli, file: FileConfig, env_precision: Option<&str>) -> Result<Self, CliError> {
        let command = cli
            .command
            .or(file.command)
            .ok_or_else(|| CliError::Usage("missing command".into()))?;
        let env_precision = match env_precision {
            Some(v) => Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| CliError::Usage(format!("{PRECISION_ENV}={v} is not a digit count")))?,
            ),
            None => None,
        };
        let cfg = RunConfig {
            command,
            y: cli.y.or(file.y).unwrap_or(0.0),
            z: cli.z.or(file.z).unwrap_or(0.0),
            n_max: cli.n_max.or(file.n_max).unwrap_or(5),
            grid_n: cli.grid_n.or(file.grid_n).unwrap_or(200),
            samples: cli.samples.or(file.samples).unwrap_or(201),
            iterations: cli.iterations.or(file.iterations).unwrap_or(12),
            ranges: Ranges {
                y_min: cli.y_min.or(file.y_min).unwrap_or(-3.5),
                y_max: cli.y_max.or(file.y_max).unwrap_or(3.5),
                z_min: cli.z_min.or(file.z_min).unwrap_or(-5.0),
                z_max: cli.z_max.or(file.z_max).unwrap_or(5.0),
                resolution: cli.resolution.or(file.resolution).unwrap_or(101),
            },
            s_max: cli.s_max.or(file.s_max).unwrap_or(3.0 * std::f64::consts::PI),
            n: cli.n.or(file.n).unwrap_or(0),
            sigma: cli.sigma.or(file.sigma).unwrap_or(1),
            output: cli.output.or(file.output),
            format: cli.format.or(file.format).unwrap_or_default(),
            precision: cli.precision.or(file.precision).or(env_precision).unwrap_or(DEFAULT_PRECISION),
            z_crit: cli.z_crit.or(file.z_crit),
            recipe: cli.recipe.or(file.recipe).unwrap_or_default(),
            tol: cli.tol.or(file.tol).unwrap_or(DEFAULT_TOL),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        if !(6..=17).contains(&self.precision) {
            return usage(format!("precision must lie in [6, 17], got {}", self.precision));
        }
        let r = &self.ranges;
        if !(r.y_min < r.y_max) || !(r.z_min < r.z_max) {
            return usage("ranges need min < max".into());
        }
        if r.resolution < 2 {
            return usage(format!("resolution must be at least 2, got {}", r.resolution));
        }
        if self.samples < 2 {
            return usage(format!("samples must be at least 2, got {}", self.samples));
        }
        if !(self.s_max > 0.0 && self.s_max.is_finite()) {
            return usage(format!("s-max must be positive, got {}", self.s_max));
        }
        if Sigma::from_index(self.sigma).is_none() {
            return usage(format!("sigma must be 1, 2 or 3, got {}", self.sigma));
        }
        if let Some(zc) = self.z_crit {
            if !(zc > 0.0 && zc.is_finite()) {
                return usage(format!("z-crit must be positive, got {zc}"));
            }
        }
        self.params().map(|_| ())
    }

    pub fn params(&self) -> Result<CouplingParams, CliError> {
        CouplingParams::new(self.y, self.z)
            .and_then(|p| p.with_tol(self.tol))
            .map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn sigma(&self) -> Sigma {
        Sigma::from_index(self.sigma).unwrap_or(Sigma::One)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("triwell").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flag_beats_file_beats_env() {
        let file = FileConfig {
            precision: Some(8),
            y: Some(0.5),
            ..Default::default()
        };
        let c = RunConfig::resolve(cli(&["spectrum", "--precision", "7"]), file.clone(), Some("9")).unwrap();
        assert_eq!(c.precision, 7);
        assert_eq!(c.y, 0.5);
        let c = RunConfig::resolve(cli(&["spectrum"]), file, Some("9")).unwrap();
        assert_eq!(c.precision, 8);
        let c = RunConfig::resolve(cli(&["spectrum"]), FileConfig::default(), Some("9")).unwrap();
        assert_eq!(c.precision, 9);
        let c = RunConfig::resolve(cli(&["spectrum"]), FileConfig::default(), None).unwrap();
        assert_eq!(c.precision, 12);
    }

    #[test]
    fn negative_couplings_parse() {
        let c = RunConfig::resolve(cli(&["spectrum", "--Y", "-1", "--Z", "-4.6"]), FileConfig::default(), None).unwrap();
        assert_eq!((c.y, c.z), (-1.0, -4.6));
    }

    #[test]
    fn rejects_bad_values() {
        for args in [
            &["spectrum", "--precision", "5"][..],
            &["spectrum", "--precision", "18"],
            &["domain", "--y-min", "1", "--y-max", "1"],
            &["domain", "--resolution", "1"],
            &["wavefunction", "--sigma", "4"],
            &["curves", "--s-max", "-1"],
            &["spectrum", "--tol", "0"],
        ] {
            let err = RunConfig::resolve(cli(args), FileConfig::default(), None).unwrap_err();
            assert_eq!(err.exit_code(), 64, "{args:?}");
        }
        assert!(RunConfig::resolve(cli(&["spectrum"]), FileConfig::default(), Some("x")).is_err());
        assert!(RunConfig::resolve(cli(&[]), FileConfig::default(), None).is_err());
    }

    #[test]
    fn file_config_parses() {
        let f: FileConfig = toml::from_str("command = \"domain\"\nY = 1.0\nresolution = 11\nformat = \"json\"").unwrap();
        assert_eq!(f.command, Some(CommandKind::Domain));
        assert_eq!(f.y, Some(1.0));
        assert_eq!(f.format, Some(Format::Json));
        assert!(toml::from_str::<FileConfig>("bogus = 1").is_err());
    }

    #[test]
    fn range_endpoints_are_exact() {
        let r = Ranges {
            y_min: -0.3,
            y_max: 0.7,
            z_min: 0.0,
            z_max: 1.0,
            resolution: 7,
        };
        assert_eq!(r.y_at(0), -0.3);
        assert_eq!(r.y_at(6), 0.7);
    }
}
