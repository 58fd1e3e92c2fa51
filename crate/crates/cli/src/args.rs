use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use llproj_core::Coupling;

/// Exact fixed-number projections of the Lieb-Liniger ground state.
///
/// Flags override entries of an optional `--config` file of `key = value`
/// lines (keys are long flag names without dashes). The worker-thread count
/// comes from `--threads` or the LLPROJ_THREADS environment variable and
/// defaults to the number of cores.
#[derive(Debug, Parser)]
#[command(name = "llproj", version, args_override_self = true)]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Worker threads.
    #[arg(long, global = true, env = "LLPROJ_THREADS")]
    pub threads: Option<usize>,

    /// Plain `key = value` file supplying defaults for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ground-state Bethe roots and Gaudin norm.
    Roots(PointArgs),
    /// Projection probability p(k).
    Prob(OutcomeArgs),
    /// Entanglement spectrum and entropy of the projected state.
    Entropy(OutcomeArgs),
    /// p(k), S_A(k) and E_k for every k, with E_PP.
    Report(PointArgs),
    /// Sweep over particle numbers and a coupling grid.
    Sweep(SweepArgs),
    /// Free-fermion counting statistics and their asymptotics.
    Tg(TgArgs),
    /// Brute-force validators.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Debug, Clone, Args)]
pub struct PointArgs {
    /// Particle number.
    #[arg(long)]
    pub n: usize,
    /// Coupling c > 0, 0 for free bosons, or `tg` for the impenetrable limit.
    #[arg(long)]
    pub c: CouplingArg,
    /// Arc fraction of partition A.
    #[arg(long, default_value_t = 0.5)]
    pub ell: f64,
    /// Bethe-equation residual tolerance.
    #[arg(long, default_value_t = llproj_core::bethe::DEFAULT_TOLERANCE)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct OutcomeArgs {
    #[command(flatten)]
    pub point: PointArgs,
    /// Particles found in A: an integer, `balanced` (N/2, rounded down) or `all`.
    #[arg(long)]
    pub k: KSelect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Outputs {
    Prob,
    Entropy,
    Epp,
    All,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Comma-separated particle numbers.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    /// `log:start:stop:count` or `lin:start:stop:count`.
    #[arg(long)]
    pub c_grid: CGrid,
    /// Skip the Tonks-Girardeau row appended after each grid.
    #[arg(long)]
    pub no_tg: bool,
    #[arg(long, default_value_t = 0.5)]
    pub ell: f64,
    #[arg(long, default_value = "balanced")]
    pub k: KSelect,
    /// Quantities to compute; `epp` and `all` need every k.
    #[arg(long, value_enum, default_value_t = Outputs::All)]
    pub outputs: Outputs,
    #[arg(long, default_value_t = llproj_core::bethe::DEFAULT_TOLERANCE)]
    pub tol: f64,
    /// Output file (stdout if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TgArgs {
    /// Comma-separated particle numbers.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub ell: f64,
    #[arg(long, default_value = "all")]
    pub k: KSelect,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum OracleCommand {
    /// Monte Carlo estimate of p(k) next to the exact value.
    Mc(McArgs),
    /// Grid-discretized reduced density matrix (N <= 3).
    Grid(GridArgs),
    /// One ordered-simplex integral, exact and by adaptive quadrature.
    Simplex(SimplexArgs),
}

#[derive(Debug, Clone, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub point: PointArgs,
    #[arg(long, default_value = "all")]
    pub k: KSelect,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub point: PointArgs,
    #[arg(long)]
    pub k: KSelect,
    /// Cells per dimension of the fine grid; the coarse grid has half.
    #[arg(long, default_value_t = 100)]
    pub points: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SimplexArgs {
    /// Comma-separated exponents (at most four for the quadrature check).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub mu: Vec<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingArg(pub Coupling);

impl FromStr for CouplingArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tg" | "inf" | "infinity" => Ok(Self(Coupling::TonksGirardeau)),
            other => other
                .parse::<f64>()
                .map(|c| Self(Coupling::Finite(c)))
                .map_err(|_| format!("expected a number or `tg`, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KSelect {
    Balanced,
    All,
    One(usize),
}

impl KSelect {
    pub fn resolve(self, n: usize) -> Vec<usize> {
        match self {
            KSelect::Balanced => vec![n / 2],
            KSelect::All => (0..=n).collect(),
            KSelect::One(k) => vec![k],
        }
    }
}

impl FromStr for KSelect {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "balanced" => Ok(Self::Balanced),
            "all" => Ok(Self::All),
            other => other
                .parse()
                .map(Self::One)
                .map_err(|_| format!("expected an integer, `balanced` or `all`, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Log,
    Lin,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CGrid {
    pub spacing: Spacing,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl CGrid {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let steps = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                let t = i as f64 / steps;
                match self.spacing {
                    Spacing::Lin => self.start + t * (self.stop - self.start),
                    Spacing::Log => 10f64.powf(self.start.log10() + t * (self.stop.log10() - self.start.log10())),
                }
            })
            .collect()
    }
}

impl fmt::Display for CGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.spacing {
            Spacing::Log => "log",
            Spacing::Lin => "lin",
        };
        write!(f, "{kind}:{}:{}:{}", self.start, self.stop, self.count)
    }
}

impl FromStr for CGrid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [kind, start, stop, count] = parts.as_slice() else {
            return Err(format!("expected `log|lin:start:stop:count`, got `{s}`"));
        };
        let spacing = match *kind {
            "log" => Spacing::Log,
            "lin" => Spacing::Lin,
            other => return Err(format!("unknown grid spacing `{other}`")),
        };
        let num = |v: &str| v.parse::<f64>().map_err(|_| format!("bad grid bound `{v}`"));
        let grid = CGrid {
            spacing,
            start: num(start)?,
            stop: num(stop)?,
            count: count.parse().map_err(|_| format!("bad grid count `{count}`"))?,
        };
        if grid.count == 0 {
            return Err("grid count must be at least 1".into());
        }
        if spacing == Spacing::Log && !(grid.start > 0.0 && grid.stop > 0.0) {
            return Err("log grid bounds must be positive".into());
        }
        if !(grid.start.is_finite() && grid.stop.is_finite()) || grid.start < 0.0 || grid.stop < 0.0 {
            return Err("grid bounds must be finite and nonnegative".into());
        }
        Ok(grid)
    }
}

/// Splices `--key value` pairs from the `--config` file in front of the
/// user's own flags for the selected (sub)command, so that explicit flags win.
pub fn with_config(raw: Vec<OsString>) -> Result<Vec<OsString>, clap::Error> {
    let Some(path) = config_path(&raw) else {
        return Ok(raw);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| {
        Cli::command().error(
            clap::error::ErrorKind::Io,
            format!("cannot read config file {}: {e}", path.display()),
        )
    })?;
    let entries = parse_config(&text).map_err(|e| Cli::command().error(clap::error::ErrorKind::InvalidValue, e))?;

    let root = Cli::command();
    let mut cmd = root.clone();
    let mut insert_at = raw.len().min(1);
    for (i, tok) in raw.iter().enumerate().skip(1) {
        let Some(tok) = tok.to_str() else { continue };
        if let Some(sub) = cmd.find_subcommand(tok) {
            cmd = sub.clone();
            insert_at = i + 1;
        }
    }
    let mut spliced = Vec::new();
    for (key, value) in entries {
        if key == "config" {
            continue;
        }
        let arg = cmd
            .get_arguments()
            .chain(root.get_arguments())
            .find(|a| a.get_long() == Some(key.as_str()));
        match arg {
            Some(arg) if arg.get_action().takes_values() => {
                spliced.push(OsString::from(format!("--{key}")));
                spliced.push(OsString::from(value));
            }
            Some(_) => match value.as_str() {
                "true" | "1" | "yes" => spliced.push(OsString::from(format!("--{key}"))),
                "false" | "0" | "no" => {}
                other => {
                    return Err(Cli::command().error(
                        clap::error::ErrorKind::InvalidValue,
                        format!("config flag `{key}` expects true/false, got `{other}`"),
                    ))
                }
            },
            None if known_anywhere(&root, &key) => {}
            None => {
                return Err(Cli::command().error(
                    clap::error::ErrorKind::UnknownArgument,
                    format!("unknown config key `{key}`"),
                ))
            }
        }
    }
    let mut out = raw;
    out.splice(insert_at..insert_at, spliced);
    Ok(out)
}

fn known_anywhere(cmd: &clap::Command, key: &str) -> bool {
    cmd.get_arguments().any(|a| a.get_long() == Some(key)) || cmd.get_subcommands().any(|s| known_anywhere(s, key))
}

fn config_path(raw: &[OsString]) -> Option<PathBuf> {
    let mut iter = raw.iter().skip(1);
    while let Some(tok) = iter.next() {
        let tok = tok.to_str()?;
        if tok == "--config" {
            return iter.next().map(PathBuf::from);
        }
        if let Some(path) = tok.strip_prefix("--config=") {
            return Some(PathBuf::from(path));
        }
    }
    None
}

fn parse_config(text: &str) -> Result<Vec<(String, String)>, String> {
    text.lines()
        .enumerate()
        .map(|(i, line)| (i, line.trim()))
        .filter(|(_, line)| !line.is_empty() && !line.starts_with('#'))
        .map(|(i, line)| {
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected `key = value`", i + 1))?;
            Ok((key.trim().replace('_', "-"), value.trim().to_string()))
        })
        .collect()
}
