//! Command-line arguments and the validated experiment configuration.

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use threshold_lab::pattern_sets::EXHAUSTIVE_MAX_N;
use threshold_lab::verify::Suite;
use threshold_lab::{Channel, CodeSpec, LinearCode};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "threshold-lab", version, about = "Block-MAP threshold experiments on the BEC and BSC")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Code parameters as JSON on stdout.
    Info(InfoArgs),
    /// Weight spectrum (weights.csv).
    Weights(RunArgs),
    /// Block-MAP error curve (curve.csv, profile.csv in exact mode, width.json with --delta).
    Curve(RunArgs),
    /// Curve plus transition bounds (curve.csv, bounds.csv).
    Bounds(RunArgs),
    /// Transition widths (width.json).
    Width(RunArgs),
    /// BEC EXIT function (exit.csv).
    Exit(RunArgs),
    /// Pair partition statistics on the BEC (partition.csv).
    Partition(RunArgs),
    /// Invariant suites over the built-in corpus.
    Verify(VerifyArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Info(_) => "info",
            Command::Weights(_) => "weights",
            Command::Curve(_) => "curve",
            Command::Bounds(_) => "bounds",
            Command::Width(_) => "width",
            Command::Exit(_) => "exit",
            Command::Partition(_) => "partition",
            Command::Verify(_) => "verify",
        }
    }
}

#[derive(Debug, Args)]
pub struct InfoArgs {
    /// Code descriptor: rm:R,M | rep:N | spc:N | rand:N,K,SEED
    pub code: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelArg {
    Bec,
    Bsc,
}

impl From<ChannelArg> for Channel {
    fn from(c: ChannelArg) -> Self {
        match c {
            ChannelArg::Bec => Channel::Bec,
            ChannelArg::Bsc => Channel::Bsc,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Mc,
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundArg {
    Tz,
    Refined,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Code descriptor: rm:R,M | rep:N | spc:N | rand:N,K,SEED
    pub code: String,
    #[arg(long, value_enum, default_value = "bec")]
    pub channel: ChannelArg,
    /// Epsilon grid START:STOP:POINTS (default: the whole channel domain, 101 points).
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Same as --mode exact.
    #[arg(long, conflicts_with_all = ["mode", "mc"])]
    pub exact: bool,
    /// Same as --mode mc.
    #[arg(long, conflicts_with = "mode")]
    pub mc: bool,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    /// Window sizes for refined bounds (default: d_min).
    #[arg(long = "W", value_delimiter = ',')]
    pub w: Vec<usize>,
    /// Width levels delta in (0, 1/2).
    #[arg(long, alias = "widths", value_delimiter = ',')]
    pub delta: Vec<f64>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "tz,refined")]
    pub bounds: Vec<BoundArg>,
    /// Coordinate pair I,J for partition statistics.
    #[arg(long, default_value = "0,1")]
    pub pair: String,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// margulis_russo | isoperimetric | envelopes | exit_identities | partition | boundary | all
    pub suite: String,
    /// Code descriptors replacing the built-in corpus.
    #[arg(long, value_delimiter = ';')]
    pub codes: Vec<String>,
    /// Negative control: append a generator with a dependent row.
    #[arg(long, hide = true)]
    pub corrupted_fixture: bool,
    /// Also write verify.json (with a manifest) here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Grid {
    pub fn parse(s: &str, channel: Channel) -> CliResult<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || CliError::Parse(format!("--grid {s:?}: expected START:STOP:POINTS"));
        let [a, b, n] = parts[..] else { return Err(bad()) };
        let g = Grid {
            start: a.trim().parse().map_err(|_| bad())?,
            stop: b.trim().parse().map_err(|_| bad())?,
            points: n.trim().parse().map_err(|_| bad())?,
        };
        g.validate(channel)?;
        Ok(g)
    }

    pub fn whole(channel: Channel) -> Self {
        Grid { start: 0.0, stop: channel.max_epsilon(), points: 101 }
    }

    fn validate(&self, channel: Channel) -> CliResult<()> {
        let top = channel.max_epsilon();
        if self.points == 0 {
            return Err(CliError::Parse("--grid needs at least one point".into()));
        }
        if !(self.start >= 0.0 && self.stop <= top && self.start <= self.stop) {
            return Err(CliError::Parse(format!(
                "--grid {}:{}:{} must satisfy 0 <= START <= STOP <= {top} on the {channel}",
                self.start, self.stop, self.points
            )));
        }
        if self.points == 1 && self.start != self.stop {
            return Err(CliError::Parse("--grid with one point needs START = STOP".into()));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.points - 1) as f64;
        (0..self.points).map(|k| if k + 1 == self.points { self.stop } else { self.start + step * k as f64 }).collect()
    }
}

/// Everything a run depends on; stored verbatim in the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: String,
    pub code: String,
    pub channel: Channel,
    pub grid: Grid,
    pub requested_mode: Mode,
    /// `exact` or `mc` after resolving `auto`.
    pub mode: Mode,
    pub seed: u64,
    pub samples: u64,
    pub w: Vec<usize>,
    pub delta: Vec<f64>,
    pub bounds: Vec<BoundArg>,
    pub pair: (usize, usize),
    pub out: PathBuf,
}

impl ExperimentConfig {
    pub fn from_args(command: &str, a: &RunArgs) -> CliResult<(Self, LinearCode)> {
        let spec = CodeSpec::from_str(&a.code).map_err(|e| CliError::Parse(format!("code descriptor: {e}")))?;
        let code = spec.build().map_err(|e| CliError::Parse(format!("code descriptor {:?}: {e}", a.code)))?;
        let channel: Channel = a.channel.into();
        let grid = match &a.grid {
            Some(g) => Grid::parse(g, channel)?,
            None => Grid::whole(channel),
        };
        let requested_mode = if a.exact {
            Mode::Exact
        } else if a.mc {
            Mode::Mc
        } else {
            a.mode.unwrap_or(Mode::Auto)
        };
        let mode = match requested_mode {
            Mode::Auto if code.len() <= EXHAUSTIVE_MAX_N => Mode::Exact,
            Mode::Auto => Mode::Mc,
            m => m,
        };
        if mode == Mode::Exact && code.len() > EXHAUSTIVE_MAX_N {
            return Err(CliError::Budget(format!(
                "exact mode enumerates 2^{} patterns, limit is 2^{EXHAUSTIVE_MAX_N}; use --mode mc",
                code.len()
            )));
        }
        if mode == Mode::Mc && a.samples == 0 {
            return Err(CliError::Parse("--samples must be at least 1".into()));
        }
        if let Some(&d) = a.delta.iter().find(|&&d| !(d > 0.0 && d < 0.5)) {
            return Err(CliError::Parse(format!("--delta {d} outside (0, 1/2)")));
        }
        if let Some(&w) = a.w.iter().find(|&&w| w == 0 || w > code.len()) {
            return Err(CliError::Parse(format!("--W {w} outside 1..={}", code.len())));
        }
        let pair = parse_pair(&a.pair, code.len())?;
        let cfg = ExperimentConfig {
            command: command.into(),
            code: a.code.clone(),
            channel,
            grid,
            requested_mode,
            mode,
            seed: a.seed,
            samples: a.samples,
            w: a.w.clone(),
            delta: a.delta.clone(),
            bounds: a.bounds.clone(),
            pair,
            out: a.out.clone(),
        };
        Ok((cfg, code))
    }

    pub fn mode_label(&self) -> &'static str {
        match self.mode {
            Mode::Exact => "exact",
            _ => "mc",
        }
    }
}

fn parse_pair(s: &str, n: usize) -> CliResult<(usize, usize)> {
    let bad = || CliError::Parse(format!("--pair {s:?}: expected two distinct coordinates I,J below {n}"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    let (i, j): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    if i == j || i >= n || j >= n {
        return Err(bad());
    }
    Ok((i, j))
}

pub fn parse_suite(s: &str) -> CliResult<Suite> {
    s.parse().map_err(|e: threshold_lab::Error| CliError::Parse(e.to_string()))
}
