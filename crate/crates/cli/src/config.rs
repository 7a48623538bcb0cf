//! Command-line parsing into a validated [`RunConfig`].
//!
//! Parameters come either from flags (`--delta 2`) or from trailing
//! `KEY=VALUE` words (`delta=2`, `N=30`). A bare word after `photonic` picks
//! the photonic mode.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, ValueEnum};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Witness,
    ChshScan,
    MinimalRef,
    OptimalRef,
    SivReport,
    Photonic,
    ReproduceAll,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Witness => "witness",
            Command::ChshScan => "chsh-scan",
            Command::MinimalRef => "minimal-ref",
            Command::OptimalRef => "optimal-ref",
            Command::SivReport => "siv-report",
            Command::Photonic => "photonic",
            Command::ReproduceAll => "reproduce-all",
        }
    }

    fn allowed(self) -> &'static [Key] {
        use Key::*;
        match self {
            Command::Witness => &[StateFile, Out, Format, Seed],
            Command::ChshScan => &[Delta, NRef, N, M, GridStep, StateFile, Seed, Out, Format],
            Command::MinimalRef => &[GridStep, StateFile, Seed, Out, Format],
            Command::OptimalRef => &[N, M, Seed, Out, Format],
            Command::SivReport => &[GridStep, StateFile, Seed, Out, Format],
            Command::Photonic => &[Mode, NBar, GridStep, Ra, Rb, Seed, Out, Format],
            Command::ReproduceAll => &[Seed, Out, Format],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    #[value(name = "json-like", alias = "json")]
    JsonLike,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PhotonicMode {
    Threshold,
    Chsh,
    Scan,
    Hessmo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Key {
    Delta,
    NRef,
    N,
    M,
    NBar,
    GridStep,
    Seed,
    Out,
    Format,
    StateFile,
    Mode,
    Ra,
    Rb,
}

impl Key {
    fn parse(word: &str) -> Option<Key> {
        Some(match word {
            "delta" | "Delta" | "Δ" => Key::Delta,
            "n_ref" | "n-ref" | "nref" | "N'" => Key::NRef,
            "N" | "n" => Key::N,
            "M" | "m" => Key::M,
            "nbar" | "n_bar" | "n̄" => Key::NBar,
            "grid_step" | "grid-step" | "step" => Key::GridStep,
            "seed" => Key::Seed,
            "out" => Key::Out,
            "format" => Key::Format,
            "state_file" | "state-file" => Key::StateFile,
            "mode" => Key::Mode,
            "r_a" | "ra" => Key::Ra,
            "r_b" | "rb" => Key::Rb,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Key::Delta => "delta",
            Key::NRef => "n_ref",
            Key::N => "N",
            Key::M => "M",
            Key::NBar => "nbar",
            Key::GridStep => "grid_step",
            Key::Seed => "seed",
            Key::Out => "out",
            Key::Format => "format",
            Key::StateFile => "state_file",
            Key::Mode => "mode",
            Key::Ra => "r_a",
            Key::Rb => "r_b",
        }
    }
}

/// Raw command line as seen by clap.
#[derive(Debug, Parser)]
#[command(name = "ssrbell", version, about = "Bell tests under particle-number superselection")]
#[command(allow_negative_numbers = true)]
pub struct Cli {
    /// Command to run, if not given positionally.
    #[arg(long = "command", value_enum)]
    command: Option<Command>,
    /// Particle-number shift Δ of the observables.
    #[arg(long)]
    delta: Option<String>,
    /// Total particle number N' of a random fixed-number reference.
    #[arg(long = "n-ref")]
    n_ref: Option<String>,
    /// Alice's reference size N.
    #[arg(long)]
    n: Option<String>,
    /// Bob's reference size M.
    #[arg(long)]
    m: Option<String>,
    /// Mean photon number of the coherent state.
    #[arg(long)]
    nbar: Option<String>,
    #[arg(long = "grid-step")]
    grid_step: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    format: Option<String>,
    #[arg(long = "state-file")]
    state_file: Option<String>,
    /// `[COMMAND] [KEY=VALUE | MODE]...`
    words: Vec<String>,
}

/// Validated parameters. Fields a command does not use stay `None`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Params {
    pub delta: Option<usize>,
    pub n_ref: Option<usize>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub nbar: Option<f64>,
    pub grid_step: Option<f64>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub state_file: Option<PathBuf>,
    pub mode: Option<PhotonicMode>,
    pub r_a: Option<f64>,
    pub r_b: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub params: Params,
}

/// Largest reference size accepted by `optimal-ref`.
pub const MAX_REFERENCE_SIZE: usize = 1024;

fn number<T: FromStr>(key: Key, raw: &str) -> CliResult<T> {
    raw.trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{}: cannot parse '{raw}'", key.name())))
}

fn enum_value<T: ValueEnum>(key: Key, raw: &str) -> CliResult<T> {
    T::from_str(raw, true).map_err(|_| CliError::Usage(format!("{}: invalid value '{raw}'", key.name())))
}

fn bad(key: Key, msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("{}: {msg}", key.name()))
}

impl RunConfig {
    pub fn parse_from<I, T>(args: I) -> CliResult<Self>
    where
        I: IntoIterator<Item = T>,
        T: Into<std::ffi::OsString> + Clone,
    {
        let cli = Cli::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string()))?;
        Self::from_cli(cli)
    }

    pub fn from_cli(cli: Cli) -> CliResult<Self> {
        let mut words = cli.words.into_iter();
        let command = match cli.command {
            Some(c) => c,
            None => {
                let w = words
                    .next()
                    .ok_or_else(|| CliError::Usage("no command given".into()))?;
                Command::from_str(&w, true)
                    .map_err(|_| CliError::Usage(format!("unknown command '{w}'")))?
            }
        };

        let mut pairs: Vec<(Key, String)> = Vec::new();
        let flags = [
            (Key::Delta, cli.delta),
            (Key::NRef, cli.n_ref),
            (Key::N, cli.n),
            (Key::M, cli.m),
            (Key::NBar, cli.nbar),
            (Key::GridStep, cli.grid_step),
            (Key::Seed, cli.seed),
            (Key::Out, cli.out),
            (Key::Format, cli.format),
            (Key::StateFile, cli.state_file),
        ];
        pairs.extend(flags.into_iter().filter_map(|(k, v)| v.map(|v| (k, v))));
        for w in words {
            match w.split_once('=') {
                Some((k, v)) => {
                    let key = Key::parse(k)
                        .ok_or_else(|| CliError::Usage(format!("unknown parameter key '{k}'")))?;
                    pairs.push((key, v.to_string()));
                }
                None if command == Command::Photonic => pairs.push((Key::Mode, w)),
                None => return Err(CliError::Usage(format!("unexpected argument '{w}'"))),
            }
        }

        let mut seen = BTreeSet::new();
        let mut p = Params::default();
        for (key, raw) in pairs {
            if !seen.insert(key) {
                return Err(bad(key, "given more than once"));
            }
            if !command.allowed().contains(&key) {
                return Err(bad(key, format!("not a parameter of {}", command.name())));
            }
            match key {
                Key::Delta => p.delta = Some(number(key, &raw)?),
                Key::NRef => p.n_ref = Some(number(key, &raw)?),
                Key::N => p.n = Some(number(key, &raw)?),
                Key::M => p.m = Some(number(key, &raw)?),
                Key::NBar => p.nbar = Some(number(key, &raw)?),
                Key::GridStep => p.grid_step = Some(number(key, &raw)?),
                Key::Seed => p.seed = number(key, &raw)?,
                Key::Out => p.out = Some(PathBuf::from(raw)),
                Key::Format => p.format = Some(enum_value(key, &raw)?),
                Key::StateFile => p.state_file = Some(PathBuf::from(raw)),
                Key::Mode => p.mode = Some(enum_value(key, &raw)?),
                Key::Ra => p.r_a = Some(number(key, &raw)?),
                Key::Rb => p.r_b = Some(number(key, &raw)?),
            }
        }
        let config = RunConfig { command, params: p };
        config.validate()?;
        Ok(config)
    }

    /// Checks every parameter against the preconditions of the command.
    pub fn validate(&self) -> CliResult<()> {
        let p = &self.params;
        if let Some(d) = p.delta {
            if d == 0 {
                return Err(bad(Key::Delta, "must be at least 1"));
            }
        }
        for (key, v) in [(Key::N, p.n), (Key::M, p.m)] {
            if let Some(v) = v {
                if v == 0 || v > MAX_REFERENCE_SIZE {
                    return Err(bad(key, format!("must lie in 1..={MAX_REFERENCE_SIZE}")));
                }
            }
        }
        if let Some(n) = p.nbar {
            if !(n.is_finite() && n >= 0.0) {
                return Err(bad(Key::NBar, "must be finite and non-negative"));
            }
        }
        for (key, r) in [(Key::Ra, p.r_a), (Key::Rb, p.r_b)] {
            if let Some(r) = r {
                if !(0.0..=1.0).contains(&r) {
                    return Err(bad(key, "must lie in [0, 1]"));
                }
            }
        }
        if let Some(step) = p.grid_step {
            let max = match self.command {
                Command::ChshScan => PI,
                _ => 0.5,
            };
            if !(step > 0.0 && step <= max) {
                return Err(bad(Key::GridStep, format!("must lie in (0, {max}]")));
            }
        }
        match self.command {
            Command::Witness if p.state_file.is_none() => {
                return Err(bad(Key::StateFile, "required by witness"));
            }
            Command::ChshScan => {
                if p.n_ref.is_some() && (p.n.is_some() || p.m.is_some() || p.state_file.is_some()) {
                    return Err(bad(Key::NRef, "conflicts with N, M or state_file"));
                }
                if p.state_file.is_some() && (p.n.is_some() || p.m.is_some()) {
                    return Err(bad(Key::StateFile, "conflicts with N or M"));
                }
                if let Some(n) = p.n_ref {
                    if n > 12 {
                        return Err(bad(Key::NRef, "must not exceed 12"));
                    }
                }
            }
            Command::Photonic => {
                let mode = p.mode.unwrap_or(PhotonicMode::Threshold);
                let uses = |k: Key| match mode {
                    PhotonicMode::Threshold => false,
                    PhotonicMode::Chsh => matches!(k, Key::NBar | Key::Ra | Key::Rb),
                    PhotonicMode::Scan => matches!(k, Key::NBar | Key::GridStep),
                    PhotonicMode::Hessmo => matches!(k, Key::GridStep),
                };
                for (k, present) in [
                    (Key::NBar, p.nbar.is_some()),
                    (Key::GridStep, p.grid_step.is_some()),
                    (Key::Ra, p.r_a.is_some()),
                    (Key::Rb, p.r_b.is_some()),
                ] {
                    if present && !uses(k) {
                        return Err(bad(k, format!("not used by photonic {mode:?}").to_lowercase()));
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn format(&self) -> Format {
        self.params.format.unwrap_or(match self.command {
            Command::ReproduceAll => Format::JsonLike,
            _ => Format::Csv,
        })
    }
}
