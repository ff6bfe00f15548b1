#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod artifacts;
mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use motionsnap_core::Method;

use config::{LoadedConfig, SnapshotCount};
use error::CliError;

/// Motion-enhanced snapshot 3D imaging for side-looking radar.
#[derive(Debug, Parser)]
#[command(name = "motionsnap", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one frame of de-chirped data for the scenario's scene.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Noise seed, overriding `noise.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Range-process and beamscan a simulated frame.
    Image {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        imaging: ImagingFlags,
        /// Raw cube to image. Defaults to `<out>/raw.cube`.
        #[arg(long)]
        cube: Option<PathBuf>,
    },
    /// Score a power cube against the scenario's scene.
    Metrics {
        #[command(flatten)]
        common: Common,
        /// Power cube to score. Defaults to `<out>/power.cube`.
        #[arg(long)]
        cube: Option<PathBuf>,
        /// Second power cube; reports the dynamic-range ratio against it.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Side-by-side table of two metrics reports with ratios second/first.
    Compare {
        first: PathBuf,
        second: PathBuf,
        /// Column labels for the two reports.
        #[arg(long, num_args = 2, value_names = ["FIRST", "SECOND"])]
        labels: Option<Vec<String>>,
        /// Also write the table to `<DIR>/compare.csv`.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario file, TOML or JSON.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory, overriding `output_dir`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ImagingFlags {
    /// Estimator; `mvdr:LOADING` and `music:SOURCES` set its parameter.
    #[arg(long, value_name = "METHOD")]
    method: Option<String>,
    /// Motion-enhanced snapshots beyond the reference one, or `max`.
    #[arg(long, value_name = "N|max")]
    snapshots: Option<SnapshotCount>,
    /// Steer without the motion compensation term.
    #[arg(long)]
    no_compensation: bool,
    /// Image with the physical array only.
    #[arg(long, value_enum)]
    baseline: Option<Baseline>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Baseline {
    MimoOnly,
}

/// `dbf`, `mvdr[:loading]` or `music[:sources]`. A bare name keeps the
/// parameter from the scenario when the kinds match.
fn parse_method(text: &str, current: Method) -> Result<Method, CliError> {
    let (name, arg) = match text.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (text, None),
    };
    let bad = || CliError::Config(format!("--method: cannot parse {text:?}"));
    match name.to_ascii_lowercase().as_str() {
        "dbf" if arg.is_none() => Ok(Method::Dbf),
        "mvdr" => {
            let loading = match (arg, current) {
                (Some(a), _) => a.parse().map_err(|_| bad())?,
                (None, Method::Mvdr { loading }) => loading,
                (None, _) => 1e-3,
            };
            Ok(Method::Mvdr { loading })
        }
        "music" => {
            let sources = match (arg, current) {
                (Some(a), _) => a.parse().map_err(|_| bad())?,
                (None, Method::Music { sources }) => sources,
                (None, _) => 1,
            };
            Ok(Method::Music { sources })
        }
        _ => Err(bad()),
    }
}

fn load(common: &Common) -> Result<(LoadedConfig, PathBuf), CliError> {
    let cfg = LoadedConfig::load(&common.config)?;
    let out = common
        .out
        .clone()
        .unwrap_or_else(|| cfg.config.output_dir.clone());
    Ok((cfg, out))
}

fn apply_imaging(cfg: &mut LoadedConfig, flags: &ImagingFlags) -> Result<Vec<String>, CliError> {
    let mut notes = Vec::new();
    let c = &mut cfg.config;
    if let Some(m) = &flags.method {
        c.imaging.method = parse_method(m, c.imaging.method)?;
        notes.push(format!("method={}", c.imaging.method.tag()));
    }
    if let Some(n) = flags.snapshots {
        c.snapshots.n_ex = n;
        notes.push(format!("snapshots={n}"));
    }
    if flags.no_compensation {
        c.snapshots.compensate = false;
        notes.push("compensation=off".into());
    }
    if let Some(Baseline::MimoOnly) = flags.baseline {
        c.snapshots.n_ex = SnapshotCount::Count(0);
        notes.push("baseline=mimo-only".into());
    }
    Ok(notes)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { common, seed } => {
            let (mut cfg, out) = load(&common)?;
            let mut notes = Vec::new();
            if let Some(s) = seed {
                cfg.config.noise.seed = s;
                notes.push(format!("seed={s}"));
            }
            cfg.validate()?;
            commands::simulate(&cfg, &out, notes)
        }
        Command::Image {
            common,
            imaging,
            cube,
        } => {
            let (mut cfg, out) = load(&common)?;
            let notes = apply_imaging(&mut cfg, &imaging)?;
            cfg.validate()?;
            let cube = cube.unwrap_or_else(|| out.join(commands::RAW_CUBE));
            commands::image(&cfg, &cube, &out, notes)
        }
        Command::Metrics {
            common,
            cube,
            reference,
        } => {
            let (cfg, out) = load(&common)?;
            cfg.validate()?;
            let cube = cube.unwrap_or_else(|| out.join(commands::POWER_CUBE));
            commands::metrics(&cfg, &cube, reference.as_deref(), &out, Vec::new())
        }
        Command::Compare {
            first,
            second,
            labels,
            out,
        } => {
            let labels = labels.unwrap_or_else(|| vec!["first".into(), "second".into()]);
            commands::compare(&first, &second, [&labels[0], &labels[1]], out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("motionsnap: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
