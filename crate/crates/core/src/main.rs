use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use deepremix::commands::{self, Overrides};
use deepremix::estimator::EnhanceMode;

/// Log verbosity, e.g. `DEEPREMIX_LOG=info`.
const LOG_ENV: &str = "DEEPREMIX_LOG";

#[derive(Parser)]
#[command(
    name = "deepremix",
    version,
    about = "Remix, amplify, degrade and enhance music stems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone, Default)]
struct SceneArgs {
    /// Scene JSON file.
    #[arg(long)]
    scene: PathBuf,
    /// Output directory (defaults to the scene's `outputs.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the scene seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Write deterministic demo stems, a listener and a scene.
    GenDemo {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Write the pre-NAL-R and NAL-R remixes.
    Remix {
        #[command(flatten)]
        scene: SceneArgs,
    },
    /// Degrade the NAL-R remix (or `--input`) per the scene.
    Degrade {
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Fit the oracle enhancement and write the enhanced remix and a report.
    Enhance {
        #[command(flatten)]
        scene: SceneArgs,
        /// Use this degraded WAV instead of degrading per the scene.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_parser = parse_mode)]
        mode: Option<EnhanceMode>,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        lookahead: Option<usize>,
    },
    /// SDR and MAE of an estimate against a reference.
    Eval {
        reference: PathBuf,
        estimate: PathBuf,
        /// Also write the report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply a listener's NAL-R prescription to a WAV file.
    Nalr {
        #[arg(long)]
        audiogram: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_mode(s: &str) -> Result<EnhanceMode, String> {
    s.parse().map_err(|e: deepremix::error::Error| e.to_string())
}

fn overrides(args: &SceneArgs) -> Overrides {
    Overrides {
        seed: args.seed,
        out: args.out.clone(),
        ..Overrides::default()
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::GenDemo { out, seed } => {
            let scene = commands::gen_demo(&out, seed)?;
            println!("{}", scene.display());
        }
        Command::Remix { scene } => {
            for p in commands::remix(&scene.scene, &overrides(&scene))? {
                println!("{}", p.display());
            }
        }
        Command::Degrade { scene, input } => {
            let p = commands::degrade_cmd(&scene.scene, input.as_deref(), &overrides(&scene))?;
            println!("{}", p.display());
        }
        Command::Enhance {
            scene,
            input,
            mode,
            order,
            lookahead,
        } => {
            let o = Overrides {
                mode,
                order,
                lookahead,
                ..overrides(&scene)
            };
            let (report, path) = commands::enhance(&scene.scene, input.as_deref(), &o)?;
            println!(
                "sdr_before {:.4} dB  sdr_after {:.4} dB  mae {:.6e}",
                report.sdr_before, report.sdr_after, report.mae
            );
            println!("{}", path.display());
        }
        Command::Eval {
            reference,
            estimate,
            out,
        } => {
            let r = commands::eval(&reference, &estimate, out.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&r)?);
        }
        Command::Nalr { audiogram, input, out } => {
            let (tables, path) = commands::nalr_cmd(&audiogram, &input, &out)?;
            for t in &tables {
                println!("{} ear", t.ear);
                for (f, g) in t.frequencies_hz.iter().zip(&t.insertion_gain_db) {
                    println!("  {f:>6.0} Hz  {g:>7.2} dB");
                }
            }
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or(LOG_ENV, "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
