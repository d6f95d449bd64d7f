use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use grantfree_aoi_cli::{run_experiment, validate, EvaluatorChoice, ExperimentSpec, Preset, SimSettings, Suite};

/// Age-of-information sweeps for OMA and NOMA grant-free access.
#[derive(Parser, Debug)]
#[command(name = "gfaoi", version)]
struct Args {
    /// Experiment preset to run.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// JSON experiment spec; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path prefix (default: $GFAOI_OUT_DIR/<preset> or out/<preset>).
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Frames per simulated point.
    #[arg(long)]
    frames: Option<u64>,
    #[arg(long, value_enum)]
    evaluator: Option<EvaluatorChoice>,
    /// Also write SVG charts.
    #[arg(long)]
    svg: bool,
    /// Run a validation suite instead of an experiment.
    #[arg(long, value_enum, conflicts_with_all = ["preset", "config"])]
    validate: Option<Suite>,
}

fn run(args: Args) -> Result<bool> {
    if let Some(suite) = args.validate {
        let defaults = SimSettings::default();
        let sim =
            SimSettings { frames: args.frames.unwrap_or(defaults.frames), seed: args.seed.unwrap_or(defaults.seed) };
        let checks = validate(suite, sim)?;
        println!("name,measured,bound,pass");
        for c in &checks {
            println!("{c}");
        }
        return Ok(checks.iter().all(|c| c.pass));
    }
    let mut spec = match (&args.config, args.preset) {
        (Some(path), preset) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            let mut spec: ExperimentSpec =
                serde_json::from_str(&text).with_context(|| format!("invalid spec in {}", path.display()))?;
            if let Some(p) = preset {
                spec.preset = p;
            }
            spec
        }
        (None, Some(preset)) => ExperimentSpec::preset(preset),
        (None, None) => bail!("pass --preset, --config or --validate"),
    };
    if let Some(out) = args.out {
        spec.out = Some(out);
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(frames) = args.frames {
        spec.frames = frames;
    }
    if let Some(e) = args.evaluator {
        spec.evaluator = e;
    }
    spec.svg |= args.svg;
    for path in run_experiment(&spec.resolve()?)? {
        println!("{}", path.display());
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
