use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use toponav::harness::{eval_waypoints, plot_trace, run_suite, sweep_gamma, PolicyKind, RunConfig, Scenario, CONFIG_ENV};
use toponav::world::Sliding;

#[derive(Parser)]
#[command(name = "toponav", version, about = "Topological-map navigation simulator")]
struct Cli {
    /// TOML config file; `TOPONAV_*` environment variables override it.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

impl From<Switch> for bool {
    fn from(s: Switch) -> bool {
        matches!(s, Switch::On)
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    policy: Option<PolicyKind>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    sliding: Option<Sliding>,
    #[arg(long)]
    tryout: Option<Switch>,
    #[arg(long)]
    deletion: Option<Switch>,
    #[arg(long)]
    accumulate: Option<Switch>,
    #[arg(long)]
    chassis_radius: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every episode of a scenario and write results and traces.
    Run {
        #[command(flatten)]
        args: RunArgs,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Run the suite once per γ and print mean node counts.
    SweepGamma {
        #[command(flatten)]
        args: RunArgs,
        #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,0.75,1.0")]
        values: Vec<f64>,
    },
    /// Compare predicted waypoints with the scenario's reference sets.
    EvalWaypoints {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Render an episode trace to SVG.
    Plot {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn configure(base: &Option<PathBuf>, args: &RunArgs) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::resolve(base.as_deref())?;
    if let Some(p) = args.policy {
        cfg.policy = p;
    }
    if let Some(g) = args.gamma {
        cfg.gamma = g;
    }
    if let Some(s) = args.sliding {
        cfg.sliding = Some(s);
    }
    if let Some(t) = args.tryout {
        cfg.tryout = t.into();
    }
    if let Some(d) = args.deletion {
        cfg.ghost_deletion = d.into();
    }
    if let Some(a) = args.accumulate {
        cfg.accumulate = a.into();
    }
    if let Some(r) = args.chassis_radius {
        cfg.chassis_radius = Some(r);
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(t) = args.threads {
        cfg.threads = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run { args, out } => {
            let cfg = configure(&cli.config, args)?;
            let scenario = Scenario::load(&args.scenario)?;
            let outcome = run_suite(&scenario, &cfg, cfg.threads)?;
            outcome
                .write(out)
                .with_context(|| format!("writing results to {}", out.display()))?;
            println!("{}", serde_json::to_string(&outcome.summary)?);
        }
        Command::SweepGamma { args, values } => {
            let cfg = configure(&cli.config, args)?;
            let scenario = Scenario::load(&args.scenario)?;
            for point in sweep_gamma(&scenario, &cfg, values, cfg.threads)? {
                println!("{}", serde_json::to_string(&point)?);
            }
        }
        Command::EvalWaypoints { scenario } => {
            let cfg = RunConfig::resolve(cli.config.as_deref())?;
            let scenario = Scenario::load(scenario)?;
            for r in eval_waypoints(&scenario, &cfg)? {
                println!("{}", serde_json::to_string(&r)?);
            }
        }
        Command::Plot { trace, out } => plot_trace(trace, out)?,
    }
    Ok(())
}
