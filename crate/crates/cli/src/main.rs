//! `art-kit`: reproducible adaptive randomization test experiments.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use artkit::engine::with_workers;
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use commands::Context;
use config::{resolve, FileConfig, Overrides, Params, RunSettings, DEFAULT_OUTPUT_DIR, DEFAULT_SEED};
use error::CliError;

#[derive(Parser)]
#[command(name = "art-kit", version, about = "Adaptive randomization tests: p-values, power simulations and asymptotic power")]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: hardware parallelism).
    #[arg(long, global = true, env = "ART_KIT_WORKERS")]
    workers: Option<usize>,

    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    /// Monte Carlo size of the command (replications, or outer draws).
    #[arg(long, global = true)]
    reps: Option<usize>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Randomization p-value of a recorded experiment.
    Pvalue(ParamFlags),
    /// Finite-n power of the normal-means model.
    NmmSim(ParamFlags),
    /// Limiting power of iid sampling.
    NmmPowerIid(ParamFlags),
    /// Limiting power of the two-stage design.
    NmmPowerAdaptive(ParamFlags),
    /// Best fixed sampling vector for a known signal.
    NmmOracle(ParamFlags),
    /// Power differences over an (h0, p) grid.
    NmmHeatmap(ParamFlags),
    /// Power over an (epsilon, t0) grid.
    NmmSweep(ParamFlags),
    /// Power of simulated forced-choice conjoint experiments.
    ConjointSim(ParamFlags),
    /// Power of conjoint experiments replayed from a dataset.
    ConjointReplay(ParamFlags),
    /// Resolve and check a configuration without computing anything.
    Validate {
        /// Command to validate for; defaults to the config file's command.
        name: Option<String>,
        #[command(flatten)]
        flags: ParamFlags,
    },
}

/// Parameter flags; each sets the parameter key of the same name.
#[derive(Args, Default)]
struct ParamFlags {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    h0: Option<f64>,
    #[arg(long = "eps", alias = "epsilon")]
    epsilon: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    b: Option<usize>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    statistic: Option<String>,
    #[arg(long)]
    design: Option<String>,
    #[arg(long)]
    reweight: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    beta_x: Option<f64>,
    #[arg(long)]
    beta_z: Option<f64>,
    #[arg(long)]
    beta_xz: Option<f64>,
    #[arg(long)]
    n_inner: Option<usize>,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long)]
    record: Option<PathBuf>,
    /// Sampling policy as a JSON object, e.g. '{"kind":"two_stage","epsilon":0.5,"t":0.07}'.
    #[arg(long)]
    policy: Option<String>,
    /// Any parameter as KEY=VALUE; VALUE is read as JSON, else as a string.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ParamFlags {
    fn overrides(&self) -> Result<Overrides, CliError> {
        let mut o = Overrides::default();
        o.set("n", self.n)
            .set("p", self.p)
            .set("h0", self.h0)
            .set("epsilon", self.epsilon)
            .set("t", self.t)
            .set("t0", self.t0)
            .set("alpha", self.alpha)
            .set("b", self.b)
            .set("mode", self.mode.clone())
            .set("statistic", self.statistic.clone())
            .set("design", self.design.clone())
            .set("reweight", self.reweight.clone())
            .set("k", self.k)
            .set("l", self.l)
            .set("beta_x", self.beta_x)
            .set("beta_z", self.beta_z)
            .set("beta_xz", self.beta_xz)
            .set("n_inner", self.n_inner)
            .set("resolution", self.resolution)
            .set("dataset", self.dataset.clone())
            .set("schema", self.schema.clone())
            .set("record", self.record.clone());
        o.set_json("policy", self.policy.as_deref())?;
        for item in &self.set {
            let Some((key, raw)) = item.split_once('=') else {
                return Err(CliError::config("set", format!("'{item}' is not KEY=VALUE")));
            };
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            o.0.insert(key.to_string(), value);
        }
        Ok(o)
    }
}

const COMMANDS: [&str; 9] = [
    "pvalue",
    "nmm-sim",
    "nmm-power-iid",
    "nmm-power-adaptive",
    "nmm-oracle",
    "nmm-heatmap",
    "nmm-sweep",
    "conjoint-sim",
    "conjoint-replay",
];

/// Everything needed to run or validate one command.
struct Invocation {
    command: &'static str,
    params: Map<String, Value>,
    settings: RunSettings,
    validate_only: bool,
}

fn invocation(cli: Cli) -> Result<Invocation, CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let (name, flags, validate_only) = match cli.command {
        Some(Command::Validate { name, flags }) => (name, flags, true),
        Some(cmd) => {
            let (name, flags) = match cmd {
                Command::Pvalue(f) => ("pvalue", f),
                Command::NmmSim(f) => ("nmm-sim", f),
                Command::NmmPowerIid(f) => ("nmm-power-iid", f),
                Command::NmmPowerAdaptive(f) => ("nmm-power-adaptive", f),
                Command::NmmOracle(f) => ("nmm-oracle", f),
                Command::NmmHeatmap(f) => ("nmm-heatmap", f),
                Command::NmmSweep(f) => ("nmm-sweep", f),
                Command::ConjointSim(f) => ("conjoint-sim", f),
                Command::ConjointReplay(f) => ("conjoint-replay", f),
                Command::Validate { .. } => unreachable!(),
            };
            (Some(name.to_string()), flags, false)
        }
        None => (None, ParamFlags::default(), false),
    };
    let name = name
        .or(file.command.clone())
        .ok_or_else(|| CliError::config("command", "no command given on the command line or in the config file"))?;
    if let Some(file_cmd) = &file.command {
        if *file_cmd != name {
            return Err(CliError::config(
                "command",
                format!("config file is for '{file_cmd}', invoked as '{name}'"),
            ));
        }
    }
    let command = *COMMANDS
        .iter()
        .find(|c| **c == name)
        .ok_or_else(|| CliError::config("command", format!("unknown command '{name}'")))?;

    let mut params = file.params;
    let mut overrides = flags.overrides()?;
    if let Some(reps) = cli.reps {
        overrides.set(reps_key(command), Some(reps));
    }
    overrides.apply(&mut params);

    let workers = cli.workers.or(file.workers);
    if workers == Some(0) {
        return Err(CliError::config("workers", "must be at least 1"));
    }
    let settings = RunSettings {
        master_seed: cli.seed.or(file.master_seed).unwrap_or(DEFAULT_SEED),
        workers,
        output_dir: cli.output_dir.or(file.output_dir).unwrap_or_else(|| DEFAULT_OUTPUT_DIR.into()),
    };
    Ok(Invocation {
        command,
        params,
        settings,
        validate_only,
    })
}

fn reps_key(command: &str) -> &'static str {
    use commands::*;
    match command {
        "pvalue" => PValueParams::REPS_KEY,
        "nmm-sim" => NmmSimParams::REPS_KEY,
        "nmm-power-iid" => PowerIidParams::REPS_KEY,
        "nmm-power-adaptive" => PowerAdaptiveParams::REPS_KEY,
        "nmm-oracle" => OracleParams::REPS_KEY,
        "nmm-heatmap" => HeatmapCliParams::REPS_KEY,
        "nmm-sweep" => SweepParams::REPS_KEY,
        "conjoint-sim" => ConjointSimParams::REPS_KEY,
        _ => ConjointReplayParams::REPS_KEY,
    }
}

fn execute<P: Params + Sync>(
    inv: Invocation,
    run: fn(&P, &mut Context) -> Result<Value, CliError>,
    inputs: fn(&P) -> Option<String>,
) -> Result<Value, CliError> {
    let params: P = resolve(&inv.params)?;
    let echo = serde_json::to_value(&params).expect("parameters serialize");
    let settings_json = json!({
        "master_seed": inv.settings.master_seed,
        "workers": inv.settings.workers,
        "output_dir": inv.settings.output_dir,
    });
    if inv.validate_only {
        return Ok(json!({ "status": "ok", "command": inv.command, "params": echo, "settings": settings_json }));
    }
    let hash = commands::config_hash(inv.command, inv.settings.master_seed, &echo, inputs(&params));
    let mut ctx = Context::new(inv.command, inv.settings.clone(), hash.clone());
    ctx.write_config_echo(&json!({ "command": inv.command, "params": echo, "settings": settings_json }))?;
    eprintln!("art-kit {}: running (config {})", inv.command, &hash[..12]);
    let start = Instant::now();
    let workers = inv.settings.workers;
    let result = with_workers(workers, || run(&params, &mut ctx))?;
    eprintln!("art-kit {}: done in {:.1}s", inv.command, start.elapsed().as_secs_f64());
    Ok(json!({
        "status": "ok",
        "command": inv.command,
        "version": artkit::report::TOOL_VERSION,
        "config_hash": hash,
        "master_seed": inv.settings.master_seed,
        "artifacts": ctx.artifacts,
        "result": result,
    }))
}

fn no_inputs<P>(_: &P) -> Option<String> {
    None
}

fn dispatch(inv: Invocation) -> Result<Value, CliError> {
    use commands::*;
    match inv.command {
        "pvalue" => execute(inv, run_pvalue, no_inputs),
        "nmm-sim" => execute(inv, run_nmm_sim, no_inputs),
        "nmm-power-iid" => execute(inv, run_power_iid, no_inputs),
        "nmm-power-adaptive" => execute(inv, run_power_adaptive, no_inputs),
        "nmm-oracle" => execute(inv, run_oracle, no_inputs),
        "nmm-heatmap" => execute(inv, run_heatmap, no_inputs),
        "nmm-sweep" => execute(inv, run_sweep, no_inputs),
        "conjoint-sim" => execute(inv, run_conjoint_sim, no_inputs),
        _ => execute(inv, run_conjoint_replay, ConjointReplayParams::input_digest),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let validate_only = matches!(cli.command, Some(Command::Validate { .. }));
    match invocation(cli).and_then(dispatch) {
        Ok(summary) => {
            if validate_only {
                println!("ok");
            }
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
