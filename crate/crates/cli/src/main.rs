//! `quadsim`: single runs, Monte Carlo batches, abstract-model
//! verification and simulation-versus-model comparison.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use quadsim::engine::{run_mission, ScenarioConfig};
use quadsim::{batch, config, export};
use quadsim_verify::bounds::{self, Envelope};
use quadsim_verify::explore::build;
use quadsim_verify::scenario::AbstractScenario;
use quadsim_verify::solve::{initial_probability, initial_reward, Opt, SolveOptions};
use quadsim_verify::{prism, Mdp};
use sha2::{Digest, Sha256};

#[derive(Parser)]
#[command(name = "quadsim", version, about = "Quadrotor search-and-retrieve simulator and mission model checker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SimArgs {
    /// Scenario TOML; defaults apply to anything it leaves out.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Master seed, overriding `mission.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Dotted `key=value` overrides, e.g. `guidance.V_th=10.6`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Abstract scenario TOML; defaults apply to anything it leaves out.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Top-level `key=value` overrides of the abstract scenario.
    #[arg(long = "mdp-set", value_name = "KEY=VALUE")]
    mdp_overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one mission and write its trajectory, height, battery and event log.
    Simulate {
        #[command(flatten)]
        sim: SimArgs,
        /// Run index within the seed's stream.
        #[arg(long, default_value_t = 0)]
        run: u64,
        /// Output directory, created if missing.
        #[arg(long, short, default_value = "out")]
        out: PathBuf,
    },
    /// Run a seeded batch and write the summary and transition matrix.
    Montecarlo {
        #[command(flatten)]
        sim: SimArgs,
        /// Number of missions.
        #[arg(long, short = 'n', default_value_t = 2000)]
        runs: usize,
        /// Worker threads; all cores when absent.
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory, created if missing.
        #[arg(long, short, default_value = "out")]
        out: PathBuf,
    },
    /// Build the abstract mission MDP and report its size.
    MdpBuild {
        #[command(flatten)]
        model: ModelArgs,
        /// Output directory, created if missing.
        #[arg(long, short, default_value = "out")]
        out: PathBuf,
    },
    /// Compute success, fault and mission-time bounds of the abstract model.
    MdpCheck {
        #[command(flatten)]
        model: ModelArgs,
        /// Output directory, created if missing.
        #[arg(long, short, default_value = "out")]
        out: PathBuf,
    },
    /// Write the abstract model and its properties as PRISM text.
    ExportPrism {
        #[command(flatten)]
        model: ModelArgs,
        /// Output directory, created if missing.
        #[arg(long, short, default_value = "out")]
        out: PathBuf,
    },
    /// Check simulated statistics against the envelope of the abstract model
    /// over all two-object placements.
    Compare {
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Grid of the abstract family matched to the config, `NXxNY`.
        /// `--scenario` and `--mdp-set` are applied on top of it.
        #[arg(long, default_value = "4x7")]
        grid: String,
        /// Number of missions.
        #[arg(long, short = 'n', default_value_t = 2000)]
        runs: usize,
        /// Worker threads; all cores when absent.
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory, created if missing.
        #[arg(long, short, default_value = "out")]
        out: PathBuf,
    },
}

/// Errors that map to exit code 1.
#[derive(Debug)]
struct ConfigError(anyhow::Error);

fn load_config(a: &SimArgs) -> Result<ScenarioConfig> {
    let mut cfg = match &a.config {
        Some(p) => config::load(p)?,
        None => ScenarioConfig::default(),
    };
    let mut overrides = a.overrides.clone();
    if let Some(seed) = a.seed {
        if seed > i64::MAX as u64 {
            bail!("seed {seed} does not fit a TOML integer");
        }
        overrides.push(format!("mission.seed={seed}"));
    }
    if !overrides.is_empty() {
        cfg = config::apply_overrides(&cfg, &overrides)?;
    }
    Ok(cfg)
}

fn scenario_from_value(v: toml::Value) -> Result<AbstractScenario> {
    let sc: AbstractScenario = v.try_into().context("abstract scenario")?;
    sc.validate()?;
    Ok(sc)
}

fn load_scenario(a: &ModelArgs, base: AbstractScenario) -> Result<AbstractScenario> {
    let mut v = toml::Value::try_from(&base)?;
    if let Some(p) = &a.scenario {
        let text = fs::read_to_string(p).with_context(|| p.display().to_string())?;
        let user: toml::Table = text.parse().with_context(|| format!("{}", p.display()))?;
        let table = v.as_table_mut().unwrap();
        for (k, x) in user {
            table.insert(k, x);
        }
    }
    for o in &a.mdp_overrides {
        let (key, raw) = o.split_once('=').with_context(|| format!("override `{o}` lacks `=`"))?;
        let key = key.trim();
        let table = v.as_table_mut().unwrap();
        let Some(slot) = table.get_mut(key) else { bail!("unknown scenario key `{key}`") };
        let mut value = format!("x = {}", raw.trim())
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("x"))
            .with_context(|| format!("cannot read value `{raw}` for `{key}`"))?;
        if let (toml::Value::Float(_), toml::Value::Integer(i)) = (&*slot, &value) {
            value = toml::Value::Float(*i as f64);
        }
        *slot = value;
    }
    scenario_from_value(v)
}

fn scenario_toml(sc: &AbstractScenario) -> String {
    toml::to_string(sc).expect("scenario serialises")
}

fn scenario_header(sc: &AbstractScenario) -> String {
    let hash = hex::encode(Sha256::digest(scenario_toml(sc).as_bytes()));
    format!("# quadsim {}\n# scenario_sha256 {hash}\n", export::VERSION)
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let p = dir.join(name);
    fs::write(&p, text).with_context(|| p.display().to_string())
}

fn prepare(out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| out.display().to_string())
}

fn model_of(sc: &AbstractScenario) -> Result<(quadsim_verify::GuardedCommandModel, Mdp)> {
    let model = sc.to_model()?;
    let mdp = build(&model)?;
    Ok((model, mdp))
}

fn check_text(sc: &AbstractScenario, mdp: &Mdp) -> Result<String> {
    let o = SolveOptions::default();
    let mut s = scenario_header(sc);
    s.push_str("property,value\n");
    let rows = [
        ("Pmin=? [ F \"MissionSuccessful\" ]", initial_probability(mdp, "MissionSuccessful", Opt::Min, &o)?),
        ("Pmax=? [ F \"MissionSuccessful\" ]", initial_probability(mdp, "MissionSuccessful", Opt::Max, &o)?),
        ("Pmin=? [ F \"fault\" ]", initial_probability(mdp, "fault", Opt::Min, &o)?),
        ("Pmax=? [ F \"fault\" ]", initial_probability(mdp, "fault", Opt::Max, &o)?),
        ("R{\"time\"}min=? [ F \"done\" ]", initial_reward(mdp, "time", "done", Opt::Min, &o)?),
        ("R{\"time\"}max=? [ F \"done\" ]", initial_reward(mdp, "time", "done", Opt::Max, &o)?),
    ];
    for (p, v) in rows {
        s.push_str(&format!("{},{v:?}\n", p.replace('"', "'")));
    }
    Ok(s)
}

fn grid(s: &str) -> Result<(i64, i64)> {
    let (a, b) = s.split_once('x').with_context(|| format!("grid `{s}` is not NXxNY"))?;
    let (nx, ny): (i64, i64) = (a.trim().parse()?, b.trim().parse()?);
    if nx < 1 || ny < 1 {
        bail!("grid `{s}` is empty");
    }
    Ok((nx, ny))
}

fn envelope_text(sc: &AbstractScenario, cfg: &ScenarioConfig, env: &Envelope) -> String {
    let mut s = export::header(cfg, cfg.mission.seed);
    s.push_str(&scenario_header(sc).replacen(&format!("# quadsim {}\n", export::VERSION), "", 1));
    s.push_str(&env.to_string());
    s.push('\n');
    s
}

enum Done {
    Ok,
    Containment,
}

fn run(cli: Cli) -> Result<Done, ConfigError> {
    let cfg_err = ConfigError;
    match cli.command {
        Command::Simulate { sim, run, out } => {
            let cfg = load_config(&sim).map_err(cfg_err)?;
            prepare(&out).map_err(cfg_err)?;
            let rec = run_mission(&cfg, run);
            let files = [
                ("trajectory.csv", export::trajectory_csv(&rec, &cfg)),
                ("height.csv", export::height_csv(&rec, &cfg)),
                ("battery.csv", export::battery_csv(&rec, &cfg)),
                ("events.toml", export::event_log(&rec, &cfg)),
                ("effective_config.toml", config::to_toml(&cfg)),
            ];
            for (name, text) in files {
                write(&out, name, &text).map_err(cfg_err)?;
            }
            println!("{} after {:.2} s ({} mode changes)", rec.outcome, rec.duration, rec.transitions.len());
        }
        Command::Montecarlo { sim, runs, workers, out } => {
            if runs == 0 {
                return Err(ConfigError(anyhow::anyhow!("run count must be at least 1")));
            }
            let cfg = load_config(&sim).map_err(cfg_err)?;
            prepare(&out).map_err(cfg_err)?;
            let stats = batch::monte_carlo(&cfg, runs, workers);
            let summary = export::batch_summary(&stats, &cfg);
            write(&out, "summary.toml", &summary).map_err(cfg_err)?;
            write(&out, "transitions.csv", &export::transition_matrix_csv(&stats, &cfg)).map_err(cfg_err)?;
            write(&out, "effective_config.toml", &config::to_toml(&cfg)).map_err(cfg_err)?;
            print!("{summary}");
        }
        Command::MdpBuild { model, out } => {
            let sc = load_scenario(&model, AbstractScenario::default()).map_err(cfg_err)?;
            prepare(&out).map_err(cfg_err)?;
            let (_, mdp) = model_of(&sc).map_err(cfg_err)?;
            let mut s = scenario_header(&sc);
            s.push_str(&format!(
                "states = {}\nchoices = {}\ntransitions = {}\ndeadlocks = {}\n",
                mdp.num_states(),
                mdp.num_choices(),
                mdp.num_transitions(),
                mdp.deadlocks.len()
            ));
            for (name, bits) in &mdp.labels {
                s.push_str(&format!("label.{name} = {}\n", bits.iter().filter(|b| **b).count()));
            }
            write(&out, "mdp.txt", &s).map_err(cfg_err)?;
            write(&out, "effective_scenario.toml", &scenario_toml(&sc)).map_err(cfg_err)?;
            print!("{s}");
        }
        Command::MdpCheck { model, out } => {
            let sc = load_scenario(&model, AbstractScenario::default()).map_err(cfg_err)?;
            prepare(&out).map_err(cfg_err)?;
            let (_, mdp) = model_of(&sc).map_err(cfg_err)?;
            let text = check_text(&sc, &mdp).map_err(cfg_err)?;
            write(&out, "check.csv", &text).map_err(cfg_err)?;
            write(&out, "effective_scenario.toml", &scenario_toml(&sc)).map_err(cfg_err)?;
            print!("{text}");
        }
        Command::ExportPrism { model, out } => {
            let sc = load_scenario(&model, AbstractScenario::default()).map_err(cfg_err)?;
            prepare(&out).map_err(cfg_err)?;
            let m = sc.to_model().map_err(|e| cfg_err(e.into()))?;
            let header = scenario_header(&sc).replace("# ", "// ");
            let text = prism::export(&m).map_err(|e| cfg_err(e.into()))?;
            write(&out, "mission.prism", &format!("{header}{text}\n")).map_err(cfg_err)?;
            write(&out, "mission.props", prism::PROPERTIES).map_err(cfg_err)?;
            write(&out, "effective_scenario.toml", &scenario_toml(&sc)).map_err(cfg_err)?;
            println!("wrote {} and {}", out.join("mission.prism").display(), out.join("mission.props").display());
        }
        Command::Compare { sim, model, grid: g, runs, workers, out } => {
            if runs == 0 {
                return Err(ConfigError(anyhow::anyhow!("run count must be at least 1")));
            }
            let cfg = load_config(&sim).map_err(cfg_err)?;
            let (nx, ny) = grid(&g).map_err(cfg_err)?;
            let family = load_scenario(&model, bounds::matched_family(&cfg, nx, ny)).map_err(cfg_err)?;
            if let Some(msg) = bounds::fault_rate_mismatch(&family, &cfg) {
                eprintln!("warning: configurations are not matched: {msg}");
            }
            if cfg.targets.len() != 2 {
                eprintln!("warning: the envelope covers two objects, the simulation has {}", cfg.targets.len());
            }
            prepare(&out).map_err(cfg_err)?;
            let stats = batch::monte_carlo(&cfg, runs, workers);
            let (env, report) = bounds::check_bounds(&family, &stats).map_err(|e| cfg_err(e.into()))?;
            write(&out, "envelope.csv", &envelope_text(&family, &cfg, &env)).map_err(cfg_err)?;
            let mut text = export::header(&cfg, cfg.mission.seed);
            text.push_str(&format!("{report}\n"));
            write(&out, "containment.txt", &text).map_err(cfg_err)?;
            write(&out, "summary.toml", &export::batch_summary(&stats, &cfg)).map_err(cfg_err)?;
            write(&out, "effective_config.toml", &config::to_toml(&cfg)).map_err(cfg_err)?;
            write(&out, "effective_scenario.toml", &scenario_toml(&family)).map_err(cfg_err)?;
            println!("{report}");
            if !report.all_contained() {
                return Ok(Done::Containment);
            }
        }
    }
    Ok(Done::Ok)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Done::Ok) => ExitCode::SUCCESS,
        Ok(Done::Containment) => ExitCode::from(2),
        Err(ConfigError(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
