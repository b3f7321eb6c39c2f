//! Text exports for mission records and batch statistics.
//!
//! CSV files start with `#` comment lines naming the crate version, the
//! SHA-256 of the scenario TOML and the seed, so a file can be traced back to
//! the run that produced it.

use std::fmt::Write as _;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::batch::BatchStats;
use crate::config;
use crate::engine::{FaultKind, MissionRecord, ScenarioConfig};
use crate::guidance::Mode;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Hex SHA-256 of the canonical TOML form of `cfg`.
pub fn config_hash(cfg: &ScenarioConfig) -> String {
    hex::encode(Sha256::digest(config::to_toml(cfg).as_bytes()))
}

pub fn header(cfg: &ScenarioConfig, seed: u64) -> String {
    format!("# quadsim {VERSION}\n# config_sha256 {}\n# seed {seed}\n", config_hash(cfg))
}

/// Full state history: quad state, mode and target positions.
pub fn trajectory_csv(rec: &MissionRecord, cfg: &ScenarioConfig) -> String {
    let mut out = header(cfg, rec.seed);
    out.push_str("t,mode,x,y,z,xdot,ydot,zdot,phi,theta,psi,p,q,r,V,gimbal_roll,gimbal_pitch,grasper");
    for i in 0..rec.initial_targets.len() {
        let _ = write!(out, ",target{i}_x,target{i}_y,target{i}_z,target{i}_tethered");
    }
    out.push('\n');
    for s in &rec.samples {
        let q = &s.quad;
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            s.t,
            s.mode.number(),
            q.r.x,
            q.r.y,
            q.r.z,
            q.rdot.x,
            q.rdot.y,
            q.rdot.z,
            q.eta.phi,
            q.eta.theta,
            q.eta.psi,
            q.omega.x,
            q.omega.y,
            q.omega.z,
            q.v,
            q.gimbal[0],
            q.gimbal[1],
            q.grasper_engaged as u8
        );
        for t in &s.targets {
            let _ = write!(out, ",{},{},{},{}", t.r.x, t.r.y, t.r.z, t.tethered as u8);
        }
        out.push('\n');
    }
    out
}

/// Height above the floor and commanded height.
pub fn height_csv(rec: &MissionRecord, cfg: &ScenarioConfig) -> String {
    let mut out = header(cfg, rec.seed);
    out.push_str("t,mode,height,height_cmd\n");
    for s in &rec.samples {
        let cmd = s.z_cmd.map(|z| (-z).to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{}", s.t, s.mode.number(), -s.quad.r.z, cmd);
    }
    out
}

pub fn battery_csv(rec: &MissionRecord, cfg: &ScenarioConfig) -> String {
    let mut out = header(cfg, rec.seed);
    out.push_str("t,mode,V\n");
    for s in &rec.samples {
        let _ = writeln!(out, "{},{},{}", s.t, s.mode.number(), s.quad.v);
    }
    out
}

#[derive(Serialize)]
struct TransitionRow<'a> {
    t: f64,
    from: &'a str,
    to: &'a str,
    trigger: &'a str,
}

#[derive(Serialize)]
struct FaultRow<'a> {
    t: f64,
    mode: &'a str,
    kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    rotor: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dropped: Option<bool>,
}

#[derive(Serialize)]
struct EventLog<'a> {
    version: &'static str,
    config_sha256: String,
    run_index: u64,
    /// Hex, since run seeds use all 64 bits and TOML integers are signed.
    seed: String,
    outcome: String,
    duration: f64,
    transitions: Vec<TransitionRow<'a>>,
    faults: Vec<FaultRow<'a>>,
}

/// Transition and fault log as TOML.
pub fn event_log(rec: &MissionRecord, cfg: &ScenarioConfig) -> String {
    let log = EventLog {
        version: VERSION,
        config_sha256: config_hash(cfg),
        run_index: rec.run_index,
        seed: format!("{:#018x}", rec.seed),
        outcome: rec.outcome.to_string(),
        duration: rec.duration,
        transitions: rec
            .transitions
            .iter()
            .map(|e| TransitionRow { t: e.t, from: e.from.name(), to: e.to.name(), trigger: &e.trigger })
            .collect(),
        faults: rec
            .faults
            .iter()
            .map(|f| {
                let (kind, rotor, dropped) = match f.kind {
                    // Rotors are numbered 1 to 4 in exported text.
                    FaultKind::Actuator { rotor } => ("actuator", Some(rotor + 1), None),
                    FaultKind::Grasper { dropped } => ("grasper", None, Some(dropped)),
                    FaultKind::System => ("system", None, None),
                };
                FaultRow { t: f.t, mode: f.mode.name(), kind, rotor, dropped }
            })
            .collect(),
    };
    toml::to_string(&log).expect("event log serialises")
}

#[derive(Serialize)]
struct Summary<'a> {
    version: &'static str,
    config_sha256: String,
    seed: u64,
    runs: usize,
    success_rate: f64,
    system_fault_rate: f64,
    actuator_fault_rate: f64,
    grasper_drop_rate: f64,
    mean_time: f64,
    time_std: f64,
    initialise_visits: usize,
    failures: &'a std::collections::BTreeMap<String, usize>,
}

/// Headline batch figures as TOML.
pub fn batch_summary(stats: &BatchStats, cfg: &ScenarioConfig) -> String {
    let s = Summary {
        version: VERSION,
        config_sha256: config_hash(cfg),
        seed: cfg.mission.seed,
        runs: stats.runs,
        success_rate: stats.success_rate(),
        system_fault_rate: stats.system_fault_rate(),
        actuator_fault_rate: stats.actuator_fault_rate(),
        grasper_drop_rate: stats.grasper_drop_rate(),
        mean_time: stats.mean_time(),
        time_std: stats.time_std(),
        initialise_visits: stats.initialise_visits,
        failures: &stats.failures,
    };
    toml::to_string(&s).expect("summary serialises")
}

/// 17 x 17 transition-frequency matrix, rows are source modes.
pub fn transition_matrix_csv(stats: &BatchStats, cfg: &ScenarioConfig) -> String {
    let mut out = header(cfg, cfg.mission.seed);
    out.push_str("from");
    for m in Mode::ALL {
        let _ = write!(out, ",{}", m.name());
    }
    out.push('\n');
    let p = stats.transition_probabilities();
    for a in Mode::ALL {
        out.push_str(a.name());
        for b in Mode::ALL {
            let _ = write!(out, ",{}", p[a.index()][b.index()]);
        }
        out.push('\n');
    }
    out
}
