//! Envelopes over object placements and containment of simulation
//! estimates.

use std::fmt;

use quadsim::batch::BatchStats;
use quadsim::engine::ScenarioConfig;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::VerifyError;
use crate::explore::build;
use crate::scenario::AbstractScenario;
use crate::solve::{initial_probability, initial_reward, Opt, SolveOptions};

/// Seconds per metre of lawnmower search, including turns.
pub const SEARCH_SECONDS_PER_METRE: f64 = 3.0;
/// Seconds per metre of point-to-point travel.
pub const TRAVEL_SECONDS_PER_METRE: f64 = 1.0;
/// Time the target hangs below the UAV between grasp and drop.
pub const CARRY_SECONDS: f64 = 9.7;

/// Optimal values for one placement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    fn hull(&self, o: &Interval) -> Interval {
        Interval { lower: self.lower.min(o.lower), upper: self.upper.max(o.upper) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBounds {
    pub objects: Vec<[i64; 2]>,
    pub states: usize,
    pub success: Interval,
    pub fault: Interval,
    pub time: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub models: Vec<ModelBounds>,
    pub success: Interval,
    pub fault: Interval,
    pub time: Interval,
}

/// Pmin/Pmax of success and fault and Rmin/Rmax of mission time.
pub fn model_bounds(sc: &AbstractScenario, o: &SolveOptions) -> Result<ModelBounds, VerifyError> {
    let m = build(&sc.to_model()?)?;
    let p = |label, opt| initial_probability(&m, label, opt, o);
    let r = |opt| initial_reward(&m, "time", "done", opt, o);
    Ok(ModelBounds {
        objects: sc.objects.clone(),
        states: m.num_states(),
        success: Interval { lower: p("MissionSuccessful", Opt::Min)?, upper: p("MissionSuccessful", Opt::Max)? },
        fault: Interval { lower: p("fault", Opt::Min)?, upper: p("fault", Opt::Max)? },
        time: Interval { lower: r(Opt::Min)?, upper: r(Opt::Max)? },
    })
}

/// Every placement of `count` objects on distinct cells other than the
/// base and the depot, in search-path order.
pub fn placements(sc: &AbstractScenario, count: usize) -> Vec<Vec<[i64; 2]>> {
    let cells: Vec<[i64; 2]> = sc.search_path().into_iter().filter(|c| *c != sc.base && *c != sc.depot).collect();
    let mut out = Vec::new();
    let mut pick = Vec::with_capacity(count);
    fn rec(cells: &[[i64; 2]], from: usize, count: usize, pick: &mut Vec<[i64; 2]>, out: &mut Vec<Vec<[i64; 2]>>) {
        if pick.len() == count {
            out.push(pick.clone());
            return;
        }
        for i in from..cells.len() {
            pick.push(cells[i]);
            rec(cells, i + 1, count, pick, out);
            pick.pop();
        }
    }
    rec(&cells, 0, count, &mut pick, &mut out);
    out
}

/// Solves every placement and takes min of lower bounds, max of upper.
pub fn envelope(
    family: &AbstractScenario,
    placements: &[Vec<[i64; 2]>],
    o: &SolveOptions,
) -> Result<Envelope, VerifyError> {
    if placements.is_empty() {
        return Err(VerifyError::Scenario("no object placements to sweep".into()));
    }
    let models = placements
        .par_iter()
        .map(|objs| model_bounds(&family.with_objects(objs.clone()), o))
        .collect::<Result<Vec<_>, _>>()?;
    let first = &models[0];
    let (mut success, mut fault, mut time) = (first.success, first.fault, first.time);
    for m in &models[1..] {
        success = success.hull(&m.success);
        fault = fault.hull(&m.fault);
        time = time.hull(&m.time);
    }
    Ok(Envelope { models, success, fault, time })
}

/// Point estimates from a simulation batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimates {
    pub runs: usize,
    pub success: f64,
    pub fault: f64,
    pub mean_time: f64,
    pub time_std: f64,
}

impl Estimates {
    pub fn from_batch(s: &BatchStats) -> Self {
        Self {
            runs: s.runs,
            success: s.success_rate(),
            fault: s.actuator_fault_rate(),
            mean_time: s.mean_time(),
            time_std: s.time_std(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Containment {
    pub quantity: String,
    pub bounds: Interval,
    pub estimate: f64,
    /// Standard error of the estimate.
    pub sigma: f64,
    pub contained: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainmentReport {
    pub rows: Vec<Containment>,
}

impl ContainmentReport {
    pub fn all_contained(&self) -> bool {
        self.rows.iter().all(|r| r.contained)
    }
}

fn binomial_sigma(p: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        (p * (1.0 - p) / n as f64).sqrt()
    }
}

/// Whether each estimate lies in its interval, widened by three
/// standard errors. Binomial errors are taken at the point of the interval
/// nearest the estimate, so an estimate of exactly 0 or 1 still gets a
/// nonzero tolerance when the interval allows it.
pub fn contain(env: &Envelope, est: &Estimates) -> ContainmentReport {
    let row = |q: &str, bounds: Interval, estimate: f64, sigma: f64| Containment {
        quantity: q.into(),
        bounds,
        estimate,
        sigma,
        contained: estimate >= bounds.lower - 3.0 * sigma && estimate <= bounds.upper + 3.0 * sigma,
    };
    let time_sigma = if est.runs == 0 { 0.0 } else { est.time_std / (est.runs as f64).sqrt() };
    let p_sigma = |i: Interval, p: f64| binomial_sigma(p.clamp(i.lower, i.upper), est.runs);
    ContainmentReport {
        rows: vec![
            row("success", env.success, est.success, p_sigma(env.success, est.success)),
            row("fault", env.fault, est.fault, p_sigma(env.fault, est.fault)),
            row("time", env.time, est.mean_time, time_sigma),
        ],
    }
}

/// Sweeps two-object placements of the family and checks the batch
/// against the envelope.
pub fn check_bounds(family: &AbstractScenario, sim: &BatchStats) -> Result<(Envelope, ContainmentReport), VerifyError> {
    let env = envelope(family, &placements(family, 2), &SolveOptions::default())?;
    let report = contain(&env, &Estimates::from_batch(sim));
    Ok((env, report))
}

fn cell_of(v: f64, range: [f64; 2], n: i64) -> i64 {
    let f = (v - range[0]) / (range[1] - range[0]);
    ((f * n as f64).floor() as i64).clamp(0, n - 1)
}

/// Per-second actuator fault probability implied by a simulation config.
pub fn per_second_fault(cfg: &ScenarioConfig) -> f64 {
    1.0 - (1.0 - cfg.guidance.p_a).powf(1.0 / cfg.guidance.t_a)
}

/// An abstract scenario on an `nx` × `ny` grid over the simulated arena,
/// with base, depot and fault rates taken from the config.
pub fn matched_family(cfg: &ScenarioConfig, nx: i64, ny: i64) -> AbstractScenario {
    let a = &cfg.arena;
    let cell = ((a.x[1] - a.x[0]) / nx as f64).max((a.y[1] - a.y[0]) / ny as f64);
    let g = &cfg.guidance;
    let start = cfg.mission.start;
    let drop = cfg.mission.drop_site;
    AbstractScenario {
        xcoord: nx,
        ycoord: ny,
        objects: Vec::new(),
        base: [cell_of(start[0], a.x, nx), cell_of(start[1], a.y, ny)],
        depot: [cell_of(drop[0], a.x, nx), cell_of(drop[1], a.y, ny)],
        pf: per_second_fault(cfg),
        ps: g.p_s,
        pg: 1.0 - (1.0 - g.p_g).powf(CARRY_SECONDS / g.t_g),
        dt: (SEARCH_SECONDS_PER_METRE * cell).round().max(1.0) as i64,
        move_time: TRAVEL_SECONDS_PER_METRE * cell,
        miss: 300,
        hover: [15, 15],
        ..AbstractScenario::default()
    }
}

/// Describes fault-rate differences between the two halves, if any.
pub fn fault_rate_mismatch(sc: &AbstractScenario, cfg: &ScenarioConfig) -> Option<String> {
    let pf = per_second_fault(cfg);
    let mut out = Vec::new();
    if (pf - sc.pf).abs() > 1e-9 * pf.max(1e-12) + 1e-15 {
        out.push(format!("actuator fault rate {:.6e}/s in the simulation but {:.6e}/s in the model", pf, sc.pf));
    }
    if (cfg.guidance.p_s - sc.ps).abs() > 1e-12 {
        out.push(format!("system fault probability {} in the simulation but {} in the model", cfg.guidance.p_s, sc.ps));
    }
    (!out.is_empty()).then(|| out.join("; "))
}

impl fmt::Display for Envelope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# objects,states,Pmin_success,Pmax_success,Pmin_fault,Pmax_fault,Rmin_time,Rmax_time")?;
        for m in &self.models {
            let objs: Vec<String> = m.objects.iter().map(|c| format!("{}:{}", c[0], c[1])).collect();
            writeln!(
                f,
                "{},{},{:?},{:?},{:?},{:?},{:?},{:?}",
                objs.join(" "),
                m.states,
                m.success.lower,
                m.success.upper,
                m.fault.lower,
                m.fault.upper,
                m.time.lower,
                m.time.upper
            )?;
        }
        writeln!(f, "# envelope over {} models", self.models.len())?;
        writeln!(
            f,
            "success [{:.4}, {:.4}] width {:.4}",
            self.success.lower,
            self.success.upper,
            self.success.width()
        )?;
        writeln!(f, "fault [{:.4}, {:.4}] width {:.4}", self.fault.lower, self.fault.upper, self.fault.width())?;
        write!(f, "time [{:.1}, {:.1}] width {:.1}", self.time.lower, self.time.upper, self.time.width())
    }
}

impl fmt::Display for ContainmentReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.rows.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(
                f,
                "{} {:<8} {:.4} in [{:.4}, {:.4}] (sigma {:.4})",
                if r.contained { "PASS" } else { "FAIL" },
                r.quantity,
                r.estimate,
                r.bounds.lower,
                r.bounds.upper,
                r.sigma
            )?;
        }
        Ok(())
    }
}
