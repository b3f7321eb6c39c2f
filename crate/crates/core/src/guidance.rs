//! Mission logic: the 17-mode state machine, search waypoints, fault
//! sampling and the battery monitor.

use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::perception::Detection;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    Idle = 1,
    TakeOff = 2,
    Initialise = 3,
    Search = 4,
    Identify = 5,
    HoverAbove = 6,
    DescendToGrasp = 7,
    Grasp = 8,
    Ascend = 9,
    Transport = 10,
    DescendToDrop = 11,
    Drop = 12,
    ReturnToSearch = 13,
    ReturnToBase = 14,
    Land = 15,
    ReacquireTarget = 16,
    EmergencyLand = 17,
}

impl Mode {
    pub const ALL: [Mode; 17] = [
        Mode::Idle,
        Mode::TakeOff,
        Mode::Initialise,
        Mode::Search,
        Mode::Identify,
        Mode::HoverAbove,
        Mode::DescendToGrasp,
        Mode::Grasp,
        Mode::Ascend,
        Mode::Transport,
        Mode::DescendToDrop,
        Mode::Drop,
        Mode::ReturnToSearch,
        Mode::ReturnToBase,
        Mode::Land,
        Mode::ReacquireTarget,
        Mode::EmergencyLand,
    ];

    /// Mode number, 1 to 17.
    pub fn number(self) -> usize {
        self as usize
    }

    pub fn index(self) -> usize {
        self.number() - 1
    }

    pub fn from_number(n: usize) -> Option<Mode> {
        n.checked_sub(1).and_then(|i| Mode::ALL.get(i).copied())
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Idle => "Idle",
            Mode::TakeOff => "Take-off",
            Mode::Initialise => "Initialise",
            Mode::Search => "Search",
            Mode::Identify => "Identify",
            Mode::HoverAbove => "Hover above target",
            Mode::DescendToGrasp => "Descend to grasp",
            Mode::Grasp => "Grasp",
            Mode::Ascend => "Ascend",
            Mode::Transport => "Transport",
            Mode::DescendToDrop => "Descend to drop",
            Mode::Drop => "Drop",
            Mode::ReturnToSearch => "Return to search",
            Mode::ReturnToBase => "Return to base",
            Mode::Land => "Land",
            Mode::ReacquireTarget => "Reacquire target",
            Mode::EmergencyLand => "Emergency land",
        }
    }

    /// Modes with a dashed edge to Return to base.
    pub fn can_return_to_base(self) -> bool {
        matches!(self.number(), 2..=13 | 16)
    }

    /// Modes with a dashed edge to Emergency land.
    pub fn can_emergency_land(self) -> bool {
        matches!(self.number(), 2..=16)
    }

    /// Modes where the object tracker has to run.
    pub fn uses_tracker(self) -> bool {
        matches!(self, Mode::Search | Mode::HoverAbove | Mode::DescendToGrasp | Mode::ReacquireTarget)
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Solid edges of the state machine.
pub const SOLID_EDGES: [(Mode, Mode); 26] = [
    (Mode::Idle, Mode::TakeOff),
    (Mode::TakeOff, Mode::Initialise),
    (Mode::Initialise, Mode::Land),
    (Mode::Initialise, Mode::Search),
    (Mode::Search, Mode::Identify),
    (Mode::Search, Mode::ReturnToBase),
    (Mode::Identify, Mode::HoverAbove),
    (Mode::HoverAbove, Mode::DescendToGrasp),
    (Mode::HoverAbove, Mode::Search),
    (Mode::DescendToGrasp, Mode::Grasp),
    (Mode::DescendToGrasp, Mode::Search),
    (Mode::Grasp, Mode::Ascend),
    (Mode::Ascend, Mode::Transport),
    (Mode::Ascend, Mode::ReacquireTarget),
    (Mode::Transport, Mode::DescendToDrop),
    (Mode::Transport, Mode::ReacquireTarget),
    (Mode::DescendToDrop, Mode::Drop),
    (Mode::DescendToDrop, Mode::Search),
    (Mode::Drop, Mode::ReturnToSearch),
    (Mode::Drop, Mode::ReturnToBase),
    (Mode::ReturnToSearch, Mode::Search),
    (Mode::ReacquireTarget, Mode::HoverAbove),
    (Mode::ReacquireTarget, Mode::Search),
    (Mode::ReturnToBase, Mode::Land),
    (Mode::Land, Mode::Idle),
    (Mode::EmergencyLand, Mode::Idle),
];

/// True if `from -> to` is a solid or dashed edge.
pub fn is_legal_transition(from: Mode, to: Mode) -> bool {
    SOLID_EDGES.contains(&(from, to))
        || (to == Mode::EmergencyLand && from.can_emergency_land())
        || (to == Mode::ReturnToBase && from.can_return_to_base())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub psi: f64,
}

impl Waypoint {
    pub fn position(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }
}

/// The lawnmower search pattern.
pub fn waypoints() -> Vec<Waypoint> {
    let xs = [-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5];
    let mut out = Vec::with_capacity(14);
    for (i, &x) in xs.iter().enumerate() {
        let (y0, y1, psi) = if i % 2 == 0 { (-3.0, 3.0, FRAC_PI_2) } else { (3.0, -3.0, -FRAC_PI_2) };
        out.push(Waypoint { x, y: y0, z: -2.0, psi });
        out.push(Waypoint { x, y: y1, z: -2.0, psi });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuidanceParams {
    pub z_hvr: f64,
    pub z_srch: f64,
    pub z_trnsprt: f64,
    #[serde(rename = "V_th")]
    pub v_th: f64,
    #[serde(rename = "T_max")]
    pub t_max: f64,
    pub tol_pos: f64,
    /// Acceptance radius for search waypoints.
    pub tol_waypoint: f64,
    pub tol_land_pos: f64,
    pub tol_land_vel: f64,
    pub tol_hover_speed: f64,
    pub tol_grasp: f64,
    pub descend_timeout: f64,
    #[serde(rename = "P_a")]
    pub p_a: f64,
    #[serde(rename = "T_a")]
    pub t_a: f64,
    #[serde(rename = "P_g")]
    pub p_g: f64,
    #[serde(rename = "T_g")]
    pub t_g: f64,
    #[serde(rename = "P_s")]
    pub p_s: f64,
    pub waypoints: Vec<Waypoint>,
}

impl Default for GuidanceParams {
    fn default() -> Self {
        Self {
            z_hvr: -1.0,
            z_srch: -2.0,
            z_trnsprt: -1.0,
            v_th: 10.5,
            t_max: 600.0,
            tol_pos: 0.02,
            tol_waypoint: 0.002,
            tol_land_pos: 0.05,
            tol_land_vel: 0.02,
            tol_hover_speed: 0.002,
            tol_grasp: 0.02,
            descend_timeout: 15.0,
            p_a: 0.01,
            t_a: 60.0,
            p_g: 0.05,
            t_g: 60.0,
            p_s: 0.05,
            waypoints: waypoints(),
        }
    }
}

impl GuidanceParams {
    pub fn validate(&self) -> Result<(), crate::SimError> {
        let err = |m: String| Err(crate::SimError::Config(m));
        for (name, p) in [("P_a", self.p_a), ("P_g", self.p_g), ("P_s", self.p_s)] {
            if !(0.0..=1.0).contains(&p) {
                return err(format!("{name} = {p} is not a probability"));
            }
        }
        for (name, t) in [("T_a", self.t_a), ("T_g", self.t_g), ("T_max", self.t_max)] {
            if !(t > 0.0) {
                return err(format!("{name} must be positive, got {t}"));
            }
        }
        for (name, z) in [("z_hvr", self.z_hvr), ("z_srch", self.z_srch), ("z_trnsprt", self.z_trnsprt)] {
            if !(z < 0.0) {
                return err(format!("{name} must be negative (above the floor), got {z}"));
            }
        }
        let tols = [
            self.tol_pos,
            self.tol_waypoint,
            self.tol_land_pos,
            self.tol_land_vel,
            self.tol_hover_speed,
            self.tol_grasp,
        ];
        if tols.iter().any(|t| !(*t > 0.0)) || !(self.descend_timeout > 0.0) {
            return err("tolerances and timeouts must be positive".into());
        }
        if self.waypoints.is_empty() {
            return err("at least one waypoint is required".into());
        }
        Ok(())
    }
}

/// Probability of an event within one step of length `dt`, given
/// probability `p` per period `t`.
pub fn per_step_fault_prob(p: f64, t: f64, dt: f64) -> f64 {
    if p >= 1.0 {
        return 1.0;
    }
    // 1 - (1-p)^(dt/t), written to keep precision for tiny p.
    -((dt / t) * (-p).ln_1p()).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FaultEvents {
    /// Zero-based index of a rotor that failed this step.
    pub actuator: Option<usize>,
    pub grasper: bool,
    /// Outcome of the self-diagnosis, only drawn in Initialise.
    pub system: Option<bool>,
}

/// Per-step fault probabilities for a given step length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultRates {
    pub actuator: f64,
    pub grasper: f64,
    pub system: f64,
}

impl FaultRates {
    pub fn new(p: &GuidanceParams, dt: f64) -> Self {
        Self {
            actuator: per_step_fault_prob(p.p_a, p.t_a, dt),
            grasper: per_step_fault_prob(p.p_g, p.t_g, dt),
            system: p.p_s,
        }
    }
}

/// Draws this step's faults. Two uniforms are consumed every step, so the
/// random stream does not depend on the mode sequence; a rotor index is
/// drawn only when an actuator fault fires, and the system draw happens
/// only in Initialise.
pub fn sample_faults<R: Rng + ?Sized>(
    rng: &mut R,
    rates: &FaultRates,
    mode: Mode,
    actuator_failed: bool,
) -> FaultEvents {
    let ua: f64 = rng.gen();
    let ug: f64 = rng.gen();
    let mut ev = FaultEvents::default();
    if !actuator_failed && mode != Mode::Idle && mode != Mode::EmergencyLand && ua < rates.actuator {
        ev.actuator = Some(rng.gen_range(0..4));
    }
    ev.grasper = ug < rates.grasper;
    if mode == Mode::Initialise {
        ev.system = Some(rng.gen::<f64>() < rates.system);
    }
    ev
}

/// Low-battery warning.
pub fn battery_monitor(v: f64, mode: Mode, p: &GuidanceParams) -> bool {
    v <= p.v_th && !matches!(mode, Mode::ReturnToBase | Mode::Land | Mode::EmergencyLand | Mode::Idle)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionFlags {
    pub mission_failed: bool,
    pub targets_deposited: usize,
    /// One-based index of the waypoint being approached.
    pub c_wp: usize,
    /// Highest waypoint index reached so far, zero if none.
    pub last_reached: usize,
    pub r_entry: Vector3<f64>,
    pub low_battery: bool,
    /// Index of the tethered target, if any.
    pub carrying: Option<usize>,
    /// Target the grasper reached when entering Grasp.
    pub candidate: Option<usize>,
}

impl Default for MissionFlags {
    fn default() -> Self {
        Self {
            mission_failed: false,
            targets_deposited: 0,
            c_wp: 1,
            last_reached: 0,
            r_entry: Vector3::zeros(),
            low_battery: false,
            carrying: None,
            candidate: None,
        }
    }
}

/// What the state machine sees each step.
#[derive(Debug, Clone, Copy)]
pub struct Snapshot {
    pub t: f64,
    pub r: Vector3<f64>,
    pub rdot: Vector3<f64>,
    pub psi: f64,
    pub v: f64,
    pub detection: Detection,
    /// Target associated with the tracked centroid and the distance from
    /// the grasper to the top of that target.
    pub tracked: Option<(usize, f64)>,
    pub n_targets: usize,
    /// Number of targets currently counted as deposited by the engine.
    pub deposited: usize,
}

/// Trajectory command issued to the controllers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Command {
    /// Rotors off.
    Off,
    /// Track a position with the given speed limit.
    Position { r_d: Vector3<f64>, psi_d: f64, v_max: SpeedLimit },
    /// Hold the horizontal velocity given by the visual controller (zero
    /// without a centroid) and track a height.
    Visual { z_d: f64, psi_d: f64 },
    /// Zero horizontal velocity and track a height.
    HoldHorizontal { z_d: f64, psi_d: f64 },
    /// Two-rotor descent to a height.
    Emergency { z_d: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpeedLimit {
    Normal,
    Search,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReleaseReason {
    Drop,
    GrasperFault,
    LowBattery,
}

/// Side effects requested by the state machine.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Actions {
    pub grasp: Option<usize>,
    pub release: Option<(usize, ReleaseReason)>,
    /// Number of deposits recorded by this step.
    pub deposits: usize,
    /// Grasper fault that dropped a target.
    pub grasper_drop: bool,
    pub trigger: Option<&'static str>,
}

#[derive(Debug, Clone)]
pub struct StepOutput {
    pub mode: Mode,
    pub command: Command,
    pub actions: Actions,
}

/// Mission-level constants needed by the state machine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sites {
    pub base: Vector3<f64>,
    pub drop_site: Vector3<f64>,
    pub quad_radius: f64,
    /// Height command that puts a grasped target on the floor.
    pub grasp_height: f64,
    /// Voltage at which the battery counts as full.
    pub v_full: f64,
}

/// The guidance state machine.
#[derive(Debug, Clone)]
pub struct Guidance {
    pub mode: Mode,
    pub flags: MissionFlags,
    pub params: GuidanceParams,
    pub sites: Sites,
    n_targets: usize,
    entered_at: f64,
    psi_hold: f64,
}

impl Guidance {
    pub fn new(params: GuidanceParams, sites: Sites, psi0: f64, n_targets: usize) -> Self {
        Self {
            mode: Mode::Idle,
            flags: MissionFlags::default(),
            params,
            sites,
            n_targets,
            entered_at: 0.0,
            psi_hold: psi0,
        }
    }

    pub fn entered_at(&self) -> f64 {
        self.entered_at
    }

    fn current_waypoint(&self) -> usize {
        self.flags.c_wp.clamp(1, self.params.waypoints.len())
    }

    /// Command for the current mode without changing state.
    pub fn command(&self) -> Command {
        let p = &self.params;
        let s = &self.sites;
        let pos = |r_d: Vector3<f64>| Command::Position { r_d, psi_d: self.psi_hold, v_max: SpeedLimit::Normal };
        let above = |site: &Vector3<f64>, z: f64| Vector3::new(site.x, site.y, z);
        match self.mode {
            Mode::Idle => Command::Off,
            Mode::TakeOff | Mode::Initialise | Mode::ReturnToBase => pos(above(&s.base, p.z_hvr)),
            Mode::Search => {
                let wp = p.waypoints[self.current_waypoint() - 1];
                Command::Position { r_d: wp.position(), psi_d: wp.psi, v_max: SpeedLimit::Search }
            }
            Mode::Identify | Mode::ReacquireTarget => pos(self.flags.r_entry),
            Mode::HoverAbove => Command::Visual { z_d: p.z_srch, psi_d: self.psi_hold },
            Mode::DescendToGrasp => Command::Visual { z_d: s.grasp_height, psi_d: self.psi_hold },
            Mode::Grasp => Command::HoldHorizontal { z_d: s.grasp_height, psi_d: self.psi_hold },
            Mode::Ascend => Command::HoldHorizontal { z_d: p.z_trnsprt, psi_d: self.psi_hold },
            Mode::Transport => pos(above(&s.drop_site, p.z_trnsprt)),
            Mode::DescendToDrop | Mode::Drop => pos(above(&s.drop_site, s.grasp_height)),
            Mode::ReturnToSearch => pos(above(&s.drop_site, p.z_srch)),
            Mode::Land => pos(above(&s.base, -s.quad_radius)),
            Mode::EmergencyLand => Command::Emergency { z_d: -s.quad_radius },
        }
    }

    /// Position the current mode is steering towards, if any.
    pub fn position_target(&self) -> Option<Vector3<f64>> {
        match self.command() {
            Command::Position { r_d, .. } => Some(r_d),
            _ => None,
        }
    }

    /// True when the mission has finished and no further take-off will happen.
    pub fn finished(&self) -> bool {
        self.mode == Mode::Idle && (self.flags.mission_failed || self.all_deposited())
    }

    pub fn all_deposited(&self) -> bool {
        self.flags.targets_deposited >= self.n_targets
    }

    /// Advances the machine by one step; at most one transition is taken.
    pub fn step(&mut self, snap: &Snapshot, faults: &FaultEvents) -> StepOutput {
        self.n_targets = snap.n_targets;
        self.flags.targets_deposited = snap.deposited;
        let mut actions = Actions::default();
        let next = self.next_mode(snap, faults, &mut actions);
        if let Some(to) = next {
            debug_assert!(is_legal_transition(self.mode, to), "{} -> {}", self.mode, to);
            self.enter(to, snap);
        }
        StepOutput { mode: self.mode, command: self.command(), actions }
    }

    fn enter(&mut self, to: Mode, snap: &Snapshot) {
        self.mode = to;
        self.entered_at = snap.t;
        self.psi_hold = snap.psi;
        match to {
            Mode::Identify | Mode::ReacquireTarget => self.flags.r_entry = snap.r,
            // Re-fly the interrupted leg from the last waypoint reached.
            Mode::Search if self.flags.last_reached > 0 => self.flags.c_wp = self.flags.last_reached,
            _ => {}
        }
    }

    fn next_mode(&mut self, snap: &Snapshot, faults: &FaultEvents, actions: &mut Actions) -> Option<Mode> {
        let p = self.params.clone();
        let mode = self.mode;
        let near = |target: Vector3<f64>, tol: f64| (snap.r - target).norm() < tol;

        if faults.actuator.is_some() && mode.can_emergency_land() {
            self.flags.mission_failed = true;
            actions.trigger = Some("rotor loss");
            return Some(Mode::EmergencyLand);
        }
        let timed_out = snap.t >= p.t_max && !self.all_deposited();
        if mode.can_return_to_base() && (battery_monitor(snap.v, mode, &p) || timed_out) {
            if timed_out {
                self.flags.mission_failed = true;
                actions.trigger = Some("time limit");
            } else {
                self.flags.low_battery = true;
                actions.trigger = Some("low battery");
            }
            if let Some(k) = self.flags.carrying.take() {
                actions.release = Some((k, ReleaseReason::LowBattery));
            }
            return Some(Mode::ReturnToBase);
        }

        let target = self.position_target();
        let (trigger, to) = match mode {
            Mode::Idle => {
                if snap.v >= self.sites.v_full && !self.finished() {
                    self.flags.low_battery = false;
                    ("battery full", Some(Mode::TakeOff))
                } else {
                    ("", None)
                }
            }
            Mode::TakeOff => ("at height", target.filter(|t| near(*t, p.tol_pos)).map(|_| Mode::Initialise)),
            Mode::Initialise => match faults.system {
                Some(true) => ("systems bad", Some(Mode::Land)),
                Some(false) => ("systems okay", Some(Mode::Search)),
                None => ("", None),
            },
            Mode::Search => {
                if self.all_deposited() {
                    ("all targets found", Some(Mode::ReturnToBase))
                } else if snap.detection.d {
                    ("target found", Some(Mode::Identify))
                } else if target.is_some_and(|t| near(t, p.tol_waypoint)) {
                    let k = self.current_waypoint();
                    self.flags.last_reached = self.flags.last_reached.max(k);
                    if k >= p.waypoints.len() {
                        self.flags.mission_failed = true;
                        ("end of path", Some(Mode::ReturnToBase))
                    } else {
                        self.flags.c_wp = k + 1;
                        ("", None)
                    }
                } else {
                    ("", None)
                }
            }
            Mode::Identify => ("identified", target.filter(|t| near(*t, p.tol_pos)).map(|_| Mode::HoverAbove)),
            Mode::HoverAbove => {
                if snap.detection.centroid.is_none() {
                    ("target lost", Some(Mode::Search))
                } else if snap.rdot.xy().norm() < p.tol_hover_speed {
                    ("above target", Some(Mode::DescendToGrasp))
                } else {
                    ("", None)
                }
            }
            Mode::DescendToGrasp => {
                if let Some((k, _)) = snap.tracked.filter(|(_, gap)| *gap < p.tol_grasp) {
                    self.flags.candidate = Some(k);
                    ("at object height", Some(Mode::Grasp))
                } else if snap.t - self.entered_at > p.descend_timeout {
                    ("too long", Some(Mode::Search))
                } else {
                    ("", None)
                }
            }
            Mode::Grasp => {
                if let Some(k) = self.flags.candidate.take() {
                    self.flags.carrying = Some(k);
                    actions.grasp = Some(k);
                }
                ("grabbed", Some(Mode::Ascend))
            }
            Mode::Ascend | Mode::Transport => {
                if faults.grasper && self.flags.carrying.is_some() {
                    let k = self.flags.carrying.take().unwrap();
                    actions.release = Some((k, ReleaseReason::GrasperFault));
                    actions.grasper_drop = true;
                    ("target dropped", Some(Mode::ReacquireTarget))
                } else if mode == Mode::Ascend && (snap.r.z - p.z_trnsprt).abs() < p.tol_pos {
                    ("at transport height", Some(Mode::Transport))
                } else if mode == Mode::Transport && target.is_some_and(|t| near(t, p.tol_pos)) {
                    ("above drop site", Some(Mode::DescendToDrop))
                } else {
                    ("", None)
                }
            }
            Mode::DescendToDrop => {
                if faults.grasper && self.flags.carrying.is_some() {
                    let k = self.flags.carrying.take().unwrap();
                    actions.release = Some((k, ReleaseReason::GrasperFault));
                    actions.grasper_drop = true;
                    actions.deposits = 1;
                    ("dropped early", Some(Mode::Search))
                } else if target.is_some_and(|t| near(t, p.tol_pos)) {
                    ("at drop height", Some(Mode::Drop))
                } else {
                    ("", None)
                }
            }
            Mode::Drop => {
                if let Some(k) = self.flags.carrying.take() {
                    actions.release = Some((k, ReleaseReason::Drop));
                    actions.deposits = 1;
                }
                if self.flags.targets_deposited + actions.deposits >= self.n_targets {
                    ("all targets found", Some(Mode::ReturnToBase))
                } else {
                    ("targets remaining", Some(Mode::ReturnToSearch))
                }
            }
            Mode::ReturnToSearch => ("at search height", target.filter(|t| near(*t, p.tol_pos)).map(|_| Mode::Search)),
            Mode::ReturnToBase => ("above base", target.filter(|t| near(*t, p.tol_pos)).map(|_| Mode::Land)),
            Mode::Land => {
                let landed = target.is_some_and(|t| near(t, p.tol_land_pos)) && snap.rdot.norm() < p.tol_land_vel;
                ("landed", landed.then_some(Mode::Idle))
            }
            Mode::ReacquireTarget => {
                let settled = target.is_some_and(|t| near(t, p.tol_land_pos)) && snap.rdot.norm() < p.tol_land_vel;
                if !settled {
                    ("", None)
                } else if snap.detection.d {
                    ("target found", Some(Mode::HoverAbove))
                } else {
                    ("target lost", Some(Mode::Search))
                }
            }
            Mode::EmergencyLand => {
                ("landed", ((snap.r.z + self.sites.quad_radius).abs() < p.tol_pos).then_some(Mode::Idle))
            }
        };
        if to.is_some() {
            actions.trigger = Some(trigger);
        }
        to
    }
}
