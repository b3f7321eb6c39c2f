//! Fixed-step mission simulation: sense, decide, control, integrate.

use nalgebra::{Matrix3, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::control::{
    emergency_inputs, linearizing_feedback, position_control, rotor_inputs, ControlGains, VelocityFilter,
    VisualController,
};
use crate::error::SimError;
use crate::guidance::{
    sample_faults, Command, FaultRates, Guidance, GuidanceParams, Mode, ReleaseReason, Sites, Snapshot, SpeedLimit,
};
use crate::perception::{
    detect_targets, project_unbounded, project_vertices, CameraParams, CameraView, Detection, WorldVertex,
};
use crate::plant::{
    angular_accel, battery_step, effective_inputs, gimbal_step, quad_derivatives, rotor_torques, target_derivatives,
    translational_accel, QuadParams, QuadState, RigidDerivative, TargetColour, TargetParams, TargetState,
};
use crate::spatial::{dcm_world_to_body, EulerAngles, Pose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Arena {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub z: [f64; 2],
}

impl Default for Arena {
    fn default() -> Self {
        Self { x: [-2.0, 2.0], y: [-3.5, 3.5], z: [-3.0, 0.0] }
    }
}

impl Arena {
    pub fn contains(&self, p: &Vector3<f64>, margin: f64) -> bool {
        let inside = |v: f64, r: [f64; 2]| v >= r[0] - margin && v <= r[1] + margin;
        inside(p.x, self.x) && inside(p.y, self.y) && inside(p.z, self.z)
    }
}

/// How initial target poses are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Placement {
    /// Uniform position in the box and uniform heading.
    Uniform { x: [f64; 2], y: [f64; 2] },
    /// Fixed (x, y, psi) per target.
    Fixed { poses: Vec<[f64; 3]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionSetup {
    pub dt: f64,
    pub seed: u64,
    /// Landing site and initial quadrotor pose (x, y, z, psi).
    pub start: [f64; 4],
    pub drop_site: [f64; 3],
    /// Initial battery voltage; full when absent.
    #[serde(default, rename = "V0")]
    pub v0: Option<f64>,
    pub placement: Placement,
    /// Resample targets that spawn inside the drop zone.
    #[serde(default)]
    pub reject_in_drop_zone: bool,
    /// Trajectory is stored every this many steps; zero stores nothing.
    pub decimation: usize,
    /// Hard stop after the mission time limit, seconds.
    pub overrun: f64,
}

impl Default for MissionSetup {
    fn default() -> Self {
        Self {
            dt: 0.01,
            seed: 1,
            start: [-1.8795, -2.5936, -0.2, 0.9305],
            drop_site: [1.3303, -1.3307, 0.0],
            v0: None,
            placement: Placement::Uniform { x: [-1.9, 1.9], y: [-3.4, 3.4] },
            reject_in_drop_zone: false,
            decimation: 10,
            overrun: 300.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub mission: MissionSetup,
    pub arena: Arena,
    pub quad: QuadParams,
    pub targets: Vec<TargetParams>,
    pub gains: ControlGains,
    pub guidance: GuidanceParams,
    pub camera: CameraParams,
}

impl Default for ScenarioConfig {
    /// Two targets, fixed start pose and drop site.
    fn default() -> Self {
        Self {
            mission: MissionSetup::default(),
            arena: Arena::default(),
            quad: QuadParams::default(),
            targets: vec![TargetParams::with_colour(TargetColour::Red), TargetParams::with_colour(TargetColour::Blue)],
            gains: ControlGains::default(),
            guidance: GuidanceParams::default(),
            camera: CameraParams::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let err = |m: String| Err(SimError::Config(m));
        self.quad.validate()?;
        self.gains.validate()?;
        self.guidance.validate()?;
        self.camera.validate()?;
        for t in &self.targets {
            t.validate()?;
        }
        let m = &self.mission;
        if !(m.dt > 0.0) {
            return err(format!("dt must be positive, got {}", m.dt));
        }
        let start = Vector3::new(m.start[0], m.start[1], m.start[2]);
        if !self.arena.contains(&start, 0.0) {
            return err(format!("start {start:?} outside the arena"));
        }
        let ds = Vector3::from(m.drop_site);
        if ds.z != 0.0 || !self.arena.contains(&ds, 0.0) {
            return err(format!("drop site {ds:?} must lie on the arena floor"));
        }
        match &m.placement {
            Placement::Uniform { x, y } => {
                if !(x[0] <= x[1] && y[0] <= y[1]) {
                    return err("placement ranges must be ordered".into());
                }
                let corner = |a: f64, b: f64| self.arena.contains(&Vector3::new(a, b, 0.0), 0.0);
                if !(corner(x[0], y[0]) && corner(x[1], y[1])) {
                    return err("placement box leaves the arena".into());
                }
            }
            Placement::Fixed { poses } => {
                if poses.len() != self.targets.len() {
                    return err(format!("{} fixed poses for {} targets", poses.len(), self.targets.len()));
                }
                if let Some(p) = poses.iter().find(|p| !self.arena.contains(&Vector3::new(p[0], p[1], 0.0), 0.0)) {
                    return err(format!("target pose {p:?} outside the arena"));
                }
            }
        }
        if let Some(v) = m.v0 {
            if !(0.0..=self.quad.v_max).contains(&v) {
                return err(format!("V0 = {v} outside [0, V_max]"));
            }
        }
        Ok(())
    }

    pub fn start_pose(&self) -> Pose {
        let s = self.mission.start;
        Pose::new(Vector3::new(s[0], s[1], s[2]), EulerAngles::new(0.0, 0.0, s[3]))
    }

    pub fn drop_site(&self) -> Vector3<f64> {
        Vector3::from(self.mission.drop_site)
    }

    pub fn sites(&self) -> Sites {
        let base = self.start_pose().position;
        let r_gq = self.quad.r_gq[2];
        let r_t = self.targets.first().map_or(0.05, |t| t.radius);
        Sites {
            base: Vector3::new(base.x, base.y, 0.0),
            drop_site: self.drop_site(),
            quad_radius: self.quad.radius,
            grasp_height: -(r_gq + 2.0 * r_t),
            v_full: self.quad.v_max,
        }
    }
}

/// Derives a per-run seed from the master seed and run index.
pub fn run_seed(master: u64, index: u64) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    splitmix(splitmix(master) ^ index)
}

/// Classical fourth-order Runge-Kutta step for an autonomous or
/// time-varying system on a fixed-size state.
pub fn rk4_step<const N: usize, E, F>(x: &[f64; N], t: f64, dt: f64, mut f: F) -> Result<[f64; N], E>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
{
    let axpy = |a: &[f64; N], h: f64, k: &[f64; N]| {
        let mut out = *a;
        for i in 0..N {
            out[i] += h * k[i];
        }
        out
    };
    let k1 = f(t, x)?;
    let k2 = f(t + 0.5 * dt, &axpy(x, 0.5 * dt, &k1))?;
    let k3 = f(t + 0.5 * dt, &axpy(x, 0.5 * dt, &k2))?;
    let k4 = f(t + dt, &axpy(x, dt, &k3))?;
    let mut out = *x;
    for i in 0..N {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(out)
}

fn pack(r: &Vector3<f64>, rdot: &Vector3<f64>, eta: &EulerAngles, omega: &Vector3<f64>) -> [f64; 12] {
    [r.x, r.y, r.z, rdot.x, rdot.y, rdot.z, eta.phi, eta.theta, eta.psi, omega.x, omega.y, omega.z]
}

fn unpack(x: &[f64; 12]) -> (Vector3<f64>, Vector3<f64>, EulerAngles, Vector3<f64>) {
    (
        Vector3::new(x[0], x[1], x[2]),
        Vector3::new(x[3], x[4], x[5]),
        EulerAngles::new(x[6], x[7], x[8]),
        Vector3::new(x[9], x[10], x[11]),
    )
}

fn flatten(d: &RigidDerivative) -> [f64; 12] {
    [
        d.rdot.x,
        d.rdot.y,
        d.rdot.z,
        d.rddot.x,
        d.rddot.y,
        d.rddot.z,
        d.etadot.x,
        d.etadot.y,
        d.etadot.z,
        d.omegadot.x,
        d.omegadot.y,
        d.omegadot.z,
    ]
}

/// Rotation of a world-to-body DCM under a constant body rate for `dt`.
fn rotate_dcm(r: &Matrix3<f64>, omega: &Vector3<f64>, dt: f64) -> Matrix3<f64> {
    let angle = omega.norm() * dt;
    if angle == 0.0 {
        return *r;
    }
    let axis = nalgebra::Unit::new_normalize(*omega);
    // R' = exp(-[w]x dt) R.
    let step = nalgebra::Rotation3::from_axis_angle(&axis, -angle);
    step.matrix() * r
}

/// Body rate magnitude above which a step counts as fast spin.
const SPIN_LIMIT: f64 = 0.5;

/// Advances the quadrotor's rigid-body states over one step with
/// constant rotor inputs.
///
/// Ordinary flight uses RK4 on the Euler-angle model. When the body spins
/// so fast that one step covers more than half a radian (the two-rotor
/// emergency descent), the yaw spin is integrated in closed form: the spin
/// rate grows linearly, the transverse rates precess, the attitude rotates
/// about the body z-axis and the thrust axis stays fixed over the step.
pub fn step_quad(s: &QuadState, u: &[f64; 4], p: &QuadParams, dt: f64) -> Result<QuadState, SimError> {
    let ue = effective_inputs(u, &s.rotor_health);
    let torque = rotor_torques(&ue, p);
    let wdot = angular_accel(&s.omega, &torque, p);
    let fast = dt * (s.omega.norm() + wdot.norm() * dt) > SPIN_LIMIT;
    let mut next = s.clone();
    if !fast {
        let x = pack(&s.r, &s.rdot, &s.eta, &s.omega);
        let y = rk4_step(&x, 0.0, dt, |_, x| {
            let (r, rdot, eta, omega) = unpack(x);
            let probe = QuadState { r, rdot, eta, omega, ..s.clone() };
            quad_derivatives(&probe, u, p).map(|d| flatten(&d))
        })?;
        let (r, rdot, eta, omega) = unpack(&y);
        next.r = r;
        next.rdot = rdot;
        next.eta = eta;
        next.omega = omega;
        return Ok(next);
    }
    let dcm = dcm_world_to_body(&s.eta);
    if (p.i_x - p.i_y).abs() > 1e-12 * p.i_x.max(p.i_y) {
        // No closed form for an asymmetric body: sub-step the rotation.
        let n = ((dt * (s.omega.norm() + wdot.norm() * dt) / 0.1).ceil() as usize).clamp(1, 100_000);
        let h = dt / n as f64;
        let mut omega = s.omega;
        let mut r = dcm;
        for _ in 0..n {
            let w1 = omega + angular_accel(&omega, &torque, p) * h;
            r = rotate_dcm(&r, &(0.5 * (omega + w1)), h);
            omega = w1;
        }
        next.omega = omega;
        next.eta = EulerAngles::from_dcm(&r);
    } else {
        let a = torque.z / p.i_z;
        let spin = s.omega.z * dt + 0.5 * a * dt * dt;
        let k = (p.i_z - p.i_x) / p.i_x;
        let (sn, cs) = (k * spin).sin_cos();
        let (wx, wy) = (s.omega.x, s.omega.y);
        next.omega = Vector3::new(
            cs * wx - sn * wy + torque.x / p.i_x * dt,
            sn * wx + cs * wy + torque.y / p.i_y * dt,
            s.omega.z + a * dt,
        );
        let (ss, cz) = spin.sin_cos();
        let r3 = Matrix3::new(cz, ss, 0.0, -ss, cz, 0.0, 0.0, 0.0, 1.0);
        next.eta = EulerAngles::from_dcm(&(r3 * dcm));
    }
    let u_sum: f64 = ue.iter().sum();
    let x = [s.r.x, s.r.y, s.r.z, s.rdot.x, s.rdot.y, s.rdot.z];
    let y = rk4_step(&x, 0.0, dt, |_, x| {
        let r = Vector3::new(x[0], x[1], x[2]);
        let v = Vector3::new(x[3], x[4], x[5]);
        let acc = translational_accel(&r, &v, &dcm, u_sum, p);
        Ok::<_, SimError>([v.x, v.y, v.z, acc.x, acc.y, acc.z])
    })?;
    next.r = Vector3::new(y[0], y[1], y[2]);
    next.rdot = Vector3::new(y[3], y[4], y[5]);
    Ok(next)
}

/// Advances an untethered target over one step.
pub fn step_target(t: &TargetState, p: &TargetParams, g: f64, dt: f64) -> TargetState {
    let x = pack(&t.r, &t.rdot, &t.eta, &t.omega);
    let rk = rk4_step(&x, 0.0, dt, |_, x| {
        let (r, rdot, eta, omega) = unpack(x);
        let probe = TargetState { r, rdot, eta, omega, ..t.clone() };
        target_derivatives(&probe, None, p, g).map(|d| flatten(&d))
    });
    let mut next = t.clone();
    match rk {
        Ok(y) => {
            let (r, rdot, eta, omega) = unpack(&y);
            next.r = r;
            next.rdot = rdot;
            next.eta = eta;
            next.omega = omega;
        }
        Err(_) => {
            // Pitched through the Euler singularity: integrate the attitude
            // on the rotation matrix instead.
            let x = [t.r.x, t.r.y, t.r.z, t.rdot.x, t.rdot.y, t.rdot.z];
            let y = rk4_step(&x, 0.0, dt, |_, x| {
                let r = Vector3::new(x[0], x[1], x[2]);
                let v = Vector3::new(x[3], x[4], x[5]);
                let probe = TargetState { r, rdot: v, eta: EulerAngles::default(), ..t.clone() };
                let d = target_derivatives(&probe, None, p, g)?;
                Ok::<_, SimError>([v.x, v.y, v.z, d.rddot.x, d.rddot.y, d.rddot.z])
            })
            .unwrap_or(x);
            next.r = Vector3::new(y[0], y[1], y[2]);
            next.rdot = Vector3::new(y[3], y[4], y[5]);
            let on_floor = t.r.z >= -p.radius;
            let decay = if on_floor { (-p.c_floor / p.m * dt).exp() } else { 1.0 };
            next.omega = t.omega * decay;
            next.eta =
                EulerAngles::from_dcm(&rotate_dcm(&dcm_world_to_body(&t.eta), &(0.5 * (t.omega + next.omega)), dt));
        }
    }
    next
}

/// Places a tethered target under the grasper, moving with the quadrotor.
pub fn slave_target(t: &mut TargetState, q: &QuadState, qp: &QuadParams, tp: &TargetParams) {
    let rt = dcm_world_to_body(&q.eta).transpose();
    t.r = q.grasper_position(qp) + Vector3::new(0.0, 0.0, tp.radius);
    t.rdot = q.rdot + rt * q.omega.cross(&qp.grasper_offset());
    t.eta = q.eta;
    t.omega = q.omega;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FailureReason {
    ActuatorFault,
    EndOfPath,
    TimeLimit,
    Overrun,
    Numerical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Success,
    Failure(FailureReason),
}

impl Outcome {
    pub fn is_success(self) -> bool {
        self == Outcome::Success
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Outcome::Success => f.write_str("Success"),
            Outcome::Failure(r) => write!(f, "Failure({r:?})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionEvent {
    pub t: f64,
    pub from: Mode,
    pub to: Mode,
    pub trigger: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FaultKind {
    Actuator {
        rotor: usize,
    },
    /// `dropped` is true when a tethered target was released.
    Grasper {
        dropped: bool,
    },
    System,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultEvent {
    pub t: f64,
    pub mode: Mode,
    pub kind: FaultKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub mode: Mode,
    pub quad: QuadState,
    pub targets: Vec<TargetState>,
    /// Height the controllers are steering to, if any.
    pub z_cmd: Option<f64>,
}

/// Counters that the batch layer aggregates.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunCounters {
    pub initialise_visits: usize,
    pub system_faults: usize,
    pub actuator_fault: bool,
    pub grasper_drops: usize,
    /// Seconds spent in each mode, indexed by mode number minus one.
    pub dwell: Vec<f64>,
    /// Entries into each mode.
    pub visits: Vec<usize>,
    /// `transitions[from][to]` counts, zero-based mode indices.
    pub transitions: Vec<Vec<usize>>,
    /// Seconds with the rotors running.
    pub flight_time: f64,
}

impl RunCounters {
    fn new() -> Self {
        Self { dwell: vec![0.0; 17], visits: vec![0; 17], transitions: vec![vec![0; 17]; 17], ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionRecord {
    pub run_index: u64,
    pub seed: u64,
    pub initial_targets: Vec<TargetState>,
    pub samples: Vec<Sample>,
    pub transitions: Vec<TransitionEvent>,
    pub faults: Vec<FaultEvent>,
    pub outcome: Outcome,
    pub duration: f64,
    pub counters: RunCounters,
    pub final_targets: Vec<TargetState>,
    pub final_quad: QuadState,
}

impl MissionRecord {
    /// Sequence of modes visited, starting with Idle.
    pub fn mode_sequence(&self) -> Vec<Mode> {
        std::iter::once(Mode::Idle).chain(self.transitions.iter().map(|e| e.to)).collect()
    }
}

/// Samples the initial target poses in the documented draw order:
/// x, y, psi for each target in turn.
pub fn sample_targets<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Vec<TargetState> {
    let ds = cfg.drop_site();
    cfg.targets
        .iter()
        .enumerate()
        .map(|(i, tp)| {
            let z = tp.rest_depth(cfg.quad.g);
            match &cfg.mission.placement {
                Placement::Fixed { poses } => {
                    let p = poses[i];
                    TargetState::resting(Vector3::new(p[0], p[1], z), p[2])
                }
                Placement::Uniform { x, y } => loop {
                    let px = rng.gen_range(x[0]..=x[1]);
                    let py = rng.gen_range(y[0]..=y[1]);
                    let psi = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
                    let inside = (Vector2::new(px, py) - ds.xy()).norm() < cfg.camera.r_ds;
                    if !(cfg.mission.reject_in_drop_zone && inside) {
                        break TargetState::resting(Vector3::new(px, py, z), psi);
                    }
                },
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub record_trajectory: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { record_trajectory: true }
    }
}

/// Body-frame vertices and face colours of one target.
type Geometry = (Vec<Vector3<f64>>, Vec<[f64; 3]>);

/// Camera-based target detector over the scenario's target geometries.
pub struct Tracker {
    geometries: Vec<Geometry>,
    buffer: Vec<WorldVertex>,
}

impl Tracker {
    pub fn new(cfg: &ScenarioConfig) -> Self {
        let geometries = cfg
            .targets
            .iter()
            .map(|t| {
                let g = t.colour.geometry(t.radius);
                let colours = g.vertex_colours();
                (g.vertices, colours)
            })
            .collect();
        Self { geometries, buffer: Vec::new() }
    }

    /// Detection for the current vehicle state. Tethered and deposited
    /// targets are never reported.
    pub fn detect(&mut self, cfg: &ScenarioConfig, quad: &QuadState, targets: &[TargetState]) -> Detection {
        let view = CameraView::new(&quad.pose(), quad.gimbal, &cfg.quad.camera_offset());
        self.buffer.clear();
        for (k, (t, (verts, colours))) in targets.iter().zip(&self.geometries).enumerate() {
            if t.tethered || t.deposited {
                continue;
            }
            let rt = dcm_world_to_body(&t.eta).transpose();
            for (i, (v, c)) in verts.iter().zip(colours).enumerate() {
                self.buffer.push(WorldVertex { id: k * 1000 + i, position: rt * v + t.r, colour: *c });
            }
        }
        let projections = project_vertices(&self.buffer, &view, &cfg.camera);
        let ds_image = project_unbounded(&view.to_camera(&cfg.drop_site()), cfg.camera.f);
        detect_targets(&projections, ds_image, view.position().z, &cfg.camera)
    }
}

fn colour_index(cfg: &ScenarioConfig, targets: &[TargetState], colour: TargetColour) -> Option<usize> {
    cfg.targets.iter().zip(targets).position(|(p, t)| p.colour == colour && !t.tethered && !t.deposited)
}

/// Runs one mission.
pub fn run_mission(cfg: &ScenarioConfig, run_index: u64) -> MissionRecord {
    run_mission_with(cfg, run_index, RunOptions::default())
}

pub fn run_mission_with(cfg: &ScenarioConfig, run_index: u64, opts: RunOptions) -> MissionRecord {
    let seed = run_seed(cfg.mission.seed, run_index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dt = cfg.mission.dt;
    let qp = &cfg.quad;
    let gains = &cfg.gains;
    let start = cfg.start_pose();
    let sites = cfg.sites();
    let n_targets = cfg.targets.len();

    let mut targets = sample_targets(cfg, &mut rng);
    let initial_targets = targets.clone();
    let mut quad = QuadState::at_rest(start, cfg.mission.v0.unwrap_or(qp.v_max));
    let mut guidance = Guidance::new(cfg.guidance.clone(), sites, start.attitude.psi, n_targets);
    let rates = FaultRates::new(&cfg.guidance, dt);
    let mut filter = VelocityFilter::new();
    let mut visual = VisualController::new();
    let mut tracker = Tracker::new(cfg);
    let mut pending_rest: Vec<usize> = Vec::new();

    let mut counters = RunCounters::new();
    counters.visits[Mode::Idle.index()] = 1;
    let mut transitions = Vec::new();
    let mut faults_log = Vec::new();
    let mut samples = Vec::new();
    let mut outcome = None;
    let mut failure_reason = None;
    let stop_at = cfg.guidance.t_max + cfg.mission.overrun;

    let mut step: u64 = 0;
    let mut t = 0.0;
    loop {
        // Sense.
        let v_est = filter.update(&quad.r, dt, gains.n);
        let mode = guidance.mode;
        let detection = if mode.uses_tracker() { tracker.detect(cfg, &quad, &targets) } else { Detection::NONE };
        let tracked = detection.colour.and_then(|c| colour_index(cfg, &targets, c)).map(|k| {
            let top = targets[k].r - Vector3::new(0.0, 0.0, cfg.targets[k].radius);
            (k, (quad.grasper_position(qp) - top).norm())
        });

        // Faults.
        let faults = sample_faults(&mut rng, &rates, mode, quad.failed_rotor().is_some());
        if let Some(k) = faults.actuator {
            quad.rotor_health[k] = false;
            counters.actuator_fault = true;
            failure_reason = Some(FailureReason::ActuatorFault);
            faults_log.push(FaultEvent { t, mode, kind: FaultKind::Actuator { rotor: k } });
        }
        if faults.system == Some(true) {
            counters.system_faults += 1;
            faults_log.push(FaultEvent { t, mode, kind: FaultKind::System });
        }

        // Decide.
        let deposited = targets.iter().filter(|x| x.deposited).count();
        let snap = Snapshot {
            t,
            r: quad.r,
            rdot: v_est,
            psi: quad.eta.psi,
            v: quad.v,
            detection,
            tracked,
            n_targets,
            deposited,
        };
        let out = guidance.step(&snap, &faults);
        if faults.grasper {
            faults_log.push(FaultEvent { t, mode, kind: FaultKind::Grasper { dropped: out.actions.grasper_drop } });
        }
        if out.actions.grasper_drop {
            counters.grasper_drops += 1;
        }
        if let Some(k) = out.actions.grasp {
            targets[k].tethered = true;
            quad.grasper_engaged = true;
        }
        if let Some((k, reason)) = out.actions.release {
            targets[k].tethered = false;
            quad.grasper_engaged = false;
            match reason {
                ReleaseReason::Drop => targets[k].deposited = true,
                ReleaseReason::GrasperFault => targets[k].deposited = out.actions.deposits > 0,
                ReleaseReason::LowBattery => pending_rest.push(k),
            }
        }
        if out.mode != mode {
            counters.visits[out.mode.index()] += 1;
            counters.transitions[mode.index()][out.mode.index()] += 1;
            if out.mode == Mode::Initialise {
                counters.initialise_visits += 1;
            }
            if out.mode.uses_tracker() {
                visual.reset();
            }
            let trigger = out.actions.trigger.unwrap_or("").to_string();
            if trigger == "end of path" && failure_reason.is_none() {
                failure_reason = Some(FailureReason::EndOfPath);
            }
            if trigger == "time limit" && failure_reason.is_none() {
                failure_reason = Some(FailureReason::TimeLimit);
            }
            transitions.push(TransitionEvent { t, from: mode, to: out.mode, trigger });
        }

        // Control.
        let mut z_cmd = None;
        let u = match out.command {
            Command::Off => [0.0; 4],
            Command::Emergency { z_d } => {
                z_cmd = Some(z_d);
                let r_d = Vector3::new(quad.r.x, quad.r.y, z_d);
                let (_, acc) = position_control(&r_d, &quad.r, &v_est, gains, gains.v_max, Some(Vector2::zeros()));
                let cmd = linearizing_feedback(
                    &Vector3::new(0.0, 0.0, acc.z),
                    &quad.eta,
                    &quad.omega,
                    quad.eta.psi,
                    qp,
                    gains,
                );
                emergency_inputs(cmd.inputs.u_col, quad.failed_rotor().unwrap_or(0))
            }
            cmd => {
                let (r_d, psi_d, v_max, over) = match cmd {
                    Command::Position { r_d, psi_d, v_max } => {
                        let limit = if v_max == SpeedLimit::Search { gains.v_max_search } else { gains.v_max };
                        (r_d, psi_d, limit, None)
                    }
                    Command::Visual { z_d, psi_d } => {
                        let v = detection.centroid.map_or(Vector2::zeros(), |c| {
                            visual.update(&c, quad.r.z, qp.r_cq[2], quad.eta.psi, cfg.camera.f, gains, dt)
                        });
                        (Vector3::new(quad.r.x, quad.r.y, z_d), psi_d, gains.v_max, Some(v))
                    }
                    Command::HoldHorizontal { z_d, psi_d } => {
                        (Vector3::new(quad.r.x, quad.r.y, z_d), psi_d, gains.v_max, Some(Vector2::zeros()))
                    }
                    Command::Off | Command::Emergency { .. } => unreachable!(),
                };
                z_cmd = Some(r_d.z);
                let (_, acc) = position_control(&r_d, &quad.r, &v_est, gains, v_max, over);
                let cmd = linearizing_feedback(&acc, &quad.eta, &quad.omega, psi_d, qp, gains);
                match quad.failed_rotor() {
                    Some(k) => emergency_inputs(cmd.inputs.u_col, k),
                    None => rotor_inputs(&cmd.inputs),
                }
            }
        };

        if opts.record_trajectory && cfg.mission.decimation > 0 && step.is_multiple_of(cfg.mission.decimation as u64) {
            samples.push(Sample { t, mode: guidance.mode, quad: quad.clone(), targets: targets.clone(), z_cmd });
        }

        // Termination checks happen before integrating so the final state
        // is the one the decision was made on.
        if guidance.finished() {
            let success = !guidance.flags.mission_failed && guidance.all_deposited();
            outcome = Some(if success {
                Outcome::Success
            } else {
                Outcome::Failure(failure_reason.unwrap_or(FailureReason::EndOfPath))
            });
        } else if t >= stop_at {
            outcome = Some(Outcome::Failure(FailureReason::Overrun));
        }
        if outcome.is_some() {
            break;
        }

        // Integrate.
        counters.dwell[guidance.mode.index()] += dt;
        if guidance.mode != Mode::Idle {
            counters.flight_time += dt;
        }
        let charging = guidance.mode == Mode::Idle;
        let next = step_quad(&quad, &u, qp, dt);
        match next {
            Ok(mut q) => {
                q.v = battery_step(quad.v, charging, qp, dt);
                q.gimbal = gimbal_step(quad.gimbal, &quad.eta, qp.tau_g, dt);
                quad = q;
            }
            Err(_) => {
                outcome = Some(Outcome::Failure(FailureReason::Numerical));
                break;
            }
        }
        for (k, tgt) in targets.iter_mut().enumerate() {
            let tp = &cfg.targets[k];
            if tgt.tethered {
                slave_target(tgt, &quad, qp, tp);
            } else if !(tgt.rdot == Vector3::zeros() && tgt.omega == Vector3::zeros() && tgt.r.z == tp.rest_depth(qp.g))
            {
                *tgt = step_target(tgt, tp, qp.g, dt);
            }
        }
        pending_rest.retain(|&k| {
            let tgt = &mut targets[k];
            let tp = &cfg.targets[k];
            let resting = tgt.r.z >= -tp.radius - 1e-3 && tgt.rdot.norm() < 1e-2;
            if resting {
                tgt.deposited = (tgt.r.xy() - cfg.drop_site().xy()).norm() < cfg.camera.r_ds;
            }
            !resting
        });
        if !(quad.is_finite() && targets.iter().all(|x| x.r.iter().all(|v| v.is_finite()))) {
            outcome = Some(Outcome::Failure(FailureReason::Numerical));
            break;
        }
        step += 1;
        t = step as f64 * dt;
    }

    MissionRecord {
        run_index,
        seed,
        initial_targets,
        samples,
        transitions,
        faults: faults_log,
        outcome: outcome.unwrap_or(Outcome::Failure(FailureReason::Numerical)),
        duration: t,
        counters,
        final_targets: targets,
        final_quad: quad,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rk4_constant_state() {
        let x = [1.0, -2.0, 3.5];
        let y = rk4_step(&x, 0.0, 0.1, |_, _| Ok::<_, ()>([0.0; 3])).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn rk4_local_error_is_fifth_order() {
        let one = |dt: f64| {
            let y = rk4_step(&[1.0], 0.0, dt, |_, x| Ok::<_, ()>([-x[0]])).unwrap();
            (y[0] - (-dt).exp()).abs()
        };
        let e1 = one(0.01);
        let e2 = one(0.005);
        assert!(e1 < 1e-11);
        let ratio = e1 / e2;
        assert!((ratio - 32.0).abs() < 2.0, "{ratio}");
    }

    #[test]
    fn rk4_global_order() {
        let global = |dt: f64| {
            let n = (1.0 / dt).round() as usize;
            let mut x = [1.0];
            for k in 0..n {
                x = rk4_step(&x, k as f64 * dt, dt, |_, x| Ok::<_, ()>([-x[0]])).unwrap();
            }
            (x[0] - (-1.0f64).exp()).abs()
        };
        let ratio = global(0.1) / global(0.05);
        assert!((12.0..=20.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn seeds_differ_by_index() {
        assert_ne!(run_seed(1, 0), run_seed(1, 1));
        assert_ne!(run_seed(1, 0), run_seed(2, 0));
        assert_eq!(run_seed(7, 3), run_seed(7, 3));
    }

    #[test]
    fn default_config_is_valid() {
        ScenarioConfig::default().validate().unwrap();
        let mut bad = ScenarioConfig::default();
        bad.mission.drop_site[2] = -0.5;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn spin_step_keeps_thrust_axis() {
        let p = QuadParams::default();
        let mut s =
            QuadState::at_rest(Pose::new(Vector3::new(0.0, 0.0, -2.0), EulerAngles::new(0.1, -0.05, 0.3)), 11.0);
        s.rotor_health[0] = false;
        s.omega = Vector3::new(0.2, -0.1, 500.0);
        let axis = |s: &QuadState| dcm_world_to_body(&s.eta).row(2).transpose();
        let u = emergency_inputs(74.0, 0);
        let next = step_quad(&s, &u, &p, 0.01).unwrap();
        assert!((axis(&next) - axis(&s)).norm() < 1e-9);
        let expect_wz = 500.0 + p.k_torque * 74.0 / p.i_z * 0.01;
        assert!((next.omega.z - expect_wz).abs() < 1e-6);
        // Transverse rate magnitude is conserved by precession.
        assert!((next.omega.xy().norm() - s.omega.xy().norm()).abs() < 1e-12);
    }

    #[test]
    fn spin_step_matches_fine_rk4_when_moderate() {
        // Spin fast enough to select the closed form, slow enough for a
        // finely sub-stepped RK4 to serve as a reference.
        let p = QuadParams::default();
        let mut s = QuadState::at_rest(Pose::new(Vector3::new(0.0, 0.0, -2.0), EulerAngles::new(0.0, 0.0, 0.0)), 11.0);
        s.omega = Vector3::new(0.0, 0.0, 60.0);
        let u = [0.0, 0.0, 0.0, 0.0];
        let fast = step_quad(&s, &u, &p, 0.01).unwrap();
        let mut fine = s.clone();
        for _ in 0..100 {
            fine = step_quad(&fine, &u, &p, 0.0001).unwrap();
        }
        let wrap = |a: f64| (a + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI;
        assert!(wrap(fast.eta.psi - fine.eta.psi).abs() < 1e-9);
        assert!((fast.r - fine.r).norm() < 1e-9);
    }
}
