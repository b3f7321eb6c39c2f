//! Continuous-time dynamics of the quadrotor and the targets.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::spatial::{dcm_world_to_body, euler_rate_map, EulerAngles, Geometry, Pose};

/// Physical constants of the quadrotor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadParams {
    #[serde(rename = "m_Q")]
    pub m: f64,
    #[serde(rename = "I_x")]
    pub i_x: f64,
    #[serde(rename = "I_y")]
    pub i_y: f64,
    #[serde(rename = "I_z")]
    pub i_z: f64,
    /// Thrust per unit rotor input.
    #[serde(rename = "K_T")]
    pub k_thrust: f64,
    /// Yaw torque per unit rotor input.
    #[serde(rename = "K_Q")]
    pub k_torque: f64,
    #[serde(rename = "L")]
    pub arm: f64,
    pub g: f64,
    #[serde(rename = "k_Q")]
    pub k_floor: f64,
    #[serde(rename = "c_Q")]
    pub c_floor: f64,
    #[serde(rename = "R_Q")]
    pub radius: f64,
    #[serde(rename = "r_GQ")]
    pub r_gq: [f64; 3],
    #[serde(rename = "r_CQ")]
    pub r_cq: [f64; 3],
    pub tau_g: f64,
    #[serde(rename = "V_max")]
    pub v_max: f64,
    pub v_c: f64,
    pub v_d: f64,
}

impl Default for QuadParams {
    fn default() -> Self {
        Self {
            m: 1.51,
            i_x: 0.03,
            i_y: 0.03,
            i_z: 0.04,
            k_thrust: 0.2,
            k_torque: 120.0,
            arm: 0.2,
            g: 9.81,
            k_floor: 3775.0,
            c_floor: 75.5,
            radius: 0.2,
            r_gq: [0.0, 0.0, 0.2],
            r_cq: [0.0, 0.0, 0.1],
            tau_g: 0.005,
            v_max: 11.0,
            v_c: 0.025,
            v_d: -0.005,
        }
    }
}

impl QuadParams {
    pub fn validate(&self) -> Result<(), SimError> {
        let positive = [
            ("m_Q", self.m),
            ("I_x", self.i_x),
            ("I_y", self.i_y),
            ("I_z", self.i_z),
            ("K_T", self.k_thrust),
            ("K_Q", self.k_torque),
            ("L", self.arm),
            ("g", self.g),
            ("k_Q", self.k_floor),
            ("c_Q", self.c_floor),
            ("R_Q", self.radius),
            ("tau_g", self.tau_g),
            ("V_max", self.v_max),
            ("v_c", self.v_c),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SimError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.v_d < 0.0) {
            return Err(SimError::Config(format!("v_d must be negative, got {}", self.v_d)));
        }
        Ok(())
    }

    pub fn inertia(&self) -> Vector3<f64> {
        Vector3::new(self.i_x, self.i_y, self.i_z)
    }

    pub fn grasper_offset(&self) -> Vector3<f64> {
        Vector3::from(self.r_gq)
    }

    pub fn camera_offset(&self) -> Vector3<f64> {
        Vector3::from(self.r_cq)
    }

    /// Collective input that balances gravity.
    pub fn hover_collective(&self) -> f64 {
        self.m * self.g / self.k_thrust
    }

    /// Equal per-rotor inputs that balance gravity.
    pub fn hover_trim(&self) -> [f64; 4] {
        [self.hover_collective() / 4.0; 4]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetColour {
    Red,
    Green,
    Blue,
}

impl TargetColour {
    pub fn rgb(self) -> [f64; 3] {
        match self {
            TargetColour::Red => [1.0, 0.0, 0.0],
            TargetColour::Green => [0.0, 1.0, 0.0],
            TargetColour::Blue => [0.0, 0.0, 1.0],
        }
    }

    /// Red sphere, blue pyramid or green cuboid, all of radius `r`.
    pub fn geometry(self, r: f64) -> Geometry {
        match self {
            TargetColour::Red => Geometry::sphere(r, 4, 6, self.rgb()),
            TargetColour::Blue => Geometry::pyramid(r, r, self.rgb()),
            TargetColour::Green => Geometry::cuboid(Vector3::repeat(r), self.rgb()),
        }
    }
}

/// Physical constants of one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetParams {
    #[serde(rename = "m_T")]
    pub m: f64,
    #[serde(rename = "R_T")]
    pub radius: f64,
    #[serde(rename = "k_T")]
    pub k_floor: f64,
    #[serde(rename = "c_T")]
    pub c_floor: f64,
    pub colour: TargetColour,
}

impl TargetParams {
    pub fn with_colour(colour: TargetColour) -> Self {
        Self { m: 0.4, radius: 0.05, k_floor: 1000.0, c_floor: 20.0, colour }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        for (name, v) in [("m_T", self.m), ("R_T", self.radius), ("k_T", self.k_floor), ("c_T", self.c_floor)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SimError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Rest depth where the floor spring carries the target's weight.
    pub fn rest_depth(&self, g: f64) -> f64 {
        -self.radius + self.m * g / self.k_floor
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadState {
    pub r: Vector3<f64>,
    pub rdot: Vector3<f64>,
    pub eta: EulerAngles,
    pub omega: Vector3<f64>,
    /// Battery voltage.
    pub v: f64,
    /// `false` marks a failed rotor.
    pub rotor_health: [bool; 4],
    pub grasper_engaged: bool,
    /// Gimbal roll and pitch.
    pub gimbal: [f64; 2],
}

impl QuadState {
    pub fn at_rest(pose: Pose, v: f64) -> Self {
        Self {
            r: pose.position,
            rdot: Vector3::zeros(),
            eta: pose.attitude,
            omega: Vector3::zeros(),
            v,
            rotor_health: [true; 4],
            grasper_engaged: false,
            gimbal: [-pose.attitude.phi, -pose.attitude.theta],
        }
    }

    pub fn pose(&self) -> Pose {
        Pose::new(self.r, self.eta)
    }

    pub fn failed_rotor(&self) -> Option<usize> {
        self.rotor_health.iter().position(|ok| !ok)
    }

    /// World position of the grasper point.
    pub fn grasper_position(&self, p: &QuadParams) -> Vector3<f64> {
        self.r + dcm_world_to_body(&self.eta).transpose() * p.grasper_offset()
    }

    pub fn is_finite(&self) -> bool {
        self.r.iter().chain(self.rdot.iter()).chain(self.omega.iter()).all(|x| x.is_finite())
            && self.eta.as_vector().iter().all(|x| x.is_finite())
            && self.v.is_finite()
            && self.gimbal.iter().all(|x| x.is_finite())
    }
}

/// Rates of the twelve rigid-body states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidDerivative {
    pub rdot: Vector3<f64>,
    pub rddot: Vector3<f64>,
    pub etadot: Vector3<f64>,
    pub omegadot: Vector3<f64>,
}

impl RigidDerivative {
    pub fn norm(&self) -> f64 {
        (self.rdot.norm_squared()
            + self.rddot.norm_squared()
            + self.etadot.norm_squared()
            + self.omegadot.norm_squared())
        .sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetState {
    pub r: Vector3<f64>,
    pub rdot: Vector3<f64>,
    pub eta: EulerAngles,
    pub omega: Vector3<f64>,
    pub tethered: bool,
    pub deposited: bool,
}

impl TargetState {
    pub fn resting(position: Vector3<f64>, psi: f64) -> Self {
        Self {
            r: position,
            rdot: Vector3::zeros(),
            eta: EulerAngles::new(0.0, 0.0, psi),
            omega: Vector3::zeros(),
            tethered: false,
            deposited: false,
        }
    }

    pub fn pose(&self) -> Pose {
        Pose::new(self.r, self.eta)
    }
}

/// Vertical floor reaction on the quadrotor.
pub fn floor_force_quad(z: f64, zdot: f64, p: &QuadParams) -> f64 {
    if z >= -p.radius {
        -p.k_floor * (p.radius + z) - p.c_floor * zdot
    } else {
        0.0
    }
}

/// Body torques produced by the (already fault-masked) rotor inputs.
pub fn rotor_torques(u: &[f64; 4], p: &QuadParams) -> Vector3<f64> {
    Vector3::new(
        p.arm * p.k_thrust * (u[1] - u[0]),
        p.arm * p.k_thrust * (u[2] - u[3]),
        p.k_torque * (-u[0] - u[1] + u[2] + u[3]),
    )
}

/// Zeroes the inputs of failed rotors.
pub fn effective_inputs(u: &[f64; 4], health: &[bool; 4]) -> [f64; 4] {
    let mut out = *u;
    for (x, ok) in out.iter_mut().zip(health) {
        if !ok {
            *x = 0.0;
        }
    }
    out
}

/// Translational acceleration for a given attitude and total input.
pub fn translational_accel(
    r: &Vector3<f64>,
    rdot: &Vector3<f64>,
    dcm: &Matrix3<f64>,
    u_sum: f64,
    p: &QuadParams,
) -> Vector3<f64> {
    let floor = floor_force_quad(r.z, rdot.z, p);
    let thrust_axis = dcm.transpose() * Vector3::z();
    Vector3::z() * (p.g + floor / p.m) - thrust_axis * (p.k_thrust / p.m * u_sum)
}

/// Angular acceleration from Euler's equations.
pub fn angular_accel(omega: &Vector3<f64>, torque: &Vector3<f64>, p: &QuadParams) -> Vector3<f64> {
    let inertia = p.inertia();
    let gyro = omega.cross(&inertia.component_mul(omega));
    (torque - gyro).component_div(&inertia)
}

/// Rigid-body state derivative of the quadrotor.
pub fn quad_derivatives(s: &QuadState, u: &[f64; 4], p: &QuadParams) -> Result<RigidDerivative, SimError> {
    let u = effective_inputs(u, &s.rotor_health);
    let dcm = dcm_world_to_body(&s.eta);
    let u_sum: f64 = u.iter().sum();
    Ok(RigidDerivative {
        rdot: s.rdot,
        rddot: translational_accel(&s.r, &s.rdot, &dcm, u_sum, p),
        etadot: euler_rate_map(&s.eta)? * s.omega,
        omegadot: angular_accel(&s.omega, &rotor_torques(&u, p), p),
    })
}

/// Acceleration of the grasper point given the quadrotor's accelerations.
pub fn grasper_accel(s: &QuadState, rddot_q: &Vector3<f64>, omegadot: &Vector3<f64>, p: &QuadParams) -> Vector3<f64> {
    let r_gq = p.grasper_offset();
    let w = s.omega;
    let body = w.cross(&w.cross(&r_gq)) + omegadot.cross(&r_gq);
    rddot_q + dcm_world_to_body(&s.eta).transpose() * body
}

/// First-order gimbal response driving the gimbal towards the negated attitude.
pub fn gimbal_derivatives(gimbal: [f64; 2], eta: &EulerAngles, tau_g: f64) -> [f64; 2] {
    [-(eta.phi + gimbal[0]) / tau_g, -(eta.theta + gimbal[1]) / tau_g]
}

/// Exact gimbal update over `dt` with the attitude held fixed.
pub fn gimbal_step(gimbal: [f64; 2], eta: &EulerAngles, tau_g: f64, dt: f64) -> [f64; 2] {
    let decay = (-dt / tau_g).exp();
    [-eta.phi + (gimbal[0] + eta.phi) * decay, -eta.theta + (gimbal[1] + eta.theta) * decay]
}

pub fn battery_derivative(v: f64, charging: bool, p: &QuadParams) -> f64 {
    if charging {
        if v < p.v_max {
            p.v_c
        } else {
            0.0
        }
    } else {
        p.v_d
    }
}

/// Exact battery update over `dt`, clamped to [0, V_max].
pub fn battery_step(v: f64, charging: bool, p: &QuadParams, dt: f64) -> f64 {
    (v + battery_derivative(v, charging, p) * dt).clamp(0.0, p.v_max)
}

/// Target state derivative. `quad_feed` carries the grasper acceleration and
/// the quadrotor angular acceleration while the target is tethered.
pub fn target_derivatives(
    t: &TargetState,
    quad_feed: Option<(Vector3<f64>, Vector3<f64>)>,
    p: &TargetParams,
    g: f64,
) -> Result<RigidDerivative, SimError> {
    let etadot = euler_rate_map(&t.eta)? * t.omega;
    if t.tethered {
        let (rddot, omegadot) = quad_feed.unwrap_or_default();
        return Ok(RigidDerivative { rdot: t.rdot, rddot, etadot, omegadot });
    }
    let mut rddot = Vector3::new(0.0, 0.0, g);
    let mut omegadot = Vector3::zeros();
    if t.r.z >= -p.radius {
        let force = -Vector3::z() * (p.k_floor * (p.radius + t.r.z)) - t.rdot * p.c_floor;
        rddot += force / p.m;
        omegadot = -t.omega * (p.c_floor / p.m);
    }
    Ok(RigidDerivative { rdot: t.rdot, rddot, etadot, omegadot })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hovering() -> QuadState {
        QuadState::at_rest(Pose::new(Vector3::new(0.0, 0.0, -1.0), EulerAngles::default()), 11.0)
    }

    #[test]
    fn floor_force_examples() {
        let p = QuadParams::default();
        assert_eq!(floor_force_quad(-0.3, 5.0, &p), 0.0);
        assert_eq!(floor_force_quad(-0.2, 0.0, &p), 0.0);
        assert!((floor_force_quad(-0.1, 0.0, &p) + 377.5).abs() < 1e-9);
    }

    #[test]
    fn hover_trim_is_equilibrium() {
        let p = QuadParams::default();
        let u = p.hover_trim();
        assert!((u[0] - 18.5164).abs() < 1e-4);
        assert!((p.hover_collective() - 74.0655).abs() < 1e-4);
        let d = quad_derivatives(&hovering(), &u, &p).unwrap();
        assert!(d.norm() < 1e-10, "{}", d.norm());
    }

    #[test]
    fn free_fall() {
        let p = QuadParams::default();
        let d = quad_derivatives(&hovering(), &[0.0; 4], &p).unwrap();
        assert_eq!(d.rddot, Vector3::new(0.0, 0.0, p.g));
        assert_eq!(d.omegadot, Vector3::zeros());
    }

    #[test]
    fn yaw_channel() {
        let p = QuadParams::default();
        let d = quad_derivatives(&hovering(), &[0.0, 0.0, 1.0, 1.0], &p).unwrap();
        assert!((d.omegadot.z - 2.0 * p.k_torque / p.i_z).abs() < 1e-9);
        assert_eq!(d.omegadot.x, 0.0);
        assert_eq!(d.omegadot.y, 0.0);
    }

    #[test]
    fn singular_attitude_propagates() {
        let p = QuadParams::default();
        let mut s = hovering();
        s.eta.theta = std::f64::consts::FRAC_PI_2;
        assert!(quad_derivatives(&s, &[0.0; 4], &p).is_err());
    }

    #[test]
    fn grasper_examples() {
        let p = QuadParams::default();
        let a = Vector3::new(0.3, -0.2, 1.0);
        let mut s = hovering();
        assert_eq!(grasper_accel(&s, &a, &Vector3::zeros(), &p), a);
        s.omega = Vector3::new(0.0, 0.0, 7.0);
        assert!((grasper_accel(&s, &a, &Vector3::zeros(), &p) - a).norm() < 1e-12);
        // Roll rate w about x with the offset along z: w x (w x r) = (0, 0, -0.2 w^2).
        let w = 3.0;
        s.omega = Vector3::new(w, 0.0, 0.0);
        s.eta = EulerAngles::new(0.0, 0.0, 0.7);
        let got = grasper_accel(&s, &a, &Vector3::zeros(), &p);
        let expect = a + dcm_world_to_body(&s.eta).transpose() * Vector3::new(0.0, 0.0, -0.2 * w * w);
        assert!((got - expect).norm() < 1e-12);
    }

    #[test]
    fn gimbal_examples() {
        let eta = EulerAngles::new(0.1, -0.2, 0.0);
        assert_eq!(gimbal_derivatives([-0.1, 0.2], &eta, 0.005), [0.0, 0.0]);
        let d = gimbal_derivatives([0.0, 0.0], &EulerAngles::new(0.1, 0.0, 0.0), 0.005);
        assert!((d[0] + 20.0).abs() < 1e-12);
        // After one time constant the response covers 1 - 1/e of the step.
        let tau = 0.005;
        let mut g = [0.0, 0.0];
        let h = tau / 100.0;
        for _ in 0..100 {
            g = gimbal_step(g, &eta, tau, h);
        }
        let frac = g[0] / -eta.phi;
        assert!((frac - 0.632).abs() < 0.02 * 0.632);
        assert!((frac - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn battery_examples() {
        let p = QuadParams::default();
        assert_eq!(battery_derivative(11.0, true, &p), 0.0);
        assert_eq!(battery_derivative(10.0, true, &p), 0.025);
        assert_eq!(battery_derivative(10.0, false, &p), -0.005);
        let mut v = 10.0;
        let mut t: f64 = 0.0;
        while v < p.v_max {
            v = battery_step(v, true, &p, 0.01);
            t += 0.01;
        }
        assert!((t - 40.0).abs() < 0.011, "{t}");
        assert_eq!(v, 11.0);
    }

    #[test]
    fn target_examples() {
        let p = TargetParams::with_colour(TargetColour::Red);
        let g = 9.81;
        let air = TargetState::resting(Vector3::new(0.0, 0.0, -1.0), 0.0);
        assert_eq!(target_derivatives(&air, None, &p, g).unwrap().rddot, Vector3::new(0.0, 0.0, g));
        let touching = TargetState::resting(Vector3::new(0.0, 0.0, -p.radius), 0.0);
        assert_eq!(target_derivatives(&touching, None, &p, g).unwrap().rddot, Vector3::new(0.0, 0.0, g));
        let z_star = p.rest_depth(g);
        assert!((z_star - (-0.05 + 0.003924)).abs() < 1e-12);
        let rest = TargetState::resting(Vector3::new(0.0, 0.0, z_star), 0.0);
        assert!(target_derivatives(&rest, None, &p, g).unwrap().rddot.norm() < 1e-12);
        let mut tied = air.clone();
        tied.tethered = true;
        let d = target_derivatives(&tied, Some((Vector3::zeros(), Vector3::zeros())), &p, g).unwrap();
        assert_eq!(d.rddot, Vector3::zeros());
    }

    proptest! {
        #[test]
        fn failed_rotor_input_is_ignored(k in 0usize..4, u in prop::array::uniform4(0.0..40.0f64), bump in 0.1..30.0f64,
                                          eta in prop::array::uniform3(-0.3..0.3f64), w in prop::array::uniform3(-2.0..2.0f64)) {
            let p = QuadParams::default();
            let mut s = hovering();
            s.eta = EulerAngles::new(eta[0], eta[1], eta[2]);
            s.omega = Vector3::from(w);
            s.rotor_health[k] = false;
            let mut u2 = u;
            u2[k] += bump;
            let a = quad_derivatives(&s, &u, &p).unwrap();
            let b = quad_derivatives(&s, &u2, &p).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
