//! Rotor mixing, state reconstruction and the flight controllers.

use nalgebra::{Matrix4, Vector2, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::plant::QuadParams;
use crate::spatial::EulerAngles;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlGains {
    #[serde(rename = "K_pr")]
    pub k_pr: f64,
    #[serde(rename = "K_dr")]
    pub k_dr: f64,
    #[serde(rename = "K_pphi")]
    pub k_pphi: f64,
    #[serde(rename = "K_ptheta")]
    pub k_ptheta: f64,
    #[serde(rename = "K_ppsi")]
    pub k_ppsi: f64,
    #[serde(rename = "K_dphi")]
    pub k_dphi: f64,
    #[serde(rename = "K_dtheta")]
    pub k_dtheta: f64,
    #[serde(rename = "K_dpsi")]
    pub k_dpsi: f64,
    #[serde(rename = "K_pv")]
    pub k_pv: f64,
    #[serde(rename = "K_iv")]
    pub k_iv: f64,
    /// Derivative filter bandwidth, rad/s.
    #[serde(rename = "N")]
    pub n: f64,
    pub v_max: f64,
    /// Speed limit while searching.
    pub v_max_search: f64,
    /// Roll/pitch command limit, radians.
    pub a_max: f64,
    /// Bound on the visual integrator contribution, m/s.
    pub visual_integral_limit: f64,
}

impl Default for ControlGains {
    fn default() -> Self {
        Self {
            k_pr: 0.975,
            k_dr: 3.9,
            k_pphi: 380.25,
            k_ptheta: 380.25,
            k_ppsi: 0.951,
            k_dphi: 39.0,
            k_dtheta: 39.0,
            k_dpsi: 1.95,
            k_pv: 0.341,
            k_iv: 0.0001,
            n: 50.0,
            v_max: 5.0,
            v_max_search: 2.0,
            a_max: 20f64.to_radians(),
            visual_integral_limit: 0.5,
        }
    }
}

impl ControlGains {
    pub fn validate(&self) -> Result<(), crate::SimError> {
        let gains = [
            self.k_pr,
            self.k_dr,
            self.k_pphi,
            self.k_ptheta,
            self.k_ppsi,
            self.k_dphi,
            self.k_dtheta,
            self.k_dpsi,
            self.k_pv,
            self.k_iv,
            self.visual_integral_limit,
        ];
        let ok = gains.iter().all(|g| *g >= 0.0)
            && self.n > 0.0
            && self.v_max > 0.0
            && self.v_max_search > 0.0
            && self.a_max > 0.0
            && self.a_max < std::f64::consts::FRAC_PI_2;
        if ok {
            Ok(())
        } else {
            Err(crate::SimError::Config(format!("invalid control gains {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PseudoInputs {
    pub u_col: f64,
    pub u_roll: f64,
    pub u_pitch: f64,
    pub u_yaw: f64,
}

impl PseudoInputs {
    pub fn as_vector(&self) -> Vector4<f64> {
        Vector4::new(self.u_col, self.u_roll, self.u_pitch, self.u_yaw)
    }
}

/// Mixing matrix from rotor inputs to pseudo-inputs. Row 2 and 3 follow
/// the roll and pitch torque arms, row 4 the rotor spin directions.
pub fn mixing_matrix() -> Matrix4<f64> {
    Matrix4::new(
        1.0, 1.0, 1.0, 1.0, //
        -1.0, 1.0, 0.0, 0.0, //
        0.0, 0.0, 1.0, -1.0, //
        -1.0, -1.0, 1.0, 1.0,
    )
}

pub fn mix(u: &[f64; 4]) -> PseudoInputs {
    PseudoInputs {
        u_col: u[0] + u[1] + u[2] + u[3],
        u_roll: u[1] - u[0],
        u_pitch: u[2] - u[3],
        u_yaw: -u[0] - u[1] + u[2] + u[3],
    }
}

pub fn unmix(p: &PseudoInputs) -> [f64; 4] {
    let a = 0.5 * (p.u_col - p.u_yaw);
    let b = 0.5 * (p.u_col + p.u_yaw);
    [0.5 * (a - p.u_roll), 0.5 * (a + p.u_roll), 0.5 * (b + p.u_pitch), 0.5 * (b - p.u_pitch)]
}

/// Filtered differentiator `N s / (s + N)` applied to sampled positions.
///
/// The position is taken as piecewise linear between samples, which makes
/// the discrete filter exact for ramps.
#[derive(Debug, Clone, Default)]
pub struct VelocityFilter {
    state: Option<(Vector3<f64>, Vector3<f64>)>,
}

impl VelocityFilter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn reset(&mut self) {
        self.state = None;
    }

    pub fn update(&mut self, r: &Vector3<f64>, dt: f64, n: f64) -> Vector3<f64> {
        let (last_r, x) = match self.state {
            None => {
                self.state = Some((*r, *r));
                return Vector3::zeros();
            }
            Some(s) => s,
        };
        let slope = (r - last_r) / dt;
        let decay = (-n * dt).exp();
        let x_next = r - slope / n + (x - last_r + slope / n) * decay;
        self.state = Some((*r, x_next));
        (r - x_next) * n
    }
}

/// Batch form of [`VelocityFilter`]: the estimate after the last sample.
pub fn reconstruct_velocity(positions: &[Vector3<f64>], dt: f64, n: f64) -> Vector3<f64> {
    let mut f = VelocityFilter::new();
    positions.iter().fold(Vector3::zeros(), |_, r| f.update(r, dt, n))
}

fn clamp_norm(v: Vector3<f64>, limit: f64) -> Vector3<f64> {
    let n = v.norm();
    if n > limit {
        v * (limit / n)
    } else {
        v
    }
}

/// Cascaded position and velocity loops. Returns the velocity command and
/// the desired acceleration. A horizontal velocity override replaces the
/// x-y components of the position loop's velocity command.
pub fn position_control(
    r_d: &Vector3<f64>,
    r: &Vector3<f64>,
    rdot: &Vector3<f64>,
    gains: &ControlGains,
    v_max: f64,
    override_velocity: Option<Vector2<f64>>,
) -> (Vector3<f64>, Vector3<f64>) {
    let mut v_cmd = clamp_norm((r_d - r) * gains.k_pr, v_max);
    if let Some(o) = override_velocity {
        v_cmd.x = o.x;
        v_cmd.y = o.y;
        v_cmd = clamp_norm(v_cmd, v_max);
    }
    (v_cmd, (v_cmd - rdot) * gains.k_dr)
}

fn wrap_angle(a: f64) -> f64 {
    let w = (a + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI;
    if w <= -std::f64::consts::PI {
        w + std::f64::consts::TAU
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeCommand {
    pub inputs: PseudoInputs,
    pub phi_d: f64,
    pub theta_d: f64,
    /// True when an arcsine argument had to be clamped.
    pub saturated: bool,
}

/// Collective from the vertical demand.
pub fn collective(zddot_d: f64, eta: &EulerAngles, p: &QuadParams) -> f64 {
    let tilt = (eta.phi.cos() * eta.theta.cos()).max(0.1);
    (p.m * (p.g - zddot_d) / (p.k_thrust * tilt)).max(0.0)
}

/// Feedback-linearising attitude controller.
pub fn linearizing_feedback(
    rddot_d: &Vector3<f64>,
    eta: &EulerAngles,
    omega: &Vector3<f64>,
    psi_d: f64,
    p: &QuadParams,
    gains: &ControlGains,
) -> AttitudeCommand {
    let u_col = collective(rddot_d.z, eta, p);
    let (sp, cp) = eta.psi.sin_cos();
    let mut saturated = false;
    let mut asin_clamped = |x: f64| {
        if !(-1.0..=1.0).contains(&x) {
            saturated = true;
        }
        if x.is_nan() {
            0.0
        } else {
            x.clamp(-1.0, 1.0).asin()
        }
    };
    let (phi_d, theta_d) = if u_col > 0.0 {
        let phi = asin_clamped(p.m * (rddot_d.y * cp - rddot_d.x * sp) / (p.k_thrust * u_col));
        let theta = -asin_clamped(p.m * (rddot_d.x * cp + rddot_d.y * sp) / (p.k_thrust * u_col * eta.phi.cos()));
        (phi.clamp(-gains.a_max, gains.a_max), theta.clamp(-gains.a_max, gains.a_max))
    } else {
        (0.0, 0.0)
    };
    let wdot = Vector3::new(
        gains.k_pphi * (phi_d - eta.phi) - gains.k_dphi * omega.x,
        gains.k_ptheta * (theta_d - eta.theta) - gains.k_dtheta * omega.y,
        gains.k_ppsi * wrap_angle(psi_d - eta.psi) - gains.k_dpsi * omega.z,
    );
    let inputs = PseudoInputs {
        u_col,
        u_roll: p.i_x / (p.k_thrust * p.arm) * wdot.x,
        u_pitch: p.i_y / (p.k_thrust * p.arm) * wdot.y,
        u_yaw: p.i_z / p.k_torque * wdot.z,
    };
    AttitudeCommand { inputs, phi_d, theta_d, saturated }
}

/// Non-negative rotor inputs for the requested pseudo-inputs.
///
/// Rotor inputs cannot go negative. Clipping single rotors would leak into
/// the yaw channel, whose torque gain is orders of magnitude above the roll
/// and pitch gains, so the limits are applied per channel instead: the
/// collective is kept, yaw is bounded by the collective, and roll and pitch
/// are bounded by what their rotor pairs can still deliver.
pub fn rotor_inputs(p: &PseudoInputs) -> [f64; 4] {
    let u_col = p.u_col.max(0.0);
    let u_yaw = p.u_yaw.clamp(-u_col, u_col);
    let a = 0.5 * (u_col - u_yaw);
    let b = 0.5 * (u_col + u_yaw);
    let limited = PseudoInputs { u_col, u_roll: p.u_roll.clamp(-a, a), u_pitch: p.u_pitch.clamp(-b, b), u_yaw };
    unmix(&limited).map(|u| u.max(0.0))
}

/// Two-rotor emergency inputs; `failed` is the zero-based index of the lost rotor.
pub fn emergency_inputs(u_col: f64, failed: usize) -> [f64; 4] {
    let h = 0.5 * u_col.max(0.0);
    if failed < 2 {
        [0.0, 0.0, h, h]
    } else {
        [h, h, 0.0, 0.0]
    }
}

/// Visual PI controller producing a horizontal velocity command.
#[derive(Debug, Clone, Default)]
pub struct VisualController {
    integral: Vector2<f64>,
}

impl VisualController {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn reset(&mut self) {
        self.integral = Vector2::zeros();
    }

    pub fn integral(&self) -> Vector2<f64> {
        self.integral
    }

    /// Image error scaled to metres at height `z_q`, in the body-aligned frame.
    pub fn error(centroid: &Vector2<f64>, z_q: f64, z_cq: f64, f: f64) -> Vector2<f64> {
        Vector2::new(centroid.y, centroid.x) * ((z_q - z_cq) / f).abs()
    }

    #[allow(clippy::too_many_arguments)]
    pub fn update(
        &mut self,
        centroid: &Vector2<f64>,
        z_q: f64,
        z_cq: f64,
        psi: f64,
        f: f64,
        gains: &ControlGains,
        dt: f64,
    ) -> Vector2<f64> {
        let e = Self::error(centroid, z_q, z_cq, f);
        self.integral += e * dt;
        if gains.k_iv > 0.0 {
            let cap = gains.visual_integral_limit / gains.k_iv;
            let n = self.integral.norm();
            if n > cap {
                self.integral *= cap / n;
            }
        }
        let body = e * gains.k_pv + self.integral * gains.k_iv;
        let (s, c) = psi.sin_cos();
        Vector2::new(c * body.x - s * body.y, s * body.x + c * body.y)
    }
}

/// Checks that the mixing matrix used by [`mix`] agrees with [`mixing_matrix`].
pub fn mixing_is_consistent() -> bool {
    let c = mixing_matrix();
    let Some(inv) = c.try_inverse() else { return false };
    let probe = [0.3, -1.2, 2.5, 0.7];
    let m = mix(&probe).as_vector();
    let direct = c * Vector4::from(probe);
    let back = unmix(&mix(&probe));
    let via_inv = inv * m;
    (m - direct).amax() < 1e-12 && (Vector4::from(back) - via_inv).amax() < 1e-12
}
