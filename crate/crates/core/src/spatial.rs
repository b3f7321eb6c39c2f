//! Reference frames and polygonal target geometry.
//!
//! The world frame has z pointing down, so gravity acts along +z and
//! altitudes are negative.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::SimError;

/// Guard on |theta| below which the Euler-rate map is considered regular.
pub const SINGULARITY_EPS: f64 = 1e-6;

/// Roll, pitch and yaw in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EulerAngles {
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
}

impl EulerAngles {
    pub const fn new(phi: f64, theta: f64, psi: f64) -> Self {
        Self { phi, theta, psi }
    }

    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.phi, self.theta, self.psi)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    /// Recovers the angles from a world-to-body DCM, with theta in [-pi/2, pi/2].
    pub fn from_dcm(r: &Matrix3<f64>) -> Self {
        let theta = (-r[(0, 2)]).clamp(-1.0, 1.0).asin();
        let phi = r[(1, 2)].atan2(r[(2, 2)]);
        let psi = r[(0, 1)].atan2(r[(0, 0)]);
        Self::new(phi, theta, psi)
    }
}

/// Position in the world frame plus attitude.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vector3<f64>,
    pub attitude: EulerAngles,
}

impl Pose {
    pub fn new(position: Vector3<f64>, attitude: EulerAngles) -> Self {
        Self { position, attitude }
    }
}

/// World-to-body direction cosine matrix for a 3-2-1 Euler sequence.
pub fn dcm_world_to_body(eta: &EulerAngles) -> Matrix3<f64> {
    let (sf, cf) = eta.phi.sin_cos();
    let (st, ct) = eta.theta.sin_cos();
    let (sp, cp) = eta.psi.sin_cos();
    Matrix3::new(
        ct * cp,
        ct * sp,
        -st,
        sf * st * cp - cf * sp,
        sf * st * sp + cf * cp,
        sf * ct,
        cf * st * cp + sf * sp,
        cf * st * sp - sf * cp,
        cf * ct,
    )
}

/// Maps body angular rates to Euler-angle rates.
pub fn euler_rate_map(eta: &EulerAngles) -> Result<Matrix3<f64>, SimError> {
    if !(eta.theta.abs() < std::f64::consts::FRAC_PI_2 - SINGULARITY_EPS) {
        return Err(SimError::AttitudeSingularity { theta: eta.theta });
    }
    let (sf, cf) = eta.phi.sin_cos();
    let ct = eta.theta.cos();
    let tt = eta.theta.tan();
    Ok(Matrix3::new(1.0, sf * tt, cf * tt, 0.0, cf, -sf, 0.0, sf / ct, cf / ct))
}

/// Body-frame point expressed in the world frame.
pub fn vertex_to_world(v_local: &Vector3<f64>, pose: &Pose) -> Vector3<f64> {
    dcm_world_to_body(&pose.attitude).transpose() * v_local + pose.position
}

/// World-frame point expressed in the body frame.
pub fn world_to_body(v_world: &Vector3<f64>, pose: &Pose) -> Vector3<f64> {
    dcm_world_to_body(&pose.attitude) * (v_world - pose.position)
}

/// Vertex/face mesh with one RGB colour per face.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub vertices: Vec<Vector3<f64>>,
    pub faces: Vec<Vec<usize>>,
    pub face_colours: Vec<[f64; 3]>,
}

impl Geometry {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.faces.len() != self.face_colours.len() {
            return Err(SimError::Geometry("face and colour counts differ".into()));
        }
        for (j, face) in self.faces.iter().enumerate() {
            if face.is_empty() {
                return Err(SimError::Geometry(format!("face {j} is empty")));
            }
            if let Some(&i) = face.iter().find(|&&i| i >= self.vertices.len()) {
                return Err(SimError::Geometry(format!("face {j} references vertex {i}")));
            }
        }
        for c in &self.face_colours {
            if c.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(SimError::Geometry(format!("colour {c:?} outside [0,1]")));
            }
        }
        Ok(())
    }

    /// Colour of each vertex, taken from the first face that uses it.
    /// Vertices not referenced by any face are black.
    pub fn vertex_colours(&self) -> Vec<[f64; 3]> {
        let mut out = vec![[0.0; 3]; self.vertices.len()];
        let mut seen = vec![false; self.vertices.len()];
        for (face, colour) in self.faces.iter().zip(&self.face_colours) {
            for &i in face {
                if !seen[i] {
                    seen[i] = true;
                    out[i] = *colour;
                }
            }
        }
        out
    }

    /// UV sphere centred on the origin.
    pub fn sphere(radius: f64, rings: usize, segments: usize, colour: [f64; 3]) -> Self {
        let rings = rings.max(2);
        let segments = segments.max(3);
        let mut vertices = vec![Vector3::new(0.0, 0.0, -radius)];
        for i in 1..rings {
            let lat = std::f64::consts::PI * i as f64 / rings as f64;
            for j in 0..segments {
                let lon = std::f64::consts::TAU * j as f64 / segments as f64;
                vertices.push(radius * Vector3::new(lat.sin() * lon.cos(), lat.sin() * lon.sin(), -lat.cos()));
            }
        }
        vertices.push(Vector3::new(0.0, 0.0, radius));
        let bottom = vertices.len() - 1;
        let ring = |i: usize, j: usize| 1 + (i - 1) * segments + j % segments;
        let mut faces = Vec::new();
        for j in 0..segments {
            faces.push(vec![0, ring(1, j), ring(1, j + 1)]);
        }
        for i in 1..rings - 1 {
            for j in 0..segments {
                faces.push(vec![ring(i, j), ring(i + 1, j), ring(i + 1, j + 1), ring(i, j + 1)]);
            }
        }
        for j in 0..segments {
            faces.push(vec![ring(rings - 1, j), bottom, ring(rings - 1, j + 1)]);
        }
        let face_colours = vec![colour; faces.len()];
        Self { vertices, faces, face_colours }
    }

    /// Square pyramid whose base rests at z = +half_height, apex at -half_height.
    pub fn pyramid(half_width: f64, half_height: f64, colour: [f64; 3]) -> Self {
        let w = half_width;
        let vertices = vec![
            Vector3::new(w, w, half_height),
            Vector3::new(-w, w, half_height),
            Vector3::new(-w, -w, half_height),
            Vector3::new(w, -w, half_height),
            Vector3::new(0.0, 0.0, -half_height),
        ];
        let faces = vec![vec![0, 1, 2, 3], vec![0, 1, 4], vec![1, 2, 4], vec![2, 3, 4], vec![3, 0, 4]];
        let face_colours = vec![colour; faces.len()];
        Self { vertices, faces, face_colours }
    }

    /// Axis-aligned box with the given half extents.
    pub fn cuboid(half: Vector3<f64>, colour: [f64; 3]) -> Self {
        let mut vertices = Vec::with_capacity(8);
        for &sz in &[-1.0, 1.0] {
            for &(sx, sy) in &[(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)] {
                vertices.push(Vector3::new(sx * half.x, sy * half.y, sz * half.z));
            }
        }
        let faces = vec![
            vec![0, 1, 2, 3],
            vec![4, 5, 6, 7],
            vec![0, 1, 5, 4],
            vec![1, 2, 6, 5],
            vec![2, 3, 7, 6],
            vec![3, 0, 4, 7],
        ];
        let face_colours = vec![colour; faces.len()];
        Self { vertices, faces, face_colours }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    // Independent construction of the same DCM as a product of elementary
    // rotations: R = R1(phi) R2(theta) R3(psi).
    fn dcm_oracle(e: &EulerAngles) -> Matrix3<f64> {
        let r1 = |a: f64| Matrix3::new(1.0, 0.0, 0.0, 0.0, a.cos(), a.sin(), 0.0, -a.sin(), a.cos());
        let r2 = |a: f64| Matrix3::new(a.cos(), 0.0, -a.sin(), 0.0, 1.0, 0.0, a.sin(), 0.0, a.cos());
        let r3 = |a: f64| Matrix3::new(a.cos(), a.sin(), 0.0, -a.sin(), a.cos(), 0.0, 0.0, 0.0, 1.0);
        r1(e.phi) * r2(e.theta) * r3(e.psi)
    }

    #[test]
    fn zero_rotation_is_identity() {
        assert_eq!(dcm_world_to_body(&EulerAngles::default()), Matrix3::identity());
    }

    #[test]
    fn quarter_yaw() {
        let r = dcm_world_to_body(&EulerAngles::new(0.0, 0.0, FRAC_PI_2));
        let expect = Matrix3::new(0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert!((r - expect).abs().max() < 1e-15);
    }

    #[test]
    fn rate_map_level_is_identity() {
        assert_eq!(euler_rate_map(&EulerAngles::default()).unwrap(), Matrix3::identity());
    }

    #[test]
    fn rate_map_quarter_roll() {
        let m = euler_rate_map(&EulerAngles::new(FRAC_PI_2, 0.0, 0.0)).unwrap();
        let expect = Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0);
        assert!((m - expect).abs().max() < 1e-15);
    }

    #[test]
    fn rate_map_rejects_vertical_pitch() {
        assert!(euler_rate_map(&EulerAngles::new(0.0, FRAC_PI_2, 0.0)).is_err());
        assert!(euler_rate_map(&EulerAngles::new(0.0, -FRAC_PI_2 + 1e-7, 0.0)).is_err());
    }

    #[test]
    fn vertex_examples() {
        let level = Pose::default();
        let v = Vector3::x();
        assert_eq!(vertex_to_world(&v, &level), v);
        let pose = Pose::new(Vector3::new(0.0, 0.0, -1.0), EulerAngles::new(0.0, 0.0, FRAC_PI_2));
        let w = vertex_to_world(&v, &pose);
        assert!((w - Vector3::new(0.0, 1.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn shapes_validate() {
        Geometry::sphere(0.05, 4, 6, [1.0, 0.0, 0.0]).validate().unwrap();
        Geometry::pyramid(0.05, 0.05, [0.0, 0.0, 1.0]).validate().unwrap();
        Geometry::cuboid(Vector3::repeat(0.05), [0.0, 1.0, 0.0]).validate().unwrap();
        let bad = Geometry { vertices: vec![Vector3::zeros()], faces: vec![vec![3]], face_colours: vec![[0.0; 3]] };
        assert!(bad.validate().is_err());
    }

    fn angles() -> impl Strategy<Value = EulerAngles> {
        (-3.2..3.2f64, -1.5..1.5f64, -3.2..3.2f64).prop_map(|(a, b, c)| EulerAngles::new(a, b, c))
    }

    proptest! {
        #[test]
        fn dcm_is_proper_rotation(e in angles()) {
            let r = dcm_world_to_body(&e);
            prop_assert!((r * r.transpose() - Matrix3::identity()).abs().max() < 1e-12);
            prop_assert!((r.determinant() - 1.0).abs() < 1e-12);
            prop_assert!((r - dcm_oracle(&e)).abs().max() < 1e-12);
        }

        #[test]
        fn body_world_round_trip(e in angles(), p in prop::array::uniform3(-5.0..5.0f64), v in prop::array::uniform3(-5.0..5.0f64)) {
            let pose = Pose::new(Vector3::from(p), e);
            let v = Vector3::from(v);
            let back = vertex_to_world(&world_to_body(&v, &pose), &pose);
            prop_assert!((back - v).norm() < 1e-12);
        }

        #[test]
        fn angles_recovered_from_dcm(e in angles()) {
            let back = EulerAngles::from_dcm(&dcm_world_to_body(&e));
            let r = dcm_world_to_body(&back);
            prop_assert!((r - dcm_world_to_body(&e)).abs().max() < 1e-12);
        }

        // Finite-difference check: the rate map integrates body rates into
        // Euler-angle rates consistent with the DCM derivative.
        #[test]
        fn rate_map_matches_dcm_kinematics(e in angles(), w in prop::array::uniform3(-1.0..1.0f64)) {
            let w = Vector3::from(w);
            let etadot = euler_rate_map(&e).unwrap() * w;
            let h = 1e-6;
            let ep = EulerAngles::from_vector(&(e.as_vector() + h * etadot));
            let em = EulerAngles::from_vector(&(e.as_vector() - h * etadot));
            let rdot = (dcm_world_to_body(&ep) - dcm_world_to_body(&em)) / (2.0 * h);
            // Rdot = -[w]x R for a world-to-body DCM.
            let skew = Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0);
            let expect = -skew * dcm_world_to_body(&e);
            prop_assert!((rdot - expect).abs().max() < 1e-6);
        }
    }
}
