//! Sensor models and the colour-blob object tracker.

use nalgebra::{Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::plant::{QuadState, TargetColour};
use crate::spatial::{dcm_world_to_body, EulerAngles, Pose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraParams {
    /// Focal length in image units.
    pub f: f64,
    /// Aspect ratio.
    #[serde(rename = "A")]
    pub aspect: f64,
    /// Half field of view, radians.
    pub lambda: f64,
    /// Detection radius around the image centre.
    #[serde(rename = "R_c")]
    pub r_c: f64,
    /// Drop-zone radius in metres.
    #[serde(rename = "R_ds")]
    pub r_ds: f64,
}

impl Default for CameraParams {
    fn default() -> Self {
        Self { f: 400.0, aspect: 4.0 / 3.0, lambda: std::f64::consts::FRAC_PI_4, r_c: 70.0, r_ds: 0.25 }
    }
}

impl CameraParams {
    pub fn validate(&self) -> Result<(), crate::SimError> {
        let ok = self.f > 0.0
            && self.aspect > 0.0
            && self.lambda > 0.0
            && self.lambda < std::f64::consts::FRAC_PI_2
            && self.r_c > 0.0
            && self.r_ds >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(crate::SimError::Config(format!("invalid camera parameters {self:?}")))
        }
    }

    /// Half extents of the visible image, (x, y).
    pub fn half_extents(&self) -> (f64, f64) {
        let t = self.lambda.tan();
        // Widen by a few ulps so points exactly on the border count as visible.
        let slack = 1.0 + 1e-12;
        (self.f * t * slack, self.f / self.aspect * t * slack)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    /// True when the chosen centroid lies within `R_c` of the image centre.
    pub d: bool,
    pub centroid: Option<Vector2<f64>>,
    pub colour: Option<TargetColour>,
}

impl Detection {
    pub const NONE: Detection = Detection { d: false, centroid: None, colour: None };
}

/// Motion-capture position and attitude; exact.
pub fn mocap_measure(s: &QuadState) -> (Vector3<f64>, EulerAngles) {
    (s.r, s.eta)
}

/// Gyroscope rates; exact.
pub fn imu_measure(s: &QuadState) -> Vector3<f64> {
    s.omega
}

/// Body-to-camera rotation for gimbal roll and pitch.
pub fn camera_dcm(gimbal: [f64; 2]) -> Matrix3<f64> {
    let (sf, cf) = gimbal[0].sin_cos();
    let (st, ct) = gimbal[1].sin_cos();
    Matrix3::new(st, -sf * ct, cf * ct, 0.0, cf, sf, -ct, -sf * st, cf * st)
}

/// Pre-computed world-to-camera transform for one frame.
#[derive(Debug, Clone, Copy)]
pub struct CameraView {
    rot: Matrix3<f64>,
    origin: Vector3<f64>,
    offset: Vector3<f64>,
}

impl CameraView {
    pub fn new(quad: &Pose, gimbal: [f64; 2], r_cq: &Vector3<f64>) -> Self {
        let c = camera_dcm(gimbal);
        Self { rot: c * dcm_world_to_body(&quad.attitude), origin: quad.position, offset: c * r_cq }
    }

    /// World point in camera coordinates.
    pub fn to_camera(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rot * (v - self.origin) + self.offset
    }

    /// World position of the camera centre.
    pub fn position(&self) -> Vector3<f64> {
        self.origin - self.rot.transpose() * self.offset
    }
}

/// Pinhole projection ignoring the field of view; `None` behind the image plane.
pub fn project_unbounded(v_c: &Vector3<f64>, f: f64) -> Option<Vector2<f64>> {
    if v_c.x > 0.0 {
        Some(Vector2::new(f * v_c.y / v_c.x, -f * v_c.z / v_c.x))
    } else {
        None
    }
}

/// Pinhole projection restricted to the field of view.
pub fn project_point(v_c: &Vector3<f64>, cam: &CameraParams) -> Option<Vector2<f64>> {
    let (hx, hy) = cam.half_extents();
    project_unbounded(v_c, cam.f).filter(|p| p.x.abs() <= hx && p.y.abs() <= hy)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldVertex {
    pub id: usize,
    pub position: Vector3<f64>,
    pub colour: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub id: usize,
    pub xy: Vector2<f64>,
    pub colour: [f64; 3],
}

/// Projects the visible vertices into the image.
pub fn project_vertices(vertices: &[WorldVertex], view: &CameraView, cam: &CameraParams) -> Vec<Projection> {
    vertices
        .iter()
        .filter_map(|v| {
            project_point(&view.to_camera(&v.position), cam).map(|xy| Projection { id: v.id, xy, colour: v.colour })
        })
        .collect()
}

/// Colour band of the tracker for each primary colour.
pub fn in_band(colour: &[f64; 3], band: TargetColour) -> bool {
    let k = match band {
        TargetColour::Red => 0,
        TargetColour::Green => 1,
        TargetColour::Blue => 2,
    };
    (0..3).all(|i| if i == k { (0.4..=1.0).contains(&colour[i]) } else { colour[i] == 0.0 })
}

/// Image-space radius of the drop zone seen from camera height `z_c`.
pub fn drop_zone_radius(cam: &CameraParams, z_c: f64) -> f64 {
    cam.f * cam.r_ds / z_c.abs()
}

/// Finds the colour centroid nearest the image centre, ignoring centroids
/// inside the projected drop zone.
pub fn detect_targets(
    projections: &[Projection],
    drop_site_image: Option<Vector2<f64>>,
    z_c: f64,
    cam: &CameraParams,
) -> Detection {
    let mask = drop_zone_radius(cam, z_c);
    let mut best: Option<(f64, Vector2<f64>, TargetColour)> = None;
    for band in [TargetColour::Red, TargetColour::Green, TargetColour::Blue] {
        let mut sum = Vector2::zeros();
        let mut n = 0usize;
        for p in projections.iter().filter(|p| in_band(&p.colour, band)) {
            sum += p.xy;
            n += 1;
        }
        if n == 0 {
            continue;
        }
        let c = sum / n as f64;
        if drop_site_image.is_some_and(|ds| (c - ds).norm() < mask) {
            continue;
        }
        let dist = c.norm();
        if best.is_none_or(|(d, _, _)| dist < d) {
            best = Some((dist, c, band));
        }
    }
    match best {
        Some((dist, c, band)) => Detection { d: dist < cam.r_c, centroid: Some(c), colour: Some(band) },
        None => Detection::NONE,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn proj(x: f64, y: f64, colour: [f64; 3]) -> Projection {
        Projection { id: 0, xy: Vector2::new(x, y), colour }
    }

    #[test]
    fn pass_through_sensors() {
        let mut s = QuadState::at_rest(Pose::new(Vector3::new(1.0, 2.0, -1.0), EulerAngles::new(0.1, 0.0, 0.0)), 11.0);
        s.omega = Vector3::new(0.3, -0.1, 0.2);
        assert_eq!(mocap_measure(&s), (Vector3::new(1.0, 2.0, -1.0), EulerAngles::new(0.1, 0.0, 0.0)));
        assert_eq!(imu_measure(&s), Vector3::new(0.3, -0.1, 0.2));
    }

    #[test]
    fn camera_dcm_is_rotation() {
        for g in [[0.0, 0.0], [0.2, -0.3], [-0.5, 0.4]] {
            let c = camera_dcm(g);
            assert!((c * c.transpose() - Matrix3::identity()).abs().max() < 1e-12);
            assert!((c.determinant() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_examples() {
        let cam = CameraParams::default();
        assert_eq!(project_point(&Vector3::new(3.0, 0.0, 0.0), &cam), Some(Vector2::new(0.0, 0.0)));
        assert_eq!(project_point(&Vector3::new(2.0, 1.0, 0.0), &cam), Some(Vector2::new(200.0, 0.0)));
        assert!(project_point(&Vector3::new(-2.0, 0.0, 0.0), &cam).is_none());
        // Borders: |x| <= 400 and |y| <= 300.
        assert!(project_point(&Vector3::new(1.0, 1.0, 0.0), &cam).is_some());
        assert!(project_point(&Vector3::new(1.0, 1.001, 0.0), &cam).is_none());
        assert!(project_point(&Vector3::new(1.0, 0.0, -0.75), &cam).is_some());
        assert!(project_point(&Vector3::new(1.0, 0.0, -0.751), &cam).is_none());
    }

    #[test]
    fn vertex_below_level_camera_projects_to_centre() {
        let cam = CameraParams::default();
        let pose = Pose::new(Vector3::new(0.4, -1.0, -2.0), EulerAngles::new(0.0, 0.0, 0.7));
        let view = CameraView::new(&pose, [0.0, 0.0], &Vector3::new(0.0, 0.0, 0.1));
        let v = WorldVertex { id: 3, position: Vector3::new(0.4, -1.0, 0.0), colour: [1.0, 0.0, 0.0] };
        let p = project_vertices(&[v], &view, &cam);
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].xy, Vector2::zeros());
        assert!((view.position() - Vector3::new(0.4, -1.0, -2.1)).norm() < 1e-12);
    }

    #[test]
    fn compensating_gimbal_looks_straight_down() {
        // With the gimbal at the negated roll/pitch the optical axis is close to nadir.
        let eta = EulerAngles::new(0.1, -0.08, 1.0);
        let pose = Pose::new(Vector3::zeros(), eta);
        let view = CameraView::new(&pose, [-eta.phi, -eta.theta], &Vector3::zeros());
        let axis = view.rot.transpose() * Vector3::x();
        assert!(axis.z > 0.999, "{axis:?}");
    }

    #[test]
    fn centroid_is_mean_of_band() {
        let cam = CameraParams::default();
        let red = [1.0, 0.0, 0.0];
        let ps = [proj(10.0, 0.0, red), proj(-10.0, 0.0, red), proj(0.0, 30.0, red), proj(50.0, 50.0, [0.0, 0.0, 1.0])];
        let d = detect_targets(&ps[..3], None, -2.0, &cam);
        assert!(d.d);
        assert!((d.centroid.unwrap() - Vector2::new(0.0, 10.0)).norm() < 1e-12);
        assert_eq!(d.colour, Some(TargetColour::Red));
        let d = detect_targets(&ps, None, -2.0, &cam);
        assert_eq!(d.colour, Some(TargetColour::Red));
    }

    #[test]
    fn radius_gate_is_strict() {
        let cam = CameraParams::default();
        let red = [0.8, 0.0, 0.0];
        let d = detect_targets(&[proj(1.5 * cam.r_c, 0.0, red)], None, -2.0, &cam);
        assert!(!d.d);
        assert!(d.centroid.is_some());
        let d = detect_targets(&[proj(cam.r_c, 0.0, red)], None, -2.0, &cam);
        assert!(!d.d);
        assert!(!detect_targets(&[], None, -2.0, &cam).d);
    }

    #[test]
    fn drop_zone_masking() {
        let cam = CameraParams::default();
        assert!((drop_zone_radius(&cam, -2.0) - 50.0).abs() < 1e-12);
        let red = [1.0, 0.0, 0.0];
        let ds = Vector2::new(20.0, 5.0);
        let d = detect_targets(&[proj(20.0, 5.0, red)], Some(ds), -2.0, &cam);
        assert_eq!(d, Detection::NONE);
        let d = detect_targets(&[proj(20.0, 56.0, red)], Some(ds), -2.0, &cam);
        assert!(d.d);
    }

    #[test]
    fn off_band_colours_are_ignored() {
        let cam = CameraParams::default();
        for c in [[0.3, 0.0, 0.0], [1.0, 0.1, 0.0], [1.0, 1.0, 1.0], [0.0, 0.0, 0.0]] {
            assert!(!detect_targets(&[proj(0.0, 0.0, c)], None, -2.0, &cam).d, "{c:?}");
        }
        assert!(detect_targets(&[proj(0.0, 0.0, [0.0, 0.5, 0.0])], None, -2.0, &cam).d);
    }

    proptest! {
        #[test]
        fn detection_is_permutation_invariant(pts in prop::collection::vec((-300.0..300.0f64, -300.0..300.0f64, 0usize..3), 1..30), seed in any::<u64>()) {
            let cam = CameraParams::default();
            let colours = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
            let ps: Vec<_> = pts.iter().map(|&(x, y, c)| proj(x, y, colours[c])).collect();
            let mut shuffled = ps.clone();
            // Deterministic Fisher-Yates driven by the seed.
            let mut s = seed;
            for i in (1..shuffled.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                shuffled.swap(i, (s >> 33) as usize % (i + 1));
            }
            let a = detect_targets(&ps, Some(Vector2::new(40.0, 0.0)), -2.0, &cam);
            let b = detect_targets(&shuffled, Some(Vector2::new(40.0, 0.0)), -2.0, &cam);
            prop_assert_eq!(a.d, b.d);
            prop_assert_eq!(a.colour, b.colour);
            match (a.centroid, b.centroid) {
                (Some(x), Some(y)) => prop_assert!((x - y).norm() < 1e-9),
                (None, None) => {}
                _ => prop_assert!(false),
            }
        }
    }
}
