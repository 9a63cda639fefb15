//! Planar camera model and two-ray triangulation.
//!
//! Frame: origin at camera 1's corner of the sensor, `x` along the camera
//! baseline, `y` into the skin. Angles are measured counter-clockwise from
//! `+x`. A pixel column maps to a bearing through a pinhole with a single
//! cubic radial term:
//!
//! ```text
//! u_n = (u - u_center) / focal_px
//! u_d = u_n * (1 + k1 * u_n^2)
//! bearing = orientation + skew + atan(u_d)
//! ```

use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::error::{Error, Result};
use crate::events::{CameraId, SENSOR_WIDTH};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CameraModel {
    pub x_mm: f64,
    pub y_mm: f64,
    /// Nominal optical-axis direction.
    pub orientation_rad: f64,
    /// Misalignment correction added to `orientation_rad`.
    pub skew_rad: f64,
    pub focal_px: f64,
    pub u_center: f64,
    pub k1: f64,
}

/// Rays with `|sin(angle between them)|` below this are rejected.
pub const MIN_CONDITION: f64 = 1e-6;
/// Estimates outside `[BOUNDS_MM.0, BOUNDS_MM.1]^2` are flagged.
pub const BOUNDS_MM: (f64, f64) = (-10.0, 110.0);
/// Allowed camera placement slack around the sensor square.
pub const POSITION_SLACK_MM: f64 = 50.0;

impl CameraModel {
    /// Corner-mounted camera looking at the skin centre, 90 degree field of view.
    pub fn nominal(camera: CameraId, side_mm: f64) -> Self {
        let (x_mm, orientation_rad) = match camera {
            CameraId::Cam1 => (0.0, FRAC_PI_4),
            CameraId::Cam2 => (side_mm, 3.0 * FRAC_PI_4),
        };
        CameraModel { x_mm, y_mm: 0.0, orientation_rad, skew_rad: 0.0, focal_px: 320.0, u_center: 319.5, k1: 0.0 }
    }

    pub fn nominal_pair(side_mm: f64) -> [CameraModel; 2] {
        [Self::nominal(CameraId::Cam1, side_mm), Self::nominal(CameraId::Cam2, side_mm)]
    }

    pub fn position(&self) -> (f64, f64) {
        (self.x_mm, self.y_mm)
    }

    /// Distance to a point, e.g. the skin centre.
    pub fn distance_to(&self, p: (f64, f64)) -> f64 {
        libm::hypot(p.0 - self.x_mm, p.1 - self.y_mm)
    }

    /// Largest normalized |u_n| on the sensor.
    fn max_normalized_u(&self) -> f64 {
        let edge = f64::from(SENSOR_WIDTH - 1);
        (self.u_center.abs()).max((edge - self.u_center).abs()) / self.focal_px
    }

    /// Distortion keeps the pixel-to-bearing map monotone over the sensor.
    pub fn distortion_is_monotone(&self) -> bool {
        let un = self.max_normalized_u();
        (self.k1 * un * un).abs() < 1.0 / 3.0
    }

    pub fn validate(&self, side_mm: f64) -> Result<()> {
        let finite = [self.x_mm, self.y_mm, self.orientation_rad, self.skew_rad, self.focal_px, self.u_center, self.k1]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config("camera model has non-finite parameters".into()));
        }
        if !(self.focal_px > 0.0) {
            return Err(Error::NonPositive("focal_px"));
        }
        let range = -POSITION_SLACK_MM..=side_mm + POSITION_SLACK_MM;
        if !range.contains(&self.x_mm) || !range.contains(&self.y_mm) {
            return Err(Error::Config(alloc::format!(
                "camera position ({}, {}) outside the allowed box",
                self.x_mm,
                self.y_mm
            )));
        }
        if self.skew_rad.abs() >= FRAC_PI_4 {
            return Err(Error::Config(alloc::format!("|skew| {} rad must stay below pi/4", self.skew_rad)));
        }
        if !self.distortion_is_monotone() {
            return Err(Error::Config(alloc::format!("k1 = {} folds the pixel-to-angle map", self.k1)));
        }
        Ok(())
    }

    /// Angle of the camera-frame ray through pixel column `u`.
    pub fn camera_angle(&self, u: f64) -> f64 {
        let un = (u - self.u_center) / self.focal_px;
        let ud = un * (1.0 + self.k1 * un * un);
        libm::atan(ud)
    }
}

/// World-frame bearing of pixel column `u`.
pub fn pixel_to_bearing(model: &CameraModel, u: f64) -> f64 {
    model.orientation_rad + model.skew_rad + model.camera_angle(u)
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut a = libm::fmod(a, 2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    /// Sub-pixel column of the point.
    InView(f64),
    /// Behind the camera, at its centre, or off the sensor.
    OutOfView,
}

impl Projection {
    pub fn in_view(self) -> Option<f64> {
        match self {
            Projection::InView(u) => Some(u),
            Projection::OutOfView => None,
        }
    }
}

/// Pixel column at which `model` sees point `p`; exact inverse of
/// [`pixel_to_bearing`].
pub fn project_point(model: &CameraModel, p: (f64, f64)) -> Projection {
    let (dx, dy) = (p.0 - model.x_mm, p.1 - model.y_mm);
    if dx == 0.0 && dy == 0.0 {
        return Projection::OutOfView;
    }
    let theta = wrap_angle(libm::atan2(dy, dx) - model.orientation_rad - model.skew_rad);
    if theta.abs() >= FRAC_PI_2 {
        return Projection::OutOfView;
    }
    let ud = libm::tan(theta);
    // solve un + k1 un^3 = ud by Newton from the undistorted guess
    let mut un = ud;
    for _ in 0..60 {
        let f = un * (1.0 + model.k1 * un * un) - ud;
        let df = 1.0 + 3.0 * model.k1 * un * un;
        if !(df > 0.0) {
            return Projection::OutOfView;
        }
        let step = f / df;
        un -= step;
        if step.abs() <= 1e-16 * (1.0 + un.abs()) {
            break;
        }
    }
    let u = model.u_center + model.focal_px * un;
    if !(0.0..f64::from(SENSOR_WIDTH)).contains(&u) {
        return Projection::OutOfView;
    }
    Projection::InView(u)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Triangulation {
    pub estimate: (f64, f64),
    pub theta1_rad: f64,
    pub theta2_rad: f64,
    /// `|sin(theta2 - theta1)|`.
    pub condition: f64,
    pub out_of_bounds: bool,
}

/// Intersection of two bearing rays from the given camera positions.
pub fn intersect_rays(p1: (f64, f64), theta1: f64, p2: (f64, f64), theta2: f64) -> Result<Triangulation> {
    let d1 = (libm::cos(theta1), libm::sin(theta1));
    let d2 = (libm::cos(theta2), libm::sin(theta2));
    let cross = d1.0 * d2.1 - d1.1 * d2.0;
    let condition = cross.abs();
    if !(condition >= MIN_CONDITION) {
        return Err(Error::DegenerateGeometry { condition });
    }
    let b = (p2.0 - p1.0, p2.1 - p1.1);
    let s = (b.0 * d2.1 - b.1 * d2.0) / cross;
    let estimate = (p1.0 + s * d1.0, p1.1 + s * d1.1);
    let inside = |v: f64| (BOUNDS_MM.0..=BOUNDS_MM.1).contains(&v);
    Ok(Triangulation {
        estimate,
        theta1_rad: theta1,
        theta2_rad: theta2,
        condition,
        out_of_bounds: !(inside(estimate.0) && inside(estimate.1)),
    })
}

/// Contact position from the dominant-cluster columns of both cameras.
pub fn triangulate(m1: &CameraModel, u1: f64, m2: &CameraModel, u2: f64) -> Result<Triangulation> {
    intersect_rays(m1.position(), pixel_to_bearing(m1, u1), m2.position(), pixel_to_bearing(m2, u2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> CameraModel {
        CameraModel::nominal(CameraId::Cam1, 100.0)
    }

    #[test]
    fn principal_point_maps_to_axis() {
        let m = CameraModel { skew_rad: 0.03, k1: 0.04, ..model() };
        assert_eq!(pixel_to_bearing(&m, m.u_center), m.orientation_rad + m.skew_rad);
    }

    #[test]
    fn unit_normalized_pixel_is_45_degrees() {
        let m = CameraModel { orientation_rad: 0.0, ..model() };
        assert!((pixel_to_bearing(&m, m.u_center + 320.0) - FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn on_axis_point_projects_to_center() {
        let m = model();
        let u = project_point(&m, (50.0, 50.0)).in_view().unwrap();
        assert!((u - m.u_center).abs() < 1e-9);
    }

    #[test]
    fn behind_camera_is_out_of_view() {
        let m = model();
        assert_eq!(project_point(&m, (-10.0, -10.0)), Projection::OutOfView);
        assert_eq!(project_point(&m, (0.0, 0.0)), Projection::OutOfView);
    }

    #[test]
    fn projection_inverts_bearing_with_distortion() {
        let m = CameraModel { k1: -0.05, skew_rad: 0.02, ..model() };
        for p in [(20.0, 60.0), (80.0, 30.0), (50.0, 90.0)] {
            let u = project_point(&m, p).in_view().unwrap();
            let want = libm::atan2(p.1 - m.y_mm, p.0 - m.x_mm);
            assert!((pixel_to_bearing(&m, u) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_cameras_hit_center() {
        let [m1, m2] = CameraModel::nominal_pair(100.0);
        let t = triangulate(&m1, m1.u_center, &m2, m2.u_center).unwrap();
        assert!((t.estimate.0 - 50.0).abs() < 1e-9 && (t.estimate.1 - 50.0).abs() < 1e-9);
        assert!(!t.out_of_bounds);
        assert!((t.condition - 1.0).abs() < 1e-12);
    }

    #[test]
    fn parallel_rays_are_degenerate() {
        let err = intersect_rays((0.0, 0.0), 1.0, (100.0, 0.0), 1.0).unwrap_err();
        assert!(matches!(err, Error::DegenerateGeometry { .. }));
    }

    #[test]
    fn out_of_bounds_flagged_not_dropped() {
        let t = intersect_rays((0.0, 0.0), 0.1, (100.0, 0.0), PI - 0.1).unwrap();
        assert!(!t.out_of_bounds);
        let t = intersect_rays((0.0, 0.0), 1.5, (100.0, 0.0), PI - 1.5).unwrap();
        assert!(t.out_of_bounds);
    }

    #[test]
    fn validate_rejects_bad_models() {
        assert!(model().validate(100.0).is_ok());
        assert!(CameraModel { focal_px: 0.0, ..model() }.validate(100.0).is_err());
        assert!(CameraModel { skew_rad: 0.8, ..model() }.validate(100.0).is_err());
        assert!(CameraModel { x_mm: -60.0, ..model() }.validate(100.0).is_err());
        assert!(CameraModel { k1: -0.4, ..model() }.validate(100.0).is_err());
    }

    #[test]
    fn distances_to_center_follow_from_positions() {
        let [m1, m2] = CameraModel::nominal_pair(100.0);
        assert!((m1.distance_to((50.0, 50.0)) - m2.distance_to((50.0, 50.0))).abs() < 1e-12);
    }
}
