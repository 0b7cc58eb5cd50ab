//! Main-camera (perspective) and UI-camera (orthographic rectangle)
//! visibility predicates.

use nalgebra::Vector3;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;

/// Tolerance on unit length and orthogonality of the camera basis.
pub const BASIS_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CameraError {
    #[error("degenerate camera: {0}")]
    DegenerateCamera(String),
}

/// Axis-aligned screen-space rectangle, closed on all sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct ScreenRect {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl ScreenRect {
    pub fn overlaps_square(&self, cx: f64, cy: f64, half: f64) -> bool {
        cx - half <= self.max_x
            && cx + half >= self.min_x
            && cy - half <= self.max_y
            && cy + half >= self.min_y
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct CameraState {
    #[schemars(with = "[f64; 3]")]
    pub position: Vec3,
    #[schemars(with = "[f64; 3]")]
    pub forward: Vec3,
    #[schemars(with = "[f64; 3]")]
    pub up: Vec3,
    pub vfov_deg: f64,
    pub aspect: f64,
    pub near: f64,
    pub far: f64,
    pub ui_rect: ScreenRect,
}

impl CameraState {
    pub fn validate(&self) -> Result<(), CameraError> {
        let bad = |msg: String| Err(CameraError::DegenerateCamera(msg));
        let finite = self.position.iter().all(|v| v.is_finite())
            && self.forward.iter().all(|v| v.is_finite())
            && self.up.iter().all(|v| v.is_finite());
        if !finite {
            return bad("non-finite camera vector".into());
        }
        if (self.forward.norm() - 1.0).abs() > BASIS_TOLERANCE {
            return bad(format!("forward has length {}", self.forward.norm()));
        }
        if (self.up.norm() - 1.0).abs() > BASIS_TOLERANCE {
            return bad(format!("up has length {}", self.up.norm()));
        }
        if self.forward.dot(&self.up).abs() > BASIS_TOLERANCE {
            return bad("forward and up are not orthogonal".into());
        }
        if !(self.vfov_deg > 0.0 && self.vfov_deg < 180.0) {
            return bad(format!("vertical fov {} outside (0, 180)", self.vfov_deg));
        }
        if !(self.aspect > 0.0 && self.aspect.is_finite()) {
            return bad(format!("aspect {} not positive", self.aspect));
        }
        if !(self.near > 0.0 && self.near < self.far && self.far.is_finite()) {
            return bad(format!("need 0 < near < far, got {}..{}", self.near, self.far));
        }
        Ok(())
    }

    /// Right-handed side vector (`forward x up`).
    pub fn right(&self) -> Vec3 {
        self.forward.cross(&self.up)
    }

    pub fn frustum(&self) -> Result<Frustum, CameraError> {
        self.validate()?;
        Ok(Frustum::from_camera(self))
    }
}

/// Plane with unit normal pointing into the frustum; `signed_distance`
/// is positive on the inside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub normal: Vec3,
    pub offset: f64,
}

impl Plane {
    fn through(point: Vec3, normal: Vec3) -> Self {
        Plane {
            normal,
            offset: -normal.dot(&point),
        }
    }

    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        self.normal.dot(p) + self.offset
    }
}

/// The six inward-facing planes of a perspective view volume, in the order
/// near, far, left, right, bottom, top.
#[derive(Debug, Clone, PartialEq)]
pub struct Frustum {
    pub planes: [Plane; 6],
}

impl Frustum {
    fn from_camera(cam: &CameraState) -> Self {
        let fwd = cam.forward;
        let up = cam.up;
        let right = cam.right();
        let half_v = cam.vfov_deg.to_radians() / 2.0;
        let half_h = (cam.aspect * half_v.tan()).atan();
        let (sv, cv) = half_v.sin_cos();
        let (sh, ch) = half_h.sin_cos();

        let near = Plane::through(cam.position + fwd * cam.near, fwd);
        let far = Plane::through(cam.position + fwd * cam.far, -fwd);
        let left = Plane::through(cam.position, right * ch + fwd * sh);
        let right_p = Plane::through(cam.position, -right * ch + fwd * sh);
        let bottom = Plane::through(cam.position, up * cv + fwd * sv);
        let top = Plane::through(cam.position, -up * cv + fwd * sv);
        Frustum {
            planes: [near, far, left, right_p, bottom, top],
        }
    }

    /// Smallest signed distance from `center` to any plane.
    pub fn min_distance(&self, center: &Vec3) -> f64 {
        self.planes
            .iter()
            .map(|p| p.signed_distance(center))
            .fold(f64::INFINITY, f64::min)
    }

    /// Closed test: tangent spheres count as visible.
    pub fn contains_sphere(&self, center: &Vec3, radius: f64) -> bool {
        self.planes
            .iter()
            .all(|p| p.signed_distance(center) >= -radius)
    }
}

/// True iff the sphere is not fully behind any of the six view planes.
pub fn sphere_in_frustum(
    camera: &CameraState,
    center: &Vec3,
    radius: f64,
) -> Result<bool, CameraError> {
    Ok(camera.frustum()?.contains_sphere(center, radius))
}
