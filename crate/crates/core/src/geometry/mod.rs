//! Epipolar geometry primitives and pose-error metrics.
//!
//! Coordinates are pixels until [`normalize_match`] maps them into
//! normalized camera coordinates; every operation that consumes an
//! essential matrix expects normalized coordinates.

mod epipolar;
mod metrics;

pub use epipolar::{
    decompose_essential, denormalize_match, eight_point, essential_from_pose, normalize_match,
    project_to_essential, sampson_distance,
};
pub use metrics::{
    pose_auc, pose_error_deg, rotation_error_deg, translation_error_deg, FAILURE_POSE_ERROR_DEG,
};

use alloc::vec::Vec;
use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("invalid camera: {0}")]
    InvalidCamera(&'static str),
    #[error("rotation matrix is not orthonormal with determinant +1")]
    InvalidRotation,
    #[error("translation direction is not unit length")]
    InvalidTranslation,
    #[error("need at least {need} matches, got {got}")]
    NotEnoughMatches { need: usize, got: usize },
    #[error("degenerate configuration for the linear solver")]
    SolverDegenerate,
    #[error("cheirality vote tied; essential decomposition ambiguous")]
    AmbiguousDecomposition,
    #[error("metric undefined on empty input")]
    UndefinedMetric,
}

/// Pinhole camera intrinsics plus image size, all in pixels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Camera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: f64,
    pub height: f64,
}

impl Camera {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: f64,
        height: f64,
    ) -> Result<Self, GeometryError> {
        if !(fx > 0.0 && fy > 0.0) {
            return Err(GeometryError::InvalidCamera("focal lengths must be positive"));
        }
        if !(cx > 0.0 && cx < width && cy > 0.0 && cy < height) {
            return Err(GeometryError::InvalidCamera(
                "principal point must lie strictly inside the image",
            ));
        }
        Ok(Self { fx, fy, cx, cy, width, height })
    }

    /// Pixel -> normalized camera coordinates.
    #[inline]
    pub fn normalize(&self, x: f64, y: f64) -> (f64, f64) {
        ((x - self.cx) / self.fx, (y - self.cy) / self.fy)
    }

    /// Normalized camera -> pixel coordinates.
    #[inline]
    pub fn denormalize(&self, xn: f64, yn: f64) -> (f64, f64) {
        (xn * self.fx + self.cx, yn * self.fy + self.cy)
    }

    #[inline]
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= 0.0 && x <= self.width && y >= 0.0 && y <= self.height
    }
}

/// Relative pose of camera 2 with respect to camera 1: `X2 = R * X1 + t`,
/// with `t` a unit-norm translation direction.
#[derive(Clone, Debug, PartialEq)]
pub struct RelativePose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl RelativePose {
    const TOL: f64 = 1e-9;

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        let gram = rotation.transpose() * rotation;
        let max_dev = (gram - Matrix3::identity()).abs().max();
        if !(max_dev <= Self::TOL) || !((rotation.determinant() - 1.0).abs() <= Self::TOL) {
            return Err(GeometryError::InvalidRotation);
        }
        if !((translation.norm() - 1.0).abs() <= Self::TOL) {
            return Err(GeometryError::InvalidTranslation);
        }
        Ok(Self { rotation, translation })
    }
}

/// An essential-matrix hypothesis with its consensus over a match set.
#[derive(Clone, Debug, PartialEq)]
pub struct EssentialHypothesis {
    /// Scale-normalized essential matrix, `||E||_F = sqrt(2)`.
    pub essential: Matrix3<f64>,
    pub inlier_mask: Vec<bool>,
    /// Inlier count.
    pub score: usize,
}
