//! Step sizes for central differences, scaled by `max(1, |y|)`.

use crate::lie_algebra::AlgebraVector;

/// First derivatives: `eps^(1/3)`.
pub(crate) fn first_order_step(y: &AlgebraVector, dir: &AlgebraVector) -> f64 {
    f64::EPSILON.cbrt() * y.norm().max(1.0) / dir.norm().max(1.0)
}

/// Second derivatives: `eps^(1/4)`.
pub(crate) fn second_order_step(y: &AlgebraVector, dir_norm: f64) -> f64 {
    f64::EPSILON.powf(0.25) * y.norm().max(1.0) / dir_norm.max(1.0)
}

/// Third derivatives: `eps^(1/5)`.
pub(crate) fn third_order_step(y: &AlgebraVector, dir_norm: f64) -> f64 {
    f64::EPSILON.powf(0.2) * y.norm().max(1.0) / dir_norm.max(1.0)
}

/// Smallest distance from the origin to the segment `y + s dir`, `|s| <= h`.
pub(crate) fn segment_distance(y: &AlgebraVector, dir: &AlgebraVector, h: f64) -> f64 {
    let dd = dir.norm_squared();
    if dd == 0.0 {
        return y.norm();
    }
    let s = (-y.dot(dir) / dd).clamp(-h, h);
    (y + dir * s).norm()
}

/// True when the stencil `y +- h dir` stays at least one step away from 0.
pub(crate) fn stencil_clear(y: &AlgebraVector, dir: &AlgebraVector, h: f64) -> bool {
    segment_distance(y, dir, h) > h * dir.norm()
}
