//! Compliant ground contact: Kelvin-Voigt normal penalty with regularized
//! Coulomb friction against a flat plane through the origin, optionally
//! tilted by a slope angle (positive = ascending in +x).

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundSpec {
    /// Degrees, positive ascends in the direction of travel.
    pub slope_deg: f64,
    /// N/m
    pub normal_stiffness: f64,
    /// N s/m
    pub normal_damping: f64,
    pub friction: f64,
    /// Tangential speed at which friction reaches ~76% of its Coulomb bound.
    pub friction_velocity: f64,
}

impl Default for GroundSpec {
    fn default() -> Self {
        Self {
            slope_deg: 0.0,
            normal_stiffness: 1.0e5,
            normal_damping: 1.0e3,
            friction: 1.0,
            friction_velocity: 1.0e-2,
        }
    }
}

impl GroundSpec {
    pub fn flat() -> Self {
        Self::default()
    }

    pub fn with_slope(mut self, slope_deg: f64) -> Self {
        self.slope_deg = slope_deg;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.normal_stiffness > 0.0
            && self.normal_damping >= 0.0
            && self.friction >= 0.0
            && self.friction_velocity > 0.0
            && self.slope_deg.abs() < 90.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid ground parameters: {self:?}")))
        }
    }

    pub fn frame(&self) -> SlopeFrame {
        SlopeFrame::new(self.slope_deg)
    }
}

/// Orthonormal ground frame for a plane through the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFrame {
    pub normal: Vector2<f64>,
    pub tangent: Vector2<f64>,
}

impl SlopeFrame {
    pub fn new(slope_deg: f64) -> Self {
        let (s, c) = slope_deg.to_radians().sin_cos();
        Self {
            normal: Vector2::new(-s, c),
            tangent: Vector2::new(c, s),
        }
    }

    /// Signed distance above the plane.
    pub fn distance(&self, point: &Vector2<f64>) -> f64 {
        self.normal.dot(point)
    }

    /// (normal, tangential) components of a vector.
    pub fn decompose(&self, v: &Vector2<f64>) -> (f64, f64) {
        (self.normal.dot(v), self.tangent.dot(v))
    }

    /// Ground height directly below/above horizontal position `x`.
    pub fn height_at(&self, x: f64) -> f64 {
        // normal . (x, z) = 0  =>  z = x * tan(alpha)
        -self.normal.x * x / self.normal.y
    }
}

/// Signed normal distance and (normal, tangential) velocity of a point.
pub fn slope_transform(
    slope_deg: f64,
    point: &Vector2<f64>,
    velocity: &Vector2<f64>,
) -> Result<(f64, f64, f64)> {
    if slope_deg.abs() >= 90.0 {
        return Err(Error::Config(format!("slope must be within (-90, 90) deg, got {slope_deg}")));
    }
    let frame = SlopeFrame::new(slope_deg);
    let (vn, vt) = frame.decompose(velocity);
    Ok((frame.distance(point), vn, vt))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ContactReport {
    /// Penetration depth, positive inside the ground.
    pub depth: f64,
    pub normal_force: f64,
    /// Signed along the ground tangent.
    pub tangential_force: f64,
    pub in_contact: bool,
}

/// Cartesian force on a point plus its local linearization.
#[derive(Debug, Clone, Copy)]
pub struct ContactForce {
    pub report: ContactReport,
    pub force: Vector2<f64>,
    /// `-dF/dx`
    pub stiffness: Matrix2<f64>,
    /// `-dF/dv`
    pub damping: Matrix2<f64>,
}

pub fn contact_forces(
    ground: &GroundSpec,
    position: &Vector2<f64>,
    velocity: &Vector2<f64>,
) -> ContactForce {
    contact_forces_in(ground, &ground.frame(), position, velocity)
}

pub(crate) fn contact_forces_in(
    ground: &GroundSpec,
    frame: &SlopeFrame,
    position: &Vector2<f64>,
    velocity: &Vector2<f64>,
) -> ContactForce {
    let depth = -frame.distance(position);
    if depth <= 0.0 {
        return ContactForce {
            report: ContactReport {
                depth,
                ..ContactReport::default()
            },
            force: Vector2::zeros(),
            stiffness: Matrix2::zeros(),
            damping: Matrix2::zeros(),
        };
    }
    let (vn, vt) = frame.decompose(velocity);
    let raw = ground.normal_stiffness * depth - ground.normal_damping * vn;
    // Non-sticking clamp: separation never pulls the point back down.
    let clamped = raw <= 0.0;
    let fn_ = raw.max(0.0);
    let ratio = vt / ground.friction_velocity;
    let th = ratio.tanh();
    let ft = -ground.friction * fn_ * th;
    let force = frame.normal * fn_ + frame.tangent * ft;

    let nn = frame.normal * frame.normal.transpose();
    let tn = frame.tangent * frame.normal.transpose();
    let tt = frame.tangent * frame.tangent.transpose();
    // Friction scales with the normal force, so it inherits its position and
    // normal-velocity dependence.
    let coupling = nn - tn * (ground.friction * th);
    let (stiffness, mut damping) = if clamped {
        (Matrix2::zeros(), Matrix2::zeros())
    } else {
        (coupling * ground.normal_stiffness, coupling * ground.normal_damping)
    };
    let sech2 = 1.0 - th * th;
    damping += tt * (ground.friction * fn_ * sech2 / ground.friction_velocity);

    ContactForce {
        report: ContactReport {
            depth,
            normal_force: fn_,
            tangential_force: ft,
            in_contact: true,
        },
        force,
        stiffness,
        damping,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn separated_point_feels_nothing() {
        let g = GroundSpec::flat();
        let c = contact_forces(&g, &Vector2::new(0.3, 0.01), &Vector2::new(1.0, -2.0));
        assert_eq!(c.force, Vector2::zeros());
        assert!(!c.report.in_contact);
        let touching = contact_forces(&g, &Vector2::new(0.0, 0.0), &Vector2::zeros());
        assert_eq!(touching.report.normal_force, 0.0);
    }

    #[test]
    fn fast_sliding_saturates_friction() {
        let g = GroundSpec::flat();
        let c = contact_forces(&g, &Vector2::new(0.0, -0.001), &Vector2::new(1.0, 0.0));
        let fn_ = c.report.normal_force;
        assert_relative_eq!(fn_, 100.0, epsilon = 1e-9);
        assert!((c.report.tangential_force.abs() - fn_).abs() / fn_ < 0.01);
        assert!(c.report.tangential_force < 0.0);
    }

    #[test]
    fn separating_fast_clamps_to_zero() {
        let g = GroundSpec::flat();
        let c = contact_forces(&g, &Vector2::new(0.0, -0.0005), &Vector2::new(0.0, 5.0));
        assert_eq!(c.report.normal_force, 0.0);
        assert_eq!(c.report.tangential_force, 0.0);
        assert_eq!(c.stiffness, Matrix2::zeros());
    }

    #[test]
    fn slope_distances() {
        let flat = slope_transform(0.0, &Vector2::new(0.4, 0.1), &Vector2::zeros()).unwrap();
        assert_relative_eq!(flat.0, 0.1, epsilon = 1e-15);

        let a = 3.0_f64.to_radians();
        let on_plane = Vector2::new(2.0 * a.cos(), 2.0 * a.sin());
        let d = slope_transform(3.0, &on_plane, &Vector2::zeros()).unwrap().0;
        assert!(d.abs() < 1e-15);

        let down = slope_transform(-5.0, &Vector2::new(1.0, 0.0), &Vector2::zeros()).unwrap().0;
        assert_relative_eq!(down, 5.0_f64.to_radians().sin(), epsilon = 1e-15);
        assert_relative_eq!(down, 0.0872, epsilon = 1e-4);

        assert!(slope_transform(90.0, &Vector2::zeros(), &Vector2::zeros()).is_err());
    }

    #[test]
    fn tangent_velocity_follows_slope() {
        let a = 5.0_f64.to_radians();
        let along = Vector2::new(a.cos(), a.sin());
        let (_, vn, vt) = slope_transform(5.0, &Vector2::zeros(), &along).unwrap();
        assert!(vn.abs() < 1e-15);
        assert_relative_eq!(vt, 1.0, epsilon = 1e-15);
        assert_relative_eq!(SlopeFrame::new(5.0).height_at(1.0), a.tan(), epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_ground() {
        let mut g = GroundSpec::flat();
        g.friction_velocity = 0.0;
        assert!(g.validate().is_err());
        assert!(GroundSpec::flat().validate().is_ok());
    }

    proptest::proptest! {
        #[test]
        fn unilateral_and_inside_friction_cone(
            x in -1.0f64..1.0, z in -0.01f64..0.01,
            vx in -5.0f64..5.0, vz in -5.0f64..5.0,
            slope in -10.0f64..10.0, mu in 0.0f64..2.0,
        ) {
            let mut g = GroundSpec::flat().with_slope(slope);
            g.friction = mu;
            let c = contact_forces(&g, &Vector2::new(x, z), &Vector2::new(vx, vz));
            proptest::prop_assert!(c.report.normal_force >= 0.0);
            proptest::prop_assert!(c.report.tangential_force.abs() <= mu * c.report.normal_force + 1e-9);
            if c.report.depth <= 0.0 {
                proptest::prop_assert_eq!(c.report.normal_force, 0.0);
            }
        }
    }
}
