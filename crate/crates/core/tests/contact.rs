use approx::assert_relative_eq;
use biped_core::actuation::LegCommands;
use biped_core::contact::*;
use biped_core::env::{Env, EpisodeConfig, RewardConfig};
use biped_core::models::{build_passive_model, ANKLE, FEMUR, GRAVITY, PELVIS_MASS, TIBIA, TOE};
use nalgebra::Vector2;
use proptest::prelude::*;

fn v(x: f64, z: f64) -> Vector2<f64> {
    Vector2::new(x, z)
}

#[test]
fn separated_or_touching_points_feel_nothing() {
    let g = GroundSpec::flat();
    for z in [0.0, 1e-9, 0.3] {
        let c = contact_forces(&g, &v(0.2, z), &v(1.0, -2.0));
        assert_eq!(c.force, Vector2::zeros());
        assert!(!c.report.in_contact);
    }
}

#[test]
fn settled_passive_robot_carries_its_weight() {
    let mass = PELVIS_MASS + 2.0 * (FEMUR.1 + TIBIA.1 + ANKLE.1 + TOE.1);
    let weight = mass * GRAVITY;
    assert_relative_eq!(weight, 62.08, epsilon = 0.01);

    let mut env = Env::new(build_passive_model(), EpisodeConfig::default(), RewardConfig::default()).unwrap();
    let channels = env.bundle().action_space.channels.len();
    for _ in 0..40 {
        env.step_commands(LegCommands::zeros(channels)).unwrap();
    }
    let contacts = env.plant.contacts(env.state());
    let total: f64 = contacts.iter().map(|c| c.normal_force).sum();
    let depth = contacts.iter().map(|c| c.depth).fold(f64::MIN, f64::max);
    assert!((total - 62.08).abs() < 0.02 * 62.08, "total normal force {total}");
    assert!(depth > 0.0 && depth < 2e-3, "depth {depth}");
    assert!(env.state().qdot.norm() < 1e-2);
}

#[test]
fn fast_sliding_saturates_at_coulomb_bound() {
    let g = GroundSpec::flat();
    for vt in [1.0, -3.0] {
        let c = contact_forces(&g, &v(0.0, -1e-3), &v(vt, 0.0));
        let bound = g.friction * c.report.normal_force;
        assert!(c.report.normal_force > 0.0);
        assert!((c.report.tangential_force.abs() - bound).abs() < 0.01 * bound);
        assert_eq!(c.report.tangential_force.signum(), -vt.signum());
    }
}

#[test]
fn slope_distances() {
    let zero = v(0.0, 0.0);
    let (d, _, _) = slope_transform(0.0, &v(0.0, 0.1), &zero).unwrap();
    assert_relative_eq!(d, 0.1, epsilon = 1e-15);
    let x: f64 = 0.7;
    let on_plane = v(x, x * 3f64.to_radians().tan());
    let (d, _, _) = slope_transform(3.0, &on_plane, &zero).unwrap();
    assert!(d.abs() < 1e-15);
    let (d, _, _) = slope_transform(-5.0, &v(1.0, 0.0), &zero).unwrap();
    assert_relative_eq!(d, 5f64.to_radians().sin(), epsilon = 1e-15);
    assert_relative_eq!(d, 0.0872, epsilon = 1e-4);
    assert!(slope_transform(90.0, &zero, &zero).is_err());

    let frame = SlopeFrame::new(3.0);
    assert!(frame.distance(&v(2.0, frame.height_at(2.0))).abs() < 1e-15);
    // Velocity along the slope is purely tangential.
    let (_, vn, vt) = slope_transform(3.0, &zero, &(frame.tangent * 2.0)).unwrap();
    assert!(vn.abs() < 1e-15);
    assert_relative_eq!(vt, 2.0, epsilon = 1e-15);
}

#[test]
fn dropped_point_never_rebounds_higher() {
    let g = GroundSpec::flat();
    let (m, dt, h0) = (0.5, 1e-5, 0.1);
    let (mut z, mut vz) = (h0, 0.0);
    let mut touched = false;
    let mut apex: f64 = 0.0;
    for _ in 0..(1.0 / dt) as usize {
        let f = contact_forces(&g, &v(0.0, z), &v(0.0, vz));
        touched |= f.report.in_contact;
        vz += dt * (f.force.y / m - GRAVITY);
        z += dt * vz;
        if touched {
            apex = apex.max(z);
        }
    }
    assert!(touched);
    assert!(apex <= h0, "rebound {apex}");
}

fn forces_at(g: &GroundSpec, p: Vector2<f64>, vel: Vector2<f64>) -> Vector2<f64> {
    contact_forces(g, &p, &vel).force
}

proptest! {
    #[test]
    fn forces_respect_the_friction_cone(
        alpha in -10.0f64..10.0,
        x in -1.0f64..1.0,
        z in -0.02f64..0.02,
        vx in -3.0f64..3.0,
        vz in -3.0f64..3.0,
    ) {
        let g = GroundSpec::flat().with_slope(alpha);
        let c = contact_forces(&g, &v(x, z), &v(vx, vz));
        let (fn_, ft) = g.frame().decompose(&c.force);
        prop_assert!(fn_ >= 0.0);
        prop_assert!(ft.abs() <= g.friction * fn_ + 1e-9);
        prop_assert!((fn_ - c.report.normal_force).abs() < 1e-9);
        if c.report.depth <= 0.0 {
            prop_assert_eq!(c.force, Vector2::zeros());
        }
    }

    #[test]
    fn linearization_matches_finite_differences(
        alpha in -5.0f64..5.0,
        x in -0.5f64..0.5,
        depth in 1e-3f64..1e-2,
        vn in -0.05f64..0.05,
        vt in -0.05f64..0.05,
    ) {
        let g = GroundSpec::flat().with_slope(alpha);
        let fr = g.frame();
        let p = v(x, fr.height_at(x)) - fr.normal * depth;
        let vel = fr.normal * vn + fr.tangent * vt;
        let c = contact_forces(&g, &p, &vel);
        prop_assume!(c.report.normal_force > 1.0);
        let h = 1e-7;
        for k in 0..2 {
            let mut e = Vector2::zeros();
            e[k] = h;
            let dx = -(forces_at(&g, p + e, vel) - forces_at(&g, p - e, vel)) / (2.0 * h);
            let dv = -(forces_at(&g, p, vel + e) - forces_at(&g, p, vel - e)) / (2.0 * h);
            for r in 0..2 {
                let sk = 1e-5 * (1.0 + c.stiffness.abs().max());
                let sd = 1e-5 * (1.0 + c.damping.abs().max());
                prop_assert!((c.stiffness[(r, k)] - dx[r]).abs() < sk, "stiffness {} vs {}", c.stiffness[(r, k)], dx[r]);
                prop_assert!((c.damping[(r, k)] - dv[r]).abs() < sd, "damping {} vs {}", c.damping[(r, k)], dv[r]);
            }
        }
    }
}
