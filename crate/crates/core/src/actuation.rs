//! Force-producing elements: series-elastic muscle-tendon units, passive
//! rotational joint springs, joint motors, soft joint limits, and decoding of
//! discrete actions into per-leg commands.
//!
//! Sign conventions: joint angles are flexion-positive (hip flexion, knee
//! flexion, ankle and toe dorsiflexion). A muscle's moment arm entry
//! `(joint, arm, sign)` means a tension `T` produces `sign * arm * T` on that
//! joint coordinate, and lengthens the tendon path at rate
//! `-sign * arm * qdot`. The vastus extends the knee (`sign = -1`); the
//! gastrocnemius flexes the knee (`+1`) and plantarflexes the ankle (`-1`).

use serde::{Deserialize, Serialize};

use crate::dynamics::{DofMatrix, DofVector, ElasticElement, RobotSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MuscleKind {
    #[serde(rename = "VAS")]
    Vastus,
    #[serde(rename = "GAS")]
    Gastrocnemius,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentArm {
    pub joint: usize,
    /// meters
    pub arm: f64,
    pub sign: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuscleSpec {
    pub name: String,
    pub kind: MuscleKind,
    /// Series spring constant, N/m.
    pub stiffness: f64,
    /// N s/m
    pub damping: f64,
    pub moment_arms: Vec<MomentArm>,
    /// Path length at which the spring is slack, m.
    pub rest_length: f64,
    /// Path length in the all-zero reference pose, m.
    pub reference_length: f64,
    /// Tension-only (a wire that cannot push).
    pub unilateral: bool,
    /// Maps a signed action value to tension demand: `tension = action_gain * value`.
    /// The vastus cylinder pushes and pulls (+1); the gastrocnemius table lists
    /// pulling demand as negative values (-1).
    pub action_gain: f64,
}

impl MuscleSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidSpec(format!("muscle `{}`: {what}", self.name)));
        if !(self.stiffness > 0.0) {
            return bad("spring constant must be positive");
        }
        if !(self.damping >= 0.0) {
            return bad("damping must be non-negative");
        }
        if self.moment_arms.is_empty() || self.moment_arms.iter().any(|m| m.arm == 0.0) {
            return bad("moment arms must be nonzero");
        }
        if self.kind == MuscleKind::Gastrocnemius && !self.unilateral {
            return bad("the gastrocnemius is tension-only");
        }
        Ok(())
    }

    /// Generalized direction `a` with `tau = a * T` and `dL/dq = -a`.
    pub fn direction(&self) -> DofVector {
        let mut a = DofVector::zeros();
        for m in &self.moment_arms {
            a[RobotSpec::coord(m.joint)] += m.sign * m.arm;
        }
        a
    }

    pub fn path_length(&self, q: &DofVector) -> f64 {
        self.reference_length - self.direction().dot(q)
    }

    pub fn path_velocity(&self, qdot: &DofVector) -> f64 {
        -self.direction().dot(qdot)
    }

    pub fn tension_demand(&self, action_value: f64) -> f64 {
        self.action_gain * action_value
    }
}

impl ElasticElement for MuscleSpec {
    fn elastic_energy(&self, q: &DofVector) -> f64 {
        let stretch = self.path_length(q) - self.rest_length;
        if self.unilateral && stretch < 0.0 {
            0.0
        } else {
            0.5 * self.stiffness * stretch * stretch
        }
    }
}

/// Tendon tension from actuator demand plus the series spring-damper path.
/// Tension-only muscles clamp at zero.
pub fn muscle_force(spec: &MuscleSpec, path_length: f64, path_velocity: f64, action_value: f64) -> f64 {
    let raw = spec.tension_demand(action_value)
        + spec.stiffness * (path_length - spec.rest_length)
        + spec.damping * path_velocity;
    if spec.unilateral {
        raw.max(0.0)
    } else {
        raw
    }
}

/// Joint torques produced by a tendon tension.
pub fn muscle_to_generalized(spec: &MuscleSpec, tension: f64) -> DofVector {
    spec.direction() * tension
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSpringSpec {
    pub name: String,
    pub joint: usize,
    /// N m / rad
    pub stiffness: f64,
    /// N m s / rad
    pub damping: f64,
    pub rest_angle: f64,
}

impl JointSpringSpec {
    pub fn validate(&self) -> Result<()> {
        if self.stiffness >= 0.0 && self.damping >= 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidSpec(format!("joint spring `{}`: negative coefficient", self.name)))
        }
    }
}

impl ElasticElement for JointSpringSpec {
    fn elastic_energy(&self, q: &DofVector) -> f64 {
        let d = q[RobotSpec::coord(self.joint)] - self.rest_angle;
        0.5 * self.stiffness * d * d
    }
}

pub fn joint_spring_torque(spec: &JointSpringSpec, angle: f64, rate: f64) -> f64 {
    -spec.stiffness * (angle - spec.rest_angle) - spec.damping * rate
}

/// Net joint torque of a geared motor: the command minus reflected viscosity.
pub fn servo_torque(commanded: f64, rate: f64, viscous_damping: f64) -> f64 {
    commanded - viscous_damping * rate
}

/// Stiff one-sided penalty outside `[lower, upper]`.
pub fn joint_limit_torque(angle: f64, lower: f64, upper: f64, stiffness: f64) -> f64 {
    if angle < lower {
        stiffness * (lower - angle)
    } else if angle > upper {
        -stiffness * (angle - upper)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Leg {
    Right,
    Left,
}

/// What an action channel drives on each leg.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ActuatorKind {
    Muscle { muscle: usize },
    Motor { joint: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActuatorSpec {
    pub name: String,
    pub leg: Leg,
    pub channel: usize,
    pub kind: ActuatorKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionChannel {
    pub name: String,
    pub unit: String,
    /// Candidate values in table order.
    pub candidates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSpace {
    pub channels: Vec<ActionChannel>,
}

/// One index per channel; these are the right-leg indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Action {
    pub indices: Vec<usize>,
}

impl Action {
    pub fn new(indices: impl Into<Vec<usize>>) -> Self {
        Self {
            indices: indices.into(),
        }
    }
}

/// Channel values for both legs after antiphase mirroring.
#[derive(Debug, Clone, PartialEq)]
pub struct LegCommands {
    pub right: Vec<f64>,
    pub left: Vec<f64>,
}

impl LegCommands {
    pub fn leg(&self, leg: Leg) -> &[f64] {
        match leg {
            Leg::Right => &self.right,
            Leg::Left => &self.left,
        }
    }

    pub fn zeros(channels: usize) -> Self {
        Self {
            right: vec![0.0; channels],
            left: vec![0.0; channels],
        }
    }
}

impl ActionSpace {
    /// Number of distinct actions (Cartesian product of the channels).
    pub fn cardinality(&self) -> usize {
        self.channels.iter().map(|c| c.candidates.len()).product()
    }

    fn check(&self, action: &Action) -> Result<()> {
        if action.indices.len() != self.channels.len() {
            return Err(Error::Dimension {
                expected: self.channels.len(),
                actual: action.indices.len(),
            });
        }
        for (ch, &i) in self.channels.iter().zip(&action.indices) {
            if i >= ch.candidates.len() {
                return Err(Error::ActionOutOfRange {
                    channel: ch.name.clone(),
                    index: i,
                    len: ch.candidates.len(),
                });
            }
        }
        Ok(())
    }

    /// Row-major flat index, first channel most significant.
    pub fn to_flat(&self, action: &Action) -> Result<usize> {
        self.check(action)?;
        Ok(self
            .channels
            .iter()
            .zip(&action.indices)
            .fold(0, |acc, (ch, &i)| acc * ch.candidates.len() + i))
    }

    pub fn from_flat(&self, mut flat: usize) -> Result<Action> {
        let n = self.cardinality();
        if flat >= n {
            return Err(Error::ActionOutOfRange {
                channel: "flat".into(),
                index: flat,
                len: n,
            });
        }
        let mut indices = vec![0; self.channels.len()];
        for (slot, ch) in indices.iter_mut().zip(&self.channels).rev() {
            let len = ch.candidates.len();
            *slot = flat % len;
            flat /= len;
        }
        Ok(Action { indices })
    }

    /// Antiphase partner of an action: each index reflected within its list.
    pub fn mirror(&self, action: &Action) -> Result<Action> {
        self.check(action)?;
        Ok(Action {
            indices: self
                .channels
                .iter()
                .zip(&action.indices)
                .map(|(ch, &i)| ch.candidates.len() - 1 - i)
                .collect(),
        })
    }

    /// Largest absolute value any channel can emit.
    pub fn channel_bound(&self, channel: usize) -> f64 {
        self.channels[channel]
            .candidates
            .iter()
            .fold(0.0, |m: f64, v| m.max(v.abs()))
    }
}

/// Right leg takes `candidates[i]`; the left leg takes the reversed-list entry.
pub fn decode_action(space: &ActionSpace, action: &Action) -> Result<LegCommands> {
    let mirrored = space.mirror(action)?;
    let pick = |a: &Action| -> Vec<f64> {
        space
            .channels
            .iter()
            .zip(&a.indices)
            .map(|(ch, &i)| ch.candidates[i])
            .collect()
    };
    Ok(LegCommands {
        right: pick(action),
        left: pick(&mirrored),
    })
}

/// Rank-one stiffness and damping of a muscle for implicit integration.
pub(crate) fn muscle_linearization(spec: &MuscleSpec, tension: f64) -> Option<(DofMatrix, DofMatrix)> {
    if spec.unilateral && tension <= 0.0 {
        return None;
    }
    let a = spec.direction();
    let aat = a * a.transpose();
    Some((aat * spec.stiffness, aat * spec.damping))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn vas() -> MuscleSpec {
        MuscleSpec {
            name: "VAS_R".into(),
            kind: MuscleKind::Vastus,
            stiffness: 8000.0,
            damping: 100.0,
            moment_arms: vec![MomentArm {
                joint: 1,
                arm: 0.05,
                sign: -1.0,
            }],
            rest_length: 0.3,
            reference_length: 0.3,
            unilateral: false,
            action_gain: 1.0,
        }
    }

    fn gas() -> MuscleSpec {
        MuscleSpec {
            name: "GAS_R".into(),
            kind: MuscleKind::Gastrocnemius,
            stiffness: 3000.0,
            damping: 100.0,
            moment_arms: vec![
                MomentArm {
                    joint: 1,
                    arm: 0.03,
                    sign: 1.0,
                },
                MomentArm {
                    joint: 2,
                    arm: 0.05,
                    sign: -1.0,
                },
            ],
            rest_length: 0.4,
            reference_length: 0.4,
            unilateral: true,
            action_gain: -1.0,
        }
    }

    #[test]
    fn stretched_vastus_pulls_with_spring_force() {
        let m = vas();
        assert_relative_eq!(muscle_force(&m, 0.35, 0.0, 0.0), 400.0, epsilon = 1e-9);
        assert_eq!(muscle_force(&m, 0.3, 0.0, 0.0), 0.0);
        // Damping resists lengthening.
        assert_relative_eq!(muscle_force(&m, 0.3, 0.1, 0.0), 10.0, epsilon = 1e-12);
    }

    #[test]
    fn gastrocnemius_never_pushes() {
        let m = gas();
        assert_eq!(muscle_force(&m, 0.3, 0.0, 0.0), 0.0);
        assert_eq!(muscle_force(&m, 0.4, -1.0, 0.0), 0.0);
        // -400 in the action table is a 400 N pull.
        assert_relative_eq!(muscle_force(&m, 0.4, 0.0, -400.0), 400.0);
    }

    #[test]
    fn moment_arm_mapping() {
        let v = muscle_to_generalized(&vas(), 400.0);
        // 20 N m of knee extension (negative in flexion-positive coordinates).
        assert_relative_eq!(v[RobotSpec::coord(1)], -20.0, epsilon = 1e-12);
        assert_eq!(muscle_to_generalized(&vas(), 0.0), DofVector::zeros());
        let g = muscle_to_generalized(&gas(), 400.0);
        assert_relative_eq!(g[RobotSpec::coord(1)], 12.0, epsilon = 1e-12);
        assert_relative_eq!(g[RobotSpec::coord(2)], -20.0, epsilon = 1e-12);
    }

    #[test]
    fn path_length_follows_virtual_work() {
        // Knee flexion stretches the vastus.
        let m = vas();
        let mut q = DofVector::zeros();
        q[RobotSpec::coord(1)] = 1.0;
        assert_relative_eq!(m.path_length(&q), 0.35, epsilon = 1e-12);
        // Tension times path shortening equals joint work.
        let mut qd = DofVector::zeros();
        qd[RobotSpec::coord(1)] = -2.0;
        let t = 123.0;
        let power_joint = muscle_to_generalized(&m, t).dot(&qd);
        assert_relative_eq!(power_joint, -t * m.path_velocity(&qd), epsilon = 1e-12);
    }

    #[test]
    fn joint_springs() {
        let ankle = JointSpringSpec {
            name: "ankle".into(),
            joint: 2,
            stiffness: 100.0,
            damping: 0.1,
            rest_angle: 0.0,
        };
        let foot = JointSpringSpec {
            name: "foot".into(),
            joint: 3,
            stiffness: 10.0,
            damping: 0.2,
            rest_angle: 0.0,
        };
        assert_eq!(joint_spring_torque(&ankle, 0.0, 0.0), 0.0);
        assert_relative_eq!(joint_spring_torque(&ankle, 0.1, 0.0), -10.0, epsilon = 1e-12);
        assert_relative_eq!(joint_spring_torque(&foot, -0.2, 0.0), 2.0, epsilon = 1e-12);
        let mut q = DofVector::zeros();
        q[RobotSpec::coord(2)] = 0.3;
        assert_relative_eq!(ankle.elastic_energy(&q), 0.5 * 100.0 * 0.09, epsilon = 1e-12);
    }

    #[test]
    fn servo_and_limits() {
        assert_eq!(servo_torque(753.0, 0.0, 5.0), 753.0);
        assert_eq!(servo_torque(0.0, 2.0, 5.0), -10.0);
        assert_eq!(joint_limit_torque(0.5, 0.0, 2.6, 500.0), 0.0);
        assert_relative_eq!(joint_limit_torque(-0.1, 0.0, 2.6, 500.0), 50.0, epsilon = 1e-9);
        assert_relative_eq!(joint_limit_torque(2.7, 0.0, 2.6, 500.0), -50.0, epsilon = 1e-9);
    }

    fn space() -> ActionSpace {
        let ch = |name: &str, v: &[f64]| ActionChannel {
            name: name.into(),
            unit: "N".into(),
            candidates: v.to_vec(),
        };
        ActionSpace {
            channels: vec![
                ch("a", &[400.0, 0.0, -400.0]),
                ch("b", &[0.0, -400.0]),
                ch("c", &[24.0, 18.0, -18.0, -24.0]),
            ],
        }
    }

    #[test]
    fn flat_indexing_roundtrip_and_errors() {
        let s = space();
        assert_eq!(s.cardinality(), 24);
        for i in 0..24 {
            let a = s.from_flat(i).unwrap();
            assert_eq!(s.to_flat(&a).unwrap(), i);
        }
        assert_eq!(s.from_flat(1).unwrap().indices, vec![0, 0, 1]);
        assert!(s.from_flat(24).is_err());
        assert!(matches!(
            decode_action(&s, &Action::new([3, 0, 0])),
            Err(Error::ActionOutOfRange { index: 3, .. })
        ));
        assert!(decode_action(&s, &Action::new([0, 0])).is_err());
    }

    #[test]
    fn mirroring_is_involutive() {
        let s = space();
        for i in 0..24 {
            let a = s.from_flat(i).unwrap();
            assert_eq!(s.mirror(&s.mirror(&a).unwrap()).unwrap(), a);
        }
    }
}
