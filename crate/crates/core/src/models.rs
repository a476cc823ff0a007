//! Builders for the two robot variants sharing one morphology: the passive
//! model (series-elastic knee/ankle muscles, ankle/foot springs, backdrivable
//! hip motor) and the torque model (stiff geared servos at hip, knee, ankle).

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::actuation::{
    ActionChannel, ActionSpace, ActuatorKind, ActuatorSpec, JointSpringSpec, Leg, MomentArm,
    MuscleKind, MuscleSpec,
};
use crate::dynamics::{Attachment, JointLimits, JointSpec, LinkSpec, RobotSpec, JOINT_COUNT, NDOF};
use crate::error::{Error, Result};

pub const GRAVITY: f64 = 9.81;

pub const PELVIS_MASS: f64 = 2.77;
pub const FEMUR: (f64, f64, f64) = (0.345, 1.4, 1.1e-2);
pub const TIBIA: (f64, f64, f64) = (0.447, 2.2e-1, 3.0e-3);
pub const ANKLE: (f64, f64, f64) = (0.036, 7.6e-2, 6.1e-5);
pub const TOE: (f64, f64, f64) = (0.072, 8.3e-2, 9.0e-5);

/// Nominal figures quoted alongside the link table; they disagree slightly
/// with the link sums and are only reported as warnings.
pub const NOMINAL_LEG_LENGTH: f64 = 0.78;
pub const NOMINAL_BODY_MASS: f64 = 6.38;

/// Hip rotor inertia of the 6:1 quasi-direct-drive motor.
pub const PASSIVE_HIP_ROTOR_INERTIA: f64 = 1.22e-2;
/// Rotor inertia of the 251:1 servos.
pub const SERVO_ROTOR_INERTIA: f64 = 22.83;
pub const SERVO_VISCOSITY: f64 = 5.0;
pub const FREE_FOOT_DAMPING: f64 = 0.01;
pub const LIMIT_STIFFNESS: f64 = 500.0;

/// Joint slots within one leg.
pub const HIP: usize = 0;
pub const KNEE: usize = 1;
pub const ANKLE_JOINT: usize = 2;
pub const FOOT: usize = 3;
pub const JOINTS_PER_LEG: usize = 4;

pub fn joint_index(leg: Leg, slot: usize) -> usize {
    match leg {
        Leg::Right => slot,
        Leg::Left => JOINTS_PER_LEG + slot,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Passive,
    Torque,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Passive => "passive",
            ModelKind::Torque => "torque",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "passive" => Ok(ModelKind::Passive),
            "torque" => Ok(ModelKind::Torque),
            other => Err(Error::Config(format!("unknown model `{other}` (expected passive or torque)"))),
        }
    }
}

/// Standing pose parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialPose {
    /// Right hip flexed by +split, left by -split; ankles compensate so
    /// both feet start flat.
    pub hip_split: f64,
}

impl Default for InitialPose {
    fn default() -> Self {
        Self { hip_split: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub kind: ModelKind,
    pub robot: RobotSpec,
    #[serde(default)]
    pub muscles: Vec<MuscleSpec>,
    #[serde(default)]
    pub joint_springs: Vec<JointSpringSpec>,
    pub actuators: Vec<ActuatorSpec>,
    pub action_space: ActionSpace,
    /// Soft joint-limit penalty, N m / rad.
    pub limit_stiffness: f64,
    /// Extra ground-contact points on the pelvis and knees. They keep a
    /// fallen robot above the ground but are not observed.
    #[serde(default)]
    pub body_contacts: Vec<Attachment>,
    pub initial_pose: InitialPose,
    pub provenance: Vec<String>,
}

fn links() -> Vec<LinkSpec> {
    let mut out = Vec::with_capacity(JOINT_COUNT);
    for side in ["r", "l"] {
        for (name, (length, mass, inertia)) in
            [("femur", FEMUR), ("tibia", TIBIA), ("ankle", ANKLE), ("toe", TOE)]
        {
            out.push(LinkSpec::centered(&format!("{name}_{side}"), length, mass, inertia));
        }
    }
    out
}

fn joints() -> Vec<JointSpec> {
    let mut out = Vec::with_capacity(JOINT_COUNT);
    for (leg, side) in [(Leg::Right, "r"), (Leg::Left, "l")] {
        let base = joint_index(leg, 0);
        let spec = |slot: usize, name: &str, sign: f64, offset: f64, limits: (f64, f64)| JointSpec {
            name: format!("{name}_{side}"),
            parent: if slot == HIP { None } else { Some(base + slot - 1) },
            child: base + slot,
            axis_sign: sign,
            angle_offset: offset,
            rotor_inertia: 0.0,
            viscous_damping: 0.0,
            limits: Some(JointLimits {
                lower: limits.0,
                upper: limits.1,
            }),
        };
        out.push(spec(HIP, "hip", 1.0, 0.0, (-2.6, 2.6)));
        // Knee flexion swings the shank backwards.
        out.push(spec(KNEE, "knee", -1.0, 0.0, (0.0, 2.6)));
        out.push(spec(ANKLE_JOINT, "ankle", 1.0, 0.0, (-1.0, 1.0)));
        // The toe segment points forward in the reference pose.
        out.push(spec(FOOT, "foot", 1.0, FRAC_PI_2, (-1.0, 1.0)));
    }
    out
}

fn robot() -> RobotSpec {
    let mut contact_points = Vec::new();
    for (leg, side) in [(Leg::Right, "r"), (Leg::Left, "l")] {
        contact_points.push(Attachment {
            name: format!("heel_{side}"),
            link: joint_index(leg, ANKLE_JOINT),
            distance: ANKLE.0,
        });
        contact_points.push(Attachment {
            name: format!("toe_{side}"),
            link: joint_index(leg, FOOT),
            distance: TOE.0,
        });
    }
    RobotSpec {
        pelvis: LinkSpec {
            name: "pelvis".into(),
            length: 0.0,
            mass: PELVIS_MASS,
            inertia: 0.0,
            com_offset: 0.0,
        },
        links: links(),
        joints: joints(),
        gravity: GRAVITY,
        contact_points,
    }
}

fn body_contacts() -> Vec<Attachment> {
    let mut out = vec![Attachment {
        name: "pelvis".into(),
        link: joint_index(Leg::Right, HIP),
        distance: 0.0,
    }];
    for (leg, side) in [(Leg::Right, "r"), (Leg::Left, "l")] {
        out.push(Attachment {
            name: format!("knee_{side}"),
            link: joint_index(leg, HIP),
            distance: FEMUR.0,
        });
    }
    out
}

fn provenance(kind: ModelKind) -> Vec<String> {
    let mut p = vec![
        "links: length/mass/inertia table, com at mid-length (default)".to_string(),
        "pelvis pitch locked: coordinate omitted".to_string(),
        "joint limits: soft penalty, ranges are simulator defaults".to_string(),
    ];
    match kind {
        ModelKind::Passive => p.extend([
            "VAS 8000 N/m 100 N s/m; GAS 3000 N/m 100 N s/m".to_string(),
            "ankle spring 100 N m/rad 0.1 N m s/rad; foot 10 N m/rad 0.2 N m s/rad".to_string(),
            "hip rotor inertia 1.22e-2 kg m^2 (6:1 reduction)".to_string(),
            "moment arms: VAS knee 0.05; GAS knee 0.03, ankle 0.05 (default)".to_string(),
        ]),
        ModelKind::Torque => p.extend([
            "hip/knee/ankle rotor inertia 22.83 kg m^2 (251:1 reduction)".to_string(),
            format!("servo viscosity {SERVO_VISCOSITY} N m s/rad (default)"),
            format!("foot joint unactuated, damping {FREE_FOOT_DAMPING} N m s/rad (default)"),
        ]),
    }
    p
}

fn channel(name: &str, unit: &str, candidates: &[f64]) -> ActionChannel {
    ActionChannel {
        name: name.into(),
        unit: unit.into(),
        candidates: candidates.to_vec(),
    }
}

pub fn passive_action_space() -> ActionSpace {
    ActionSpace {
        channels: vec![
            channel("f_vas", "N", &[400.0, 0.0, -400.0]),
            channel("f_gas", "N", &[0.0, -400.0]),
            channel("tau", "N m", &[24.0, 18.0, -18.0, -24.0]),
        ],
    }
}

pub fn torque_action_space() -> ActionSpace {
    ActionSpace {
        channels: vec![
            channel("tau_hip", "N m", &[753.0, 502.0, -502.0, -753.0]),
            channel("tau_knee", "N m", &[502.0, 0.0, -251.0]),
            channel("tau_ankle", "N m", &[251.0, 0.0]),
        ],
    }
}

/// Path length in the reference pose; the springs are slack there.
const VAS_REFERENCE_LENGTH: f64 = 0.30;
const GAS_REFERENCE_LENGTH: f64 = 0.40;

pub fn build_passive_model() -> ModelBundle {
    let mut robot = robot();
    let mut muscles = Vec::new();
    let mut joint_springs = Vec::new();
    let mut actuators = Vec::new();
    for (leg, side) in [(Leg::Right, "r"), (Leg::Left, "l")] {
        let hip = joint_index(leg, HIP);
        let knee = joint_index(leg, KNEE);
        let ankle = joint_index(leg, ANKLE_JOINT);
        let foot = joint_index(leg, FOOT);
        robot.joints[hip].rotor_inertia = PASSIVE_HIP_ROTOR_INERTIA;

        let vas = muscles.len();
        muscles.push(MuscleSpec {
            name: format!("VAS_{side}"),
            kind: MuscleKind::Vastus,
            stiffness: 8000.0,
            damping: 100.0,
            moment_arms: vec![MomentArm {
                joint: knee,
                arm: 0.05,
                sign: -1.0,
            }],
            rest_length: VAS_REFERENCE_LENGTH,
            reference_length: VAS_REFERENCE_LENGTH,
            unilateral: false,
            action_gain: 1.0,
        });
        let gas = muscles.len();
        muscles.push(MuscleSpec {
            name: format!("GAS_{side}"),
            kind: MuscleKind::Gastrocnemius,
            stiffness: 3000.0,
            damping: 100.0,
            moment_arms: vec![
                MomentArm {
                    joint: knee,
                    arm: 0.03,
                    sign: 1.0,
                },
                MomentArm {
                    joint: ankle,
                    arm: 0.05,
                    sign: -1.0,
                },
            ],
            rest_length: GAS_REFERENCE_LENGTH,
            reference_length: GAS_REFERENCE_LENGTH,
            unilateral: true,
            action_gain: -1.0,
        });
        joint_springs.push(JointSpringSpec {
            name: format!("ankle_{side}"),
            joint: ankle,
            stiffness: 100.0,
            damping: 0.1,
            rest_angle: 0.0,
        });
        joint_springs.push(JointSpringSpec {
            name: format!("foot_{side}"),
            joint: foot,
            stiffness: 10.0,
            damping: 0.2,
            rest_angle: 0.0,
        });
        actuators.push(ActuatorSpec {
            name: format!("vas_{side}"),
            leg,
            channel: 0,
            kind: ActuatorKind::Muscle { muscle: vas },
        });
        actuators.push(ActuatorSpec {
            name: format!("gas_{side}"),
            leg,
            channel: 1,
            kind: ActuatorKind::Muscle { muscle: gas },
        });
        actuators.push(ActuatorSpec {
            name: format!("hip_{side}"),
            leg,
            channel: 2,
            kind: ActuatorKind::Motor { joint: hip },
        });
    }
    ModelBundle {
        kind: ModelKind::Passive,
        robot,
        muscles,
        joint_springs,
        actuators,
        action_space: passive_action_space(),
        limit_stiffness: LIMIT_STIFFNESS,
        body_contacts: body_contacts(),
        initial_pose: InitialPose::default(),
        provenance: provenance(ModelKind::Passive),
    }
}

pub fn build_torque_model() -> ModelBundle {
    let mut robot = robot();
    let mut actuators = Vec::new();
    for (leg, side) in [(Leg::Right, "r"), (Leg::Left, "l")] {
        for (channel, (slot, name)) in [(HIP, "hip"), (KNEE, "knee"), (ANKLE_JOINT, "ankle")]
            .into_iter()
            .enumerate()
        {
            let joint = joint_index(leg, slot);
            robot.joints[joint].rotor_inertia = SERVO_ROTOR_INERTIA;
            robot.joints[joint].viscous_damping = SERVO_VISCOSITY;
            actuators.push(ActuatorSpec {
                name: format!("{name}_{side}"),
                leg,
                channel,
                kind: ActuatorKind::Motor { joint },
            });
        }
        robot.joints[joint_index(leg, FOOT)].viscous_damping = FREE_FOOT_DAMPING;
    }
    ModelBundle {
        kind: ModelKind::Torque,
        robot,
        muscles: Vec::new(),
        joint_springs: Vec::new(),
        actuators,
        action_space: torque_action_space(),
        limit_stiffness: LIMIT_STIFFNESS,
        body_contacts: body_contacts(),
        initial_pose: InitialPose::default(),
        provenance: provenance(ModelKind::Torque),
    }
}

pub fn build_model(kind: ModelKind) -> ModelBundle {
    match kind {
        ModelKind::Passive => build_passive_model(),
        ModelKind::Torque => build_torque_model(),
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

pub fn validate(bundle: &ModelBundle) -> ValidationReport {
    let mut report = ValidationReport::default();
    let err = |report: &mut ValidationReport, r: Result<()>| {
        if let Err(e) = r {
            report.errors.push(e.to_string());
        }
    };
    err(&mut report, bundle.robot.validate());
    for m in &bundle.muscles {
        err(&mut report, m.validate());
        for arm in &m.moment_arms {
            if arm.joint >= JOINT_COUNT {
                report.errors.push(format!("muscle `{}`: unknown joint {}", m.name, arm.joint));
            }
        }
    }
    for s in &bundle.joint_springs {
        err(&mut report, s.validate());
        if s.joint >= JOINT_COUNT {
            report.errors.push(format!("spring `{}`: unknown joint", s.name));
        }
    }
    if bundle.actuators.len() != 6 {
        report
            .errors
            .push(format!("expected 6 actuators, found {}", bundle.actuators.len()));
    }
    for a in &bundle.actuators {
        if a.channel >= bundle.action_space.channels.len() {
            report.errors.push(format!("actuator `{}`: unknown channel", a.name));
        }
        match a.kind {
            ActuatorKind::Muscle { muscle } if muscle >= bundle.muscles.len() => {
                report.errors.push(format!("actuator `{}`: unknown muscle", a.name))
            }
            ActuatorKind::Motor { joint } if joint >= JOINT_COUNT => {
                report.errors.push(format!("actuator `{}`: unknown joint", a.name))
            }
            _ => {}
        }
    }
    let n = bundle.action_space.cardinality();
    if n != 24 {
        report.errors.push(format!("expected 24 actions, found {n}"));
    }
    if bundle.robot.joints.len() + 2 != NDOF {
        report.errors.push("expected 10 generalized coordinates".into());
    }
    if !(bundle.limit_stiffness >= 0.0) {
        report.errors.push("limit stiffness must be non-negative".into());
    }

    let links = &bundle.robot.links;
    if links.len() >= 2 {
        let leg = links[0].length + links[1].length;
        if (leg - NOMINAL_LEG_LENGTH).abs() > 1e-9 {
            report.warnings.push(format!(
                "femur + tibia = {leg:.3} m differs from nominal leg length {NOMINAL_LEG_LENGTH} m"
            ));
        }
    }
    let mass = bundle.robot.total_mass();
    if (mass - NOMINAL_BODY_MASS).abs() > 1e-9 {
        report.warnings.push(format!(
            "link masses sum to {mass:.3} kg, nominal body mass is {NOMINAL_BODY_MASS} kg"
        ));
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn passive_model_parameters() {
        let b = build_passive_model();
        assert_relative_eq!(b.robot.total_mass(), 6.328, epsilon = 1e-12);
        assert_eq!(b.robot.joints[HIP].rotor_inertia, 1.22e-2);
        assert_eq!(b.robot.joints[joint_index(Leg::Left, HIP)].rotor_inertia, 1.22e-2);
        assert_eq!(b.muscles[0].stiffness, 8000.0);
        assert_eq!(b.muscles[1].stiffness, 3000.0);
        assert_eq!(b.joint_springs.len(), 4);
        assert_eq!(b.actuators.len(), 6);
    }

    #[test]
    fn torque_model_parameters() {
        let b = build_torque_model();
        assert_eq!(b.robot.joints[KNEE].rotor_inertia, 22.83);
        assert_eq!(b.action_space.channels[2].candidates, vec![251.0, 0.0]);
        assert!(b.muscles.is_empty() && b.joint_springs.is_empty());
        assert_eq!(b.robot.joints[FOOT].rotor_inertia, 0.0);
        assert_eq!(b.robot.joints[FOOT].viscous_damping, FREE_FOOT_DAMPING);
    }

    #[test]
    fn both_validate_with_table_warnings_only() {
        for kind in [ModelKind::Passive, ModelKind::Torque] {
            let report = validate(&build_model(kind));
            assert!(report.is_ok(), "{:?}", report.errors);
            assert_eq!(report.warnings.len(), 2, "{:?}", report.warnings);
        }
    }

    #[test]
    fn bundles_share_morphology() {
        let p = build_passive_model();
        let t = build_torque_model();
        assert_eq!(p.robot.links, t.robot.links);
        assert_eq!(p.robot.contact_points, t.robot.contact_points);
        assert_eq!(p.robot.pelvis, t.robot.pelvis);
        for (a, b) in p.robot.joints.iter().zip(&t.robot.joints) {
            assert_eq!(
                (&a.name, a.parent, a.child, a.axis_sign, a.angle_offset, &a.limits),
                (&b.name, b.parent, b.child, b.axis_sign, b.angle_offset, &b.limits)
            );
        }
    }

    #[test]
    fn validation_catches_broken_bundle() {
        let mut b = build_passive_model();
        b.actuators.pop();
        b.robot.links[0].mass = 0.0;
        let r = validate(&b);
        assert_eq!(r.errors.len(), 2, "{:?}", r.errors);
    }

    #[test]
    fn model_names_parse() {
        assert_eq!("passive".parse::<ModelKind>().unwrap(), ModelKind::Passive);
        assert!("hybrid".parse::<ModelKind>().is_err());
    }
}
