//! Per-episode trajectory log and its CSV schema.
//!
//! Columns, one row per control step (values at the end of the step):
//! `t, x, z, q_<joint>... , vx, vz, dq_<joint>..., a_<channel>...,
//! cmd_r_<channel>..., cmd_l_<channel>..., reward, r_v, r_h,
//! c_heel_r, c_toe_r, c_heel_l, c_toe_l, work, w_<actuator>...`.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use super::StepOutcome;
use crate::actuation::Action;
use crate::dynamics::{DofVector, SimState, NDOF};
use crate::error::{Error, Result};

pub const TRAJECTORY_SCHEMA: &str = "trajectory/v1";

const JOINTS: [&str; 8] = [
    "hip_r", "knee_r", "ankle_r", "foot_r", "hip_l", "knee_l", "ankle_l", "foot_l",
];
const CONTACTS: [&str; 4] = ["c_heel_r", "c_toe_r", "c_heel_l", "c_toe_l"];

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub q: DofVector,
    pub qdot: DofVector,
    pub action: Vec<usize>,
    pub commands_right: Vec<f64>,
    pub commands_left: Vec<f64>,
    pub reward: f64,
    pub r_v: f64,
    pub r_h: f64,
    pub contacts: [bool; 4],
    /// Per-actuator work during the step, J.
    pub work: Vec<f64>,
}

impl TrajectoryRow {
    /// Row for a finished control step.
    pub fn from_step(state: &SimState, action: &Action, outcome: &StepOutcome) -> Self {
        let info = &outcome.info;
        let mut contacts = [false; 4];
        for (slot, c) in contacts.iter_mut().zip(&info.contacts) {
            *slot = *c;
        }
        Self {
            t: state.t,
            q: state.q,
            qdot: state.qdot,
            action: action.indices.clone(),
            commands_right: info.commands.right.clone(),
            commands_left: info.commands.left.clone(),
            reward: outcome.reward,
            r_v: info.reward.velocity,
            r_h: info.reward.height,
            contacts,
            work: info.work.clone(),
        }
    }

    pub fn work_total(&self) -> f64 {
        self.work.iter().sum()
    }

    pub fn right_foot_down(&self) -> bool {
        self.contacts[0] || self.contacts[1]
    }

    pub fn left_foot_down(&self) -> bool {
        self.contacts[2] || self.contacts[3]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub channels: Vec<String>,
    pub actuators: Vec<String>,
    pub rows: Vec<TrajectoryRow>,
}

impl Trajectory {
    pub fn new(channels: Vec<String>, actuators: Vec<String>) -> Self {
        Self {
            channels,
            actuators,
            rows: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn cumulative_reward(&self) -> f64 {
        self.rows.iter().map(|r| r.reward).sum()
    }

    pub fn duration(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.t)
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["t".to_string(), "x".into(), "z".into()];
        h.extend(JOINTS.iter().map(|j| format!("q_{j}")));
        h.extend(["vx".to_string(), "vz".into()]);
        h.extend(JOINTS.iter().map(|j| format!("dq_{j}")));
        h.extend(self.channels.iter().map(|c| format!("a_{c}")));
        h.extend(self.channels.iter().map(|c| format!("cmd_r_{c}")));
        h.extend(self.channels.iter().map(|c| format!("cmd_l_{c}")));
        h.extend(["reward", "r_v", "r_h"].map(String::from));
        h.extend(CONTACTS.map(String::from));
        h.push("work".into());
        h.extend(self.actuators.iter().map(|a| format!("w_{a}")));
        h
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(file)?;
        Ok(())
    }

    pub fn write_to<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        let mut rec: Vec<String> = Vec::new();
        for r in &self.rows {
            rec.clear();
            rec.push(r.t.to_string());
            rec.extend(r.q.iter().map(f64::to_string));
            rec.extend(r.qdot.iter().map(f64::to_string));
            rec.extend(r.action.iter().map(usize::to_string));
            rec.extend(r.commands_right.iter().map(f64::to_string));
            rec.extend(r.commands_left.iter().map(f64::to_string));
            rec.extend([r.reward, r.r_v, r.r_h].map(|v| v.to_string()));
            rec.extend(r.contacts.map(|c| u8::from(c).to_string()));
            rec.push(r.work_total().to_string());
            rec.extend(r.work.iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = csv::Reader::from_reader(file);
        let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
        let strip = |prefix: &str| -> Vec<String> {
            header
                .iter()
                .filter_map(|h| h.strip_prefix(prefix).map(String::from))
                .collect()
        };
        let channels = strip("a_");
        let actuators = strip("w_");
        let nc = channels.len();
        let na = actuators.len();
        let expected = 1 + 2 * NDOF + 3 * nc + 3 + 4 + 1 + na;
        if header.len() != expected {
            return Err(Error::Config(format!(
                "{}: unexpected trajectory header ({} columns, expected {expected})",
                path.display(),
                header.len()
            )));
        }
        let mut rows = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let num = |i: usize| -> Result<f64> {
                record[i]
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("{}: column {i}: {e}", path.display())))
            };
            let mut i = 0;
            let mut take = |n: usize| -> Result<Vec<f64>> {
                let v = (i..i + n).map(&num).collect::<Result<Vec<_>>>();
                i += n;
                v
            };
            let t = take(1)?[0];
            let q = DofVector::from_vec(take(NDOF)?);
            let qdot = DofVector::from_vec(take(NDOF)?);
            let action = take(nc)?.into_iter().map(|v| v as usize).collect();
            let commands_right = take(nc)?;
            let commands_left = take(nc)?;
            let rw = take(3)?;
            let c = take(4)?;
            let _total = take(1)?;
            let work = take(na)?;
            rows.push(TrajectoryRow {
                t,
                q,
                qdot,
                action,
                commands_right,
                commands_left,
                reward: rw[0],
                r_v: rw[1],
                r_h: rw[2],
                contacts: [c[0] != 0.0, c[1] != 0.0, c[2] != 0.0, c[3] != 0.0],
                work,
            });
        }
        Ok(Self {
            channels,
            actuators,
            rows,
        })
    }
}
