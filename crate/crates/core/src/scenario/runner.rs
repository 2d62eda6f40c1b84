//! Event-driven unscrewing scenario:
//! engage → unscrew → contact loss → settle → human interaction → recovery.
//!
//! Phase boundaries are events (engagement force reached, screw lost,
//! disturbance window over), so every controller meets the same physical
//! milestones whatever its transients.

use nalgebra::Vector3;

use crate::control::{ControlContext, Controller, ControllerKind, Diagnostics};
use crate::error::{Error, Result};
use crate::lie::{Frame, Transform, Wrench};
use crate::robot::{self, RobotState};
use crate::sim::{
    log, ContactState, DisturbanceSchedule, LogRecord, LogTable, ScrewProcess, ScrewState, SimWorld,
};

use super::config::ScenarioConfig;
use super::invariants::{InvariantLimits, InvariantMonitor};
use super::report::{audit, RunReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Engage,
    Unscrew,
    Settle,
    Interact,
    Recover,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Abort on the first invariant violation.
    pub strict: bool,
}

/// Row indices of the scenario events (row `i` is logged at `t = i·dt`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EventRows {
    pub engaged: Option<usize>,
    pub contact_lost: Option<usize>,
    pub armed: Option<usize>,
    pub released: Option<usize>,
}

/// Everything one run produced. `failure` holds a divergence or strict-mode
/// abort; records up to that point are kept.
#[derive(Debug)]
pub struct RunOutput {
    pub config: ScenarioConfig,
    pub records: Vec<LogRecord>,
    pub diagnostics: Vec<Diagnostics>,
    pub events: EventRows,
    pub report: RunReport,
    pub z_wb: f64,
    pub failure: Option<Error>,
}

impl RunOutput {
    pub fn dof(&self) -> usize {
        self.records.first().map_or(0, |r| r.q.len())
    }

    pub fn csv(&self) -> String {
        log::to_csv_string(&self.records, self.dof())
    }
}

pub(crate) fn steps(seconds: f64, dt: f64) -> usize {
    (seconds / dt).round() as usize
}

/// Workbench height for a configuration: the tool starts seated on the
/// screw head, `head_height` above the bench.
pub fn workbench_height(cfg: &ScenarioConfig) -> Result<f64> {
    let model = cfg.chain_model()?;
    Ok(robot::forward_kinematics(&model, &cfg.initial_q()).translation.z - cfg.screw.head_height)
}

struct Driver {
    kind: ControllerKind,
    phase: Phase,
    desired: Transform,
    rise_per_step: f64,
    planned_steps: usize,
    risen_steps: usize,
    unscrew_started: Option<usize>,
    end: Option<usize>,
    events: EventRows,
}

pub fn run_scenario(cfg: &ScenarioConfig, opts: RunOptions) -> Result<RunOutput> {
    cfg.validate()?;
    let model = cfg.chain_model()?;
    let n = model.dof();
    let dt = cfg.sim.dt;
    let q0 = cfg.initial_q();
    let start = robot::forward_kinematics(&model, &q0);
    let z_wb = start.translation.z - cfg.screw.head_height;

    let mut controller: Controller = cfg.build_controller(n)?;
    let screw = ScrewProcess::new(cfg.screw_params(), start.translation.z, ScrewState::Engaged)?;
    let contact = ContactState::new(z_wb, cfg.workbench)?;
    let schedule = DisturbanceSchedule::new(cfg.disturbance.entries.clone())?;
    let span_steps = steps(schedule.span(), dt);
    let has_disturbance = !schedule.entries().is_empty();
    let mut world = SimWorld::new(
        model.clone(),
        RobotState::at_rest(q0),
        screw,
        contact,
        schedule,
        dt,
        cfg.sim.max_joint_velocity,
    )?;

    let rise = cfg.screw.pitch * cfg.screw.speed;
    let mut d = Driver {
        kind: cfg.controller.kind,
        phase: Phase::Engage,
        desired: start,
        rise_per_step: rise * dt,
        planned_steps: steps(cfg.screw.nominal_length / rise, dt),
        risen_steps: 0,
        unscrew_started: None,
        end: None,
        events: EventRows::default(),
    };
    let settle_steps = steps(cfg.task.settle_time, dt);
    let recovery_steps = steps(cfg.task.recovery_time, dt);
    let engage_limit = steps(cfg.task.engage_timeout, dt);
    // generous bound on the unscrewing phase
    let unscrew_limit = 2 * d.planned_steps + steps(1.0, dt);

    let mut monitor = InvariantMonitor::new(InvariantLimits::from_config(cfg));
    let mut records = Vec::new();
    let mut diagnostics = Vec::new();
    let mut failure = None;
    let tracks_pose = d.kind != ControllerKind::Hybrid;

    let mut i = 0usize;
    loop {
        if d.end.is_some_and(|e| i >= e) {
            break;
        }
        // phase transitions at the start of the step
        match d.phase {
            Phase::Engage => {
                if i > engage_limit {
                    failure = Some(Error::Scenario(format!(
                        "engagement force {} N not reached within {} s",
                        cfg.task.f_engage, cfg.task.engage_timeout
                    )));
                    break;
                }
            }
            Phase::Unscrew => {
                if matches!(world.screw.state, ScrewState::ContactLost | ScrewState::Done) {
                    d.events.contact_lost = Some(i);
                    d.phase = Phase::Settle;
                } else if i - d.unscrew_started.unwrap_or(i) > unscrew_limit {
                    failure = Some(Error::Scenario("screw never finished unscrewing".into()));
                    break;
                }
            }
            Phase::Settle => {
                if i >= d.events.contact_lost.unwrap_or(0) + settle_steps {
                    d.events.armed = Some(i);
                    if has_disturbance {
                        world.disturbances.arm(world.time());
                        d.phase = Phase::Interact;
                    } else {
                        d.events.released = Some(i);
                        d.end = Some(i + recovery_steps);
                        d.phase = Phase::Recover;
                    }
                }
            }
            Phase::Interact => {
                if i >= d.events.armed.unwrap_or(0) + span_steps {
                    d.events.released = Some(i);
                    d.end = Some(i + recovery_steps);
                    d.phase = Phase::Recover;
                }
            }
            Phase::Recover => {}
        }
        if d.end.is_some_and(|e| i >= e) {
            break;
        }

        let sensed = world.sense();
        if d.phase == Phase::Engage && sensed.forces.screw >= cfg.task.f_engage {
            world.drill_on = true;
            d.events.engaged = Some(i);
            d.unscrew_started = Some(i);
            d.phase = Phase::Unscrew;
        }
        if tracks_pose {
            if d.phase == Phase::Engage {
                d.desired.translation.z -= cfg.task.engage_step;
            } else if d.unscrew_started.is_some() && d.risen_steps < d.planned_steps {
                d.desired.translation.z += d.rise_per_step;
                d.risen_steps += 1;
            }
        }

        let measured = Wrench::new(sensed.forces.force(), Vector3::zeros(), Frame::Base);
        let ctx = ControlContext::new(&model, &world.robot, d.desired, measured, dt);
        let out = match controller.compute(&ctx) {
            Ok(o) => o,
            Err(e) => {
                failure = Some(e);
                break;
            }
        };
        let diag = out.diagnostics;
        let p = sensed.pose.translation;
        let record = LogRecord {
            t: world.time(),
            q: world.robot.q.iter().copied().collect(),
            qdot: world.robot.qdot.iter().copied().collect(),
            ee: [p.x, p.y, p.z],
            ee_zd: d.desired.translation.z,
            f_ext_z: sensed.forces.force().z,
            f_contact_z: sensed.forces.contact,
            lambda: diag.lambda,
            beta: diag.beta,
            gamma: diag.gamma,
            k: diag.k,
            j: diag.j,
            e_tank: diag.e_tank,
            p_task: diag.p_task,
            e_total: diag.e_total,
            t_total: diag.t_total,
            u_total: diag.u_total,
            screw_state: world.screw.state,
        };
        let violations = monitor.check(&record);
        records.push(record);
        diagnostics.push(diag);
        if opts.strict {
            if let Some(v) = violations.first() {
                failure = Some(Error::InvariantViolation { time: v.t, what: v.what.clone() });
                break;
            }
        }
        if let Err(e) = world.advance(&out.tau, &sensed) {
            failure = Some(e);
            break;
        }
        i += 1;
    }

    // the report is computed from the logged (rounded) values so that it
    // matches an offline audit of the CSV exactly
    let csv = log::to_csv_string(&records, n);
    let logged = LogTable::parse(&csv)?.records()?;
    let mut report = audit(&logged, cfg)?;
    report.aborted = failure.as_ref().map(|e| e.to_string());
    Ok(RunOutput { config: cfg.clone(), records, diagnostics, events: d.events, report, z_wb, failure })
}
