//! Run metrics and multi-controller comparison.
//!
//! [`audit`] derives every number from log rows plus configuration timing,
//! so the same function serves the live run and an offline CSV check.

use std::fmt::Write as _;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::control::ControllerKind;
use crate::error::{Error, Result};
use crate::sim::{DisturbanceSchedule, LogRecord, ScrewState};

use super::config::ScenarioConfig;
use super::invariants::{InvariantLimits, InvariantMonitor};
use super::runner::{run_scenario, steps, RunOptions, RunOutput};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub controller: ControllerKind,
    pub steps: usize,
    pub t_engaged: Option<f64>,
    pub t_contact_lost: Option<f64>,
    pub t_disturbance: Option<f64>,
    pub t_release: Option<f64>,
    /// Peak workbench force from contact loss until the disturbance starts [N].
    pub peak_contact_loss_force: f64,
    /// Peak workbench force after the last release [N].
    pub peak_release_force: f64,
    /// Largest tool displacement from where the disturbance found it [m].
    pub max_phri_displacement: f64,
    pub min_e_tank: Option<f64>,
    pub min_lambda: f64,
    pub max_beta: f64,
    pub violations: usize,
    pub first_violation: Option<String>,
    /// Why the run stopped early, if it did.
    pub aborted: Option<String>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.aborted.is_none()
    }
}

fn peak(rows: &[LogRecord]) -> f64 {
    rows.iter().map(|r| r.f_contact_z.abs()).fold(0.0, f64::max)
}

/// Recompute a report from log rows.
pub fn audit(records: &[LogRecord], cfg: &ScenarioConfig) -> Result<RunReport> {
    let dt = cfg.sim.dt;
    let n = records.len();
    let span = DisturbanceSchedule::new(cfg.disturbance.entries.clone())?.span();
    let has_disturbance = !cfg.disturbance.entries.is_empty();

    let first = |pred: &dyn Fn(&LogRecord) -> bool| records.iter().position(pred);
    let engaged = first(&|r| r.screw_state == ScrewState::Unscrewing).map(|i| i.saturating_sub(1));
    let lost = first(&|r| matches!(r.screw_state, ScrewState::ContactLost | ScrewState::Done));
    let armed = lost.map(|i| i + steps(cfg.task.settle_time, dt)).filter(|&i| i < n);
    let released = armed.map(|i| if has_disturbance { i + steps(span, dt) } else { i }).filter(|&i| i < n);
    let at = |i: Option<usize>| i.map(|i| records[i].t);

    let peak_contact_loss_force = lost.map_or(0.0, |l| peak(&records[l..armed.unwrap_or(n)]));
    let peak_release_force = released.map_or(0.0, |r| peak(&records[r..]));
    let max_phri_displacement = armed.map_or(0.0, |a| {
        let p0 = Vector3::from(records[a].ee);
        records[a..].iter().map(|r| (Vector3::from(r.ee) - p0).norm()).fold(0.0, f64::max)
    });

    let mut monitor = InvariantMonitor::new(InvariantLimits::from_config(cfg));
    for r in records {
        monitor.check(r);
    }
    let e_tank: Vec<f64> = records.iter().map(|r| r.e_tank).filter(|e| !e.is_nan()).collect();
    Ok(RunReport {
        controller: cfg.controller.kind,
        steps: n,
        t_engaged: at(engaged),
        t_contact_lost: at(lost),
        t_disturbance: at(armed),
        t_release: at(released),
        peak_contact_loss_force,
        peak_release_force,
        max_phri_displacement,
        min_e_tank: (!e_tank.is_empty()).then(|| e_tank.iter().copied().fold(f64::INFINITY, f64::min)),
        min_lambda: records.iter().map(|r| r.lambda).fold(f64::INFINITY, f64::min),
        max_beta: records.iter().map(|r| r.beta).fold(f64::NEG_INFINITY, f64::max),
        violations: monitor.count(),
        first_violation: monitor.first().map(|v| format!("t = {}: {}", v.t, v.what)),
        aborted: None,
    })
}

/// `(1 − subject/baseline)·100`.
pub fn reduction_percent(subject: f64, baseline: f64) -> f64 {
    (1.0 - subject / baseline) * 100.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    pub subject: usize,
    pub baseline: usize,
    pub contact_loss_percent: f64,
    pub release_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub runs: Vec<RunReport>,
    pub reductions: Vec<Reduction>,
}

impl Comparison {
    /// Reductions of every run against the first impedance run (or the
    /// first run when there is none).
    pub fn from_reports(runs: Vec<RunReport>) -> Self {
        let baseline = runs.iter().position(|r| r.controller == ControllerKind::Impedance).unwrap_or(0);
        let reductions = (0..runs.len())
            .filter(|&i| i != baseline)
            .map(|i| Reduction {
                subject: i,
                baseline,
                contact_loss_percent: reduction_percent(
                    runs[i].peak_contact_loss_force,
                    runs[baseline].peak_contact_loss_force,
                ),
                release_percent: reduction_percent(runs[i].peak_release_force, runs[baseline].peak_release_force),
            })
            .collect();
        Comparison { runs, reductions }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Scenario(format!("cannot serialise report: {e}")))
    }

    /// Plain-text table.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let opt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.3}"));
        let _ = writeln!(
            s,
            "{:<13} {:>10} {:>10} {:>9} {:>9} {:>8} {:>8} {:>6}  status",
            "controller", "F_loss[N]", "F_rel[N]", "disp[m]", "minEtank", "minλ", "maxβ", "viol"
        );
        for r in &self.runs {
            let status = match (&r.aborted, r.violations) {
                (Some(why), _) => format!("aborted: {why}"),
                (None, 0) => "ok".into(),
                (None, _) => "violations".into(),
            };
            let _ = writeln!(
                s,
                "{:<13} {:>10.3} {:>10.3} {:>9.4} {:>9} {:>8.4} {:>8.3} {:>6}  {status}",
                r.controller.as_str(),
                r.peak_contact_loss_force,
                r.peak_release_force,
                r.max_phri_displacement,
                opt(r.min_e_tank),
                r.min_lambda,
                r.max_beta,
                r.violations,
            );
        }
        for red in &self.reductions {
            let _ = writeln!(
                s,
                "{} vs {}: contact-loss reduction {:.1} %, release reduction {:.1} %",
                self.runs[red.subject].controller,
                self.runs[red.baseline].controller,
                red.contact_loss_percent,
                red.release_percent
            );
        }
        s
    }
}

/// Run several configurations in parallel (one thread each).
pub fn run_many(cfgs: &[ScenarioConfig], opts: RunOptions) -> Vec<Result<RunOutput>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = cfgs.iter().map(|c| scope.spawn(move || run_scenario(c, opts))).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Scenario("scenario thread panicked".into()))))
            .collect()
    })
}

/// Run every controller of a configuration (`controller_kinds`) and compare.
pub fn compare(cfg: &ScenarioConfig, opts: RunOptions) -> Result<(Comparison, Vec<RunOutput>)> {
    let cfgs = cfg.controller_kinds().into_iter().map(|k| cfg.with_controller(k)).collect::<Result<Vec<_>>>()?;
    if cfgs.len() < 2 {
        return Err(Error::Scenario("comparison needs at least two controllers".into()));
    }
    let outputs = run_many(&cfgs, opts).into_iter().collect::<Result<Vec<_>>>()?;
    let cmp = Comparison::from_reports(outputs.iter().map(|o| o.report.clone()).collect());
    Ok((cmp, outputs))
}
