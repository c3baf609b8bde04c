//! Geometry, clearance graph, planner and closed-loop simulation run end to end.

use nalgebra::Vector6;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use super::metrics::{metrics, MetricsReport, TelemetryRow, TrajectoryRow, STATUS_INFEASIBLE, STATUS_MAX_ITER, STATUS_OPTIMAL};
use super::scenario::Scenario;
use crate::control::Controller;
use crate::dynamics::{step, Disturbance};
use crate::error::{Error, Result};
use crate::geometry::Superquadric2;
use crate::planner::{
    forward_kinematics_eef, integrate_em, min_gap, target_pose, AttractorPose, PlannedTrajectory, PlannerState, Schedule,
    TrajectoryStatus,
};
use crate::qp::QpStatus;
use crate::voronoi::{build_cells, build_graph, dump, solve_path, PathResult, SolutionPath};

/// Obstacle representation used for planning and control.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    /// The scenario shapes as given.
    Sq,
    /// Every shape replaced by its circumscribing ellipse.
    Ellipse,
}

impl Mode {
    pub fn apply(self, footprints: &[Superquadric2]) -> Vec<Superquadric2> {
        match self {
            Mode::Sq => footprints.to_vec(),
            Mode::Ellipse => footprints.iter().map(|f| f.circumscribing_ellipse()).collect(),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Sq => "sq",
            Mode::Ellipse => "ellipse",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sq" => Ok(Mode::Sq),
            "ellipse" => Ok(Mode::Ellipse),
            other => Err(Error::validation("mode", format!("unknown mode `{other}`, expected sq or ellipse"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PlanOutput {
    pub mode: Mode,
    pub footprints: Vec<Superquadric2>,
    pub path: SolutionPath,
    pub trajectory: PlannedTrajectory,
    pub rows: Vec<TrajectoryRow>,
    pub voronoi: String,
    pub plan_time: f64,
}

#[derive(Clone, Debug, Default)]
pub struct SimOutput {
    pub telemetry: Vec<TelemetryRow>,
    /// Human-readable notes on ticks where constraints were dropped or the QP failed.
    pub events: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub plan: PlanOutput,
    pub sim: SimOutput,
    pub report: MetricsReport,
}

/// Clearance graph, path search and trajectory integration. Only the integration is timed.
pub fn plan(s: &Scenario, mode: Mode) -> Result<PlanOutput> {
    let footprints = mode.apply(&s.footprints);
    let cells = build_cells(&footprints, &s.world).map_err(|e| e.in_stage("voronoi"))?;
    let graph = build_graph(&cells);
    let params = &s.planner;
    let (eef, heading) = forward_kinematics_eef(&s.start, &params.vehicle);
    let path = match solve_path(&graph, &eef, &s.goal).map_err(|e| e.in_stage("search"))? {
        PathResult::Found(p) => p,
        PathResult::NoPath => return Err(Error::Construction("no path between start and goal".into()).in_stage("search")),
    };
    let voronoi = dump(&s.world, &cells, &graph, Some(&path));
    let schedule = Schedule::from_path(&AttractorPose::new(eef.x, eef.y, heading), &path, &s.goal, params.heading, params.waypoint_spacing)
        .map_err(|e| e.in_stage("planner"))?;
    let z0 = PlannerState::facing(s.start, &footprints, params);
    let t0 = Instant::now();
    let trajectory = integrate_em(&z0, &schedule, &footprints, params).map_err(|e| e.in_stage("planner"))?;
    let plan_time = t0.elapsed().as_secs_f64();
    if let TrajectoryStatus::Aborted { s, reason } = &trajectory.status {
        return Err(Error::LostEquilibrium { s: *s, reason: reason.clone() }.in_stage("planner"));
    }
    let rows = trajectory_rows(&trajectory, &s.footprints, s)?;
    Ok(PlanOutput {
        mode,
        footprints,
        path,
        trajectory,
        rows,
        voronoi,
        plan_time,
    })
}

/// Planned samples with end-effector pose and clearance against the true shapes.
pub fn trajectory_rows(traj: &PlannedTrajectory, truth: &[Superquadric2], s: &Scenario) -> Result<Vec<TrajectoryRow>> {
    traj.samples
        .iter()
        .map(|x| {
            let (eef, heading) = forward_kinematics_eef(&x.z_sys, &s.planner.vehicle);
            Ok(TrajectoryRow {
                s: x.s,
                z: x.z_sys,
                u: x.u,
                eef,
                eef_heading: heading,
                gap: min_gap(&x.z_sys, truth, &s.planner),
            })
        })
        .collect()
}

/// Closed-loop run tracking the planned trajectory under the scenario wind.
pub fn simulate(s: &Scenario, plan: &PlanOutput) -> Result<SimOutput> {
    let solids = s.solids(&plan.footprints).map_err(|e| e.in_stage("simulation"))?;
    let dt = s.sim.dt;
    let start = plan.trajectory.samples.first().map(|x| x.z_sys).unwrap_or(s.start);
    let mut state = s.initial_state();
    state.q = Vector6::new(start[0], start[1], s.planner.h_t, 0.0, 0.0, start[2]);
    state.theta = nalgebra::Vector3::new(start[3], 0.0, start[4]);
    let mut ctrl = Controller::new(&state, s.gains.clone(), s.safety.clone(), s.model, s.planner.vehicle, solids, dt)
        .map_err(|e| e.in_stage("simulation"))?;
    let mut wind = Disturbance::new(s.disturbance, s.sim.seed);
    let opts = s.sim.options();
    let ticks = (s.duration() / dt).round() as usize;
    let mut out = SimOutput {
        telemetry: Vec::with_capacity(ticks),
        events: Vec::new(),
    };
    for k in 0..ticks {
        let t = k as f64 * dt;
        let target = target_pose(&plan.trajectory, t, &s.planner).map_err(|e| e.in_stage("simulation"))?;
        let tick = ctrl.tick(&state, &target.q, &target.theta).map_err(|e| e.in_stage("simulation"))?;
        let status = match tick.status {
            QpStatus::Optimal => STATUS_OPTIMAL,
            QpStatus::Infeasible => STATUS_INFEASIBLE,
            QpStatus::MaxIter => STATUS_MAX_ITER,
        };
        if tick.fallback {
            out.events.push(format!("t={} qp={:?} fallback", crate::format::num(t), tick.status));
        }
        if tick.dropped_pairs > 0 {
            out.events.push(format!("t={} dropped_pairs={}", crate::format::num(t), tick.dropped_pairs));
        }
        if tick.skipped_rows > 0 {
            out.events.push(format!("t={} skipped_rows={}", crate::format::num(t), tick.skipped_rows));
        }
        out.telemetry.push(TelemetryRow {
            t,
            q: state.q,
            theta: state.theta,
            thrust: tick.thrust,
            d_hat: tick.d_hat,
            min_h: tick.min_h,
            min_gap: tick.min_gap,
            status,
            fallback: tick.fallback,
        });
        let d = wind.sample(t);
        state = step(&state, &tick.thrust, &tick.arm, &d, dt, &s.model, &opts).map_err(|e| e.in_stage("simulation"))?;
    }
    Ok(out)
}

/// Plan, then simulate, then score.
pub fn run_pipeline(s: &Scenario, mode: Mode) -> Result<RunOutput> {
    let plan = plan(s, mode)?;
    let sim = simulate(s, &plan)?;
    let report = metrics(&plan.rows, &sim.telemetry, plan.plan_time).map_err(|e| e.in_stage("metrics"))?;
    Ok(RunOutput { plan, sim, report })
}

/// Plan only; the simulation fields of the report stay at their empty values.
pub fn run_plan(s: &Scenario, mode: Mode) -> Result<(PlanOutput, MetricsReport)> {
    let plan = plan(s, mode)?;
    let report = metrics(&plan.rows, &[], plan.plan_time).map_err(|e| e.in_stage("metrics"))?;
    Ok((plan, report))
}
