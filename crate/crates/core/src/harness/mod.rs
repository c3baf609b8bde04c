//! Scenario files, the end-to-end pipeline, benchmark metrics and file output.

mod emit;
mod metrics;
mod pipeline;
mod scenario;

pub use emit::{
    emit, metrics_from_dir, parse_telemetry_csv, parse_trajectory_csv, telemetry_csv, trajectory_csv, CONSTRAINTS_FILE,
    METRICS_FILE, TELEMETRY_FILE, TELEMETRY_HEADER, TRAJECTORY_FILE, TRAJECTORY_HEADER, VORONOI_FILE,
};
pub use metrics::{
    arc_length, jerkiness, metrics, MetricsReport, TelemetryRow, TrajectoryRow, STATUS_INFEASIBLE, STATUS_MAX_ITER,
    STATUS_OPTIMAL,
};
pub use pipeline::{plan, run_pipeline, run_plan, simulate, trajectory_rows, Mode, PlanOutput, RunOutput, SimOutput};
pub use scenario::{
    load_scenario, ControlSpec, GoalSpec, ModelSpec, ObstacleSpec, Scenario, SimSpec, StartSpec, WorldSpec, FORMAT_VERSION,
};

use crate::error::Result;

/// Outcome of one benchmark job.
#[derive(Debug)]
pub struct BenchEntry {
    pub name: String,
    pub mode: Mode,
    pub result: Result<MetricsReport>,
}

/// Runs every scenario in every mode on parallel workers; entries are sorted by name, then mode.
/// With `closed_loop` false only the planner runs.
pub fn bench(scenarios: &[Scenario], modes: &[Mode], closed_loop: bool) -> Vec<BenchEntry> {
    let mut out: Vec<BenchEntry> = std::thread::scope(|scope| {
        let handles: Vec<_> = scenarios
            .iter()
            .flat_map(|s| modes.iter().map(move |&m| (s, m)))
            .map(|(s, m)| {
                scope.spawn(move || BenchEntry {
                    name: s.name.clone(),
                    mode: m,
                    result: if closed_loop {
                        run_pipeline(s, m).map(|r| r.report)
                    } else {
                        run_plan(s, m).map(|(_, r)| r)
                    },
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("bench worker panicked")).collect()
    });
    out.sort_by(|a, b| a.name.cmp(&b.name).then(a.mode.cmp(&b.mode)));
    out
}
