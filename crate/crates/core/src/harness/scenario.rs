//! Versioned TOML scenario files.

use nalgebra::{Matrix3, Matrix6, Vector2, Vector3, Vector6};
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::control::{GainSet, Obstacle, SafetyParams};
use crate::dynamics::{Allocation, Integrator, ModelParams, RigidBody, SimOptions, VehicleState, WindProfile};
use crate::error::{Error, Result};
use crate::geometry::{closest_pair, Pose2, ProxyPair, Superquadric2, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::planner::{min_gap, PlannerParams, ZSys};
use crate::voronoi::WorldBox;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldSpec {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSpec {
    /// Semi-axes of the footprint [m].
    pub axes: [f64; 2],
    /// Footprint exponent; 1 is an ellipse, small values are boxy.
    pub eps: f64,
    pub center: [f64; 2],
    #[serde(default)]
    pub angle: f64,
    /// Extrusion height above the ground [m].
    pub height: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartSpec {
    /// `[x, y, psi, theta1, theta3]`.
    pub config: [f64; 5],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalSpec {
    /// End-effector goal position.
    pub point: [f64; 2],
}

/// Controller gains; matrices are given by their diagonals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlSpec {
    pub kp: [f64; 6],
    pub kd: [f64; 6],
    pub a0: [f64; 6],
    pub a1: [f64; 6],
    pub eps_dob: [f64; 6],
    pub t_lo: f64,
    pub t_hi: f64,
    pub alpha_co: f64,
    pub sigma_co: f64,
    pub q_qdot: [f64; 6],
    pub q_thetaddot: [f64; 3],
    pub gamma_q: [f64; 6],
    pub gamma_theta: [f64; 3],
}

impl Default for ControlSpec {
    fn default() -> Self {
        let g = GainSet::default();
        let s = SafetyParams::default();
        let d6 = |m: &Matrix6<f64>| std::array::from_fn(|i| m[(i, i)]);
        let d3 = |m: &Matrix3<f64>| std::array::from_fn(|i| m[(i, i)]);
        ControlSpec {
            kp: d6(g.kp()),
            kd: d6(g.kd()),
            a0: (*g.a0()).into(),
            a1: (*g.a1()).into(),
            eps_dob: (*g.eps()).into(),
            t_lo: s.t_lo,
            t_hi: s.t_hi,
            alpha_co: s.alpha_co,
            sigma_co: s.sigma_co,
            q_qdot: d6(&s.q_qdot),
            q_thetaddot: d3(&s.q_thetaddot),
            gamma_q: d6(&s.gamma_q),
            gamma_theta: d3(&s.gamma_theta),
        }
    }
}

impl ControlSpec {
    pub fn gains(&self) -> Result<GainSet> {
        let diag = |v: &[f64; 6]| Matrix6::from_diagonal(&Vector6::from_column_slice(v));
        GainSet::new(
            diag(&self.kp),
            diag(&self.kd),
            Vector6::from_column_slice(&self.a0),
            Vector6::from_column_slice(&self.a1),
            Vector6::from_column_slice(&self.eps_dob),
        )
        .map_err(|e| prefix("control", e))
    }

    pub fn safety(&self) -> Result<SafetyParams> {
        let d6 = |v: &[f64; 6]| Matrix6::from_diagonal(&Vector6::from_column_slice(v));
        let d3 = |v: &[f64; 3]| Matrix3::from_diagonal(&Vector3::from_column_slice(v));
        let s = SafetyParams {
            t_lo: self.t_lo,
            t_hi: self.t_hi,
            alpha_co: self.alpha_co,
            sigma_co: self.sigma_co,
            q_qdot: d6(&self.q_qdot),
            q_thetaddot: d3(&self.q_thetaddot),
            gamma_q: d6(&self.gamma_q),
            gamma_theta: d3(&self.gamma_theta),
        };
        s.validate().map_err(|e| prefix("control", e))?;
        Ok(s)
    }
}

/// Rewrites `gains.x` / `safety.x` validation paths to the scenario key `control.x`.
fn prefix(section: &str, e: Error) -> Error {
    match e {
        Error::Validation { path, msg } => {
            let tail = path.split_once('.').map(|(_, t)| t).unwrap_or(&path);
            Error::validation(format!("{section}.{tail}"), msg)
        }
        other => other,
    }
}

/// Plant and nominal model. The nominal copy defaults to the plant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub mass: f64,
    pub inertia: [f64; 3],
    pub gravity: f64,
    pub nominal_mass: Option<f64>,
    pub nominal_inertia: Option<[f64; 3]>,
    pub arm_length: f64,
    pub tilt: f64,
    pub torque_coeff: f64,
}

impl Default for ModelSpec {
    fn default() -> Self {
        let b = RigidBody::default();
        let a = Allocation::default();
        ModelSpec {
            mass: b.mass,
            inertia: std::array::from_fn(|i| b.inertia[(i, i)]),
            gravity: b.gravity,
            nominal_mass: None,
            nominal_inertia: None,
            arm_length: a.arm_length,
            tilt: a.tilt,
            torque_coeff: a.torque_coeff,
        }
    }
}

impl ModelSpec {
    pub fn params(&self) -> Result<ModelParams> {
        let body = |m: f64, j: &[f64; 3]| RigidBody {
            mass: m,
            inertia: Matrix3::from_diagonal(&Vector3::from_column_slice(j)),
            gravity: self.gravity,
        };
        let p = ModelParams {
            truth: body(self.mass, &self.inertia),
            nominal: body(self.nominal_mass.unwrap_or(self.mass), self.nominal_inertia.as_ref().unwrap_or(&self.inertia)),
            allocation: Allocation {
                arm_length: self.arm_length,
                tilt: self.tilt,
                torque_coeff: self.torque_coeff,
            },
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSpec {
    /// Control and integration period [s].
    pub dt: f64,
    /// Time simulated after the planned horizon `t_d` [s].
    pub settle: f64,
    pub seed: u64,
    pub integrator: Integrator,
    pub thrust_max: f64,
    pub arm_gain: f64,
    /// Vertical exponent of the obstacle extrusion.
    pub extrusion_eps: f64,
}

impl Default for SimSpec {
    fn default() -> Self {
        let o = SimOptions::default();
        SimSpec {
            dt: 0.005,
            settle: 5.0,
            seed: 0,
            integrator: o.integrator,
            thrust_max: o.thrust_max,
            arm_gain: o.arm_gain,
            extrusion_eps: 0.25,
        }
    }
}

impl SimSpec {
    pub fn options(&self) -> SimOptions {
        SimOptions {
            thrust_max: self.thrust_max,
            arm_gain: self.arm_gain,
            integrator: self.integrator,
        }
    }
}

/// On-disk layout. `world`, `start` and `goal` are optional here so their absence is
/// reported as a validation error on the field rather than a parse failure.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    format_version: u32,
    #[serde(default)]
    name: Option<String>,
    world: Option<WorldSpec>,
    #[serde(default)]
    obstacles: Vec<ObstacleSpec>,
    start: Option<StartSpec>,
    goal: Option<GoalSpec>,
    #[serde(default)]
    planner: PlannerParams,
    #[serde(default)]
    control: ControlSpec,
    #[serde(default)]
    model: ModelSpec,
    #[serde(default)]
    disturbance: WindProfile,
    #[serde(default)]
    sim: SimSpec,
}

/// A fully resolved and validated scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub world: WorldBox,
    pub obstacles: Vec<ObstacleSpec>,
    pub footprints: Vec<Superquadric2>,
    pub start: ZSys,
    pub goal: Vector2<f64>,
    pub planner: PlannerParams,
    pub control: ControlSpec,
    pub gains: GainSet,
    pub safety: SafetyParams,
    pub model: ModelParams,
    pub disturbance: WindProfile,
    pub sim: SimSpec,
}

impl Scenario {
    /// Parses and validates scenario text; `fallback_name` is used when the file has no `name`.
    pub fn from_toml(text: &str, fallback_name: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::validation("<toml>", e.message().to_string()))?;
        let file: ScenarioFile = serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
            let path = e.path().to_string();
            Error::validation(if path == "." { "<root>".to_string() } else { path }, e.inner().to_string())
        })?;
        if file.format_version != FORMAT_VERSION {
            return Err(Error::validation(
                "format_version",
                format!("unsupported version {}, expected {FORMAT_VERSION}", file.format_version),
            ));
        }
        let world_spec = file.world.ok_or_else(|| Error::validation("world", "required"))?;
        let start = file.start.ok_or_else(|| Error::validation("start", "required"))?;
        let goal = file.goal.ok_or_else(|| Error::validation("goal", "required"))?;
        let world = WorldBox::new(Vector2::from(world_spec.min), Vector2::from(world_spec.max))
            .map_err(|e| Error::validation("world", e.to_string()))?;

        let mut footprints = Vec::with_capacity(file.obstacles.len());
        for (k, o) in file.obstacles.iter().enumerate() {
            let sq = Superquadric2::new(o.axes[0], o.axes[1], o.eps, Pose2::new(o.angle, o.center[0], o.center[1]))
                .map_err(|e| Error::validation(format!("obstacles[{k}]"), e.to_string()))?;
            if !(o.height > 0.0 && o.height.is_finite()) {
                return Err(Error::validation(format!("obstacles[{k}].height"), "must be positive"));
            }
            if !world.contains_shape(&sq) {
                return Err(Error::validation(format!("obstacles[{k}]"), "must lie inside the world box"));
            }
            footprints.push(sq);
        }
        for i in 0..footprints.len() {
            for j in i + 1..footprints.len() {
                let (a, b) = (&footprints[i], &footprints[j]);
                let c = closest_pair(a, b, &ProxyPair::facing(a, b), DEFAULT_TOL, DEFAULT_MAX_ITER);
                if c.gap <= 0.0 {
                    return Err(Error::Overlap { i, j, gap: c.gap });
                }
            }
        }

        file.planner.validate()?;
        let gains = file.control.gains()?;
        let safety = file.control.safety()?;
        let model = file.model.params()?;
        file.disturbance.validate()?;
        if !(file.sim.dt > 0.0 && file.sim.dt <= 0.01) {
            return Err(Error::validation("sim.dt", "must lie in (0, 0.01]"));
        }
        if !(file.sim.settle >= 0.0 && file.sim.settle.is_finite()) {
            return Err(Error::validation("sim.settle", "must be non-negative"));
        }
        if !(file.sim.extrusion_eps > 0.0 && file.sim.extrusion_eps <= 2.0) {
            return Err(Error::validation("sim.extrusion_eps", "must lie in (0, 2]"));
        }

        let start_z = ZSys::from_column_slice(&start.config);
        if !start_z.iter().all(|v| v.is_finite()) {
            return Err(Error::validation("start.config", "must be finite"));
        }
        let gap = min_gap(&start_z, &footprints, &file.planner);
        if gap <= 0.0 {
            return Err(Error::validation("start.config", format!("vehicle starts in collision (gap {gap:.3e})")));
        }
        let goal_v = Vector2::from(goal.point);
        if !(goal_v.iter().all(|v| v.is_finite()) && world.contains_point(&goal_v)) {
            return Err(Error::validation("goal.point", "must lie inside the world box"));
        }
        for (k, sq) in footprints.iter().enumerate() {
            if sq.inside_outside(&goal_v)? <= 0.0 {
                return Err(Error::validation("goal.point", format!("lies inside obstacle {k}")));
            }
        }

        Ok(Scenario {
            name: file.name.unwrap_or_else(|| fallback_name.to_string()),
            world,
            obstacles: file.obstacles,
            footprints,
            start: start_z,
            goal: goal_v,
            planner: file.planner,
            control: file.control,
            gains,
            safety,
            model,
            disturbance: file.disturbance,
            sim: file.sim,
        })
    }

    pub fn initial_state(&self) -> VehicleState {
        let z = &self.start;
        VehicleState {
            q: Vector6::new(z[0], z[1], self.planner.h_t, 0.0, 0.0, z[2]),
            theta: Vector3::new(z[3], 0.0, z[4]),
            ..VehicleState::default()
        }
    }

    /// The 3D obstacles built from `footprints`.
    pub fn solids(&self, footprints: &[Superquadric2]) -> Result<Vec<Obstacle>> {
        footprints
            .iter()
            .zip(&self.obstacles)
            .map(|(f, o)| Obstacle::extruded(*f, o.height, self.sim.extrusion_eps))
            .collect()
    }

    /// Duration of the closed-loop run [s].
    pub fn duration(&self) -> f64 {
        self.planner.t_d + self.sim.settle
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
    Scenario::from_toml(&text, stem)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
format_version = 1
[world]
min = [-2.0, -2.0]
max = [2.0, 2.0]
[[obstacles]]
axes = [0.2, 0.3]
eps = 0.4
center = [0.0, 1.0]
height = 3.0
[start]
config = [0.0, -1.0, 0.0, 0.0, 0.0]
[goal]
point = [1.0, 1.0]
"#;

    #[test]
    fn minimal_file_gets_defaults() {
        let s = Scenario::from_toml(MINIMAL, "minimal").unwrap();
        assert_eq!(s.name, "minimal");
        assert_eq!(s.safety.alpha_co, 5.0);
        assert_eq!(s.safety.sigma_co, 1.0);
        assert_eq!(s.safety.t_lo, 1.0);
        assert_eq!(s.safety.t_hi, 15.0);
        assert_eq!(s.gains.eps()[0], 0.95);
        assert_eq!(s.planner.n_s, 400);
        assert_eq!(s.model.truth.mass, 3.5);
        assert_eq!(s.sim.dt, 0.005);
    }

    #[test]
    fn missing_world_is_rejected() {
        let text = MINIMAL.replace("[world]\nmin = [-2.0, -2.0]\nmax = [2.0, 2.0]\n", "");
        assert!(matches!(Scenario::from_toml(&text, "x"), Err(Error::Validation { path, .. }) if path == "world"));
    }

    #[test]
    fn errors_carry_field_paths() {
        let bad = MINIMAL.replace("eps = 0.4", "eps = \"x\"");
        assert!(matches!(Scenario::from_toml(&bad, "x"), Err(Error::Validation { path, .. }) if path == "obstacles[0].eps"));
        let bad = format!("{MINIMAL}\n[control]\na1 = [1.0, 1.0, 1.0, 1.0, 1.0, 1.0]\n");
        assert!(matches!(Scenario::from_toml(&bad, "x"), Err(Error::Validation { path, .. }) if path == "control.a0[0]"));
        let bad = format!("{MINIMAL}\n[planner]\nbogus = 1\n");
        assert!(matches!(Scenario::from_toml(&bad, "x"), Err(Error::Validation { path, .. }) if path.starts_with("planner")));
        let bad = MINIMAL.replace("format_version = 1", "format_version = 2");
        assert!(matches!(Scenario::from_toml(&bad, "x"), Err(Error::Validation { path, .. }) if path == "format_version"));
    }

    #[test]
    fn overlapping_obstacles_name_the_pair() {
        let text = format!("{MINIMAL}\n[[obstacles]]\naxes = [0.2, 0.2]\neps = 1.0\ncenter = [0.1, 1.1]\nheight = 3.0\n");
        assert!(matches!(Scenario::from_toml(&text, "x"), Err(Error::Overlap { i: 0, j: 1, .. })));
    }

    #[test]
    fn start_in_collision_is_rejected() {
        let text = MINIMAL.replace("config = [0.0, -1.0, 0.0, 0.0, 0.0]", "config = [0.0, 1.0, 0.0, 0.0, 0.0]");
        assert!(matches!(Scenario::from_toml(&text, "x"), Err(Error::Validation { path, .. }) if path == "start.config"));
    }
}
