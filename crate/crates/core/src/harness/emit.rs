//! Output files. All floats use the fixed formatting of [`crate::format::num`].

use nalgebra::{Vector2, Vector3, Vector6};
use std::fmt::Write as _;
use std::path::Path;

use super::metrics::{MetricsReport, TelemetryRow, TrajectoryRow};
use crate::error::{Error, Result};
use crate::format::num;
use crate::planner::ZSys;

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const TELEMETRY_FILE: &str = "telemetry.csv";
pub const VORONOI_FILE: &str = "voronoi.txt";
pub const METRICS_FILE: &str = "metrics.toml";
pub const CONSTRAINTS_FILE: &str = "constraints.log";

pub const TRAJECTORY_HEADER: &str = "s,x,y,psi,theta1,theta3,u_x,u_y,u_theta,eef_x,eef_y,eef_heading,min_gap";
pub const TELEMETRY_HEADER: &str = "t,x,y,z,roll,pitch,yaw,theta1,theta2,theta3,\
T1,T2,T3,T4,T5,T6,d_x,d_y,d_z,d_roll,d_pitch,d_yaw,min_h,min_gap,status,fallback";

fn join(vals: impl IntoIterator<Item = f64>) -> String {
    vals.into_iter().map(num).collect::<Vec<_>>().join(",")
}

pub fn trajectory_csv(rows: &[TrajectoryRow]) -> String {
    let mut s = String::from(TRAJECTORY_HEADER);
    s.push('\n');
    for r in rows {
        let vals = std::iter::once(r.s)
            .chain(r.z.iter().copied())
            .chain(r.u.iter().copied())
            .chain([r.eef.x, r.eef.y, r.eef_heading, r.gap]);
        let _ = writeln!(s, "{}", join(vals));
    }
    s
}

pub fn telemetry_csv(rows: &[TelemetryRow]) -> String {
    let mut s = String::from(TELEMETRY_HEADER);
    s.push('\n');
    for r in rows {
        let vals = std::iter::once(r.t)
            .chain(r.q.iter().copied())
            .chain(r.theta.iter().copied())
            .chain(r.thrust.iter().copied())
            .chain(r.d_hat.iter().copied())
            .chain([r.min_h, r.min_gap]);
        let _ = writeln!(s, "{},{},{}", join(vals), r.status, u8::from(r.fallback));
    }
    s
}

fn parse_rows(text: &str, header: &str, file: &str) -> Result<Vec<Vec<f64>>> {
    let mut lines = text.lines();
    if lines.next() != Some(header) {
        return Err(Error::validation(file, "unexpected header"));
    }
    let cols = header.split(',').count();
    lines
        .enumerate()
        .map(|(k, line)| {
            let v: Vec<f64> = line
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::validation(format!("{file}:{}", k + 2), e.to_string()))?;
            if v.len() != cols {
                return Err(Error::validation(format!("{file}:{}", k + 2), format!("{} columns, expected {cols}", v.len())));
            }
            Ok(v)
        })
        .collect()
}

pub fn parse_trajectory_csv(text: &str) -> Result<Vec<TrajectoryRow>> {
    Ok(parse_rows(text, TRAJECTORY_HEADER, TRAJECTORY_FILE)?
        .into_iter()
        .map(|v| TrajectoryRow {
            s: v[0],
            z: ZSys::from_column_slice(&v[1..6]),
            u: Vector3::from_column_slice(&v[6..9]),
            eef: Vector2::new(v[9], v[10]),
            eef_heading: v[11],
            gap: v[12],
        })
        .collect())
}

pub fn parse_telemetry_csv(text: &str) -> Result<Vec<TelemetryRow>> {
    Ok(parse_rows(text, TELEMETRY_HEADER, TELEMETRY_FILE)?
        .into_iter()
        .map(|v| TelemetryRow {
            t: v[0],
            q: Vector6::from_column_slice(&v[1..7]),
            theta: Vector3::from_column_slice(&v[7..10]),
            thrust: Vector6::from_column_slice(&v[10..16]),
            d_hat: Vector6::from_column_slice(&v[16..22]),
            min_h: v[22],
            min_gap: v[23],
            status: v[24] as u8,
            fallback: v[25] != 0.0,
        })
        .collect())
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes every artifact of a run into `dir`, creating it if needed. Telemetry and the
/// constraint log are skipped when `telemetry` is `None`.
pub fn emit(
    dir: &Path,
    rows: &[TrajectoryRow],
    telemetry: Option<(&[TelemetryRow], &[String])>,
    voronoi: &str,
    report: &MetricsReport,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })?;
    write(dir, TRAJECTORY_FILE, &trajectory_csv(rows))?;
    write(dir, VORONOI_FILE, voronoi)?;
    write(dir, METRICS_FILE, &report.to_toml())?;
    if let Some((tel, events)) = telemetry {
        write(dir, TELEMETRY_FILE, &telemetry_csv(tel))?;
        let mut log = events.join("\n");
        if !log.is_empty() {
            log.push('\n');
        }
        write(dir, CONSTRAINTS_FILE, &log)?;
    }
    Ok(())
}

fn read(dir: &Path, name: &str) -> Result<String> {
    let path = dir.join(name);
    std::fs::read_to_string(&path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Recomputes the report from the CSV files in `dir`; `plan_time` comes from its metrics file.
pub fn metrics_from_dir(dir: &Path) -> Result<MetricsReport> {
    let rows = parse_trajectory_csv(&read(dir, TRAJECTORY_FILE)?)?;
    let tel = match dir.join(TELEMETRY_FILE).exists() {
        true => parse_telemetry_csv(&read(dir, TELEMETRY_FILE)?)?,
        false => Vec::new(),
    };
    let plan_time = MetricsReport::from_toml(&read(dir, METRICS_FILE)?)?.plan_time;
    super::metrics::metrics(&rows, &tel, plan_time)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_rows() -> Vec<TrajectoryRow> {
        (0..6)
            .map(|k| TrajectoryRow {
                s: k as f64 / 5.0,
                z: ZSys::new(0.1 * k as f64, 1.0 / 3.0, -0.2, 0.4, 0.5),
                u: Vector3::new(k as f64, 0.0, 0.1),
                eef: Vector2::new(0.3 * k as f64, (k as f64).sin()),
                eef_heading: 0.7,
                gap: 0.05 + 0.01 * k as f64,
            })
            .collect()
    }

    fn sample_ticks() -> Vec<TelemetryRow> {
        (0..3)
            .map(|k| TelemetryRow {
                t: 0.005 * k as f64,
                q: Vector6::repeat(1.0 / 7.0),
                theta: Vector3::new(0.1, 0.0, -0.1),
                thrust: Vector6::repeat(5.9),
                d_hat: Vector6::repeat(-0.01),
                min_h: 0.3,
                min_gap: 0.2,
                status: 0,
                fallback: k == 1,
            })
            .collect()
    }

    #[test]
    fn csv_columns_match_header() {
        for (csv, header) in [(trajectory_csv(&sample_rows()), TRAJECTORY_HEADER), (telemetry_csv(&sample_ticks()), TELEMETRY_HEADER)] {
            let n = header.split(',').count();
            for line in csv.lines() {
                assert_eq!(line.split(',').count(), n);
            }
        }
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        if std::env::var(crate::format::PRECISION_ENV).is_ok() {
            return;
        }
        assert_eq!(parse_trajectory_csv(&trajectory_csv(&sample_rows())).unwrap(), sample_rows());
        assert_eq!(parse_telemetry_csv(&telemetry_csv(&sample_ticks())).unwrap(), sample_ticks());
    }

    #[test]
    fn emitted_metrics_recompute() {
        let dir = tempfile::tempdir().unwrap();
        let rows = sample_rows();
        let ticks = sample_ticks();
        let rep = super::super::metrics::metrics(&rows, &ticks, 0.25).unwrap();
        emit(dir.path(), &rows, Some((&ticks, &["t=0 note".to_string()])), "voronoi 1\n", &rep).unwrap();
        let again = metrics_from_dir(dir.path()).unwrap();
        assert_eq!(again, rep);
        let first = std::fs::read(dir.path().join(TRAJECTORY_FILE)).unwrap();
        emit(dir.path(), &rows, Some((&ticks, &["t=0 note".to_string()])), "voronoi 1\n", &rep).unwrap();
        assert_eq!(std::fs::read(dir.path().join(TRAJECTORY_FILE)).unwrap(), first);
    }
}
