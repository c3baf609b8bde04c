//! Maximum-clearance Voronoi diagram over disjoint convex superquadric obstacles.
//!
//! Each pair of obstacles is split by the perpendicular bisector of its closest
//! proxy pair. A cell is the world box clipped by every half-plane on its
//! obstacle's side. Cell boundaries become a weighted graph searched with
//! Dijkstra.

mod cells;
mod graph;
mod search;

pub use cells::{build_cells, EdgeLabel, VoronoiCell};
pub use graph::{build_graph, ClearanceGraph, GraphEdge, MERGE_RADIUS};
pub use search::{solve_path, PathEdge, PathResult, SolutionPath};

use nalgebra::Vector2;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::format::num;
use crate::geometry::{closest_pair, ProxyPair, Superquadric2, DEFAULT_MAX_ITER, DEFAULT_TOL};

/// Axis-aligned rectangle bounding the workspace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WorldBox {
    pub min: Vector2<f64>,
    pub max: Vector2<f64>,
}

impl WorldBox {
    pub fn new(min: Vector2<f64>, max: Vector2<f64>) -> Result<Self> {
        if !(min.x < max.x && min.y < max.y) || !min.iter().chain(max.iter()).all(|v| v.is_finite()) {
            return Err(Error::Domain(format!("degenerate world box {min:?} .. {max:?}")));
        }
        Ok(WorldBox { min, max })
    }

    pub fn area(&self) -> f64 {
        (self.max.x - self.min.x) * (self.max.y - self.min.y)
    }

    /// True when the whole shape lies strictly inside the box.
    pub fn contains_point(&self, p: &Vector2<f64>) -> bool {
        p.x > self.min.x && p.x < self.max.x && p.y > self.min.y && p.y < self.max.y
    }

    pub fn contains_shape(&self, sq: &Superquadric2) -> bool {
        let (hx, _) = sq.support(&Vector2::new(1.0, 0.0));
        let (hnx, _) = sq.support(&Vector2::new(-1.0, 0.0));
        let (hy, _) = sq.support(&Vector2::new(0.0, 1.0));
        let (hny, _) = sq.support(&Vector2::new(0.0, -1.0));
        hx < self.max.x && -hnx > self.min.x && hy < self.max.y && -hny > self.min.y
    }
}

/// Line `n . p = c` separating obstacles `i` and `j`; `n` points from `i` toward `j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hyperplane2 {
    pub normal: Vector2<f64>,
    pub offset: f64,
    pub i: usize,
    pub j: usize,
    pub proxy_i: Vector2<f64>,
    pub proxy_j: Vector2<f64>,
}

impl Hyperplane2 {
    pub fn signed_distance(&self, p: &Vector2<f64>) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

/// Perpendicular bisector of the closest proxy pair of two disjoint obstacles.
pub fn bisector(i: usize, sq_i: &Superquadric2, j: usize, sq_j: &Superquadric2) -> Result<Hyperplane2> {
    if i == j {
        return Err(Error::Construction(format!("bisector of obstacle {i} with itself")));
    }
    let cp = closest_pair(sq_i, sq_j, &ProxyPair::facing(sq_i, sq_j), DEFAULT_TOL, DEFAULT_MAX_ITER);
    if cp.gap <= 0.0 {
        return Err(Error::Overlap { i, j, gap: cp.gap });
    }
    let d = cp.point_j - cp.point_i;
    let len = d.norm();
    if len == 0.0 {
        return Err(Error::Construction(format!("coincident proxies for pair ({i}, {j})")));
    }
    let normal = d / len;
    Ok(Hyperplane2 {
        normal,
        offset: normal.dot(&(0.5 * (cp.point_i + cp.point_j))),
        i,
        j,
        proxy_i: cp.point_i,
        proxy_j: cp.point_j,
    })
}

/// Structured-text dump of cells, graph and an optional path, for plotting.
pub fn dump(world: &WorldBox, cells: &[VoronoiCell], graph: &ClearanceGraph, path: Option<&SolutionPath>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "voronoi 1");
    let _ = writeln!(s, "box {} {} {} {}", num(world.min.x), num(world.min.y), num(world.max.x), num(world.max.y));
    for c in cells {
        let _ = writeln!(s, "cell {} {}", c.obstacle, c.vertices.len());
        for (v, l) in c.vertices.iter().zip(&c.labels) {
            let _ = writeln!(s, "v {} {} {}", num(v.x), num(v.y), l.tag());
        }
    }
    for (k, n) in graph.nodes.iter().enumerate() {
        let _ = writeln!(s, "node {k} {} {}", num(n.x), num(n.y));
    }
    for e in &graph.edges {
        let _ = writeln!(
            s,
            "edge {} {} {} {} {} {}",
            e.a,
            e.b,
            num(e.weight),
            num(e.normal.x),
            num(e.normal.y),
            e.label.tag()
        );
    }
    if let Some(p) = path {
        let _ = writeln!(s, "path {}", p.points.len());
        for q in &p.points {
            let _ = writeln!(s, "p {} {}", num(q.x), num(q.y));
        }
    }
    s
}
