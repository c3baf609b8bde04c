use nalgebra::Vector2;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::graph::{ClearanceGraph, GraphEdge};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct PathEdge {
    pub from: usize,
    pub to: usize,
    pub length: f64,
    pub normal: Vector2<f64>,
    /// Orientation of `normal` in radians.
    pub normal_angle: f64,
}

/// Result of a path query over a graph augmented with the projected start and goal.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionPath {
    /// Node indices into `graph` (which includes any temporary nodes).
    pub nodes: Vec<usize>,
    pub points: Vec<Vector2<f64>>,
    pub edges: Vec<PathEdge>,
    pub cost: f64,
    pub graph: ClearanceGraph,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PathResult {
    Found(SolutionPath),
    NoPath,
}

impl PathResult {
    pub fn found(self) -> Option<SolutionPath> {
        match self {
            PathResult::Found(p) => Some(p),
            PathResult::NoPath => None,
        }
    }
}

#[derive(PartialEq)]
struct Entry {
    cost: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // Reversed so the max-heap pops the cheapest entry, lower node index first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost).then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Attaches `p` to its nearest edge, splitting the edge with a temporary node when needed.
fn attach(g: &mut ClearanceGraph, p: &Vector2<f64>) -> usize {
    let mut best: Option<(f64, usize, f64)> = None;
    for (k, e) in g.edges.iter().enumerate() {
        let a = g.nodes[e.a];
        let d = g.nodes[e.b] - a;
        let t = ((p - a).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
        let dist = (a + d * t - p).norm();
        if best.is_none_or(|(bd, _, _)| dist < bd) {
            best = Some((dist, k, t));
        }
    }
    let (_, k, t) = best.expect("graph has edges");
    let e = g.edges[k].clone();
    let a = g.nodes[e.a];
    let q = a + (g.nodes[e.b] - a) * t;
    let snap = 1e-9;
    if (q - a).norm() <= snap {
        return e.a;
    }
    if (q - g.nodes[e.b]).norm() <= snap {
        return e.b;
    }
    g.nodes.push(q);
    let m = g.nodes.len() - 1;
    g.edges[k] = GraphEdge {
        b: m,
        weight: (q - a).norm(),
        ..e.clone()
    };
    g.edges.push(GraphEdge {
        a: m,
        weight: (g.nodes[e.b] - q).norm(),
        ..e
    });
    m
}

/// Least-cost path between the projections of `start` and `goal` onto the graph.
pub fn solve_path(graph: &ClearanceGraph, start: &Vector2<f64>, goal: &Vector2<f64>) -> Result<PathResult> {
    if graph.edges.is_empty() {
        return Err(Error::Construction("empty clearance graph".into()));
    }
    let mut g = graph.clone();
    let s = attach(&mut g, start);
    let t = attach(&mut g, goal);
    let adj = g.adjacency();
    let n = g.nodes.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[s] = 0.0;
    heap.push(Entry { cost: 0.0, node: s });
    while let Some(Entry { cost, node }) = heap.pop() {
        if done[node] {
            continue;
        }
        done[node] = true;
        if node == t {
            break;
        }
        for &(nb, ek) in &adj[node] {
            let c = cost + g.edges[ek].weight;
            if c < dist[nb] {
                dist[nb] = c;
                prev[nb] = Some((node, ek));
                heap.push(Entry { cost: c, node: nb });
            }
        }
    }
    if !dist[t].is_finite() {
        return Ok(PathResult::NoPath);
    }
    let mut nodes = vec![t];
    let mut edge_ids = Vec::new();
    let mut cur = t;
    while let Some((p, ek)) = prev[cur] {
        nodes.push(p);
        edge_ids.push(ek);
        cur = p;
    }
    nodes.reverse();
    edge_ids.reverse();
    let edges = edge_ids
        .iter()
        .zip(nodes.windows(2))
        .map(|(&ek, w)| {
            let e = &g.edges[ek];
            PathEdge {
                from: w[0],
                to: w[1],
                length: e.weight,
                normal: e.normal,
                normal_angle: e.normal.y.atan2(e.normal.x),
            }
        })
        .collect();
    Ok(PathResult::Found(SolutionPath {
        points: nodes.iter().map(|&k| g.nodes[k]).collect(),
        nodes,
        edges,
        cost: dist[t],
        graph: g,
    }))
}
