use nalgebra::Vector2;
use std::collections::HashMap;

use super::cells::{EdgeLabel, VoronoiCell};

/// Vertices closer than this are merged into one node.
pub const MERGE_RADIUS: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub struct GraphEdge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
    /// Bisector normal (lower to higher obstacle index) or the box's inward normal.
    pub normal: Vector2<f64>,
    pub label: EdgeLabel,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClearanceGraph {
    pub nodes: Vec<Vector2<f64>>,
    pub edges: Vec<GraphEdge>,
}

impl ClearanceGraph {
    /// Neighbour lists `(node, edge index)`, sorted by neighbour index.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (k, e) in self.edges.iter().enumerate() {
            adj[e.a].push((e.b, k));
            adj[e.b].push((e.a, k));
        }
        for l in &mut adj {
            l.sort();
        }
        adj
    }

    pub fn find_node(&self, p: &Vector2<f64>, radius: f64) -> Option<usize> {
        self.nodes.iter().position(|n| (n - p).norm() <= radius)
    }

    fn node_for(&mut self, p: Vector2<f64>) -> usize {
        match self.find_node(&p, MERGE_RADIUS) {
            Some(k) => k,
            None => {
                self.nodes.push(p);
                self.nodes.len() - 1
            }
        }
    }
}

fn edge_normal(cell: &VoronoiCell, k: usize) -> Vector2<f64> {
    match cell.labels[k] {
        EdgeLabel::Box(side) => EdgeLabel::box_inward_normal(side),
        EdgeLabel::Bisector(i, _) => {
            // Cell edges run counter-clockwise, so the outward normal is the
            // clockwise perpendicular of the edge direction.
            let a = cell.vertices[k];
            let b = cell.vertices[(k + 1) % cell.vertices.len()];
            let d = (b - a).normalize();
            let outward = Vector2::new(d.y, -d.x);
            if cell.obstacle == i {
                outward
            } else {
                -outward
            }
        }
    }
}

/// Deduplicated cell vertices joined by the cell boundary segments.
pub fn build_graph(cells: &[VoronoiCell]) -> ClearanceGraph {
    let mut g = ClearanceGraph::default();
    let mut segments = Vec::new();
    for c in cells {
        let n = c.vertices.len();
        for k in 0..n {
            let a = g.node_for(c.vertices[k]);
            let b = g.node_for(c.vertices[(k + 1) % n]);
            if a != b {
                segments.push((a, b, edge_normal(c, k), c.labels[k]));
            }
        }
    }
    let mut seen: HashMap<(usize, usize), ()> = HashMap::new();
    for (a, b, normal, label) in segments {
        // Split at nodes lying on the segment so T-junctions connect.
        let pa = g.nodes[a];
        let pb = g.nodes[b];
        let d = pb - pa;
        let len2 = d.norm_squared();
        let mut inner: Vec<(f64, usize)> = g
            .nodes
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != a && k != b)
            .filter_map(|(k, p)| {
                let t = (p - pa).dot(&d) / len2;
                let off = (pa + d * t - p).norm();
                (t > 0.0 && t < 1.0 && off <= MERGE_RADIUS).then_some((t, k))
            })
            .collect();
        inner.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        let chain: Vec<usize> = std::iter::once(a)
            .chain(inner.into_iter().map(|(_, k)| k))
            .chain(std::iter::once(b))
            .collect();
        for w in chain.windows(2) {
            let (u, v) = (w[0], w[1]);
            let weight = (g.nodes[v] - g.nodes[u]).norm();
            if weight <= 0.0 {
                continue;
            }
            let key = (u.min(v), u.max(v));
            if seen.insert(key, ()).is_some() {
                continue;
            }
            g.edges.push(GraphEdge {
                a: key.0,
                b: key.1,
                weight,
                normal,
                label,
            });
        }
    }
    g
}
