//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, Vector2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use sqmanip::geometry::{Pose2, Superquadric2};
use sqmanip::voronoi::{ClearanceGraph, EdgeLabel, GraphEdge};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn spow(x: f64, p: f64) -> f64 {
    x.signum() * x.abs().powf(p)
}

/// `n` boundary points spaced uniformly in arc length.
///
/// The shape is traced with the textbook parametrization on a fine grid and
/// resampled along the resulting polyline.
pub fn boundary_points(sq: &Superquadric2, n: usize) -> Vec<Vector2<f64>> {
    let fine = 10 * n;
    let body = |t: f64| Vector2::new(sq.a1() * spow(t.cos(), sq.eps()), sq.a2() * spow(t.sin(), sq.eps()));
    let pts: Vec<Vector2<f64>> = (0..=fine)
        .map(|k| sq.pose().to_world(&body(std::f64::consts::TAU * k as f64 / fine as f64)))
        .collect();
    let mut cum = vec![0.0];
    for w in pts.windows(2) {
        cum.push(cum.last().unwrap() + (w[1] - w[0]).norm());
    }
    let total = *cum.last().unwrap();
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for k in 0..n {
        let target = total * k as f64 / n as f64;
        while cum[seg + 1] < target {
            seg += 1;
        }
        let w = (target - cum[seg]) / (cum[seg + 1] - cum[seg]).max(f64::MIN_POSITIVE);
        out.push(pts[seg] + (pts[seg + 1] - pts[seg]) * w);
    }
    out
}

/// Smallest distance between two sampled boundaries, pruned with a disc bound on `b`.
pub fn sampled_gap(a: &[Vector2<f64>], b: &[Vector2<f64>]) -> f64 {
    let c = b.iter().fold(Vector2::zeros(), |s, p| s + p) / b.len() as f64;
    let r = b.iter().map(|p| (p - c).norm()).fold(0.0, f64::max);
    let mut order: Vec<&Vector2<f64>> = a.iter().collect();
    order.sort_by(|p, q| (*p - c).norm().total_cmp(&(*q - c).norm()));
    let mut best = f64::INFINITY;
    for p in order {
        if (p - c).norm() - r >= best {
            break;
        }
        for q in b {
            let d = (p - q).norm_squared();
            if d < best * best {
                best = d.sqrt();
            }
        }
    }
    best
}

pub fn random_shape(r: &mut ChaCha8Rng, center: Vector2<f64>) -> Superquadric2 {
    Superquadric2::new(
        r.random_range(0.1..1.0),
        r.random_range(0.1..1.0),
        r.random_range(0.2..=2.0),
        Pose2::new(r.random_range(-3.2..3.2), center.x, center.y),
    )
    .unwrap()
}

/// Exhaustive active-set enumeration for `min 0.5 x'Hx + g'x s.t. Ax <= b` with `H` positive definite.
///
/// Returns the optimal objective, or `None` when no subset yields a feasible KKT point.
pub fn qp_by_enumeration(h: &DMatrix<f64>, g: &DVector<f64>, a: &DMatrix<f64>, b: &DVector<f64>) -> Option<(f64, DVector<f64>)> {
    let (n, m) = (g.len(), b.len());
    let mut best: Option<(f64, DVector<f64>)> = None;
    for mask in 0u32..(1 << m) {
        let act: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        if act.len() > n {
            continue;
        }
        let k = act.len();
        let mut kkt = DMatrix::zeros(n + k, n + k);
        let mut rhs = DVector::zeros(n + k);
        kkt.view_mut((0, 0), (n, n)).copy_from(h);
        rhs.rows_mut(0, n).copy_from(&(-g));
        for (r, &i) in act.iter().enumerate() {
            for c in 0..n {
                kkt[(n + r, c)] = a[(i, c)];
                kkt[(c, n + r)] = a[(i, c)];
            }
            rhs[n + r] = b[i];
        }
        let Some(sol) = kkt.lu().solve(&rhs) else { continue };
        let x = sol.rows(0, n).into_owned();
        let lam = sol.rows(n, k);
        if lam.iter().any(|&l| l < -1e-9) {
            continue;
        }
        if (a * &x - b).iter().any(|&v| v > 1e-9) {
            continue;
        }
        let f = 0.5 * x.dot(&(h * &x)) + g.dot(&x);
        if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
            best = Some((f, x));
        }
    }
    best
}

/// Random graph on `n` nodes with edge weights equal to the Euclidean lengths.
pub fn random_graph(r: &mut ChaCha8Rng, n: usize, p_edge: f64) -> ClearanceGraph {
    let nodes: Vec<Vector2<f64>> = (0..n).map(|_| Vector2::new(r.random_range(0.0..10.0), r.random_range(0.0..10.0))).collect();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if r.random_bool(p_edge) {
                edges.push(GraphEdge {
                    a,
                    b,
                    weight: (nodes[b] - nodes[a]).norm(),
                    normal: Vector2::new(0.0, 1.0),
                    label: EdgeLabel::Box(0),
                });
            }
        }
    }
    ClearanceGraph { nodes, edges }
}

/// Cheapest simple path cost by depth-first enumeration of every simple path.
pub fn brute_force_cost(g: &ClearanceGraph, s: usize, t: usize) -> Option<f64> {
    fn dfs(g: &ClearanceGraph, u: usize, t: usize, seen: &mut Vec<bool>, cost: f64, best: &mut Option<f64>) {
        if u == t {
            if best.is_none_or(|b| cost < b) {
                *best = Some(cost);
            }
            return;
        }
        for e in &g.edges {
            let v = if e.a == u {
                e.b
            } else if e.b == u {
                e.a
            } else {
                continue;
            };
            if !seen[v] {
                seen[v] = true;
                dfs(g, v, t, seen, cost + e.weight, best);
                seen[v] = false;
            }
        }
    }
    let mut seen = vec![false; g.nodes.len()];
    seen[s] = true;
    let mut best = None;
    dfs(g, s, t, &mut seen, 0.0, &mut best);
    best
}

/// Central difference of a scalar function.
pub fn fd(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// `|a - b| <= tol * max(|b|, floor)`.
pub fn rel_close(a: f64, b: f64, tol: f64, floor: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(floor)
}
