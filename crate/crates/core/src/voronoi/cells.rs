use nalgebra::Vector2;

use super::{bisector, Hyperplane2, WorldBox};
use crate::error::{Error, Result};
use crate::geometry::Superquadric2;

/// Origin of a polygon edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeLabel {
    /// World box side: 0 bottom, 1 right, 2 top, 3 left.
    Box(u8),
    /// Bisector between the two obstacles, stored with the lower index first.
    Bisector(usize, usize),
}

impl EdgeLabel {
    pub fn tag(&self) -> String {
        match self {
            EdgeLabel::Box(s) => format!("box{s}"),
            EdgeLabel::Bisector(i, j) => format!("bis{i}-{j}"),
        }
    }

    pub fn box_inward_normal(side: u8) -> Vector2<f64> {
        match side {
            0 => Vector2::new(0.0, 1.0),
            1 => Vector2::new(-1.0, 0.0),
            2 => Vector2::new(0.0, -1.0),
            _ => Vector2::new(1.0, 0.0),
        }
    }
}

/// Convex counter-clockwise polygon owned by one obstacle. `labels[k]` names the
/// edge from `vertices[k]` to `vertices[k + 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct VoronoiCell {
    pub obstacle: usize,
    pub vertices: Vec<Vector2<f64>>,
    pub labels: Vec<EdgeLabel>,
}

impl VoronoiCell {
    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        let mut a = 0.0;
        for k in 0..n {
            let p = self.vertices[k];
            let q = self.vertices[(k + 1) % n];
            a += p.x * q.y - q.x * p.y;
        }
        0.5 * a
    }

    pub fn contains(&self, p: &Vector2<f64>, tol: f64) -> bool {
        let n = self.vertices.len();
        (0..n).all(|k| {
            let a = self.vertices[k];
            let b = self.vertices[(k + 1) % n];
            crate::math::cross2(&(b - a), &(p - a)) >= -tol * (b - a).norm()
        })
    }
}

/// Keeps the part of the polygon with `n . p <= c`.
fn clip(
    verts: &[Vector2<f64>],
    labels: &[EdgeLabel],
    normal: &Vector2<f64>,
    offset: f64,
    new_label: EdgeLabel,
) -> (Vec<Vector2<f64>>, Vec<EdgeLabel>) {
    let n = verts.len();
    let tol = 1e-12 * (1.0 + offset.abs());
    let mut out_v = Vec::with_capacity(n + 1);
    let mut out_l = Vec::with_capacity(n + 1);
    for k in 0..n {
        let a = verts[k];
        let b = verts[(k + 1) % n];
        let da = normal.dot(&a) - offset;
        let db = normal.dot(&b) - offset;
        let ain = da <= tol;
        let bin = db <= tol;
        match (ain, bin) {
            (true, true) => {
                out_v.push(a);
                out_l.push(labels[k]);
            }
            (true, false) => {
                out_v.push(a);
                out_l.push(labels[k]);
                let t = da / (da - db);
                out_v.push(a + (b - a) * t);
                out_l.push(new_label);
            }
            (false, true) => {
                let t = da / (da - db);
                out_v.push(a + (b - a) * t);
                out_l.push(labels[k]);
            }
            (false, false) => {}
        }
    }
    // Drop zero-length edges, keeping the label of the surviving edge.
    let mut v: Vec<Vector2<f64>> = Vec::with_capacity(out_v.len());
    let mut l: Vec<EdgeLabel> = Vec::with_capacity(out_v.len());
    for (p, lab) in out_v.into_iter().zip(out_l) {
        if let Some(last) = v.last() {
            if (p - *last).norm() < 1e-12 {
                *l.last_mut().unwrap() = lab;
                continue;
            }
        }
        v.push(p);
        l.push(lab);
    }
    while v.len() > 1 && (v[0] - v[v.len() - 1]).norm() < 1e-12 {
        v.pop();
        l.pop();
    }
    (v, l)
}

/// Pairwise bisectors for all `i < j`, sorted by `(i, j)`.
pub fn all_bisectors(obstacles: &[Superquadric2]) -> Result<Vec<Hyperplane2>> {
    let mut out = Vec::new();
    for i in 0..obstacles.len() {
        for j in i + 1..obstacles.len() {
            out.push(bisector(i, &obstacles[i], j, &obstacles[j])?);
        }
    }
    Ok(out)
}

pub fn build_cells(obstacles: &[Superquadric2], world: &WorldBox) -> Result<Vec<VoronoiCell>> {
    if obstacles.is_empty() {
        return Err(Error::Construction("no obstacles".into()));
    }
    for (i, o) in obstacles.iter().enumerate() {
        if !world.contains_shape(o) {
            return Err(Error::Construction(format!("obstacle {i} is not inside the world box")));
        }
    }
    let planes = all_bisectors(obstacles)?;
    let corners = vec![
        world.min,
        Vector2::new(world.max.x, world.min.y),
        world.max,
        Vector2::new(world.min.x, world.max.y),
    ];
    let box_labels = vec![EdgeLabel::Box(0), EdgeLabel::Box(1), EdgeLabel::Box(2), EdgeLabel::Box(3)];
    let mut cells = Vec::with_capacity(obstacles.len());
    for i in 0..obstacles.len() {
        let mut v = corners.clone();
        let mut l = box_labels.clone();
        for h in &planes {
            let (n, c) = if h.i == i {
                (h.normal, h.offset)
            } else if h.j == i {
                (-h.normal, -h.offset)
            } else {
                continue;
            };
            let (nv, nl) = clip(&v, &l, &n, c, EdgeLabel::Bisector(h.i, h.j));
            v = nv;
            l = nl;
            if v.len() < 3 {
                return Err(Error::Construction(format!("cell {i} collapsed while clipping")));
            }
        }
        cells.push(VoronoiCell {
            obstacle: i,
            vertices: v,
            labels: l,
        });
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn world(w: f64, h: f64) -> WorldBox {
        WorldBox::new(Vector2::zeros(), Vector2::new(w, h)).unwrap()
    }

    #[test]
    fn single_obstacle_gets_whole_box() {
        let cells = build_cells(&[Superquadric2::circle(0.5, 2.0, 2.0).unwrap()], &world(4.0, 3.0)).unwrap();
        assert_eq!(cells.len(), 1);
        assert_relative_eq!(cells[0].area(), 12.0, epsilon = 1e-12);
        assert_eq!(cells[0].vertices.len(), 4);
    }

    #[test]
    fn two_circles_split_box() {
        let obs = [
            Superquadric2::circle(0.5, 1.0, 2.0).unwrap(),
            Superquadric2::circle(0.5, 3.0, 2.0).unwrap(),
        ];
        let cells = build_cells(&obs, &world(4.0, 4.0)).unwrap();
        for c in &cells {
            assert_relative_eq!(c.area(), 8.0, epsilon = 1e-9);
            assert!(c.vertices.iter().all(|v| (v.x - 2.0).abs() < 1e-9 || v.x.abs() < 1e-12 || (v.x - 4.0).abs() < 1e-12));
        }
        assert!(cells[0].labels.contains(&EdgeLabel::Bisector(0, 1)));
    }

    #[test]
    fn obstacle_outside_box_rejected() {
        let obs = [Superquadric2::circle(0.5, 3.8, 2.0).unwrap()];
        assert!(build_cells(&obs, &world(4.0, 4.0)).is_err());
    }
}
