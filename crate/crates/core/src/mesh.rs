//! Structured triangulations of axis-aligned rectangles.
//!
//! Each grid cell is split along its lower-left to upper-right diagonal, so
//! cell `(i, j)` with corners `a = (i, j)`, `b = (i+1, j)`, `c = (i+1, j+1)`,
//! `d = (i, j+1)` yields the counter-clockwise triangles `(a, b, c)` and
//! `(a, c, d)`.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Closed rectangle `[x_min, x_max] x [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        Self {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    pub fn unit_square() -> Self {
        Self::new(0.0, 1.0, 0.0, 1.0)
    }

    /// The periodic box `(0, 2pi)^2`.
    pub fn two_pi_square() -> Self {
        let l = 2.0 * std::f64::consts::PI;
        Self::new(0.0, l, 0.0, l)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Whether `p` lies on the boundary, within `tol`.
    pub fn on_boundary(&self, p: Point, tol: f64) -> bool {
        (p[0] - self.x_min).abs() <= tol
            || (p[0] - self.x_max).abs() <= tol
            || (p[1] - self.y_min).abs() <= tol
            || (p[1] - self.y_max).abs() <= tol
    }

    fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.x_max <= self.x_min || self.y_max <= self.y_min {
            return Err(Error::InvalidMesh(format!("degenerate or inverted domain {self:?}")));
        }
        Ok(())
    }
}

/// Immutable triangulation with edge connectivity and boundary flags.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub domain: Rect,
    pub nx: usize,
    pub ny: usize,
    pub vertices: Vec<Point>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    /// Sorted vertex pairs; the index is the edge id.
    pub edges: Vec<[usize; 2]>,
    /// Edge ids of `(v0, v1)`, `(v1, v2)`, `(v2, v0)` for each triangle.
    pub triangle_edges: Vec<[usize; 3]>,
    pub boundary_vertex: Vec<bool>,
    pub boundary_edge: Vec<bool>,
}

/// Builds the structured mesh with `nx * ny` cells.
pub fn build_rect_mesh(nx: usize, ny: usize, domain: Rect) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidMesh(format!("cell counts must be positive, got {nx}x{ny}")));
    }
    domain.validate()?;

    let hx = domain.width() / nx as f64;
    let hy = domain.height() / ny as f64;
    let vid = |i: usize, j: usize| j * (nx + 1) + i;

    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    let mut boundary_vertex = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        // Snap the last row/column onto the exact bounds.
        let y = if j == ny { domain.y_max } else { domain.y_min + j as f64 * hy };
        for i in 0..=nx {
            let x = if i == nx { domain.x_max } else { domain.x_min + i as f64 * hx };
            vertices.push([x, y]);
            boundary_vertex.push(i == 0 || i == nx || j == 0 || j == ny);
        }
    }

    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let a = vid(i, j);
            let b = vid(i + 1, j);
            let c = vid(i + 1, j + 1);
            let d = vid(i, j + 1);
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }

    let (edges, triangle_edges, incidence) = build_edges(&triangles);
    let boundary_edge = incidence.iter().map(|&count| count == 1).collect();

    Ok(Mesh {
        domain,
        nx,
        ny,
        vertices,
        triangles,
        edges,
        triangle_edges,
        boundary_vertex,
        boundary_edge,
    })
}

type EdgeTables = (Vec<[usize; 2]>, Vec<[usize; 3]>, Vec<usize>);

/// Edge list in lexicographic order of sorted vertex pairs, per-triangle edge
/// ids, and the number of triangles sharing each edge.
pub(crate) fn build_edges(triangles: &[[usize; 3]]) -> EdgeTables {
    let mut keys: Vec<[usize; 2]> = triangles
        .iter()
        .flat_map(|t| local_edges(t).into_iter().map(sorted_pair))
        .collect();
    keys.sort_unstable();
    keys.dedup();

    let index: HashMap<[usize; 2], usize> = keys.iter().enumerate().map(|(k, e)| (*e, k)).collect();
    let mut incidence = vec![0usize; keys.len()];
    let triangle_edges = triangles
        .iter()
        .map(|t| {
            let le = local_edges(t);
            let mut ids = [0usize; 3];
            for (slot, e) in ids.iter_mut().zip(le) {
                *slot = index[&sorted_pair(e)];
                incidence[*slot] += 1;
            }
            ids
        })
        .collect();
    (keys, triangle_edges, incidence)
}

fn local_edges(t: &[usize; 3]) -> [[usize; 2]; 3] {
    [[t[0], t[1]], [t[1], t[2]], [t[2], t[0]]]
}

fn sorted_pair(e: [usize; 2]) -> [usize; 2] {
    if e[0] < e[1] {
        e
    } else {
        [e[1], e[0]]
    }
}

impl Mesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Twice the signed area is `cross(p1 - p0, p2 - p0)`; this returns the area.
    pub fn signed_area(&self, t: usize) -> f64 {
        let [p0, p1, p2] = self.triangle_points(t);
        0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
    }

    pub fn diameter(&self, t: usize) -> f64 {
        let [p0, p1, p2] = self.triangle_points(t);
        let d = |a: Point, b: Point| (a[0] - b[0]).hypot(a[1] - b[1]);
        d(p0, p1).max(d(p1, p2)).max(d(p2, p0))
    }
}

/// Largest triangle diameter `h`.
pub fn mesh_size(mesh: &Mesh) -> f64 {
    (0..mesh.n_triangles()).map(|t| mesh.diameter(t)).fold(0.0, f64::max)
}
