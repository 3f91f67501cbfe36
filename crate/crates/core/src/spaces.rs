//! Global Lagrange finite element spaces on a [`Mesh`].
//!
//! Scalar node numbering is vertices first (mesh order), then edge midpoints
//! (edge-id order) for P2. Vector spaces interleave components, so the DOF of
//! component `c` at node `k` is `2k + c`.

use std::sync::Arc;

use crate::elements::{self, QuadratureRule, Tabulation, MAX_NODES};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};

/// Owned analytic scalar field of `(x, y, t)`.
pub type ScalarField = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;
/// Owned analytic vector field of `(x, y, t)`.
pub type VectorField = Arc<dyn Fn(f64, f64, f64) -> [f64; 2] + Send + Sync>;
/// Owned analytic 2x2 tensor field, indexed `[component][derivative]` for Jacobians.
pub type TensorField = Arc<dyn Fn(f64, f64, f64) -> [[f64; 2]; 2] + Send + Sync>;

/// Borrowed analytic field of `(x, y, t)`.
#[derive(Clone, Copy)]
pub enum FieldRef<'a> {
    Scalar(&'a dyn Fn(f64, f64, f64) -> f64),
    Vector(&'a dyn Fn(f64, f64, f64) -> [f64; 2]),
}

impl FieldRef<'_> {
    pub fn components(&self) -> usize {
        match self {
            FieldRef::Scalar(_) => 1,
            FieldRef::Vector(_) => 2,
        }
    }

    /// Writes the field value into `out[..components]`.
    pub fn eval_into(&self, x: f64, y: f64, t: f64, out: &mut [f64; 2]) {
        match self {
            FieldRef::Scalar(f) => out[0] = f(x, y, t),
            FieldRef::Vector(f) => *out = f(x, y, t),
        }
    }
}

/// Affine map from the reference triangle onto a mesh triangle.
#[derive(Debug, Clone, Copy)]
pub struct Affine {
    pub origin: Point,
    /// Columns are `p1 - p0` and `p2 - p0`.
    pub jac: [[f64; 2]; 2],
    pub det: f64,
    /// `J^{-T}`, which maps reference gradients to physical gradients.
    pub inv_t: [[f64; 2]; 2],
}

impl Affine {
    pub fn new(p: [Point; 3]) -> Self {
        let jac = [[p[1][0] - p[0][0], p[2][0] - p[0][0]], [p[1][1] - p[0][1], p[2][1] - p[0][1]]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let inv_t = [[jac[1][1] / det, -jac[1][0] / det], [-jac[0][1] / det, jac[0][0] / det]];
        Self {
            origin: p[0],
            jac,
            det,
            inv_t,
        }
    }

    pub fn map(&self, r: [f64; 2]) -> Point {
        [
            self.origin[0] + self.jac[0][0] * r[0] + self.jac[0][1] * r[1],
            self.origin[1] + self.jac[1][0] * r[0] + self.jac[1][1] * r[1],
        ]
    }

    pub fn grad(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.inv_t[0][0] * g[0] + self.inv_t[0][1] * g[1],
            self.inv_t[1][0] * g[0] + self.inv_t[1][1] * g[1],
        ]
    }
}

#[derive(Debug, Clone)]
pub struct FeSpace {
    pub mesh: Arc<Mesh>,
    pub degree: usize,
    pub components: usize,
    /// Global scalar node ids of each triangle, in reference node order.
    pub cell_nodes: Vec<[usize; MAX_NODES]>,
    /// Coordinates of every scalar node.
    pub nodes: Vec<Point>,
    /// Per-DOF Dirichlet mask.
    pub dirichlet: Vec<bool>,
}

/// Builds a P1 or P2 space with `components` interleaved components. When
/// `dirichlet` is set every DOF on a boundary node is masked.
pub fn build_space(mesh: &Arc<Mesh>, degree: usize, components: usize, dirichlet: bool) -> Result<FeSpace> {
    if !(1..=2).contains(&degree) {
        return Err(Error::InvalidArgument(format!("polynomial degree {degree} not in {{1, 2}}")));
    }
    if !(1..=2).contains(&components) {
        return Err(Error::InvalidArgument(format!("{components} components not in {{1, 2}}")));
    }
    let nv = mesh.n_vertices();
    let mut nodes = mesh.vertices.clone();
    let mut on_boundary = mesh.boundary_vertex.clone();
    if degree == 2 {
        for (e, &[a, b]) in mesh.edges.iter().enumerate() {
            let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
            nodes.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
            on_boundary.push(mesh.boundary_edge[e]);
        }
    }
    let cell_nodes = mesh
        .triangles
        .iter()
        .zip(&mesh.triangle_edges)
        .map(|(t, te)| {
            let mut c = [usize::MAX; MAX_NODES];
            c[..3].copy_from_slice(t);
            if degree == 2 {
                for k in 0..3 {
                    c[3 + k] = nv + te[k];
                }
            }
            c
        })
        .collect();
    let dirichlet = on_boundary
        .iter()
        .flat_map(|&b| std::iter::repeat_n(dirichlet && b, components))
        .collect();
    Ok(FeSpace {
        mesh: Arc::clone(mesh),
        degree,
        components,
        cell_nodes,
        nodes,
        dirichlet,
    })
}

impl FeSpace {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn dof_count(&self) -> usize {
        self.nodes.len() * self.components
    }

    pub fn n_local(&self) -> usize {
        elements::n_nodes(self.degree)
    }

    pub fn dof(&self, node: usize, component: usize) -> usize {
        node * self.components + component
    }

    pub fn affine(&self, cell: usize) -> Affine {
        Affine::new(self.mesh.triangle_points(cell))
    }

    pub fn tabulate(&self, rule: QuadratureRule) -> Tabulation {
        Tabulation::new(self.degree, rule)
    }

    pub fn masked_count(&self) -> usize {
        self.dirichlet.iter().filter(|&&m| m).count()
    }

    /// Evaluates the discrete field at reference point `r` of `cell`.
    pub fn eval_in_cell(&self, coeffs: &[f64], cell: usize, r: [f64; 2]) -> [f64; 2] {
        let e = elements::eval(self.degree, r);
        let nodes = &self.cell_nodes[cell];
        let mut out = [0.0; 2];
        for i in 0..e.n {
            for (c, o) in out.iter_mut().enumerate().take(self.components) {
                *o += e.values[i] * coeffs[self.dof(nodes[i], c)];
            }
        }
        out
    }
}

/// Nodal interpolant of `f` at time `t`.
pub fn interpolate(space: &FeSpace, f: FieldRef<'_>, t: f64) -> Result<Vec<f64>> {
    if f.components() != space.components {
        return Err(Error::DimensionMismatch {
            expected: space.components,
            found: f.components(),
        });
    }
    let mut out = vec![0.0; space.dof_count()];
    let mut v = [0.0; 2];
    for (k, p) in space.nodes.iter().enumerate() {
        f.eval_into(p[0], p[1], t, &mut v);
        for c in 0..space.components {
            if !v[c].is_finite() {
                return Err(Error::NonFinite {
                    what: "interpolated field",
                    x: p[0],
                    y: p[1],
                });
            }
            out[space.dof(k, c)] = v[c];
        }
    }
    Ok(out)
}

/// Vector `m` with `m . c = integral of the discrete field c` for scalar spaces.
pub fn mean_functional(space: &FeSpace) -> Result<Vec<f64>> {
    if space.components != 1 {
        return Err(Error::InvalidArgument("mean functional needs a scalar space".into()));
    }
    let tab = space.tabulate(elements::quadrature(elements::ASSEMBLY_DEGREE)?);
    let mut m = vec![0.0; space.dof_count()];
    for cell in 0..space.mesh.n_triangles() {
        let det = space.affine(cell).det;
        let nodes = &space.cell_nodes[cell];
        for (e, w) in tab.evals.iter().zip(&tab.rule.weights) {
            for i in 0..e.n {
                m[nodes[i]] += w * det * e.values[i];
            }
        }
    }
    Ok(m)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_rect_mesh, Rect};

    fn mesh(n: usize) -> Arc<Mesh> {
        Arc::new(build_rect_mesh(n, n, Rect::two_pi_square()).unwrap())
    }

    #[test]
    fn dof_counts() {
        let m = mesh(2);
        assert_eq!(build_space(&m, 2, 1, false).unwrap().dof_count(), 25);
        assert_eq!(build_space(&m, 1, 1, false).unwrap().dof_count(), 9);
        let v = build_space(&m, 2, 2, true).unwrap();
        assert_eq!(v.dof_count(), 50);
        assert_eq!(v.masked_count(), 32);
        for n in [1, 3, 5] {
            let m = mesh(n);
            assert_eq!(build_space(&m, 2, 1, false).unwrap().dof_count(), (2 * n + 1).pow(2));
            assert_eq!(build_space(&m, 1, 1, false).unwrap().dof_count(), (n + 1).pow(2));
        }
    }

    #[test]
    fn rejects_bad_degree() {
        assert!(build_space(&mesh(1), 3, 1, false).is_err());
        assert!(build_space(&mesh(1), 2, 3, false).is_err());
    }

    #[test]
    fn masks() {
        let m = mesh(3);
        let s = build_space(&m, 2, 1, false).unwrap();
        assert!(s.dirichlet.iter().all(|&b| !b));
        let v = build_space(&m, 2, 2, true).unwrap();
        for (dof, &masked) in v.dirichlet.iter().enumerate() {
            let p = v.nodes[dof / 2];
            assert_eq!(masked, m.domain.on_boundary(p, 1e-12));
        }
    }

    #[test]
    fn numbering_is_deterministic() {
        let a = build_space(&mesh(4), 2, 2, true).unwrap();
        let b = build_space(&mesh(4), 2, 2, true).unwrap();
        assert_eq!(a.cell_nodes, b.cell_nodes);
        assert_eq!(a.dirichlet, b.dirichlet);
        assert!(a.nodes.iter().zip(&b.nodes).all(|(p, q)| p[0].to_bits() == q[0].to_bits() && p[1].to_bits() == q[1].to_bits()));
    }

    #[test]
    fn cell_nodes_map_to_reference_nodes() {
        let s = build_space(&mesh(3), 2, 1, false).unwrap();
        for cell in 0..s.mesh.n_triangles() {
            let a = s.affine(cell);
            for (i, &r) in elements::P2_NODES.iter().enumerate() {
                let p = a.map(r);
                let q = s.nodes[s.cell_nodes[cell][i]];
                assert!((p[0] - q[0]).abs() < 1e-14 && (p[1] - q[1]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn interpolate_constants_and_errors() {
        let s = build_space(&mesh(2), 2, 1, false).unwrap();
        let one = |_: f64, _: f64, _: f64| 1.0;
        assert!(interpolate(&s, FieldRef::Scalar(&one), 0.0).unwrap().iter().all(|&v| v == 1.0));

        let bad = |x: f64, _: f64, _: f64| if x > 3.0 { f64::NAN } else { 0.0 };
        match interpolate(&s, FieldRef::Scalar(&bad), 0.0) {
            Err(Error::NonFinite { x, .. }) => assert!(x > 3.0),
            other => panic!("expected NonFinite, got {other:?}"),
        }
        let vec_field = |_: f64, _: f64, _: f64| [0.0, 0.0];
        assert!(interpolate(&s, FieldRef::Vector(&vec_field), 0.0).is_err());
    }

    #[test]
    fn mean_functional_properties() {
        let m = mesh(4);
        let s = build_space(&m, 2, 1, false).unwrap();
        let mean = mean_functional(&s).unwrap();
        let area = m.domain.area();
        let ones = vec![1.0; s.dof_count()];
        assert!((dot(&mean, &ones) - area).abs() < 1e-12 * area);
        let cosx = |x: f64, _: f64, _: f64| x.cos();
        let c = interpolate(&s, FieldRef::Scalar(&cosx), 0.0).unwrap();
        assert!(dot(&mean, &c).abs() < 1e-10);

        let v = build_space(&m, 2, 2, true).unwrap();
        assert!(mean_functional(&v).is_err());
    }
}
