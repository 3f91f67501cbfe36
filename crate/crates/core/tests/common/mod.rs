//! Dense reference assembly that shares no code with the library's element
//! layer: Lagrange bases are built in physical coordinates by inverting a
//! monomial Vandermonde matrix, and integrals use a collapsed Gauss-Legendre
//! rule on each triangle.

#![allow(dead_code)]

use ehd_core::mms::forcing;
use ehd_core::sparse::CsrMatrix;
use ehd_core::{FeSpace, ManufacturedCase, ModelParams};
use nalgebra::{DMatrix, DVector};

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (x + 1.0), 0.5 * w));
    }
    out
}

/// Collapsed tensor rule on the triangle `p`: physical points and weights.
pub fn triangle_rule(p: [[f64; 2]; 3], n: usize) -> Vec<([f64; 2], f64)> {
    let gl = gauss_legendre(n);
    let det = ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1])).abs();
    let mut out = Vec::new();
    for &(s, ws) in &gl {
        for &(r, wr) in &gl {
            let (a, b) = (s, r * (1.0 - s));
            let x = [
                p[0][0] + a * (p[1][0] - p[0][0]) + b * (p[2][0] - p[0][0]),
                p[0][1] + a * (p[1][1] - p[0][1]) + b * (p[2][1] - p[0][1]),
            ];
            out.push((x, ws * wr * (1.0 - s) * det));
        }
    }
    out
}

/// Lagrange basis of the local nodes of one cell, in physical coordinates.
pub struct CellBasis {
    pub global: Vec<usize>,
    center: [f64; 2],
    degree: usize,
    coeffs: DMatrix<f64>,
}

fn monomials(degree: usize, x: f64, y: f64) -> (Vec<f64>, Vec<[f64; 2]>) {
    if degree == 1 {
        (vec![1.0, x, y], vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    } else {
        (
            vec![1.0, x, y, x * x, x * y, y * y],
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [2.0 * x, 0.0], [y, x], [0.0, 2.0 * y]],
        )
    }
}

impl CellBasis {
    pub fn new(space: &FeSpace, cell: usize) -> Self {
        let n = if space.degree == 1 { 3 } else { 6 };
        let global: Vec<usize> = space.cell_nodes[cell][..n].to_vec();
        let pts: Vec<[f64; 2]> = global.iter().map(|&g| space.nodes[g]).collect();
        let center = [pts.iter().map(|p| p[0]).sum::<f64>() / n as f64, pts.iter().map(|p| p[1]).sum::<f64>() / n as f64];
        let v = DMatrix::from_fn(n, n, |i, k| monomials(space.degree, pts[i][0] - center[0], pts[i][1] - center[1]).0[k]);
        let coeffs = v.try_inverse().expect("unisolvent nodes");
        Self {
            global,
            center,
            degree: space.degree,
            coeffs,
        }
    }

    pub fn eval(&self, x: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
        let (m, dm) = monomials(self.degree, x[0] - self.center[0], x[1] - self.center[1]);
        let n = m.len();
        let mut vals = vec![0.0; n];
        let mut grads = vec![[0.0; 2]; n];
        for i in 0..n {
            for k in 0..n {
                vals[i] += self.coeffs[(k, i)] * m[k];
                grads[i][0] += self.coeffs[(k, i)] * dm[k][0];
                grads[i][1] += self.coeffs[(k, i)] * dm[k][1];
            }
        }
        (vals, grads)
    }
}

const RULE_POINTS: usize = 8;

/// Walks every cell's quadrature points, handing the callback the bases of
/// both spaces (which must share a mesh).
fn for_each_point(a: &FeSpace, b: &FeSpace, mut f: impl FnMut(&CellBasis, &CellBasis, [f64; 2], f64)) {
    for cell in 0..a.mesh.n_triangles() {
        let (ba, bb) = (CellBasis::new(a, cell), CellBasis::new(b, cell));
        for (x, w) in triangle_rule(a.mesh.triangle_points(cell), RULE_POINTS) {
            f(&ba, &bb, x, w);
        }
    }
}

/// Value of a discrete field at `x` on a cell.
fn field_at(space: &FeSpace, basis: &CellBasis, coeffs: &[f64], x: [f64; 2]) -> [f64; 2] {
    let (v, _) = basis.eval(x);
    let mut out = [0.0; 2];
    for (i, &g) in basis.global.iter().enumerate() {
        for (c, o) in out.iter_mut().enumerate().take(space.components) {
            *o += v[i] * coeffs[space.dof(g, c)];
        }
    }
    out
}

pub fn mass(space: &FeSpace) -> DMatrix<f64> {
    let n = space.dof_count();
    let mut m = DMatrix::zeros(n, n);
    for_each_point(space, space, |b, _, x, w| {
        let (v, _) = b.eval(x);
        for (i, &gi) in b.global.iter().enumerate() {
            for (j, &gj) in b.global.iter().enumerate() {
                for c in 0..space.components {
                    m[(space.dof(gi, c), space.dof(gj, c))] += w * v[i] * v[j];
                }
            }
        }
    });
    m
}

pub fn stiffness(space: &FeSpace) -> DMatrix<f64> {
    let n = space.dof_count();
    let mut m = DMatrix::zeros(n, n);
    for_each_point(space, space, |b, _, x, w| {
        let (_, g) = b.eval(x);
        for (i, &gi) in b.global.iter().enumerate() {
            for (j, &gj) in b.global.iter().enumerate() {
                for c in 0..space.components {
                    m[(space.dof(gi, c), space.dof(gj, c))] += w * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                }
            }
        }
    });
    m
}

/// `B[q_a][(b, d)] = (q_a, d_d psi_b)`.
pub fn divergence(space_u: &FeSpace, space_p: &FeSpace) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(space_p.dof_count(), space_u.dof_count());
    for_each_point(space_p, space_u, |bp, bu, x, w| {
        let (q, _) = bp.eval(x);
        let (_, g) = bu.eval(x);
        for (a, &ga) in bp.global.iter().enumerate() {
            for (b, &gb) in bu.global.iter().enumerate() {
                for d in 0..2 {
                    m[(ga, space_u.dof(gb, d))] += w * q[a] * g[b][d];
                }
            }
        }
    });
    m
}

/// Skew convection with advecting field `wc` in the velocity space.
pub fn convection(space_u: &FeSpace, wc: &[f64]) -> DMatrix<f64> {
    let n = space_u.dof_count();
    let mut m = DMatrix::zeros(n, n);
    for_each_point(space_u, space_u, |b, _, x, w| {
        let (v, g) = b.eval(x);
        let adv = field_at(space_u, b, wc, x);
        for (i, &gi) in b.global.iter().enumerate() {
            for (j, &gj) in b.global.iter().enumerate() {
                let fwd = (adv[0] * g[j][0] + adv[1] * g[j][1]) * v[i];
                let bwd = (adv[0] * g[i][0] + adv[1] * g[i][1]) * v[j];
                for c in 0..2 {
                    m[(space_u.dof(gi, c), space_u.dof(gj, c))] += w * 0.5 * (fwd - bwd);
                }
            }
        }
    });
    m
}

/// `T[chi_a][(b, d)] = (rho psi_b, d_d chi_a)`.
pub fn transport(space_s: &FeSpace, space_u: &FeSpace, rho: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(space_s.dof_count(), space_u.dof_count());
    for_each_point(space_s, space_u, |bs, bu, x, w| {
        let (_, gs) = bs.eval(x);
        let (vu, _) = bu.eval(x);
        let r = field_at(space_s, bs, rho, x)[0];
        for (a, &ga) in bs.global.iter().enumerate() {
            for (b, &gb) in bu.global.iter().enumerate() {
                for d in 0..2 {
                    m[(ga, space_u.dof(gb, d))] += w * r * vu[b] * gs[a][d];
                }
            }
        }
    });
    m
}

/// `G[(a, c)][b] = (rho d_c phi_b, psi_a)`.
pub fn coulomb(space_u: &FeSpace, space_s: &FeSpace, rho: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(space_u.dof_count(), space_s.dof_count());
    for_each_point(space_u, space_s, |bu, bs, x, w| {
        let (vu, _) = bu.eval(x);
        let (_, gs) = bs.eval(x);
        let r = field_at(space_s, bs, rho, x)[0];
        for (a, &ga) in bu.global.iter().enumerate() {
            for (b, &gb) in bs.global.iter().enumerate() {
                for c in 0..2 {
                    m[(space_u.dof(ga, c), gb)] += w * r * vu[a] * gs[b][c];
                }
            }
        }
    });
    m
}

/// Largest entrywise difference and the largest entry of the oracle.
pub fn compare(a: &CsrMatrix, oracle: &DMatrix<f64>) -> (f64, f64) {
    assert_eq!((a.rows, a.cols), oracle.shape());
    let dense = a.to_dense();
    let mut diff: f64 = 0.0;
    for i in 0..a.rows {
        for j in 0..a.cols {
            diff = diff.max((dense[i][j] - oracle[(i, j)]).abs());
        }
    }
    (diff, oracle.amax())
}

pub fn to_dvector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

/// Largest gap, relative to `max(|f|, 1)`, between the closed-form forcing and
/// the strong residual of the exact fields by centered differences of step
/// `h`. Only the value closures of `case` are used.
pub fn forcing_gap(case: &ManufacturedCase, params: &ModelParams, h: f64, points: &[[f64; 3]]) -> f64 {
    let f = forcing(case, params);
    let (fphi, frho, fu) = (f.phi.unwrap(), f.rho.unwrap(), f.u.unwrap());
    let (phi, rho, p, u) = (&case.phi.value, &case.rho.value, &case.p.value, &case.u.value);
    let grad = |g: &dyn Fn(f64, f64, f64) -> f64, x: f64, y: f64, t: f64| {
        [(g(x + h, y, t) - g(x - h, y, t)) / (2.0 * h), (g(x, y + h, t) - g(x, y - h, t)) / (2.0 * h)]
    };
    let lap = |g: &dyn Fn(f64, f64, f64) -> f64, x: f64, y: f64, t: f64| {
        (g(x + h, y, t) + g(x - h, y, t) + g(x, y + h, t) + g(x, y - h, t) - 4.0 * g(x, y, t)) / (h * h)
    };
    let d_t = |g: &dyn Fn(f64, f64, f64) -> f64, x: f64, y: f64, t: f64| (g(x, y, t + h) - g(x, y, t - h)) / (2.0 * h);
    let uc = |c: usize| move |x: f64, y: f64, t: f64| u(x, y, t)[c];

    let mut worst: f64 = 0.0;
    for &[x, y, t] in points {
        let uv = u(x, y, t);
        let fd_phi = -params.epsilon * lap(&**phi, x, y, t) - rho(x, y, t);
        let gr = grad(&**rho, x, y, t);
        let fd_rho = d_t(&**rho, x, y, t) + uv[0] * gr[0] + uv[1] * gr[1] - params.d_coeff * lap(&**rho, x, y, t)
            + params.sigma / params.epsilon * rho(x, y, t);
        let gp = grad(&**p, x, y, t);
        let gphi = grad(&**phi, x, y, t);
        let mut fd_u = [0.0; 2];
        for (c, o) in fd_u.iter_mut().enumerate() {
            let comp = uc(c);
            let g = grad(&comp, x, y, t);
            *o = d_t(&comp, x, y, t) + uv[0] * g[0] + uv[1] * g[1] - params.eta * lap(&comp, x, y, t) + gp[c] + rho(x, y, t) * gphi[c];
        }
        let exact_u = fu(x, y, t);
        for (a, b) in [(fphi(x, y, t), fd_phi), (frho(x, y, t), fd_rho), (exact_u[0], fd_u[0]), (exact_u[1], fd_u[1])] {
            worst = worst.max((a - b).abs() / a.abs().max(1.0));
        }
    }
    worst
}
