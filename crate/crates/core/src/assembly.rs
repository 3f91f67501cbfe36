//! Assembly of the bilinear and trilinear forms of the discrete EHD system
//! and of load vectors.
//!
//! Conventions: row index = test function, column index = trial function.
//! Vector spaces use interleaved components (see [`crate::spaces`]).

use crate::elements::{self, Tabulation, MAX_NODES};
use crate::error::{Error, Result};
use crate::spaces::{FeSpace, FieldRef};
use crate::sparse::{CsrMatrix, TripletBuilder};

/// A discrete field given by its coefficients in a space.
#[derive(Clone, Copy)]
pub struct CoefficientField<'a> {
    pub space: &'a FeSpace,
    pub coeffs: &'a [f64],
}

impl<'a> CoefficientField<'a> {
    pub fn new(space: &'a FeSpace, coeffs: &'a [f64]) -> Result<Self> {
        if coeffs.len() != space.dof_count() {
            return Err(Error::DimensionMismatch {
                expected: space.dof_count(),
                found: coeffs.len(),
            });
        }
        Ok(Self { space, coeffs })
    }

    /// Values at the quadrature points of `cell`, from the basis expansion.
    fn values(&self, cell: usize, data: &CellData) -> Vec<[f64; 2]> {
        let nodes = &self.space.cell_nodes[cell];
        data.values
            .iter()
            .map(|phi| {
                let mut out = [0.0; 2];
                for (i, p) in phi.iter().enumerate().take(data.n) {
                    for (c, o) in out.iter_mut().enumerate().take(self.space.components) {
                        *o += p * self.coeffs[self.space.dof(nodes[i], c)];
                    }
                }
                out
            })
            .collect()
    }
}

/// Basis values, physical gradients and scaled weights on one cell.
struct CellData {
    n: usize,
    weights: Vec<f64>,
    points: Vec<[f64; 2]>,
    values: Vec<[f64; MAX_NODES]>,
    grads: Vec<[[f64; 2]; MAX_NODES]>,
}

impl CellData {
    fn new(space: &FeSpace, tab: &Tabulation, cell: usize) -> Self {
        let map = space.affine(cell);
        let n = tab.n_basis();
        let det = map.det.abs();
        Self {
            n,
            weights: tab.rule.weights.iter().map(|w| w * det).collect(),
            points: tab.rule.points.iter().map(|&p| map.map(p)).collect(),
            values: tab.evals.iter().map(|e| e.values).collect(),
            grads: tab
                .evals
                .iter()
                .map(|e| {
                    let mut g = [[0.0; 2]; MAX_NODES];
                    for i in 0..n {
                        g[i] = map.grad(e.grads[i]);
                    }
                    g
                })
                .collect(),
        }
    }
}

fn tabulation(space: &FeSpace, degree: usize) -> Result<Tabulation> {
    Ok(space.tabulate(elements::quadrature(degree)?))
}

fn check_same_mesh(a: &FeSpace, b: &FeSpace) -> Result<()> {
    if !std::sync::Arc::ptr_eq(&a.mesh, &b.mesh) {
        return Err(Error::InvalidArgument("spaces live on different meshes".into()));
    }
    Ok(())
}

/// Assembles a component-diagonal operator from a scalar local kernel.
fn assemble_diagonal(space: &FeSpace, kernel: impl Fn(usize, &CellData, &mut [[f64; MAX_NODES]; MAX_NODES])) -> Result<CsrMatrix> {
    let tab = tabulation(space, elements::ASSEMBLY_DEGREE)?;
    let n = space.n_local();
    let nc = space.components;
    let ndof = space.dof_count();
    let mut b = TripletBuilder::with_capacity(ndof, ndof, space.mesh.n_triangles() * n * n * nc);
    let mut local = [[0.0; MAX_NODES]; MAX_NODES];
    for cell in 0..space.mesh.n_triangles() {
        let data = CellData::new(space, &tab, cell);
        local.iter_mut().for_each(|r| r.fill(0.0));
        kernel(cell, &data, &mut local);
        let nodes = &space.cell_nodes[cell];
        for (a, row) in local.iter().enumerate().take(n) {
            for (bb, &v) in row.iter().enumerate().take(n) {
                for c in 0..nc {
                    b.push(space.dof(nodes[a], c), space.dof(nodes[bb], c), v);
                }
            }
        }
    }
    b.build()
}

/// Copies the upper triangle onto the lower one, so symmetric operators are
/// bitwise symmetric.
fn mirror_upper(n: usize, local: &mut [[f64; MAX_NODES]; MAX_NODES]) {
    for a in 0..n {
        for b in 0..a {
            local[a][b] = local[b][a];
        }
    }
}

/// `M[i][j] = (psi_j, psi_i)`.
pub fn mass_matrix(space: &FeSpace) -> Result<CsrMatrix> {
    assemble_diagonal(space, |_, d, local| {
        for q in 0..d.weights.len() {
            let (w, phi) = (d.weights[q], &d.values[q]);
            for a in 0..d.n {
                for b in a..d.n {
                    local[a][b] += w * phi[a] * phi[b];
                }
            }
        }
        mirror_upper(d.n, local);
    })
}

/// `K[i][j] = (grad psi_j, grad psi_i)`.
pub fn stiffness_matrix(space: &FeSpace) -> Result<CsrMatrix> {
    assemble_diagonal(space, |_, d, local| {
        for q in 0..d.weights.len() {
            let (w, g) = (d.weights[q], &d.grads[q]);
            for a in 0..d.n {
                for b in a..d.n {
                    local[a][b] += w * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                }
            }
        }
        mirror_upper(d.n, local);
    })
}

/// Skew-symmetric convection `N(w)[i][j] = 1/2 (w . grad psi_j, psi_i) - 1/2 (w . grad psi_i, psi_j)`.
///
/// The local kernel is built as `(X - X^T) / 2`, so `N = -N^T` holds exactly
/// in floating point and `v^T N v` vanishes up to summation rounding.
pub fn convection_matrix(space_u: &FeSpace, advecting: &CoefficientField<'_>) -> Result<CsrMatrix> {
    check_same_mesh(space_u, advecting.space)?;
    if advecting.space.components != 2 || space_u.components != 2 {
        return Err(Error::InvalidArgument("convection needs vector spaces".into()));
    }
    let tab_w = tabulation(advecting.space, elements::ASSEMBLY_DEGREE)?;
    assemble_diagonal(space_u, |cell, d, local| {
        let w = advecting.values(cell, &CellData::new(advecting.space, &tab_w, cell));
        let mut x = [[0.0; MAX_NODES]; MAX_NODES];
        for q in 0..d.weights.len() {
            let (wt, phi, g) = (d.weights[q], &d.values[q], &d.grads[q]);
            for a in 0..d.n {
                for b in 0..d.n {
                    x[a][b] += wt * (w[q][0] * g[b][0] + w[q][1] * g[b][1]) * phi[a];
                }
            }
        }
        for a in 0..d.n {
            for b in 0..d.n {
                local[a][b] = 0.5 * (x[a][b] - x[b][a]);
            }
        }
    })
}

/// Generic two-space assembly: `kernel(q, a, b)` returns the contribution of
/// test node `a` and trial node `b` at quadrature point `q` as a
/// `[test component][trial component]` block.
fn assemble_mixed(
    test: &FeSpace,
    trial: &FeSpace,
    coefficient: Option<&CoefficientField<'_>>,
    kernel: impl Fn(f64, &CellData, &CellData, usize, usize, usize) -> [[f64; 2]; 2],
) -> Result<CsrMatrix> {
    check_same_mesh(test, trial)?;
    if let Some(c) = coefficient {
        check_same_mesh(test, c.space)?;
    }
    let tab_test = tabulation(test, elements::ASSEMBLY_DEGREE)?;
    let tab_trial = tabulation(trial, elements::ASSEMBLY_DEGREE)?;
    let tab_coef = coefficient.map(|c| tabulation(c.space, elements::ASSEMBLY_DEGREE)).transpose()?;
    let (nt, ns) = (test.n_local(), trial.n_local());
    let mut b = TripletBuilder::with_capacity(
        test.dof_count(),
        trial.dof_count(),
        test.mesh.n_triangles() * nt * ns * test.components * trial.components,
    );
    for cell in 0..test.mesh.n_triangles() {
        let dt = CellData::new(test, &tab_test, cell);
        let ds = CellData::new(trial, &tab_trial, cell);
        let coef: Vec<f64> = match (coefficient, &tab_coef) {
            (Some(c), Some(tab)) => c.values(cell, &CellData::new(c.space, tab, cell)).iter().map(|v| v[0]).collect(),
            _ => vec![1.0; dt.weights.len()],
        };
        let mut local = vec![[[0.0; 2]; 2]; nt * ns];
        for q in 0..dt.weights.len() {
            let scale = dt.weights[q] * coef[q];
            for a in 0..nt {
                for bb in 0..ns {
                    let blk = kernel(scale, &dt, &ds, q, a, bb);
                    let l = &mut local[a * ns + bb];
                    for ci in 0..2 {
                        for cj in 0..2 {
                            l[ci][cj] += blk[ci][cj];
                        }
                    }
                }
            }
        }
        let (tn, sn) = (&test.cell_nodes[cell], &trial.cell_nodes[cell]);
        for a in 0..nt {
            for bb in 0..ns {
                let l = &local[a * ns + bb];
                for ci in 0..test.components {
                    for cj in 0..trial.components {
                        b.push(test.dof(tn[a], ci), trial.dof(sn[bb], cj), l[ci][cj]);
                    }
                }
            }
        }
    }
    b.build()
}

/// `T[i][j] = (rho * psi_j, grad chi_i)` with `chi` scalar test functions and
/// `psi` vector trial functions. Enters the charge row with a minus sign.
pub fn rho_transport_coupling(space_rho: &FeSpace, space_u: &FeSpace, rho_tilde: &CoefficientField<'_>) -> Result<CsrMatrix> {
    if space_rho.components != 1 || space_u.components != 2 {
        return Err(Error::InvalidArgument("transport coupling needs scalar rows and vector columns".into()));
    }
    assemble_mixed(space_rho, space_u, Some(rho_tilde), |s, dt, ds, q, a, b| {
        let g = dt.grads[q][a];
        let v = ds.values[q][b];
        [[s * v * g[0], s * v * g[1]], [0.0; 2]]
    })
}

/// `G[i][j] = (rho * grad phi_j, v_i)` with vector test functions `v`.
pub fn coulomb_coupling(space_u: &FeSpace, space_phi: &FeSpace, rho_tilde: &CoefficientField<'_>) -> Result<CsrMatrix> {
    if space_u.components != 2 || space_phi.components != 1 {
        return Err(Error::InvalidArgument("Coulomb coupling needs vector rows and scalar columns".into()));
    }
    assemble_mixed(space_u, space_phi, Some(rho_tilde), |s, dt, ds, q, a, b| {
        let v = dt.values[q][a];
        let g = ds.grads[q][b];
        [[s * v * g[0], 0.0], [s * v * g[1], 0.0]]
    })
}

/// `B[i][j] = (div psi_j, q_i)` with pressure test functions `q`.
pub fn divergence_matrix(space_u: &FeSpace, space_p: &FeSpace) -> Result<CsrMatrix> {
    if space_u.components != 2 || space_p.components != 1 {
        return Err(Error::InvalidArgument("divergence needs a vector and a scalar space".into()));
    }
    assemble_mixed(space_p, space_u, None, |s, dt, ds, q, a, b| {
        let v = dt.values[q][a];
        let g = ds.grads[q][b];
        [[s * v * g[0], s * v * g[1]], [0.0; 2]]
    })
}

/// Load functional `F_i = (f, v_i) + (G, grad v_i)` where `integrand(x, y)`
/// returns the value part `f` and the gradient part `G` (rows per component).
pub fn load_with_gradients(
    space: &FeSpace,
    degree: usize,
    integrand: &dyn Fn(f64, f64) -> ([f64; 2], [[f64; 2]; 2]),
) -> Result<Vec<f64>> {
    let tab = tabulation(space, degree)?;
    let mut out = vec![0.0; space.dof_count()];
    for cell in 0..space.mesh.n_triangles() {
        let d = CellData::new(space, &tab, cell);
        let nodes = &space.cell_nodes[cell];
        for q in 0..d.weights.len() {
            let [x, y] = d.points[q];
            let (f, g) = integrand(x, y);
            let finite = f.iter().chain(g.iter().flatten()).all(|v| v.is_finite());
            if !finite {
                return Err(Error::NonFinite { what: "load integrand", x, y });
            }
            for a in 0..d.n {
                let (phi, grad) = (d.values[q][a], d.grads[q][a]);
                for c in 0..space.components {
                    out[space.dof(nodes[a], c)] += d.weights[q] * (f[c] * phi + g[c][0] * grad[0] + g[c][1] * grad[1]);
                }
            }
        }
    }
    Ok(out)
}

/// `F_i = (f(., t), v_i)` by quadrature of the given degree.
pub fn load_vector(space: &FeSpace, f: FieldRef<'_>, t: f64, quad_degree: usize) -> Result<Vec<f64>> {
    if f.components() != space.components {
        return Err(Error::DimensionMismatch {
            expected: space.components,
            found: f.components(),
        });
    }
    load_with_gradients(space, quad_degree, &|x, y| {
        let mut v = [0.0; 2];
        f.eval_into(x, y, t, &mut v);
        (v, [[0.0; 2]; 2])
    })
}
