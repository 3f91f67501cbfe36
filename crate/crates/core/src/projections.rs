//! L2, Ritz and Stokes projections onto the finite element spaces, and the
//! discrete Poisson solve that defines the initial potential.
//!
//! Mean-value conditions are imposed by pinning one DOF and shifting by a
//! constant afterwards; where the bordered formulation has a nonzero
//! multiplier, its value is known from a row sum and moved to the
//! right-hand side first. This avoids a dense constraint row in the matrix.

use crate::assembly::{self, divergence_matrix, load_vector, mass_matrix, stiffness_matrix};
use crate::elements::ERROR_DEGREE;
use crate::error::{Error, Result};
use crate::spaces::{dot, interpolate, mean_functional, FeSpace, FieldRef};
use crate::sparse::{self, BlockSystem};


/// Largest `|integral(rho) / area|` accepted by [`initial_potential`].
pub const CHARGE_COMPATIBILITY_TOL: f64 = 1e-8;

/// Adds the constant that makes `mean . x = target`. `mean` is the
/// integration functional, so `mean . 1` is the domain area.
pub fn shift_to_mean(x: &mut [f64], mean: &[f64], target: f64) {
    let area: f64 = mean.iter().sum();
    let c = (target - dot(mean, x)) / area;
    for v in x.iter_mut() {
        *v += c;
    }
}

/// Pins DOF `k` to zero in `a` and `rhs`.
fn pin(a: &mut sparse::CsrMatrix, rhs: &mut [f64], k: usize) -> Result<()> {
    let mut fixed = vec![false; a.rows];
    fixed[k] = true;
    a.eliminate_with_values(&fixed, &vec![0.0; a.rows], rhs)
}

/// `P_h f`: solves `M c = (f, v_i)`.
pub fn l2_project(space: &FeSpace, f: FieldRef<'_>, t: f64) -> Result<Vec<f64>> {
    let mass = mass_matrix(space)?;
    let rhs = load_vector(space, f, t, ERROR_DEGREE)?;
    sparse::solve_spd(&mass, &rhs)
}

/// `R_h f` for a scalar space: `(grad R_h f, grad v) = (grad f, grad v)` with
/// the mean of `R_h f` matched to the mean of `f`.
pub fn ritz_project(
    space: &FeSpace,
    value: &dyn Fn(f64, f64, f64) -> f64,
    gradient: &dyn Fn(f64, f64, f64) -> [f64; 2],
    t: f64,
) -> Result<Vec<f64>> {
    let mut stiffness = stiffness_matrix(space)?;
    let m = mean_functional(space)?;
    let mut rhs = assembly::load_with_gradients(space, ERROR_DEGREE, &|x, y| ([0.0; 2], [gradient(x, y, t), [0.0; 2]]))?;
    let integral: f64 = load_vector(space, FieldRef::Scalar(value), t, ERROR_DEGREE)?.iter().sum();
    // The multiplier vanishes: the gradient load sums to zero.
    pin(&mut stiffness, &mut rhs, 0)?;
    let mut c = sparse::solve_spd(&stiffness, &rhs)?;
    shift_to_mean(&mut c, &m, integral);
    Ok(c)
}

/// `(Q_h u, Q_h p)`: the discrete Stokes problem driven by the exact
/// velocity gradient `u_jacobian` (`[component][derivative]`) and pressure.
/// Masked velocity DOFs take the nodal values of `u`; the discrete pressure
/// mean is matched to the mean of `p`.
pub fn stokes_project(
    space_u: &FeSpace,
    space_p: &FeSpace,
    eta: f64,
    u: &dyn Fn(f64, f64, f64) -> [f64; 2],
    u_jacobian: &dyn Fn(f64, f64, f64) -> [[f64; 2]; 2],
    p: &dyn Fn(f64, f64, f64) -> f64,
    t: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if space_u.components != 2 || space_p.components != 1 {
        return Err(Error::InvalidArgument("Stokes projection needs vector velocity and scalar pressure".into()));
    }
    let k = stiffness_matrix(space_u)?;
    let b = divergence_matrix(space_u, space_p)?;
    let m_p = mean_functional(space_p)?;

    let rhs_u = assembly::load_with_gradients(space_u, ERROR_DEGREE, &|x, y| {
        let j = u_jacobian(x, y, t);
        let pv = p(x, y, t);
        ([0.0; 2], [[eta * j[0][0] - pv, eta * j[0][1]], [eta * j[1][0], eta * j[1][1] - pv]])
    })?;
    let mut rhs_p = assembly::load_with_gradients(space_p, ERROR_DEGREE, &|x, y| {
        let j = u_jacobian(x, y, t);
        ([j[0][0] + j[1][1], 0.0], [[0.0; 2]; 2])
    })?;
    let p_integral: f64 = load_vector(space_p, FieldRef::Scalar(p), t, ERROR_DEGREE)?.iter().sum();
    let boundary = interpolate(space_u, FieldRef::Vector(u), t)?;

    // Summing the divergence rows leaves only the boundary flux of the lifted
    // velocity, which fixes the multiplier of the pressure mean.
    let lift: Vec<f64> = boundary.iter().zip(&space_u.dirichlet).map(|(&v, &m)| if m { v } else { 0.0 }).collect();
    let flux: f64 = b.matvec(&lift).iter().sum();
    let area: f64 = m_p.iter().sum();
    let lambda = (rhs_p.iter().sum::<f64>() - flux) / area;
    for (r, m) in rhs_p.iter_mut().zip(&m_p) {
        *r -= lambda * m;
    }

    let mut sys = BlockSystem::new(&[("u", space_u.dof_count()), ("p", space_p.dof_count())]);
    let (uv, pv) = (sys.var("u"), sys.var("p"));
    sys.add_block(uv, uv, &k, eta)?;
    sys.add_block(uv, pv, &b.transpose(), -1.0)?;
    sys.add_block(pv, uv, &b, 1.0)?;
    sys.add_block(pv, pv, &sparse::CsrMatrix::identity(space_p.dof_count()), 0.0)?;
    sys.set_rhs(uv, &rhs_u);
    sys.set_rhs(pv, &rhs_p);

    let mut fixed = vec![false; sys.dim()];
    fixed[sys.range(uv)].copy_from_slice(&space_u.dirichlet);
    fixed[sys.range(pv).start] = true;
    let mut g = vec![0.0; sys.dim()];
    g[sys.range(uv)].copy_from_slice(&lift);
    let mut a = sys.assemble();
    let mut rhs = std::mem::take(&mut sys.rhs);
    a.eliminate_with_values(&fixed, &g, &mut rhs)?;
    let x = sparse::solve(&a, &rhs)?;
    let mut p_h = sys.split(&x, pv).to_vec();
    shift_to_mean(&mut p_h, &m_p, p_integral);
    Ok((sys.split(&x, uv).to_vec(), p_h))
}

/// Initial potential: `scale * (grad phi, grad v) = (rho, v)` with zero mean,
/// where `scale` is 1 (default) or the permittivity.
pub fn initial_potential(space_phi: &FeSpace, rho0: &[f64], scale: f64) -> Result<Vec<f64>> {
    let mass = mass_matrix(space_phi)?;
    let stiffness = stiffness_matrix(space_phi)?;
    let m = mean_functional(space_phi)?;
    initial_potential_with(&mass, &stiffness, &m, space_phi.mesh.domain.area(), rho0, scale)
}

pub(crate) fn initial_potential_with(
    mass: &sparse::CsrMatrix,
    stiffness: &sparse::CsrMatrix,
    mean: &[f64],
    area: f64,
    rho0: &[f64],
    scale: f64,
) -> Result<Vec<f64>> {
    if rho0.len() != mean.len() {
        return Err(Error::DimensionMismatch {
            expected: mean.len(),
            found: rho0.len(),
        });
    }
    let charge_mean = dot(mean, rho0) / area;
    if charge_mean.abs() > CHARGE_COMPATIBILITY_TOL {
        return Err(Error::IncompatibleCharge { mean: charge_mean });
    }
    let mut rhs = mass.matvec(rho0);
    if rhs.iter().all(|&v| v == 0.0) {
        return Ok(vec![0.0; rho0.len()]);
    }
    // The multiplier absorbs the (tolerated) residual mean of the charge.
    let lambda = rhs.iter().sum::<f64>() / mean.iter().sum::<f64>();
    for (r, m) in rhs.iter_mut().zip(mean) {
        *r -= lambda * m;
    }
    let mut a = stiffness.scaled(scale);
    pin(&mut a, &mut rhs, 0)?;
    let mut phi = sparse::solve_spd(&a, &rhs)?;
    shift_to_mean(&mut phi, mean, 0.0);
    Ok(phi)
}
