//! Measured quantities: discrete energy, total charge, L2 errors against
//! exact fields and experimental orders of convergence.

use crate::elements::{self, ERROR_DEGREE};
use crate::error::{Error, Result};
use crate::scheme::{Discretization, EhdState, ModelParams};
use crate::spaces::{dot, FeSpace, FieldRef};
use crate::sparse::norm2;

/// One logged time level.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub n: usize,
    pub t: f64,
    /// Two-level energy; `None` at `n = 0`.
    pub energy: Option<f64>,
    pub charge: f64,
    /// `||B u||_2` over the coefficient vector.
    pub div_residual: f64,
    pub u_norm: f64,
    pub phi_mean: f64,
    pub p_mean: f64,
    /// L2 errors of `(phi, rho, u)` when an exact solution is known.
    pub errors: Option<[f64; 3]>,
}

/// Per-level records of a run plus its metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsLog {
    pub h: f64,
    pub tau: f64,
    pub params: ModelParams,
    pub records: Vec<StepRecord>,
}

impl DiagnosticsLog {
    pub fn new(h: f64, tau: f64, params: ModelParams) -> Self {
        Self {
            h,
            tau,
            params,
            records: Vec::new(),
        }
    }

    pub fn last(&self) -> Option<&StepRecord> {
        self.records.last()
    }

    pub fn max_abs_charge(&self) -> f64 {
        self.records.iter().map(|r| r.charge.abs()).fold(0.0, f64::max)
    }

    /// Largest `E^{n+1} - E^n` over consecutive logged energies.
    pub fn max_energy_increase(&self) -> Option<f64> {
        let e: Vec<f64> = self.records.iter().filter_map(|r| r.energy).collect();
        e.windows(2).map(|w| w[1] - w[0]).reduce(f64::max)
    }

    /// Largest `||B u|| / max(||u||, 1)`.
    pub fn max_relative_divergence(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.div_residual / r.u_norm.max(1.0))
            .fold(0.0, f64::max)
    }
}

/// `E^n = eps|grad phi^n|^2 + eps|grad(2phi^n - phi^{n-1})|^2 + |u^n|^2 + |2u^n - u^{n-1}|^2`.
pub fn discrete_energy(disc: &Discretization, epsilon: f64, state: &EhdState) -> Result<f64> {
    let prev = state.prev.as_ref().ok_or(Error::EnergyAtLevelZero)?;
    let ext = |now: &[f64], old: &[f64]| -> Vec<f64> { now.iter().zip(old).map(|(a, b)| 2.0 * a - b).collect() };
    let phi_ext = ext(&state.phi, &prev.phi);
    let u_ext = ext(&state.u, &prev.u);
    let k = &disc.stiffness;
    let m = &disc.mass_u;
    Ok(epsilon * (k.bilinear(&state.phi, &state.phi) + k.bilinear(&phi_ext, &phi_ext))
        + m.bilinear(&state.u, &state.u)
        + m.bilinear(&u_ext, &u_ext))
}

/// Integral of the discrete charge density.
pub fn total_charge(disc: &Discretization, state: &EhdState) -> f64 {
    dot(&disc.mean_scalar, &state.rho)
}

/// `||B u||_2`.
pub fn divergence_residual(disc: &Discretization, u: &[f64]) -> f64 {
    norm2(&disc.divergence.matvec(u))
}

/// L2 distance between a discrete field and an exact one.
pub fn l2_error(space: &FeSpace, coeffs: &[f64], exact: FieldRef<'_>, t: f64) -> Result<f64> {
    l2_error_with_degree(space, coeffs, exact, t, ERROR_DEGREE)
}

pub fn l2_error_with_degree(space: &FeSpace, coeffs: &[f64], exact: FieldRef<'_>, t: f64, degree: usize) -> Result<f64> {
    if coeffs.len() != space.dof_count() {
        return Err(Error::DimensionMismatch {
            expected: space.dof_count(),
            found: coeffs.len(),
        });
    }
    if exact.components() != space.components {
        return Err(Error::DimensionMismatch {
            expected: space.components,
            found: exact.components(),
        });
    }
    let tab = space.tabulate(elements::quadrature(degree)?);
    let nc = space.components;
    let mut sum = 0.0;
    let mut ex = [0.0; 2];
    for cell in 0..space.mesh.n_triangles() {
        let map = space.affine(cell);
        let nodes = &space.cell_nodes[cell];
        for ((e, w), r) in tab.evals.iter().zip(&tab.rule.weights).zip(&tab.rule.points) {
            let x = map.map(*r);
            exact.eval_into(x[0], x[1], t, &mut ex);
            for (c, exc) in ex.iter().enumerate().take(nc) {
                let vh: f64 = (0..e.n).map(|i| e.values[i] * coeffs[space.dof(nodes[i], c)]).sum();
                let d = vh - exc;
                sum += w * map.det.abs() * d * d;
            }
        }
    }
    if !sum.is_finite() {
        return Err(Error::NonFinite {
            what: "L2 error integrand",
            x: f64::NAN,
            y: f64::NAN,
        });
    }
    Ok(sum.sqrt())
}

/// `rate_k = log(e_k / e_{k+1}) / log(p_k / p_{k+1})`.
pub fn eoc(errors: &[f64], params: &[f64]) -> Vec<f64> {
    errors
        .windows(2)
        .zip(params.windows(2))
        .map(|(e, p)| (e[0] / e[1]).ln() / (p[0] / p[1]).ln())
        .collect()
}
