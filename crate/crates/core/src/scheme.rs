//! The fully discrete EHD time stepper.
//!
//! Unknown order of the monolithic system: `[phi | rho | u | p]`. The first
//! step is BDF1, later steps BDF2. The charge density and velocity that enter
//! the nonlinear couplings are extrapolated from previous levels, so each step
//! is a single linear solve.
//!
//! The zero-mean conditions on `phi` and `p` carry Lagrange multipliers whose
//! values follow from row sums before the solve: summing the charge rows gives
//! `integral(rho^{n+1})`, which fixes `lambda_phi`, and `lambda_p = 0` because
//! the velocity vanishes on the boundary. The multipliers therefore move to
//! the right-hand side, one DOF of each of `phi` and `p` is pinned, and the
//! means are restored by a constant shift afterwards (constants lie in the
//! kernels of `K`, `G` and `B^T`). This yields the bordered system's solution
//! without its dense constraint row and column, which would ruin the sparsity
//! of the LU factors.

use std::sync::Arc;
use std::time::Instant;

use log::{debug, warn};

use crate::assembly::{
    self, convection_matrix, coulomb_coupling, divergence_matrix, mass_matrix, rho_transport_coupling, stiffness_matrix, CoefficientField,
};
use crate::diagnostics::{self, DiagnosticsLog, StepRecord};
use crate::elements::ASSEMBLY_DEGREE;
use crate::error::{Error, Result};
use crate::mesh::{build_rect_mesh, mesh_size, Mesh, Rect};
use crate::mms::ManufacturedCase;
use crate::projections::{initial_potential_with, l2_project, shift_to_mean, stokes_project};
use crate::spaces::{build_space, dot, mean_functional, FeSpace, FieldRef, ScalarField, TensorField, VectorField};
use crate::sparse::{norm2, BlockSystem, CsrMatrix, DirectSolver};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub epsilon: f64,
    pub d_coeff: f64,
    pub sigma: f64,
    pub eta: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            epsilon: 1.0,
            d_coeff: 1.0,
            sigma: 1.0,
            eta: 1.0,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [("epsilon", self.epsilon), ("d_coeff", self.d_coeff), ("eta", self.eta)];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} = {v} must be positive")));
            }
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::InvalidArgument(format!("sigma = {} must be nonnegative", self.sigma)));
        }
        Ok(())
    }
}

/// Uniform partition of `[0, t_end]` into `steps` intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub tau: f64,
    pub t_end: f64,
    pub steps: usize,
}

impl TimeGrid {
    /// `t_end / tau` must be an integer to within `1e-12`. `t_end = 0` gives
    /// an empty grid.
    pub fn new(tau: f64, t_end: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidArgument(format!("time step {tau} must be positive")));
        }
        if !(t_end.is_finite() && t_end >= 0.0) {
            return Err(Error::InvalidArgument(format!("final time {t_end} must be nonnegative")));
        }
        let steps = (t_end / tau).round();
        if (steps * tau - t_end).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("final time {t_end} is not a multiple of tau = {tau}")));
        }
        Ok(Self {
            tau,
            t_end,
            steps: steps as usize,
        })
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.tau
    }
}

/// Coefficients of the previous time level.
#[derive(Debug, Clone, PartialEq)]
pub struct PrevLevel {
    pub phi: Vec<f64>,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
}

impl PrevLevel {
    pub fn zeros(disc: &Discretization) -> Self {
        let (ns, nu) = (disc.scalar.dof_count(), disc.velocity.dof_count());
        Self {
            phi: vec![0.0; ns],
            rho: vec![0.0; ns],
            u: vec![0.0; nu],
        }
    }
}

/// Discrete fields at level `n`, plus level `n - 1` once it exists.
#[derive(Debug, Clone, PartialEq)]
pub struct EhdState {
    pub n: usize,
    pub t: f64,
    pub phi: Vec<f64>,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub prev: Option<PrevLevel>,
}

impl EhdState {
    pub fn zeros(disc: &Discretization) -> Self {
        let (ns, nu, np) = (disc.scalar.dof_count(), disc.velocity.dof_count(), disc.pressure.dof_count());
        Self {
            n: 0,
            t: 0.0,
            phi: vec![0.0; ns],
            rho: vec![0.0; ns],
            u: vec![0.0; nu],
            p: vec![0.0; np],
            prev: None,
        }
    }
}

/// Optional source terms; `None` entries are zero.
#[derive(Clone, Default)]
pub struct ForcingSet {
    pub phi: Option<ScalarField>,
    pub rho: Option<ScalarField>,
    pub u: Option<VectorField>,
}

impl ForcingSet {
    pub fn none() -> Self {
        Self::default()
    }
}

/// Continuous initial profiles; `u_jacobian` and `p` drive the Stokes projection.
#[derive(Clone)]
pub struct InitialData {
    pub rho: ScalarField,
    pub u: VectorField,
    pub u_jacobian: TensorField,
    pub p: ScalarField,
    pub t0: f64,
}

impl InitialData {
    pub fn zero() -> Self {
        Self {
            rho: Arc::new(|_, _, _| 0.0),
            u: Arc::new(|_, _, _| [0.0; 2]),
            u_jacobian: Arc::new(|_, _, _| [[0.0; 2]; 2]),
            p: Arc::new(|_, _, _| 0.0),
            t0: 0.0,
        }
    }
}

/// Spaces and the time-independent operators of one mesh.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: Arc<Mesh>,
    /// P2 space shared by the potential and the charge density.
    pub scalar: FeSpace,
    /// P2 vector space with homogeneous Dirichlet conditions.
    pub velocity: FeSpace,
    /// P1 pressure space.
    pub pressure: FeSpace,
    pub mass: CsrMatrix,
    pub stiffness: CsrMatrix,
    pub mass_u: CsrMatrix,
    pub stiffness_u: CsrMatrix,
    /// `B[q][v] = (q, div v)`.
    pub divergence: CsrMatrix,
    pub mean_scalar: Vec<f64>,
    pub mean_pressure: Vec<f64>,
}

impl Discretization {
    pub fn new(mesh: Mesh) -> Result<Self> {
        let mesh = Arc::new(mesh);
        let scalar = build_space(&mesh, 2, 1, false)?;
        let velocity = build_space(&mesh, 2, 2, true)?;
        let pressure = build_space(&mesh, 1, 1, false)?;
        Ok(Self {
            mass: mass_matrix(&scalar)?,
            stiffness: stiffness_matrix(&scalar)?,
            mass_u: mass_matrix(&velocity)?,
            stiffness_u: stiffness_matrix(&velocity)?,
            divergence: divergence_matrix(&velocity, &pressure)?,
            mean_scalar: mean_functional(&scalar)?,
            mean_pressure: mean_functional(&pressure)?,
            mesh,
            scalar,
            velocity,
            pressure,
        })
    }

    /// `n x n` mesh of `domain`.
    pub fn square(n: usize, domain: Rect) -> Result<Self> {
        Self::new(build_rect_mesh(n, n, domain)?)
    }

    pub fn h(&self) -> f64 {
        mesh_size(&self.mesh)
    }

    /// Total number of unknowns of one monolithic step.
    pub fn system_size(&self) -> usize {
        2 * self.scalar.dof_count() + self.velocity.dof_count() + self.pressure.dof_count()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepOptions {
    /// Scale the initial Poisson solve by the permittivity.
    pub initial_potential_with_epsilon: bool,
    /// Pin velocity, pressure and the pressure multiplier to zero.
    pub frozen_velocity: bool,
}

/// Projects the initial profiles: `rho_h^0 = P_h rho0`, `(u_h^0, p_h^0) = Q_h(u0, p0)`,
/// and `phi_h^0` from the discrete Poisson problem driven by `rho_h^0`.
pub fn init_state(disc: &Discretization, params: &ModelParams, data: &InitialData, options: StepOptions) -> Result<EhdState> {
    params.validate()?;
    let t0 = data.t0;
    let rho = l2_project(&disc.scalar, FieldRef::Scalar(&*data.rho), t0)?;
    let (u, p) = if options.frozen_velocity {
        (vec![0.0; disc.velocity.dof_count()], vec![0.0; disc.pressure.dof_count()])
    } else {
        // The velocity space carries homogeneous boundary values.
        stokes_project(&disc.velocity, &disc.pressure, params.eta, &|_, _, _| [0.0; 2], &*data.u_jacobian, &*data.p, t0)?
    };
    let scale = if options.initial_potential_with_epsilon { params.epsilon } else { 1.0 };
    let phi = initial_potential_with(&disc.mass, &disc.stiffness, &disc.mean_scalar, disc.mesh.domain.area(), &rho, scale)?;
    Ok(EhdState {
        n: 0,
        t: t0,
        phi,
        rho,
        u,
        p,
        prev: None,
    })
}

/// `v~^1 = v^0`, `v~^{n+1} = 2 v^n - v^{n-1}`, for the charge and velocity.
pub fn extrapolate(state: &EhdState) -> (Vec<f64>, Vec<f64>) {
    match &state.prev {
        None => (state.rho.clone(), state.u.clone()),
        Some(prev) => (extrapolate_vec(&state.rho, &prev.rho), extrapolate_vec(&state.u, &prev.u)),
    }
}

fn extrapolate_vec(now: &[f64], old: &[f64]) -> Vec<f64> {
    now.iter().zip(old).map(|(a, b)| 2.0 * a - b).collect()
}

/// Advances an [`EhdState`] one step at a time, reusing the solver's
/// symbolic factorization across steps.
pub struct Stepper {
    disc: Arc<Discretization>,
    params: ModelParams,
    tau: f64,
    forcing: ForcingSet,
    options: StepOptions,
    solver: DirectSolver,
}

impl Stepper {
    pub fn new(disc: Arc<Discretization>, params: ModelParams, tau: f64, forcing: ForcingSet, options: StepOptions) -> Result<Self> {
        params.validate()?;
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidArgument(format!("time step {tau} must be positive")));
        }
        let h = disc.h();
        if tau > h.sqrt() {
            warn!("tau = {tau} exceeds h^(1/2) = {}; the error estimate assumes tau <= h^(1/2)", h.sqrt());
        }
        Ok(Self {
            disc,
            params,
            tau,
            forcing,
            options,
            solver: DirectSolver::new(),
        })
    }

    pub fn discretization(&self) -> &Arc<Discretization> {
        &self.disc
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn init_state(&self, data: &InitialData) -> Result<EhdState> {
        init_state(&self.disc, &self.params, data, self.options)
    }

    /// Solves for level `n + 1`.
    pub fn step(&mut self, state: &EhdState) -> Result<EhdState> {
        let d = &*self.disc;
        let ModelParams {
            epsilon,
            d_coeff,
            sigma,
            eta,
        } = self.params;
        let tau = self.tau;
        let t_next = state.t + tau;
        let clock = Instant::now();
        let (rho_t, u_t) = extrapolate(state);

        let (alpha, hist_rho, hist_u) = match &state.prev {
            None => (1.0, scaled(&state.rho, 1.0 / tau), scaled(&state.u, 1.0 / tau)),
            Some(prev) => {
                let c = 1.0 / (2.0 * tau);
                let r: Vec<f64> = state.rho.iter().zip(&prev.rho).map(|(a, b)| c * (4.0 * a - b)).collect();
                let u: Vec<f64> = state.u.iter().zip(&prev.u).map(|(a, b)| c * (4.0 * a - b)).collect();
                (1.5, r, u)
            }
        };

        let rho_field = CoefficientField::new(&d.scalar, &rho_t)?;
        let u_field = CoefficientField::new(&d.velocity, &u_t)?;
        let convection = convection_matrix(&d.velocity, &u_field)?;
        let transport = rho_transport_coupling(&d.scalar, &d.velocity, &rho_field)?;
        let coulomb = coulomb_coupling(&d.velocity, &d.scalar, &rho_field)?;

        let (ns, nu, np) = (d.scalar.dof_count(), d.velocity.dof_count(), d.pressure.dof_count());
        let mut sys = BlockSystem::new(&[("phi", ns), ("rho", ns), ("u", nu), ("p", np)]);
        let (phi, rho, u, p) = (sys.var("phi"), sys.var("rho"), sys.var("u"), sys.var("p"));

        sys.add_block(phi, phi, &d.stiffness, epsilon)?;
        sys.add_block(phi, rho, &d.mass, -1.0)?;

        let rho_rho = CsrMatrix::linear_combination(&[(alpha / tau + sigma / epsilon, &d.mass), (d_coeff, &d.stiffness)])?;
        sys.add_block(rho, rho, &rho_rho, 1.0)?;
        sys.add_block(rho, u, &transport, -1.0)?;

        let u_u = CsrMatrix::linear_combination(&[(alpha / tau, &d.mass_u), (1.0, &convection), (eta, &d.stiffness_u)])?;
        sys.add_block(u, u, &u_u, 1.0)?;
        sys.add_block(u, p, &d.divergence.transpose(), -1.0)?;
        sys.add_block(u, phi, &coulomb, 1.0)?;

        sys.add_block(p, u, &d.divergence, 1.0)?;
        // Explicit zero diagonal: keeps the pattern fixed and allows pinning.
        sys.add_block(p, p, &CsrMatrix::identity(np), 0.0)?;

        let mut rhs_phi = vec![0.0; ns];
        let mut rhs_rho = d.mass.matvec(&hist_rho);
        let mut rhs_u = d.mass_u.matvec(&hist_u);
        if let Some(f) = &self.forcing.phi {
            rhs_phi = assembly::load_vector(&d.scalar, FieldRef::Scalar(&**f), t_next, ASSEMBLY_DEGREE)?;
        }
        if let Some(f) = &self.forcing.rho {
            add_into(&mut rhs_rho, &assembly::load_vector(&d.scalar, FieldRef::Scalar(&**f), t_next, ASSEMBLY_DEGREE)?);
        }
        if let Some(f) = &self.forcing.u {
            add_into(&mut rhs_u, &assembly::load_vector(&d.velocity, FieldRef::Vector(&**f), t_next, ASSEMBLY_DEGREE)?);
        }
        let area: f64 = d.mean_scalar.iter().sum();
        let charge_next = rhs_rho.iter().sum::<f64>() / (alpha / tau + sigma / epsilon);
        let lambda_phi = (charge_next + rhs_phi.iter().sum::<f64>()) / area;
        for (r, m) in rhs_phi.iter_mut().zip(&d.mean_scalar) {
            *r -= lambda_phi * m;
        }
        sys.set_rhs(phi, &rhs_phi);
        sys.set_rhs(rho, &rhs_rho);
        sys.set_rhs(u, &rhs_u);

        let mut fixed = vec![false; sys.dim()];
        fixed[sys.range(u)].copy_from_slice(&d.velocity.dirichlet);
        fixed[sys.range(phi).start] = true;
        fixed[sys.range(p).start] = true;
        if self.options.frozen_velocity {
            for v in [u, p] {
                fixed[sys.range(v)].fill(true);
            }
        }
        let mut a = sys.assemble();
        let mut b = std::mem::take(&mut sys.rhs);
        a.eliminate_with_values(&fixed, &vec![0.0; fixed.len()], &mut b)?;
        let assembled = clock.elapsed();
        let x = self.solver.solve(&a, &b)?;
        debug!(
            "step {} -> {}: {} unknowns, {} nonzeros, assembly {:.3}s, solve {:.3}s",
            state.n,
            state.n + 1,
            a.rows,
            a.nnz(),
            assembled.as_secs_f64(),
            (clock.elapsed() - assembled).as_secs_f64()
        );

        let mut phi_next = sys.split(&x, phi).to_vec();
        let mut p_next = sys.split(&x, p).to_vec();
        shift_to_mean(&mut phi_next, &d.mean_scalar, 0.0);
        if !self.options.frozen_velocity {
            shift_to_mean(&mut p_next, &d.mean_pressure, 0.0);
        }
        let next = EhdState {
            n: state.n + 1,
            t: t_next,
            phi: phi_next,
            rho: sys.split(&x, rho).to_vec(),
            u: sys.split(&x, u).to_vec(),
            p: p_next,
            prev: Some(PrevLevel {
                phi: state.phi.clone(),
                rho: state.rho.clone(),
                u: state.u.clone(),
            }),
        };
        for (field, v) in [("phi", &next.phi), ("rho", &next.rho), ("u", &next.u), ("p", &next.p)] {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFiniteState { step: next.n, field });
            }
        }
        Ok(next)
    }

    /// Diagnostics of one level; errors are measured when `exact` is given.
    pub fn record(&self, state: &EhdState, exact: Option<&ManufacturedCase>) -> Result<StepRecord> {
        let d = &*self.disc;
        let energy = match state.prev {
            Some(_) => Some(diagnostics::discrete_energy(d, self.params.epsilon, state)?),
            None => None,
        };
        let errors = match exact {
            Some(case) => Some(field_errors(d, state, case)?),
            None => None,
        };
        Ok(StepRecord {
            n: state.n,
            t: state.t,
            energy,
            charge: diagnostics::total_charge(d, state),
            div_residual: diagnostics::divergence_residual(d, &state.u),
            u_norm: norm2(&state.u),
            phi_mean: dot(&d.mean_scalar, &state.phi),
            p_mean: dot(&d.mean_pressure, &state.p),
            errors,
        })
    }

    /// Takes `steps` steps from `initial`, logging every level including the
    /// initial one.
    pub fn run(&mut self, initial: EhdState, steps: usize, exact: Option<&ManufacturedCase>) -> Result<(EhdState, DiagnosticsLog)> {
        let mut log = DiagnosticsLog::new(self.disc.h(), self.tau, self.params);
        log.records.push(self.record(&initial, exact)?);
        let mut state = initial;
        for _ in 0..steps {
            let (n, t, tau) = (state.n, state.t, self.tau);
            let wrap = move |e: Error| Error::Step {
                step: n + 1,
                time: t + tau,
                source: Box::new(e),
            };
            state = self.step(&state).map_err(wrap)?;
            log.records.push(self.record(&state, exact).map_err(wrap)?);
        }
        Ok((state, log))
    }
}

/// L2 errors of `(phi, rho, u)` against the exact fields at `state.t`.
pub fn field_errors(disc: &Discretization, state: &EhdState, case: &ManufacturedCase) -> Result<[f64; 3]> {
    Ok([
        diagnostics::l2_error(&disc.scalar, &state.phi, FieldRef::Scalar(&*case.phi.value), state.t)?,
        diagnostics::l2_error(&disc.scalar, &state.rho, FieldRef::Scalar(&*case.rho.value), state.t)?,
        diagnostics::l2_error(&disc.velocity, &state.u, FieldRef::Vector(&*case.u.value), state.t)?,
    ])
}

fn scaled(v: &[f64], a: f64) -> Vec<f64> {
    v.iter().map(|x| a * x).collect()
}

fn add_into(acc: &mut [f64], v: &[f64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += b;
    }
}
