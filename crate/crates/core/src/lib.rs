//! Finite element solver for the two-dimensional electrohydrodynamic (EHD)
//! system: electric potential, charge density, velocity and pressure.
//!
//! The time stepper combines a BDF2 time derivative (with a BDF1 first step),
//! second-order extrapolation of the nonlinear couplings, and Taylor-Hood
//! P2/P1 elements for velocity and pressure (P2 for potential and charge).
//! Every step solves one monolithic linear system.
//!
//! Module map:
//!
//! * [`mesh`] structured triangulations of rectangles
//! * [`elements`] reference bases and quadrature
//! * [`spaces`] global DOF maps, interpolation, mean functionals
//! * [`sparse`] CSR storage, block systems, linear solvers
//! * [`assembly`] bilinear/trilinear forms and load vectors
//! * [`projections`] L2, Ritz and Stokes projections
//! * [`scheme`] the fully discrete time stepper
//! * [`mms`] manufactured solutions and their forcing
//! * [`diagnostics`] energy, charge, errors, convergence orders
//! * [`experiments`] configuration and the experiment drivers used by the CLI

pub mod assembly;
pub mod diagnostics;
pub mod elements;
pub mod error;
pub mod experiments;
pub mod mesh;
pub mod mms;
pub mod projections;
pub mod scheme;
pub mod spaces;
pub mod sparse;

pub use diagnostics::{DiagnosticsLog, StepRecord};
pub use error::{Error, Result};
pub use mesh::{Mesh, Rect};
pub use mms::ManufacturedCase;
pub use scheme::{Discretization, EhdState, ForcingSet, InitialData, ModelParams, Stepper, TimeGrid};
pub use spaces::{FeSpace, FieldRef};
pub use sparse::CsrMatrix;
