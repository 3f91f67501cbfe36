//! Manufactured exact solutions and the source terms that make them solve the
//! forced EHD system.

use std::sync::Arc;

use crate::mesh::Rect;
use crate::scheme::{ForcingSet, InitialData, ModelParams};
use crate::spaces::{ScalarField, TensorField, VectorField};

/// An exact scalar field with the derivatives the forcing needs.
#[derive(Clone)]
pub struct ScalarExact {
    pub value: ScalarField,
    pub gradient: VectorField,
    pub laplacian: ScalarField,
    pub dt: ScalarField,
}

/// An exact vector field. `jacobian[c][d] = d u_c / d x_d`.
#[derive(Clone)]
pub struct VectorExact {
    pub value: VectorField,
    pub jacobian: TensorField,
    pub laplacian: VectorField,
    pub dt: VectorField,
}

#[derive(Clone)]
pub struct ManufacturedCase {
    pub domain: Rect,
    pub params: ModelParams,
    pub phi: ScalarExact,
    pub rho: ScalarExact,
    pub u: VectorExact,
    pub p: ScalarExact,
}

fn c(x: f64, y: f64) -> f64 {
    x.cos() * y.cos()
}

fn c_grad(x: f64, y: f64) -> [f64; 2] {
    [-x.sin() * y.cos(), -x.cos() * y.sin()]
}

/// Spatial part of the velocity, divergence free and zero on the boundary of
/// `(0, 2pi)^2`.
fn w(x: f64, y: f64) -> [f64; 2] {
    let (sx, sy) = (x.sin(), y.sin());
    [sx * sx * (2.0 * y).sin(), -(2.0 * x).sin() * sy * sy]
}

fn w_jacobian(x: f64, y: f64) -> [[f64; 2]; 2] {
    let (sx, sy) = (x.sin(), y.sin());
    let (s2x, s2y, c2x, c2y) = ((2.0 * x).sin(), (2.0 * y).sin(), (2.0 * x).cos(), (2.0 * y).cos());
    [[s2x * s2y, 2.0 * sx * sx * c2y], [-2.0 * c2x * sy * sy, -s2x * s2y]]
}

fn w_laplacian(x: f64, y: f64) -> [f64; 2] {
    let (sx, sy) = (x.sin(), y.sin());
    let (s2x, s2y, c2x, c2y) = ((2.0 * x).sin(), (2.0 * y).sin(), (2.0 * x).cos(), (2.0 * y).cos());
    [
        2.0 * c2x * s2y - 4.0 * sx * sx * s2y,
        4.0 * s2x * sy * sy - 2.0 * s2x * c2y,
    ]
}

fn scale2(a: f64, v: [f64; 2]) -> [f64; 2] {
    [a * v[0], a * v[1]]
}

/// `g(t) c(x, y)` with its derivatives, for `g = t^4`.
fn t4_scalar() -> ScalarExact {
    ScalarExact {
        value: Arc::new(|x, y, t| t.powi(4) * c(x, y)),
        gradient: Arc::new(|x, y, t| scale2(t.powi(4), c_grad(x, y))),
        laplacian: Arc::new(|x, y, t| -2.0 * t.powi(4) * c(x, y)),
        dt: Arc::new(|x, y, t| 4.0 * t.powi(3) * c(x, y)),
    }
}

/// The built-in case on `(0, 2pi)^2`: `phi = rho = p = t^4 cos x cos y`,
/// `u = t^4 (sin^2 x sin 2y, -sin 2x sin^2 y)`, with unit coefficients.
pub fn trig_case() -> ManufacturedCase {
    ManufacturedCase {
        domain: Rect::two_pi_square(),
        params: ModelParams::default(),
        phi: t4_scalar(),
        rho: t4_scalar(),
        p: t4_scalar(),
        u: VectorExact {
            value: Arc::new(|x, y, t| scale2(t.powi(4), w(x, y))),
            jacobian: Arc::new(|x, y, t| {
                let j = w_jacobian(x, y);
                let g = t.powi(4);
                [scale2(g, j[0]), scale2(g, j[1])]
            }),
            laplacian: Arc::new(|x, y, t| scale2(t.powi(4), w_laplacian(x, y))),
            dt: Arc::new(|x, y, t| scale2(4.0 * t.powi(3), w(x, y))),
        },
    }
}

/// A case whose fields all vanish.
pub fn zero_case() -> ManufacturedCase {
    let zs = || ScalarExact {
        value: Arc::new(|_, _, _| 0.0),
        gradient: Arc::new(|_, _, _| [0.0; 2]),
        laplacian: Arc::new(|_, _, _| 0.0),
        dt: Arc::new(|_, _, _| 0.0),
    };
    ManufacturedCase {
        domain: Rect::two_pi_square(),
        params: ModelParams::default(),
        phi: zs(),
        rho: zs(),
        p: zs(),
        u: VectorExact {
            value: Arc::new(|_, _, _| [0.0; 2]),
            jacobian: Arc::new(|_, _, _| [[0.0; 2]; 2]),
            laplacian: Arc::new(|_, _, _| [0.0; 2]),
            dt: Arc::new(|_, _, _| [0.0; 2]),
        },
    }
}

/// Time-independent profiles used by the unforced stability run:
/// `rho0 = cos x cos y`, `u0 = (sin^2 x sin 2y, -sin 2x sin^2 y)`, `p0 = 0`.
pub fn stability_profile() -> InitialData {
    InitialData {
        rho: Arc::new(|x, y, _| c(x, y)),
        u: Arc::new(|x, y, _| w(x, y)),
        u_jacobian: Arc::new(|x, y, _| w_jacobian(x, y)),
        p: Arc::new(|_, _, _| 0.0),
        t0: 0.0,
    }
}

impl ManufacturedCase {
    /// Initial data taken from the exact fields at `t0`.
    pub fn initial_data(&self, t0: f64) -> InitialData {
        InitialData {
            rho: Arc::clone(&self.rho.value),
            u: Arc::clone(&self.u.value),
            u_jacobian: Arc::clone(&self.u.jacobian),
            p: Arc::clone(&self.p.value),
            t0,
        }
    }
}

/// Residuals of the strong equations at the exact fields:
///
/// * `f_phi = -eps lap phi - rho`
/// * `f_rho = dt rho + u . grad rho - D lap rho + (sigma / eps) rho`
/// * `f_u = dt u + (u . grad) u - eta lap u + grad p + rho grad phi`
pub fn forcing(case: &ManufacturedCase, params: &ModelParams) -> ForcingSet {
    let ModelParams {
        epsilon,
        d_coeff,
        sigma,
        eta,
    } = *params;

    let (phi, rho) = (case.phi.clone(), case.rho.clone());
    let f_phi: ScalarField = Arc::new(move |x, y, t| -epsilon * (phi.laplacian)(x, y, t) - (rho.value)(x, y, t));

    let (rho, u) = (case.rho.clone(), case.u.clone());
    let f_rho: ScalarField = Arc::new(move |x, y, t| {
        let uv = (u.value)(x, y, t);
        let g = (rho.gradient)(x, y, t);
        let r = (rho.value)(x, y, t);
        (rho.dt)(x, y, t) + uv[0] * g[0] + uv[1] * g[1] - d_coeff * (rho.laplacian)(x, y, t) + sigma / epsilon * r
    });

    let (phi, rho, u, p) = (case.phi.clone(), case.rho.clone(), case.u.clone(), case.p.clone());
    let f_u: VectorField = Arc::new(move |x, y, t| {
        let uv = (u.value)(x, y, t);
        let j = (u.jacobian)(x, y, t);
        let lap = (u.laplacian)(x, y, t);
        let du = (u.dt)(x, y, t);
        let gp = (p.gradient)(x, y, t);
        let gphi = (phi.gradient)(x, y, t);
        let r = (rho.value)(x, y, t);
        let mut out = [0.0; 2];
        for (k, o) in out.iter_mut().enumerate() {
            let adv = uv[0] * j[k][0] + uv[1] * j[k][1];
            *o = du[k] + adv - eta * lap[k] + gp[k] + r * gphi[k];
        }
        out
    });

    ForcingSet {
        phi: Some(f_phi),
        rho: Some(f_rho),
        u: Some(f_u),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elements::quadrature;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn velocity_example_point() {
        let case = trig_case();
        let u = (case.u.value)(PI / 2.0, PI / 4.0, 1.0);
        assert!((u[0] - 1.0).abs() < 1e-15 && u[1].abs() < 1e-15);
        assert_eq!((case.rho.value)(0.3, 1.7, 0.0), 0.0);
    }

    #[test]
    fn velocity_divergence_free_and_boundary_conditions() {
        let case = trig_case();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let (x, y, t) = (rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..1.0));
            let j = (case.u.jacobian)(x, y, t);
            assert!((j[0][0] + j[1][1]).abs() < 1e-12);
        }
        for _ in 0..50 {
            let s = rng.random_range(0.0..2.0 * PI);
            let t = rng.random_range(0.0..1.0);
            for (x, y, n) in [(0.0, s, [-1.0, 0.0]), (2.0 * PI, s, [1.0, 0.0]), (s, 0.0, [0.0, -1.0]), (s, 2.0 * PI, [0.0, 1.0])] {
                let u = (case.u.value)(x, y, t);
                assert!(u[0].abs() < 1e-12 && u[1].abs() < 1e-12);
                for g in [(case.phi.gradient)(x, y, t), (case.rho.gradient)(x, y, t)] {
                    assert!((g[0] * n[0] + g[1] * n[1]).abs() < 1e-12);
                }
            }
        }
    }

    /// Integral over `(0, 2pi)^2` with a tensor-product of degree-8 triangle rules.
    fn integrate(f: impl Fn(f64, f64) -> f64) -> f64 {
        let rule = quadrature(8).unwrap();
        let n = 16;
        let h = 2.0 * PI / n as f64;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                let (x0, y0) = (i as f64 * h, j as f64 * h);
                for (p, w) in rule.points.iter().zip(&rule.weights) {
                    s += w * h * h * f(x0 + h * p[0], y0 + h * p[1]);
                    s += w * h * h * f(x0 + h - h * p[0], y0 + h - h * p[1]);
                }
            }
        }
        s
    }

    #[test]
    fn zero_mean_fields_and_sources() {
        let case = trig_case();
        let f = forcing(&case, &case.params);
        for t in [0.5, 1.0] {
            assert!(integrate(|x, y| (case.rho.value)(x, y, t)).abs() < 1e-10);
            assert!(integrate(|x, y| (case.phi.value)(x, y, t)).abs() < 1e-10);
            assert!(integrate(|x, y| (case.p.value)(x, y, t)).abs() < 1e-10);
            assert!(integrate(|x, y| f.phi.as_ref().unwrap()(x, y, t)).abs() < 1e-10);
            assert!(integrate(|x, y| f.rho.as_ref().unwrap()(x, y, t)).abs() < 1e-10);
        }
    }

    #[test]
    fn potential_source_example() {
        let case = trig_case();
        let f = forcing(&case, &case.params);
        for (x, y, t) in [(0.1, 0.2, 1.0f64), (2.0, 5.0, 0.7)] {
            let expect = t.powi(4) * c(x, y);
            assert!((f.phi.as_ref().unwrap()(x, y, t) - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_case_has_zero_forcing() {
        let case = zero_case();
        let f = forcing(&case, &ModelParams::default());
        assert_eq!(f.phi.as_ref().unwrap()(1.0, 2.0, 0.5), 0.0);
        assert_eq!(f.rho.as_ref().unwrap()(1.0, 2.0, 0.5), 0.0);
        assert_eq!(f.u.as_ref().unwrap()(1.0, 2.0, 0.5), [0.0; 2]);
    }

    #[test]
    fn stability_profile_is_time_independent() {
        let d = stability_profile();
        assert_eq!((d.rho)(0.0, 0.0, 0.0), 1.0);
        assert_eq!((d.u)(1.0, 2.0, 0.0), (d.u)(1.0, 2.0, 5.0));
    }
}
