//! Lagrange bases on the reference triangle `(0,0), (1,0), (0,1)` and
//! symmetric Gauss quadrature rules with positive weights.

use crate::error::{Error, Result};

/// Quadrature degree used for system assembly.
pub const ASSEMBLY_DEGREE: usize = 6;
/// Quadrature degree used for error norms.
pub const ERROR_DEGREE: usize = 8;

/// Maximum number of local basis functions (P2).
pub const MAX_NODES: usize = 6;

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    /// Reference coordinates `(xi, eta)`.
    pub points: Vec<[f64; 2]>,
    /// Weights summing to the reference area 1/2.
    pub weights: Vec<f64>,
    pub exactness_degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Integrates `f(xi, eta)` over the reference triangle.
    pub fn integrate(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p[0], p[1]))
            .sum()
    }
}

enum Orbit {
    Centroid(f64),
    /// Barycentric `(1 - 2a, a, a)` and its 3 permutations.
    Three(f64, f64),
    /// Barycentric `(a, b, 1 - a - b)` and its 6 permutations.
    Six(f64, f64, f64),
}

fn expand(orbits: &[Orbit], exactness_degree: usize) -> QuadratureRule {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut push = |l: [f64; 3], w: f64| {
        points.push([l[1], l[2]]);
        weights.push(w);
    };
    for orbit in orbits {
        match *orbit {
            Orbit::Centroid(w) => push([1.0 / 3.0; 3], w),
            Orbit::Three(a, w) => {
                let b = 1.0 - 2.0 * a;
                push([b, a, a], w);
                push([a, b, a], w);
                push([a, a, b], w);
            }
            Orbit::Six(a, b, w) => {
                let c = 1.0 - a - b;
                for l in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
                    push(l, w);
                }
            }
        }
    }
    QuadratureRule {
        points,
        weights,
        exactness_degree,
    }
}

/// Smallest tabulated symmetric rule that integrates polynomials of total
/// degree `min_degree` exactly.
pub fn quadrature(min_degree: usize) -> Result<QuadratureRule> {
    use Orbit::*;
    let rule = match min_degree {
        1 => expand(&[Centroid(0.5)], 1),
        2 => expand(&[Three(1.0 / 6.0, 1.0 / 6.0)], 2),
        3 | 4 => expand(
            &[
                Three(0.445_948_490_915_964_886_32, 0.111_690_794_839_005_732_85),
                Three(0.091_576_213_509_770_743_46, 0.054_975_871_827_660_933_819),
            ],
            4,
        ),
        5 => expand(
            &[
                Centroid(0.1125),
                Three(0.470_142_064_105_115_089_77, 0.066_197_076_394_253_090_369),
                Three(0.101_286_507_323_456_338_8, 0.062_969_590_272_413_576_298),
            ],
            5,
        ),
        6 => expand(
            &[
                Three(0.249_286_745_170_910_421_29, 0.058_393_137_863_189_683_013),
                Three(0.063_089_014_491_502_228_34, 0.025_422_453_185_103_408_46),
                Six(
                    0.053_145_049_844_816_947_353,
                    0.310_352_451_033_784_405_42,
                    0.041_425_537_809_186_787_597,
                ),
            ],
            6,
        ),
        7 | 8 => expand(
            &[
                Centroid(0.072_157_803_838_893_584_126),
                Three(0.459_292_588_292_723_156_03, 0.047_545_817_133_642_312_397),
                Three(0.170_569_307_751_760_206_62, 0.051_608_685_267_359_125_141),
                Three(0.050_547_228_317_030_975_458, 0.016_229_248_811_599_040_155),
                Six(
                    0.008_394_777_409_957_605_337_2,
                    0.263_112_829_634_638_113_42,
                    0.013_615_157_087_217_497_132,
                ),
            ],
            8,
        ),
        d => return Err(Error::UnsupportedQuadrature(d)),
    };
    Ok(rule)
}

/// Values and reference gradients of every local basis function at one point.
#[derive(Debug, Clone, Copy)]
pub struct BasisEval {
    pub n: usize,
    pub values: [f64; MAX_NODES],
    pub grads: [[f64; 2]; MAX_NODES],
}

/// Reference coordinates of the Lagrange nodes: vertices, then the midpoints
/// of edges `(0,1)`, `(1,2)`, `(2,0)`.
pub const P2_NODES: [[f64; 2]; 6] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.5, 0.0], [0.5, 0.5], [0.0, 0.5]];

pub fn n_nodes(degree: usize) -> usize {
    match degree {
        1 => 3,
        2 => 6,
        _ => panic!("unsupported polynomial degree {degree}"),
    }
}

/// Evaluates the P1 or P2 basis at a reference point. Points outside the
/// triangle are extrapolated.
pub fn eval(degree: usize, p: [f64; 2]) -> BasisEval {
    let l = [1.0 - p[0] - p[1], p[0], p[1]];
    let dl = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
    let mut out = BasisEval {
        n: n_nodes(degree),
        values: [0.0; MAX_NODES],
        grads: [[0.0; 2]; MAX_NODES],
    };
    match degree {
        1 => {
            out.values[..3].copy_from_slice(&l);
            out.grads[..3].copy_from_slice(&dl);
        }
        _ => {
            for i in 0..3 {
                out.values[i] = l[i] * (2.0 * l[i] - 1.0);
                let s = 4.0 * l[i] - 1.0;
                out.grads[i] = [s * dl[i][0], s * dl[i][1]];
            }
            for (k, (i, j)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
                out.values[3 + k] = 4.0 * l[i] * l[j];
                out.grads[3 + k] = [
                    4.0 * (l[j] * dl[i][0] + l[i] * dl[j][0]),
                    4.0 * (l[j] * dl[i][1] + l[i] * dl[j][1]),
                ];
            }
        }
    }
    out
}

/// Vector-returning convenience wrapper around [`eval`].
pub fn eval_basis(degree: usize, p: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
    let e = eval(degree, p);
    (e.values[..e.n].to_vec(), e.grads[..e.n].to_vec())
}

/// A basis tabulated at the points of a quadrature rule.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub degree: usize,
    pub rule: QuadratureRule,
    pub evals: Vec<BasisEval>,
}

impl Tabulation {
    pub fn new(degree: usize, rule: QuadratureRule) -> Self {
        let evals = rule.points.iter().map(|&p| eval(degree, p)).collect();
        Self { degree, rule, evals }
    }

    pub fn n_basis(&self) -> usize {
        n_nodes(self.degree)
    }
}
