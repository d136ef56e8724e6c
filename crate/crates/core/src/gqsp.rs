//! Generalized QSP angle synthesis.
//!
//! A degree-`d` circuit is `R_d A R_{d-1} A ... A R_0` acting on the ancilla,
//! where `A = |0><0| + |1><1| x` applies the signal `x` (standing for `U`)
//! when the ancilla is `|1>`, and
//!
//! ```text
//! R(theta, phi, lambda) = [[e^{i(lambda+phi)} cos theta, e^{i phi} sin theta],
//!                          [e^{i lambda}      sin theta, -cos theta       ]]
//! ```
//!
//! Only `R_0` carries a nonzero `lambda`. The first column of the product is
//! `(P(x), Q(x))`. Synthesis peels one layer at a time: choose `R_d` so that
//! `R_d^dagger (P, Q)` has a top entry of degree `d - 1` and a bottom entry
//! divisible by `x`, then undo `A`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::completion::completion_residual;
use crate::error::{Error, Result};
use crate::poly::ComplexPolynomial;

/// Coefficient pairs smaller than this leave the peeling angle undetermined.
pub const DEGENERATE_PAIR_TOL: f64 = 1e-13;

/// Inputs must satisfy `|P|^2 + |Q|^2 = 1` to this accuracy.
pub const COMPLEMENTARY_TOL: f64 = 1e-8;

/// Rotation parameterization and gate order shared by the synthesizer, the
/// reconstructor, the circuit builder and the simulator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// `R(theta, phi, lambda)` as in the module docs; rotation first, then
    /// `d` repetitions of (controlled-U on ancilla `|1>`, rotation).
    #[default]
    AncillaOneControlled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GqspAngleSequence {
    pub thetas: Vec<f64>,
    pub phis: Vec<f64>,
    pub lambda: f64,
    pub convention: Convention,
    /// Layers whose angles were fixed to zero because both candidate
    /// coefficient pairs vanished.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub degenerate_layers: Vec<usize>,
}

impl GqspAngleSequence {
    pub fn degree(&self) -> usize {
        self.thetas.len() - 1
    }
}

pub type Rotation = [[Complex64; 2]; 2];

pub fn rotation_matrix(theta: f64, phi: f64, lambda: f64) -> Rotation {
    let (s, c) = theta.sin_cos();
    [
        [Complex64::from_polar(c, lambda + phi), Complex64::from_polar(s, phi)],
        [Complex64::from_polar(s, lambda), Complex64::new(-c, 0.0)],
    ]
}

/// Angles realizing `(p, q)` as the first column of the circuit.
///
/// Both polynomials are padded to the larger degree. Fails if the pair is not
/// complementary to within [`COMPLEMENTARY_TOL`].
pub fn synthesize_angles(p: &ComplexPolynomial, q: &ComplexPolynomial) -> Result<GqspAngleSequence> {
    let d = p.degree().max(q.degree());
    let residual = completion_residual(p, q, 16 * (2 * d + 1));
    if residual > COMPLEMENTARY_TOL {
        return Err(Error::NotComplementary { residual });
    }

    let mut top = p.padded(d);
    let mut bottom = q.padded(d);
    let mut thetas = vec![0.0; d + 1];
    let mut phis = vec![0.0; d + 1];
    let mut degenerate_layers = Vec::new();

    for k in (1..=d).rev() {
        let (theta, phi) = match layer_angles((top[0], bottom[0]), (top[k], bottom[k])) {
            Some(angles) => angles,
            None => {
                degenerate_layers.push(k);
                (0.0, 0.0)
            }
        };
        thetas[k] = theta;
        phis[k] = phi;

        // apply R^dagger, then drop the (now vanishing) top coefficient of the
        // upper entry and divide the lower entry by x
        let r = rotation_matrix(theta, phi, 0.0);
        let new_top: Vec<Complex64> = (0..k)
            .map(|j| r[0][0].conj() * top[j] + r[1][0].conj() * bottom[j])
            .collect();
        let new_bottom: Vec<Complex64> = (1..=k)
            .map(|j| r[0][1].conj() * top[j] + r[1][1].conj() * bottom[j])
            .collect();
        top = new_top;
        bottom = new_bottom;
    }

    let (p0, q0) = (top[0], bottom[0]);
    let theta = q0.norm().atan2(p0.norm());
    let lambda = if q0.norm() > DEGENERATE_PAIR_TOL { arg(q0) } else { 0.0 };
    let phi = if p0.norm() > DEGENERATE_PAIR_TOL { arg(p0) - lambda } else { 0.0 };
    thetas[0] = theta;
    phis[0] = phi;

    Ok(GqspAngleSequence {
        thetas,
        phis,
        lambda,
        convention: Convention::AncillaOneControlled,
        degenerate_layers,
    })
}

/// Angles of the outermost layer from the constant pair `a = (p_0, q_0)` and
/// the top pair `b = (p_k, q_k)`.
///
/// The first column `v = (e^{i phi} cos theta, sin theta)` of the layer must
/// be parallel to `a` and orthogonal to `b`. With rounding in the inputs the
/// two conditions disagree slightly, so `v` is taken as the leading
/// eigenvector of `a a^dagger - b b^dagger`, which minimizes the total
/// magnitude of the coefficients dropped when the layer is removed. Returns
/// `None` when both pairs vanish.
fn layer_angles(a: (Complex64, Complex64), b: (Complex64, Complex64)) -> Option<(f64, f64)> {
    let scale = (a.0.norm_sqr() + a.1.norm_sqr()).max(b.0.norm_sqr() + b.1.norm_sqr());
    if scale.sqrt() < DEGENERATE_PAIR_TOL {
        return None;
    }
    // [[alpha, beta], [conj(beta), delta]]
    let alpha = a.0.norm_sqr() - b.0.norm_sqr();
    let delta = a.1.norm_sqr() - b.1.norm_sqr();
    let beta = a.0 * a.1.conj() - b.0 * b.1.conj();
    let mid = 0.5 * (alpha + delta);
    let mu = mid + (0.25 * (alpha - delta).powi(2) + beta.norm_sqr()).sqrt();
    let (va, vb) = if alpha >= delta {
        (Complex64::new(mu - delta, 0.0), beta.conj())
    } else {
        (beta, Complex64::new(mu - alpha, 0.0))
    };
    let theta = vb.norm().atan2(va.norm());
    let phi = arg(va) - arg(vb);
    Some((theta, phi))
}

fn arg(z: Complex64) -> f64 {
    if z.norm() == 0.0 {
        0.0
    } else {
        z.arg()
    }
}

/// The first column `(P, Q)` of the circuit, computed by multiplying the
/// layers with polynomial entries.
pub fn reconstruct_polynomials(angles: &GqspAngleSequence) -> (ComplexPolynomial, ComplexPolynomial) {
    let d = angles.degree();
    let r0 = rotation_matrix(angles.thetas[0], angles.phis[0], angles.lambda);
    let mut top = Vec::with_capacity(d + 1);
    let mut bottom = Vec::with_capacity(d + 1);
    top.push(r0[0][0]);
    bottom.push(r0[1][0]);
    for k in 1..=d {
        // A: multiply the lower entry by x
        bottom.insert(0, Complex64::new(0.0, 0.0));
        top.push(Complex64::new(0.0, 0.0));
        let r = rotation_matrix(angles.thetas[k], angles.phis[k], 0.0);
        for j in 0..=k {
            let (a, b) = (top[j], bottom[j]);
            top[j] = r[0][0] * a + r[0][1] * b;
            bottom[j] = r[1][0] * a + r[1][1] * b;
        }
    }
    (ComplexPolynomial::untrimmed(top), ComplexPolynomial::untrimmed(bottom))
}

/// Angle sequences for `(Y, F)` and `(Y, -F)`.
pub fn branch_pair(
    upsilon: &ComplexPolynomial,
    phi: &ComplexPolynomial,
) -> Result<(GqspAngleSequence, GqspAngleSequence)> {
    let plus = synthesize_angles(upsilon, phi)?;
    let minus = synthesize_angles(upsilon, &-phi)?;
    Ok((plus, minus))
}
