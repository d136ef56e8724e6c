//! Spectral factorization through the complex cepstrum.
//!
//! For a trigonometric polynomial `H > 0` on the unit circle, the causal part
//! of the Fourier series of `ln H` is the logarithm of an outer function `h`
//! with `|h|^2 = H`. Sampling on a grid fine enough that the cepstrum has
//! decayed to rounding level gives the coefficients of `h` directly.
//!
//! Zeros of `H` on the circle make `ln H` singular, so they are located and
//! divided out first.

use num_complex::Complex64;

use super::TrigPolynomial;
use crate::poly::{forward_dft, inverse_dft, ComplexPolynomial};

const MIN_GRID: usize = 1 << 10;
const MAX_GRID: usize = 1 << 22;
const ROOT_SCAN_GRID: usize = 1 << 12;
/// A refined grid minimum counts as a zero of `G` when it is below this,
/// relative to `max |g_k|`.
const ZERO_LEVEL: f64 = 1e-13;

/// Factorizes `gram` as `|phi|^2` with all roots of `phi` in the closed unit
/// disc. Returns `None` if the deflated polynomial is not positive on the grid.
pub fn factorize(gram: &TrigPolynomial, target: f64) -> Option<ComplexPolynomial> {
    let (deflated, circle_roots) = deflate_circle_zeros(gram);
    let d = deflated.degree();

    let mut best: Option<(f64, ComplexPolynomial)> = None;
    let mut grid = (16 * (2 * d + 1)).next_power_of_two().max(MIN_GRID);
    while grid <= MAX_GRID {
        if let Some(psi) = outer_factor(&deflated, grid) {
            let err = super::modulus_mismatch(&deflated, &psi);
            let improved = best.as_ref().is_none_or(|(e, _)| err < *e);
            if improved {
                best = Some((err, psi));
            }
            if err <= target * 1e-2 || !improved {
                break;
            }
        }
        grid *= 2;
    }
    let (_, psi) = best?;
    let factor = circle_roots.iter().fold(psi, |acc, &r| {
        &acc * &ComplexPolynomial::untrimmed(vec![-r, Complex64::new(1.0, 0.0)])
    });
    Some(factor)
}

/// Divides out zeros of `gram` on the unit circle, each as `|z - r|^2`.
fn deflate_circle_zeros(gram: &TrigPolynomial) -> (TrigPolynomial, Vec<Complex64>) {
    let mut current = gram.clone();
    let mut roots = Vec::new();
    while current.degree() > 0 {
        let scale = current.max_coefficient();
        let Some(lambda) = lowest_circle_minimum(&current) else {
            break;
        };
        if current.eval_angle(lambda).0 > ZERO_LEVEL * scale {
            break;
        }
        let r = Complex64::from_polar(1.0, lambda);
        current = divide_circle_pair(&current, r);
        roots.push(r);
    }
    (current, roots)
}

/// Angle of the smallest grid value of `gram`, polished by Newton's method on
/// the derivative.
fn lowest_circle_minimum(gram: &TrigPolynomial) -> Option<f64> {
    let m = ROOT_SCAN_GRID.max(16 * (2 * gram.degree() + 1));
    let values = gram.eval_on_circle_grid(m);
    let (j, _) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))?;
    let mut lambda = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
    for _ in 0..50 {
        let (_, d1, d2) = gram.eval_angle(lambda);
        if d2 <= 0.0 {
            break;
        }
        let step = d1 / d2;
        lambda -= step;
        if step.abs() < 1e-16 {
            break;
        }
    }
    Some(lambda)
}

/// `gram / |z - r|^2` for `|r| = 1`, discarding the division remainder.
///
/// On the circle `|z - r|^2 = -(z - r)^2 / (z r)`, so dividing the shifted
/// polynomial `z^d G(z)` twice by `z - r` and multiplying by `-r` gives the
/// shifted coefficients of the quotient.
fn divide_circle_pair(gram: &TrigPolynomial, r: Complex64) -> TrigPolynomial {
    let mut a = gram.shifted_coefficients();
    for _ in 0..2 {
        a = synthetic_division(&a, r);
    }
    let laurent: Vec<Complex64> = a.iter().map(|&c| -r * c).collect();
    TrigPolynomial::from_laurent(laurent)
}

/// Quotient of `a(z) / (z - r)`, coefficients lowest degree first.
fn synthetic_division(a: &[Complex64], r: Complex64) -> Vec<Complex64> {
    let n = a.len() - 1;
    let mut q = vec![Complex64::new(0.0, 0.0); n];
    let mut carry = Complex64::new(0.0, 0.0);
    for k in (1..=n).rev() {
        carry = carry * r + a[k];
        q[k - 1] = carry;
    }
    q
}

/// Outer factor of a positive `gram`, reflected so its roots lie inside the
/// unit disc.
fn outer_factor(gram: &TrigPolynomial, grid: usize) -> Option<ComplexPolynomial> {
    let d = gram.degree();
    let values = gram.eval_on_circle_grid(grid);
    if values.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    let scale = grid as f64;

    let mut cep: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v.ln(), 0.0)).collect();
    forward_dft(&mut cep);
    let half = grid / 2;
    let mut analytic = vec![Complex64::new(0.0, 0.0); grid];
    analytic[0] = cep[0] / (2.0 * scale);
    for k in 1..half {
        analytic[k] = cep[k] / scale;
    }
    analytic[half] = cep[half] / (2.0 * scale);

    inverse_dft(&mut analytic);
    let mut h: Vec<Complex64> = analytic.iter().map(|v| v.exp()).collect();
    forward_dft(&mut h);
    // h has its roots outside the disc; conjugate-reverse to move them inside.
    let psi: Vec<Complex64> = (0..=d).rev().map(|k| (h[k] / scale).conj()).collect();
    Some(ComplexPolynomial::untrimmed(psi))
}
