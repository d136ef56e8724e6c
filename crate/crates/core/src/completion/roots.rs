//! Simultaneous root finding with the Aberth–Ehrlich iteration.
//!
//! Initial approximations are spread over circles whose radii come from the
//! upper convex hull of `(k, ln |a_k|)` (the Newton polygon), which copes
//! with coefficients spanning many orders of magnitude. Points outside the
//! unit disc are evaluated through the reversed polynomial.

use std::f64::consts::PI;

use num_complex::Complex64;

const MAX_ITERATIONS: usize = 2000;

/// All roots of `a_0 + a_1 z + ... + a_n z^n`, with multiplicity.
///
/// Exact zeros at either end of the coefficient vector are peeled off first:
/// trailing zero coefficients become roots at the origin and leading zeros
/// lower the degree.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let zero = Complex64::new(0.0, 0.0);
    let mut hi = coeffs.len();
    while hi > 0 && coeffs[hi - 1] == zero {
        hi -= 1;
    }
    let mut lo = 0;
    while lo < hi && coeffs[lo] == zero {
        lo += 1;
    }
    let mut roots = vec![zero; lo];
    if hi == 0 || hi - lo <= 1 {
        return roots;
    }
    roots.extend(aberth(&coeffs[lo..hi]));
    roots
}

/// `a` has nonzero first and last entries and degree at least one.
fn aberth(a: &[Complex64]) -> Vec<Complex64> {
    let n = a.len() - 1;
    let rev: Vec<Complex64> = a.iter().rev().copied().collect();
    let moduli: Vec<f64> = a.iter().map(|c| c.norm()).collect();
    let rev_moduli: Vec<f64> = moduli.iter().rev().copied().collect();

    let mut z = initial_guesses(&moduli);
    let mut done = vec![false; n];

    for _ in 0..MAX_ITERATIONS {
        let mut all_done = true;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let (ratio, converged) = newton_ratio(a, &rev, &moduli, &rev_moduli, z[i]);
            if converged {
                done[i] = true;
                continue;
            }
            all_done = false;
            let repulsion: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| (z[i] - z[j]).inv())
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if !step.is_finite() {
                done[i] = true;
                continue;
            }
            z[i] -= step;
            if step.norm() <= 2.0 * f64::EPSILON * z[i].norm() {
                done[i] = true;
            }
        }
        if all_done {
            break;
        }
    }
    z
}

/// Returns `p(z) / p'(z)` and whether `|p(z)|` is already within its
/// rounding error bound.
fn newton_ratio(
    a: &[Complex64],
    rev: &[Complex64],
    moduli: &[f64],
    rev_moduli: &[f64],
    z: Complex64,
) -> (Complex64, bool) {
    let n = (a.len() - 1) as f64;
    if z.norm() <= 1.0 {
        let (p, dp, bound) = horner_with_derivative(a, moduli, z);
        (p / dp, p.norm() <= 4.0 * f64::EPSILON * bound)
    } else {
        let w = z.inv();
        let (q, dq, bound) = horner_with_derivative(rev, rev_moduli, w);
        let ratio = z / (Complex64::new(n, 0.0) - w * dq / q);
        (ratio, q.norm() <= 4.0 * f64::EPSILON * bound)
    }
}

fn horner_with_derivative(a: &[Complex64], moduli: &[f64], z: Complex64) -> (Complex64, Complex64, f64) {
    let r = z.norm();
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    let mut bound = 0.0;
    for (c, m) in a.iter().zip(moduli).rev() {
        dp = dp * z + p;
        p = p * z + c;
        bound = bound * r + m;
    }
    (p, dp, bound)
}

/// Starting points on circles given by the Newton polygon of the moduli.
fn initial_guesses(moduli: &[f64]) -> Vec<Complex64> {
    let n = moduli.len() - 1;
    let logs: Vec<f64> = moduli
        .iter()
        .map(|&m| if m > 0.0 { m.ln() } else { f64::NEG_INFINITY })
        .collect();

    // upper convex hull of (k, log|a_k|)
    let mut hull: Vec<usize> = Vec::new();
    for k in 0..=n {
        if logs[k] == f64::NEG_INFINITY {
            continue;
        }
        while hull.len() >= 2 {
            let (i, j) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (j - i) as f64 * (logs[k] - logs[i]) - (k - i) as f64 * (logs[j] - logs[i]);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }

    let offset = 0.4;
    let mut z = Vec::with_capacity(n);
    for pair in hull.windows(2) {
        let (i, j) = (pair[0], pair[1]);
        let count = j - i;
        let radius = ((logs[i] - logs[j]) / count as f64).exp();
        for s in 0..count {
            let angle = 2.0 * PI * s as f64 / count as f64 + 2.0 * PI * i as f64 / n as f64 + offset;
            z.push(Complex64::from_polar(radius, angle));
        }
    }
    z
}
