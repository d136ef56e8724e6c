//! Complex polynomials in the monomial basis, the averaged geometric-sum
//! family `((1 + x + ... + x^(t-1)) / t)^n`, and the choice of `(t, n)` from
//! an angular gap and a target precision.

use std::f64::consts::{E, PI};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients whose magnitude falls below this are trimmed from the top.
pub const TRIM_THRESHOLD: f64 = 1e-14;

/// Default grid oversampling for supremum estimates on the unit circle.
pub const DEFAULT_OVERSAMPLE: usize = 32;

const MIN_OVERSAMPLE: usize = 16;

/// Below this grid size direct Horner evaluation beats planning an FFT.
const FFT_GRID_THRESHOLD: usize = 32;

/// A polynomial `c_0 + c_1 x + ... + c_d x^d` with complex coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComplexPolynomial {
    coeffs: Vec<Complex64>,
}

impl ComplexPolynomial {
    /// Builds a polynomial, trimming trailing coefficients below
    /// [`TRIM_THRESHOLD`]. An empty slice yields the zero polynomial.
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        let mut p = Self::untrimmed(coeffs);
        while p.coeffs.len() > 1 && p.coeffs.last().unwrap().norm() < TRIM_THRESHOLD {
            p.coeffs.pop();
        }
        p
    }

    /// Keeps every coefficient, including tiny leading ones. Only exact zeros
    /// are dropped from the top.
    pub fn untrimmed(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == Complex64::new(0.0, 0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Complex64::new(0.0, 0.0));
        }
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Self::untrimmed(vec![])
    }

    pub fn one() -> Self {
        Self::untrimmed(vec![Complex64::new(1.0, 0.0)])
    }

    /// The monomial `x^k`.
    pub fn monomial(k: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); k + 1];
        coeffs[k] = Complex64::new(1.0, 0.0);
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm() == 0.0)
    }

    pub fn leading(&self) -> Complex64 {
        *self.coeffs.last().unwrap()
    }

    /// Coefficient of `x^k`, zero beyond the stored degree.
    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    /// Coefficients zero-padded (never truncated) to length `d + 1`.
    pub fn padded(&self, d: usize) -> Vec<Complex64> {
        let mut c = self.coeffs.clone();
        if c.len() < d + 1 {
            c.resize(d + 1, Complex64::new(0.0, 0.0));
        }
        c
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::untrimmed(self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// Horner evaluation.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Largest coefficient-wise distance to `other`, padding the shorter one.
    pub fn max_coeff_distance(&self, other: &Self) -> f64 {
        let d = self.degree().max(other.degree());
        (0..=d)
            .map(|k| (self.coeff(k) - other.coeff(k)).norm())
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for ComplexPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| format!("({:.6}{:+.6}i)x^{k}", c.re, c.im))
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

impl<'a> Mul<&'a ComplexPolynomial> for &'a ComplexPolynomial {
    type Output = ComplexPolynomial;

    fn mul(self, rhs: &ComplexPolynomial) -> ComplexPolynomial {
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        ComplexPolynomial::untrimmed(out)
    }
}

impl<'a> Add<&'a ComplexPolynomial> for &'a ComplexPolynomial {
    type Output = ComplexPolynomial;

    fn add(self, rhs: &ComplexPolynomial) -> ComplexPolynomial {
        let d = self.degree().max(rhs.degree());
        ComplexPolynomial::untrimmed((0..=d).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl<'a> Sub<&'a ComplexPolynomial> for &'a ComplexPolynomial {
    type Output = ComplexPolynomial;

    fn sub(self, rhs: &ComplexPolynomial) -> ComplexPolynomial {
        let d = self.degree().max(rhs.degree());
        ComplexPolynomial::untrimmed((0..=d).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Neg for &ComplexPolynomial {
    type Output = ComplexPolynomial;

    fn neg(self) -> ComplexPolynomial {
        ComplexPolynomial::untrimmed(self.coeffs.iter().map(|&c| -c).collect())
    }
}

/// Gap hypothesis: the target eigenphase `theta` is the only eigenphase of
/// the unitary within the open arc of half-width `delta` around it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapSpec {
    pub delta: f64,
    #[serde(default)]
    pub theta: f64,
    pub epsilon: f64,
}

impl GapSpec {
    pub fn new(delta: f64, epsilon: f64, theta: f64) -> Result<Self> {
        let gap = Self { delta, theta, epsilon };
        gap.validate()?;
        Ok(gap)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta <= PI) {
            return Err(Error::Domain(format!("delta must lie in (0, pi], got {}", self.delta)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Domain(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        if !self.theta.is_finite() {
            return Err(Error::Domain(format!("theta must be finite, got {}", self.theta)));
        }
        Ok(())
    }
}

/// Which formula fixes the averaging length `t`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TFormula {
    /// `t = ceil(2e / |e^{i delta} - 1|)`, which guarantees `|Y| <= e^{-n}`
    /// outside the gap.
    #[default]
    Corrected,
    /// `t = ceil(e / (2 |e^{i delta} - 1|))`. Too small by a factor of four;
    /// kept for the discrepancy experiment.
    Paper,
}

impl TFormula {
    pub fn t(self, delta: f64) -> usize {
        let chord = chord_length(delta);
        let t = match self {
            TFormula::Corrected => (2.0 * E / chord).ceil(),
            TFormula::Paper => (E / (2.0 * chord)).ceil(),
        };
        (t as usize).max(1)
    }
}

/// `|e^{i delta} - 1| = 2 sin(delta / 2)` for `delta` in `[0, pi]`.
pub fn chord_length(delta: f64) -> f64 {
    2.0 * (delta / 2.0).sin()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictedCounts {
    pub controlled_u_per_branch: usize,
    pub total_controlled: usize,
    pub rotations: usize,
}

/// Resolved parameters for one reflection: the gap, `(t, n)`, the degree
/// `(t - 1) n` of the polynomial and the gate counts that follow from it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReflectionPlan {
    #[serde(flatten)]
    pub gap: GapSpec,
    pub t: usize,
    pub n: usize,
    pub degree: usize,
    pub counts: PredictedCounts,
    pub t_formula: TFormula,
}

impl ReflectionPlan {
    pub fn from_parts(gap: GapSpec, t: usize, n: usize, t_formula: TFormula) -> Self {
        let degree = (t - 1) * n;
        Self {
            gap,
            t,
            n,
            degree,
            counts: PredictedCounts {
                controlled_u_per_branch: degree,
                total_controlled: 2 * degree,
                rotations: 2 * (degree + 1),
            },
            t_formula,
        }
    }

    /// The polynomial this plan asks for.
    pub fn upsilon(&self) -> ComplexPolynomial {
        build_upsilon(self.t, self.n)
    }
}

/// `n = ceil(ln(1/epsilon))`.
pub fn power_for_epsilon(epsilon: f64) -> usize {
    ((1.0 / epsilon).ln().ceil() as usize).max(1)
}

pub fn select_parameters(gap: GapSpec) -> Result<ReflectionPlan> {
    select_parameters_with(gap, TFormula::Corrected)
}

pub fn select_parameters_with(gap: GapSpec, formula: TFormula) -> Result<ReflectionPlan> {
    gap.validate()?;
    let t = formula.t(gap.delta);
    let n = power_for_epsilon(gap.epsilon);
    Ok(ReflectionPlan::from_parts(gap, t, n, formula))
}

/// Coefficients of `((1 + x + ... + x^(t-1)) / t)^n` by repeated
/// convolution. All coefficients are nonnegative and sum to one.
///
/// # Panics
///
/// If `t == 0` or `n == 0`.
pub fn build_upsilon(t: usize, n: usize) -> ComplexPolynomial {
    assert!(t >= 1 && n >= 1, "build_upsilon needs t >= 1 and n >= 1");
    let base = vec![1.0 / t as f64; t];
    let mut acc = vec![1.0];
    for _ in 0..n {
        let mut next = vec![0.0; acc.len() + t - 1];
        for (i, &a) in acc.iter().enumerate() {
            for (j, &b) in base.iter().enumerate() {
                next[i + j] += a * b;
            }
        }
        acc = next;
    }
    ComplexPolynomial::untrimmed(acc.into_iter().map(|c| Complex64::new(c, 0.0)).collect())
}

pub fn eval_at(poly: &ComplexPolynomial, z: Complex64) -> Complex64 {
    poly.eval(z)
}

/// Values at `e^{2 pi i j / m}` for `j = 0..m`.
pub fn eval_on_circle_grid(poly: &ComplexPolynomial, m: usize) -> Result<Vec<Complex64>> {
    if m < poly.degree() + 1 {
        return Err(Error::InvalidInput(format!(
            "grid of {m} points cannot resolve a degree {} polynomial",
            poly.degree()
        )));
    }
    if m < FFT_GRID_THRESHOLD {
        return Ok((0..m).map(|j| poly.eval(root_of_unity(j, m))).collect());
    }
    let mut buf = poly.padded(m - 1);
    inverse_dft(&mut buf);
    Ok(buf)
}

/// `e^{2 pi i j / m}`.
pub fn root_of_unity(j: usize, m: usize) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * j as f64 / m as f64)
}

/// Unnormalized `x_j <- sum_k x_k e^{+2 pi i jk/m}`.
pub(crate) fn inverse_dft(buf: &mut [Complex64]) {
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(buf.len()).process(buf);
}

/// Unnormalized `x_k <- sum_j x_j e^{-2 pi i jk/m}`.
pub(crate) fn forward_dft(buf: &mut [Complex64]) {
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(buf.len()).process(buf);
}

/// Grid estimate of `max |p(e^{i lambda})|` over `|lambda|` in `[delta, pi]`.
///
/// Samples `oversample * (degree + 1)` equispaced points (oversample is
/// raised to 16 if smaller) plus the arc endpoints. This is an estimate of
/// the supremum, not a bound.
pub fn max_modulus_outside_gap(poly: &ComplexPolynomial, delta: f64, oversample: usize) -> f64 {
    let m = oversample.max(MIN_OVERSAMPLE) * (poly.degree() + 1);
    let values = eval_on_circle_grid(poly, m).expect("grid is oversampled");
    let mut best = values
        .iter()
        .enumerate()
        .filter(|(j, _)| {
            let lambda = 2.0 * PI * (*j as f64) / m as f64;
            let wrapped = if lambda > PI { 2.0 * PI - lambda } else { lambda };
            wrapped >= delta
        })
        .map(|(_, v)| v.norm())
        .fold(0.0, f64::max);
    for lambda in [delta, -delta, PI] {
        best = best.max(poly.eval(Complex64::from_polar(1.0, lambda)).norm());
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn parameters_at_half_pi() {
        let plan = select_parameters(GapSpec::new(PI / 2.0, 0.1, 0.0).unwrap()).unwrap();
        assert_eq!((plan.t, plan.n, plan.degree), (4, 3, 9));
        assert_eq!(plan.counts.total_controlled, 18);
        assert_eq!(plan.counts.rotations, 20);
        assert!(max_modulus_outside_gap(&plan.upsilon(), PI / 2.0, 32) <= 0.1);

        let plan = select_parameters(GapSpec::new(PI / 2.0, 0.5, 0.0).unwrap()).unwrap();
        assert_eq!(plan.n, 1);
    }

    #[test]
    fn parameters_near_pi() {
        // delta = pi itself is outside the open domain; the formula at pi gives 3.
        assert_eq!(TFormula::Corrected.t(PI), 3);
        let delta = PI - 1e-9;
        for eps in [0.5, 0.1, 1e-3] {
            let plan = select_parameters(GapSpec::new(delta, eps, 0.0).unwrap()).unwrap();
            assert_eq!(plan.t, 3);
            assert!(max_modulus_outside_gap(&plan.upsilon(), delta, 32) <= eps);
        }
    }

    #[test]
    fn rejects_out_of_domain() {
        assert!(matches!(GapSpec::new(0.0, 0.1, 0.0), Err(Error::Domain(_))));
        assert!(matches!(GapSpec::new(PI + 1e-9, 0.1, 0.0), Err(Error::Domain(_))));
        assert!(GapSpec::new(PI, 0.1, 0.0).is_ok());
        assert!(matches!(GapSpec::new(1.0, 1.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(GapSpec::new(1.0, 0.0, 0.0), Err(Error::Domain(_))));
        let bad = GapSpec { delta: -1.0, theta: 0.0, epsilon: 0.1 };
        assert!(select_parameters(bad).is_err());
    }

    #[test]
    fn literal_formula_is_smaller() {
        assert_eq!(TFormula::Paper.t(PI / 2.0), 1);
        assert_eq!(TFormula::Paper.t(PI / 8.0), 4);
        assert_eq!(TFormula::Corrected.t(PI / 8.0), 14);
    }

    #[test]
    fn upsilon_small_cases() {
        assert_eq!(build_upsilon(1, 5).coeffs(), &[c(1.0)]);
        assert_eq!(build_upsilon(2, 1).coeffs(), &[c(0.5), c(0.5)]);
        let u = build_upsilon(3, 2);
        let expected = [1.0, 2.0, 3.0, 2.0, 1.0];
        assert_eq!(u.degree(), 4);
        for (got, want) in u.coeffs().iter().zip(expected) {
            assert_abs_diff_eq!(got.re, want / 9.0, epsilon = 1e-16);
            assert_eq!(got.im, 0.0);
        }
    }

    #[test]
    fn horner_values() {
        let u = build_upsilon(7, 4);
        assert_abs_diff_eq!((eval_at(&u, c(1.0)) - 1.0).norm(), 0.0, epsilon = 1e-14);
        let half = ComplexPolynomial::from_real(&[0.5, 0.5]);
        assert_eq!(eval_at(&half, c(-1.0)), c(0.0));

        let lambda: f64 = 1.0;
        let z = Complex64::from_polar(1.0, lambda);
        let closed = ((Complex64::from_polar(1.0, 3.0 * lambda) - 1.0) / (z - 1.0) / 3.0).powi(2);
        assert_abs_diff_eq!((eval_at(&build_upsilon(3, 2), z) - closed).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn circle_grid_small() {
        let ones = eval_on_circle_grid(&ComplexPolynomial::one(), 4).unwrap();
        assert_eq!(ones, vec![c(1.0); 4]);

        let x = eval_on_circle_grid(&ComplexPolynomial::monomial(1), 4).unwrap();
        let want = [c(1.0), Complex64::i(), c(-1.0), -Complex64::i()];
        for (a, b) in x.iter().zip(want) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-15);
        }

        assert!(eval_on_circle_grid(&build_upsilon(3, 2), 4).is_err());
    }

    #[test]
    fn circle_grid_fft_matches_horner() {
        for (poly, m) in [(build_upsilon(2, 1), 8), (build_upsilon(5, 6), 64), (build_upsilon(9, 3), 1000)] {
            let grid = eval_on_circle_grid(&poly, m).unwrap();
            for (j, v) in grid.iter().enumerate() {
                let direct = poly.eval(root_of_unity(j, m));
                assert!((v - direct).norm() <= 1e-12 * direct.norm().max(1.0));
            }
        }
    }

    #[test]
    fn max_modulus_examples() {
        assert_eq!(max_modulus_outside_gap(&ComplexPolynomial::one(), PI / 2.0, 32), 1.0);
        // |(1 + e^{i l}) / 2| = |cos(l / 2)| vanishes at l = pi.
        let m = max_modulus_outside_gap(&build_upsilon(2, 1), PI, 32);
        assert!(m < 1e-15, "{m}");
        let m = max_modulus_outside_gap(&build_upsilon(2, 1), PI / 2.0, 32);
        assert_abs_diff_eq!(m, (PI / 4.0).cos(), epsilon = 1e-12);
    }

    #[test]
    fn trimming() {
        let p = ComplexPolynomial::from_real(&[1.0, 2.0, 1e-15, 0.0]);
        assert_eq!(p.degree(), 1);
        assert_eq!(ComplexPolynomial::from_real(&[]).degree(), 0);
        assert!(ComplexPolynomial::zero().is_zero());
    }

    proptest! {
        #[test]
        fn upsilon_is_a_probability_vector(t in 1usize..12, n in 1usize..10) {
            let u = build_upsilon(t, n);
            prop_assert_eq!(u.degree(), (t - 1) * n);
            let sum: f64 = u.coeffs().iter().map(|c| c.re).sum();
            prop_assert!((sum - 1.0).abs() <= 1e-14);
            prop_assert!(u.coeffs().iter().all(|c| c.re >= 0.0 && c.im == 0.0));
            let grid = eval_on_circle_grid(&u, 32 * (u.degree() + 1)).unwrap();
            prop_assert!(grid.iter().all(|v| v.norm() <= 1.0 + 1e-12));
        }

        #[test]
        fn geometric_sum_identity(t in 2usize..10, n in 1usize..8, frac in 0.02f64..0.98) {
            // stay away from the zeros of the geometric sum at multiples of 2 pi / t
            let cell = (frac * t as f64).floor();
            let lambda = 2.0 * PI / t as f64 * (cell + 0.1 + 0.8 * (frac * t as f64 - cell));
            let z = Complex64::from_polar(1.0, lambda);
            let lhs = eval_at(&build_upsilon(t, n), z).norm().powf(1.0 / n as f64);
            let rhs = ((Complex64::from_polar(1.0, lambda * t as f64) - 1.0) / (z - 1.0)).norm() / t as f64;
            prop_assert!((lhs - rhs).abs() <= 1e-10);
        }

        #[test]
        fn corrected_t_meets_epsilon(delta in 0.05f64..3.1, log_eps in -7.0f64..-0.05) {
            let eps = log_eps.exp();
            let plan = select_parameters(GapSpec::new(delta, eps, 0.0).unwrap()).unwrap();
            let m = max_modulus_outside_gap(&plan.upsilon(), delta, 32);
            prop_assert!(m <= (-(plan.n as f64)).exp() + 1e-15);
            prop_assert!(m <= eps);
        }
    }
}
