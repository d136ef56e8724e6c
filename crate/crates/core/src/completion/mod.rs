//! Complementary polynomials: given `Y` bounded by one on the unit circle,
//! find `F` of the same degree with `|Y|^2 + |F|^2 = 1` there.
//!
//! The target `|F|^2 = 1 - |Y|^2` is a nonnegative Laurent polynomial (the
//! "Gram" polynomial below). It is factorized by root selection, falling back
//! to a cepstral method when root clustering spoils the first attempt.

mod cepstrum;
pub mod roots;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{eval_on_circle_grid, inverse_dft, ComplexPolynomial};

/// Roots within this distance of each other on the unit circle are treated
/// as one multiple root.
pub const CIRCLE_CLUSTER_TOL: f64 = 1e-7;

/// Roots with `||r| - 1|` below this are candidates for on-circle clusters.
const CIRCLE_BAND: f64 = 1e-5;

/// Default acceptance level for `max | |F|^2 - G |` on the check grid.
pub const DEFAULT_TOL: f64 = 1e-10;

const HERMITIAN_TOL: f64 = 1e-13;
const NONNEGATIVE_TOL: f64 = 1e-9;

/// `G(z) = sum_{k=-d..d} g_k z^k` with `g_{-k} = conj(g_k)`, real on the
/// unit circle.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigPolynomial {
    /// `laurent[k + d] = g_k`
    laurent: Vec<Complex64>,
}

impl TrigPolynomial {
    /// From coefficients `g_{-d}..g_d` (odd length). The coefficients are
    /// symmetrized so that `g_{-k} = conj(g_k)` holds exactly.
    ///
    /// # Panics
    ///
    /// If the length is even.
    pub fn from_laurent(mut laurent: Vec<Complex64>) -> Self {
        assert!(laurent.len() % 2 == 1, "Laurent coefficients come in -d..=d");
        let n = laurent.len();
        for i in 0..n / 2 + 1 {
            let j = n - 1 - i;
            let avg = (laurent[i] + laurent[j].conj()) * 0.5;
            laurent[i] = avg;
            laurent[j] = avg.conj();
        }
        Self { laurent }
    }

    /// `|p(z)|^2` on the unit circle: `g_k = sum_j conj(c_j) c_{j+k}`.
    pub fn autocorrelation(p: &ComplexPolynomial) -> Self {
        let c = p.coeffs();
        let d = c.len() - 1;
        let mut laurent = vec![Complex64::new(0.0, 0.0); 2 * d + 1];
        for k in 0..=d {
            let g: Complex64 = (0..=d - k).map(|j| c[j].conj() * c[j + k]).sum();
            laurent[d + k] = g;
            laurent[d - k] = g.conj();
        }
        Self::from_laurent(laurent)
    }

    pub fn degree(&self) -> usize {
        self.laurent.len() / 2
    }

    /// `g_k`, zero outside `-d..=d`.
    pub fn coeff(&self, k: isize) -> Complex64 {
        let idx = k + self.degree() as isize;
        if idx < 0 {
            return Complex64::new(0.0, 0.0);
        }
        self.laurent.get(idx as usize).copied().unwrap_or_default()
    }

    pub fn laurent_coefficients(&self) -> &[Complex64] {
        &self.laurent
    }

    /// Coefficients of `z^d G(z)`, an ordinary polynomial of degree `2d`.
    pub fn shifted_coefficients(&self) -> Vec<Complex64> {
        self.laurent.clone()
    }

    pub fn max_coefficient(&self) -> f64 {
        self.laurent.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest deviation from Hermitian symmetry `g_{-k} = conj(g_k)`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.laurent.len();
        (0..n)
            .map(|i| (self.laurent[i] - self.laurent[n - 1 - i].conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let d = self.degree() as i32;
        self.laurent
            .iter()
            .enumerate()
            .map(|(i, &g)| g * z.powi(i as i32 - d))
            .sum()
    }

    /// `(G, dG/dl, d^2G/dl^2)` at `z = e^{i l}`, real parts only.
    pub fn eval_angle(&self, lambda: f64) -> (f64, f64, f64) {
        let d = self.degree() as isize;
        let mut out = (0.0, 0.0, 0.0);
        for (i, &g) in self.laurent.iter().enumerate() {
            let k = i as isize - d;
            let term = g * Complex64::from_polar(1.0, k as f64 * lambda);
            let kf = k as f64;
            out.0 += term.re;
            out.1 += (term * Complex64::new(0.0, kf)).re;
            out.2 -= kf * kf * term.re;
        }
        out
    }

    /// Real values at `e^{2 pi i j / m}`.
    ///
    /// # Panics
    ///
    /// If `m < 2d + 1`.
    pub fn eval_on_circle_grid(&self, m: usize) -> Vec<f64> {
        let d = self.degree();
        assert!(m > 2 * d, "grid of {m} points cannot resolve Laurent degree {d}");
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for (i, &g) in self.laurent.iter().enumerate() {
            let k = i as isize - d as isize;
            buf[k.rem_euclid(m as isize) as usize] += g;
        }
        inverse_dft(&mut buf);
        buf.into_iter().map(|v| v.re).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompletionMethod {
    RootFactorization,
    Cepstrum,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompletionResult {
    pub phi: ComplexPolynomial,
    /// `max | |F|^2 - G |` over `16 (2d + 1)` grid points.
    pub residual: f64,
    pub method: CompletionMethod,
    /// Set when root clustering on the circle could not be resolved into
    /// even multiplicities.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditioning_warning: Option<String>,
}

/// `G = 1 - |Y|^2` as a Laurent polynomial.
///
/// Fails if `G` dips below `-1e-9` on a grid of `16 (2d + 1)` points, which
/// means `|Y| > 1` somewhere on the circle.
pub fn gram_polynomial(upsilon: &ComplexPolynomial) -> Result<TrigPolynomial> {
    let auto = TrigPolynomial::autocorrelation(upsilon);
    let d = auto.degree();
    let mut laurent: Vec<Complex64> = auto.laurent.iter().map(|&g| -g).collect();
    laurent[d] += 1.0;
    let gram = TrigPolynomial::from_laurent(laurent);
    let min = gram
        .eval_on_circle_grid(check_grid(d))
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if min < -NONNEGATIVE_TOL {
        return Err(Error::InvalidInput(format!(
            "1 - |Y|^2 reaches {min:e} on the unit circle; |Y| exceeds one"
        )));
    }
    Ok(gram)
}

fn check_grid(d: usize) -> usize {
    16 * (2 * d + 1)
}

/// `max | |p|^2 - G |` on the check grid.
pub(crate) fn modulus_mismatch(gram: &TrigPolynomial, p: &ComplexPolynomial) -> f64 {
    let d = gram.degree().max(p.degree());
    let m = check_grid(d);
    let g = gram.eval_on_circle_grid(m);
    let v = eval_on_circle_grid(p, m).expect("check grid is large enough");
    g.iter()
        .zip(&v)
        .map(|(g, v)| (v.norm_sqr() - g).abs())
        .fold(0.0, f64::max)
}

/// Finds `F` with `|F|^2 = G` on the unit circle to within `tol`.
///
/// Root selection is tried first; if its residual exceeds `tol` the cepstral
/// method runs. The better of the two is reported in the error if neither
/// meets `tol`. The leading coefficient of the result is real and positive.
pub fn factorize(gram: &TrigPolynomial, tol: f64) -> Result<CompletionResult> {
    if gram.hermitian_defect() > HERMITIAN_TOL * gram.max_coefficient().max(1.0) {
        return Err(Error::InvalidInput("Gram polynomial is not Hermitian".into()));
    }
    let d = gram.degree();
    let zero = ComplexPolynomial::zero();
    let zero_residual = modulus_mismatch(gram, &zero);
    if zero_residual <= tol && gram.max_coefficient() <= tol {
        return Ok(CompletionResult {
            phi: zero,
            residual: zero_residual,
            method: CompletionMethod::RootFactorization,
            conditioning_warning: None,
        });
    }

    let (by_roots, warning) = factor_by_roots(gram);
    let by_roots = normalize_phase(by_roots);
    let root_residual = modulus_mismatch(gram, &by_roots);
    if root_residual <= tol && by_roots.degree() <= d {
        return Ok(CompletionResult {
            phi: by_roots,
            residual: root_residual,
            method: CompletionMethod::RootFactorization,
            conditioning_warning: warning,
        });
    }

    let mut best = root_residual;
    if let Some(phi) = cepstrum::factorize(gram, tol) {
        let phi = normalize_phase(phi);
        let residual = modulus_mismatch(gram, &phi);
        if residual <= tol {
            return Ok(CompletionResult {
                phi,
                residual,
                method: CompletionMethod::Cepstrum,
                conditioning_warning: warning,
            });
        }
        best = best.min(residual);
    }
    Err(Error::CompletionFailed { residual: best, tol })
}

/// Root selection: roots of `z^d G(z)` come in pairs `r, 1/conj(r)`; keep the
/// one inside the disc, and half of every cluster on the circle.
fn factor_by_roots(gram: &TrigPolynomial) -> (ComplexPolynomial, Option<String>) {
    let d = gram.degree();
    let shifted = gram.shifted_coefficients();
    let mut all = roots::polynomial_roots(&shifted);

    let mut inside = Vec::new();
    let mut on_circle = Vec::new();
    for r in all.drain(..) {
        let gap = r.norm() - 1.0;
        if gap.abs() <= CIRCLE_BAND {
            on_circle.push(r);
        } else if gap < 0.0 {
            inside.push(r);
        }
    }

    let mut warning = None;
    let mut selected = inside;
    // A multiple root splits by roughly eps^(1/multiplicity); widen the
    // linkage until every cluster has even size, or give up at the band width.
    let mut clusters = cluster_roots(&on_circle, CIRCLE_CLUSTER_TOL);
    let mut linkage = CIRCLE_CLUSTER_TOL;
    while clusters.iter().any(|c| c.len() % 2 == 1) && linkage < CIRCLE_BAND {
        linkage *= 10.0;
        clusters = cluster_roots(&on_circle, linkage);
    }
    for cluster in clusters {
        let centroid: Complex64 = cluster.iter().sum::<Complex64>() / cluster.len() as f64;
        let refined = refine_multiple_root(&shifted, centroid, cluster.len());
        let on_unit = refined / refined.norm();
        if cluster.len() % 2 == 1 {
            warning = Some(format!(
                "odd multiplicity {} for a root cluster on the unit circle at {on_unit}",
                cluster.len()
            ));
        }
        selected.extend(std::iter::repeat_n(on_unit, cluster.len().div_ceil(2)));
    }
    if selected.len() > d {
        warning.get_or_insert_with(|| format!("selected {} roots for degree {d}", selected.len()));
        selected.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
        selected.truncate(d);
    }

    let monic = selected.iter().fold(ComplexPolynomial::one(), |acc, &r| {
        &acc * &ComplexPolynomial::untrimmed(vec![-r, Complex64::new(1.0, 0.0)])
    });
    let m = check_grid(d.max(monic.degree()));
    let g = gram.eval_on_circle_grid(m);
    let v = eval_on_circle_grid(&monic, m).expect("check grid is large enough");
    let num: f64 = g.iter().sum();
    let den: f64 = v.iter().map(|x| x.norm_sqr()).sum();
    let scale = if den > 0.0 { (num / den).max(0.0).sqrt() } else { 0.0 };
    (monic.scale(Complex64::new(scale, 0.0)), warning)
}

/// A root of multiplicity `m` is a simple root of the `(m - 1)`-th
/// derivative; a few Newton steps there recover the digits that the split
/// cluster lost.
fn refine_multiple_root(coeffs: &[Complex64], start: Complex64, m: usize) -> Complex64 {
    let mut deriv = coeffs.to_vec();
    for _ in 1..m {
        deriv = deriv.iter().enumerate().skip(1).map(|(k, &c)| c * k as f64).collect();
    }
    if deriv.len() < 2 {
        return start;
    }
    let poly = ComplexPolynomial::untrimmed(deriv.clone());
    let slope = ComplexPolynomial::untrimmed(deriv.iter().enumerate().skip(1).map(|(k, &c)| c * k as f64).collect());
    let mut z = start;
    for _ in 0..8 {
        let step = poly.eval(z) / slope.eval(z);
        if !step.is_finite() || step.norm() > 1e-4 {
            return start;
        }
        z -= step;
        if step.norm() <= f64::EPSILON {
            break;
        }
    }
    z
}

/// Single-linkage clusters of points closer than `tol`.
fn cluster_roots(points: &[Complex64], tol: f64) -> Vec<Vec<Complex64>> {
    let mut label: Vec<usize> = (0..points.len()).collect();
    fn find(label: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while label[r] != r {
            r = label[r];
        }
        label[i] = r;
        r
    }
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if (points[i] - points[j]).norm() <= tol {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                label[a] = b;
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<Complex64>> = Default::default();
    for (i, &p) in points.iter().enumerate() {
        let root = find(&mut label, i);
        groups.entry(root).or_default().push(p);
    }
    groups.into_values().collect()
}

/// Rotates `p` so its leading coefficient is real and positive.
fn normalize_phase(p: ComplexPolynomial) -> ComplexPolynomial {
    let p = ComplexPolynomial::new(p.into_coeffs());
    let lead = p.leading();
    if lead.norm() == 0.0 {
        return p;
    }
    p.scale(lead.conj() / lead.norm())
}

/// `max | |Y|^2 + |F|^2 - 1 |` over `m` equispaced points of the unit circle.
///
/// `m` is raised to `2 max(deg) + 1` if smaller.
pub fn completion_residual(upsilon: &ComplexPolynomial, phi: &ComplexPolynomial, m: usize) -> f64 {
    let m = m.max(2 * upsilon.degree().max(phi.degree()) + 1);
    let a = eval_on_circle_grid(upsilon, m).expect("grid size checked");
    let b = eval_on_circle_grid(phi, m).expect("grid size checked");
    a.iter()
        .zip(&b)
        .map(|(a, b)| (a.norm_sqr() + b.norm_sqr() - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Gram polynomial plus factorization, with the residual measured against
/// `Y` directly.
pub fn complete(upsilon: &ComplexPolynomial, tol: f64) -> Result<CompletionResult> {
    let gram = gram_polynomial(upsilon)?;
    let mut result = factorize(&gram, tol)?;
    let d = upsilon.degree().max(result.phi.degree());
    result.residual = completion_residual(upsilon, &result.phi, check_grid(d));
    if result.residual > tol {
        return Err(Error::CompletionFailed { residual: result.residual, tol });
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{build_upsilon, select_parameters, GapSpec};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    /// Random polynomial scaled so that `max |p| = 1 / 1.1` on a fine grid.
    fn random_bounded(coeffs: Vec<(f64, f64)>) -> ComplexPolynomial {
        let p = ComplexPolynomial::untrimmed(coeffs.into_iter().map(|(a, b)| Complex64::new(a, b)).collect());
        let grid = eval_on_circle_grid(&p, 64 * (p.degree() + 1)).unwrap();
        let max = grid.iter().map(|v| v.norm()).fold(0.0, f64::max);
        p.scale(c(1.0 / (1.1 * max)))
    }

    #[test]
    fn gram_of_constant_one_is_zero() {
        let g = gram_polynomial(&ComplexPolynomial::one()).unwrap();
        assert_eq!(g.degree(), 0);
        assert_eq!(g.coeff(0), c(0.0));
        let r = factorize(&g, DEFAULT_TOL).unwrap();
        assert!(r.phi.is_zero());
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn gram_of_half_sum() {
        let y = ComplexPolynomial::from_real(&[0.5, 0.5]);
        let g = gram_polynomial(&y).unwrap();
        assert_eq!(g.coeff(0), c(0.5));
        assert_eq!(g.coeff(1), c(-0.25));
        assert_eq!(g.coeff(-1), c(-0.25));
        let lambda: f64 = 0.83;
        let (val, _, _) = g.eval_angle(lambda);
        assert!((val - (1.0 - lambda.cos()) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn gram_matches_grid_evaluation() {
        let y = build_upsilon(3, 2);
        let g = gram_polynomial(&y).unwrap().eval_on_circle_grid(64);
        let v = eval_on_circle_grid(&y, 64).unwrap();
        for (g, v) in g.iter().zip(v) {
            assert!((g - (1.0 - v.norm_sqr())).abs() < 1e-12);
        }
    }

    #[test]
    fn gram_rejects_unbounded_input() {
        let y = ComplexPolynomial::from_real(&[0.8, 0.8]);
        assert!(matches!(gram_polynomial(&y), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn factor_half_difference() {
        let y = ComplexPolynomial::from_real(&[0.5, 0.5]);
        let r = complete(&y, DEFAULT_TOL).unwrap();
        assert_eq!(r.method, CompletionMethod::RootFactorization);
        // [1/2, -1/2] up to a global phase; ours has a positive leading coefficient.
        assert!(r.phi.max_coeff_distance(&ComplexPolynomial::from_real(&[-0.5, 0.5])) < 1e-8);
        assert!(r.residual <= 1e-15);
    }

    #[test]
    fn both_backends_agree_on_a_plan_polynomial() {
        let plan = select_parameters(GapSpec::new(PI / 2.0, 1e-2, 0.0).unwrap()).unwrap();
        let y = plan.upsilon();
        let gram = gram_polynomial(&y).unwrap();
        let r = complete(&y, DEFAULT_TOL).unwrap();
        assert!(r.residual <= 1e-10);
        assert_eq!(r.phi.degree(), y.degree());
        let (by_roots, _) = factor_by_roots(&gram);
        let by_cep = cepstrum::factorize(&gram, DEFAULT_TOL).unwrap();
        let (a, b) = (normalize_phase(by_roots), normalize_phase(by_cep));
        assert!(a.max_coeff_distance(&b) < 1e-7, "{}", a.max_coeff_distance(&b));
        assert!(modulus_mismatch(&gram, &b) <= 1e-10);
    }

    #[test]
    fn residual_examples() {
        assert_eq!(completion_residual(&ComplexPolynomial::one(), &ComplexPolynomial::zero(), 64), 0.0);
        let y = ComplexPolynomial::from_real(&[0.5, 0.5]);
        let f = ComplexPolynomial::from_real(&[0.5, -0.5]);
        assert!(completion_residual(&y, &f, 64) <= 1e-15);
        // sin^2(l/2) peaks at l = pi, which is on the 64-point grid
        assert!((completion_residual(&y, &ComplexPolynomial::zero(), 64) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn plan_polynomials_complete_at_high_degree() {
        for (t, n) in [(8, 5), (14, 7), (28, 7), (40, 5)] {
            let y = build_upsilon(t, n);
            let r = complete(&y, DEFAULT_TOL).unwrap();
            assert!(r.residual <= DEFAULT_TOL, "t={t} n={n}: {}", r.residual);
            assert_eq!(r.phi.degree(), y.degree());
            assert!(r.phi.leading().re > 0.0 && r.phi.leading().im == 0.0);
        }
    }

    #[test]
    fn odd_circle_multiplicity_is_flagged_or_resolved() {
        // (1 - cos l)^2 / 4 has a fourfold zero at z = 1: |(z - 1)^2 / 2|^2.
        let p = ComplexPolynomial::from_real(&[0.5, -1.0, 0.5]);
        let gram = TrigPolynomial::autocorrelation(&p);
        let r = factorize(&gram, 1e-9).unwrap();
        assert!(modulus_mismatch(&gram, &r.phi) <= 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn reciprocal_root_pairing(coeffs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2..31)) {
            let y = random_bounded(coeffs);
            let gram = gram_polynomial(&y).unwrap();
            let r = factorize(&gram, DEFAULT_TOL).unwrap();
            let all = roots::polynomial_roots(&gram.shifted_coefficients());
            for root in roots::polynomial_roots(r.phi.coeffs()) {
                prop_assert!(root.norm() <= 1.0);
                let mirror = root.conj().inv();
                let dist = all.iter().map(|a| (a - mirror).norm()).fold(f64::INFINITY, f64::min);
                prop_assert!(dist <= 1e-8 * mirror.norm().max(1.0), "dist {}", dist);
            }
        }

        #[test]
        fn factorization_is_idempotent_in_modulus(coeffs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2..31)) {
            let y = random_bounded(coeffs);
            let phi = complete(&y, DEFAULT_TOL).unwrap().phi;
            let again = factorize(&TrigPolynomial::autocorrelation(&phi), DEFAULT_TOL).unwrap().phi;
            let m = 16 * (2 * phi.degree() + 1);
            let a = eval_on_circle_grid(&phi, m).unwrap();
            let b = eval_on_circle_grid(&again, m).unwrap();
            for (a, b) in a.iter().zip(&b) {
                prop_assert!((a.norm() - b.norm()).abs() <= 1e-9);
            }
        }

        #[test]
        fn global_phase_is_free(coeffs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2..20), alpha in 0.0f64..std::f64::consts::TAU) {
            let y = random_bounded(coeffs);
            let phi = complete(&y, DEFAULT_TOL).unwrap().phi;
            let rotated = phi.scale(Complex64::from_polar(1.0, alpha));
            prop_assert!(completion_residual(&y, &rotated, 256) <= 1e-10);
        }
    }
}
