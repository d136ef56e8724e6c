//! Ground truth from a dense eigendecomposition, and the final verdict.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::{gate_counts, GateCounts};
use crate::completion::CompletionMethod;
use crate::error::{Error, Result};
use crate::pipeline::Synthesis;
use crate::poly::{
    max_modulus_outside_gap, select_parameters_with, ComplexPolynomial, GapSpec, PredictedCounts,
    ReflectionPlan, TFormula, DEFAULT_OVERSAMPLE,
};
use crate::sim::{pue_block, realize, spectral_norm, Block, DenseOperator, UNITARY_TOL};

/// Eigenphases within this angular distance of the target belong to it.
pub const TARGET_TOL: f64 = 1e-9;
/// `V diag(e^{i lambda}) V^dagger` must reproduce the input this closely.
pub const RECONSTRUCTION_TOL: f64 = 1e-10;
/// Added to `4 epsilon` before comparing with the measured error.
pub const BOUND_SLACK: f64 = 1e-8;

/// Rotation mixing `U` and `U^dagger` into a Hermitian matrix.
const MIX_ANGLE: f64 = 0.577_215_664_901_532_9;
/// Eigenvalues of the mixed Hermitian matrix closer than this are resolved
/// together.
const CLUSTER_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct SpectralData {
    /// Ascending, in `(-pi, pi]`.
    pub eigenphases: Vec<f64>,
    /// Column `j` belongs to `eigenphases[j]`.
    pub eigenvectors: DMatrix<Complex64>,
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.eigenphases.len()
    }

    /// Number of eigenphases within [`TARGET_TOL`] of `theta`.
    pub fn target_multiplicity(&self, theta: f64) -> usize {
        self.eigenphases.iter().filter(|&&p| angular_distance(p, theta) <= TARGET_TOL).count()
    }

    pub fn reconstruct(&self) -> DenseOperator {
        let values: Vec<Complex64> = self.eigenphases.iter().map(|&p| Complex64::from_polar(1.0, p)).collect();
        self.with_values(&values)
    }

    fn with_values(&self, values: &[Complex64]) -> DenseOperator {
        let mut scaled = self.eigenvectors.clone();
        for (j, &v) in values.iter().enumerate() {
            for z in scaled.column_mut(j).iter_mut() {
                *z *= v;
            }
        }
        DenseOperator::new(scaled * self.eigenvectors.adjoint()).expect("square")
    }
}

/// Distance between two angles on the circle, in `[0, pi]`.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

fn wrap_phase(p: f64) -> f64 {
    let w = p.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

fn mixed_hermitian(m: &DMatrix<Complex64>, angle: f64, imaginary: bool) -> DMatrix<Complex64> {
    let rot = Complex64::from_polar(1.0, -angle);
    let a = m * rot;
    if imaginary {
        (&a - a.adjoint()) * Complex64::new(0.0, -0.5)
    } else {
        (&a + a.adjoint()) * Complex64::new(0.5, 0.0)
    }
}

/// Eigendecomposition of a unitary.
///
/// The Hermitian part of `e^{-i a} U` shares eigenvectors with `U`; clusters
/// of equal Hermitian eigenvalues are split by the anti-Hermitian part
/// restricted to the cluster.
pub fn decompose(u: &DenseOperator) -> Result<SpectralData> {
    let residual = (u.matrix().adjoint() * u.matrix() - DMatrix::identity(u.dim(), u.dim())).norm();
    if !(residual <= UNITARY_TOL) {
        return Err(Error::NonUnitary { residual });
    }
    let n = u.dim();
    let m = u.matrix();
    let eig = mixed_hermitian(m, MIX_ANGLE, false).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut columns: Vec<nalgebra::DVector<Complex64>> = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && eig.eigenvalues[order[end]] - eig.eigenvalues[order[end - 1]] <= CLUSTER_TOL {
            end += 1;
        }
        let block = DMatrix::from_columns(
            &order[start..end].iter().map(|&j| eig.eigenvectors.column(j).clone_owned()).collect::<Vec<_>>(),
        );
        if end - start == 1 {
            columns.push(block.column(0).clone_owned());
        } else {
            let restricted = block.adjoint() * m * &block;
            let inner = mixed_hermitian(&restricted, MIX_ANGLE, true).symmetric_eigen();
            let rotated = &block * inner.eigenvectors;
            columns.extend(rotated.column_iter().map(|c| c.clone_owned()));
        }
        start = end;
    }

    let mut pairs: Vec<(f64, nalgebra::DVector<Complex64>)> = columns
        .into_iter()
        .map(|v| {
            let rayleigh = v.dotc(&(m * &v));
            (wrap_phase(rayleigh.arg()), v)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let eigenphases = pairs.iter().map(|p| p.0).collect();
    let vectors: Vec<_> = pairs.into_iter().map(|p| p.1).collect();
    let eigenvectors = if n == 0 { DMatrix::zeros(0, 0) } else { DMatrix::from_columns(&vectors) };
    let s = SpectralData { eigenphases, eigenvectors };

    let err = spectral_norm(&(&s.reconstruct() - u));
    if !(err <= RECONSTRUCTION_TOL) {
        return Err(Error::InvalidInput(format!("eigendecomposition residual {err:e} exceeds {RECONSTRUCTION_TOL:e}")));
    }
    Ok(s)
}

/// Multiplicity of the target, after checking that no other eigenphase lies
/// inside the gap.
pub fn validate_gap(s: &SpectralData, gap: &GapSpec) -> Result<usize> {
    let mut multiplicity = 0;
    for &phase in &s.eigenphases {
        let d = angular_distance(phase, gap.theta);
        if d <= TARGET_TOL {
            multiplicity += 1;
        } else if d < gap.delta {
            return Err(Error::GapViolation { phase, theta: gap.theta, delta: gap.delta });
        }
    }
    if multiplicity == 0 {
        return Err(Error::TargetAbsent { theta: gap.theta });
    }
    Ok(multiplicity)
}

/// Orthogonal projector onto the eigenspace of `e^{i theta}`.
pub fn exact_projector(s: &SpectralData, theta: f64) -> Result<DenseOperator> {
    let values: Vec<Complex64> = s
        .eigenphases
        .iter()
        .map(|&p| Complex64::new(if angular_distance(p, theta) <= TARGET_TOL { 1.0 } else { 0.0 }, 0.0))
        .collect();
    if values.iter().all(|v| v.re == 0.0) {
        return Err(Error::TargetAbsent { theta });
    }
    Ok(s.with_values(&values))
}

/// `p(U)` through the eigenbasis.
pub fn apply_poly(s: &SpectralData, p: &ComplexPolynomial) -> DenseOperator {
    let values: Vec<Complex64> = s.eigenphases.iter().map(|&l| p.eval(Complex64::from_polar(1.0, l))).collect();
    s.with_values(&values)
}

/// How one choice of `t` fares on a gap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormulaOutcome {
    pub t_formula: TFormula,
    pub t: usize,
    pub n: usize,
    pub degree: usize,
    pub max_modulus_outside_gap: f64,
    pub meets_epsilon: bool,
}

/// Both choices of `t` side by side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyRecord {
    pub corrected: FormulaOutcome,
    pub paper: FormulaOutcome,
}

pub fn formula_outcome(gap: &GapSpec, formula: TFormula, oversample: usize) -> Result<FormulaOutcome> {
    let plan = select_parameters_with(*gap, formula)?;
    let max = max_modulus_outside_gap(&plan.upsilon(), gap.delta, oversample);
    Ok(FormulaOutcome {
        t_formula: formula,
        t: plan.t,
        n: plan.n,
        degree: plan.degree,
        max_modulus_outside_gap: max,
        meets_epsilon: max <= gap.epsilon,
    })
}

pub fn discrepancy_record(gap: &GapSpec, oversample: usize) -> Result<DiscrepancyRecord> {
    Ok(DiscrepancyRecord {
        corrected: formula_outcome(gap, TFormula::Corrected, oversample)?,
        paper: formula_outcome(gap, TFormula::Paper, oversample)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    /// `||<0| W_-^dagger W_+ |0> - (2 Pi - 1)||`
    pub measured_error: f64,
    /// `4 epsilon`
    pub bound: f64,
    pub bound_satisfied: bool,
    pub counts: GateCounts,
    pub predicted_counts: PredictedCounts,
    pub completion_residual: f64,
    pub completion_method: CompletionMethod,
    /// Composite circuit.
    pub unitarity_residual: f64,
    /// Worse of the two branches.
    pub branch_unitarity_residual: f64,
    /// Largest gap between a realized branch block and the eigenbasis value
    /// of the polynomial it should encode.
    pub oracle_block_residual: f64,
    /// `||Y(U) - Pi||`
    pub projector_error: f64,
    /// `||2 Y(U) Y(U)^dagger - 1 - (2 Pi - 1)||`
    pub oracle_reflection_error: f64,
    pub max_modulus_outside_gap: f64,
    pub dim: usize,
    pub target_multiplicity: usize,
    pub params: ReflectionPlan,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discrepancy: Option<DiscrepancyRecord>,
}

/// Realizes the synthesized circuits on `u` and compares with the exact
/// reflection `2 Pi - 1`.
pub fn verify_reflection(u: &DenseOperator, synthesis: &Synthesis) -> Result<VerificationReport> {
    let plan = &synthesis.plan;
    let gap = plan.gap;
    let s = decompose(u)?;
    let target_multiplicity = validate_gap(&s, &gap)?;
    let n = u.dim();
    let identity = DenseOperator::identity(n);

    let projector = exact_projector(&s, gap.theta)?;
    let two = DenseOperator::from_diagonal(&vec![Complex64::new(2.0, 0.0); n]);
    let reflection = &(&two * &projector) - &identity;

    let plus = realize(&synthesis.w_plus, u)?;
    let minus = realize(&synthesis.w_minus, u)?;
    let composite = realize(&synthesis.composite, u)?;

    let measured_error = spectral_norm(&(&pue_block(&composite, Block::TopLeft) - &reflection));

    let upsilon = apply_poly(&s, &synthesis.upsilon);
    let phi = apply_poly(&s, &synthesis.completion.phi);
    let neg_phi = apply_poly(&s, &-&synthesis.completion.phi);
    let oracle_block_residual = [
        spectral_norm(&(&pue_block(&plus, Block::TopLeft) - &upsilon)),
        spectral_norm(&(&pue_block(&plus, Block::BottomLeft) - &phi)),
        spectral_norm(&(&pue_block(&minus, Block::TopLeft) - &upsilon)),
        spectral_norm(&(&pue_block(&minus, Block::BottomLeft) - &neg_phi)),
    ]
    .into_iter()
    .fold(0.0, f64::max);

    let projector_error = spectral_norm(&(&upsilon - &projector));
    let oracle_reflection = &(&two * &(&upsilon * &upsilon.adjoint())) - &identity;
    let oracle_reflection_error = spectral_norm(&(&oracle_reflection - &reflection));

    let bound = 4.0 * gap.epsilon;
    Ok(VerificationReport {
        measured_error,
        bound,
        bound_satisfied: measured_error <= bound + BOUND_SLACK,
        counts: gate_counts(&synthesis.composite),
        predicted_counts: plan.counts,
        completion_residual: synthesis.completion.residual,
        completion_method: synthesis.completion.method,
        unitarity_residual: composite.unitarity_residual(),
        branch_unitarity_residual: plus.unitarity_residual().max(minus.unitarity_residual()),
        oracle_block_residual,
        projector_error,
        oracle_reflection_error,
        max_modulus_outside_gap: max_modulus_outside_gap(&synthesis.upsilon, gap.delta, DEFAULT_OVERSAMPLE),
        dim: n,
        target_multiplicity,
        params: *plan,
        discrepancy: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::synthesize;
    use crate::testgen::{random_gapped_unitary, SpectrumSpec};
    use proptest::prelude::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn diag_phases(phases: &[f64]) -> DenseOperator {
        DenseOperator::from_diagonal(&phases.iter().map(|&p| Complex64::from_polar(1.0, p)).collect::<Vec<_>>())
    }

    fn max_abs(a: &DenseOperator, b: &DenseOperator) -> f64 {
        (a.matrix() - b.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn identity_spectrum() {
        let s = decompose(&DenseOperator::identity(4)).unwrap();
        assert!(s.eigenphases.iter().all(|&p| p.abs() < 1e-15));
    }

    #[test]
    fn sign_flip_spectrum() {
        let s = decompose(&DenseOperator::from_diagonal(&[c(1.0), c(-1.0)])).unwrap();
        assert!(s.eigenphases[0].abs() < 1e-15);
        assert!((s.eigenphases[1] - PI).abs() < 1e-15);
    }

    #[test]
    fn cyclic_permutation() {
        let n = 6;
        let m = DMatrix::from_fn(n, n, |i, j| if i == (j + 1) % n { c(1.0) } else { c(0.0) });
        let s = decompose(&DenseOperator::new(m).unwrap()).unwrap();
        for (k, &p) in s.eigenphases.iter().enumerate() {
            let expected = wrap_phase(2.0 * PI * (k as f64 - 2.0) / n as f64);
            assert!(angular_distance(p, expected) < 1e-12, "{p} vs {expected}");
        }
    }

    #[test]
    fn reconstruction_of_random_unitary() {
        let spec = SpectrumSpec { dim: 16, delta: 0.3, theta: 0.0, target_multiplicity: 1, seed: 99 };
        let u = random_gapped_unitary(&spec).unwrap();
        let s = decompose(&u).unwrap();
        assert!(spectral_norm(&(&s.reconstruct() - &u)) <= 1e-10);
        assert!(s.eigenphases.windows(2).all(|w| w[0] <= w[1]));
        assert!(s.eigenphases.iter().all(|&p| p > -PI && p <= PI));
    }

    #[test]
    fn rejects_non_unitary() {
        let a = DenseOperator::from_diagonal(&[c(1.0), c(0.9)]);
        assert!(matches!(decompose(&a), Err(Error::NonUnitary { .. })));
    }

    #[test]
    fn gap_checks() {
        let gap = GapSpec::new(PI / 2.0, 0.1, 0.0).unwrap();
        let s = decompose(&DenseOperator::from_diagonal(&[c(1.0), c(-1.0)])).unwrap();
        assert_eq!(validate_gap(&s, &gap).unwrap(), 1);

        let s = decompose(&diag_phases(&[0.0, 0.0, PI / 4.0])).unwrap();
        match validate_gap(&s, &gap) {
            Err(Error::GapViolation { phase, .. }) => assert!((phase - PI / 4.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }

        let s = decompose(&diag_phases(&[2.0, -2.0])).unwrap();
        assert!(matches!(validate_gap(&s, &gap), Err(Error::TargetAbsent { .. })));
        assert!(matches!(exact_projector(&s, 0.0), Err(Error::TargetAbsent { .. })));
    }

    #[test]
    fn gap_wraps_around_pi() {
        let gap = GapSpec::new(0.5, 0.1, PI).unwrap();
        let s = decompose(&diag_phases(&[PI, -PI + 0.2])).unwrap();
        assert!(matches!(validate_gap(&s, &gap), Err(Error::GapViolation { .. })));
        let s = decompose(&diag_phases(&[PI, 0.0])).unwrap();
        assert_eq!(validate_gap(&s, &gap).unwrap(), 1);
    }

    #[test]
    fn projectors() {
        let s = decompose(&DenseOperator::identity(3)).unwrap();
        assert!(max_abs(&exact_projector(&s, 0.0).unwrap(), &DenseOperator::identity(3)) < 1e-15);

        let z = DenseOperator::from_diagonal(&[c(1.0), c(-1.0)]);
        let s = decompose(&z).unwrap();
        let p = exact_projector(&s, 0.0).unwrap();
        assert!(max_abs(&p, &DenseOperator::from_diagonal(&[c(1.0), c(0.0)])) < 1e-15);

        let spec = SpectrumSpec { dim: 16, delta: PI / 4.0, theta: 0.0, target_multiplicity: 3, seed: 42 };
        let s = decompose(&random_gapped_unitary(&spec).unwrap()).unwrap();
        let p = exact_projector(&s, 0.0).unwrap();
        assert!((p.matrix().trace() - c(3.0)).norm() < 1e-12);
        assert!(spectral_norm(&(&(&p * &p) - &p)) <= 1e-11);
        assert!(spectral_norm(&(&p.adjoint() - &p)) <= 1e-11);
    }

    #[test]
    fn polynomial_application() {
        let z = DenseOperator::from_diagonal(&[c(1.0), c(-1.0)]);
        let s = decompose(&z).unwrap();
        assert!(max_abs(&apply_poly(&s, &ComplexPolynomial::one()), &DenseOperator::identity(2)) < 1e-15);
        assert!(max_abs(&apply_poly(&s, &ComplexPolynomial::monomial(1)), &z) < 1e-15);
    }

    #[test]
    fn identity_verification() {
        for (delta, eps) in [(PI / 2.0, 0.1), (PI / 8.0, 1e-3)] {
            let syn = synthesize(GapSpec::new(delta, eps, 0.0).unwrap(), TFormula::Corrected).unwrap();
            let r = verify_reflection(&DenseOperator::identity(3), &syn).unwrap();
            assert!(r.measured_error <= 1e-10, "{}", r.measured_error);
            assert!(r.bound_satisfied);
        }
    }

    #[test]
    fn sign_flip_verification() {
        let syn = synthesize(GapSpec::new(PI, 0.1, 0.0).unwrap(), TFormula::Corrected).unwrap();
        let z = DenseOperator::from_diagonal(&[c(1.0), c(-1.0)]);
        let r = verify_reflection(&z, &syn).unwrap();
        assert!(r.measured_error <= 0.4);
        assert!(r.bound_satisfied);
    }

    #[test]
    fn gapped_verification() {
        let spec = SpectrumSpec { dim: 16, delta: PI / 4.0, theta: 0.0, target_multiplicity: 1, seed: 7 };
        let u = random_gapped_unitary(&spec).unwrap();
        let syn = synthesize(GapSpec::new(PI / 4.0, 1e-2, 0.0).unwrap(), TFormula::Corrected).unwrap();
        let r = verify_reflection(&u, &syn).unwrap();
        assert!(r.measured_error <= 0.04, "{}", r.measured_error);
        assert!(r.oracle_reflection_error <= 0.04);
        assert!((r.measured_error - r.oracle_reflection_error).abs() <= 1e-8);
        assert!(r.oracle_block_residual <= 1e-8, "{}", r.oracle_block_residual);
        assert!(r.projector_error <= 1e-2);
        assert!(r.branch_unitarity_residual <= 1e-11);
        assert!(r.unitarity_residual <= 1e-10);
    }

    #[test]
    fn literal_t_misses_the_bound() {
        let gap = GapSpec::new(PI / 2.0, 1e-3, 0.0).unwrap();
        let record = discrepancy_record(&gap, DEFAULT_OVERSAMPLE).unwrap();
        assert!(record.corrected.meets_epsilon);
        assert!(!record.paper.meets_epsilon);
        let syn = synthesize(gap, TFormula::Paper).unwrap();
        let spec = SpectrumSpec { dim: 4, delta: PI / 2.0, theta: 0.0, target_multiplicity: 1, seed: 1 };
        let r = verify_reflection(&random_gapped_unitary(&spec).unwrap(), &syn).unwrap();
        assert!(!r.bound_satisfied);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn polynomials_of_unitaries_are_normal(
            seed in any::<u64>(),
            coeffs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..8),
        ) {
            let spec = SpectrumSpec { dim: 8, delta: 0.5, theta: 0.0, target_multiplicity: 2, seed };
            let s = decompose(&random_gapped_unitary(&spec).unwrap()).unwrap();
            let p = ComplexPolynomial::new(coeffs.into_iter().map(|(a, b)| Complex64::new(a, b)).collect());
            let a = apply_poly(&s, &p);
            let comm = &(&a * &a.adjoint()) - &(&a.adjoint() * &a);
            prop_assert!(spectral_norm(&comm) <= 1e-10);
        }

        #[test]
        fn reflection_error_is_controlled_by_projector_error(
            seed in any::<u64>(),
            delta in 0.3f64..2.0,
            eps in 0.01f64..0.5,
        ) {
            let spec = SpectrumSpec { dim: 6, delta, theta: 0.0, target_multiplicity: 1, seed };
            let s = decompose(&random_gapped_unitary(&spec).unwrap()).unwrap();
            let plan = select_parameters_with(GapSpec::new(delta, eps, 0.0).unwrap(), TFormula::Corrected).unwrap();
            let y = apply_poly(&s, &plan.upsilon());
            let p = exact_projector(&s, 0.0).unwrap();
            let n = s.dim();
            let two = DenseOperator::from_diagonal(&vec![c(2.0); n]);
            let id = DenseOperator::identity(n);
            let lhs = spectral_norm(&(&(&(&two * &(&y * &y.adjoint())) - &id) - &(&(&two * &p) - &id)));
            let rhs = 4.0 * spectral_norm(&(&y - &p));
            prop_assert!(lhs <= rhs + 1e-12);
            prop_assert!(spectral_norm(&(&y - &p)) <= eps);
        }
    }
}
