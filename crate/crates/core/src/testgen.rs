//! Seeded gapped unitaries for tests and sweeps.
//!
//! The generator is PCG32 (`rand_pcg::Pcg32`) seeded with `seed_from_u64`.
//! Uniform reals are `(next_u64 >> 11) * 2^-53`, normals come from the
//! Box-Muller transform. Draw order: first the non-target phases, each as a
//! sign draw then a magnitude draw, then the Gaussian matrix in column-major
//! order with the real part before the imaginary part.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_core::{Rng, SeedableRng};
use rand_pcg::Pcg32;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::DenseOperator;

/// Non-target phases keep at least `(1 + GAP_MARGIN) * delta` from the target.
pub const GAP_MARGIN: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSpec {
    pub dim: usize,
    pub delta: f64,
    #[serde(default)]
    pub theta: f64,
    pub target_multiplicity: usize,
    pub seed: u64,
}

impl SpectrumSpec {
    pub fn validate(&self) -> Result<()> {
        if self.target_multiplicity == 0 {
            return Err(Error::Domain("target multiplicity must be at least 1".into()));
        }
        if self.target_multiplicity > self.dim {
            return Err(Error::Domain(format!(
                "target multiplicity {} exceeds dimension {}",
                self.target_multiplicity, self.dim
            )));
        }
        if !(self.delta > 0.0 && self.delta <= PI) {
            return Err(Error::Domain(format!("delta must lie in (0, pi], got {}", self.delta)));
        }
        if !self.theta.is_finite() {
            return Err(Error::Domain(format!("theta must be finite, got {}", self.theta)));
        }
        Ok(())
    }
}

struct Sampler(Pcg32);

impl Sampler {
    fn new(seed: u64) -> Self {
        Self(Pcg32::seed_from_u64(seed))
    }

    /// Uniform on `[0, 1)`.
    fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn normal_pair(&mut self) -> (f64, f64) {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let a = 2.0 * PI * u2;
        (r * a.cos(), r * a.sin())
    }
}

/// Eigenphases: `target_multiplicity` copies of `theta`, the rest at offsets
/// drawn uniformly from `+-[min((1 + margin) delta, pi), pi]`.
fn draw_phases(spec: &SpectrumSpec, rng: &mut Sampler) -> Vec<f64> {
    let low = ((1.0 + GAP_MARGIN) * spec.delta).min(PI);
    let mut phases = vec![spec.theta; spec.target_multiplicity];
    for _ in spec.target_multiplicity..spec.dim {
        let sign = if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
        let offset = low + (PI - low) * rng.uniform();
        phases.push(spec.theta + sign * offset);
    }
    phases
}

/// `V diag(e^{i phases}) V^dagger` with `V` the Q factor of a seeded complex
/// Gaussian matrix.
pub fn random_gapped_unitary(spec: &SpectrumSpec) -> Result<DenseOperator> {
    spec.validate()?;
    let mut rng = Sampler::new(spec.seed);
    let phases = draw_phases(spec, &mut rng);
    let n = spec.dim;
    let mut entries = Vec::with_capacity(n * n);
    for _ in 0..n * n {
        let (re, im) = rng.normal_pair();
        entries.push(Complex64::new(re, im));
    }
    let q = DMatrix::from_vec(n, n, entries).qr().q();
    let mut scaled = q.clone();
    for (j, &lambda) in phases.iter().enumerate() {
        let e = Complex64::from_polar(1.0, lambda);
        for z in scaled.column_mut(j).iter_mut() {
            *z *= e;
        }
    }
    DenseOperator::new(scaled * q.adjoint())
}
