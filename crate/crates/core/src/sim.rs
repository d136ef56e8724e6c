//! Dense realization of circuits on `ancilla ⊗ system`.
//!
//! The ancilla is the leading tensor factor: basis index `a * dim + s` for
//! ancilla state `a` and system state `s`. Oracle gates fire on ancilla `|1>`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::circuit::{CircuitIR, Exponent, Gate};
use crate::error::{Error, Result};
use crate::gqsp::rotation_matrix;

/// Inputs to [`realize`] must satisfy `||U^dagger U - 1||_F <= UNITARY_TOL`.
pub const UNITARY_TOL: f64 = 1e-10;

/// Matrices at most this large get a full SVD in [`spectral_norm`].
pub const FULL_SVD_LIMIT: usize = 256;

const POWER_ITERATION_TOL: f64 = 1e-12;
const POWER_ITERATION_MAX: usize = 10_000;

/// A square complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator(DMatrix<Complex64>);

impl DenseOperator {
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidInput(format!("matrix is {}x{}, not square", m.nrows(), m.ncols())));
        }
        Ok(Self(m))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn from_diagonal(entries: &[Complex64]) -> Self {
        Self(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(entries)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    /// `||A^dagger A - 1||` in the spectral norm.
    pub fn unitarity_residual(&self) -> f64 {
        let gram = self.0.adjoint() * &self.0 - DMatrix::identity(self.dim(), self.dim());
        spectral_norm(&DenseOperator(gram))
    }

    fn frobenius_unitarity_residual(&self) -> f64 {
        (self.0.adjoint() * &self.0 - DMatrix::identity(self.dim(), self.dim())).norm()
    }
}

impl std::ops::Sub for &DenseOperator {
    type Output = DenseOperator;

    fn sub(self, rhs: &DenseOperator) -> DenseOperator {
        DenseOperator(&self.0 - &rhs.0)
    }
}

impl std::ops::Mul for &DenseOperator {
    type Output = DenseOperator;

    fn mul(self, rhs: &DenseOperator) -> DenseOperator {
        DenseOperator(&self.0 * &rhs.0)
    }
}

/// The `2 dim x 2 dim` unitary implemented by `c` with oracle `u`.
pub fn realize(c: &CircuitIR, u: &DenseOperator) -> Result<DenseOperator> {
    let residual = u.frobenius_unitarity_residual();
    if !(residual <= UNITARY_TOL) {
        return Err(Error::NonUnitary { residual });
    }
    let n = u.dim();
    let u_dag = u.0.adjoint();
    let mut m = DMatrix::<Complex64>::identity(2 * n, 2 * n);
    for gate in &c.gates {
        match *gate {
            Gate::AncillaRotation { theta, phi, lambda } => {
                let r = rotation_matrix(theta, phi, lambda);
                let top = m.rows(0, n).clone_owned();
                let bottom = m.rows(n, n).clone_owned();
                m.rows_mut(0, n).copy_from(&(&top * r[0][0] + &bottom * r[0][1]));
                m.rows_mut(n, n).copy_from(&(&top * r[1][0] + &bottom * r[1][1]));
            }
            Gate::ControlledOracle { exponent, phase_shift } => {
                let op = match exponent {
                    Exponent::Forward => &u.0,
                    Exponent::Inverse => &u_dag,
                };
                let phase = Complex64::from_polar(1.0, -phase_shift);
                let bottom = op * m.rows(n, n) * phase;
                m.rows_mut(n, n).copy_from(&bottom);
            }
        }
    }
    Ok(DenseOperator(m))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Block {
    /// `<0| W |0>`
    TopLeft,
    /// `<1| W |0>`
    BottomLeft,
}

/// The system block `<a| w |0>` of an ancilla-extended operator.
///
/// # Panics
///
/// If `w` has odd dimension.
pub fn pue_block(w: &DenseOperator, which: Block) -> DenseOperator {
    assert!(w.dim().is_multiple_of(2), "block extraction needs an even dimension");
    let n = w.dim() / 2;
    let row = match which {
        Block::TopLeft => 0,
        Block::BottomLeft => n,
    };
    DenseOperator(w.0.view((row, 0), (n, n)).clone_owned())
}

/// Largest singular value: full SVD up to [`FULL_SVD_LIMIT`], power iteration
/// on `A^dagger A` above it.
pub fn spectral_norm(a: &DenseOperator) -> f64 {
    if a.dim() == 0 {
        return 0.0;
    }
    if a.dim() <= FULL_SVD_LIMIT {
        return a.0.clone().singular_values().max();
    }
    power_iteration_norm(&a.0)
}

fn power_iteration_norm(a: &DMatrix<Complex64>) -> f64 {
    let n = a.ncols();
    let mut v = nalgebra::DVector::<Complex64>::from_fn(n, |i, _| {
        Complex64::new(1.0 + (i as f64 * 0.618).fract(), (i as f64 * 0.414).fract())
    });
    v /= Complex64::new(v.norm(), 0.0);
    let mut estimate = 0.0;
    for _ in 0..POWER_ITERATION_MAX {
        let w = a.adjoint() * (a * &v);
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / Complex64::new(norm, 0.0);
        if (norm - estimate).abs() <= POWER_ITERATION_TOL * norm {
            estimate = norm;
            break;
        }
        estimate = norm;
    }
    estimate.sqrt()
}
