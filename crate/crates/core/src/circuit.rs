//! Gate-level circuits over one ancilla qubit and an opaque controlled-U.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gqsp::GqspAngleSequence;
use crate::poly::ReflectionPlan;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exponent {
    /// `U`
    Forward,
    /// `U^dagger`
    Inverse,
}

impl Exponent {
    pub fn inverse(self) -> Self {
        match self {
            Exponent::Forward => Exponent::Inverse,
            Exponent::Inverse => Exponent::Forward,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "WireGate", from = "WireGate")]
pub enum Gate {
    /// `R(theta, phi, lambda)` on the ancilla.
    AncillaRotation { theta: f64, phi: f64, lambda: f64 },
    /// `e^{-i phase_shift} U^{+-1}` on the system when the ancilla is `|1>`.
    ControlledOracle { exponent: Exponent, phase_shift: f64 },
}

impl Gate {
    pub fn adjoint(self) -> Self {
        match self {
            // R(theta, phi, lambda)^dagger = R(theta, -lambda, -phi)
            Gate::AncillaRotation { theta, phi, lambda } => Gate::AncillaRotation {
                theta,
                phi: -lambda,
                lambda: -phi,
            },
            Gate::ControlledOracle { exponent, phase_shift } => Gate::ControlledOracle {
                exponent: exponent.inverse(),
                phase_shift: -phase_shift,
            },
        }
    }
}

/// On-disk gate record: `{"g": "rot", ...}` or `{"g": "cu" | "cu_dag", "phase": ...}`.
#[derive(Serialize, Deserialize)]
#[serde(tag = "g", rename_all = "snake_case")]
enum WireGate {
    Rot { theta: f64, phi: f64, lambda: f64 },
    Cu { phase: f64 },
    CuDag { phase: f64 },
}

impl From<Gate> for WireGate {
    fn from(g: Gate) -> Self {
        match g {
            Gate::AncillaRotation { theta, phi, lambda } => WireGate::Rot { theta, phi, lambda },
            Gate::ControlledOracle { exponent: Exponent::Forward, phase_shift } => WireGate::Cu { phase: phase_shift },
            Gate::ControlledOracle { exponent: Exponent::Inverse, phase_shift } => WireGate::CuDag { phase: phase_shift },
        }
    }
}

impl From<WireGate> for Gate {
    fn from(g: WireGate) -> Self {
        match g {
            WireGate::Rot { theta, phi, lambda } => Gate::AncillaRotation { theta, phi, lambda },
            WireGate::Cu { phase } => Gate::ControlledOracle { exponent: Exponent::Forward, phase_shift: phase },
            WireGate::CuDag { phase } => Gate::ControlledOracle { exponent: Exponent::Inverse, phase_shift: phase },
        }
    }
}

/// An ordered gate list, first gate applied first.
///
/// Serializes as `{"degree": d, "gates": [...], "ancilla_count": 1}`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CircuitIR {
    #[serde(rename = "degree")]
    pub declared_degree: usize,
    pub gates: Vec<Gate>,
    #[serde(default = "one_ancilla")]
    pub ancilla_count: usize,
}

fn one_ancilla() -> usize {
    1
}

impl CircuitIR {
    pub fn empty() -> Self {
        Self { declared_degree: 0, gates: Vec::new(), ancilla_count: 1 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCounts {
    pub controlled_u: usize,
    pub controlled_u_dagger: usize,
    pub single_qubit_rotations: usize,
    pub total: usize,
}

/// One GQSP branch: the first rotation, then `d` times (controlled oracle,
/// rotation).
pub fn build_w(angles: &GqspAngleSequence, phase_shift: f64) -> CircuitIR {
    let d = angles.degree();
    let mut gates = Vec::with_capacity(2 * d + 1);
    gates.push(Gate::AncillaRotation {
        theta: angles.thetas[0],
        phi: angles.phis[0],
        lambda: angles.lambda,
    });
    for k in 1..=d {
        gates.push(Gate::ControlledOracle { exponent: Exponent::Forward, phase_shift });
        gates.push(Gate::AncillaRotation { theta: angles.thetas[k], phi: angles.phis[k], lambda: 0.0 });
    }
    CircuitIR { declared_degree: d, gates, ancilla_count: 1 }
}

pub fn adjoint(c: &CircuitIR) -> CircuitIR {
    CircuitIR {
        declared_degree: c.declared_degree,
        gates: c.gates.iter().rev().map(|g| g.adjoint()).collect(),
        ancilla_count: c.ancilla_count,
    }
}

/// `first` followed by `second`; realizes to `second * first`.
pub fn compose(first: &CircuitIR, second: &CircuitIR) -> CircuitIR {
    let mut gates = first.gates.clone();
    gates.extend_from_slice(&second.gates);
    CircuitIR {
        declared_degree: first.declared_degree.max(second.declared_degree),
        gates,
        ancilla_count: 1,
    }
}

/// `W_-^dagger W_+`, both branches built on `e^{-i theta} U`.
pub fn build_reflection(
    plan: &ReflectionPlan,
    branches: (&GqspAngleSequence, &GqspAngleSequence),
) -> Result<CircuitIR> {
    for branch in [branches.0, branches.1] {
        if branch.degree() != plan.degree {
            return Err(Error::DegreeMismatch { expected: plan.degree, found: branch.degree() });
        }
    }
    let theta = plan.gap.theta;
    let plus = build_w(branches.0, theta);
    let minus = build_w(branches.1, theta);
    Ok(compose(&plus, &adjoint(&minus)))
}

pub fn gate_counts(c: &CircuitIR) -> GateCounts {
    let mut counts = GateCounts::default();
    for g in &c.gates {
        match g {
            Gate::AncillaRotation { .. } => counts.single_qubit_rotations += 1,
            Gate::ControlledOracle { exponent: Exponent::Forward, .. } => counts.controlled_u += 1,
            Gate::ControlledOracle { exponent: Exponent::Inverse, .. } => counts.controlled_u_dagger += 1,
        }
    }
    counts.total = counts.controlled_u + counts.controlled_u_dagger + counts.single_qubit_rotations;
    counts
}
