//! Plan to circuits: polynomial, completion, angles and the three circuits.

use serde::Serialize;

use crate::circuit::{self, CircuitIR};
use crate::completion::{self, CompletionResult};
use crate::error::Result;
use crate::gqsp::{self, GqspAngleSequence};
use crate::poly::{select_parameters_with, ComplexPolynomial, GapSpec, ReflectionPlan, TFormula};

/// Everything derived from a plan without looking at the unitary.
#[derive(Clone, Debug, Serialize)]
pub struct Synthesis {
    pub plan: ReflectionPlan,
    pub upsilon: ComplexPolynomial,
    pub completion: CompletionResult,
    pub plus: GqspAngleSequence,
    pub minus: GqspAngleSequence,
    #[serde(skip)]
    pub w_plus: CircuitIR,
    #[serde(skip)]
    pub w_minus: CircuitIR,
    #[serde(skip)]
    pub composite: CircuitIR,
}

impl Synthesis {
    pub fn from_plan(plan: ReflectionPlan, tol: f64) -> Result<Self> {
        let upsilon = plan.upsilon();
        let completion = completion::complete(&upsilon, tol)?;
        let (plus, minus) = gqsp::branch_pair(&upsilon, &completion.phi)?;
        let theta = plan.gap.theta;
        let w_plus = circuit::build_w(&plus, theta);
        let w_minus = circuit::build_w(&minus, theta);
        let composite = circuit::build_reflection(&plan, (&plus, &minus))?;
        Ok(Self { plan, upsilon, completion, plus, minus, w_plus, w_minus, composite })
    }

    pub fn degree(&self) -> usize {
        self.plan.degree
    }
}

pub fn synthesize(gap: GapSpec, formula: TFormula) -> Result<Synthesis> {
    let plan = select_parameters_with(gap, formula)?;
    Synthesis::from_plan(plan, completion::DEFAULT_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::gate_counts;
    use std::f64::consts::PI;

    #[test]
    fn half_pi_pipeline() {
        let s = synthesize(GapSpec::new(PI / 2.0, 0.1, 0.3).unwrap(), TFormula::Corrected).unwrap();
        assert_eq!(s.degree(), 9);
        assert!(s.completion.residual <= 1e-10);
        let counts = gate_counts(&s.composite);
        assert_eq!((counts.controlled_u, counts.controlled_u_dagger, counts.single_qubit_rotations), (9, 9, 20));
        assert_eq!(gate_counts(&s.w_plus).controlled_u, 9);
    }

    #[test]
    fn trivial_plan_has_no_oracles() {
        let s = synthesize(GapSpec::new(PI / 2.0, 0.1, 0.0).unwrap(), TFormula::Paper).unwrap();
        assert_eq!(s.plan.t, 1);
        assert_eq!(s.degree(), 0);
        assert_eq!(gate_counts(&s.composite).total, 2);
    }
}
