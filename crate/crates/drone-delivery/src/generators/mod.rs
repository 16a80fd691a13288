//! Instance generators: hardness gadgets built from 3-dimensional matching
//! and even-odd partition inputs (with optional certificate schedules whose
//! claimed values are certified by the evaluator), plus seeded random
//! instances.

pub mod eop;
pub mod random;
pub mod three_dm;

use thiserror::Error;

use crate::instance::{Instance, ValidationError};
use crate::schedule::{check_feasible, evaluate, Schedule};
use crate::{CopyMode, Objective};

#[derive(Debug, Error)]
pub enum GadgetError {
    #[error("invalid input: {0}")]
    BadInput(String),
    #[error("generated instance failed validation: {0}")]
    Invalid(#[from] ValidationError),
}

/// A feasible single-copy schedule witnessing the claimed objective value of
/// a generated yes-instance.
#[derive(Debug, Clone)]
pub struct GadgetCertificate {
    pub schedule: Schedule,
    pub objective: Objective,
    pub value: f64,
}

/// A generated instance plus, when the generator knows a solution, the
/// certificate schedule for it.
#[derive(Debug)]
pub struct GeneratedInstance {
    pub instance: Instance,
    pub certificate: Option<GadgetCertificate>,
}

pub(crate) fn certify(inst: &Instance, schedule: Schedule, objective: Objective) -> GadgetCertificate {
    let report = check_feasible(inst, &schedule, CopyMode::Single);
    debug_assert!(report.feasible, "certificate must be feasible: {:?}", report.violations);
    let value = evaluate(inst, &schedule)
        .expect("certificate must evaluate")
        .objective(objective);
    GadgetCertificate { schedule, objective, value }
}
