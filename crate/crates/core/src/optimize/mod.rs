//! Transmit-covariance and IRS-phase optimizers.
//!
//! Every line search uses Armijo backtracking with `c = 0.3`, initial step 1
//! and shrink factor 0.5; a step below `1e-12` leaves the iterate unchanged.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

pub mod ao;
pub mod phase;
pub mod projection;
pub mod sca;
pub mod sop;

pub use ao::{algorithm2_ao, AoOptions, AoState};
pub use phase::{esr_objective, esr_phase_gradient};
pub use projection::{feasibility_violation, project_capped_simplex, psd_trace_project};
pub use sca::{algorithm1, sca_gradients, solve_inner_p6, Algorithm1Result, InnerOptions, P6Problem, ScaGradients};
pub use sop::{optimize_sop, sop_objective, sop_phase_gradient, SopGradient, SopOptions, SopRun};

pub const ARMIJO_C: f64 = 0.3;
pub const INITIAL_STEP: f64 = 1.0;
pub const SHRINK: f64 = 0.5;
pub const STEP_FLOOR: f64 = 1e-12;
/// Cap on the warm-started phase step (each search restarts at twice the last accepted step).
pub const MAX_PHASE_STEP: f64 = 1e4;

/// One optimizer iteration as written to the trace CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    pub objective_nats: f64,
    pub step_size: f64,
    pub grad_norm: f64,
    pub feasibility_violation: f64,
}

pub const TRACE_HEADER: &str = "iter,objective_nats,step_size,grad_norm,feasibility_violation";

pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:e},{:e},{:e},{:e}",
            r.iter, r.objective_nats, r.step_size, r.grad_norm, r.feasibility_violation
        );
    }
    out
}

pub fn write_trace_csv(path: &Path, rows: &[TraceRow]) -> Result<()> {
    std::fs::write(path, trace_csv(rows))?;
    Ok(())
}

/// Relative change used by every stopping rule.
pub(crate) fn rel_change(new: f64, old: f64) -> f64 {
    (new - old).abs() / old.abs().max(new.abs()).max(1e-300)
}
