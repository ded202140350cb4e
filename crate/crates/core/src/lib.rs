//! Deterministic-equivalent secrecy analysis for IRS-aided MIMO wiretap channels.
//!
//! The crate computes ergodic secrecy rates and secrecy outage probabilities
//! from channel statistics alone, using large-system fixed points for the
//! mean mutual information and a joint central limit theorem for the
//! fluctuations. A Monte-Carlo engine in [`mcoracle`] samples the actual
//! channels and serves as ground truth, and [`optimize`] designs transmit
//! covariances and IRS phase shifts.
//!
//! Two channel families are supported:
//!
//! * LoS BS-IRS (`Lbi`): `H_k = R_k^{1/2} X_k T_{S,k}^{1/2} Θ H_{T,0}`.
//! * Double scattering (`DoubleScattering`):
//!   `H_k = R_k^{1/2} X_k T_{S,k}^{1/2} Θ R_S^{1/2} Y T^{1/2}`.
//!
//! All internal rates are in nats. Conversion to bit/s/Hz happens only at
//! the reporting boundary.

pub mod cli;
pub mod cltcov;
pub mod error;
pub mod fixedpoint;
pub mod linalg;
pub mod mcoracle;
pub mod optimize;
pub mod scenario;
pub mod secrecy;

#[cfg(test)]
mod test_support;

pub use error::{Error, Result};
