//! Norms, the energy monitor, and numerical experiments.

pub mod energy;
pub mod experiments;
pub mod inequality;
pub mod mms;
pub mod norms;

pub use energy::{energy_report, EnergyReport, RunningSums};
pub use norms::{sobolev_norm, SobolevNorm};
