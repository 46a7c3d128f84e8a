//! Delay-aware network coding at a two-way relay, scheduled online.

pub mod baselines;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod lp;
pub mod netsim;
pub mod oracle;
pub mod primal_dual;
pub mod relay;
pub mod scalar;
pub mod scheduler;
pub mod verify;

pub use error::{Error, Result};
pub use relay::{ArrivalPattern, CostLedger, CostModel, Decision, RelayQueues, SchedulingPolicy};
