//! Safe-set invariance simulator and certificate library for control-affine
//! systems `ẋ = f(x,t) + B·u + G·h(x,κ(t))` whose endogenous effect grows
//! with a capability schedule κ.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificate;
pub mod channels;
pub mod cli;
pub mod document;
pub mod error;
pub mod fixtures;
pub mod intrinsic;
pub mod pipeline;
pub mod policies;
pub mod report;
pub mod safe_set;
pub mod scenario;
pub mod seed;
pub mod simulator;
pub mod state_model;
pub mod supercritical;

pub use certificate::{Certificate, CheckId, Verdict};
pub use error::{Error, Result};
pub use policies::Policy;
pub use scenario::Scenario;
pub use simulator::{simulate, Trajectory};
