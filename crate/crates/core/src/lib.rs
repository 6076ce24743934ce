//! Online stochastic bin packing with integer item sizes.
//!
//! Items with sizes drawn from a known discrete distribution arrive one at a
//! time and must be placed irrevocably. The crate provides primal-dual
//! placement rules ([`policies`]), the waste linear program that classifies a
//! distribution and gives the optimal waste rate ([`wastelp`]), stream and
//! timed simulators ([`engine`]), exact offline optima for small instances
//! ([`oracle`]) and a command-line front end ([`cli`]).

pub mod cli;
pub mod engine;
pub mod error;
pub mod model;
pub mod oracle;
pub mod policies;
pub mod wastelp;

pub use error::{Error, Result};
pub use model::{
    Bin, BinId, ItemClass, ItemId, LevelProfile, PackingInstance, SystemState, WasteReport,
    Workload,
};
pub use policies::{EpsilonRule, EpsilonSchedule, Placement, PolicyKind};
