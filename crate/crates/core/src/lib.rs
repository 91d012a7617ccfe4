//! Joint BS association and transmit covariance optimization for uplink
//! MIMO heterogeneous networks, solved as an interference pricing game.

pub mod best_response;
pub mod config;
pub mod error;
pub mod experiment;
pub mod gadget;
pub mod game;
pub mod linalg;
pub mod network;
pub mod pricing;
pub mod rates;
pub mod utility;

pub use config::{GameMode, InitMode, ScenarioConfig, Tolerances, UserOrder, UserPlacement};
pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, HermitianMatrix};
pub use network::{ChannelSet, Network, Topology};
pub use rates::{NetworkState, RateReport};
pub use utility::{UtilityKind, UtilitySpec};
