//! Resource allocation in peer-to-peer overlays.
//!
//! Two problems are covered. The stationary regime asks whether upload
//! capacities can be split along overlay edges so that every peer receives
//! its demand; it reduces to a maximum flow. The data-capacitated problem
//! asks for `K` distribution trees rooted at a source under a joint per-node
//! children budget; it is NP-hard and comes with exact solvers for small
//! instances and heuristics for large ones.

pub mod bench;
pub mod cli;
pub mod dcda;
pub mod error;
pub mod flow;
pub mod heuristics;
pub mod overlay;
pub mod sra;

pub use dcda::{DcdaInstance, Forest};
pub use error::{Error, Result};
pub use overlay::{LatencyMatrix, NodeId, OverlayGraph};
