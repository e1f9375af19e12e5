//! Observed networks and the sufficient statistics the models need.

mod graph;
pub mod io;
mod stats;

pub use graph::Graph;
pub use io::{emit_edge_list, emit_mask, parse_edge_list, LabelMap};
pub use stats::{BlockStats, Counts, EditEffect, NodeStats, PartitionStats};
