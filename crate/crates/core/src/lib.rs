//! Pattern-aware mapping of quantum circuits onto heterogeneous clusters of QPUs.
//!
//! The pipeline has three stages:
//!
//! 1. [`segmentation`] cuts the layered circuit wherever the set of most
//!    interaction-dense qubits shifts.
//! 2. [`placement`] clusters a decayed, segment-weighted interaction graph to
//!    get a capacity-feasible starting assignment.
//! 3. [`anneal`] refines each segment's qubit-to-QPU assignment by simulated
//!    annealing on the inter-QPU, intra-QPU and movement costs in [`cost`],
//!    chaining each segment's result into the next.
//!
//! [`hardware`] models the cluster and its EPR accounting; [`experiment`]
//! holds the drivers used by the `dqcmap` command-line tool.

pub mod anneal;
pub mod bench;
pub mod circuit;
pub mod cost;
pub mod error;
pub mod experiment;
pub mod hardware;
pub mod placement;
pub mod segmentation;
pub mod seed;

pub use anneal::{compile, CompileOptions, Plan};
pub use circuit::{layerize, parse_qasm, serialize_qasm, Circuit, LayeredCircuit};
pub use cost::{CostBreakdown, CostParams};
pub use error::{Error, Result};
pub use hardware::{gen_topology, load_cluster, ClusterTopology, TopologyKind};
pub use placement::Assignment;
