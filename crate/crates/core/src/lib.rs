//! Topological subsystem purity of the Z_d quantum double under random local
//! circuits.

pub mod circuits;
pub mod error;
pub mod experiments;
pub mod group_purity;
pub mod lattice;
pub mod modular;
pub mod oracle;
pub mod partition;
pub mod region;
pub mod swap_dynamics;
pub mod topo;

pub use circuits::{
    classify, make_arch, make_bridge, make_cut, random_shallow_string, random_string, Condition, DomainShape,
    DomainString, SafetyVerdict,
};
pub use error::{Error, ErrorCategory, Result};
pub use group_purity::{
    purity_geometric, purity_group, ConstantOracle, GeneratorMatrix, GeometricOracle, GroupOracle, PurityOracle,
    PurityValue,
};
pub use lattice::{EdgeId, FaceId, Lattice, LatticeConfig, Orientation, VertexId};
pub use oracle::{
    build_ground_state, mc_string_expectation, mc_twirl_expectation, Estimate, StateVector, StatevectorOracle,
};
pub use partition::{standard_partition, Composite, Marker, Partition, PartitionGeometry};
pub use region::{boundary_stats, BoundaryStats, Region};
pub use swap_dynamics::{apply_string, apply_twirl, evaluate, SwapCombo, TwirlCoefficients};
pub use topo::{
    check_term_pairing, deformation_keeps_ratio, evolved_topological_purity, topological_purity, TopoReport,
};
