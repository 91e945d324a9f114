//! Equivariant framed little-disk operads as executable geometry.
//!
//! Operad elements are tuples of affine dilation maps acting on products of
//! open balls. On top of the exact/float geometry kernel this crate builds:
//!
//! - membership validation for the ambient / star / separated levels,
//! - operadic composition over finite ordinals with symmetric and group
//!   actions ([`config`]),
//! - the divisibility theory: intersection correspondences, the geometric
//!   divisor test with quotient construction, and left cancellation
//!   ([`divisibility`]),
//! - separated-disk geometry: radius bounds, index partitions, and the
//!   triangle (bubble-transfer) decomposition ([`separated`]),
//! - trees in superposition for tensor elements, their evaluation into the
//!   product operad, criticality and additive-core normal forms ([`trees`],
//!   [`coreform`]),
//! - shrink flows with closed-form entry times ([`flows`]),
//! - a JSON scene format and SVG rendering ([`scene`], [`svg`]),
//! - seeded generators and the randomized verification harness ([`gen`],
//!   [`harness`]).

pub mod ball;
pub mod blocks;
pub mod config;
pub mod coreform;
pub mod dilation;
pub mod divisibility;
pub mod error;
pub mod flows;
pub mod gen;
pub mod group;
pub mod harness;
pub mod matrix;
pub mod params;
pub mod scalar;
pub mod scene;
pub mod separated;
pub mod svg;
pub mod trees;

pub use ball::{ball_relations, BallRelations, ProductBall};
pub use blocks::BlockStructure;
pub use config::{
    compose_standard, is_valid, membership_level, operad_compose, validate, Config,
    MembershipLevel, Perm, StructureMap, ValidationReport, Violation,
};
pub use dilation::DilationMap;
pub use divisibility::{divides, intersection_data, left_cancel, self_partition, Division, IntersectionData};
pub use error::{Error, Result};
pub use group::GroupRep;
pub use matrix::OrthoMatrix;
pub use params::Params;
pub use scalar::{NumericMode, Scalar};
pub use separated::{
    disk_bounds, is_separated, separation_partition, triangle_decomposition, DiskBounds,
    SeparationPartition, TriangleDecomposition,
};
pub use trees::{
    interchange_equal, interchange_expand, relabel_vertex, tree_evaluate, tree_validate,
    unary_iso, unary_iso_inverse, EdgeTarget, ExpansionSide, SuperTree, TreeFlags, TreeVertex,
};
pub use coreform::{
    common_refinement, core_normal_form, criticality, witness_of_core_form, CommonRefinement,
    CoreForm, CriticalWitness,
};
pub use flows::{
    core_entry_time, entry_time, flow_apply, in_target, shrunk_membership, spherical_rescale,
    BindingConstraint, EntryTimeReport, FlowKind,
};
pub use scene::{parse_scene, serialize_scene, Factor, NamedDomain, Scene};
pub use svg::render_svg;
pub use harness::{
    bisect_entry_time, brute_force_divides, five_disk_regression, run_suite, verify,
    CounterExample, SuiteReport, VerifyReport,
};
