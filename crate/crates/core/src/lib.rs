//! Vertex structure, inequality checks, two-qubit strategies and
//! guessing-probability bounds for Bell polytopes with relaxed measurement
//! independence and parameter independence.
//!
//! Tables use the flat `(x, y, a, b)` layout described in [`behavior`].

pub mod behavior;
pub mod error;
pub mod geometry;
pub mod io;
pub mod numeric;
pub mod quantum;
pub mod randomness;
pub mod reference;
pub mod selftest;
pub mod vertices;

pub use behavior::{
    condition, joint_from_conditional, marginals, signaling_deficit, Behavior, BehaviorKind, BellScenario,
    Marginals, RelaxationParams,
};
pub use error::{BellError, Result};
pub use numeric::{Num, Policy, Rational, Scalar};
pub use vertices::{
    input_vertices, marginal_vertex_pairs, marginal_vertices, mdpdl_vertices, pd_conditional_vertices, VertexSet,
};
