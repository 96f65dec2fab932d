//! Action-potential propagation through gap-junction-coupled excitable cells.
//!
//! The crate is organised bottom-up:
//!
//! * [`cubic`]: the cubic firing current `F(v) = v(v - v_T)(1 - v)`, its
//!   landmarks and the line/tangency geometry everything else is built on.
//!   The [`Excitable`] trait generalises that geometry to any scalar firing
//!   current with the same qualitative shape.
//! * [`region`]: single-cell analysis in the `(g, k)` plane (firing
//!   boundaries, excitability, active / semi-active / passive classes, the
//!   `v_inf` map and the downstream-attenuation correction).
//! * [`tree`]: the collapsed-tree map `phi`, its iteration and the region of
//!   persistent propagation.
//! * [`sim`]: fixed-step RK4 simulation of single cells and collapsed chains
//!   under upstream voltage-clamp protocols.
//! * [`ionic`]: conductance-based models, their gate-frozen reduction to a
//!   scalar current, and the two-condition parameter sweeps.
//!
//! Grid evaluation goes through [`par`], which uses rayon when the `parallel`
//! feature is enabled and a plain sequential loop otherwise. Results are
//! assembled by index, so output never depends on the worker count.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cubic;
pub mod error;
pub mod grid;
pub mod ionic;
pub mod par;
pub mod region;
pub mod roots;
pub mod sim;
pub mod tree;

pub use cubic::{CubicCell, Excitable, Landmarks, Line, Tangency};
pub use error::{Error, Result};
pub use grid::GridSpec;
pub use par::Execution;
pub use region::{Coupling, PropagationClass};
