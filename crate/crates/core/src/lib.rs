//! Material-point simulator for small-strain viscoplasticity with isotropic
//! and kinematic hardening and a distorting yield surface.
//!
//! The yield surface is a convex shape built from circular arcs and blended
//! with the Huber-Mises circle through a distance construction, which keeps it
//! convex at every level of distortion.

pub mod driver;
pub mod geometry;
pub mod material;
pub mod probe;
pub mod tensor;
pub mod verify;

pub use geometry::{ArcBoundary, Vec2};
pub use material::{FlowRule, MaterialParams, MaterialState};
pub use tensor::SymTensor2;
