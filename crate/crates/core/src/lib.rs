//! Spinorial representation of submanifolds.
//!
//! The crate builds discrete geometric data on a parameter patch, solves the
//! generalized Killing spinor equation by transporting a spin element with a
//! flat modified connection, and reconstructs the immersion from the
//! Clifford-valued one-form `ξ(X) = <<X·φ, φ>>`.

pub mod clifford;
pub mod grid;
pub mod scene;
pub mod report;
pub mod patch;
pub mod killing;
pub mod align;
pub mod immersion;
pub mod spaceforms;
pub mod weierstrass;
pub mod mesh;
pub mod pipeline;
