//! Numerical companion to a Galilean-particle model on `ℝ³ × SO(3)`:
//! helical trajectories, the degenerate canonical formalism in Euler angles,
//! its phase-space flow and wave equation, the SO(3) projection of the
//! angular sector and free Maxwell fields in a periodic box.

pub mod canonical;
pub mod constants;
pub mod error;
pub mod galilean;
pub mod integrate;
pub mod maxwell;
pub mod phase_flow;
pub mod so3;

pub use constants::Constants;
pub use error::{Error, Result};
pub use galilean::Vec3;
