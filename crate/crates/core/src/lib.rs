//! Finite truncations of generalized Fermat covers of the Riemann sphere.

pub mod abelian;
pub mod curve;
pub mod ends;
pub mod hyperelliptic;
pub mod monodromy;
pub mod point;
pub mod tower;
pub mod verify;
