//! Rotor-routing and Bernardi torsors on ribbon graphs.

pub mod bernardi;
pub mod decompose;
pub mod divisor;
pub mod enumerate;
pub mod fixtures;
pub mod io;
pub mod ribbon;
pub mod rotor;
pub mod snf;
pub mod torsor;
