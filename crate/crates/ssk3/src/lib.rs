//! Exact lattice machinery for classifying rational double points and
//! extremal (quasi-)elliptic fibrations on supersingular K3 surfaces.

pub mod ade;
pub mod cache;
pub mod discform;
pub mod elliptic;
pub mod error;
pub mod exactlin;
pub mod rdp;
pub mod search;
pub mod symmetry;
pub mod tables;

pub use error::{Error, Result};
