//! Lipschitz and Hölder maps from coded ultrametric spaces onto cubes.
//!
//! The chain is: a finite metric or self-similar space, its partition tree
//! and 1-monotone order, a maximal Frostman measure, the Hölder map
//! `g(x) = μ((−∞, x))` onto an interval, and a Hilbert curve onto `[0,1]^k`.

pub mod error;
pub mod frostman;
pub mod holder_map;
pub mod ifs;
pub mod metric_core;
pub mod monotone;
pub mod peano;
pub mod pipeline;
pub mod report;
pub mod sampling;
pub mod ultra_tree;

pub use error::{Error, Result};
