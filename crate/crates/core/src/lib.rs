//! Design and simulation toolkit for a single-photon phase gate driven by
//! quantum Zeno blockade in a χ⁽²⁾ whispering-gallery microdisk.

pub mod dynamics;
pub mod error;
pub mod pulse;
pub mod qpm;
pub mod scenario;
pub mod schmidt;
pub mod wgm;

pub use error::{Error, Result};
