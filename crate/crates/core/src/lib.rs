//! Reference governors with preview information for discrete-time LTI systems.
//!
//! The crate covers offline construction of maximal admissible sets (standard,
//! lifted preview, disturbance preview, polytopic robust, and stochastic-mixing
//! variants) and the online governors that use them: the scalar reference
//! governor, the preview governor with its explicit κ pass, the multi-horizon
//! fusion, disturbance-preview, multi-input and decoupled variants, and a
//! quadratic command governor baseline.

pub mod error;
pub mod governor;
pub mod mas;
pub mod numerics;
pub mod polytope;
pub mod scenario;
pub mod sysmod;

pub use error::{Error, Result};
