//! Certification toolkit for Schmidt-rank constraints: purity-sum bounds for
//! mutually unbiased bases, PPT mixtures of the symmetric projector with
//! antisymmetric states, and separability of left-PT-invariant states with
//! operator Schmidt rank 3. Every top-level construction returns an explicit,
//! re-checkable certificate.

pub mod cert;
pub mod error;
pub mod json;
pub mod linalg;
pub mod mub;
pub mod osr3;
pub mod ppt;
pub mod random;
pub mod schmidt;
pub mod tensor;

pub use error::{Error, Result};
