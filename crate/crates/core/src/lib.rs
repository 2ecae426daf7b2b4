//! Integration of second-order ODEs by quadratures from two non-equivalent
//! λ-symmetries, with numerical certificates for every identity involved.

pub mod catalog;
pub mod check;
pub mod commute;
pub mod expr;
pub mod jetfield;
pub mod numverify;
pub mod pipeline;
pub mod quad;
pub mod sample;
pub mod spec;
pub mod symcheck;
