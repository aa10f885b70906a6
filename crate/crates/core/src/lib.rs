//! Stability analysis of planar switched systems `q' = u X(q) + (1 - u) Y(q)`.
//!
//! The analysis is driven by the collinearity set `Z = {Q = 0}` where
//! `Q(p) = det(X(p), Y(p))`. The crate traces `Z` inside a finite window,
//! classifies its components as direct or inverse, checks the genericity
//! conditions G1/G2/G3, analyses the linearization at the origin, and
//! combines everything into a [`verdict::Verdict`]. A fixed-step simulator
//! provides trajectory evidence (adversarial switching, accessible-set
//! boundaries, component tracking).
//!
//! ```
//! use planar_switching::{builtins, pipeline};
//!
//! let cfg = builtins::config("radial_pair").unwrap();
//! let report = pipeline::run(&cfg).unwrap();
//! assert_eq!(report.verdict.unwrap().class, planar_switching::verdict::StabilityClass::Guas);
//! ```

// `!(a > b)` is used on purpose so NaN takes the rejecting branch
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod builtins;
pub mod collinearity;
pub mod config;
pub mod error;
pub mod expr;
pub mod field;
pub mod geometry;
pub mod graph;
pub mod jet;
pub mod linear;
pub mod pipeline;
pub mod simulate;
pub mod svg;
pub mod system;
pub mod verdict;

pub use error::{Error, Result};
pub use geometry::Vec2;
pub use system::{SwitchedSystem, Tolerances, Window};
